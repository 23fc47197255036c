use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OPT-normalised average cost and empirical competitive ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg: f64,
    pub cr: f64,
}

/// `AVG = mean(alg/opt)`, `CR = max(alg/opt)`.
pub fn metrics(costs_alg: &[f64], costs_opt: &[f64]) -> Result<Metrics> {
    let ratios = ratios(costs_alg, costs_opt)?;
    if ratios.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one instance".into()));
    }
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let cr = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Metrics { avg, cr })
}

/// Per-instance `alg/opt`.
pub fn ratios(costs_alg: &[f64], costs_opt: &[f64]) -> Result<Vec<f64>> {
    if costs_alg.len() != costs_opt.len() {
        return Err(Error::DimensionMismatch {
            what: "cost vectors",
            index: 0,
            expected: costs_opt.len(),
            found: costs_alg.len(),
        });
    }
    costs_alg
        .iter()
        .zip(costs_opt)
        .enumerate()
        .map(|(index, (a, o))| {
            if *o > 0.0 {
                Ok(a / o)
            } else {
                Err(Error::DegenerateInstance { index, cost: *o })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_costs() {
        let m = metrics(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!((m.avg, m.cr), (1.0, 1.0));
    }

    #[test]
    fn exact_ratios() {
        let m = metrics(&[2.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.avg, m.cr), (2.0, 2.0));
        let m = metrics(&[1.2, 3.0], &[1.0, 1.5]).unwrap();
        assert!((m.avg - 1.6).abs() < 1e-15);
        assert!((m.cr - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_opt_is_degenerate() {
        assert!(matches!(
            metrics(&[1.0], &[0.0]),
            Err(Error::DegenerateInstance { index: 0, .. })
        ));
    }
}
