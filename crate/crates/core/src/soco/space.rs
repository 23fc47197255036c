use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box of feasible actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl ActionSpace {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "action space bounds",
                index: 0,
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidInput(format!(
                "action space lower bound exceeds upper bound at coordinate {i}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` on every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(dim, lo),
            DVector::from_element(dim, hi),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    /// Euclidean diameter `‖upper − lower‖₂`.
    pub fn diameter(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    /// Largest absolute coordinate value reachable inside the box.
    pub fn radius_inf(&self) -> f64 {
        self.lower
            .iter()
            .chain(self.upper.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn clip(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
        )
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| v.is_finite() && *v >= lo - tol && *v <= hi + tol)
    }

    /// Coordinates where `x` sits on a bound (within `tol`).
    pub fn active_mask(&self, x: &DVector<f64>, tol: f64) -> Vec<bool> {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(v, (lo, hi))| (v - lo).abs() <= tol || (hi - v).abs() <= tol)
            .collect()
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }
}
