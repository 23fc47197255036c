use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One (dataset, algorithm, λ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dataset: String,
    pub algorithm: String,
    pub lambda: Option<f64>,
    pub avg: f64,
    pub cr: f64,
    /// Share of RCL steps whose advice was modified.
    pub frac_projected: Option<f64>,
    /// `alg/opt` per evaluated instance.
    pub ratios: Vec<f64>,
    /// Dataset indices matching `ratios`.
    pub instances: Vec<usize>,
    pub failures: usize,
}

impl CellReport {
    pub(crate) fn new(dataset: &str, algorithm: String, lambda: Option<f64>) -> Self {
        Self {
            dataset: dataset.into(),
            algorithm,
            lambda,
            avg: f64::NAN,
            cr: f64::NAN,
            frac_projected: None,
            ratios: Vec::new(),
            instances: Vec::new(),
            failures: 0,
        }
    }

    pub(crate) fn finalize(&mut self) {
        if !self.ratios.is_empty() {
            self.avg = self.ratios.iter().sum::<f64>() / self.ratios.len() as f64;
            self.cr = self.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub dataset: String,
    pub algorithm: String,
    pub lambda: Option<f64>,
    pub instance: usize,
    pub message: String,
}

/// RCL cost relative to its expert and to its raw advice on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub dataset: String,
    pub algorithm: String,
    pub lambda: f64,
    pub instance: usize,
    pub vs_expert: f64,
    pub vs_ml: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<CellReport>,
    pub failures: Vec<FailureRecord>,
    pub pairs: Vec<PairRecord>,
}

fn fmt_lambda(l: Option<f64>) -> String {
    l.map(|v| v.to_string()).unwrap_or_default()
}

impl BenchReport {
    /// First cell with this algorithm label and λ.
    pub fn cell(&self, algorithm: &str, lambda: Option<f64>) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.lambda == lambda)
    }

    /// Summary table `algorithm, lambda, AVG, CR, frac_projected, dataset, instances, failures`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["algorithm", "lambda", "AVG", "CR", "frac_projected", "dataset", "instances", "failures"])?;
        for c in &self.cells {
            w.write_record([
                c.algorithm.clone(),
                fmt_lambda(c.lambda),
                c.avg.to_string(),
                c.cr.to_string(),
                c.frac_projected.map(|f| f.to_string()).unwrap_or_default(),
                c.dataset.clone(),
                c.ratios.len().to_string(),
                c.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Raw `(vs_expert, vs_ml)` pairs per RCL instance.
    pub fn write_pairs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "algorithm", "lambda", "instance", "vs_expert", "vs_ml"])?;
        for p in &self.pairs {
            w.write_record([
                p.dataset.clone(),
                p.algorithm.clone(),
                p.lambda.to_string(),
                p.instance.to_string(),
                p.vs_expert.to_string(),
                p.vs_ml.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_failures_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "algorithm", "lambda", "instance", "message"])?;
        for f in &self.failures {
            w.write_record([
                f.dataset.clone(),
                f.algorithm.clone(),
                fmt_lambda(f.lambda),
                f.instance.to_string(),
                f.message.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Nonempty bins `[1 + k·w, 1 + (k+1)·w)`; ratios below 1 land in the first bin.
pub fn histogram(ratios: &[f64], bin_width: f64) -> Vec<(f64, usize)> {
    let mut counts = std::collections::BTreeMap::<u64, usize>::new();
    for &r in ratios {
        let k = ((r - 1.0) / bin_width).floor().max(0.0) as u64;
        *counts.entry(k).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(k, n)| (1.0 + k as f64 * bin_width, n))
        .collect()
}

pub fn write_histogram_csv<W: Write>(ratios: &[f64], bin_width: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left", "count"])?;
    for (left, n) in histogram(ratios, bin_width) {
        w.write_record([left.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
