use std::path::Path;

use nalgebra::DVector;

use super::DemandWindow;
use crate::error::{Error, Result};

/// Hourly demand table: header row, one numeric column per battery group.
pub fn read_demand_csv(path: &Path) -> Result<Vec<DVector<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let width = rdr.headers()?.len();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        let vals = rec
            .iter()
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    message: format!("non-numeric cell {c:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(DVector::from_vec(vals));
    }
    Ok(rows)
}

/// Sliding windows over `rows`: each window's first row is the initial
/// action and the rest are the demands.
pub fn sliding_windows(rows: &[DVector<f64>], window: usize, stride: usize) -> Vec<DemandWindow> {
    if window < 2 || rows.len() < window {
        return Vec::new();
    }
    (0..=rows.len() - window)
        .step_by(stride.max(1))
        .map(|s| DemandWindow {
            initial: rows[s].clone(),
            demands: rows[s + 1..s + window].to_vec(),
        })
        .collect()
}

pub fn ingest_demand_csv(path: &Path, window: usize, stride: usize) -> Result<Vec<DemandWindow>> {
    Ok(sliding_windows(&read_demand_csv(path)?, window, stride))
}
