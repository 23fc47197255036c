//! Instance files: `<stem>.csv` with rows `t, y1..ym` and a sibling
//! `<stem>.json` holding `{dim, p, horizon, initial_actions, delay}`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::delay::DelaySchedule;
use super::instance::ProblemInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub dim: usize,
    pub p: usize,
    pub horizon: usize,
    pub initial_actions: Vec<Vec<f64>>,
    pub delay: DelaySchedule,
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_instance(
    csv_path: &Path,
    instance: &ProblemInstance,
    schedule: &DelaySchedule,
) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let m = instance.context_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for (i, y) in instance.contexts().iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(y.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    let meta = InstanceMeta {
        dim: instance.dim(),
        p: instance.memory(),
        horizon: instance.horizon(),
        initial_actions: instance
            .initial_actions()
            .iter()
            .map(|a| a.iter().copied().collect())
            .collect(),
        delay: schedule.clone(),
    };
    fs::write(meta_path(csv_path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_instance(csv_path: &Path) -> Result<(ProblemInstance, DelaySchedule)> {
    let meta: InstanceMeta = serde_json::from_str(&fs::read_to_string(meta_path(csv_path))?)?;
    let mut r = csv::Reader::from_path(csv_path)?;
    let mut contexts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let vals = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: csv_path.to_path_buf(),
                    row,
                    message: format!("{c:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        contexts.push(DVector::from_vec(vals));
    }
    if contexts.len() != meta.horizon {
        return Err(Error::Parse {
            path: csv_path.to_path_buf(),
            row: contexts.len() + 1,
            message: format!("expected {} context rows", meta.horizon),
        });
    }
    if meta.initial_actions.len() != meta.p {
        return Err(Error::InvalidInput(format!(
            "metadata lists {} initial actions for p={}",
            meta.initial_actions.len(),
            meta.p
        )));
    }
    let init = meta
        .initial_actions
        .into_iter()
        .map(DVector::from_vec)
        .collect();
    let instance = ProblemInstance::new(contexts, init)?;
    if instance.dim() != meta.dim {
        return Err(Error::DimensionMismatch {
            what: "instance metadata dim",
            index: 0,
            expected: meta.dim,
            found: instance.dim(),
        });
    }
    Ok((instance, meta.delay))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.csv");
        let inst = ProblemInstance::new(
            vec![DVector::from_vec(vec![0.1, 1.0 / 3.0]), DVector::from_vec(vec![2.0, -1e-17])],
            vec![DVector::from_vec(vec![0.0, 0.5])],
        )
        .unwrap();
        let sched = DelaySchedule::identical(2, 1);
        write_instance(&path, &inst, &sched).unwrap();
        let (back, s) = read_instance(&path).unwrap();
        assert_eq!(back, inst);
        assert_eq!(s, sched);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,y1,y2\n"));
    }
}
