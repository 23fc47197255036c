//! Weight checkpoints: one JSON header line, then the flat weights as
//! little-endian `f64`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Architecture, Predictor};
use super::tape::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub arch: Architecture,
    pub shapes: Vec<(usize, usize)>,
    pub seed: u64,
    pub mode: String,
}

pub fn write_checkpoint<W: Write>(predictor: &Predictor, mode: &str, mut out: W) -> Result<()> {
    let header = CheckpointHeader {
        arch: predictor.arch,
        shapes: predictor.params.shapes().to_vec(),
        seed: predictor.seed,
        mode: mode.to_string(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for v in predictor.params.flat() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<(Predictor, CheckpointHeader)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.shapes != header.arch.shapes() {
        return Err(Error::InvalidInput("checkpoint shapes do not match its architecture".into()));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::InvalidInput("checkpoint payload is not a whole number of f64".into()));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let params = Params::from_flat(&header.shapes, data)
        .ok_or_else(|| Error::InvalidInput("checkpoint payload length does not match shapes".into()))?;
    Ok((
        Predictor {
            arch: header.arch,
            params,
            seed: header.seed,
        },
        header,
    ))
}

pub fn save_checkpoint(predictor: &Predictor, mode: &str, path: &Path) -> Result<()> {
    write_checkpoint(predictor, mode, std::fs::File::create(path)?)
}

pub fn load_checkpoint(path: &Path) -> Result<(Predictor, CheckpointHeader)> {
    read_checkpoint(std::fs::File::open(path)?)
}
