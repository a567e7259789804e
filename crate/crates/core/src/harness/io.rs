//! Batch CSV files.
//!
//! Layout: a `#` line with JSON metadata, a header of grid points t_i, then
//! one row of path values per path.
//!
//! ```text
//! # {"provenance":{"kind":"gpp"},"cutoff":-10.0,"bound_m":3.29,...}
//! 0,0.25,0.5,0.75,1
//! -0.41,-0.38,-0.36,-0.37,-0.40
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;
use crate::processes::{ProcessBatch, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub provenance: Provenance,
    pub cutoff: f64,
    pub bound_m: f64,
    pub kernel: String,
    pub beta: f64,
    pub mixing_rate: f64,
    pub seed: Option<u64>,
}

pub fn write_batch_csv<W: Write>(
    batch: &ProcessBatch,
    meta: &BatchMetadata,
    mut out: W,
) -> Result<()> {
    let line = serde_json::to_string(meta).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "# {line}")?;
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = batch.paths().first() {
        w.write_record(first.points().map(|t| t.to_string()))?;
    }
    for p in batch.paths() {
        w.write_record(p.values().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch_csv<R: Read>(input: R) -> Result<(ProcessBatch, BatchMetadata)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let json = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| domain("batch file must start with a '#' metadata line"))?;
    let meta: BatchMetadata =
        serde_json::from_str(json.trim()).map_err(|e| domain(format!("bad metadata: {e}")))?;
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let width = csv.headers()?.len();
    let mut paths = Vec::new();
    for record in csv.records() {
        let record = record?;
        if record.len() != width {
            return Err(Error::GridMismatch {
                expected: width,
                got: record.len(),
            });
        }
        let values = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| domain(format!("bad value '{s}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        paths.push(GridFunction::new(values)?);
    }
    let batch = ProcessBatch::new(paths, meta.cutoff, meta.bound_m, meta.provenance.clone())?;
    Ok((batch, meta))
}
