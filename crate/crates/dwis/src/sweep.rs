//! Runs every cell of a spec on a worker pool and writes per-cell traces
//! plus a manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use anyhow::Context;
use dwis_core::{run, LevelScheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats;
use crate::spec::{Cell, ExperimentSpec};

pub const MANIFEST: &str = "manifest.csv";
pub const CELL_DIR: &str = "cells";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// One manifest line. `file` is relative to the output directory and empty
/// for failed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub cell: String,
    pub scheme: LevelScheme,
    pub mu: f64,
    pub delta0: f64,
    pub seed: u64,
    pub status: Status,
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub out_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(|r| r.status == Status::Failed)
    }
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell, out_dir: &Path) -> ManifestRow {
    let file = format!("{CELL_DIR}/{}.csv", cell.id());
    let config = spec.config(cell.scheme, cell.mu, cell.delta0);
    let scenario = spec.scenario();
    let result = panic::catch_unwind(AssertUnwindSafe(|| -> anyhow::Result<()> {
        let result = run(&scenario, &config, cell.seed)?;
        let path = out_dir.join(&file);
        let out = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        formats::write_run(BufWriter::new(out), &result, cell.delta0)?;
        Ok(())
    }));
    let error = match result {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(format!("{e:#}")),
        Err(payload) => Some(
            payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .map_or_else(|| "panic".to_string(), |m| format!("panic: {m}")),
        ),
    };
    ManifestRow {
        cell: cell.id(),
        scheme: cell.scheme,
        mu: cell.mu,
        delta0: cell.delta0,
        seed: cell.seed,
        status: if error.is_none() { Status::Ok } else { Status::Failed },
        file: if error.is_none() { file } else { String::new() },
        error: error.unwrap_or_default(),
    }
}

/// Runs all cells with `jobs` workers. Cell failures are recorded in the
/// manifest, not returned as errors; only IO trouble with the output
/// directory itself aborts the sweep.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: &Path, jobs: usize) -> anyhow::Result<SweepReport> {
    spec.validate()?;
    fs::create_dir_all(out_dir.join(CELL_DIR)).with_context(|| format!("creating {}", out_dir.display()))?;
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let rows: Vec<ManifestRow> = pool.install(|| cells.par_iter().map(|c| run_cell(spec, c, out_dir)).collect());
    write_manifest(&out_dir.join(MANIFEST), &rows)?;
    Ok(SweepReport { out_dir: out_dir.to_path_buf(), rows })
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(["cell", "scheme", "mu", "delta0", "seed", "status", "file", "error"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> anyhow::Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
