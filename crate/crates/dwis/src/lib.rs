//! Experiment harness for the contour-query sensing loop in `dwis-core`:
//! file formats, TOML experiment specs, parallel sweeps and SVG figures.

pub mod formats;
pub mod plot;
pub mod spec;
pub mod sweep;

pub use spec::{Cell, ExperimentSpec, SpecError};
pub use sweep::{ManifestRow, Status, SweepReport};

use std::path::Path;

/// Runs a sweep into `out_dir` and draws its figures from the written CSVs.
pub fn execute(spec: &ExperimentSpec, out_dir: &Path, jobs: usize, db_axis: bool) -> anyhow::Result<SweepReport> {
    let report = sweep::run_sweep(spec, out_dir, jobs)?;
    plot::write_figures(out_dir, db_axis)?;
    Ok(report)
}
