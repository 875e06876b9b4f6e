//! CSV and JSON layouts for grids, fields, replies, levels, pdfs and run traces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical and reruns produce byte-identical files.

use std::io::{Read, Write};

use dwis_core::{
    ContourLevels, Field, GaussianComponent, Grid, GridSpec, IterationRecord, Pdf1D, QueryReply, RunResult,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] dwis_core::Error),
    #[error("{0}")]
    Layout(String),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    x: f64,
    y: f64,
    value: f64,
}

/// Writes `x,y,value` rows, y outer and x inner.
pub fn write_grid<W: Write>(out: W, grid: &Grid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ((x, y), value) in grid.spec.points().zip(&grid.values) {
        w.serialize(GridRow { x, y, value: *value })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid written by [`write_grid`]. The lattice must match `spec`.
pub fn read_grid<R: Read>(input: R, spec: GridSpec) -> Result<Grid> {
    let rows: Vec<GridRow> = csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>()?;
    if rows.len() != spec.len() {
        return Err(FormatError::Layout(format!("expected {} grid rows, found {}", spec.len(), rows.len())));
    }
    let tol = 1e-9 * spec.area.diagonal();
    for (i, (row, (x, y))) in rows.iter().zip(spec.points()).enumerate() {
        if (row.x - x).abs() > tol || (row.y - y).abs() > tol {
            return Err(FormatError::Layout(format!(
                "row {i} at ({}, {}) is off the lattice ({x}, {y})",
                row.x, row.y
            )));
        }
    }
    Ok(Grid::new(spec, rows.into_iter().map(|r| r.value).collect())?)
}

/// Writes the field as a JSON list of `{amplitude, cx, cy, sigma}`.
pub fn write_field<W: Write>(out: W, field: &Field) -> Result<()> {
    serde_json::to_writer_pretty(out, &field.components)?;
    Ok(())
}

pub fn read_field<R: Read>(input: R) -> Result<Field> {
    let components: Vec<GaussianComponent> = serde_json::from_reader(input)?;
    Ok(Field::new(components)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplyRow {
    iteration: usize,
    sensor_id: usize,
    x: f64,
    y: f64,
    value: f64,
}

/// Writes `iteration,sensor_id,x,y,value` rows. Pilot replies carry iteration 0.
pub fn write_replies<W: Write>(out: W, archive: &[(usize, QueryReply)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (iteration, r) in archive {
        w.serialize(ReplyRow { iteration: *iteration, sensor_id: r.sensor_id, x: r.x, y: r.y, value: r.value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_replies<R: Read>(input: R) -> Result<Vec<(usize, QueryReply)>> {
    csv::Reader::from_reader(input)
        .deserialize::<ReplyRow>()
        .map(|row| {
            let r = row?;
            Ok((r.iteration, QueryReply { sensor_id: r.sensor_id, x: r.x, y: r.y, value: r.value }))
        })
        .collect()
}

/// Writes `index,level` rows.
pub fn write_levels<W: Write>(out: W, levels: &ContourLevels) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        index: usize,
        level: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for (index, level) in levels.levels().iter().enumerate() {
        w.serialize(Row { index, level: *level })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `bin_lo,bin_hi,density` rows.
pub fn write_pdf<W: Write>(out: W, pdf: &Pdf1D) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        bin_lo: f64,
        bin_hi: f64,
        density: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for (edge, d) in pdf.bin_edges().windows(2).zip(pdf.densities()) {
        w.serialize(Row { bin_lo: edge[0], bin_hi: edge[1], density: *d })?;
    }
    w.flush()?;
    Ok(())
}

/// Which part of a run a trace row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Spatial,
    Temporal,
    /// Footnote row: range bootstrap cost and error.
    Pilot,
    /// Footnote row: true signal range of the initial field.
    Truth,
}

/// One row of a run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub phase: Phase,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
    pub cost: usize,
    pub cum_cost: usize,
    pub tracking_rmse: f64,
    pub modeling_rmse: f64,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl TraceRow {
    fn from_record(phase: Phase, r: &IterationRecord) -> Self {
        TraceRow {
            phase,
            k: r.k,
            m: r.m,
            delta: r.delta,
            cost: r.cost,
            cum_cost: r.cumulative_cost,
            tracking_rmse: r.tracking_rmse,
            modeling_rmse: r.modeling_rmse,
            range_lo: r.range_est.0,
            range_hi: r.range_est.1,
        }
    }
}

/// Flattens a run into trace rows: spatial iterations, temporal steps, then
/// the pilot and truth footnotes. `delta0` fills the pilot row's margin.
pub fn trace_rows(run: &RunResult, delta0: f64) -> Vec<TraceRow> {
    let mut rows: Vec<TraceRow> = run.spatial.iter().map(|r| TraceRow::from_record(Phase::Spatial, r)).collect();
    rows.extend(run.temporal.iter().map(|r| TraceRow::from_record(Phase::Temporal, r)));
    rows.push(TraceRow {
        phase: Phase::Pilot,
        k: 0,
        m: 0,
        delta: delta0,
        cost: run.pilot.cost,
        cum_cost: run.pilot.cost,
        tracking_rmse: 0.0,
        modeling_rmse: run.pilot.modeling_rmse,
        range_lo: run.pilot.range.0,
        range_hi: run.pilot.range.1,
    });
    rows.push(TraceRow {
        phase: Phase::Truth,
        k: 0,
        m: 0,
        delta: 0.0,
        cost: 0,
        cum_cost: 0,
        tracking_rmse: 0.0,
        modeling_rmse: 0.0,
        range_lo: run.truth_range.0,
        range_hi: run.truth_range.1,
    });
    rows
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_run<W: Write>(out: W, run: &RunResult, delta0: f64) -> Result<()> {
    write_trace(out, &trace_rows(run, delta0))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    Ok(csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>()?)
}
