//! The DWIS loop: query the network around the current contour levels,
//! rebuild the field from the replies, refine the levels, and steer the
//! margin `Δ` from the slope of the tracking error.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::field::{EvolveParams, Field, FieldParams};
use crate::grid::{Grid, GridSpec};
use crate::levels::{estimate_pdf, make_levels, uniform_levels, ContourLevels, LevelScheme, LloydMaxOptions, Pdf1D};
use crate::math;
use crate::reconstruct::{fit_biharmonic, greens_function, IncrementalSpline, SplineModel};
use crate::seed::{self, stream};
use crate::sensors::{QueryReply, SensorField};

/// Parameters of one DWIS run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DwisConfig {
    pub scheme: LevelScheme,
    /// Level count of the first iteration.
    pub m0: usize,
    /// Levels added per iteration.
    pub p: usize,
    /// Initial contour margin.
    pub delta0: f64,
    /// Step size of the margin update, in `[0, 1]`.
    pub mu: f64,
    pub spatial_iters: usize,
    /// Share of the network sampled to bootstrap the signal range.
    pub pilot_fraction: f64,
    pub temporal_steps: usize,
    /// Floor applied to the adapted margin.
    pub delta_min: f64,
    /// Histogram bins for pdf estimates.
    pub pdf_bins: usize,
    /// Ridge relative to `|φ|` at the area diagonal.
    pub ridge_rel: f64,
    pub lloyd: LloydMaxOptions,
}

impl DwisConfig {
    /// Default loop settings around a chosen scheme and margin schedule.
    pub fn standard(scheme: LevelScheme, mu: f64, delta0: f64) -> Self {
        DwisConfig {
            scheme,
            m0: 3,
            p: 3,
            delta0,
            mu,
            spatial_iters: 12,
            pilot_fraction: 0.005,
            temporal_steps: 20,
            delta_min: delta0 / 100.0,
            pdf_bins: 64,
            ridge_rel: 1e-8,
            lloyd: LloydMaxOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..=1.0).contains(&self.mu), "mu = {} violates 0 <= mu <= 1", self.mu);
        ensure!(self.m0 >= 1, "m0 must be at least 1");
        ensure!(self.p >= 1, "p must be at least 1");
        ensure!(self.delta_min > 0.0, "delta_min must be positive, got {}", self.delta_min);
        ensure!(
            self.delta0 > self.delta_min && self.delta0.is_finite(),
            "delta0 = {} must exceed delta_min = {}",
            self.delta0,
            self.delta_min
        );
        ensure!(
            (0.0..=1.0).contains(&self.pilot_fraction),
            "pilot_fraction must lie in [0, 1], got {}",
            self.pilot_fraction
        );
        ensure!(self.pdf_bins >= 1, "pdf_bins must be at least 1");
        ensure!(self.ridge_rel >= 0.0 && self.ridge_rel.is_finite(), "ridge_rel must be non-negative");
        ensure!(self.lloyd.tol > 0.0, "Lloyd-Max tolerance must be positive");
        Ok(())
    }
}

/// Everything about the simulated world that is not a DWIS knob.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub field: FieldParams,
    pub sensors: usize,
    /// Metric grid; must cover the field area.
    pub grid: GridSpec,
    pub evolution: EvolveParams,
}

impl Scenario {
    /// 5000 sensors on the default 100 × 100 field, metrics on a 100 × 100
    /// lattice.
    pub fn standard() -> Self {
        let field = FieldParams::standard();
        Scenario {
            field,
            sensors: 5000,
            grid: GridSpec { area: field.area, nx: 100, ny: 100 },
            evolution: EvolveParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.grid.validate()?;
        self.evolution.validate()?;
        ensure!(self.sensors >= 1, "sensor count must be at least 1");
        ensure!(self.grid.area == self.field.area, "metric grid must span the field area");
        Ok(())
    }
}

/// One spatial iteration or temporal update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub k: usize,
    pub m: usize,
    pub delta: f64,
    pub cost: usize,
    pub cumulative_cost: usize,
    pub tracking_rmse: f64,
    pub modeling_rmse: f64,
    pub range_est: (f64, f64),
}

/// The range-bootstrap sample taken before the first iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PilotRecord {
    pub cost: usize,
    pub range: (f64, f64),
    /// Modeling RMSE of the reconstruction from the pilot alone.
    pub modeling_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub pilot: PilotRecord,
    pub spatial: Vec<IterationRecord>,
    pub temporal: Vec<IterationRecord>,
    pub final_m: usize,
    pub final_delta: f64,
    /// Ground-truth `(min, max)` on the metric grid during the spatial phase.
    pub truth_range: (f64, f64),
}

/// State handed from the spatial to the temporal phase.
#[derive(Debug, Clone)]
pub struct SpatialOutcome {
    pub pilot: PilotRecord,
    pub records: Vec<IterationRecord>,
    pub model: SplineModel,
    /// Last reconstruction on the metric grid.
    pub reconstruction: Grid,
    /// Every reply with the iteration that produced it (0 = pilot).
    pub archive: Vec<(usize, QueryReply)>,
    pub final_m: usize,
    pub final_delta: f64,
    pub truth_range: (f64, f64),
}

fn rmse(a: &Grid, b: &Grid) -> Result<f64> {
    if (a.spec.nx, a.spec.ny) != (b.spec.nx, b.spec.ny) {
        return Err(Error::Shape { expected: a.values.len(), actual: b.values.len() });
    }
    let sum: f64 = a.values.iter().zip(&b.values).map(|(p, q)| (p - q) * (p - q)).sum();
    Ok(math::sqrt(sum / a.values.len() as f64))
}

/// RMS change between consecutive reconstructions.
pub fn tracking_rmse(current: &Grid, previous: &Grid) -> Result<f64> {
    rmse(current, previous)
}

/// RMS error of a reconstruction against the ground truth.
pub fn modeling_rmse(estimate: &Grid, truth: &Grid) -> Result<f64> {
    rmse(estimate, truth)
}

/// Stochastic-gradient margin update.
///
/// With `∇ = e1 − e2` and `Ē = (e1 + e2)/2` for the two latest errors,
/// returns `max(delta_min, Δ·(1 + μ∇/(2Ē)))`. When `Ē` vanishes the margin
/// is left alone.
pub fn delta_update(delta_prev: f64, err_km1: f64, err_km2: f64, mu: f64, delta_min: f64) -> f64 {
    let grad = err_km1 - err_km2;
    let mean = 0.5 * (err_km1 + err_km2);
    if !(mean >= 1e-15) {
        return delta_prev;
    }
    (delta_prev * (1.0 + mu * grad / (2.0 * mean))).max(delta_min)
}

/// Fraction of `truth` covered by `estimate`.
pub fn range_coverage(estimate: (f64, f64), truth: (f64, f64)) -> f64 {
    let width = truth.1 - truth.0;
    let overlap = estimate.1.min(truth.1) - estimate.0.max(truth.0);
    if width <= 0.0 {
        return if estimate.0 <= truth.0 && truth.1 <= estimate.1 { 1.0 } else { 0.0 };
    }
    (overlap / width).clamp(0.0, 1.0)
}

/// A range wide enough to place levels in. A collapsed range (all samples
/// equal) is opened by `Δ` on both sides.
fn working_range((lo, hi): (f64, f64), delta: f64) -> (f64, f64) {
    let scale = 1.0f64.max(lo.abs()).max(hi.abs());
    if hi - lo <= 1e-12 * scale {
        (lo - delta, hi + delta)
    } else {
        (lo, hi)
    }
}

fn union((a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    (a.min(c), b.max(d))
}

fn ridge_for(config: &DwisConfig, grid: &GridSpec) -> f64 {
    config.ridge_rel * greens_function(grid.area.diagonal()).map(f64::abs).unwrap_or(0.0)
}

struct LevelPlanner<'a> {
    config: &'a DwisConfig,
}

impl LevelPlanner<'_> {
    /// Levels for one query. `belief` is the fusion center's current
    /// reconstruction and `truth` the ground-truth grid (only LM-fix reads it).
    fn plan(&self, range: (f64, f64), m: usize, delta: f64, belief: &Grid, truth: &Grid) -> Result<ContourLevels> {
        let c = self.config;
        let pdf: Option<Pdf1D> = match c.scheme {
            LevelScheme::USg => None,
            LevelScheme::LmSg => estimate_pdf(&belief.values, c.pdf_bins).ok(),
            LevelScheme::LmFix => Some(estimate_pdf(&truth.values, c.pdf_bins)?),
        };
        match (c.scheme, pdf) {
            (LevelScheme::USg, _) => make_levels(LevelScheme::USg, range, m, delta, None, &c.lloyd),
            (scheme, Some(pdf)) => make_levels(scheme, range, m, delta, Some(&pdf), &c.lloyd),
            // A flat reconstruction has no pdf to quantize; fall back to
            // uniform levels over the working range.
            (scheme, None) => ContourLevels::new(uniform_levels(range.0, range.1, m)?, delta, scheme, range),
        }
    }
}

fn reconstruction_error(phase: &'static str, step: usize) -> impl FnOnce(Error) -> Error {
    move |source| Error::Reconstruction { phase, step, source: Box::new(source) }
}

/// Spatial modeling phase.
///
/// A pilot of `⌈pilot_fraction·N⌉` random sensors (at least one) seeds the
/// signal range and the first reconstruction. Then, for each iteration:
/// place `M` levels over the current range estimate, query with the
/// report-once rule, refit the spline on every reply received so far,
/// record cost and errors, widen the range to cover the new
/// reconstruction, update `Δ` (from the third iteration on, adaptive
/// schemes only) and add `p` levels.
pub fn spatial_phase(
    field: &Field,
    sensors: &mut SensorField,
    grid: &GridSpec,
    config: &DwisConfig,
    seed: u64,
) -> Result<SpatialOutcome> {
    config.validate()?;
    grid.validate()?;
    ensure!(sensors.reported_count() == 0, "spatial phase needs a sensor field with no reports");

    let truth = field.eval_grid(grid);
    let observations = sensors.observe(field);
    let n = sensors.len();
    let pilot_count = (math::ceil(config.pilot_fraction * n as f64) as usize).clamp(1, n);
    let pilot = sensors.pilot_sample(&observations, pilot_count, seed::derive(seed, stream::PILOT, 0))?;

    let mut spline = IncrementalSpline::new(ridge_for(config, grid))?;
    add_replies(&mut spline, &pilot).map_err(reconstruction_error("pilot", 0))?;
    let mut model = spline.model().map_err(reconstruction_error("pilot", 0))?;
    let mut previous = model.eval_grid(grid);

    let mut range =
        pilot.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.value), hi.max(r.value)));
    let pilot_record = PilotRecord { cost: pilot.len(), range, modeling_rmse: modeling_rmse(&previous, &truth)? };
    let mut archive: Vec<(usize, QueryReply)> = pilot.into_iter().map(|r| (0, r)).collect();

    let planner = LevelPlanner { config };
    let mut delta = config.delta0;
    let mut m = config.m0;
    let mut cumulative = pilot_record.cost;
    let mut errors: Vec<f64> = Vec::with_capacity(config.spatial_iters);
    let mut records = Vec::with_capacity(config.spatial_iters);

    for k in 1..=config.spatial_iters {
        let levels = planner.plan(working_range(range, delta), m, delta, &previous, &truth)?;
        let replies = sensors.contour_query_observed(&observations, &levels, true)?;
        cumulative += replies.len();

        let current = if replies.is_empty() {
            previous.clone()
        } else {
            add_replies(&mut spline, &replies).map_err(reconstruction_error("spatial", k))?;
            model = spline.model().map_err(reconstruction_error("spatial", k))?;
            model.eval_grid(grid)
        };
        if current.values.iter().any(|v| !v.is_finite()) {
            return Err(reconstruction_error("spatial", k)(Error::NonFinite("spline evaluation")));
        }
        let tracking = tracking_rmse(&current, &previous)?;
        range = union(range, current.min_max());
        records.push(IterationRecord {
            k,
            m,
            delta,
            cost: replies.len(),
            cumulative_cost: cumulative,
            tracking_rmse: tracking,
            modeling_rmse: modeling_rmse(&current, &truth)?,
            range_est: range,
        });
        errors.push(tracking);
        archive.extend(replies.into_iter().map(|r| (k, r)));

        if config.scheme.adapts_delta() && errors.len() >= 2 {
            let e = &errors[errors.len() - 2..];
            delta = delta_update(delta, e[1], e[0], config.mu, config.delta_min);
        }
        m += config.p;
        previous = current;
    }

    let (final_m, final_delta) = records.last().map_or((config.m0, config.delta0), |r| (r.m, r.delta));
    Ok(SpatialOutcome {
        pilot: pilot_record,
        records,
        model,
        reconstruction: previous,
        archive,
        final_m,
        final_delta,
        truth_range: truth.min_max(),
    })
}

fn add_replies(spline: &mut IncrementalSpline, replies: &[QueryReply]) -> Result<()> {
    let points: Vec<(f64, f64)> = replies.iter().map(|r| (r.x, r.y)).collect();
    let values: Vec<f64> = replies.iter().map(|r| r.value).collect();
    spline.add(&points, &values)
}

/// Periodic temporal updates after the spatial phase.
///
/// Each step evolves the field, re-enables all sensors, re-derives the range
/// from the previous reconstruction, rebuilds `final_m` levels, queries once
/// with the final margin and reconstructs from that step's replies alone.
pub fn temporal_phase(
    field: &Field,
    sensors: &mut SensorField,
    grid: &GridSpec,
    spatial: &SpatialOutcome,
    config: &DwisConfig,
    evolution: &EvolveParams,
    seed: u64,
) -> Result<Vec<IterationRecord>> {
    config.validate()?;
    evolution.validate()?;
    let planner = LevelPlanner { config };
    let ridge = ridge_for(config, grid);
    let mut current_field = field.clone();
    let mut previous = spatial.reconstruction.clone();
    let mut cumulative = 0;
    let mut records = Vec::with_capacity(config.temporal_steps);

    for t in 1..=config.temporal_steps {
        current_field = current_field.evolve(evolution, seed::derive(seed, stream::EVOLVE, t as u64))?;
        sensors.reset_reported();
        let truth = current_field.eval_grid(grid);
        let range = working_range(previous.min_max(), spatial.final_delta);
        let levels = planner.plan(range, spatial.final_m, spatial.final_delta, &previous, &truth)?;
        let observations = sensors.observe(&current_field);
        let replies = sensors.contour_query_observed(&observations, &levels, true)?;
        cumulative += replies.len();

        let current = if replies.is_empty() {
            previous.clone()
        } else {
            let points: Vec<(f64, f64)> = replies.iter().map(|r| (r.x, r.y)).collect();
            let values: Vec<f64> = replies.iter().map(|r| r.value).collect();
            fit_biharmonic(&points, &values, ridge).map_err(reconstruction_error("temporal", t))?.eval_grid(grid)
        };
        if current.values.iter().any(|v| !v.is_finite()) {
            return Err(reconstruction_error("temporal", t)(Error::NonFinite("spline evaluation")));
        }
        records.push(IterationRecord {
            k: t,
            m: spatial.final_m,
            delta: spatial.final_delta,
            cost: replies.len(),
            cumulative_cost: cumulative,
            tracking_rmse: tracking_rmse(&current, &previous)?,
            modeling_rmse: modeling_rmse(&current, &truth)?,
            range_est: levels.range(),
        });
        previous = current;
    }
    Ok(records)
}

/// Builds the world for `seed` and runs both phases.
///
/// Field, sensor layout, pilot and evolution draw from separate streams of
/// `seed`, so runs that differ only in DWIS knobs see the same world.
pub fn run(scenario: &Scenario, config: &DwisConfig, seed: u64) -> Result<RunResult> {
    scenario.validate()?;
    config.validate()?;
    let field = Field::build(&scenario.field, seed::derive(seed, stream::FIELD, 0))?;
    let mut sensors =
        SensorField::deploy(scenario.sensors, scenario.field.area, seed::derive(seed, stream::SENSORS, 0))?;
    let spatial = spatial_phase(&field, &mut sensors, &scenario.grid, config, seed)?;
    let temporal = temporal_phase(&field, &mut sensors, &scenario.grid, &spatial, config, &scenario.evolution, seed)?;
    Ok(RunResult {
        pilot: spatial.pilot,
        final_m: spatial.final_m,
        final_delta: spatial.final_delta,
        truth_range: spatial.truth_range,
        spatial: spatial.records,
        temporal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianComponent;
    use crate::grid::Area;
    use alloc::vec;

    fn grid_of(values: Vec<f64>, nx: usize, ny: usize) -> Grid {
        Grid::new(GridSpec::new(Area::square(1.0).unwrap(), nx, ny).unwrap(), values).unwrap()
    }

    #[test]
    fn rmse_cases() {
        let a = grid_of(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        assert_eq!(tracking_rmse(&a, &a).unwrap(), 0.0);
        let shifted = grid_of(a.values.iter().map(|v| v - 2.5).collect(), 2, 2);
        assert!((tracking_rmse(&a, &shifted).unwrap() - 2.5).abs() < 1e-15);
        assert!((modeling_rmse(&shifted, &a).unwrap() - 2.5).abs() < 1e-15);
        let z = grid_of(vec![0.0, 0.0, 0.0, 0.0], 2, 2);
        let other = grid_of(vec![1.0; 6], 3, 2);
        assert!(tracking_rmse(&z, &other).is_err());
    }

    #[test]
    fn delta_update_cases() {
        assert_eq!(delta_update(0.2, 0.5, 0.5, 0.7, 0.001), 0.2);
        assert!((delta_update(0.2, 0.8, 1.2, 0.5, 0.001) - 0.18).abs() < 1e-15);
        let slow = delta_update(0.2, 0.8, 1.2, 0.3, 0.001);
        let fast = delta_update(0.2, 0.8, 1.2, 0.7, 0.001);
        assert!(fast < slow && slow < 0.2);
        assert_eq!(delta_update(0.2, 0.0, 0.0, 0.5, 0.001), 0.2);
        assert_eq!(delta_update(0.01, 0.0, 1.0, 1.0, 0.005), 0.005);
    }

    #[test]
    fn coverage_cases() {
        assert_eq!(range_coverage((1.0, 3.0), (1.0, 3.0)), 1.0);
        assert_eq!(range_coverage((0.0, 1.0), (0.0, 2.0)), 0.5);
        assert_eq!(range_coverage((5.0, 6.0), (0.0, 2.0)), 0.0);
        assert_eq!(range_coverage((-10.0, 10.0), (0.0, 2.0)), 1.0);
    }

    #[test]
    fn config_validation() {
        let ok = DwisConfig::standard(LevelScheme::USg, 0.3, 0.2);
        assert!(ok.validate().is_ok());
        assert!(DwisConfig { mu: 1.5, ..ok }.validate().is_err());
        assert!(DwisConfig { mu: -0.1, ..ok }.validate().is_err());
        assert!(DwisConfig { p: 0, ..ok }.validate().is_err());
        assert!(DwisConfig { delta_min: 0.3, ..ok }.validate().is_err());
        assert!(DwisConfig { delta_min: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn single_sensor_run() {
        let area = Area::square(10.0).unwrap();
        let field = Field::new(vec![GaussianComponent::new(2.0, 5.0, 5.0, 3.0).unwrap()]).unwrap();
        let mut sensors = SensorField::from_positions(&[(4.0, 6.0)], area).unwrap();
        let value = field.eval(4.0, 6.0);
        let grid = GridSpec::new(area, 5, 5).unwrap();
        let config = DwisConfig { m0: 1, spatial_iters: 2, ..DwisConfig::standard(LevelScheme::USg, 0.3, 0.2) };
        let out = spatial_phase(&field, &mut sensors, &grid, &config, 1).unwrap();
        assert_eq!(out.pilot.cost, 1);
        assert_eq!(out.records[0].cost, 0);
        assert_eq!(out.records.last().unwrap().cumulative_cost, 1);
        assert!(out.reconstruction.values.iter().all(|&v| (v - value).abs() < 1e-12));
        assert_eq!(out.archive.len(), 1);
    }

    #[test]
    fn spatial_phase_requires_fresh_sensors() {
        let area = Area::square(10.0).unwrap();
        let field = Field::new(vec![GaussianComponent::new(2.0, 5.0, 5.0, 3.0).unwrap()]).unwrap();
        let mut sensors = SensorField::deploy(50, area, 1).unwrap();
        let obs = sensors.observe(&field);
        sensors.pilot_sample(&obs, 1, 0).unwrap();
        let grid = GridSpec::new(area, 5, 5).unwrap();
        let config = DwisConfig::standard(LevelScheme::USg, 0.3, 0.2);
        assert!(spatial_phase(&field, &mut sensors, &grid, &config, 1).is_err());
    }
}
