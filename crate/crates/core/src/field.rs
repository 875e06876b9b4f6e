//! Synthetic ground truth: a diffusion-style field built from isotropic
//! Gaussian bumps, plus a gentle random evolution law for the temporal phase.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Result};
use crate::grid::{Area, Grid, GridSpec};
use crate::math;

/// One bump `a · exp(−((x−cx)² + (y−cy)²) / 2σ²)`. The kernel is not
/// normalized, so `amplitude` is the bump's peak height.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianComponent {
    pub amplitude: f64,
    #[cfg_attr(feature = "serde", serde(rename = "cx"))]
    pub center_x: f64,
    #[cfg_attr(feature = "serde", serde(rename = "cy"))]
    pub center_y: f64,
    pub sigma: f64,
}

impl GaussianComponent {
    pub fn new(amplitude: f64, center_x: f64, center_y: f64, sigma: f64) -> Result<Self> {
        let c = GaussianComponent { amplitude, center_x, center_y, sigma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.amplitude > 0.0 && self.amplitude.is_finite(),
            "component amplitude must be positive, got {}",
            self.amplitude
        );
        ensure!(self.sigma > 0.0 && self.sigma.is_finite(), "component sigma must be positive, got {}", self.sigma);
        ensure!(self.center_x.is_finite() && self.center_y.is_finite(), "component center must be finite");
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        self.amplitude * math::exp(-(dx * dx + dy * dy) / (2.0 * self.sigma * self.sigma))
    }
}

/// Knobs of the two-population bump model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldParams {
    /// Number of narrow bumps.
    pub n1: usize,
    /// Number of wide bumps.
    pub n2: usize,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// Amplitude interval of the narrow bumps.
    pub amp_a: (f64, f64),
    /// Amplitude interval of the wide bumps.
    pub amp_b: (f64, f64),
    pub area: Area,
}

impl FieldParams {
    /// 150 bumps at σ = 3 plus 150 at σ = 10 over a 100 × 100 square,
    /// amplitudes uniform in `[0.5, 1.5]`.
    pub fn standard() -> Self {
        FieldParams {
            n1: 150,
            n2: 150,
            sigma_a: 3.0,
            sigma_b: 10.0,
            amp_a: (0.5, 1.5),
            amp_b: (0.5, 1.5),
            area: Area { x_min: 0.0, x_max: 100.0, y_min: 0.0, y_max: 100.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n1 >= 1 && self.n2 >= 1, "field needs n1 >= 1 and n2 >= 1");
        ensure!(self.sigma_a > 0.0 && self.sigma_b > 0.0, "field sigmas must be positive");
        for (name, (lo, hi)) in [("amp_a", self.amp_a), ("amp_b", self.amp_b)] {
            ensure!(lo > 0.0 && lo <= hi && hi.is_finite(), "{name} must be a positive interval, got [{lo}, {hi}]");
        }
        self.area.validate()
    }
}

/// Parameters of the between-update evolution law.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvolveParams {
    pub dt: f64,
    /// Per-axis random-walk std of bump centers per unit time.
    pub drift_sigma: f64,
    /// Amplitudes are scaled by `1 + u`, `u ~ U(−amp_jitter, amp_jitter)`.
    pub amp_jitter: f64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams { dt: 1.0, drift_sigma: 1.0, amp_jitter: 0.05 }
    }
}

impl EvolveParams {
    pub fn frozen() -> Self {
        EvolveParams { dt: 1.0, drift_sigma: 0.0, amp_jitter: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.dt > 0.0 && self.dt.is_finite(), "evolution dt must be positive, got {}", self.dt);
        ensure!(
            self.drift_sigma >= 0.0 && self.drift_sigma.is_finite(),
            "drift_sigma must be non-negative, got {}",
            self.drift_sigma
        );
        ensure!((0.0..1.0).contains(&self.amp_jitter), "amp_jitter must lie in [0, 1), got {}", self.amp_jitter);
        Ok(())
    }
}

/// Ground-truth signal `g(x, y; t)` as a sum of Gaussian bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub components: Vec<GaussianComponent>,
    pub time: f64,
}

impl Field {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        ensure!(!components.is_empty(), "field needs at least one component");
        for c in &components {
            c.validate()?;
        }
        Ok(Field { components, time: 0.0 })
    }

    /// Draws `n1` bumps of width `sigma_a` followed by `n2` of width
    /// `sigma_b`, centers uniform over the area.
    pub fn build(params: &FieldParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = crate::seed::rng(seed);
        let area = params.area;
        let mut components = Vec::with_capacity(params.n1 + params.n2);
        for (count, sigma, (lo, hi)) in
            [(params.n1, params.sigma_a, params.amp_a), (params.n2, params.sigma_b, params.amp_b)]
        {
            for _ in 0..count {
                let amplitude = rng.random_range(lo..=hi);
                let center_x = rng.random_range(area.x_min..=area.x_max);
                let center_y = rng.random_range(area.y_min..=area.y_max);
                components.push(GaussianComponent { amplitude, center_x, center_y, sigma });
            }
        }
        Ok(Field { components, time: 0.0 })
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.components.iter().map(|c| c.eval(x, y)).sum()
    }

    pub fn eval_points(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        ensure!(points.iter().all(|(x, y)| x.is_finite() && y.is_finite()), "evaluation points must be finite");
        Ok(points.iter().map(|&(x, y)| self.eval(x, y)).collect())
    }

    pub fn eval_grid(&self, grid: &GridSpec) -> Grid {
        Grid::from_fn(*grid, |x, y| self.eval(x, y))
    }

    /// `(min, max)` of the field over the grid nodes.
    pub fn range(&self, grid: &GridSpec) -> (f64, f64) {
        self.eval_grid(grid).min_max()
    }

    /// Advances the field by `dt`: each center takes a Gaussian step of std
    /// `drift_sigma·√dt` per axis and each amplitude is jittered.
    pub fn evolve(&self, params: &EvolveParams, seed: u64) -> Result<Field> {
        params.validate()?;
        let mut rng = crate::seed::rng(seed);
        let step = params.drift_sigma * math::sqrt(params.dt);
        let normal = Normal::new(0.0, step).map_err(|_| crate::error::Error::param("invalid drift std"))?;
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut next = *c;
                if step > 0.0 {
                    next.center_x += normal.sample(&mut rng);
                    next.center_y += normal.sample(&mut rng);
                }
                if params.amp_jitter > 0.0 {
                    let u: f64 = rng.random_range(-params.amp_jitter..=params.amp_jitter);
                    next.amplitude = (next.amplitude * (1.0 + u)).max(f64::MIN_POSITIVE);
                }
                next
            })
            .collect();
        Ok(Field { components, time: self.time + params.dt })
    }
}
