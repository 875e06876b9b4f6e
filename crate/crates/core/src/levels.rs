//! Contour level sets: uniform spacing, Lloyd-Max from a histogram pdf, and
//! the histogram estimator itself.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{ensure, Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;

/// How the contour levels of an iteration are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LevelScheme {
    /// Uniformly spaced levels, adaptive margin.
    #[cfg_attr(feature = "serde", serde(rename = "U-SG", alias = "U_SG"))]
    USg,
    /// Lloyd-Max levels on the pdf of the current reconstruction, adaptive margin.
    #[cfg_attr(feature = "serde", serde(rename = "LM-SG", alias = "LM_SG"))]
    LmSg,
    /// Lloyd-Max levels on the true pdf, fixed margin.
    #[cfg_attr(feature = "serde", serde(rename = "LM-fix", alias = "LM_FIX"))]
    LmFix,
}

impl LevelScheme {
    pub const ALL: [LevelScheme; 3] = [LevelScheme::USg, LevelScheme::LmSg, LevelScheme::LmFix];

    pub fn name(self) -> &'static str {
        match self {
            LevelScheme::USg => "U-SG",
            LevelScheme::LmSg => "LM-SG",
            LevelScheme::LmFix => "LM-fix",
        }
    }

    /// Whether the margin follows the stochastic-gradient rule.
    pub fn adapts_delta(self) -> bool {
        !matches!(self, LevelScheme::LmFix)
    }
}

impl fmt::Display for LevelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LevelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: alloc::string::String =
            s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).map(|c| c.to_ascii_lowercase()).collect();
        match norm.as_str() {
            "usg" => Ok(LevelScheme::USg),
            "lmsg" => Ok(LevelScheme::LmSg),
            "lmfix" => Ok(LevelScheme::LmFix),
            _ => Err(Error::param(alloc::format!("unknown level scheme `{s}` (expected U-SG, LM-SG or LM-fix)"))),
        }
    }
}

/// The level set `{ℓ_j}` and margin `Δ` sent to the sensors in one query.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourLevels {
    levels: Vec<f64>,
    delta: f64,
    scheme: LevelScheme,
    range: (f64, f64),
}

impl ContourLevels {
    pub fn new(levels: Vec<f64>, delta: f64, scheme: LevelScheme, range: (f64, f64)) -> Result<Self> {
        ensure!(!levels.is_empty(), "contour level set is empty");
        ensure!(levels.iter().all(|l| l.is_finite()), "contour levels must be finite");
        ensure!(levels.windows(2).all(|w| w[0] < w[1]), "contour levels must be strictly increasing");
        ensure!(delta > 0.0 && delta.is_finite(), "contour margin must be positive, got {delta}");
        ensure!(
            range.0 <= levels[0] && levels[levels.len() - 1] <= range.1,
            "levels [{}, {}] fall outside range [{}, {}]",
            levels[0],
            levels[levels.len() - 1],
            range.0,
            range.1
        );
        Ok(ContourLevels { levels, delta, scheme, range })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn scheme(&self) -> LevelScheme {
        self.scheme
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `min_j |value − ℓ_j| ≤ Δ`.
    pub fn within_margin(&self, value: f64) -> bool {
        let idx = self.levels.partition_point(|&l| l < value);
        let above = self.levels.get(idx).is_some_and(|&l| (l - value).abs() <= self.delta);
        let below = idx > 0 && (value - self.levels[idx - 1]).abs() <= self.delta;
        above || below
    }
}

/// Piecewise-constant density on contiguous bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdf1D {
    bin_edges: Vec<f64>,
    densities: Vec<f64>,
}

impl Pdf1D {
    pub fn new(bin_edges: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        ensure!(!densities.is_empty(), "pdf needs at least one bin");
        if bin_edges.len() != densities.len() + 1 {
            return Err(Error::Shape { expected: densities.len() + 1, actual: bin_edges.len() });
        }
        ensure!(bin_edges.iter().all(|e| e.is_finite()), "pdf bin edges must be finite");
        ensure!(bin_edges.windows(2).all(|w| w[0] < w[1]), "pdf bin edges must be strictly increasing");
        ensure!(densities.iter().all(|d| *d >= 0.0 && d.is_finite()), "pdf densities must be finite and non-negative");
        let pdf = Pdf1D { bin_edges, densities };
        let total = pdf.total_mass();
        ensure!((total - 1.0).abs() <= 1e-9, "pdf integrates to {total}, expected 1");
        Ok(pdf)
    }

    /// Builds a pdf from unnormalized bin weights (mass per bin).
    pub fn from_bin_masses(bin_edges: Vec<f64>, masses: &[f64]) -> Result<Self> {
        if bin_edges.len() != masses.len() + 1 {
            return Err(Error::Shape { expected: masses.len() + 1, actual: bin_edges.len() });
        }
        let total: f64 = masses.iter().sum();
        ensure!(total > 0.0 && total.is_finite(), "bin masses must have a positive finite sum");
        let densities = masses.iter().zip(bin_edges.windows(2)).map(|(m, w)| m / total / (w[1] - w[0])).collect();
        Pdf1D::new(bin_edges, densities)
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.bin_edges[0], self.bin_edges[self.bin_edges.len() - 1])
    }

    pub fn total_mass(&self) -> f64 {
        self.densities.iter().zip(self.bin_edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum()
    }

    pub fn mean(&self) -> f64 {
        self.densities.iter().zip(self.bin_edges.windows(2)).map(|(d, w)| d * (w[1] * w[1] - w[0] * w[0]) / 2.0).sum()
    }

    /// Calls `f(cell, u, v, density)` for every non-empty overlap `[u, v]`
    /// between a bin and a cell `[boundaries[cell], boundaries[cell + 1]]`.
    fn for_each_piece(&self, boundaries: &[f64], mut f: impl FnMut(usize, f64, f64, f64)) {
        let edges = &self.bin_edges;
        let nb = self.densities.len();
        let mut first = 0;
        for cell in 0..boundaries.len() - 1 {
            let (a, c) = (boundaries[cell], boundaries[cell + 1]);
            while first < nb && edges[first + 1] <= a {
                first += 1;
            }
            let mut k = first;
            while k < nb && edges[k] < c {
                let u = a.max(edges[k]);
                let v = c.min(edges[k + 1]);
                if v > u {
                    f(cell, u, v, self.densities[k]);
                }
                k += 1;
            }
        }
    }
}

/// Histogram density over `[min, max]` of `values`.
///
/// Every bin gets a density floor of `1e−9` before renormalization so that
/// Lloyd-Max never sees an empty stretch of support.
pub fn estimate_pdf(values: &[f64], bins: usize) -> Result<Pdf1D> {
    const DENSITY_FLOOR: f64 = 1e-9;
    ensure!(bins >= 1, "histogram needs at least one bin");
    ensure!(values.iter().all(|v| v.is_finite()), "histogram input must be finite");
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ensure!(lo < hi, "histogram needs at least two distinct values");
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0usize; bins];
    for &v in values {
        let idx = ((v - lo) / width) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    let n = values.len() as f64;
    let raw: Vec<f64> = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| (c as f64 / (n * (w[1] - w[0]))).max(DENSITY_FLOOR))
        .collect();
    let total: f64 = raw.iter().zip(edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
    let densities = raw.into_iter().map(|d| d / total).collect();
    Pdf1D::new(edges, densities)
}

/// Histogram of the ground-truth field on `grid`: the "known pdf".
pub fn true_pdf(field: &Field, grid: &GridSpec, bins: usize) -> Result<Pdf1D> {
    estimate_pdf(&field.eval_grid(grid).values, bins)
}

/// `m` levels at the cell midpoints `lo + (i − ½)(hi − lo)/m`, `i = 1..=m`.
pub fn uniform_levels(lo: f64, hi: f64, m: usize) -> Result<Vec<f64>> {
    ensure!(lo.is_finite() && hi.is_finite() && lo < hi, "uniform levels need lo < hi, got [{lo}, {hi}]");
    ensure!(m >= 1, "level count must be at least 1");
    let step = (hi - lo) / m as f64;
    Ok((0..m).map(|i| lo + (i as f64 + 0.5) * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LloydMaxOptions {
    /// Stop once no level moves by this much.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LloydMaxOptions {
    fn default() -> Self {
        LloydMaxOptions { tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydMaxResult {
    pub levels: Vec<f64>,
    /// `M + 1` cell boundaries, the outer two being the pdf support.
    pub boundaries: Vec<f64>,
    pub iterations: usize,
    /// Mean squared quantization error of the returned levels.
    pub distortion: f64,
    /// Distortion of the starting levels followed by one entry per update.
    pub distortion_history: Vec<f64>,
}

/// Lloyd-Max quantizer for `pdf` with `m` levels.
///
/// Starts from uniform levels and alternates two steps until the levels
/// settle: cell boundaries at the midpoints of adjacent levels, then each
/// level at the centroid `∫x f / ∫f` of its cell. A cell holding less than
/// `1e−12` of probability mass keeps its midpoint as level.
pub fn lloyd_max(pdf: &Pdf1D, m: usize, opts: &LloydMaxOptions) -> Result<LloydMaxResult> {
    ensure!(m >= 1, "level count must be at least 1");
    ensure!(opts.tol > 0.0, "Lloyd-Max tolerance must be positive");
    let (lo, hi) = pdf.support();
    let mut levels = uniform_levels(lo, hi, m)?;
    let mut boundaries = cell_boundaries(&levels, lo, hi);
    let mut history = alloc::vec![distortion(pdf, &boundaries, &levels)];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let next = centroids(pdf, &boundaries);
        iterations += 1;
        let moved = next.iter().zip(&levels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        levels = next;
        boundaries = cell_boundaries(&levels, lo, hi);
        history.push(distortion(pdf, &boundaries, &levels));
        if moved < opts.tol {
            break;
        }
    }
    if levels.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("Lloyd-Max"));
    }
    Ok(LloydMaxResult {
        distortion: history[history.len() - 1],
        levels,
        boundaries,
        iterations,
        distortion_history: history,
    })
}

fn cell_boundaries(levels: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(levels.len() + 1);
    b.push(lo);
    b.extend(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    b.push(hi);
    b
}

fn centroids(pdf: &Pdf1D, boundaries: &[f64]) -> Vec<f64> {
    let m = boundaries.len() - 1;
    let mut mass = alloc::vec![0.0; m];
    let mut moment = alloc::vec![0.0; m];
    pdf.for_each_piece(boundaries, |cell, u, v, d| {
        let a = boundaries[cell];
        mass[cell] += d * (v - u);
        moment[cell] += d * ((v - a) * (v - a) - (u - a) * (u - a)) / 2.0;
    });
    (0..m)
        .map(|i| {
            let (a, c) = (boundaries[i], boundaries[i + 1]);
            if mass[i] < 1e-12 {
                0.5 * (a + c)
            } else {
                (a + moment[i] / mass[i]).clamp(a, c)
            }
        })
        .collect()
}

/// `Σ_i ∫_{cell i} (x − ℓ_i)² f(x) dx`.
pub fn distortion(pdf: &Pdf1D, boundaries: &[f64], levels: &[f64]) -> f64 {
    let mut total = 0.0;
    pdf.for_each_piece(boundaries, |cell, u, v, d| {
        let (p, q) = (u - levels[cell], v - levels[cell]);
        total += d * (q * q * q - p * p * p) / 3.0;
    });
    total
}

/// Builds the level set of `scheme`.
///
/// Uniform levels span `range`. The Lloyd-Max schemes need `pdf` and their
/// levels span its support, which becomes the level set's range.
pub fn make_levels(
    scheme: LevelScheme,
    range: (f64, f64),
    m: usize,
    delta: f64,
    pdf: Option<&Pdf1D>,
    opts: &LloydMaxOptions,
) -> Result<ContourLevels> {
    match scheme {
        LevelScheme::USg => ContourLevels::new(uniform_levels(range.0, range.1, m)?, delta, scheme, range),
        LevelScheme::LmSg | LevelScheme::LmFix => {
            let pdf = pdf.ok_or_else(|| Error::param(alloc::format!("{scheme} levels need a pdf")))?;
            let lm = lloyd_max(pdf, m, opts)?;
            ContourLevels::new(lm.levels, delta, scheme, pdf.support())
        }
    }
}
