//! Biharmonic spline reconstruction of a field from scattered samples.
//!
//! The interpolant is a Green's-function expansion
//! `g̃(x) = c + Σ_j w_j φ(‖x − p_j‖)` with `φ(r) = r²(ln r − 1)`, where the
//! offset `c` is the mean of the samples and the weights solve
//! `(G + λI) w = d − c`, `G_ij = φ(‖p_i − p_j‖)`.

use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::linalg::LuFactors;
use crate::math;

/// Points closer than this are merged into one center.
pub const DEDUP_DISTANCE: f64 = 1e-9;

/// Biharmonic Green's function `φ(r) = r²(ln r − 1)`, with `φ(0) = 0`.
pub fn greens_function(r: f64) -> Result<f64> {
    ensure!(r >= 0.0, "Green's function needs r >= 0, got {r}");
    Ok(kernel_sq(r * r))
}

/// `φ` as a function of the squared distance `s = r²`: `½ s (ln s − 2)`.
#[inline(always)]
fn kernel_sq(s: f64) -> f64 {
    if s > 0.0 {
        0.5 * s * (math::ln(s) - 2.0)
    } else {
        0.0
    }
}

#[inline(always)]
fn dist_sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// A fitted biharmonic interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    pub centers: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    /// Constant added to the expansion (mean of the fitted values).
    pub offset: f64,
    pub ridge: f64,
}

impl SplineModel {
    pub fn new(centers: Vec<(f64, f64)>, weights: Vec<f64>, offset: f64, ridge: f64) -> Result<Self> {
        ensure!(!centers.is_empty(), "spline needs at least one center");
        if centers.len() != weights.len() {
            return Err(Error::Shape { expected: centers.len(), actual: weights.len() });
        }
        if !offset.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("spline weights"));
        }
        Ok(SplineModel { centers, weights, offset, ridge })
    }

    /// A constant surface.
    pub fn constant(center: (f64, f64), value: f64) -> Self {
        SplineModel { centers: alloc::vec![center], weights: alloc::vec![0.0], offset: value, ridge: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.offset
            + self.centers.iter().zip(&self.weights).map(|(&c, &w)| w * kernel_sq(dist_sq((x, y), c))).sum::<f64>()
    }

    pub fn eval_grid(&self, grid: &GridSpec) -> Grid {
        let xs: Vec<f64> = (0..grid.nx).map(|i| grid.x(i)).collect();
        let cx: Vec<f64> = self.centers.iter().map(|c| c.0).collect();
        let mut dy2 = alloc::vec![0.0; self.centers.len()];
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for (d, c) in dy2.iter_mut().zip(&self.centers) {
                *d = (y - c.1) * (y - c.1);
            }
            for &x in &xs {
                let mut acc = 0.0;
                for ((&cx, &dy2), &w) in cx.iter().zip(&dy2).zip(&self.weights) {
                    let dx = x - cx;
                    acc += w * kernel_sq(dx * dx + dy2);
                }
                values.push(self.offset + acc);
            }
        }
        Grid { spec: *grid, values }
    }
}

/// Merges points closer than [`DEDUP_DISTANCE`]: the first occurrence keeps
/// its position and takes the mean of the merged values.
pub fn dedup_points(points: &[(f64, f64)], values: &[f64]) -> (Vec<(f64, f64)>, Vec<f64>) {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    let mut owner: Vec<usize> = (0..n).collect();
    let tol_sq = DEDUP_DISTANCE * DEDUP_DISTANCE;
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if points[j].0 - points[i].0 >= DEDUP_DISTANCE {
                break;
            }
            if dist_sq(points[i], points[j]) < tol_sq {
                let root = owner[i].min(owner[j]);
                owner[i] = root;
                owner[j] = root;
            }
        }
    }
    // Resolve chains so every point maps to its group's first index.
    for i in 0..n {
        let mut r = owner[i];
        while owner[r] != r {
            r = owner[r];
        }
        owner[i] = r;
    }
    let mut slot = alloc::vec![usize::MAX; n];
    let mut centers = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for i in 0..n {
        let r = owner[i];
        if slot[r] == usize::MAX {
            slot[r] = centers.len();
            centers.push(points[r]);
            sums.push(0.0);
            counts.push(0.0);
        }
        sums[slot[r]] += values[i];
        counts[slot[r]] += 1.0;
    }
    let merged = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    (centers, merged)
}

fn check_inputs(points: &[(f64, f64)], values: &[f64], ridge: f64) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::Shape { expected: points.len(), actual: values.len() });
    }
    ensure!(
        points.iter().all(|p| p.0.is_finite() && p.1.is_finite()) && values.iter().all(|v| v.is_finite()),
        "spline inputs must be finite"
    );
    ensure!(ridge >= 0.0 && ridge.is_finite(), "ridge must be non-negative, got {ridge}");
    Ok(())
}

fn kernel_matrix(centers: &[(f64, f64)], ridge: f64) -> Vec<f64> {
    let n = centers.len();
    let mut g = alloc::vec![0.0; n * n];
    for i in 0..n {
        g[i * n + i] = ridge;
        for j in i + 1..n {
            let v = kernel_sq(dist_sq(centers[i], centers[j]));
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

fn solve_weights(lu: &LuFactors, values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let offset = values.iter().sum::<f64>() / values.len() as f64;
    let rhs: Vec<f64> = values.iter().map(|v| v - offset).collect();
    if rhs.iter().all(|&r| r == 0.0) {
        return Ok((alloc::vec![0.0; values.len()], offset));
    }
    Ok((lu.solve(&rhs)?, offset))
}

/// Fits a biharmonic spline through `(points, values)`.
///
/// With `ridge = 0` the surface passes through every (deduplicated) sample.
/// A singular system is reported rather than silently regularized.
pub fn fit_biharmonic(points: &[(f64, f64)], values: &[f64], ridge: f64) -> Result<SplineModel> {
    check_inputs(points, values, ridge)?;
    ensure!(!points.is_empty(), "spline fit needs at least one point");
    let (centers, merged) = dedup_points(points, values);
    let offset = merged.iter().sum::<f64>() / merged.len() as f64;
    if merged.iter().all(|&v| v == offset) {
        let n = centers.len();
        return SplineModel::new(centers, alloc::vec![0.0; n], offset, ridge);
    }
    let n = centers.len();
    let lu = LuFactors::factor(kernel_matrix(&centers, ridge), n)?;
    let (weights, offset) = solve_weights(&lu, &merged)?;
    SplineModel::new(centers, weights, offset, ridge)
}

/// A biharmonic fit that grows as samples arrive, reusing the factorization
/// of the previous centers.
#[derive(Debug, Clone)]
pub struct IncrementalSpline {
    centers: Vec<(f64, f64)>,
    sums: Vec<f64>,
    counts: Vec<u32>,
    lu: Option<LuFactors>,
    ridge: f64,
}

impl IncrementalSpline {
    pub fn new(ridge: f64) -> Result<Self> {
        ensure!(ridge >= 0.0 && ridge.is_finite(), "ridge must be non-negative, got {ridge}");
        Ok(IncrementalSpline { centers: Vec::new(), sums: Vec::new(), counts: Vec::new(), lu: None, ridge })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Adds samples. Samples landing on an existing center are averaged into
    /// it. On error the spline is left as it was.
    pub fn add(&mut self, points: &[(f64, f64)], values: &[f64]) -> Result<()> {
        check_inputs(points, values, self.ridge)?;
        let tol_sq = DEDUP_DISTANCE * DEDUP_DISTANCE;
        let (fresh, fresh_values) = dedup_points(points, values);
        let mut sums = self.sums.clone();
        let mut counts = self.counts.clone();
        let mut new_centers = Vec::new();
        let mut new_sums = Vec::new();
        for (p, v) in fresh.into_iter().zip(fresh_values) {
            match self.centers.iter().position(|&c| dist_sq(c, p) < tol_sq) {
                Some(i) => {
                    sums[i] += v;
                    counts[i] += 1;
                }
                None => {
                    new_centers.push(p);
                    new_sums.push(v);
                }
            }
        }
        if !new_centers.is_empty() {
            let lu = self.grown_factors(&new_centers)?;
            self.lu = Some(lu);
        }
        let k = new_centers.len();
        self.centers.extend(new_centers);
        sums.extend(new_sums);
        counts.extend(core::iter::repeat(1).take(k));
        self.sums = sums;
        self.counts = counts;
        Ok(())
    }

    fn grown_factors(&self, new_centers: &[(f64, f64)]) -> Result<LuFactors> {
        let n = self.centers.len();
        let k = new_centers.len();
        let mut cols = Vec::with_capacity(n * k);
        for &c in &self.centers {
            cols.extend(new_centers.iter().map(|&p| kernel_sq(dist_sq(c, p))));
        }
        let mut rows = Vec::with_capacity(k * n);
        for &p in new_centers {
            rows.extend(self.centers.iter().map(|&c| kernel_sq(dist_sq(c, p))));
        }
        let corner = kernel_matrix(new_centers, self.ridge);
        let mut lu = match &self.lu {
            Some(lu) => lu.clone(),
            None => return LuFactors::factor(corner, k),
        };
        if lu.extend(&cols, &rows, &corner, k).is_ok() {
            return Ok(lu);
        }
        // Restricted pivoting failed; factor the whole system instead.
        let mut all = self.centers.clone();
        all.extend_from_slice(new_centers);
        LuFactors::factor(kernel_matrix(&all, self.ridge), n + k)
    }

    /// Current interpolant through all samples seen so far.
    pub fn model(&self) -> Result<SplineModel> {
        ensure!(!self.centers.is_empty(), "spline fit needs at least one point");
        let values: Vec<f64> = self.sums.iter().zip(&self.counts).map(|(s, &c)| s / c as f64).collect();
        let offset = values.iter().sum::<f64>() / values.len() as f64;
        if values.iter().all(|&v| v == offset) {
            return SplineModel::new(self.centers.clone(), alloc::vec![0.0; values.len()], offset, self.ridge);
        }
        let lu = self.lu.as_ref().expect("factors exist once centers do");
        let (weights, offset) = solve_weights(lu, &values)?;
        SplineModel::new(self.centers.clone(), weights, offset, self.ridge)
    }
}
