//! Independent oracles for the numerical building blocks: closed-form normal
//! moments, exhaustive level search, brute-force query scans.

use dwis_core::levels::{lloyd_max, uniform_levels};
use dwis_core::{
    fit_biharmonic, Area, ContourLevels, Field, FieldParams, GaussianComponent, GridSpec, LevelScheme, LloydMaxOptions,
    Pdf1D, SensorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal truncated to `[-6, 6]`, as bin masses on a fine lattice.
fn truncated_normal(bins: usize) -> Pdf1D {
    let edges: Vec<f64> = (0..=bins).map(|i| -6.0 + 12.0 * i as f64 / bins as f64).collect();
    let masses: Vec<f64> = edges.windows(2).map(|w| std_normal_cdf(w[1]) - std_normal_cdf(w[0])).collect();
    Pdf1D::from_bin_masses(edges, &masses).unwrap()
}

/// `∫_a^c (x − l)² φ(x) dx` in closed form.
fn normal_cell_distortion(a: f64, c: f64, l: f64) -> f64 {
    let p0 = std_normal_cdf(c) - std_normal_cdf(a);
    let p1 = std_normal_pdf(a) - std_normal_pdf(c);
    let p2 = p0 + a * std_normal_pdf(a) - c * std_normal_pdf(c);
    p2 - 2.0 * l * p1 + l * l * p0
}

#[test]
fn lloyd_max_two_level_gaussian() {
    let pdf = truncated_normal(120_000);
    let lm = lloyd_max(&pdf, 2, &LloydMaxOptions::default()).unwrap();
    let expected = (2.0 / std::f64::consts::PI).sqrt();
    assert!((lm.levels[0] + expected).abs() < 1e-4, "{:?}", lm.levels);
    assert!((lm.levels[1] - expected).abs() < 1e-4, "{:?}", lm.levels);

    // Exhaustive search over level pairs at 1e-3 resolution with the
    // closed-form distortion (total mass outside ±6 is negligible).
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=2000 {
        let l1 = -2.0 + i as f64 * 1e-3;
        for j in 0..=2000 {
            let l2 = j as f64 * 1e-3;
            let b = 0.5 * (l1 + l2);
            let d = normal_cell_distortion(-6.0, b, l1) + normal_cell_distortion(b, 6.0, l2);
            if d < best.0 {
                best = (d, l1, l2);
            }
        }
    }
    assert!((best.1 - lm.levels[0]).abs() <= 1e-3 + 1e-9);
    assert!((best.2 - lm.levels[1]).abs() <= 1e-3 + 1e-9);
    assert!(lm.distortion <= best.0 + 1e-9);
    assert!((lm.distortion - best.0).abs() < 1e-6);
}

/// Mean squared error of nearest-level quantization by midpoint-rule
/// integration of a piecewise-constant density.
fn brute_distortion(edges: &[f64], densities: &[f64], levels: &[f64], steps_per_bin: usize) -> f64 {
    let mut total = 0.0;
    for (w, d) in edges.windows(2).zip(densities) {
        let h = (w[1] - w[0]) / steps_per_bin as f64;
        for s in 0..steps_per_bin {
            let x = w[0] + (s as f64 + 0.5) * h;
            let e = levels.iter().map(|l| (x - l) * (x - l)).fold(f64::INFINITY, f64::min);
            total += d * e * h;
        }
    }
    total
}

/// Calls `visit` with every strictly increasing `m`-subset of `grid`.
fn exhaustive(grid: &[f64], start: usize, m: usize, levels: &mut Vec<f64>, visit: &mut impl FnMut(&[f64])) {
    if levels.len() == m {
        visit(levels);
        return;
    }
    for i in start..grid.len() {
        levels.push(grid[i]);
        exhaustive(grid, i + 1, m, levels, visit);
        levels.pop();
    }
}

#[test]
fn lloyd_max_matches_exhaustive_search() {
    let shapes: [&[f64]; 3] = [
        &[1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0],
        &[8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0],
        &[1.0, 3.0, 6.0, 9.0, 9.0, 6.0, 3.0, 1.0],
    ];
    let res = 0.01;
    let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) * res).collect();
    for masses in shapes {
        let edges: Vec<f64> = (0..=masses.len()).map(|i| i as f64 / masses.len() as f64).collect();
        let pdf = Pdf1D::from_bin_masses(edges.clone(), masses).unwrap();
        for m in 1..=3usize {
            let lm = lloyd_max(&pdf, m, &LloydMaxOptions::default()).unwrap();
            let mut best = f64::INFINITY;
            let mut levels = Vec::with_capacity(m);
            exhaustive(&grid, 0, m, &mut levels, &mut |ls| {
                best = best.min(brute_distortion(&edges, pdf.densities(), ls, 40));
            });
            let lm_brute = brute_distortion(&edges, pdf.densities(), &lm.levels, 400);
            assert!((lm.distortion - lm_brute).abs() < 1e-6, "closed form {} vs {}", lm.distortion, lm_brute);
            // Grid search can only match or beat a continuous optimum by the
            // grid's discretization error, about (res/2)² of spread.
            assert!(lm.distortion <= best + 1e-6, "m={m}: {} vs grid {}", lm.distortion, best);
            assert!(best - lm.distortion < res * res, "m={m}: {} vs grid {}", lm.distortion, best);
        }
    }
}

#[test]
fn uniform_pdf_is_fixed_point_for_all_sizes() {
    let pdf = Pdf1D::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![1.0; 4]).unwrap();
    for m in [1, 2, 4, 8] {
        let lm = lloyd_max(&pdf, m, &LloydMaxOptions::default()).unwrap();
        let u = uniform_levels(0.0, 1.0, m).unwrap();
        assert!(lm.levels.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

#[test]
fn spline_exact_at_200_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<(f64, f64)> = (0..200).map(|_| (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
    let vals: Vec<f64> = (0..200).map(|_| rng.random_range(-5.0..20.0)).collect();
    let started = std::time::Instant::now();
    let model = fit_biharmonic(&pts, &vals, 0.0).unwrap();
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (p, v) in pts.iter().zip(&vals) {
        assert!((model.eval(p.0, p.1) - v).abs() <= 1e-8 * max_abs);
    }
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn spline_recovers_smooth_bump() {
    let area = Area::square(100.0).unwrap();
    let field = Field::new(vec![
        GaussianComponent::new(10.0, 40.0, 55.0, 20.0).unwrap(),
        GaussianComponent::new(4.0, 75.0, 20.0, 12.0).unwrap(),
    ])
    .unwrap();
    let sensors = SensorField::deploy(500, area, 21).unwrap();
    let pts: Vec<(f64, f64)> = sensors.sensors().iter().map(|s| (s.x, s.y)).collect();
    let vals = field.eval_points(&pts).unwrap();
    let model = fit_biharmonic(&pts, &vals, 0.0).unwrap();
    let spec = GridSpec::new(area, 60, 60).unwrap();
    let truth = field.eval_grid(&spec);
    let recon = model.eval_grid(&spec);
    let n = truth.values.len() as f64;
    let mean = truth.values.iter().sum::<f64>() / n;
    let std = (truth.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let rmse = (truth.values.iter().zip(&recon.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
    assert!(rmse < 0.05 * std, "rmse {rmse} std {std}");
}

#[test]
fn query_matches_brute_force_scan() {
    let area = Area::square(100.0).unwrap();
    let mut params = FieldParams::standard();
    params.n1 = 20;
    params.n2 = 20;
    let field = Field::build(&params, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..20 {
        let mut sensors = SensorField::deploy(300, area, trial).unwrap();
        let obs = sensors.observe(&field);
        let (lo, hi) = obs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
        let m = rng.random_range(1..8);
        let delta = rng.random_range(0.01..0.5);
        let levels = ContourLevels::new(uniform_levels(lo, hi, m).unwrap(), delta, LevelScheme::USg, (lo, hi)).unwrap();

        // A first query with other levels pre-reports some sensors.
        let probe = ContourLevels::new(vec![0.5 * (lo + hi)], 0.3, LevelScheme::USg, (lo, hi)).unwrap();
        let pre: Vec<usize> =
            sensors.contour_query_observed(&obs, &probe, true).unwrap().iter().map(|r| r.sensor_id).collect();
        let first = sensors.contour_query_observed(&obs, &levels, true).unwrap();
        let expected: Vec<usize> = (0..300)
            .filter(|i| !pre.contains(i))
            .filter(|&i| levels.levels().iter().any(|l| (obs[i] - l).abs() <= delta))
            .collect();
        let got: Vec<usize> = first.iter().map(|r| r.sensor_id).collect();
        assert_eq!(got, expected);
        for r in &first {
            let gap = levels.levels().iter().map(|l| (r.value - l).abs()).fold(f64::INFINITY, f64::min);
            assert!(gap <= delta);
        }
        assert!(sensors.contour_query_observed(&obs, &levels, true).unwrap().is_empty());
        assert_eq!(sensors.reported_count(), pre.len() + first.len());
    }
}
