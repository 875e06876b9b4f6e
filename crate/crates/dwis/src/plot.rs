//! Minimal SVG line charts rebuilt from a sweep's CSV files.
//!
//! Plots read only the manifest and per-cell traces, so re-plotting an
//! output directory reproduces the same SVGs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::formats::{self, Phase, TraceRow};
use crate::sweep::{self, ManifestRow, Status};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
/// Colour index for reference lines.
pub const NEUTRAL: usize = usize::MAX;

fn stroke(color: usize) -> &'static str {
    if color == NEUTRAL {
        "#7f7f7f"
    } else {
        PALETTE[color % PALETTE.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Legend entry. Unlabelled series share the colour of a labelled one.
    pub label: Option<String>,
    pub color: usize,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(chart: &Chart) -> ((f64, f64), (f64, f64)) {
    let pts = chart.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let widen = |lo: f64, hi: f64| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
        } else {
            (lo, hi)
        }
    };
    let (y0, y1) = widen(y0, y1);
    let pad = 0.05 * (y1 - y0);
    (widen(x0, x1), (y0 - pad, y1 + pad))
}

pub fn render_svg(chart: &Chart) -> String {
    let ((x0, x1), (y0, y1)) = bounds(chart);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e6e6e6"/>"##, TOP + ph);
        let _ =
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e6e6e6"/>"##, LEFT + pw);
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    for series in &chart.series {
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.6"{dash} points="{}"/>"#,
            stroke(series.color),
            pts.join(" ")
        );
    }

    let mut ly = TOP + 8.0;
    for series in chart.series.iter().filter(|s| s.label.is_some()) {
        let lx = LEFT + pw + 14.0;
        let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            lx + 24.0,
            stroke(series.color)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(series.label.as_deref().unwrap_or(""))
        );
        ly += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

/// A finished cell and its trace.
#[derive(Debug, Clone)]
pub struct CellTrace {
    pub row: ManifestRow,
    pub trace: Vec<TraceRow>,
}

/// Loads every successful cell listed in `dir`'s manifest.
pub fn load_cells(dir: &Path) -> anyhow::Result<Vec<CellTrace>> {
    let rows = sweep::read_manifest(&dir.join(sweep::MANIFEST))?;
    rows.into_iter()
        .filter(|r| r.status == Status::Ok)
        .map(|row| {
            let path = dir.join(&row.file);
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let trace = formats::read_trace(file).with_context(|| format!("reading {}", path.display()))?;
            Ok(CellTrace { row, trace })
        })
        .collect()
}

/// Seed-averaged curves, one per (scheme, mu, delta0) in manifest order.
struct Group {
    label: String,
    cells: Vec<usize>,
}

fn groups(cells: &[CellTrace]) -> Vec<Group> {
    let distinct = |f: fn(&ManifestRow) -> u64| {
        let mut v: Vec<u64> = cells.iter().map(|c| f(&c.row)).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let many_mu = distinct(|r| r.mu.to_bits()) > 1;
    let many_delta = distinct(|r| r.delta0.to_bits()) > 1;
    let mut out: Vec<Group> = Vec::new();
    let mut index: BTreeMap<(String, u64, u64), usize> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        let key = (c.row.scheme.name().to_string(), c.row.mu.to_bits(), c.row.delta0.to_bits());
        let g = *index.entry(key).or_insert_with(|| {
            let mut label = c.row.scheme.name().to_string();
            if many_mu {
                let _ = write!(label, " μ={}", c.row.mu);
            }
            if many_delta {
                let _ = write!(label, " Δ0={}", c.row.delta0);
            }
            out.push(Group { label, cells: Vec::new() });
            out.len() - 1
        });
        out[g].cells.push(i);
    }
    out
}

fn mean_curve(
    cells: &[CellTrace],
    members: &[usize],
    phase: Phase,
    value: impl Fn(&TraceRow) -> f64,
) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &i in members {
        for row in cells[i].trace.iter().filter(|r| r.phase == phase) {
            let e = acc.entry(row.k).or_insert((0.0, 0));
            e.0 += value(row);
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (sum, n))| (k as f64, sum / n as f64)).collect()
}

fn decibels(count: f64) -> f64 {
    // Zero replies are drawn at 0 dB, the level of a single reply.
    10.0 * count.max(1.0).log10()
}

fn line_chart(
    cells: &[CellTrace],
    title: &str,
    x_label: &str,
    y_label: &str,
    phase: Phase,
    value: impl Fn(&TraceRow) -> f64 + Copy,
) -> Chart {
    let series = groups(cells)
        .into_iter()
        .enumerate()
        .map(|(i, g)| Series {
            label: Some(g.label),
            color: i,
            dashed: false,
            points: mean_curve(cells, &g.cells, phase, value),
        })
        .collect();
    Chart { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series }
}

fn range_chart(cells: &[CellTrace]) -> Chart {
    let mut series = Vec::new();
    let mut ks: Vec<f64> = Vec::new();
    for (i, g) in groups(cells).into_iter().enumerate() {
        let hi = mean_curve(cells, &g.cells, Phase::Spatial, |r| r.range_hi);
        let lo = mean_curve(cells, &g.cells, Phase::Spatial, |r| r.range_lo);
        ks.extend(hi.iter().map(|p| p.0));
        series.push(Series { label: Some(g.label), color: i, dashed: false, points: hi });
        series.push(Series { label: None, color: i, dashed: false, points: lo });
    }
    // The truth depends only on the seed, so it is averaged over every cell.
    let all: Vec<usize> = (0..cells.len()).collect();
    let (k0, k1) = ks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
    if k0.is_finite() {
        for (j, value) in [|r: &TraceRow| r.range_hi, |r: &TraceRow| r.range_lo].into_iter().enumerate() {
            if let Some(&(_, v)) = mean_curve(cells, &all, Phase::Truth, value).first() {
                let label = (j == 0).then(|| "true range".to_string());
                series.push(Series { label, color: NEUTRAL, dashed: true, points: vec![(k0, v), (k1, v)] });
            }
        }
    }
    Chart {
        title: "Signal range estimate".into(),
        x_label: "spatial iteration".into(),
        y_label: "signal value".into(),
        series,
    }
}

/// The six standard figures for a set of cells, by file name.
pub fn figures(cells: &[CellTrace], db_axis: bool) -> Vec<(&'static str, Chart)> {
    let cost_label = if db_axis { "replies (dB)" } else { "replies" };
    let cost = move |v: usize| if db_axis { decibels(v as f64) } else { v as f64 };
    vec![
        (
            "fig1_spatial_rmse.svg",
            line_chart(cells, "Spatial modeling error", "spatial iteration", "modeling RMSE", Phase::Spatial, |r| {
                r.modeling_rmse
            }),
        ),
        (
            "fig2_temporal_rmse.svg",
            line_chart(cells, "Temporal modeling error", "temporal step", "modeling RMSE", Phase::Temporal, |r| {
                r.modeling_rmse
            }),
        ),
        (
            "fig3_cumulative_cost.svg",
            line_chart(cells, "Cumulative spatial cost", "spatial iteration", cost_label, Phase::Spatial, move |r| {
                cost(r.cum_cost)
            }),
        ),
        (
            "fig4_temporal_cost.svg",
            line_chart(cells, "Cost per temporal step", "temporal step", cost_label, Phase::Temporal, move |r| {
                cost(r.cost)
            }),
        ),
        ("fig5_range.svg", range_chart(cells)),
        ("fig6_delta.svg", line_chart(cells, "Contour margin", "spatial iteration", "Δ", Phase::Spatial, |r| r.delta)),
    ]
}

/// Re-plots the figures of an output directory from its CSV files.
pub fn write_figures(dir: &Path, db_axis: bool) -> anyhow::Result<Vec<PathBuf>> {
    let cells = load_cells(dir)?;
    figures(&cells, db_axis)
        .into_iter()
        .map(|(name, chart)| {
            let path = dir.join(name);
            fs::write(&path, render_svg(&chart)).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(0.013, 0.087);
        assert!(
            t.len() >= 3 && t.iter().all(|v| (v * 100.0).round() == v * 100.0 || (v * 1000.0).round() == v * 1000.0)
        );
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(3.0), "3");
        assert_eq!(tick_label(2e-5), "2.0e-5");
    }

    #[test]
    fn decibel_axis() {
        assert_eq!(decibels(0.0), 0.0);
        assert_eq!(decibels(1.0), 0.0);
        assert!((decibels(1000.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let chart = Chart {
            title: "a < b".into(),
            x_label: "k".into(),
            y_label: "v".into(),
            series: vec![
                Series { label: Some("one".into()), color: 0, dashed: false, points: vec![(1.0, 2.0), (2.0, 1.0)] },
                Series { label: None, color: 0, dashed: true, points: vec![(1.0, 0.5), (2.0, 0.5)] },
                Series { label: Some("empty".into()), color: 1, dashed: false, points: vec![] },
            ],
        };
        let svg = render_svg(&chart);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert_eq!(render_svg(&chart), svg);
    }

    #[test]
    fn empty_chart_renders() {
        let chart = Chart { title: "t".into(), x_label: "x".into(), y_label: "y".into(), series: vec![] };
        let svg = render_svg(&chart);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
