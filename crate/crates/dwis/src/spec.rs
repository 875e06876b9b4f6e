//! TOML experiment specs and their sweep cells.

use std::fmt;
use std::path::{Path, PathBuf};

use dwis_core::{Area, DwisConfig, EvolveParams, FieldParams, GridSpec, LevelScheme, LloydMaxOptions, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str) -> impl FnOnce(dwis_core::Error) -> SpecError {
    move |e| SpecError::Invalid { field, message: e.to_string() }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSection {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub n1: usize,
    pub n2: usize,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub amp_a: [f64; 2],
    pub amp_b: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorsSection {
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwisSection {
    pub m0: usize,
    pub p: usize,
    pub spatial_iters: usize,
    pub temporal_steps: usize,
    pub pilot_fraction: f64,
    pub pdf_bins: usize,
    pub ridge_rel: f64,
    /// Absolute margin floor. Defaults to a hundredth of each cell's `delta0`.
    pub delta_min: Option<f64>,
    pub lloyd_tol: Option<f64>,
    pub lloyd_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub drift_sigma: f64,
    pub amp_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub schemes: Vec<LevelScheme>,
    pub mu: Vec<f64>,
    pub delta0: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// A full experiment: one world recipe and the sweep axes run over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub output: OutputSection,
    pub area: AreaSection,
    pub field: FieldSection,
    pub grid: GridSection,
    pub sensors: SensorsSection,
    pub dwis: DwisSection,
    pub evolution: EvolutionSection,
    pub sweep: SweepSection,
}

/// One point of the sweep cross product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub scheme: LevelScheme,
    pub mu: f64,
    pub delta0: f64,
    pub seed: u64,
}

impl Cell {
    /// File-name-safe identifier, unique within a sweep.
    pub fn id(&self) -> String {
        format!("{:04}_{}_mu{}_d{}_s{}", self.index, self.scheme.name(), self.mu, self.delta0, self.seed)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mu={} delta0={} seed={}", self.scheme, self.mu, self.delta0, self.seed)
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads, parses and validates a spec file.
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Read { path: path.into(), source })?;
        let spec = Self::from_toml(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn area(&self) -> Area {
        let a = self.area;
        Area { x_min: a.x_min, x_max: a.x_max, y_min: a.y_min, y_max: a.y_max }
    }

    pub fn scenario(&self) -> Scenario {
        let f = self.field;
        let area = self.area();
        Scenario {
            field: FieldParams {
                n1: f.n1,
                n2: f.n2,
                sigma_a: f.sigma_a,
                sigma_b: f.sigma_b,
                amp_a: (f.amp_a[0], f.amp_a[1]),
                amp_b: (f.amp_b[0], f.amp_b[1]),
                area,
            },
            sensors: self.sensors.count,
            grid: GridSpec { area, nx: self.grid.nx, ny: self.grid.ny },
            evolution: EvolveParams {
                dt: self.evolution.dt,
                drift_sigma: self.evolution.drift_sigma,
                amp_jitter: self.evolution.amp_jitter,
            },
        }
    }

    pub fn config(&self, scheme: LevelScheme, mu: f64, delta0: f64) -> DwisConfig {
        let d = self.dwis;
        let defaults = LloydMaxOptions::default();
        DwisConfig {
            scheme,
            m0: d.m0,
            p: d.p,
            delta0,
            mu,
            spatial_iters: d.spatial_iters,
            pilot_fraction: d.pilot_fraction,
            temporal_steps: d.temporal_steps,
            delta_min: d.delta_min.unwrap_or(delta0 / 100.0),
            pdf_bins: d.pdf_bins,
            ridge_rel: d.ridge_rel,
            lloyd: LloydMaxOptions {
                tol: d.lloyd_tol.unwrap_or(defaults.tol),
                max_iter: d.lloyd_max_iter.unwrap_or(defaults.max_iter),
            },
        }
    }

    /// Cells in the order schemes, then `mu`, then `delta0`, then seeds.
    pub fn cells(&self) -> Vec<Cell> {
        let s = &self.sweep;
        let mut cells = Vec::with_capacity(s.schemes.len() * s.mu.len() * s.delta0.len() * s.seeds.len());
        for &scheme in &s.schemes {
            for &mu in &s.mu {
                for &delta0 in &s.delta0 {
                    for &seed in &s.seeds {
                        cells.push(Cell { index: cells.len(), scheme, mu, delta0, seed });
                    }
                }
            }
        }
        cells
    }

    /// Checks the world recipe and every sweep axis value without running anything.
    pub fn validate(&self) -> Result<(), SpecError> {
        let scenario = self.scenario();
        self.area().validate().map_err(invalid("area"))?;
        scenario.field.validate().map_err(invalid("field"))?;
        scenario.grid.validate().map_err(invalid("grid"))?;
        scenario.evolution.validate().map_err(invalid("evolution"))?;
        if scenario.sensors == 0 {
            return Err(SpecError::Invalid { field: "sensors.count", message: "must be at least 1".into() });
        }
        // Axis values are checked one at a time against a known-good
        // partner so the message names the offending axis.
        let probe_delta = self.sweep.delta0.first().copied().unwrap_or(1.0);
        for &mu in &self.sweep.mu {
            DwisConfig { delta_min: probe_delta / 100.0, ..self.config(LevelScheme::USg, mu, probe_delta) }
                .validate()
                .map_err(invalid("sweep.mu"))?;
        }
        for &delta0 in &self.sweep.delta0 {
            DwisConfig { delta_min: delta0 / 100.0, ..self.config(LevelScheme::USg, 0.5, delta0) }
                .validate()
                .map_err(invalid("sweep.delta0"))?;
        }
        for &delta0 in &self.sweep.delta0 {
            self.config(LevelScheme::USg, 0.5, delta0).validate().map_err(invalid("dwis"))?;
        }
        if self.sweep.delta0.is_empty() {
            self.config(LevelScheme::USg, 0.5, 1.0).validate().map_err(invalid("dwis"))?;
        }
        Ok(())
    }
}

/// The standard experimental setup as a spec file body.
pub const STANDARD_SPEC: &str = include_str!("../specs/standard.toml");

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> ExperimentSpec {
        ExperimentSpec::from_toml(STANDARD_SPEC).unwrap()
    }

    #[test]
    fn standard_spec_matches_defaults() {
        let spec = standard();
        spec.validate().unwrap();
        assert_eq!(spec.scenario(), Scenario::standard());
        let c = spec.config(LevelScheme::LmSg, 0.3, 0.2);
        assert_eq!(c, DwisConfig::standard(LevelScheme::LmSg, 0.3, 0.2));
    }

    #[test]
    fn cells_are_the_ordered_product() {
        let mut spec = standard();
        spec.sweep = SweepSection {
            schemes: vec![LevelScheme::USg, LevelScheme::LmFix],
            mu: vec![0.3, 0.7, 1.0],
            delta0: vec![0.1, 0.4],
            seeds: vec![5, 6],
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 2 * 3 * 2 * 2);
        assert_eq!((cells[0].scheme, cells[0].mu, cells[0].delta0, cells[0].seed), (LevelScheme::USg, 0.3, 0.1, 5));
        assert_eq!((cells[1].delta0, cells[1].seed), (0.1, 6));
        assert_eq!((cells[2].delta0, cells[2].seed), (0.4, 5));
        assert_eq!(cells[23].scheme, LevelScheme::LmFix);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
        let ids: std::collections::HashSet<_> = cells.iter().map(Cell::id).collect();
        assert_eq!(ids.len(), cells.len());
        spec.sweep.seeds.clear();
        assert!(spec.cells().is_empty());
    }

    #[test]
    fn rejects_out_of_range_mu() {
        let text = STANDARD_SPEC.replace("mu = [0.3, 0.7]", "mu = [0.3, 1.5]");
        let err = ExperimentSpec::from_toml(&text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("sweep.mu") && err.contains("0 <= mu <= 1"), "{err}");
    }

    #[test]
    fn names_missing_and_unknown_fields() {
        let text = STANDARD_SPEC.replace("count = 5000", "");
        let err = ExperimentSpec::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("count"), "{err}");
        let text = STANDARD_SPEC.replace("count = 5000", "count = 5000\ncuont = 1");
        let err = ExperimentSpec::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("cuont"), "{err}");
    }

    #[test]
    fn scheme_names_parse() {
        let text = STANDARD_SPEC.replace("schemes = [\"U-SG\", \"LM-SG\", \"LM-fix\"]", "schemes = [\"LM_FIX\"]");
        assert_eq!(ExperimentSpec::from_toml(&text).unwrap().sweep.schemes, vec![LevelScheme::LmFix]);
        let text = STANDARD_SPEC.replace("\"LM-SG\"", "\"LM-XX\"");
        assert!(ExperimentSpec::from_toml(&text).is_err());
    }
}
