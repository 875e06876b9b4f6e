//! Rectangular areas and the regular lattices used for field evaluation and
//! error metrics.

use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};

/// Axis-aligned rectangle in field coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Area {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let area = Area { x_min, x_max, y_min, y_max };
        area.validate()?;
        Ok(area)
    }

    /// The square `[0, side] × [0, side]`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite()),
            "area bounds must be finite"
        );
        ensure!(self.x_min < self.x_max, "area requires x_min < x_max");
        ensure!(self.y_min < self.y_max, "area requires y_min < y_max");
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diagonal(&self) -> f64 {
        crate::math::sqrt(self.width() * self.width() + self.height() * self.height())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// A `nx × ny` lattice spanning an [`Area`], corners included.
///
/// Values on the lattice are stored row-major with `y` as the outer index:
/// node `(i, j)` lives at `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub area: Area,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(area: Area, nx: usize, ny: usize) -> Result<Self> {
        let spec = GridSpec { area, nx, ny };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        ensure!(self.nx >= 2 && self.ny >= 2, "grid needs nx >= 2 and ny >= 2, got {}x{}", self.nx, self.ny);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        let a = &self.area;
        if i + 1 == self.nx {
            return a.x_max;
        }
        a.x_min + a.width() * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        let a = &self.area;
        if j + 1 == self.ny {
            return a.y_max;
        }
        a.y_min + a.height() * j as f64 / (self.ny - 1) as f64
    }

    /// Node coordinates in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| {
            let y = self.y(j);
            (0..self.nx).map(move |i| (self.x(i), y))
        })
    }
}

/// Values sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Shape { expected: spec.len(), actual: values.len() });
        }
        Ok(Grid { spec, values })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = spec.points().map(|(x, y)| f(x, y)).collect();
        Grid { spec, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// `(min, max)` over all nodes.
    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}
