//! Sensor deployment and the contour-margin query protocol.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{ensure, Error, Result};
use crate::field::Field;
use crate::grid::Area;
use crate::levels::ContourLevels;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sensor {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// A sensor's answer to a query: its position and its (noiseless)
/// observation at query time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryReply {
    pub sensor_id: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// The deployed network plus the report-once bookkeeping of the current
/// spatial phase. Sensor ids are their indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorField {
    sensors: Vec<Sensor>,
    reported: Vec<bool>,
    reported_count: usize,
    area: Area,
}

impl SensorField {
    /// Places `n` sensors i.i.d. uniform over `area`.
    pub fn deploy(n: usize, area: Area, seed: u64) -> Result<Self> {
        ensure!(n >= 1, "sensor count must be at least 1");
        area.validate()?;
        let mut rng = crate::seed::rng(seed);
        let sensors = (0..n)
            .map(|id| Sensor {
                id,
                x: rng.random_range(area.x_min..=area.x_max),
                y: rng.random_range(area.y_min..=area.y_max),
            })
            .collect();
        Ok(Self::from_sensors_unchecked(sensors, area))
    }

    /// Builds a field from explicit positions. Ids are reassigned to indices.
    pub fn from_positions(positions: &[(f64, f64)], area: Area) -> Result<Self> {
        ensure!(!positions.is_empty(), "sensor count must be at least 1");
        area.validate()?;
        for &(x, y) in positions {
            ensure!(area.contains(x, y), "sensor at ({x}, {y}) lies outside the area");
        }
        let sensors = positions.iter().enumerate().map(|(id, &(x, y))| Sensor { id, x, y }).collect();
        Ok(Self::from_sensors_unchecked(sensors, area))
    }

    fn from_sensors_unchecked(sensors: Vec<Sensor>, area: Area) -> Self {
        let n = sensors.len();
        SensorField { sensors, reported: alloc::vec![false; n], reported_count: 0, area }
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn area(&self) -> Area {
        self.area
    }

    pub fn is_reported(&self, id: usize) -> bool {
        self.reported.get(id).copied().unwrap_or(false)
    }

    pub fn reported_count(&self) -> usize {
        self.reported_count
    }

    /// Ids in the reported set, ascending.
    pub fn reported_ids(&self) -> Vec<usize> {
        self.reported.iter().enumerate().filter_map(|(id, &r)| r.then_some(id)).collect()
    }

    /// Re-enables every sensor.
    pub fn reset_reported(&mut self) {
        self.reported.iter_mut().for_each(|r| *r = false);
        self.reported_count = 0;
    }

    /// Noiseless observations `S_k = g(x_k, y_k)`, indexed by sensor id.
    pub fn observe(&self, field: &Field) -> Vec<f64> {
        self.sensors.iter().map(|s| field.eval(s.x, s.y)).collect()
    }

    /// Queries the network with `levels`. See [`SensorField::contour_query_observed`].
    pub fn contour_query(
        &mut self,
        field: &Field,
        levels: &ContourLevels,
        respect_report_once: bool,
    ) -> Vec<QueryReply> {
        let obs = self.observe(field);
        self.contour_query_observed(&obs, levels, respect_report_once)
            .expect("observation vector sized from this sensor field")
    }

    /// Every sensor with `ℓ_j − Δ ≤ S_k ≤ ℓ_j + Δ` for some level replies once,
    /// however many levels it is close to. With `respect_report_once`,
    /// sensors already in the reported set stay silent. Repliers join the
    /// reported set.
    pub fn contour_query_observed(
        &mut self,
        observations: &[f64],
        levels: &ContourLevels,
        respect_report_once: bool,
    ) -> Result<Vec<QueryReply>> {
        if observations.len() != self.sensors.len() {
            return Err(Error::Shape { expected: self.sensors.len(), actual: observations.len() });
        }
        let mut replies = Vec::new();
        for (sensor, &value) in self.sensors.iter().zip(observations) {
            if respect_report_once && self.reported[sensor.id] {
                continue;
            }
            if levels.within_margin(value) {
                replies.push(QueryReply { sensor_id: sensor.id, x: sensor.x, y: sensor.y, value });
            }
        }
        for r in &replies {
            self.mark_reported(r.sensor_id);
        }
        Ok(replies)
    }

    /// Draws `count` distinct unreported sensors uniformly at random and
    /// collects their observations. Used to bootstrap the signal range.
    pub fn pilot_sample(&mut self, observations: &[f64], count: usize, seed: u64) -> Result<Vec<QueryReply>> {
        if observations.len() != self.sensors.len() {
            return Err(Error::Shape { expected: self.sensors.len(), actual: observations.len() });
        }
        let pool: Vec<usize> = (0..self.sensors.len()).filter(|&id| !self.reported[id]).collect();
        ensure!(count <= pool.len(), "pilot of {count} exceeds {} available sensors", pool.len());
        let mut rng = crate::seed::rng(seed);
        let mut picked: Vec<usize> =
            rand::seq::index::sample(&mut rng, pool.len(), count).into_iter().map(|i| pool[i]).collect();
        picked.sort_unstable();
        let replies: Vec<QueryReply> = picked
            .iter()
            .map(|&id| {
                let s = self.sensors[id];
                QueryReply { sensor_id: id, x: s.x, y: s.y, value: observations[id] }
            })
            .collect();
        for &id in &picked {
            self.mark_reported(id);
        }
        Ok(replies)
    }

    fn mark_reported(&mut self, id: usize) {
        if !self.reported[id] {
            self.reported[id] = true;
            self.reported_count += 1;
        }
    }
}
