//! Synthetic trajectory and billboard databases.
//!
//! Billboards sit at uniformly drawn locations. Each trajectory tuple picks a
//! user uniformly, a location by Zipf weight `1 / (rank + 1)^s`, a dwell time
//! uniformly from the configured range and a start time uniformly such that
//! the whole visit lies inside the horizon.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{
    write_billboards, write_trajectories, BillboardRecord, TrajectoryTuple, Window,
};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub billboards: usize,
    pub locations: usize,
    pub users: usize,
    pub tuples: usize,
    pub t_start: i64,
    pub t_end: i64,
    pub slot_seconds: i64,
    /// Zipf exponent over location ranks; 0 is uniform.
    pub zipf_exponent: f64,
    pub dwell_min: i64,
    pub dwell_max: i64,
    pub panel_min: u32,
    pub panel_max: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            billboards: 50,
            locations: 120,
            users: 2000,
            tuples: 20_000,
            t_start: 0,
            t_end: 86_400,
            slot_seconds: 3600,
            zipf_exponent: 1.0,
            dwell_min: 300,
            dwell_max: 3600,
            panel_min: 100,
            panel_max: 1000,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn horizon(&self) -> Window {
        Window::new(self.t_start, self.t_end)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SyntheticSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.billboards == 0 || self.locations == 0 || self.users == 0 || self.tuples == 0 {
            return fail("billboard, location, user and tuple counts must be positive".into());
        }
        if self.t_end <= self.t_start {
            return fail(format!("empty horizon [{}, {})", self.t_start, self.t_end));
        }
        if self.slot_seconds <= 0 || (self.t_end - self.t_start) % self.slot_seconds != 0 {
            return fail(format!(
                "horizon length {} is not a positive multiple of slot_seconds {}",
                self.t_end - self.t_start,
                self.slot_seconds
            ));
        }
        if self.dwell_min < 1
            || self.dwell_min > self.dwell_max
            || self.dwell_max > self.t_end - self.t_start
        {
            return fail(format!(
                "dwell range [{}, {}] must satisfy 1 <= min <= max <= horizon length",
                self.dwell_min, self.dwell_max
            ));
        }
        if self.panel_min == 0 || self.panel_min > self.panel_max {
            return fail(format!(
                "panel range [{}, {}] must be positive and ordered",
                self.panel_min, self.panel_max
            ));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return fail(format!(
                "zipf_exponent must be non-negative, got {}",
                self.zipf_exponent
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub trajectories: Vec<TrajectoryTuple>,
    pub billboards: Vec<BillboardRecord>,
}

/// Inverse-CDF sampler over ranks `0..n` with weight `1 / (rank + 1)^s`.
#[derive(Debug, Clone)]
pub struct ZipfRanks {
    cumulative: Vec<f64>,
}

impl ZipfRanks {
    pub fn new(n: usize, exponent: f64) -> Self {
        let mut total = 0.0;
        let cumulative = (0..n)
            .map(|i| {
                total += ((i + 1) as f64).powf(-exponent);
                total
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cumulative.last().expect("at least one rank");
        let x = rng.unit() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

pub fn location_name(i: usize) -> String {
    format!("loc{i:04}")
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);

    let billboards = (0..spec.billboards)
        .map(|i| {
            let loc = rng.below(spec.locations as u64) as usize;
            let panel = rng.range_inclusive(spec.panel_min as i64, spec.panel_max as i64);
            let cost = 1 + rng.below(10);
            BillboardRecord {
                billboard_id: format!("b{i:04}"),
                loc: location_name(loc),
                cost: cost as f64,
                panel_size: panel as f64,
            }
        })
        .collect();

    let zipf = ZipfRanks::new(spec.locations, spec.zipf_exponent);
    let trajectories = (0..spec.tuples)
        .map(|_| {
            let user = rng.below(spec.users as u64);
            let loc = zipf.sample(&mut rng);
            let dwell = rng.range_inclusive(spec.dwell_min, spec.dwell_max);
            let start = rng.range_inclusive(spec.t_start, spec.t_end - dwell);
            TrajectoryTuple {
                user_id: format!("u{user:05}"),
                loc: location_name(loc),
                t_start: start,
                t_end: start + dwell,
            }
        })
        .collect();

    Ok(SyntheticInstance {
        trajectories,
        billboards,
    })
}

/// Writes `trajectories.csv` and `billboards.csv` into `dir`.
pub fn write_instance(
    instance: &SyntheticInstance,
    dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trajectories = dir.join("trajectories.csv");
    let billboards = dir.join("billboards.csv");
    write_trajectories(&trajectories, &instance.trajectories)?;
    write_billboards(&billboards, &instance.billboards)?;
    Ok((trajectories, billboards))
}
