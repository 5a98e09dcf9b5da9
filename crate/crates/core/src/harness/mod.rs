//! End-to-end runs: ingest, preprocess, prune, select, report.

pub mod canonical;
pub mod generate;
pub mod oracle;
mod sweep;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    build_catalog, build_exposure, load_billboards, load_probabilities, load_trajectories,
    ExposureMatrix, ProbabilityModel, SlotCatalog, SlotId, TrajectoryTuple, Window,
};
use crate::error::{Error, Result};
use crate::influence::{influence, singleton_influences};
use crate::psg::{preprocess, prune, reference_reduced_size, PruneConfig, PruneOutcome};
use crate::rng::SeededRng;
use crate::select::{greedy, max_cov, random_k, top_k, Selection};

pub use canonical::to_canonical_json;
pub use generate::{generate, write_instance, SyntheticInstance, SyntheticSpec};
pub use oracle::{brute_force_opt, ORACLE_LIMIT};
pub use sweep::{sweep, sweep_csv, write_sweep_csv, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PsgGreedy,
    Greedy,
    LazyGreedy,
    TopK,
    MaxCov,
    Random,
    PsgRandom,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::PsgGreedy,
        Algorithm::Greedy,
        Algorithm::LazyGreedy,
        Algorithm::TopK,
        Algorithm::MaxCov,
        Algorithm::Random,
        Algorithm::PsgRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PsgGreedy => "psg-greedy",
            Algorithm::Greedy => "greedy",
            Algorithm::LazyGreedy => "lazy-greedy",
            Algorithm::TopK => "top-k",
            Algorithm::MaxCov => "max-cov",
            Algorithm::Random => "random",
            Algorithm::PsgRandom => "psg-random",
        }
    }

    pub fn prunes(self) -> bool {
        matches!(self, Algorithm::PsgGreedy | Algorithm::PsgRandom)
    }

    pub fn is_baseline(self) -> bool {
        matches!(
            self,
            Algorithm::TopK | Algorithm::MaxCov | Algorithm::Random | Algorithm::PsgRandom
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSource {
    Files {
        trajectories: PathBuf,
        billboards: PathBuf,
    },
    Generated(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbSource {
    PanelRatio,
    Explicit(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: InputSource,
    pub horizon: Window,
    pub delta: i64,
    pub k: usize,
    pub algorithm: Algorithm,
    pub prune: PruneConfig,
    pub seed: u64,
    pub prob_model: ProbSource,
    /// Report destination; not echoed so reports compare across paths.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// When false every wall-time field is written as zero.
    pub timing: bool,
}

impl RunConfig {
    /// Config over a generated instance, taking horizon and slot length from the spec.
    pub fn synthetic(spec: SyntheticSpec, k: usize, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            horizon: spec.horizon(),
            delta: spec.slot_seconds,
            input: InputSource::Generated(spec),
            k,
            algorithm,
            prune: PruneConfig::default(),
            seed,
            prob_model: ProbSource::PanelRatio,
            out: None,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.algorithm.prunes() {
            self.prune.validate()?;
        }
        if let InputSource::Generated(spec) = &self.input {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Loaded catalog, trajectories and exposure matrix for one configuration.
#[derive(Debug, Clone)]
pub struct Instance {
    pub catalog: SlotCatalog,
    pub trajectories: Vec<TrajectoryTuple>,
    pub exposure: ExposureMatrix,
}

impl Instance {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let (trajectories, billboards) = match &config.input {
            InputSource::Files {
                trajectories,
                billboards,
            } => (
                load_trajectories(trajectories)?,
                load_billboards(billboards)?,
            ),
            InputSource::Generated(spec) => {
                let inst = generate(spec)?;
                (inst.trajectories, inst.billboards)
            }
        };
        let catalog = build_catalog(&billboards, config.horizon, config.delta)?;
        let model = match &config.prob_model {
            ProbSource::PanelRatio => ProbabilityModel::PanelRatio,
            ProbSource::Explicit(path) => ProbabilityModel::Explicit(load_probabilities(path)?),
        };
        let exposure = build_exposure(&catalog, &trajectories, &model)?;
        Ok(Self {
            catalog,
            trajectories,
            exposure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub slots: usize,
    pub after_preprocess: usize,
    pub after_prune: Option<usize>,
    pub users: usize,
    pub tuples: usize,
    pub exposures: usize,
}

/// Percent of slots removed, `(1 − after / before) · 100`.
pub fn reduction_pct(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        (1.0 - after as f64 / before as f64) * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub preprocess_pct: f64,
    pub prune_pct: Option<f64>,
    pub total_pct: Option<f64>,
}

impl Reduction {
    pub fn from_counts(c: &Counts) -> Self {
        Self {
            preprocess_pct: reduction_pct(c.slots, c.after_preprocess),
            prune_pct: c.after_prune.map(|p| reduction_pct(c.after_preprocess, p)),
            total_pct: c.after_prune.map(|p| reduction_pct(c.slots, p)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ingest_s: f64,
    pub preprocess_s: f64,
    pub prune_s: f64,
    pub select_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenSlot {
    pub rank: usize,
    pub slot_id: SlotId,
    pub billboard_id: String,
    pub window_start: i64,
    pub window_end: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub counts: Counts,
    pub reduction: Reduction,
    pub chosen: Vec<ChosenSlot>,
    pub influence: f64,
    pub evaluations: u64,
    pub timings: Timings,
    pub prune_rounds: Option<usize>,
    pub reference_reduced_size: Option<f64>,
}

impl RunReport {
    pub fn chosen_ids(&self) -> Vec<SlotId> {
        self.chosen.iter().map(|c| c.slot_id).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub const CSV_HEADER: &'static str = "algorithm,k,seed,slots,after_preprocess,after_prune,influence,evaluations,ingest_s,preprocess_s,prune_s,select_s";

    pub fn csv_row(&self) -> String {
        let t = &self.timings;
        format!(
            "{},{},{},{},{},{},{:.16e},{},{:.6},{:.6},{:.6},{:.6}",
            self.config.algorithm,
            self.config.k,
            self.config.seed,
            self.counts.slots,
            self.counts.after_preprocess,
            self.counts
                .after_prune
                .map(|p| p.to_string())
                .unwrap_or_default(),
            self.influence,
            self.evaluations,
            t.ingest_s,
            t.preprocess_s,
            t.prune_s,
            t.select_s,
        )
    }

    /// Writes `path` as canonical JSON and a one-row CSV next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))?;
        let csv_path = path.with_extension("csv");
        let csv = format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row());
        fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))
    }
}

/// Preprocessed ground set with its timing.
pub(crate) struct Prepared {
    pub ground: Vec<SlotId>,
    pub seconds: f64,
}

pub(crate) fn prepare(instance: &Instance) -> Prepared {
    let start = Instant::now();
    let ground = preprocess(&singleton_influences(&instance.exposure));
    Prepared {
        ground,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub(crate) fn run_prune(
    instance: &Instance,
    ground: &[SlotId],
    config: &RunConfig,
    rng: &mut SeededRng,
) -> Result<(PruneOutcome, f64)> {
    let start = Instant::now();
    let outcome = prune(&instance.exposure, ground, &config.prune, rng)?;
    Ok((outcome, start.elapsed().as_secs_f64()))
}

/// Runs one selector. Baselines that ignore preprocessing draw from the full
/// catalog; greedy variants use the preprocessed ground set.
pub(crate) fn select_with(
    algorithm: Algorithm,
    instance: &Instance,
    preprocessed: &[SlotId],
    pruned: Option<&[SlotId]>,
    k: usize,
    rng: &mut SeededRng,
) -> Result<Selection> {
    let exposure = &instance.exposure;
    let full = instance.catalog.all_ids();
    match algorithm {
        Algorithm::PsgGreedy => greedy(exposure, pruned.expect("pruned ground"), k, false),
        Algorithm::Greedy => greedy(exposure, preprocessed, k, false),
        Algorithm::LazyGreedy => greedy(exposure, preprocessed, k, true),
        Algorithm::TopK => top_k(exposure, &full, k),
        Algorithm::MaxCov => max_cov(
            exposure,
            &instance.catalog,
            &instance.trajectories,
            &full,
            k,
        ),
        Algorithm::Random => random_k(exposure, &full, k, rng),
        Algorithm::PsgRandom => random_k(exposure, pruned.expect("pruned ground"), k, rng),
    }
}

fn check_influence(exposure: &ExposureMatrix, selection: &Selection) -> Result<()> {
    let again = influence(exposure, &selection.chosen)?;
    if (again - selection.influence).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "reported influence {} disagrees with re-evaluation {again}",
            selection.influence
        )));
    }
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let instance = Instance::load(config)?;
    let ingest_s = start.elapsed().as_secs_f64();
    info!(
        "loaded {} slots, {} users, {} exposures",
        instance.catalog.len(),
        instance.exposure.num_users(),
        instance.exposure.num_entries()
    );
    run_on(config, &instance, ingest_s)
}

/// [`run`] against an already loaded instance.
pub fn run_on(config: &RunConfig, instance: &Instance, ingest_s: f64) -> Result<RunReport> {
    config.validate()?;
    let prepared = prepare(instance);
    let mut rng = SeededRng::new(config.seed);

    let (pruned, prune_s) = if config.algorithm.prunes() {
        let (outcome, secs) = run_prune(instance, &prepared.ground, config, &mut rng)?;
        (Some(outcome), secs)
    } else {
        (None, 0.0)
    };

    let start = Instant::now();
    let selection = select_with(
        config.algorithm,
        instance,
        &prepared.ground,
        pruned.as_ref().map(|o| o.reduced.as_slice()),
        config.k,
        &mut rng,
    )?;
    let select_s = start.elapsed().as_secs_f64();
    check_influence(&instance.exposure, &selection)?;

    let counts = Counts {
        slots: instance.catalog.len(),
        after_preprocess: prepared.ground.len(),
        after_prune: pruned.as_ref().map(|o| o.reduced.len()),
        users: instance.exposure.num_users(),
        tuples: instance.trajectories.len(),
        exposures: instance.exposure.num_entries(),
    };
    let chosen = selection
        .chosen
        .iter()
        .enumerate()
        .map(|(rank, &id)| {
            let slot = &instance.catalog.slots[id.index()];
            ChosenSlot {
                rank: rank + 1,
                slot_id: id,
                billboard_id: slot.billboard_id.clone(),
                window_start: slot.window.start,
                window_end: slot.window.end,
            }
        })
        .collect();
    let timings = if config.timing {
        Timings {
            ingest_s,
            preprocess_s: prepared.seconds,
            prune_s,
            select_s,
        }
    } else {
        Timings::default()
    };

    Ok(RunReport {
        config: config.clone(),
        reduction: Reduction::from_counts(&counts),
        counts,
        chosen,
        influence: selection.influence,
        evaluations: selection.evaluations,
        timings,
        prune_rounds: pruned.as_ref().map(|o| o.state.rounds.len()),
        reference_reduced_size: pruned
            .as_ref()
            .map(|o| reference_reduced_size(&config.prune, config.k, o.state.n0)),
    })
}
