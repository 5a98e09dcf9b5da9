use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{prepare, run_prune, select_with, Algorithm, Instance, RunConfig};
use crate::error::{Error, Result};
use crate::influence::influence;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub influence: f64,
    pub seconds: f64,
    /// psg-greedy rows only: influence over the best baseline at the same k.
    pub vs_best_baseline: Option<f64>,
}

/// Influence of each algorithm at every `k`.
///
/// Greedy, top-k and max-cov run once at the largest `k` and report prefixes;
/// their `seconds` is that run's time. Random selectors redraw per `k` from a
/// generator in the same state a standalone run would use, so each row
/// matches `run` with that `k`.
pub fn sweep(config: &RunConfig, ks: &[usize], algorithms: &[Algorithm]) -> Result<Vec<SweepRow>> {
    if ks.is_empty() || ks.contains(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "k values must be positive and strictly ascending, got {ks:?}"
        )));
    }
    let k_max = *ks.last().unwrap();
    let mut config = config.clone();
    config.k = k_max;
    config.validate()?;

    let instance = Instance::load(&config)?;
    let prepared = prepare(&instance);
    let pruned = if algorithms.iter().any(|a| a.prunes()) {
        let mut rng = SeededRng::new(config.seed);
        let (outcome, secs) = run_prune(&instance, &prepared.ground, &config, &mut rng)?;
        Some((outcome, secs, rng))
    } else {
        None
    };
    let reduced = pruned.as_ref().map(|(o, _, _)| o.reduced.as_slice());
    let prune_s = pruned.as_ref().map(|(_, s, _)| *s).unwrap_or(0.0);

    let mut rows = Vec::new();
    for &algorithm in algorithms {
        let prune_time = if algorithm.prunes() { prune_s } else { 0.0 };
        let fresh_rng = || match &pruned {
            Some((_, _, rng)) if algorithm.prunes() => rng.clone(),
            _ => SeededRng::new(config.seed),
        };
        match algorithm {
            Algorithm::Random | Algorithm::PsgRandom => {
                for &k in ks {
                    let start = Instant::now();
                    let mut rng = fresh_rng();
                    let sel =
                        select_with(algorithm, &instance, &prepared.ground, reduced, k, &mut rng)?;
                    rows.push(SweepRow {
                        algorithm,
                        k,
                        influence: sel.influence,
                        seconds: prepared.seconds + prune_time + start.elapsed().as_secs_f64(),
                        vs_best_baseline: None,
                    });
                }
            }
            _ => {
                let start = Instant::now();
                let mut rng = fresh_rng();
                let sel = select_with(
                    algorithm,
                    &instance,
                    &prepared.ground,
                    reduced,
                    k_max,
                    &mut rng,
                )?;
                let seconds = prepared.seconds + prune_time + start.elapsed().as_secs_f64();
                for &k in ks {
                    let prefix = &sel.chosen[..k.min(sel.chosen.len())];
                    rows.push(SweepRow {
                        algorithm,
                        k,
                        influence: influence(&instance.exposure, prefix)?,
                        seconds,
                        vs_best_baseline: None,
                    });
                }
            }
        }
    }

    for &k in ks {
        let best = rows
            .iter()
            .filter(|r| r.k == k && r.algorithm.is_baseline())
            .map(|r| r.influence)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
        if let Some(best) = best.filter(|&b| b > 0.0) {
            for row in rows.iter_mut() {
                if row.k == k && row.algorithm == Algorithm::PsgGreedy {
                    row.vs_best_baseline = Some(row.influence / best);
                }
            }
        }
    }

    if !config.timing {
        for row in &mut rows {
            row.seconds = 0.0;
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sweep_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("algorithm,k,influence,seconds,vs_best_baseline\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.6},{}\n",
            r.algorithm,
            r.k,
            r.influence,
            r.seconds,
            r.vs_best_baseline
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default()
        ));
    }
    out
}
