use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use slotmax::catalog::Window;
use slotmax::harness::{
    brute_force_opt, generate, run, sweep, to_canonical_json, write_instance, write_sweep_csv,
    Algorithm, InputSource, Instance, ProbSource, RunConfig, SyntheticSpec,
};
use slotmax::influence::singleton_influences;
use slotmax::psg::{preprocess, LogBase, PruneConfig};
use slotmax::select::greedy;

#[derive(Parser)]
#[command(
    name = "slotmax",
    version,
    about = "Select the k most influential billboard slots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write a JSON report (plus a CSV row next to it).
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_algorithm)]
        algo: Algorithm,
        /// Report path; the JSON goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate trajectories.csv and billboards.csv from a JSON spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Influence versus k for several algorithms, as CSV.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Comma-separated algorithm names; all of them by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
        algos: Vec<Algorithm>,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum by enumeration next to the greedy answer.
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbModelArg {
    PanelRatio,
    Explicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogBaseArg {
    E,
    #[value(name = "2")]
    Two,
    #[value(name = "10")]
    Ten,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, requires = "billboards", conflicts_with = "spec")]
    trajectories: Option<PathBuf>,
    #[arg(long, requires = "trajectories")]
    billboards: Option<PathBuf>,
    /// Generate the instance in memory from a synthetic spec instead of reading CSVs.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<i64>,
    #[arg(long)]
    slot_seconds: Option<i64>,
    #[arg(long, default_value_t = 8.0)]
    r: f64,
    #[arg(long, default_value_t = 8.0)]
    c: f64,
    #[arg(long, value_enum, default_value_t = LogBaseArg::E)]
    log_base: LogBaseArg,
    /// Precompute the full edge-weight matrix (small instances only).
    #[arg(long)]
    eager_graph: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ProbModelArg::PanelRatio)]
    prob_model: ProbModelArg,
    #[arg(long, required_if_eq("prob_model", "explicit"))]
    probs: Option<PathBuf>,
    /// Zero every wall-time field.
    #[arg(long)]
    no_timing: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: slotmax::Error| e.to_string())
}

impl InputArgs {
    fn config(&self, k: usize, algorithm: Algorithm) -> Result<RunConfig> {
        let (input, defaults) = match (&self.trajectories, &self.billboards, &self.spec) {
            (Some(t), Some(b), None) => (
                InputSource::Files {
                    trajectories: t.clone(),
                    billboards: b.clone(),
                },
                None,
            ),
            (None, None, Some(path)) => {
                let spec = SyntheticSpec::load(path)?;
                let defaults = (spec.t_start, spec.t_end, spec.slot_seconds);
                (InputSource::Generated(spec), Some(defaults))
            }
            _ => bail!("give either --trajectories and --billboards, or --spec"),
        };
        let pick = |flag: Option<i64>, fallback: Option<i64>, name: &str| {
            flag.or(fallback)
                .with_context(|| format!("--{name} is required with CSV input"))
        };
        let t_start = pick(self.t_start, defaults.map(|d| d.0), "t-start")?;
        let t_end = pick(self.t_end, defaults.map(|d| d.1), "t-end")?;
        let delta = pick(self.slot_seconds, defaults.map(|d| d.2), "slot-seconds")?;
        let prob_model = match self.prob_model {
            ProbModelArg::PanelRatio => ProbSource::PanelRatio,
            ProbModelArg::Explicit => ProbSource::Explicit(
                self.probs
                    .clone()
                    .context("--probs is required with --prob-model explicit")?,
            ),
        };
        Ok(RunConfig {
            input,
            horizon: Window::new(t_start, t_end),
            delta,
            k,
            algorithm,
            prune: PruneConfig {
                r: self.r,
                c: self.c,
                log_base: match self.log_base {
                    LogBaseArg::E => LogBase::Natural,
                    LogBaseArg::Two => LogBase::Two,
                    LogBaseArg::Ten => LogBase::Ten,
                },
                eager: self.eager_graph,
            },
            seed: self.seed,
            prob_model,
            out: None,
            timing: !self.no_timing,
        })
    }
}

#[derive(Serialize)]
struct OracleReport {
    k: usize,
    ground_size: usize,
    opt_influence: f64,
    opt_set: Vec<u32>,
    greedy_influence: f64,
    greedy_set: Vec<u32>,
    ratio: f64,
    guarantee: f64,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            input,
            k,
            algo,
            out,
        } => {
            let mut config = input.config(k, algo)?;
            config.out = out.clone();
            let report = run(&config)?;
            match &out {
                Some(path) => report.write(path)?,
                None => emit(&report.to_json()?, None)?,
            }
        }
        Command::Gen { spec, out_dir } => {
            let spec = SyntheticSpec::load(&spec)?;
            let (t, b) = write_instance(&generate(&spec)?, &out_dir)?;
            log::info!("wrote {} and {}", t.display(), b.display());
        }
        Command::Sweep {
            input,
            k,
            algos,
            out,
        } => {
            let algos = if algos.is_empty() {
                Algorithm::ALL.to_vec()
            } else {
                algos
            };
            let config = input.config(*k.last().unwrap_or(&1), algos[0])?;
            let rows = sweep(&config, &k, &algos)?;
            match &out {
                Some(path) => write_sweep_csv(&rows, path)?,
                None => emit(&slotmax::harness::sweep_csv(&rows), None)?,
            }
        }
        Command::Oracle { input, k, out } => {
            if k == 0 {
                bail!("k must be at least 1");
            }
            let config = input.config(k, Algorithm::Greedy)?;
            let instance = Instance::load(&config)?;
            let ground = preprocess(&singleton_influences(&instance.exposure));
            let (opt_set, opt) = brute_force_opt(&instance.exposure, &ground, k)?;
            let g = greedy(&instance.exposure, &ground, k, false)?;
            let report = OracleReport {
                k,
                ground_size: ground.len(),
                opt_influence: opt,
                opt_set: opt_set.iter().map(|s| s.0).collect(),
                greedy_influence: g.influence,
                greedy_set: g.chosen.iter().map(|s| s.0).collect(),
                ratio: if opt > 0.0 { g.influence / opt } else { 1.0 },
                guarantee: 1.0 - (-1.0f64).exp(),
            };
            emit(&to_canonical_json(&report)?, out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SLOTMAX_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slotmax: {e:#}");
            ExitCode::FAILURE
        }
    }
}
