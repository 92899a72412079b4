//! `nlcm`: simulate, fit and evaluate tree-informed nested latent class
//! models from the command line.
//!
//! Exit codes: 0 on success, 1 on input or runtime errors, 2 when a fit did
//! not converge (its outputs are still written).

mod config;
mod evaluate;
mod fit;
mod io;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nlcm_core::sim::{Allocation, CsmfMode, ProfileLayout, Signal};

use config::{load_config, DesignName, EvaluateConfig, FitConfig, ModeName, SimulateConfig};

#[derive(Parser)]
#[command(name = "nlcm", version, about = "Tree-informed nested latent class models for cause-of-death fractions")]
struct Cli {
    /// Worker threads for restarts and replicates; all cores by default.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic data sets and their truth.
    Simulate(SimulateArgs),
    /// Fit the model to a data set.
    Fit(FitArgs),
    /// Score fits against a truth file and aggregate over replicates.
    Evaluate(EvaluateArgs),
    /// Fit every candidate K and keep the best by ELBO + ln K!.
    SelectK(SelectKArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML or JSON configuration, or a manifest of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    design: Option<DesignName>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Domain tree file replacing the design's tree.
    #[arg(long)]
    domain_tree: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    causes: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long, value_parser = parse_kebab::<Signal>)]
    signal: Option<Signal>,
    #[arg(long, value_parser = parse_kebab::<Allocation>)]
    allocation: Option<Allocation>,
    #[arg(long, value_parser = parse_kebab::<CsmfMode>)]
    csmf: Option<CsmfMode>,
    #[arg(long, value_parser = parse_kebab::<ProfileLayout>)]
    layout: Option<ProfileLayout>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// TOML or JSON configuration, or a manifest of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory written by `simulate` (data.csv, domain_tree.csv, cause_tree.csv).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    domain_tree: Option<PathBuf>,
    #[arg(long)]
    cause_tree: Option<PathBuf>,
    /// Leaf id of the target domain.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comparator label used when evaluating.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// Domain-tree nodes with the slab on (fixed-grouping).
    #[arg(long, value_delimiter = ',')]
    slab_on: Option<Vec<String>>,
    /// Candidate K values; selects K by ELBO + ln K!.
    #[arg(long, value_delimiter = ',')]
    select_k: Option<Vec<usize>>,
    #[command(flatten)]
    common: FitFlags,
}

#[derive(Args)]
struct SelectKArgs {
    /// Candidate K values.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct FitFlags {
    /// Latent classes per cause.
    #[arg(long)]
    classes: Option<usize>,
    /// Permit K = 1 (diagnostic; removes within-cause dependence).
    #[arg(long)]
    allow_single_class: bool,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    hyper_interval: Option<usize>,
    #[arg(long)]
    hyper_passes: Option<usize>,
    /// Keep the diffusion variances at their initial values.
    #[arg(long)]
    no_hyper: bool,
    #[arg(long)]
    init_sd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fit output directories; shell globs such as `fits/*/adaptive` work.
    #[arg(long = "run", num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Truth file used for every run instead of each run's own.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn simulate_config(a: SimulateArgs) -> Result<SimulateConfig> {
    let mut cfg: SimulateConfig = match &a.config {
        Some(p) => load_config(p, "simulate")?,
        None => SimulateConfig::default(),
    };
    set(&mut cfg.design, a.design);
    set(&mut cfg.out, a.out);
    if a.domain_tree.is_some() {
        cfg.domain_tree = a.domain_tree;
    }
    set(&mut cfg.replicates, a.replicates);
    let s = &mut cfg.sim;
    set(&mut s.n, a.n);
    set(&mut s.num_causes, a.causes);
    set(&mut s.num_classes, a.classes);
    set(&mut s.num_items, a.items);
    set(&mut s.signal, a.signal);
    set(&mut s.allocation, a.allocation);
    set(&mut s.csmf, a.csmf);
    set(&mut s.layout, a.layout);
    set(&mut s.missing_rate, a.missing_rate);
    set(&mut s.seed, a.seed);
    Ok(cfg)
}

fn fit_config(a: FitArgs, command: &str) -> Result<FitConfig> {
    let mut cfg: FitConfig = match &a.config {
        Some(p) => load_config(p, command)?,
        None => FitConfig::default(),
    };
    for (slot, v) in [
        (&mut cfg.input, a.input),
        (&mut cfg.data, a.data),
        (&mut cfg.domain_tree, a.domain_tree),
        (&mut cfg.cause_tree, a.cause_tree),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    if a.target.is_some() {
        cfg.target = a.target;
    }
    if a.label.is_some() {
        cfg.label = a.label;
    }
    set(&mut cfg.out, a.out);
    set(&mut cfg.mode, a.mode);
    set(&mut cfg.slab_on, a.slab_on);
    set(&mut cfg.select_k, a.select_k);
    let f = a.common;
    set(&mut cfg.model.num_classes, f.classes);
    if f.allow_single_class {
        cfg.model.allow_single_class = true;
    }
    let c = &mut cfg.controls;
    set(&mut c.n_restarts, f.restarts);
    set(&mut c.max_iters, f.max_iters);
    set(&mut c.tol, f.tol);
    set(&mut c.hyper_interval, f.hyper_interval);
    set(&mut c.hyper_passes, f.hyper_passes);
    set(&mut c.init_sd, f.init_sd);
    set(&mut c.seed, f.seed);
    if f.no_hyper {
        c.update_hyper = false;
    }
    Ok(cfg)
}

fn evaluate_config(a: EvaluateArgs) -> Result<EvaluateConfig> {
    let mut cfg: EvaluateConfig = match &a.config {
        Some(p) => load_config(p, "evaluate")?,
        None => EvaluateConfig::default(),
    };
    if !a.runs.is_empty() {
        cfg.runs = a.runs;
    }
    if a.truth.is_some() {
        cfg.truth = a.truth;
    }
    set(&mut cfg.top_k, a.top_k);
    set(&mut cfg.out, a.out);
    Ok(cfg)
}

/// Runs a command; `Ok(false)` signals a fit that did not converge.
fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("setting up the worker pool")?;
    }
    match cli.command {
        Command::Simulate(a) => simulate::run(&simulate_config(a)?).map(|()| true),
        Command::Fit(a) => fit::run(&mut fit_config(a, "fit")?, "fit"),
        Command::SelectK(a) => {
            let mut cfg = fit_config(a.fit, "select-k")?;
            cfg.select_k = a.k;
            fit::run(&mut cfg, "select-k")
        }
        Command::Evaluate(a) => evaluate::run(&evaluate_config(a)?).map(|()| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: the fit did not converge; results were written anyway");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
