//! Coordinate-ascent variational inference for the nested latent class model.
//!
//! A fit repeats sweeps of closed-form factor updates (cause assignments,
//! class assignments, cause fractions, spike-and-slab domain increments,
//! cause-tree increments, slab probabilities, local bound parameters and,
//! every `hyper_interval` sweeps, the diffusion variances) until the ELBO
//! stabilizes. Independent restarts run in parallel and the best final ELBO
//! wins.

mod config;
mod elbo;
mod engine;
mod state;

pub use config::{ComparatorMode, FitControls, ModelConfig};
pub use engine::{FTable, Problem, SuffStats};
pub use state::{Moments, VariationalState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::ModelError;
use crate::tree::RootedWeightedTree;

#[derive(Debug, Error)]
pub enum VIError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite ELBO term `{label}`")]
    NonFinite { label: &'static str },
    #[error("every restart failed: {0}")]
    AllRestartsFailed(String),
    #[error("no candidate values of K")]
    EmptyCandidates,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub final_elbo: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Best restart of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub state: VariationalState,
    /// ELBO after each sweep.
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_elbo: f64,
    /// Index of the winning restart.
    pub restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub seed: u64,
    pub num_classes: usize,
}

impl FitResult {
    /// Posterior mean of the target cause fractions `π^{(0)}`.
    pub fn target_csmf(&self) -> Vec<f64> {
        self.state.pi_mean(0)
    }

    /// Posterior mean of `π^{(g)}`.
    pub fn csmf(&self, g: usize) -> Vec<f64> {
        self.state.pi_mean(g)
    }
}

/// Serializable summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: String,
    pub seed: u64,
    pub num_classes: usize,
    /// Set when the fit came out of a K selection.
    pub selected_k: Option<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub final_elbo: f64,
    pub restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub elbo_trace: Vec<f64>,
    pub pi0_mean: Vec<f64>,
    pub pi0_dirichlet_params: Vec<f64>,
    /// Posterior cause fractions of every domain, in leaf-label order.
    pub csmf: Vec<Vec<f64>>,
    pub domain_ids: Vec<String>,
    pub cause_ids: Vec<String>,
    /// Domain-tree node ids in the column order of `slab_prob`.
    pub domain_nodes: Vec<String>,
    /// `p_{cu}`, one row per cause.
    pub slab_prob: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub tau_star: Vec<f64>,
    /// Subjects with unobserved cause and their `q(Y_i)` rows.
    pub target_subjects: Vec<String>,
    pub target_cause_probs: Vec<Vec<f64>>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl FitResult {
    pub fn report(&self, problem: &Problem<'_>, mode: &ComparatorMode) -> FitReport {
        let ds = problem.dataset();
        let dtree = problem.domain_tree();
        let st = &self.state;
        let rows = |m: &ndarray::Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        let missing = problem.missing_rows();
        FitReport {
            mode: mode.name().to_owned(),
            seed: self.seed,
            num_classes: self.num_classes,
            selected_k: None,
            converged: self.converged,
            iterations: self.iterations,
            final_elbo: self.final_elbo,
            restart: self.restart,
            restarts: self.restarts.clone(),
            elbo_trace: self.elbo_trace.clone(),
            pi0_mean: st.pi_mean(0),
            pi0_dirichlet_params: st.dirichlet.row(0).to_vec(),
            csmf: (0..ds.num_domains()).map(|g| st.pi_mean(g)).collect(),
            domain_ids: dtree.leaf_ids(),
            cause_ids: problem.cause_tree().leaf_ids(),
            domain_nodes: (0..dtree.len()).map(|u| dtree.id(u).to_owned()).collect(),
            slab_prob: rows(&st.slab_prob),
            tau: st.tau.clone(),
            tau_star: st.tau_star.clone(),
            target_subjects: missing.iter().map(|&i| ds.ids()[i].clone()).collect(),
            target_cause_probs: missing.iter().map(|&i| st.e.row(i).to_vec()).collect(),
        }
    }
}

/// Random stream of restart `restart` under `seed`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct RunOutcome {
    state: VariationalState,
    trace: Vec<f64>,
    converged: bool,
}

/// Runs one restart to convergence or `max_iters`.
fn run_single(problem: &Problem<'_>, controls: &FitControls, restart: usize) -> Result<RunOutcome, VIError> {
    let mut rng = restart_rng(controls.seed, restart);
    let mut st = problem.init_state(&mut rng, controls.init_sd);
    let mut prev = problem.elbo(&st)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for t in 1..=controls.max_iters {
        problem.sweep(&mut st, t, controls);
        let value = problem.elbo(&st)?;
        trace.push(value);
        let mut change = (value - prev).abs();
        if controls.relative_tol {
            change /= value.abs().max(f64::MIN_POSITIVE);
        }
        prev = value;
        if change < controls.tol {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome { state: st, trace, converged })
}

/// Fits the model with `controls.n_restarts` restarts and keeps the one with
/// the highest final ELBO (earliest restart on ties). Non-convergence is
/// reported through [`FitResult::converged`], not as an error.
pub fn fit(
    ds: &Dataset,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    model: &ModelConfig,
    controls: &FitControls,
) -> Result<FitResult, VIError> {
    controls.validate()?;
    let problem = Problem::new(ds, dtree, ctree, model)?;
    fit_problem(&problem, controls)
}

/// [`fit`] on a prepared [`Problem`].
pub fn fit_problem(problem: &Problem<'_>, controls: &FitControls) -> Result<FitResult, VIError> {
    controls.validate()?;
    let outcomes: Vec<Result<RunOutcome, VIError>> =
        (0..controls.n_restarts).into_par_iter().map(|r| run_single(problem, controls, r)).collect();

    let mut restarts = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, RunOutcome)> = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(run) => {
                let final_elbo = *run.trace.last().expect("at least one sweep runs");
                restarts.push(RestartSummary {
                    restart: r,
                    final_elbo: Some(final_elbo),
                    converged: run.converged,
                    iterations: run.trace.len(),
                    error: None,
                });
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| final_elbo > *b.trace.last().expect("non-empty"));
                if better {
                    best = Some((r, run));
                }
            }
            Err(e) => {
                log::warn!("restart {r} aborted: {e}");
                restarts.push(RestartSummary {
                    restart: r,
                    final_elbo: None,
                    converged: false,
                    iterations: 0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let (restart, run) = best.ok_or_else(|| {
        VIError::AllRestartsFailed(
            restarts.iter().filter_map(|s| s.error.clone()).collect::<Vec<_>>().join("; "),
        )
    })?;
    Ok(FitResult {
        final_elbo: *run.trace.last().expect("non-empty"),
        iterations: run.trace.len(),
        converged: run.converged,
        elbo_trace: run.trace,
        state: run.state,
        restart,
        restarts,
        seed: controls.seed,
        num_classes: problem.num_classes(),
    })
}

/// One candidate of a K selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCandidate {
    pub k: usize,
    pub elbo: f64,
    /// `ℰ*_K + ln(K!)`.
    pub criterion: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub candidates: Vec<KCandidate>,
    pub selected_k: usize,
    /// The fit at the selected K.
    pub best: FitResult,
}

/// Fits every candidate K and picks the largest `ℰ*_K + ln(K!)`, ties going
/// to the smaller K.
pub fn select_k(
    ds: &Dataset,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    model: &ModelConfig,
    controls: &FitControls,
    k_candidates: &[usize],
) -> Result<KSelection, VIError> {
    if k_candidates.is_empty() {
        return Err(VIError::EmptyCandidates);
    }
    let mut candidates = Vec::with_capacity(k_candidates.len());
    let mut best: Option<(f64, usize, FitResult)> = None;
    for &k in k_candidates {
        let cfg = ModelConfig { num_classes: k, ..model.clone() };
        let result = fit(ds, dtree, ctree, &cfg, controls)?;
        let criterion = result.final_elbo + ln_factorial(k);
        candidates.push(KCandidate { k, elbo: result.final_elbo, criterion, converged: result.converged });
        let better = match &best {
            None => true,
            Some((bc, bk, _)) => criterion > *bc || (criterion == *bc && k < *bk),
        };
        if better {
            best = Some((criterion, k, result));
        }
    }
    let (_, selected_k, best) = best.expect("at least one candidate");
    Ok(KSelection { candidates, selected_k, best })
}

/// `ln(K!)`.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|x| (x as f64).ln()).sum()
}
