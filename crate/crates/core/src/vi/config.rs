//! Fit configuration: model choices, comparator constraints and loop controls.

use serde::{Deserialize, Serialize};

use crate::tree::RootedWeightedTree;

use super::VIError;

/// How the spike-and-slab indicators of the domain tree are constrained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ComparatorMode {
    /// Every non-root indicator is learned.
    DomainAdaptive,
    /// Indicators clamped to a 0/1 pattern over domain-tree nodes in dense
    /// order. The root entry must be on.
    FixedGrouping { slab_on: Vec<bool> },
    /// All non-root indicators off: one set of mixing weights for every domain.
    CompletePooling,
    /// All indicators on: every domain keeps its own mixing weights.
    NoDomainGrouping,
}

impl ComparatorMode {
    /// Per-node clamp: `None` for learned indicators, `Some(v)` when fixed.
    /// The root is always fixed on.
    pub fn clamp(&self, tree: &RootedWeightedTree) -> Result<Vec<Option<bool>>, VIError> {
        let p = tree.len();
        let mut out = match self {
            ComparatorMode::DomainAdaptive => vec![None; p],
            ComparatorMode::CompletePooling => vec![Some(false); p],
            ComparatorMode::NoDomainGrouping => vec![Some(true); p],
            ComparatorMode::FixedGrouping { slab_on } => {
                if slab_on.len() != p {
                    return Err(VIError::InvalidConfig(format!(
                        "slab pattern has {} entries for {p} domain-tree nodes",
                        slab_on.len()
                    )));
                }
                if !slab_on[tree.root()] {
                    return Err(VIError::InvalidConfig("slab pattern must keep the root on".into()));
                }
                slab_on.iter().map(|&s| Some(s)).collect()
            }
        };
        out[tree.root()] = Some(true);
        Ok(out)
    }

    /// Short name used in outputs.
    pub fn name(&self) -> &'static str {
        match self {
            ComparatorMode::DomainAdaptive => "domain-adaptive",
            ComparatorMode::FixedGrouping { .. } => "fixed-grouping",
            ComparatorMode::CompletePooling => "complete-pooling",
            ComparatorMode::NoDomainGrouping => "no-domain-grouping",
        }
    }
}

/// Model specification for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Number of latent classes `K` per cause.
    pub num_classes: usize,
    /// Beta prior `a_{cℓ}` on slab probabilities, shared across causes and levels.
    pub rho_a: f64,
    /// Beta prior `b_{cℓ}`.
    pub rho_b: f64,
    /// Symmetric Dirichlet prior `d^{(g)}` on every domain's cause fractions.
    pub dirichlet: f64,
    pub mode: ComparatorMode,
    /// Permits `K = 1`, which removes within-cause dependence; diagnostic use only.
    pub allow_single_class: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_classes: 2,
            rho_a: 1.0,
            rho_b: 1.0,
            dirichlet: 1.0,
            mode: ComparatorMode::DomainAdaptive,
            allow_single_class: false,
        }
    }
}

/// Loop controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitControls {
    /// Stop when the ELBO change falls below this.
    pub tol: f64,
    /// Measure the change relative to `|ELBO|` instead of absolutely.
    pub relative_tol: bool,
    /// Slack allowed on the ELBO change of a hyperparameter update.
    pub hyper_tol: f64,
    /// Hyperparameters are updated on sweeps `t` with `t % hyper_interval == 0`.
    pub hyper_interval: usize,
    /// Turns the empirical-Bayes variance updates on or off.
    pub update_hyper: bool,
    /// Rounds of spike-slab, `γ` and hyperparameter updates on a
    /// hyperparameter sweep; 1 gives a single hyperparameter update.
    pub hyper_passes: usize,
    /// Update the local bound parameters every sweep (`true`) or only
    /// alongside the hyperparameters.
    pub local_bounds_every_sweep: bool,
    pub max_iters: usize,
    pub n_restarts: usize,
    pub seed: u64,
    /// Standard deviation of the random initial means.
    pub init_sd: f64,
}

impl Default for FitControls {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            relative_tol: false,
            hyper_tol: 1e-4,
            hyper_interval: 10,
            update_hyper: true,
            hyper_passes: 4,
            local_bounds_every_sweep: true,
            max_iters: 5000,
            n_restarts: 5,
            seed: 0,
            init_sd: 0.1,
        }
    }
}

impl FitControls {
    pub fn validate(&self) -> Result<(), VIError> {
        if !(self.tol > 0.0) || !(self.hyper_tol > 0.0) {
            return Err(VIError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.hyper_interval == 0 {
            return Err(VIError::InvalidConfig("hyper_interval must be at least 1".into()));
        }
        if self.hyper_passes == 0 {
            return Err(VIError::InvalidConfig("hyper_passes must be at least 1".into()));
        }
        if self.n_restarts == 0 {
            return Err(VIError::InvalidConfig("at least one restart is required".into()));
        }
        if self.max_iters == 0 {
            return Err(VIError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.init_sd >= 0.0) {
            return Err(VIError::InvalidConfig("init_sd must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tests::figure_one;

    #[test]
    fn clamps() {
        let t = figure_one();
        assert_eq!(ComparatorMode::DomainAdaptive.clamp(&t).unwrap()[0], Some(true));
        assert!(ComparatorMode::DomainAdaptive.clamp(&t).unwrap()[1..].iter().all(Option::is_none));
        let pooled = ComparatorMode::CompletePooling.clamp(&t).unwrap();
        assert_eq!(pooled[0], Some(true));
        assert!(pooled[1..].iter().all(|&s| s == Some(false)));
        let mut pattern = vec![true; t.len()];
        pattern[0] = false;
        assert!(ComparatorMode::FixedGrouping { slab_on: pattern }.clamp(&t).is_err());
        assert!(ComparatorMode::FixedGrouping { slab_on: vec![true] }.clamp(&t).is_err());
    }

    #[test]
    fn controls_validate() {
        assert!(FitControls::default().validate().is_ok());
        assert!(FitControls { hyper_interval: 0, ..Default::default() }.validate().is_err());
        assert!(FitControls { tol: 0.0, ..Default::default() }.validate().is_err());
    }
}
