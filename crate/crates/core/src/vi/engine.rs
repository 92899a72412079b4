//! Coordinate updates of the variational algorithm.
//!
//! A [`Problem`] bundles the data, both trees and the fixed prior settings.
//! Each `update_*` method maximizes the ELBO over one factor of the
//! variational family with all other factors held fixed.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::math::{digamma, log_sigmoid, sigmoid, softmax_in_place};
use crate::model::{jj_g, stick_break, PriorHyper};
use crate::tree::RootedWeightedTree;

use super::config::ModelConfig;
use super::state::{Moments, VariationalState};
use super::VIError;

/// Fixed inputs of a fit.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    ds: &'a Dataset,
    dtree: &'a RootedWeightedTree,
    ctree: &'a RootedWeightedTree,
    priors: PriorHyper,
    num_classes: usize,
    clamp: Vec<Option<bool>>,
    domain_members: Vec<Vec<usize>>,
    missing_rows: Vec<usize>,
    /// Domain-tree levels with at least one node.
    domain_levels: Vec<Vec<usize>>,
    cause_levels: Vec<Vec<usize>>,
}

/// Expected log bound pieces shared by every subject, laid out so that the
/// per-subject sums run over contiguous rows of length `C·K`.
#[derive(Debug, Clone)]
pub struct FTable {
    ck: usize,
    /// Stick block per domain, `[g][c·K + k]`.
    stick: Vec<f64>,
    /// Item block constant part, `[j][c·K + k]`.
    item_const: Vec<f64>,
    /// Item block slope in `X*_ij`, `[j][c·K + k]`.
    item_lin: Vec<f64>,
}

/// Soft counts of `e` and `r` needed by the node updates.
#[derive(Debug, Clone)]
pub struct SuffStats {
    /// `Σ_{i∈g} e_ic Σ_{m≥k} r_im`, shape `(C, G+1, K-1)`.
    pub tail_mass: Array3<f64>,
    /// `Σ_{i∈g} e_ic (r_ik − Σ_{m>k} r_im) / 2`, shape `(C, G+1, K-1)`.
    pub stick_drift: Array3<f64>,
    /// `Σ_{i∈ℐ_j} e_ic r_ik`, shape `(C, J, K)`.
    pub item_weight: Array3<f64>,
    /// `Σ_{i∈ℐ_j} e_ic r_ik X*_ij`, shape `(C, J, K)`.
    pub item_signed: Array3<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(
        ds: &'a Dataset,
        dtree: &'a RootedWeightedTree,
        ctree: &'a RootedWeightedTree,
        model: &ModelConfig,
    ) -> Result<Self, VIError> {
        let priors = PriorHyper {
            a: Array2::from_elem((ds.num_causes(), dtree.num_levels()), model.rho_a),
            b: Array2::from_elem((ds.num_causes(), dtree.num_levels()), model.rho_b),
            d: Array2::from_elem((ds.num_domains(), ds.num_causes()), model.dirichlet),
        };
        Self::with_priors(ds, dtree, ctree, model, priors)
    }

    /// As [`Problem::new`] with explicit per-cause and per-domain priors.
    pub fn with_priors(
        ds: &'a Dataset,
        dtree: &'a RootedWeightedTree,
        ctree: &'a RootedWeightedTree,
        model: &ModelConfig,
        priors: PriorHyper,
    ) -> Result<Self, VIError> {
        if ds.num_domains() != dtree.num_leaves() {
            return Err(VIError::Dimension(format!(
                "dataset has {} domains, domain tree has {} leaves",
                ds.num_domains(),
                dtree.num_leaves()
            )));
        }
        if ds.num_causes() != ctree.num_leaves() {
            return Err(VIError::Dimension(format!(
                "dataset has {} causes, cause tree has {} leaves",
                ds.num_causes(),
                ctree.num_leaves()
            )));
        }
        if model.num_classes == 0 || (model.num_classes == 1 && !model.allow_single_class) {
            return Err(VIError::InvalidConfig(format!(
                "K = {} is not allowed; the domain-adaptive prior needs K >= 2",
                model.num_classes
            )));
        }
        let (c, l, g) = (ds.num_causes(), dtree.num_levels(), ds.num_domains());
        if priors.a.dim() != (c, l) || priors.b.dim() != (c, l) || priors.d.dim() != (g, c) {
            return Err(VIError::Dimension("prior hyperparameter shapes".into()));
        }
        if priors.a.iter().chain(priors.b.iter()).chain(priors.d.iter()).any(|&x| !(x > 0.0)) {
            return Err(VIError::InvalidConfig("prior hyperparameters must be positive".into()));
        }
        let clamp = model.mode.clamp(dtree)?;
        let domain_members = (0..g).map(|gg| ds.subjects_in_domain(gg)).collect();
        let missing_rows = (0..ds.len()).filter(|&i| ds.cause(i).is_none()).collect();
        let domain_levels: Vec<Vec<usize>> = (1..=l).map(|lv| dtree.nodes_at_level(lv)).collect();
        let cause_levels: Vec<Vec<usize>> =
            (1..=ctree.num_levels()).map(|lv| ctree.nodes_at_level(lv)).collect();
        for (lv, nodes) in domain_levels.iter().enumerate() {
            if nodes.is_empty() {
                log::warn!("domain-tree level {} has no nodes; its variance stays fixed", lv + 1);
            }
        }
        for (lv, nodes) in cause_levels.iter().enumerate() {
            if nodes.is_empty() {
                log::warn!("cause-tree level {} has no nodes; its variance stays fixed", lv + 1);
            }
        }
        Ok(Self {
            ds,
            dtree,
            ctree,
            priors,
            num_classes: model.num_classes,
            clamp,
            domain_members,
            missing_rows,
            domain_levels,
            cause_levels,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    pub fn domain_tree(&self) -> &RootedWeightedTree {
        self.dtree
    }

    pub fn cause_tree(&self) -> &RootedWeightedTree {
        self.ctree
    }

    pub fn priors(&self) -> &PriorHyper {
        &self.priors
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_sticks(&self) -> usize {
        self.num_classes - 1
    }

    pub fn clamp(&self) -> &[Option<bool>] {
        &self.clamp
    }

    /// Subjects whose cause is unobserved.
    pub fn missing_rows(&self) -> &[usize] {
        &self.missing_rows
    }

    /// Initial state: small random means, prior variances, unit diffusion
    /// variances, pinned or uniform `e`, uniform `r`, priors for `ρ`, and
    /// bound parameters at the implied root second moments.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R, init_sd: f64) -> VariationalState {
        let ds = self.ds;
        let (n, c, k, g, j) = (ds.len(), ds.num_causes(), self.num_classes, ds.num_domains(), ds.num_items());
        let (p, ps) = (self.dtree.len(), self.ctree.len());
        let sticks = k - 1;
        let tau = vec![1.0; self.dtree.num_levels()];
        let tau_star = vec![1.0; self.ctree.num_levels()];
        let normal = Normal::new(0.0, init_sd).expect("init_sd is finite and non-negative");

        let alpha_mean = Array3::from_shape_simple_fn((c, p, sticks), || normal.sample(rng));
        let alpha_var = Array3::from_shape_fn((c, p, sticks), |(_, u, _)| self.prior_var(&tau, u));
        let spike_var = Array2::from_shape_fn((c, p), |(_, u)| self.prior_var(&tau, u));
        let slab_prob = Array2::from_shape_fn((c, p), |(_, u)| match self.clamp[u] {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => 0.5,
        });
        let gamma_mean = Array3::from_shape_simple_fn((ps, j, k), || normal.sample(rng));
        let gamma_var = Array3::from_shape_fn((ps, j, k), |(u, _, _)| self.prior_var_star(&tau_star, u));

        let mut e = Array2::from_elem((n, c), 1.0 / c as f64);
        for i in 0..n {
            if let Some(y) = ds.cause(i) {
                e.row_mut(i).fill(0.0);
                e[[i, y]] = 1.0;
            }
        }
        let r = Array2::from_elem((n, k), 1.0 / k as f64);

        let mut st = VariationalState {
            e,
            r,
            dirichlet: self.priors.d.clone(),
            slab_prob,
            alpha_mean,
            alpha_var,
            spike_var,
            gamma_mean,
            gamma_var,
            rho_a: self.priors.a.clone(),
            rho_b: self.priors.b.clone(),
            phi: Array3::zeros((c, g, sticks)),
            psi: Array3::zeros((c, j, k)),
            tau,
            tau_star,
        };
        self.update_pi(&mut st);
        self.update_local_bounds(&mut st);
        st
    }

    /// `τ_{ℓ_u} w_u` on the domain tree.
    pub fn prior_var(&self, tau: &[f64], u: usize) -> f64 {
        tau[self.dtree.level(u) - 1] * self.dtree.weight(u)
    }

    /// `τ*_{ℓ_u} w*_u` on the cause tree.
    pub fn prior_var_star(&self, tau_star: &[f64], u: usize) -> f64 {
        tau_star[self.ctree.level(u) - 1] * self.ctree.weight(u)
    }

    pub fn moments(&self, st: &VariationalState) -> Moments {
        let (c, g, j, k) = (self.ds.num_causes(), self.ds.num_domains(), self.ds.num_items(), self.num_classes);
        let sticks = k - 1;
        let mut eta_mean = Array3::zeros((c, g, sticks));
        let mut eta_sq = Array3::zeros((c, g, sticks));
        for cc in 0..c {
            for gg in 0..g {
                let leaf = self.dtree.leaf(gg);
                for kk in 0..sticks {
                    let (mut m, mut v) = (0.0, 0.0);
                    for &u in self.dtree.ancestors(leaf) {
                        m += st.xi_mean(cc, u, kk);
                        v += st.xi_var(cc, u, kk);
                    }
                    eta_mean[[cc, gg, kk]] = m;
                    eta_sq[[cc, gg, kk]] = v + m * m;
                }
            }
        }
        let mut beta_mean = Array3::zeros((c, j, k));
        let mut beta_sq = Array3::zeros((c, j, k));
        for cc in 0..c {
            let leaf = self.ctree.leaf(cc);
            for jj in 0..j {
                for kk in 0..k {
                    let (mut m, mut v) = (0.0, 0.0);
                    for &u in self.ctree.ancestors(leaf) {
                        m += st.gamma_mean[[u, jj, kk]];
                        v += st.gamma_var[[u, jj, kk]];
                    }
                    beta_mean[[cc, jj, kk]] = m;
                    beta_sq[[cc, jj, kk]] = v + m * m;
                }
            }
        }
        Moments { eta_mean, eta_sq, beta_mean, beta_sq }
    }

    pub fn f_table(&self, st: &VariationalState, mom: &Moments) -> FTable {
        let (c, g, j, k) = (self.ds.num_causes(), self.ds.num_domains(), self.ds.num_items(), self.num_classes);
        let ck = c * k;
        let mut stick = vec![0.0; g * ck];
        for gg in 0..g {
            for cc in 0..c {
                let mut below = 0.0;
                for kk in 0..k {
                    let mut val = below;
                    if kk + 1 < k {
                        let phi = st.phi[[cc, gg, kk]];
                        let (m, sq) = (mom.eta_mean[[cc, gg, kk]], mom.eta_sq[[cc, gg, kk]]);
                        let common = log_sigmoid(phi) - 0.5 * phi - jj_g(phi) * (sq - phi * phi);
                        val += common + 0.5 * m;
                        below += common - 0.5 * m;
                    }
                    stick[gg * ck + cc * k + kk] = val;
                }
            }
        }
        let mut item_const = vec![0.0; j * ck];
        let mut item_lin = vec![0.0; j * ck];
        for jj in 0..j {
            for cc in 0..c {
                for kk in 0..k {
                    let psi = st.psi[[cc, jj, kk]];
                    let ix = jj * ck + cc * k + kk;
                    item_const[ix] =
                        log_sigmoid(psi) - 0.5 * psi - jj_g(psi) * (mom.beta_sq[[cc, jj, kk]] - psi * psi);
                    item_lin[ix] = 0.5 * mom.beta_mean[[cc, jj, kk]];
                }
            }
        }
        FTable { ck, stick, item_const, item_lin }
    }

    /// `F_{ik}^{(c, D_i)}` for every `(c, k)`, written to `out[c·K + k]`.
    pub fn subject_f(&self, ft: &FTable, i: usize, out: &mut [f64]) {
        let ck = ft.ck;
        let g = self.ds.domain(i);
        out.copy_from_slice(&ft.stick[g * ck..(g + 1) * ck]);
        for &j in self.ds.items_observed(i) {
            let x = self.ds.signed(i, j);
            let cst = &ft.item_const[j * ck..(j + 1) * ck];
            let lin = &ft.item_lin[j * ck..(j + 1) * ck];
            for m in 0..ck {
                out[m] += cst[m] + x * lin[m];
            }
        }
    }

    /// `F` for all subjects, row-major `N × (C·K)`.
    pub fn all_f(&self, st: &VariationalState) -> Vec<f64> {
        let mom = self.moments(st);
        let ft = self.f_table(st, &mom);
        let ck = ft.ck;
        let mut out = vec![0.0; self.ds.len() * ck];
        for (i, chunk) in out.chunks_mut(ck).enumerate() {
            self.subject_f(&ft, i, chunk);
        }
        out
    }

    /// `E[log π_c^{(g)}]`, shape `(G+1, C)`.
    pub fn expected_log_pi(&self, st: &VariationalState) -> Array2<f64> {
        let mut out = st.dirichlet.mapv(digamma);
        for (mut row, dir) in out.rows_mut().into_iter().zip(st.dirichlet.rows()) {
            let total = digamma(dir.sum());
            row -= total;
        }
        out
    }

    /// Step for `q(Y_i)` on every subject with unobserved cause.
    pub fn update_e(&self, st: &mut VariationalState) {
        let f = self.all_f(st);
        self.update_e_with(st, &f);
    }

    pub(crate) fn update_e_with(&self, st: &mut VariationalState, f: &[f64]) {
        let (c, k) = (self.ds.num_causes(), self.num_classes);
        let elog_pi = self.expected_log_pi(st);
        let mut logits = vec![0.0; c];
        for &i in &self.missing_rows {
            let g = self.ds.domain(i);
            let fi = &f[i * c * k..(i + 1) * c * k];
            for (cc, l) in logits.iter_mut().enumerate() {
                *l = elog_pi[[g, cc]] + (0..k).map(|kk| st.r[[i, kk]] * fi[cc * k + kk]).sum::<f64>();
            }
            softmax_in_place(&mut logits);
            for (cc, &v) in logits.iter().enumerate() {
                st.e[[i, cc]] = v;
            }
        }
    }

    /// Step for `q(Z_i)` on every subject.
    pub fn update_r(&self, st: &mut VariationalState) {
        let f = self.all_f(st);
        self.update_r_with(st, &f);
    }

    pub(crate) fn update_r_with(&self, st: &mut VariationalState, f: &[f64]) {
        let (c, k) = (self.ds.num_causes(), self.num_classes);
        let mut logits = vec![0.0; k];
        for i in 0..self.ds.len() {
            let fi = &f[i * c * k..(i + 1) * c * k];
            logits.fill(0.0);
            for cc in 0..c {
                let e = st.e[[i, cc]];
                if e == 0.0 {
                    continue;
                }
                for (kk, l) in logits.iter_mut().enumerate() {
                    *l += e * fi[cc * k + kk];
                }
            }
            softmax_in_place(&mut logits);
            for (kk, &v) in logits.iter().enumerate() {
                st.r[[i, kk]] = v;
            }
        }
    }

    /// Step for `q(π^{(g)})`: within-domain soft counts plus the prior.
    pub fn update_pi(&self, st: &mut VariationalState) {
        st.dirichlet.assign(&self.priors.d);
        for (g, members) in self.domain_members.iter().enumerate() {
            for &i in members {
                for cc in 0..self.ds.num_causes() {
                    st.dirichlet[[g, cc]] += st.e[[i, cc]];
                }
            }
        }
    }

    pub fn suff_stats(&self, st: &VariationalState) -> SuffStats {
        let (c, g, j, k) = (self.ds.num_causes(), self.ds.num_domains(), self.ds.num_items(), self.num_classes);
        let sticks = k - 1;
        let mut tail_mass = Array3::zeros((c, g, sticks));
        let mut stick_drift = Array3::zeros((c, g, sticks));
        let mut item_weight = Array3::zeros((c, j, k));
        let mut item_signed = Array3::zeros((c, j, k));
        let mut tail = vec![0.0; k + 1];
        for i in 0..self.ds.len() {
            let gg = self.ds.domain(i);
            for kk in (0..k).rev() {
                tail[kk] = tail[kk + 1] + st.r[[i, kk]];
            }
            for cc in 0..c {
                let e = st.e[[i, cc]];
                if e == 0.0 {
                    continue;
                }
                for kk in 0..sticks {
                    tail_mass[[cc, gg, kk]] += e * tail[kk];
                    stick_drift[[cc, gg, kk]] += e * 0.5 * (st.r[[i, kk]] - tail[kk + 1]);
                }
                for &jj in self.ds.items_observed(i) {
                    let x = self.ds.signed(i, jj);
                    for kk in 0..k {
                        let w = e * st.r[[i, kk]];
                        item_weight[[cc, jj, kk]] += w;
                        item_signed[[cc, jj, kk]] += w * x;
                    }
                }
            }
        }
        SuffStats { tail_mass, stick_drift, item_weight, item_signed }
    }

    /// `E[log ρ] − E[log(1 − ρ)]` for cause `c` at level `level` (1-based).
    fn expected_log_odds_rho(&self, st: &VariationalState, c: usize, level: usize) -> f64 {
        digamma(st.rho_a[[c, level - 1]]) - digamma(st.rho_b[[c, level - 1]])
    }

    /// Joint step for `q(s_{cu}, α^{(c,u)})`.
    pub fn update_spike_slab(&self, st: &mut VariationalState, stats: &SuffStats, c: usize, u: usize) {
        let v = self.prior_var(&st.tau, u);
        let mut log_odds = self.expected_log_odds_rho(st, c, self.dtree.level(u));
        for k in 0..self.num_sticks() {
            let mut data_prec = 0.0;
            let mut drift = 0.0;
            for &g in self.dtree.leaf_labels_below(u) {
                let gphi = jj_g(st.phi[[c, g, k]]);
                let mass = stats.tail_mass[[c, g, k]];
                let rest: f64 = self
                    .dtree
                    .ancestors(self.dtree.leaf(g))
                    .iter()
                    .filter(|&&w| w != u)
                    .map(|&w| st.xi_mean(c, w, k))
                    .sum();
                data_prec += 2.0 * gphi * mass;
                drift += stats.stick_drift[[c, g, k]] - 2.0 * gphi * mass * rest;
            }
            let prec = 1.0 / v + data_prec;
            st.alpha_mean[[c, u, k]] = drift / prec;
            st.alpha_var[[c, u, k]] = 1.0 / prec;
            log_odds += drift * drift / (2.0 * prec) - 0.5 * (v * data_prec).ln_1p();
        }
        st.spike_var[[c, u]] = v;
        st.slab_prob[[c, u]] = match self.clamp[u] {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => sigmoid(log_odds),
        };
    }

    /// Spike-and-slab steps for every cause, nodes in preorder.
    pub fn update_all_spike_slab(&self, st: &mut VariationalState, stats: &SuffStats) {
        for c in 0..self.ds.num_causes() {
            for u in 0..self.dtree.len() {
                self.update_spike_slab(st, stats, c, u);
            }
        }
    }

    /// Step for `q(γ^{(u)})` at cause-tree node `u`.
    pub fn update_gamma(&self, st: &mut VariationalState, stats: &SuffStats, u: usize) {
        let v = self.prior_var_star(&st.tau_star, u);
        let (j, k) = (self.ds.num_items(), self.num_classes);
        for jj in 0..j {
            for kk in 0..k {
                let mut prec = 1.0 / v;
                let mut lin = 0.0;
                for &c in self.ctree.leaf_labels_below(u) {
                    let gpsi = jj_g(st.psi[[c, jj, kk]]);
                    let w = stats.item_weight[[c, jj, kk]];
                    let rest: f64 = self
                        .ctree
                        .ancestors(self.ctree.leaf(c))
                        .iter()
                        .filter(|&&x| x != u)
                        .map(|&x| st.gamma_mean[[x, jj, kk]])
                        .sum();
                    prec += 2.0 * gpsi * w;
                    lin += 0.5 * stats.item_signed[[c, jj, kk]] - 2.0 * gpsi * w * rest;
                }
                st.gamma_mean[[u, jj, kk]] = lin / prec;
                st.gamma_var[[u, jj, kk]] = 1.0 / prec;
            }
        }
    }

    pub fn update_all_gamma(&self, st: &mut VariationalState, stats: &SuffStats) {
        for u in 0..self.ctree.len() {
            self.update_gamma(st, stats, u);
        }
    }

    /// Step for `q(ρ_{cℓ})`.
    pub fn update_rho(&self, st: &mut VariationalState) {
        for c in 0..self.ds.num_causes() {
            for (lv, nodes) in self.domain_levels.iter().enumerate() {
                let on: f64 = nodes.iter().map(|&u| st.slab_prob[[c, u]]).sum();
                st.rho_a[[c, lv]] = self.priors.a[[c, lv]] + on;
                st.rho_b[[c, lv]] = self.priors.b[[c, lv]] + nodes.len() as f64 - on;
            }
        }
    }

    /// Bound parameters at the root second moments.
    pub fn update_local_bounds(&self, st: &mut VariationalState) {
        let mom = self.moments(st);
        st.phi = mom.eta_sq.mapv(f64::sqrt);
        st.psi = mom.beta_sq.mapv(f64::sqrt);
    }

    /// Empirical-Bayes steps for `τ` and `τ*`.
    ///
    /// `τ*_ℓ` is the level-wise mean of weight-scaled second moments. For
    /// `τ_ℓ` the spike variances `τ_ℓ w_u` move together with `τ_ℓ`, so the
    /// joint maximizer is the slab-probability-weighted mean of the scaled
    /// slab second moments; this is the fixed point of the plain level-wise
    /// mean of `E[α²]/w_u`, reached in one step. Levels without nodes or
    /// without slab mass are left alone.
    pub fn update_hyper(&self, st: &mut VariationalState) {
        let (c, sticks) = (self.ds.num_causes(), self.num_sticks());
        if sticks > 0 {
            for (lv, nodes) in self.domain_levels.iter().enumerate() {
                let mut total = 0.0;
                let mut mass = 0.0;
                for &u in nodes {
                    let w = self.dtree.weight(u);
                    for cc in 0..c {
                        let p = st.slab_prob[[cc, u]];
                        if p == 0.0 {
                            continue;
                        }
                        mass += p * sticks as f64;
                        for k in 0..sticks {
                            let m = st.alpha_mean[[cc, u, k]];
                            total += p * (st.alpha_var[[cc, u, k]] + m * m) / w;
                        }
                    }
                }
                if mass > 0.0 {
                    st.tau[lv] = total / mass;
                    for &u in nodes {
                        let v = self.prior_var(&st.tau, u);
                        st.spike_var.column_mut(u).fill(v);
                    }
                }
            }
        }
        let (j, k) = (self.ds.num_items(), self.num_classes);
        if j == 0 {
            return;
        }
        for (lv, nodes) in self.cause_levels.iter().enumerate() {
            if nodes.is_empty() {
                continue;
            }
            let mut total = 0.0;
            for &u in nodes {
                let w = self.ctree.weight(u);
                for jj in 0..j {
                    for kk in 0..k {
                        let m = st.gamma_mean[[u, jj, kk]];
                        total += (st.gamma_var[[u, jj, kk]] + m * m) / w;
                    }
                }
            }
            st.tau_star[lv] = total / (nodes.len() * j * k) as f64;
        }
    }

    /// Mixing weights `λ^{(c,g)}` at the posterior mean stick logits,
    /// indexed `[g][c][k]`.
    pub fn plug_in_lambda(&self, st: &VariationalState) -> Vec<Vec<Vec<f64>>> {
        let mom = self.moments(st);
        let (c, g, _) = mom.eta_mean.dim();
        (0..g)
            .map(|gg| {
                (0..c)
                    .map(|cc| {
                        let eta: Vec<f64> = (0..self.num_sticks()).map(|k| mom.eta_mean[[cc, gg, k]]).collect();
                        stick_break(&eta).expect("posterior means are finite")
                    })
                    .collect()
            })
            .collect()
    }

    /// One sweep `t` (1-based) of every update in the algorithm's order, up to
    /// but excluding the ELBO evaluation.
    pub fn sweep(&self, st: &mut VariationalState, t: usize, controls: &super::FitControls) {
        let f = self.all_f(st);
        self.update_e_with(st, &f);
        self.update_r_with(st, &f);
        self.update_pi(st);
        let stats = self.suff_stats(st);
        self.update_all_spike_slab(st, &stats);
        self.update_all_gamma(st, &stats);
        self.update_rho(st);
        let hyper_sweep = t % controls.hyper_interval == 0;
        if controls.local_bounds_every_sweep || hyper_sweep {
            self.update_local_bounds(st);
        }
        if controls.update_hyper && hyper_sweep {
            self.update_hyper(st);
            for _ in 1..controls.hyper_passes {
                let stats = self.suff_stats(st);
                self.update_all_spike_slab(st, &stats);
                self.update_all_gamma(st, &stats);
                self.update_hyper(st);
            }
        }
    }
}
