//! Model parameters and deterministic maps between them.
//!
//! Class mixing weights use logistic stick-breaking over sticks `k = 0..K-1`
//! (0-based, `K-1` sticks), with stick logits `η^{(c,g)}` formed by summing
//! spike-and-slab increments `s_{cu} α^{(c,u)}` down the domain tree. Item
//! response probabilities are `θ^{(c)} = expit(β^{(c)})`, with `β^{(c)}` the
//! ancestor sum of cause-tree increments `γ^{(u)}`.
//!
//! Also here: the Jaakkola–Jordan sigmoid bound `h(x, ψ)` and evaluation of
//! the complete-data log joint density and of its bound `log H`.

use ndarray::{Array2, Array3, ArrayView2};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::math::{ln_multi_beta, log_sigmoid, sigmoid, stable_sum, NeumaierSum};
use crate::tree::{RootedWeightedTree, TreeError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("point on the simplex boundary: {0}")]
    SimplexBoundary(String),
    #[error("response probability {0} outside (0, 1)")]
    ThetaOutOfRange(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `g(ψ) = (σ(ψ) − ½) / (2ψ) = tanh(ψ/2) / (4ψ)`, continuous at 0.
pub fn jj_g(psi: f64) -> f64 {
    let psi = psi.abs();
    if psi < 1e-4 {
        // tanh(x/2)/(4x) = 1/8 − x²/96 + O(x⁴)
        0.125 - psi * psi / 96.0
    } else {
        (0.5 * psi).tanh() / (4.0 * psi)
    }
}

/// `log h(x, ψ) = log σ(ψ) + (x − ψ)/2 − g(ψ)(x² − ψ²)`.
pub fn log_jj_lower_bound(x: f64, psi: f64) -> f64 {
    // Factored so the correction vanishes exactly at x = ψ.
    log_sigmoid(psi) + (x - psi) * (0.5 - jj_g(psi) * (x + psi))
}

/// `h(x, ψ) ≤ σ(x)`, with equality at `x = ±ψ`.
pub fn jj_lower_bound(x: f64, psi: f64) -> f64 {
    log_jj_lower_bound(x, psi).exp()
}

/// Log mixing weights `log λ` from `K-1` stick logits.
pub fn log_stick_break(eta: &[f64]) -> Result<Vec<f64>, ModelError> {
    if let Some(x) = eta.iter().find(|x| !x.is_finite()) {
        return Err(ModelError::NonFinite(format!("stick logit {x}")));
    }
    let mut out = Vec::with_capacity(eta.len() + 1);
    let mut remaining = 0.0;
    for &e in eta {
        out.push(remaining + log_sigmoid(e));
        remaining += log_sigmoid(-e);
    }
    out.push(remaining);
    Ok(out)
}

/// Mixing weights `λ_k = σ(η_k)^{1{k<K}} Π_{s<k} σ(−η_s)`.
pub fn stick_break(eta: &[f64]) -> Result<Vec<f64>, ModelError> {
    Ok(log_stick_break(eta)?.into_iter().map(f64::exp).collect())
}

/// Inverse of [`stick_break`] on the interior of the simplex.
pub fn stick_break_inverse(lambda: &[f64]) -> Result<Vec<f64>, ModelError> {
    if lambda.is_empty() {
        return Err(ModelError::Dimension("empty weight vector".into()));
    }
    if let Some(x) = lambda.iter().find(|x| !x.is_finite()) {
        return Err(ModelError::NonFinite(format!("weight {x}")));
    }
    if let Some(x) = lambda.iter().find(|&&x| x <= 0.0) {
        return Err(ModelError::SimplexBoundary(format!("weight {x}")));
    }
    let k = lambda.len();
    // Remainder after stick s: tail sums computed from the right for accuracy.
    let mut tail = vec![0.0; k + 1];
    for s in (0..k).rev() {
        tail[s] = tail[s + 1] + lambda[s];
    }
    Ok((0..k - 1).map(|s| lambda[s].ln() - tail[s + 1].ln()).collect())
}

/// Spike-and-slab stick-logit increments on the domain tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMixingParams {
    /// `α_k^{(c,u)}`, shape `(C, p, K-1)`.
    pub alpha: Array3<f64>,
    /// `s_{cu}`, shape `(C, p)`; the root column is always on.
    pub slab: Array2<bool>,
    /// `ρ_{cℓ}`, shape `(C, L)`, level `ℓ` stored at column `ℓ - 1`.
    pub rho: Array2<f64>,
}

impl DomainMixingParams {
    pub fn num_sticks(&self) -> usize {
        self.alpha.dim().2
    }

    /// `ξ_k^{(c,u)} = s_{cu} α_k^{(c,u)}`.
    pub fn xi(&self, c: usize, u: usize, k: usize) -> f64 {
        if self.slab[[c, u]] {
            self.alpha[[c, u, k]]
        } else {
            0.0
        }
    }

    /// Stick logits `η^{(c,g)}` at domain-tree leaf node `g`.
    pub fn eta(&self, tree: &RootedWeightedTree, c: usize, g: usize) -> Result<Vec<f64>, ModelError> {
        tree.require_leaf(g)?;
        Ok((0..self.num_sticks())
            .map(|k| tree.ancestors(g).iter().map(|&u| self.xi(c, u, k)).sum())
            .collect())
    }

    /// `λ^{(c,g)}` at domain-tree leaf node `g`.
    pub fn lambda(&self, tree: &RootedWeightedTree, c: usize, g: usize) -> Result<Vec<f64>, ModelError> {
        stick_break(&self.eta(tree, c, g)?)
    }
}

/// Cause-tree increments of the item logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseProfileParams {
    /// `γ_{jk}^{(u)}`, shape `(p*, J, K)`.
    pub gamma: Array3<f64>,
}

impl ResponseProfileParams {
    /// `β^{(c)}` at cause-tree leaf node `c`, shape `(J, K)`.
    pub fn beta(&self, tree: &RootedWeightedTree, c: usize) -> Result<Array2<f64>, ModelError> {
        tree.require_leaf(c)?;
        let (_, j, k) = self.gamma.dim();
        let mut out = Array2::zeros((j, k));
        for &u in tree.ancestors(c) {
            out += &self.gamma.index_axis(ndarray::Axis(0), u);
        }
        Ok(out)
    }

    /// `θ^{(c)} = expit(β^{(c)})` at cause-tree leaf node `c`.
    pub fn theta(&self, tree: &RootedWeightedTree, c: usize) -> Result<Array2<f64>, ModelError> {
        Ok(self.beta(tree, c)?.mapv(sigmoid))
    }
}

/// Cause fractions per domain with their Dirichlet prior.
#[derive(Debug, Clone, PartialEq)]
pub struct CsmfParams {
    /// `π^{(g)}`, shape `(G+1, C)`.
    pub pi: Array2<f64>,
}

/// Fixed prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorHyper {
    /// Beta prior `a_{cℓ}`, shape `(C, L)`.
    pub a: Array2<f64>,
    /// Beta prior `b_{cℓ}`, shape `(C, L)`.
    pub b: Array2<f64>,
    /// Dirichlet prior `d^{(g)}`, shape `(G+1, C)`.
    pub d: Array2<f64>,
}

impl PriorHyper {
    /// `a = b = 1`, `d = 1`.
    pub fn unit(num_causes: usize, num_levels: usize, num_domains: usize) -> Self {
        Self {
            a: Array2::ones((num_causes, num_levels)),
            b: Array2::ones((num_causes, num_levels)),
            d: Array2::ones((num_domains, num_causes)),
        }
    }
}

/// A complete instantiation of the unknowns `Γ` (latent labels excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mixing: DomainMixingParams,
    pub profiles: ResponseProfileParams,
    pub csmf: CsmfParams,
    /// Diffusion variances `τ_ℓ` of the domain tree, level `ℓ` at index `ℓ - 1`.
    pub tau: Vec<f64>,
    /// Diffusion variances `τ*_ℓ` of the cause tree.
    pub tau_star: Vec<f64>,
}

/// Labelled additive pieces of a log density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermBreakdown {
    pub terms: Vec<(&'static str, f64)>,
}

impl TermBreakdown {
    pub fn push(&mut self, label: &'static str, value: f64) {
        self.terms.push((label, value));
    }

    pub fn total(&self) -> f64 {
        stable_sum(self.terms.iter().map(|t| t.1))
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == label).map(|t| t.1)
    }

    /// First non-finite term, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.terms.iter().find(|t| !t.1.is_finite()).map(|t| t.0)
    }
}

/// `log Σ_k λ_k Π_{j∈𝒥_i} θ_{jk}^{x_j} (1 − θ_{jk})^{1 − x_j}`. Entries of `x`
/// outside `observed` are never read.
pub fn class_conditional_loglik(
    x: &[u8],
    observed: &[usize],
    theta: ArrayView2<f64>,
    lambda: &[f64],
) -> Result<f64, ModelError> {
    let (j, k) = theta.dim();
    if lambda.len() != k || x.len() != j {
        return Err(ModelError::Dimension(format!(
            "theta is {j}x{k}, lambda has {}, x has {}",
            lambda.len(),
            x.len()
        )));
    }
    if let Some(t) = theta.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(ModelError::ThetaOutOfRange(*t));
    }
    let terms: Vec<f64> = (0..k)
        .map(|kk| {
            lambda[kk].ln()
                + observed
                    .iter()
                    .map(|&jj| {
                        let t = theta[[jj, kk]];
                        if x[jj] == 1 {
                            t.ln()
                        } else {
                            (-t).ln_1p()
                        }
                    })
                    .sum::<f64>()
        })
        .collect();
    Ok(crate::math::log_sum_exp(&terms))
}

fn check_shapes(
    ds: &Dataset,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    params: &ModelParams,
    priors: &PriorHyper,
    z: &[usize],
    y: &[usize],
) -> Result<(), ModelError> {
    let (c, p, _) = params.mixing.alpha.dim();
    let (ps, j, k) = params.profiles.gamma.dim();
    let g = ds.num_domains();
    let ok = c == ds.num_causes()
        && p == dtree.len()
        && params.mixing.slab.dim() == (c, p)
        && params.mixing.rho.dim() == (c, dtree.num_levels())
        && params.mixing.num_sticks() + 1 == k
        && ps == ctree.len()
        && j == ds.num_items()
        && params.csmf.pi.dim() == (g, c)
        && priors.a.dim() == (c, dtree.num_levels())
        && priors.b.dim() == (c, dtree.num_levels())
        && priors.d.dim() == (g, c)
        && params.tau.len() == dtree.num_levels()
        && params.tau_star.len() == ctree.num_levels()
        && dtree.num_leaves() == g
        && ctree.num_leaves() == c
        && z.len() == ds.len()
        && y.len() == ds.len()
        && z.iter().all(|&zz| zz < k)
        && y.iter().all(|&yy| yy < c);
    if ok {
        Ok(())
    } else {
        Err(ModelError::Dimension("parameters, trees, dataset and latent labels disagree".into()))
    }
}

/// Local bound parameters for [`log_h`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBounds {
    /// `φ_k^{(c,g)}`, shape `(C, G+1, K-1)`, indexed by domain label.
    pub phi: Array3<f64>,
    /// `ψ_{jk}^{(c)}`, shape `(C, J, K)`, indexed by cause label.
    pub psi: Array3<f64>,
}

fn prior_terms(
    out: &mut TermBreakdown,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    params: &ModelParams,
    priors: &PriorHyper,
) {
    let (num_c, p, sticks) = params.mixing.alpha.dim();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();

    let mut s = NeumaierSum::new();
    for c in 0..num_c {
        for u in 0..p {
            let v = params.tau[dtree.level(u) - 1] * dtree.weight(u);
            for k in 0..sticks {
                let a = params.mixing.alpha[[c, u, k]];
                s.add(-0.5 * (ln2pi + v.ln()) - a * a / (2.0 * v));
            }
        }
    }
    out.push("domain_gaussian", s.value());

    let (ps, j, k) = params.profiles.gamma.dim();
    let mut s = NeumaierSum::new();
    for u in 0..ps {
        let v = params.tau_star[ctree.level(u) - 1] * ctree.weight(u);
        for jj in 0..j {
            for kk in 0..k {
                let g = params.profiles.gamma[[u, jj, kk]];
                s.add(-0.5 * (ln2pi + v.ln()) - g * g / (2.0 * v));
            }
        }
    }
    out.push("cause_gaussian", s.value());

    let mut s = NeumaierSum::new();
    for c in 0..num_c {
        for u in 0..p {
            let rho = params.mixing.rho[[c, dtree.level(u) - 1]];
            s.add(if params.mixing.slab[[c, u]] { rho.ln() } else { (-rho).ln_1p() });
        }
    }
    out.push("slab_bernoulli", s.value());

    let mut s = NeumaierSum::new();
    for ((&rho, &a), &b) in params.mixing.rho.iter().zip(priors.a.iter()).zip(priors.b.iter()) {
        s.add((a - 1.0) * rho.ln() + (b - 1.0) * (-rho).ln_1p() - ln_multi_beta(&[a, b]));
    }
    out.push("rho_beta", s.value());

    let mut s = NeumaierSum::new();
    for (pi_row, d_row) in params.csmf.pi.rows().into_iter().zip(priors.d.rows()) {
        for (&pi, &d) in pi_row.iter().zip(d_row.iter()) {
            s.add((d - 1.0) * pi.ln());
        }
        s.add(-ln_multi_beta(d_row.as_slice().expect("standard layout")));
    }
    out.push("pi_dirichlet", s.value());
}

/// Complete-data log joint density `log pr(𝒟, Γ)` with latent classes `z`
/// and completed cause labels `y`, all normalizing constants included.
#[allow(clippy::too_many_arguments)]
pub fn log_joint(
    ds: &Dataset,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    params: &ModelParams,
    priors: &PriorHyper,
    z: &[usize],
    y: &[usize],
) -> Result<TermBreakdown, ModelError> {
    check_shapes(ds, dtree, ctree, params, priors, z, y)?;
    let num_c = ds.num_causes();
    let betas = (0..num_c)
        .map(|c| params.profiles.beta(ctree, ctree.leaf(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut log_lambda = Vec::with_capacity(num_c);
    for c in 0..num_c {
        let per_domain = (0..ds.num_domains())
            .map(|g| log_stick_break(&params.mixing.eta(dtree, c, dtree.leaf(g))?))
            .collect::<Result<Vec<_>, _>>()?;
        log_lambda.push(per_domain);
    }
    let mut out = TermBreakdown::default();
    let (mut pi_s, mut mix_s, mut item_s) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for i in 0..ds.len() {
        let (g, c, k) = (ds.domain(i), y[i], z[i]);
        pi_s.add(params.csmf.pi[[g, c]].ln());
        mix_s.add(log_lambda[c][g][k]);
        for &j in ds.items_observed(i) {
            item_s.add(log_sigmoid(ds.signed(i, j) * betas[c][[j, k]]));
        }
    }
    out.push("pi_likelihood", pi_s.value());
    out.push("mixing_likelihood", mix_s.value());
    out.push("item_likelihood", item_s.value());
    prior_terms(&mut out, dtree, ctree, params, priors);
    Ok(out)
}

/// `log H`: the log joint with every sigmoid replaced by its Jaakkola–Jordan
/// bound at the supplied local parameters. Bounded above by [`log_joint`].
#[allow(clippy::too_many_arguments)]
pub fn log_h(
    ds: &Dataset,
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    params: &ModelParams,
    priors: &PriorHyper,
    z: &[usize],
    y: &[usize],
    bounds: &LocalBounds,
) -> Result<TermBreakdown, ModelError> {
    check_shapes(ds, dtree, ctree, params, priors, z, y)?;
    let num_c = ds.num_causes();
    let sticks = params.mixing.num_sticks();
    if bounds.phi.dim() != (num_c, ds.num_domains(), sticks)
        || bounds.psi.dim() != (num_c, ds.num_items(), sticks + 1)
    {
        return Err(ModelError::Dimension("local bound parameters".into()));
    }
    let betas = (0..num_c)
        .map(|c| params.profiles.beta(ctree, ctree.leaf(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut etas = Vec::with_capacity(num_c);
    for c in 0..num_c {
        let per_domain = (0..ds.num_domains())
            .map(|g| params.mixing.eta(dtree, c, dtree.leaf(g)))
            .collect::<Result<Vec<_>, _>>()?;
        etas.push(per_domain);
    }
    let mut out = TermBreakdown::default();
    let (mut pi_s, mut mix_s, mut item_s) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for i in 0..ds.len() {
        let (g, c, k) = (ds.domain(i), y[i], z[i]);
        pi_s.add(params.csmf.pi[[g, c]].ln());
        let eta = &etas[c][g];
        for m in 0..k.min(sticks) {
            mix_s.add(log_jj_lower_bound(-eta[m], bounds.phi[[c, g, m]]));
        }
        if k < sticks {
            mix_s.add(log_jj_lower_bound(eta[k], bounds.phi[[c, g, k]]));
        }
        for &j in ds.items_observed(i) {
            item_s.add(log_jj_lower_bound(ds.signed(i, j) * betas[c][[j, k]], bounds.psi[[c, j, k]]));
        }
    }
    out.push("pi_likelihood", pi_s.value());
    out.push("mixing_likelihood", mix_s.value());
    out.push("item_likelihood", item_s.value());
    prior_terms(&mut out, dtree, ctree, params, priors);
    Ok(out)
}

/// Local bounds that make [`log_h`] tight at `params`: `φ = |η|`, `ψ = |β|`.
pub fn tight_bounds(
    dtree: &RootedWeightedTree,
    ctree: &RootedWeightedTree,
    params: &ModelParams,
) -> Result<LocalBounds, ModelError> {
    let (num_c, _, sticks) = params.mixing.alpha.dim();
    let (_, j, k) = params.profiles.gamma.dim();
    let g = dtree.num_leaves();
    let mut phi = Array3::zeros((num_c, g, sticks));
    let mut psi = Array3::zeros((num_c, j, k));
    for c in 0..num_c {
        for gg in 0..g {
            for (m, e) in params.mixing.eta(dtree, c, dtree.leaf(gg))?.into_iter().enumerate() {
                phi[[c, gg, m]] = e.abs();
            }
        }
        let beta = params.profiles.beta(ctree, ctree.leaf(c))?;
        psi.index_axis_mut(ndarray::Axis(0), c).assign(&beta.mapv(f64::abs));
    }
    Ok(LocalBounds { phi, psi })
}

/// Prior correlation between the diffusion values at leaves `v` and `v2`
/// when every slab is on: shared ancestor weight over the geometric mean of
/// the two root-to-leaf weight sums (the root's unit weight included).
pub fn prior_correlation(tree: &RootedWeightedTree, v: usize, v2: usize) -> Result<f64, ModelError> {
    tree.require_leaf(v)?;
    tree.require_leaf(v2)?;
    let depth = |x: usize| tree.ancestors(x).iter().map(|&u| tree.weight(u)).sum::<f64>();
    let shared: f64 = tree
        .ancestors(v)
        .iter()
        .filter(|&&u| tree.is_ancestor(u, v2))
        .map(|&u| tree.weight(u))
        .sum();
    Ok(shared / (depth(v) * depth(v2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tests::figure_one;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn stick_break_examples() {
        let l = stick_break(&[0.0, 0.0]).unwrap();
        assert_eq!(l, vec![0.5, 0.25, 0.25]);
        let l = stick_break(&[1e4]).unwrap();
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[1], 0.0, epsilon = 1e-15);
        let l = stick_break(&[-(2f64.ln()), 0.0]).unwrap();
        for x in l {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert!(matches!(stick_break(&[f64::NAN]), Err(ModelError::NonFinite(_))));
        assert_eq!(stick_break(&[]).unwrap(), vec![1.0]);
    }

    #[test]
    fn stick_break_inverse_examples() {
        let e = stick_break_inverse(&[0.5, 0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(e[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-15);
        let e = stick_break_inverse(&[1.0 / 3.0; 3]).unwrap();
        assert_abs_diff_eq!(e[0], -(2f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-12);
        assert!(matches!(stick_break_inverse(&[1.0, 0.0]), Err(ModelError::SimplexBoundary(_))));
    }

    #[test]
    fn jj_bound_examples() {
        for psi in [0.5, 1.0, 3.0] {
            assert_abs_diff_eq!(jj_lower_bound(psi, psi), sigmoid(psi), epsilon = 1e-15);
            assert_abs_diff_eq!(jj_lower_bound(-psi, psi), sigmoid(-psi), epsilon = 1e-15);
        }
        assert_eq!(jj_g(0.0), 0.125);
        // Series and closed form agree across the switch point.
        let below = jj_g(0.999_999e-4);
        let above = jj_g(1.000_001e-4);
        assert_abs_diff_eq!(below, above, epsilon = 1e-14);
        assert_abs_diff_eq!(jj_g(2.0), (sigmoid(2.0) - 0.5) / 4.0, epsilon = 1e-15);
    }

    fn tiny_mixing(tree: &RootedWeightedTree, slab_non_root: bool) -> DomainMixingParams {
        let p = tree.len();
        let mut slab = Array2::from_elem((1, p), slab_non_root);
        slab[[0, 0]] = true;
        DomainMixingParams {
            alpha: Array3::from_shape_fn((1, p, 2), |(_, u, k)| 0.3 * u as f64 - 0.7 * k as f64 + 0.1),
            slab,
            rho: Array2::from_elem((1, 2), 0.5),
        }
    }

    #[test]
    fn eta_from_tree_examples() {
        let t = figure_one();
        let pooled = tiny_mixing(&t, false);
        let first = pooled.lambda(&t, 0, t.leaf(0)).unwrap();
        for g in 1..t.num_leaves() {
            assert_eq!(pooled.lambda(&t, 0, t.leaf(g)).unwrap(), first);
        }

        let mut m = tiny_mixing(&t, true);
        m.alpha.fill(0.0);
        m.alpha[[0, 0, 0]] = 0.4;
        m.alpha[[0, 0, 1]] = -1.2;
        assert_eq!(m.eta(&t, 0, t.node("7").unwrap()).unwrap(), vec![0.4, -1.2]);

        m.alpha[[0, 0, 0]] = 1.0;
        m.alpha[[0, t.node("2").unwrap(), 0]] = -2.0;
        assert_eq!(m.eta(&t, 0, t.node("5").unwrap()).unwrap()[0], -1.0);
        assert!(matches!(m.eta(&t, 0, t.node("2").unwrap()), Err(ModelError::Tree(TreeError::NotALeaf(_)))));
    }

    #[test]
    fn theta_from_gamma_examples() {
        let t = RootedWeightedTree::star("r", &["a", "b"]).unwrap();
        let mut prof = ResponseProfileParams { gamma: Array3::zeros((3, 2, 2)) };
        assert!(prof.theta(&t, t.leaf(0)).unwrap().iter().all(|&x| x == 0.5));
        prof.gamma.index_axis_mut(ndarray::Axis(0), 0).fill(0.8);
        assert_eq!(prof.theta(&t, t.leaf(0)).unwrap(), prof.theta(&t, t.leaf(1)).unwrap());
        prof.gamma.index_axis_mut(ndarray::Axis(0), 0).fill(1.0);
        prof.gamma.index_axis_mut(ndarray::Axis(0), t.leaf(1)).fill(-1.0);
        assert!(prof.theta(&t, t.leaf(1)).unwrap().iter().all(|&x| x == 0.5));
        assert!(prof.theta(&t, t.root()).is_err());
    }

    #[test]
    fn class_conditional_loglik_examples() {
        let theta = array![[0.5], [0.5]];
        assert_eq!(class_conditional_loglik(&[1, 0], &[], theta.view(), &[1.0]).unwrap(), 0.0);
        let v = class_conditional_loglik(&[1, 0], &[0, 1], theta.view(), &[1.0]).unwrap();
        assert_abs_diff_eq!(v, 0.25f64.ln(), epsilon = 1e-15);
        let theta = array![[0.9, 0.1]];
        let v = class_conditional_loglik(&[1], &[0], theta.view(), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v, 0.5f64.ln(), epsilon = 1e-15);
        let bad = array![[1.0, 0.1]];
        assert!(matches!(
            class_conditional_loglik(&[1], &[0], bad.view(), &[0.5, 0.5]),
            Err(ModelError::ThetaOutOfRange(_))
        ));
    }

    #[test]
    fn prior_correlation_examples() {
        let t = figure_one();
        let (five, six, four) = (t.node("5").unwrap(), t.node("6").unwrap(), t.node("4").unwrap());
        assert_abs_diff_eq!(prior_correlation(&t, five, five).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(prior_correlation(&t, five, six).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(prior_correlation(&t, five, four).unwrap(), 1.0 / 6f64.sqrt(), epsilon = 1e-15);
        assert!(prior_correlation(&t, t.root(), five).is_err());
    }
}
