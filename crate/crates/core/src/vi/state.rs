//! Variational parameters and the moments derived from them.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

/// All variational parameters of one fit.
///
/// Index conventions: `c` cause label, `g` domain label, `u` dense node index
/// of the relevant tree, `k` class (or stick, for `K-1`-sized axes), `j` item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    /// `q(Y_i)`, shape `(N, C)`.
    pub e: Array2<f64>,
    /// `q(Z_i)`, shape `(N, K)`.
    pub r: Array2<f64>,
    /// Posterior Dirichlet parameters of `π^{(g)}`, shape `(G+1, C)`.
    pub dirichlet: Array2<f64>,
    /// `p_{cu} = q(s_{cu} = 1)`, shape `(C, p)`.
    pub slab_prob: Array2<f64>,
    /// Slab-conditional means `μ_{α,1}`, shape `(C, p, K-1)`.
    pub alpha_mean: Array3<f64>,
    /// Slab-conditional variances `σ²_{α,1}`, shape `(C, p, K-1)`.
    pub alpha_var: Array3<f64>,
    /// Spike-conditional variances `σ²_{α,0}`, shape `(C, p)`.
    pub spike_var: Array2<f64>,
    /// Means of `γ^{(u)}_{jk}`, shape `(p*, J, K)`.
    pub gamma_mean: Array3<f64>,
    /// Variances of `γ^{(u)}_{jk}`, shape `(p*, J, K)`.
    pub gamma_var: Array3<f64>,
    /// Posterior Beta parameters `a'`, shape `(C, L)`.
    pub rho_a: Array2<f64>,
    /// Posterior Beta parameters `b'`, shape `(C, L)`.
    pub rho_b: Array2<f64>,
    /// Stick bound parameters `φ_k^{(c,g)}`, shape `(C, G+1, K-1)`.
    pub phi: Array3<f64>,
    /// Item bound parameters `ψ_{jk}^{(c)}`, shape `(C, J, K)`.
    pub psi: Array3<f64>,
    /// Domain-tree diffusion variances `τ_ℓ`.
    pub tau: Vec<f64>,
    /// Cause-tree diffusion variances `τ*_ℓ`.
    pub tau_star: Vec<f64>,
}

impl VariationalState {
    pub fn num_classes(&self) -> usize {
        self.r.ncols()
    }

    /// `E[ξ_k^{(c,u)}] = p_{cu} μ_{α,1}`.
    pub fn xi_mean(&self, c: usize, u: usize, k: usize) -> f64 {
        self.slab_prob[[c, u]] * self.alpha_mean[[c, u, k]]
    }

    /// `Var[ξ_k^{(c,u)}] = p σ²_1 + p(1 − p) μ²`.
    pub fn xi_var(&self, c: usize, u: usize, k: usize) -> f64 {
        let p = self.slab_prob[[c, u]];
        let m = self.alpha_mean[[c, u, k]];
        p * self.alpha_var[[c, u, k]] + p * (1.0 - p) * m * m
    }

    /// `E[α²] = p(σ²_1 + μ²) + (1 − p) σ²_0`.
    pub fn alpha_second_moment(&self, c: usize, u: usize, k: usize) -> f64 {
        let p = self.slab_prob[[c, u]];
        let m = self.alpha_mean[[c, u, k]];
        p * (self.alpha_var[[c, u, k]] + m * m) + (1.0 - p) * self.spike_var[[c, u]]
    }

    /// Posterior mean of `π^{(g)}`.
    pub fn pi_mean(&self, g: usize) -> Vec<f64> {
        let row = self.dirichlet.row(g);
        let total: f64 = row.sum();
        row.iter().map(|&a| a / total).collect()
    }

    /// Checks the structural invariants: simplex rows, positive variances and
    /// Beta/Dirichlet parameters, root slab on.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (name, m) in [("e", &self.e), ("r", &self.r)] {
            for (i, row) in m.rows().into_iter().enumerate() {
                let s: f64 = row.sum();
                if (s - 1.0).abs() > 1e-12 || row.iter().any(|&x| !(x >= 0.0)) {
                    return Err(format!("{name} row {i} is not a probability vector (sum {s})"));
                }
            }
        }
        let checks: [(&str, Vec<f64>); 6] = [
            ("alpha_var", self.alpha_var.iter().copied().collect()),
            ("spike_var", self.spike_var.iter().copied().collect()),
            ("gamma_var", self.gamma_var.iter().copied().collect()),
            ("rho_a", self.rho_a.iter().copied().collect()),
            ("rho_b", self.rho_b.iter().copied().collect()),
            ("dirichlet", self.dirichlet.iter().copied().collect()),
        ];
        for (name, values) in checks {
            if values.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(format!("{name} has a non-positive entry"));
            }
        }
        if self.slab_prob.column(0).iter().any(|&p| p != 1.0) {
            return Err("root slab probability must be 1".into());
        }
        Ok(())
    }
}

/// First and second moments of the stick logits and item logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `E[η_k^{(c,g)}]`, shape `(C, G+1, K-1)`.
    pub eta_mean: Array3<f64>,
    /// `E[(η_k^{(c,g)})²]`.
    pub eta_sq: Array3<f64>,
    /// `E[β_{jk}^{(c)}]`, shape `(C, J, K)`.
    pub beta_mean: Array3<f64>,
    /// `E[(β_{jk}^{(c)})²]`.
    pub beta_sq: Array3<f64>,
}
