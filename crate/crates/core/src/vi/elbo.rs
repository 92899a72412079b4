//! Evidence lower bound `ℰ*(q) = E_q log H − E_q log q`, every constant kept.

use crate::math::{digamma, ln_multi_beta, xlogx, NeumaierSum};
use crate::model::TermBreakdown;

use super::engine::Problem;
use super::state::VariationalState;
use super::VIError;

impl Problem<'_> {
    /// ELBO split into labelled blocks.
    pub fn elbo_terms(&self, st: &VariationalState) -> TermBreakdown {
        let ds = self.dataset();
        let dtree = self.domain_tree();
        let priors = self.priors();
        let (n, c, k) = (ds.len(), ds.num_causes(), self.num_classes());
        let sticks = self.num_sticks();
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let mut out = TermBreakdown::default();

        let f = self.all_f(st);
        let elog_pi = self.expected_log_pi(st);
        let mut s = NeumaierSum::new();
        for i in 0..n {
            let g = ds.domain(i);
            for cc in 0..c {
                let e = st.e[[i, cc]];
                if e == 0.0 {
                    continue;
                }
                let mut inner = elog_pi[[g, cc]];
                for kk in 0..k {
                    inner += st.r[[i, kk]] * f[(i * c + cc) * k + kk];
                }
                s.add(e * inner);
            }
        }
        out.push("likelihood", s.value());

        let mut prior = NeumaierSum::new();
        let mut entropy = NeumaierSum::new();
        for cc in 0..c {
            for u in 0..dtree.len() {
                let v = self.prior_var(&st.tau, u);
                let p = st.slab_prob[[cc, u]];
                let v0 = st.spike_var[[cc, u]];
                for kk in 0..sticks {
                    prior.add(-0.5 * (ln2pi + v.ln()) - st.alpha_second_moment(cc, u, kk) / (2.0 * v));
                    if p > 0.0 {
                        entropy.add(0.5 * p * (1.0 + ln2pi + st.alpha_var[[cc, u, kk]].ln()));
                    }
                    if p < 1.0 {
                        entropy.add(0.5 * (1.0 - p) * (1.0 + ln2pi + v0.ln()));
                    }
                }
            }
        }
        out.push("domain_gaussian_prior", prior.value());
        out.push("alpha_entropy", entropy.value());

        let mut prior = NeumaierSum::new();
        let mut entropy = NeumaierSum::new();
        for (((u, _, _), &m), &var) in st.gamma_mean.indexed_iter().zip(st.gamma_var.iter()) {
            let v = self.prior_var_star(&st.tau_star, u);
            prior.add(-0.5 * (ln2pi + v.ln()) - (var + m * m) / (2.0 * v));
            entropy.add(0.5 * (1.0 + ln2pi + var.ln()));
        }
        out.push("cause_gaussian_prior", prior.value());
        out.push("gamma_entropy", entropy.value());

        let l = dtree.num_levels();
        let mut elog_rho = vec![0.0; c * l];
        let mut elog_1m = vec![0.0; c * l];
        for cc in 0..c {
            for lv in 0..l {
                let (a, b) = (st.rho_a[[cc, lv]], st.rho_b[[cc, lv]]);
                let ab = digamma(a + b);
                elog_rho[cc * l + lv] = digamma(a) - ab;
                elog_1m[cc * l + lv] = digamma(b) - ab;
            }
        }
        let mut bern = NeumaierSum::new();
        let mut bern_entropy = NeumaierSum::new();
        for cc in 0..c {
            for u in 0..dtree.len() {
                let lv = dtree.level(u) - 1;
                let p = st.slab_prob[[cc, u]];
                bern.add(p * elog_rho[cc * l + lv] + (1.0 - p) * elog_1m[cc * l + lv]);
                bern_entropy.add(-xlogx(p) - xlogx(1.0 - p));
            }
        }
        out.push("slab_bernoulli_prior", bern.value());
        out.push("slab_entropy", bern_entropy.value());

        let mut beta_prior = NeumaierSum::new();
        let mut beta_entropy = NeumaierSum::new();
        for cc in 0..c {
            for lv in 0..l {
                let (er, e1) = (elog_rho[cc * l + lv], elog_1m[cc * l + lv]);
                let (a, b) = (priors.a[[cc, lv]], priors.b[[cc, lv]]);
                beta_prior.add((a - 1.0) * er + (b - 1.0) * e1 - ln_multi_beta(&[a, b]));
                let (a2, b2) = (st.rho_a[[cc, lv]], st.rho_b[[cc, lv]]);
                beta_entropy.add(-((a2 - 1.0) * er + (b2 - 1.0) * e1 - ln_multi_beta(&[a2, b2])));
            }
        }
        out.push("rho_beta_prior", beta_prior.value());
        out.push("rho_entropy", beta_entropy.value());

        let mut dir_prior = NeumaierSum::new();
        let mut dir_entropy = NeumaierSum::new();
        for g in 0..ds.num_domains() {
            let d: Vec<f64> = priors.d.row(g).to_vec();
            let post: Vec<f64> = st.dirichlet.row(g).to_vec();
            for cc in 0..c {
                dir_prior.add((d[cc] - 1.0) * elog_pi[[g, cc]]);
                dir_entropy.add(-(post[cc] - 1.0) * elog_pi[[g, cc]]);
            }
            dir_prior.add(-ln_multi_beta(&d));
            dir_entropy.add(ln_multi_beta(&post));
        }
        out.push("pi_dirichlet_prior", dir_prior.value());
        out.push("pi_entropy", dir_entropy.value());

        let mut ent = NeumaierSum::new();
        for &i in self.missing_rows() {
            for cc in 0..c {
                ent.add(-xlogx(st.e[[i, cc]]));
            }
        }
        out.push("e_entropy", ent.value());
        let ent: NeumaierSum = st.r.iter().map(|&x| -xlogx(x)).collect();
        out.push("r_entropy", ent.value());
        out
    }

    /// ELBO value; a non-finite block is reported by label.
    pub fn elbo(&self, st: &VariationalState) -> Result<f64, VIError> {
        let terms = self.elbo_terms(st);
        if let Some(label) = terms.first_non_finite() {
            return Err(VIError::NonFinite { label });
        }
        let total = terms.total();
        if total.is_finite() {
            Ok(total)
        } else {
            Err(VIError::NonFinite { label: "total" })
        }
    }
}
