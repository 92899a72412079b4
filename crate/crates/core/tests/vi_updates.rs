mod common;

use common::random_instance;
use nlcm_core::vi::{restart_rng, ModelConfig, Problem};

#[test]
fn every_update_is_monotone() {
    let inst = random_instance(1, 120, 6, 3, 2, 4, 0.1);
    let model = ModelConfig::default();
    let p = Problem::new(&inst.ds, &inst.dtree, &inst.ctree, &model).unwrap();
    let mut st = p.init_state(&mut restart_rng(3, 0), 0.1);
    let mut prev = p.elbo(&st).unwrap();
    let check = |label: &str, prev: &mut f64, now: f64| {
        assert!(now >= *prev - 1e-10, "{label}: {prev} -> {now}");
        *prev = now;
    };
    for t in 1..=200 {
        p.update_e(&mut st);
        check("e", &mut prev, p.elbo(&st).unwrap());
        p.update_r(&mut st);
        check("r", &mut prev, p.elbo(&st).unwrap());
        p.update_pi(&mut st);
        check("pi", &mut prev, p.elbo(&st).unwrap());
        let stats = p.suff_stats(&st);
        for c in 0..3 {
            for u in 0..inst.dtree.len() {
                p.update_spike_slab(&mut st, &stats, c, u);
                check("spike-slab", &mut prev, p.elbo(&st).unwrap());
            }
        }
        for u in 0..inst.ctree.len() {
            p.update_gamma(&mut st, &stats, u);
            check("gamma", &mut prev, p.elbo(&st).unwrap());
        }
        p.update_rho(&mut st);
        check("rho", &mut prev, p.elbo(&st).unwrap());
        p.update_local_bounds(&mut st);
        check("bounds", &mut prev, p.elbo(&st).unwrap());
        if t % 10 == 0 {
            p.update_hyper(&mut st);
            check("hyper", &mut prev, p.elbo(&st).unwrap());
        }
        st.check_invariants().unwrap();
    }
}
