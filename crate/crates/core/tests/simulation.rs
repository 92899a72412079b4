//! Statistical and structural checks on the synthetic data generators.

use nlcm_core::metrics::{csmf_accuracy, top_cause_accuracy};
use nlcm_core::sim::{
    beta_mixture_draw, default_domain_tree, mask_semi_synthetic, sample_nlcm, simulate_dataset, theta_table, MaskMode,
    ProfileLayout, Signal, SimulationDesign,
};
use nlcm_core::Dataset;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labelled(sizes: &[usize], pi: &[f64], seed: u64) -> Dataset {
    let c = pi.len();
    let pis = vec![pi.to_vec(); sizes.len()];
    let lambda = vec![vec![vec![0.5, 0.5]; c]; sizes.len()];
    let theta = theta_table(ProfileLayout::CauseSpecific, Signal::Strong, c, 6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = sample_nlcm(sizes, &pis, &lambda, &theta, 0.0, &mut rng);
    let ids = (0..d.causes.len()).map(|i| format!("s{i}")).collect();
    let causes = d.causes.iter().map(|&y| Some(y)).collect();
    Dataset::from_parts(ids, &d.responses, d.domains, causes, sizes.len(), c).unwrap()
}

#[test]
fn beta_mixture_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mean = (0..10_000).map(|_| beta_mixture_draw(&mut rng)).sum::<f64>() / 10_000.0;
    let exact = 0.5 / 6.0 + 0.5 / 21.0;
    assert!((mean - exact).abs() < 0.01, "mean {mean} vs {exact}");
}

#[test]
fn uniform_mask_moves_the_rounded_fraction_of_each_domain() {
    let tree = default_domain_tree();
    let ds = labelled(&[150, 150, 150, 150, 200, 200], &[0.3, 0.3, 0.4], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let semi = mask_semi_synthetic(&ds, &tree, &MaskMode::Uniform { fraction: 0.2 }, "target", 1.0, &mut rng).unwrap();
    assert_eq!(semi.target_causes.len(), 200);
    assert_eq!(semi.dataset.subjects_in_domain(0).len(), 200);
    for g in 1..=6 {
        let expect = ds.subjects_in_domain(g - 1).len() * 4 / 5;
        assert_eq!(semi.dataset.subjects_in_domain(g).len(), expect);
    }
    assert_eq!(semi.tree.num_leaves(), 7);
    let sum: f64 = semi.target_csmf.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn zero_fraction_keeps_a_cause_out_of_the_target() {
    let tree = default_domain_tree();
    let ds = labelled(&[200; 6], &[0.3, 0.3, 0.4], 4);
    let mode = MaskMode::CauseFractions { fractions: vec![0.0, 0.5, 0.5] };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let semi = mask_semi_synthetic(&ds, &tree, &mode, "target", 1.0, &mut rng).unwrap();
    assert!(!semi.target_causes.is_empty());
    assert!(semi.target_causes.iter().all(|&y| y != 0));
    assert_eq!(semi.target_csmf[0], 0.0);
    for &i in &semi.dataset.subjects_in_domain(0) {
        assert_eq!(semi.dataset.cause(i), None);
    }
}

#[test]
fn strong_signal_item_means_match_the_mixture() {
    let theta = theta_table(ProfileLayout::Shared, Signal::Strong, 2, 10, 2);
    let lambda = vec![vec![vec![0.7, 0.3], vec![0.2, 0.8]]];
    let pi = vec![vec![0.5, 0.5]];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = sample_nlcm(&[4000], &pi, &lambda, &theta, 0.0, &mut rng);
    for c in 0..2 {
        let rows: Vec<usize> = (0..4000).filter(|&i| d.causes[i] == c).collect();
        for j in 0..10 {
            let mean = rows.iter().map(|&i| f64::from(d.responses[i][j].unwrap())).sum::<f64>() / rows.len() as f64;
            let exact: f64 = (0..2).map(|k| lambda[0][c][k] * theta[c][j][k]).sum();
            assert!((mean - exact).abs() < 0.03, "cause {c} item {j}: {mean} vs {exact}");
        }
    }
}

#[test]
fn empirical_cause_fractions_converge() {
    let pi = vec![vec![0.5, 0.3, 0.2]];
    let lambda = vec![vec![vec![1.0]; 3]];
    let theta = vec![vec![vec![0.5]]; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = sample_nlcm(&[100_000], &pi, &lambda, &theta, 0.0, &mut rng);
    for c in 0..3 {
        let share = d.causes.iter().filter(|&&y| y == c).count() as f64 / 1e5;
        assert!((share - pi[0][c]).abs() < 0.01);
    }
}

#[test]
fn missing_rate_hides_about_that_share() {
    let design = SimulationDesign { missing_rate: 0.25, n: 600, ..Default::default() };
    let (ds, _) = simulate_dataset(&design, &default_domain_tree()).unwrap();
    let total = ds.len() * ds.num_items();
    let hidden = (0..ds.len()).map(|i| (0..ds.num_items()).filter(|&j| ds.response(i, j).is_none()).count()).sum::<usize>();
    let share = hidden as f64 / total as f64;
    assert!((share - 0.25).abs() < 0.02, "{share}");
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let tree = default_domain_tree();
    let design = SimulationDesign { seed: 11, ..Default::default() };
    let (a, ta) = simulate_dataset(&design, &tree).unwrap();
    let (b, tb) = simulate_dataset(&design, &tree).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (c, _) = simulate_dataset(&SimulationDesign { seed: 12, ..design }, &tree).unwrap();
    assert_ne!(a, c);
}

#[test]
fn target_truth_scores_perfectly() {
    let (ds, truth) = simulate_dataset(&SimulationDesign::default(), &default_domain_tree()).unwrap();
    let y = truth.target_causes(&ds);
    let c = ds.num_causes();
    let mut onehot = Array2::zeros((y.len(), c));
    for (i, &yy) in y.iter().enumerate() {
        onehot[[i, yy]] = 1.0;
    }
    assert_eq!(top_cause_accuracy(&onehot, &y, 1).unwrap().accuracy, 1.0);
    let acc = csmf_accuracy(&truth.target_empirical_csmf, &truth.target_empirical_csmf).unwrap();
    assert_eq!(acc, 1.0);
}
