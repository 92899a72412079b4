//! Synthetic data generators.
//!
//! [`simulate_dataset`] draws a multi-domain data set from a nested latent
//! class model whose mixing weights diffuse along the domain tree with fixed
//! node offsets. [`mask_semi_synthetic`] carves a synthetic target domain out
//! of a fully labelled data set. [`sample_nlcm`] is the plain generative
//! sampler both build on.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::model::{stick_break, stick_break_inverse, ModelError};
use crate::tree::{NodeRow, RootedWeightedTree, TreeError};
use crate::vi::ComparatorMode;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid design: {0}")]
    Design(String),
    #[error("the masking produced an empty target domain")]
    EmptyTarget,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allocation {
    /// `N / p_leaf` per domain, remainder to the lowest labels.
    Balanced,
    /// Leaves paired in label order; each pair gets an equal share, split
    /// 4:1 with a coin flip deciding which side is large.
    Unbalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signal {
    /// 0.95 / 0.05.
    Strong,
    /// 0.8 / 0.2.
    Weak,
}

impl Signal {
    pub fn levels(self) -> (f64, f64) {
        match self {
            Signal::Strong => (0.95, 0.05),
            Signal::Weak => (0.8, 0.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsmfMode {
    Balanced,
    /// Raw scores 5 for the first cause, 1 for causes `c ≡ 0 (mod C)`, 3
    /// otherwise; normalized, cyclically shifted per domain, target takes the
    /// third shift.
    Unbalanced,
}

/// Layout of the response probabilities `θ^{(c)}_{jk}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileLayout {
    /// Class 1 high and class K low on every item, identical for all causes.
    /// Causes are then told apart only through their mixing weights.
    Shared,
    /// As `Shared`, but cause `c` swaps high and low on items `j ≡ c (mod C)`.
    CauseSpecific,
}

/// Design of one synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationDesign {
    pub n: usize,
    pub num_causes: usize,
    pub num_classes: usize,
    pub num_items: usize,
    pub allocation: Allocation,
    pub signal: Signal,
    pub csmf: CsmfMode,
    pub layout: ProfileLayout,
    /// Fixed increment added to every stick logit at a domain-tree node, keyed
    /// by node id. Nodes not listed get zero.
    pub offsets: BTreeMap<String, f64>,
    /// Concentration of the symmetric Dirichlet drawn for the root weights.
    pub root_concentration: f64,
    /// Probability that any single response is missing.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SimulationDesign {
    fn default() -> Self {
        Self {
            n: 1000,
            num_causes: 3,
            num_classes: 2,
            num_items: 20,
            allocation: Allocation::Balanced,
            signal: Signal::Strong,
            csmf: CsmfMode::Balanced,
            layout: ProfileLayout::Shared,
            offsets: BTreeMap::from([("2".to_owned(), -2.0), ("3".to_owned(), 2.0)]),
            root_concentration: 2.0,
            missing_rate: 0.0,
            seed: 0,
        }
    }
}

/// Nine-node domain tree with six leaves: root `1` with children `2`, `3`,
/// `8`, `9`; `2` holds leaves `4`, `5` and `3` holds `6`, `7`. Leaf `4` is the
/// target (label 0). Unit weights, root on level 1 and the rest on level 2.
pub fn default_domain_tree() -> RootedWeightedTree {
    let rows = [
        NodeRow::new("1", None),
        NodeRow::new("2", Some("1")),
        NodeRow::new("4", Some("2")),
        NodeRow::new("5", Some("2")),
        NodeRow::new("3", Some("1")),
        NodeRow::new("6", Some("3")),
        NodeRow::new("7", Some("3")),
        NodeRow::new("8", Some("1")),
        NodeRow::new("9", Some("1")),
    ];
    RootedWeightedTree::from_rows(&rows, None, None).expect("fixed tree is valid")
}

/// Two-level cause tree: root `all` over leaves `c1..cC`.
pub fn cause_star(num_causes: usize) -> Result<RootedWeightedTree, TreeError> {
    let ids: Vec<String> = (1..=num_causes).map(|c| format!("c{c}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    RootedWeightedTree::star("all", &refs)
}

/// Slab patterns used as comparators on the default tree, in dense order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// Slabs on at `1, 2, 3, 8, 9`: groups `{4,5}`, `{6,7}`, `{8}`, `{9}`.
    True,
    /// Also on at `4, 5`, splitting the first group.
    AdHoc,
    /// Every slab on.
    NoGrouping,
    /// Only the root on.
    CompletePooling,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [Grouping::True, Grouping::AdHoc, Grouping::NoGrouping, Grouping::CompletePooling];

    fn on_ids(self) -> &'static [&'static str] {
        match self {
            Grouping::True => &["1", "2", "3", "8", "9"],
            Grouping::AdHoc => &["1", "2", "3", "4", "5", "8", "9"],
            Grouping::NoGrouping => &["1", "2", "3", "4", "5", "6", "7", "8", "9"],
            Grouping::CompletePooling => &["1"],
        }
    }

    /// Fixed comparator on `tree`, which must carry the default node ids.
    pub fn mode(self, tree: &RootedWeightedTree) -> Result<ComparatorMode, TreeError> {
        let mut slab_on = vec![false; tree.len()];
        for id in self.on_ids() {
            slab_on[tree.node(id)?] = true;
        }
        Ok(ComparatorMode::FixedGrouping { slab_on })
    }

    pub fn name(self) -> &'static str {
        match self {
            Grouping::True => "true-grouping",
            Grouping::AdHoc => "ad-hoc-grouping",
            Grouping::NoGrouping => "no-grouping",
            Grouping::CompletePooling => "complete-pooling",
        }
    }
}

/// Everything drawn while generating a data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    /// `π^{(g)}`, indexed `[g][c]`.
    pub pi: Vec<Vec<f64>>,
    /// `λ^{(c,g)}`, indexed `[g][c][k]`.
    pub lambda: Vec<Vec<Vec<f64>>>,
    /// `θ^{(c)}`, indexed `[c][j][k]`.
    pub theta: Vec<Vec<Vec<f64>>>,
    pub causes: Vec<usize>,
    pub classes: Vec<usize>,
    pub domain_sizes: Vec<usize>,
    /// Observed cause fractions among target subjects.
    pub target_empirical_csmf: Vec<f64>,
}

impl SimulationTruth {
    /// True causes of the target-domain subjects, in row order.
    pub fn target_causes(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).filter(|&i| ds.domain(i) == 0).map(|i| self.causes[i]).collect()
    }
}

/// Seed of replicate `index` under a master seed: the first word of ChaCha8
/// stream `index`, so replicates can be regenerated independently.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Domain sizes summing to `n`.
pub fn allocate<R: Rng + ?Sized>(n: usize, leaves: usize, mode: Allocation, rng: &mut R) -> Result<Vec<usize>, SimError> {
    if leaves == 0 {
        return Err(SimError::Design("no domains".into()));
    }
    match mode {
        Allocation::Balanced => Ok((0..leaves).map(|g| n / leaves + usize::from(g < n % leaves)).collect()),
        Allocation::Unbalanced => {
            if leaves % 2 == 1 {
                return Err(SimError::Design(format!("unbalanced allocation pairs domains; {leaves} is odd")));
            }
            let pairs = leaves / 2;
            let mut sizes = vec![0; leaves];
            for p in 0..pairs {
                let share = n / pairs + usize::from(p < n % pairs);
                let big = (share as f64 * 0.8).round() as usize;
                let (a, b) = if rng.random_bool(0.5) { (big, share - big) } else { (share - big, big) };
                sizes[2 * p] = a;
                sizes[2 * p + 1] = b;
            }
            Ok(sizes)
        }
    }
}

/// Per-domain cause fractions, `[g][c]` for `g` in `0..domains`.
pub fn csmf_table(mode: CsmfMode, num_causes: usize, domains: usize) -> Vec<Vec<f64>> {
    let c = num_causes;
    match mode {
        CsmfMode::Balanced => vec![vec![1.0 / c as f64; c]; domains],
        CsmfMode::Unbalanced => {
            let raw: Vec<f64> = (1..=c)
                .map(|cc| {
                    if cc == 1 {
                        5.0
                    } else if cc % c == 0 {
                        1.0
                    } else {
                        3.0
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            let base: Vec<f64> = raw.iter().map(|x| x / total).collect();
            // v^{(m)} for m = 1..=domains is base shifted right by m - 1.
            let v = |m: usize| {
                let mut out = base.clone();
                out.rotate_right((m - 1) % c);
                out
            };
            let mut table = Vec::with_capacity(domains);
            table.push(v(3.min(domains)));
            table.extend((1..=domains).filter(|&m| m != 3.min(domains)).map(v));
            table
        }
    }
}

/// `θ^{(c)}` tables, `[c][j][k]`.
pub fn theta_table(layout: ProfileLayout, signal: Signal, c: usize, j: usize, k: usize) -> Vec<Vec<Vec<f64>>> {
    let (hi, lo) = signal.levels();
    (0..c)
        .map(|cc| {
            (0..j)
                .map(|jj| {
                    let flip = layout == ProfileLayout::CauseSpecific && jj % c == cc;
                    (0..k)
                        .map(|kk| {
                            let high = if kk == 0 {
                                true
                            } else if kk == k - 1 {
                                false
                            } else {
                                (jj + kk) % 2 == 0
                            };
                            if high != flip {
                                hi
                            } else {
                                lo
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn dirichlet<R: Rng + ?Sized>(conc: f64, k: usize, rng: &mut R) -> Result<Vec<f64>, SimError> {
    let gamma = Gamma::new(conc, 1.0).map_err(|e| SimError::Design(format!("Dirichlet concentration: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && draws.iter().all(|&x| x > 0.0) {
            return Ok(draws.into_iter().map(|x| x / total).collect());
        }
    }
}

fn categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

/// Output of [`sample_nlcm`].
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub domains: Vec<usize>,
    pub causes: Vec<usize>,
    pub classes: Vec<usize>,
    pub responses: Vec<Vec<Option<u8>>>,
}

/// Draws `Y ~ π^{(g)}`, `Z ~ λ^{(Y,g)}`, `X_j ~ Bern(θ^{(Y)}_{jZ})` for
/// `sizes[g]` subjects of each domain, then hides each response with
/// probability `missing_rate`.
pub fn sample_nlcm<R: Rng + ?Sized>(
    sizes: &[usize],
    pi: &[Vec<f64>],
    lambda: &[Vec<Vec<f64>>],
    theta: &[Vec<Vec<f64>>],
    missing_rate: f64,
    rng: &mut R,
) -> Draws {
    let n: usize = sizes.iter().sum();
    let mut out = Draws {
        domains: Vec::with_capacity(n),
        causes: Vec::with_capacity(n),
        classes: Vec::with_capacity(n),
        responses: Vec::with_capacity(n),
    };
    for (g, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            let y = categorical(&pi[g], rng);
            let z = categorical(&lambda[g][y], rng);
            let row = theta[y]
                .iter()
                .map(|t| {
                    let x = u8::from(rng.random::<f64>() < t[z]);
                    let hide = missing_rate > 0.0 && rng.random::<f64>() < missing_rate;
                    (!hide).then_some(x)
                })
                .collect();
            out.domains.push(g);
            out.causes.push(y);
            out.classes.push(z);
            out.responses.push(row);
        }
    }
    out
}

/// Generates a data set from `design` on `tree`. Target causes are hidden in
/// the returned data and kept in the truth.
pub fn simulate_dataset(design: &SimulationDesign, tree: &RootedWeightedTree) -> Result<(Dataset, SimulationTruth), SimError> {
    let (c, k, j) = (design.num_causes, design.num_classes, design.num_items);
    if c == 0 || k == 0 || j == 0 || design.n == 0 {
        return Err(SimError::Design("N, C, K and J must be positive".into()));
    }
    if !(0.0..1.0).contains(&design.missing_rate) {
        return Err(SimError::Design(format!("missing rate {} outside [0, 1)", design.missing_rate)));
    }
    let mut offsets = vec![0.0; tree.len()];
    for (id, &v) in &design.offsets {
        if tree.node(id)? == tree.root() {
            return Err(SimError::Design("the root takes no offset".into()));
        }
        offsets[tree.node(id)?] = v;
    }
    let leaves = tree.num_leaves();
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let sizes = allocate(design.n, leaves, design.allocation, &mut rng)?;
    let pi = csmf_table(design.csmf, c, leaves);

    let mut root = Vec::with_capacity(c);
    for _ in 0..c {
        root.push(stick_break_inverse(&dirichlet(design.root_concentration, k, &mut rng)?)?);
    }
    let mut lambda = Vec::with_capacity(leaves);
    for g in 0..leaves {
        let shift: f64 = tree.ancestors(tree.leaf(g)).iter().map(|&u| offsets[u]).sum();
        let row: Result<Vec<Vec<f64>>, ModelError> =
            root.iter().map(|a| stick_break(&a.iter().map(|x| x + shift).collect::<Vec<_>>())).collect();
        lambda.push(row?);
    }
    let theta = theta_table(design.layout, design.signal, c, j, k);
    let draws = sample_nlcm(&sizes, &pi, &lambda, &theta, design.missing_rate, &mut rng);

    let ids: Vec<String> = (0..draws.causes.len()).map(|i| format!("s{}", i + 1)).collect();
    let observed: Vec<Option<usize>> =
        draws.domains.iter().zip(&draws.causes).map(|(&g, &y)| (g != 0).then_some(y)).collect();
    let ds = Dataset::from_parts(ids, &draws.responses, draws.domains.clone(), observed, leaves, c)?;

    let mut counts = vec![0.0; c];
    for (&g, &y) in draws.domains.iter().zip(&draws.causes) {
        if g == 0 {
            counts[y] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    let target_empirical_csmf = counts.iter().map(|x| if total > 0.0 { x / total } else { 0.0 }).collect();
    Ok((
        ds,
        SimulationTruth {
            pi,
            lambda,
            theta,
            causes: draws.causes,
            classes: draws.classes,
            domain_sizes: sizes,
            target_empirical_csmf,
        },
    ))
}

/// How subjects are moved into the synthetic target domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MaskMode {
    /// A fraction `f` of every domain, rounded, chosen uniformly.
    Uniform { fraction: f64 },
    /// Each cause draws `φ_c ~ 0.5 Beta(1,5) + 0.5 Beta(1,20)`; every subject
    /// of cause `c` moves with probability `φ_c`.
    BetaMixture,
    /// Given per-cause move probabilities.
    CauseFractions { fractions: Vec<f64> },
}

/// One draw of `φ ~ 0.5 Beta(1,5) + 0.5 Beta(1,20)`.
pub fn beta_mixture_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let b = if rng.random_bool(0.5) { 5.0 } else { 20.0 };
    Beta::new(1.0, b).expect("valid shape").sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiSynthetic {
    /// Data with the target at label 0 and source `g` at label `g + 1`.
    pub dataset: Dataset,
    /// Original tree plus a target leaf equidistant from every source leaf.
    pub tree: RootedWeightedTree,
    /// True causes of the moved subjects, in row order.
    pub target_causes: Vec<usize>,
    /// Empirical cause fractions of the target.
    pub target_csmf: Vec<f64>,
    /// Per-cause move probabilities actually used (empty for `Uniform`).
    pub fractions: Vec<f64>,
}

/// Moves subjects of a fully labelled data set into a new target domain
/// whose causes are hidden. The target leaf `target_id` hangs off the root
/// with weight `target_weight`; source leaf edges are lengthened so that all
/// sources sit at the same root distance, which makes the target equally far
/// from each of them.
pub fn mask_semi_synthetic<R: Rng + ?Sized>(
    ds: &Dataset,
    tree: &RootedWeightedTree,
    mode: &MaskMode,
    target_id: &str,
    target_weight: f64,
    rng: &mut R,
) -> Result<SemiSynthetic, SimError> {
    let n = ds.len();
    let c = ds.num_causes();
    let causes: Vec<usize> = (0..n)
        .map(|i| ds.cause(i).ok_or_else(|| SimError::Design(format!("subject {i} has no cause label"))))
        .collect::<Result<_, _>>()?;
    let mut moved = vec![false; n];
    let fractions = match mode {
        MaskMode::Uniform { fraction } => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(SimError::Design(format!("fraction {fraction} outside (0, 1)")));
            }
            for g in 0..ds.num_domains() {
                let mut members = ds.subjects_in_domain(g);
                let take = (members.len() as f64 * fraction).round() as usize;
                members.shuffle(rng);
                for &i in &members[..take] {
                    moved[i] = true;
                }
            }
            Vec::new()
        }
        MaskMode::BetaMixture | MaskMode::CauseFractions { .. } => {
            let phi: Vec<f64> = match mode {
                MaskMode::CauseFractions { fractions } => {
                    if fractions.len() != c || fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
                        return Err(SimError::Design(format!("need {c} fractions in [0, 1]")));
                    }
                    fractions.clone()
                }
                _ => (0..c).map(|_| beta_mixture_draw(rng)).collect(),
            };
            for i in 0..n {
                moved[i] = rng.random::<f64>() < phi[causes[i]];
            }
            phi
        }
    };
    if !moved.iter().any(|&m| m) {
        return Err(SimError::EmptyTarget);
    }

    let mut responses = Vec::with_capacity(n);
    let mut domains = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    let mut target_causes = Vec::new();
    let j = ds.num_items();
    for i in 0..n {
        ids.push(ds.ids()[i].clone());
        responses.push((0..j).map(|jj| ds.response(i, jj)).collect::<Vec<_>>());
        if moved[i] {
            domains.push(0);
            labels.push(None);
            target_causes.push(causes[i]);
        } else {
            domains.push(ds.domain(i) + 1);
            labels.push(Some(causes[i]));
        }
    }
    let dataset = Dataset::from_parts(ids, &responses, domains, labels, ds.num_domains() + 1, c)?;
    let mut target_csmf = vec![0.0; c];
    for &y in &target_causes {
        target_csmf[y] += 1.0 / target_causes.len() as f64;
    }
    let tree = extend_tree(tree, target_id, target_weight)?;
    Ok(SemiSynthetic { dataset, tree, target_causes, target_csmf, fractions })
}

/// Adds a target leaf under the root and equalizes source root distances.
pub fn extend_tree(tree: &RootedWeightedTree, target_id: &str, target_weight: f64) -> Result<RootedWeightedTree, SimError> {
    if tree.node(target_id).is_ok() {
        return Err(SimError::Design(format!("node `{target_id}` already exists")));
    }
    let depth: Vec<f64> = tree.leaves().iter().map(|&u| tree.root_distance(u)).collect();
    let deepest = depth.iter().copied().fold(0.0, f64::max);
    let mut rows = tree.rows();
    for (&u, d) in tree.leaves().iter().zip(&depth) {
        rows[u].weight = Some(tree.weight(u) + (deepest - d));
    }
    let level = tree.leaves().iter().map(|&u| tree.level(u)).max().unwrap_or(2);
    rows.push(NodeRow::new(target_id, Some(tree.id(tree.root()))).weight(target_weight).level(level));
    let mut order = vec![target_id.to_owned()];
    order.extend(tree.leaf_ids());
    Ok(RootedWeightedTree::from_rows(&rows, Some(&order), Some(tree.num_levels()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tree_shape() {
        let t = default_domain_tree();
        assert_eq!(t.len(), 9);
        assert_eq!(t.leaf_ids(), ["4", "5", "6", "7", "8", "9"]);
    }

    #[test]
    fn replicate_seeds_are_stable_and_distinct() {
        let seeds: Vec<u64> = (0..50).map(|r| replicate_seed(7, r)).collect();
        assert_eq!(seeds, (0..50).map(|r| replicate_seed(7, r)).collect::<Vec<_>>());
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
        assert_ne!(replicate_seed(7, 0), replicate_seed(8, 0));
    }

    #[test]
    fn balanced_allocation_splits_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(allocate(600, 6, Allocation::Balanced, &mut rng).unwrap(), vec![100; 6]);
        let s = allocate(1001, 6, Allocation::Balanced, &mut rng).unwrap();
        assert_eq!(s.iter().sum::<usize>(), 1001);
    }

    #[test]
    fn unbalanced_allocation_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = allocate(1000, 6, Allocation::Unbalanced, &mut rng).unwrap();
        assert_eq!(s.iter().sum::<usize>(), 1000);
        for p in s.chunks(2) {
            let (lo, hi) = (p[0].min(p[1]), p[0].max(p[1]));
            assert!(hi.abs_diff(4 * lo) <= 4, "{p:?}");
        }
        assert!(matches!(allocate(1000, 5, Allocation::Unbalanced, &mut rng), Err(SimError::Design(_))));
    }

    #[test]
    fn unbalanced_csmfs() {
        let t = csmf_table(CsmfMode::Unbalanced, 3, 6);
        assert_eq!(t[0], vec![3.0 / 9.0, 1.0 / 9.0, 5.0 / 9.0]);
        assert_eq!(t[1], vec![5.0 / 9.0, 3.0 / 9.0, 1.0 / 9.0]);
        for row in &t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_offsets_give_identical_weights() {
        let design = SimulationDesign { offsets: BTreeMap::new(), n: 120, ..Default::default() };
        let (_, truth) = simulate_dataset(&design, &default_domain_tree()).unwrap();
        for g in 1..truth.lambda.len() {
            assert_eq!(truth.lambda[g], truth.lambda[0]);
        }
    }

    #[test]
    fn offsets_shift_groups() {
        let design = SimulationDesign { n: 120, ..Default::default() };
        let (_, truth) = simulate_dataset(&design, &default_domain_tree()).unwrap();
        assert_eq!(truth.lambda[0], truth.lambda[1]);
        assert_eq!(truth.lambda[2], truth.lambda[3]);
        assert_eq!(truth.lambda[4], truth.lambda[5]);
        assert_ne!(truth.lambda[0], truth.lambda[2]);
        for row in truth.lambda.iter().flatten() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn target_causes_hidden_only_in_target() {
        let (ds, truth) = simulate_dataset(&SimulationDesign { n: 300, ..Default::default() }, &default_domain_tree()).unwrap();
        for i in 0..ds.len() {
            match ds.cause(i) {
                Some(y) => assert_eq!(y, truth.causes[i]),
                None => assert_eq!(ds.domain(i), 0),
            }
        }
        assert_eq!(truth.target_causes(&ds).len(), truth.domain_sizes[0]);
    }

    #[test]
    fn extended_tree_is_equidistant() {
        let rows = [
            NodeRow::new("r", None),
            NodeRow::new("a", Some("r")),
            NodeRow::new("x", Some("a")),
            NodeRow::new("y", Some("r")).weight(0.5),
        ];
        let t = RootedWeightedTree::from_rows(&rows, None, None).unwrap();
        let e = extend_tree(&t, "new", 1.0).unwrap();
        assert_eq!(e.leaf_ids(), ["new", "x", "y"]);
        let d1 = e.path_distance(e.leaf(0), e.leaf(1), None);
        let d2 = e.path_distance(e.leaf(0), e.leaf(2), None);
        assert_eq!(d1, 3.0);
        assert_eq!(d2, 3.0);
        assert!(extend_tree(&t, "x", 1.0).is_err());
    }
}
