//! Shared fixtures and independent numerical oracles for integration tests.

#![allow(dead_code)]

use nlcm_core::{Dataset, NodeRow, RootedWeightedTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub ds: Dataset,
    pub dtree: RootedWeightedTree,
    pub ctree: RootedWeightedTree,
}

/// Domain tree with `leaves` leaves: root -> two internal nodes splitting the
/// leaves in halves (a star when `leaves < 3`).
pub fn two_block_tree(leaves: usize) -> RootedWeightedTree {
    if leaves < 3 {
        let ids: Vec<String> = (0..leaves).map(|g| format!("d{g}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        return RootedWeightedTree::star("root", &refs).unwrap();
    }
    let mut rows = vec![NodeRow::new("root", None), NodeRow::new("a", Some("root")), NodeRow::new("b", Some("root"))];
    for g in 0..leaves {
        let parent = if g < leaves / 2 { "a" } else { "b" };
        rows.push(NodeRow::new(format!("d{g}"), Some(parent)));
    }
    RootedWeightedTree::from_rows(&rows, None, None).unwrap()
}

pub fn cause_star(c: usize) -> RootedWeightedTree {
    let ids: Vec<String> = (0..c).map(|x| format!("c{x}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    RootedWeightedTree::star("all", &refs).unwrap()
}

/// Random data from a nested latent class model with target causes hidden
/// and a fraction of entries missing.
pub fn random_instance(seed: u64, n: usize, j: usize, c: usize, k: usize, domains: usize, missing_rate: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dtree = two_block_tree(domains);
    let ctree = cause_star(c);
    let theta: Vec<Vec<Vec<f64>>> = (0..c)
        .map(|_| (0..j).map(|_| (0..k).map(|_| rng.random_range(0.05..0.95)).collect()).collect())
        .collect();
    let lambda: Vec<Vec<Vec<f64>>> = (0..domains)
        .map(|_| {
            (0..c)
                .map(|_| {
                    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect()
        })
        .collect();
    let mut responses = Vec::with_capacity(n);
    let mut domain = Vec::with_capacity(n);
    let mut cause = Vec::with_capacity(n);
    for i in 0..n {
        let g = i % domains;
        let y = rng.random_range(0..c);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut z = k - 1;
        for (kk, &l) in lambda[g][y].iter().enumerate() {
            acc += l;
            if u < acc {
                z = kk;
                break;
            }
        }
        let row: Vec<Option<u8>> = (0..j)
            .map(|jj| {
                let x = u8::from(rng.random::<f64>() < theta[y][jj][z]);
                (rng.random::<f64>() >= missing_rate).then_some(x)
            })
            .collect();
        responses.push(row);
        domain.push(g);
        cause.push(if g == 0 { None } else { Some(y) });
    }
    let ids = (0..n).map(|i| format!("s{i}")).collect();
    let ds = Dataset::from_parts(ids, &responses, domain, cause, domains, c).unwrap();
    Instance { ds, dtree, ctree }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Nelder–Mead maximization from `start`, with initial simplex edge `step`.
pub fn nelder_mead_max(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for d in 0..n {
        let mut p = start.to_vec();
        p[d] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| -f(p)).collect();
    for _ in 0..iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() < 1e-14 {
            let spread = pts.iter().map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
            if spread < 1e-10 {
                break;
            }
        }
        let centroid: Vec<f64> = (0..n).map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + t * (pts[n][d] - centroid[d])).collect() };
        let xr = along(-1.0);
        let fr = -f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = -f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = -f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = -f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = (0..n).map(|d| pts[0][d] + 0.5 * (pts[i][d] - pts[0][d])).collect();
                    vals[i] = -f(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap()).unwrap();
    (pts[best].clone(), -vals[best])
}
