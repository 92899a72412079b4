//! `simulate`: synthetic data sets with their generating truth.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use nlcm_core::sim::{cause_star, default_domain_tree, replicate_seed, simulate_dataset, SimulationDesign, SimulationTruth};
use nlcm_core::RootedWeightedTree;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DesignName, Manifest, SimulateConfig};
use crate::io::{load_tree, write_file};

/// Target-domain truth in terms of subject and cause ids, so it can be
/// matched against any fit of the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub cause_ids: Vec<String>,
    /// Cause fractions of the target population, in `cause_ids` order.
    pub target_csmf: Vec<f64>,
    /// Cause fractions among the sampled target subjects.
    #[serde(default)]
    pub target_empirical_csmf: Option<Vec<f64>>,
    pub target_subjects: Vec<String>,
    /// Cause id of each entry of `target_subjects`.
    pub target_causes: Vec<String>,
    #[serde(default)]
    pub design: Option<SimulationDesign>,
    #[serde(default)]
    pub simulation: Option<SimulationTruth>,
}

/// Summary line data for one replicate.
struct Written {
    domain_sizes: Vec<usize>,
    csmf: Vec<Vec<f64>>,
}

fn simulate_one(design: &SimulationDesign, tree: &RootedWeightedTree, dir: &Path) -> Result<Written> {
    let (ds, truth) = simulate_dataset(design, tree)?;
    let ctree = cause_star(design.num_causes)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir.join("data.csv"), &ds.to_csv(tree, &ctree)?)?;
    write_file(&dir.join("domain_tree.csv"), &tree.to_csv())?;
    write_file(&dir.join("cause_tree.csv"), &ctree.to_csv())?;

    let cause_ids = ctree.leaf_ids();
    let target: Vec<usize> = (0..ds.len()).filter(|&i| ds.domain(i) == 0).collect();
    let file = TruthFile {
        cause_ids: cause_ids.clone(),
        target_csmf: truth.pi[0].clone(),
        target_empirical_csmf: Some(truth.target_empirical_csmf.clone()),
        target_subjects: target.iter().map(|&i| ds.ids()[i].clone()).collect(),
        target_causes: target.iter().map(|&i| cause_ids[truth.causes[i]].clone()).collect(),
        design: Some(design.clone()),
        simulation: Some(truth.clone()),
    };
    write_file(&dir.join("truth.json"), &serde_json::to_string_pretty(&file)?)?;
    Ok(Written { domain_sizes: truth.domain_sizes, csmf: truth.pi })
}

pub fn run(cfg: &SimulateConfig) -> Result<()> {
    let tree = match (&cfg.domain_tree, cfg.design) {
        (Some(path), _) => load_tree(path, None)?,
        (None, DesignName::Sim1) => default_domain_tree(),
    };
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let jobs: Vec<(SimulationDesign, std::path::PathBuf)> = if cfg.replicates <= 1 {
        vec![(cfg.sim.clone(), cfg.out.clone())]
    } else {
        (0..cfg.replicates)
            .map(|r| {
                let design = SimulationDesign { seed: replicate_seed(cfg.sim.seed, r), ..cfg.sim.clone() };
                (design, cfg.out.join(format!("rep-{:03}", r + 1)))
            })
            .collect()
    };
    let written: Vec<Result<Written>> = jobs.par_iter().map(|(d, dir)| simulate_one(d, &tree, dir)).collect();
    let leaves = tree.leaf_ids();
    for ((design, dir), w) in jobs.iter().zip(written) {
        let w = w?;
        println!("{} (seed {})", dir.display(), design.seed);
        for (g, (size, pi)) in w.domain_sizes.iter().zip(&w.csmf).enumerate() {
            let role = if g == 0 { "target" } else { "source" };
            let pi: Vec<String> = pi.iter().map(|p| format!("{p:.3}")).collect();
            println!("  domain {:>4} {role}: n = {size:>5}, csmf = [{}]", leaves[g], pi.join(", "));
        }
    }
    write_file(&cfg.out.join("manifest.json"), &serde_json::to_string_pretty(&Manifest::new("simulate", cfg))?)?;
    Ok(())
}
