//! `fit` and `select-k`: variational fits and their output tables.

use std::fs;

use anyhow::{bail, Context, Result};
use nlcm_core::metrics::cophenetic_table;
use nlcm_core::vi::{fit, ln_factorial, select_k, ComparatorMode, FitResult, KCandidate, ModelConfig, Problem};
use nlcm_core::{Dataset, RootedWeightedTree};

use crate::config::{FitConfig, Manifest, ModeName};
use crate::io::{csv_table, load_tree, read_file, write_file};

fn comparator_mode(cfg: &FitConfig, tree: &RootedWeightedTree) -> Result<ComparatorMode> {
    if cfg.mode != ModeName::FixedGrouping && !cfg.slab_on.is_empty() {
        bail!("--slab-on only applies to --mode fixed-grouping");
    }
    Ok(match cfg.mode {
        ModeName::DomainAdaptive => ComparatorMode::DomainAdaptive,
        ModeName::CompletePooling => ComparatorMode::CompletePooling,
        ModeName::NoDomainGrouping => ComparatorMode::NoDomainGrouping,
        ModeName::FixedGrouping => {
            if cfg.slab_on.is_empty() {
                bail!("--mode fixed-grouping needs --slab-on with the nodes whose slab is on");
            }
            let mut slab_on = vec![false; tree.len()];
            slab_on[tree.root()] = true;
            for id in &cfg.slab_on {
                let u = tree.node(id).with_context(|| format!("--slab-on node `{id}`"))?;
                slab_on[u] = true;
            }
            ComparatorMode::FixedGrouping { slab_on }
        }
    })
}

fn f(x: f64) -> String {
    x.to_string()
}

fn write_outputs(
    cfg: &FitConfig,
    problem: &Problem<'_>,
    result: &FitResult,
    mode: &ComparatorMode,
    selection: Option<(&[KCandidate], usize)>,
) -> Result<()> {
    let out = &cfg.out;
    let dtree = problem.domain_tree();
    let mut report = result.report(problem, mode);
    report.selected_k = selection.map(|(_, k)| k);
    write_file(&out.join("result.json"), &report.to_json())?;

    let mut header = vec!["id"];
    header.extend(report.cause_ids.iter().map(String::as_str));
    let rows = report.target_subjects.iter().zip(&report.target_cause_probs).map(|(id, probs)| {
        let mut row = vec![id.clone()];
        row.extend(probs.iter().copied().map(f));
        row
    });
    write_file(&out.join("e_matrix.csv"), &csv_table(&header, rows)?)?;

    let st = &result.state;
    let mut rows = Vec::new();
    for (g, dom) in report.domain_ids.iter().enumerate() {
        for (c, cause) in report.cause_ids.iter().enumerate() {
            rows.push(vec![dom.clone(), cause.clone(), f(report.csmf[g][c]), f(st.dirichlet[[g, c]])]);
        }
    }
    write_file(&out.join("pi_summary.csv"), &csv_table(&["domain", "cause", "mean", "dirichlet"], rows)?)?;

    let table = cophenetic_table(dtree, &st.slab_prob)?;
    let mut header = vec!["cause"];
    header.extend(report.domain_ids[1..].iter().map(String::as_str));
    let rows = table.rows().into_iter().zip(&report.cause_ids).map(|(r, cause)| {
        let mut row = vec![cause.clone()];
        row.extend(r.iter().copied().map(f));
        row
    });
    write_file(&out.join("cophenetic.csv"), &csv_table(&header, rows)?)?;

    let rows = report.elbo_trace.iter().enumerate().map(|(t, v)| vec![(t + 1).to_string(), f(*v)]);
    write_file(&out.join("elbo_trace.csv"), &csv_table(&["iteration", "elbo"], rows)?)?;

    if let Some((candidates, selected)) = selection {
        let rows = candidates.iter().map(|c| {
            vec![
                c.k.to_string(),
                f(c.elbo),
                f(ln_factorial(c.k)),
                f(c.criterion),
                c.converged.to_string(),
                (c.k == selected).to_string(),
            ]
        });
        let header = ["k", "elbo", "ln_k_factorial", "criterion", "converged", "selected"];
        write_file(&out.join("k_selection.csv"), &csv_table(&header, rows)?)?;
    }
    write_file(&out.join("domain_tree.csv"), &dtree.to_csv())?;
    Ok(())
}

/// Runs the fit and writes every output. Returns whether it converged.
pub fn run(cfg: &mut FitConfig, command: &str) -> Result<bool> {
    cfg.resolve_paths()?;
    let dtree = load_tree(cfg.domain_tree.as_ref().expect("resolved"), cfg.target.as_deref())?;
    let ctree = load_tree(cfg.cause_tree.as_ref().expect("resolved"), None)?;
    let data_path = cfg.data.as_ref().expect("resolved");
    let ds = Dataset::load(&read_file(data_path)?, &dtree, &ctree).with_context(|| format!("loading {}", data_path.display()))?;
    let mode = comparator_mode(cfg, &dtree)?;
    let m = &cfg.model;
    let mut model = ModelConfig {
        num_classes: m.num_classes,
        rho_a: m.rho_a,
        rho_b: m.rho_b,
        dirichlet: m.dirichlet,
        mode: mode.clone(),
        allow_single_class: m.allow_single_class,
    };
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    let scenario = ds.detect_scenario();
    log::info!("{} subjects, {} items, scenario {:?}", ds.len(), ds.num_items(), scenario);
    let (result, selection) = if cfg.select_k.is_empty() {
        (fit(&ds, &dtree, &ctree, &model, &cfg.controls)?, None)
    } else {
        let sel = select_k(&ds, &dtree, &ctree, &model, &cfg.controls, &cfg.select_k)?;
        for c in &sel.candidates {
            println!("K = {}: ELBO {:.6}, criterion {:.6}", c.k, c.elbo, c.criterion);
        }
        model.num_classes = sel.selected_k;
        (sel.best, Some((sel.candidates, sel.selected_k)))
    };
    let problem = Problem::new(&ds, &dtree, &ctree, &model)?;
    write_outputs(cfg, &problem, &result, &mode, selection.as_ref().map(|(c, k)| (c.as_slice(), *k)))?;
    write_file(&cfg.out.join("manifest.json"), &serde_json::to_string_pretty(&Manifest::new(command, &*cfg))?)?;

    let pi0: Vec<String> = result.target_csmf().iter().map(|p| format!("{p:.4}")).collect();
    println!(
        "{}: K = {}, {} after {} sweeps, ELBO {:.6}, target CSMF [{}]",
        mode.name(),
        result.num_classes,
        if result.converged { "converged" } else { "not converged" },
        result.iterations,
        result.final_elbo,
        pi0.join(", ")
    );
    Ok(result.converged)
}
