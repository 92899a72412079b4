//! `evaluate`: accuracy and dissimilarity reports for one or many fits, with
//! per-comparator aggregates across replicates.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use nlcm_core::metrics::{cophenetic_table, per_cause_rmse, EvaluationReport};
use nlcm_core::vi::FitReport;
use serde::Serialize;

use crate::config::{EvaluateConfig, FitConfig, Manifest};
use crate::io::{csv_table, load_tree_ordered, read_file, write_file};
use crate::simulate::TruthFile;

#[derive(Debug, Serialize)]
struct RunEvaluation {
    run: String,
    comparator: String,
    converged: bool,
    cause_ids: Vec<String>,
    source_ids: Vec<String>,
    pi0_mean: Vec<f64>,
    /// Present when a truth file was found.
    truth_csmf: Option<Vec<f64>>,
    evaluation: Option<EvaluationReport>,
    /// Row per cause, column per source domain.
    cophenetic: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    comparator: String,
    metric: String,
    n: usize,
    mean: f64,
    sd: f64,
    min: f64,
    max: f64,
}

#[derive(Debug, Serialize)]
struct RmseRow {
    comparator: String,
    cause: String,
    n: usize,
    rmse: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    runs: Vec<RunEvaluation>,
    summary: Vec<SummaryRow>,
    rmse: Vec<RmseRow>,
}

fn index_of(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

fn evaluate_run(dir: &Path, cfg: &EvaluateConfig) -> Result<RunEvaluation> {
    let report: FitReport = serde_json::from_str(&read_file(&dir.join("result.json"))?)
        .with_context(|| format!("parsing {}", dir.join("result.json").display()))?;
    let manifest_path = dir.join("manifest.json");
    let fit_cfg: Option<FitConfig> = if manifest_path.is_file() {
        let m: Manifest<FitConfig> = serde_json::from_str(&read_file(&manifest_path)?)
            .with_context(|| format!("parsing {}", manifest_path.display()))?;
        Some(m.config)
    } else {
        None
    };
    let comparator = fit_cfg.as_ref().map_or_else(|| report.mode.clone(), FitConfig::comparator);

    let tree = load_tree_ordered(&dir.join("domain_tree.csv"), &report.domain_ids)?;
    let nodes = index_of(&report.domain_nodes);
    let c = report.cause_ids.len();
    let mut slab = Array2::zeros((c, tree.len()));
    for u in 0..tree.len() {
        let col = *nodes.get(tree.id(u)).with_context(|| format!("node `{}` missing from the result", tree.id(u)))?;
        for cc in 0..c {
            slab[[cc, u]] = report.slab_prob[cc][col];
        }
    }
    let table = cophenetic_table(&tree, &slab)?;
    let cophenetic: Vec<Vec<f64>> = table.rows().into_iter().map(|r| r.to_vec()).collect();

    let truth_path: Option<PathBuf> = cfg.truth.clone().or_else(|| {
        let data = fit_cfg.as_ref()?.data.as_ref()?;
        let p = data.parent()?.join("truth.json");
        p.is_file().then_some(p)
    });
    let (truth_csmf, evaluation) = match truth_path {
        None => (None, None),
        Some(path) => {
            let truth: TruthFile =
                serde_json::from_str(&read_file(&path)?).with_context(|| format!("parsing {}", path.display()))?;
            let (csmf, eval) = score(&report, &truth, cfg.top_k, &tree, &slab)
                .with_context(|| format!("scoring {} against {}", dir.display(), path.display()))?;
            (Some(csmf), Some(eval))
        }
    };
    Ok(RunEvaluation {
        run: dir.display().to_string(),
        comparator,
        converged: report.converged,
        cause_ids: report.cause_ids.clone(),
        source_ids: report.domain_ids[1..].to_vec(),
        pi0_mean: report.pi0_mean.clone(),
        truth_csmf,
        evaluation,
        cophenetic,
    })
}

/// Aligns the truth with the result by id and builds the report. Returns the
/// truth CSMF in the result's cause order as well.
fn score(
    report: &FitReport,
    truth: &TruthFile,
    top_k: usize,
    tree: &nlcm_core::RootedWeightedTree,
    slab: &Array2<f64>,
) -> Result<(Vec<f64>, EvaluationReport)> {
    let truth_causes = index_of(&truth.cause_ids);
    if truth.cause_ids.len() != report.cause_ids.len() || truth.target_csmf.len() != truth.cause_ids.len() {
        bail!("the truth has {} causes, the result {}", truth.cause_ids.len(), report.cause_ids.len());
    }
    let mut csmf = Vec::with_capacity(report.cause_ids.len());
    for id in &report.cause_ids {
        let t = truth_causes.get(id.as_str()).with_context(|| format!("cause `{id}` missing from the truth"))?;
        csmf.push(truth.target_csmf[*t]);
    }

    if truth.target_subjects.len() != truth.target_causes.len() {
        bail!("truth lists {} subjects but {} causes", truth.target_subjects.len(), truth.target_causes.len());
    }
    if truth.target_subjects.len() != report.target_subjects.len() {
        bail!(
            "the truth covers {} target subjects, the result {}",
            truth.target_subjects.len(),
            report.target_subjects.len()
        );
    }
    let result_causes = index_of(&report.cause_ids);
    let truth_subjects = index_of(&truth.target_subjects);
    let n = report.target_subjects.len();
    let c = report.cause_ids.len();
    let mut probs = Array2::zeros((n, c));
    let mut labels = Vec::with_capacity(n);
    for (i, id) in report.target_subjects.iter().enumerate() {
        let t = *truth_subjects.get(id.as_str()).with_context(|| format!("subject `{id}` missing from the truth"))?;
        let cause = &truth.target_causes[t];
        labels.push(*result_causes.get(cause.as_str()).with_context(|| format!("unknown cause `{cause}`"))?);
        for (cc, p) in report.target_cause_probs[i].iter().enumerate() {
            probs[[i, cc]] = *p;
        }
    }
    let eval = EvaluationReport::build(&report.pi0_mean, &csmf, Some((&probs, &labels, top_k)), tree, slab)?;
    Ok((csmf, eval))
}

fn summarize(comparator: &str, metric: &str, values: &[f64]) -> SummaryRow {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    SummaryRow {
        comparator: comparator.to_owned(),
        metric: metric.to_owned(),
        n,
        mean,
        sd,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn run(cfg: &EvaluateConfig) -> Result<()> {
    if cfg.runs.is_empty() {
        bail!("no run directories given");
    }
    let runs: Vec<RunEvaluation> = cfg.runs.iter().map(|d| evaluate_run(d, cfg)).collect::<Result<_>>()?;
    let f = |x: f64| x.to_string();
    let metric_top = format!("top{}_accuracy", cfg.top_k);

    let mut long = Vec::new();
    let mut coph = Vec::new();
    for r in &runs {
        for (c, cause) in r.cause_ids.iter().enumerate() {
            long.push(vec![r.run.clone(), r.comparator.clone(), "pi0_mean".into(), cause.clone(), f(r.pi0_mean[c])]);
            for (s, source) in r.source_ids.iter().enumerate() {
                coph.push(vec![r.run.clone(), r.comparator.clone(), cause.clone(), source.clone(), f(r.cophenetic[c][s])]);
            }
        }
        if let Some(e) = &r.evaluation {
            long.push(vec![r.run.clone(), r.comparator.clone(), "csmf_accuracy".into(), String::new(), f(e.csmf_accuracy)]);
            if let Some(t) = &e.top_cause {
                long.push(vec![r.run.clone(), r.comparator.clone(), metric_top.clone(), String::new(), f(t.accuracy)]);
            }
            for (cause, err) in r.cause_ids.iter().zip(&e.abs_errors) {
                long.push(vec![r.run.clone(), r.comparator.clone(), "abs_error".into(), cause.clone(), f(*err)]);
            }
        }
    }

    let mut groups: BTreeMap<&str, Vec<&RunEvaluation>> = BTreeMap::new();
    for r in &runs {
        groups.entry(r.comparator.as_str()).or_default().push(r);
    }
    let mut summary = Vec::new();
    let mut rmse = Vec::new();
    for (comparator, members) in &groups {
        let scored: Vec<&RunEvaluation> = members.iter().copied().filter(|r| r.evaluation.is_some()).collect();
        if scored.is_empty() {
            continue;
        }
        let acc: Vec<f64> = scored.iter().map(|r| r.evaluation.as_ref().expect("filtered").csmf_accuracy).collect();
        summary.push(summarize(comparator, "csmf_accuracy", &acc));
        let top: Vec<f64> =
            scored.iter().filter_map(|r| r.evaluation.as_ref().and_then(|e| e.top_cause).map(|t| t.accuracy)).collect();
        if !top.is_empty() {
            summary.push(summarize(comparator, &metric_top, &top));
        }
        let est: Vec<Vec<f64>> = scored.iter().map(|r| r.pi0_mean.clone()).collect();
        let truth: Vec<Vec<f64>> = scored.iter().map(|r| r.truth_csmf.clone().expect("scored")).collect();
        let per_cause = per_cause_rmse(&est, &truth)?;
        for (cause, v) in scored[0].cause_ids.iter().zip(per_cause) {
            rmse.push(RmseRow { comparator: comparator.to_string(), cause: cause.clone(), n: scored.len(), rmse: v });
        }
    }

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    write_file(&cfg.out.join("evaluation_long.csv"), &csv_table(&["run", "comparator", "metric", "cause", "value"], long)?)?;
    write_file(&cfg.out.join("cophenetic_long.csv"), &csv_table(&["run", "comparator", "cause", "source", "value"], coph)?)?;
    let rows = summary.iter().map(|s| {
        vec![s.comparator.clone(), s.metric.clone(), s.n.to_string(), f(s.mean), f(s.sd), f(s.min), f(s.max)]
    });
    write_file(&cfg.out.join("summary.csv"), &csv_table(&["comparator", "metric", "n", "mean", "sd", "min", "max"], rows)?)?;
    let rows = rmse.iter().map(|r| vec![r.comparator.clone(), r.cause.clone(), r.n.to_string(), f(r.rmse)]);
    write_file(&cfg.out.join("rmse.csv"), &csv_table(&["comparator", "cause", "n", "rmse"], rows)?)?;

    for s in &summary {
        println!("{:<24} {:<16} n = {:>3}  mean {:.4}  sd {:.4}", s.comparator, s.metric, s.n, s.mean, s.sd);
    }
    if summary.is_empty() {
        println!("no truth found; wrote posterior summaries and dissimilarities only");
    }
    let report = Report { runs, summary, rmse };
    write_file(&cfg.out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    write_file(&cfg.out.join("manifest.json"), &serde_json::to_string_pretty(&Manifest::new("evaluate", cfg))?)?;
    Ok(())
}
