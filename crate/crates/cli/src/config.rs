//! Resolved run configurations. Each subcommand starts from its defaults,
//! applies an optional TOML or JSON file and then the command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use nlcm_core::sim::SimulationDesign;
use nlcm_core::vi::FitControls;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Named simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DesignName {
    /// Six-leaf domain tree with three causes and fixed stick-logit offsets.
    Sim1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub design: DesignName,
    pub out: PathBuf,
    /// Domain tree file; the built-in tree of the design when absent.
    pub domain_tree: Option<PathBuf>,
    /// Number of data sets. Above one, each goes to `rep-NNN` under `out`
    /// with a seed split off the master seed.
    pub replicates: usize,
    pub sim: SimulationDesign,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            design: DesignName::Sim1,
            out: PathBuf::from("sim-out"),
            domain_tree: None,
            replicates: 1,
            sim: SimulationDesign::default(),
        }
    }
}

/// Comparator names as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    DomainAdaptive,
    FixedGrouping,
    CompletePooling,
    NoDomainGrouping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub num_classes: usize,
    pub rho_a: f64,
    pub rho_b: f64,
    pub dirichlet: f64,
    pub allow_single_class: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let m = nlcm_core::vi::ModelConfig::default();
        Self {
            num_classes: m.num_classes,
            rho_a: m.rho_a,
            rho_b: m.rho_b,
            dirichlet: m.dirichlet,
            allow_single_class: m.allow_single_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Directory written by `simulate`; fills in any of the three paths below
    /// that are not given.
    pub input: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub domain_tree: Option<PathBuf>,
    pub cause_tree: Option<PathBuf>,
    /// Leaf id of the target domain; the first leaf in file order when absent.
    pub target: Option<String>,
    pub out: PathBuf,
    /// Comparator label carried into evaluation summaries.
    pub label: Option<String>,
    pub mode: ModeName,
    /// Domain-tree nodes with the slab on, for `fixed-grouping`. The root is
    /// always on.
    pub slab_on: Vec<String>,
    /// Candidate K values; empty fits the single K of `model`.
    pub select_k: Vec<usize>,
    pub model: ModelSettings,
    pub controls: FitControls,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            data: None,
            domain_tree: None,
            cause_tree: None,
            target: None,
            out: PathBuf::from("fit-out"),
            label: None,
            mode: ModeName::DomainAdaptive,
            slab_on: Vec::new(),
            select_k: Vec::new(),
            model: ModelSettings::default(),
            controls: FitControls::default(),
        }
    }
}

impl FitConfig {
    /// Fills data and tree paths from `input` and checks that they exist.
    pub fn resolve_paths(&mut self) -> Result<()> {
        if let Some(dir) = &self.input {
            self.data.get_or_insert_with(|| dir.join("data.csv"));
            self.domain_tree.get_or_insert_with(|| dir.join("domain_tree.csv"));
            self.cause_tree.get_or_insert_with(|| dir.join("cause_tree.csv"));
        }
        for (name, path) in [("data", &self.data), ("domain tree", &self.domain_tree), ("cause tree", &self.cause_tree)] {
            match path {
                None => bail!("no {name} file given (use --input or the explicit path flag)"),
                Some(p) if !p.is_file() => bail!("{name} file {} does not exist", p.display()),
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn comparator(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            ModeName::to_possible_value(&self.mode).expect("no skipped variants").get_name().to_owned()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Fit output directories.
    pub runs: Vec<PathBuf>,
    /// Truth file for every run; otherwise `truth.json` next to each run's
    /// data file is used when present.
    pub truth: Option<PathBuf>,
    pub top_k: usize,
    pub out: PathBuf,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { runs: Vec::new(), truth: None, top_k: 1, out: PathBuf::from("eval-out") }
    }
}

/// Record written next to every output set. Its `config` block can be fed
/// back through `--config` to repeat the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: C,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &str, config: C) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            config,
        }
    }
}

/// Reads a configuration file. `.json` files are parsed as JSON and anything
/// else as TOML; a manifest is accepted in place of a bare configuration.
pub fn load_config<C: DeserializeOwned>(path: &Path, command: &str) -> Result<C> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        let t: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        serde_json::to_value(t)?
    };
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("command") && map.contains_key("config") => {
            let recorded = map.get("command").and_then(|c| c.as_str()).unwrap_or_default().to_owned();
            // select-k runs are fit runs with candidates.
            let compatible = recorded == command || (recorded == "select-k" && command == "fit")
                || (recorded == "fit" && command == "select-k");
            if !compatible {
                bail!("{} is a `{recorded}` manifest, not `{command}`", path.display());
            }
            map.remove("config").expect("checked above")
        }
        other => other,
    };
    serde_json::from_value(value).with_context(|| format!("invalid {command} config in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.toml");
        fs::write(&path, "mode = \"complete-pooling\"\n[model]\nnum_classes = 3\n[controls]\nn_restarts = 2\n").unwrap();
        let cfg: FitConfig = load_config(&path, "fit").unwrap();
        assert_eq!(cfg.mode, ModeName::CompletePooling);
        assert_eq!(cfg.model.num_classes, 3);
        assert_eq!(cfg.controls.n_restarts, 2);
        assert_eq!(cfg.controls.tol, FitControls::default().tol);
    }

    #[test]
    fn manifests_are_accepted_as_configs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let cfg = SimulateConfig { replicates: 4, ..Default::default() };
        fs::write(&path, serde_json::to_string(&Manifest::new("simulate", cfg.clone())).unwrap()).unwrap();
        assert_eq!(load_config::<SimulateConfig>(&path, "simulate").unwrap(), cfg);
        assert!(load_config::<FitConfig>(&path, "fit").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "replicate = 3\n").unwrap();
        assert!(load_config::<SimulateConfig>(&path, "simulate").is_err());
    }
}
