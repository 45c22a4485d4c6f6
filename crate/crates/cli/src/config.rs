//! Run configuration: defaults, overlaid by a TOML file, overlaid by
//! `--set key.path=value` pairs, overlaid by dedicated flags.

use std::path::{Path, PathBuf};

use kgr_core::perturb::ReplaceMode;
use kgr_core::relevance::{DEFAULT_EDGE_COST, DEFAULT_K, FALLBACK_DIMENSION};
use kgr_core::retrieval::RetrievalOptions;
use kgr_core::{Method, PprConfig, TripleFormat, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker pool width; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Format of graph files written by `extract` and `perturb`.
    pub format: TripleFormat,
    pub input: InputConfig,
    pub extract: ExtractConfig,
    pub ppr: PprConfig,
    pub retrieval: RetrievalConfig,
    pub embedding: ServiceConfig,
    pub scorer: ServiceConfig,
    pub perturb: PerturbConfig,
    pub sweep: SweepConfig,
    pub generate: GenerateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("out"),
            workers: None,
            format: TripleFormat::Tsv,
            input: InputConfig::default(),
            extract: ExtractConfig::default(),
            ppr: PprConfig::default(),
            retrieval: RetrievalConfig::default(),
            embedding: ServiceConfig::default(),
            scorer: ServiceConfig::default(),
            perturb: PerturbConfig::default(),
            sweep: SweepConfig::default(),
            generate: GenerateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub graph: Option<PathBuf>,
    /// Second graph for `measure`.
    pub perturbed: Option<PathBuf>,
    /// JSONL of `{id, question, seeds?}`.
    pub queries: Option<PathBuf>,
    /// Seeds used when a query carries none.
    pub seeds: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub hops: usize,
    /// Apply PPR pruning after the k-hop cut.
    pub prune: bool,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            hops: 2,
            prune: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: u32,
    pub edge_cost: f64,
    pub variant: Variant,
    pub triplet_count: Option<usize>,
    pub start_count: usize,
    pub max_len: usize,
    pub result_count: Option<usize>,
    pub directed: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let o = RetrievalOptions::default();
        RetrievalConfig {
            k: DEFAULT_K,
            edge_cost: DEFAULT_EDGE_COST,
            variant: o.variant,
            triplet_count: o.triplet_count,
            start_count: o.start_count,
            max_len: o.max_len,
            result_count: o.result_count,
            directed: o.directed,
        }
    }
}

impl RetrievalConfig {
    pub fn options(&self) -> RetrievalOptions {
        RetrievalOptions {
            variant: self.variant,
            triplet_count: self.triplet_count,
            start_count: self.start_count,
            max_len: self.max_len,
            result_count: self.result_count,
            directed: self.directed,
        }
    }
}

/// An optional remote service. Without a URL the local fallback is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub url: Option<String>,
    /// Name of the environment variable holding a bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: f64,
    pub attempts: u32,
    pub dimension: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            url: None,
            token_env: None,
            timeout_secs: 60.0,
            attempts: 3,
            dimension: FALLBACK_DIMENSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub method: Method,
    pub level: f64,
    pub replace_mode: ReplaceMode,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            method: Method::EdgeDelete,
            level: 0.1,
            replace_mode: ReplaceMode::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub levels: Vec<f64>,
    /// Seeded repetitions per (method, level) cell.
    pub replicates: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            methods: Method::ALL.to_vec(),
            levels: vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9],
            replicates: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub url: Option<String>,
    pub token_env: Option<String>,
    pub template: Option<PathBuf>,
    pub temperature: f64,
    pub top_p: f64,
    pub in_flight: usize,
    pub timeout_secs: f64,
    pub attempts: u32,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            url: None,
            token_env: None,
            template: None,
            temperature: 0.7,
            top_p: 1.0,
            in_flight: kgr_core::prompt::DEFAULT_IN_FLIGHT,
            timeout_secs: 60.0,
            attempts: 3,
        }
    }
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("`--set {assignment}`: expected key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!(
            "`--set {assignment}`: empty key segment"
        )));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("`{path}`: `{k}` is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl RunConfig {
    /// Reads `file` (if any) and applies `sets` on top of it.
    pub fn load(file: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for s in sets {
            apply_set(&mut table, s)?;
        }
        toml::Value::Table(table)
            .try_into::<RunConfig>()
            .map_err(|e| config_err(format!("invalid configuration: {e}")))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }

    /// Checks value ranges common to every command.
    pub fn validate(&self) -> Result<(), CliError> {
        self.ppr.validate().map_err(config_err)?;
        if self.workers == Some(0) {
            return Err(config_err("workers must be at least 1"));
        }
        if self.extract.hops == 0 {
            return Err(config_err("extract.hops must be at least 1"));
        }
        let r = &self.retrieval;
        if r.k == 0 {
            return Err(config_err("retrieval.k must be at least 1"));
        }
        if !(r.edge_cost > 0.0 && r.edge_cost.is_finite()) {
            return Err(config_err("retrieval.edge_cost must be positive"));
        }
        if r.start_count == 0
            || r.max_len == 0
            || r.result_count == Some(0)
            || r.triplet_count == Some(0)
        {
            return Err(config_err("retrieval counts must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.perturb.level) {
            return Err(config_err(format!(
                "perturb.level {} outside [0,1]",
                self.perturb.level
            )));
        }
        let s = &self.sweep;
        if s.methods.is_empty() || s.levels.is_empty() || s.replicates == 0 {
            return Err(config_err(
                "sweep grid must have at least one method, level and replicate",
            ));
        }
        if let Some(l) = s.levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(config_err(format!("sweep level {l} outside [0,1]")));
        }
        let g = &self.generate;
        if g.in_flight == 0 {
            return Err(config_err("generate.in_flight must be at least 1"));
        }
        for (name, secs) in [
            ("generate", g.timeout_secs),
            ("embedding", self.embedding.timeout_secs),
            ("scorer", self.scorer.timeout_secs),
        ] {
            if !(secs > 0.0 && secs.is_finite()) {
                return Err(config_err(format!("{name}.timeout_secs must be positive")));
            }
        }
        if self.embedding.dimension == 0 {
            return Err(config_err("embedding.dimension must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_file_then_sets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 7\n[retrieval]\nk = 5\nvariant = \"paths\"\n").unwrap();
        let cfg = RunConfig::load(
            Some(&path),
            &[
                "retrieval.k=9".into(),
                "sweep.methods=[\"edge_delete\"]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.retrieval.k, 9);
        assert_eq!(cfg.retrieval.variant, Variant::Paths);
        assert_eq!(cfg.sweep.methods, vec![Method::EdgeDelete]);
        assert_eq!(cfg.ppr, PprConfig::default());
    }

    #[test]
    fn bare_strings_and_errors() {
        let cfg = RunConfig::load(None, &["input.graph=fixtures/kg.tsv".into()]).unwrap();
        assert_eq!(cfg.input.graph, Some(PathBuf::from("fixtures/kg.tsv")));
        assert!(matches!(
            RunConfig::load(None, &["nokey".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            RunConfig::load(None, &["bogus=1".into()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            RunConfig::load(None, &["seed=\"x\"".into()]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn validation_ranges() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.sweep.levels = vec![0.0, 1.2];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.ppr.alpha = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn example_config_loads() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/example.toml");
        let cfg = RunConfig::load(Some(&path), &[]).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.input.seeds, vec!["Lisbon".to_string()]);
        assert_eq!(cfg.sweep.methods.len(), 4);
    }
}
