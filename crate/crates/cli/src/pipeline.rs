//! Input loading and the per-query extract → prune → retrieve chain.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use kgr_core::http::{Endpoint, RetryPolicy};
use kgr_core::ingest::{khop_subgraph, parse_triples, SubgraphRequest};
use kgr_core::metrics::{BaselineScorer, EdgeScorer, ServiceScorer};
use kgr_core::relevance::prizes_for_question;
use kgr_core::{
    fit_baseline_scorer, personalized_pagerank, prune_by_ppr, retrieve, EmbeddingProvider,
    KnowledgeGraph, PprScores, RetrievedKnowledge, Triple, TripleFormat,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ServiceConfig};
use crate::CliError;

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Triple format implied by a file extension; TSV unless `.nt`.
pub fn format_for(path: &Path) -> TripleFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("nt") | Some("ntriples") => TripleFormat::Nt,
        _ => TripleFormat::Tsv,
    }
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph, CliError> {
    let file =
        std::fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_triples(file, format_for(path))
        .map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub fn require_graph(cfg: &RunConfig) -> Result<KnowledgeGraph, CliError> {
    let path = cfg
        .input
        .graph
        .as_deref()
        .ok_or_else(|| config_err("no input graph (set input.graph or --graph)"))?;
    load_graph(path)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<String>,
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut out: Vec<Query> = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: Query = serde_json::from_str(line)
            .map_err(|e| config_err(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if !ids.insert(q.id.clone()) {
            return Err(config_err(format!(
                "{}:{}: duplicate query id `{}`",
                path.display(),
                i + 1,
                q.id
            )));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn require_queries(cfg: &RunConfig) -> Result<Vec<Query>, CliError> {
    let path = cfg
        .input
        .queries
        .as_deref()
        .ok_or_else(|| config_err("no query file (set input.queries or --queries)"))?;
    load_queries(path)
}

/// Seeds for `q`: its own, else the configured defaults.
pub fn seeds_for<'a>(cfg: &'a RunConfig, q: &'a Query) -> &'a [String] {
    if q.seeds.is_empty() {
        &cfg.input.seeds
    } else {
        &q.seeds
    }
}

pub fn check_seeds(g: &KnowledgeGraph, seeds: &[String], context: &str) -> Result<(), CliError> {
    match seeds.iter().find(|s| g.node_index(s).is_none()) {
        Some(s) => Err(config_err(format!(
            "{context}: seed `{s}` is not an entity of the graph"
        ))),
        None => Ok(()),
    }
}

fn endpoint(svc: &ServiceConfig, url: &str) -> Endpoint {
    let mut ep = Endpoint::new(url).with_timeout(Duration::from_secs_f64(svc.timeout_secs));
    ep.token = svc.token_env.as_ref().and_then(|v| std::env::var(v).ok());
    ep
}

pub fn retry(attempts: u32) -> RetryPolicy {
    RetryPolicy {
        attempts,
        ..RetryPolicy::default()
    }
}

/// Configured embedding service, else the environment, else the local fallback.
pub fn embedding_provider(cfg: &RunConfig) -> EmbeddingProvider {
    let svc = &cfg.embedding;
    match &svc.url {
        Some(url) => EmbeddingProvider::Service {
            endpoint: endpoint(svc, url),
            retry: retry(svc.attempts),
        },
        None => EmbeddingProvider::from_env().unwrap_or(EmbeddingProvider::Fallback {
            dimension: svc.dimension,
        }),
    }
}

pub enum Scorer {
    Baseline(BaselineScorer),
    Service(ServiceScorer),
}

impl Scorer {
    pub fn fit(cfg: &RunConfig, g: &KnowledgeGraph) -> Result<Scorer, CliError> {
        match &cfg.scorer.url {
            Some(url) => Ok(Scorer::Service(ServiceScorer::new(
                endpoint(&cfg.scorer, url),
                retry(cfg.scorer.attempts),
            )?)),
            None => Ok(Scorer::Baseline(
                fit_baseline_scorer(g).map_err(config_err)?,
            )),
        }
    }

    pub fn as_dyn(&self) -> &dyn EdgeScorer {
        match self {
            Scorer::Baseline(s) => s,
            Scorer::Service(s) => s,
        }
    }
}

/// k-hop cut around `seeds`, then PPR pruning if enabled.
pub fn extract(
    cfg: &RunConfig,
    g: &KnowledgeGraph,
    seeds: &[String],
) -> kgr_core::Result<(KnowledgeGraph, Option<PprScores>)> {
    let sub = khop_subgraph(
        g,
        &SubgraphRequest::new(seeds.to_vec()).with_hops(cfg.extract.hops),
    )?;
    if !cfg.extract.prune {
        return Ok((sub, None));
    }
    let scores = personalized_pagerank(&sub, seeds, &cfg.ppr)?;
    let pruned = prune_by_ppr(&sub, &scores, cfg.ppr.prune_threshold)?;
    Ok((pruned, Some(scores)))
}

/// Retrieval for one query: on the extracted neighborhood when the query has
/// seeds, otherwise on the whole graph.
pub fn retrieve_for(
    cfg: &RunConfig,
    provider: &EmbeddingProvider,
    g: &KnowledgeGraph,
    q: &Query,
) -> kgr_core::Result<RetrievedKnowledge> {
    let seeds = seeds_for(cfg, q);
    let owned;
    let scope = if seeds.is_empty() {
        g
    } else {
        owned = extract(cfg, g, seeds)?.0;
        &owned
    };
    let r = &cfg.retrieval;
    let pa = prizes_for_question(scope, provider, &q.question, r.k, r.edge_cost)?;
    retrieve(scope, &pa, &r.options())
}

/// Jaccard similarity of two triple sets; two empty sets count as identical.
pub fn jaccard(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
