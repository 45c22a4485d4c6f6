//! Perturbation sweep: every (method, level, replicate) cell perturbs the
//! graph, measures similarity to the original and compares per-query
//! retrieval against the unperturbed baseline.

use std::collections::{BTreeMap, BTreeSet};

use kgr_core::exec::{self, Strategy};
use kgr_core::{
    EmbeddingProvider, KnowledgeGraph, Method, PerturbationSpec, RetrievedKnowledge,
    SimilarityReport, Triple,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::pipeline::{jaccard, retrieve_for, Query, Scorer};
use crate::CliError;

/// One step of the splitmix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replicate seeds drawn from the root seed. Replicate `i` uses the same
/// seed in every (method, level) cell.
pub fn replicate_seeds(root: u64, n: usize) -> Vec<u64> {
    let mut state = root;
    (0..n).map(|_| splitmix64(&mut state)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub id: String,
    pub overlap: f64,
    /// Leading retrieval score on the perturbed graph, if anything was retrieved.
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub level: f64,
    pub replicate: usize,
    pub seed: u64,
    pub ats: Option<f64>,
    pub sc2d: Option<f64>,
    pub sd2: Option<f64>,
    /// Mean per-query Jaccard overlap; absent without queries.
    pub retrieval_overlap: Option<f64>,
    pub per_query: Vec<QueryOutcome>,
    pub error: Option<String>,
}

fn leading_score(rk: &RetrievedKnowledge) -> Option<f64> {
    rk.to_json()["scores"]
        .as_array()
        .and_then(|s| s.first())
        .and_then(|v| v.as_f64())
}

struct Cell {
    method: Method,
    level: f64,
    replicate: usize,
    seed: u64,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    g: &'a KnowledgeGraph,
    queries: &'a [Query],
    provider: &'a EmbeddingProvider,
    scorer: &'a Scorer,
    baseline: Vec<BTreeSet<Triple>>,
}

impl Context<'_> {
    fn run(&self, cell: &Cell) -> SweepRecord {
        let mut rec = SweepRecord {
            method: cell.method,
            level: cell.level,
            replicate: cell.replicate,
            seed: cell.seed,
            ats: None,
            sc2d: None,
            sd2: None,
            retrieval_overlap: None,
            per_query: Vec::new(),
            error: None,
        };
        if let Err(e) = self.fill(cell, &mut rec) {
            log::warn!(
                "cell {} {} #{} failed: {e}",
                cell.method,
                cell.level,
                cell.replicate
            );
            rec.error = Some(e.to_string());
        }
        rec
    }

    fn fill(&self, cell: &Cell, rec: &mut SweepRecord) -> kgr_core::Result<()> {
        let spec = PerturbationSpec {
            replace_mode: self.cfg.perturb.replace_mode,
            ..PerturbationSpec::new(cell.method, cell.level, cell.seed)
        };
        let perturbed = kgr_core::perturb(self.g, &spec)?.graph;
        let report = SimilarityReport::compute(self.g, &perturbed, self.scorer.as_dyn())?;
        rec.ats = Some(report.ats);
        rec.sc2d = Some(report.sc2d);
        rec.sd2 = Some(report.sd2);
        for (q, base) in self.queries.iter().zip(&self.baseline) {
            let rk = retrieve_for(self.cfg, self.provider, &perturbed, q)?;
            rec.per_query.push(QueryOutcome {
                id: q.id.clone(),
                overlap: jaccard(base, &rk.triples()),
                score: leading_score(&rk),
            });
        }
        if !rec.per_query.is_empty() {
            let total: f64 = rec.per_query.iter().map(|o| o.overlap).sum();
            rec.retrieval_overlap = Some(total / rec.per_query.len() as f64);
        }
        Ok(())
    }
}

/// Runs the configured grid. Records come back in grid order: methods, then
/// levels, then replicates.
pub fn run_sweep(
    cfg: &RunConfig,
    g: &KnowledgeGraph,
    queries: &[Query],
    provider: &EmbeddingProvider,
    scorer: &Scorer,
) -> Result<Vec<SweepRecord>, CliError> {
    let seeds = replicate_seeds(cfg.seed, cfg.sweep.replicates);
    let mut cells = Vec::new();
    for &method in &cfg.sweep.methods {
        for &level in &cfg.sweep.levels {
            for (replicate, &seed) in seeds.iter().enumerate() {
                cells.push(Cell {
                    method,
                    level,
                    replicate,
                    seed,
                });
            }
        }
    }
    exec::with_workers(cfg.workers(), || {
        let baseline = exec::map(Strategy::Parallel, queries, |q| {
            retrieve_for(cfg, provider, g, q).map(|rk| rk.triples())
        })
        .into_iter()
        .collect::<kgr_core::Result<Vec<_>>>()?;
        let ctx = Context {
            cfg,
            g,
            queries,
            provider,
            scorer,
            baseline,
        };
        Ok(exec::map(Strategy::Parallel, &cells, |c| ctx.run(c)))
    })
}

#[derive(Serialize)]
struct CurveRow {
    method: Method,
    level: f64,
    cells: usize,
    failed: usize,
    ats: Option<f64>,
    sc2d: Option<f64>,
    sd2: Option<f64>,
    retrieval_overlap: Option<f64>,
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = xs.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Per-(method, level) means over replicates, in first-seen order.
pub fn curve_csv(records: &[SweepRecord]) -> anyhow::Result<String> {
    let mut order: Vec<(Method, u64)> = Vec::new();
    let mut groups: BTreeMap<(Method, u64), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.method, r.level.to_bits());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for key in order {
        let rs = &groups[&key];
        w.serialize(CurveRow {
            method: key.0,
            level: f64::from_bits(key.1),
            cells: rs.len(),
            failed: rs.iter().filter(|r| r.error.is_some()).count(),
            ats: mean(rs.iter().map(|r| r.ats)),
            sc2d: mean(rs.iter().map(|r| r.sc2d)),
            sd2: mean(rs.iter().map(|r| r.sd2)),
            retrieval_overlap: mean(rs.iter().map(|r| r.retrieval_overlap)),
        })?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
