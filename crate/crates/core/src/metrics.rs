//! Semantic and structural similarity between a graph and a perturbed copy.
//!
//! * ATS: mean plausibility of the perturbed graph's triples under an edge
//!   scorer fitted on the original.
//! * SC2D / SD2: per-relation local clustering (resp. degree) vectors are
//!   averaged over each graph's own relation set and compared through
//!   `1 − d/(d+1)` with `d` the Euclidean distance.
//!
//! Vectors are indexed by entity in lexicographic id order. Per-relation work
//! runs through [`exec`](crate::exec) and is reduced in relation order, so
//! results do not depend on the strategy.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::exec::{self, Strategy};
use crate::graph::{clustering_at, Edge, KnowledgeGraph, NodeIx, Triple};
use crate::http::{Endpoint, JsonClient, RetryPolicy};

/// Plausibility in `[0,1]` of triples with respect to a fitted graph.
pub trait EdgeScorer: Send + Sync {
    fn score_all(&self, triples: &[Triple]) -> Result<Vec<f64>>;
}

/// Frequency baseline: 1 for a known triple, otherwise the mean of how often
/// the relation appears among the subject's out-edges and among the object's
/// in-edges.
#[derive(Clone, Debug)]
pub struct BaselineScorer {
    known: HashSet<Triple>,
    out_freq: HashMap<String, (HashMap<String, usize>, usize)>,
    in_freq: HashMap<String, (HashMap<String, usize>, usize)>,
}

pub fn fit_baseline_scorer(g: &KnowledgeGraph) -> Result<BaselineScorer> {
    if g.triple_count() == 0 {
        return Err(KgError::invalid(
            "cannot fit a scorer on a graph without triples",
        ));
    }
    let mut out_freq: HashMap<String, (HashMap<String, usize>, usize)> = HashMap::new();
    let mut in_freq: HashMap<String, (HashMap<String, usize>, usize)> = HashMap::new();
    let mut known = HashSet::new();
    for t in g.triples() {
        let o = out_freq.entry(t.subject.clone()).or_default();
        *o.0.entry(t.relation.clone()).or_default() += 1;
        o.1 += 1;
        let i = in_freq.entry(t.object.clone()).or_default();
        *i.0.entry(t.relation.clone()).or_default() += 1;
        i.1 += 1;
        known.insert(t);
    }
    Ok(BaselineScorer {
        known,
        out_freq,
        in_freq,
    })
}

impl BaselineScorer {
    pub fn score(&self, t: &Triple) -> f64 {
        if self.known.contains(t) {
            return 1.0;
        }
        let freq = |table: &HashMap<String, (HashMap<String, usize>, usize)>, key: &str| {
            table
                .get(key)
                .map(|(counts, total)| {
                    counts.get(&t.relation).copied().unwrap_or(0) as f64 / *total as f64
                })
                .unwrap_or(0.0)
        };
        0.5 * (freq(&self.out_freq, &t.subject) + freq(&self.in_freq, &t.object))
    }
}

impl EdgeScorer for BaselineScorer {
    fn score_all(&self, triples: &[Triple]) -> Result<Vec<f64>> {
        Ok(triples.iter().map(|t| self.score(t)).collect())
    }
}

/// Remote link-prediction scorer: POST `{"triples": [[s,r,o], ...]}` →
/// `{"scores": [...]}`. Replies are clamped to `[0,1]`.
pub struct ServiceScorer {
    client: JsonClient,
}

impl ServiceScorer {
    pub fn new(endpoint: Endpoint, retry: RetryPolicy) -> Result<Self> {
        let client = JsonClient::new(endpoint, retry).map_err(|f| KgError::Transport {
            attempts: f.attempts,
            message: f.message,
        })?;
        Ok(ServiceScorer { client })
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    triples: &'a [Triple],
}

#[derive(Deserialize)]
struct ScoreReply {
    scores: Vec<f64>,
}

impl EdgeScorer for ServiceScorer {
    fn score_all(&self, triples: &[Triple]) -> Result<Vec<f64>> {
        if triples.is_empty() {
            return Ok(Vec::new());
        }
        let reply = self
            .client
            .post::<_, ScoreReply>(&ScoreRequest { triples })
            .map_err(|f| KgError::Transport {
                attempts: f.attempts,
                message: f.message,
            })?;
        if reply.value.scores.len() != triples.len() {
            return Err(KgError::Transport {
                attempts: reply.attempts,
                message: "malformed reply: score count does not match triple count".into(),
            });
        }
        Ok(reply
            .value
            .scores
            .into_iter()
            .map(|s| s.clamp(0.0, 1.0))
            .collect())
    }
}

/// Mean scorer value over the triples of `g_prime`; 0 when it has none.
pub fn ats(g_prime: &KnowledgeGraph, scorer: &dyn EdgeScorer) -> Result<f64> {
    let triples: Vec<Triple> = g_prime.triples().collect();
    if triples.is_empty() {
        return Ok(0.0);
    }
    let scores = scorer.score_all(&triples)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn edges_by_relation(g: &KnowledgeGraph) -> Vec<Vec<Edge>> {
    let mut groups: BTreeMap<usize, Vec<Edge>> = BTreeMap::new();
    for e in g.edges() {
        groups.entry(e.relation).or_default().push(*e);
    }
    groups.into_values().collect()
}

fn relation_clustering(n: usize, edges: &[Edge]) -> Vec<(NodeIx, f64)> {
    // compact local indexing keeps this proportional to the relation's size
    let mut local: BTreeMap<NodeIx, usize> = BTreeMap::new();
    for e in edges {
        let next = local.len();
        local.entry(e.subject).or_insert(next);
        let next = local.len();
        local.entry(e.object).or_insert(next);
    }
    debug_assert!(local.len() <= n);
    let remapped: Vec<Edge> = edges
        .iter()
        .map(|e| Edge {
            subject: local[&e.subject],
            relation: 0,
            object: local[&e.object],
        })
        .collect();
    let adj = crate::graph::simple_adjacency(local.len(), remapped.iter());
    local
        .iter()
        .map(|(&v, &i)| (v, clustering_at(&adj, i)))
        .filter(|&(_, c)| c > 0.0)
        .collect()
}

fn relation_degrees(edges: &[Edge]) -> Vec<(NodeIx, f64)> {
    let mut deg: BTreeMap<NodeIx, f64> = BTreeMap::new();
    for e in edges {
        *deg.entry(e.subject).or_default() += 1.0;
        *deg.entry(e.object).or_default() += 1.0;
    }
    deg.into_iter().collect()
}

fn mean_vector<F>(g: &KnowledgeGraph, strategy: Strategy, per_relation: F) -> Vec<f64>
where
    F: Fn(usize, &[Edge]) -> Vec<(NodeIx, f64)> + Sync + Send,
{
    let n = g.entity_count();
    let groups = edges_by_relation(g);
    let parts = exec::map(strategy, &groups, |edges| per_relation(n, edges));
    let mut acc = vec![0.0; n];
    for part in &parts {
        for &(v, x) in part {
            acc[v] += x;
        }
    }
    if !groups.is_empty() {
        let r = groups.len() as f64;
        acc.iter_mut().for_each(|x| *x /= r);
    }
    acc
}

/// Mean over used relations of the per-relation local clustering vectors.
pub fn mean_clustering_vector(g: &KnowledgeGraph, strategy: Strategy) -> Vec<f64> {
    mean_vector(g, strategy, relation_clustering)
}

/// Mean over used relations of the per-relation degree vectors. A node's
/// degree in a relation counts the triples of that relation touching it.
pub fn mean_degree_vector(g: &KnowledgeGraph, strategy: Strategy) -> Vec<f64> {
    mean_vector(g, strategy, |_, edges| relation_degrees(edges))
}

fn check_same_entities(g: &KnowledgeGraph, h: &KnowledgeGraph) -> Result<()> {
    if g.entity_count() != h.entity_count()
        || g.entities()
            .iter()
            .zip(h.entities())
            .any(|(a, b)| a.id != b.id)
    {
        return Err(KgError::invalid("graphs do not share the same entity set"));
    }
    Ok(())
}

/// `1 − d/(d+1)` for Euclidean distance `d`.
pub fn distance_similarity(a: &[f64], b: &[f64]) -> f64 {
    let d = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    1.0 - d / (d + 1.0)
}

pub fn sc2d(g: &KnowledgeGraph, g_prime: &KnowledgeGraph) -> Result<f64> {
    sc2d_with(g, g_prime, Strategy::default())
}

pub fn sc2d_with(g: &KnowledgeGraph, g_prime: &KnowledgeGraph, strategy: Strategy) -> Result<f64> {
    check_same_entities(g, g_prime)?;
    Ok(distance_similarity(
        &mean_clustering_vector(g, strategy),
        &mean_clustering_vector(g_prime, strategy),
    ))
}

pub fn sd2(g: &KnowledgeGraph, g_prime: &KnowledgeGraph) -> Result<f64> {
    sd2_with(g, g_prime, Strategy::default())
}

pub fn sd2_with(g: &KnowledgeGraph, g_prime: &KnowledgeGraph, strategy: Strategy) -> Result<f64> {
    check_same_entities(g, g_prime)?;
    Ok(distance_similarity(
        &mean_degree_vector(g, strategy),
        &mean_degree_vector(g_prime, strategy),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub ats: f64,
    pub sc2d: f64,
    pub sd2: f64,
}

impl SimilarityReport {
    pub fn compute(
        g: &KnowledgeGraph,
        g_prime: &KnowledgeGraph,
        scorer: &dyn EdgeScorer,
    ) -> Result<Self> {
        Ok(SimilarityReport {
            ats: ats(g_prime, scorer)?,
            sc2d: sc2d(g, g_prime)?,
            sd2: sd2(g, g_prime)?,
        })
    }
}
