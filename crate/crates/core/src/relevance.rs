//! Query/element embedding, cosine ranking and rank-based prize assignment.
//!
//! The top-`k` ranked nodes get prizes `k, k−1, …, 1` and everything below
//! gets 0; edges are ranked and prized the same way, independently.

use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::exec::{self, Strategy};
use crate::graph::{Edge, Entity, KnowledgeGraph, Triple};
use crate::http::{Endpoint, JsonClient, RetryPolicy};

pub const FALLBACK_DIMENSION: usize = 256;
pub const SERVICE_BATCH: usize = 128;
pub const DEFAULT_K: u32 = 15;
pub const DEFAULT_EDGE_COST: f64 = 1.0;

pub const EMBED_URL_VAR: &str = "KGR_EMBED_URL";
pub const EMBED_TOKEN_VAR: &str = "KGR_EMBED_TOKEN";

#[derive(Clone, Debug)]
pub enum EmbeddingProvider {
    /// Hashed bag of lowercase alphanumeric tokens, L2-normalized.
    Fallback { dimension: usize },
    /// POST `{"texts": [...]}` → `{"vectors": [[...], ...]}`, at most
    /// [`SERVICE_BATCH`] texts per call.
    Service {
        endpoint: Endpoint,
        retry: RetryPolicy,
    },
}

impl Default for EmbeddingProvider {
    fn default() -> Self {
        EmbeddingProvider::Fallback {
            dimension: FALLBACK_DIMENSION,
        }
    }
}

impl EmbeddingProvider {
    pub fn service(endpoint: Endpoint) -> Self {
        EmbeddingProvider::Service {
            endpoint,
            retry: RetryPolicy::default(),
        }
    }

    pub fn from_env() -> Option<Self> {
        Endpoint::from_env(EMBED_URL_VAR, EMBED_TOKEN_VAR).map(Self::service)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f64>>,
}

pub fn embed_texts(provider: &EmbeddingProvider, texts: &[String]) -> Result<Vec<Vec<f64>>> {
    embed_texts_with(provider, texts, Strategy::default())
}

pub fn embed_texts_with(
    provider: &EmbeddingProvider,
    texts: &[String],
    strategy: Strategy,
) -> Result<Vec<Vec<f64>>> {
    if texts.is_empty() {
        return Err(KgError::invalid("no texts to embed"));
    }
    if texts.iter().any(|t| t.trim().is_empty()) {
        return Err(KgError::invalid("cannot embed empty text"));
    }
    match provider {
        EmbeddingProvider::Fallback { dimension } => {
            if *dimension == 0 {
                return Err(KgError::invalid("embedding dimension must be positive"));
            }
            Ok(exec::map(strategy, texts, |t| {
                hashed_embedding(t, *dimension)
            }))
        }
        EmbeddingProvider::Service { endpoint, retry } => {
            let client = JsonClient::new(endpoint.clone(), retry.clone()).map_err(|f| {
                KgError::Transport {
                    attempts: f.attempts,
                    message: f.message,
                }
            })?;
            let batches: Vec<&[String]> = texts.chunks(SERVICE_BATCH).collect();
            let replies = exec::map(strategy, &batches, |batch| embed_batch(&client, batch));
            let mut out = Vec::with_capacity(texts.len());
            for r in replies {
                out.extend(r?);
            }
            let dim = out[0].len();
            if out.iter().any(|v| v.len() != dim) {
                return Err(KgError::Transport {
                    attempts: 1,
                    message: "malformed reply: inconsistent vector dimensions".into(),
                });
            }
            Ok(out)
        }
    }
}

fn embed_batch(client: &JsonClient, batch: &[String]) -> Result<Vec<Vec<f64>>> {
    let reply = client
        .post::<_, EmbedReply>(&EmbedRequest { texts: batch })
        .map_err(|f| KgError::Transport {
            attempts: f.attempts,
            message: f.message,
        })?;
    let malformed = |message: &str| KgError::Transport {
        attempts: reply.attempts,
        message: format!("malformed reply: {message}"),
    };
    if reply.value.vectors.len() != batch.len() {
        return Err(malformed("vector count does not match text count"));
    }
    reply
        .value
        .vectors
        .into_iter()
        .map(|v| normalized(v).ok_or_else(|| malformed("zero or non-finite vector")))
        .collect()
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn bucket(token: &str, dimension: usize) -> usize {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    (h.finish() % dimension as u64) as usize
}

fn hashed_embedding(text: &str, dimension: usize) -> Vec<f64> {
    let mut v = vec![0.0; dimension];
    let mut any = false;
    for tok in tokens(text) {
        v[bucket(&tok, dimension)] += 1.0;
        any = true;
    }
    if !any {
        v[bucket(text, dimension)] = 1.0;
    }
    normalized(v).expect("non-zero by construction")
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Sorts elements by descending cosine similarity to `query`; ties go to the
/// smaller key.
pub fn rank_elements<K: Ord + Clone>(
    query: &[f64],
    elements: &[(K, Vec<f64>)],
) -> Result<Vec<(K, f64)>> {
    if let Some((_, v)) = elements.iter().find(|(_, v)| v.len() != query.len()) {
        return Err(KgError::invalid(format!(
            "dimension mismatch: query {} vs element {}",
            query.len(),
            v.len()
        )));
    }
    let mut ranked: Vec<(K, f64)> = elements
        .iter()
        .map(|(k, v)| (k.clone(), cosine(query, v)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Integer prizes per node and edge plus the uniform edge cost.
#[derive(Clone, Debug, PartialEq)]
pub struct PrizeAssignment {
    pub node_prizes: BTreeMap<String, u32>,
    pub edge_prizes: BTreeMap<Triple, u32>,
    pub edge_cost: f64,
    pub k: u32,
}

impl PrizeAssignment {
    pub fn node_prize(&self, id: &str) -> u32 {
        self.node_prizes.get(id).copied().unwrap_or(0)
    }

    pub fn edge_prize(&self, t: &Triple) -> u32 {
        self.edge_prizes.get(t).copied().unwrap_or(0)
    }
}

/// `max(0, k − rank + 1)` for a 1-based rank.
pub fn prize_for_rank(rank: usize, k: u32) -> u32 {
    (k as usize + 1).saturating_sub(rank) as u32
}

pub fn assign_prizes(
    ranked_nodes: &[String],
    ranked_edges: &[Triple],
    k: u32,
    edge_cost: f64,
) -> Result<PrizeAssignment> {
    if k == 0 {
        return Err(KgError::invalid("k must be at least 1"));
    }
    if !(edge_cost > 0.0 && edge_cost.is_finite()) {
        return Err(KgError::invalid("edge cost must be positive"));
    }
    let node_prizes = ranked_nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), prize_for_rank(i + 1, k)))
        .collect();
    let edge_prizes = ranked_edges
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), prize_for_rank(i + 1, k)))
        .collect();
    Ok(PrizeAssignment {
        node_prizes,
        edge_prizes,
        edge_cost,
        k,
    })
}

/// Entity label with underscores turned into spaces.
pub fn verbalize_entity(e: &Entity) -> String {
    e.label.replace('_', " ")
}

/// `"subject relation object"` from labels, underscores turned into spaces.
pub fn verbalize_triple(g: &KnowledgeGraph, e: &Edge) -> String {
    format!(
        "{} {} {}",
        verbalize_entity(g.entity(e.subject)),
        g.relation(e.relation).label.replace('_', " "),
        verbalize_entity(g.entity(e.object))
    )
}

/// Cached element embeddings of one graph, reused across queries.
#[derive(Clone, Debug)]
pub struct GraphEmbeddings {
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<Vec<f64>>,
}

impl GraphEmbeddings {
    pub fn compute(g: &KnowledgeGraph, provider: &EmbeddingProvider) -> Result<Self> {
        let node_texts: Vec<String> = g.entities().iter().map(verbalize_entity).collect();
        let edge_texts: Vec<String> = g.edges().iter().map(|e| verbalize_triple(g, e)).collect();
        let mut all = node_texts;
        let split = all.len();
        all.extend(edge_texts);
        if all.is_empty() {
            return Ok(GraphEmbeddings {
                nodes: Vec::new(),
                edges: Vec::new(),
            });
        }
        let mut vecs = embed_texts(provider, &all)?;
        let edges = vecs.split_off(split);
        Ok(GraphEmbeddings { nodes: vecs, edges })
    }

    /// Ranks this graph's entities and triples against `query` and prizes them.
    pub fn prizes(
        &self,
        g: &KnowledgeGraph,
        query: &[f64],
        k: u32,
        edge_cost: f64,
    ) -> Result<PrizeAssignment> {
        let nodes: Vec<(String, Vec<f64>)> = g
            .entities()
            .iter()
            .zip(&self.nodes)
            .map(|(e, v)| (e.id.clone(), v.clone()))
            .collect();
        let edges: Vec<(Triple, Vec<f64>)> = g.triples().zip(self.edges.iter().cloned()).collect();
        let ranked_nodes: Vec<String> = rank_elements(query, &nodes)?
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        let ranked_edges: Vec<Triple> = rank_elements(query, &edges)?
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        assign_prizes(&ranked_nodes, &ranked_edges, k, edge_cost)
    }
}

/// Embeds `question` and all graph elements, then assigns prizes.
pub fn prizes_for_question(
    g: &KnowledgeGraph,
    provider: &EmbeddingProvider,
    question: &str,
    k: u32,
    edge_cost: f64,
) -> Result<PrizeAssignment> {
    let emb = GraphEmbeddings::compute(g, provider)?;
    let q = embed_texts(provider, &[question.to_string()])?.remove(0);
    emb.prizes(g, &q, k, edge_cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fallback(texts: &[&str]) -> Vec<Vec<f64>> {
        let texts: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        embed_texts(&EmbeddingProvider::default(), &texts).unwrap()
    }

    #[test]
    fn fallback_deterministic_and_unit() {
        let v = fallback(&[
            "Tesla founded by Elon Musk",
            "Tesla founded by Elon Musk",
            "?!",
        ]);
        assert_eq!(v[0], v[1]);
        for x in &v {
            let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
            assert_eq!(x.len(), FALLBACK_DIMENSION);
        }
    }

    #[test]
    fn empty_text_rejected() {
        let p = EmbeddingProvider::default();
        assert!(embed_texts(&p, &[]).is_err());
        assert!(embed_texts(&p, &["".to_string()]).is_err());
    }

    #[test]
    fn rank_self_first_and_orthogonal_last() {
        let q = vec![1.0, 0.0, 0.0];
        let els = vec![
            ("orth".to_string(), vec![0.0, 1.0, 0.0]),
            ("pos".to_string(), vec![0.6, 0.8, 0.0]),
            ("self".to_string(), q.clone()),
        ];
        let ranked = rank_elements(&q, &els).unwrap();
        let order: Vec<&str> = ranked.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(order, vec!["self", "pos", "orth"]);
    }

    #[test]
    fn rank_ties_break_on_key() {
        let q = vec![1.0, 0.0];
        let els = vec![
            ("b".to_string(), vec![1.0, 0.0]),
            ("a".to_string(), vec![1.0, 0.0]),
        ];
        let ranked = rank_elements(&q, &els).unwrap();
        assert_eq!(ranked[0].0, "a");
    }

    #[test]
    fn rank_dimension_mismatch() {
        let els = vec![("a".to_string(), vec![1.0])];
        assert!(rank_elements(&[1.0, 0.0], &els).is_err());
    }

    #[test]
    fn prizes_basic() {
        let nodes: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let pa = assign_prizes(&nodes, &[], 3, 1.0).unwrap();
        let got: Vec<u32> = nodes.iter().map(|n| pa.node_prize(n)).collect();
        assert_eq!(got, vec![3, 2, 1, 0]);
        assert_eq!(pa.node_prize("unknown"), 0);
    }

    #[test]
    fn prizes_k_exceeds_list() {
        let nodes: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let pa = assign_prizes(&nodes, &[], 10, 1.0).unwrap();
        assert_eq!(pa.node_prize("a"), 10);
        assert_eq!(pa.node_prize("b"), 9);
    }

    #[test]
    fn prizes_invalid() {
        assert!(assign_prizes(&[], &[], 0, 1.0).is_err());
        assert!(assign_prizes(&[], &[], 1, 0.0).is_err());
    }

    #[test]
    fn verbalization() {
        let g = KnowledgeGraph::from_triples([("Tesla", "founded_by", "Elon_Musk")]).unwrap();
        assert_eq!(
            verbalize_entity(g.entity(g.node_index("Tesla").unwrap())),
            "Tesla"
        );
        assert_eq!(
            verbalize_entity(g.entity(g.node_index("Elon_Musk").unwrap())),
            "Elon Musk"
        );
        assert_eq!(
            verbalize_triple(&g, &g.edges()[0]),
            "Tesla founded by Elon Musk"
        );
    }
}
