//! Prize-cost retrieval of a knowledge subset from a graph.
//!
//! Every variant optimizes the same objective over its members:
//! the sum of node prizes plus edge prizes minus edge costs. See [`Variant`]
//! for the supported result shapes.

mod exhaustive;
mod paths;
mod pcst;
mod triplets;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{KgError, Result};
use crate::graph::{KnowledgeGraph, NodeIx, Triple};
use crate::relevance::PrizeAssignment;

pub use exhaustive::{
    best_path_exhaustive, best_subgraph_exhaustive, brute_force_best_path,
    brute_force_best_subgraph, EXHAUSTIVE_NODE_LIMIT,
};
pub use paths::{best_paths, retrieve_paths, PathParams};
pub use pcst::{pcst_subgraph, retrieve_subgraph_pcst, PCST_ROOTS};
pub use triplets::{retrieve_triplets, top_triplets};

/// Dense per-element prizes and costs aligned with a graph's node and edge
/// order. All retrieval algorithms work on this form.
#[derive(Clone, Debug, PartialEq)]
pub struct PrizeTable {
    pub node: Vec<f64>,
    pub edge: Vec<f64>,
    pub cost: Vec<f64>,
}

impl PrizeTable {
    pub fn from_assignment(g: &KnowledgeGraph, pa: &PrizeAssignment) -> Self {
        let node = g
            .entities()
            .iter()
            .map(|e| pa.node_prize(&e.id) as f64)
            .collect();
        let edge = g.triples().map(|t| pa.edge_prize(&t) as f64).collect();
        PrizeTable {
            node,
            edge,
            cost: vec![pa.edge_cost; g.triple_count()],
        }
    }

    pub fn uniform(node: Vec<f64>, edge: Vec<f64>, cost: f64) -> Self {
        let cost = vec![cost; edge.len()];
        PrizeTable { node, edge, cost }
    }

    /// Every prize and cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect();
        PrizeTable {
            node: s(&self.node),
            edge: s(&self.edge),
            cost: s(&self.cost),
        }
    }

    pub(crate) fn check(&self, g: &KnowledgeGraph) -> Result<()> {
        if self.node.len() != g.entity_count()
            || self.edge.len() != g.triple_count()
            || self.cost.len() != g.triple_count()
        {
            return Err(KgError::invalid("prize table does not match graph size"));
        }
        Ok(())
    }

    /// Edge prize minus edge cost.
    pub fn edge_gain(&self, pos: usize) -> f64 {
        self.edge[pos] - self.cost[pos]
    }

    pub fn has_prized_node(&self) -> bool {
        self.node.iter().any(|&p| p > 0.0)
    }
}

/// Objective value of a set of nodes and edge positions.
pub fn objective(table: &PrizeTable, nodes: &[NodeIx], edges: &[usize]) -> f64 {
    nodes.iter().map(|&v| table.node[v]).sum::<f64>()
        + edges.iter().map(|&p| table.edge_gain(p)).sum::<f64>()
}

/// A path by index: `nodes.len() == edges.len() + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexPath {
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<usize>,
    pub score: f64,
}

/// A connected node/edge selection by index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSubgraph {
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<usize>,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub nodes: Vec<String>,
    pub edges: Vec<Triple>,
    pub score: f64,
}

impl ScoredPath {
    pub(crate) fn from_index(g: &KnowledgeGraph, p: &IndexPath) -> Self {
        ScoredPath {
            nodes: p.nodes.iter().map(|&v| g.entity(v).id.clone()).collect(),
            edges: p
                .edges
                .iter()
                .map(|&pos| g.triple(&g.edges()[pos]))
                .collect(),
            score: p.score,
        }
    }

    /// Recomputes the objective from a prize assignment.
    pub fn recompute(&self, pa: &PrizeAssignment) -> f64 {
        self.nodes
            .iter()
            .map(|n| pa.node_prize(n) as f64)
            .sum::<f64>()
            + self
                .edges
                .iter()
                .map(|t| pa.edge_prize(t) as f64 - pa.edge_cost)
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSubgraph {
    pub subgraph: KnowledgeGraph,
    pub score: f64,
}

impl ScoredSubgraph {
    pub(crate) fn from_index(g: &KnowledgeGraph, s: &IndexSubgraph) -> Self {
        let mut keep = vec![false; g.entity_count()];
        for &v in &s.nodes {
            keep[v] = true;
        }
        let edges: Vec<_> = s.edges.iter().map(|&p| g.edges()[p]).collect();
        ScoredSubgraph {
            subgraph: g.restrict(&keep, &edges),
            score: s.score,
        }
    }

    pub fn recompute(&self, pa: &PrizeAssignment) -> f64 {
        self.subgraph
            .entities()
            .iter()
            .map(|e| pa.node_prize(&e.id) as f64)
            .sum::<f64>()
            + self
                .subgraph
                .triples()
                .map(|t| pa.edge_prize(&t) as f64 - pa.edge_cost)
                .sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Triplets,
    Paths,
    #[default]
    Subgraph,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Triplets => "triplets",
            Variant::Paths => "paths",
            Variant::Subgraph => "subgraph",
        }
    }
}

impl FromStr for Variant {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplets" => Ok(Variant::Triplets),
            "paths" => Ok(Variant::Paths),
            "subgraph" => Ok(Variant::Subgraph),
            other => Err(KgError::invalid(format!(
                "unknown retrieval variant `{other}`"
            ))),
        }
    }
}

/// The selected knowledge subset for one query. Only the fields of the
/// active variant are populated.
#[derive(Clone, Debug, PartialEq)]
pub struct RetrievedKnowledge {
    pub variant: Variant,
    pub triplets: Vec<(Triple, f64)>,
    pub paths: Vec<ScoredPath>,
    pub subgraph: Option<ScoredSubgraph>,
    pub provenance: PrizeAssignment,
    /// Display labels for every id mentioned above.
    pub labels: BTreeMap<String, String>,
}

impl RetrievedKnowledge {
    fn empty(variant: Variant, provenance: PrizeAssignment) -> Self {
        RetrievedKnowledge {
            variant,
            triplets: Vec::new(),
            paths: Vec::new(),
            subgraph: None,
            provenance,
            labels: BTreeMap::new(),
        }
    }

    fn attach_labels(&mut self, g: &KnowledgeGraph) {
        let all = g.label_map();
        let ids: Vec<String> = self
            .triples()
            .into_iter()
            .flat_map(|t| [t.subject, t.relation, t.object])
            .chain(self.paths.iter().flat_map(|p| p.nodes.clone()))
            .chain(
                self.subgraph
                    .iter()
                    .flat_map(|s| s.subgraph.entities().iter().map(|e| e.id.clone())),
            )
            .collect();
        for id in ids {
            if let Some(label) = all.get(&id) {
                self.labels.insert(id, label.clone());
            }
        }
    }

    pub fn label<'a>(&'a self, id: &'a str) -> &'a str {
        self.labels.get(id).map(String::as_str).unwrap_or(id)
    }

    /// Every triple the result mentions.
    pub fn triples(&self) -> BTreeSet<Triple> {
        match self.variant {
            Variant::Triplets => self.triplets.iter().map(|(t, _)| t.clone()).collect(),
            Variant::Paths => self
                .paths
                .iter()
                .flat_map(|p| p.edges.iter().cloned())
                .collect(),
            Variant::Subgraph => self
                .subgraph
                .as_ref()
                .map(|s| s.subgraph.triples().collect())
                .unwrap_or_default(),
        }
    }

    /// `{variant, items, scores, prize_k, edge_cost}`.
    pub fn to_json(&self) -> serde_json::Value {
        let (items, scores): (serde_json::Value, Vec<f64>) = match self.variant {
            Variant::Triplets => (
                json!(self.triplets.iter().map(|(t, _)| t).collect::<Vec<_>>()),
                self.triplets.iter().map(|(_, s)| *s).collect(),
            ),
            Variant::Paths => (
                json!(self
                    .paths
                    .iter()
                    .map(|p| json!({ "nodes": p.nodes, "edges": p.edges }))
                    .collect::<Vec<_>>()),
                self.paths.iter().map(|p| p.score).collect(),
            ),
            Variant::Subgraph => match &self.subgraph {
                Some(s) => (
                    json!({
                        "nodes": s.subgraph.entities().iter().map(|e| &e.id).collect::<Vec<_>>(),
                        "edges": s.subgraph.triples().collect::<Vec<_>>(),
                    }),
                    vec![s.score],
                ),
                None => (json!({ "nodes": [], "edges": [] }), Vec::new()),
            },
        };
        json!({
            "variant": self.variant.as_str(),
            "items": items,
            "scores": scores,
            "prize_k": self.provenance.k,
            "edge_cost": self.provenance.edge_cost,
        })
    }
}

/// Knobs for [`retrieve`]. `None` counts default to the prize `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalOptions {
    pub variant: Variant,
    pub triplet_count: Option<usize>,
    pub start_count: usize,
    pub max_len: usize,
    pub result_count: Option<usize>,
    pub directed: bool,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        RetrievalOptions {
            variant: Variant::default(),
            triplet_count: None,
            start_count: paths::DEFAULT_START_COUNT,
            max_len: paths::DEFAULT_MAX_LEN,
            result_count: None,
            directed: false,
        }
    }
}

impl RetrievalOptions {
    pub fn path_params(&self, k: u32) -> PathParams {
        PathParams {
            start_count: self.start_count,
            max_len: self.max_len,
            result_count: self.result_count.unwrap_or(k as usize),
            directed: self.directed,
            ..PathParams::default()
        }
    }
}

/// Runs the configured variant.
pub fn retrieve(
    g: &KnowledgeGraph,
    pa: &PrizeAssignment,
    opts: &RetrievalOptions,
) -> Result<RetrievedKnowledge> {
    match opts.variant {
        Variant::Triplets => retrieve_triplets(g, pa, opts.triplet_count.unwrap_or(pa.k as usize)),
        Variant::Paths => {
            let paths = retrieve_paths(g, pa, &opts.path_params(pa.k))?;
            let mut rk = RetrievedKnowledge::empty(Variant::Paths, pa.clone());
            rk.paths = paths;
            rk.attach_labels(g);
            Ok(rk)
        }
        Variant::Subgraph => {
            let sub = if g.is_empty() {
                None
            } else {
                Some(retrieve_subgraph_pcst(g, pa)?)
            };
            let mut rk = RetrievedKnowledge::empty(Variant::Subgraph, pa.clone());
            rk.subgraph = sub;
            rk.attach_labels(g);
            Ok(rk)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relevance::assign_prizes;

    #[test]
    fn json_shape() {
        let g = KnowledgeGraph::from_triples([("Tesla", "founded_by", "Elon_Musk")]).unwrap();
        let pa = assign_prizes(&["Tesla".into()], &[], 3, 1.0).unwrap();
        for variant in [Variant::Triplets, Variant::Paths, Variant::Subgraph] {
            let opts = RetrievalOptions {
                variant,
                ..Default::default()
            };
            let rk = retrieve(&g, &pa, &opts).unwrap();
            let v = rk.to_json();
            assert_eq!(v["variant"], variant.as_str());
            assert_eq!(v["prize_k"], 3);
            assert_eq!(v["edge_cost"], 1.0);
            assert!(v["scores"].is_array());
        }
    }

    #[test]
    fn variant_parse() {
        assert_eq!("paths".parse::<Variant>().unwrap(), Variant::Paths);
        assert!("tree".parse::<Variant>().is_err());
    }
}
