//! Directed labeled multigraph of entities, relation types and triples.
//!
//! Entities and relations are interned in lexicographic order of their ids, so
//! an entity's index doubles as its position in every per-entity vector the
//! metrics build. Exact duplicate `(subject, relation, object)` triples are
//! collapsed on construction; distinct relations between the same pair of
//! entities are kept as parallel edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};

pub type NodeIx = usize;
pub type RelIx = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub id: String,
    pub label: String,
}

/// A triple by value, keyed on ids. Ordering is the canonical
/// (subject, relation, object) lexicographic order. Serializes as `[s, r, o]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(String, String, String)", into = "(String, String, String)")]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

impl From<(String, String, String)> for Triple {
    fn from((subject, relation, object): (String, String, String)) -> Self {
        Triple {
            subject,
            relation,
            object,
        }
    }
}

impl From<Triple> for (String, String, String) {
    fn from(t: Triple) -> Self {
        (t.subject, t.relation, t.object)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

/// A triple by index into its owning graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub subject: NodeIx,
    pub relation: RelIx,
    pub object: NodeIx,
}

impl Edge {
    /// The endpoint opposite `v`, or `None` if `v` is not an endpoint.
    pub fn other(&self, v: NodeIx) -> Option<NodeIx> {
        if self.subject == v {
            Some(self.object)
        } else if self.object == v {
            Some(self.subject)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: f64,
    pub clustering_coefficient: f64,
    pub density: f64,
}

/// Immutable knowledge graph. Build one with [`GraphBuilder`].
#[derive(Clone, Default)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    entity_ix: HashMap<String, NodeIx>,
    relations: Vec<Relation>,
    relation_ix: HashMap<String, RelIx>,
    edges: Vec<Edge>,
    out_index: Vec<Vec<usize>>,
    in_index: Vec<Vec<usize>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relations == other.relations
            && self.edges == other.edges
    }
}

impl fmt::Debug for KnowledgeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeGraph")
            .field("entities", &self.entities.len())
            .field("relations", &self.relations.len())
            .field("triples", &self.triples().collect::<Vec<_>>())
            .finish()
    }
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn from_triples<I, S>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut b = GraphBuilder::default();
        for (s, r, o) in triples {
            b.add_triple(s, r, o);
        }
        b.build()
    }

    /// Assembles a graph from already-sorted tables. `edges` need not be sorted.
    fn from_parts(entities: Vec<Entity>, relations: Vec<Relation>, mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let entity_ix = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        let relation_ix = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let mut out_index = vec![Vec::new(); entities.len()];
        let mut in_index = vec![Vec::new(); entities.len()];
        for (pos, e) in edges.iter().enumerate() {
            out_index[e.subject].push(pos);
            in_index[e.object].push(pos);
        }
        KnowledgeGraph {
            entities,
            entity_ix,
            relations,
            relation_ix,
            edges,
            out_index,
            in_index,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn triple_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// Edges in canonical triple order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn entity(&self, v: NodeIx) -> &Entity {
        &self.entities[v]
    }

    pub fn relation(&self, r: RelIx) -> &Relation {
        &self.relations[r]
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIx> {
        self.entity_ix.get(id).copied()
    }

    pub fn relation_index(&self, id: &str) -> Option<RelIx> {
        self.relation_ix.get(id).copied()
    }

    pub(crate) fn require_node(&self, id: &str) -> Result<NodeIx> {
        self.node_index(id).ok_or_else(|| KgError::entity(id))
    }

    pub fn triple(&self, e: &Edge) -> Triple {
        Triple {
            subject: self.entities[e.subject].id.clone(),
            relation: self.relations[e.relation].id.clone(),
            object: self.entities[e.object].id.clone(),
        }
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.edges.iter().map(|e| self.triple(e))
    }

    /// Resolves a triple to an edge of this graph, if present.
    pub fn edge_of(&self, t: &Triple) -> Option<Edge> {
        let e = Edge {
            subject: self.node_index(&t.subject)?,
            relation: self.relation_index(&t.relation)?,
            object: self.node_index(&t.object)?,
        };
        self.edges.binary_search(&e).ok().map(|_| e)
    }

    pub fn edge_position(&self, e: &Edge) -> Option<usize> {
        self.edges.binary_search(e).ok()
    }

    pub fn contains_triple(&self, t: &Triple) -> bool {
        self.edge_of(t).is_some()
    }

    /// Positions (into [`edges`](Self::edges)) of the edges leaving `v`.
    pub fn out_edges(&self, v: NodeIx) -> &[usize] {
        &self.out_index[v]
    }

    /// Positions of the edges entering `v`.
    pub fn in_edges(&self, v: NodeIx) -> &[usize] {
        &self.in_index[v]
    }

    /// Positions of all edges touching `v`; a self-loop is listed once.
    pub fn incident_edges(&self, v: NodeIx) -> impl Iterator<Item = usize> + '_ {
        let outs = self.out_index[v].iter().copied();
        let ins = self.in_index[v]
            .iter()
            .copied()
            .filter(move |&p| self.edges[p].subject != v);
        outs.chain(ins)
    }

    /// Undirected simple projection: sorted neighbor lists, self-loops dropped.
    pub fn simple_adjacency(&self) -> Vec<Vec<NodeIx>> {
        simple_adjacency(self.entities.len(), self.edges.iter())
    }

    /// All entities sharing a triple with `id` in either direction.
    /// Contains `id` itself only when it carries a self-loop.
    pub fn neighbors_1hop(&self, id: &str) -> Result<BTreeSet<String>> {
        let v = self.require_node(id)?;
        Ok(self
            .neighbor_indices(v)
            .into_iter()
            .map(|u| self.entities[u].id.clone())
            .collect())
    }

    pub(crate) fn neighbor_indices(&self, v: NodeIx) -> BTreeSet<NodeIx> {
        let mut out = BTreeSet::new();
        for &p in &self.out_index[v] {
            out.insert(self.edges[p].object);
        }
        for &p in &self.in_index[v] {
            out.insert(self.edges[p].subject);
        }
        out
    }

    /// Local clustering coefficient of `id` on the undirected simple projection.
    pub fn local_clustering(&self, id: &str) -> Result<f64> {
        let v = self.require_node(id)?;
        let adj = self.simple_adjacency();
        Ok(clustering_at(&adj, v))
    }

    /// The subgraph holding only triples of relation `id`. Every entity is
    /// kept, including ones left isolated.
    pub fn relation_subgraph(&self, id: &str) -> Result<KnowledgeGraph> {
        let r = self
            .relation_index(id)
            .ok_or_else(|| KgError::relation(id))?;
        let edges = self
            .edges
            .iter()
            .filter(|e| e.relation == r)
            .copied()
            .collect();
        Ok(KnowledgeGraph::from_parts(
            self.entities.clone(),
            self.relations.clone(),
            edges,
        ))
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.entities.len();
        if n == 0 {
            return GraphStats::default();
        }
        let adj = self.simple_adjacency();
        let undirected: usize = adj.iter().map(Vec::len).sum::<usize>() / 2;
        let clustering = (0..n).map(|v| clustering_at(&adj, v)).sum::<f64>() / n as f64;
        let directed: BTreeSet<(NodeIx, NodeIx)> = self
            .edges
            .iter()
            .filter(|e| e.subject != e.object)
            .map(|e| (e.subject, e.object))
            .collect();
        let density = if n < 2 {
            0.0
        } else {
            directed.len() as f64 / (n as f64 * (n as f64 - 1.0))
        };
        GraphStats {
            node_count: n,
            edge_count: self.edges.len(),
            avg_degree: 2.0 * undirected as f64 / n as f64,
            clustering_coefficient: clustering,
            density,
        }
    }

    /// Keeps the entities flagged in `keep` and the edges between them.
    /// The relation table shrinks to the relations still in use.
    pub fn induced(&self, keep: &[bool]) -> KnowledgeGraph {
        assert_eq!(keep.len(), self.entities.len());
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| keep[e.subject] && keep[e.object])
            .copied()
            .collect();
        self.restrict(keep, &edges)
    }

    /// Subgraph made of the listed edges plus the flagged entities.
    pub(crate) fn restrict(&self, keep: &[bool], edges: &[Edge]) -> KnowledgeGraph {
        let mut node_map = vec![usize::MAX; self.entities.len()];
        let mut entities = Vec::new();
        for (v, e) in self.entities.iter().enumerate() {
            if keep[v] {
                node_map[v] = entities.len();
                entities.push(e.clone());
            }
        }
        let mut used = vec![false; self.relations.len()];
        for e in edges {
            used[e.relation] = true;
        }
        let mut rel_map = vec![usize::MAX; self.relations.len()];
        let mut relations = Vec::new();
        for (r, rel) in self.relations.iter().enumerate() {
            if used[r] {
                rel_map[r] = relations.len();
                relations.push(rel.clone());
            }
        }
        let edges = edges
            .iter()
            .map(|e| Edge {
                subject: node_map[e.subject],
                relation: rel_map[e.relation],
                object: node_map[e.object],
            })
            .collect();
        KnowledgeGraph::from_parts(entities, relations, edges)
    }

    /// Same entity and relation tables, different triple set. Every triple must
    /// reference known ids.
    pub fn with_triples<'a, I>(&self, triples: I) -> Result<KnowledgeGraph>
    where
        I: IntoIterator<Item = &'a Triple>,
    {
        let mut edges = Vec::new();
        for t in triples {
            edges.push(Edge {
                subject: self.require_node(&t.subject)?,
                relation: self
                    .relation_index(&t.relation)
                    .ok_or_else(|| KgError::relation(&t.relation))?,
                object: self.require_node(&t.object)?,
            });
        }
        Ok(KnowledgeGraph::from_parts(
            self.entities.clone(),
            self.relations.clone(),
            edges,
        ))
    }

    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> KnowledgeGraph {
        KnowledgeGraph::from_parts(self.entities.clone(), self.relations.clone(), edges)
    }

    /// Relation indices that occur in at least one triple.
    pub fn used_relations(&self) -> Vec<RelIx> {
        let set: BTreeSet<RelIx> = self.edges.iter().map(|e| e.relation).collect();
        set.into_iter().collect()
    }

    /// Entity id → label lookup for every entity and relation.
    pub fn label_map(&self) -> BTreeMap<String, String> {
        self.entities
            .iter()
            .map(|e| (e.id.clone(), e.label.clone()))
            .chain(
                self.relations
                    .iter()
                    .map(|r| (r.id.clone(), r.label.clone())),
            )
            .collect()
    }
}

pub(crate) fn simple_adjacency<'a>(
    n: usize,
    edges: impl Iterator<Item = &'a Edge>,
) -> Vec<Vec<NodeIx>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        if e.subject != e.object {
            adj[e.subject].push(e.object);
            adj[e.object].push(e.subject);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// `2·triangles / (deg·(deg−1))` on a sorted simple adjacency list.
pub(crate) fn clustering_at(adj: &[Vec<NodeIx>], v: NodeIx) -> f64 {
    let nbrs = &adj[v];
    let deg = nbrs.len();
    if deg < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if adj[a].binary_search(&b).is_ok() {
                links += 1;
            }
        }
    }
    2.0 * links as f64 / (deg as f64 * (deg as f64 - 1.0))
}

/// Collects entities, relations and triples, then freezes them into a
/// [`KnowledgeGraph`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    entities: BTreeMap<String, String>,
    relations: BTreeMap<String, String>,
    triples: BTreeSet<(String, String, String)>,
}

impl GraphBuilder {
    /// Registers an entity. A later call with the same id overwrites the label.
    pub fn add_entity(&mut self, id: impl Into<String>, label: impl Into<String>) -> &mut Self {
        self.entities.insert(id.into(), label.into());
        self
    }

    pub fn add_relation(&mut self, id: impl Into<String>, label: impl Into<String>) -> &mut Self {
        self.relations.insert(id.into(), label.into());
        self
    }

    /// Adds a triple; endpoints and relation are registered with label = id
    /// unless already known. Returns false if the triple was already present.
    pub fn add_triple(
        &mut self,
        s: impl Into<String>,
        r: impl Into<String>,
        o: impl Into<String>,
    ) -> bool {
        let (s, r, o) = (s.into(), r.into(), o.into());
        self.entities.entry(s.clone()).or_insert_with(|| s.clone());
        self.entities.entry(o.clone()).or_insert_with(|| o.clone());
        self.relations.entry(r.clone()).or_insert_with(|| r.clone());
        self.triples.insert((s, r, o))
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        if self.entities.keys().any(String::is_empty) {
            return Err(KgError::invalid("entity id must be non-empty"));
        }
        if self.relations.keys().any(String::is_empty) {
            return Err(KgError::invalid("relation id must be non-empty"));
        }
        let entities: Vec<Entity> = self
            .entities
            .into_iter()
            .map(|(id, label)| Entity { id, label })
            .collect();
        let relations: Vec<Relation> = self
            .relations
            .into_iter()
            .map(|(id, label)| Relation { id, label })
            .collect();
        let ent: HashMap<&str, NodeIx> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        let rel: HashMap<&str, RelIx> = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        let edges = self
            .triples
            .iter()
            .map(|(s, r, o)| Edge {
                subject: ent[s.as_str()],
                relation: rel[r.as_str()],
                object: ent[o.as_str()],
            })
            .collect();
        Ok(KnowledgeGraph::from_parts(entities, relations, edges))
    }
}
