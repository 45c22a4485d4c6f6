//! Edge-level perturbation of a knowledge graph at a controlled level.
//!
//! A level `ρ` affects `round(ρ·|T|)` triples, drawn without replacement from
//! a seeded shuffle of the canonical triple order. Entities are never added
//! or removed. Every change lands in an edit log that replays onto the
//! original graph to reproduce the perturbed one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::graph::{Edge, KnowledgeGraph, NodeIx, Triple};
use crate::metrics::{fit_baseline_scorer, EdgeScorer};

const REWIRE_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RelationSwap,
    RelationReplace,
    EdgeRewire,
    EdgeDelete,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::RelationSwap,
        Method::RelationReplace,
        Method::EdgeRewire,
        Method::EdgeDelete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RelationSwap => "relation_swap",
            Method::RelationReplace => "relation_replace",
            Method::EdgeRewire => "edge_rewire",
            Method::EdgeDelete => "edge_delete",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Method::RelationSwap => "RS",
            Method::RelationReplace => "RR",
            Method::EdgeRewire => "ER",
            Method::EdgeDelete => "ED",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| KgError::invalid(format!("unknown perturbation method `{s}`")))
    }
}

/// How relation replacement picks the new relation among the alternatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplaceMode {
    /// Lowest scorer value.
    #[default]
    LeastPlausible,
    /// Highest scorer value (a wrong but plausible-looking relation).
    MostPlausible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub method: Method,
    pub level: f64,
    pub seed: u64,
    #[serde(default)]
    pub replace_mode: ReplaceMode,
}

impl PerturbationSpec {
    pub fn new(method: Method, level: f64, seed: u64) -> Self {
        PerturbationSpec {
            method,
            level,
            seed,
            replace_mode: ReplaceMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.level) {
            return Err(KgError::invalid(format!(
                "perturbation level {} outside [0,1]",
                self.level
            )));
        }
        Ok(())
    }
}

/// `round(level · total)`, halves rounded away from zero.
pub fn affected_count(level: f64, total: usize) -> usize {
    ((level * total as f64).round() as usize).min(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Swap,
    Replace,
    Rewire,
    Delete,
    /// A sampled triple that could not be perturbed; no change.
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub op: EditOp,
    pub before: Triple,
    pub after: Option<Triple>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedGraph {
    pub graph: KnowledgeGraph,
    pub edit_log: Vec<Edit>,
}

impl PerturbedGraph {
    /// One JSON object per line: `{op, before, after}`.
    pub fn edit_log_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.edit_log {
            out.push_str(&serde_json::to_string(e).expect("edit serializes"));
            out.push('\n');
        }
        out
    }
}

/// Perturbs with the frequency baseline as the plausibility scorer for
/// relation replacement.
pub fn perturb(g: &KnowledgeGraph, spec: &PerturbationSpec) -> Result<PerturbedGraph> {
    if spec.method == Method::RelationReplace && spec.level > 0.0 && g.triple_count() > 0 {
        let scorer = fit_baseline_scorer(g)?;
        perturb_with_scorer(g, spec, &scorer)
    } else {
        perturb_with_scorer(g, spec, &NoScorer)
    }
}

struct NoScorer;

impl EdgeScorer for NoScorer {
    fn score_all(&self, _: &[Triple]) -> Result<Vec<f64>> {
        Err(KgError::invalid("no scorer available"))
    }
}

/// Working copy of the edge set with undirected neighbor multiplicities.
struct State<'g> {
    g: &'g KnowledgeGraph,
    edges: BTreeSet<Edge>,
    neighbors: Vec<BTreeMap<NodeIx, usize>>,
    log: Vec<Edit>,
}

impl<'g> State<'g> {
    fn new(g: &'g KnowledgeGraph) -> Self {
        let mut s = State {
            g,
            edges: BTreeSet::new(),
            neighbors: vec![BTreeMap::new(); g.entity_count()],
            log: Vec::new(),
        };
        for e in g.edges() {
            s.insert(*e);
        }
        s
    }

    fn insert(&mut self, e: Edge) {
        self.edges.insert(e);
        *self.neighbors[e.subject].entry(e.object).or_default() += 1;
        if e.subject != e.object {
            *self.neighbors[e.object].entry(e.subject).or_default() += 1;
        }
    }

    fn remove(&mut self, e: Edge) {
        self.edges.remove(&e);
        let mut dec = |a: NodeIx, b: NodeIx| {
            if let Some(c) = self.neighbors[a].get_mut(&b) {
                *c -= 1;
                if *c == 0 {
                    self.neighbors[a].remove(&b);
                }
            }
        };
        dec(e.subject, e.object);
        if e.subject != e.object {
            dec(e.object, e.subject);
        }
    }

    fn change(&mut self, op: EditOp, before: Edge, after: Edge) {
        self.remove(before);
        self.insert(after);
        self.log.push(Edit {
            op,
            before: self.g.triple(&before),
            after: Some(self.g.triple(&after)),
        });
    }

    fn skip(&mut self, before: Edge) {
        self.log.push(Edit {
            op: EditOp::Skip,
            before: self.g.triple(&before),
            after: None,
        });
    }

    fn finish(self) -> PerturbedGraph {
        PerturbedGraph {
            graph: self.g.with_edges(self.edges.into_iter().collect()),
            edit_log: self.log,
        }
    }
}

pub fn perturb_with_scorer(
    g: &KnowledgeGraph,
    spec: &PerturbationSpec,
    scorer: &dyn EdgeScorer,
) -> Result<PerturbedGraph> {
    spec.validate()?;
    let total = g.triple_count();
    if spec.level > 0.0 && total == 0 {
        return Err(KgError::invalid("cannot perturb a graph without triples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<Edge> = g.edges().to_vec();
    order.shuffle(&mut rng);
    let mut state = State::new(g);

    match spec.method {
        Method::EdgeDelete => {
            for &e in &order[..affected_count(spec.level, total)] {
                state.remove(e);
                state.log.push(Edit {
                    op: EditOp::Delete,
                    before: g.triple(&e),
                    after: None,
                });
            }
        }
        Method::RelationSwap => swap_relations(&mut state, &order, spec.level),
        Method::RelationReplace => {
            for &e in &order[..affected_count(spec.level, total)] {
                replace_relation(&mut state, e, scorer, spec.replace_mode)?;
            }
        }
        Method::EdgeRewire => {
            for &e in &order[..affected_count(spec.level, total)] {
                rewire(&mut state, e, &mut rng);
            }
        }
    }
    Ok(state.finish())
}

fn swap_relations(state: &mut State<'_>, order: &[Edge], level: f64) {
    let total = order.len();
    let target = ((level * total as f64 / 2.0).round() as usize).min(total / 2);
    let mut used = vec![false; total];
    let mut pairs = 0;
    for i in 0..total {
        if pairs == target {
            break;
        }
        if used[i] {
            continue;
        }
        let a = order[i];
        let partner = (i + 1..total).find(|&j| {
            let b = order[j];
            if used[j] || b.relation == a.relation {
                return false;
            }
            let a2 = Edge {
                relation: b.relation,
                ..a
            };
            let b2 = Edge {
                relation: a.relation,
                ..b
            };
            !state.edges.contains(&a2) && !state.edges.contains(&b2)
        });
        match partner {
            Some(j) => {
                let b = order[j];
                used[i] = true;
                used[j] = true;
                state.change(
                    EditOp::Swap,
                    a,
                    Edge {
                        relation: b.relation,
                        ..a
                    },
                );
                state.change(
                    EditOp::Swap,
                    b,
                    Edge {
                        relation: a.relation,
                        ..b
                    },
                );
                pairs += 1;
            }
            None => {
                used[i] = true;
                state.skip(a);
            }
        }
    }
}

fn replace_relation(
    state: &mut State<'_>,
    e: Edge,
    scorer: &dyn EdgeScorer,
    mode: ReplaceMode,
) -> Result<()> {
    let g = state.g;
    let candidates: Vec<Edge> = (0..g.relations().len())
        .filter(|&r| r != e.relation)
        .map(|r| Edge { relation: r, ..e })
        .filter(|c| !state.edges.contains(c))
        .collect();
    if candidates.is_empty() {
        state.skip(e);
        return Ok(());
    }
    let triples: Vec<Triple> = candidates.iter().map(|c| g.triple(c)).collect();
    let scores = scorer.score_all(&triples)?;
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = match mode {
            ReplaceMode::LeastPlausible => scores[i] < scores[best],
            ReplaceMode::MostPlausible => scores[i] > scores[best],
        };
        if better {
            best = i;
        }
    }
    state.change(EditOp::Replace, e, candidates[best]);
    Ok(())
}

fn rewire(state: &mut State<'_>, e: Edge, rng: &mut ChaCha8Rng) {
    let n = state.g.entity_count();
    let near = &state.neighbors[e.subject];
    let candidates: Vec<NodeIx> = (0..n)
        .filter(|&v| v != e.subject && !near.contains_key(&v))
        .collect();
    if candidates.is_empty() {
        state.skip(e);
        return;
    }
    for _ in 0..REWIRE_ATTEMPTS {
        let object = candidates[rng.gen_range(0..candidates.len())];
        let after = Edge { object, ..e };
        if !state.edges.contains(&after) {
            state.change(EditOp::Rewire, e, after);
            return;
        }
    }
    state.skip(e);
}

/// Applies an edit log to `g`.
pub fn replay(g: &KnowledgeGraph, log: &[Edit]) -> Result<KnowledgeGraph> {
    let mut triples: BTreeSet<Triple> = g.triples().collect();
    for edit in log {
        match edit.op {
            EditOp::Skip => {}
            EditOp::Delete => {
                triples.remove(&edit.before);
            }
            _ => {
                let after = edit
                    .after
                    .as_ref()
                    .ok_or_else(|| KgError::invalid("edit is missing its replacement triple"))?;
                triples.remove(&edit.before);
                triples.insert(after.clone());
            }
        }
    }
    g.with_triples(&triples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_edges() -> KnowledgeGraph {
        let triples: Vec<(String, String, String)> = (0..10)
            .map(|i| {
                (
                    format!("n{i}"),
                    format!("r{}", i % 3),
                    format!("n{}", (i * 3 + 1) % 11),
                )
            })
            .collect();
        KnowledgeGraph::from_triples(triples).unwrap()
    }

    #[test]
    fn zero_level_is_identity() {
        let g = ten_edges();
        for m in Method::ALL {
            let p = perturb(&g, &PerturbationSpec::new(m, 0.0, 7)).unwrap();
            assert_eq!(p.graph, g);
            assert!(p.edit_log.is_empty());
        }
    }

    #[test]
    fn delete_half_and_all() {
        let g = ten_edges();
        assert_eq!(g.triple_count(), 10);
        let half = perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 0.5, 1)).unwrap();
        assert_eq!(half.graph.triple_count(), 5);
        let all = perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 1.0, 1)).unwrap();
        assert_eq!(all.graph.triple_count(), 0);
        assert_eq!(all.graph.entity_count(), g.entity_count());
    }

    #[test]
    fn level_out_of_range() {
        let g = ten_edges();
        assert!(perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 1.5, 1)).is_err());
        assert!(perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, -0.1, 1)).is_err());
    }

    #[test]
    fn rewire_skips_saturated_source() {
        // in a triangle every entity is adjacent to every other
        let g = KnowledgeGraph::from_triples([("A", "r", "B"), ("B", "r", "C"), ("C", "r", "A")])
            .unwrap();
        let p = perturb(&g, &PerturbationSpec::new(Method::EdgeRewire, 1.0, 3)).unwrap();
        assert!(p.edit_log.iter().all(|e| e.op == EditOp::Skip));
        assert_eq!(p.graph, g);
    }

    #[test]
    fn replace_picks_least_plausible() {
        let g = KnowledgeGraph::from_triples([
            ("A", "likes", "B"),
            ("A", "knows", "C"),
            ("A", "knows", "D"),
            ("E", "hates", "F"),
        ])
        .unwrap();
        let scorer = fit_baseline_scorer(&g).unwrap();
        let p = perturb_with_scorer(
            &g,
            &PerturbationSpec::new(Method::RelationReplace, 1.0, 0),
            &scorer,
        )
        .unwrap();
        let edit = p
            .edit_log
            .iter()
            .find(|e| e.before == Triple::new("A", "likes", "B"))
            .unwrap();
        // "knows" is A's dominant out-relation; "hates" never touches A or B
        assert_eq!(edit.after.as_ref().unwrap().relation, "hates");
        let spec = PerturbationSpec {
            replace_mode: ReplaceMode::MostPlausible,
            ..PerturbationSpec::new(Method::RelationReplace, 1.0, 0)
        };
        let p = perturb_with_scorer(&g, &spec, &scorer).unwrap();
        let edit = p
            .edit_log
            .iter()
            .find(|e| e.before == Triple::new("A", "likes", "B"))
            .unwrap();
        assert_eq!(edit.after.as_ref().unwrap().relation, "knows");
    }

    #[test]
    fn edit_log_jsonl_shape() {
        let g = ten_edges();
        let p = perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 0.2, 9)).unwrap();
        let line = p.edit_log_jsonl().lines().next().unwrap().to_string();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["op"], "delete");
        assert!(v["before"].is_array());
        assert!(v["after"].is_null());
    }

    #[test]
    fn method_names() {
        assert_eq!("ED".parse::<Method>().unwrap(), Method::EdgeDelete);
        assert_eq!(
            "relation_swap".parse::<Method>().unwrap(),
            Method::RelationSwap
        );
        assert!("XX".parse::<Method>().is_err());
    }
}
