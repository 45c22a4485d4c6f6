//! Best-first path search over a priority queue.
//!
//! Search starts from the highest-prize nodes and extends paths one edge at a
//! time; extending into node `v` over edge `e` adds `p_v + p_e − c_e`. Nodes
//! are never revisited within a path. Queue entries are keyed by an optimistic
//! bound (current score plus the best possible gain for every remaining step),
//! and a finished path is only emitted once its exact score tops every
//! outstanding bound, so paths come out in descending score order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{IndexPath, PrizeTable, ScoredPath};
use crate::error::{KgError, Result};
use crate::graph::{KnowledgeGraph, NodeIx};
use crate::relevance::PrizeAssignment;

pub(super) const DEFAULT_START_COUNT: usize = 5;
pub(super) const DEFAULT_MAX_LEN: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathParams {
    pub start_count: usize,
    /// Maximum number of edges per path.
    pub max_len: usize,
    pub result_count: usize,
    /// Follow edges subject → object only.
    pub directed: bool,
    /// Cap on path expansions; past it, queued partial paths are still
    /// reported but no longer extended.
    pub max_expansions: usize,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            start_count: DEFAULT_START_COUNT,
            max_len: DEFAULT_MAX_LEN,
            result_count: crate::relevance::DEFAULT_K as usize,
            directed: false,
            max_expansions: 1_000_000,
        }
    }
}

impl PathParams {
    fn validate(&self) -> Result<()> {
        if self.start_count == 0 {
            return Err(KgError::invalid("start_count must be at least 1"));
        }
        if self.max_len == 0 {
            return Err(KgError::invalid("max_len must be at least 1"));
        }
        if self.result_count == 0 {
            return Err(KgError::invalid("result_count must be at least 1"));
        }
        Ok(())
    }
}

struct Partial {
    nodes: Vec<NodeIx>,
    edges: Vec<usize>,
    score: f64,
}

impl Partial {
    /// Interleaved `[n0, e0, n1, …]` sequence used for tie-breaks and dedup.
    fn sequence(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.nodes.len() * 2);
        for (i, &v) in self.nodes.iter().enumerate() {
            seq.push(v);
            if let Some(&e) = self.edges.get(i) {
                seq.push(e);
            }
        }
        seq
    }
}

struct Entry {
    key: f64,
    finished: bool,
    seq: Vec<usize>,
    id: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // max-heap: larger key first, finished before unfinished, smaller sequence first
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| self.finished.cmp(&other.finished))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Top-scoring simple paths from the `start_count` highest-prize nodes,
/// sorted by descending score. A path and its reversal count once.
pub fn best_paths(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    params: &PathParams,
) -> Result<Vec<IndexPath>> {
    params.validate()?;
    table.check(g)?;
    if g.is_empty() {
        return Ok(Vec::new());
    }

    let best_node = table.node.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best_edge = (0..g.triple_count())
        .map(|p| table.edge_gain(p))
        .fold(f64::NEG_INFINITY, f64::max);
    let step_bound = (best_node + best_edge).max(0.0);

    let mut starts: Vec<NodeIx> = (0..g.entity_count()).collect();
    starts.sort_by(|&a, &b| table.node[b].total_cmp(&table.node[a]).then(a.cmp(&b)));
    starts.truncate(params.start_count);

    let mut arena: Vec<Partial> = Vec::new();
    let mut heap = BinaryHeap::new();
    let bound = |p: &Partial| p.score + (params.max_len - p.edges.len()) as f64 * step_bound;

    for v in starts {
        let p = Partial {
            nodes: vec![v],
            edges: Vec::new(),
            score: table.node[v],
        };
        heap.push(Entry {
            key: bound(&p),
            finished: false,
            seq: p.sequence(),
            id: arena.len(),
        });
        arena.push(p);
    }

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut expansions = 0usize;
    while let Some(entry) = heap.pop() {
        if entry.finished {
            let p = &arena[entry.id];
            let canonical = if params.directed {
                entry.seq.clone()
            } else {
                let rev: Vec<usize> = entry.seq.iter().rev().copied().collect();
                rev.min(entry.seq.clone())
            };
            if seen.insert(canonical) {
                out.push(IndexPath {
                    nodes: p.nodes.clone(),
                    edges: p.edges.clone(),
                    score: p.score,
                });
                if out.len() == params.result_count {
                    break;
                }
            }
            continue;
        }

        let (score, len, last) = {
            let p = &arena[entry.id];
            (p.score, p.edges.len(), *p.nodes.last().unwrap())
        };
        heap.push(Entry {
            key: score,
            finished: true,
            seq: entry.seq,
            id: entry.id,
        });
        if len == params.max_len || expansions >= params.max_expansions {
            continue;
        }
        expansions += 1;

        let steps: Vec<(usize, NodeIx)> = if params.directed {
            g.out_edges(last)
                .iter()
                .map(|&pos| (pos, g.edges()[pos].object))
                .collect()
        } else {
            g.incident_edges(last)
                .map(|pos| (pos, g.edges()[pos].other(last).unwrap()))
                .collect()
        };
        for (pos, next) in steps {
            let p = &arena[entry.id];
            if p.nodes.contains(&next) {
                continue;
            }
            let mut nodes = p.nodes.clone();
            nodes.push(next);
            let mut edges = p.edges.clone();
            edges.push(pos);
            let child = Partial {
                score: p.score + table.node[next] + table.edge_gain(pos),
                nodes,
                edges,
            };
            heap.push(Entry {
                key: bound(&child),
                finished: false,
                seq: child.sequence(),
                id: arena.len(),
            });
            arena.push(child);
        }
    }
    Ok(out)
}

pub fn retrieve_paths(
    g: &KnowledgeGraph,
    pa: &PrizeAssignment,
    params: &PathParams,
) -> Result<Vec<ScoredPath>> {
    let table = PrizeTable::from_assignment(g, pa);
    Ok(best_paths(g, &table, params)?
        .iter()
        .map(|p| ScoredPath::from_index(g, p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_abc() -> (KnowledgeGraph, PrizeTable) {
        let g = KnowledgeGraph::from_triples([("A", "r", "B"), ("B", "r", "C")]).unwrap();
        let t = PrizeTable::uniform(vec![3.0, 2.0, 1.0], vec![0.0, 0.0], 1.0);
        (g, t)
    }

    #[test]
    fn chain_best_path() {
        let (g, t) = chain_abc();
        let paths = best_paths(&g, &t, &PathParams::default()).unwrap();
        // A-B and A-B-C tie at 4; the shorter sequence sorts first
        assert_eq!((paths[0].nodes.clone(), paths[0].score), (vec![0, 1], 4.0));
        assert_eq!(
            (paths[1].nodes.clone(), paths[1].score),
            (vec![0, 1, 2], 4.0)
        );
        for w in paths.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn isolated_prized_node() {
        let mut b = KnowledgeGraph::builder();
        b.add_entity("A", "A");
        let g = b.build().unwrap();
        let t = PrizeTable::uniform(vec![7.0], vec![], 1.0);
        let paths = best_paths(&g, &t, &PathParams::default()).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec![0]);
        assert!(paths[0].edges.is_empty());
        assert_eq!(paths[0].score, 7.0);
    }

    #[test]
    fn reversal_reported_once() {
        let (g, t) = chain_abc();
        let params = PathParams {
            start_count: 3,
            result_count: 100,
            ..PathParams::default()
        };
        let paths = best_paths(&g, &t, &params).unwrap();
        // A, B, C, A-B, B-C, A-B-C
        assert_eq!(paths.len(), 6);
    }

    #[test]
    fn directed_mode_follows_arrows() {
        let (g, t) = chain_abc();
        let params = PathParams {
            start_count: 1,
            directed: true,
            result_count: 10,
            ..PathParams::default()
        };
        let start_c = PrizeTable::uniform(vec![1.0, 2.0, 3.0], vec![0.0, 0.0], 1.0);
        let from_c = best_paths(&g, &start_c, &params).unwrap();
        assert_eq!(from_c.len(), 1, "C has no out-edges");
        let from_a = best_paths(&g, &t, &params).unwrap();
        assert!(from_a.iter().any(|p| p.nodes == vec![0, 1, 2]));
    }

    #[test]
    fn empty_graph_and_bad_params() {
        let t = PrizeTable::uniform(vec![], vec![], 1.0);
        assert!(
            best_paths(&KnowledgeGraph::default(), &t, &PathParams::default())
                .unwrap()
                .is_empty()
        );
        let (g, t) = chain_abc();
        for bad in [
            PathParams {
                start_count: 0,
                ..PathParams::default()
            },
            PathParams {
                max_len: 0,
                ..PathParams::default()
            },
            PathParams {
                result_count: 0,
                ..PathParams::default()
            },
        ] {
            assert!(best_paths(&g, &t, &bad).is_err());
        }
    }
}
