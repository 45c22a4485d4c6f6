//! Exact optima by enumeration, for graphs of at most ten entities.

use super::{objective, IndexPath, IndexSubgraph, PrizeTable, ScoredPath, ScoredSubgraph};
use crate::error::{KgError, Result};
use crate::graph::{KnowledgeGraph, NodeIx};
use crate::relevance::PrizeAssignment;

pub const EXHAUSTIVE_NODE_LIMIT: usize = 10;

fn guard(g: &KnowledgeGraph) -> Result<()> {
    if g.entity_count() > EXHAUSTIVE_NODE_LIMIT {
        return Err(KgError::TooLarge {
            nodes: g.entity_count(),
            limit: EXHAUSTIVE_NODE_LIMIT,
        });
    }
    if g.is_empty() {
        return Err(KgError::invalid("graph is empty"));
    }
    Ok(())
}

/// Highest-scoring simple path with at most `max_len` edges, over every
/// start node. Ties keep the first path found in index order.
pub fn best_path_exhaustive(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    max_len: usize,
    directed: bool,
) -> Result<IndexPath> {
    guard(g)?;
    table.check(g)?;
    let mut best: Option<IndexPath> = None;
    for v in 0..g.entity_count() {
        let mut nodes = vec![v];
        let mut edges = Vec::new();
        dfs(
            g, table, max_len, directed, &mut nodes, &mut edges, &mut best,
        );
    }
    Ok(best.unwrap())
}

fn dfs(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    max_len: usize,
    directed: bool,
    nodes: &mut Vec<NodeIx>,
    edges: &mut Vec<usize>,
    best: &mut Option<IndexPath>,
) {
    let score = objective(table, nodes, edges);
    if best.as_ref().is_none_or(|b| score > b.score) {
        *best = Some(IndexPath {
            nodes: nodes.clone(),
            edges: edges.clone(),
            score,
        });
    }
    if edges.len() == max_len {
        return;
    }
    let last = *nodes.last().unwrap();
    for (pos, e) in g.edges().iter().enumerate() {
        let next = if e.subject == last {
            e.object
        } else if !directed && e.object == last {
            e.subject
        } else {
            continue;
        };
        if nodes.contains(&next) {
            continue;
        }
        nodes.push(next);
        edges.push(pos);
        dfs(g, table, max_len, directed, nodes, edges, best);
        nodes.pop();
        edges.pop();
    }
}

/// Exact best connected subgraph. Enumerates node subsets with a connected
/// induced subgraph; for each, takes every non-negative-gain edge inside it
/// and connects what remains with a minimum spanning forest over the
/// loss-making edges.
pub fn best_subgraph_exhaustive(g: &KnowledgeGraph, table: &PrizeTable) -> Result<IndexSubgraph> {
    guard(g)?;
    table.check(g)?;
    let n = g.entity_count();
    let mut best: Option<IndexSubgraph> = None;
    for mask in 1u32..(1u32 << n) {
        let inside = |v: NodeIx| mask & (1 << v) != 0;
        let nodes: Vec<NodeIx> = (0..n).filter(|&v| inside(v)).collect();
        let internal: Vec<usize> = (0..g.triple_count())
            .filter(|&p| inside(g.edges()[p].subject) && inside(g.edges()[p].object))
            .collect();

        let mut dsu: Vec<usize> = (0..n).collect();
        fn find(d: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while d[r] != r {
                r = d[r];
            }
            let mut y = x;
            while d[y] != r {
                let next = d[y];
                d[y] = r;
                y = next;
            }
            r
        }
        let mut chosen = Vec::new();
        for &p in &internal {
            if table.edge_gain(p) >= 0.0 {
                chosen.push(p);
                let e = g.edges()[p];
                let (a, b) = (find(&mut dsu, e.subject), find(&mut dsu, e.object));
                dsu[a] = b;
            }
        }
        let mut lossy: Vec<usize> = internal
            .iter()
            .copied()
            .filter(|&p| table.edge_gain(p) < 0.0)
            .collect();
        lossy.sort_by(|&a, &b| {
            table
                .edge_gain(b)
                .total_cmp(&table.edge_gain(a))
                .then(a.cmp(&b))
        });
        for p in lossy {
            let e = g.edges()[p];
            let (a, b) = (find(&mut dsu, e.subject), find(&mut dsu, e.object));
            if a != b {
                dsu[a] = b;
                chosen.push(p);
            }
        }
        let root = find(&mut dsu, nodes[0]);
        if nodes.iter().any(|&v| find(&mut dsu, v) != root) {
            continue;
        }
        chosen.sort_unstable();
        let score = objective(table, &nodes, &chosen);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(IndexSubgraph {
                nodes,
                edges: chosen,
                score,
            });
        }
    }
    Ok(best.unwrap())
}

pub fn brute_force_best_path(
    g: &KnowledgeGraph,
    pa: &PrizeAssignment,
    max_len: usize,
) -> Result<ScoredPath> {
    let table = PrizeTable::from_assignment(g, pa);
    let p = best_path_exhaustive(g, &table, max_len, false)?;
    Ok(ScoredPath::from_index(g, &p))
}

pub fn brute_force_best_subgraph(
    g: &KnowledgeGraph,
    pa: &PrizeAssignment,
) -> Result<ScoredSubgraph> {
    let table = PrizeTable::from_assignment(g, pa);
    let s = best_subgraph_exhaustive(g, &table)?;
    Ok(ScoredSubgraph::from_index(g, &s))
}
