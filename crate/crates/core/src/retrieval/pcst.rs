//! Prize-collecting Steiner subgraph heuristic.
//!
//! Edge prizes are folded into reduced costs `c_e − p_e`. An edge whose
//! reduced cost is negative carries surplus prize on its own, so once both
//! endpoints are selected it is always taken (the surplus acts like a virtual
//! prized node sitting on the edge).
//!
//! For each of the best few prized roots the component around the root is
//! grown into two spanning trees: one by greedy accretion (attach the outside
//! node with the largest `p_v + p_e − c_e`), one as a maximum spanning tree
//! over edge gains. Each tree is pruned to its best connected subtree by an
//! exact dynamic program, profitable chords are added back, and single-edge
//! attachments with positive net gain are accreted until none remain. The
//! best candidate over all roots is returned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{objective, IndexSubgraph, PrizeTable, ScoredSubgraph};
use crate::error::Result;
use crate::graph::{KnowledgeGraph, NodeIx};
use crate::relevance::PrizeAssignment;

pub const PCST_ROOTS: usize = 3;

#[derive(Clone, Copy)]
struct Step {
    gain: f64,
    edge: usize,
    node: NodeIx,
}

impl PartialEq for Step {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Step {}

impl PartialOrd for Step {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Step {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

/// Spanning tree of `root`'s component as parent links: `(parent, edge)`.
fn grow_tree(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    root: NodeIx,
    count_node: bool,
) -> Vec<Option<(NodeIx, usize)>> {
    let n = g.entity_count();
    let mut parent = vec![None; n];
    let mut in_tree = vec![false; n];
    let mut heap = BinaryHeap::new();
    let push_from = |v: NodeIx, heap: &mut BinaryHeap<Step>, in_tree: &[bool]| {
        for pos in g.incident_edges(v) {
            let u = g.edges()[pos].other(v).unwrap();
            if !in_tree[u] {
                let node_part = if count_node { table.node[u] } else { 0.0 };
                heap.push(Step {
                    gain: node_part + table.edge_gain(pos),
                    edge: pos,
                    node: u,
                });
            }
        }
    };
    in_tree[root] = true;
    push_from(root, &mut heap, &in_tree);
    while let Some(step) = heap.pop() {
        if in_tree[step.node] {
            continue;
        }
        in_tree[step.node] = true;
        let e = g.edges()[step.edge];
        parent[step.node] = Some((e.other(step.node).unwrap(), step.edge));
        push_from(step.node, &mut heap, &in_tree);
    }
    parent
}

/// Best connected subtree of the tree given by `parent` links around `root`.
fn prune_tree(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    root: NodeIx,
    parent: &[Option<(NodeIx, usize)>],
) -> (Vec<NodeIx>, Vec<usize>) {
    let n = g.entity_count();
    let mut children: Vec<Vec<(NodeIx, usize)>> = vec![Vec::new(); n];
    for (v, link) in parent.iter().enumerate() {
        if let Some((p, e)) = link {
            children[*p].push((v, *e));
        }
    }
    // post-order over the tree
    let mut order = Vec::new();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(c, _) in &children[v] {
            stack.push(c);
        }
    }
    let mut value = vec![0.0; n];
    for &v in order.iter().rev() {
        value[v] = table.node[v]
            + children[v]
                .iter()
                .map(|&(c, e)| (value[c] + table.edge_gain(e)).max(0.0))
                .sum::<f64>();
    }
    let top = order
        .iter()
        .copied()
        .max_by(|&a, &b| value[a].total_cmp(&value[b]).then(b.cmp(&a)))
        .unwrap_or(root);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut stack = vec![top];
    while let Some(v) = stack.pop() {
        nodes.push(v);
        for &(c, e) in &children[v] {
            if value[c] + table.edge_gain(e) > 0.0 {
                edges.push(e);
                stack.push(c);
            }
        }
    }
    (nodes, edges)
}

/// Adds profitable chords, then keeps attaching outside nodes whose best
/// single-edge connection (plus any chords it brings) has positive net gain.
fn polish(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    nodes: Vec<NodeIx>,
    edges: Vec<usize>,
) -> IndexSubgraph {
    let n = g.entity_count();
    let mut selected = vec![false; n];
    for &v in &nodes {
        selected[v] = true;
    }
    let mut taken = vec![false; g.triple_count()];
    for &e in &edges {
        taken[e] = true;
    }
    let add_chords = |selected: &[bool], taken: &mut [bool]| {
        for (pos, e) in g.edges().iter().enumerate() {
            if !taken[pos]
                && selected[e.subject]
                && selected[e.object]
                && table.edge_gain(pos) > 0.0
            {
                taken[pos] = true;
            }
        }
    };
    add_chords(&selected, &mut taken);
    loop {
        let mut best: Option<(f64, NodeIx, usize)> = None;
        for u in 0..n {
            if selected[u] {
                continue;
            }
            let mut link: Option<(f64, usize)> = None;
            let mut extra = 0.0;
            for pos in g.incident_edges(u) {
                let e = g.edges()[pos];
                let w = e.other(u).unwrap();
                if w == u {
                    extra += table.edge_gain(pos).max(0.0);
                    continue;
                }
                if !selected[w] {
                    continue;
                }
                let gain = table.edge_gain(pos);
                match link {
                    Some((g0, _)) if g0 >= gain => extra += gain.max(0.0),
                    Some((g0, _)) => {
                        extra += g0.max(0.0);
                        link = Some((gain, pos));
                    }
                    None => link = Some((gain, pos)),
                }
            }
            if let Some((gain, pos)) = link {
                let total = table.node[u] + gain + extra;
                if total > 1e-12 && best.is_none_or(|(b, _, _)| total > b) {
                    best = Some((total, u, pos));
                }
            }
        }
        match best {
            Some((_, u, pos)) => {
                selected[u] = true;
                taken[pos] = true;
                add_chords(&selected, &mut taken);
            }
            None => break,
        }
    }
    let nodes: Vec<NodeIx> = (0..n).filter(|&v| selected[v]).collect();
    let edges: Vec<usize> = (0..g.triple_count()).filter(|&p| taken[p]).collect();
    let score = objective(table, &nodes, &edges);
    IndexSubgraph {
        nodes,
        edges,
        score,
    }
}

/// One connected subgraph maximizing collected prizes minus costs
/// (heuristically). With no prized node at all, the highest-degree node is
/// returned on its own.
pub fn pcst_subgraph(
    g: &KnowledgeGraph,
    table: &PrizeTable,
    roots: usize,
) -> Result<IndexSubgraph> {
    table.check(g)?;
    let n = g.entity_count();
    if n == 0 {
        return Ok(IndexSubgraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            score: 0.0,
        });
    }
    if !table.has_prized_node() {
        let v = (0..n)
            .max_by(|&a, &b| {
                let (da, db) = (g.incident_edges(a).count(), g.incident_edges(b).count());
                da.cmp(&db).then(b.cmp(&a))
            })
            .unwrap();
        return Ok(IndexSubgraph {
            nodes: vec![v],
            edges: Vec::new(),
            score: table.node[v],
        });
    }

    let mut order: Vec<NodeIx> = (0..n).filter(|&v| table.node[v] > 0.0).collect();
    order.sort_by(|&a, &b| table.node[b].total_cmp(&table.node[a]).then(a.cmp(&b)));
    order.truncate(roots.max(1));

    let mut best: Option<IndexSubgraph> = None;
    for &root in &order {
        for count_node in [true, false] {
            let parent = grow_tree(g, table, root, count_node);
            let (nodes, edges) = prune_tree(g, table, root, &parent);
            let cand = polish(g, table, nodes, edges);
            if best.as_ref().is_none_or(|b| cand.score > b.score) {
                best = Some(cand);
            }
        }
    }
    Ok(best.expect("at least one root"))
}

pub fn retrieve_subgraph_pcst(g: &KnowledgeGraph, pa: &PrizeAssignment) -> Result<ScoredSubgraph> {
    let table = PrizeTable::from_assignment(g, pa);
    let sub = pcst_subgraph(g, &table, PCST_ROOTS)?;
    Ok(ScoredSubgraph::from_index(g, &sub))
}
