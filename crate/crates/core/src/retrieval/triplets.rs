use super::{PrizeTable, RetrievedKnowledge, Variant};
use crate::error::{KgError, Result};
use crate::graph::KnowledgeGraph;
use crate::relevance::PrizeAssignment;

/// Edge positions of the `n` triples with the largest
/// `prize(subject) + prize(object) + prize(edge)`, ties in canonical order.
pub fn top_triplets(g: &KnowledgeGraph, table: &PrizeTable, n: usize) -> Result<Vec<(usize, f64)>> {
    if n == 0 {
        return Err(KgError::invalid("triplet count must be at least 1"));
    }
    table.check(g)?;
    let mut scored: Vec<(usize, f64)> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(pos, e)| {
            (
                pos,
                table.node[e.subject] + table.node[e.object] + table.edge[pos],
            )
        })
        .collect();
    // stable: equal totals keep canonical order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(n);
    Ok(scored)
}

pub fn retrieve_triplets(
    g: &KnowledgeGraph,
    pa: &PrizeAssignment,
    n: usize,
) -> Result<RetrievedKnowledge> {
    let table = PrizeTable::from_assignment(g, pa);
    let top = top_triplets(g, &table, n)?;
    let mut rk = RetrievedKnowledge::empty(Variant::Triplets, pa.clone());
    rk.triplets = top
        .into_iter()
        .map(|(pos, score)| (g.triple(&g.edges()[pos]), score))
        .collect();
    rk.attach_labels(g);
    Ok(rk)
}
