#![allow(dead_code)]

use kgr_core::{KnowledgeGraph, Triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random multigraph on `n` entities named `e00…` with up to `m` triples over
/// `r` relations. Every entity is present even if isolated.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize, r: usize) -> KnowledgeGraph {
    let mut b = KnowledgeGraph::builder();
    for i in 0..n {
        b.add_entity(format!("e{i:02}"), format!("entity {i}"));
    }
    for _ in 0..m {
        let s = rng.gen_range(0..n);
        let o = rng.gen_range(0..n);
        let rel = rng.gen_range(0..r);
        b.add_triple(format!("e{s:02}"), format!("r{rel}"), format!("e{o:02}"));
    }
    b.build().unwrap()
}

/// Random graph without self-loops, built only from triples.
pub fn random_triples(rng: &mut ChaCha8Rng, n: usize, m: usize, r: usize) -> Vec<Triple> {
    (0..m)
        .map(|_| {
            let s = rng.gen_range(0..n);
            let mut o = rng.gen_range(0..n);
            if o == s {
                o = (o + 1) % n;
            }
            Triple::new(
                format!("e{s:02}"),
                format!("r{}", rng.gen_range(0..r)),
                format!("e{o:02}"),
            )
        })
        .collect()
}

pub fn graph_of(triples: &[Triple]) -> KnowledgeGraph {
    KnowledgeGraph::from_triples(
        triples
            .iter()
            .map(|t| (t.subject.clone(), t.relation.clone(), t.object.clone())),
    )
    .unwrap()
}
