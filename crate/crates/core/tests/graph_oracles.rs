mod common;

use std::collections::BTreeSet;

use common::{random_graph, rng};
use kgr_core::KnowledgeGraph;

fn undirected_neighbors(g: &KnowledgeGraph, v: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for e in g.edges() {
        if e.subject != e.object {
            if e.subject == v {
                out.insert(e.object);
            }
            if e.object == v {
                out.insert(e.subject);
            }
        }
    }
    out
}

#[test]
fn one_hop_matches_linear_scan() {
    let mut r = rng(11);
    for _ in 0..30 {
        let g = random_graph(&mut r, 15, 40, 3);
        for e in g.entities() {
            let expect: BTreeSet<String> = g
                .triples()
                .flat_map(|t| {
                    let mut v = Vec::new();
                    if t.subject == e.id {
                        v.push(t.object.clone());
                    }
                    if t.object == e.id {
                        v.push(t.subject.clone());
                    }
                    v
                })
                .collect();
            assert_eq!(g.neighbors_1hop(&e.id).unwrap(), expect);
        }
    }
}

#[test]
fn clustering_matches_triangle_count() {
    let mut r = rng(12);
    for _ in 0..30 {
        let g = random_graph(&mut r, 10, 30, 2);
        for v in 0..g.entity_count() {
            let nb: Vec<usize> = undirected_neighbors(&g, v).into_iter().collect();
            let k = nb.len();
            let expect = if k < 2 {
                0.0
            } else {
                let mut links = 0;
                for i in 0..k {
                    for j in i + 1..k {
                        if undirected_neighbors(&g, nb[i]).contains(&nb[j]) {
                            links += 1;
                        }
                    }
                }
                2.0 * links as f64 / (k * (k - 1)) as f64
            };
            let got = g.local_clustering(&g.entity(v).id).unwrap();
            assert!((got - expect).abs() < 1e-12, "node {v}: {got} vs {expect}");
            assert!((0.0..=1.0).contains(&got));
        }
    }
}

#[test]
fn stats_recount() {
    let mut r = rng(13);
    for _ in 0..20 {
        let g = random_graph(&mut r, 12, 35, 3);
        let s = g.stats();
        let n = g.entity_count();
        assert_eq!(s.node_count, n);
        assert_eq!(s.edge_count, g.triples().count());
        let undirected: usize = (0..n)
            .map(|v| undirected_neighbors(&g, v).len())
            .sum::<usize>()
            / 2;
        assert!((s.avg_degree - 2.0 * undirected as f64 / n as f64).abs() < 1e-12);
        let pairs: BTreeSet<(usize, usize)> = g
            .edges()
            .iter()
            .filter(|e| e.subject != e.object)
            .map(|e| (e.subject, e.object))
            .collect();
        assert!((s.density - pairs.len() as f64 / (n * (n - 1)) as f64).abs() < 1e-12);
    }
}

#[test]
fn relation_subgraphs_partition_triples() {
    let mut r = rng(14);
    let g = random_graph(&mut r, 12, 40, 4);
    let mut total = 0;
    for rel in g.relations() {
        let sub = g.relation_subgraph(&rel.id).unwrap();
        assert_eq!(sub.entity_count(), g.entity_count());
        assert!(sub
            .triples()
            .all(|t| t.relation == rel.id && g.contains_triple(&t)));
        total += sub.triple_count();
    }
    assert_eq!(total, g.triple_count());
}
