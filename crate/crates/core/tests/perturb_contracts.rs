mod common;

use std::collections::BTreeMap;

use common::{graph_of, random_triples, rng};
use kgr_core::perturb::{affected_count, EditOp};
use kgr_core::{perturb, replay, KnowledgeGraph, Method, PerturbationSpec};

fn multiset<K: Ord>(items: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_default() += 1;
    }
    m
}

fn fixture(seed: u64) -> KnowledgeGraph {
    graph_of(&random_triples(&mut rng(seed), 30, 60, 4))
}

#[test]
fn counts_entities_and_determinism() {
    for seed in 0..10 {
        let g = fixture(100 + seed);
        let t = g.triple_count();
        for method in Method::ALL {
            for level in [0.0, 0.1, 0.5, 1.0] {
                let spec = PerturbationSpec::new(method, level, seed);
                let p = perturb(&g, &spec).unwrap();
                assert_eq!(p.graph.entities(), g.entities());
                let expect = match method {
                    Method::EdgeDelete => t - affected_count(level, t),
                    _ => t,
                };
                assert_eq!(p.graph.triple_count(), expect, "{method} at {level}");
                assert_eq!(p, perturb(&g, &spec).unwrap());
                assert_eq!(replay(&g, &p.edit_log).unwrap(), p.graph);
            }
        }
    }
}

#[test]
fn method_specific_invariants() {
    for seed in 0..10 {
        let g = fixture(200 + seed);
        let spec = |m| PerturbationSpec::new(m, 0.6, seed);

        let rs = perturb(&g, &spec(Method::RelationSwap)).unwrap().graph;
        assert_eq!(
            multiset(rs.triples().map(|t| t.relation)),
            multiset(g.triples().map(|t| t.relation))
        );
        assert_eq!(
            multiset(rs.triples().map(|t| (t.subject, t.object))),
            multiset(g.triples().map(|t| (t.subject, t.object)))
        );

        let rr = perturb(&g, &spec(Method::RelationReplace)).unwrap();
        assert_eq!(
            multiset(rr.graph.triples().map(|t| (t.subject, t.object))),
            multiset(g.triples().map(|t| (t.subject, t.object)))
        );
        for e in rr.edit_log.iter().filter(|e| e.op == EditOp::Replace) {
            assert_ne!(e.after.as_ref().unwrap().relation, e.before.relation);
        }

        let er = perturb(&g, &spec(Method::EdgeRewire)).unwrap();
        assert_eq!(
            multiset(er.graph.triples().map(|t| (t.subject, t.relation))),
            multiset(g.triples().map(|t| (t.subject, t.relation)))
        );
        for e in er.edit_log.iter().filter(|e| e.op == EditOp::Rewire) {
            let after = e.after.as_ref().unwrap();
            assert_ne!(after.object, e.before.subject);
            assert_ne!(after.object, e.before.object);
        }

        let ed = perturb(&g, &spec(Method::EdgeDelete)).unwrap().graph;
        assert!(ed.triples().all(|t| g.contains_triple(&t)));
    }
}

#[test]
fn seeds_differ() {
    let g = fixture(300);
    let a = perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 0.5, 1)).unwrap();
    let b = perturb(&g, &PerturbationSpec::new(Method::EdgeDelete, 0.5, 2)).unwrap();
    assert_ne!(a.graph, b.graph);
}

#[test]
fn edit_log_round_trips_through_json() {
    let g = fixture(301);
    let p = perturb(&g, &PerturbationSpec::new(Method::RelationSwap, 0.5, 4)).unwrap();
    let parsed: Vec<kgr_core::perturb::Edit> = p
        .edit_log_jsonl()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(parsed, p.edit_log);
    assert_eq!(replay(&g, &parsed).unwrap(), p.graph);
}
