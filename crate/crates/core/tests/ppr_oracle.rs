mod common;

use common::{random_graph, rng};
use kgr_core::{personalized_pagerank, prune_by_ppr, KnowledgeGraph, PprConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Direct solve of the fixed point, dangling mass returned to the seeds.
fn dense_solve(g: &KnowledgeGraph, seeds: &[String], alpha: f64) -> Vec<f64> {
    let n = g.entity_count();
    let mut s = DVector::zeros(n);
    for id in seeds {
        s[g.node_index(id).unwrap()] = 1.0 / seeds.len() as f64;
    }
    let mut out_deg = vec![0.0; n];
    for e in g.edges() {
        out_deg[e.subject] += 1.0;
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for e in g.edges() {
        m[(e.object, e.subject)] -= alpha / out_deg[e.subject];
    }
    for u in 0..n {
        if out_deg[u] == 0.0 {
            for v in 0..n {
                m[(v, u)] -= alpha * s[v];
            }
        }
    }
    let rhs = s * (1.0 - alpha);
    m.lu().solve(&rhs).unwrap().iter().copied().collect()
}

fn seeds_for(g: &KnowledgeGraph, r: &mut impl Rng) -> Vec<String> {
    let ids: Vec<String> = g.entities().iter().map(|e| e.id.clone()).collect();
    let mut seeds: Vec<String> = (0..r.gen_range(1..=3))
        .map(|_| ids[r.gen_range(0..ids.len())].clone())
        .collect();
    seeds.sort();
    seeds.dedup();
    seeds
}

#[test]
fn matches_dense_solve() {
    let mut r = rng(31);
    let cfg = PprConfig {
        tol: 1e-12,
        max_iter: 10_000,
        ..PprConfig::default()
    };
    for _ in 0..25 {
        let n = r.gen_range(2..=12);
        let m = r.gen_range(1..30);
        let g = random_graph(&mut r, n, m, 3);
        let seeds = seeds_for(&g, &mut r);
        let got = personalized_pagerank(&g, &seeds, &cfg).unwrap();
        let expect = dense_solve(&g, &seeds, cfg.alpha);
        let l1: f64 = g
            .entities()
            .iter()
            .zip(&expect)
            .map(|(e, x)| (got.get(&e.id).unwrap() - x).abs())
            .sum();
        assert!(l1 < 1e-6, "L1 {l1}");
    }
}

#[test]
fn default_parameters_converge_with_unit_mass() {
    let mut r = rng(32);
    for _ in 0..50 {
        let g = random_graph(&mut r, 30, 40, 4);
        let seeds = seeds_for(&g, &mut r);
        let p = personalized_pagerank(&g, &seeds, &PprConfig::default()).unwrap();
        assert!(p.converged && p.iterations_used <= 100);
        assert!((p.total() - 1.0).abs() < 1e-6);
        // the restart term alone puts (1-α)/|S| on each seed
        for s in &seeds {
            assert!(p.get(s).unwrap() >= (1.0 - 0.85) / seeds.len() as f64 - 1e-9);
        }
        assert_eq!(
            p,
            personalized_pagerank(&g, &seeds, &PprConfig::default()).unwrap()
        );
    }
}

#[test]
fn pruning_is_idempotent_and_monotone() {
    let mut r = rng(33);
    for _ in 0..20 {
        let g = random_graph(&mut r, 25, 40, 3);
        let seeds = seeds_for(&g, &mut r);
        let p = personalized_pagerank(&g, &seeds, &PprConfig::default()).unwrap();
        let once = prune_by_ppr(&g, &p, 1e-3).unwrap();
        let p2 = kgr_core::PprScores {
            scores: p
                .scores
                .iter()
                .filter(|(k, _)| once.node_index(k).is_some())
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            ..p.clone()
        };
        assert_eq!(prune_by_ppr(&once, &p2, 1e-3).unwrap(), once);
        let strict = prune_by_ppr(&g, &p, 1e-2).unwrap();
        assert!(strict.entity_count() <= once.entity_count());
        for s in &seeds {
            assert!(
                once.node_index(s).is_some(),
                "seeds survive a low threshold"
            );
        }
    }
}
