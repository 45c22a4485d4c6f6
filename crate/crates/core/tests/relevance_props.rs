mod common;

use common::rng;
use kgr_core::relevance::{cosine, embed_texts, rank_elements};
use kgr_core::{assign_prizes, prize_for_rank, EmbeddingProvider};
use rand::seq::SliceRandom;
use rand::Rng;

fn embed(texts: &[&str]) -> Vec<Vec<f64>> {
    let texts: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
    embed_texts(&EmbeddingProvider::default(), &texts).unwrap()
}

#[test]
fn shared_tokens_rank_first() {
    let v = embed(&[
        "who founded tesla",
        "Tesla founded by Elon Musk",
        "river delta sediment",
    ]);
    let elements = vec![("a", v[1].clone()), ("b", v[2].clone())];
    let ranked = rank_elements(&v[0], &elements).unwrap();
    assert_eq!(ranked[0].0, "a");
    assert!(ranked[0].1 > 0.0);
    assert_eq!(ranked[1].1, 0.0);
}

#[test]
fn ranking_matches_sorted_cosines() {
    let mut r = rng(41);
    for _ in 0..20 {
        let q: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let elements: Vec<(usize, Vec<f64>)> = (0..20)
            .map(|i| (i, (0..8).map(|_| r.gen_range(-1.0..1.0)).collect()))
            .collect();
        let ranked = rank_elements(&q, &elements).unwrap();
        let mut expect: Vec<(usize, f64)> = elements
            .iter()
            .map(|(i, v)| {
                let dot: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
                let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (*i, dot / (nq * nv))
            })
            .collect();
        expect.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got: Vec<usize> = ranked.iter().map(|x| x.0).collect();
        let want: Vec<usize> = expect.iter().map(|x| x.0).collect();
        assert_eq!(got, want);
        for ((_, a), (_, b)) in ranked.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // positive scaling of the query does not change the order
        let scaled: Vec<f64> = q.iter().map(|x| x * 3.5).collect();
        let again: Vec<usize> = rank_elements(&scaled, &elements)
            .unwrap()
            .iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(again, want);
    }
}

#[test]
fn prize_multiset() {
    let mut r = rng(42);
    for k in [1u32, 3, 10, 15] {
        for n in [1usize, 5, 15, 40] {
            let mut ids: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
            ids.shuffle(&mut r);
            let pa = assign_prizes(&ids, &[], k, 1.0).unwrap();
            let mut got: Vec<u32> = pa
                .node_prizes
                .values()
                .copied()
                .filter(|&p| p > 0)
                .collect();
            got.sort_unstable_by(|a, b| b.cmp(a));
            let want: Vec<u32> = (1..=k).rev().take(n).collect();
            assert_eq!(got, want, "k={k} n={n}");
            for (rank, id) in ids.iter().enumerate() {
                assert_eq!(pa.node_prize(id), prize_for_rank(rank + 1, k));
            }
        }
    }
}

#[test]
fn cosine_bounds() {
    let v = embed(&["alpha beta", "beta gamma", "delta"]);
    for a in &v {
        for b in &v {
            let c = cosine(a, b);
            assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
        }
    }
}
