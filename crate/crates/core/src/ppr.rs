//! Personalized PageRank by power iteration, and threshold pruning.
//!
//! Iterates `p ← α·Aᵀp + α·m(p)·s + (1−α)·s` where `A` is the row-stochastic
//! transition matrix over the out-edge multiset (parallel edges add weight),
//! `s` is the restart distribution spread evenly over the seeds and `m(p)` is
//! the mass sitting on dangling nodes, which restarts at `s` so the scores keep
//! summing to one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::graph::{KnowledgeGraph, NodeIx};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PprConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub prune_threshold: f64,
    /// Walk edges in both directions instead of subject → object only.
    pub undirected: bool,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            alpha: 0.85,
            tol: 1e-6,
            max_iter: 100,
            prune_threshold: 1e-5,
            undirected: false,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(KgError::invalid(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(KgError::invalid("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(KgError::invalid("max_iter must be at least 1"));
        }
        if self.prune_threshold.is_nan() || self.prune_threshold < 0.0 {
            return Err(KgError::invalid("prune_threshold must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PprScores {
    pub scores: BTreeMap<String, f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl PprScores {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn total(&self) -> f64 {
        self.scores.values().sum()
    }
}

/// Sparse transition rows: `rows[u]` lists `(v, weight)` with weights summing to 1.
fn transitions(g: &KnowledgeGraph, undirected: bool) -> Vec<Vec<(NodeIx, f64)>> {
    let n = g.entity_count();
    let mut targets: Vec<Vec<NodeIx>> = vec![Vec::new(); n];
    for e in g.edges() {
        targets[e.subject].push(e.object);
        if undirected && e.subject != e.object {
            targets[e.object].push(e.subject);
        }
    }
    targets
        .into_iter()
        .map(|mut ts| {
            if ts.is_empty() {
                return Vec::new();
            }
            let w = 1.0 / ts.len() as f64;
            ts.sort_unstable();
            let mut row: Vec<(NodeIx, f64)> = Vec::new();
            for t in ts {
                match row.last_mut() {
                    Some((last, acc)) if *last == t => *acc += w,
                    _ => row.push((t, w)),
                }
            }
            row
        })
        .collect()
}

pub fn personalized_pagerank(
    g: &KnowledgeGraph,
    seeds: &[String],
    cfg: &PprConfig,
) -> Result<PprScores> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(KgError::invalid("seed set is empty"));
    }
    if g.is_empty() {
        return Err(KgError::invalid("graph is empty"));
    }
    let seed_ix: BTreeSet<NodeIx> = seeds
        .iter()
        .map(|s| g.require_node(s))
        .collect::<Result<_>>()?;
    let n = g.entity_count();
    let mut restart = vec![0.0; n];
    let share = 1.0 / seed_ix.len() as f64;
    for &v in &seed_ix {
        restart[v] = share;
    }

    let rows = transitions(g, cfg.undirected);
    let alpha = cfg.alpha;
    let mut p = restart.clone();
    let mut next = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let dangling: f64 = rows
            .iter()
            .zip(&p)
            .filter(|(row, _)| row.is_empty())
            .map(|(_, &x)| x)
            .sum();
        let restart_weight = 1.0 - alpha + alpha * dangling;
        for (slot, &s) in next.iter_mut().zip(&restart) {
            *slot = restart_weight * s;
        }
        for (u, row) in rows.iter().enumerate() {
            let mass = alpha * p[u];
            if mass == 0.0 {
                continue;
            }
            for &(v, w) in row {
                next[v] += mass * w;
            }
        }
        let diff: f64 = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if diff < cfg.tol {
            converged = true;
            break;
        }
    }

    let scores = g
        .entities()
        .iter()
        .zip(p)
        .map(|(e, score)| (e.id.clone(), score))
        .collect();
    Ok(PprScores {
        scores,
        iterations_used: iterations,
        converged,
    })
}

/// Drops every entity scoring below `threshold`, with its incident triples.
pub fn prune_by_ppr(
    g: &KnowledgeGraph,
    scores: &PprScores,
    threshold: f64,
) -> Result<KnowledgeGraph> {
    let keep = g
        .entities()
        .iter()
        .map(|e| {
            scores
                .get(&e.id)
                .map(|p| p >= threshold)
                .ok_or_else(|| KgError::invalid(format!("no score for entity `{}`", e.id)))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(g.induced(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_str, TripleFormat};

    fn tsv(s: &str) -> KnowledgeGraph {
        parse_str(s, TripleFormat::Tsv).unwrap()
    }

    fn seeds(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_cycle_exact() {
        let g = tsv("A\tr\tB\nB\tr\tA\n");
        let cfg = PprConfig {
            alpha: 0.5,
            ..PprConfig::default()
        };
        let p = personalized_pagerank(&g, &seeds(&["A"]), &cfg).unwrap();
        assert!(p.converged);
        assert!((p.get("A").unwrap() - 2.0 / 3.0).abs() < 1e-6);
        assert!((p.get("B").unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn small_alpha_restart_dominates() {
        let g = tsv("A\tr\tB\nB\tr\tC\nC\tr\tA\n");
        let cfg = PprConfig {
            alpha: 0.01,
            ..PprConfig::default()
        };
        let p = personalized_pagerank(&g, &seeds(&["A"]), &cfg).unwrap();
        assert!(p.get("A").unwrap() >= 0.99);
    }

    #[test]
    fn dangling_mass_is_conserved() {
        let g = tsv("A\tr\tB\nA\tr\tC\nC\tr\tD\n");
        let p = personalized_pagerank(&g, &seeds(&["A"]), &PprConfig::default()).unwrap();
        assert!(p.converged);
        assert!((p.total() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parallel_edges_add_weight() {
        let g = tsv("A\tr\tB\nA\ts\tB\nA\tr\tC\n");
        let cfg = PprConfig {
            alpha: 0.5,
            ..PprConfig::default()
        };
        let p = personalized_pagerank(&g, &seeds(&["A"]), &cfg).unwrap();
        assert!(p.get("B").unwrap() > p.get("C").unwrap());
    }

    #[test]
    fn invalid_inputs() {
        let g = tsv("A\tr\tB\n");
        let cfg = PprConfig::default();
        assert!(personalized_pagerank(&g, &[], &cfg).is_err());
        assert!(personalized_pagerank(&KnowledgeGraph::default(), &seeds(&["A"]), &cfg).is_err());
        assert!(matches!(
            personalized_pagerank(&g, &seeds(&["Z"]), &cfg),
            Err(KgError::NotFound { .. })
        ));
        let bad = PprConfig { alpha: 1.0, ..cfg };
        assert!(personalized_pagerank(&g, &seeds(&["A"]), &bad).is_err());
    }

    #[test]
    fn prune_extremes() {
        let g = tsv("A\tr\tB\nB\tr\tC\nC\tr\tA\n");
        let p = personalized_pagerank(&g, &seeds(&["A"]), &PprConfig::default()).unwrap();
        assert_eq!(prune_by_ppr(&g, &p, 0.0).unwrap(), g);
        let max = p.scores.values().cloned().fold(0.0, f64::max);
        let empty = prune_by_ppr(&g, &p, max + 1.0).unwrap();
        assert_eq!(empty.entity_count(), 0);
        assert_eq!(empty.triple_count(), 0);
    }

    #[test]
    fn prune_requires_full_coverage() {
        let g = tsv("A\tr\tB\n");
        let partial = PprScores {
            scores: [("A".to_string(), 1.0)].into_iter().collect(),
            iterations_used: 1,
            converged: true,
        };
        assert!(prune_by_ppr(&g, &partial, 0.5).is_err());
    }
}
