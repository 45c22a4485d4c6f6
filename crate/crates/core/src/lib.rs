//! Knowledge-graph retrieval, perturbation and similarity measurement.
//!
//! The pipeline runs ingest → k-hop extraction → personalized-PageRank
//! pruning → prize assignment → retrieval → prompt assembly. The perturbation
//! and metric modules measure how retrieval degrades when the graph is
//! corrupted.

pub mod error;
pub mod exec;
pub mod graph;
pub mod http;
pub mod ingest;
pub mod metrics;
pub mod perturb;
pub mod ppr;
pub mod prompt;
pub mod relevance;
pub mod retrieval;
#[cfg(feature = "testing")]
pub mod testing;

pub use error::{KgError, Result};
pub use exec::Strategy;
pub use graph::{Edge, Entity, GraphStats, KnowledgeGraph, Relation, Triple};
pub use ingest::{
    khop_subgraph, parse_str, parse_triples, serialize, SubgraphRequest, TripleFormat,
};
pub use metrics::{
    ats, fit_baseline_scorer, sc2d, sd2, BaselineScorer, EdgeScorer, SimilarityReport,
};
pub use perturb::{perturb, replay, Method, PerturbationSpec, PerturbedGraph};
pub use ppr::{personalized_pagerank, prune_by_ppr, PprConfig, PprScores};
pub use prompt::{
    build_prompt, generate_answer, render_knowledge, GeneratedAnswer, GenerationRequest,
    PromptTemplate,
};
pub use relevance::{assign_prizes, prize_for_rank, EmbeddingProvider, PrizeAssignment};
pub use retrieval::{retrieve, RetrievalOptions, RetrievedKnowledge, Variant};
