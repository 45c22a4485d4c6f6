//! Knowledge-augmented prompt assembly and the text-generation client.
//!
//! Prompt building is pure. Generation posts
//! `{"prompt", "temperature", "top_p"}` and expects `{"text"}` back, with an
//! optional `"model"` field.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::graph::Triple;
use crate::http::{Endpoint, JsonClient, RetryPolicy};
use crate::retrieval::{RetrievedKnowledge, Variant};

pub const GEN_URL_VAR: &str = "KGR_GEN_URL";
pub const GEN_TOKEN_VAR: &str = "KGR_GEN_TOKEN";
pub const DEFAULT_IN_FLIGHT: usize = 4;
pub const DEFAULT_TEMPLATE: &str = include_str!("../templates/kag_prompt.txt");

const QUESTION_SLOT: &str = "question";
const KNOWLEDGE_SLOT: &str = "retrieved_knowledge";
const SEPARATOR: &str = "---";

fn fact_line(z: &RetrievedKnowledge, t: &Triple) -> String {
    format!(
        "({}, {}, {})",
        z.label(&t.subject),
        z.label(&t.relation),
        z.label(&t.object)
    )
}

/// One fact per line, no trailing newline. Path hops are drawn as arrows
/// labelled with the relation, pointing along the edge direction.
pub fn render_knowledge(z: &RetrievedKnowledge) -> String {
    let lines: Vec<String> = match z.variant {
        Variant::Triplets => z.triplets.iter().map(|(t, _)| fact_line(z, t)).collect(),
        Variant::Paths => z
            .paths
            .iter()
            .map(|p| {
                let mut line = z.label(&p.nodes[0]).to_string();
                for (i, t) in p.edges.iter().enumerate() {
                    let next = &p.nodes[i + 1];
                    let rel = z.label(&t.relation);
                    if t.object == *next && t.subject == p.nodes[i] {
                        line.push_str(&format!(" —{rel}→ "));
                    } else {
                        line.push_str(&format!(" ←{rel}— "));
                    }
                    line.push_str(z.label(next));
                }
                line
            })
            .collect(),
        Variant::Subgraph => z
            .subgraph
            .iter()
            .flat_map(|s| s.subgraph.triples())
            .map(|t| fact_line(z, &t))
            .collect(),
    };
    lines.join("\n")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Piece {
    Text(String),
    Question,
    Knowledge,
}

/// System text plus a body with `{question}` and `{retrieved_knowledge}`
/// slots. Literal braces in the body are written `{{` and `}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system_text: String,
    pub body_pattern: String,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn new(system_text: impl Into<String>, body_pattern: impl Into<String>) -> Result<Self> {
        let body_pattern = body_pattern.into();
        let pieces = parse_pattern(&body_pattern)?;
        for (piece, name) in [
            (Piece::Question, QUESTION_SLOT),
            (Piece::Knowledge, KNOWLEDGE_SLOT),
        ] {
            let n = pieces.iter().filter(|p| **p == piece).count();
            if n != 1 {
                return Err(KgError::Template(format!(
                    "slot {{{name}}} appears {n} times, expected once"
                )));
            }
        }
        Ok(PromptTemplate {
            system_text: system_text.into(),
            body_pattern,
            pieces,
        })
    }

    /// Parses the file form: system text, a line holding only `---`, body.
    pub fn parse(text: &str) -> Result<Self> {
        let mut system = Vec::new();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if line.trim_end() == SEPARATOR {
                let body: Vec<&str> = lines.collect();
                return PromptTemplate::new(system.join("\n").trim_end(), body.join("\n"));
            }
            system.push(line);
        }
        Err(KgError::Template(format!(
            "missing `{SEPARATOR}` line between system text and body"
        )))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        PromptTemplate::parse(&std::fs::read_to_string(path)?)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::parse(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }
}

fn parse_pattern(pattern: &str) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut rest = pattern;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("{{") {
            text.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            text.push('}');
            rest = &rest[2..];
        } else if c == '{' {
            let end = rest
                .find('}')
                .ok_or_else(|| KgError::Template("unclosed `{` in body".into()))?;
            let piece = match &rest[1..end] {
                QUESTION_SLOT => Piece::Question,
                KNOWLEDGE_SLOT => Piece::Knowledge,
                other => return Err(KgError::Template(format!("unknown slot {{{other}}}"))),
            };
            pieces.push(Piece::Text(std::mem::take(&mut text)));
            pieces.push(piece);
            rest = &rest[end + 1..];
        } else if c == '}' {
            return Err(KgError::Template(
                "stray `}` in body; write `}}` for a literal brace".into(),
            ));
        } else {
            text.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    pieces.push(Piece::Text(text));
    pieces.retain(|p| !matches!(p, Piece::Text(t) if t.is_empty()));
    Ok(pieces)
}

/// Substitutes the question and the rendered knowledge verbatim, in one pass.
pub fn build_prompt(question: &str, z: &RetrievedKnowledge, tmpl: &PromptTemplate) -> String {
    let knowledge = render_knowledge(z);
    let mut out = String::new();
    if !tmpl.system_text.is_empty() {
        out.push_str(&tmpl.system_text);
        out.push_str("\n\n");
    }
    for piece in &tmpl.pieces {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Question => out.push_str(question),
            Piece::Knowledge => out.push_str(&knowledge),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            temperature: 0.7,
            top_p: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedAnswer {
    pub text: String,
    pub model_id: String,
    pub latency: Duration,
    /// Attempts beyond the first.
    pub retry_count: u32,
}

#[derive(Deserialize)]
struct GenerationReply {
    text: Option<String>,
    model: Option<String>,
}

/// Reusable generation client.
pub struct Generator {
    client: JsonClient,
}

impl Generator {
    pub fn new(endpoint: Endpoint, retry: RetryPolicy) -> Result<Self> {
        let client = JsonClient::new(endpoint, retry).map_err(|f| KgError::Generation {
            attempts: f.attempts,
            message: f.message,
        })?;
        Ok(Generator { client })
    }

    pub fn from_env(retry: RetryPolicy) -> Result<Self> {
        let endpoint = Endpoint::from_env(GEN_URL_VAR, GEN_TOKEN_VAR)
            .ok_or_else(|| KgError::invalid(format!("{GEN_URL_VAR} is not set")))?;
        Generator::new(endpoint, retry)
    }

    pub fn generate(&self, req: &GenerationRequest) -> Result<GeneratedAnswer> {
        let reply =
            self.client
                .post::<_, GenerationReply>(req)
                .map_err(|f| KgError::Generation {
                    attempts: f.attempts,
                    message: f.message,
                })?;
        let text = reply.value.text.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(KgError::EmptyAnswer);
        }
        Ok(GeneratedAnswer {
            text,
            model_id: reply.value.model.unwrap_or_else(|| "unknown".into()),
            latency: reply.latency,
            retry_count: reply.attempts - 1,
        })
    }

    /// Runs requests with at most `in_flight` outstanding at once. Results
    /// keep the input order.
    pub fn generate_batch(
        &self,
        reqs: &[GenerationRequest],
        in_flight: usize,
    ) -> Vec<Result<GeneratedAnswer>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<GeneratedAnswer>>>> =
            reqs.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..in_flight.max(1).min(reqs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= reqs.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(self.generate(&reqs[i]));
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every request ran"))
            .collect()
    }
}

pub fn generate_answer(
    endpoint: &Endpoint,
    retry: &RetryPolicy,
    req: &GenerationRequest,
) -> Result<GeneratedAnswer> {
    Generator::new(endpoint.clone(), retry.clone())?.generate(req)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KnowledgeGraph;
    use crate::relevance::assign_prizes;
    use crate::retrieval::{retrieve, RetrievalOptions};

    fn tesla(variant: Variant) -> RetrievedKnowledge {
        let g = KnowledgeGraph::from_triples([("Tesla", "founded_by", "Elon_Musk")]).unwrap();
        let pa = assign_prizes(
            &["Tesla".into(), "Elon_Musk".into()],
            &[Triple::new("Tesla", "founded_by", "Elon_Musk")],
            3,
            1.0,
        )
        .unwrap();
        retrieve(
            &g,
            &pa,
            &RetrievalOptions {
                variant,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn one_triple_line() {
        assert_eq!(
            render_knowledge(&tesla(Variant::Triplets)),
            "(Tesla, founded_by, Elon_Musk)"
        );
        assert_eq!(
            render_knowledge(&tesla(Variant::Subgraph)),
            "(Tesla, founded_by, Elon_Musk)"
        );
    }

    #[test]
    fn path_arrows() {
        let z = tesla(Variant::Paths);
        let text = render_knowledge(&z);
        assert!(text
            .lines()
            .any(|l| l == "Tesla —founded_by→ Elon_Musk" || l == "Elon_Musk ←founded_by— Tesla"));
    }

    #[test]
    fn template_slots_checked() {
        assert!(PromptTemplate::new("", "{question}").is_err());
        assert!(PromptTemplate::new("", "{question} {question} {retrieved_knowledge}").is_err());
        assert!(PromptTemplate::new("", "{question} {retrieved_knowledge} {other}").is_err());
        assert!(PromptTemplate::new("", "{question} {retrieved_knowledge} }").is_err());
        assert!(PromptTemplate::new("", "{{x}} {question} {retrieved_knowledge}").is_ok());
        assert!(PromptTemplate::parse("no separator {question} {retrieved_knowledge}").is_err());
    }

    #[test]
    fn substitution_is_verbatim() {
        let t = PromptTemplate::new("sys", "Q={question}|{{lit}}|K={retrieved_knowledge}").unwrap();
        let z = tesla(Variant::Triplets);
        let p = build_prompt("what is {question}?", &z, &t);
        assert_eq!(
            p,
            "sys\n\nQ=what is {question}?|{lit}|K=(Tesla, founded_by, Elon_Musk)"
        );
        assert_eq!(
            build_prompt("", &z, &t),
            "sys\n\nQ=|{lit}|K=(Tesla, founded_by, Elon_Musk)"
        );
    }

    #[test]
    fn bundled_template_shape() {
        let t = PromptTemplate::default();
        assert!(!t.system_text.is_empty());
        let p = build_prompt("Who founded Tesla?", &tesla(Variant::Triplets), &t);
        let q = p.find("Question: Who founded Tesla?").unwrap();
        let f = p.find("(Tesla, founded_by, Elon_Musk)").unwrap();
        let a = p.rfind("Answer:").unwrap();
        assert!(q < f && f < a);
    }
}
