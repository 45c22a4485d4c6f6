//! Triple file formats and K-hop neighborhood extraction.
//!
//! Two line formats are read:
//!
//! * `tsv`: `subject<TAB>relation<TAB>object`, one triple per LF-terminated
//!   line, no quoting. Labels equal ids.
//! * `nt`: an N-Triples subset where all three terms are IRIs in angle
//!   brackets and the statement ends with ` .`. Literals and blank nodes are
//!   rejected. An entity's label is the local name of its IRI.
//!
//! Blank lines are skipped in both formats, as are `#` comments in `nt`.
//! Canonical output is TSV with triples in sorted order.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KgError, Result};
use crate::graph::{GraphBuilder, KnowledgeGraph};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    #[default]
    Tsv,
    Nt,
}

impl FromStr for TripleFormat {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TripleFormat::Tsv),
            "nt" => Ok(TripleFormat::Nt),
            other => Err(KgError::invalid(format!("unknown triple format `{other}`"))),
        }
    }
}

pub fn parse_triples<R: Read>(input: R, format: TripleFormat) -> Result<KnowledgeGraph> {
    let mut builder = GraphBuilder::default();
    let reader = BufReader::new(input);
    for (i, line) in reader.split(b'\n').enumerate() {
        let lineno = i + 1;
        let bytes = line?;
        let line = String::from_utf8(bytes).map_err(|_| KgError::Parse {
            line: lineno,
            message: "invalid UTF-8".into(),
        })?;
        match format {
            TripleFormat::Tsv => parse_tsv_line(&mut builder, &line, lineno)?,
            TripleFormat::Nt => parse_nt_line(&mut builder, &line, lineno)?,
        }
    }
    builder.build()
}

pub fn parse_str(input: &str, format: TripleFormat) -> Result<KnowledgeGraph> {
    parse_triples(input.as_bytes(), format)
}

fn parse_tsv_line(b: &mut GraphBuilder, line: &str, lineno: usize) -> Result<()> {
    if line.is_empty() {
        return Ok(());
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(KgError::Parse {
            line: lineno,
            message: format!("expected 3 tab-separated fields, found {}", fields.len()),
        });
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(KgError::Parse {
            line: lineno,
            message: "empty field".into(),
        });
    }
    b.add_triple(fields[0], fields[1], fields[2]);
    Ok(())
}

fn parse_nt_line(b: &mut GraphBuilder, line: &str, lineno: usize) -> Result<()> {
    let err = |message: &str| KgError::Parse {
        line: lineno,
        message: message.to_string(),
    };
    let mut rest = line.trim();
    if rest.is_empty() || rest.starts_with('#') {
        return Ok(());
    }
    let mut terms = Vec::with_capacity(3);
    for _ in 0..3 {
        rest = rest.trim_start();
        if rest.starts_with('"') {
            return Err(err("literals are not supported"));
        }
        if rest.starts_with("_:") {
            return Err(err("blank nodes are not supported"));
        }
        let body = rest
            .strip_prefix('<')
            .ok_or_else(|| err("expected IRI in angle brackets"))?;
        let end = body.find('>').ok_or_else(|| err("unterminated IRI"))?;
        let iri = &body[..end];
        if iri.is_empty() || iri.chars().any(|c| c.is_whitespace() || c == '<') {
            return Err(err("malformed IRI"));
        }
        terms.push(iri);
        rest = &body[end + 1..];
    }
    let tail = rest.trim_start();
    let after_dot = tail
        .strip_prefix('.')
        .ok_or_else(|| err("expected ` .` terminator"))?;
    let after_dot = after_dot.trim();
    if !after_dot.is_empty() && !after_dot.starts_with('#') {
        return Err(err("trailing content after terminator"));
    }
    let (s, p, o) = (terms[0], terms[1], terms[2]);
    b.add_entity(s, local_name(s));
    b.add_entity(o, local_name(o));
    b.add_relation(p, local_name(p));
    b.add_triple(s, p, o);
    Ok(())
}

/// The segment after the last `/` or `#` of an IRI, or the IRI itself.
pub fn local_name(iri: &str) -> &str {
    match iri.rfind(['/', '#']) {
        Some(i) if i + 1 < iri.len() => &iri[i + 1..],
        _ => iri,
    }
}

/// Canonical TSV: one line per triple, sorted, LF-terminated.
pub fn serialize(g: &KnowledgeGraph) -> String {
    serialize_as(g, TripleFormat::Tsv)
}

pub fn serialize_as(g: &KnowledgeGraph, format: TripleFormat) -> String {
    let mut out = String::new();
    for t in g.triples() {
        match format {
            TripleFormat::Tsv => {
                out.push_str(&t.subject);
                out.push('\t');
                out.push_str(&t.relation);
                out.push('\t');
                out.push_str(&t.object);
            }
            TripleFormat::Nt => {
                out.push_str(&format!(
                    "<{}> <{}> <{}> .",
                    t.subject, t.relation, t.object
                ));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphRequest {
    pub seeds: Vec<String>,
    pub hops: usize,
}

pub const DEFAULT_HOPS: usize = 2;

impl SubgraphRequest {
    pub fn new(seeds: Vec<String>) -> Self {
        SubgraphRequest {
            seeds,
            hops: DEFAULT_HOPS,
        }
    }

    pub fn with_hops(mut self, hops: usize) -> Self {
        self.hops = hops;
        self
    }
}

/// Triples whose endpoints both lie within undirected distance `hops` of a seed.
pub fn khop_subgraph(g: &KnowledgeGraph, req: &SubgraphRequest) -> Result<KnowledgeGraph> {
    if req.seeds.is_empty() {
        return Err(KgError::invalid("at least one seed is required"));
    }
    if req.hops == 0 {
        return Err(KgError::invalid("hops must be at least 1"));
    }
    let adj = g.simple_adjacency();
    let mut dist = vec![usize::MAX; g.entity_count()];
    let mut queue = VecDeque::new();
    for s in &req.seeds {
        let v = g.require_node(s)?;
        if dist[v] != 0 {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] == req.hops {
            continue;
        }
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let keep: Vec<bool> = dist.iter().map(|&d| d <= req.hops).collect();
    Ok(g.induced(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Triple;

    #[test]
    fn tsv_single_triple() {
        let g = parse_str("A\tr\tB\n", TripleFormat::Tsv).unwrap();
        assert_eq!(g.triple_count(), 1);
        assert_eq!(g.entity(0).label, "A");
    }

    #[test]
    fn tsv_duplicate_lines_collapse() {
        let g = parse_str("A\tr\tB\nA\tr\tB\n", TripleFormat::Tsv).unwrap();
        assert_eq!(g.triple_count(), 1);
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let g = parse_str("", TripleFormat::Tsv).unwrap();
        assert!(g.is_empty());
        assert_eq!(serialize(&g), "");
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse_str("A\tr\tB\nbroken line\n", TripleFormat::Tsv) {
            Err(KgError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_str("A\t\tB\n", TripleFormat::Tsv),
            Err(KgError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn nt_subset() {
        let src = "# header\n<http://x.org/Tesla> <http://x.org/ont/founded_by> <http://x.org/Elon_Musk> .\n\n";
        let g = parse_str(src, TripleFormat::Nt).unwrap();
        assert_eq!(g.triple_count(), 1);
        let t = g.triples().next().unwrap();
        assert_eq!(t.subject, "http://x.org/Tesla");
        assert_eq!(
            g.entity(g.node_index("http://x.org/Elon_Musk").unwrap())
                .label,
            "Elon_Musk"
        );
        assert_eq!(g.relation(0).label, "founded_by");
    }

    #[test]
    fn nt_rejects_literals_and_garbage() {
        let lit = "<http://x/a> <http://x/p> \"hello\" .\n";
        assert!(matches!(
            parse_str(lit, TripleFormat::Nt),
            Err(KgError::Parse { line: 1, .. })
        ));
        let bnode = "_:b0 <http://x/p> <http://x/b> .\n";
        assert!(parse_str(bnode, TripleFormat::Nt).is_err());
        let no_dot = "<http://x/a> <http://x/p> <http://x/b>\n";
        assert!(parse_str(no_dot, TripleFormat::Nt).is_err());
    }

    #[test]
    fn canonical_bytes_independent_of_input_order() {
        let a = parse_str("B\tr\tC\nA\tr\tB\nA\tq\tC\n", TripleFormat::Tsv).unwrap();
        let b = parse_str("A\tq\tC\nB\tr\tC\nA\tr\tB\n", TripleFormat::Tsv).unwrap();
        assert_eq!(serialize(&a), serialize(&b));
        assert_eq!(serialize(&a), "A\tq\tC\nA\tr\tB\nB\tr\tC\n");
    }

    fn chain() -> KnowledgeGraph {
        parse_str("A\tr\tB\nB\tr\tC\nC\tr\tD\n", TripleFormat::Tsv).unwrap()
    }

    #[test]
    fn khop_chain() {
        let sub = khop_subgraph(&chain(), &SubgraphRequest::new(vec!["A".into()])).unwrap();
        let triples: Vec<Triple> = sub.triples().collect();
        assert_eq!(
            triples,
            vec![Triple::new("A", "r", "B"), Triple::new("B", "r", "C")]
        );
    }

    #[test]
    fn khop_follows_inverse_edges() {
        let sub = khop_subgraph(
            &chain(),
            &SubgraphRequest::new(vec!["D".into()]).with_hops(1),
        )
        .unwrap();
        assert_eq!(
            sub.triples().collect::<Vec<_>>(),
            vec![Triple::new("C", "r", "D")]
        );
    }

    #[test]
    fn khop_isolated_seed() {
        let mut b = KnowledgeGraph::builder();
        b.add_triple("A", "r", "B");
        b.add_entity("Lonely", "Lonely");
        let g = b.build().unwrap();
        let sub = khop_subgraph(&g, &SubgraphRequest::new(vec!["Lonely".into()])).unwrap();
        assert_eq!(sub.entity_count(), 1);
        assert_eq!(sub.triple_count(), 0);
    }

    #[test]
    fn khop_errors() {
        let g = chain();
        assert!(matches!(
            khop_subgraph(&g, &SubgraphRequest::new(vec!["Z".into()])),
            Err(KgError::NotFound { .. })
        ));
        assert!(khop_subgraph(&g, &SubgraphRequest::new(vec![])).is_err());
        assert!(khop_subgraph(&g, &SubgraphRequest::new(vec!["A".into()]).with_hops(0)).is_err());
    }
}
