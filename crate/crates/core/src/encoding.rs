//! Natural-language renderings of graphs.
//!
//! Six encodings are supported. Nodes are labelled as integers, first names,
//! or letters, depending on the encoding. All wording comes from
//! `assets/encodings.toml`. Edges are always rendered in canonical ascending
//! `(min, max)` order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets;
use crate::graphgen::Graph;
use crate::template::{Template, TemplateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    Adjacency,
    Incident,
    Coauthorship,
    Friendship,
    SocialNetwork,
    Expert,
}

impl EncodingKind {
    /// All six encodings, in report column order.
    pub const ALL: [EncodingKind; 6] = [
        EncodingKind::Adjacency,
        EncodingKind::Incident,
        EncodingKind::Coauthorship,
        EncodingKind::Friendship,
        EncodingKind::SocialNetwork,
        EncodingKind::Expert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::Adjacency => "adjacency",
            EncodingKind::Incident => "incident",
            EncodingKind::Coauthorship => "coauthorship",
            EncodingKind::Friendship => "friendship",
            EncodingKind::SocialNetwork => "social_network",
            EncodingKind::Expert => "expert",
        }
    }

    pub fn label_scheme(self) -> LabelScheme {
        templates()[&self].labels
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncodingKind {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let wanted = match wanted.as_str() {
            "co_authorship" => "coauthorship",
            "social" => "social_network",
            other => other,
        }
        .to_string();
        EncodingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == wanted)
            .ok_or_else(|| EncodingError::Parse(format!("unknown encoding `{s}`")))
    }
}

/// How node indices become labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// Decimal index: `0`, `1`, …
    Integer,
    /// First names from the frozen pool in `assets/names.txt`.
    Name,
    /// `A` … `Z`, then `AA`, `AB`, …
    Letter,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("node index {index} exceeds the name pool of {pool} entries")]
    PoolExhausted { index: usize, pool: usize },
    #[error("template: {0}")]
    Template(#[from] TemplateError),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A graph rendered under one encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphText {
    /// Introduction sentence(s); several sentences are separated by `\n`.
    pub preamble: String,
    /// Label of node `i` at position `i`.
    pub node_labels: Vec<String>,
    /// Edge description block.
    pub body: String,
    pub encoding: EncodingKind,
}

impl GraphText {
    /// The text as shown in standalone examples: preamble lines, then body.
    pub fn box_text(&self) -> String {
        format!("{}\n{}", self.preamble, self.body)
    }

    /// The text as embedded in prompts, where the preamble is a single line.
    pub fn prompt_text(&self) -> String {
        format!("{}\n{}", self.preamble.replace('\n', " "), self.body)
    }
}

pub fn name_pool() -> &'static [&'static str] {
    static POOL: OnceLock<Vec<&'static str>> = OnceLock::new();
    POOL.get_or_init(|| {
        assets::NAMES
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

fn letter_label(mut index: usize) -> String {
    // Bijective base 26: 0 → A, 25 → Z, 26 → AA.
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ASCII letters")
}

pub fn node_label(index: usize, kind: EncodingKind) -> Result<String, EncodingError> {
    match kind.label_scheme() {
        LabelScheme::Integer => Ok(index.to_string()),
        LabelScheme::Letter => Ok(letter_label(index)),
        LabelScheme::Name => {
            let pool = name_pool();
            pool.get(index)
                .map(|name| name.to_string())
                .ok_or(EncodingError::PoolExhausted {
                    index,
                    pool: pool.len(),
                })
        }
    }
}

/// Inverse of [`node_label`].
pub fn label_to_index(label: &str, kind: EncodingKind) -> Option<usize> {
    match kind.label_scheme() {
        LabelScheme::Integer => {
            if label.is_empty() || !label.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            label.parse().ok()
        }
        LabelScheme::Name => name_pool().iter().position(|&name| name == label),
        LabelScheme::Letter => {
            if label.is_empty() || label.len() > 12 || !label.bytes().all(|b| b.is_ascii_uppercase()) {
                return None;
            }
            // Bijective base 26: A = 1 … Z = 26, minus one at the end.
            let value = label
                .bytes()
                .fold(0usize, |acc, b| acc * 26 + (b - b'A') as usize + 1);
            Some(value - 1)
        }
    }
}

/// Serial-comma enumeration: `a`, `a and b`, `a, b, and c`.
pub fn serial_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplates {
    labels: LabelScheme,
    preamble: String,
    body: String,
    edge: Option<String>,
    node_line: Option<String>,
    joiner: String,
    empty: String,
}

struct EncodingTemplates {
    labels: LabelScheme,
    preamble: Template,
    body: Template,
    item: Item,
    joiner: String,
    empty: String,
}

enum Item {
    Edge(Template),
    NodeLine(Template),
}

fn templates() -> &'static BTreeMap<EncodingKind, EncodingTemplates> {
    static TEMPLATES: OnceLock<BTreeMap<EncodingKind, EncodingTemplates>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        let raw: BTreeMap<EncodingKind, RawTemplates> =
            toml::from_str(assets::ENCODINGS).expect("bundled encodings.toml is valid");
        let parse = |s: &str| Template::parse(s).expect("bundled template is valid");
        let out: BTreeMap<_, _> = raw
            .into_iter()
            .map(|(kind, r)| {
                let item = match (r.edge, r.node_line) {
                    (Some(e), None) => Item::Edge(parse(&e)),
                    (None, Some(l)) => Item::NodeLine(parse(&l)),
                    _ => panic!("encoding {kind} needs exactly one of `edge` or `node_line`"),
                };
                let t = EncodingTemplates {
                    labels: r.labels,
                    preamble: parse(&r.preamble),
                    body: parse(&r.body),
                    item,
                    joiner: r.joiner,
                    empty: r.empty,
                };
                (kind, t)
            })
            .collect();
        assert_eq!(out.len(), EncodingKind::ALL.len(), "encodings.toml must define all six encodings");
        out
    })
}

pub fn encode_graph(graph: &Graph, kind: EncodingKind) -> Result<GraphText, EncodingError> {
    let t = &templates()[&kind];
    let labels = (0..graph.node_count())
        .map(|i| node_label(i, kind))
        .collect::<Result<Vec<_>, _>>()?;
    let preamble = t.preamble.render(&[("nodes", &serial_list(&labels))])?;
    let body = if graph.edge_count() == 0 {
        t.empty.clone()
    } else {
        let lines = match &t.item {
            Item::Edge(edge) => graph
                .edges()
                .iter()
                .map(|&(u, v)| edge.render(&[("u", &labels[u]), ("v", &labels[v])]))
                .collect::<Result<Vec<_>, _>>()?,
            Item::NodeLine(line) => graph
                .adjacency()
                .iter()
                .enumerate()
                .filter(|(_, nbrs)| !nbrs.is_empty())
                .map(|(u, nbrs)| {
                    let nbrs: Vec<&str> = nbrs.iter().map(|&v| labels[v].as_str()).collect();
                    line.render(&[("u", &labels[u]), ("neighbors", &nbrs.join(", "))])
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        t.body.render(&[("edges", &lines.join(&t.joiner))])?
    };
    Ok(GraphText {
        preamble,
        node_labels: labels,
        body,
        encoding: kind,
    })
}

/// Recovers the edge list from adjacency-encoded text (box or prompt form).
pub fn parse_adjacency_text(text: &str) -> Result<Vec<(usize, usize)>, EncodingError> {
    const EDGES: &str = "The edges in G are: ";
    const EMPTY: &str = "There are no edges in G.";
    let malformed = |why: &str| EncodingError::Parse(format!("adjacency text: {why}"));
    if let Some(start) = text.find(EDGES) {
        let rest = &text[start + EDGES.len()..];
        let end = rest.find(").").ok_or_else(|| malformed("unterminated edge list"))?;
        let list = &rest[..=end];
        let mut edges = Vec::new();
        for (i, token) in list.split(") (").enumerate() {
            let token = token.trim_start_matches('(').trim_end_matches(')');
            let (u, v) = token
                .split_once(", ")
                .ok_or_else(|| malformed(&format!("edge {} is not `(u, v)`", i + 1)))?;
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| malformed(&format!("`{s}` is not a node index")))
            };
            edges.push((parse(u)?, parse(v)?));
        }
        Ok(edges)
    } else if text.contains(EMPTY) {
        Ok(Vec::new())
    } else {
        Err(malformed("no edge sentence found"))
    }
}
