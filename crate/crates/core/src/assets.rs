//! Versioned text assets compiled into the crate.
//!
//! Prompt wording, sample programs, encoding templates, the name pool and the
//! guest-side shim all live under `assets/` as plain files. Their SHA-256
//! checksums are written into every run manifest.

use std::collections::BTreeMap;

use crate::seed::sha256_hex;
use crate::tasks::TaskKind;

pub const NAMES: &str = include_str!("../assets/names.txt");
pub const ENCODINGS: &str = include_str!("../assets/encodings.toml");
pub const SHIM: &str = include_str!("../assets/shim.py");
pub const CODEGRAPH_INTRO: &str = include_str!("../assets/prompts/codegraph_intro.txt");

/// SHA-256 of [`SHIM`]. A test pins this so the executor and the shim
/// protocol cannot drift apart silently.
pub const SHIM_SHA256: &str = "4702830624bed467ac27a53ac59261c30fc36eae4254f5401c985ca64a260bd4";

pub fn program(task: TaskKind) -> &'static str {
    match task {
        TaskKind::NodeCount => include_str!("../assets/programs/node_count.py"),
        TaskKind::EdgeCount => include_str!("../assets/programs/edge_count.py"),
        TaskKind::EdgeExistence => include_str!("../assets/programs/edge_existence.py"),
        TaskKind::NodeDegree => include_str!("../assets/programs/node_degree.py"),
        TaskKind::ConnectedNodes => include_str!("../assets/programs/connected_nodes.py"),
        TaskKind::CycleCheck => include_str!("../assets/programs/cycle_check.py"),
    }
}

/// Task sentence and answer-format instruction for program-aided prompts.
pub fn codegraph_description(task: TaskKind) -> &'static str {
    match task {
        TaskKind::NodeCount => include_str!("../assets/prompts/codegraph_node_count.txt"),
        TaskKind::EdgeCount => include_str!("../assets/prompts/codegraph_edge_count.txt"),
        TaskKind::EdgeExistence => include_str!("../assets/prompts/codegraph_edge_existence.txt"),
        TaskKind::NodeDegree => include_str!("../assets/prompts/codegraph_node_degree.txt"),
        TaskKind::ConnectedNodes => include_str!("../assets/prompts/codegraph_connected_nodes.txt"),
        TaskKind::CycleCheck => include_str!("../assets/prompts/codegraph_cycle_check.txt"),
    }
}

/// One-sentence task statement for the natural-language methods.
pub fn text_description(task: TaskKind) -> &'static str {
    match task {
        TaskKind::NodeCount => include_str!("../assets/prompts/text_node_count.txt"),
        TaskKind::EdgeCount => include_str!("../assets/prompts/text_edge_count.txt"),
        TaskKind::EdgeExistence => include_str!("../assets/prompts/text_edge_existence.txt"),
        TaskKind::NodeDegree => include_str!("../assets/prompts/text_node_degree.txt"),
        TaskKind::ConnectedNodes => include_str!("../assets/prompts/text_connected_nodes.txt"),
        TaskKind::CycleCheck => include_str!("../assets/prompts/text_cycle_check.txt"),
    }
}

/// Drops the single trailing newline every asset file ends with.
pub(crate) fn trimmed(asset: &str) -> &str {
    asset.strip_suffix('\n').unwrap_or(asset)
}

/// Checksums of every asset, keyed by its path under `assets/`.
pub fn checksums() -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut add = |name: String, body: &str| {
        out.insert(name, sha256_hex(body.as_bytes()));
    };
    add("names.txt".into(), NAMES);
    add("encodings.toml".into(), ENCODINGS);
    add("shim.py".into(), SHIM);
    add("prompts/codegraph_intro.txt".into(), CODEGRAPH_INTRO);
    for task in TaskKind::ALL {
        add(format!("programs/{task}.py"), program(task));
        add(format!("prompts/codegraph_{task}.txt"), codegraph_description(task));
        add(format!("prompts/text_{task}.txt"), text_description(task));
    }
    out
}
