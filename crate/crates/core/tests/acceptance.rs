//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Run with `cargo test -p codegraph-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use codegraph_core::executor::{extract_code_bytes, run_code};
use codegraph_core::harness::{
    aggregate, gold_check, mu_delta, overall_accuracy, round1, run_experiment, Axis, ExperimentConfig, FailureKind,
    ModelResponder,
};
use codegraph_core::prompting::{build_prompt, Exemplar, Method};
use codegraph_core::tasks::has_cycle_dfs;
use codegraph_core::{
    dataset_stats, encode_graph, oracle_answer, sample_dataset, Answer, EncodingKind, GeneratorKind, SandboxLimits,
    Split, TaskInstance, TaskKind,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gold_path() -> Outcome {
    let start = Instant::now();
    let records = gold_check(
        &TaskKind::ALL,
        &[EncodingKind::Adjacency, EncodingKind::Friendship],
        &[GeneratorKind::Er],
        50,
        2024,
        &SandboxLimits::default(),
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(records.len() == 600, format!("{} instances, expected 600", records.len()))?;
    let wrong: Vec<&str> = records.iter().filter(|r| !r.correct).map(|r| r.id.as_str()).collect();
    check(wrong.is_empty(), format!("{} mismatches, first {:?}", wrong.len(), wrong.first()))?;
    check(elapsed < Duration::from_secs(180), format!("took {elapsed:?}"))?;
    Ok(format!("600/600 correct in {:.1}s", elapsed.as_secs_f64()))
}

fn encoder_fixtures() -> Outcome {
    let g = reference_graph();
    for (kind, file) in [
        (EncodingKind::Adjacency, "encoders/adjacency.txt"),
        (EncodingKind::Friendship, "encoders/friendship.txt"),
        (EncodingKind::Coauthorship, "encoders/coauthorship.txt"),
        (EncodingKind::SocialNetwork, "encoders/social_network.txt"),
        (EncodingKind::Expert, "encoders/expert.txt"),
    ] {
        let got = encode_graph(&g, kind).map_err(|e| e.to_string())?.box_text();
        check(got == read_fixture(file), format!("{kind} differs:\n{got}"))?;
    }
    Ok("5 encodings byte-exact".into())
}

fn prompt_fixture() -> Outcome {
    let (exemplar_graph, test_graph) = edge_existence_prompt_graphs();
    let exemplar = Exemplar {
        instance: TaskInstance::with_targets(&exemplar_graph, TaskKind::EdgeExistence, vec![8, 5])
            .map_err(|e| e.to_string())?,
        graph: exemplar_graph,
    };
    let instance =
        TaskInstance::with_targets(&test_graph, TaskKind::EdgeExistence, vec![3, 0]).map_err(|e| e.to_string())?;
    let text = build_prompt(Method::CodeGraph(1), &test_graph, &instance, &[exemplar], EncodingKind::Adjacency)
        .map_err(|e| e.to_string())?
        .text();
    let expected = read_fixture("prompt_edge_existence_codegraph1.txt");
    check(text == expected, "codegraph-1 edge-existence prompt differs from the published example")?;
    Ok(format!("{} bytes identical", text.len()))
}

fn aggregation_fixtures() -> Outcome {
    let mut parts = Vec::new();
    for (task, cells, mu, delta) in zero_shot_rows() {
        let rows = aggregate(&synthetic_records(task, Method::ZeroShot, &cells), Axis::Encoding);
        let row = rows.first().ok_or("no rows")?;
        let (m, d) = (row.mu.ok_or("no mu")?, row.delta.ok_or("no delta")?);
        check((m - mu).abs() <= 0.05 && (d - delta).abs() <= 0.05, format!("{task}: {m}/{d} vs {mu}/{delta}"))?;
        check((round1(m), round1(d)) == (mu, delta), format!("{task}: display rounding"))?;
        check(mu_delta(&cells).is_some(), "empty cells")?;
        parts.push(format!("{task} {:.1}/{:.1}", round1(m), round1(d)));
    }
    Ok(parts.join(", "))
}

fn oracle_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut checked = 0;
    let mut cyclic = 0;
    for i in 0..1000 {
        let family = GeneratorKind::ALL[i % GeneratorKind::ALL.len()];
        let g = sample_dataset(family, 1, Split::Test, rng.random()).map_err(|e| e.to_string())?.remove(0);
        let dfs = has_cycle_dfs(&g);
        check(dfs == union_find_has_cycle(g.node_count(), g.edges()), format!("cycle oracles disagree on {}", g.id()))?;
        cyclic += dfs as usize;
        for v in 0..g.node_count() {
            let deg = oracle_answer(&g, TaskKind::NodeDegree, &[v]).map_err(|e| e.to_string())?;
            let nodes = oracle_answer(&g, TaskKind::ConnectedNodes, &[v]).map_err(|e| e.to_string())?;
            match (deg, nodes) {
                (Answer::Integer(d), Answer::Nodes(set)) => check(d as usize == set.len(), "degree mismatch")?,
                _ => return Err("unexpected answer types".into()),
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} graphs agree ({cyclic} cyclic)"))
}

fn structural_laws() -> Outcome {
    let mut violations = Vec::new();
    let mut total = 0;
    for family in [GeneratorKind::Path, GeneratorKind::Star, GeneratorKind::Complete] {
        for g in sample_dataset(family, 500, Split::Test, 31).map_err(|e| e.to_string())? {
            let n = g.node_count();
            let ok = match family {
                GeneratorKind::Path => g.edge_count() == n - 1 && !has_cycle_dfs(&g),
                GeneratorKind::Star => g.edge_count() == n - 1 && !has_cycle_dfs(&g),
                _ => g.edge_count() == n * (n - 1) / 2 && (n < 3 || has_cycle_dfs(&g)),
            };
            if !ok {
                violations.push(g.id().to_string());
            }
            total += 1;
        }
    }
    check(violations.is_empty(), format!("violations: {violations:?}"))?;
    Ok(format!("{total} graphs, zero violations"))
}

fn dataset_statistics() -> Outcome {
    let graphs = sample_dataset(GeneratorKind::Er, 500, Split::Train, 0).map_err(|e| e.to_string())?;
    let s = dataset_stats(&graphs).map_err(|e| e.to_string())?;
    let within = |got: f64, want: f64| (got - want).abs() <= 0.15 * want;
    let summary = format!("nodes {:.2}, edges {:.2}, degree {:.2}", s.avg_nodes, s.avg_edges, s.avg_degree);
    check(
        within(s.avg_nodes, 11.78) && within(s.avg_edges, 38.07) && within(s.avg_degree, 5.54),
        format!("{summary} vs published 11.78 / 38.07 / 5.54 (±15%)"),
    )?;
    Ok(summary)
}

fn replay_end_to_end() -> Outcome {
    let mut outputs = Vec::new();
    let mut summary = String::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut config = ExperimentConfig::load(&fixture_path("replay/config.toml")).map_err(|e| e.to_string())?;
        config.output_dir = dir.path().to_path_buf();
        let responder = ModelResponder::from_config(&config).map_err(|e| e.to_string())?;
        let out = run_experiment(&config, &responder).map_err(|e| e.to_string())?;
        let acc = overall_accuracy(&out.records).ok_or("no records")?;
        let extraction = out.records.iter().filter(|r| r.failure == Some(FailureKind::ExtractionError)).count();
        check(acc == 70.0, format!("accuracy {acc}"))?;
        check(extraction == 1, format!("{extraction} extraction errors"))?;
        summary = format!("accuracy {acc:.1}, {extraction} extraction error");
        let files = ["records.jsonl", "report.csv", "report.txt"]
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string()));
        outputs.push(files.into_iter().collect::<Result<Vec<_>, _>>()?);
    }
    check(outputs[0] == outputs[1], "outputs differ between runs")?;
    Ok(format!("{summary}, byte-identical across two runs"))
}

fn fuzz_and_timeout() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let markers: [&[u8]; 4] = [b"# CODE START", b"# CODE END", b"\n", b"```"];
    for _ in 0..10_000 {
        let len = rng.random_range(0..400);
        let mut bytes = Vec::with_capacity(len);
        while bytes.len() < len {
            if rng.random_bool(0.1) {
                bytes.extend_from_slice(markers[rng.random_range(0..markers.len())]);
            } else {
                bytes.push(rng.random());
            }
        }
        let _ = catch_unwind(|| extract_code_bytes(&bytes)).map_err(|_| format!("extract_code panicked on {bytes:?}"))?;
    }
    let limits = SandboxLimits {
        wall_timeout_secs: 2.0,
        ..SandboxLimits::default()
    };
    let start = Instant::now();
    let r = run_code("while True:\n    pass\n", &limits);
    let elapsed = start.elapsed();
    check(
        r.status == codegraph_core::ExecutionStatus::Timeout,
        format!("infinite loop ended with {:?}", r.status),
    )?;
    check(elapsed <= Duration::from_secs_f64(limits.wall_timeout_secs + 1.0), format!("killed after {elapsed:?}"))?;
    Ok(format!("10000 inputs without panic; loop killed after {:.2}s (limit 2s)", elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gold-path oracle equivalence", gold_path),
        ("encoder fixtures", encoder_fixtures),
        ("prompt fixture", prompt_fixture),
        ("aggregation fixtures", aggregation_fixtures),
        ("oracle cross-validation", oracle_cross_validation),
        ("structural laws", structural_laws),
        ("dataset statistics", dataset_statistics),
        ("replay end-to-end", replay_end_to_end),
        ("extraction fuzz and timeout", fuzz_and_timeout),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
