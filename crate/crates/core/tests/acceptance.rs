//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{check, random_lookup, small_case};
use kopl_core::harness::{compare_fusion, measure};
use kopl_core::induction::{parse_question, ParserBinding, Question};
use kopl_core::synth::{fusion_workload, generate_kb, mixed_workload, SynthConfig};
use kopl_core::{
    build_indices, parse_program, parse_program_str, serialize_program, validate, Engine, ExecOptions, ExecutionError,
    IndexBackendKind, KnowledgeBase, Operator, SchemaKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let pairs = 1000;
    for seed in 0..pairs as u64 {
        let entities = 1 + (seed as usize * 37) % 100;
        let max_nodes = 3 + (seed as usize % 8);
        let (kb, program) = small_case(seed, entities, max_nodes);
        ensure(validate(&program).ok, format!("seed {seed}: generated program is invalid"))?;
        check(&kb, &program, true, IndexBackendKind::Hashing).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed.as_secs() < 120, format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} pairs identical in {:.1}s", elapsed.as_secs_f64()))
}

fn big_kb() -> &'static KnowledgeBase {
    static KB: std::sync::OnceLock<KnowledgeBase> = std::sync::OnceLock::new();
    KB.get_or_init(|| generate_kb(&SynthConfig::new(100_000, 42)))
}

fn fusion_speedup() -> Outcome {
    let kb = big_kb();
    let idx = build_indices(kb, IndexBackendKind::Hashing);
    let programs = fusion_workload(kb, 100, 7);
    let report = compare_fusion(kb, &idx, &programs);
    ensure(report.answers_match, "fused and unfused answers differ")?;
    ensure(
        report.median_speedup >= 5.0,
        format!("median speedup {:.1}x < 5x", report.median_speedup),
    )?;
    Ok(format!(
        "median {:.3} ms fused vs {:.3} ms unfused ({:.1}x)",
        report.fused.p50_ms, report.unfused.p50_ms, report.median_speedup
    ))
}

fn absolute_latency() -> Outcome {
    let kb = big_kb();
    let idx = build_indices(kb, IndexBackendKind::Hashing);
    let programs = mixed_workload(kb, 500, 10, 9);
    let report = measure(&Engine::new(kb, &idx), &programs);
    ensure(report.invalid == 0, format!("{} invalid programs", report.invalid))?;
    ensure(report.stats.p95_ms < 200.0, format!("p95 {:.2} ms", report.stats.p95_ms))?;
    Ok(format!(
        "p95 {:.2} ms, p50 {:.2} ms, max {:.2} ms over {} programs",
        report.stats.p95_ms, report.stats.p50_ms, report.stats.max_ms, report.stats.count
    ))
}

fn figure3() -> Outcome {
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    let engine = Engine::new(&kb, &idx);

    let faulty = common::fixture_program("figure3_faulty.json");
    match engine.execute(&faulty, ExecOptions::traced()) {
        Err(ExecutionError::Runtime { node, function, message }) => {
            ensure(function == Operator::Relate && node == 4, format!("failed at node {node} ({function})"))?;
            ensure(
                message == "unknown relation 'statement is subject of'",
                format!("unexpected message: {message}"),
            )?;
        }
        other => return Err(format!("faulty program did not fail at Relate: {:?}", other.map(|r| r.answer))),
    }

    let corrected = common::fixture_program("figure3_corrected.json");
    let result = engine.execute(&corrected, ExecOptions::traced()).map_err(|e| e.to_string())?;
    ensure(result.answer == "3", format!("answer {}", result.answer))?;
    let trace = result.trace.unwrap();
    let and = trace.iter().find(|t| t.function == "And").ok_or("no And entry")?;
    ensure(
        and.preview == ["Belgium", "Luxembourg", "Switzerland"],
        format!("And lists {:?}", and.preview),
    )?;

    let question = Question::new("How many countries share borders with both Germany and France?").unwrap();
    let parsed = parse_question(&ParserBinding::default(), &question, &idx).map_err(|e| e.to_string())?;
    let answer = engine.execute(&parsed, ExecOptions::default()).map_err(|e| e.to_string())?.answer;
    ensure(parsed.len() == 8 && answer == "3", "parsed question does not answer 3")?;
    Ok("faulty fails at Relate; corrected answers 3; And = Belgium, Luxembourg, Switzerland".into())
}

fn validation() -> Outcome {
    let report = validate(&common::fixture_program("count_into_qfilter.json"));
    let d = report.errors().next().ok_or("Count -> QFilterStr accepted")?;
    ensure(
        d.node == Some(2) && d.message.contains("INT not acceptable, expected ENTITY_SET_WITH_FACTS"),
        format!("diagnostic {d:?}"),
    )?;
    let report = validate(&common::fixture_program("two_roots.json"));
    ensure(!report.ok, "two-root program accepted")?;
    ensure(
        report.errors().any(|d| d.node == Some(0) && d.message.contains("tree")),
        format!("{:?}", report.diagnostics),
    )?;
    Ok("illegal dependency attributed to node 2; two roots rejected as non-tree".into())
}

fn completion() -> Outcome {
    let kb = common::fixture_kb("borders.json");
    for backend in IndexBackendKind::ALL {
        let idx = build_indices(&kb, backend);
        let hits = idx.complete(SchemaKind::Relation, "share", 10).map_err(|e| e.to_string())?;
        ensure(hits.first().map(String::as_str) == Some("shares border with"), format!("{backend}: {hits:?}"))?;
        for limit in 1..=8 {
            let all = idx.complete(SchemaKind::Entity, "", limit).map_err(|e| e.to_string())?;
            ensure(all.len() == limit.min(7), format!("{backend}: limit {limit} gave {}", all.len()))?;
        }
    }
    Ok("\"share\" -> \"shares border with\"; empty prefix honours limit on all backends".into())
}

fn appendix_b() -> Outcome {
    let program = parse_program_str(&common::fixture_text("appendix_b.txt")).map_err(|e| e.to_string())?;
    ensure(program.len() == 8, "expected 8 nodes")?;
    ensure(validate(&program).ok, "Appendix B program does not validate")?;
    let doc = serialize_program(&program);
    ensure(!doc.to_string().contains("-1"), "serialized form keeps -1")?;
    ensure(parse_program(&doc).map_err(|e| e.to_string())? == program, "round trip changed the program")?;
    let styles = [json!([-1, -1]), json!([])];
    let parsed: Vec<_> = styles
        .iter()
        .map(|deps| parse_program(&json!([{"function": "FindAll", "inputs": [], "dependencies": deps}, {"function": "Count", "inputs": [], "dependencies": [0]}])))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(parsed[0] == parsed[1], "[-1,-1] and [] differ")?;
    Ok("verbatim listing parses, validates and normalizes".into())
}

fn backend_equivalence() -> Outcome {
    let kb = generate_kb(&SynthConfig::new(10_000, 5));
    let indices: Vec<_> = IndexBackendKind::ALL.iter().map(|&b| build_indices(&kb, b)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut non_empty = 0;
    for q in 0..200 {
        let (key, cmp, value) = random_lookup(&kb, &mut rng);
        let expected = common::scan_lookup(&kb, &key, cmp, &value);
        non_empty += !expected.is_empty() as usize;
        for idx in &indices {
            let mut got = idx.lookup_attribute(&kb, &key, cmp, &value);
            got.sort_unstable();
            ensure(got == expected, format!("query {q} ({key} {cmp} {value}) differs on {}", idx.backend()))?;
        }
    }
    Ok(format!("200 queries set-equal across 4 backends ({non_empty} non-empty)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("fusion speedup", fusion_speedup),
        ("absolute latency", absolute_latency),
        ("figure 3 scenario", figure3),
        ("validation", validation),
        ("completion", completion),
        ("appendix b compatibility", appendix_b),
        ("backend equivalence", backend_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {reason}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
