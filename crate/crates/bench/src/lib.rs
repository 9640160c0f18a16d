//! Shared setup for the criterion benches.

use kopl_core::synth::{generate_kb, SynthConfig};
use kopl_core::KnowledgeBase;

/// Entity count for bench KBs; override with `KOPL_BENCH_ENTITIES`.
pub fn bench_entities() -> usize {
    std::env::var("KOPL_BENCH_ENTITIES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(20_000)
}

pub fn bench_kb() -> KnowledgeBase {
    generate_kb(&SynthConfig::new(bench_entities(), 42))
}
