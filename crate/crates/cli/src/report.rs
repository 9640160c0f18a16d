//! Benchmark report: backend comparison, fused versus unfused latency, and
//! the latency distribution of a mixed workload.

use kopl_core::harness::{compare_fusion, measure, FusionReport, HistogramBucket, LatencyStats};
use kopl_core::index::{bench_backends, BackendReport};
use kopl_core::synth::{fusion_workload, mixed_workload};
use kopl_core::{build_indices, Engine, KnowledgeBase, Program, Stats};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub programs: usize,
    pub fusion_programs: usize,
    pub max_nodes: usize,
    pub seed: u64,
    pub histogram_buckets: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            programs: 1000,
            fusion_programs: 100,
            max_nodes: 10,
            seed: 42,
            histogram_buckets: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencySection {
    pub stats: LatencyStats,
    pub measured_total_ms: f64,
    /// |measured − Σ per-query| / measured.
    pub accounting_error: f64,
    pub runtime_errors: usize,
    pub invalid: usize,
    pub histogram: Vec<HistogramBucket>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub kb: Stats,
    pub workload_programs: usize,
    #[serde(flatten)]
    pub backends: BackendReport,
    pub fusion: FusionReport,
    pub latency: LatencySection,
}

/// Runs every measurement. `workload` replaces the generated mixed workload
/// when given.
pub fn run_bench(kb: &KnowledgeBase, workload: Option<Vec<Program>>, params: &BenchParams) -> BenchReport {
    let workload = workload.unwrap_or_else(|| mixed_workload(kb, params.programs, params.max_nodes, params.seed));
    let backends = bench_backends(kb, &workload);
    let idx = build_indices(kb, backends.argmin);
    let fusion = compare_fusion(kb, &idx, &fusion_workload(kb, params.fusion_programs, params.seed));
    let latency = measure(&Engine::new(kb, &idx), &workload);
    BenchReport {
        kb: kb.stats(),
        workload_programs: workload.len(),
        backends,
        fusion,
        latency: LatencySection {
            stats: latency.stats,
            measured_total_ms: latency.measured_total_ms,
            accounting_error: latency.accounting_error(),
            runtime_errors: latency.runtime_errors,
            invalid: latency.invalid,
            histogram: kopl_core::harness::histogram(&latency.samples_ms, params.histogram_buckets),
        },
    }
}

/// Short human-readable summary for stderr.
pub fn summary(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} entities, {} programs\n{:<22} {:>12}\n",
        report.kb.entity_count, report.workload_programs, "backend", "wall ms"
    ));
    for row in &report.backends.backends {
        let mark = if row.backend == report.backends.argmin { " *" } else { "" };
        out.push_str(&format!("{:<22} {:>12.3}{mark}\n", row.backend.as_str(), row.wall_time_ms));
    }
    out.push_str(&format!(
        "fusion: median {:.3} ms fused vs {:.3} ms unfused ({:.1}x)\n",
        report.fusion.fused.p50_ms, report.fusion.unfused.p50_ms, report.fusion.median_speedup
    ));
    let s = &report.latency.stats;
    out.push_str(&format!(
        "latency: p50 {:.3} ms, p95 {:.3} ms, p99 {:.3} ms, max {:.3} ms\n",
        s.p50_ms, s.p95_ms, s.p99_ms, s.max_ms
    ));
    out
}
