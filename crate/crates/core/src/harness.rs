//! Latency measurement over program workloads: percentiles, histograms and
//! the fused-versus-unfused comparison.

use std::time::Instant;

use serde::Serialize;

use crate::engine::{Engine, EngineConfig, ExecOptions};
use crate::index::IndexSet;
use crate::kb::KnowledgeBase;
use crate::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub count: usize,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Nearest-rank percentile of an ascending slice; 0 when empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencyStats {
    pub fn from_samples(samples_ms: &[f64]) -> Self {
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let total: f64 = sorted.iter().sum();
        LatencyStats {
            count: sorted.len(),
            total_ms: total,
            mean_ms: if sorted.is_empty() { 0.0 } else { total / sorted.len() as f64 },
            p50_ms: percentile(&sorted, 50.0),
            p90_ms: percentile(&sorted, 90.0),
            p95_ms: percentile(&sorted, 95.0),
            p99_ms: percentile(&sorted, 99.0),
            max_ms: sorted.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBucket {
    pub lo_ms: f64,
    pub hi_ms: f64,
    pub count: usize,
}

/// Equal-width buckets spanning `[0, max]`.
pub fn histogram(samples_ms: &[f64], buckets: usize) -> Vec<HistogramBucket> {
    let buckets = buckets.max(1);
    let max = samples_ms.iter().copied().fold(0.0, f64::max);
    let width = if max > 0.0 { max / buckets as f64 } else { 1.0 };
    let mut out: Vec<HistogramBucket> = (0..buckets)
        .map(|i| HistogramBucket {
            lo_ms: i as f64 * width,
            hi_ms: (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &s in samples_ms {
        let i = ((s / width) as usize).min(buckets - 1);
        out[i].count += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub stats: LatencyStats,
    /// Wall time of the whole loop, including bookkeeping between queries.
    pub measured_total_ms: f64,
    pub runtime_errors: usize,
    pub invalid: usize,
    pub histogram: Vec<HistogramBucket>,
    #[serde(skip)]
    pub samples_ms: Vec<f64>,
    #[serde(skip)]
    pub answers: Vec<Result<String, String>>,
}

impl LatencyReport {
    /// Relative gap between summed per-query times and the measured total.
    pub fn accounting_error(&self) -> f64 {
        if self.measured_total_ms == 0.0 {
            return 0.0;
        }
        (self.measured_total_ms - self.stats.total_ms).abs() / self.measured_total_ms
    }
}

/// Runs each program once, single-threaded, timing each execution.
pub fn measure(engine: &Engine<'_>, programs: &[Program]) -> LatencyReport {
    let mut samples = Vec::with_capacity(programs.len());
    let mut answers = Vec::with_capacity(programs.len());
    let (mut runtime_errors, mut invalid) = (0, 0);
    let started = Instant::now();
    for program in programs {
        // Outcome handling stays inside the timed span so the samples add up
        // to the loop's wall time.
        let t = Instant::now();
        let outcome = match engine.execute(program, ExecOptions::default()) {
            Ok(r) => Ok(r.answer),
            Err(e) => {
                match e {
                    crate::engine::ExecutionError::Invalid(_) => invalid += 1,
                    crate::engine::ExecutionError::Runtime { .. } => runtime_errors += 1,
                }
                Err(e.to_string())
            }
        };
        samples.push(t.elapsed().as_secs_f64() * 1e3);
        answers.push(outcome);
    }
    let measured_total_ms = started.elapsed().as_secs_f64() * 1e3;
    LatencyReport {
        stats: LatencyStats::from_samples(&samples),
        measured_total_ms,
        runtime_errors,
        invalid,
        histogram: histogram(&samples, 20),
        samples_ms: samples,
        answers,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionReport {
    pub fused: LatencyStats,
    pub unfused: LatencyStats,
    /// Unfused median over fused median.
    pub median_speedup: f64,
    pub answers_match: bool,
}

/// Runs `programs` with and without fusion and compares medians.
pub fn compare_fusion(kb: &KnowledgeBase, idx: &IndexSet, programs: &[Program]) -> FusionReport {
    let config = EngineConfig::default();
    let fused = measure(&Engine::new(kb, idx).with_config(EngineConfig { fusion: true, ..config }), programs);
    let unfused = measure(&Engine::new(kb, idx).with_config(EngineConfig { fusion: false, ..config }), programs);
    let median_speedup = if fused.stats.p50_ms > 0.0 { unfused.stats.p50_ms / fused.stats.p50_ms } else { f64::INFINITY };
    FusionReport {
        fused: fused.stats,
        unfused: unfused.stats,
        median_speedup,
        answers_match: fused.answers == unfused.answers,
    }
}
