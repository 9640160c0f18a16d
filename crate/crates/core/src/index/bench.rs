use std::time::{Duration, Instant};

use serde::Serialize;

use super::{IndexBackendKind, IndexSet};
use crate::engine::{Engine, ExecOptions};
use crate::kb::KnowledgeBase;
use crate::program::{validate, Program};

const RUNS_PER_BACKEND: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendRow {
    pub backend: IndexBackendKind,
    /// Median over runs of the workload's total execution time.
    pub wall_time_ms: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendReport {
    pub backends: Vec<BackendRow>,
    pub argmin: IndexBackendKind,
    /// Workload programs rejected by validation.
    pub skipped: usize,
}

/// Times `workload` against indices built with each backend. Index builds
/// are excluded; ties in the argmin go to the earlier backend.
pub fn bench_backends(kb: &KnowledgeBase, workload: &[Program]) -> BackendReport {
    let valid: Vec<&Program> = workload.iter().filter(|p| validate(p).ok).collect();
    let skipped = workload.len() - valid.len();

    let backends: Vec<BackendRow> = IndexBackendKind::ALL
        .iter()
        .map(|&backend| {
            let idx = IndexSet::build(kb, backend);
            let engine = Engine::new(kb, &idx);
            let mut runs: Vec<Duration> = (0..RUNS_PER_BACKEND)
                .map(|_| {
                    let started = Instant::now();
                    for program in &valid {
                        // Runtime errors are legitimate outcomes and still cost time.
                        let _ = engine.execute(program, ExecOptions::default());
                    }
                    started.elapsed()
                })
                .collect();
            runs.sort_unstable();
            BackendRow {
                backend,
                wall_time_ms: runs[RUNS_PER_BACKEND / 2].as_secs_f64() * 1e3,
                queries: valid.len(),
            }
        })
        .collect();

    let argmin = if valid.is_empty() {
        IndexBackendKind::ALL[0]
    } else {
        backends
        .iter()
        .fold(None::<&BackendRow>, |best, row| match best {
            Some(b) if b.wall_time_ms <= row.wall_time_ms => Some(b),
            _ => Some(row),
        })
        .map(|row| row.backend)
        .unwrap_or_default()
    };

    BackendReport {
        backends,
        argmin,
        skipped,
    }
}
