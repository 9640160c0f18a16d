//! KoPL knowledge-base query engine: KB store, inverted indices, program
//! model and validation, a tracing executor with operator fusion, question
//! templates, and synthetic data for benchmarks.

pub mod engine;
pub mod harness;
pub mod index;
pub mod induction;
pub mod kb;
pub mod program;
pub mod synth;

pub use engine::{
    execute, plan_merge, render_answer, Engine, EngineConfig, ExecOptions, ExecutionError, ExecutionResult,
    RuntimeValue, TraceEntry,
};
pub use index::{build_indices, IndexBackendKind, IndexSet, SchemaKind};
pub use kb::{
    compare_values, concept_descendants, kb_stats, load_kb, resolve_entity_name, Comparator, KbError,
    KnowledgeBase, Stats, ValueKind, ValueLiteral,
};
pub use program::{
    execution_order, parse_program, parse_program_str, serialize_program, validate, Operator, OperatorNode,
    OutputKind, Program, ProgramError, ValidationReport,
};
