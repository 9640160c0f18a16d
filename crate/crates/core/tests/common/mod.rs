#![allow(dead_code)]

pub mod reference;

use std::path::PathBuf;

use kopl_core::engine::{EntitySet, RuntimeValue};
use kopl_core::kb::{EntityIdx, FactRef, KnowledgeBase};
use kopl_core::synth::{generate_kb, ProgramGenerator, SynthConfig};
use kopl_core::{
    build_indices, compare_values, load_kb, parse_program_str, Comparator, Engine, EngineConfig, ExecOptions,
    ExecutionError, IndexBackendKind, Program, ValueLiteral,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_kb(name: &str) -> KnowledgeBase {
    load_kb(fixture_path(name)).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

pub fn fixture_program(name: &str) -> Program {
    parse_program_str(&fixture_text(name)).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

/// Kind-tagged, order-preserving view of a node output for comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum Observed {
    Entities { ids: Vec<u32>, facts: Option<Vec<Vec<FactRef>>> },
    Values(Vec<String>),
    Strings(Vec<String>),
    Int(i64),
    Bool(bool),
}

pub fn observe_set(set: &EntitySet) -> Observed {
    Observed::Entities {
        ids: set.ids().iter().map(|e| e.0).collect(),
        facts: set
            .has_facts()
            .then(|| (0..set.len()).map(|i| set.facts_at(i).to_vec()).collect()),
    }
}

pub fn observe(value: &RuntimeValue) -> Observed {
    match value {
        RuntimeValue::Entities(set) => observe_set(set),
        RuntimeValue::Values(v) => Observed::Values(v.iter().map(|x| format!("{x:?}")).collect()),
        RuntimeValue::Strings(v) => Observed::Strings(v.clone()),
        RuntimeValue::Int(n) => Observed::Int(*n),
        RuntimeValue::Bool(b) => Observed::Bool(*b),
    }
}

/// An attribute lookup drawn from the KB's own facts, occasionally perturbed
/// so that unmatched keys, units and values are exercised too.
pub fn random_lookup(kb: &KnowledgeBase, rng: &mut impl Rng) -> (String, Comparator, ValueLiteral) {
    let cmp = *Comparator::ALL.choose(rng).unwrap();
    let facts: Vec<_> = kb.entities().iter().flat_map(|e| e.literal_facts.iter()).collect();
    let Some(fact) = facts.choose(rng) else {
        return ("missing".into(), cmp, ValueLiteral::Year(2000));
    };
    let key = if rng.gen_bool(0.05) { "no such key".to_string() } else { kb.sym_name(fact.key).to_string() };
    let value = match &fact.value {
        ValueLiteral::Quantity { amount, unit } if rng.gen_bool(0.5) => {
            let unit = if rng.gen_bool(0.1) { "furlong".to_string() } else { unit.to_string() };
            ValueLiteral::quantity(amount + rng.gen_range(-10.0..10.0), unit)
        }
        ValueLiteral::Year(y) if rng.gen_bool(0.5) => ValueLiteral::Year(y + rng.gen_range(-5..=5)),
        ValueLiteral::Date(d) if rng.gen_bool(0.3) => ValueLiteral::Year(chrono::Datelike::year(d)),
        other => other.clone(),
    };
    // Ordered comparators are undefined on strings.
    let cmp = match (&value, cmp) {
        (ValueLiteral::String(_), Comparator::Lt | Comparator::Gt) => Comparator::Eq,
        (_, c) => c,
    };
    (key, cmp, value)
}

/// Every (entity, fact position) whose fact under `key` satisfies the comparison.
pub fn scan_lookup(kb: &KnowledgeBase, key: &str, cmp: Comparator, value: &ValueLiteral) -> Vec<(EntityIdx, u32)> {
    let mut out = Vec::new();
    for (e, entity) in kb.entities().iter().enumerate() {
        for (pos, fact) in entity.literal_facts.iter().enumerate() {
            if kb.sym_name(fact.key) == key && compare_values(&fact.value, cmp, value) {
                out.push((EntityIdx(e as u32), pos as u32));
            }
        }
    }
    out
}

pub fn keep_outputs() -> ExecOptions {
    ExecOptions {
        trace: true,
        keep_outputs: true,
    }
}

/// Compares one engine configuration against the reference on `program`.
pub fn check(kb: &KnowledgeBase, program: &Program, fusion: bool, backend: IndexBackendKind) -> Result<(), String> {
    let idx = build_indices(kb, backend);
    let engine = Engine::new(kb, &idx).with_config(EngineConfig {
        fusion,
        ..EngineConfig::default()
    });
    let expected = reference::run(kb, program);
    let actual = engine.execute(program, keep_outputs());
    match (expected, actual) {
        (Ok(exp), Ok(act)) => {
            if exp.answer != act.answer {
                return Err(format!("answer: reference {:?}, engine {:?}", exp.answer, act.answer));
            }
            let outputs = act.outputs.expect("outputs kept");
            for (i, (e, a)) in exp.outputs.iter().zip(&outputs).enumerate() {
                let (e, a) = (e.observe(), observe(a));
                if e != a {
                    return Err(format!("node {i}: reference {e:?}, engine {a:?}"));
                }
            }
            let trace = act.trace.expect("trace requested");
            if trace.len() != program.len() {
                return Err(format!("trace has {} entries for {} nodes", trace.len(), program.len()));
            }
            for entry in &trace {
                let full = &outputs[entry.index];
                let limit = engine.config().preview_limit;
                if entry.count != full.cardinality() || entry.preview != full.preview(kb, limit) {
                    return Err(format!("trace entry {} disagrees with its output", entry.index));
                }
            }
            Ok(())
        }
        (Err(exp), Err(ExecutionError::Runtime { node, .. })) if exp.node == node => Ok(()),
        (exp, act) => Err(format!(
            "reference {:?} vs engine {:?}",
            exp.map(|r| r.answer),
            act.map(|r| r.answer)
        )),
    }
}


/// A random KB of `entities` entities and a valid program of at most
/// `max_nodes` nodes over it, both derived from `seed`.
pub fn small_case(seed: u64, entities: usize, max_nodes: usize) -> (KnowledgeBase, Program) {
    let kb = generate_kb(&SynthConfig::new(entities, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let program = ProgramGenerator::new(&kb, max_nodes).generate(&mut rng);
    (kb, program)
}
