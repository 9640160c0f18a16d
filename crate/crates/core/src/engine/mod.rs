//! Program execution over a knowledge base and its indices, with optional
//! per-operator traces of intermediate outputs.
//!
//! Nodes run in [`execution_order`]; each output is moved into its single
//! consumer. When fusion is on, `FindAll` followed by filters is answered
//! through index lookups ([`plan_merge`]) and the trace still shows every
//! logical operator.

mod plan;
mod value;

use std::cmp::Ordering;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::IndexSet;
use crate::kb::{
    compare_values, value_ordering, Comparator, Direction, EntityIdx, FactRef, KnowledgeBase, Sym, ValueKind,
    ValueLiteral,
};
use crate::program::{execution_order, validate, Operator, OperatorNode, OutputKind, Program, ValidationReport};

pub use crate::kb::compare_values as compare;
pub use plan::{plan_merge, Plan};
pub use value::{render_answer, EntitySet, RuntimeValue};

/// Default number of items kept in each trace preview.
pub const DEFAULT_PREVIEW_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub preview_limit: usize,
    /// Answer `FindAll` + filter chains from the indices.
    pub fusion: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            preview_limit: DEFAULT_PREVIEW_LIMIT,
            fusion: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    pub trace: bool,
    /// Keep every node's full output in [`ExecutionResult::outputs`].
    pub keep_outputs: bool,
}

impl ExecOptions {
    pub fn traced() -> Self {
        ExecOptions {
            trace: true,
            keep_outputs: false,
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    pub function: String,
    pub inputs: Vec<String>,
    pub kind: OutputKind,
    pub count: usize,
    pub preview: Vec<String>,
    pub elapsed_us: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Answered by a fused index lookup.
    #[serde(default, skip_serializing_if = "is_false")]
    pub fused: bool,
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub answer: String,
    pub root_kind: OutputKind,
    pub trace: Option<Vec<TraceEntry>>,
    /// Full output per node index, when requested.
    pub outputs: Option<Vec<RuntimeValue>>,
}

#[derive(Debug, Clone, Error)]
pub enum ExecutionError {
    #[error("program failed validation")]
    Invalid(ValidationReport),
    #[error("node {node} ({function}): {message}")]
    Runtime {
        node: usize,
        function: Operator,
        message: String,
    },
}

impl ExecutionError {
    pub fn node_index(&self) -> Option<usize> {
        match self {
            ExecutionError::Invalid(report) => report.first_error_node(),
            ExecutionError::Runtime { node, .. } => Some(*node),
        }
    }
}

/// Executes programs against one knowledge base and index set.
#[derive(Debug, Clone, Copy)]
pub struct Engine<'a> {
    kb: &'a KnowledgeBase,
    idx: &'a IndexSet,
    config: EngineConfig,
}

/// Runs `program` with default configuration.
pub fn execute(
    kb: &KnowledgeBase,
    idx: &IndexSet,
    program: &Program,
    trace: bool,
) -> Result<ExecutionResult, ExecutionError> {
    Engine::new(kb, idx).execute(program, ExecOptions { trace, keep_outputs: false })
}

enum Slot {
    Value(RuntimeValue),
    /// Unmaterialized output of a deferred `FindAll`.
    AllEntities,
}

impl<'a> Engine<'a> {
    pub fn new(kb: &'a KnowledgeBase, idx: &'a IndexSet) -> Self {
        Engine {
            kb,
            idx,
            config: EngineConfig::default(),
        }
    }

    pub fn with_config(mut self, config: EngineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn kb(&self) -> &'a KnowledgeBase {
        self.kb
    }

    pub fn indices(&self) -> &'a IndexSet {
        self.idx
    }

    pub fn plan(&self, program: &Program) -> Plan {
        if self.config.fusion {
            plan_merge(program)
        } else {
            Plan::unfused(program)
        }
    }

    pub fn execute(&self, program: &Program, options: ExecOptions) -> Result<ExecutionResult, ExecutionError> {
        let report = validate(program);
        if !report.ok {
            return Err(ExecutionError::Invalid(report));
        }
        let plan = self.plan(program);
        let order = execution_order(program).map_err(|_| ExecutionError::Invalid(report.clone()))?;

        let mut slots: Vec<Option<Slot>> = (0..program.len()).map(|_| None).collect();
        let mut trace = options.trace.then(|| Vec::with_capacity(order.len()));
        let mut outputs = options.keep_outputs.then(|| vec![RuntimeValue::Int(0); program.len()]);

        for &i in &order {
            let node = program.node(i);
            let started = Instant::now();
            let inputs: Vec<Slot> = node
                .dependencies
                .iter()
                .map(|&d| slots[d].take().expect("dependencies run first"))
                .collect();
            let mut warnings = Vec::new();
            let out = Evaluator {
                kb: self.kb,
                idx: self.idx,
                plan: &plan,
                warnings: &mut warnings,
            }
            .eval(i, node, inputs)
            .map_err(|message| ExecutionError::Runtime {
                node: i,
                function: node.function,
                message,
            })?;
            let elapsed_us = started.elapsed().as_micros() as u64;

            if let Some(trace) = trace.as_mut() {
                let (kind, count, preview) = match &out {
                    Slot::Value(v) => (v.kind(), v.cardinality(), v.preview(self.kb, self.config.preview_limit)),
                    Slot::AllEntities => (
                        OutputKind::EntitySet,
                        self.kb.entity_count(),
                        self.kb
                            .entities()
                            .iter()
                            .take(self.config.preview_limit)
                            .map(|e| e.name.clone())
                            .collect(),
                    ),
                };
                trace.push(TraceEntry {
                    index: i,
                    function: node.function.name().to_string(),
                    inputs: node.inputs.clone(),
                    kind,
                    count,
                    preview,
                    elapsed_us,
                    warnings,
                    fused: plan.is_fused(i),
                });
            }
            if let Some(outputs) = outputs.as_mut() {
                outputs[i] = match &out {
                    Slot::Value(v) => v.clone(),
                    Slot::AllEntities => RuntimeValue::Entities(self.all_entities()),
                };
            }
            slots[i] = Some(out);
        }

        let root = match slots[program.root()].take() {
            Some(Slot::Value(v)) => v,
            Some(Slot::AllEntities) | None => RuntimeValue::Entities(self.all_entities()),
        };
        Ok(ExecutionResult {
            answer: render_answer(self.kb, &root),
            root_kind: root.kind(),
            trace,
            outputs,
        })
    }

    fn all_entities(&self) -> EntitySet {
        EntitySet::plain((0..self.kb.entity_count() as u32).map(EntityIdx).collect())
    }
}

struct Evaluator<'e, 'a> {
    kb: &'a KnowledgeBase,
    idx: &'a IndexSet,
    plan: &'e Plan,
    warnings: &'e mut Vec<String>,
}

type EvalResult<T> = Result<T, String>;

fn parse_literal(kind: ValueKind, text: &str) -> EvalResult<ValueLiteral> {
    ValueLiteral::parse_as(kind, text).map_err(|e| e.to_string())
}

fn parse_comparator(text: &str) -> EvalResult<Comparator> {
    text.parse().map_err(|e: crate::kb::ValueError| e.to_string())
}

fn ordering_of(op: &str, greater: &str, less: &str) -> EvalResult<bool> {
    match op.trim() {
        s if s == greater => Ok(true),
        s if s == less => Ok(false),
        other => Err(format!("expected '{greater}' or '{less}', got '{other}'")),
    }
}

impl Evaluator<'_, '_> {
    fn eval(mut self, i: usize, node: &OperatorNode, inputs: Vec<Slot>) -> EvalResult<Slot> {
        use Operator::*;
        let arg = |k: usize| node.inputs[k].as_str();
        let mut inputs = inputs.into_iter();
        let mut next = || inputs.next().expect("arity validated");

        let value = match node.function {
            FindAll => {
                if self.plan.is_deferred(i) {
                    return Ok(Slot::AllEntities);
                }
                RuntimeValue::Entities(EntitySet::plain(
                    (0..self.kb.entity_count() as u32).map(EntityIdx).collect(),
                ))
            }
            Find => {
                let ids = self.idx.entities_named(arg(0));
                if ids.is_empty() {
                    return Err(format!("entity '{}' not found", arg(0)));
                }
                RuntimeValue::Entities(EntitySet::plain(ids.to_vec()))
            }
            FilterConcept => {
                let input = next();
                let out = if self.plan.is_indexed(i) {
                    self.filter_concept_indexed(input, arg(0))?
                } else {
                    self.filter_concept_scan(self.entities(input), arg(0))?
                };
                RuntimeValue::Entities(out)
            }
            FilterStr | FilterNum | FilterYear | FilterDate => {
                let kind = node.function.literal_kind().expect("attribute filter");
                let target = parse_literal(kind, arg(1))?;
                let cmp = if node.function == FilterStr { Comparator::Eq } else { parse_comparator(arg(2))? };
                let input = next();
                let out = if self.plan.is_indexed(i) {
                    self.filter_attr_indexed(input, arg(0), cmp, &target)
                } else {
                    self.filter_attr_scan(&self.entities(input), arg(0), cmp, &target)
                };
                RuntimeValue::Entities(out)
            }
            QFilterStr | QFilterNum | QFilterYear | QFilterDate => {
                let kind = node.function.literal_kind().expect("qualifier filter");
                let target = parse_literal(kind, arg(1))?;
                let cmp = if node.function == QFilterStr { Comparator::Eq } else { parse_comparator(arg(2))? };
                let input = self.entities(next());
                RuntimeValue::Entities(self.filter_qualifier(&input, arg(0), cmp, &target))
            }
            Relate => {
                let relation = self.relation(arg(0))?;
                let direction = Direction::parse(arg(1))
                    .ok_or_else(|| format!("direction must be forward or backward, got '{}'", arg(1)))?;
                let input = self.entities(next());
                RuntimeValue::Entities(self.relate(&input, relation, direction))
            }
            And | Or => {
                let a = self.entities(next());
                let b = self.entities(next());
                let ids = if node.function == And {
                    intersect(a.ids(), b.ids())
                } else {
                    union(a.ids(), b.ids())
                };
                RuntimeValue::Entities(EntitySet::plain(ids))
            }
            QueryName => {
                let set = self.entities(next());
                RuntimeValue::Strings(set.ids().iter().map(|&e| self.kb.entity(e).name.clone()).collect())
            }
            Count => RuntimeValue::Int(self.entities(next()).len() as i64),
            QueryAttr => {
                let set = self.non_empty(next())?;
                let key = self.kb.sym(arg(0));
                RuntimeValue::Values(
                    self.facts_under(&set, key)
                        .map(|(_, _, fact)| fact.value.clone())
                        .collect(),
                )
            }
            QueryAttrUnderCondition => {
                let set = self.non_empty(next())?;
                let key = self.kb.sym(arg(0));
                let qkey = self.kb.sym(arg(1));
                let wanted = arg(2).trim();
                RuntimeValue::Values(
                    self.facts_under(&set, key)
                        .filter(|(_, _, fact)| {
                            qkey.is_some_and(|q| fact.qualifiers.get(q).iter().any(|v| v.to_string() == wanted))
                        })
                        .map(|(_, _, fact)| fact.value.clone())
                        .collect(),
                )
            }
            QueryAttrQualifier => {
                let set = self.non_empty(next())?;
                let key = self.kb.sym(arg(0));
                let qkey = self.kb.sym(arg(2));
                let text = arg(1);
                let mut found = false;
                let mut values = Vec::new();
                for (_, _, fact) in self.facts_under(&set, key) {
                    let matches = ValueLiteral::parse_as(fact.value.kind(), text)
                        .is_ok_and(|v| compare_values(&fact.value, Comparator::Eq, &v));
                    if matches {
                        found = true;
                        if let Some(q) = qkey {
                            values.extend(fact.qualifiers.get(q).iter().cloned());
                        }
                    }
                }
                if !found {
                    return Err(format!("no fact '{}' with value '{}' found", arg(0), text));
                }
                RuntimeValue::Values(values)
            }
            QueryRelation => {
                let a = self.non_empty(next())?;
                let b = self.non_empty(next())?;
                let (head, tail) = (self.first(&a, "first"), self.first(&b, "second"));
                let mut names: Vec<String> = Vec::new();
                for fact in &self.kb.entity(head).relational_facts {
                    if fact.direction == Direction::Forward && fact.object == tail {
                        let name = self.kb.sym_name(fact.relation);
                        if !names.iter().any(|n| n == name) {
                            names.push(name.to_string());
                        }
                    }
                }
                RuntimeValue::Strings(names)
            }
            QueryRelationQualifier => {
                let relation = self.relation(arg(0))?;
                let a = self.non_empty(next())?;
                let b = self.non_empty(next())?;
                let (head, tail) = (self.first(&a, "first"), self.first(&b, "second"));
                let qkey = self.kb.sym(arg(1));
                let mut found = false;
                let mut values = Vec::new();
                for fact in &self.kb.entity(head).relational_facts {
                    if fact.relation == relation && fact.direction == Direction::Forward && fact.object == tail {
                        found = true;
                        if let Some(q) = qkey {
                            values.extend(fact.qualifiers.get(q).iter().cloned());
                        }
                    }
                }
                if !found {
                    return Err(format!(
                        "no '{}' fact from {} to {}",
                        arg(0),
                        self.kb.entity(head).name,
                        self.kb.entity(tail).name
                    ));
                }
                RuntimeValue::Values(values)
            }
            VerifyStr | VerifyNum | VerifyYear | VerifyDate => {
                let kind = node.function.literal_kind().expect("verify");
                let target = parse_literal(kind, arg(0))?;
                let cmp = if node.function == VerifyStr { Comparator::Eq } else { parse_comparator(arg(1))? };
                let values = match next() {
                    Slot::Value(RuntimeValue::Values(v)) => v,
                    _ => unreachable!("validated VALUE input"),
                };
                RuntimeValue::Bool(!values.is_empty() && values.iter().all(|v| compare_values(v, cmp, &target)))
            }
            SelectBetween => {
                let largest = ordering_of(arg(1), "greater", "less")?;
                let a = self.entities(next());
                let b = self.entities(next());
                let mut candidates = Vec::new();
                if !a.is_empty() {
                    candidates.push(self.first(&a, "first"));
                }
                if !b.is_empty() {
                    candidates.push(self.first(&b, "second"));
                }
                let best = self.select_extreme(&candidates, arg(0), largest)?;
                RuntimeValue::Strings(vec![self.kb.entity(best[0]).name.clone()])
            }
            SelectAmong => {
                let largest = ordering_of(arg(1), "largest", "smallest")?;
                let set = self.entities(next());
                let best = self.select_extreme(set.ids(), arg(0), largest)?;
                RuntimeValue::Strings(best.iter().map(|&e| self.kb.entity(e).name.clone()).collect())
            }
        };
        Ok(Slot::Value(value))
    }

    fn entities(&self, slot: Slot) -> EntitySet {
        match slot {
            Slot::Value(RuntimeValue::Entities(set)) => set,
            Slot::AllEntities => EntitySet::plain((0..self.kb.entity_count() as u32).map(EntityIdx).collect()),
            Slot::Value(other) => unreachable!("validated entity input, got {:?}", other.kind()),
        }
    }

    fn non_empty(&self, slot: Slot) -> EvalResult<EntitySet> {
        let set = self.entities(slot);
        if set.is_empty() {
            return Err("empty input: no entity to operate on".to_string());
        }
        Ok(set)
    }

    /// First member of a side that should hold one entity; warns otherwise.
    fn first(&mut self, set: &EntitySet, side: &str) -> EntityIdx {
        if set.len() > 1 {
            self.warnings.push(format!(
                "{side} input has {} entities; using the first ({})",
                set.len(),
                self.kb.entity(set.ids()[0]).name
            ));
        }
        set.ids()[0]
    }

    fn relation(&self, name: &str) -> EvalResult<Sym> {
        self.kb
            .sym(name)
            .filter(|_| self.kb.is_relation(name))
            .ok_or_else(|| format!("unknown relation '{name}'"))
    }

    /// Literal facts under `key` of each member, in member then fact order.
    fn facts_under<'s>(
        &'s self,
        set: &'s EntitySet,
        key: Option<Sym>,
    ) -> impl Iterator<Item = (EntityIdx, u32, &'s crate::kb::LiteralFact)> + 's {
        set.ids().iter().flat_map(move |&e| {
            self.kb.entity(e).literal_facts.iter().enumerate().filter_map(move |(pos, fact)| {
                (Some(fact.key) == key).then_some((e, pos as u32, fact))
            })
        })
    }

    fn filter_concept_indexed(&self, input: Slot, name: &str) -> EvalResult<EntitySet> {
        let extension = self
            .idx
            .extension_of_name(name)
            .ok_or_else(|| format!("unknown concept '{name}'"))?;
        Ok(match input {
            Slot::AllEntities => EntitySet::plain(extension),
            Slot::Value(RuntimeValue::Entities(set)) => set.intersect_sorted(&extension),
            Slot::Value(_) => unreachable!("validated entity input"),
        })
    }

    fn filter_concept_scan(&self, set: EntitySet, name: &str) -> EvalResult<EntitySet> {
        let named = self.idx.concepts_named(name);
        if named.is_empty() {
            return Err(format!("unknown concept '{name}'"));
        }
        let mut accepted = vec![false; self.kb.concepts().len()];
        for &c in named {
            for d in self.kb.descendants_of(c) {
                accepted[d.index()] = true;
            }
        }
        Ok(set.retain_members(|e| self.kb.entity(e).instance_of.iter().any(|c| accepted[c.index()])))
    }

    fn filter_attr_indexed(&self, input: Slot, key: &str, cmp: Comparator, target: &ValueLiteral) -> EntitySet {
        let hits = self.idx.lookup_attribute(self.kb, key, cmp, target);
        let pairs = |hits: Vec<(EntityIdx, u32)>| -> Vec<(EntityIdx, FactRef)> {
            hits.into_iter()
                .map(|(e, index)| (e, FactRef::Literal { owner: e, index }))
                .collect()
        };
        match input {
            Slot::AllEntities => EntitySet::from_sorted_pairs(pairs(hits)),
            Slot::Value(RuntimeValue::Entities(set)) => {
                let members = set.ids();
                let mut j = 0;
                let kept = hits
                    .into_iter()
                    .filter(|&(e, _)| {
                        while j < members.len() && members[j] < e {
                            j += 1;
                        }
                        j < members.len() && members[j] == e
                    })
                    .collect();
                EntitySet::from_sorted_pairs(pairs(kept))
            }
            Slot::Value(_) => unreachable!("validated entity input"),
        }
    }

    fn filter_attr_scan(&self, set: &EntitySet, key: &str, cmp: Comparator, target: &ValueLiteral) -> EntitySet {
        let key = self.kb.sym(key);
        let pairs = self
            .facts_under(set, key)
            .filter(|(_, _, fact)| compare_values(&fact.value, cmp, target))
            .map(|(e, index, _)| (e, FactRef::Literal { owner: e, index }))
            .collect();
        EntitySet::from_sorted_pairs(pairs)
    }

    fn filter_qualifier(&self, set: &EntitySet, qkey: &str, cmp: Comparator, target: &ValueLiteral) -> EntitySet {
        let Some(qkey) = self.kb.sym(qkey) else {
            return EntitySet::with_facts(Vec::new());
        };
        let mut pairs = Vec::new();
        for (e, facts) in set.iter_bound() {
            for &fact in facts {
                if self
                    .kb
                    .qualifiers(fact)
                    .get(qkey)
                    .iter()
                    .any(|v| compare_values(v, cmp, target))
                {
                    pairs.push((e, fact));
                }
            }
        }
        EntitySet::from_sorted_pairs(pairs)
    }

    fn relate(&self, set: &EntitySet, relation: Sym, direction: Direction) -> EntitySet {
        let mut pairs = Vec::new();
        for &e in set.ids() {
            for (pos, fact) in self.kb.entity(e).relational_facts.iter().enumerate() {
                if fact.relation == relation && fact.direction == direction {
                    pairs.push((
                        fact.object,
                        FactRef::Relational {
                            owner: e,
                            index: pos as u32,
                        },
                    ));
                }
            }
        }
        EntitySet::with_facts(pairs)
    }

    /// Entities holding the extreme comparable value under `key`. The first
    /// candidate with a value fixes the kind (and unit); others are skipped.
    fn select_extreme(&mut self, candidates: &[EntityIdx], key: &str, largest: bool) -> EvalResult<Vec<EntityIdx>> {
        let sym = self.kb.sym(key);
        let mut scored: Vec<(EntityIdx, &ValueLiteral)> = Vec::new();
        for &e in candidates {
            let value = self.kb.entity(e).literal_facts.iter().find_map(|f| {
                (Some(f.key) == sym && f.value.kind() != ValueKind::String).then_some(&f.value)
            });
            let Some(value) = value else { continue };
            if let Some((_, reference)) = scored.first() {
                if value_ordering(value, reference).is_none() || value.kind() != reference.kind() {
                    self.warnings.push(format!(
                        "skipped {}: '{value}' is not comparable with '{reference}'",
                        self.kb.entity(e).name
                    ));
                    continue;
                }
            }
            scored.push((e, value));
        }
        let Some(&(_, mut best)) = scored.first() else {
            return Err(format!("no candidate has a comparable value for '{key}'"));
        };
        for &(_, v) in &scored[1..] {
            let ord = value_ordering(v, best).unwrap_or(Ordering::Equal);
            if (largest && ord == Ordering::Greater) || (!largest && ord == Ordering::Less) {
                best = v;
            }
        }
        Ok(scored
            .iter()
            .filter(|(_, v)| value_ordering(v, best) == Some(Ordering::Equal))
            .map(|(e, _)| *e)
            .collect())
    }
}

fn intersect(a: &[EntityIdx], b: &[EntityIdx]) -> Vec<EntityIdx> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union(a: &[EntityIdx], b: &[EntityIdx]) -> Vec<EntityIdx> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x < y => {
                i += 1;
                *x
            }
            (Some(x), Some(y)) if x > y => {
                j += 1;
                *y
            }
            (Some(x), Some(_)) => {
                i += 1;
                j += 1;
                *x
            }
            (Some(x), None) => {
                i += 1;
                *x
            }
            (None, Some(y)) => {
                j += 1;
                *y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}
