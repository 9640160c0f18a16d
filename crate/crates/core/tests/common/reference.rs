//! Naive interpreter written straight from the operator definitions: no
//! indices, no fusion, and its own value comparison. Used as an oracle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use kopl_core::kb::{Direction, EntityIdx, FactRef, KnowledgeBase, ValueKind, ValueLiteral};
use kopl_core::{Operator, Program};

use super::Observed;

#[derive(Debug, Clone, PartialEq)]
pub enum RefValue {
    /// Members in ascending order; `None` bindings for plain sets.
    Entities(BTreeMap<u32, BTreeSet<FactRef>>, bool),
    Values(Vec<ValueLiteral>),
    Strings(Vec<String>),
    Int(i64),
    Bool(bool),
}

impl RefValue {
    pub fn observe(&self) -> Observed {
        match self {
            RefValue::Entities(map, bound) => Observed::Entities {
                ids: map.keys().copied().collect(),
                facts: bound.then(|| map.values().map(|f| f.iter().copied().collect()).collect()),
            },
            RefValue::Values(v) => Observed::Values(v.iter().map(|x| format!("{x:?}")).collect()),
            RefValue::Strings(v) => Observed::Strings(v.clone()),
            RefValue::Int(n) => Observed::Int(*n),
            RefValue::Bool(b) => Observed::Bool(*b),
        }
    }

    pub fn render(&self, kb: &KnowledgeBase) -> String {
        let list = |items: Vec<String>| if items.is_empty() { "no answer".to_string() } else { items.join("; ") };
        match self {
            RefValue::Bool(true) => "Yes".into(),
            RefValue::Bool(false) => "No".into(),
            RefValue::Int(n) => n.to_string(),
            RefValue::Strings(v) => list(v.clone()),
            RefValue::Values(v) => list(v.iter().map(|x| x.to_string()).collect()),
            RefValue::Entities(map, _) => list(map.keys().map(|&e| kb.entity(EntityIdx(e)).name.clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefError {
    pub node: usize,
    pub message: String,
}

pub struct RefRun {
    pub answer: String,
    pub outputs: Vec<RefValue>,
}

fn cmp_holds(op: &str, ord: Ordering) -> bool {
    match op {
        "=" => ord == Ordering::Equal,
        "!=" => ord != Ordering::Equal,
        "<" => ord == Ordering::Less,
        ">" => ord == Ordering::Greater,
        _ => false,
    }
}

/// Order of two values where defined: same-unit quantities, strings only for
/// equality, years and dates by calendar year when mixed.
fn order(a: &ValueLiteral, b: &ValueLiteral) -> Option<Ordering> {
    use ValueLiteral::*;
    match (a, b) {
        (String(x), String(y)) => Some(if x == y { Ordering::Equal } else { Ordering::Less }),
        (Quantity { amount: x, unit: u }, Quantity { amount: y, unit: v }) if u == v => x.partial_cmp(y),
        (Year(x), Year(y)) => Some(x.cmp(y)),
        (Date(x), Date(y)) => Some(x.cmp(y)),
        (Year(x), Date(d)) => Some(x.cmp(&d.year())),
        (Date(d), Year(y)) => Some(d.year().cmp(y)),
        _ => None,
    }
}

pub fn holds(a: &ValueLiteral, op: &str, b: &ValueLiteral) -> bool {
    if let (ValueLiteral::String(x), ValueLiteral::String(y)) = (a, b) {
        return match op {
            "=" => x == y,
            "!=" => x != y,
            _ => false,
        };
    }
    match order(a, b) {
        Some(ord) => cmp_holds(op, ord),
        None => op == "!=",
    }
}

fn literal(kind: ValueKind, text: &str) -> Result<ValueLiteral, String> {
    ValueLiteral::parse_as(kind, text).map_err(|e| e.to_string())
}

fn concept_matches(kb: &KnowledgeBase, entity: EntityIdx, name: &str) -> bool {
    // Walk up from each type; any ancestor (or itself) with the name matches.
    let mut stack: Vec<_> = kb.entity(entity).instance_of.clone();
    let mut seen = BTreeSet::new();
    while let Some(c) = stack.pop() {
        if !seen.insert(c) {
            continue;
        }
        let record = kb.concept(c);
        if record.name == name {
            return true;
        }
        stack.extend(record.subclass_of.iter().copied());
    }
    false
}

fn ids(v: &RefValue) -> Vec<u32> {
    match v {
        RefValue::Entities(map, _) => map.keys().copied().collect(),
        other => panic!("expected entities, got {other:?}"),
    }
}

fn bound(pairs: impl IntoIterator<Item = (u32, FactRef)>) -> RefValue {
    let mut map: BTreeMap<u32, BTreeSet<FactRef>> = BTreeMap::new();
    for (e, f) in pairs {
        map.entry(e).or_default().insert(f);
    }
    RefValue::Entities(map, true)
}

fn plain(ids: impl IntoIterator<Item = u32>) -> RefValue {
    RefValue::Entities(ids.into_iter().map(|e| (e, BTreeSet::new())).collect(), false)
}

pub fn run(kb: &KnowledgeBase, program: &Program) -> Result<RefRun, RefError> {
    let n = program.len();
    let mut outputs: Vec<Option<RefValue>> = vec![None; n];
    // Lowest ready index first, found by rescanning.
    for _ in 0..n {
        let i = (0..n)
            .find(|&i| outputs[i].is_none() && program.node(i).dependencies.iter().all(|&d| outputs[d].is_some()))
            .expect("acyclic program");
        let deps: Vec<RefValue> = program.node(i).dependencies.iter().map(|&d| outputs[d].clone().unwrap()).collect();
        let value = eval(kb, program, i, &deps).map_err(|message| RefError { node: i, message })?;
        outputs[i] = Some(value);
    }
    let outputs: Vec<RefValue> = outputs.into_iter().map(Option::unwrap).collect();
    Ok(RefRun {
        answer: outputs[program.root()].render(kb),
        outputs,
    })
}

fn eval(kb: &KnowledgeBase, program: &Program, i: usize, deps: &[RefValue]) -> Result<RefValue, String> {
    use Operator::*;
    let node = program.node(i);
    let arg = |k: usize| node.inputs[k].as_str();
    let all = || (0..kb.entity_count() as u32).collect::<Vec<_>>();
    let lits = |e: u32| kb.entity(EntityIdx(e)).literal_facts.iter().enumerate();
    let key_of = |f: &kopl_core::kb::LiteralFact| kb.sym_name(f.key).to_string();
    let name_of = |e: u32| kb.entity(EntityIdx(e)).name.clone();
    let first_nonempty = |v: &RefValue| -> Result<u32, String> { ids(v).first().copied().ok_or_else(|| "empty input".into()) };

    Ok(match node.function {
        FindAll => plain(all()),
        Find => {
            let hits: Vec<u32> = all().into_iter().filter(|&e| name_of(e) == arg(0)).collect();
            if hits.is_empty() {
                return Err("entity not found".into());
            }
            plain(hits)
        }
        FilterConcept => {
            if !kb.concepts().iter().any(|c| c.name == arg(0)) {
                return Err("unknown concept".into());
            }
            match &deps[0] {
                RefValue::Entities(map, b) => RefValue::Entities(
                    map.iter()
                        .filter(|(&e, _)| concept_matches(kb, EntityIdx(e), arg(0)))
                        .map(|(&e, f)| (e, f.clone()))
                        .collect(),
                    *b,
                ),
                _ => unreachable!(),
            }
        }
        FilterStr | FilterNum | FilterYear | FilterDate => {
            let kind = node.function.literal_kind().unwrap();
            let target = literal(kind, arg(1))?;
            let op = if node.function == FilterStr { "=" } else { arg(2) };
            let mut pairs = Vec::new();
            for e in ids(&deps[0]) {
                for (pos, f) in lits(e) {
                    if key_of(f) == arg(0) && holds(&f.value, op, &target) {
                        pairs.push((e, FactRef::Literal { owner: EntityIdx(e), index: pos as u32 }));
                    }
                }
            }
            bound(pairs)
        }
        QFilterStr | QFilterNum | QFilterYear | QFilterDate => {
            let kind = node.function.literal_kind().unwrap();
            let target = literal(kind, arg(1))?;
            let op = if node.function == QFilterStr { "=" } else { arg(2) };
            let RefValue::Entities(map, _) = &deps[0] else { unreachable!() };
            let mut pairs = Vec::new();
            for (&e, facts) in map {
                for &f in facts {
                    let quals = kb.qualifiers(f);
                    let ok = quals
                        .iter()
                        .any(|(k, vs)| kb.sym_name(k) == arg(0) && vs.iter().any(|v| holds(v, op, &target)));
                    if ok {
                        pairs.push((e, f));
                    }
                }
            }
            bound(pairs)
        }
        Relate => {
            let exists = kb
                .entities()
                .iter()
                .any(|e| e.relational_facts.iter().any(|f| kb.sym_name(f.relation) == arg(0)));
            if !exists {
                return Err("unknown relation".into());
            }
            let dir = if arg(1) == "forward" { Direction::Forward } else { Direction::Backward };
            let mut pairs = Vec::new();
            for e in ids(&deps[0]) {
                for (pos, f) in kb.entity(EntityIdx(e)).relational_facts.iter().enumerate() {
                    if kb.sym_name(f.relation) == arg(0) && f.direction == dir {
                        pairs.push((f.object.0, FactRef::Relational { owner: EntityIdx(e), index: pos as u32 }));
                    }
                }
            }
            bound(pairs)
        }
        And => {
            let b: BTreeSet<u32> = ids(&deps[1]).into_iter().collect();
            plain(ids(&deps[0]).into_iter().filter(|e| b.contains(e)))
        }
        Or => {
            let mut s: BTreeSet<u32> = ids(&deps[0]).into_iter().collect();
            s.extend(ids(&deps[1]));
            plain(s)
        }
        QueryName => RefValue::Strings(ids(&deps[0]).into_iter().map(name_of).collect()),
        Count => RefValue::Int(ids(&deps[0]).len() as i64),
        QueryAttr | QueryAttrUnderCondition | QueryAttrQualifier => {
            let members = ids(&deps[0]);
            if members.is_empty() {
                return Err("empty input".into());
            }
            let mut out = Vec::new();
            let mut found = false;
            for e in members {
                for (_, f) in lits(e) {
                    if key_of(f) != arg(0) {
                        continue;
                    }
                    let qual = |k: &str| -> Vec<ValueLiteral> {
                        f.qualifiers
                            .iter()
                            .filter(|(q, _)| kb.sym_name(*q) == k)
                            .flat_map(|(_, vs)| vs.to_vec())
                            .collect()
                    };
                    match node.function {
                        QueryAttr => out.push(f.value.clone()),
                        QueryAttrUnderCondition => {
                            if qual(arg(1)).iter().any(|v| v.to_string() == arg(2).trim()) {
                                out.push(f.value.clone());
                            }
                        }
                        _ => {
                            let same = ValueLiteral::parse_as(f.value.kind(), arg(1))
                                .map(|v| holds(&f.value, "=", &v))
                                .unwrap_or(false);
                            if same {
                                found = true;
                                out.extend(qual(arg(2)));
                            }
                        }
                    }
                }
            }
            if node.function == QueryAttrQualifier && !found {
                return Err("fact not found".into());
            }
            RefValue::Values(out)
        }
        QueryRelation => {
            let head = first_nonempty(&deps[0])?;
            let tail = first_nonempty(&deps[1])?;
            let mut names: Vec<String> = Vec::new();
            for f in &kb.entity(EntityIdx(head)).relational_facts {
                let name = kb.sym_name(f.relation).to_string();
                if f.direction == Direction::Forward && f.object.0 == tail && !names.contains(&name) {
                    names.push(name);
                }
            }
            RefValue::Strings(names)
        }
        QueryRelationQualifier => {
            let exists = kb
                .entities()
                .iter()
                .any(|e| e.relational_facts.iter().any(|f| kb.sym_name(f.relation) == arg(0)));
            if !exists {
                return Err("unknown relation".into());
            }
            let head = first_nonempty(&deps[0])?;
            let tail = first_nonempty(&deps[1])?;
            let mut found = false;
            let mut out = Vec::new();
            for f in &kb.entity(EntityIdx(head)).relational_facts {
                if kb.sym_name(f.relation) == arg(0) && f.direction == Direction::Forward && f.object.0 == tail {
                    found = true;
                    for (q, vs) in f.qualifiers.iter() {
                        if kb.sym_name(q) == arg(1) {
                            out.extend(vs.iter().cloned());
                        }
                    }
                }
            }
            if !found {
                return Err("fact not found".into());
            }
            RefValue::Values(out)
        }
        VerifyStr | VerifyNum | VerifyYear | VerifyDate => {
            let target = literal(node.function.literal_kind().unwrap(), arg(0))?;
            let op = if node.function == VerifyStr { "=" } else { arg(1) };
            let RefValue::Values(values) = &deps[0] else { unreachable!() };
            RefValue::Bool(!values.is_empty() && values.iter().all(|v| holds(v, op, &target)))
        }
        SelectBetween | SelectAmong => {
            let candidates: Vec<u32> = if node.function == SelectBetween {
                deps.iter().filter_map(|d| ids(d).first().copied()).collect()
            } else {
                ids(&deps[0])
            };
            let largest = matches!(arg(1), "greater" | "largest");
            let mut scored: Vec<(u32, ValueLiteral)> = Vec::new();
            for e in candidates {
                let Some(v) = lits(e)
                    .map(|(_, f)| f)
                    .find(|f| key_of(f) == arg(0) && f.value.kind() != ValueKind::String)
                    .map(|f| f.value.clone())
                else {
                    continue;
                };
                if let Some((_, first)) = scored.first() {
                    if first.kind() != v.kind() || order(&v, first).is_none() {
                        continue;
                    }
                }
                scored.push((e, v));
            }
            if scored.is_empty() {
                return Err("no candidate".into());
            }
            let mut best = scored[0].1.clone();
            for (_, v) in &scored {
                let ord = order(v, &best).unwrap();
                if (largest && ord == Ordering::Greater) || (!largest && ord == Ordering::Less) {
                    best = v.clone();
                }
            }
            let winners: Vec<String> = scored
                .iter()
                .filter(|(_, v)| order(v, &best) == Some(Ordering::Equal))
                .map(|(e, _)| name_of(*e))
                .collect();
            if node.function == SelectBetween {
                RefValue::Strings(winners.into_iter().take(1).collect())
            } else {
                RefValue::Strings(winners)
            }
        }
    })
}
