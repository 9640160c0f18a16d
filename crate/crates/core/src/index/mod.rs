//! Inverted indices over a [`KnowledgeBase`]: entity and concept names,
//! attribute values (hashed for strings, sorted for ordered kinds), concept
//! extensions, and prefix-searchable completion stores for the KB schema.

mod backend;
mod bench;
mod trie;
mod tst;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{
    compare_values, Comparator, ConceptIdx, EntityIdx, KnowledgeBase, Sym, ValueLiteral,
};

pub use backend::{IndexBackendKind, NameMap};
pub use bench::{bench_backends, BackendReport, BackendRow};
pub use trie::Trie;
pub use tst::TernaryTree;

/// One literal fact: owning entity and position in its `literal_facts`.
pub type FactHit = (EntityIdx, u32);

/// Joins attribute key and string value in the string index.
const KEY_VALUE_SEP: char = '\u{1f}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaKind {
    Entity,
    Concept,
    Relation,
    Attribute,
    QualifierKey,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 5] = [
        SchemaKind::Entity,
        SchemaKind::Concept,
        SchemaKind::Relation,
        SchemaKind::Attribute,
        SchemaKind::QualifierKey,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaKind::Entity => "entity",
            SchemaKind::Concept => "concept",
            SchemaKind::Relation => "relation",
            SchemaKind::Attribute => "attribute",
            SchemaKind::QualifierKey => "qualifier-key",
        }
    }
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaKind {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entity" => Ok(SchemaKind::Entity),
            "concept" => Ok(SchemaKind::Concept),
            "relation" => Ok(SchemaKind::Relation),
            "attribute" | "key" => Ok(SchemaKind::Attribute),
            "qualifier-key" | "qualifier_key" | "qualifier" | "qkey" => Ok(SchemaKind::QualifierKey),
            other => Err(IndexError::UnknownSchemaKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("unknown schema kind '{0}'")]
    UnknownSchemaKind(String),
    #[error("completion limit must be at least 1")]
    InvalidLimit,
}

/// Sorted literal facts under one attribute key.
/// Ascending (amount, entity, position) entries for one unit.
type UnitSeq = (Arc<str>, Vec<(f64, EntityIdx, u32)>);

#[derive(Debug, Clone, Default)]
struct KeyIndex {
    /// Every fact under the key, in (entity, position) order.
    facts: Vec<FactHit>,
    /// One ascending sequence per unit.
    quantities: Vec<UnitSeq>,
    years: Vec<(i32, EntityIdx, u32)>,
    dates: Vec<(NaiveDate, EntityIdx, u32)>,
}

impl KeyIndex {
    fn quantity_seq(&self, unit: &str) -> &[(f64, EntityIdx, u32)] {
        self.quantities
            .iter()
            .find(|(u, _)| &**u == unit)
            .map(|(_, seq)| seq.as_slice())
            .unwrap_or(&[])
    }

    pub fn units(&self) -> impl Iterator<Item = &str> {
        self.quantities.iter().map(|(u, _)| &**u)
    }
}

/// Sub-slice of an ascending sequence satisfying `cmp` against a target.
/// `position` orders an element relative to the target and must be
/// monotone along the sequence.
fn select_range<T>(seq: &[T], cmp: Comparator, position: impl Fn(&T) -> Ordering) -> &[T] {
    let lower = seq.partition_point(|e| position(e) == Ordering::Less);
    let upper = seq.partition_point(|e| position(e) != Ordering::Greater);
    match cmp {
        Comparator::Eq => &seq[lower..upper],
        Comparator::Lt => &seq[..lower],
        Comparator::Gt => &seq[upper..],
        Comparator::Ne => unreachable!("!= is answered by scan"),
    }
}

/// Case-insensitive completion store for one schema kind.
#[derive(Debug, Clone)]
struct CompletionStore {
    /// Lowercased name to the original spellings, sorted.
    names: NameMap<Vec<Box<str>>>,
}

impl CompletionStore {
    fn build<'a>(backend: IndexBackendKind, names: impl Iterator<Item = &'a str>) -> Self {
        let mut grouped: HashMap<String, Vec<Box<str>>> = HashMap::new();
        for name in names {
            grouped.entry(name.to_lowercase()).or_default().push(name.into());
        }
        let entries = grouped
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_unstable();
                v.dedup();
                (k, v)
            })
            .collect();
        CompletionStore {
            names: NameMap::build(backend, entries),
        }
    }

    fn complete(&self, prefix: &str, limit: usize) -> Vec<String> {
        let needle = prefix.to_lowercase();
        let mut prefixed: Vec<&str> = Vec::new();
        self.names
            .for_each_prefixed(&needle, |_, originals| prefixed.extend(originals.iter().map(|s| &**s)));
        prefixed.sort_unstable();
        prefixed.dedup();
        let mut out: Vec<String> = prefixed.iter().take(limit).map(|s| s.to_string()).collect();
        if out.len() < limit && !needle.is_empty() {
            let mut inner: Vec<&str> = Vec::new();
            self.names.for_each_prefixed("", |key, originals| {
                if !key.starts_with(&needle) && key.contains(&needle) {
                    inner.extend(originals.iter().map(|s| &**s));
                }
            });
            inner.sort_unstable();
            inner.dedup();
            out.extend(inner.into_iter().take(limit - out.len()).map(str::to_string));
        }
        out
    }
}

/// All indices over one knowledge base. Immutable once built.
#[derive(Debug, Clone)]
pub struct IndexSet {
    backend: IndexBackendKind,
    name_index: NameMap<Vec<EntityIdx>>,
    concept_name_index: NameMap<Vec<ConceptIdx>>,
    attr_string_index: NameMap<Vec<FactHit>>,
    attr_ordered_index: NameMap<KeyIndex>,
    concept_extension: Vec<Vec<EntityIdx>>,
    completion: Vec<CompletionStore>,
}

/// Builds every index for `kb` using `backend` for the string-keyed maps.
pub fn build_indices(kb: &KnowledgeBase, backend: IndexBackendKind) -> IndexSet {
    IndexSet::build(kb, backend)
}

impl IndexSet {
    pub fn build(kb: &KnowledgeBase, backend: IndexBackendKind) -> Self {
        let mut names: HashMap<&str, Vec<EntityIdx>> = HashMap::new();
        let mut strings: HashMap<(Sym, &str), Vec<FactHit>> = HashMap::new();
        let mut keys: HashMap<Sym, KeyIndex> = HashMap::new();
        for (i, entity) in kb.entities().iter().enumerate() {
            let e = EntityIdx(i as u32);
            names.entry(entity.name.as_str()).or_default().push(e);
            for (pos, fact) in entity.literal_facts.iter().enumerate() {
                let pos = pos as u32;
                let slot = keys.entry(fact.key).or_default();
                slot.facts.push((e, pos));
                match &fact.value {
                    ValueLiteral::String(s) => strings.entry((fact.key, &**s)).or_default().push((e, pos)),
                    ValueLiteral::Quantity { amount, unit } => {
                        match slot.quantities.iter_mut().find(|(u, _)| u == unit) {
                            Some((_, seq)) => seq.push((*amount, e, pos)),
                            None => slot.quantities.push((unit.clone(), vec![(*amount, e, pos)])),
                        }
                    }
                    ValueLiteral::Year(y) => slot.years.push((*y, e, pos)),
                    ValueLiteral::Date(d) => slot.dates.push((*d, e, pos)),
                }
            }
        }
        for slot in keys.values_mut() {
            slot.quantities.sort_by(|a, b| a.0.cmp(&b.0));
            for (_, seq) in &mut slot.quantities {
                seq.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
            }
            slot.years.sort_unstable();
            slot.dates.sort_unstable();
        }

        let mut concept_names: HashMap<&str, Vec<ConceptIdx>> = HashMap::new();
        for (i, c) in kb.concepts().iter().enumerate() {
            concept_names.entry(c.name.as_str()).or_default().push(ConceptIdx(i as u32));
        }

        let sym_names = |syms: &[Sym]| -> Vec<&str> { syms.iter().map(|s| kb.sym_name(*s)).collect() };
        let completion = SchemaKind::ALL
            .iter()
            .map(|kind| match kind {
                SchemaKind::Entity => CompletionStore::build(backend, names.keys().copied()),
                SchemaKind::Concept => CompletionStore::build(backend, concept_names.keys().copied()),
                SchemaKind::Relation => {
                    CompletionStore::build(backend, sym_names(kb.relation_names()).into_iter())
                }
                SchemaKind::Attribute => {
                    CompletionStore::build(backend, sym_names(kb.attribute_keys()).into_iter())
                }
                SchemaKind::QualifierKey => {
                    CompletionStore::build(backend, sym_names(kb.qualifier_keys()).into_iter())
                }
            })
            .collect();

        IndexSet {
            backend,
            name_index: NameMap::build(
                backend,
                names.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            ),
            concept_name_index: NameMap::build(
                backend,
                concept_names.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            ),
            attr_string_index: NameMap::build(
                backend,
                strings
                    .into_iter()
                    .map(|((key, value), hits)| (string_key(kb.sym_name(key), value), hits))
                    .collect(),
            ),
            attr_ordered_index: NameMap::build(
                backend,
                keys.into_iter().map(|(k, v)| (kb.sym_name(k).to_string(), v)).collect(),
            ),
            concept_extension: concept_extensions(kb),
            completion,
        }
    }

    pub fn backend(&self) -> IndexBackendKind {
        self.backend
    }

    /// Entities named exactly `name`, ascending.
    pub fn entities_named(&self, name: &str) -> &[EntityIdx] {
        self.name_index.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn concepts_named(&self, name: &str) -> &[ConceptIdx] {
        self.concept_name_index.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Entities typed by `concept` or any of its transitive subclasses, ascending.
    pub fn concept_extension(&self, concept: ConceptIdx) -> &[EntityIdx] {
        &self.concept_extension[concept.index()]
    }

    /// Union of the extensions of every concept called `name`, or `None` if
    /// no concept has that name.
    pub fn extension_of_name(&self, name: &str) -> Option<Vec<EntityIdx>> {
        let concepts = self.concepts_named(name);
        match concepts {
            [] => None,
            [only] => Some(self.concept_extension(*only).to_vec()),
            many => {
                let mut all: Vec<EntityIdx> = many
                    .iter()
                    .flat_map(|c| self.concept_extension(*c).iter().copied())
                    .collect();
                all.sort_unstable();
                all.dedup();
                Some(all)
            }
        }
    }

    /// Literal facts under `key` whose value satisfies `cmp` against `value`,
    /// sorted by (entity, position). `!=` scans the key's facts; the other
    /// comparators use the hashed or sorted indices.
    pub fn lookup_attribute(
        &self,
        kb: &KnowledgeBase,
        key: &str,
        cmp: Comparator,
        value: &ValueLiteral,
    ) -> Vec<FactHit> {
        let Some(slot) = self.attr_ordered_index.get(key) else {
            return Vec::new();
        };
        if cmp == Comparator::Ne {
            return slot
                .facts
                .iter()
                .copied()
                .filter(|&(e, pos)| compare_values(&kb.literal_fact(e, pos).value, cmp, value))
                .collect();
        }
        let mut hits: Vec<FactHit> = match value {
            ValueLiteral::String(s) => {
                if cmp != Comparator::Eq {
                    return Vec::new();
                }
                return self
                    .attr_string_index
                    .get(&string_key(key, s))
                    .cloned()
                    .unwrap_or_default();
            }
            ValueLiteral::Quantity { amount, unit } => {
                select_range(slot.quantity_seq(unit), cmp, |(a, _, _)| a.total_cmp(amount))
                    .iter()
                    .map(|&(_, e, p)| (e, p))
                    .collect()
            }
            ValueLiteral::Year(y) => {
                let years = select_range(&slot.years, cmp, |(v, _, _)| v.cmp(y));
                let dates = select_range(&slot.dates, cmp, |(d, _, _)| d.year().cmp(y));
                years.iter().map(|&(_, e, p)| (e, p)).chain(dates.iter().map(|&(_, e, p)| (e, p))).collect()
            }
            ValueLiteral::Date(d) => {
                let dates = select_range(&slot.dates, cmp, |(v, _, _)| v.cmp(d));
                let years = select_range(&slot.years, cmp, |(v, _, _)| v.cmp(&d.year()));
                dates.iter().map(|&(_, e, p)| (e, p)).chain(years.iter().map(|&(_, e, p)| (e, p))).collect()
            }
        };
        hits.sort_unstable();
        hits
    }

    /// Number of ordered sequences stored for quantities under `key`, one per unit.
    pub fn quantity_units(&self, key: &str) -> Vec<String> {
        self.attr_ordered_index
            .get(key)
            .map(|slot| slot.units().map(str::to_string).collect())
            .unwrap_or_default()
    }

    /// Number of distinct attribute keys with at least one fact.
    pub fn attribute_key_count(&self) -> usize {
        self.attr_ordered_index.len()
    }

    /// Number of distinct (key, string value) pairs.
    pub fn string_value_count(&self) -> usize {
        self.attr_string_index.len()
    }

    /// Ranked completion candidates: case-insensitive prefix matches first,
    /// then substring matches, each group in lexicographic order.
    pub fn complete(&self, kind: SchemaKind, prefix: &str, limit: usize) -> Result<Vec<String>, IndexError> {
        if limit == 0 {
            return Err(IndexError::InvalidLimit);
        }
        let store = &self.completion[SchemaKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)];
        Ok(store.complete(prefix, limit))
    }
}

fn string_key(key: &str, value: &str) -> String {
    let mut s = String::with_capacity(key.len() + value.len() + 1);
    s.push_str(key);
    s.push(KEY_VALUE_SEP);
    s.push_str(value);
    s
}

fn concept_extensions(kb: &KnowledgeBase) -> Vec<Vec<EntityIdx>> {
    let n = kb.concepts().len();
    // Reflexive-transitive ancestors of each concept.
    let mut ancestors: Vec<Option<Vec<ConceptIdx>>> = vec![None; n];
    fn fill(kb: &KnowledgeBase, c: ConceptIdx, memo: &mut Vec<Option<Vec<ConceptIdx>>>) {
        if memo[c.index()].is_some() {
            return;
        }
        let mut acc = vec![c];
        for &parent in &kb.concept(c).subclass_of {
            fill(kb, parent, memo);
            acc.extend(memo[parent.index()].as_ref().expect("filled").iter().copied());
        }
        acc.sort_unstable();
        acc.dedup();
        memo[c.index()] = Some(acc);
    }
    for c in 0..n {
        fill(kb, ConceptIdx(c as u32), &mut ancestors);
    }
    let mut ext: Vec<Vec<EntityIdx>> = vec![Vec::new(); n];
    for (i, entity) in kb.entities().iter().enumerate() {
        let e = EntityIdx(i as u32);
        for c in &entity.instance_of {
            for a in ancestors[c.index()].as_ref().expect("filled") {
                let list = &mut ext[a.index()];
                if list.last() != Some(&e) {
                    list.push(e);
                }
            }
        }
    }
    ext
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{KbDump, ValueKind};

    fn kb(json: &str) -> KnowledgeBase {
        let dump: KbDump = serde_json::from_str(json).unwrap();
        KnowledgeBase::from_dump(dump).unwrap()
    }

    fn mixed_units() -> KnowledgeBase {
        kb(r#"{"entities":{
            "a":{"name":"A","attributes":[{"key":"area","value":{"type":"quantity","value":10,"unit":"km²"}}]},
            "b":{"name":"B","attributes":[{"key":"area","value":{"type":"quantity","value":5,"unit":"mi²"}}]},
            "c":{"name":"C","attributes":[{"key":"area","value":{"type":"quantity","value":20,"unit":"km²"}},
                                          {"key":"founded","value":{"type":"date","value":"2020-06-01"}}]},
            "d":{"name":"D","attributes":[{"key":"founded","value":{"type":"year","value":2020}},
                                          {"key":"motto","value":{"type":"string","value":"x"}}]}}}"#)
    }

    fn ids(kb: &KnowledgeBase, hits: &[FactHit]) -> Vec<String> {
        hits.iter().map(|(e, _)| kb.entity(*e).id.clone()).collect()
    }

    #[test]
    fn quantities_partitioned_by_unit() {
        let kb = mixed_units();
        let idx = build_indices(&kb, IndexBackendKind::Hashing);
        assert_eq!(idx.quantity_units("area"), ["km²", "mi²"]);
        let gt = idx.lookup_attribute(&kb, "area", Comparator::Gt, &ValueLiteral::quantity(1.0, "km²"));
        assert_eq!(ids(&kb, &gt), ["a", "c"]);
        let ne = idx.lookup_attribute(&kb, "area", Comparator::Ne, &ValueLiteral::quantity(10.0, "km²"));
        assert_eq!(ids(&kb, &ne), ["b", "c"]);
    }

    #[test]
    fn year_lookup_projects_dates() {
        let kb = mixed_units();
        let idx = build_indices(&kb, IndexBackendKind::Trie);
        let eq = idx.lookup_attribute(&kb, "founded", Comparator::Eq, &ValueLiteral::Year(2020));
        assert_eq!(ids(&kb, &eq), ["c", "d"]);
        let date = ValueLiteral::parse_as(ValueKind::Date, "2020-01-01").unwrap();
        let gt = idx.lookup_attribute(&kb, "founded", Comparator::Gt, &date);
        assert_eq!(ids(&kb, &gt), ["c"]);
    }

    #[test]
    fn absent_key_and_string_order_comparators() {
        let kb = mixed_units();
        let idx = build_indices(&kb, IndexBackendKind::BalancedTree);
        assert!(idx
            .lookup_attribute(&kb, "colour", Comparator::Eq, &ValueLiteral::string("x"))
            .is_empty());
        assert!(idx
            .lookup_attribute(&kb, "motto", Comparator::Lt, &ValueLiteral::string("y"))
            .is_empty());
        let eq = idx.lookup_attribute(&kb, "motto", Comparator::Eq, &ValueLiteral::string("x"));
        assert_eq!(ids(&kb, &eq), ["d"]);
    }

    #[test]
    fn empty_kb_has_empty_indices() {
        let kb = kb(r#"{"concepts":{},"entities":{}}"#);
        for backend in IndexBackendKind::ALL {
            let idx = build_indices(&kb, backend);
            assert_eq!(idx.attribute_key_count(), 0);
            assert_eq!(idx.string_value_count(), 0);
            for kind in SchemaKind::ALL {
                assert!(idx.complete(kind, "", 10).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn concept_extension_follows_subclasses() {
        let kb = kb(r#"{"concepts":{"A":{"name":"a"},"B":{"name":"b","subclassOf":["A"]},
                                    "C":{"name":"c","subclassOf":["A"]},"D":{"name":"d","subclassOf":["B","C"]}},
                        "entities":{"x":{"name":"X","instanceOf":["D"]},"y":{"name":"Y","instanceOf":["B"]},
                                    "z":{"name":"Z","instanceOf":["A","D"]}}}"#);
        let idx = build_indices(&kb, IndexBackendKind::Hashing);
        let named = |n: &str| -> Vec<String> {
            idx.extension_of_name(n)
                .unwrap()
                .iter()
                .map(|e| kb.entity(*e).id.clone())
                .collect()
        };
        assert_eq!(named("a"), ["x", "y", "z"]);
        assert_eq!(named("c"), ["x", "z"]);
        assert_eq!(named("d"), ["x", "z"]);
        assert!(idx.extension_of_name("q").is_none());
    }

    #[test]
    fn completion_ranking_and_errors() {
        let kb = kb(r#"{"entities":{
            "a":{"name":"Share","relations":[{"relation":"shares border with","direction":"forward","object":"b"},
                                            {"relation":"timeshare of","direction":"forward","object":"b"},
                                            {"relation":"Shared by","direction":"forward","object":"b"}]},
            "b":{"name":"b"}}}"#);
        for backend in IndexBackendKind::ALL {
            let idx = build_indices(&kb, backend);
            assert_eq!(
                idx.complete(SchemaKind::Relation, "share", 10).unwrap(),
                ["Shared by", "shares border with", "timeshare of"]
            );
            assert_eq!(idx.complete(SchemaKind::Relation, "SHARE", 2).unwrap(), ["Shared by", "shares border with"]);
            assert!(idx.complete(SchemaKind::Concept, "zzz", 3).unwrap().is_empty());
            assert_eq!(idx.complete(SchemaKind::Entity, "", 1).unwrap(), ["Share"]);
            assert_eq!(idx.complete(SchemaKind::Entity, "x", 0), Err(IndexError::InvalidLimit));
        }
        assert!("colour".parse::<SchemaKind>().is_err());
    }
}
