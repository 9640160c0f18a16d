//! Knowledge-base data model: entities, concepts, literal and relational
//! facts with qualifiers, held in an immutable in-memory store.

mod dump;
mod value;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dump::{AttributeDump, ConceptDump, EntityDump, KbDump, OneOrMany, OrderedMap, RelationDump, ValueDump};
pub use value::{compare_values, value_ordering, Comparator, ValueError, ValueKind, ValueLiteral, UNITLESS};

/// Dense position of an entity in the store. Entities are numbered in
/// ascending id order, so index order is id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptIdx(pub u32);

/// Interned schema string (attribute key, relation name or qualifier key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub u32);

impl EntityIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ConceptIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Default, Clone)]
pub struct Symbols {
    names: Vec<Arc<str>>,
    lookup: HashMap<Arc<str>, Sym>,
}

impl Symbols {
    pub fn intern(&mut self, name: &str) -> Sym {
        if let Some(&sym) = self.lookup.get(name) {
            return sym;
        }
        let sym = Sym(self.names.len() as u32);
        let shared: Arc<str> = name.into();
        self.names.push(shared.clone());
        self.lookup.insert(shared, sym);
        sym
    }

    pub fn get(&self, name: &str) -> Option<Sym> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, sym: Sym) -> &str {
        &self.names[sym.0 as usize]
    }

    pub fn shared(&self, sym: Sym) -> &Arc<str> {
        &self.names[sym.0 as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "forward" => Some(Direction::Forward),
            "backward" => Some(Direction::Backward),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Qualifier key to value list. Keys are kept sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualifierMap {
    entries: Vec<(Sym, Vec<ValueLiteral>)>,
}

impl QualifierMap {
    pub fn new(mut entries: Vec<(Sym, Vec<ValueLiteral>)>) -> Self {
        entries.sort_by_key(|(k, _)| *k);
        QualifierMap { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: Sym) -> &[ValueLiteral] {
        self.entries
            .binary_search_by_key(&key, |(k, _)| *k)
            .map(|at| self.entries[at].1.as_slice())
            .unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, &[ValueLiteral])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralFact {
    pub key: Sym,
    pub value: ValueLiteral,
    pub qualifiers: QualifierMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalFact {
    pub relation: Sym,
    /// `Forward` means the owning entity is the head of the triple.
    pub direction: Direction,
    pub object: EntityIdx,
    pub qualifiers: QualifierMap,
}

#[derive(Debug, Clone)]
pub struct EntityRecord {
    pub id: String,
    pub name: String,
    pub instance_of: Vec<ConceptIdx>,
    pub literal_facts: Vec<LiteralFact>,
    pub relational_facts: Vec<RelationalFact>,
}

#[derive(Debug, Clone)]
pub struct ConceptRecord {
    pub id: String,
    pub name: String,
    pub subclass_of: Vec<ConceptIdx>,
}

/// Reference to one fact inside the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactRef {
    Literal { owner: EntityIdx, index: u32 },
    Relational { owner: EntityIdx, index: u32 },
}

impl FactRef {
    pub fn owner(self) -> EntityIdx {
        match self {
            FactRef::Literal { owner, .. } | FactRef::Relational { owner, .. } => owner,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KbMetadata {
    pub loaded_at: SystemTime,
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub entity_count: usize,
    pub concept_count: usize,
    pub relation_name_count: usize,
    pub attribute_key_count: usize,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed knowledge base JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate concept id '{0}'")]
    DuplicateConcept(String),
    #[error("duplicate entity id '{0}'")]
    DuplicateEntity(String),
    #[error("'{owner}' references unknown concept '{target}'")]
    DanglingConcept { owner: String, target: String },
    #[error("'{owner}' references unknown entity '{target}'")]
    DanglingEntity { owner: String, target: String },
    #[error("subclass cycle through concept '{0}'")]
    CyclicSubclass(String),
    #[error("invalid fact on '{owner}': {message}")]
    InvalidFact { owner: String, message: String },
    #[error("unknown concept id '{0}'")]
    UnknownConcept(String),
}

/// Immutable in-memory knowledge base.
#[derive(Debug)]
pub struct KnowledgeBase {
    entities: Vec<EntityRecord>,
    entity_ids: HashMap<String, EntityIdx>,
    concepts: Vec<ConceptRecord>,
    concept_ids: HashMap<String, ConceptIdx>,
    concept_children: Vec<Vec<ConceptIdx>>,
    names: HashMap<String, Vec<EntityIdx>>,
    symbols: Symbols,
    relation_names: Vec<Sym>,
    attribute_keys: Vec<Sym>,
    qualifier_keys: Vec<Sym>,
    metadata: KbMetadata,
}

/// Loads and validates a JSON dump.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dump: KbDump = serde_json::from_slice(&bytes)?;
    let mut kb = KnowledgeBase::from_dump(dump)?;
    kb.metadata.source = Some(path.to_path_buf());
    Ok(kb)
}

impl KnowledgeBase {
    pub(crate) fn assemble(
        entities: Vec<EntityRecord>,
        concepts: Vec<ConceptRecord>,
        symbols: Symbols,
    ) -> Self {
        let entity_ids = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), EntityIdx(i as u32)))
            .collect();
        let concept_ids = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), ConceptIdx(i as u32)))
            .collect();
        let mut concept_children = vec![Vec::new(); concepts.len()];
        for (i, c) in concepts.iter().enumerate() {
            for parent in &c.subclass_of {
                concept_children[parent.index()].push(ConceptIdx(i as u32));
            }
        }
        let mut names: HashMap<String, Vec<EntityIdx>> = HashMap::new();
        let mut relations = BTreeSet::new();
        let mut attributes = BTreeSet::new();
        let mut qualifiers = BTreeSet::new();
        for (i, e) in entities.iter().enumerate() {
            names.entry(e.name.clone()).or_default().push(EntityIdx(i as u32));
            for fact in &e.literal_facts {
                attributes.insert(fact.key);
                qualifiers.extend(fact.qualifiers.iter().map(|(k, _)| k));
            }
            for fact in &e.relational_facts {
                relations.insert(fact.relation);
                qualifiers.extend(fact.qualifiers.iter().map(|(k, _)| k));
            }
        }
        KnowledgeBase {
            entities,
            entity_ids,
            concepts,
            concept_ids,
            concept_children,
            names,
            symbols,
            relation_names: relations.into_iter().collect(),
            attribute_keys: attributes.into_iter().collect(),
            qualifier_keys: qualifiers.into_iter().collect(),
            metadata: KbMetadata {
                loaded_at: SystemTime::now(),
                source: None,
            },
        }
    }

    pub fn metadata(&self) -> &KbMetadata {
        &self.metadata
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn entity(&self, idx: EntityIdx) -> &EntityRecord {
        &self.entities[idx.index()]
    }

    pub fn entity_idx(&self, id: &str) -> Option<EntityIdx> {
        self.entity_ids.get(id).copied()
    }

    pub fn concepts(&self) -> &[ConceptRecord] {
        &self.concepts
    }

    pub fn concept(&self, idx: ConceptIdx) -> &ConceptRecord {
        &self.concepts[idx.index()]
    }

    pub fn concept_idx(&self, id: &str) -> Option<ConceptIdx> {
        self.concept_ids.get(id).copied()
    }

    /// Concepts whose `subclass_of` lists `idx` directly.
    pub fn concept_children(&self, idx: ConceptIdx) -> &[ConceptIdx] {
        &self.concept_children[idx.index()]
    }

    pub fn symbols(&self) -> &Symbols {
        &self.symbols
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.symbols.get(name)
    }

    pub fn sym_name(&self, sym: Sym) -> &str {
        self.symbols.name(sym)
    }

    pub fn relation_names(&self) -> &[Sym] {
        &self.relation_names
    }

    pub fn attribute_keys(&self) -> &[Sym] {
        &self.attribute_keys
    }

    pub fn qualifier_keys(&self) -> &[Sym] {
        &self.qualifier_keys
    }

    pub fn is_relation(&self, name: &str) -> bool {
        self.sym(name)
            .is_some_and(|s| self.relation_names.binary_search(&s).is_ok())
    }

    pub fn literal_fact(&self, owner: EntityIdx, index: u32) -> &LiteralFact {
        &self.entities[owner.index()].literal_facts[index as usize]
    }

    pub fn relational_fact(&self, owner: EntityIdx, index: u32) -> &RelationalFact {
        &self.entities[owner.index()].relational_facts[index as usize]
    }

    /// Qualifiers of a referenced fact.
    pub fn qualifiers(&self, fact: FactRef) -> &QualifierMap {
        match fact {
            FactRef::Literal { owner, index } => &self.literal_fact(owner, index).qualifiers,
            FactRef::Relational { owner, index } => &self.relational_fact(owner, index).qualifiers,
        }
    }

    pub fn stats(&self) -> Stats {
        Stats {
            entity_count: self.entities.len(),
            concept_count: self.concepts.len(),
            relation_name_count: self.relation_names.len(),
            attribute_key_count: self.attribute_keys.len(),
        }
    }

    /// Entities whose name equals `name` exactly, in id order.
    pub fn resolve_entity_name(&self, name: &str) -> &[EntityIdx] {
        self.names.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Reflexive-transitive closure of `idx` under inverse `subclass_of`,
    /// sorted ascending.
    pub fn descendants_of(&self, idx: ConceptIdx) -> Vec<ConceptIdx> {
        let mut seen = vec![false; self.concepts.len()];
        let mut stack = vec![idx];
        seen[idx.index()] = true;
        let mut out = Vec::new();
        while let Some(c) = stack.pop() {
            out.push(c);
            for &child in self.concept_children(c) {
                if !seen[child.index()] {
                    seen[child.index()] = true;
                    stack.push(child);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Descendant concept ids of the concept with id `concept_id`, itself included.
    pub fn concept_descendants(&self, concept_id: &str) -> Result<BTreeSet<&str>, KbError> {
        let idx = self
            .concept_idx(concept_id)
            .ok_or_else(|| KbError::UnknownConcept(concept_id.to_string()))?;
        Ok(self
            .descendants_of(idx)
            .into_iter()
            .map(|c| self.concepts[c.index()].id.as_str())
            .collect())
    }
}

/// Counts of distinct items per category.
pub fn kb_stats(kb: &KnowledgeBase) -> Stats {
    kb.stats()
}

/// Ids of all entities named `name`, in id order.
pub fn resolve_entity_name<'a>(kb: &'a KnowledgeBase, name: &str) -> Vec<&'a str> {
    kb.resolve_entity_name(name)
        .iter()
        .map(|&e| kb.entity(e).id.as_str())
        .collect()
}

pub fn concept_descendants<'a>(
    kb: &'a KnowledgeBase,
    concept_id: &str,
) -> Result<BTreeSet<&'a str>, KbError> {
    kb.concept_descendants(concept_id)
}
