use crate::kb::{EntityIdx, FactRef, KnowledgeBase, ValueLiteral};
use crate::program::OutputKind;

/// Facts bound to each entity of a set, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Bindings {
    /// `offsets[i]..offsets[i + 1]` indexes `facts` for the i-th entity.
    offsets: Vec<u32>,
    facts: Vec<FactRef>,
}

/// Duplicate-free entity set in ascending order, optionally carrying the
/// facts that justified each member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySet {
    ids: Vec<EntityIdx>,
    bindings: Option<Bindings>,
}

impl EntitySet {
    /// A set without fact bindings. `ids` must be ascending and unique.
    pub fn plain(ids: Vec<EntityIdx>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        EntitySet { ids, bindings: None }
    }

    pub fn empty() -> Self {
        EntitySet::plain(Vec::new())
    }

    /// Groups (entity, fact) pairs into a set with bindings. Pairs may come
    /// in any order and may repeat.
    pub fn with_facts(mut pairs: Vec<(EntityIdx, FactRef)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Self::from_sorted_pairs(pairs)
    }

    /// Like [`EntitySet::with_facts`] for pairs already sorted and unique.
    pub fn from_sorted_pairs(pairs: Vec<(EntityIdx, FactRef)>) -> Self {
        let mut ids = Vec::new();
        let mut offsets = vec![0u32];
        let mut facts = Vec::with_capacity(pairs.len());
        for (e, f) in pairs {
            if ids.last() != Some(&e) {
                if !ids.is_empty() {
                    offsets.push(facts.len() as u32);
                }
                ids.push(e);
            }
            facts.push(f);
        }
        if !ids.is_empty() {
            offsets.push(facts.len() as u32);
        }
        EntitySet {
            ids,
            bindings: Some(Bindings { offsets, facts }),
        }
    }

    pub fn ids(&self) -> &[EntityIdx] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn has_facts(&self) -> bool {
        self.bindings.is_some()
    }

    /// Facts bound to the `i`-th member.
    pub fn facts_at(&self, i: usize) -> &[FactRef] {
        match &self.bindings {
            Some(b) => &b.facts[b.offsets[i] as usize..b.offsets[i + 1] as usize],
            None => &[],
        }
    }

    /// Members with their bound facts.
    pub fn iter_bound(&self) -> impl Iterator<Item = (EntityIdx, &[FactRef])> + '_ {
        self.ids.iter().enumerate().map(move |(i, &e)| (e, self.facts_at(i)))
    }

    pub fn kind(&self) -> OutputKind {
        if self.has_facts() {
            OutputKind::EntitySetWithFacts
        } else {
            OutputKind::EntitySet
        }
    }

    pub fn into_plain(self) -> Self {
        EntitySet::plain(self.ids)
    }

    /// Keeps members for which `keep` holds, preserving bindings.
    pub fn retain_members(self, mut keep: impl FnMut(EntityIdx) -> bool) -> Self {
        match self.bindings {
            None => EntitySet::plain(self.ids.into_iter().filter(|&e| keep(e)).collect()),
            Some(b) => {
                let mut pairs = Vec::new();
                for (i, &e) in self.ids.iter().enumerate() {
                    if keep(e) {
                        let facts = &b.facts[b.offsets[i] as usize..b.offsets[i + 1] as usize];
                        pairs.extend(facts.iter().map(|&f| (e, f)));
                    }
                }
                // Members without facts cannot occur in a bound set.
                EntitySet::from_sorted_pairs(pairs)
            }
        }
    }

    /// Keeps members present in the ascending slice `other`, preserving bindings.
    pub fn intersect_sorted(self, other: &[EntityIdx]) -> Self {
        let mut j = 0;
        self.retain_members(|e| {
            while j < other.len() && other[j] < e {
                j += 1;
            }
            j < other.len() && other[j] == e
        })
    }
}

/// Intermediate or final output of one operator.
#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeValue {
    Entities(EntitySet),
    Values(Vec<ValueLiteral>),
    Strings(Vec<String>),
    Int(i64),
    Bool(bool),
}

impl RuntimeValue {
    pub fn kind(&self) -> OutputKind {
        match self {
            RuntimeValue::Entities(set) => set.kind(),
            RuntimeValue::Values(_) => OutputKind::Value,
            RuntimeValue::Strings(_) => OutputKind::String,
            RuntimeValue::Int(_) => OutputKind::Int,
            RuntimeValue::Bool(_) => OutputKind::Bool,
        }
    }

    /// Number of items (1 for scalars).
    pub fn cardinality(&self) -> usize {
        match self {
            RuntimeValue::Entities(set) => set.len(),
            RuntimeValue::Values(v) => v.len(),
            RuntimeValue::Strings(v) => v.len(),
            RuntimeValue::Int(_) | RuntimeValue::Bool(_) => 1,
        }
    }

    /// First `limit` items rendered as text, in output order.
    pub fn preview(&self, kb: &KnowledgeBase, limit: usize) -> Vec<String> {
        match self {
            RuntimeValue::Entities(set) => set
                .ids()
                .iter()
                .take(limit)
                .map(|&e| kb.entity(e).name.clone())
                .collect(),
            RuntimeValue::Values(v) => v.iter().take(limit).map(ToString::to_string).collect(),
            RuntimeValue::Strings(v) => v.iter().take(limit).cloned().collect(),
            RuntimeValue::Int(n) => vec![n.to_string()],
            RuntimeValue::Bool(b) => vec![yes_no(*b).to_string()],
        }
    }

    pub fn as_entities(&self) -> Option<&EntitySet> {
        match self {
            RuntimeValue::Entities(set) => Some(set),
            _ => None,
        }
    }
}

pub(crate) fn yes_no(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

/// Answer utterance for a root output.
pub fn render_answer(kb: &KnowledgeBase, value: &RuntimeValue) -> String {
    const NO_ANSWER: &str = "no answer";
    let joined = |items: Vec<String>| {
        if items.is_empty() {
            NO_ANSWER.to_string()
        } else {
            items.join("; ")
        }
    };
    match value {
        RuntimeValue::Bool(b) => yes_no(*b).to_string(),
        RuntimeValue::Int(n) => n.to_string(),
        RuntimeValue::Strings(items) => joined(items.clone()),
        RuntimeValue::Values(items) => joined(items.iter().map(ToString::to_string).collect()),
        RuntimeValue::Entities(set) => joined(set.ids().iter().map(|&e| kb.entity(e).name.clone()).collect()),
    }
}
