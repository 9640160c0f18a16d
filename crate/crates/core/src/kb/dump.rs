//! JSON dump format and conversion to and from [`KnowledgeBase`].
//!
//! ```json
//! {"concepts": {"Q6256": {"name": "country", "subclassOf": []}},
//!  "entities": {"Q183": {"name": "Germany", "instanceOf": ["Q6256"],
//!    "attributes": [{"key": "area", "value": {"type": "quantity", "value": 357022, "unit": "km²"},
//!                    "qualifiers": {}}],
//!    "relations": [{"relation": "shares border with", "direction": "forward",
//!                   "object": "Q142", "qualifiers": {}}]}}}
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::marker::PhantomData;

use chrono::NaiveDate;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    ConceptIdx, ConceptRecord, Direction, EntityIdx, EntityRecord, KbError, KnowledgeBase,
    LiteralFact, QualifierMap, RelationalFact, Sym, Symbols, ValueKind, ValueLiteral, UNITLESS,
};

/// A JSON object kept as an ordered list of entries. Duplicate keys are
/// preserved so the loader can reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedMap<T>(pub Vec<(String, T)>);

impl<T> Default for OrderedMap<T> {
    fn default() -> Self {
        OrderedMap(Vec::new())
    }
}

impl<T: Serialize> Serialize for OrderedMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for OrderedMap<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for EntriesVisitor<T> {
            type Value = OrderedMap<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some(entry) = access.next_entry()? {
                    entries.push(entry);
                }
                Ok(OrderedMap(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(PhantomData))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbDump {
    #[serde(default)]
    pub concepts: OrderedMap<ConceptDump>,
    #[serde(default)]
    pub entities: OrderedMap<EntityDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDump {
    pub name: String,
    #[serde(rename = "subclassOf", default)]
    pub subclass_of: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityDump {
    pub name: String,
    #[serde(rename = "instanceOf", default)]
    pub instance_of: Vec<String>,
    #[serde(default)]
    pub attributes: Vec<AttributeDump>,
    #[serde(default)]
    pub relations: Vec<RelationDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDump {
    pub key: String,
    pub value: ValueDump,
    #[serde(default)]
    pub qualifiers: OrderedMap<OneOrMany>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDump {
    #[serde(alias = "predicate")]
    pub relation: String,
    pub direction: Direction,
    pub object: String,
    #[serde(default)]
    pub qualifiers: OrderedMap<OneOrMany>,
}

/// Qualifier values: a list, or a bare value object accepted as a singleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    Many(Vec<ValueDump>),
    One(ValueDump),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<ValueDump> {
        match self {
            OneOrMany::Many(v) => v,
            OneOrMany::One(v) => vec![v],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDump {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl ValueDump {
    pub fn from_literal(value: &ValueLiteral) -> Self {
        let (kind, json, unit) = match value {
            ValueLiteral::String(s) => (ValueKind::String, serde_json::json!(&**s), None),
            ValueLiteral::Quantity { amount, unit } => {
                let json = if amount.fract() == 0.0 && amount.abs() < 9e15 {
                    serde_json::json!(*amount as i64)
                } else {
                    serde_json::json!(amount)
                };
                (ValueKind::Quantity, json, Some(unit.to_string()))
            }
            ValueLiteral::Year(y) => (ValueKind::Year, serde_json::json!(y), None),
            ValueLiteral::Date(d) => (ValueKind::Date, serde_json::json!(d.format("%Y-%m-%d").to_string()), None),
        };
        ValueDump {
            kind: kind.as_str().to_string(),
            value: json,
            unit,
        }
    }

    pub fn to_literal(&self) -> Result<ValueLiteral, String> {
        let kind: ValueKind = self.kind.parse().map_err(|e| format!("{e}"))?;
        let bad = || format!("{} is not a valid {kind} value", self.value);
        match kind {
            ValueKind::String => match &self.value {
                serde_json::Value::String(s) => Ok(ValueLiteral::string(s.as_str())),
                other => Ok(ValueLiteral::string(other.to_string())),
            },
            ValueKind::Quantity => {
                let amount = match &self.value {
                    serde_json::Value::Number(n) => n.as_f64(),
                    serde_json::Value::String(s) => s.trim().parse().ok(),
                    _ => None,
                }
                .filter(|a: &f64| a.is_finite())
                .ok_or_else(bad)?;
                let unit = self.unit.as_deref().filter(|u| !u.is_empty()).unwrap_or(UNITLESS);
                Ok(ValueLiteral::quantity(amount, unit))
            }
            ValueKind::Year => {
                let year = match &self.value {
                    serde_json::Value::Number(n) => n.as_i64(),
                    serde_json::Value::String(s) => s.trim().parse().ok(),
                    _ => None,
                }
                .and_then(|y| i32::try_from(y).ok())
                .ok_or_else(bad)?;
                Ok(ValueLiteral::Year(year))
            }
            ValueKind::Date => {
                let text = self.value.as_str().ok_or_else(bad)?;
                NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
                    .map(ValueLiteral::Date)
                    .map_err(|_| bad())
            }
        }
    }
}

fn check_unique<T>(map: &OrderedMap<T>, err: fn(String) -> KbError) -> Result<(), KbError> {
    let mut seen = HashSet::with_capacity(map.0.len());
    for (id, _) in &map.0 {
        if !seen.insert(id.as_str()) {
            return Err(err(id.clone()));
        }
    }
    Ok(())
}

fn convert_qualifiers(
    owner: &str,
    raw: OrderedMap<OneOrMany>,
    symbols: &mut Symbols,
) -> Result<QualifierMap, KbError> {
    let invalid = |message: String| KbError::InvalidFact {
        owner: owner.to_string(),
        message,
    };
    let mut entries = Vec::with_capacity(raw.0.len());
    for (key, values) in raw.0 {
        if key.is_empty() {
            return Err(invalid("empty qualifier key".into()));
        }
        let values = values.into_vec();
        if values.is_empty() {
            return Err(invalid(format!("qualifier '{key}' has no values")));
        }
        let values = values
            .iter()
            .map(|v| v.to_literal().map_err(&invalid))
            .collect::<Result<Vec<_>, _>>()?;
        entries.push((symbols.intern(&key), values));
    }
    Ok(QualifierMap::new(entries))
}

fn find_cycle(concepts: &[ConceptRecord]) -> Option<ConceptIdx> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; concepts.len()];
    for start in 0..concepts.len() {
        if marks[start] != Mark::New {
            continue;
        }
        // Iterative DFS over subclass_of edges: (node, next edge to visit).
        let mut stack = vec![(start, 0usize)];
        marks[start] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(parent) = concepts[node].subclass_of.get(*next) {
                *next += 1;
                let p = parent.index();
                match marks[p] {
                    Mark::Active => return Some(*parent),
                    Mark::New => {
                        marks[p] = Mark::Active;
                        stack.push((p, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                marks[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

impl KnowledgeBase {
    /// Validates a dump and builds the store. Relational facts stored in one
    /// direction only get their mirror synthesized on the object entity.
    pub fn from_dump(dump: KbDump) -> Result<Self, KbError> {
        check_unique(&dump.concepts, KbError::DuplicateConcept)?;
        check_unique(&dump.entities, KbError::DuplicateEntity)?;
        let mut symbols = Symbols::default();

        let mut concept_dumps = dump.concepts.0;
        concept_dumps.sort_by(|a, b| a.0.cmp(&b.0));
        let concept_ids: HashMap<&str, ConceptIdx> = concept_dumps
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), ConceptIdx(i as u32)))
            .collect();
        let resolve_concept = |owner: &str, target: &str| {
            concept_ids
                .get(target)
                .copied()
                .ok_or_else(|| KbError::DanglingConcept {
                    owner: owner.to_string(),
                    target: target.to_string(),
                })
        };
        let mut concepts = Vec::with_capacity(concept_dumps.len());
        for (id, c) in &concept_dumps {
            let subclass_of = c
                .subclass_of
                .iter()
                .map(|t| resolve_concept(id, t))
                .collect::<Result<Vec<_>, _>>()?;
            concepts.push(ConceptRecord {
                id: id.clone(),
                name: c.name.clone(),
                subclass_of,
            });
        }
        if let Some(c) = find_cycle(&concepts) {
            return Err(KbError::CyclicSubclass(concepts[c.index()].id.clone()));
        }

        let mut entity_dumps = dump.entities.0;
        entity_dumps.sort_by(|a, b| a.0.cmp(&b.0));
        let entity_ids: HashMap<&str, EntityIdx> = entity_dumps
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), EntityIdx(i as u32)))
            .collect();

        let mut relational: Vec<Vec<RelationalFact>> = Vec::with_capacity(entity_dumps.len());
        let mut entities = Vec::with_capacity(entity_dumps.len());
        for (id, e) in &entity_dumps {
            let instance_of = e
                .instance_of
                .iter()
                .map(|t| resolve_concept(id, t))
                .collect::<Result<Vec<_>, _>>()?;
            let mut literal_facts = Vec::with_capacity(e.attributes.len());
            for attr in &e.attributes {
                if attr.key.is_empty() {
                    return Err(KbError::InvalidFact {
                        owner: id.clone(),
                        message: "empty attribute key".into(),
                    });
                }
                let value = attr.value.to_literal().map_err(|message| KbError::InvalidFact {
                    owner: id.clone(),
                    message,
                })?;
                literal_facts.push(LiteralFact {
                    key: symbols.intern(&attr.key),
                    value,
                    qualifiers: convert_qualifiers(id, attr.qualifiers.clone(), &mut symbols)?,
                });
            }
            let mut facts = Vec::with_capacity(e.relations.len() * 2);
            for rel in &e.relations {
                if rel.relation.is_empty() {
                    return Err(KbError::InvalidFact {
                        owner: id.clone(),
                        message: "empty relation name".into(),
                    });
                }
                let object = entity_ids
                    .get(rel.object.as_str())
                    .copied()
                    .ok_or_else(|| KbError::DanglingEntity {
                        owner: id.clone(),
                        target: rel.object.clone(),
                    })?;
                let fact = RelationalFact {
                    relation: symbols.intern(&rel.relation),
                    direction: rel.direction,
                    object,
                    qualifiers: convert_qualifiers(id, rel.qualifiers.clone(), &mut symbols)?,
                };
                facts.push(fact);
            }
            relational.push(facts);
            entities.push(EntityRecord {
                id: id.clone(),
                name: e.name.clone(),
                instance_of,
                literal_facts,
                relational_facts: Vec::new(),
            });
        }

        normalize_relations(&mut relational);
        for (entity, facts) in entities.iter_mut().zip(relational) {
            entity.relational_facts = facts;
        }
        Ok(KnowledgeBase::assemble(entities, concepts, symbols))
    }

    /// Serializes the store back into the dump format, all relational facts
    /// in both directions, ids in ascending order.
    pub fn to_dump(&self) -> KbDump {
        let qualifiers_dump = |q: &QualifierMap| {
            OrderedMap(
                q.iter()
                    .map(|(k, vs)| {
                        let values = vs.iter().map(ValueDump::from_literal).collect();
                        (self.sym_name(k).to_string(), OneOrMany::Many(values))
                    })
                    .collect(),
            )
        };
        let concepts = self
            .concepts()
            .iter()
            .map(|c| {
                let dump = ConceptDump {
                    name: c.name.clone(),
                    subclass_of: c.subclass_of.iter().map(|p| self.concept(*p).id.clone()).collect(),
                };
                (c.id.clone(), dump)
            })
            .collect();
        let entities = self
            .entities()
            .iter()
            .map(|e| {
                let dump = EntityDump {
                    name: e.name.clone(),
                    instance_of: e.instance_of.iter().map(|c| self.concept(*c).id.clone()).collect(),
                    attributes: e
                        .literal_facts
                        .iter()
                        .map(|f| AttributeDump {
                            key: self.sym_name(f.key).to_string(),
                            value: ValueDump::from_literal(&f.value),
                            qualifiers: qualifiers_dump(&f.qualifiers),
                        })
                        .collect(),
                    relations: e
                        .relational_facts
                        .iter()
                        .map(|f| RelationDump {
                            relation: self.sym_name(f.relation).to_string(),
                            direction: f.direction,
                            object: self.entity(f.object).id.clone(),
                            qualifiers: qualifiers_dump(&f.qualifiers),
                        })
                        .collect(),
                };
                (e.id.clone(), dump)
            })
            .collect();
        KbDump {
            concepts: OrderedMap(concepts),
            entities: OrderedMap(entities),
        }
    }
}

type FactKey = (EntityIdx, Sym, Direction, EntityIdx);

fn fact_key(owner: EntityIdx, fact: &RelationalFact) -> FactKey {
    (owner, fact.relation, fact.direction, fact.object)
}

/// Drops exact duplicate relational facts, then appends the flipped copy of
/// every fact whose mirror is absent on the object entity. Facts match on
/// relation, direction, endpoint and qualifiers.
fn normalize_relations(relational: &mut [Vec<RelationalFact>]) {
    let mut positions: HashMap<FactKey, Vec<u32>> = HashMap::new();
    for (owner, facts) in relational.iter_mut().enumerate() {
        let owner = EntityIdx(owner as u32);
        let mut kept: Vec<RelationalFact> = Vec::with_capacity(facts.len());
        for fact in facts.drain(..) {
            let slot = positions.entry(fact_key(owner, &fact)).or_default();
            if slot.iter().any(|&p| kept[p as usize] == fact) {
                continue;
            }
            slot.push(kept.len() as u32);
            kept.push(fact);
        }
        *facts = kept;
    }

    let mut missing: Vec<(EntityIdx, RelationalFact)> = Vec::new();
    for (subject, facts) in relational.iter().enumerate() {
        let subject = EntityIdx(subject as u32);
        for fact in facts {
            let mirror = RelationalFact {
                relation: fact.relation,
                direction: fact.direction.flip(),
                object: subject,
                qualifiers: fact.qualifiers.clone(),
            };
            let owner = fact.object;
            let present = positions
                .get(&fact_key(owner, &mirror))
                .is_some_and(|ps| ps.iter().any(|&p| relational[owner.index()][p as usize] == mirror));
            if !present {
                missing.push((owner, mirror));
            }
        }
    }
    for (owner, mirror) in missing {
        let list = &mut relational[owner.index()];
        let slot = positions.entry(fact_key(owner, &mirror)).or_default();
        if slot.iter().any(|&p| list[p as usize] == mirror) {
            continue;
        }
        slot.push(list.len() as u32);
        list.push(mirror);
    }
}
