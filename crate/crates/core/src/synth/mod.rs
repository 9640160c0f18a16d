//! Seeded synthetic data: knowledge bases shaped like a Wikidata subset
//! (about 1 concept per 100 entities, ~10 literal and ~8 relational facts
//! per entity, 20% of facts qualified) and random valid programs over them.

mod programs;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kb::{
    AttributeDump, ConceptDump, Direction, EntityDump, KbDump, KnowledgeBase, OneOrMany, OrderedMap, RelationDump,
    ValueDump, ValueKind, ValueLiteral,
};

pub use programs::{fusion_workload, mixed_workload, ProgramGenerator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub entities: usize,
    pub seed: u64,
    pub concept_ratio: f64,
    /// Mean literal facts per entity.
    pub literal_facts: usize,
    /// Mean relational facts per entity, counting both directions.
    pub relational_facts: usize,
    pub qualifier_probability: f64,
    pub attribute_keys: usize,
    pub relation_names: usize,
}

impl SynthConfig {
    pub fn new(entities: usize, seed: u64) -> Self {
        SynthConfig {
            entities,
            seed,
            concept_ratio: 0.01,
            literal_facts: 10,
            relational_facts: 8,
            qualifier_probability: 0.2,
            attribute_keys: 40,
            relation_names: 24,
        }
    }
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ra", "ten", "vor", "sil", "an", "bel", "dra", "gon", "is", "ul", "mar", "ne", "po", "que",
    "ri", "sa", "tor", "ve", "zan", "el", "fin", "ha", "jo", "ky", "lum", "or", "pre",
];

const QUANTITY_KEYS: &[(&str, &[&str])] = &[
    ("area", &["km²", "mi²"]),
    ("population", &["1"]),
    ("height", &["m", "ft"]),
    ("mass", &["kg", "lb"]),
    ("elevation above sea level", &["m"]),
    ("length", &["km", "mi"]),
    ("budget", &["USD", "EUR"]),
    ("number of employees", &["1"]),
    ("speed", &["km/h"]),
    ("duration", &["min", "s"]),
];
const YEAR_KEYS: &[&str] = &[
    "inception", "year of foundation", "year of discovery", "first performance", "year of publication",
    "year of birth", "year of death", "dissolved", "completion year", "first flight",
];
const DATE_KEYS: &[&str] = &[
    "date of birth", "date of death", "publication date", "opening date", "release date", "start date",
    "end date", "launch date", "official opening", "date of election",
];
const STRING_KEYS: &[&str] = &[
    "motto", "official language", "color", "genre", "country code", "postal code", "nickname", "currency code",
    "license", "status",
];
const RELATIONS: &[&str] = &[
    "shares border with", "located in", "part of", "member of", "followed by", "capital of", "contains",
    "twinned with", "owned by", "employer", "educated at", "sibling", "spouse", "influenced by", "developer",
    "publisher", "headquarters location", "diplomatic relation", "award received", "participant in",
    "named after", "operator", "manufacturer", "architect",
];
const QUALIFIERS: &[(&str, ValueKind)] = &[
    ("start time", ValueKind::Year),
    ("end time", ValueKind::Year),
    ("point in time", ValueKind::Date),
    ("determination method", ValueKind::String),
    ("statement rank", ValueKind::Quantity),
    ("applies to part", ValueKind::String),
];
/// Distinct values per string-valued key; small so equality filters hit.
const STRING_POOL: usize = 50;

#[derive(Debug, Clone)]
struct KeySpec {
    name: String,
    kind: ValueKind,
    units: &'static [&'static str],
}

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn capitalized(s: String) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => s,
    }
}

/// Cycles through `base`, suffixing a round number past the first pass.
fn numbered(base: &[&str], i: usize) -> String {
    let name = base[i % base.len()];
    match i / base.len() {
        0 => name.to_string(),
        round => format!("{name} {}", round + 1),
    }
}

fn key_specs(count: usize) -> Vec<KeySpec> {
    (0..count)
        .map(|i| {
            let (slot, round) = (i / 4, i % 4);
            match round {
                0 => {
                    let (name, units) = QUANTITY_KEYS[slot % QUANTITY_KEYS.len()];
                    KeySpec {
                        name: numbered(&[name], slot / QUANTITY_KEYS.len()),
                        kind: ValueKind::Quantity,
                        units,
                    }
                }
                1 => KeySpec {
                    name: numbered(YEAR_KEYS, slot),
                    kind: ValueKind::Year,
                    units: &[],
                },
                2 => KeySpec {
                    name: numbered(DATE_KEYS, slot),
                    kind: ValueKind::Date,
                    units: &[],
                },
                _ => KeySpec {
                    name: numbered(STRING_KEYS, slot),
                    kind: ValueKind::String,
                    units: &[],
                },
            }
        })
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng, kind: ValueKind, units: &[&str], pool: &[String]) -> ValueLiteral {
    match kind {
        ValueKind::String => ValueLiteral::string(pool.choose(rng).unwrap().as_str()),
        ValueKind::Quantity => {
            // Mostly the key's primary unit; occasionally a secondary one.
            let unit = if units.len() > 1 && rng.gen_bool(0.1) { units[1] } else { units.first().copied().unwrap_or("1") };
            ValueLiteral::quantity(rng.gen_range(0..1_000_000) as f64, unit)
        }
        ValueKind::Year => ValueLiteral::Year(rng.gen_range(1000..=2024)),
        ValueKind::Date => {
            let day = rng.gen_range(0..365 * 220);
            let base = chrono::NaiveDate::from_ymd_opt(1800, 1, 1).unwrap();
            ValueLiteral::Date(base + chrono::Days::new(day))
        }
    }
}

fn qualifiers(rng: &mut ChaCha8Rng, probability: f64, pool: &[String]) -> OrderedMap<OneOrMany> {
    if !rng.gen_bool(probability) {
        return OrderedMap::default();
    }
    let (key, kind) = *QUALIFIERS.choose(rng).unwrap();
    let values = (0..rng.gen_range(1..=2))
        .map(|_| ValueDump::from_literal(&random_value(rng, kind, &["1"], pool)))
        .collect();
    OrderedMap(vec![(key.to_string(), OneOrMany::Many(values))])
}

/// Uniform count in `[mean/2, mean*3/2]`.
fn around(rng: &mut ChaCha8Rng, mean: usize) -> usize {
    rng.gen_range(mean / 2..=mean + mean / 2)
}

/// Builds a dump deterministically from `config`; equal configs give equal
/// dumps.
pub fn generate_dump(config: &SynthConfig) -> KbDump {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.entities;
    let n_concepts = if n == 0 { 0 } else { ((n as f64 * config.concept_ratio).round() as usize).max(1) };
    let width = n.max(n_concepts).max(1).to_string().len();

    let mut concept_names = HashSet::new();
    let mut concepts = Vec::with_capacity(n_concepts);
    for i in 0..n_concepts {
        let mut name = word(&mut rng, 2 + i % 2);
        while !concept_names.insert(name.clone()) {
            name.push_str(SYLLABLES.choose(&mut rng).unwrap());
        }
        // Parents always come earlier, keeping the hierarchy acyclic.
        let subclass_of = if i > 0 && rng.gen_bool(0.7) {
            vec![format!("C{:0width$}", rng.gen_range(0..i))]
        } else {
            Vec::new()
        };
        concepts.push((format!("C{i:0width$}"), ConceptDump { name, subclass_of }));
    }

    let keys = key_specs(config.attribute_keys.max(1));
    let pools: Vec<Vec<String>> = keys
        .iter()
        .map(|k| match k.kind {
            ValueKind::String => (0..STRING_POOL).map(|_| word(&mut rng, 2)).collect(),
            _ => Vec::new(),
        })
        .collect();
    let qualifier_pool: Vec<String> = (0..STRING_POOL).map(|_| word(&mut rng, 3)).collect();
    let relations: Vec<String> = (0..config.relation_names.max(1)).map(|i| numbered(RELATIONS, i)).collect();

    let mut entities = Vec::with_capacity(n);
    for i in 0..n {
        let syllables = rng.gen_range(2..4);
        let name = capitalized(word(&mut rng, syllables));
        let mut instance_of: Vec<String> = (0..rng.gen_range(1..=2))
            .map(|_| format!("C{:0width$}", rng.gen_range(0..n_concepts)))
            .collect();
        instance_of.dedup();
        let attributes = (0..around(&mut rng, config.literal_facts))
            .map(|_| {
                let k = rng.gen_range(0..keys.len());
                AttributeDump {
                    key: keys[k].name.clone(),
                    value: ValueDump::from_literal(&random_value(&mut rng, keys[k].kind, keys[k].units, &pools[k])),
                    qualifiers: qualifiers(&mut rng, config.qualifier_probability, &qualifier_pool),
                }
            })
            .collect();
        // Stored once; the loader adds the mirrored direction.
        let stored = if n > 1 { around(&mut rng, config.relational_facts / 2) } else { 0 };
        let relations = (0..stored)
            .map(|_| {
                let mut object = rng.gen_range(0..n - 1);
                if object >= i {
                    object += 1;
                }
                RelationDump {
                    relation: relations.choose(&mut rng).unwrap().clone(),
                    direction: Direction::Forward,
                    object: format!("E{object:0width$}"),
                    qualifiers: qualifiers(&mut rng, config.qualifier_probability, &qualifier_pool),
                }
            })
            .collect();
        entities.push((
            format!("E{i:0width$}"),
            EntityDump {
                name,
                instance_of,
                attributes,
                relations,
            },
        ));
    }

    KbDump {
        concepts: OrderedMap(concepts),
        entities: OrderedMap(entities),
    }
}

/// Generates and loads a synthetic knowledge base.
pub fn generate_kb(config: &SynthConfig) -> KnowledgeBase {
    KnowledgeBase::from_dump(generate_dump(config)).expect("generated dumps are well-formed")
}
