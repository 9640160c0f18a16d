use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{EntityIdx, FactRef, KnowledgeBase, ValueKind, ValueLiteral};
use crate::program::{Operator, OperatorNode, Program, AMONG_ORDER, BETWEEN_ORDER, COMPARATORS, DIRECTIONS};

const KINDS: [ValueKind; 4] = [ValueKind::String, ValueKind::Quantity, ValueKind::Year, ValueKind::Date];

fn kind_slot(kind: ValueKind) -> usize {
    KINDS.iter().position(|&k| k == kind).unwrap()
}

fn filter_op(kind: ValueKind) -> Operator {
    [Operator::FilterStr, Operator::FilterNum, Operator::FilterYear, Operator::FilterDate][kind_slot(kind)]
}

fn qfilter_op(kind: ValueKind) -> Operator {
    [Operator::QFilterStr, Operator::QFilterNum, Operator::QFilterYear, Operator::QFilterDate][kind_slot(kind)]
}

fn verify_op(kind: ValueKind) -> Operator {
    [Operator::VerifyStr, Operator::VerifyNum, Operator::VerifyYear, Operator::VerifyDate][kind_slot(kind)]
}

/// Samples valid programs whose arguments are drawn from a knowledge base,
/// so most filters and lookups hit real facts.
#[derive(Debug, Clone)]
pub struct ProgramGenerator<'a> {
    kb: &'a KnowledgeBase,
    max_nodes: usize,
    /// Literal facts per value kind.
    literals: [Vec<(EntityIdx, u32)>; 4],
    /// Qualifier (key, value) pairs per value kind.
    qualifier_values: [Vec<(String, ValueLiteral)>; 4],
    qualified_literals: Vec<(EntityIdx, u32)>,
    qualified_relations: Vec<(EntityIdx, u32)>,
    relations: Vec<String>,
    concepts: Vec<String>,
}

impl<'a> ProgramGenerator<'a> {
    /// `max_nodes` is clamped to at least 3.
    pub fn new(kb: &'a KnowledgeBase, max_nodes: usize) -> Self {
        let mut literals: [Vec<(EntityIdx, u32)>; 4] = Default::default();
        let mut qualifier_values: [Vec<(String, ValueLiteral)>; 4] = Default::default();
        let mut qualified_literals = Vec::new();
        let mut qualified_relations = Vec::new();
        let mut collect_qualifiers = |fact: FactRef| {
            for (key, values) in kb.qualifiers(fact).iter() {
                for v in values {
                    qualifier_values[kind_slot(v.kind())].push((kb.sym_name(key).to_string(), v.clone()));
                }
            }
        };
        for (i, entity) in kb.entities().iter().enumerate() {
            let owner = EntityIdx(i as u32);
            for (pos, fact) in entity.literal_facts.iter().enumerate() {
                literals[kind_slot(fact.value.kind())].push((owner, pos as u32));
                if !fact.qualifiers.is_empty() {
                    qualified_literals.push((owner, pos as u32));
                    collect_qualifiers(FactRef::Literal { owner, index: pos as u32 });
                }
            }
            for (pos, fact) in entity.relational_facts.iter().enumerate() {
                if !fact.qualifiers.is_empty() && fact.direction == crate::kb::Direction::Forward {
                    qualified_relations.push((owner, pos as u32));
                    collect_qualifiers(FactRef::Relational { owner, index: pos as u32 });
                }
            }
        }
        ProgramGenerator {
            kb,
            max_nodes: max_nodes.max(3),
            literals,
            qualifier_values,
            qualified_literals,
            qualified_relations,
            relations: kb.relation_names().iter().map(|&s| kb.sym_name(s).to_string()).collect(),
            concepts: kb.concepts().iter().map(|c| c.name.clone()).collect(),
        }
    }

    /// A random valid program with at most `max_nodes` nodes.
    pub fn generate(&self, rng: &mut impl Rng) -> Program {
        let mut b = Builder {
            g: self,
            rng,
            nodes: Vec::new(),
        };
        b.root(self.max_nodes);
        Program::new(b.nodes).expect("generated programs are well-formed")
    }

    fn entity_name(&self, rng: &mut impl Rng) -> String {
        let n = self.kb.entity_count();
        if n == 0 || rng.gen_bool(0.02) {
            return "Atlantis".to_string();
        }
        self.kb.entity(EntityIdx(rng.gen_range(0..n as u32))).name.clone()
    }

    fn literal_sample(&self, rng: &mut impl Rng, kinds: &[ValueKind]) -> Option<(String, ValueLiteral)> {
        let available: Vec<ValueKind> =
            kinds.iter().copied().filter(|&k| !self.literals[kind_slot(k)].is_empty()).collect();
        let kind = *available.choose(rng)?;
        let &(owner, index) = self.literals[kind_slot(kind)].choose(rng)?;
        let fact = self.kb.literal_fact(owner, index);
        Some((self.kb.sym_name(fact.key).to_string(), fact.value.clone()))
    }

    fn qualifier_sample(&self, rng: &mut impl Rng) -> Option<(String, ValueLiteral)> {
        let available: Vec<usize> = (0..4).filter(|&k| !self.qualifier_values[k].is_empty()).collect();
        let slot = *available.choose(rng)?;
        self.qualifier_values[slot].choose(rng).cloned()
    }
}

struct Builder<'g, 'a, R> {
    g: &'g ProgramGenerator<'a>,
    rng: &'g mut R,
    nodes: Vec<OperatorNode>,
}

impl<R: Rng> Builder<'_, '_, R> {
    fn push(&mut self, function: Operator, inputs: Vec<String>, dependencies: Vec<usize>) -> usize {
        self.nodes.push(OperatorNode {
            function,
            inputs,
            dependencies,
        });
        self.nodes.len() - 1
    }

    fn comparator(&mut self) -> String {
        COMPARATORS.choose(self.rng).unwrap().to_string()
    }

    /// Builds an entity-set subtree of at most `budget` nodes; with
    /// `need_facts` the output carries fact bindings (needs `budget >= 2`).
    fn entities(&mut self, budget: usize, need_facts: bool) -> usize {
        debug_assert!(budget > need_facts as usize);
        let mut choices: Vec<(u32, u8)> = Vec::new();
        if !need_facts {
            choices.extend([(2, 0), (4, 1)]);
        }
        if budget >= 2 {
            choices.extend([(3, 2), (3, 3)]);
            if !need_facts {
                choices.push((3, 4));
            }
        }
        if budget >= 3 {
            choices.push((2, 5));
            if !need_facts {
                choices.push((2, 6));
            }
        }
        if budget >= 3 + need_facts as usize {
            choices.push((1, 7));
        }
        let total: u32 = choices.iter().map(|c| c.0).sum();
        let mut pick = self.rng.gen_range(0..total);
        let choice = choices
            .iter()
            .find(|c| {
                if pick < c.0 {
                    true
                } else {
                    pick -= c.0;
                    false
                }
            })
            .unwrap()
            .1;
        let inner = budget - 1;
        match choice {
            0 => self.push(Operator::FindAll, vec![], vec![]),
            1 => {
                let name = self.g.entity_name(self.rng);
                self.push(Operator::Find, vec![name], vec![])
            }
            // Attribute filter.
            2 => {
                let child = self.entities(inner, false);
                match self.g.literal_sample(self.rng, &KINDS) {
                    Some((key, value)) => {
                        let op = filter_op(value.kind());
                        let mut inputs = vec![key, value.to_string()];
                        if op != Operator::FilterStr {
                            inputs.push(self.comparator());
                        }
                        self.push(op, inputs, vec![child])
                    }
                    None => self.push(Operator::FilterStr, vec!["motto".into(), "x".into()], vec![child]),
                }
            }
            3 => {
                let child = self.entities(inner, false);
                let relation = self.g.relations.choose(self.rng).cloned().unwrap_or_else(|| "related to".into());
                let direction = DIRECTIONS.choose(self.rng).unwrap().to_string();
                self.push(Operator::Relate, vec![relation, direction], vec![child])
            }
            4 => {
                let child = self.entities(inner, false);
                let concept = self.g.concepts.choose(self.rng).cloned().unwrap_or_else(|| "thing".into());
                self.push(Operator::FilterConcept, vec![concept], vec![child])
            }
            5 => {
                let child = self.entities(inner, true);
                match self.g.qualifier_sample(self.rng) {
                    Some((qkey, value)) => {
                        let op = qfilter_op(value.kind());
                        let mut inputs = vec![qkey, value.to_string()];
                        if op != Operator::QFilterStr {
                            inputs.push(self.comparator());
                        }
                        self.push(op, inputs, vec![child])
                    }
                    None => self.push(Operator::QFilterStr, vec!["start time".into(), "x".into()], vec![child]),
                }
            }
            6 => {
                let (a, b) = self.pair(inner);
                let op = if self.rng.gen_bool(0.5) { Operator::And } else { Operator::Or };
                self.push(op, vec![], vec![a, b])
            }
            // Concept filter over a bound set, keeping the bindings.
            _ => {
                let child = self.entities(inner, true);
                let concept = self.g.concepts.choose(self.rng).cloned().unwrap_or_else(|| "thing".into());
                self.push(Operator::FilterConcept, vec![concept], vec![child])
            }
        }
    }

    /// Two entity subtrees sharing `budget >= 2` nodes.
    fn pair(&mut self, budget: usize) -> (usize, usize) {
        let before = self.nodes.len();
        let left = self.rng.gen_range(1..budget);
        let a = self.entities(left, false);
        let used = self.nodes.len() - before;
        let b = self.entities(budget - used, false);
        (a, b)
    }

    fn find(&mut self, owner: EntityIdx) -> usize {
        let name = self.g.kb.entity(owner).name.clone();
        self.push(Operator::Find, vec![name], vec![])
    }

    fn root(&mut self, budget: usize) {
        let inner = budget - 1;
        match self.rng.gen_range(0..12) {
            0 => {
                self.entities(budget, false);
            }
            1 | 2 => {
                let child = self.entities(inner, false);
                self.push(Operator::Count, vec![], vec![child]);
            }
            3 => {
                let child = self.entities(inner, false);
                self.push(Operator::QueryName, vec![], vec![child]);
            }
            4 => {
                let child = self.entities(inner, false);
                let key = self.g.literal_sample(self.rng, &KINDS).map_or_else(|| "area".into(), |s| s.0);
                self.push(Operator::QueryAttr, vec![key], vec![child]);
            }
            5 => {
                let child = self.entities(budget - 2, false);
                match self.g.literal_sample(self.rng, &KINDS) {
                    Some((key, value)) => {
                        let op = verify_op(value.kind());
                        let query = self.push(Operator::QueryAttr, vec![key], vec![child]);
                        let target = self.g.literal_sample(self.rng, &[value.kind()]).map_or(value, |s| s.1);
                        let mut inputs = vec![target.to_string()];
                        if op != Operator::VerifyStr {
                            inputs.push(self.comparator());
                        }
                        self.push(op, inputs, vec![query]);
                    }
                    None => {
                        let query = self.push(Operator::QueryAttr, vec!["area".into()], vec![child]);
                        self.push(Operator::VerifyStr, vec!["x".into()], vec![query]);
                    }
                }
            }
            6 => {
                let (a, b) = self.pair(inner);
                self.push(Operator::QueryRelation, vec![], vec![a, b]);
            }
            7 => {
                let sample = self.g.qualified_literals.choose(self.rng).copied();
                let child = match sample {
                    Some((owner, _)) if self.rng.gen_bool(0.7) => self.find(owner),
                    _ => self.entities(inner, false),
                };
                let (key, value, qkey, qvalue) = match sample {
                    Some((owner, index)) => {
                        let kb = self.g.kb;
                        let fact = kb.literal_fact(owner, index);
                        let (q, values) = fact.qualifiers.iter().next().expect("qualified fact");
                        (
                            kb.sym_name(fact.key).to_string(),
                            fact.value.to_string(),
                            kb.sym_name(q).to_string(),
                            values[0].to_string(),
                        )
                    }
                    None => ("area".into(), "1".into(), "start time".into(), "1900".into()),
                };
                if self.rng.gen_bool(0.5) {
                    self.push(Operator::QueryAttrQualifier, vec![key, value, qkey], vec![child]);
                } else {
                    self.push(Operator::QueryAttrUnderCondition, vec![key, qkey, qvalue], vec![child]);
                }
            }
            8 => {
                let sample = self.g.qualified_relations.choose(self.rng).copied();
                let (a, b, relation, qkey) = match sample {
                    Some((owner, index)) if self.rng.gen_bool(0.7) => {
                        let fact = self.g.kb.relational_fact(owner, index);
                        let (q, _) = fact.qualifiers.iter().next().expect("qualified fact");
                        let a = self.find(owner);
                        let b = self.find(fact.object);
                        let kb = self.g.kb;
                        (a, b, kb.sym_name(fact.relation).to_string(), kb.sym_name(q).to_string())
                    }
                    _ => {
                        let (a, b) = self.pair(inner);
                        let relation =
                            self.g.relations.choose(self.rng).cloned().unwrap_or_else(|| "related to".into());
                        let qkey = self.g.qualifier_sample(self.rng).map_or_else(|| "start time".into(), |s| s.0);
                        (a, b, relation, qkey)
                    }
                };
                self.push(Operator::QueryRelationQualifier, vec![relation, qkey], vec![a, b]);
            }
            9 => {
                let (a, b) = self.pair(inner);
                let key = self.ordered_key();
                let op = BETWEEN_ORDER.choose(self.rng).unwrap().to_string();
                self.push(Operator::SelectBetween, vec![key, op], vec![a, b]);
            }
            _ => {
                let child = self.entities(inner, false);
                let key = self.ordered_key();
                let op = AMONG_ORDER.choose(self.rng).unwrap().to_string();
                self.push(Operator::SelectAmong, vec![key, op], vec![child]);
            }
        }
    }

    fn ordered_key(&mut self) -> String {
        self.g
            .literal_sample(self.rng, &[ValueKind::Quantity, ValueKind::Year, ValueKind::Date])
            .map_or_else(|| "area".into(), |s| s.0)
    }
}

/// `count` programs of the form `FindAll → [FilterConcept] → Filter{Str,Num,
/// Year,Date}+ → Count` with arguments sampled from `kb`; the shape that
/// benefits from fusion.
pub fn fusion_workload(kb: &KnowledgeBase, count: usize, seed: u64) -> Vec<Program> {
    let g = ProgramGenerator::new(kb, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut nodes = vec![OperatorNode::new(Operator::FindAll, &[], &[])];
            let chain = |nodes: &mut Vec<OperatorNode>, function, inputs: Vec<String>| {
                let dep = nodes.len() - 1;
                nodes.push(OperatorNode {
                    function,
                    inputs,
                    dependencies: vec![dep],
                });
            };
            if rng.gen_bool(0.3) {
                if let Some(c) = g.concepts.choose(&mut rng) {
                    chain(&mut nodes, Operator::FilterConcept, vec![c.clone()]);
                }
            }
            let filters = if rng.gen_bool(0.3) { 2 } else { 1 };
            for _ in 0..filters {
                if let Some((key, value)) = g.literal_sample(&mut rng, &KINDS) {
                    let op = filter_op(value.kind());
                    let mut inputs = vec![key, value.to_string()];
                    if op != Operator::FilterStr {
                        inputs.push(["=", "<", ">"].choose(&mut rng).unwrap().to_string());
                    }
                    chain(&mut nodes, op, inputs);
                }
            }
            chain(&mut nodes, Operator::Count, vec![]);
            Program::new(nodes).expect("chain programs are well-formed")
        })
        .collect()
}

/// `count` random valid programs of up to `max_nodes` nodes.
pub fn mixed_workload(kb: &KnowledgeBase, count: usize, max_nodes: usize, seed: u64) -> Vec<Program> {
    let g = ProgramGenerator::new(kb, max_nodes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| g.generate(&mut rng)).collect()
}
