use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::index::SchemaKind;
use crate::kb::ValueKind;

/// Result kind of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutputKind {
    EntitySet,
    EntitySetWithFacts,
    Value,
    String,
    Int,
    Bool,
}

impl OutputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::EntitySet => "ENTITY_SET",
            OutputKind::EntitySetWithFacts => "ENTITY_SET_WITH_FACTS",
            OutputKind::Value => "VALUE",
            OutputKind::String => "STRING",
            OutputKind::Int => "INT",
            OutputKind::Bool => "BOOL",
        }
    }

    pub fn is_entity_set(self) -> bool {
        matches!(self, OutputKind::EntitySet | OutputKind::EntitySetWithFacts)
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a dependency slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DepKind {
    /// `ENTITY_SET` or `ENTITY_SET_WITH_FACTS`.
    EntitySet,
    EntitySetWithFacts,
    Value,
}

impl DepKind {
    pub fn accepts(self, kind: OutputKind) -> bool {
        match self {
            DepKind::EntitySet => kind.is_entity_set(),
            DepKind::EntitySetWithFacts => kind == OutputKind::EntitySetWithFacts,
            DepKind::Value => kind == OutputKind::Value,
        }
    }

    pub fn expected(self) -> OutputKind {
        match self {
            DepKind::EntitySet => OutputKind::EntitySet,
            DepKind::EntitySetWithFacts => OutputKind::EntitySetWithFacts,
            DepKind::Value => OutputKind::Value,
        }
    }
}

/// How an argument slot is filled in an editor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SlotKind {
    /// Free text completed from a schema store.
    Schema { schema: SchemaKind },
    /// A literal parsed to the given kind.
    Literal { value: ValueKind },
    /// Free text compared after rendering.
    Text,
    /// One of a fixed set of choices.
    Choice { choices: &'static [&'static str] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArgSlot {
    pub name: &'static str,
    pub slot: SlotKind,
}

impl ArgSlot {
    /// Accepted values for enumerated slots.
    pub fn choices(&self) -> Option<&'static [&'static str]> {
        match self.slot {
            SlotKind::Choice { choices } => Some(choices),
            _ => None,
        }
    }
}

/// Output kind rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputRule {
    Fixed(OutputKind),
    /// Same kind as the first dependency.
    SameAsInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub args: &'static [ArgSlot],
    pub deps: &'static [DepKind],
    pub output: OutputRule,
}

pub const DIRECTIONS: &[&str] = &["forward", "backward"];
pub const COMPARATORS: &[&str] = &["=", "!=", "<", ">"];
pub const BETWEEN_ORDER: &[&str] = &["greater", "less"];
pub const AMONG_ORDER: &[&str] = &["largest", "smallest"];

const fn schema(name: &'static str, schema: SchemaKind) -> ArgSlot {
    ArgSlot {
        name,
        slot: SlotKind::Schema { schema },
    }
}

const fn literal(name: &'static str, value: ValueKind) -> ArgSlot {
    ArgSlot {
        name,
        slot: SlotKind::Literal { value },
    }
}

const fn text(name: &'static str) -> ArgSlot {
    ArgSlot {
        name,
        slot: SlotKind::Text,
    }
}

const fn choice(name: &'static str, choices: &'static [&'static str]) -> ArgSlot {
    ArgSlot {
        name,
        slot: SlotKind::Choice { choices },
    }
}

const ENTITY: ArgSlot = schema("entity", SchemaKind::Entity);
const CONCEPT: ArgSlot = schema("concept", SchemaKind::Concept);
const RELATION: ArgSlot = schema("relation", SchemaKind::Relation);
const KEY: ArgSlot = schema("key", SchemaKind::Attribute);
const QKEY: ArgSlot = schema("qkey", SchemaKind::QualifierKey);
const DIRECTION: ArgSlot = choice("direction", DIRECTIONS);
const OP: ArgSlot = choice("op", COMPARATORS);

const E: DepKind = DepKind::EntitySet;
const EF: DepKind = DepKind::EntitySetWithFacts;
const V: DepKind = DepKind::Value;

macro_rules! operators {
    ($($variant:ident => [$($arg:expr),*], [$($dep:expr),*], $out:expr;)*) => {
        /// The knowledge operator inventory.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Operator {
            $($variant,)*
        }

        impl Operator {
            pub const ALL: &'static [Operator] = &[$(Operator::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Operator::$variant => stringify!($variant),)*
                }
            }

            pub fn signature(self) -> &'static Signature {
                match self {
                    $(Operator::$variant => {
                        const SIG: Signature = Signature {
                            args: &[$($arg),*],
                            deps: &[$($dep),*],
                            output: $out,
                        };
                        &SIG
                    })*
                }
            }
        }

        impl FromStr for Operator {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok(Operator::$variant),)*
                    other => Err(other.to_string()),
                }
            }
        }
    };
}

use OutputKind as K;
use OutputRule::Fixed;

operators! {
    FindAll => [], [], Fixed(K::EntitySet);
    Find => [ENTITY], [], Fixed(K::EntitySet);
    QueryName => [], [E], Fixed(K::String);
    Count => [], [E], Fixed(K::Int);
    QueryAttr => [KEY], [E], Fixed(K::Value);
    QueryAttrUnderCondition => [KEY, QKEY, text("qvalue")], [E], Fixed(K::Value);
    QueryRelation => [], [E, E], Fixed(K::String);
    QueryAttrQualifier => [KEY, text("value"), QKEY], [E], Fixed(K::Value);
    QueryRelationQualifier => [RELATION, QKEY], [E, E], Fixed(K::Value);
    Relate => [RELATION, DIRECTION], [E], Fixed(K::EntitySetWithFacts);
    FilterConcept => [CONCEPT], [E], OutputRule::SameAsInput;
    FilterStr => [KEY, literal("value", ValueKind::String)], [E], Fixed(K::EntitySetWithFacts);
    FilterNum => [KEY, literal("value", ValueKind::Quantity), OP], [E], Fixed(K::EntitySetWithFacts);
    FilterYear => [KEY, literal("value", ValueKind::Year), OP], [E], Fixed(K::EntitySetWithFacts);
    FilterDate => [KEY, literal("value", ValueKind::Date), OP], [E], Fixed(K::EntitySetWithFacts);
    QFilterStr => [QKEY, literal("qvalue", ValueKind::String)], [EF], Fixed(K::EntitySetWithFacts);
    QFilterNum => [QKEY, literal("qvalue", ValueKind::Quantity), OP], [EF], Fixed(K::EntitySetWithFacts);
    QFilterYear => [QKEY, literal("qvalue", ValueKind::Year), OP], [EF], Fixed(K::EntitySetWithFacts);
    QFilterDate => [QKEY, literal("qvalue", ValueKind::Date), OP], [EF], Fixed(K::EntitySetWithFacts);
    VerifyStr => [literal("value", ValueKind::String)], [V], Fixed(K::Bool);
    VerifyNum => [literal("value", ValueKind::Quantity), OP], [V], Fixed(K::Bool);
    VerifyYear => [literal("value", ValueKind::Year), OP], [V], Fixed(K::Bool);
    VerifyDate => [literal("value", ValueKind::Date), OP], [V], Fixed(K::Bool);
    SelectBetween => [KEY, choice("op", BETWEEN_ORDER)], [E, E], Fixed(K::String);
    SelectAmong => [KEY, choice("op", AMONG_ORDER)], [E], Fixed(K::String);
    And => [], [E, E], Fixed(K::EntitySet);
    Or => [], [E, E], Fixed(K::EntitySet);
}

impl Operator {
    /// Literal kind compared by an attribute filter, qualifier filter or
    /// verification operator.
    pub fn literal_kind(self) -> Option<ValueKind> {
        use Operator::*;
        match self {
            FilterStr | QFilterStr | VerifyStr => Some(ValueKind::String),
            FilterNum | QFilterNum | VerifyNum => Some(ValueKind::Quantity),
            FilterYear | QFilterYear | VerifyYear => Some(ValueKind::Year),
            FilterDate | QFilterDate | VerifyDate => Some(ValueKind::Date),
            _ => None,
        }
    }

    pub fn is_attribute_filter(self) -> bool {
        matches!(
            self,
            Operator::FilterStr | Operator::FilterNum | Operator::FilterYear | Operator::FilterDate
        )
    }

    pub fn is_qualifier_filter(self) -> bool {
        matches!(
            self,
            Operator::QFilterStr | Operator::QFilterNum | Operator::QFilterYear | Operator::QFilterDate
        )
    }

    pub fn is_verify(self) -> bool {
        matches!(
            self,
            Operator::VerifyStr | Operator::VerifyNum | Operator::VerifyYear | Operator::VerifyDate
        )
    }

    /// Output kind given the kinds of the dependencies (used for
    /// `FilterConcept`, which forwards its input kind).
    pub fn output_kind(self, inputs: &[OutputKind]) -> OutputKind {
        match self.signature().output {
            OutputRule::Fixed(kind) => kind,
            OutputRule::SameAsInput => match inputs.first() {
                Some(&k) if k.is_entity_set() => k,
                _ => OutputKind::EntitySet,
            },
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
