//! Literal values attached to entities and qualifiers, and the comparison
//! rules shared by the index, the engine and verification operators.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit used for quantities that carry no unit.
pub const UNITLESS: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Quantity,
    Year,
    Date,
}

impl ValueKind {
    pub const ALL: [ValueKind; 4] = [
        ValueKind::String,
        ValueKind::Quantity,
        ValueKind::Year,
        ValueKind::Date,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Quantity => "quantity",
            ValueKind::Year => "year",
            ValueKind::Date => "date",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueKind {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "string" => Ok(ValueKind::String),
            "quantity" => Ok(ValueKind::Quantity),
            "year" => Ok(ValueKind::Year),
            "date" => Ok(ValueKind::Date),
            other => Err(ValueError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("unknown value kind '{0}'")]
    UnknownKind(String),
    #[error("cannot parse '{text}' as {kind}")]
    Unparsable { kind: ValueKind, text: String },
    #[error("unknown comparator '{0}'")]
    UnknownComparator(String),
}

/// A typed literal: the value half of an attribute or qualifier.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueLiteral {
    String(Arc<str>),
    Quantity { amount: f64, unit: Arc<str> },
    Year(i32),
    Date(NaiveDate),
}

impl ValueLiteral {
    pub fn string(text: impl Into<Arc<str>>) -> Self {
        ValueLiteral::String(text.into())
    }

    pub fn quantity(amount: f64, unit: impl Into<Arc<str>>) -> Self {
        ValueLiteral::Quantity {
            amount,
            unit: unit.into(),
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            ValueLiteral::String(_) => ValueKind::String,
            ValueLiteral::Quantity { .. } => ValueKind::Quantity,
            ValueLiteral::Year(_) => ValueKind::Year,
            ValueLiteral::Date(_) => ValueKind::Date,
        }
    }

    /// Parses an operator argument slot into a value of `kind`.
    ///
    /// Quantities are `"<amount> <unit>"` with the unit optional, dates are
    /// `yyyy-mm-dd` or `yyyy/mm/dd`, years are bare integers.
    pub fn parse_as(kind: ValueKind, text: &str) -> Result<Self, ValueError> {
        let bad = || ValueError::Unparsable {
            kind,
            text: text.to_string(),
        };
        let trimmed = text.trim();
        match kind {
            ValueKind::String => Ok(ValueLiteral::String(text.into())),
            ValueKind::Quantity => {
                let (number, unit) = match trimmed.find(char::is_whitespace) {
                    Some(at) => (&trimmed[..at], trimmed[at..].trim()),
                    None => (trimmed, ""),
                };
                let amount: f64 = number.replace(',', "").parse().map_err(|_| bad())?;
                if !amount.is_finite() {
                    return Err(bad());
                }
                let unit = if unit.is_empty() { UNITLESS } else { unit };
                Ok(ValueLiteral::quantity(amount, unit))
            }
            ValueKind::Year => trimmed.parse().map(ValueLiteral::Year).map_err(|_| bad()),
            ValueKind::Date => NaiveDate::parse_from_str(trimmed, "%Y-%m-%d")
                .or_else(|_| NaiveDate::parse_from_str(trimmed, "%Y/%m/%d"))
                .map(ValueLiteral::Date)
                .map_err(|_| bad()),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ValueLiteral::String(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ValueLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueLiteral::String(s) => f.write_str(s),
            ValueLiteral::Quantity { amount, unit } => {
                write_amount(f, *amount)?;
                if &**unit != UNITLESS {
                    write!(f, " {unit}")?;
                }
                Ok(())
            }
            ValueLiteral::Year(y) => write!(f, "{y}"),
            ValueLiteral::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

fn write_amount(f: &mut fmt::Formatter<'_>, amount: f64) -> fmt::Result {
    if amount.fract() == 0.0 && amount.abs() < 1e15 {
        write!(f, "{}", amount as i64)
    } else {
        write!(f, "{amount}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Comparator {
    pub const ALL: [Comparator; 4] = [Comparator::Eq, Comparator::Ne, Comparator::Lt, Comparator::Gt];

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
        }
    }

    /// Applies the comparator to an ordering of `stored` relative to `target`.
    /// `None` means the two values are incomparable.
    pub fn holds(self, ordering: Option<Ordering>) -> bool {
        match (self, ordering) {
            (Comparator::Eq, Some(o)) => o == Ordering::Equal,
            (Comparator::Ne, Some(o)) => o != Ordering::Equal,
            (Comparator::Lt, Some(o)) => o == Ordering::Less,
            (Comparator::Gt, Some(o)) => o == Ordering::Greater,
            (Comparator::Ne, None) => true,
            (_, None) => false,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Comparator {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "=" => Ok(Comparator::Eq),
            "!=" => Ok(Comparator::Ne),
            "<" => Ok(Comparator::Lt),
            ">" => Ok(Comparator::Gt),
            other => Err(ValueError::UnknownComparator(other.to_string())),
        }
    }
}

/// Orders `a` relative to `b`, or `None` when the pair has no defined order.
///
/// Strings only support equality, so distinct strings yield `None` for
/// `<`/`>` purposes through [`compare_values`]. Quantities are ordered only
/// within one unit. A date compared with a year is projected onto its year.
pub fn value_ordering(a: &ValueLiteral, b: &ValueLiteral) -> Option<Ordering> {
    use ValueLiteral::*;
    match (a, b) {
        (String(x), String(y)) => Some(x.cmp(y)),
        (Quantity { amount: x, unit: ux }, Quantity { amount: y, unit: uy }) if ux == uy => {
            x.partial_cmp(y)
        }
        (Year(x), Year(y)) => Some(x.cmp(y)),
        (Date(x), Date(y)) => Some(x.cmp(y)),
        (Date(x), Year(y)) => Some(x.year().cmp(y)),
        (Year(x), Date(y)) => Some(x.cmp(&y.year())),
        _ => None,
    }
}

/// Total comparison used by every filter and verification operator.
pub fn compare_values(a: &ValueLiteral, cmp: Comparator, b: &ValueLiteral) -> bool {
    if let (ValueLiteral::String(_), ValueLiteral::String(_)) = (a, b) {
        if matches!(cmp, Comparator::Lt | Comparator::Gt) {
            return false;
        }
    }
    cmp.holds(value_ordering(a, b))
}
