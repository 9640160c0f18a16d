//! Question → program binding. A remote parser can be attached over HTTP;
//! otherwise regex templates map common question shapes to program
//! skeletons whose schema slots are resolved against the completion index.

use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde_json::Value;
use thiserror::Error;

use crate::index::{IndexSet, SchemaKind};
use crate::program::{parse_program, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("could not parse the question: {0}")]
    Unparsed(String),
}

/// A natural-language question; non-empty after trimming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question(String);

impl Question {
    pub fn new(text: &str) -> Result<Self, InductionError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(InductionError::EmptyQuestion);
        }
        Ok(Question(text.to_string()))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub enum ParserBinding {
    /// `POST {"question": str}` → `{"program": [...]}`.
    External { endpoint: String, timeout: Duration },
    Template(TemplateSet),
}

impl Default for ParserBinding {
    fn default() -> Self {
        ParserBinding::Template(TemplateSet::builtin())
    }
}

/// Maps a question to a program. External programs are returned as sent;
/// template programs always pass validation.
pub fn parse_question(binding: &ParserBinding, question: &Question, idx: &IndexSet) -> Result<Program, InductionError> {
    match binding {
        ParserBinding::External { endpoint, timeout } => parse_remote(endpoint, *timeout, question),
        ParserBinding::Template(templates) => templates.parse(question, idx),
    }
}

fn parse_remote(endpoint: &str, timeout: Duration, question: &Question) -> Result<Program, InductionError> {
    let unparsed = |e: &dyn std::fmt::Display| InductionError::Unparsed(format!("parser at {endpoint}: {e}"));
    let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
    let mut response = agent
        .post(endpoint)
        .send_json(serde_json::json!({ "question": question.text() }))
        .map_err(|e| unparsed(&e))?;
    let body: Value = response.body_mut().read_json().map_err(|e| unparsed(&e))?;
    let program = body.get("program").ok_or_else(|| unparsed(&"response has no \"program\""))?;
    parse_program(program).map_err(|e| unparsed(&e))
}

/// A question pattern with named capture slots and a program skeleton whose
/// strings may reference slots as `{name}`.
///
/// Slot kinds follow the group name: `e1`, `e2`… are entities, `concept`,
/// `relation`, `key` and `qkey` are schema names, `order` is normalized to
/// `largest`/`smallest`, anything else is copied verbatim.
#[derive(Debug, Clone)]
pub struct TemplateRule {
    pub name: &'static str,
    pattern: Regex,
    skeleton: Value,
}

impl TemplateRule {
    /// Panics on an invalid pattern or skeleton; rules are static data.
    pub fn new(name: &'static str, pattern: &str, skeleton: &str) -> Self {
        TemplateRule {
            name,
            pattern: Regex::new(&format!("(?i)^{pattern}$")).expect("template pattern"),
            skeleton: serde_json::from_str(skeleton).expect("template skeleton"),
        }
    }

    fn apply(&self, text: &str, idx: &IndexSet) -> Option<Program> {
        let caps = self.pattern.captures(text)?;
        let mut filled = Vec::new();
        for name in self.pattern.capture_names().flatten() {
            let raw = caps.name(name)?.as_str().trim();
            filled.push((name, resolve_slot(name, raw, idx)?));
        }
        let program = substitute(&self.skeleton, &filled);
        parse_program(&program).ok()
    }
}

fn substitute(template: &Value, slots: &[(&str, String)]) -> Value {
    match template {
        Value::String(s) => {
            let mut out = s.clone();
            for (name, value) in slots {
                out = out.replace(&format!("{{{name}}}"), value);
            }
            Value::String(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(|v| substitute(v, slots)).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), substitute(v, slots))).collect()),
        other => other.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    rules: Vec<TemplateRule>,
}

impl TemplateSet {
    pub fn new(rules: Vec<TemplateRule>) -> Self {
        TemplateSet { rules }
    }

    pub fn rules(&self) -> &[TemplateRule] {
        &self.rules
    }

    /// Rules for common single-hop and comparison questions, tried in order.
    pub fn builtin() -> Self {
        static RULES: OnceLock<Vec<TemplateRule>> = OnceLock::new();
        let rules = RULES.get_or_init(|| {
            vec![
                TemplateRule::new(
                    "relation-with-both",
                    r"how many (?P<concept>.+?) (?P<relation>.+?) both (?P<e1>.+?) and (?P<e2>.+?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"Relate","inputs":["{relation}","backward"],"dependencies":[0]},
                        {"function":"FilterConcept","inputs":["{concept}"],"dependencies":[1]},
                        {"function":"Find","inputs":["{e2}"],"dependencies":[]},
                        {"function":"Relate","inputs":["{relation}","backward"],"dependencies":[3]},
                        {"function":"FilterConcept","inputs":["{concept}"],"dependencies":[4]},
                        {"function":"And","inputs":[],"dependencies":[2,5]},
                        {"function":"Count","inputs":[],"dependencies":[6]}]"#,
                ),
                TemplateRule::new(
                    "count-concept",
                    r"how many (?P<concept>.+?) are there\s*\??",
                    r#"[{"function":"FindAll","inputs":[],"dependencies":[]},
                        {"function":"FilterConcept","inputs":["{concept}"],"dependencies":[0]},
                        {"function":"Count","inputs":[],"dependencies":[1]}]"#,
                ),
                TemplateRule::new(
                    "relation-between",
                    r"what is the relation(?:ship)? between (?P<e1>.+?) and (?P<e2>.+?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"Find","inputs":["{e2}"],"dependencies":[]},
                        {"function":"QueryRelation","inputs":[],"dependencies":[0,1]}]"#,
                ),
                TemplateRule::new(
                    "relation-start",
                    r"since when (?:does|did|has) (?P<e1>.+?) (?P<relation>.+?) (?P<e2>[^ ]+?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"Find","inputs":["{e2}"],"dependencies":[]},
                        {"function":"QueryRelationQualifier","inputs":["{relation}","start time"],"dependencies":[0,1]}]"#,
                ),
                TemplateRule::new(
                    "attribute-compare",
                    r"is the (?P<key>.+?) of (?P<e1>.+?) (?:more|greater|larger|bigger) than (?P<value>[\d.,]+(?: [^\s?]+)?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"QueryAttr","inputs":["{key}"],"dependencies":[0]},
                        {"function":"VerifyNum","inputs":["{value}",">"],"dependencies":[1]}]"#,
                ),
                TemplateRule::new(
                    "attribute-of",
                    r"what is the (?P<key>.+?) of (?P<e1>.+?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"QueryAttr","inputs":["{key}"],"dependencies":[0]}]"#,
                ),
                TemplateRule::new(
                    "extreme-among",
                    r"which (?P<concept>.+?) (?:has|have) the (?P<order>largest|biggest|highest|greatest|smallest|lowest|least) (?P<key>.+?)\s*\??",
                    r#"[{"function":"FindAll","inputs":[],"dependencies":[]},
                        {"function":"FilterConcept","inputs":["{concept}"],"dependencies":[0]},
                        {"function":"SelectAmong","inputs":["{key}","{order}"],"dependencies":[1]}]"#,
                ),
                TemplateRule::new(
                    "related-to",
                    r"which (?P<concept>.+?) (?P<relation>.+?) (?P<e1>[^ ]+?)\s*\??",
                    r#"[{"function":"Find","inputs":["{e1}"],"dependencies":[]},
                        {"function":"Relate","inputs":["{relation}","backward"],"dependencies":[0]},
                        {"function":"FilterConcept","inputs":["{concept}"],"dependencies":[1]},
                        {"function":"QueryName","inputs":[],"dependencies":[2]}]"#,
                ),
            ]
        });
        TemplateSet { rules: rules.clone() }
    }

    /// First rule whose pattern matches and whose slots all resolve.
    pub fn parse(&self, question: &Question, idx: &IndexSet) -> Result<Program, InductionError> {
        self.rules
            .iter()
            .find_map(|rule| rule.apply(question.text(), idx))
            .ok_or_else(|| InductionError::Unparsed(format!("no template matches \"{}\"", question.text())))
    }
}

fn resolve_slot(name: &str, raw: &str, idx: &IndexSet) -> Option<String> {
    let kind = match name {
        "concept" => SchemaKind::Concept,
        "relation" => SchemaKind::Relation,
        "key" => SchemaKind::Attribute,
        "qkey" => SchemaKind::QualifierKey,
        "order" => {
            let largest = ["largest", "biggest", "highest", "greatest"].iter().any(|w| raw.eq_ignore_ascii_case(w));
            return Some(if largest { "largest" } else { "smallest" }.to_string());
        }
        n if n.starts_with('e') && n[1..].chars().all(|c| c.is_ascii_digit()) => {
            return resolve_entity(raw, idx);
        }
        _ => return Some(raw.to_string()),
    };
    resolve_schema(kind, raw, idx)
}

fn resolve_entity(raw: &str, idx: &IndexSet) -> Option<String> {
    let stripped = raw.strip_prefix("the ").unwrap_or(raw);
    [raw, stripped].into_iter().find_map(|text| {
        if !idx.entities_named(text).is_empty() {
            return Some(text.to_string());
        }
        exact_ignoring_case(SchemaKind::Entity, text, idx)
    })
}

fn exact_ignoring_case(kind: SchemaKind, text: &str, idx: &IndexSet) -> Option<String> {
    idx.complete(kind, text, 16)
        .ok()?
        .into_iter()
        .find(|c| c.to_lowercase() == text.to_lowercase())
}

/// Tries the phrase as written, then singularized, then with trailing words
/// dropped; exact (case-insensitive) matches win over prefix matches.
fn resolve_schema(kind: SchemaKind, raw: &str, idx: &IndexSet) -> Option<String> {
    let singular: Vec<String> = raw.split_whitespace().map(singularize).collect();
    let mut variants = vec![raw.to_string()];
    for n in (1..=singular.len()).rev() {
        variants.push(singular[..n].join(" "));
    }
    variants.dedup();
    variants
        .iter()
        .find_map(|v| exact_ignoring_case(kind, v, idx))
        .or_else(|| {
            variants.iter().find_map(|v| {
                let needle = v.to_lowercase();
                idx.complete(kind, v, 1)
                    .ok()?
                    .into_iter()
                    .find(|c| c.to_lowercase().starts_with(&needle))
            })
        })
}

fn singularize(word: &str) -> String {
    let lower = word.to_lowercase();
    if let Some(stem) = lower.strip_suffix("ies") {
        if !stem.is_empty() {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "shes", "ches", "xes"] {
        if lower.ends_with(suffix) {
            return lower[..lower.len() - 2].to_string();
        }
    }
    match lower.strip_suffix('s') {
        Some(stem) if !stem.ends_with('s') && stem.len() > 1 => stem.to_string(),
        _ => lower,
    }
}
