//! KoPL programs: a list of operator nodes whose dependency edges form a
//! tree, in the JSON exchange format
//! `[{"function": str, "inputs": [str], "dependencies": [int]}]`.

mod ops;
mod validate;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde_json::{json, Value};
use thiserror::Error;

pub use ops::{
    ArgSlot, DepKind, Operator, OutputKind, OutputRule, Signature, SlotKind, AMONG_ORDER, BETWEEN_ORDER,
    COMPARATORS, DIRECTIONS,
};
pub use validate::{validate, Diagnostic, Severity, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorNode {
    pub function: Operator,
    pub inputs: Vec<String>,
    pub dependencies: Vec<usize>,
}

impl OperatorNode {
    pub fn new(function: Operator, inputs: &[&str], dependencies: &[usize]) -> Self {
        OperatorNode {
            function,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            dependencies: dependencies.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    nodes: Vec<OperatorNode>,
    root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("empty program")]
    Empty,
    #[error("a program must be a JSON list of operator nodes")]
    NotAList,
    #[error("node {index}: {message}")]
    Malformed { index: usize, message: String },
    #[error("node {index}: unknown function '{name}'")]
    UnknownFunction { index: usize, name: String },
    #[error("node {index}: dependency {dependency} is out of range")]
    DependencyOutOfRange { index: usize, dependency: i64 },
    #[error("node {index} depends on itself")]
    SelfReference { index: usize },
    #[error("dependency cycle through node {index}")]
    Cycle { index: usize },
}

impl ProgramError {
    pub fn node_index(&self) -> Option<usize> {
        match self {
            ProgramError::Empty | ProgramError::NotAList => None,
            ProgramError::Malformed { index, .. }
            | ProgramError::UnknownFunction { index, .. }
            | ProgramError::DependencyOutOfRange { index, .. }
            | ProgramError::SelfReference { index }
            | ProgramError::Cycle { index } => Some(*index),
        }
    }
}

impl Program {
    /// Builds a program from nodes, checking indices. Structural and kind
    /// problems are left for [`validate`].
    pub fn new(nodes: Vec<OperatorNode>) -> Result<Self, ProgramError> {
        if nodes.is_empty() {
            return Err(ProgramError::Empty);
        }
        for (index, node) in nodes.iter().enumerate() {
            for &dep in &node.dependencies {
                if dep >= nodes.len() {
                    return Err(ProgramError::DependencyOutOfRange {
                        index,
                        dependency: dep as i64,
                    });
                }
                if dep == index {
                    return Err(ProgramError::SelfReference { index });
                }
            }
        }
        let root = unconsumed(&nodes).last().copied().unwrap_or(nodes.len() - 1);
        Ok(Program { nodes, root })
    }

    pub fn nodes(&self) -> &[OperatorNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &OperatorNode {
        &self.nodes[index]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The node no other node consumes. With several such nodes the last one
    /// is taken and [`validate`] reports the others.
    pub fn root(&self) -> usize {
        self.root
    }

    /// Number of nodes consuming each node.
    pub fn consumer_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nodes.len()];
        for node in &self.nodes {
            for &d in &node.dependencies {
                counts[d] += 1;
            }
        }
        counts
    }

    pub fn to_json(&self) -> Value {
        serialize_program(self)
    }
}

fn unconsumed(nodes: &[OperatorNode]) -> Vec<usize> {
    let mut consumed = vec![false; nodes.len()];
    for node in nodes {
        for &d in &node.dependencies {
            if d < nodes.len() {
                consumed[d] = true;
            }
        }
    }
    (0..nodes.len()).filter(|&i| !consumed[i]).collect()
}

/// Parses the JSON exchange format. `-1` dependency entries are dropped and a
/// missing or empty list means no dependencies.
pub fn parse_program(document: &Value) -> Result<Program, ProgramError> {
    let list = document.as_array().ok_or(ProgramError::NotAList)?;
    if list.is_empty() {
        return Err(ProgramError::Empty);
    }
    let mut nodes = Vec::with_capacity(list.len());
    for (index, raw) in list.iter().enumerate() {
        let malformed = |message: &str| ProgramError::Malformed {
            index,
            message: message.to_string(),
        };
        let obj = raw.as_object().ok_or_else(|| malformed("expected an object"))?;
        let name = obj
            .get("function")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("missing \"function\""))?;
        let function = name.parse::<Operator>().map_err(|name| ProgramError::UnknownFunction { index, name })?;
        let inputs = match obj.get("inputs") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    Value::Bool(b) => Ok(b.to_string()),
                    _ => Err(malformed("inputs must be strings")),
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(malformed("\"inputs\" must be a list")),
        };
        let dependencies = match obj.get("dependencies") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => {
                let mut deps = Vec::with_capacity(items.len());
                for item in items {
                    let d = item
                        .as_i64()
                        .ok_or_else(|| malformed("dependencies must be integers"))?;
                    if d == -1 {
                        continue;
                    }
                    if d < 0 || d as usize >= list.len() {
                        return Err(ProgramError::DependencyOutOfRange { index, dependency: d });
                    }
                    deps.push(d as usize);
                }
                deps
            }
            Some(_) => return Err(malformed("\"dependencies\" must be a list")),
        };
        nodes.push(OperatorNode {
            function,
            inputs,
            dependencies,
        });
    }
    Program::new(nodes)
}

/// Parses a program from JSON text. A Python-style listing such as
/// `program = {[ ... ]}` is unwrapped to its list first.
pub fn parse_program_str(text: &str) -> Result<Program, ProgramError> {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => unwrap_listing(text)
            .and_then(|inner| serde_json::from_str(inner).ok())
            .ok_or_else(|| ProgramError::Malformed {
                index: 0,
                message: format!("invalid JSON: {e}"),
            })?,
    };
    parse_program(&value)
}

fn unwrap_listing(text: &str) -> Option<&str> {
    let mut body = text.trim();
    if let Some((lhs, rhs)) = body.split_once('=') {
        if lhs.trim().chars().all(|c| c.is_alphanumeric() || c == '_') {
            body = rhs.trim();
        }
    }
    let inner = body.strip_prefix('{')?.strip_suffix('}')?.trim();
    (inner.starts_with('[') && inner.ends_with(']')).then_some(inner)
}

/// Emits the normalized exchange format: no `-1` sentinels, `[]` for leaves.
pub fn serialize_program(program: &Program) -> Value {
    Value::Array(
        program
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "function": n.function.name(),
                    "inputs": n.inputs,
                    "dependencies": n.dependencies,
                })
            })
            .collect(),
    )
}

/// Topological order of all nodes, choosing the lowest ready index first.
/// For a valid tree the root comes last.
pub fn execution_order(program: &Program) -> Result<Vec<usize>, ProgramError> {
    let n = program.nodes.len();
    let mut pending: Vec<usize> = program.nodes.iter().map(|node| node.dependencies.len()).collect();
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, node) in program.nodes.iter().enumerate() {
        for &d in &node.dependencies {
            consumers[d].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &consumers[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < n {
        let index = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
        return Err(ProgramError::Cycle { index });
    }
    Ok(order)
}
