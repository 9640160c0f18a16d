use serde::{Deserialize, Serialize};

use super::{execution_order, OutputKind, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Offending node, when attributable.
    pub node: Option<usize>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    /// First node carrying an error, for highlighting.
    pub fn first_error_node(&self) -> Option<usize> {
        self.errors().find_map(|d| d.node)
    }
}

/// Structural checks (tree shape, arity, enumerated slots) followed by kind
/// checks against the signature table. Every violation is reported.
pub fn validate(program: &Program) -> ValidationReport {
    let mut diagnostics = Vec::new();
    let mut error = |node: Option<usize>, message: String| {
        diagnostics.push(Diagnostic {
            node,
            severity: Severity::Error,
            message,
        })
    };
    let nodes = program.nodes();

    for (i, node) in nodes.iter().enumerate() {
        let sig = node.function.signature();
        if node.inputs.len() != sig.args.len() {
            let names: Vec<&str> = sig.args.iter().map(|a| a.name).collect();
            error(
                Some(i),
                format!(
                    "{} expects {} argument(s) [{}], got {}",
                    node.function,
                    sig.args.len(),
                    names.join(", "),
                    node.inputs.len()
                ),
            );
        }
        if node.dependencies.len() != sig.deps.len() {
            let what = if node.dependencies.len() < sig.deps.len() { "missing" } else { "too many" };
            error(
                Some(i),
                format!(
                    "{} has {what} dependency inputs: expects {}, got {}",
                    node.function,
                    sig.deps.len(),
                    node.dependencies.len()
                ),
            );
        }
        for (slot, value) in sig.args.iter().zip(&node.inputs) {
            if let Some(choices) = slot.choices() {
                if !choices.contains(&value.trim()) {
                    error(
                        Some(i),
                        format!(
                            "{} argument '{}' must be one of {}, got '{value}'",
                            node.function,
                            slot.name,
                            choices.join(" / ")
                        ),
                    );
                }
            }
        }
        let mut seen = node.dependencies.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            error(Some(i), format!("{} consumes the same node twice; a program must be a tree", node.function));
        }
    }

    let root = program.root();
    for (i, count) in program.consumer_counts().into_iter().enumerate() {
        if i != root && count == 0 {
            error(
                Some(i),
                format!(
                    "node {i} ({}) is not connected to the root; a program must be a tree with a single root (node {root})",
                    nodes[i].function
                ),
            );
        } else if count > 1 {
            error(
                Some(i),
                format!(
                    "node {i} ({}) is consumed by {count} operators; a program must be a tree",
                    nodes[i].function
                ),
            );
        } else if i == root && count > 0 {
            error(Some(i), format!("root node {i} is consumed by another node"));
        }
    }

    match execution_order(program) {
        Err(e) => error(e.node_index(), "dependency cycle; a program must be a tree".to_string()),
        Ok(order) => {
            let mut kinds: Vec<Option<OutputKind>> = vec![None; nodes.len()];
            for i in order {
                let node = &nodes[i];
                let sig = node.function.signature();
                let mut inputs = Vec::with_capacity(node.dependencies.len());
                for (slot, &dep) in node.dependencies.iter().enumerate() {
                    let Some(got) = kinds[dep] else { continue };
                    inputs.push(got);
                    let Some(expected) = sig.deps.get(slot) else { continue };
                    if !expected.accepts(got) {
                        error(
                            Some(i),
                            format!(
                                "illegal dependency: output of {} (node {dep}) feeds {}: {got} not acceptable, expected {}",
                                nodes[dep].function,
                                node.function,
                                expected.expected()
                            ),
                        );
                    }
                }
                kinds[i] = Some(node.function.output_kind(&inputs));
            }
        }
    }

    let ok = !diagnostics.iter().any(|d| d.severity == Severity::Error);
    ValidationReport { ok, diagnostics }
}
