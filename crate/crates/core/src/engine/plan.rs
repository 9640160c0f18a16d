use crate::program::{Operator, Program};

/// Execution strategy for each node of a program.
///
/// A `FindAll` whose consumer is a concept or attribute filter is not
/// materialized; that filter (and any directly following filters) is
/// answered from the indices instead of scanning entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    deferred: Vec<bool>,
    indexed: Vec<bool>,
    groups: Vec<Vec<usize>>,
}

fn is_fusable_filter(op: Operator) -> bool {
    op == Operator::FilterConcept || op.is_attribute_filter()
}

impl Plan {
    /// Plan that evaluates every node on its own.
    pub fn unfused(program: &Program) -> Self {
        Plan {
            deferred: vec![false; program.len()],
            indexed: vec![false; program.len()],
            groups: Vec::new(),
        }
    }

    /// `FindAll` nodes left unmaterialized.
    pub fn is_deferred(&self, node: usize) -> bool {
        self.deferred[node]
    }

    /// Filter nodes answered through index lookups.
    pub fn is_indexed(&self, node: usize) -> bool {
        self.indexed[node]
    }

    pub fn is_fused(&self, node: usize) -> bool {
        self.deferred[node] || self.indexed[node]
    }

    /// Fused chains, each starting at its `FindAll`.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Number of physical steps: one per fused chain plus one per other node.
    pub fn physical_len(&self) -> usize {
        let fused: usize = self.groups.iter().map(Vec::len).sum();
        self.deferred.len() - fused + self.groups.len()
    }
}

/// Rewrites `FindAll` followed by filters into index-backed chains. The
/// logical operators are kept so traces still report each one.
pub fn plan_merge(program: &Program) -> Plan {
    let mut plan = Plan::unfused(program);
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); program.len()];
    for (i, node) in program.nodes().iter().enumerate() {
        for &d in &node.dependencies {
            consumers[d].push(i);
        }
    }
    let sole_filter_consumer = |node: usize| match consumers[node].as_slice() {
        &[c] if is_fusable_filter(program.node(c).function) && program.node(c).dependencies == [node] => Some(c),
        _ => None,
    };
    for (i, node) in program.nodes().iter().enumerate() {
        if node.function != Operator::FindAll {
            continue;
        }
        let Some(mut next) = sole_filter_consumer(i) else { continue };
        plan.deferred[i] = true;
        let mut group = vec![i];
        loop {
            plan.indexed[next] = true;
            group.push(next);
            match sole_filter_consumer(next) {
                Some(c) => next = c,
                None => break,
            }
        }
        plan.groups.push(group);
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::OperatorNode;

    fn program(nodes: Vec<OperatorNode>) -> Program {
        Program::new(nodes).unwrap()
    }

    #[test]
    fn findall_filter_chain_fuses() {
        let p = program(vec![
            OperatorNode::new(Operator::FindAll, &[], &[]),
            OperatorNode::new(Operator::FilterNum, &["area", "100000 km²", ">"], &[0]),
            OperatorNode::new(Operator::Count, &[], &[1]),
        ]);
        let plan = plan_merge(&p);
        assert_eq!(plan.groups(), [vec![0, 1]]);
        assert!(plan.is_deferred(0) && plan.is_indexed(1) && !plan.is_fused(2));
        assert_eq!(plan.physical_len(), 2);
    }

    #[test]
    fn find_filter_chain_is_unchanged() {
        let p = program(vec![
            OperatorNode::new(Operator::Find, &["Germany"], &[]),
            OperatorNode::new(Operator::FilterNum, &["area", "1", ">"], &[0]),
        ]);
        assert_eq!(plan_merge(&p), Plan::unfused(&p));
    }

    #[test]
    fn concept_then_attribute_filter_fuse_together() {
        let p = program(vec![
            OperatorNode::new(Operator::FindAll, &[], &[]),
            OperatorNode::new(Operator::FilterConcept, &["country"], &[0]),
            OperatorNode::new(Operator::FilterNum, &["area", "1", ">"], &[1]),
            OperatorNode::new(Operator::QueryName, &[], &[2]),
        ]);
        assert_eq!(plan_merge(&p).groups(), [vec![0, 1, 2]]);
    }

    #[test]
    fn findall_feeding_non_filter_is_materialized() {
        let p = program(vec![
            OperatorNode::new(Operator::FindAll, &[], &[]),
            OperatorNode::new(Operator::Count, &[], &[0]),
        ]);
        assert!(plan_merge(&p).groups().is_empty());
    }
}
