mod common;

use kopl_core::program::Severity;
use kopl_core::{
    execution_order, parse_program, parse_program_str, serialize_program, validate, Operator, ProgramError,
};
use serde_json::json;

#[test]
fn appendix_b_listing_parses_and_normalizes() {
    let program = parse_program_str(&common::fixture_text("appendix_b.txt")).unwrap();
    assert_eq!(program.len(), 8);
    assert_eq!(program.node(program.root()).function, Operator::Count);
    assert!(program.node(0).dependencies.is_empty());
    assert!(program.node(3).dependencies.is_empty());
    assert!(validate(&program).ok);
    assert_eq!(*execution_order(&program).unwrap().last().unwrap(), program.root());

    let doc = serialize_program(&program);
    assert_eq!(doc.as_array().unwrap().len(), 8);
    assert_eq!(doc[0]["dependencies"], json!([]));
    assert!(!doc.to_string().contains("-1"));
    assert_eq!(parse_program(&doc).unwrap(), program);
    assert_eq!(program, common::fixture_program("figure3_faulty.json"));
}

#[test]
fn both_empty_dependency_styles() {
    let a = parse_program(&json!([{"function": "FindAll", "inputs": [], "dependencies": [-1, -1]},
                                  {"function": "Count", "inputs": [], "dependencies": [0]}]))
    .unwrap();
    let b = parse_program(&json!([{"function": "FindAll", "inputs": []},
                                  {"function": "Count", "inputs": [], "dependencies": [0]}]))
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn parse_errors() {
    assert!(matches!(parse_program(&json!([])), Err(ProgramError::Empty)));
    assert!(matches!(
        parse_program(&json!([{"function": "Union", "inputs": [], "dependencies": []}])),
        Err(ProgramError::UnknownFunction { .. })
    ));
    assert!(matches!(
        parse_program(&json!([{"function": "Count", "inputs": [], "dependencies": [4]}])),
        Err(ProgramError::DependencyOutOfRange { .. })
    ));
    assert!(parse_program(&json!([{"function": "Count", "inputs": [], "dependencies": [0]}])).is_err());
}

#[test]
fn forward_references_are_accepted_when_acyclic() {
    let p = parse_program(&json!([
        {"function": "Count", "inputs": [], "dependencies": [1]},
        {"function": "FindAll", "inputs": [], "dependencies": []}
    ]))
    .unwrap();
    assert!(validate(&p).ok);
    assert_eq!(execution_order(&p).unwrap(), [1, 0]);
    let cyclic = parse_program(&json!([
        {"function": "Count", "inputs": [], "dependencies": [1]},
        {"function": "QueryName", "inputs": [], "dependencies": [0]}
    ]));
    assert!(cyclic.map(|p| !validate(&p).ok).unwrap_or(true));
}

#[test]
fn execution_order_examples() {
    let single = parse_program(&json!([{"function": "FindAll"}])).unwrap();
    assert_eq!(execution_order(&single).unwrap(), [0]);
    let chain = parse_program(&json!([
        {"function": "FindAll"},
        {"function": "FilterConcept", "inputs": ["country"], "dependencies": [0]},
        {"function": "Count", "dependencies": [1]}
    ]))
    .unwrap();
    assert_eq!(execution_order(&chain).unwrap(), [0, 1, 2]);
}

#[test]
fn illegal_dependency_and_two_roots() {
    let report = validate(&common::fixture_program("count_into_qfilter.json"));
    assert!(!report.ok);
    let d = report.errors().next().unwrap();
    assert_eq!(d.node, Some(2));
    assert_eq!(d.severity, Severity::Error);
    assert!(d.message.contains("INT not acceptable, expected ENTITY_SET_WITH_FACTS"), "{}", d.message);

    let report = validate(&common::fixture_program("two_roots.json"));
    assert!(!report.ok);
    assert!(report.errors().any(|d| d.node == Some(0) && d.message.contains("tree")), "{report:?}");

    assert!(validate(&common::fixture_program("figure3_corrected.json")).ok);
    assert!(validate(&common::fixture_program("figure3_faulty.json")).ok);
}

#[test]
fn all_violations_are_reported() {
    let p = parse_program(&json!([
        {"function": "Find", "inputs": [], "dependencies": []},
        {"function": "Relate", "inputs": ["r", "sideways"], "dependencies": [0]},
        {"function": "Count", "inputs": [], "dependencies": [1]},
        {"function": "VerifyNum", "inputs": ["3", ">"], "dependencies": [2]}
    ]))
    .unwrap();
    let report = validate(&p);
    let nodes: Vec<_> = report.errors().filter_map(|d| d.node).collect();
    assert!(nodes.contains(&0) && nodes.contains(&1) && nodes.contains(&3), "{report:?}");
}
