mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use kopl_core::induction::{parse_question, InductionError, ParserBinding, Question};
use kopl_core::synth::{generate_kb, SynthConfig};
use kopl_core::{build_indices, validate, Engine, ExecOptions, IndexBackendKind, Operator};

const FIGURE3: &str = "How many countries share borders with both Germany and France?";

#[test]
fn figure3_question_yields_the_corrected_program() {
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    let program = parse_question(&ParserBinding::default(), &Question::new(FIGURE3).unwrap(), &idx).unwrap();
    assert_eq!(program.len(), 8);
    assert!(program.nodes().iter().any(|n| n.function == Operator::And));
    assert_eq!(program.node(program.root()).function, Operator::Count);
    let result = Engine::new(&kb, &idx).execute(&program, ExecOptions::default()).unwrap();
    assert_eq!(result.answer, "3");
}

#[test]
fn other_template_shapes() {
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    let engine = Engine::new(&kb, &idx);
    let ask = |q: &str| {
        let p = parse_question(&ParserBinding::default(), &Question::new(q).unwrap(), &idx)
            .unwrap_or_else(|e| panic!("{q}: {e}"));
        assert!(validate(&p).ok, "{q}");
        engine.execute(&p, ExecOptions::default()).unwrap().answer
    };
    assert_eq!(ask("How many countries are there?"), "7");
    assert_eq!(ask("What is the area of Germany?"), "357022 km²");
    assert_eq!(ask("Which country has the largest area?"), "France");
    assert_eq!(ask("What is the relation between Germany and France?"), "shares border with");
}

#[test]
fn empty_and_unmatched_questions() {
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    assert_eq!(Question::new("   "), Err(InductionError::EmptyQuestion));
    let err = parse_question(&ParserBinding::default(), &Question::new("Why is the sky blue?").unwrap(), &idx);
    assert!(matches!(err, Err(InductionError::Unparsed(_))));
}

#[test]
fn template_programs_validate_and_are_deterministic() {
    let kb = generate_kb(&SynthConfig::new(300, 11));
    let idx = build_indices(&kb, IndexBackendKind::Trie);
    let binding = ParserBinding::default();
    let e = |i: usize| kb.entities()[i].name.clone();
    let c = kb.concepts()[0].name.clone();
    let r = kb.sym_name(kb.relation_names()[0]).to_string();
    let k = kb.sym_name(kb.attribute_keys()[0]).to_string();
    let questions = [
        format!("How many {c}s are there?"),
        format!("How many {c} {r} both {} and {}?", e(1), e(2)),
        format!("What is the {k} of {}?", e(3)),
        format!("Which {c} has the largest {k}?"),
        format!("What is the relation between {} and {}?", e(4), e(5)),
    ];
    let mut parsed = 0;
    for q in &questions {
        let question = Question::new(q).unwrap();
        if let Ok(p) = parse_question(&binding, &question, &idx) {
            parsed += 1;
            assert!(validate(&p).ok, "{q}");
            assert_eq!(parse_question(&binding, &question, &idx).unwrap(), p);
        }
    }
    assert!(parsed >= 3, "only {parsed} questions parsed");
}

/// Answers one HTTP request with `body` and returns the request body it read.
fn one_shot_server(body: &'static str) -> (String, std::thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/parse", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some((name, value)) = line.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap();
                }
            }
        }
        let mut request = vec![0; length];
        reader.read_exact(&mut request).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        String::from_utf8(request).unwrap()
    });
    (endpoint, handle)
}

#[test]
fn external_parser_round_trip() {
    let (endpoint, server) = one_shot_server(
        r#"{"program":[{"function":"FindAll","inputs":[],"dependencies":[-1]},{"function":"Count","inputs":[],"dependencies":[0]}]}"#,
    );
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    let binding = ParserBinding::External {
        endpoint,
        timeout: Duration::from_secs(5),
    };
    let program = parse_question(&binding, &Question::new("How many things?").unwrap(), &idx).unwrap();
    let sent: serde_json::Value = serde_json::from_str(&server.join().unwrap()).unwrap();
    assert_eq!(sent["question"], "How many things?");
    assert_eq!(program.len(), 2);
}

#[test]
fn unreachable_external_parser_is_unparsed() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let kb = common::fixture_kb("borders.json");
    let idx = build_indices(&kb, IndexBackendKind::Hashing);
    let binding = ParserBinding::External {
        endpoint: format!("http://127.0.0.1:{port}/parse"),
        timeout: Duration::from_millis(500),
    };
    let err = parse_question(&binding, &Question::new("anything").unwrap(), &idx);
    assert!(matches!(err, Err(InductionError::Unparsed(_))), "{err:?}");
}
