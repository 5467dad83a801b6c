use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracespace")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SWISS: &str = "P(a).P(b).V(b).V(a) | P(b).P(a).V(a).V(b)";

#[test]
fn schedulings_json_report() {
    let o = run(&["schedulings", "-e", SWISS, "--json", "--no-timing"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 2);
    assert_eq!(v["threads"], 2);
    assert_eq!(v["components"].as_array().unwrap().len(), 2);
    assert!(v.get("timing_ms").is_none());
    let dead: Vec<&str> = v["dead"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(dead.len(), 4);
    assert!(dead.contains(&"11/00"));
}

#[test]
fn timing_is_reported_unless_disabled() {
    let o = run(&["schedulings", "-e", SWISS, "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["timing_ms"].is_number());
}

#[test]
fn no_timing_output_is_deterministic() {
    for args in [
        &["schedulings", "-e", SWISS, "--json", "--no-timing"][..],
        &["automaton", "-e", "(P(a).V(a))* | (P(a).V(a))*", "--det", "--json", "--no-timing"][..],
        &["schedulings", "-e", "P(a).V(a) | P(a).V(a) | P(a).V(a)", "--no-timing"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn alternatives_are_summed() {
    let o = run(&["schedulings", "-e", "P(a).V(a) | (P(a).V(a) + P(b).V(b))", "--json", "--no-timing"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["alternatives"].as_array().unwrap().len(), 2);
    assert_eq!(v["count"], 3);
}

#[test]
fn automaton_sizes_on_stdout() {
    let o = run(&["automaton", "-e", "(P(a).V(a))* | (P(a).V(a))*", "--det"]);
    let s = stdout(&o);
    assert!(s.contains("nfa states=3 transitions=8"), "{s}");
    assert!(s.contains("dfa states=3 transitions=10"), "{s}");
}

#[test]
fn absint_reports_loop_heads() {
    let o = run(&["absint", "-e", "(P(a).[a:=a-1].V(a))* | (P(a).[a:=a/2].V(a))*", "--init", "a=[0,1]", "--no-timing"]);
    let s = stdout(&o);
    assert!(o.status.success());
    assert!(s.contains("(entry): a=[0, 1]"), "{s}");
    assert!(s.contains("a=]-inf, 1]"), "{s}");
}

#[test]
fn stdin_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tracespace"))
        .args(["schedulings", "-", "--no-timing"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(b"#cap a 2\nP(a).V(a) | P(a).V(a)\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("schedulings=1"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["schedulings", "-e", "P(a"]).status.code(), Some(1));
    assert_eq!(run(&["automaton", "-e", "P(a).V(a) | P(a).V(a)"]).status.code(), Some(2));
    assert_eq!(run(&["schedulings", "-e", "V(a)"]).status.code(), Some(3));
    assert_eq!(run(&["schedulings", "-e", "P(a).P(a).V(a)"]).status.code(), Some(3));
    assert_eq!(run(&["schedulings", "/nonexistent/file.pv"]).status.code(), Some(5));
    let o = run(&["schedulings", "-e", "V(a)"]);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn oracle_agrees() {
    let o = run(&["oracle", "-e", SWISS]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("agree"));
    assert!(!stdout(&o).contains("DISAGREE"));
}

#[test]
fn generated_programs_parse_back() {
    let o = run(&["gen", "philosophers", "4"]);
    let text = stdout(&o);
    let s = run(&["schedulings", "-e", text.trim(), "--json", "--no-timing"]);
    let v: Value = serde_json::from_str(&stdout(&s)).unwrap();
    assert_eq!(v["count"], 14);
}
