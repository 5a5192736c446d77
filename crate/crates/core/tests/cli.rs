mod common;

use std::path::Path;
use std::process::{Command, Output};

use wbfmap::compile::{compile, CompileOptions};
use wbfmap::{map_oracle, BeliefNetwork, Evidence};

use common::CHAIN2;

fn wbfmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbfmap")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn field(block: &str, key: &str) -> f64 {
    block
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn solve_chain2() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let out = wbfmap(&["solve", &net, "--evidence", "B=t"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("A=t\nB=t\ncost="));
    assert!((field(&text, "cost") - 0.3285040669720361).abs() < 1e-12);
    assert!((field(&text, "prob") - 0.72).abs() < 1e-12);
}

#[test]
fn kbest_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let text = stdout(&wbfmap(&["kbest", &net, "--evidence", "B=t", "--k", "5"]));
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    assert!(blocks[1].starts_with("A=f\nB=t\n"));
    assert!((field(blocks[1], "prob") - 0.1).abs() < 1e-12);
    let solve = stdout(&wbfmap(&["solve", &net, "--evidence", "B=t"]));
    assert_eq!(solve.trim_end(), blocks[0]);
}

#[test]
fn oracle_has_solve_shape() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let text = stdout(&wbfmap(&["oracle", &net, "--evidence", "B=t"]));
    assert!(text.starts_with("A=t\nB=t\ncost="));
    assert!((field(&text, "prob") - 0.72).abs() < 1e-12);
}

#[test]
fn compile_counts() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let text = stdout(&wbfmap(&["compile", &net, "--evidence", "B=t", "--no-prune01"]));
    assert!(text.starts_with("nodes=13\nchoice_roots=2\ncost_roots=4\nselectors=4\nimages=2\nevidence=1\n"));
}

#[test]
fn dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let out = wbfmap(&["dot", &net, "--evidence", "B=t"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("digraph wbfdag {"));
    assert!(text.trim_end().ends_with('}'));
}

#[test]
fn stats_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let out = wbfmap(&["solve", &net, "--evidence", "B=t", "--stats"]);
    let err = String::from_utf8(out.stderr).unwrap();
    let stats: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert!(stats["expansions"].as_u64().unwrap() > 0);
    assert!(stdout(&wbfmap(&["solve", &net, "--evidence", "B=t"])) == String::from_utf8(out.stdout).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let broken = write(
        dir.path(),
        "zero.json",
        &CHAIN2.replace("[0.9,0.1],[0.5,0.5]", "[0.0,1.0],[0.0,1.0]"),
    );
    let garbage = write(dir.path(), "bad.json", "{not json");
    assert_eq!(wbfmap(&["solve", &broken, "--evidence", "B=t"]).status.code(), Some(1));
    assert_eq!(wbfmap(&["oracle", &broken, "--evidence", "B=t"]).status.code(), Some(1));
    assert_eq!(wbfmap(&["solve", &net, "--evidence", "C=t"]).status.code(), Some(2));
    assert_eq!(wbfmap(&["solve", &garbage]).status.code(), Some(2));
    assert_eq!(wbfmap(&["solve"]).status.code(), Some(2));
    assert_eq!(wbfmap(&["frobnicate", &net]).status.code(), Some(2));
}

#[test]
fn polytree_flag() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "chain2.json", CHAIN2);
    let plain = stdout(&wbfmap(&["solve", &net, "--evidence", "B=t"]));
    let fast = stdout(&wbfmap(&["solve", &net, "--evidence", "B=t", "--polytree"]));
    assert_eq!(plain, fast);
}

#[test]
fn generated_networks_are_reproducible_and_solvable() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let s = seed.to_string();
        let args = ["gen", "--seed", &s, "--nodes", "6", "--deterministic", "0.2"];
        let a = wbfmap(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, wbfmap(&args).stdout);
        let text = stdout(&a);
        let net = BeliefNetwork::from_json(&text).unwrap();
        assert_eq!(net.len(), 6);
        let path = write(dir.path(), &format!("g{seed}.json"), &text);
        let ev = format!("X5={}", net.node(wbfmap::NodeId(5)).values[0]);
        let out = wbfmap(&["solve", &path, "--evidence", &ev, "--heuristic", "min-entry"]);
        let evidence = Evidence::parse(&ev, &net).unwrap();
        match map_oracle(&net, &evidence).unwrap() {
            Some(best) => {
                assert_eq!(out.status.code(), Some(0));
                let p = field(&stdout(&out), "prob");
                assert!((p - best.probability).abs() <= 1e-9 * best.probability);
            }
            None => assert_eq!(out.status.code(), Some(1)),
        }
        let counts = stdout(&wbfmap(&["compile", &path, "--evidence", &ev]));
        let dag = compile(&net, &evidence, CompileOptions::default()).unwrap();
        assert_eq!(field(&counts, "nodes") as usize, dag.len());
    }
}

#[test]
fn gen_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    let out = wbfmap(&["gen", "--seed", "3", "--gen-polytree", "--nodes", "9", "-o", p]);
    assert_eq!(out.status.code(), Some(0));
    let net = BeliefNetwork::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(net.is_polytree());
}
