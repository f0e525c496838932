use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spanlab::embed::verify_total_embedding;
use spanlab::experiment::{read_records, ConcentrationReport, ExperimentSpec, Outcome, PatternKind};
use spanlab::io::{read_cells, read_embedding, read_graph, read_vertex_values};

fn spanlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spanlab")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = spanlab(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn gen_replays_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = ok(d, &["--seed", "9", "gen", "gnp", "--n", "25", "--p", "0.4"]);
    let b = ok(d, &["--seed", "9", "gen", "gnp", "--n", "25", "--p", "0.4"]);
    let c = ok(d, &["--seed", "10", "gen", "gnp", "--n", "25", "--p", "0.4"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    ok(d, &["--out", "f.txt", "gen", "f", "--copies", "2"]);
    let f = read_graph(&d.join("f.txt")).unwrap();
    assert_eq!(f.n(), 22);
    ok(d, &["--out", "b.txt", "gen", "backbone", "--r", "3", "--k", "2"]);
    assert_eq!(read_graph(&d.join("b.txt")).unwrap().n(), 6);
}

#[test]
fn bandwidth_and_colour_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "h.txt", "gen", "banded", "--n", "60", "--bandwidth", "4", "--k", "2", "--colouring-out", "planted.csv"]);
    let h = read_graph(&d.join("h.txt")).unwrap();
    ok(d, &["--out", "lab.csv", "bandwidth", "h.txt"]);
    let lab = read_vertex_values(fs::File::open(d.join("lab.csv")).unwrap()).unwrap();
    let mut sorted = lab.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..60).collect::<Vec<_>>());

    ok(d, &["--out", "c.csv", "colour", "h.txt", "--k", "2", "--labelling", "lab.csv"]);
    let col = read_vertex_values(fs::File::open(d.join("c.csv")).unwrap()).unwrap();
    for (u, v) in h.edges() {
        assert_ne!(col[u], col[v]);
    }
    assert!(col.iter().all(|&c| c <= 2));

    ok(d, &["--out", "c4.txt", "gen", "cycle", "--n", "12", "--power", "2"]);
    let out = spanlab(d, &["bandwidth", "c4.txt", "--exact"]);
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("bandwidth 4"), "{summary}");
}

#[test]
fn assign_writes_a_cell_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "h.txt", "gen", "banded", "--n", "400", "--bandwidth", "4", "--k", "2", "--colouring-out", "c.csv"]);
    ok(d, &["--out", "a.csv", "assign", "h.txt", "--colouring", "c.csv", "--k", "2", "--r", "4"]);
    let (header, cells) = read_cells(fs::File::open(d.join("a.csv")).unwrap()).unwrap();
    assert_eq!((header.r, header.k), (4, 2));
    assert_eq!(cells.len(), 400);
    let h = read_graph(&d.join("h.txt")).unwrap();
    for (x, y) in h.edges() {
        let (a, b) = (cells[x].unwrap(), cells[y].unwrap());
        assert_ne!(a.1, b.1, "edge {x}-{y} inside one colour class");
    }
}

#[test]
fn embed_writes_a_verified_map_or_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "h.txt", "gen", "cycle", "--n", "30"]);
    ok(d, &["--seed", "2", "--out", "g.txt", "gen", "gnp", "--n", "30", "--p", "0.9"]);
    ok(d, &["--out", "e.csv", "embed", "h.txt", "g.txt"]);
    let (h, g) = (read_graph(&d.join("h.txt")).unwrap(), read_graph(&d.join("g.txt")).unwrap());
    let e = read_embedding(fs::File::open(d.join("e.csv")).unwrap(), h.n(), g.n()).unwrap();
    assert!(verify_total_embedding(&h, &g, &e));

    // a triangle cannot go into a path
    fs::write(d.join("tri.txt"), "3 3\n0 1\n1 2\n0 2\n").unwrap();
    fs::write(d.join("path.txt"), "3 2\n0 1\n1 2\n").unwrap();
    let out = spanlab(d, &["embed", "tri.txt", "path.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let cert = json(&String::from_utf8(out.stdout).unwrap());
    assert!(cert.is_object());
}

#[test]
fn adversary_certifies_absence() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["--seed", "4", "adversary", "--n", "1100", "--p", "0.3"]);
    let report = json(&out);
    assert_eq!(report["rules_sound"], true);
    assert_eq!(report["rules_complete"], true);
}

#[test]
fn regcheck_reports_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // complete bipartite between 0..6 and 6..12, 12..18 isolated
    let edges: Vec<String> = (0..6).flat_map(|u| (6..12).map(move |v| format!("{u} {v}"))).collect();
    fs::write(d.join("kb.txt"), format!("18 36\n{}\n", edges.join("\n"))).unwrap();
    fs::write(d.join("x.txt"), "0 1 2 3 4 5\n").unwrap();
    fs::write(d.join("y.txt"), "6 7 8 9 10 11\n").unwrap();
    fs::write(d.join("z.txt"), "12 13 14 15 16 17\n").unwrap();
    let dense = json(&ok(d, &["regcheck", "kb.txt", "x.txt", "y.txt", "--eps", "0.3", "--d", "0.5", "--p", "1"]));
    assert!(dense["witness_sizes"].is_null(), "{dense}");
    let empty = json(&ok(d, &["regcheck", "kb.txt", "x.txt", "z.txt", "--eps", "0.3", "--d", "0.5", "--p", "1"]));
    assert!(!empty["witness_sizes"].is_null(), "{empty}");
}

#[test]
fn experiment_subcommands_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut spec = ExperimentSpec::single(30, 1.0, 2, 0.6, PatternKind::HamiltonCycle, vec![1, 2]);
    spec.output = Some(d.join("s.csv"));
    fs::write(d.join("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
    ok(d, &["--workers", "2", "experiment", "sweep", "spec.json"]);
    let recs = read_records(fs::File::open(d.join("s.csv")).unwrap()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.outcome == Outcome::Embedded));
    ok(d, &["experiment", "reverify", "spec.json", "s.csv"]);

    let rep: ConcentrationReport =
        serde_json::from_str(&ok(d, &["experiment", "concentration", "--n", "40", "--p", "0.5", "--runs", "10"])).unwrap();
    assert_eq!(rep.runs, 10);
    assert!(rep.pass);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.txt"), "3 1\n0 7\n").unwrap();
    let out = spanlab(d, &["bandwidth", "bad.txt"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    let out = spanlab(d, &["bandwidth", "missing.txt"]);
    assert!(!out.status.success());
}
