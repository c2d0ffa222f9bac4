use std::path::PathBuf;

use vfkit_core::cli::{run_args, Outcome};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Outcome {
    run_args(std::iter::once("vfkit").chain(args.iter().copied()))
}

fn json(o: &Outcome) -> serde_json::Value {
    serde_json::from_str(&o.stdout).unwrap()
}

#[test]
fn validate_fixture() {
    let o = run(&["validate", &fixture("z4_amalg_z2_z6")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("amalgamated products: 1"));
    assert!(o.stdout.contains("hnn extensions: 0"));
    let o = run(&["validate", &fixture("theta")]);
    assert!(o.stdout.contains("hnn extensions: 2"));
}

#[test]
fn schema_and_algebra_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(fixture("z2_free_z3")).unwrap();

    let missing_row = dir.path().join("missing_row.json");
    std::fs::write(&missing_row, good.replace("[[0,1,2],[1,2,0],[2,0,1]]", "[[0,1,2],[1,2,0]]")).unwrap();
    assert_eq!(run(&["validate", missing_row.to_str().unwrap()]).code, 2);

    let not_json = dir.path().join("not_json.json");
    std::fs::write(&not_json, "{").unwrap();
    assert_eq!(run(&["validate", not_json.to_str().unwrap()]).code, 2);

    let bad_map = dir.path().join("bad_map.json");
    let text = good
        .replace("\"edge_groups\":[\"trivial\"]", "\"edge_groups\":[[[0,1],[1,0]]]")
        .replace("{\"alpha\":[0],\"omega\":[0]}", "{\"alpha\":[0,1],\"omega\":[0,1]}");
    std::fs::write(&bad_map, text).unwrap();
    let o = run(&["validate", bad_map.to_str().unwrap()]);
    assert_eq!(o.code, 3, "{}", o.stderr);

    assert_eq!(run(&["validate", "/nonexistent/x.json"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn rank_reports() {
    let o = run(&["rank", &fixture("f2"), "whole"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("rank: 2\n"));
    let o = run(&["rank", &fixture("z2_free_z3"), "H", "--gens"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("rank: 2\n"));
    assert!(o.stdout.contains("reduced rank: 1\n"));
    assert_eq!(o.stdout.lines().skip_while(|l| *l != "free basis:").count(), 3);
    let o = run(&["rank", &fixture("z2_free_z3"), "torsion"]);
    assert_eq!(o.code, 4);
    assert!(o.stderr.contains("does not act freely"));
    assert_eq!(run(&["rank", &fixture("f2"), "nope"]).code, 2);
}

#[test]
fn dot_exports() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("h.dot");
    let o = run(&["rank", &fixture("f2"), "H", "--dot", dot.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert!(std::fs::read_to_string(&dot).unwrap().contains("digraph"));
    let dot = dir.path().join("fp.dot");
    let o = run(&["intersect", &fixture("f2"), "H", "K", "--dot", dot.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert!(std::fs::read_to_string(&dot).unwrap().contains("digraph"));
}

#[test]
fn intersect_reports() {
    let o = run(&["intersect", &fixture("f2"), "whole", "whole"]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    assert_eq!(v["bound"]["reduced_rank_intersection"], 1);
    assert_eq!(v["bound"]["bound"], 6);
    let o = run(&["intersect", &fixture("z4_amalg_z2_z6"), "H", "K", "--diagnostics"]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    assert_eq!(v["bound"]["m_prime"], 2);
    assert!(v["diagnostics"].as_array().is_some_and(|d| !d.is_empty()));
    assert!(v["components"].is_array());
    let o = run(&["intersect", &fixture("z2_free_z3"), "H", "torsion"]);
    assert_eq!(o.code, 4);
}

#[test]
fn membership() {
    let f = fixture("z2_free_z3");
    assert_eq!(run(&["member", &f, "H", "0:1 1:1 0:1 1:2"]).stdout, "true\n");
    assert_eq!(run(&["member", &f, "H", "0:1 1:1"]).stdout, "false\n");
    assert_eq!(run(&["member", &f, "H", ""]).stdout, "true\n");
    assert_eq!(run(&["member", &f, "H", "0:9"]).code, 2);
}

#[test]
fn oracle_reports() {
    let f = fixture("z2_free_z3");
    let o = run(&["oracle", &f, "H"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(json(&o)["runs"][0]["report"]["verdict"], "corroborated");
    let o = run(&["oracle", &f, "H", "-R", "0", "-L", "0"]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    assert_eq!(v["runs"][0]["report"]["stabilized"], false);
    assert_eq!(v["runs"][0]["report"]["verdict"], "inconclusive");
    let o = run(&["oracle", &f, "H", "K", "-R", "4", "-L", "2"]);
    assert_eq!(json(&o)["stab_count_lower"], 1);
    let o = run(&["oracle", &f, "torsion"]);
    assert_eq!(o.code, 4);
    assert_eq!(json(&o)["fixed_vertex"]["element"], "0:1");
    assert_eq!(run(&["oracle", &f, "H", "--max-ball-vertices", "10"]).code, 6);
    assert_eq!(run(&["oracle", &f, "H", "-R", "13"]).code, 6);
}

#[test]
fn small_corpus() {
    let o = run(&["corpus", "--profile", "amalgam", "--count", "6", "--seed", "3", "--no-oracle"]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    assert_eq!(v["summary"]["bound_holds"], 6);
    assert_eq!(v["profile"], "amalgam");
    let o = run(&["corpus", "--count", "0"]);
    assert_eq!(json(&o)["instances"].as_array().unwrap().len(), 0);
    assert_eq!(run(&["corpus", "--profile", "tree"]).code, 2);
}
