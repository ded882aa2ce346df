//! End-to-end CLI tests: exit codes, file formats, and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn harmony(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmony"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

const SEC4: &str = r#"{
  "mode": "classic",
  "totalRent": 100,
  "compensationBound": 250,
  "rooms": [{"name": "bedroom"}, {"name": "basement"}],
  "agents": [
    {"name": "alice", "oracle": {"type": "quasilinear", "values": [150, 0]}},
    {"name": "bob", "oracle": {"type": "quasilinear", "values": [140, 10]}}
  ]
}"#;

fn read_json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_exact_writes_solution_and_verifies() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "instance.json", SEC4);
    let out = dir.path().join("solution.json");
    let out_str = out.to_str().unwrap();

    let result = harmony(&["solve", "-i", &input, "-o", out_str]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let solution = read_json(out_str);
    assert_eq!(solution["pricesExact"][0], "115");
    assert_eq!(solution["pricesExact"][1], "-15");
    assert_eq!(solution["assignment"]["bedroom"][0], "alice");
    assert_eq!(solution["assignment"]["basement"][0], "bob");
    assert_eq!(solution["certificate"]["envyFree"], true);

    let verify = harmony(&["verify", "-i", &input, "-s", out_str]);
    assert_eq!(verify.status.code(), Some(0), "{verify:?}");
    let stdout = String::from_utf8(verify.stdout).unwrap();
    assert!(stdout.contains("PASS"));
    assert!(stdout.contains("maxRegret=0"));
}

#[test]
fn solve_mesh_path_verifies_too() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "instance.json", SEC4);
    let out = dir.path().join("solution.json");
    let out_str = out.to_str().unwrap();

    let result = harmony(&["solve", "-i", &input, "-o", out_str, "--force-mesh"]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let solution = read_json(out_str);
    assert_eq!(solution["method"], "mesh-engine");

    let verify = harmony(&["verify", "-i", &input, "-s", out_str]);
    assert_eq!(verify.status.code(), Some(0), "{verify:?}");
}

#[test]
fn tampered_basement_price_fails_verify_with_regret_15() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "instance.json", SEC4);
    let tampered = write(
        &dir,
        "solution.json",
        r#"{
          "pricesExact": ["115", "0"],
          "assignment": {"bedroom": ["alice"], "basement": ["bob"]}
        }"#,
    );
    let verify = harmony(&["verify", "-i", &input, "-s", &tampered, "--epsilon", "1/1000"]);
    assert_eq!(verify.status.code(), Some(4), "{verify:?}");
    let stdout = String::from_utf8(verify.stdout).unwrap();
    assert!(stdout.contains("bob"));
    assert!(stdout.contains("regrets 15"));
}

#[test]
fn bound_below_rent_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "instance.json",
        &SEC4.replace("\"compensationBound\": 250", "\"compensationBound\": 50"),
    );
    let result = harmony(&["solve", "-i", &input]);
    assert_eq!(result.status.code(), Some(1), "{result:?}");
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("total rent"), "{stderr}");
}

#[test]
fn malformed_json_reports_line_number() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.json", "{\n  \"mode\": classic\n}");
    let result = harmony(&["solve", "-i", &input]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn validate_compensable_passes_miserly_fails() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "instance.json",
        r#"{
          "mode": "classic",
          "totalRent": 1000,
          "compensationBound": 1000,
          "rooms": [{"name": "living"}, {"name": "b1"}, {"name": "b2"}],
          "agents": [
            {"name": "a", "oracle": {"type": "quasilinear", "values": [800, 100, 100]}},
            {"name": "b", "oracle": {"type": "quasilinear", "values": [800, 100, 100]}},
            {"name": "c", "oracle": {"type": "quasilinear", "values": [800, 100, 100]}}
          ]
        }"#,
    );
    let ok = harmony(&["validate", "-i", &input, "--kind", "compensable"]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");

    let bad = harmony(&["validate", "-i", &input, "--kind", "miserly"]);
    assert_eq!(bad.status.code(), Some(4), "{bad:?}");
    let stdout = String::from_utf8(bad.stdout).unwrap();
    assert!(stdout.contains("FAIL"));
    assert!(stdout.contains("counterexample at p = ("));

    let weak = harmony(&["validate", "-i", &input, "--kind", "weak-miserly"]);
    assert_eq!(weak.status.code(), Some(4), "{weak:?}");

    let unknown = harmony(&["validate", "-i", &input, "--kind", "bogus"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn mesh_dump_m2_k3_su_map() {
    let result = harmony(&[
        "mesh", "--m", "2", "--k", "3", "--map", "su", "--r", "100", "--dump",
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let value: Value = serde_json::from_slice(&result.stdout).unwrap();
    assert_eq!(value["vertexCount"], 4);
    assert_eq!(value["cellCount"], 3);
    let expect = [
        ["100", "0"],
        ["200/3", "100/3"],
        ["100/3", "200/3"],
        ["0", "100"],
    ];
    for (v, e) in value["vertices"].as_array().unwrap().iter().zip(expect) {
        assert_eq!(v["prices"][0], e[0]);
        assert_eq!(v["prices"][1], e[1]);
    }
}

#[test]
fn mesh_m3_k1_counts_and_compensable_sum() {
    let counts = harmony(&["mesh", "--m", "3", "--k", "1", "--map", "reciprocal"]);
    assert_eq!(counts.status.code(), Some(0));
    let value: Value = serde_json::from_slice(&counts.stdout).unwrap();
    assert_eq!(value["vertexCount"], 3);
    assert_eq!(value["cellCount"], 1);

    // m=3, k=2, compensable T=R=90: every vertex's prices sum to 90
    let dump = harmony(&[
        "mesh", "--m", "3", "--k", "2", "--map", "compensable", "--t", "90", "--r", "90",
        "--dump",
    ]);
    assert_eq!(dump.status.code(), Some(0));
    let value: Value = serde_json::from_slice(&dump.stdout).unwrap();
    let vertices = value["vertices"].as_array().unwrap();
    assert_eq!(vertices.len(), 6);
    for v in vertices {
        let sum: f64 = v["prices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| parse_frac(p.as_str().unwrap()))
            .sum();
        assert_eq!(sum, 90.0);
    }
}

fn parse_frac(s: &str) -> f64 {
    match s.split_once('/') {
        Some((n, d)) => n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn identical_inputs_give_byte_identical_output() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "instance.json", SEC4);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let result = harmony(&["solve", "-i", &input, "-o", out.to_str().unwrap(), "--force-mesh"]);
        assert_eq!(result.status.code(), Some(0));
        let mut v = read_json(out.to_str().unwrap());
        v["diagnostics"]["wallTimeMs"] = 0.into();
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn secretive_instance_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "instance.json",
        r#"{
          "mode": "secretive",
          "totalRent": 100,
          "compensationBound": 200,
          "rooms": [{"name": "r0"}, {"name": "r1"}, {"name": "r2"}],
          "agents": [
            {"name": "a", "oracle": {"type": "quasilinear", "values": [60, 30, 10]}},
            {"name": "b", "oracle": {"type": "quasilinear", "values": [40, 40, 20]}}
          ]
        }"#,
    );
    let out = dir.path().join("solution.json");
    let out_str = out.to_str().unwrap();
    let result = harmony(&["solve", "-i", &input, "-o", out_str]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let solution = read_json(out_str);
    let scenarios = solution["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 3);
    for s in scenarios {
        assert!(s["excludedRoom"].is_string());
        assert_eq!(s["assignment"].as_object().unwrap().len(), 2);
    }
    let verify = harmony(&["verify", "-i", &input, "-s", out_str]);
    assert_eq!(verify.status.code(), Some(0), "{verify:?}");
}

#[test]
fn solution_files_are_portable() {
    // a solution written next to a relocated instance still verifies
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "instance.json", SEC4);
    let out = dir.path().join("solution.json");
    harmony(&["solve", "-i", &input, "-o", out.to_str().unwrap()]);
    let moved = dir.path().join("elsewhere");
    fs::create_dir(&moved).unwrap();
    let new_out = moved.join("solution.json");
    fs::rename(&out, &new_out).unwrap();
    assert!(Path::new(&input).exists());
    let verify = harmony(&["verify", "-i", &input, "-s", new_out.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0));
}
