use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cohft"));
    c.env_remove("COHFT_THREADS");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cohft-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

fn rank_one_config(dir: &Path) -> PathBuf {
    let p = dir.join("config.json");
    write_json(
        &p,
        &json!({
            "schema_version": 1,
            "algebra": {"kind": "preset", "name": "rank_one"},
            "euler": {"kind": "preset", "name": "rank_one"},
            "bounds": {"max_genus": 2, "max_points": 3},
        }),
    );
    p
}

#[test]
fn rank_one_reconstruction_matches_the_oracle() {
    let dir = scratch("wk");
    let cfg = rank_one_config(&dir);
    let out = dir.join("rec");
    let o = run(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let orc = dir.join("orc");
    let o = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", orc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let table = read_json(&out.join("table.json"));
    let mut got = std::collections::BTreeMap::new();
    for row in table["entries"].as_array().unwrap() {
        let mut psis: Vec<u64> = row[2].as_array().unwrap().iter().map(|p| p[1].as_u64().unwrap()).collect();
        psis.sort_unstable_by(|a, b| b.cmp(a));
        got.insert((row[0].as_u64().unwrap(), psis), row[3].as_str().unwrap().to_string());
    }
    let oracle = read_json(&orc.join("result.json"));
    let rows = oracle["intersections"].as_array().unwrap();
    assert!(!rows.is_empty());
    let mut compared = 0;
    for row in rows {
        let g = row[0].as_u64().unwrap();
        let mut psis: Vec<u64> = row[1].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        psis.sort_unstable_by(|a, b| b.cmp(a));
        let want = row[2].as_str().unwrap();
        let have = got.remove(&(g, psis.clone())).unwrap_or_else(|| "0".into());
        assert_eq!(have, want, "g={g} psi={psis:?}");
        compared += 1;
    }
    // every nonzero table entry is a balanced key the oracle listed
    assert!(got.is_empty(), "unmatched entries: {got:?}");
    assert!(compared > 10);
}

#[test]
fn tampered_table_fails_check_with_invariant() {
    let dir = scratch("tamper");
    let cfg = rank_one_config(&dir);
    let out = dir.join("rec");
    let o = run(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table_path = out.join("table.json");

    let ok = run(&["check", "--config", cfg.to_str().unwrap(), "--table", table_path.to_str().unwrap(), "--out", dir.join("c1").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let mut table = read_json(&table_path);
    for row in table["entries"].as_array_mut().unwrap() {
        if row[0] == json!(1) && row[1] == json!(1) {
            row[3] = json!("1/12");
        }
    }
    let bad_path = dir.join("tampered.json");
    write_json(&bad_path, &table);
    let o = run(&["check", "--config", cfg.to_str().unwrap(), "--table", bad_path.to_str().unwrap(), "--out", dir.join("c2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["kind"], "precondition");
    let inv = err["error"]["invariant"].as_str().unwrap();
    assert!(["string_equation", "dilaton_equation", "reconstruction"].contains(&inv), "{inv}");
    // the report is still written
    let rep = read_json(&dir.join("c2").join("result.json"));
    assert_eq!(rep["passed"], false);
}

#[test]
fn same_seed_gives_the_same_manifest_hash() {
    let dir = scratch("seed");
    let cfg = dir.join("config.json");
    write_json(
        &cfg,
        &json!({
            "schema_version": 1,
            "algebra": {"kind": "preset", "name": "qh_p1", "q": "4"},
            "bounds": {"max_genus": 1, "max_points": 2},
            "options": {"e": {"kind": "random_symplectic"}},
        }),
    );
    let hash = |sub: &str, seed: &str| {
        let out = dir.join(sub);
        let o = run(&["build", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let m = read_json(&out.join("manifest.json"));
        (m["manifest_hash"].as_str().unwrap().to_string(), std::fs::read(out.join("table.json")).unwrap())
    };
    let (h1, t1) = hash("a", "7");
    let (h2, t2) = hash("b", "7");
    let (h3, _) = hash("c", "8");
    assert_eq!(h1, h2);
    assert_eq!(t1, t2);
    assert_ne!(h1, h3);
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = scratch("schema");
    let cfg = dir.join("config.json");
    write_json(&cfg, &json!({"schema_version": 1, "algebra": {"kind": "preset", "name": "qh_p1"}, "unknown": true}));
    let o = run(&["tft", "--config", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "schema");

    let o = run(&["build", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["exit_code"], 2);

    write_json(&cfg, &json!({"schema_version": 99, "algebra": {"kind": "preset", "name": "qh_p1"}}));
    let o = run(&["tft", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = bin().args(["oracle", "--out", dir.join("t").to_str().unwrap()]).env("COHFT_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precondition_failures_exit_with_three() {
    let dir = scratch("pre");
    let cfg = dir.join("config.json");
    write_json(&cfg, &json!({"schema_version": 1, "algebra": {"kind": "preset", "name": "dual_numbers"}}));
    let o = run(&["build", "--config", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["invariant"], "semisimple");
    assert!(!dir.join("o").join("manifest.json").exists());

    // not symplectic: E = Id + A z with A self-adjoint
    write_json(
        &cfg,
        &json!({
            "schema_version": 1,
            "algebra": {"kind": "preset", "name": "rank_one"},
            "bounds": {"max_genus": 1, "max_points": 2},
            "options": {"e": {"kind": "series", "series": [[["1"]], [["1"]], [["0"]], [["0"]]]}},
        }),
    );
    let o = run(&["build", "--config", cfg.to_str().unwrap(), "--out", dir.join("o2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["invariant"], "symplectic");
}

#[test]
fn dump_schema_prints_both_schemas() {
    let o = run(&["--dump-schema"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["title"], "RunConfig");
    assert_eq!(v["table"]["title"], "CorrelatorTable");
    let o = run(&["check", "--dump-schema"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn every_command_runs_on_the_projective_line() {
    let dir = scratch("all");
    let cfg = dir.join("config.json");
    write_json(
        &cfg,
        &json!({
            "schema_version": 1,
            "algebra": {"kind": "preset", "name": "qh_p1", "q": "1"},
            "euler": {"kind": "preset", "name": "qh_p1"},
            "bounds": {"max_genus": 1, "max_points": 3},
            "options": {"brute_force": true},
        }),
    );
    for cmd in ["tft", "nodal", "oracle", "build", "deform", "rmatrix", "reconstruct"] {
        let out = dir.join(cmd);
        let o = bin()
            .args([cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("COHFT_THREADS", "2")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let m = read_json(&out.join("manifest.json"));
        assert_eq!(m["command"], cmd);
        assert_eq!(m["timing"]["threads"], 2);
        for (name, sha) in m["outputs"].as_object().unwrap() {
            let bytes = std::fs::read(out.join(name)).unwrap();
            use sha2::Digest;
            assert_eq!(sha.as_str().unwrap(), format!("{:x}", sha2::Sha256::digest(&bytes)));
        }
    }
    let rm = read_json(&dir.join("rmatrix").join("result.json"));
    assert_eq!(rm["satisfies_recursion"], true);
    assert_eq!(rm["symplectic"], true);
    let rec = read_json(&dir.join("reconstruct").join("result.json"));
    assert_eq!(rec["homogeneity"]["passed"], true);
    // <h>_1 = -1/24 on the projective line
    let table = read_json(&dir.join("reconstruct").join("table.json"));
    let h1 = table["entries"].as_array().unwrap().iter().find(|r| r[0] == json!(1) && r[2] == json!([[1, 0]])).unwrap();
    assert_eq!(h1[3], "-1/24");
}
