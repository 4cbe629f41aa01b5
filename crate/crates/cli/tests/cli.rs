use std::path::PathBuf;
use std::process::{Command, Output};

fn ncgx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncgx")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture_path(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", &format!("{name}.json")].iter().collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"name\": ").unwrap();
    let o = ncgx(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn unknown_fields_and_missing_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(
        &path,
        r#"{"name":"x","group":{"kind":"cyclic","n":2},"weight":{"kind":"abs"},"base":{"kind":"group_triple"},"colour":"red"}"#,
    )
    .unwrap();
    assert_eq!(ncgx(&["verify", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ncgx(&["verify", "/no/such/fixture.json"]).status.code(), Some(2));
    assert_eq!(ncgx(&["verify", "z2-basic", "--suite", "everything"]).status.code(), Some(2));
    assert_eq!(ncgx(&["verify", "z2-basic", "--tolerance", "-1"]).status.code(), Some(2));
}

#[test]
fn absolute_weight_fails_orders_with_a_first_order_witness() {
    let o = ncgx(&["verify", "negative-firstorder", "--suite", "orders"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("base.order1")).expect("order1 line");
    assert!(line.starts_with("FAIL"), "{line}");
    assert!(line.contains("witness (λ_1, λ_1)"), "{line}");
}

#[test]
fn finite_fixture_passes_everything_from_a_file_path() {
    let o = ncgx(&["verify", &fixture_path("z2-basic"), "--suite", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn json_reports_are_byte_identical_for_a_fixed_seed() {
    let a = ncgx(&["verify", "z2-basic", "--format", "json", "--seed", "7"]);
    let b = ncgx(&["verify", "z2-basic", "--format", "json", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["summary"]["failed"], 0);
    assert!(v["records"].as_array().unwrap().iter().all(|r| r.get("wall_time_ms").is_none()));
}

#[test]
fn ko_reports_the_shift() {
    let o = ncgx(&["ko", "even-tilde"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("base KO 0 -> predicted 7"), "{out}");
    assert!(out.contains("KO [7]"), "{out}");
}

#[test]
fn ko_needs_a_real_structure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noj.json");
    std::fs::write(
        &path,
        r#"{"name":"noj","group":{"kind":"cyclic","n":2},"weight":{"kind":"constant","value":0},
            "base":{"kind":"matrices","hilbert_dim":1,"D":[[[1,0]]],"algebra_basis":[[[[1,0]]]]}}"#,
    )
    .unwrap();
    assert_eq!(ncgx(&["ko", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn orient_builds_the_lifted_cycle() {
    let o = ncgx(&["orient", "torus", "--g", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["chain"]["degree"], 2);
    assert_eq!(v["chain"]["module"], "op_pair");
    assert_eq!(v["report"]["summary"]["failed"], 0);
}

#[test]
fn orient_rejects_zero_weight_and_unknown_elements() {
    assert_eq!(ncgx(&["orient", "torus", "--g", "0"]).status.code(), Some(2));
    assert_eq!(ncgx(&["orient", "torus", "--g", "99"]).status.code(), Some(2));
    assert_eq!(ncgx(&["orient", "z2-basic"]).status.code(), Some(2));
}

#[test]
fn fixtures_are_listed() {
    let out = stdout(&ncgx(&["fixtures"]));
    for name in ["z2-basic", "torus", "even-tilde", "negative-firstorder"] {
        assert!(out.lines().any(|l| l == name), "{name}");
    }
}
