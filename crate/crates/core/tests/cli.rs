use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qbfs(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbfs"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn constant(json: &Value, space: &str, name: &str) -> (f64, String) {
    let entry = json.as_array().unwrap().iter().find(|e| e["space"] == space).unwrap();
    let r = entry["reports"].as_array().unwrap().iter().find(|r| r["name"] == name).unwrap();
    (r["value"].as_f64().unwrap(), r["certification"].as_str().unwrap().to_string())
}

#[test]
fn constants_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[[spaces]]
name = "L1"
kind = "lebesgue"
p = 1.0

[[spaces]]
name = "w12"
kind = "lebesgue"
p = 2.0
weight = [1.0, 2.0]
depth = 1

[[constants]]
space = "L1"
names = ["A", "A_strong"]

[[constants]]
space = "w12"
names = ["A", "muckenhoupt_p"]
"#,
    );
    let out = dir.path().join("out");
    let o = qbfs(&["constants"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(out.join("constants.json")).unwrap()).unwrap();
    assert_eq!(constant(&json, "L1", "A"), (1.0, "EXACT".to_string()));
    assert_eq!(constant(&json, "L1", "A_strong"), (1.0, "EXACT".to_string()));
    for name in ["A", "muckenhoupt_p"] {
        let (v, c) = constant(&json, "w12", name);
        assert!((v - 1.25).abs() < 1e-12 && c == "EXACT", "{name}: {v} {c}");
    }
    let manifest = std::fs::read_to_string(out.join("MANIFEST")).unwrap();
    assert!(manifest.contains("file constants.json sha256 "));
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[spaces]]\nname = \"q\"\nkind = \"lebesgue\"\np = 0.5\n\n[[suites]]\nid = \"duality\"\nspaces = [\"q\"]\n");
    let o = qbfs(&["verify"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let o = qbfs(&["verify", "--jobs", "0"], None, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let o = qbfs(&["verify", "--suite", "nope"], None, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_trends_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[suites]]\nid = \"examples\"\nsweep = [2, 3]\n");
    let o = qbfs(&["verify", "--strict"], Some(&cfg), &dir.path().join("strict"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UNCERTIFIED"));
    // without --strict only the endpoint growth trend fails
    let o = qbfs(&["verify"], Some(&cfg), &dir.path().join("loose"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().filter(|l| l.starts_with("FAIL")).all(|l| l.contains("alpha=1/q'.growth")), "{err}");
}

#[test]
fn probe_with_no_spaces_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[suites]]\nid = \"conjecture_probe\"\nspaces = []\n");
    let out = dir.path().join("out");
    let o = qbfs(&["probe", "--strict"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("conjecture_probe.json")).unwrap()).unwrap();
    assert!(r["rows"].as_array().unwrap().is_empty());
    assert!(r["assertions"].as_array().unwrap().is_empty());
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[suites]]\nid = \"theorem_chain\"\ninstances = 6\ndepth = 2\n");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = qbfs(&["verify", "--seed", seed, "--jobs", "2"], Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        ["theorem_chain.json", "theorem_chain.csv", "MANIFEST"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("a", "9");
    assert_eq!(a, run("b", "9"));
    let c = run("c", "10");
    assert_ne!(a[0], c[0]);
    assert!(String::from_utf8_lossy(&a[2]).contains("seed 9"));
}
