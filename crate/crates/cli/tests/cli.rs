use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("edgeflow-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_edgeflow"));
    c.args(args).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

const SMALL_EFF_SPEC: &str = r#"
experiment = "eff-spec"

[solver]
m = 512
lx = 16.0
kappa_min = -1.0
kappa_max = 1.0
kappa_points = 5

[effective]
kind = "schrodinger"
alpha = [1.0, 1.0, 1.0]
theta = 1.0
"#;

#[test]
fn unknown_keys_are_config_errors() {
    let d = scratch("unknown");
    let cfg = d.join("bad.toml");
    std::fs::write(&cfg, "[solver]\nmm = 3\n").unwrap();
    let o = run(&["eff-spec"], Some(&cfg), &d.join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn missing_config_and_mismatched_experiment_exit_with_two() {
    let d = scratch("mismatch");
    let o = run(&["bands"], Some(&d.join("absent.toml")), &d.join("out"));
    assert_eq!(o.status.code(), Some(2));
    let cfg = d.join("spec.toml");
    std::fs::write(&cfg, SMALL_EFF_SPEC).unwrap();
    let o = run(&["chern"], Some(&cfg), &d.join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.join("out").join("manifest.json").exists());
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn reruns_reproduce_outputs_byte_for_byte() {
    let d = scratch("rerun");
    let cfg = d.join("spec.toml");
    std::fs::write(&cfg, SMALL_EFF_SPEC).unwrap();
    let (a, b) = (d.join("a"), d.join("b"));
    for out in [&a, &b] {
        let o = run(&["eff-spec", "--format", "csv,json,svg"], Some(&cfg), out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["experiment"], "eff-spec");
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["name"].as_str().unwrap().ends_with(".csv")));
    for f in files {
        let name = f["name"].as_str().unwrap();
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
        assert_eq!(f["sha256"].as_str().unwrap(), edgeflow_cli::manifest::sha256_hex(&x));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, x.len());
    }
    std::fs::remove_dir_all(d).unwrap();
}
