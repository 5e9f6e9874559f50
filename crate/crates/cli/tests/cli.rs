use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sim"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn run_writes_csv_svg_and_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim()
        .args(["run"])
        .arg(scenario("smoke.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("smoke.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("sweep_value,cf_mean,n_avg"));
    assert!(fs::read_to_string(dir.path().join("smoke.svg")).unwrap().starts_with("<svg"));
    assert!(dir.path().join("smoke_swap_cdf.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let st = sim()
            .arg("run")
            .arg(scenario("smoke.toml"))
            .args(["--seed", "7", "--replications", "1"])
            .env("UDNSYNC_OUT_DIR", d.path())
            .output()
            .unwrap();
        assert!(st.status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("smoke.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["smoke.toml", "p0_sweep.toml"] {
        let out = sim().arg("validate").arg(scenario(name)).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
    }
}

#[test]
fn invalid_scenario_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "name = \"bad\"\nsweep = \"num_nodes\"\nvalues = []\nreplications = 1\n").unwrap();
    let out = sim().arg("validate").arg(&p).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no sweep values"));

    let missing = sim().arg("validate").arg(dir.path().join("nope.toml")).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.toml"));
}

#[test]
fn unknown_preset_is_rejected() {
    let out = sim().args(["run", "--preset", "fig9"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}
