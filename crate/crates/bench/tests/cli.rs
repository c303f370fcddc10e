use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().unwrap()
}

fn scenario(dir: &Path, name: &str, kem: &str, extra: &str) -> String {
    let text = format!(
        "[scenario]\nname = {name}\niterations = 3\n\n[ike]\nproposal = aes256gcm16-prfsha256-{kem}\n\n[traffic]\npingpong_messages = 10\n{extra}"
    );
    let p = dir.join(format!("{name}.ini"));
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    for (name, kem) in [("ecdh", "curve25519"), ("pq", "mlkem768")] {
        let cfg = scenario(dir.path(), name, kem, "");
        let o = bench(&["run", "--config", &cfg, "--out", out_s, "--seed", "01"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("ike_init") && stdout.contains("reference"));
    }
    let phases = std::fs::read_to_string(out.join("pq_phases.csv")).unwrap();
    assert_eq!(phases.lines().next(), Some("scenario,iteration,phase,duration_us"));
    assert_eq!(phases.lines().count(), 1 + 3 * 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("pq_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["phases"]["ike_init"]["n"], 3);
    assert_eq!(summary["sa_init_request_bytes"].as_u64().unwrap() - 1152, 105);

    let o = bench(&["compare", out.join("ecdh_summary.json").to_str().unwrap(), out.join("pq_summary.json").to_str().unwrap(), "--baseline", "ecdh"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).lines().any(|l| l.starts_with("pq") && l.contains("ike_init")));
}

#[test]
fn seed_and_iterations_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s", "curve25519", "");
    let out = dir.path().join("o");
    let o = bench(&["run", "--config", &cfg, "--iterations", "1", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(!out.join("s_phases.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("s_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["iterations"], 1);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = scenario(dir.path(), "bad", "curve25519", "\n[link]\nmtu = 100\n");
    assert_eq!(bench(&["run", "--config", &bad]).status.code(), Some(3));
    let good = scenario(dir.path(), "good", "curve25519", "");
    assert_eq!(bench(&["run", "--config", &good, "--iterations", "0"]).status.code(), Some(3));
    assert_eq!(bench(&["run", "--config", &good, "--seed", "xyz"]).status.code(), Some(3));
    assert_eq!(bench(&["run", "--config", "/nonexistent.ini"]).status.code(), Some(3));
    assert_eq!(bench(&["kat", "--suite", "rsa"]).status.code(), Some(3));
    assert_eq!(bench(&["compare", "/nonexistent.json", "--baseline", "x"]).status.code(), Some(3));
}

#[test]
fn protocol_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let lossy = scenario(dir.path(), "lossy", "curve25519", "\n[link]\nloss_rate = 0.999999\n");
    let o = bench(&["run", "--config", &lossy, "--iterations", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("iteration 0"));
}

#[test]
fn kat_suites_pass() {
    for suite in ["mlkem", "aead", "prf"] {
        let o = bench(&["kat", "--suite", suite]);
        assert!(o.status.success(), "{suite}");
    }
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        pqe2_bench::load_config(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
        n += 1;
    }
    assert!(n >= 6);
}
