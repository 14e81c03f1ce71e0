use std::path::Path;
use std::process::{Command, Output};

fn mlcl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlcl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn mlcl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn asymp_example_prints_exact_sums() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlcl(&["sums", "--check", "asymp", "--D", "geometric:2", "--N", "4"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,M,S1,S2,NM,ratio1,ratio2,tail,tail_ok");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((row[2], row[4], row[5]), ("8", "8", "1"));
}

#[test]
fn bwgap_example_finds_nine_eighths() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlcl(&["bwgap", "--primes", "2,3", "--B", "3"], dir.path());
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("3,1.17783035656e-1,"), "{last}");
    assert!(last.contains(",3;-2,"));
}

#[test]
fn traj_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlcl(
        &["traj", "--alpha", "golden", "--a", "2", "--D", "geometric:3", "--nmax", "100000", "--out", "traj.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    assert!(csv.starts_with("n,term_lo,term_hi,runmin_lo,runmin_hi,argmin\n"));
    assert!(csv.contains("\n3,1.4589803375e-1,"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["subcommand"], "traj");
    assert_eq!(m["config"]["traj.n_max"], "100000");
    assert_eq!(m["config"]["seed"], "0");
    assert_eq!(m["outputs"][0]["sha256"], mlcl::cli::sha256_hex(csv.as_bytes()));

    let r = mlcl(&["replay", "traj.csv.manifest.json"], dir.path());
    assert!(r.status.success());
    assert!(stdout(&r).contains("\"all_match\": true"));
}

#[test]
fn tampered_output_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    mlcl(&["bwgap", "--primes", "2,5", "--B", "4", "--out", "g.csv"], dir.path());
    let path = dir.path().join("g.csv.manifest.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut m: serde_json::Value = serde_json::from_str(&text).unwrap();
    m["outputs"][0]["sha256"] = "00".into();
    std::fs::write(&path, m.to_string()).unwrap();
    let r = mlcl(&["replay", "g.csv.manifest.json"], dir.path());
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn json_documents_carry_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlcl(&["psav", "--D", "geometric:3", "--k", "4", "--format", "json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["terms"][4], "81");
    // The extension picks the format when --format is absent.
    mlcl(&["psav", "--D", "geometric:3", "--k", "4", "--out", "p.json"], dir.path());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "psav");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(mlcl(&["frobnicate"], p).status.code(), Some(1));
    assert_eq!(mlcl(&["psav", "--D", "geometric:3", "--bogus"], p).status.code(), Some(1));
    assert_eq!(mlcl(&["psav", "--D", "geometric:1"], p).status.code(), Some(1));
    assert_eq!(mlcl(&["construct", "--k", "2", "--precision-cap", "8"], p).status.code(), Some(2));
    assert_eq!(mlcl(&["bwgap", "--primes", "2,3", "--B", "50", "--budget", "100"], p).status.code(), Some(3));
    assert_eq!(mlcl(&["--help"], p).status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "# diffset on a seeded random set\nseed = 3\nmode = diffset\nset = random:40\neps = 1/50\nformat = json\n",
    )
    .unwrap();
    let a = mlcl(&["orbit", "--config", "run.conf", "--out", "a.json"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = mlcl(&["orbit", "--mode", "diffset", "--set", "random:40", "--eps", "1/50", "--seed", "3", "--format", "json"], dir.path());
    assert_eq!(std::fs::read_to_string(dir.path().join("a.json")).unwrap(), stdout(&b));
    let m = std::fs::read_to_string(dir.path().join("a.json.manifest.json")).unwrap();
    assert!(!m.contains("run.conf"), "argv is recorded with the config already merged");
    // Explicit flags beat config entries.
    let c = mlcl(&["orbit", "--config", "run.conf", "--seed", "4"], dir.path());
    assert_ne!(stdout(&c), stdout(&b));
}

#[test]
fn mc_summary_is_a_second_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlcl(
        &["mc", "--samples", "3", "--nmax", "5000", "--seed", "11", "--out", "mc.csv", "--summary", "mc.json"],
        dir.path(),
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("mc.csv")).unwrap();
    assert!(csv.starts_with("sample,seed,N,count,undecided\n"));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mc.json")).unwrap()).unwrap();
    assert_eq!(s["result"]["seed"], 11);
    assert!(s["result"].get("samples").is_none());
    let r = mlcl(&["replay", "mc.csv.manifest.json"], dir.path());
    assert!(r.status.success());
}
