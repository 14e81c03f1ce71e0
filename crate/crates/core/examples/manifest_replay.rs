//! Runs a command through the CLI entry point, then replays its manifest.

fn main() {
    let dir = std::env::temp_dir().join(format!("mlcl-example-{}", std::process::id()));
    let out = dir.join("bwgap.csv");
    let code = mlcl::cli::dispatch([
        "mlcl",
        "bwgap",
        "--primes",
        "2,3",
        "--B",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    println!("exit code {code}");
    let manifest = dir.join("bwgap.csv.manifest.json");
    let report = mlcl::cli::replay(&manifest).expect("replay");
    println!("digests reproduce: {}", report.all_match);
    let _ = std::fs::remove_dir_all(dir);
}
