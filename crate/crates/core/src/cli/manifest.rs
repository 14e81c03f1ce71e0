use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::CommandFactory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::commands::{self, Produced};
use super::{Cli, Format};
use crate::error::{Error, Result};
use crate::report::SCHEMA_VERSION;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct OutputDigest {
    /// `out` for the main data file, `summary` for a secondary JSON document.
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub derivation: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, with any config file already merged in.
    pub argv: Vec<String>,
    /// Every resolved option, defaults included.
    pub config: BTreeMap<String, serde_json::Value>,
    pub seeds: Seeds,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub started_unix_ms: i64,
    pub finished_unix_ms: i64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now_ms() -> i64 {
    Utc::now().timestamp_millis()
}

fn utc_string(ms: i64) -> String {
    DateTime::<Utc>::from_timestamp_millis(ms)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn resolved_config(argv: &[OsString]) -> BTreeMap<String, serde_json::Value> {
    let mut out = BTreeMap::new();
    let cmd = Cli::command();
    let Ok(m) = cmd.clone().try_get_matches_from(argv) else {
        return out;
    };
    let mut collect = |c: &clap::Command, m: &clap::ArgMatches, prefix: &str| {
        for arg in c.get_arguments() {
            let id = arg.get_id().as_str();
            let Ok(Some(raw)) = m.try_get_raw(id) else {
                continue;
            };
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            let v = match &vals[..] {
                [one] => serde_json::Value::String(one.clone()),
                _ => serde_json::Value::from(vals),
            };
            out.insert(format!("{prefix}{id}"), v);
        }
    };
    collect(&cmd, &m, "");
    if let Some((name, sub)) = m.subcommand() {
        if let Some(c) = cmd.find_subcommand(name) {
            collect(c, sub, &format!("{name}."));
        }
    }
    out
}

fn format_for(cli: &Cli) -> Format {
    cli.format.unwrap_or_else(|| match cli.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "json" => Format::Json,
        _ => Format::Csv,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn digest(role: &str, path: &Path, bytes: &[u8]) -> OutputDigest {
    OutputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    }
}

pub(super) fn run_with_manifest(cli: &Cli, argv: &[OsString]) -> Result<()> {
    let started = now_ms();
    let produced = commands::run(cli, format_for(cli))?;
    let mut outputs = Vec::new();
    for Produced { role, path, content } in &produced {
        match (role.as_str(), path, &cli.out) {
            ("out", _, Some(out)) => {
                write_file(out, content.as_bytes())?;
                outputs.push(digest(role, out, content.as_bytes()));
            }
            ("out", _, None) => {
                std::io::stdout().write_all(content.as_bytes())?;
                outputs.push(digest(role, Path::new("-"), content.as_bytes()));
            }
            (_, Some(p), _) => {
                write_file(p, content.as_bytes())?;
                outputs.push(digest(role, p, content.as_bytes()));
            }
            _ => {}
        }
    }
    let target = cli
        .manifest
        .clone()
        .or_else(|| cli.out.as_ref().map(|o| PathBuf::from(format!("{}.manifest.json", o.display()))));
    let Some(target) = target else {
        return Ok(());
    };
    let finished = now_ms();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "mlcl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: argv
            .get(1..)
            .unwrap_or_default()
            .iter()
            .map(|a| a.to_string_lossy())
            .find(|a| !a.starts_with('-'))
            .unwrap_or_default()
            .into_owned(),
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        config: resolved_config(argv),
        seeds: Seeds {
            master: cli.seed,
            derivation: "sample s uses splitmix64(seed + (s + 1) * 0x9E3779B97F4A7C15)".into(),
        },
        threads: cli.threads,
        started_at: utc_string(started),
        finished_at: utc_string(finished),
        started_unix_ms: started,
        finished_unix_ms: finished,
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_file(&target, text.as_bytes())
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub manifest: String,
    pub expected: Vec<OutputDigest>,
    pub actual: Vec<OutputDigest>,
    pub all_match: bool,
}

/// Flags whose values are output locations and get redirected during a replay.
const OUTPUT_FLAGS: [&str; 3] = ["--out", "--manifest", "--summary"];

/// Re-runs the manifest's command into a scratch directory and compares digests by role.
pub fn replay(path: &Path) -> Result<ReplayReport> {
    let text = std::fs::read_to_string(path)?;
    let m: Manifest = serde_json::from_str(&text)?;
    let scratch = std::env::temp_dir().join(format!("mlcl-replay-{}-{}", std::process::id(), now_ms()));
    std::fs::create_dir_all(&scratch)?;
    let mut argv: Vec<String> = vec!["mlcl".into()];
    let mut skip = false;
    for a in &m.argv {
        if skip {
            skip = false;
            continue;
        }
        if OUTPUT_FLAGS.contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if OUTPUT_FLAGS.iter().any(|f| a.starts_with(&format!("{f}="))) {
            continue;
        }
        argv.push(a.clone());
    }
    for d in &m.outputs {
        let flag = match d.role.as_str() {
            "out" if d.path == "-" => continue,
            "out" => "--out",
            "summary" => "--summary",
            other => return Err(Error::validation(format!("unknown output role {other:?}"))),
        };
        let name = Path::new(&d.path)
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_else(|| d.role.clone().into());
        argv.push(flag.into());
        argv.push(scratch.join(name).display().to_string());
    }
    let replay_manifest = scratch.join("replay.manifest.json");
    argv.push("--manifest".into());
    argv.push(replay_manifest.display().to_string());
    let argv: Vec<OsString> = argv.into_iter().map(OsString::from).collect();
    let cli = <Cli as clap::Parser>::try_parse_from(&argv).map_err(|e| Error::validation(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    pool.install(|| run_with_manifest(&cli, &argv))?;
    let fresh: Manifest = serde_json::from_str(&std::fs::read_to_string(&replay_manifest)?)?;
    let _ = std::fs::remove_dir_all(&scratch);
    let key = |d: &OutputDigest| (d.role.clone(), d.sha256.clone(), d.bytes);
    let mut want: Vec<_> = m.outputs.iter().map(key).collect();
    let mut got: Vec<_> = fresh.outputs.iter().map(key).collect();
    want.sort();
    got.sort();
    Ok(ReplayReport {
        manifest: path.display().to_string(),
        all_match: want == got,
        expected: m.outputs,
        actual: fresh.outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_and_digests() {
        assert_eq!(utc_string(0), "1970-01-01T00:00:00.000Z");
        assert_eq!(utc_string(951_782_400_123), "2000-02-29T00:00:00.123Z");
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
