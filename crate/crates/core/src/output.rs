//! Run outputs: CSV/JSON files tagged with a run hash, written atomically,
//! plus a `manifest.json` per run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::disorder::RNG_NAME;
use crate::error::Result;
use crate::model::PhysicalConfig;

/// Identity of a run: everything that determines its outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunContext {
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
}

impl RunContext {
    pub fn new(config: &PhysicalConfig, command: impl Into<String>) -> Self {
        Self { config_hash: config.hash(), command: command.into(), seed: config.disorder.master_seed }
    }

    pub fn run_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config_hash.as_bytes());
        h.update([0]);
        h.update(self.command.as_bytes());
        h.update([0]);
        h.update(self.seed.to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn header_line(&self) -> String {
        format!("# run={} config={} seed={}", self.run_hash(), self.config_hash, self.seed)
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// CSV text: the run header, a column row, then one line per record.
pub fn render_csv(ctx: &RunContext, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    writeln!(s, "{}", ctx.header_line()).unwrap();
    writeln!(s, "{}", columns.join(",")).unwrap();
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        writeln!(s, "{}", r.join(",")).unwrap();
    }
    s
}

/// Shortest round-trip representation, scientific outside [1e-4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_hash: String,
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub rng: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    run: String,
    config_hash: &'a str,
    seed: u64,
    data: &'a T,
}

/// Output directory of one run.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub ctx: RunContext,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: impl Into<PathBuf>, ctx: RunContext) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, ctx, written: Vec::new() })
    }

    pub fn write_csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        self.write_raw(name, render_csv(&self.ctx, columns, rows).as_bytes())
    }

    /// JSON wrapped as `{run, config_hash, seed, data}`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let tagged = Tagged { run: self.ctx.run_hash(), config_hash: &self.ctx.config_hash, seed: self.ctx.seed, data: value };
        let mut text = serde_json::to_string_pretty(&tagged)?;
        text.push('\n');
        self.write_raw(name, text.as_bytes())
    }

    fn write_raw(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(path)
    }

    pub fn outputs(&self) -> &[String] {
        &self.written
    }

    /// Writes `manifest.json` listing everything produced so far.
    pub fn finish(self, versions: BTreeMap<String, String>, wall_time_s: f64) -> Result<RunManifest> {
        let manifest = RunManifest {
            run_hash: self.ctx.run_hash(),
            config_hash: self.ctx.config_hash.clone(),
            command: self.ctx.command.clone(),
            seed: self.ctx.seed,
            versions,
            rng: RNG_NAME.to_string(),
            outputs: self.written.clone(),
            wall_time_s,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> RunContext {
        RunContext::new(&PhysicalConfig::reference(), "gap")
    }

    #[test]
    fn run_hash_tracks_inputs() {
        let a = ctx();
        let mut b = a.clone();
        assert_eq!(a.run_hash(), b.run_hash());
        b.seed += 1;
        assert_ne!(a.run_hash(), b.run_hash());
        let mut c = a.clone();
        c.command = "sweep".into();
        assert_ne!(a.run_hash(), c.run_hash());
    }

    #[test]
    fn csv_layout() {
        let s = render_csv(&ctx(), &["x", "y"], &[vec![num(0.5), num(1e-20)], vec![num(2.0), opt(None)]]);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# run="));
        assert_eq!(&lines[1..], ["x,y", "0.5,1e-20", "2,"]);
    }

    #[test]
    fn directory_writes_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path().join("run"), ctx()).unwrap();
        let p = out.write_csv("a.csv", &["k"], &[vec!["1".into()]]).unwrap();
        out.write_csv("a.csv", &["k"], &[vec!["2".into()]]).unwrap();
        out.write_json("s.json", &vec![1, 2]).unwrap();
        assert!(fs::read_to_string(&p).unwrap().ends_with("k\n2\n"));
        let m = out.finish(BTreeMap::new(), 0.1).unwrap();
        assert_eq!(m.outputs, ["a.csv", "s.json"]);
        let names: Vec<String> = fs::read_dir(tmp.path().join("run"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names.len(), 3, "{names:?}");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("run/s.json")).unwrap()).unwrap();
        assert_eq!(json["data"], serde_json::json!([1, 2]));
        assert_eq!(json["run"], m.run_hash);
    }
}
