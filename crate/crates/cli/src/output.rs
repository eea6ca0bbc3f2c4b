use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    hex(&Sha256::digest(canonical))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckStatus {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_sha256: String,
    pub version: String,
    pub parallel: bool,
    pub wall_seconds: f64,
    /// Seconds since the epoch; the only field that differs between reruns.
    pub timestamp: u64,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckStatus>,
}

/// One output directory per run: `<out>/<subcommand>-<hash prefix>`.
pub struct RunDir {
    pub dir: PathBuf,
    pub hash: String,
    files: Vec<String>,
    pub checks: Vec<CheckStatus>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunDir {
    pub fn create(out: &Path, subcommand: &str, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let hash = config_hash(cfg);
        let dir = out.join(format!("{subcommand}-{}", &hash[..12]));
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let run = RunDir { dir, hash, files: vec![], checks: vec![] };
        run.write_raw("config.json", &serde_json::to_vec_pretty(cfg).expect("config serializes"))?;
        Ok(RunDir { files: vec!["config.json".into()], ..run })
    }

    fn write_raw(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))
    }

    /// CSV with a `# config_sha256=` comment line ahead of the header.
    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        R: IntoIterator,
        R::Item: ToString,
        I: IntoIterator<Item = R>,
    {
        let mut buf = format!("# config_sha256={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let path = self.dir.join(name);
            w.write_record(header).map_err(|e| io(&path, e))?;
            for row in rows {
                let rec: Vec<String> = row.into_iter().map(|x| x.to_string()).collect();
                w.write_record(&rec).map_err(|e| io(&path, e))?;
            }
            w.flush().map_err(|e| io(&path, e))?;
        }
        self.write_raw(name, &buf)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Tagged<'a, T> {
            config_sha256: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let doc = serde_json::to_vec_pretty(&Tagged { config_sha256: &self.hash, body: value }).map_err(|e| CliError::Io(e.to_string()))?;
        self.write_raw(name, &doc)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckStatus { name: name.into(), pass, detail: detail.into() });
    }

    /// Write `manifest.json` after confirming every listed file exists and
    /// is non-empty.
    pub fn finish(self, subcommand: &str, wall_seconds: f64) -> Result<RunManifest, CliError> {
        let mut files = vec![];
        let mut missing = vec![];
        for name in &self.files {
            let path = self.dir.join(name);
            match fs::read(&path) {
                Ok(bytes) if !bytes.is_empty() => {
                    files.push(FileEntry { name: name.clone(), bytes: bytes.len() as u64, sha256: hex(&Sha256::digest(&bytes)) })
                }
                _ => missing.push(name.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(CliError::Io(format!("missing or empty outputs: {}", missing.join(", "))));
        }
        let manifest = RunManifest {
            subcommand: subcommand.into(),
            config_sha256: self.hash.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            parallel: bvpm::par::is_parallel(),
            wall_seconds,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            files,
            checks: self.checks,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes")).map_err(|e| io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finish_lists_missing_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let mut run = RunDir::create(tmp.path(), "t", &cfg).unwrap();
        run.csv("a.csv", &["x"], [[1.0]]).unwrap();
        run.csv("b.csv", &["x"], [[2.0]]).unwrap();
        fs::remove_file(run.dir.join("a.csv")).unwrap();
        fs::write(run.dir.join("b.csv"), b"").unwrap();
        let e = run.finish("t", 0.0).unwrap_err().to_string();
        assert!(e.contains("a.csv") && e.contains("b.csv"), "{e}");
    }

    #[test]
    fn csv_header_carries_the_config_hash() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let mut run = RunDir::create(tmp.path(), "t", &cfg).unwrap();
        run.csv("a.csv", &["x", "y"], [[1, 2]]).unwrap();
        let text = fs::read_to_string(run.dir.join("a.csv")).unwrap();
        assert_eq!(text, format!("# config_sha256={}\nx,y\n1,2\n", config_hash(&cfg)));
        let m = run.finish("t", 0.0).unwrap();
        assert_eq!(m.files.len(), 2);
    }
}
