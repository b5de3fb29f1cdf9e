//! Run configuration: flags over an optional config file, manifests and
//! atomic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fairdiv_core::learner::parse_real;
use fairdiv_core::{KeyValues, PhiGenerator, RatioBounds};
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fairdiv_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 usage or parse error, 3 infeasible budget, 4 non-convergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(fairdiv_core::Error::InfeasibleBudget { .. }) => 3,
            CliError::Core(fairdiv_core::Error::Convergence { .. }) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Effective key-value settings of one command.
pub struct RunConfig {
    pub command: &'static str,
    values: KeyValues,
}

impl RunConfig {
    /// Config file entries overridden by flag entries; keys outside
    /// `allowed` are rejected wherever they come from.
    pub fn resolve(
        command: &'static str,
        config_file: Option<&Path>,
        flags: KeyValues,
        allowed: &[&str],
    ) -> CliResult<Self> {
        let mut values = match config_file {
            Some(path) => KeyValues::parse(&read(path)?)?,
            None => KeyValues::new(),
        };
        values.merge(&flags);
        if let Some((key, _)) = values.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(usage(format!("'{key}' is not a setting of '{command}'")));
        }
        Ok(Self { command, values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key)
    }

    pub fn values(&self) -> &KeyValues {
        &self.values
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| usage(format!("'{}' needs --{}", self.command, key.replace('_', "-"))))
    }

    /// Records an effective value (defaults included) for the manifest.
    pub fn set_default(&mut self, key: &str, value: impl ToString) {
        if self.values.get(key).is_none() {
            self.values.insert(key, value.to_string());
        }
    }

    pub fn real(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            Some(v) => Ok(parse_real(key, v)?),
            None => Ok(default),
        }
    }

    pub fn count(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("{key} must be a non-negative integer, got '{v}'"))),
            None => Ok(default),
        }
    }

    pub fn seed(&mut self) -> CliResult<u64> {
        let seed = match self.get("seed") {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("seed must be a non-negative integer, got '{v}'")))?,
            None => DEFAULT_SEED,
        };
        self.set_default("seed", seed);
        Ok(seed)
    }

    pub fn phi(&self, default: PhiGenerator) -> CliResult<PhiGenerator> {
        match self.get("phi") {
            Some(v) => Ok(v.parse()?),
            None => Ok(default),
        }
    }

    pub fn bounds(&self) -> CliResult<RatioBounds> {
        let d = RatioBounds::default();
        Ok(RatioBounds::new(
            self.real("bounds.c_lo", d.c_lo())?,
            self.real("bounds.c_hi", d.c_hi())?,
        )?)
    }

    /// Comma-separated reals; empty lists are rejected.
    pub fn real_list(&self, key: &str, default: &str) -> CliResult<Vec<f64>> {
        let raw = self.get(key).unwrap_or(default);
        let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(usage(format!("{key} must list at least one value")));
        }
        items.iter().map(|s| Ok(parse_real(key, s)?)).collect()
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    pub fn manifest_text(&self) -> String {
        format!(
            "# fairdiv {} {}\ncommand = {}\n{}",
            self.command,
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.values.to_text()
        )
    }

    /// Writes `text` to `out` (plus `{out}.manifest`) or to stdout when no
    /// output path is set. Returns whether a file was written.
    pub fn emit(&self, text: &str) -> CliResult<bool> {
        match self.out() {
            Some(path) => {
                write_atomic(&path, text)?;
                write_atomic(&manifest_path(&path), &self.manifest_text())?;
                Ok(true)
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|source| CliError::Io {
                        path: "<stdout>".into(),
                        source,
                    })?;
                Ok(false)
            }
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    out.with_file_name(name)
}

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        fs::write(&file, "eta = 0.5\nphi = hellinger\n").unwrap();
        let mut flags = KeyValues::new();
        flags.insert("eta", "0.1");
        let run = RunConfig::resolve("train", Some(&file), flags, &["eta", "phi"]).unwrap();
        assert_eq!(run.real("eta", 0.0).unwrap(), 0.1);
        assert_eq!(run.phi(PhiGenerator::Kl).unwrap(), PhiGenerator::Hellinger);

        let err = RunConfig::resolve("train", Some(&file), KeyValues::new(), &["eta"]).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn lists_and_manifest_paths() {
        let mut kv = KeyValues::new();
        kv.insert("etas", "0.1, inf");
        kv.insert("empty", " , ");
        let run = RunConfig::resolve("sweep", None, kv, &["etas", "empty"]).unwrap();
        assert_eq!(run.real_list("etas", "").unwrap(), vec![0.1, f64::INFINITY]);
        assert!(run.real_list("empty", "").is_err());
        assert_eq!(manifest_path(Path::new("/a/b.csv")), PathBuf::from("/a/b.csv.manifest"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(fairdiv_core::Error::InfeasibleBudget { eta: 0.0, best: 1.0 }).exit_code(), 3);
        let conv = fairdiv_core::Error::Convergence {
            iterations: 1,
            residual: 1.0,
            last_iterate: vec![],
        };
        assert_eq!(CliError::from(conv).exit_code(), 4);
        assert_eq!(usage("x").exit_code(), 2);
    }
}
