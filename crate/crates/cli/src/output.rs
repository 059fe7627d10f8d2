//! Run directories and the `meta` block stamped on every artifact.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// When set to Unix seconds, fixes the run timestamp (reproducible outputs).
pub const TIMESTAMP_ENV: &str = "SOURCE_DATE_EPOCH";

fn run_time() -> Result<DateTime<Utc>, CliError> {
    match std::env::var(TIMESTAMP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .ok_or_else(|| CliError::Usage(format!("{TIMESTAMP_ENV} must be Unix seconds, got {v:?}"))),
        Err(_) => Ok(Utc::now()),
    }
}

pub(crate) struct RunDir {
    pub path: PathBuf,
    pub meta: Value,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunDir {
    /// Creates `<out>/<subcommand>/<timestamp>/`, adding a `-N` suffix if a
    /// run in the same second already claimed the name.
    pub fn create(subcommand: &str, cfg: &RunConfig) -> Result<Self, CliError> {
        let time = run_time()?;
        let parent = cfg.output.directory.join(subcommand);
        std::fs::create_dir_all(&parent).map_err(io_err(&parent))?;
        let stamp = time.format("%Y%m%dT%H%M%SZ").to_string();
        let mut n = 1;
        let path = loop {
            let name = if n == 1 { stamp.clone() } else { format!("{stamp}-{n}") };
            let candidate = parent.join(name);
            match std::fs::create_dir(&candidate) {
                Ok(()) => break candidate,
                Err(e) if e.kind() == ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(io_err(&candidate)(e)),
            }
        };
        let meta = json!({
            "tool": "sleepsense",
            "code_version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "timestamp": time.to_rfc3339(),
            "seed": cfg.sim.seed,
            "params": cfg.params,
            "config": cfg,
        });
        Ok(Self { path, meta })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path.join(name);
        std::fs::write(&path, contents).map_err(io_err(&path))
    }

    /// `{"meta": .., <payload fields>}` as pretty JSON.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> Result<(), CliError> {
        let mut doc = json!({ "meta": self.meta });
        if let Value::Object(fields) = serde_json::to_value(payload).expect("serializable payload") {
            doc.as_object_mut().expect("object").extend(fields);
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn announce(&self) {
        eprintln!("wrote {}", self.path.display());
    }
}
