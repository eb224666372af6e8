//! Run metadata. This is the only file that carries wall-clock data.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use omcat_core::consts::{CONSTANTS_VERSION, C_LIGHT, HBAR, K_B};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::formats::OutputRecord;

pub const FILE_NAME: &str = "manifest.json";
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub constants_version: String,
    pub constants: Constants,
    pub command: String,
    pub dry_run: bool,
    pub jobs: usize,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub resolved_config: Value,
    pub inputs: Vec<InputRecord>,
    pub derived: Map<String, Value>,
    pub warnings: Vec<String>,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputRecord>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &str, resolved_config: Value, dry_run: bool, jobs: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: omcat_core::VERSION.into(),
            constants_version: CONSTANTS_VERSION.into(),
            constants: Constants {
                hbar: HBAR,
                k_b: K_B,
                c: C_LIGHT,
            },
            command: command.into(),
            dry_run,
            jobs,
            status: "running".into(),
            error: None,
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            resolved_config,
            inputs: Vec::new(),
            derived: Map::new(),
            warnings: Vec::new(),
            stages: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.derived.insert(key.to_owned(), v);
    }

    pub fn finish(&mut self, error: Option<String>) {
        self.status = if error.is_some() { "failed" } else { "ok" }.into();
        self.error = error;
        self.finished_unix_s = unix_now();
    }
}

/// Wall-clock timer for one pipeline stage.
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn stop(self, name: &str, ok: bool) -> StageTiming {
        StageTiming {
            name: name.to_owned(),
            seconds: self.0.elapsed().as_secs_f64(),
            ok,
        }
    }
}
