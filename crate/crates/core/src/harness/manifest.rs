use std::collections::BTreeMap;

use serde::Serialize;

use super::{config_hash, RunConfig};

/// Record of one command invocation, written as `manifest.json`. It holds no
/// timestamps so identical runs give identical manifests.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub platform: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub outcomes: Vec<RunOutcome>,
    /// Named pass/fail checks of validation commands.
    pub checks: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    /// SHA-256 of every emitted file except the manifest itself.
    pub files: BTreeMap<String, String>,
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { label: String },
    BlewUp { label: String, t: f64 },
    Failed { label: String, reason: String },
}

impl RunOutcome {
    pub fn completed(label: &str) -> Self {
        RunOutcome::Completed {
            label: label.to_string(),
        }
    }

    pub fn blew_up(label: &str, t: f64) -> Self {
        RunOutcome::BlewUp {
            label: label.to_string(),
            t,
        }
    }

    pub fn failed(label: &str, reason: String) -> Self {
        RunOutcome::Failed {
            label: label.to_string(),
            reason,
        }
    }
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            platform: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            config_hash: config_hash(cfg),
            config: serde_json::to_value(cfg).expect("configs serialize"),
            outcomes: Vec::new(),
            checks: BTreeMap::new(),
            notes: Vec::new(),
            files: BTreeMap::new(),
            partial: false,
        }
    }

    pub(crate) fn note_snapshot_interval(&mut self, requested: Option<f64>, used: f64) {
        match requested {
            Some(r) if r != used => self
                .notes
                .push(format!("stepper.snapshot_every rounded from {r} to {used}")),
            None => self.notes.push(format!("stepper.snapshot_every defaulted to {used}")),
            _ => {}
        }
    }
}
