//! Task-to-protocol registry.
//!
//! Callers describe what they want (sign, share a secret, agree a key) and in
//! which hardware configuration; the registry picks the protocol.

use serde::{Deserialize, Serialize};

use qnic_core::presets::Protocol;

use crate::error::{ProtocolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Sign,
    ShareSecret,
    Key,
}

/// Who sends the quantum states: forward means Alice transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detection {
    Heterodyne,
    Homodyne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub task: Task,
    pub direction: Direction,
    pub epsilon_fail: f64,
    #[serde(default)]
    pub message: Vec<bool>,
    #[serde(default)]
    pub secret: Vec<bool>,
}

impl TaskRequest {
    pub const DEFAULT_EPSILON: f64 = 1e-4;

    pub fn new(task: Task, direction: Direction) -> Self {
        Self {
            task,
            direction,
            epsilon_fail: Self::DEFAULT_EPSILON,
            message: Vec::new(),
            secret: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_fail > 0.0 && self.epsilon_fail < 1.0) {
            return Err(ProtocolError::Invalid(format!("epsilon_fail {} outside (0, 1)", self.epsilon_fail)));
        }
        Ok(())
    }
}

/// What the attached hardware can do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub directions: Vec<Direction>,
    pub detection: Detection,
}

impl Default for Capabilities {
    fn default() -> Self {
        Self {
            directions: vec![Direction::Forward, Direction::Backward],
            detection: Detection::Heterodyne,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub task: Task,
    pub direction: Direction,
    pub detection: Detection,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    entries: Vec<RegistryEntry>,
}

impl Default for Registry {
    fn default() -> Self {
        let e = |task, direction, protocol| RegistryEntry {
            task,
            direction,
            detection: Detection::Heterodyne,
            protocol,
        };
        Self {
            entries: vec![
                e(Task::Sign, Direction::Backward, Protocol::QdsB),
                e(Task::Sign, Direction::Forward, Protocol::QdsF),
                e(Task::ShareSecret, Direction::Backward, Protocol::QssB),
                e(Task::Key, Direction::Forward, Protocol::QkdF),
            ],
        }
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Adds an entry; a later entry for the same key shadows earlier ones.
    pub fn register(&mut self, entry: RegistryEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn lookup(&self, task: Task, direction: Direction, detection: Detection) -> Option<Protocol> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.task == task && e.direction == direction && e.detection == detection)
            .map(|e| e.protocol)
    }
}

/// A protocol chosen for a request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolInstance {
    pub protocol: Protocol,
    pub request: TaskRequest,
}

pub fn middleware_dispatch(req: &TaskRequest, caps: &Capabilities, registry: &Registry) -> Result<ProtocolInstance> {
    req.validate()?;
    let unsupported = || ProtocolError::UnsupportedTask {
        task: req.task,
        direction: req.direction,
    };
    if !caps.directions.contains(&req.direction) {
        return Err(unsupported());
    }
    let protocol = registry.lookup(req.task, req.direction, caps.detection).ok_or_else(unsupported)?;
    Ok(ProtocolInstance {
        protocol,
        request: req.clone(),
    })
}
