//! Session event log: one JSON object per line, a `created` header followed
//! by accepted responses in arrival order.

use std::io::{BufRead, Write};

use crowdopt_core::linesearch::OptConfig;
use serde::{Deserialize, Serialize};

use crate::session::{Domain, EstimateConfig, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "config", rename_all = "snake_case")]
pub enum ModeConfig {
    Optimize(OptConfig),
    Estimate(EstimateConfig),
}

impl ModeConfig {
    pub fn mode(&self) -> Mode {
        match self {
            Self::Optimize(_) => Mode::Optimize,
            Self::Estimate(_) => Mode::Estimate,
        }
    }
}

/// Everything a session's state depends on besides its responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub domain: Domain,
    /// Number of design variables.
    pub n: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub config: ModeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Slider { t: f64 },
    Pairwise { likert: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session: String,
        #[serde(flatten)]
        spec: SessionSpec,
    },
    Response {
        task: String,
        worker: String,
        answer: Answer,
    },
}

pub fn write_event<W: Write>(mut w: W, event: &Event) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, event)?;
    w.write_all(b"\n")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LogError {
    pub line: usize,
    pub message: String,
}

/// Parses a log into `(line number, event)` pairs. A last line without its
/// newline that does not parse is a write cut short and is dropped; any
/// other bad line is an error.
pub fn read_events<R: BufRead>(mut reader: R) -> Result<Vec<(usize, Event)>, LogError> {
    let mut events = Vec::new();
    let mut buf = String::new();
    let mut line = 0;
    loop {
        buf.clear();
        let read = reader
            .read_line(&mut buf)
            .map_err(|e| LogError { line: line + 1, message: e.to_string() })?;
        if read == 0 {
            return Ok(events);
        }
        line += 1;
        let complete = buf.ends_with('\n');
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(text) {
            Ok(ev) => events.push((line, ev)),
            Err(_) if !complete => return Ok(events),
            Err(e) => return Err(LogError { line, message: e.to_string() }),
        }
    }
}
