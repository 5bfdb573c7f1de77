//! Runs external ITN or translation models as subprocesses over a
//! line-delimited JSON protocol.
//!
//! Protocol, bit-exact: one `{"id": <u64>, "text": <string>}` object per
//! line (UTF-8, LF) on the child's standard input; one
//! `{"id", "text"}` or `{"id", "error"}` object per line on its standard
//! output. At most `max_batch` requests are outstanding at a time.
//! Failures are per item: a timeout, a malformed response or a crash marks
//! ids failed without losing the rest of the batch.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How to run and supervise one external model process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BridgeSpec {
    /// Executable followed by its arguments.
    pub command: Vec<String>,
    pub timeout_ms: u64,
    pub max_batch: usize,
    #[serde(default)]
    pub restart_on_crash: bool,
}

impl BridgeSpec {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<(), BridgeError> {
        if self.command.is_empty() {
            return Err(BridgeError::BadSpec("command is empty".into()));
        }
        if self.timeout_ms == 0 {
            return Err(BridgeError::BadSpec("timeout must be positive".into()));
        }
        if self.max_batch == 0 {
            return Err(BridgeError::BadSpec("max-batch must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("invalid bridge spec: {0}")]
    BadSpec(String),
    #[error("failed to spawn {command:?}: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
}

/// Per-item result: the model's text, or why this id failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemOutcome {
    Text(String),
    Failed(String),
}

impl ItemOutcome {
    pub fn is_failed(&self) -> bool {
        matches!(self, ItemOutcome::Failed(_))
    }
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    text: &'a str,
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    error: Option<String>,
}

struct Worker {
    child: Child,
    stdin: std::process::ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(spec: &BridgeSpec) -> Result<Self, BridgeError> {
        let mut command = Command::new(&spec.command[0]);
        command
            .args(&spec.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        let mut child = command.spawn().map_err(|source| BridgeError::Spawn {
            command: spec.command.join(" "),
            source,
        })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                let is_err = line.is_err();
                if tx.send(line).is_err() || is_err {
                    break;
                }
            }
        });
        Ok(Worker {
            child,
            stdin,
            lines: rx,
        })
    }

    fn send(&mut self, id: u64, text: &str) -> std::io::Result<()> {
        let line = serde_json::to_string(&Request { id, text }).expect("request serializes");
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Run a batch of items through the external model. Exactly one outcome
/// per input id, in input order. Per-item failures never abort the batch;
/// a crash fails the in-flight ids and, when configured, restarts the
/// process for the rest.
pub fn run_batch(
    items: &[(u64, String)],
    spec: &BridgeSpec,
) -> Result<Vec<(u64, ItemOutcome)>, BridgeError> {
    spec.validate()?;
    let mut outcomes: BTreeMap<usize, ItemOutcome> = BTreeMap::new();
    // ids may repeat across a stream; key everything by input position and
    // map response ids onto the oldest in-flight position with that id
    let mut next_to_send = 0usize;
    let mut worker = Some(Worker::spawn(spec)?);

    while outcomes.len() < items.len() {
        let Some(active) = worker.as_mut() else {
            for (position, _) in items.iter().enumerate() {
                outcomes
                    .entry(position)
                    .or_insert_with(|| ItemOutcome::Failed("model process exited".into()));
            }
            break;
        };
        let mut pending: BTreeMap<usize, Instant> = BTreeMap::new();
        let mut crashed = false;

        'with_worker: loop {
            // keep up to max_batch requests outstanding
            while pending.len() < spec.max_batch && next_to_send < items.len() {
                let (id, text) = &items[next_to_send];
                match active.send(*id, text) {
                    Ok(()) => {
                        pending.insert(next_to_send, Instant::now());
                        next_to_send += 1;
                    }
                    Err(_) => {
                        crashed = true;
                        break 'with_worker;
                    }
                }
            }
            if pending.is_empty() {
                break;
            }
            // wait until the oldest outstanding deadline
            let now = Instant::now();
            let deadline = pending
                .values()
                .map(|sent| *sent + spec.timeout())
                .min()
                .expect("pending non-empty");
            let wait = deadline.saturating_duration_since(now);
            match active.lines.recv_timeout(wait) {
                Ok(Ok(line)) => {
                    match serde_json::from_str::<Response>(line.trim()) {
                        Ok(response) => {
                            let position = pending
                                .iter()
                                .find(|(p, _)| items[**p].0 == response.id)
                                .map(|(p, _)| *p);
                            if let Some(position) = position {
                                pending.remove(&position);
                                let outcome = match (response.text, response.error) {
                                    (Some(text), None) => ItemOutcome::Text(text),
                                    (_, Some(error)) => ItemOutcome::Failed(error),
                                    (None, None) => {
                                        ItemOutcome::Failed("response carried no text".into())
                                    }
                                };
                                outcomes.insert(position, outcome);
                            }
                            // responses for unknown or timed-out ids are dropped
                        }
                        Err(e) => {
                            // can't attribute the line: fail the oldest
                            if let Some((&position, _)) = pending.iter().next() {
                                pending.remove(&position);
                                outcomes.insert(
                                    position,
                                    ItemOutcome::Failed(format!("malformed response line: {e}")),
                                );
                            }
                        }
                    }
                }
                Ok(Err(_)) | Err(mpsc::RecvTimeoutError::Disconnected) => {
                    crashed = true;
                    break 'with_worker;
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    let now = Instant::now();
                    let expired: Vec<usize> = pending
                        .iter()
                        .filter(|(_, sent)| now.duration_since(**sent) >= spec.timeout())
                        .map(|(p, _)| *p)
                        .collect();
                    for position in expired {
                        pending.remove(&position);
                        outcomes.insert(
                            position,
                            ItemOutcome::Failed(format!("timed out after {}ms", spec.timeout_ms)),
                        );
                    }
                }
            }
        }

        if crashed {
            for (position, _) in pending {
                outcomes.insert(position, ItemOutcome::Failed("model process exited".into()));
            }
            worker = if spec.restart_on_crash && outcomes.len() < items.len() {
                Worker::spawn(spec).ok()
            } else {
                None
            };
        }
    }

    Ok(items
        .iter()
        .enumerate()
        .map(|(position, (id, _))| {
            let outcome = outcomes
                .remove(&position)
                .unwrap_or_else(|| ItemOutcome::Failed("model process exited".into()));
            (*id, outcome)
        })
        .collect())
}
