//! Out-of-process oracle speaking newline-delimited JSON over stdio.
//!
//! ```text
//! -> {"type":"hello","schema":[{"name":"age","kind":"numeric"},...]}
//! <- {"type":"ready"}
//! -> {"type":"predict","id":1,"instances":[[39,"Male",...],...]}
//! <- {"type":"predictions","id":1,"scores":[0.12,...]}
//! ```
//!
//! One request is in flight at a time. Anything the child writes to stderr is
//! kept and attached to transport errors.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use fale_core::{FeatureKind, Instance, OracleError, PredictionOracle, Schema};
use serde::{Deserialize, Serialize};

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(300);

const MAX_DIAGNOSTICS: usize = 4096;

#[derive(Serialize)]
struct SchemaEntry<'a> {
    name: &'a str,
    kind: FeatureKind,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Outgoing<'a> {
    Hello { schema: Vec<SchemaEntry<'a>> },
    Predict { id: u64, instances: &'a [Instance] },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Incoming {
    Ready,
    Predictions { id: u64, scores: Vec<f64> },
    Error { message: String },
}

#[derive(Clone, Debug)]
pub struct ExternalConfig {
    pub handshake_timeout: Duration,
    pub request_timeout: Duration,
    pub batch_limit: Option<usize>,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            handshake_timeout: DEFAULT_HANDSHAKE_TIMEOUT,
            request_timeout: DEFAULT_REQUEST_TIMEOUT,
            batch_limit: None,
        }
    }
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    /// Set once the child misbehaved; later calls fail fast.
    broken: Option<OracleError>,
}

pub struct ExternalOracle {
    session: Mutex<Session>,
    stderr: Arc<Mutex<String>>,
    stderr_reader: Option<JoinHandle<()>>,
    arity: usize,
    config: ExternalConfig,
    command: Vec<String>,
}

impl std::fmt::Debug for ExternalOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalOracle")
            .field("command", &self.command)
            .finish_non_exhaustive()
    }
}

fn collect_stderr<R: Read + Send + 'static>(pipe: R, sink: Arc<Mutex<String>>) -> JoinHandle<()> {
    thread::spawn(move || {
        let reader = BufReader::new(pipe);
        for line in reader.lines() {
            let Ok(line) = line else { break };
            log::debug!("oracle stderr: {line}");
            let mut buf = sink.lock().unwrap_or_else(|p| p.into_inner());
            if buf.len() < MAX_DIAGNOSTICS {
                if !buf.is_empty() {
                    buf.push('\n');
                }
                buf.push_str(&line);
            }
        }
    })
}

impl ExternalOracle {
    pub fn spawn(command: &[String], schema: &Schema) -> Result<Self, OracleError> {
        Self::spawn_with(command, schema, ExternalConfig::default())
    }

    pub fn spawn_with(
        command: &[String],
        schema: &Schema,
        config: ExternalConfig,
    ) -> Result<Self, OracleError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| OracleError::Spawn("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| OracleError::Spawn(format!("{program}: {e}")))?;
        log::info!("spawned oracle {command:?} (pid {})", child.id());

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let stderr_reader = Some(collect_stderr(
            child.stderr.take().expect("piped stderr"),
            Arc::clone(&stderr),
        ));

        let oracle = Self {
            session: Mutex::new(Session {
                stdin: child.stdin.take(),
                child,
                lines: rx,
                next_id: 1,
                broken: None,
            }),
            stderr,
            stderr_reader,
            arity: schema.len(),
            config,
            command: command.to_vec(),
        };
        oracle.handshake(schema)?;
        Ok(oracle)
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn handshake(&self, schema: &Schema) -> Result<(), OracleError> {
        let hello = Outgoing::Hello {
            schema: schema
                .features
                .iter()
                .map(|f| SchemaEntry {
                    name: &f.name,
                    kind: f.kind,
                })
                .collect(),
        };
        let mut s = self.lock();
        self.send(&mut s, &hello)?;
        match self.receive(&mut s, "handshake", self.config.handshake_timeout)? {
            Incoming::Ready => Ok(()),
            Incoming::Error { message } => Err(OracleError::Protocol(format!(
                "oracle rejected handshake: {message}"
            ))),
            Incoming::Predictions { .. } => Err(OracleError::Protocol(
                "expected `ready`, got `predictions`".into(),
            )),
        }
    }

    fn diagnostics(&self, s: &mut Session) -> String {
        // Give the stderr reader a moment to drain after the child exits.
        for _ in 0..20 {
            if matches!(s.child.try_wait(), Ok(Some(_))) {
                break;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let status = match s.child.try_wait() {
            Ok(Some(st)) => st.to_string(),
            _ => "still running".into(),
        };
        thread::sleep(Duration::from_millis(20));
        let text = self
            .stderr
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .clone();
        if text.is_empty() {
            status
        } else {
            format!("{status}; {}", text.replace('\n', " | "))
        }
    }

    fn transport(&self, s: &mut Session, message: String) -> OracleError {
        let e = OracleError::Transport {
            message,
            diagnostics: self.diagnostics(s),
        };
        s.broken = Some(e.clone());
        e
    }

    fn send(&self, s: &mut Session, msg: &Outgoing<'_>) -> Result<(), OracleError> {
        if let Some(e) = &s.broken {
            return Err(e.clone());
        }
        let mut line = serde_json::to_string(msg)
            .map_err(|e| OracleError::Input(format!("cannot encode request: {e}")))?;
        line.push('\n');
        let result = match s.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        result.map_err(|e| self.transport(s, format!("cannot write to oracle: {e}")))
    }

    fn receive(
        &self,
        s: &mut Session,
        stage: &str,
        timeout: Duration,
    ) -> Result<Incoming, OracleError> {
        let line = match s.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(self.transport(s, format!("cannot read from oracle: {e}"))),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(self.transport(s, format!("oracle closed its output during {stage}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                let e = OracleError::Timeout {
                    stage: stage.into(),
                    seconds: timeout.as_secs_f64(),
                };
                s.broken = Some(e.clone());
                return Err(e);
            }
        };
        serde_json::from_str(line.trim_end()).map_err(|e| {
            let e = OracleError::Protocol(format!("malformed message during {stage}: {e}"));
            s.broken = Some(e.clone());
            e
        })
    }
}

impl PredictionOracle for ExternalOracle {
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        if let Some(bad) = batch.iter().find(|i| i.arity() != self.arity) {
            return Err(OracleError::InstanceArity {
                expected: self.arity,
                actual: bad.arity(),
            });
        }
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let mut s = self.lock();
        let id = s.next_id;
        s.next_id += 1;
        self.send(
            &mut s,
            &Outgoing::Predict {
                id,
                instances: batch,
            },
        )?;
        match self.receive(&mut s, "predict", self.config.request_timeout)? {
            Incoming::Predictions { id: got, scores } => {
                if got != id {
                    let e = OracleError::Protocol(format!("expected response id {id}, got {got}"));
                    s.broken = Some(e.clone());
                    return Err(e);
                }
                if scores.len() != batch.len() {
                    return Err(OracleError::ScoreCount {
                        expected: batch.len(),
                        actual: scores.len(),
                    });
                }
                Ok(scores)
            }
            Incoming::Error { message } => Err(OracleError::Input(message)),
            Incoming::Ready => Err(OracleError::Protocol(
                "expected `predictions`, got `ready`".into(),
            )),
        }
    }

    fn batch_limit(&self) -> Option<usize> {
        self.config.batch_limit
    }

    fn concurrency_safe(&self) -> bool {
        false
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        let s = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        drop(s.stdin.take());
        if !matches!(s.child.try_wait(), Ok(Some(_))) {
            let _ = s.child.kill();
        }
        let _ = s.child.wait();
        if let Some(h) = self.stderr_reader.take() {
            let _ = h.join();
        }
    }
}
