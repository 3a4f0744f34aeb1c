//! Client for an external similarity process speaking `textsim/1`, plus a
//! lexical reference implementation of the server side.
//!
//! The wire format is newline-delimited JSON over the child's stdio:
//! the child greets with `{"protocol":"textsim/1","backend":...}`, the client
//! writes one request line per pair followed by `{"flush":true}`, the child
//! answers each id once in any order and closes the batch with
//! `{"done":true}`. Closing the child's stdin ends the session.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::Mutex;
use std::sync::mpsc::{Receiver, RecvTimeoutError, channel};
use std::thread;
use std::time::{Duration, Instant};

use chapter_eval_core::textsim::{
    ScoreRequest, ScoreResponse, ScorerError, TextSimilarity, lexical_f1,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL: &str = "textsim/1";
pub const TIMEOUT_ENV: &str = "CHAPTEREVAL_SCORER_TIMEOUT_S";
pub const DEFAULT_TIMEOUT_S: f64 = 120.0;

/// Reads the scorer deadline from the environment, falling back to the
/// default when unset.
pub fn timeout_from_env() -> Result<Duration, ScorerError> {
    match std::env::var(TIMEOUT_ENV) {
        Err(_) => Ok(Duration::from_secs_f64(DEFAULT_TIMEOUT_S)),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(s) if s.is_finite() && s > 0.0 => Ok(Duration::from_secs_f64(s)),
            _ => Err(ScorerError::Protocol(format!(
                "{TIMEOUT_ENV} must be a positive number of seconds, got {raw:?}"
            ))),
        },
    }
}

#[derive(Serialize)]
struct RequestLine<'a> {
    id: &'a str,
    candidate: &'a str,
    reference: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Handshake {
    protocol: String,
    backend: String,
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<io::Result<String>>,
    timeout: Duration,
    /// Set after a protocol failure; later batches fail fast.
    broken: Option<String>,
}

impl Session {
    fn next_line(&mut self, deadline: Instant) -> Result<String, ScorerError> {
        let left = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ScorerError::Backend(format!("reading from scorer: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(ScorerError::Timeout(self.timeout.as_secs_f64())),
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Protocol(
                "scorer closed its output before finishing the batch".into(),
            )),
        }
    }

    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let deadline = Instant::now() + self.timeout;
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| ScorerError::Backend("scorer stdin already closed".into()))?;
        let mut buf = String::new();
        for r in requests {
            let line = RequestLine {
                id: &r.id,
                candidate: &r.candidate,
                reference: &r.reference,
            };
            buf.push_str(&serde_json::to_string(&line).expect("strings serialize"));
            buf.push('\n');
        }
        buf.push_str("{\"flush\":true}\n");
        stdin
            .write_all(buf.as_bytes())
            .and_then(|()| stdin.flush())
            .map_err(|e| ScorerError::Backend(format!("writing to scorer: {e}")))?;

        let mut out = Vec::with_capacity(requests.len());
        loop {
            let line = self.next_line(deadline)?;
            let value: Value = serde_json::from_str(&line)
                .map_err(|e| ScorerError::Protocol(format!("unparseable line {line:?}: {e}")))?;
            let obj = value
                .as_object()
                .ok_or_else(|| ScorerError::Protocol(format!("expected an object, got {line:?}")))?;
            if obj.get("done") == Some(&Value::Bool(true)) && obj.len() == 1 {
                return Ok(out);
            }
            let id = obj.get("id").and_then(Value::as_str);
            let score = obj.get("score").and_then(Value::as_f64);
            match (id, score, obj.len()) {
                (Some(id), Some(score), 2) => out.push(ScoreResponse {
                    id: id.to_string(),
                    score,
                }),
                _ => return Err(ScorerError::Protocol(format!("malformed response {line:?}"))),
            }
        }
    }
}

/// A running similarity sidecar. Batches are serialized through an internal
/// lock, so one instance can be shared by reference across worker threads.
pub struct ExternalScorer {
    backend: String,
    session: Mutex<Session>,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("backend", &self.backend)
            .finish_non_exhaustive()
    }
}

impl ExternalScorer {
    /// Starts `argv` and waits for its handshake.
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, ScorerError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ScorerError::Backend("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Backend(format!("cannot start {program:?}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut session = Session {
            child,
            stdin,
            lines: rx,
            timeout,
            broken: None,
        };
        let greeting = session.next_line(Instant::now() + timeout)?;
        let hs: Handshake = serde_json::from_str(&greeting)
            .map_err(|e| ScorerError::Protocol(format!("bad handshake {greeting:?}: {e}")))?;
        if hs.protocol != PROTOCOL {
            return Err(ScorerError::Protocol(format!(
                "scorer speaks {:?}, expected {PROTOCOL:?}",
                hs.protocol
            )));
        }
        Ok(ExternalScorer {
            backend: hs.backend,
            session: Mutex::new(session),
        })
    }

    /// Splits a shell-style command line and spawns it.
    pub fn from_command_line(cmd: &str, timeout: Duration) -> Result<Self, ScorerError> {
        let argv = shell_words::split(cmd)
            .map_err(|e| ScorerError::Backend(format!("cannot parse scorer command: {e}")))?;
        Self::spawn(&argv, timeout)
    }
}

impl TextSimilarity for ExternalScorer {
    fn backend(&self) -> &str {
        &self.backend
    }

    fn score_raw(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(reason) = &session.broken {
            return Err(ScorerError::Backend(format!("scorer unusable after earlier failure: {reason}")));
        }
        let result = session.exchange(requests);
        if let Err(e) = &result {
            session.broken = Some(e.to_string());
        }
        result
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        drop(session.stdin.take());
        let grace = Instant::now() + Duration::from_secs(2);
        loop {
            match session.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) if Instant::now() >= grace => {
                    let _ = session.child.kill();
                    let _ = session.child.wait();
                    return;
                }
                Ok(None) => thread::sleep(Duration::from_millis(10)),
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IncomingRequest {
    id: String,
    candidate: String,
    reference: String,
}

/// Server side of `textsim/1` backed by token F1. Returns at end of input.
pub fn serve_lexical<R: BufRead, W: Write>(input: R, mut output: W) -> io::Result<()> {
    writeln!(output, "{{\"protocol\":\"{PROTOCOL}\",\"backend\":\"lexical_f1\"}}")?;
    output.flush()?;
    let mut pending: Vec<IncomingRequest> = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        if value.get("flush") == Some(&Value::Bool(true)) {
            for r in pending.drain(..) {
                let resp = serde_json::json!({
                    "id": r.id,
                    "score": lexical_f1(&r.candidate, &r.reference),
                });
                writeln!(output, "{resp}")?;
            }
            writeln!(output, "{{\"done\":true}}")?;
            output.flush()?;
        } else {
            let req: IncomingRequest = serde_json::from_value(value)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            pending.push(req);
        }
    }
    Ok(())
}
