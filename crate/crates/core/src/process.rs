//! Child processes with bytes on stdin/stdout and a wall-clock timeout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// An external program: either a shell line (run with `sh -c`) or an argv list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommandSpec {
    Shell(String),
    Argv(Vec<String>),
}

impl CommandSpec {
    pub fn shell(line: impl Into<String>) -> Self {
        CommandSpec::Shell(line.into())
    }

    fn command(&self) -> Result<Command, ProcessError> {
        match self {
            CommandSpec::Shell(line) => {
                let mut c = Command::new("sh");
                c.arg("-c").arg(line);
                Ok(c)
            }
            CommandSpec::Argv(argv) => {
                let (program, args) = argv
                    .split_first()
                    .ok_or_else(|| ProcessError::Spawn("empty command".into()))?;
                let mut c = Command::new(program);
                c.args(args);
                Ok(c)
            }
        }
    }
}

impl std::fmt::Display for CommandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandSpec::Shell(line) => f.write_str(line),
            CommandSpec::Argv(argv) => f.write_str(&argv.join(" ")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("could not start process: {0}")]
    Spawn(String),
    #[error("process exited with status {status:?}: {stderr}")]
    Failed { status: Option<i32>, stderr: String },
    #[error("process exceeded {0:?}")]
    Timeout(Duration),
    #[error("i/o with process failed: {0}")]
    Io(String),
}

/// Runs `spec`, feeding `input` on stdin, and returns stdout on a zero exit status.
pub fn run_with_timeout(spec: &CommandSpec, input: &[u8], timeout: Duration) -> Result<Vec<u8>, ProcessError> {
    let mut child = spec
        .command()?
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| ProcessError::Spawn(format!("{spec}: {e}")))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let payload = input.to_vec();
    // A child that exits without reading its input produces a broken pipe; that is
    // not an error in itself, the exit status decides.
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(&payload);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout).map_err(|e| ProcessError::Io(e.to_string()))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ProcessError::Timeout(timeout));
        }
    };
    let _ = writer.join();
    let out = reader
        .join()
        .map_err(|_| ProcessError::Io("stdout reader panicked".into()))?
        .map_err(|e| ProcessError::Io(e.to_string()))?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(ProcessError::Failed {
            status: status.code(),
            stderr: String::from_utf8_lossy(&err).trim().to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_and_failures() {
        let out = run_with_timeout(&CommandSpec::shell("cat"), b"hello", DEFAULT_TIMEOUT).unwrap();
        assert_eq!(out, b"hello");
        let argv = CommandSpec::Argv(vec!["sh".into(), "-c".into(), "printf ok".into()]);
        assert_eq!(run_with_timeout(&argv, b"", DEFAULT_TIMEOUT).unwrap(), b"ok");
        match run_with_timeout(&CommandSpec::shell("echo bad >&2; exit 3"), b"", DEFAULT_TIMEOUT) {
            Err(ProcessError::Failed { status, stderr }) => {
                assert_eq!(status, Some(3));
                assert_eq!(stderr, "bad");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            run_with_timeout(&CommandSpec::shell("sleep 5"), b"", Duration::from_millis(200)),
            Err(ProcessError::Timeout(_))
        ));
        assert!(matches!(
            run_with_timeout(&CommandSpec::Argv(vec!["/nonexistent/tool".into()]), b"", DEFAULT_TIMEOUT),
            Err(ProcessError::Spawn(_))
        ));
    }

    #[test]
    fn spec_json_forms() {
        let a: CommandSpec = serde_json::from_str(r#""cat""#).unwrap();
        assert_eq!(a, CommandSpec::shell("cat"));
        let b: CommandSpec = serde_json::from_str(r#"["denoise","--fast"]"#).unwrap();
        assert_eq!(b, CommandSpec::Argv(vec!["denoise".into(), "--fast".into()]));
    }
}
