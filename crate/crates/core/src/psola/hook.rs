use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{decode_wav, encode_wav, Waveform};
use crate::process::{run_with_timeout, CommandSpec, ProcessError};

/// External denoiser: WAV on stdin, WAV on stdout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HookConfig {
    pub command: CommandSpec,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
}

fn default_timeout() -> f64 {
    10.0
}

impl HookConfig {
    pub fn new(command: CommandSpec) -> Self {
        Self {
            command,
            timeout_seconds: default_timeout(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HookError {
    #[error("postprocess hook failed: {0}")]
    Process(ProcessError),
    #[error("postprocess hook timed out after {0:?}")]
    Timeout(Duration),
    #[error("postprocess hook output is not usable audio: {0}")]
    Format(String),
    #[error("postprocess hook returned {got} Hz audio for {expected} Hz input")]
    SampleRate { expected: u32, got: u32 },
    #[error("postprocess hook returned {got} samples for {expected} input samples (limit ±1%)")]
    Length { expected: usize, got: usize },
}

/// Runs the hook, or returns the input untouched when there is none.
pub fn run_postprocess_hook(w: &Waveform, hook: Option<&HookConfig>) -> Result<Waveform, HookError> {
    let Some(hook) = hook else {
        return Ok(w.clone());
    };
    let input = encode_wav(w).map_err(|e| HookError::Format(e.to_string()))?;
    let timeout = Duration::from_secs_f64(hook.timeout_seconds.max(0.0));
    let output = run_with_timeout(&hook.command, &input, timeout).map_err(|e| match e {
        ProcessError::Timeout(t) => HookError::Timeout(t),
        other => HookError::Process(other),
    })?;
    let out = decode_wav(&output).map_err(|e| HookError::Format(e.to_string()))?;
    if out.sample_rate != w.sample_rate {
        return Err(HookError::SampleRate {
            expected: w.sample_rate,
            got: out.sample_rate,
        });
    }
    if (out.len() as f64 - w.len() as f64).abs() > 0.01 * w.len() as f64 {
        return Err(HookError::Length {
            expected: w.len(),
            got: out.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::synthetic_vowel;

    #[test]
    fn none_and_passthrough() {
        let w = synthetic_vowel(200.0, 0.2);
        assert_eq!(run_postprocess_hook(&w, None).unwrap(), w);
        let out = run_postprocess_hook(&w, Some(&HookConfig::new(CommandSpec::shell("cat")))).unwrap();
        assert_eq!(out.len(), w.len());
        for (a, b) in out.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn violations() {
        let w = synthetic_vowel(200.0, 0.2);
        let dir = tempfile::tempdir().unwrap();
        let half = dir.path().join("half.wav");
        crate::audio::save_wav(&w.slice(0..w.len() / 2).unwrap(), &half).unwrap();
        let stub = HookConfig::new(CommandSpec::shell(format!("cat > /dev/null; cat {}", half.display())));
        assert!(matches!(run_postprocess_hook(&w, Some(&stub)), Err(HookError::Length { .. })));
        let garbage = HookConfig::new(CommandSpec::shell("cat > /dev/null; echo nope"));
        assert!(matches!(run_postprocess_hook(&w, Some(&garbage)), Err(HookError::Format(_))));
        let fail = HookConfig::new(CommandSpec::shell("exit 2"));
        assert!(matches!(run_postprocess_hook(&w, Some(&fail)), Err(HookError::Process(_))));
        let slow = HookConfig {
            command: CommandSpec::shell("sleep 5"),
            timeout_seconds: 0.2,
        };
        assert!(matches!(run_postprocess_hook(&w, Some(&slow)), Err(HookError::Timeout(_))));
    }
}
