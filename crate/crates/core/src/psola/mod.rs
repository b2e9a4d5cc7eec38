//! TD-PSOLA: pitch marks, per-frame rate and shift maps, and overlap-add synthesis.

mod epochs;
mod hook;
mod maps;
mod synth;

pub use epochs::{detect_epochs, EpochSequence};
pub use hook::{run_postprocess_hook, HookConfig, HookError};
pub use maps::{build_rate_map, RateMap, ShiftMap, RATE_MAX, RATE_MIN};
pub use synth::{synthesize, TimeWarp};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PsolaError {
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("region {start}..{end} is outside a {len}-sample waveform")]
    BadRegion { start: usize, end: usize, len: usize },
    #[error("no pitch epochs in the region")]
    EmptyEpochs,
    #[error("invalid map value: {0}")]
    InvalidMap(String),
}

fn check_region(len: usize, region: &std::ops::Range<usize>) -> Result<(), PsolaError> {
    if region.start >= region.end || region.end > len {
        return Err(PsolaError::BadRegion {
            start: region.start,
            end: region.end,
            len,
        });
    }
    Ok(())
}
