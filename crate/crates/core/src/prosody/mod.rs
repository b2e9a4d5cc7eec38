//! Context-aware prosody generation.
//!
//! Durations scale per-phoneme corpus means by the tempo of the surrounding
//! speech; pitch interpolates between the nearest context anchors in log2 space.
//! User pins pass through every generator unchanged.

mod external;
mod generate;
mod stats;

pub use external::{external_generator, ExternalRequest, ExternalResponse};
pub use generate::{
    generate_durations, generate_pitch, generate_prosody, sample_candidates, tempo_factor, GenerationParams,
    DURATION_MAX, DURATION_MIN, TEMPO_MAX, TEMPO_MIN,
};
pub use stats::{fit_duration_stats, DurationStats, SymbolStats};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::HOP_SECONDS;
use crate::pitch::{PitchContour, PitchError, PitchGrid};
use crate::process::ProcessError;

const UNVOICED: [&str; 10] = ["sp", "P", "T", "K", "F", "TH", "S", "SH", "CH", "HH"];

/// Silence and voiceless consonants carry no pitch.
pub fn is_unvoiced_symbol(symbol: &str) -> bool {
    UNVOICED.contains(&crate::alignment::base_symbol(symbol))
}

/// `round(Σ durations / hop)`.
pub fn frame_count(durations: &[f64]) -> usize {
    (durations.iter().sum::<f64>() / HOP_SECONDS).round() as usize
}

#[derive(Debug, Error, PartialEq)]
pub enum ProsodyError {
    #[error("duration statistics need at least one phoneme")]
    EmptyCorpus,
    #[error("no duration statistics available")]
    NoStats,
    #[error("empty edit region")]
    EmptyRegion,
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error(transparent)]
    Pitch(#[from] PitchError),
    #[error("external generator: {0}")]
    Process(ProcessError),
    #[error("external generator timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("external generator output is malformed: {0}")]
    Schema(String),
    #[error("external generator violated a constraint: {0}")]
    ConstraintViolation(String),
}

/// Known prosody around the edit region, measured from unedited audio.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProsodyContext {
    pub phonemes: Vec<String>,
    pub durations: Vec<f64>,
    /// Per 10 ms frame, `None` where unvoiced.
    pub f0: Vec<Option<f64>>,
}

impl ProsodyContext {
    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty() && self.f0.is_empty()
    }
}

/// Pins and context for one generation call. Pinned pitch `None` forces an
/// unvoiced frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProsodyConstraints {
    pub pinned_durations: BTreeMap<usize, f64>,
    pub pinned_pitch: BTreeMap<usize, Option<f64>>,
    pub context_before: ProsodyContext,
    pub context_after: ProsodyContext,
}

impl ProsodyConstraints {
    /// Same context, no pins.
    pub fn without_pins(&self) -> Self {
        Self {
            pinned_durations: BTreeMap::new(),
            pinned_pitch: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn without_context(&self) -> Self {
        Self {
            context_before: ProsodyContext::default(),
            context_after: ProsodyContext::default(),
            ..self.clone()
        }
    }

    /// Checks pins against a region of `phonemes` entries and the speaker grid.
    pub fn validate(&self, phonemes: usize, grid: &PitchGrid) -> Result<(), ProsodyError> {
        for side in [&self.context_before, &self.context_after] {
            if side.phonemes.len() != side.durations.len() {
                return Err(ProsodyError::InvalidConstraint(format!(
                    "context has {} phonemes but {} durations",
                    side.phonemes.len(),
                    side.durations.len()
                )));
            }
            if side.durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(ProsodyError::InvalidConstraint("context durations must be positive".into()));
            }
        }
        for (&i, &d) in &self.pinned_durations {
            if i >= phonemes {
                return Err(ProsodyError::InvalidConstraint(format!(
                    "pinned duration index {i} outside a {phonemes}-phoneme region"
                )));
            }
            if !(d > 0.0 && d <= DURATION_MAX) {
                return Err(ProsodyError::InvalidConstraint(format!(
                    "pinned duration {d} s at phoneme {i} outside (0, {DURATION_MAX}]"
                )));
            }
        }
        let (lo, hi) = pin_range(grid);
        for (&f, &p) in &self.pinned_pitch {
            if let Some(hz) = p {
                if !(hz >= lo && hz <= hi) {
                    return Err(ProsodyError::InvalidConstraint(format!(
                        "pinned pitch {hz} Hz at frame {f} outside the speaker range [{lo:.2}, {hi:.2}] Hz"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that pinned frames exist in a contour of `frames` frames.
    pub fn check_frames(&self, frames: usize) -> Result<(), ProsodyError> {
        match self.pinned_pitch.keys().find(|&&f| f >= frames) {
            Some(f) => Err(ProsodyError::InvalidConstraint(format!(
                "pinned pitch frame {f} outside a {frames}-frame region"
            ))),
            None => Ok(()),
        }
    }
}

/// Allowed pinned pitch: the grid span intersected with the analysis range.
fn pin_range(grid: &PitchGrid) -> (f64, f64) {
    let eps = 1e-9;
    (
        grid.min_hz().max(crate::pitch::F0_MIN) * (1.0 - eps),
        grid.max_hz().min(crate::pitch::F0_MAX) * (1.0 + eps),
    )
}

/// Generated (or explicit) durations and pitch for an edit region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProsodyTargets {
    pub durations: Vec<f64>,
    pub pitch: PitchContour,
}

impl ProsodyTargets {
    /// Frame-count law, duration bounds and pitch range.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some((i, d)) = self
            .durations
            .iter()
            .enumerate()
            .find(|(_, d)| !(**d > 0.0 && **d <= DURATION_MAX))
        {
            return Err(format!("duration {d} s at phoneme {i} outside (0, {DURATION_MAX}]"));
        }
        let expected = frame_count(&self.durations);
        if self.pitch.len() != expected {
            return Err(format!(
                "{} pitch frames but durations imply {expected}",
                self.pitch.len()
            ));
        }
        self.pitch
            .check_range(crate::pitch::F0_MIN, crate::pitch::F0_MAX)
            .map_err(|e| e.to_string())
    }

    /// Pins reproduced: durations exactly, pitch either exactly or grid-snapped.
    pub fn check_pins(&self, constraints: &ProsodyConstraints, grid: &PitchGrid) -> Result<(), String> {
        for (&i, &d) in &constraints.pinned_durations {
            match self.durations.get(i) {
                Some(&got) if got == d => {}
                got => return Err(format!("phoneme {i}: pinned duration {d} s, got {got:?}")),
            }
        }
        for (&f, &pin) in &constraints.pinned_pitch {
            let got = self.pitch.f0.get(f).copied().flatten();
            let ok = match (pin, got) {
                (None, None) => f < self.pitch.len(),
                (Some(p), Some(g)) => g == p || g == generate::snap_in_range(grid, p.log2()),
                _ => false,
            };
            if !ok {
                return Err(format!("frame {f}: pinned pitch {pin:?}, got {got:?}"));
            }
        }
        Ok(())
    }
}
