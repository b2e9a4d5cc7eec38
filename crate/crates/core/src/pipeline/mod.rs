//! Text-level edits to audio: plan the splice, match loudness, generate prosody
//! for the edited phonemes, impose it with TD-PSOLA, post-process, crossfade and
//! re-time the alignment.

mod analysis;
mod execute;
mod script;

pub use analysis::{contour_for_span, sample_contour, SpeakerModel};
pub use execute::{
    execute, measured_targets, prepare, regenerate_with_overrides, render, warp_pitch, EditResult,
    LoudnessRecord, PieceProvenance, Prepared, ProsodySource, Provenance,
};
pub use script::{
    plan_edit, plan_identity_splice, DocWord, EditOp, EditScript, PhonemeRef, Segment, SplicePlan,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{parse_alignment, AlignedTranscript};
use crate::audio::{hop_samples, load_wav, resample, Waveform, CROSSFADE_SECONDS, HOP_SECONDS, PIPELINE_RATE};
use crate::pitch::PitchConfig;
use crate::process::CommandSpec;
use crate::psola::HookConfig;

/// A recording and its alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub waveform: Waveform,
    pub transcript: AlignedTranscript,
}

/// Allowed gap between an alignment's stated duration and its audio.
pub const ALIGNMENT_TOLERANCE_SECONDS: f64 = 0.05;

impl Recording {
    /// Resamples to the pipeline rate and checks the alignment fits the audio.
    pub fn new(waveform: Waveform, transcript: AlignedTranscript) -> Result<Self, PipelineError> {
        let waveform = if waveform.sample_rate == PIPELINE_RATE {
            waveform
        } else {
            resample(&waveform, PIPELINE_RATE)
        };
        let audio = waveform.duration_seconds();
        let stated = transcript.audio_duration;
        let last = transcript.phonemes.last().map_or(0.0, |p| p.end);
        if (stated - audio).abs() > ALIGNMENT_TOLERANCE_SECONDS || last > audio + ALIGNMENT_TOLERANCE_SECONDS {
            return Err(PipelineError::Input(format!(
                "alignment covers {stated:.3} s (last phoneme ends at {last:.3} s) but the audio is {audio:.3} s"
            )));
        }
        if waveform.len() < hop_samples(PIPELINE_RATE) {
            return Err(PipelineError::Input("audio is shorter than one frame".into()));
        }
        Ok(Self { waveform, transcript })
    }

    pub fn load(wav: impl AsRef<Path>, alignment: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let (wav, alignment) = (wav.as_ref(), alignment.as_ref());
        let waveform = load_wav(wav).map_err(|e| PipelineError::Input(format!("{}: {e}", wav.display())))?;
        let text = std::fs::read_to_string(alignment)
            .map_err(|e| PipelineError::Input(format!("{}: {e}", alignment.display())))?;
        let transcript =
            parse_alignment(&text).map_err(|e| PipelineError::Input(format!("{}: {e}", alignment.display())))?;
        Self::new(waveform, transcript)
    }
}

/// Recordings by id.
pub type Recordings = BTreeMap<String, Recording>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub hop: f64,
    pub crossfade_seconds: f64,
    /// Phonemes on each side of the correction region used as context.
    pub context_phonemes: usize,
    pub loudness_matching: bool,
    pub pitch: PitchConfig,
    /// Grid sigma (octaves) when a session has too few voiced frames to fit one.
    pub fallback_grid_sigma: f64,
    pub postprocess: Option<HookConfig>,
    /// Use the unprocessed audio when the hook fails instead of failing the edit.
    pub postprocess_fallback: bool,
    pub external_generator: Option<CommandSpec>,
    pub external_timeout_seconds: f64,
    pub seed: u64,
    pub candidates: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: PIPELINE_RATE,
            hop: HOP_SECONDS,
            crossfade_seconds: CROSSFADE_SECONDS,
            context_phonemes: 10,
            loudness_matching: true,
            pitch: PitchConfig::default(),
            fallback_grid_sigma: 0.2,
            postprocess: None,
            postprocess_fallback: false,
            external_generator: None,
            external_timeout_seconds: 10.0,
            seed: 0,
            candidates: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.sample_rate != PIPELINE_RATE {
            return bad(format!("sample_rate must be {PIPELINE_RATE}, got {}", self.sample_rate));
        }
        if (self.hop - HOP_SECONDS).abs() > 1e-12 {
            return bad(format!("hop must be {HOP_SECONDS}, got {}", self.hop));
        }
        if !(self.crossfade_seconds >= 0.0 && self.crossfade_seconds <= 0.1) {
            return bad(format!("crossfade_seconds {} outside [0, 0.1]", self.crossfade_seconds));
        }
        if !(self.fallback_grid_sigma > 0.0) {
            return bad("fallback_grid_sigma must be positive".into());
        }
        if !(self.external_timeout_seconds > 0.0) {
            return bad("external_timeout_seconds must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(document: &str) -> Result<Self, PipelineError> {
        let c: Self = serde_json::from_str(document).map_err(|e| PipelineError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("edit script operation {op}: {message}")]
    Script { op: usize, message: String },
    #[error("unknown recording {0:?}")]
    UnknownRecording(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    /// Input problems rather than processing failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PipelineError::Script { .. }
                | PipelineError::UnknownRecording(_)
                | PipelineError::Config(_)
                | PipelineError::Input(_)
        ) || matches!(self, PipelineError::Stage { stage: "constraints", .. })
    }
}
