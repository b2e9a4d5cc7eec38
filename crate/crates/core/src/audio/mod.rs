//! Mono waveforms and the sample-level operations the editor is built from:
//! WAV I/O, resampling, 10 ms framing, equal-power crossfades and A-weighted
//! loudness.

mod crossfade;
mod loudness;
mod resample;
mod wav;

pub use crossfade::{equal_power_crossfade, equal_power_gains, splice, SplicePiece};
pub use loudness::{a_weighting_db, a_weighted_rms, match_loudness, GAIN_MAX, GAIN_MIN};
pub use resample::resample;
pub use wav::{decode_wav, encode_wav, load_wav, save_wav};

use std::ops::Range;

use thiserror::Error;

/// Canonical pipeline sample rate.
pub const PIPELINE_RATE: u32 = 16_000;
/// Analysis hop shared by pitch, prosody and PSOLA frames.
pub const HOP_SECONDS: f64 = 0.010;
/// Default splice crossfade length.
pub const CROSSFADE_SECONDS: f64 = 0.020;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV data: {0}")]
    Format(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("crossfade of {overlap} samples exceeds input of {len} samples")]
    OverlapTooLong { overlap: usize, len: usize },
    #[error("region {start}..{end} is invalid for a waveform of {len} samples")]
    BadRegion { start: usize, end: usize, len: usize },
    #[error("region of {samples} samples is shorter than the {min} sample minimum")]
    RegionTooShort { samples: usize, min: usize },
    #[error("segment is silent; loudness cannot be matched")]
    CannotMatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A mono sample buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Default for Waveform {
    fn default() -> Self {
        Self::new(Vec::new(), PIPELINE_RATE)
    }
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Nearest sample index for a time in seconds.
    pub fn sample_at(&self, seconds: f64) -> usize {
        seconds_to_samples(seconds, self.sample_rate)
    }

    pub fn slice(&self, region: Range<usize>) -> Result<Waveform, AudioError> {
        self.check_region(&region)?;
        Ok(Waveform::new(
            self.samples[region].to_vec(),
            self.sample_rate,
        ))
    }

    pub fn check_region(&self, region: &Range<usize>) -> Result<(), AudioError> {
        if region.start > region.end || region.end > self.samples.len() {
            return Err(AudioError::BadRegion {
                start: region.start,
                end: region.end,
                len: self.samples.len(),
            });
        }
        Ok(())
    }

    /// Sample value with zero extension outside the buffer.
    pub fn at(&self, index: isize) -> f32 {
        if index < 0 {
            0.0
        } else {
            self.samples.get(index as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform::new(
            self.samples
                .iter()
                .map(|&s| (s as f64 * gain) as f32)
                .collect(),
            self.sample_rate,
        )
    }
}

pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round().max(0.0) as usize
}

/// Number of samples in one hop at `sample_rate`.
pub fn hop_samples(sample_rate: u32) -> usize {
    seconds_to_samples(HOP_SECONDS, sample_rate)
}

/// A grid of 10 ms frames laid over a sample region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameGrid {
    pub hop_samples: usize,
    pub frame_count: usize,
    pub origin_sample: usize,
}

impl FrameGrid {
    pub fn for_region(region: &Range<usize>, sample_rate: u32) -> Self {
        let hop = hop_samples(sample_rate);
        let len = region.end.saturating_sub(region.start);
        Self {
            hop_samples: hop,
            frame_count: len.div_ceil(hop),
            origin_sample: region.start,
        }
    }

    pub fn frame_span(&self, frame: usize) -> Range<usize> {
        let start = self.origin_sample + frame * self.hop_samples;
        start..start + self.hop_samples
    }

    /// Frame containing an absolute sample index (clamped into the grid).
    pub fn frame_of(&self, sample: usize) -> usize {
        let rel = sample.saturating_sub(self.origin_sample) / self.hop_samples;
        rel.min(self.frame_count.saturating_sub(1))
    }
}
