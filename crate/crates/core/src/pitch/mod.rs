//! Fundamental-frequency analysis: candidate posteriors per 10 ms frame, Viterbi
//! decoding across frames, hysteresis voicing and the speaker's log-pitch grid.

mod grid;
mod posteriors;
mod viterbi;

pub use grid::{build_grid, PitchGrid, GRID_BINS};
pub use posteriors::{compute_posteriors, track_pitch, PitchPosteriorgram};
pub use viterbi::{transition_log_probs, viterbi_decode, OBSERVATION_FLOOR};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::HOP_SECONDS;

pub const F0_MIN: f64 = 50.0;
pub const F0_MAX: f64 = 550.0;

#[derive(Debug, Error, PartialEq)]
pub enum PitchError {
    #[error("analysis region of {seconds:.3} s is shorter than {min:.3} s")]
    RegionTooShort { seconds: f64, min: f64 },
    #[error("pitch analysis requires {expected} Hz audio, got {actual} Hz")]
    SampleRate { expected: u32, actual: u32 },
    #[error("region {start}..{end} is outside a {len}-sample waveform")]
    BadRegion { start: usize, end: usize, len: usize },
    #[error("need at least {needed} voiced frames to build a pitch grid, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("pitch grid is degenerate: standard deviation {0}")]
    DegenerateGrid(f64),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
}

/// Analyzer settings. Defaults follow the editor's pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    /// Spacing of posterior candidates in cents.
    pub candidate_cents: f64,
    pub window_seconds: f64,
    /// Score penalty per octave below `f0_max`; breaks subharmonic ties.
    pub octave_cost: f64,
    /// Exponent applied to the penalized scores before row normalization.
    pub posterior_sharpness: f64,
    pub transition_sigma_octaves: f64,
    pub voicing_high: f64,
    pub voicing_low: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: F0_MIN,
            f0_max: F0_MAX,
            candidate_cents: 20.0,
            window_seconds: 0.025,
            octave_cost: 0.02,
            posterior_sharpness: 20.0,
            transition_sigma_octaves: 0.2,
            voicing_high: 0.6,
            voicing_low: 0.4,
        }
    }
}

/// Two-threshold voicing: switch on at `high`, stay on while at or above `low`.
pub fn hysteresis_voicing(confidence: &[f64], high: f64, low: f64) -> Vec<bool> {
    assert!(
        (0.0..=1.0).contains(&low) && low <= high && high <= 1.0,
        "thresholds must satisfy 0 <= low <= high <= 1"
    );
    let mut voiced = false;
    confidence
        .iter()
        .map(|&c| {
            voiced = if voiced { c >= low } else { c >= high };
            voiced
        })
        .collect()
}

/// Per-frame f0 with voicing; `None` marks an unvoiced frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PitchContour {
    pub hop: f64,
    pub f0: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawContour {
    hop: f64,
    f0: Vec<Option<f64>>,
    voiced: Vec<bool>,
}

impl PitchContour {
    pub fn new(f0: Vec<Option<f64>>) -> Self {
        Self {
            hop: HOP_SECONDS,
            f0,
        }
    }

    pub fn unvoiced(frames: usize) -> Self {
        Self::new(vec![None; frames])
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn voiced(&self) -> Vec<bool> {
        self.f0.iter().map(Option::is_some).collect()
    }

    pub fn voiced_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0.iter().flatten().copied()
    }

    /// Checks that voiced values are finite and lie in `[lo, hi]` Hz.
    pub fn check_range(&self, lo: f64, hi: f64) -> Result<(), PitchError> {
        for (i, f) in self.f0.iter().enumerate() {
            if let Some(f) = f {
                if !(f.is_finite() && *f >= lo - 1e-9 && *f <= hi + 1e-9) {
                    return Err(PitchError::InvalidContour(format!(
                        "frame {i}: f0 {f} outside [{lo}, {hi}] Hz"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("contour serializes")
    }

    pub fn from_json(document: &str) -> Result<Self, PitchError> {
        serde_json::from_str(document).map_err(|e| PitchError::InvalidContour(e.to_string()))
    }

    /// Builds a contour from the parallel `f0`/`voiced` arrays of the wire format.
    pub fn from_parts(hop: f64, f0: Vec<Option<f64>>, voiced: &[bool]) -> Result<Self, PitchError> {
        if f0.len() != voiced.len() {
            return Err(PitchError::InvalidContour(format!(
                "{} f0 values but {} voicing flags",
                f0.len(),
                voiced.len()
            )));
        }
        if (hop - HOP_SECONDS).abs() > 1e-9 {
            return Err(PitchError::InvalidContour(format!("hop {hop} s is not 0.01 s")));
        }
        for (i, (f, &v)) in f0.iter().zip(voiced).enumerate() {
            match (f, v) {
                (Some(x), true) if x.is_finite() && *x > 0.0 => {}
                (None, false) => {}
                _ => {
                    return Err(PitchError::InvalidContour(format!(
                        "frame {i}: f0 {f:?} inconsistent with voiced={v}"
                    )))
                }
            }
        }
        Ok(Self { hop, f0 })
    }
}

impl Serialize for PitchContour {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawContour {
            hop: self.hop,
            f0: self.f0.clone(),
            voiced: self.voiced(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PitchContour {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawContour::deserialize(d)?;
        PitchContour::from_parts(raw.hop, raw.f0, &raw.voiced).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hysteresis_examples() {
        let v = hysteresis_voicing(&[0.9, 0.6, 0.4, 0.7, 0.9], 0.8, 0.5);
        assert_eq!(v, vec![true, true, false, false, true]);
        assert!(hysteresis_voicing(&[0.9; 5], 0.8, 0.5).iter().all(|&v| v));
        let conf = [0.1, 0.5, 0.49, 0.5, 0.7, 0.2];
        let plain: Vec<bool> = conf.iter().map(|&c| c >= 0.5).collect();
        assert_eq!(hysteresis_voicing(&conf, 0.5, 0.5), plain);
    }

    #[test]
    fn contour_wire_format() {
        let c = PitchContour::new(vec![Some(200.0), None, Some(210.5)]);
        let json = c.to_json();
        assert_eq!(json, r#"{"hop":0.01,"f0":[200.0,null,210.5],"voiced":[true,false,true]}"#);
        assert_eq!(PitchContour::from_json(&json).unwrap(), c);
        assert!(PitchContour::from_json(r#"{"hop":0.01,"f0":[200.0],"voiced":[false]}"#).is_err());
        assert!(PitchContour::from_json(r#"{"hop":0.01,"f0":[null],"voiced":[true]}"#).is_err());
        assert!(PitchContour::from_json(r#"{"hop":0.01,"f0":[null, null],"voiced":[false]}"#).is_err());
    }

    proptest! {
        #[test]
        fn hysteresis_is_pure(conf in prop::collection::vec(0.0f64..1.0, 0..64),
                              a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (low, high) = if a <= b { (a, b) } else { (b, a) };
            let first = hysteresis_voicing(&conf, high, low);
            prop_assert_eq!(&first, &hysteresis_voicing(&conf.clone(), high, low));
            // Voiced frames never sit below the low threshold.
            for (c, v) in conf.iter().zip(&first) {
                if *v { prop_assert!(*c >= low); }
            }
        }
    }
}
