use super::PsolaError;
use crate::audio::HOP_SECONDS;
use crate::pitch::{PitchContour, F0_MAX, F0_MIN};

pub const RATE_MIN: f64 = 0.25;
pub const RATE_MAX: f64 = 4.0;

/// Time-stretch ratio per original 10 ms frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMap {
    pub ratios: Vec<f64>,
}

/// Target f0 per original 10 ms frame; `None` keeps the source pitch.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMap {
    pub targets: Vec<Option<f64>>,
}

/// Frames per phoneme from cumulative rounding of the phoneme boundaries.
fn frames_per_phoneme(durations: &[f64]) -> Vec<usize> {
    let mut t = 0.0;
    let mut prev = 0usize;
    durations
        .iter()
        .map(|d| {
            t += d;
            let b = (t / HOP_SECONDS).round() as usize;
            let k = b - prev;
            prev = b;
            k
        })
        .collect()
}

fn check_lengths(original: &[f64], target: &[f64]) -> Result<(), PsolaError> {
    if original.len() != target.len() {
        return Err(PsolaError::LengthMismatch {
            what: "target durations",
            expected: original.len(),
            got: target.len(),
        });
    }
    if let Some(d) = original.iter().chain(target).find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(PsolaError::InvalidMap(format!("duration {d} is not positive")));
    }
    Ok(())
}

/// Each phoneme's `target / original` ratio (clamped) repeated over the frames it
/// occupies in the original.
pub fn build_rate_map(original: &[f64], target: &[f64]) -> Result<RateMap, PsolaError> {
    check_lengths(original, target)?;
    let mut ratios = Vec::new();
    for ((o, t), k) in original.iter().zip(target).zip(frames_per_phoneme(original)) {
        let r = (t / o).clamp(RATE_MIN, RATE_MAX);
        ratios.extend(std::iter::repeat_n(r, k));
    }
    Ok(RateMap { ratios })
}

impl RateMap {
    pub fn constant(rate: f64, frames: usize) -> Self {
        Self {
            ratios: vec![rate.clamp(RATE_MIN, RATE_MAX); frames],
        }
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// Pads with the last ratio or truncates so the map covers `frames` frames.
    pub fn fit_to(mut self, frames: usize) -> Self {
        let last = self.ratios.last().copied().unwrap_or(1.0);
        self.ratios.resize(frames, last);
        self
    }

    /// Σ 10 ms · ratio.
    pub fn mapped_seconds(&self) -> f64 {
        self.ratios.iter().map(|r| r * HOP_SECONDS).sum()
    }
}

impl ShiftMap {
    pub fn constant(f0: f64, frames: usize) -> Self {
        Self {
            targets: vec![Some(f0.clamp(F0_MIN, F0_MAX)); frames],
        }
    }

    pub fn unchanged(frames: usize) -> Self {
        Self {
            targets: vec![None; frames],
        }
    }

    /// The measured contour itself: synthesis then keeps the source pitch.
    pub fn from_contour(contour: &PitchContour) -> Self {
        Self {
            targets: contour.f0.iter().map(|f| f.map(|f| f.clamp(F0_MIN, F0_MAX))).collect(),
        }
    }

    /// Resamples a target contour (on the target timeline) onto the original
    /// frame grid, mapping time linearly within each phoneme.
    pub fn from_targets(
        original: &[f64],
        target: &[f64],
        target_pitch: &PitchContour,
        frames: usize,
    ) -> Result<Self, PsolaError> {
        check_lengths(original, target)?;
        let mut orig_start = 0.0;
        let mut tgt_start = 0.0;
        let mut bounds = Vec::with_capacity(original.len());
        for (o, t) in original.iter().zip(target) {
            bounds.push((orig_start, *o, tgt_start, *t));
            orig_start += o;
            tgt_start += t;
        }
        let mut j = 0;
        let targets = (0..frames)
            .map(|f| {
                let time = (f as f64 + 0.5) * HOP_SECONDS;
                while j + 1 < bounds.len() && time >= bounds[j + 1].0 {
                    j += 1;
                }
                let (os, od, ts, td) = bounds[j];
                let u = ((time - os) / od).clamp(0.0, 1.0);
                let mapped = ts + u * td;
                let frame = ((mapped / HOP_SECONDS).floor() as usize).min(target_pitch.len().saturating_sub(1));
                target_pitch.f0.get(frame).copied().flatten().map(|f| f.clamp(F0_MIN, F0_MAX))
            })
            .collect();
        Ok(Self { targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_phoneme_ratio() {
        let m = build_rate_map(&[0.10], &[0.15]).unwrap();
        assert_eq!(m.len(), 10);
        assert!(m.ratios.iter().all(|r| (r - 1.5).abs() < 1e-12));
        let m = build_rate_map(&[0.1, 0.2], &[0.1, 0.2]).unwrap();
        assert_eq!(m.ratios, vec![1.0; 30]);
        let m = build_rate_map(&[0.10], &[0.01]).unwrap();
        assert_eq!(m.ratios, vec![0.25; 10]);
        assert!(matches!(build_rate_map(&[0.1], &[0.1, 0.2]), Err(PsolaError::LengthMismatch { .. })));
        assert!(build_rate_map(&[0.0], &[0.1]).is_err());
    }

    #[test]
    fn fit_and_constant() {
        let m = build_rate_map(&[0.03], &[0.06]).unwrap().fit_to(5);
        assert_eq!(m.ratios, vec![2.0; 5]);
        assert_eq!(RateMap::constant(9.0, 2).ratios, vec![4.0, 4.0]);
    }

    #[test]
    fn shift_from_targets_maps_phoneme_time() {
        // Original 2 phonemes of 0.05 s; targets stretch the first to 0.10 s.
        let pitch = PitchContour::new((0..15).map(|i| Some(100.0 + i as f64)).collect());
        let s = ShiftMap::from_targets(&[0.05, 0.05], &[0.10, 0.05], &pitch, 10).unwrap();
        assert_eq!(s.targets[0], Some(101.0));
        assert_eq!(s.targets[4], Some(109.0));
        assert_eq!(s.targets[5], Some(110.0));
        assert_eq!(s.targets[9], Some(114.0));
    }

    proptest! {
        #[test]
        fn mapped_length_matches_targets(pairs in prop::collection::vec((0.02f64..0.3, 0.25f64..4.0), 1..12)) {
            let original: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let target: Vec<f64> = pairs.iter().map(|p| p.0 * p.1).collect();
            let m = build_rate_map(&original, &target).unwrap();
            let want: f64 = target.iter().sum();
            // Each phoneme's frame count is off by at most one frame after rounding.
            let slack: f64 = target.iter().zip(&original).map(|(t, o)| HOP_SECONDS * t / o).sum();
            prop_assert!((m.mapped_seconds() - want).abs() <= slack + 1e-9);
            prop_assert!(m.ratios.iter().all(|r| (RATE_MIN..=RATE_MAX).contains(r)));
        }
    }
}
