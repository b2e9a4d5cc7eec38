use std::collections::BTreeMap;

use super::{PipelineConfig, PipelineError, Recordings};
use crate::audio::HOP_SECONDS;
use crate::pitch::{build_grid, track_pitch, PitchContour, PitchError, PitchGrid};
use crate::prosody::{fit_duration_stats, DurationStats};

/// Per-session analysis shared by every edit: one pitch contour per recording,
/// the speaker's pitch grid and per-phoneme duration statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerModel {
    pub contours: BTreeMap<String, PitchContour>,
    pub grid: PitchGrid,
    pub stats: DurationStats,
}

impl SpeakerModel {
    pub fn analyze(recordings: &Recordings, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let mut contours = BTreeMap::new();
        for (id, r) in recordings {
            let w = &r.waveform;
            let contour = match track_pitch(w, 0..w.len(), &config.pitch) {
                Ok(c) => c,
                Err(PitchError::RegionTooShort { .. }) => {
                    PitchContour::unvoiced(crate::audio::FrameGrid::for_region(&(0..w.len()), w.sample_rate).frame_count)
                }
                Err(e) => return Err(PipelineError::stage("pitch analysis", format!("{id}: {e}"))),
            };
            contours.insert(id.clone(), contour);
        }
        let voiced: Vec<f64> = contours.values().flat_map(|c| c.voiced_values()).collect();
        let grid = match build_grid(&voiced) {
            Ok(g) => g,
            Err(PitchError::InsufficientData { .. } | PitchError::DegenerateGrid(_)) => {
                let mu = if voiced.is_empty() {
                    150f64.log2()
                } else {
                    voiced.iter().map(|f| f.log2()).sum::<f64>() / voiced.len() as f64
                };
                PitchGrid::new(mu, config.fallback_grid_sigma).map_err(|e| PipelineError::stage("pitch grid", e))?
            }
            Err(e) => return Err(PipelineError::stage("pitch grid", e)),
        };
        let stats = fit_duration_stats(recordings.values().map(|r| &r.transcript))
            .map_err(|e| PipelineError::stage("duration statistics", e))?;
        Ok(Self { contours, grid, stats })
    }

    pub fn contour(&self, recording: &str) -> Result<&PitchContour, PipelineError> {
        self.contours
            .get(recording)
            .ok_or_else(|| PipelineError::UnknownRecording(recording.to_string()))
    }
}

/// f0 of a whole-recording contour resampled to `round((end - start) / hop)`
/// frames starting at `start` seconds, each frame taking the value at its centre.
pub fn contour_for_span(contour: &PitchContour, start: f64, end: f64) -> Vec<Option<f64>> {
    let frames = ((end - start) / HOP_SECONDS).round().max(0.0) as usize;
    (0..frames)
        .map(|i| sample_contour(contour, start + (i as f64 + 0.5) * HOP_SECONDS))
        .collect()
}

/// Value of the frame containing `seconds`, clamped to the contour.
pub fn sample_contour(contour: &PitchContour, seconds: f64) -> Option<f64> {
    if contour.is_empty() {
        return None;
    }
    let f = ((seconds / HOP_SECONDS).floor().max(0.0) as usize).min(contour.len() - 1);
    contour.f0[f]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_sampling() {
        let c = PitchContour::new((0..10).map(|i| (i % 3 != 0).then_some(100.0 + i as f64)).collect());
        assert_eq!(contour_for_span(&c, 0.02, 0.05), vec![Some(102.0), None, Some(104.0)]);
        assert_eq!(contour_for_span(&c, 0.08, 0.12), vec![Some(108.0), None, None, None]);
        assert!(contour_for_span(&PitchContour::unvoiced(0), 0.0, 0.02).iter().all(Option::is_none));
    }
}
