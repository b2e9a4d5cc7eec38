use std::ops::Range;

use super::{hysteresis_voicing, viterbi_decode, PitchConfig, PitchContour, PitchError};
use crate::audio::{hop_samples, seconds_to_samples, FrameGrid, Waveform, HOP_SECONDS, PIPELINE_RATE};

const MIN_REGION_SECONDS: f64 = 0.040;

/// Categorical distributions over pitch candidates, one row per 10 ms frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PitchPosteriorgram {
    pub scores: Vec<Vec<f64>>,
    pub candidate_frequencies: Vec<f64>,
    pub confidence: Vec<f64>,
    pub hop: f64,
}

impl PitchPosteriorgram {
    pub fn new(
        scores: Vec<Vec<f64>>,
        candidate_frequencies: Vec<f64>,
        confidence: Vec<f64>,
    ) -> Result<Self, PitchError> {
        let bad = |m: String| Err(PitchError::InvalidContour(m));
        if candidate_frequencies.is_empty()
            || candidate_frequencies.windows(2).any(|w| !(w[0] < w[1]))
            || candidate_frequencies[0] <= 0.0
        {
            return bad("candidate frequencies must be positive and strictly increasing".into());
        }
        if confidence.len() != scores.len() {
            return bad("one confidence value per frame is required".into());
        }
        for (t, row) in scores.iter().enumerate() {
            if row.len() != candidate_frequencies.len() {
                return bad(format!("frame {t} has {} scores", row.len()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return bad(format!("frame {t} is not a distribution (sum {sum})"));
            }
        }
        Ok(Self {
            scores,
            candidate_frequencies,
            confidence,
            hop: HOP_SECONDS,
        })
    }

    pub fn frames(&self) -> usize {
        self.scores.len()
    }

    /// Lowest-index argmax of each row.
    pub fn argmax(&self) -> Vec<usize> {
        self.scores
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Log-spaced candidates covering `[f0_min, f0_max]` at roughly `candidate_cents`.
pub(crate) fn candidate_frequencies(config: &PitchConfig) -> Vec<f64> {
    let octaves = (config.f0_max / config.f0_min).log2();
    let count = (1200.0 * octaves / config.candidate_cents).ceil() as usize + 1;
    (0..count)
        .map(|k| {
            if k + 1 == count {
                config.f0_max
            } else {
                config.f0_min * (octaves * k as f64 / (count - 1) as f64).exp2()
            }
        })
        .collect()
}

/// Normalized cross-correlation per integer lag for each frame of a region.
struct LagAnalysis {
    min_lag: usize,
    max_lag: usize,
    /// `nccf[frame][lag - min_lag]`
    nccf: Vec<Vec<f64>>,
    sample_rate: f64,
}

impl LagAnalysis {
    fn run(w: &Waveform, region: &Range<usize>, config: &PitchConfig) -> Result<Self, PitchError> {
        if w.sample_rate != PIPELINE_RATE {
            return Err(PitchError::SampleRate {
                expected: PIPELINE_RATE,
                actual: w.sample_rate,
            });
        }
        if region.start > region.end || region.end > w.len() {
            return Err(PitchError::BadRegion {
                start: region.start,
                end: region.end,
                len: w.len(),
            });
        }
        let fs = w.sample_rate as f64;
        if (region.len() as f64) < MIN_REGION_SECONDS * fs - 0.5 {
            return Err(PitchError::RegionTooShort {
                seconds: region.len() as f64 / fs,
                min: MIN_REGION_SECONDS,
            });
        }
        let grid = FrameGrid::for_region(region, w.sample_rate);
        let hop = hop_samples(w.sample_rate);
        let window = seconds_to_samples(config.window_seconds, w.sample_rate).max(2);
        let min_lag = ((fs / config.f0_max).floor() as usize).max(1);
        let max_lag = (fs / config.f0_min).ceil() as usize;

        // Local copy with zero extension on both sides.
        let margin = window / 2 + max_lag + 1;
        let base = region.start as isize - margin as isize;
        let span = grid.frame_count * hop + 2 * margin + window;
        let x: Vec<f64> = (0..span as isize).map(|i| w.at(base + i) as f64).collect();
        let mut energy = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            energy[i + 1] = energy[i] + v * v;
        }

        let nccf = (0..grid.frame_count)
            .map(|frame| {
                let center = (frame * hop + hop / 2 + margin) as isize;
                (min_lag..=max_lag)
                    .map(|lag| {
                        let s = (center - (window / 2) as isize - (lag / 2) as isize) as usize;
                        let e1 = energy[s + window] - energy[s];
                        let e2 = energy[s + lag + window] - energy[s + lag];
                        if e1 < 1e-12 || e2 < 1e-12 {
                            return 0.0;
                        }
                        let cross: f64 = x[s..s + window]
                            .iter()
                            .zip(&x[s + lag..s + lag + window])
                            .map(|(a, b)| a * b)
                            .sum();
                        cross / (e1 * e2).sqrt()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            min_lag,
            max_lag,
            nccf,
            sample_rate: fs,
        })
    }

    fn at(&self, frame: usize, lag: f64) -> f64 {
        let lag = lag.clamp(self.min_lag as f64, self.max_lag as f64);
        let lo = lag.floor() as usize;
        let hi = (lo + 1).min(self.max_lag);
        let frac = lag - lo as f64;
        let row = &self.nccf[frame];
        row[lo - self.min_lag] * (1.0 - frac) + row[hi - self.min_lag] * frac
    }

    fn posteriorgram(&self, candidates: &[f64], config: &PitchConfig) -> PitchPosteriorgram {
        let mut scores = Vec::with_capacity(self.nccf.len());
        let mut confidence = Vec::with_capacity(self.nccf.len());
        for frame in 0..self.nccf.len() {
            let raw: Vec<f64> = candidates
                .iter()
                .map(|&f| self.at(frame, self.sample_rate / f))
                .collect();
            let peak = raw.iter().cloned().fold(0.0, f64::max);
            confidence.push(peak.clamp(0.0, 1.0));
            let mut row: Vec<f64> = raw
                .iter()
                .zip(candidates)
                .map(|(r, &f)| {
                    (r - config.octave_cost * (config.f0_max / f).log2())
                        .max(0.0)
                        .powf(config.posterior_sharpness)
                })
                .collect();
            let total: f64 = row.iter().sum();
            let uniform = 1.0 / candidates.len() as f64;
            if total > 0.0 {
                // Weakly periodic frames lean on the uniform row, so Viterbi
                // carries the neighbouring pitch through them.
                let c = confidence[frame];
                row.iter_mut().for_each(|p| *p = c * *p / total + (1.0 - c) * uniform);
            } else {
                row.fill(uniform);
            }
            scores.push(row);
        }
        PitchPosteriorgram {
            scores,
            candidate_frequencies: candidates.to_vec(),
            confidence,
            hop: HOP_SECONDS,
        }
    }

    /// Sub-sample period estimate near `lag` via parabolic interpolation.
    fn refine(&self, frame: usize, lag: f64) -> f64 {
        let lo = ((lag * 0.985).floor() as usize).max(self.min_lag);
        let hi = ((lag * 1.015).ceil() as usize).min(self.max_lag);
        let row = &self.nccf[frame];
        let mut best = lo;
        for l in lo..=hi {
            if row[l - self.min_lag] > row[best - self.min_lag] {
                best = l;
            }
        }
        if best <= self.min_lag || best >= self.max_lag {
            return best as f64;
        }
        let y0 = row[best - 1 - self.min_lag];
        let y1 = row[best - self.min_lag];
        let y2 = row[best + 1 - self.min_lag];
        let denom = y0 - 2.0 * y1 + y2;
        if denom >= 0.0 {
            return best as f64;
        }
        best as f64 + (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
    }
}

/// Per-frame candidate posteriors for `region` (frames anchored at `region.start`).
pub fn compute_posteriors(
    w: &Waveform,
    region: Range<usize>,
    config: &PitchConfig,
) -> Result<PitchPosteriorgram, PitchError> {
    let analysis = LagAnalysis::run(w, &region, config)?;
    Ok(analysis.posteriorgram(&candidate_frequencies(config), config))
}

/// Full tracker: posteriors, Viterbi path, sub-sample refinement and hysteresis voicing.
pub fn track_pitch(
    w: &Waveform,
    region: Range<usize>,
    config: &PitchConfig,
) -> Result<PitchContour, PitchError> {
    let analysis = LagAnalysis::run(w, &region, config)?;
    let candidates = candidate_frequencies(config);
    let gram = analysis.posteriorgram(&candidates, config);
    let path = viterbi_decode(&gram, config.transition_sigma_octaves);
    let voiced = hysteresis_voicing(&gram.confidence, config.voicing_high, config.voicing_low);
    let f0 = path
        .iter()
        .zip(&voiced)
        .enumerate()
        .map(|(frame, (&k, &v))| {
            v.then(|| {
                let lag = analysis.refine(frame, analysis.sample_rate / candidates[k]);
                (analysis.sample_rate / lag).clamp(config.f0_min, config.f0_max)
            })
        })
        .collect();
    Ok(PitchContour::new(f0))
}
