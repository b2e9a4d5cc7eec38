use std::f64::consts::PI;
use std::ops::Range;

use super::{check_region, EpochSequence, PsolaError, RateMap, ShiftMap};
use crate::audio::{hop_samples, FrameGrid, Waveform};

/// Piecewise-linear map from region-relative source samples to output samples;
/// frame `f` is stretched by `rate[f]`.
#[derive(Clone, Debug)]
pub struct TimeWarp {
    hop: usize,
    len: usize,
    rates: Vec<f64>,
    /// Output position of each frame start.
    starts: Vec<f64>,
}

impl TimeWarp {
    pub fn new(rate: &RateMap, region_len: usize, hop: usize) -> Self {
        let mut starts = Vec::with_capacity(rate.len() + 1);
        let mut acc = 0.0;
        for (f, r) in rate.ratios.iter().enumerate() {
            starts.push(acc);
            let span = (region_len.min((f + 1) * hop)).saturating_sub(f * hop);
            acc += r * span as f64;
        }
        starts.push(acc);
        Self {
            hop,
            len: region_len,
            rates: rate.ratios.clone(),
            starts,
        }
    }

    pub fn map(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, self.len as f64);
        let f = ((u / self.hop as f64).floor() as usize).min(self.rates.len() - 1);
        self.starts[f] + self.rates[f] * (u - (f * self.hop) as f64)
    }

    pub fn total(&self) -> f64 {
        *self.starts.last().expect("at least one entry")
    }

    /// Output length in samples.
    pub fn output_len(&self) -> usize {
        self.total().round() as usize
    }
}

/// Raised-cosine weight at offset `t` from a grain centre with half-lengths
/// `left`/`right`; `None` on a side means flat to the buffer edge.
fn window(t: f64, left: Option<f64>, right: Option<f64>) -> f64 {
    let half = if t < 0.0 { left } else { right };
    match half {
        None => 1.0,
        Some(h) if t.abs() >= h => 0.0,
        Some(h) => 0.5 * (1.0 + (PI * t / h).cos()),
    }
}

/// Re-times and re-pitches `region` of `w`.
///
/// Synthesis marks start at the warped first epoch and advance by the selected
/// grain's analysis spacing scaled by `source f0 / target f0`. Each mark takes
/// the analysis epoch nearest in warped time, never moving backwards. Grains use
/// asymmetric Hann halves no longer than either the analysis or synthesis
/// spacing; the first and last grains stay flat out to the output edges. Where
/// grains overlap to more than unit weight the sum is normalized away.
pub fn synthesize(
    w: &Waveform,
    region: Range<usize>,
    epochs: &EpochSequence,
    shift: &ShiftMap,
    rate: &RateMap,
) -> Result<Waveform, PsolaError> {
    check_region(w.len(), &region)?;
    if epochs.is_empty() {
        return Err(PsolaError::EmptyEpochs);
    }
    let grid = FrameGrid::for_region(&region, w.sample_rate);
    for (what, got) in [("shift map frames", shift.len()), ("rate map frames", rate.len())] {
        if got != grid.frame_count {
            return Err(PsolaError::LengthMismatch {
                what,
                expected: grid.frame_count,
                got,
            });
        }
    }
    if let Some(r) = rate.ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(PsolaError::InvalidMap(format!("rate {r}")));
    }
    if epochs.marks.iter().any(|m| !region.contains(m)) {
        return Err(PsolaError::InvalidMap("epoch outside the region".into()));
    }
    let fs = w.sample_rate as f64;
    let warp = TimeWarp::new(rate, region.len(), hop_samples(w.sample_rate));
    let out_len = warp.output_len();
    let mapped: Vec<f64> = epochs
        .marks
        .iter()
        .map(|&m| warp.map((m - region.start) as f64))
        .collect();

    // Synthesis marks and the analysis epoch each one reuses.
    let mut marks: Vec<(f64, usize)> = Vec::new();
    let mut s = mapped[0];
    let mut k = 0usize;
    while s < out_len as f64 || marks.is_empty() {
        let mut best = mapped.partition_point(|&m| m < s).min(mapped.len() - 1);
        if best > 0 && (s - mapped[best - 1]) <= (mapped[best] - s) {
            best -= 1;
        }
        k = k.max(best);
        marks.push((s, k));
        let spacing = epochs.right_spacing(k);
        let frame = grid.frame_of(epochs.marks[k]).min(grid.frame_count - 1);
        let step = match (epochs.voiced[k], shift.targets[frame]) {
            (true, Some(target)) => spacing * (fs / epochs.periods[k]) / target,
            _ => spacing,
        };
        s += step.max(1.0);
    }

    let mut acc = vec![0.0f64; out_len];
    let mut weight = vec![0.0f64; out_len];
    let n = marks.len();
    for (j, &(s, k)) in marks.iter().enumerate() {
        let centre = s.round();
        let left = (j > 0).then(|| (s - marks[j - 1].0).min(epochs.left_spacing(k)));
        let right = (j + 1 < n).then(|| (marks[j + 1].0 - s).min(epochs.right_spacing(k)));
        let lo = match left {
            Some(h) => (centre - h).ceil().max(0.0) as usize,
            None => 0,
        };
        let hi = match right {
            Some(h) => ((centre + h).floor() as usize + 1).min(out_len),
            None => out_len,
        };
        let source = epochs.marks[k] as isize - centre as isize;
        for i in lo..hi {
            let g = window(i as f64 - centre, left, right);
            if g > 0.0 {
                acc[i] += g * w.at(source + i as isize) as f64;
                weight[i] += g;
            }
        }
    }
    let samples = acc
        .iter()
        .zip(&weight)
        .map(|(a, g)| (a / g.max(1.0)) as f32)
        .collect();
    Ok(Waveform::new(samples, w.sample_rate))
}
