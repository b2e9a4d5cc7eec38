use std::ops::Range;

use super::{check_region, PsolaError};
use crate::audio::{hop_samples, FrameGrid, Waveform};
use crate::pitch::PitchContour;

/// Pitch marks as absolute sample indices, with the local analysis period at
/// each mark (10 ms for unvoiced marks).
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSequence {
    pub marks: Vec<usize>,
    pub voiced: Vec<bool>,
    pub periods: Vec<f64>,
}

impl EpochSequence {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Distance to the previous mark, or the local period for the first one.
    pub fn left_spacing(&self, k: usize) -> f64 {
        if k == 0 {
            self.periods[0]
        } else {
            (self.marks[k] - self.marks[k - 1]) as f64
        }
    }

    /// Distance to the next mark, or the local period for the last one.
    pub fn right_spacing(&self, k: usize) -> f64 {
        if k + 1 >= self.marks.len() {
            self.periods[k]
        } else {
            (self.marks[k + 1] - self.marks[k]) as f64
        }
    }
}

/// Places marks through `region` following `contour` (one value per 10 ms frame
/// from `region.start`).
///
/// Voiced marks sit on the largest sample within ±25% of a period around the
/// predicted position; ties go to the sample nearest the prediction, then the
/// earliest. The first mark of a voiced run is searched over one period from the
/// predicted position. Unvoiced frames get marks every 10 ms.
pub fn detect_epochs(w: &Waveform, region: Range<usize>, contour: &PitchContour) -> Result<EpochSequence, PsolaError> {
    check_region(w.len(), &region)?;
    let grid = FrameGrid::for_region(&region, w.sample_rate);
    if contour.len() != grid.frame_count {
        return Err(PsolaError::LengthMismatch {
            what: "pitch contour frames",
            expected: grid.frame_count,
            got: contour.len(),
        });
    }
    let fs = w.sample_rate as f64;
    let hop = hop_samples(w.sample_rate);
    let period_at = |sample: usize| contour.f0[grid.frame_of(sample).min(grid.frame_count - 1)].map(|f| fs / f);

    let mut seq = EpochSequence {
        marks: Vec::new(),
        voiced: Vec::new(),
        periods: Vec::new(),
    };
    let mut predicted = region.start as f64;
    loop {
        let at = predicted.round() as usize;
        if at >= region.end {
            break;
        }
        let previous = seq.marks.last().copied();
        match period_at(at) {
            None => {
                seq.marks.push(at);
                seq.voiced.push(false);
                seq.periods.push(hop as f64);
                predicted = (at + hop) as f64;
            }
            Some(period) => {
                let continuing = seq.voiced.last().copied().unwrap_or(false);
                let (lo, hi) = if continuing {
                    (predicted - 0.25 * period, predicted + 0.25 * period)
                } else {
                    (predicted, predicted + period - 1.0)
                };
                let floor = previous.map_or(region.start, |p| p + 1);
                let lo = (lo.ceil().max(0.0) as usize).max(floor);
                let hi = (hi.floor() as usize).min(region.end - 1);
                if lo > hi {
                    break;
                }
                let mut best = lo;
                for i in lo + 1..=hi {
                    let (v, b) = (w.samples[i], w.samples[best]);
                    let closer = (i as f64 - predicted).abs() < (best as f64 - predicted).abs();
                    if v > b || (v == b && closer) {
                        best = i;
                    }
                }
                let local = period_at(best).unwrap_or(period);
                seq.marks.push(best);
                seq.voiced.push(true);
                seq.periods.push(local);
                predicted = best as f64 + local;
            }
        }
    }
    if seq.is_empty() {
        return Err(PsolaError::EmptyEpochs);
    }
    Ok(seq)
}
