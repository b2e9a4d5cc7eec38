use crate::alignment::PhonemeInterval;
use crate::audio::HOP_SECONDS;
use crate::pipeline::sample_contour;
use crate::pitch::PitchContour;

/// How far either side of a join to look for a voiced frame.
const JOIN_SEARCH_FRAMES: usize = 25;

pub fn cents(a: f64, b: f64) -> f64 {
    1200.0 * (a / b).log2()
}

/// Pairs each reference frame inside `reference_span` with the result frame at
/// the corresponding time: phoneme by phoneme when both sides have the same
/// phoneme count, otherwise linearly over the whole span.
pub fn map_frames(
    reference: &PitchContour,
    reference_span: &[PhonemeInterval],
    result: &PitchContour,
    result_span: &[PhonemeInterval],
) -> Vec<(Option<f64>, Option<f64>)> {
    let (Some(r0), Some(o0)) = (reference_span.first(), result_span.first()) else {
        return Vec::new();
    };
    let r1 = reference_span[reference_span.len() - 1].end;
    let o1 = result_span[result_span.len() - 1].end;
    let per_phoneme = reference_span.len() == result_span.len();
    let first = (r0.start / HOP_SECONDS).round() as usize;
    let last = (r1 / HOP_SECONDS).round() as usize;
    let mut j = 0;
    (first..last)
        .map(|f| {
            let t = (f as f64 + 0.5) * HOP_SECONDS;
            let mapped = if per_phoneme {
                while j + 1 < reference_span.len() && t >= reference_span[j + 1].start {
                    j += 1;
                }
                let (r, o) = (&reference_span[j], &result_span[j]);
                o.start + ((t - r.start) / r.duration()).clamp(0.0, 1.0) * o.duration()
            } else {
                o0.start + ((t - r0.start) / (r1 - r0.start)).clamp(0.0, 1.0) * (o1 - o0.start)
            };
            (reference.f0.get(f).copied().flatten(), sample_contour(result, mapped))
        })
        .collect()
}

/// RMS pitch difference in cents over frames voiced on both sides.
pub fn f0_rmse_cents(pairs: &[(Option<f64>, Option<f64>)]) -> Option<f64> {
    let diffs: Vec<f64> = pairs
        .iter()
        .filter_map(|p| match *p {
            (Some(a), Some(b)) => Some(cents(b, a)),
            _ => None,
        })
        .collect();
    if diffs.is_empty() {
        return None;
    }
    Some((diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt())
}

/// F1 of the result's voicing against the reference's. Both fully unvoiced
/// counts as perfect agreement.
pub fn voicing_f1(reference: &[bool], result: &[bool]) -> Option<f64> {
    if reference.len() != result.len() || reference.is_empty() {
        return None;
    }
    let tp = reference.iter().zip(result).filter(|(a, b)| **a && **b).count() as f64;
    let predicted = result.iter().filter(|b| **b).count() as f64;
    let actual = reference.iter().filter(|a| **a).count() as f64;
    if predicted == 0.0 && actual == 0.0 {
        return Some(1.0);
    }
    if tp == 0.0 {
        return Some(0.0);
    }
    let precision = tp / predicted;
    let recall = tp / actual;
    Some(2.0 * precision * recall / (precision + recall))
}

/// Mean absolute pitch jump across each join, between the nearest voiced frames
/// on either side. Frames within `guard` frames of a join are mixed by the
/// crossfade and skipped. Joins without voiced frames nearby are skipped.
pub fn boundary_jump_cents(contour: &PitchContour, joins: &[f64], guard: usize) -> Option<f64> {
    let n = contour.len();
    let jumps: Vec<f64> = joins
        .iter()
        .filter_map(|&t| {
            let split = ((t / HOP_SECONDS).round().max(0.0) as usize).min(n);
            let end_before = split.saturating_sub(guard);
            let start_after = (split + guard).min(n);
            let before = contour.f0[end_before.saturating_sub(JOIN_SEARCH_FRAMES)..end_before]
                .iter()
                .rev()
                .find_map(|f| *f)?;
            let after = contour.f0[start_after..(start_after + JOIN_SEARCH_FRAMES).min(n)]
                .iter()
                .find_map(|f| *f)?;
            Some(cents(after, before).abs())
        })
        .collect();
    if jumps.is_empty() {
        return None;
    }
    Some(jumps.iter().sum::<f64>() / jumps.len() as f64)
}

/// Frames on each side of a join touched by a crossfade of `crossfade_seconds`
/// through an analysis window of `window_seconds`.
pub fn join_guard_frames(crossfade_seconds: f64, window_seconds: f64) -> usize {
    (0.5 * (crossfade_seconds + window_seconds) / HOP_SECONDS - 1e-9).ceil().max(0.0) as usize
}

/// Mean absolute per-phoneme duration difference; needs equal phoneme counts.
pub fn duration_mae(reference: &[PhonemeInterval], result: &[PhonemeInterval]) -> Option<f64> {
    if reference.len() != result.len() || reference.is_empty() {
        return None;
    }
    let total: f64 = reference
        .iter()
        .zip(result)
        .map(|(a, b)| (a.duration() - b.duration()).abs())
        .sum();
    Some(total / reference.len() as f64)
}
