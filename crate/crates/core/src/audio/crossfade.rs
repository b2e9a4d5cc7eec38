use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use super::{seconds_to_samples, AudioError, Waveform};

/// Fade-out / fade-in gains for sample `t` of an `n`-sample overlap.
///
/// The angle sweeps 0 → π/2 at sample centers, so an odd-length overlap has its
/// middle sample at exactly π/4.
pub fn equal_power_gains(t: usize, n: usize) -> (f64, f64) {
    let theta = FRAC_PI_2 * (t as f64 + 0.5) / n as f64;
    (theta.cos(), theta.sin())
}

/// Joins `a` and `b`, overlapping the tail of `a` with the head of `b`.
pub fn equal_power_crossfade(
    a: &Waveform,
    b: &Waveform,
    overlap_seconds: f64,
) -> Result<Waveform, AudioError> {
    if a.sample_rate != b.sample_rate {
        return Err(AudioError::RateMismatch(a.sample_rate, b.sample_rate));
    }
    if !(overlap_seconds >= 0.0) {
        return Err(AudioError::InvalidParameter(format!(
            "overlap {overlap_seconds} s"
        )));
    }
    let n = seconds_to_samples(overlap_seconds, a.sample_rate);
    let shorter = a.len().min(b.len());
    if n > shorter {
        return Err(AudioError::OverlapTooLong {
            overlap: n,
            len: shorter,
        });
    }
    let head = a.len() - n;
    let mut out = Vec::with_capacity(a.len() + b.len() - n);
    out.extend_from_slice(&a.samples[..head]);
    for t in 0..n {
        let (fade_out, fade_in) = equal_power_gains(t, n);
        out.push((fade_out * a.samples[head + t] as f64 + fade_in * b.samples[t] as f64) as f32);
    }
    out.extend_from_slice(&b.samples[n..]);
    Ok(Waveform::new(out, a.sample_rate))
}

/// One source of a splice: `samples[nominal]` lands on the output timeline, and
/// samples outside `nominal` are available as crossfade padding.
#[derive(Clone, Debug)]
pub struct SplicePiece<'a> {
    pub samples: &'a [f32],
    pub nominal: Range<usize>,
}

/// Concatenates the nominal spans of `pieces`, joining neighbours with an
/// equal-power crossfade centered on each splice point.
///
/// Returns the output and the output-sample range of every crossfade zone. A join
/// shortens its crossfade when padding or nominal material is scarce; with no
/// padding at all it degenerates to a butt splice.
pub fn splice(
    pieces: &[SplicePiece<'_>],
    overlap_samples: usize,
    sample_rate: u32,
) -> (Waveform, Vec<Range<usize>>) {
    let total: usize = pieces.iter().map(|p| p.nominal.len()).sum();
    let mut out = Vec::with_capacity(total);
    for p in pieces {
        out.extend_from_slice(&p.samples[p.nominal.clone()]);
    }
    let mut zones = Vec::new();
    let mut pos = 0;
    for pair in pieces.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        pos += a.nominal.len();
        let half = (overlap_samples / 2)
            .min(a.samples.len() - a.nominal.end)
            .min(b.nominal.start)
            .min(a.nominal.len() / 2)
            .min(b.nominal.len() / 2);
        if half == 0 {
            continue;
        }
        let n = 2 * half;
        for t in 0..n {
            let (fade_out, fade_in) = equal_power_gains(t, n);
            let x = a.samples[a.nominal.end - half + t] as f64;
            let y = b.samples[b.nominal.start - half + t] as f64;
            out[pos - half + t] = (fade_out * x + fade_in * y) as f32;
        }
        zones.push(pos - half..pos + half);
    }
    (Waveform::new(out, sample_rate), zones)
}
