use std::ops::Range;

use rustfft::{num_complex::Complex, FftPlanner};

use super::{seconds_to_samples, AudioError, Waveform};

pub const GAIN_MIN: f64 = 0.25;
pub const GAIN_MAX: f64 = 4.0;

const MIN_REGION_SECONDS: f64 = 0.010;

fn a_response(f: f64) -> f64 {
    let f2 = f * f;
    let num = 12194.0f64.powi(2) * f2 * f2;
    let den = (f2 + 20.6f64.powi(2))
        * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
        * (f2 + 12194.0f64.powi(2));
    num / den
}

fn a_gain(f: f64) -> f64 {
    a_response(f) / a_response(1000.0)
}

/// IEC 61672 A-weighting in dB, normalized to exactly 0 dB at 1 kHz.
pub fn a_weighting_db(f: f64) -> f64 {
    20.0 * a_gain(f).log10()
}

/// Linear RMS of `region` after A-weighting, applied on the FFT grid of the region.
pub fn a_weighted_rms(w: &Waveform, region: Range<usize>) -> Result<f64, AudioError> {
    w.check_region(&region)?;
    let min = seconds_to_samples(MIN_REGION_SECONDS, w.sample_rate);
    if region.len() < min || region.is_empty() {
        return Err(AudioError::RegionTooShort {
            samples: region.len(),
            min,
        });
    }
    let n = region.len();
    let mut buf: Vec<Complex<f64>> = w.samples[region]
        .iter()
        .map(|&s| Complex::new(s as f64, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin_hz = w.sample_rate as f64 / n as f64;
    let energy: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let f = k.min(n - k) as f64 * bin_hz;
            x.norm_sqr() * a_gain(f).powi(2)
        })
        .sum();
    Ok((energy / (n as f64 * n as f64)).sqrt())
}

/// Scales `segment` so its A-weighted RMS equals `reference_rms`, with the gain
/// clamped to [`GAIN_MIN`, `GAIN_MAX`].
pub fn match_loudness(segment: &Waveform, reference_rms: f64) -> Result<(Waveform, f64), AudioError> {
    if !(reference_rms > 0.0) || !reference_rms.is_finite() {
        return Err(AudioError::InvalidParameter(format!(
            "reference rms {reference_rms}"
        )));
    }
    let rms = a_weighted_rms(segment, 0..segment.len())?;
    if !(rms > 1e-12) {
        return Err(AudioError::CannotMatch);
    }
    let gain = (reference_rms / rms).clamp(GAIN_MIN, GAIN_MAX);
    if gain == 1.0 {
        return Ok((segment.clone(), gain));
    }
    Ok((segment.scaled(gain), gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, amp: f64, n: usize) -> Waveform {
        Waveform::new(
            (0..n)
                .map(|i| (amp * (2.0 * PI * freq * i as f64 / 16_000.0).sin()) as f32)
                .collect(),
            16_000,
        )
    }

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn anchor_at_one_kilohertz() {
        assert_eq!(a_weighting_db(1000.0), 0.0);
        let w = sine(1000.0, 1.0, 16_000);
        let rms = a_weighted_rms(&w, 0..w.len()).unwrap();
        assert!((rms - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn published_curve_points() {
        for (f, table_db) in [(100.0, -19.1), (50.0, -30.2), (500.0, -3.2), (2000.0, 1.2), (4000.0, 1.0)] {
            assert!((a_weighting_db(f) - table_db).abs() < 0.5, "{f} Hz: {}", a_weighting_db(f));
        }
        let w = sine(100.0, 1.0, 16_000);
        let rms = a_weighted_rms(&w, 0..w.len()).unwrap();
        let measured = db(rms / std::f64::consts::FRAC_1_SQRT_2);
        assert!((measured - -19.1).abs() < 0.5, "{measured}");
    }

    #[test]
    fn zero_region_and_short_region() {
        let w = Waveform::silence(800, 16_000);
        assert_eq!(a_weighted_rms(&w, 0..800).unwrap(), 0.0);
        assert!(matches!(
            a_weighted_rms(&w, 0..100),
            Err(AudioError::RegionTooShort { .. })
        ));
        assert!(a_weighted_rms(&w, 0..900).is_err());
    }

    #[test]
    fn loudness_matching_gains() {
        let seg = sine(1000.0, 0.1 * 2f64.sqrt(), 16_000);
        let seg_rms = a_weighted_rms(&seg, 0..seg.len()).unwrap();
        let (_, gain) = match_loudness(&seg, 2.0 * seg_rms).unwrap();
        assert!((gain - 2.0).abs() < 1e-12);

        let (same, gain) = match_loudness(&seg, seg_rms).unwrap();
        assert_eq!(gain, 1.0);
        assert_eq!(same, seg);

        let (_, gain) = match_loudness(&seg, 20.0 * seg_rms).unwrap();
        assert_eq!(gain, GAIN_MAX);
        let (_, gain) = match_loudness(&seg, seg_rms / 20.0).unwrap();
        assert_eq!(gain, GAIN_MIN);

        assert!(matches!(
            match_loudness(&Waveform::silence(1600, 16_000), 0.1),
            Err(AudioError::CannotMatch)
        ));
    }

    #[test]
    fn matched_rms_within_tenth_of_a_db_and_idempotent() {
        let seg = sine(440.0, 0.2, 8_000);
        let (out, _) = match_loudness(&seg, 0.05).unwrap();
        let rms = a_weighted_rms(&out, 0..out.len()).unwrap();
        assert!(db(rms / 0.05).abs() < 0.1);
        let (_, second) = match_loudness(&out, 0.05).unwrap();
        assert!((second - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn homogeneous_of_degree_one(g in 0.05f64..4.0, f in 80.0f64..6000.0) {
            let x = sine(f, 0.2, 1600);
            let base = a_weighted_rms(&x, 0..x.len()).unwrap();
            let scaled = a_weighted_rms(&x.scaled(g), 0..x.len()).unwrap();
            prop_assert!((scaled - g * base).abs() <= 1e-6 * (1.0 + g * base));
        }
    }
}
