use super::Waveform;

const KAISER_BETA: f64 = 8.0;
const TAPS_PER_PHASE: usize = 32;
/// Passband edge as a fraction of the lower Nyquist frequency.
const CUTOFF: f64 = 0.95;
const MAX_TABLE_PHASES: u64 = 4096;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct Kernel {
    /// Normalized cutoff in cycles per input sample, times two.
    scale: f64,
    half_width: f64,
    reach: usize,
    norm_i0: f64,
}

impl Kernel {
    fn new(source_rate: u32, target_rate: u32) -> Self {
        let scale = CUTOFF * (target_rate as f64 / source_rate as f64).min(1.0);
        let half_width = (TAPS_PER_PHASE / 2) as f64 / scale;
        Self {
            scale,
            half_width,
            reach: half_width.ceil() as usize,
            norm_i0: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, d: f64) -> f64 {
        let r = d / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.norm_i0;
        let x = self.scale * d;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        sinc * window
    }

    /// Taps for input samples `base - reach + 1 ..= base + reach` at fractional offset `frac`,
    /// normalized to unit DC gain.
    fn taps(&self, frac: f64) -> Vec<f64> {
        let reach = self.reach as isize;
        let mut taps: Vec<f64> = (-reach + 1..=reach)
            .map(|k| self.eval(frac - k as f64))
            .collect();
        let sum: f64 = taps.iter().sum();
        if sum.abs() > 1e-12 {
            taps.iter_mut().for_each(|t| *t /= sum);
        }
        taps
    }
}

/// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
pub fn resample(w: &Waveform, target_rate: u32) -> Waveform {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == w.sample_rate {
        return w.clone();
    }
    let src = w.sample_rate as u64;
    let dst = target_rate as u64;
    let out_len = ((w.len() as u64 * dst) as f64 / src as f64).round() as usize;
    let g = gcd(src, dst);
    let up = dst / g;
    let down = src / g;
    let kernel = Kernel::new(w.sample_rate, target_rate);
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES)
        .then(|| (0..up).map(|p| kernel.taps(p as f64 / up as f64)).collect());

    let reach = kernel.reach as isize;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let pos = n * down;
        let base = (pos / up) as isize;
        let phase = pos % up;
        let owned;
        let taps = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = kernel.taps(phase as f64 / up as f64);
                &owned
            }
        };
        let acc: f64 = taps
            .iter()
            .enumerate()
            .map(|(i, &h)| h * w.at(base - reach + 1 + i as isize) as f64)
            .sum();
        out.push(acc as f32);
    }
    Waveform::new(out, target_rate)
}
