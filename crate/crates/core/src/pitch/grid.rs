use serde::{Deserialize, Serialize};

use super::PitchError;

pub const GRID_BINS: usize = 128;
const MIN_VOICED_FRAMES: usize = 100;

/// 128 bins spaced evenly in log2 frequency over ±4 standard deviations of the
/// speaker's log-pitch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PitchGrid {
    /// Mean of log2(f0).
    pub mu: f64,
    /// Population standard deviation of log2(f0).
    pub sigma: f64,
}

impl PitchGrid {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, PitchError> {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(PitchError::DegenerateGrid(sigma));
        }
        Ok(Self { mu, sigma })
    }

    fn low(&self) -> f64 {
        self.mu - 4.0 * self.sigma
    }

    fn step(&self) -> f64 {
        8.0 * self.sigma / (GRID_BINS - 1) as f64
    }

    pub fn mean_hz(&self) -> f64 {
        self.mu.exp2()
    }

    pub fn bin_log2(&self, index: usize) -> f64 {
        let i = index.min(GRID_BINS - 1) as f64;
        self.low() + i * 8.0 * self.sigma / (GRID_BINS - 1) as f64
    }

    pub fn bin_frequency(&self, index: usize) -> f64 {
        self.bin_log2(index).exp2()
    }

    pub fn bins(&self) -> Vec<f64> {
        (0..GRID_BINS).map(|i| self.bin_frequency(i)).collect()
    }

    pub fn min_hz(&self) -> f64 {
        self.bin_frequency(0)
    }

    pub fn max_hz(&self) -> f64 {
        self.bin_frequency(GRID_BINS - 1)
    }

    /// Nearest bin in log2 space, clamped to the grid; halves round up.
    pub fn quantize(&self, f0: f64) -> usize {
        self.quantize_log2(f0.log2())
    }

    pub fn quantize_log2(&self, log2_f0: f64) -> usize {
        let position = (log2_f0 - self.low()) / self.step();
        (position.clamp(0.0, (GRID_BINS - 1) as f64) + 0.5).floor() as usize
    }

    pub fn dequantize(&self, index: usize) -> f64 {
        self.bin_frequency(index)
    }

    pub fn snap(&self, f0: f64) -> f64 {
        self.dequantize(self.quantize(f0))
    }

    /// Largest round-trip error for in-range inputs, in cents.
    pub fn max_quantization_cents(&self) -> f64 {
        1200.0 * self.step() / 2.0
    }
}

/// Fits a grid to voiced f0 values (Hz) from a speaker's recordings.
pub fn build_grid(voiced_f0: &[f64]) -> Result<PitchGrid, PitchError> {
    if voiced_f0.len() < MIN_VOICED_FRAMES {
        return Err(PitchError::InsufficientData {
            needed: MIN_VOICED_FRAMES,
            got: voiced_f0.len(),
        });
    }
    let logs: Vec<f64> = voiced_f0.iter().map(|f| f.log2()).collect();
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if sigma < 1e-9 {
        return Err(PitchError::DegenerateGrid(sigma));
    }
    PitchGrid::new(mu, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> PitchGrid {
        PitchGrid::new(200f64.log2(), 0.25).unwrap()
    }

    #[test]
    fn endpoints() {
        let g = reference();
        assert!((g.bin_frequency(0) - 100.0).abs() < 1e-9);
        assert!((g.bin_frequency(127) - 400.0).abs() < 1e-9);
        assert_eq!(g.quantize(400.0), 127);
        assert!((g.dequantize(127) - 400.0).abs() < 1e-9);
        let bins = g.bins();
        assert!(bins.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn center_rounds_half_up_and_clamps() {
        let g = reference();
        assert_eq!(g.quantize(200.0), 64);
        assert_eq!(g.quantize(g.bin_frequency(0)), 0);
        assert_eq!(g.quantize(20.0), 0);
        assert_eq!(g.quantize(5000.0), 127);
    }

    #[test]
    fn fitting() {
        let mut values = vec![7.5f64.exp2(); 60];
        values.extend(vec![7.7f64.exp2(); 60]);
        let g = build_grid(&values).unwrap();
        assert!((g.mu - 7.6).abs() < 1e-12);
        assert!((g.sigma - 0.1).abs() < 1e-12);
        assert!(matches!(build_grid(&vec![180.0; 150]), Err(PitchError::DegenerateGrid(_))));
        assert!(matches!(build_grid(&[100.0; 10]), Err(PitchError::InsufficientData { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_within_half_bin(mu in 6.5f64..8.5, sigma in 0.05f64..0.5, z in -4.0f64..4.0) {
            let g = PitchGrid::new(mu, sigma).unwrap();
            let f = (mu + z * sigma).exp2();
            let back = g.dequantize(g.quantize(f));
            let cents = 1200.0 * (back / f).log2().abs();
            prop_assert!(cents <= g.max_quantization_cents() + 1e-6);
            prop_assert_eq!(g.quantize(back), g.quantize(f));
        }
    }
}
