use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{frame_count, is_unvoiced_symbol, DurationStats, ProsodyConstraints, ProsodyError, ProsodyTargets};
use crate::audio::HOP_SECONDS;
use crate::pitch::{PitchContour, PitchGrid, F0_MAX, F0_MIN, GRID_BINS};

pub const DURATION_MIN: f64 = 0.01;
pub const DURATION_MAX: f64 = 0.5;
pub const TEMPO_MIN: f64 = 0.5;
pub const TEMPO_MAX: f64 = 2.0;
const ACCENT_SMOOTHING_FRAMES: usize = 5;

const DURATION_STREAM: u64 = 0;
const PITCH_STREAM: u64 = 1;

/// Noise scales; both zero is the deterministic mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    /// Lognormal duration jitter (natural-log sigma).
    pub duration_jitter: f64,
    /// Per-phoneme pitch accent sigma in octaves.
    pub accent_sigma: f64,
}

impl GenerationParams {
    pub const DETERMINISTIC: Self = Self {
        duration_jitter: 0.0,
        accent_sigma: 0.0,
    };

    /// Noise used for candidates after the first.
    pub const CANDIDATE: Self = Self {
        duration_jitter: 0.1,
        accent_sigma: 0.15,
    };
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self::DETERMINISTIC
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Ratio of observed context durations to their corpus means, clamped.
/// No context gives 1.
pub fn tempo_factor(constraints: &ProsodyConstraints, stats: &DurationStats) -> Result<f64, ProsodyError> {
    let mut observed = 0.0;
    let mut expected = 0.0;
    for side in [&constraints.context_before, &constraints.context_after] {
        for (symbol, d) in side.phonemes.iter().zip(&side.durations) {
            observed += d;
            expected += stats.mean(symbol)?;
        }
    }
    if expected <= 0.0 {
        return Ok(1.0);
    }
    Ok((observed / expected).clamp(TEMPO_MIN, TEMPO_MAX))
}

pub fn generate_durations(
    region: &[String],
    constraints: &ProsodyConstraints,
    stats: &DurationStats,
    jitter_sigma: f64,
    seed: u64,
) -> Result<Vec<f64>, ProsodyError> {
    if region.is_empty() {
        return Err(ProsodyError::EmptyRegion);
    }
    for (&i, &d) in &constraints.pinned_durations {
        if i >= region.len() || !(d > 0.0 && d <= DURATION_MAX) {
            return Err(ProsodyError::InvalidConstraint(format!(
                "pinned duration {d} s at phoneme {i} is not usable for a {}-phoneme region",
                region.len()
            )));
        }
    }
    let all_pinned = (0..region.len()).all(|i| constraints.pinned_durations.contains_key(&i));
    let r = if all_pinned { 1.0 } else { tempo_factor(constraints, stats)? };
    let mut rng = rng(seed, DURATION_STREAM);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    region
        .iter()
        .enumerate()
        .map(|(i, symbol)| {
            // One draw per phoneme keeps the stream aligned whatever is pinned.
            let z: f64 = normal.sample(&mut rng);
            if let Some(&d) = constraints.pinned_durations.get(&i) {
                return Ok(d);
            }
            let mut d = r * stats.mean(symbol)?;
            if jitter_sigma > 0.0 {
                d *= (jitter_sigma * z).exp();
            }
            Ok(d.clamp(DURATION_MIN, DURATION_MAX))
        })
        .collect()
}

/// Frame boundaries of each phoneme from cumulative durations; phoneme `j` owns
/// frames `b[j]..b[j + 1]`.
pub(crate) fn frame_bounds(durations: &[f64]) -> Vec<usize> {
    let mut bounds = Vec::with_capacity(durations.len() + 1);
    let mut t = 0.0;
    bounds.push(0);
    for d in durations {
        t += d;
        bounds.push((t / HOP_SECONDS).round() as usize);
    }
    bounds
}

/// Nearest grid bin that also lies inside the analysis range.
pub(crate) fn snap_in_range(grid: &PitchGrid, log2_f0: f64) -> f64 {
    let mut index = grid.quantize_log2(log2_f0);
    while index + 1 < GRID_BINS && grid.bin_frequency(index) < F0_MIN {
        index += 1;
    }
    while index > 0 && grid.bin_frequency(index) > F0_MAX {
        index -= 1;
    }
    grid.bin_frequency(index)
}

fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

pub fn generate_pitch(
    region: &[String],
    durations: &[f64],
    constraints: &ProsodyConstraints,
    grid: &PitchGrid,
    accent_sigma: f64,
    seed: u64,
) -> Result<PitchContour, ProsodyError> {
    if region.len() != durations.len() {
        return Err(ProsodyError::InvalidConstraint(format!(
            "{} phonemes but {} durations",
            region.len(),
            durations.len()
        )));
    }
    let frames = frame_count(durations);
    constraints.check_frames(frames)?;
    let bounds = frame_bounds(durations);

    let before = constraints.context_before.f0.iter().rev().find_map(|f| *f);
    let after = constraints.context_after.f0.iter().find_map(|f| *f);
    let start = before.map_or(grid.mu, f64::log2);
    let end = after.map_or(grid.mu, f64::log2);

    let mut rng = rng(seed, PITCH_STREAM);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let offsets: Vec<f64> = (0..region.len())
        .map(|_| accent_sigma * normal.sample(&mut rng))
        .collect();
    let mut accent = vec![0.0; frames];
    let mut voiced = vec![false; frames];
    for (j, symbol) in region.iter().enumerate() {
        let span = bounds[j].min(frames)..bounds[j + 1].min(frames);
        for f in span {
            accent[f] = offsets[j];
            voiced[f] = !is_unvoiced_symbol(symbol);
        }
    }
    let accent = if accent_sigma > 0.0 {
        moving_average(&accent, ACCENT_SMOOTHING_FRAMES)
    } else {
        accent
    };

    let mut f0: Vec<Option<f64>> = (0..frames)
        .map(|i| {
            voiced[i].then(|| {
                let u = (i + 1) as f64 / (frames + 1) as f64;
                snap_in_range(grid, start + (end - start) * u + accent[i])
            })
        })
        .collect();
    for (&frame, &pin) in &constraints.pinned_pitch {
        f0[frame] = pin.map(|hz| snap_in_range(grid, hz.log2()));
    }
    Ok(PitchContour::new(f0))
}

/// Durations then pitch, with pins validated against the grid.
pub fn generate_prosody(
    region: &[String],
    constraints: &ProsodyConstraints,
    stats: &DurationStats,
    grid: &PitchGrid,
    params: GenerationParams,
    seed: u64,
) -> Result<ProsodyTargets, ProsodyError> {
    constraints.validate(region.len(), grid)?;
    let durations = generate_durations(region, constraints, stats, params.duration_jitter, seed)?;
    let pitch = generate_pitch(region, &durations, constraints, grid, params.accent_sigma, seed)?;
    Ok(ProsodyTargets { durations, pitch })
}

/// Candidate 0 is deterministic; candidate `i` adds noise seeded with `seed + i`.
pub fn sample_candidates(
    region: &[String],
    constraints: &ProsodyConstraints,
    stats: &DurationStats,
    grid: &PitchGrid,
    n: usize,
    seed: u64,
) -> Result<Vec<ProsodyTargets>, ProsodyError> {
    (0..n.max(1))
        .map(|i| {
            let params = if i == 0 {
                GenerationParams::DETERMINISTIC
            } else {
                GenerationParams::CANDIDATE
            };
            generate_prosody(region, constraints, stats, grid, params, seed.wrapping_add(i as u64))
        })
        .collect()
}
