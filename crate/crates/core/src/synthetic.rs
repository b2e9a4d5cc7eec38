//! Deterministic synthetic speech for tests, demos and the evaluation corpus.
//!
//! Voiced phonemes are a band-limited glottal pulse train shaped by parallel
//! two-pole formant resonators; voiceless consonants are quieter differenced
//! noise and `sp` is digital silence. Every rendered utterance comes with an exact alignment and
//! its ground-truth f0 per 10 ms frame.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::alignment::{base_symbol, AlignedTranscript, PhonemeInterval, WordInterval, SILENCE};
use crate::audio::{Waveform, HOP_SECONDS, PIPELINE_RATE};
use crate::prosody::is_unvoiced_symbol;

const FS: f64 = PIPELINE_RATE as f64;
/// Frication level relative to the voiced source, well below the vowels.
const NOISE_LEVEL: f64 = 0.02;

pub fn white_noise(seconds: f64, rms: f64, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, rms).expect("finite rms");
    let n = (seconds * FS).round() as usize;
    Waveform::new(
        (0..n).map(|_| normal.sample(&mut rng) as f32).collect(),
        PIPELINE_RATE,
    )
}

fn formants(symbol: &str) -> [(f64, f64); 3] {
    match base_symbol(symbol) {
        "AA" => [(730.0, 90.0), (1090.0, 110.0), (2440.0, 170.0)],
        "AE" => [(660.0, 90.0), (1720.0, 110.0), (2410.0, 170.0)],
        "AH" => [(520.0, 90.0), (1190.0, 110.0), (2390.0, 170.0)],
        "AO" | "OW" => [(570.0, 90.0), (840.0, 110.0), (2410.0, 170.0)],
        "EH" | "EY" => [(530.0, 90.0), (1840.0, 110.0), (2480.0, 170.0)],
        "IH" => [(390.0, 80.0), (1990.0, 110.0), (2550.0, 170.0)],
        "IY" | "Y" => [(270.0, 70.0), (2290.0, 110.0), (3010.0, 170.0)],
        "UH" | "UW" | "W" => [(300.0, 70.0), (870.0, 100.0), (2240.0, 170.0)],
        "ER" | "R" => [(490.0, 90.0), (1350.0, 110.0), (1690.0, 170.0)],
        "AW" | "AY" | "OY" => [(680.0, 90.0), (1300.0, 110.0), (2450.0, 170.0)],
        "M" | "N" | "NG" => [(250.0, 60.0), (1100.0, 200.0), (2300.0, 250.0)],
        "L" => [(360.0, 80.0), (1300.0, 150.0), (2700.0, 200.0)],
        _ => [(300.0, 100.0), (1500.0, 200.0), (2500.0, 250.0)],
    }
}

fn base_duration(symbol: &str) -> f64 {
    let base = base_symbol(symbol);
    match base {
        "sp" => 0.10,
        "AW" | "AY" | "OY" | "EY" | "OW" => 0.15,
        "AA" | "AE" | "AH" | "AO" | "EH" | "ER" | "IH" | "IY" | "UH" | "UW" => 0.11,
        "P" | "T" | "K" | "B" | "D" | "G" => 0.06,
        "F" | "TH" | "S" | "SH" | "HH" | "CH" | "JH" | "V" | "DH" | "Z" | "ZH" => 0.09,
        _ => 0.07,
    }
}

fn vowel_like(symbol: &str) -> bool {
    matches!(
        base_symbol(symbol),
        "AA" | "AE" | "AH" | "AO" | "AW" | "AY" | "EH" | "ER" | "EY" | "IH" | "IY" | "OW" | "OY"
            | "UH" | "UW"
    )
}

#[derive(Clone, Copy, Default)]
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn tune(&mut self, freq: f64, bandwidth: f64) {
        let r = (-PI * bandwidth / FS).exp();
        let theta = 2.0 * PI * freq / FS;
        self.a1 = 2.0 * r * theta.cos();
        self.a2 = -r * r;
        // Unit gain at the resonance peak.
        self.gain = (1.0 - r) * (1.0 - 2.0 * r * (2.0 * theta).cos() + r * r).sqrt();
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Glottal source plus formant filter with continuous phase across calls.
struct Voice {
    phase: f64,
    filters: [Resonator; 3],
}

impl Voice {
    fn new() -> Self {
        Self {
            phase: 0.0,
            filters: [Resonator::default(); 3],
        }
    }

    fn set_formants(&mut self, symbol: &str) {
        for (f, (freq, bw)) in self.filters.iter_mut().zip(formants(symbol)) {
            f.tune(freq, bw);
        }
    }

    fn next(&mut self, f0: f64) -> f64 {
        self.phase = (self.phase + 2.0 * PI * f0 / FS) % (2.0 * PI);
        let harmonics = ((7000.0 / f0).floor() as usize).max(1);
        let pulse: f64 = (1..=harmonics)
            .map(|h| (h as f64 * self.phase).cos())
            .sum::<f64>()
            / (harmonics as f64).sqrt();
        // Parallel branches, each with unit peak gain, falling 6 dB per formant.
        self.filters
            .iter_mut()
            .zip([1.0, 0.5, 0.25])
            .map(|(f, w)| w * f.process(pulse))
            .sum()
    }
}

/// Constant-pitch vowel (`AA` formants), scaled to a 0.5 peak.
pub fn synthetic_vowel(f0: f64, seconds: f64) -> Waveform {
    let mut voice = Voice::new();
    voice.set_formants("AA");
    let n = (seconds * FS).round() as usize;
    let raw: Vec<f64> = (0..n).map(|_| voice.next(f0)).collect();
    normalize(raw, 0.5)
}

fn normalize(raw: Vec<f64>, peak: f64) -> Waveform {
    let max = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { peak / max } else { 0.0 };
    Waveform::new(raw.into_iter().map(|v| (v * scale) as f32).collect(), PIPELINE_RATE)
}

/// Description of a synthetic sentence.
#[derive(Clone, Debug)]
pub struct UtteranceSpec {
    /// Words with their ARPAbet phonemes.
    pub words: Vec<(String, Vec<String>)>,
    /// Duration multiplier applied to every phoneme (larger is slower).
    pub tempo: f64,
    /// f0 at the start and end of the sentence; interpolated in log2 space.
    pub f0_start: f64,
    pub f0_end: f64,
    /// Rise-fall accent on each word, in semitones.
    pub accent_semitones: f64,
    /// Silence at both ends and between words (before tempo scaling).
    pub edge_silence: f64,
    pub pause: f64,
    pub noise_seed: u64,
}

impl UtteranceSpec {
    pub fn new(text: &str, lexicon: &dyn Fn(&str) -> Vec<String>) -> Self {
        Self {
            words: text
                .split_whitespace()
                .map(|w| (w.to_string(), lexicon(w)))
                .collect(),
            tempo: 1.0,
            f0_start: 140.0,
            f0_end: 110.0,
            accent_semitones: 0.0,
            edge_silence: 0.1,
            pause: 0.05,
            noise_seed: 0,
        }
    }
}

/// Rendered audio with its alignment and per-frame ground-truth pitch.
#[derive(Clone, Debug)]
pub struct SyntheticUtterance {
    pub waveform: Waveform,
    pub transcript: AlignedTranscript,
    pub f0_truth: Vec<Option<f64>>,
}

fn frames_of(seconds: f64) -> usize {
    ((seconds / HOP_SECONDS).round() as usize).max(1)
}

/// Renders a sentence. All phoneme durations land on the 10 ms grid.
pub fn render_utterance(spec: &UtteranceSpec) -> SyntheticUtterance {
    let mut phonemes: Vec<PhonemeInterval> = Vec::new();
    let mut words = Vec::new();
    let mut word_of_phoneme: Vec<Option<usize>> = Vec::new();
    let mut frames = 0usize;
    let mut push = |symbol: &str, seconds: f64, word: Option<usize>, phonemes: &mut Vec<PhonemeInterval>| {
        let n = frames_of(seconds);
        let start = frames as f64 * HOP_SECONDS;
        frames += n;
        phonemes.push(PhonemeInterval::new(symbol, start, frames as f64 * HOP_SECONDS));
        word_of_phoneme.push(word);
    };
    if spec.edge_silence > 0.0 {
        push(SILENCE, spec.edge_silence * spec.tempo, None, &mut phonemes);
    }
    for (k, (text, phones)) in spec.words.iter().enumerate() {
        if k > 0 && spec.pause > 0.0 {
            push(SILENCE, spec.pause * spec.tempo, None, &mut phonemes);
        }
        let first = phonemes.len();
        for p in phones {
            push(p, base_duration(p) * spec.tempo, Some(k), &mut phonemes);
        }
        words.push(WordInterval {
            text: crate::alignment::normalize_word(text),
            phonemes: first..phonemes.len(),
        });
    }
    if spec.edge_silence > 0.0 {
        push(SILENCE, spec.edge_silence * spec.tempo, None, &mut phonemes);
    }
    let total = frames as f64 * HOP_SECONDS;
    let n = (total * FS).round() as usize;

    // Smooth log-f0 trajectory: declination plus one raised-cosine accent per word.
    let f0_at = |t: f64| -> f64 {
        let u = if total > 0.0 { t / total } else { 0.0 };
        let mut l = spec.f0_start.log2() + (spec.f0_end.log2() - spec.f0_start.log2()) * u;
        if spec.accent_semitones != 0.0 {
            for w in &words {
                let (s, e) = (phonemes[w.phonemes.start].start, phonemes[w.phonemes.end - 1].end);
                if t >= s && t < e {
                    let x = (t - s) / (e - s);
                    l += spec.accent_semitones / 12.0 * 0.5 * (1.0 - (2.0 * PI * x).cos());
                }
            }
        }
        l.exp2()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut voice = Voice::new();
    let mut raw = vec![0.0f64; n];
    let mut prev_noise = 0.0;
    for p in &phonemes {
        let (s, e) = (
            (p.start * FS).round() as usize,
            ((p.end * FS).round() as usize).min(n),
        );
        if p.is_silence() {
            continue;
        }
        if is_unvoiced_symbol(&p.symbol) {
            for v in &mut raw[s..e] {
                let z = normal.sample(&mut rng);
                *v = NOISE_LEVEL * (z - prev_noise);
                prev_noise = z;
            }
        } else {
            voice.set_formants(&p.symbol);
            let level = if vowel_like(&p.symbol) { 1.0 } else { 0.5 };
            for (i, v) in raw[s..e].iter_mut().enumerate() {
                *v = level * voice.next(f0_at((s + i) as f64 / FS));
            }
        }
    }
    let waveform = normalize(raw, 0.5);

    let mut f0_truth = vec![None; frames];
    for p in &phonemes {
        if p.is_silence() || is_unvoiced_symbol(&p.symbol) {
            continue;
        }
        let (a, b) = (
            (p.start / HOP_SECONDS).round() as usize,
            (p.end / HOP_SECONDS).round() as usize,
        );
        for (f, slot) in f0_truth.iter_mut().enumerate().take(b).skip(a) {
            *slot = Some(f0_at((f as f64 + 0.5) * HOP_SECONDS));
        }
    }
    let transcript =
        AlignedTranscript::new(waveform.duration_seconds(), words, phonemes).expect("valid synthetic alignment");
    SyntheticUtterance {
        waveform,
        transcript,
        f0_truth,
    }
}

/// A small fixed lexicon covering the words used by the bundled corpus builder.
pub fn demo_lexicon(word: &str) -> Vec<String> {
    let phones: &[&str] = match word {
        "the" => &["DH", "AH0"],
        "a" => &["AH0"],
        "quick" => &["K", "W", "IH1", "K"],
        "brown" => &["B", "R", "AW1", "N"],
        "fox" => &["F", "AA1", "K", "S"],
        "jumped" => &["JH", "AH1", "M", "P", "T"],
        "over" => &["OW1", "V", "ER0"],
        "lazy" => &["L", "EY1", "Z", "IY0"],
        "dog" => &["D", "AO1", "G"],
        "we" => &["W", "IY1"],
        "saw" => &["S", "AO1"],
        "near" => &["N", "IH1", "R"],
        "river" => &["R", "IH1", "V", "ER0"],
        "old" => &["OW1", "L", "D"],
        "man" => &["M", "AE1", "N"],
        "walked" => &["W", "AO1", "K", "T"],
        "home" => &["HH", "OW1", "M"],
        "early" => &["ER1", "L", "IY0"],
        "morning" => &["M", "AO1", "R", "N", "IH0", "NG"],
        "green" => &["G", "R", "IY1", "N"],
        "hill" => &["HH", "IH1", "L"],
        "under" => &["AH1", "N", "D", "ER0"],
        "bright" => &["B", "R", "AY1", "T"],
        "blue" => &["B", "L", "UW1"],
        "sky" => &["S", "K", "AY1"],
        "every" => &["EH1", "V", "R", "IY0"],
        "day" => &["D", "EY1"],
        "she" => &["SH", "IY1"],
        "he" => &["HH", "IY1"],
        "said" => &["S", "EH1", "D"],
        "little" => &["L", "IH1", "T", "AH0", "L"],
        "red" => &["R", "EH1", "D"],
        "boat" => &["B", "OW1", "T"],
        "on" => &["AA1", "N"],
        "lake" => &["L", "EY1", "K"],
        "in" => &["IH0", "N"],
        "summer" => &["S", "AH1", "M", "ER0"],
        "we'll" => &["W", "IY1", "L"],
        "go" => &["G", "OW1"],
        "there" => &["DH", "EH1", "R"],
        "again" => &["AH0", "G", "EH1", "N"],
        "soon" => &["S", "UW1", "N"],
        "and" => &["AE1", "N", "D"],
        "all" => &["AO1", "L"],
        "was" => &["W", "AA1", "Z"],
        "well" => &["W", "EH1", "L"],
        _ => &["AH0", "N"],
    };
    phones.iter().map(|p| p.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utterance_alignment_is_consistent() {
        let spec = UtteranceSpec::new("the quick brown fox", &demo_lexicon);
        let u = render_utterance(&spec);
        assert_eq!(u.transcript.words.len(), 4);
        assert_eq!(u.f0_truth.len(), (u.waveform.len() as f64 / 160.0).round() as usize);
        assert!((u.transcript.audio_duration - u.waveform.duration_seconds()).abs() < 1e-9);
        assert!(u.waveform.samples.iter().all(|s| s.abs() <= 0.5 + 1e-6));
        let again = render_utterance(&spec);
        assert_eq!(again.waveform, u.waveform);
    }

    #[test]
    fn tempo_scales_durations() {
        let mut spec = UtteranceSpec::new("the lazy dog", &demo_lexicon);
        let slow = {
            spec.tempo = 1.5;
            render_utterance(&spec)
        };
        spec.tempo = 1.0;
        let base = render_utterance(&spec);
        assert!(slow.waveform.len() > base.waveform.len() * 14 / 10);
    }
}
