use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::pipeline::{Recording, Recordings};
use crate::synthetic::{demo_lexicon, render_utterance, UtteranceSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub wav: PathBuf,
    pub alignment: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub recordings: Vec<ManifestEntry>,
}

/// Reads a corpus manifest; relative paths are taken from the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Recordings, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Manifest(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| EvalError::Manifest(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Recordings::new();
    for entry in manifest.recordings {
        let recording = Recording::load(base.join(&entry.wav), base.join(&entry.alignment))?;
        if out.insert(entry.id.clone(), recording).is_some() {
            return Err(EvalError::Manifest(format!("duplicate recording id {:?}", entry.id)));
        }
    }
    if out.len() < 2 {
        return Err(EvalError::Manifest("need at least two recordings".into()));
    }
    Ok(out)
}

const WORDS: [&str; 36] = [
    "the", "quick", "brown", "fox", "jumped", "over", "lazy", "dog", "we", "saw", "near", "river", "old", "man",
    "walked", "home", "early", "morning", "green", "hill", "under", "bright", "blue", "sky", "every", "day", "she",
    "said", "little", "red", "boat", "on", "lake", "in", "summer", "soon",
];

/// Pairs of synthetic sentences sharing one phrase, where the donor of each pair
/// is transposed and slowed relative to its destination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub pairs: usize,
    pub donor_semitones: f64,
    pub donor_tempo: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            pairs: 12,
            donor_semitones: 4.0,
            donor_tempo: 1.4,
            seed: 0,
        }
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty word list")).collect()
}

/// Recordings `dest-NN` and `donor-NN`: the shared phrase has 2 to 4 words with
/// at least two words of context on each side in the destination.
pub fn synthetic_corpus(spec: &CorpusSpec) -> Recordings {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Recordings::new();
    for pair in 0..spec.pairs {
        let phrase_len = rng.random_range(2..=4);
        let phrase = words(&mut rng, phrase_len);
        let (before, after) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let dest_text: Vec<&str> = words(&mut rng, before)
            .into_iter()
            .chain(phrase.iter().copied())
            .chain(words(&mut rng, after))
            .collect();
        let (before, after) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let donor_text: Vec<&str> = words(&mut rng, before)
            .into_iter()
            .chain(phrase.iter().copied())
            .chain(words(&mut rng, after))
            .collect();

        let mut dest = UtteranceSpec::new(&dest_text.join(" "), &demo_lexicon);
        dest.tempo = rng.random_range(0.85..1.15);
        dest.f0_start = rng.random_range(120.0..160.0);
        dest.f0_end = dest.f0_start * 0.8;
        dest.noise_seed = spec.seed.wrapping_mul(1000).wrapping_add(2 * pair as u64);
        let mut donor = UtteranceSpec::new(&donor_text.join(" "), &demo_lexicon);
        let transpose = (spec.donor_semitones / 12.0).exp2();
        donor.tempo = dest.tempo * spec.donor_tempo;
        donor.f0_start = dest.f0_start * transpose;
        donor.f0_end = dest.f0_end * transpose;
        donor.noise_seed = dest.noise_seed + 1;

        for (id, s) in [(format!("dest-{pair:02}"), dest), (format!("donor-{pair:02}"), donor)] {
            let u = render_utterance(&s);
            out.insert(
                id,
                Recording {
                    waveform: u.waveform,
                    transcript: u.transcript,
                },
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_paired() {
        let spec = CorpusSpec {
            pairs: 3,
            ..Default::default()
        };
        let a = synthetic_corpus(&spec);
        assert_eq!(a, synthetic_corpus(&spec));
        assert_eq!(a.len(), 6);
        let cases = super::super::build_cases(&a);
        for pair in 0..3 {
            let (d, n) = (format!("dest-{pair:02}"), format!("donor-{pair:02}"));
            assert!(cases.iter().any(|c| c.destination == d && c.donor == n));
        }
    }

    #[test]
    fn manifest_loading() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synthetic_corpus(&CorpusSpec {
            pairs: 1,
            ..Default::default()
        });
        let mut entries = Vec::new();
        for (id, r) in &corpus {
            crate::audio::save_wav(&r.waveform, dir.path().join(format!("{id}.wav"))).unwrap();
            std::fs::write(dir.path().join(format!("{id}.json")), r.transcript.to_json()).unwrap();
            entries.push(ManifestEntry {
                id: id.clone(),
                wav: format!("{id}.wav").into(),
                alignment: format!("{id}.json").into(),
            });
        }
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, serde_json::to_string(&Manifest { recordings: entries }).unwrap()).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded["dest-00"].transcript, corpus["dest-00"].transcript);
        assert!(load_manifest(&dir.path().join("missing.json")).is_err());
    }
}
