//! Word and phoneme alignments: parsing and validation, repeated-phrase matching
//! and mapping word spans onto time.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The silence token.
pub const SILENCE: &str = "sp";

/// Longest phoneme interval accepted, in seconds.
pub const MAX_PHONEME_SECONDS: f64 = 2.0;

const TIME_EPS: f64 = 1e-6;

const ARPABET: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

const VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

/// Symbol with any lexical stress digit removed (`AH0` → `AH`).
pub fn base_symbol(symbol: &str) -> &str {
    match symbol.as_bytes().last() {
        Some(b'0'..=b'2') if symbol.len() > 1 => &symbol[..symbol.len() - 1],
        _ => symbol,
    }
}

pub fn is_valid_symbol(symbol: &str) -> bool {
    if symbol == SILENCE {
        return true;
    }
    let base = base_symbol(symbol);
    if base.len() != symbol.len() {
        return VOWELS.contains(&base);
    }
    ARPABET.contains(&base)
}

pub fn is_silence(symbol: &str) -> bool {
    symbol == SILENCE
}

/// Lowercase with punctuation removed.
pub fn normalize_word(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("alignment json: {0}")]
    Json(String),
    #[error("phoneme {index}: unknown symbol {symbol:?}")]
    UnknownSymbol { index: usize, symbol: String },
    #[error("phoneme {index}: {message}")]
    Phoneme { index: usize, message: String },
    #[error("word {index}: {message}")]
    Word { index: usize, message: String },
    #[error("word span {start}..{end} is empty or outside 0..{len}")]
    BadSpan { start: usize, end: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeInterval {
    pub symbol: String,
    pub start: f64,
    pub end: f64,
}

impl PhonemeInterval {
    pub fn new(symbol: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            symbol: symbol.into(),
            start,
            end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_silence(&self) -> bool {
        is_silence(&self.symbol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordInterval {
    pub text: String,
    pub phonemes: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedTranscript {
    pub audio_duration: f64,
    pub words: Vec<WordInterval>,
    pub phonemes: Vec<PhonemeInterval>,
}

#[derive(Serialize, Deserialize)]
struct RawWord {
    text: String,
    phonemes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawTranscript {
    audio_duration: f64,
    words: Vec<RawWord>,
    phonemes: Vec<PhonemeInterval>,
}

/// A phrase shared by two transcripts, as word spans into each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseMatch {
    pub first: Range<usize>,
    pub second: Range<usize>,
}

impl PhraseMatch {
    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }
}

/// Time extent of a word span.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSpan {
    pub start: f64,
    pub end: f64,
    pub phonemes: Range<usize>,
}

impl TimeSpan {
    pub fn samples(&self, sample_rate: u32) -> Range<usize> {
        crate::audio::seconds_to_samples(self.start, sample_rate)
            ..crate::audio::seconds_to_samples(self.end, sample_rate)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

impl AlignedTranscript {
    /// Builds a transcript, enforcing every structural invariant.
    pub fn new(
        audio_duration: f64,
        words: Vec<WordInterval>,
        phonemes: Vec<PhonemeInterval>,
    ) -> Result<Self, AlignmentError> {
        let t = Self {
            audio_duration,
            words,
            phonemes,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), AlignmentError> {
        if !(self.audio_duration >= 0.0) || !self.audio_duration.is_finite() {
            return Err(AlignmentError::Json(format!(
                "audio_duration {} is not a non-negative number",
                self.audio_duration
            )));
        }
        for (index, p) in self.phonemes.iter().enumerate() {
            if !is_valid_symbol(&p.symbol) {
                return Err(AlignmentError::UnknownSymbol {
                    index,
                    symbol: p.symbol.clone(),
                });
            }
            let bad = |message: String| AlignmentError::Phoneme { index, message };
            if !(p.start >= 0.0 && p.start < p.end) || !p.end.is_finite() {
                return Err(bad(format!("interval [{}, {}] is not ordered", p.start, p.end)));
            }
            if p.duration() > MAX_PHONEME_SECONDS + TIME_EPS {
                return Err(bad(format!("duration {:.3} s exceeds 2 s", p.duration())));
            }
            if p.end > self.audio_duration + TIME_EPS {
                return Err(bad(format!(
                    "ends at {} s, after the audio ({} s)",
                    p.end, self.audio_duration
                )));
            }
            if index > 0 {
                let prev_end = self.phonemes[index - 1].end;
                if p.start < prev_end - TIME_EPS {
                    return Err(bad(format!("overlaps the previous phoneme ({prev_end} s)")));
                }
                if p.start > prev_end + TIME_EPS {
                    return Err(bad(format!(
                        "gap of {:.3} s after the previous phoneme is not covered by \"sp\"",
                        p.start - prev_end
                    )));
                }
            }
        }
        let mut covered = vec![false; self.phonemes.len()];
        let mut next_free = 0;
        for (index, w) in self.words.iter().enumerate() {
            let bad = |message: String| AlignmentError::Word { index, message };
            if w.text.is_empty() {
                return Err(bad("empty text".into()));
            }
            if w.phonemes.is_empty() || w.phonemes.end > self.phonemes.len() {
                return Err(bad(format!("phoneme range {:?} is invalid", w.phonemes)));
            }
            if w.phonemes.start < next_free {
                return Err(bad("overlaps or precedes the previous word".into()));
            }
            next_free = w.phonemes.end;
            covered[w.phonemes.clone()].iter_mut().for_each(|c| *c = true);
        }
        if let Some(index) = (0..self.phonemes.len())
            .find(|&i| !covered[i] && !self.phonemes[i].is_silence())
        {
            return Err(AlignmentError::Phoneme {
                index,
                message: "belongs to no word and is not \"sp\"".into(),
            });
        }
        Ok(())
    }

    pub fn word_start(&self, word: usize) -> f64 {
        self.phonemes[self.words[word].phonemes.start].start
    }

    pub fn word_end(&self, word: usize) -> f64 {
        self.phonemes[self.words[word].phonemes.end - 1].end
    }

    pub fn word_texts(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.text.as_str()).collect()
    }

    /// Phoneme index range spanned by a word span, interior silences included.
    pub fn phoneme_range(&self, words: &Range<usize>) -> Result<Range<usize>, AlignmentError> {
        if words.start >= words.end || words.end > self.words.len() {
            return Err(AlignmentError::BadSpan {
                start: words.start,
                end: words.end,
                len: self.words.len(),
            });
        }
        let mut range = self.words[words.start].phonemes.start..self.words[words.end - 1].phonemes.end;
        while range.len() > 1 && self.phonemes[range.start].is_silence() {
            range.start += 1;
        }
        while range.len() > 1 && self.phonemes[range.end - 1].is_silence() {
            range.end -= 1;
        }
        Ok(range)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("transcript serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_raw()).expect("transcript serializes")
    }

    fn to_raw(&self) -> RawTranscript {
        RawTranscript {
            audio_duration: self.audio_duration,
            words: self
                .words
                .iter()
                .map(|w| RawWord {
                    text: w.text.clone(),
                    phonemes: w.phonemes.clone().collect(),
                })
                .collect(),
            phonemes: self.phonemes.clone(),
        }
    }
}

impl Serialize for AlignedTranscript {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlignedTranscript {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTranscript::deserialize(d)?;
        from_raw(raw).map_err(serde::de::Error::custom)
    }
}

fn from_raw(raw: RawTranscript) -> Result<AlignedTranscript, AlignmentError> {
    let mut words = Vec::with_capacity(raw.words.len());
    for (index, w) in raw.words.into_iter().enumerate() {
        let bad = |message: &str| AlignmentError::Word {
            index,
            message: message.into(),
        };
        let (&first, &last) = match (w.phonemes.first(), w.phonemes.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(bad("no phonemes")),
        };
        if w.phonemes.iter().enumerate().any(|(k, &p)| p != first + k) {
            return Err(bad("phoneme indices are not contiguous and ascending"));
        }
        words.push(WordInterval {
            text: normalize_word(&w.text),
            phonemes: first..last + 1,
        });
    }
    AlignedTranscript::new(raw.audio_duration, words, raw.phonemes)
}

/// Parses and validates an alignment document.
pub fn parse_alignment(document: &str) -> Result<AlignedTranscript, AlignmentError> {
    let raw: RawTranscript =
        serde_json::from_str(document).map_err(|e| AlignmentError::Json(e.to_string()))?;
    from_raw(raw)
}

/// Maximal shared word runs of length in `[min_words, max_words]`.
///
/// A shared run longer than `max_words` is reported as each of its
/// `max_words`-long windows. Results are ordered by position in `t1`, then `t2`.
pub fn find_repeated_phrases(
    t1: &AlignedTranscript,
    t2: &AlignedTranscript,
    min_words: usize,
    max_words: usize,
) -> Vec<PhraseMatch> {
    assert!(1 <= min_words && min_words <= max_words, "invalid phrase length bounds");
    let a = t1.word_texts();
    let b = t2.word_texts();
    let mut out = Vec::new();
    for i in 0..a.len() {
        for j in 0..b.len() {
            if a[i] != b[j] || (i > 0 && j > 0 && a[i - 1] == b[j - 1]) {
                continue;
            }
            let run = a[i..]
                .iter()
                .zip(&b[j..])
                .take_while(|(x, y)| x == y)
                .count();
            if run < min_words {
                continue;
            }
            let len = run.min(max_words);
            for offset in 0..=run - len {
                out.push(PhraseMatch {
                    first: i + offset..i + offset + len,
                    second: j + offset..j + offset + len,
                });
            }
        }
    }
    out.sort_by_key(|m| (m.first.start, m.second.start));
    out
}

/// Time span and phoneme range of a word span.
///
/// Silences at either edge are excluded unless `include_boundary_silence`, in which
/// case directly adjacent `sp` phonemes are pulled in as well.
pub fn words_to_time_span(
    t: &AlignedTranscript,
    words: Range<usize>,
    include_boundary_silence: bool,
) -> Result<TimeSpan, AlignmentError> {
    let mut range = t.phoneme_range(&words)?;
    if include_boundary_silence {
        range = t.words[words.start].phonemes.start..t.words[words.end - 1].phonemes.end;
        if range.start > 0 && t.phonemes[range.start - 1].is_silence() {
            range.start -= 1;
        }
        if range.end < t.phonemes.len() && t.phonemes[range.end].is_silence() {
            range.end += 1;
        }
    }
    Ok(TimeSpan {
        start: t.phonemes[range.start].start,
        end: t.phonemes[range.end - 1].end,
        phonemes: range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds a contiguous transcript: words separated by `sp`, each phoneme 0.1 s.
    pub(crate) fn transcript(words: &[(&str, &[&str])], gap: bool) -> AlignedTranscript {
        let mut phonemes = Vec::new();
        let mut out_words = Vec::new();
        let mut t = 0.0;
        for (k, (text, phones)) in words.iter().enumerate() {
            if gap && k > 0 {
                phonemes.push(PhonemeInterval::new(SILENCE, t, t + 0.05));
                t += 0.05;
            }
            let start = phonemes.len();
            for p in phones.iter() {
                phonemes.push(PhonemeInterval::new(*p, t, t + 0.1));
                t += 0.1;
            }
            out_words.push(WordInterval {
                text: text.to_string(),
                phonemes: start..phonemes.len(),
            });
        }
        AlignedTranscript::new(t, out_words, phonemes).unwrap()
    }

    fn simple(text: &str) -> AlignedTranscript {
        let words: Vec<(&str, &[&str])> = text.split(' ').map(|w| (w, &["AH"][..])).collect();
        transcript(&words, true)
    }

    #[test]
    fn minimal_document_parses() {
        let doc = r#"{"audio_duration": 0.1, "words": [{"text": "a", "phonemes": [0]}],
                      "phonemes": [{"symbol": "AH", "start": 0.0, "end": 0.1}]}"#;
        let t = parse_alignment(doc).unwrap();
        assert_eq!(t.words.len(), 1);
        assert_eq!(t.phonemes.len(), 1);
        assert_eq!(t.words[0].phonemes, 0..1);
    }

    #[test]
    fn uncovered_gap_is_rejected() {
        let doc = r#"{"audio_duration": 1.0,
            "words": [{"text": "a", "phonemes": [0]}, {"text": "b", "phonemes": [1]}],
            "phonemes": [{"symbol": "AH", "start": 0.0, "end": 0.1},
                         {"symbol": "B", "start": 0.15, "end": 0.3}]}"#;
        assert!(matches!(
            parse_alignment(doc),
            Err(AlignmentError::Phoneme { index: 1, .. })
        ));
    }

    #[test]
    fn reversed_interval_names_its_index() {
        let doc = r#"{"audio_duration": 1.0,
            "words": [{"text": "ab", "phonemes": [0, 1]}],
            "phonemes": [{"symbol": "AH", "start": 0.0, "end": 0.1},
                         {"symbol": "B", "start": 0.3, "end": 0.2}]}"#;
        match parse_alignment(doc) {
            Err(AlignmentError::Phoneme { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_symbols_and_stress_marks() {
        assert!(is_valid_symbol("AH0"));
        assert!(is_valid_symbol("sp"));
        assert!(!is_valid_symbol("B1"));
        assert!(!is_valid_symbol("XX"));
        assert!(!is_valid_symbol("ah"));
        let doc = r#"{"audio_duration": 1.0, "words": [{"text": "a", "phonemes": [0]}],
                      "phonemes": [{"symbol": "QQ", "start": 0.0, "end": 0.1}]}"#;
        assert_eq!(
            parse_alignment(doc),
            Err(AlignmentError::UnknownSymbol { index: 0, symbol: "QQ".into() })
        );
    }

    #[test]
    fn orphan_phoneme_must_be_silence() {
        let doc = r#"{"audio_duration": 1.0, "words": [{"text": "a", "phonemes": [0]}],
            "phonemes": [{"symbol": "AH", "start": 0.0, "end": 0.1},
                         {"symbol": "T", "start": 0.1, "end": 0.2}]}"#;
        assert!(matches!(parse_alignment(doc), Err(AlignmentError::Phoneme { index: 1, .. })));
    }

    #[test]
    fn word_text_is_normalized() {
        let doc = r#"{"audio_duration": 1.0, "words": [{"text": "Hello,", "phonemes": [0]}],
                      "phonemes": [{"symbol": "AH", "start": 0.0, "end": 0.1}]}"#;
        assert_eq!(parse_alignment(doc).unwrap().words[0].text, "hello");
    }

    #[test]
    fn phrase_matching_examples() {
        let m = find_repeated_phrases(&simple("the quick fox"), &simple("the quick dog"), 2, 5);
        assert_eq!(m, vec![PhraseMatch { first: 0..2, second: 0..2 }]);

        let five = simple("one two three four five");
        let m = find_repeated_phrases(&five, &five, 2, 5);
        assert_eq!(m, vec![PhraseMatch { first: 0..5, second: 0..5 }]);

        assert!(find_repeated_phrases(&simple("a b c"), &simple("d e f"), 2, 5).is_empty());

        let six = simple("one two three four five six");
        let m = find_repeated_phrases(&six, &six, 2, 5);
        assert_eq!(
            m,
            vec![
                PhraseMatch { first: 0..5, second: 0..5 },
                PhraseMatch { first: 1..6, second: 1..6 },
            ]
        );
    }

    #[test]
    fn time_span_examples() {
        // "x" [0, 0.2), word 1 [0.20, 0.55), sp [0.55, 0.60), word 2 [0.60, 0.75)
        let phonemes = vec![
            PhonemeInterval::new("K", 0.0, 0.2),
            PhonemeInterval::new("AH", 0.2, 0.4),
            PhonemeInterval::new("T", 0.4, 0.55),
            PhonemeInterval::new(SILENCE, 0.55, 0.60),
            PhonemeInterval::new("IY", 0.60, 0.75),
        ];
        let words = vec![
            WordInterval { text: "x".into(), phonemes: 0..1 },
            WordInterval { text: "cut".into(), phonemes: 1..3 },
            WordInterval { text: "ee".into(), phonemes: 4..5 },
        ];
        let t = AlignedTranscript::new(0.75, words, phonemes).unwrap();
        let one = words_to_time_span(&t, 1..2, false).unwrap();
        assert_eq!((one.start, one.end), (0.2, 0.55));
        let two = words_to_time_span(&t, 1..3, false).unwrap();
        assert_eq!((two.start, two.end), (0.2, 0.75));
        assert_eq!(two.phonemes, 1..5);
        let padded = words_to_time_span(&t, 1..2, true).unwrap();
        assert_eq!(padded.phonemes, 1..4);
        assert!(words_to_time_span(&t, 2..2, false).is_err());
        assert!(words_to_time_span(&t, 2..9, false).is_err());
    }

    fn arb_transcript() -> impl Strategy<Value = AlignedTranscript> {
        let vocab = ["the", "quick", "fox", "dog", "a", "ran"];
        prop::collection::vec((0usize..vocab.len(), 1usize..4, 1u32..30), 1..10).prop_map(
            move |spec| {
                let mut phonemes = Vec::new();
                let mut words = Vec::new();
                let mut t = 0.0;
                for (k, (w, n, d)) in spec.into_iter().enumerate() {
                    if k % 2 == 1 {
                        phonemes.push(PhonemeInterval::new(SILENCE, t, t + 0.03));
                        t += 0.03;
                    }
                    let start = phonemes.len();
                    for _ in 0..n {
                        let end = t + d as f64 / 100.0;
                        phonemes.push(PhonemeInterval::new("EH", t, end));
                        t = end;
                    }
                    words.push(WordInterval {
                        text: vocab[w].into(),
                        phonemes: start..phonemes.len(),
                    });
                }
                AlignedTranscript::new(t + 0.5, words, phonemes).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(t in arb_transcript()) {
            prop_assert_eq!(parse_alignment(&t.to_json()).unwrap(), t);
        }

        #[test]
        fn matching_is_symmetric(a in arb_transcript(), b in arb_transcript()) {
            let forward = find_repeated_phrases(&a, &b, 2, 5);
            let mut backward: Vec<_> =
                find_repeated_phrases(&b, &a, 2, 5).iter().map(PhraseMatch::swapped).collect();
            backward.sort_by_key(|m| (m.first.start, m.second.start));
            prop_assert_eq!(&forward, &backward);
            for m in forward {
                prop_assert!((2..=5).contains(&m.first.len()));
                prop_assert_eq!(&a.word_texts()[m.first.clone()], &b.word_texts()[m.second.clone()]);
            }
        }
    }
}
