use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Recordings};
use crate::alignment::normalize_word;

/// Word spans are half-open `[start, end)` indices into the current document
/// (for `target`) or into the source recording's transcript (for `source`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EditOp {
    Cut {
        target: [usize; 2],
    },
    Copy {
        source_recording: String,
        source: [usize; 2],
    },
    Paste {
        at: usize,
    },
    Replace {
        target: [usize; 2],
        source_recording: String,
        source: [usize; 2],
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EditScript {
    /// Recording being edited; may be omitted when there is only one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn from_json(document: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(document).map_err(|e| PipelineError::Script {
            op: 0,
            message: format!("malformed script: {e}"),
        })
    }
}

/// A phoneme of the edited document and where its audio comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeRef {
    pub recording: String,
    pub index: usize,
    /// Brought in by paste or replace.
    pub inserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocWord {
    pub text: String,
    pub phonemes: Range<usize>,
}

/// A maximal run of document phonemes that are consecutive in one recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub recording: String,
    /// Phoneme indices in the source recording.
    pub source_phonemes: Range<usize>,
    /// Phoneme indices in the document.
    pub doc_phonemes: Range<usize>,
    /// Nominal sample span in the source recording.
    pub samples: Range<usize>,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplicePlan {
    pub destination: String,
    pub phonemes: Vec<PhonemeRef>,
    pub words: Vec<DocWord>,
    pub segments: Vec<Segment>,
    pub crossfade_seconds: f64,
    /// Document phonemes whose prosody is regenerated.
    pub correction: Range<usize>,
    /// `correction` widened by the context window.
    pub context: Range<usize>,
}

impl SplicePlan {
    pub fn joins(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    pub fn is_noop(&self) -> bool {
        self.correction.is_empty() && self.segments.len() <= 1
    }
}

fn word_span(
    t_words: usize,
    span: [usize; 2],
    op: usize,
    what: &str,
) -> Result<Range<usize>, PipelineError> {
    if span[0] >= span[1] || span[1] > t_words {
        return Err(PipelineError::Script {
            op,
            message: format!("{what} span [{}, {}) is invalid for {t_words} words", span[0], span[1]),
        });
    }
    Ok(span[0]..span[1])
}

type Clip = (Vec<PhonemeRef>, Vec<DocWord>);

fn phrase(recordings: &Recordings, id: &str, span: [usize; 2], op: usize) -> Result<Clip, PipelineError> {
    let t = &recordings
        .get(id)
        .ok_or_else(|| PipelineError::UnknownRecording(id.to_string()))?
        .transcript;
    let words = word_span(t.words.len(), span, op, "source")?;
    let first = t.words[words.start].phonemes.start;
    let last = t.words[words.end - 1].phonemes.end;
    let refs = (first..last)
        .map(|index| PhonemeRef {
            recording: id.to_string(),
            index,
            inserted: true,
        })
        .collect();
    let doc_words = t.words[words]
        .iter()
        .map(|w| DocWord {
            text: w.text.clone(),
            phonemes: w.phonemes.start - first..w.phonemes.end - first,
        })
        .collect();
    Ok((refs, doc_words))
}

struct Document<'a> {
    recordings: &'a Recordings,
    phonemes: Vec<PhonemeRef>,
    words: Vec<DocWord>,
}

impl Document<'_> {
    fn symbol(&self, i: usize) -> &str {
        let r = &self.phonemes[i];
        &self.recordings[&r.recording].transcript.phonemes[r.index].symbol
    }

    fn word_phonemes(&self, words: &Range<usize>) -> Range<usize> {
        self.words[words.start].phonemes.start..self.words[words.end - 1].phonemes.end
    }

    /// Removes `phonemes` and `words`, which must cover each other.
    fn remove(&mut self, words: Range<usize>, phonemes: Range<usize>) {
        let n = phonemes.len();
        self.phonemes.drain(phonemes.clone());
        self.words.drain(words.clone());
        for w in &mut self.words[words.start..] {
            w.phonemes = w.phonemes.start - n..w.phonemes.end - n;
        }
    }

    fn insert(&mut self, word_at: usize, phoneme_at: usize, clip: &Clip) {
        let n = clip.0.len();
        for w in &mut self.words[word_at..] {
            w.phonemes = w.phonemes.start + n..w.phonemes.end + n;
        }
        self.phonemes.splice(phoneme_at..phoneme_at, clip.0.iter().cloned());
        let shifted = clip.1.iter().map(|w| DocWord {
            text: w.text.clone(),
            phonemes: w.phonemes.start + phoneme_at..w.phonemes.end + phoneme_at,
        });
        self.words.splice(word_at..word_at, shifted);
    }
}

/// Applies the script to the destination's phoneme sequence and derives the
/// splice segments and correction region.
///
/// Cutting between two silences also drops the silence after the cut so pauses
/// do not double up. A plan whose document is the untouched destination is a
/// no-op with an empty correction region.
pub fn plan_edit(
    script: &EditScript,
    recordings: &Recordings,
    context_phonemes: usize,
    crossfade_seconds: f64,
) -> Result<SplicePlan, PipelineError> {
    let destination = match &script.destination {
        Some(id) => id.clone(),
        None if recordings.len() == 1 => recordings.keys().next().expect("one recording").clone(),
        None => {
            return Err(PipelineError::Script {
                op: 0,
                message: "script must name a destination when the session has several recordings".into(),
            })
        }
    };
    let dest = &recordings
        .get(&destination)
        .ok_or_else(|| PipelineError::UnknownRecording(destination.clone()))?
        .transcript;
    let mut doc = Document {
        recordings,
        phonemes: (0..dest.phonemes.len())
            .map(|index| PhonemeRef {
                recording: destination.clone(),
                index,
                inserted: false,
            })
            .collect(),
        words: dest
            .words
            .iter()
            .map(|w| DocWord {
                text: w.text.clone(),
                phonemes: w.phonemes.clone(),
            })
            .collect(),
    };

    let mut clipboard: Option<Clip> = None;
    for (op, edit) in script.ops.iter().enumerate() {
        match edit {
            EditOp::Cut { target } => {
                let words = word_span(doc.words.len(), *target, op, "target")?;
                let mut range = doc.word_phonemes(&words);
                if range.start > 0
                    && range.end < doc.phonemes.len()
                    && crate::alignment::is_silence(doc.symbol(range.start - 1))
                    && crate::alignment::is_silence(doc.symbol(range.end))
                {
                    range.end += 1;
                }
                doc.remove(words, range);
            }
            EditOp::Copy {
                source_recording,
                source,
            } => clipboard = Some(phrase(recordings, source_recording, *source, op)?),
            EditOp::Paste { at } => {
                let clip = clipboard.as_ref().ok_or_else(|| PipelineError::Script {
                    op,
                    message: "paste without a preceding copy".into(),
                })?;
                if *at > doc.words.len() {
                    return Err(PipelineError::Script {
                        op,
                        message: format!("paste position {at} beyond {} words", doc.words.len()),
                    });
                }
                let phoneme_at = if *at < doc.words.len() {
                    doc.words[*at].phonemes.start
                } else if let Some(last) = doc.words.last() {
                    last.phonemes.end
                } else {
                    doc.phonemes.len()
                };
                doc.insert(*at, phoneme_at, clip);
            }
            EditOp::Replace {
                target,
                source_recording,
                source,
            } => {
                let words = word_span(doc.words.len(), *target, op, "target")?;
                let clip = phrase(recordings, source_recording, *source, op)?;
                let range = doc.word_phonemes(&words);
                let at = range.start;
                doc.remove(words.clone(), range);
                doc.insert(words.start, at, &clip);
            }
        }
    }
    if doc.phonemes.is_empty() {
        return Err(PipelineError::Script {
            op: script.ops.len().saturating_sub(1),
            message: "the edit removes every phoneme".into(),
        });
    }

    let untouched = doc.phonemes.len() == dest.phonemes.len()
        && doc
            .phonemes
            .iter()
            .enumerate()
            .all(|(i, r)| r.recording == destination && r.index == i);
    if untouched {
        for r in &mut doc.phonemes {
            r.inserted = false;
        }
    }
    Ok(finish(destination, doc.phonemes, doc.words, recordings, context_phonemes, crossfade_seconds))
}

/// Plan that re-synthesizes words `[words[0], words[1])` of `destination` in
/// place: the document is unchanged but the phrase is treated as pasted.
pub fn plan_identity_splice(
    recordings: &Recordings,
    destination: &str,
    words: [usize; 2],
    context_phonemes: usize,
    crossfade_seconds: f64,
) -> Result<SplicePlan, PipelineError> {
    let t = &recordings
        .get(destination)
        .ok_or_else(|| PipelineError::UnknownRecording(destination.to_string()))?
        .transcript;
    let span = word_span(t.words.len(), words, 0, "target")?;
    let hull = t.words[span.start].phonemes.start..t.words[span.end - 1].phonemes.end;
    let phonemes = (0..t.phonemes.len())
        .map(|index| PhonemeRef {
            recording: destination.to_string(),
            index,
            inserted: hull.contains(&index),
        })
        .collect();
    let words = t
        .words
        .iter()
        .map(|w| DocWord {
            text: w.text.clone(),
            phonemes: w.phonemes.clone(),
        })
        .collect();
    Ok(finish(
        destination.to_string(),
        phonemes,
        words,
        recordings,
        context_phonemes,
        crossfade_seconds,
    ))
}

fn finish(
    destination: String,
    phonemes: Vec<PhonemeRef>,
    words: Vec<DocWord>,
    recordings: &Recordings,
    context_phonemes: usize,
    crossfade_seconds: f64,
) -> SplicePlan {
    let fs = recordings[&destination].waveform.sample_rate;
    let sample = |seconds: f64| (seconds * fs as f64).round() as usize;
    let mut segments: Vec<Segment> = Vec::new();
    for (i, r) in phonemes.iter().enumerate() {
        let p = &recordings[&r.recording].transcript.phonemes[r.index];
        if let Some(last) = segments.last_mut() {
            let previous = &phonemes[i - 1];
            if last.recording == r.recording && last.source_phonemes.end == r.index && previous.inserted == r.inserted {
                last.source_phonemes.end += 1;
                last.doc_phonemes.end = i + 1;
                last.samples.end = sample(p.end);
                continue;
            }
        }
        segments.push(Segment {
            recording: r.recording.clone(),
            source_phonemes: r.index..r.index + 1,
            doc_phonemes: i..i + 1,
            samples: sample(p.start)..sample(p.end),
            gain: 1.0,
        });
    }

    let inserted: Vec<usize> = (0..phonemes.len()).filter(|&i| phonemes[i].inserted).collect();
    let anchors: Vec<usize> = if inserted.is_empty() {
        segments
            .windows(2)
            .flat_map(|w| [w[0].doc_phonemes.end - 1, w[1].doc_phonemes.start])
            .collect()
    } else {
        inserted
    };
    let correction = match (anchors.iter().min(), anchors.iter().max()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    };
    let context = if correction.is_empty() {
        0..0
    } else {
        correction.start.saturating_sub(context_phonemes)..(correction.end + context_phonemes).min(phonemes.len())
    };
    let words = words
        .into_iter()
        .map(|w| DocWord {
            text: normalize_word(&w.text),
            ..w
        })
        .collect();
    SplicePlan {
        destination,
        phonemes,
        words,
        segments,
        crossfade_seconds,
        correction,
        context,
    }
}
