//! Replacement-task evaluation: build cases from repeated phrases, run each
//! condition and score the edited region against the destination's own speech.

mod corpus;
mod metrics;
mod report;

pub use corpus::{load_manifest, synthetic_corpus, CorpusSpec, Manifest, ManifestEntry};
pub use metrics::{boundary_jump_cents, cents, join_guard_frames, duration_mae, f0_rmse_cents, map_frames, voicing_f1};
pub use report::{report, Report, ReportRow, METRICS};

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::find_repeated_phrases;
use crate::pipeline::{
    plan_edit, prepare, render, warp_pitch, EditOp, EditResult, EditScript, PipelineConfig,
    PipelineError, Prepared, ProsodySource, Recordings, SpeakerModel,
};
use crate::pitch::{track_pitch, PitchContour, PitchError};
use crate::prosody::{
    frame_count, generate_durations, generate_pitch, is_unvoiced_symbol, ProsodyConstraints, ProsodyTargets,
    DURATION_MAX, DURATION_MIN,
};

pub const MIN_PHRASE_WORDS: usize = 2;
pub const MAX_PHRASE_WORDS: usize = 5;
pub const DEFAULT_TOP_N: usize = 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("pitch analysis of the result: {0}")]
    Pitch(#[from] PitchError),
    #[error("no records to report")]
    EmptyReport,
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Naive,
    Average,
    Proposed,
    MinusDuration,
    MinusPitch,
    MinusPostprocess,
    MinusContext,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::Naive,
        Condition::Average,
        Condition::Proposed,
        Condition::MinusDuration,
        Condition::MinusPitch,
        Condition::MinusPostprocess,
        Condition::MinusContext,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Naive => "naive",
            Condition::Average => "average",
            Condition::Proposed => "proposed",
            Condition::MinusDuration => "minus_duration",
            Condition::MinusPitch => "minus_pitch",
            Condition::MinusPostprocess => "minus_postprocess",
            Condition::MinusContext => "minus_context",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| EvalError::UnknownCondition(s.to_string()))
    }
}

/// A phrase spoken in both recordings: the donor's copy replaces the
/// destination's, whose original audio is the reference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementCase {
    pub destination: String,
    pub donor: String,
    pub destination_words: Range<usize>,
    pub donor_words: Range<usize>,
    pub text: Vec<String>,
}

impl ReplacementCase {
    pub fn script(&self) -> EditScript {
        EditScript {
            destination: Some(self.destination.clone()),
            ops: vec![EditOp::Replace {
                target: [self.destination_words.start, self.destination_words.end],
                source_recording: self.donor.clone(),
                source: [self.donor_words.start, self.donor_words.end],
            }],
        }
    }
}

/// Every cross-recording phrase match of 2 to 5 words, once per recording pair
/// (the earlier id is the destination), in id then position order.
pub fn build_cases(recordings: &Recordings) -> Vec<ReplacementCase> {
    let ids: Vec<&String> = recordings.keys().collect();
    let mut cases = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let (ta, tb) = (&recordings[*a].transcript, &recordings[*b].transcript);
            for m in find_repeated_phrases(ta, tb, MIN_PHRASE_WORDS, MAX_PHRASE_WORDS) {
                let case = ReplacementCase {
                    destination: a.to_string(),
                    donor: b.to_string(),
                    text: ta.word_texts()[m.first.clone()].iter().map(|w| w.to_string()).collect(),
                    destination_words: m.first,
                    donor_words: m.second,
                };
                if !cases.contains(&case) {
                    cases.push(case);
                }
            }
        }
    }
    cases
}

/// Constant pitch at the context's mean f0 and corpus-mean durations.
pub fn average_targets(prepared: &Prepared, model: &SpeakerModel) -> Result<ProsodyTargets, PipelineError> {
    let durations = prepared
        .region
        .iter()
        .map(|s| model.stats.mean(s).map(|d| d.clamp(DURATION_MIN, DURATION_MAX)))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| PipelineError::stage("prosody generation", e))?;
    let c = &prepared.constraints;
    let voiced: Vec<f64> = c.context_before.f0.iter().chain(&c.context_after.f0).filter_map(|f| *f).collect();
    let level = if voiced.is_empty() {
        model.grid.mean_hz()
    } else {
        voiced.iter().sum::<f64>() / voiced.len() as f64
    };
    let frames = frame_count(&durations);
    let mut f0 = Vec::with_capacity(frames);
    let mut j = 0;
    let mut end = durations[0];
    for f in 0..frames {
        let t = (f as f64 + 0.5) * crate::audio::HOP_SECONDS;
        while j + 1 < durations.len() && t >= end {
            j += 1;
            end += durations[j];
        }
        f0.push((!is_unvoiced_symbol(&prepared.region[j])).then_some(level));
    }
    Ok(ProsodyTargets {
        durations,
        pitch: PitchContour::new(f0),
    })
}

/// Runs one condition on one case. `config` is the proposed configuration; the
/// ablations derive from it.
pub fn run_condition(
    case: &ReplacementCase,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    condition: Condition,
    seed: u64,
) -> Result<EditResult, EvalError> {
    let plan = plan_edit(&case.script(), recordings, config.context_phonemes, config.crossfade_seconds)?;
    let mut prepared = prepare(&plan, recordings, model, config)?;
    let mut config = config.clone();
    let stage = |e| PipelineError::stage("prosody generation", e);
    let source = match condition {
        Condition::Naive => ProsodySource::Splice,
        Condition::Proposed => ProsodySource::Generated,
        Condition::MinusPostprocess => {
            config.postprocess = None;
            ProsodySource::Generated
        }
        Condition::MinusContext => {
            prepared.constraints = prepared.constraints.without_context();
            ProsodySource::Generated
        }
        Condition::Average => ProsodySource::Explicit {
            targets: average_targets(&prepared, model)?,
        },
        Condition::MinusDuration => {
            let durations = prepared.original_durations.clone();
            let pitch = generate_pitch(&prepared.region, &durations, &prepared.constraints, &model.grid, 0.0, seed)
                .map_err(stage)?;
            ProsodySource::Explicit {
                targets: ProsodyTargets { durations, pitch },
            }
        }
        Condition::MinusPitch => {
            let durations = generate_durations(&prepared.region, &prepared.constraints, &model.stats, 0.0, seed)
                .map_err(stage)?;
            let pitch = warp_pitch(&prepared, recordings, model, &durations)?;
            ProsodySource::Explicit {
                targets: ProsodyTargets { durations, pitch },
            }
        }
    };
    Ok(render(&prepared, recordings, model, &config, &source, &ProsodyConstraints::default(), seed)?)
}

/// Metrics for one result; `None` where a metric has nothing to compare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub case: usize,
    pub condition: Condition,
    pub f0_rmse_cents: Option<f64>,
    pub duration_mae_seconds: Option<f64>,
    pub voicing_f1: Option<f64>,
    pub boundary_jump_cents: Option<f64>,
}

impl MetricRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "f0_rmse_cents" => self.f0_rmse_cents,
            "duration_mae_seconds" => self.duration_mae_seconds,
            "voicing_f1" => self.voicing_f1,
            "boundary_jump_cents" => self.boundary_jump_cents,
            _ => None,
        }
    }
}

/// Scores the edited phrase of `result` against the destination's original
/// phrase. Joins are the edges of the correction region in the output.
pub fn score(
    result: &EditResult,
    case: &ReplacementCase,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
) -> Result<(Option<f64>, Option<f64>, Option<f64>, Option<f64>), EvalError> {
    let dest = &recordings
        .get(&case.destination)
        .ok_or_else(|| PipelineError::UnknownRecording(case.destination.clone()))?
        .transcript;
    let words = &dest.words;
    let reference_span = &dest.phonemes
        [words[case.destination_words.start].phonemes.start..words[case.destination_words.end - 1].phonemes.end];
    let plan = &result.prepared.plan;
    let (result_span, joins) = if plan.correction.is_empty() {
        // Untouched output: the phrase sits where it always was.
        let span = words[case.destination_words.start].phonemes.start..words[case.destination_words.end - 1].phonemes.end;
        let p = &result.transcript.phonemes[span];
        let joins = vec![p[0].start, p[p.len() - 1].end];
        (p, joins)
    } else {
        let p = &result.transcript.phonemes[plan.correction.clone()];
        let joins = vec![p[0].start, p[p.len() - 1].end];
        (p, joins)
    };
    let w = &result.waveform;
    let contour = track_pitch(w, 0..w.len(), &config.pitch)?;
    let reference = model.contour(&case.destination)?;
    let pairs = map_frames(reference, reference_span, &contour, result_span);
    let ref_voiced: Vec<bool> = pairs.iter().map(|p| p.0.is_some()).collect();
    let out_voiced: Vec<bool> = pairs.iter().map(|p| p.1.is_some()).collect();
    Ok((
        f0_rmse_cents(&pairs),
        duration_mae(reference_span, result_span),
        voicing_f1(&ref_voiced, &out_voiced),
        boundary_jump_cents(&contour, &joins, join_guard_frames(config.crossfade_seconds, config.pitch.window_seconds)),
    ))
}

pub fn evaluate(
    index: usize,
    case: &ReplacementCase,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    condition: Condition,
    seed: u64,
) -> Result<MetricRecord, EvalError> {
    let result = run_condition(case, recordings, model, config, condition, seed)?;
    let (f0, duration, voicing, jump) = score(&result, case, recordings, model, config)?;
    Ok(MetricRecord {
        case: index,
        condition,
        f0_rmse_cents: f0,
        duration_mae_seconds: duration,
        voicing_f1: voicing,
        boundary_jump_cents: jump,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessOutput {
    pub cases: Vec<ReplacementCase>,
    /// Indices into `cases` that were scored, worst naive join first.
    pub selected: Vec<usize>,
    pub report: Report,
}

/// Builds cases, ranks them by the naive splice's boundary jump, keeps the
/// worst `top_n` and scores every requested condition on them.
pub fn run_harness(
    recordings: &Recordings,
    config: &PipelineConfig,
    conditions: &[Condition],
    top_n: usize,
    seed: u64,
) -> Result<HarnessOutput, EvalError> {
    let model = SpeakerModel::analyze(recordings, config)?;
    let cases = build_cases(recordings);
    let mut naive = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        naive.push(evaluate(i, case, recordings, &model, config, Condition::Naive, seed)?);
    }
    let mut order: Vec<usize> = (0..cases.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| naive[i].boundary_jump_cents.unwrap_or(f64::NEG_INFINITY);
        key(b).total_cmp(&key(a)).then(a.cmp(&b))
    });
    order.truncate(top_n);

    let mut records = Vec::new();
    for &i in &order {
        for &condition in conditions {
            let record = if condition == Condition::Naive {
                naive[i].clone()
            } else {
                evaluate(i, &cases[i], recordings, &model, config, condition, seed)?
            };
            records.push(record);
        }
    }
    let report = report(&records)?;
    Ok(HarnessOutput {
        cases,
        selected: order,
        report,
    })
}
