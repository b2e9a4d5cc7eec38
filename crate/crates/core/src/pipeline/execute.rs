use std::ops::Range;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::analysis::sample_contour;
use super::{contour_for_span, PipelineConfig, PipelineError, Recordings, SpeakerModel, SplicePlan};
use crate::alignment::{is_silence, AlignedTranscript, PhonemeInterval, WordInterval};
use crate::audio::{a_weighted_rms, hop_samples, splice, FrameGrid, SplicePiece, Waveform, GAIN_MAX, GAIN_MIN};
use crate::pitch::{PitchContour, F0_MAX, F0_MIN};
use crate::prosody::{
    external_generator, frame_count, generate_prosody, GenerationParams, ProsodyConstraints, ProsodyContext,
    ProsodyTargets,
};
use crate::psola::{detect_epochs, run_postprocess_hook, synthesize, RateMap, ShiftMap, TimeWarp, RATE_MAX, RATE_MIN};

/// Where the correction region's prosody comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProsodySource {
    /// Plain splice: no prosody correction at all.
    Splice,
    /// Built-in generator in deterministic mode.
    #[default]
    Generated,
    /// Built-in generator candidate `k` (0 is the deterministic one).
    Candidate { k: usize },
    /// The configured external generator.
    External,
    Explicit { targets: ProsodyTargets },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoudnessRecord {
    pub segment: usize,
    pub recording: String,
    pub reference_rms: f64,
    pub segment_rms: f64,
    pub gain: f64,
}

/// One spliced piece: where it came from and where it landed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceProvenance {
    pub recording: String,
    pub source_samples: Range<usize>,
    pub output_samples: Range<usize>,
    pub doc_phonemes: Range<usize>,
    pub gain: f64,
    pub synthesized: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub pieces: Vec<PieceProvenance>,
    /// Output sample ranges of the crossfades.
    pub crossfades: Vec<Range<usize>>,
    pub synthesis_stages: usize,
    pub hook_runs: usize,
    pub hook_fallbacks: usize,
    pub loudness: Vec<LoudnessRecord>,
    /// Output samples occupied by the correction phonemes.
    pub correction_output: Range<usize>,
}

/// Loudness gains and context constraints: everything before prosody targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub plan: SplicePlan,
    pub loudness: Vec<LoudnessRecord>,
    /// Symbols of the correction phonemes.
    pub region: Vec<String>,
    /// Their durations in the source audio.
    pub original_durations: Vec<f64>,
    /// Context only; pins are added per render.
    pub constraints: ProsodyConstraints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditResult {
    #[serde(skip)]
    pub waveform: Waveform,
    pub transcript: AlignedTranscript,
    pub targets: Option<ProsodyTargets>,
    pub source: ProsodySource,
    /// Pins layered on the prepared context.
    pub pins: ProsodyConstraints,
    pub provenance: Provenance,
    pub seed: u64,
    pub prepared: Prepared,
}

struct PhonemeSource<'a> {
    recording: &'a str,
    interval: &'a PhonemeInterval,
}

fn phoneme<'a>(plan: &'a SplicePlan, recordings: &'a Recordings, i: usize) -> PhonemeSource<'a> {
    let r = &plan.phonemes[i];
    PhonemeSource {
        recording: &r.recording,
        interval: &recordings[&r.recording].transcript.phonemes[r.index],
    }
}

fn to_sample(seconds: f64, fs: u32) -> usize {
    (seconds * fs as f64).round() as usize
}

/// Energy-weighted A-weighted RMS over non-silence phonemes (regions too short to
/// weight are skipped). `None` if nothing was measurable.
fn speech_rms<'a>(w: &Waveform, spans: impl Iterator<Item = &'a PhonemeInterval>) -> Option<f64> {
    let mut energy = 0.0;
    let mut samples = 0usize;
    for p in spans.filter(|p| !is_silence(&p.symbol)) {
        let region = to_sample(p.start, w.sample_rate)..to_sample(p.end, w.sample_rate).min(w.len());
        if let Ok(rms) = a_weighted_rms(w, region.clone()) {
            energy += rms * rms * region.len() as f64;
            samples += region.len();
        }
    }
    (samples > 0 && energy > 0.0).then(|| (energy / samples as f64).sqrt())
}

fn context_side(
    plan: &SplicePlan,
    recordings: &Recordings,
    model: &SpeakerModel,
    doc: Range<usize>,
) -> Result<ProsodyContext, PipelineError> {
    let mut side = ProsodyContext::default();
    for i in doc {
        let p = phoneme(plan, recordings, i);
        side.phonemes.push(p.interval.symbol.clone());
        side.durations.push(p.interval.duration());
        let contour = model.contour(p.recording)?;
        side.f0.extend(contour_for_span(contour, p.interval.start, p.interval.end));
    }
    Ok(side)
}

/// Steps 1 and 2: donor loudness gains, then context prosody.
///
/// The loudness reference is the destination's own speech in the context window
/// outside the correction region. Only segments from other recordings are gained.
pub fn prepare(
    plan: &SplicePlan,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
) -> Result<Prepared, PipelineError> {
    let mut plan = plan.clone();
    for s in &plan.segments {
        if !recordings.contains_key(&s.recording) {
            return Err(PipelineError::UnknownRecording(s.recording.clone()));
        }
    }
    let dest = &recordings
        .get(&plan.destination)
        .ok_or_else(|| PipelineError::UnknownRecording(plan.destination.clone()))?;

    let mut loudness = Vec::new();
    if config.loudness_matching && !plan.correction.is_empty() {
        let reference = speech_rms(
            &dest.waveform,
            plan.context
                .clone()
                .filter(|i| !plan.correction.contains(i) && plan.phonemes[*i].recording == plan.destination)
                .map(|i| phoneme(&plan, recordings, i).interval),
        );
        if let Some(reference_rms) = reference {
            for (k, s) in plan.segments.iter_mut().enumerate() {
                if s.recording == plan.destination {
                    continue;
                }
                let r = &recordings[&s.recording];
                let spans = r.transcript.phonemes[s.source_phonemes.clone()].iter();
                let Some(segment_rms) = speech_rms(&r.waveform, spans) else {
                    continue;
                };
                s.gain = (reference_rms / segment_rms).clamp(GAIN_MIN, GAIN_MAX);
                loudness.push(LoudnessRecord {
                    segment: k,
                    recording: s.recording.clone(),
                    reference_rms,
                    segment_rms,
                    gain: s.gain,
                });
            }
        }
    }

    let region: Vec<String> = plan
        .correction
        .clone()
        .map(|i| phoneme(&plan, recordings, i).interval.symbol.clone())
        .collect();
    let original_durations = plan
        .correction
        .clone()
        .map(|i| phoneme(&plan, recordings, i).interval.duration())
        .collect();
    let constraints = ProsodyConstraints {
        context_before: context_side(&plan, recordings, model, plan.context.start..plan.correction.start)?,
        context_after: context_side(&plan, recordings, model, plan.correction.end..plan.context.end)?,
        ..Default::default()
    };
    Ok(Prepared {
        plan,
        loudness,
        region,
        original_durations,
        constraints,
    })
}

/// Source pitch of the correction phonemes re-timed onto `durations`, mapping
/// time linearly within each phoneme.
pub fn warp_pitch(
    prepared: &Prepared,
    recordings: &Recordings,
    model: &SpeakerModel,
    durations: &[f64],
) -> Result<PitchContour, PipelineError> {
    let plan = &prepared.plan;
    if durations.len() != plan.correction.len() {
        return Err(PipelineError::stage(
            "targets",
            format!("{} durations for {} phonemes", durations.len(), plan.correction.len()),
        ));
    }
    let frames = frame_count(durations);
    let mut f0 = Vec::with_capacity(frames);
    let mut j = 0;
    let mut start = 0.0;
    for f in 0..frames {
        let t = (f as f64 + 0.5) * crate::audio::HOP_SECONDS;
        while j + 1 < durations.len() && t >= start + durations[j] {
            start += durations[j];
            j += 1;
        }
        let p = phoneme(plan, recordings, plan.correction.start + j);
        let u = ((t - start) / durations[j]).clamp(0.0, 1.0);
        let source_time = p.interval.start + u * p.interval.duration();
        f0.push(sample_contour(model.contour(p.recording)?, source_time).map(|v| v.clamp(F0_MIN, F0_MAX)));
    }
    Ok(PitchContour::new(f0))
}

/// The correction region's own durations and pitch.
pub fn measured_targets(
    prepared: &Prepared,
    recordings: &Recordings,
    model: &SpeakerModel,
) -> Result<ProsodyTargets, PipelineError> {
    let durations = prepared.original_durations.clone();
    let pitch = warp_pitch(prepared, recordings, model, &durations)?;
    Ok(ProsodyTargets { durations, pitch })
}

/// Merges pins into the prepared context.
fn with_pins(prepared: &Prepared, pins: &ProsodyConstraints) -> ProsodyConstraints {
    ProsodyConstraints {
        pinned_durations: pins.pinned_durations.clone(),
        pinned_pitch: pins.pinned_pitch.clone(),
        ..prepared.constraints.clone()
    }
}

fn has_pins(pins: &ProsodyConstraints) -> bool {
    !(pins.pinned_durations.is_empty() && pins.pinned_pitch.is_empty())
}

fn obtain_targets(
    prepared: &Prepared,
    model: &SpeakerModel,
    config: &PipelineConfig,
    source: &ProsodySource,
    pins: &ProsodyConstraints,
    seed: u64,
) -> Result<Option<ProsodyTargets>, PipelineError> {
    if prepared.region.is_empty() {
        if has_pins(pins) {
            return Err(PipelineError::stage("constraints", "the edit has no correction region to pin"));
        }
        return Ok(None);
    }
    let constraints = with_pins(prepared, pins);
    let constraint_error = |e: crate::prosody::ProsodyError| match e {
        crate::prosody::ProsodyError::InvalidConstraint(_) => PipelineError::stage("constraints", e),
        other => PipelineError::stage("prosody generation", other),
    };
    let generated = |params, seed| {
        generate_prosody(&prepared.region, &constraints, &model.stats, &model.grid, params, seed).map_err(constraint_error)
    };
    let targets = match source {
        ProsodySource::Splice => return Ok(None),
        ProsodySource::Generated => generated(GenerationParams::DETERMINISTIC, seed)?,
        ProsodySource::Candidate { k: 0 } => generated(GenerationParams::DETERMINISTIC, seed)?,
        ProsodySource::Candidate { k } => generated(GenerationParams::CANDIDATE, seed.wrapping_add(*k as u64))?,
        ProsodySource::External => {
            let command = config
                .external_generator
                .as_ref()
                .ok_or_else(|| PipelineError::Config("no external generator configured".into()))?;
            external_generator(
                command,
                &prepared.region,
                &constraints,
                &model.grid,
                Duration::from_secs_f64(config.external_timeout_seconds),
            )
            .map_err(constraint_error)?
        }
        ProsodySource::Explicit { targets } => {
            if targets.durations.len() != prepared.region.len() {
                return Err(PipelineError::stage(
                    "constraints",
                    format!(
                        "explicit targets have {} durations for {} phonemes",
                        targets.durations.len(),
                        prepared.region.len()
                    ),
                ));
            }
            if targets.pitch.len() != frame_count(&targets.durations) {
                return Err(PipelineError::stage(
                    "constraints",
                    format!("explicit targets have {} pitch frames", targets.pitch.len()),
                ));
            }
            if targets.durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(PipelineError::stage("constraints", "explicit durations must be positive"));
            }
            targets.clone()
        }
    };
    Ok(Some(targets))
}

/// Owned samples plus the span that lands on the output.
struct Piece {
    samples: Vec<f32>,
    nominal: Range<usize>,
    /// Output-relative boundary of each document phoneme, relative to `nominal.start`.
    bounds: Vec<(usize, usize)>,
    provenance: PieceProvenance,
}

fn original_piece(
    plan: &SplicePlan,
    recordings: &Recordings,
    doc: Range<usize>,
    gain: f64,
    pad: usize,
    extend_start: bool,
    extend_end: bool,
) -> Piece {
    let first = phoneme(plan, recordings, doc.start);
    let w = &recordings[first.recording].waveform;
    let fs = w.sample_rate;
    let last = phoneme(plan, recordings, doc.end - 1);
    let start = if extend_start { 0 } else { to_sample(first.interval.start, fs).min(w.len()) };
    let end = if extend_end { w.len() } else { to_sample(last.interval.end, fs).min(w.len()) };
    let lo = start.saturating_sub(pad);
    let hi = (end + pad).min(w.len());
    let slice = &w.samples[lo..hi];
    let samples = if gain == 1.0 {
        slice.to_vec()
    } else {
        slice.iter().map(|&s| (s as f64 * gain) as f32).collect()
    };
    let bounds = doc
        .clone()
        .map(|i| {
            let p = phoneme(plan, recordings, i).interval;
            let clip = |t: f64| to_sample(t, fs).clamp(start, end) - start;
            (clip(p.start), clip(p.end))
        })
        .collect();
    Piece {
        samples,
        nominal: start - lo..end - lo,
        bounds,
        provenance: PieceProvenance {
            recording: first.recording.to_string(),
            source_samples: start..end,
            output_samples: 0..0,
            doc_phonemes: doc,
            gain,
            synthesized: false,
        },
    }
}

struct SynthRun<'a> {
    doc: Range<usize>,
    /// Target durations of `doc`.
    durations: &'a [f64],
    /// Target pitch on the run's own timeline.
    pitch_offset: f64,
    targets: &'a ProsodyTargets,
}

/// Source-voiced frames without a target (padding, or where the target voicing
/// boundary falls elsewhere) take the nearest voiced target; otherwise they would
/// keep the source pitch.
fn fill_voiced_gaps(targets: &[Option<f64>], source_voiced: &[bool]) -> Vec<Option<f64>> {
    let known: Vec<usize> = (0..targets.len()).filter(|&f| targets[f].is_some()).collect();
    if known.is_empty() {
        return targets.to_vec();
    }
    (0..targets.len())
        .map(|f| {
            if targets[f].is_some() || !source_voiced[f] {
                return targets[f];
            }
            let i = known.partition_point(|&k| k < f);
            let nearest = match (i.checked_sub(1).map(|p| known[p]), known.get(i)) {
                (Some(a), Some(&b)) if b - f < f - a => b,
                (Some(a), _) => a,
                (None, Some(&b)) => b,
                (None, None) => unreachable!("known is non-empty"),
            };
            targets[nearest]
        })
        .collect()
}

fn synth_piece(
    plan: &SplicePlan,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    run: SynthRun<'_>,
    gain: f64,
    pad: usize,
    provenance: &mut Provenance,
) -> Result<Piece, PipelineError> {
    let first = phoneme(plan, recordings, run.doc.start);
    let w = &recordings[first.recording].waveform;
    let fs = w.sample_rate;
    let hop = hop_samples(fs);
    let phonemes: Vec<&PhonemeInterval> = run.doc.clone().map(|i| phoneme(plan, recordings, i).interval).collect();
    let starts: Vec<usize> = phonemes.iter().map(|p| to_sample(p.start, fs).min(w.len())).collect();
    let s0 = starts[0];
    let s1 = to_sample(phonemes[phonemes.len() - 1].end, fs).min(w.len());
    let region = s0.saturating_sub(pad)..(s1 + pad).min(w.len());
    let grid = FrameGrid::for_region(&region, fs);

    // Per-frame rate: sample-weighted average of the phoneme ratios it overlaps.
    let ratio = |j: usize| (run.durations[j] / phonemes[j].duration()).clamp(RATE_MIN, RATE_MAX);
    let owner = |s: usize| -> Option<usize> {
        if s < s0 || s >= s1 {
            return None;
        }
        Some(starts.partition_point(|&b| b <= s) - 1)
    };
    let ratios: Vec<f64> = (0..grid.frame_count)
        .map(|f| {
            let span = grid.frame_span(f);
            let span = span.start..span.end.min(region.end);
            let mut acc = 0.0;
            let mut s = span.start;
            while s < span.end {
                let (r, next) = match owner(s) {
                    None if s < s0 => (1.0, s0.min(span.end)),
                    None => (1.0, span.end),
                    Some(j) => (ratio(j), starts.get(j + 1).copied().unwrap_or(s1).min(span.end)),
                };
                acc += r * (next - s) as f64;
                s = next;
            }
            acc / span.len().max(1) as f64
        })
        .collect();
    let rate = RateMap { ratios };
    let warp = TimeWarp::new(&rate, region.len(), hop);
    let origin = warp.map((s0 - region.start) as f64);
    let targets: Vec<Option<f64>> = (0..grid.frame_count)
        .map(|f| {
            let centre = region.start + f * hop + hop / 2;
            owner(centre)?;
            let t = run.pitch_offset + (warp.map((centre - region.start) as f64) - origin) / fs as f64;
            let frame = ((t / crate::audio::HOP_SECONDS).floor().max(0.0) as usize).min(run.targets.pitch.len().checked_sub(1)?);
            run.targets.pitch.f0[frame].map(|v| v.clamp(F0_MIN, F0_MAX))
        })
        .collect();
    let contour = model.contour(first.recording)?;
    let analysis = PitchContour::new(
        (0..grid.frame_count)
            .map(|f| sample_contour(contour, (region.start + f * hop + hop / 2) as f64 / fs as f64))
            .collect(),
    );
    let shift = ShiftMap {
        targets: fill_voiced_gaps(&targets, &analysis.voiced()),
    };
    let epochs = detect_epochs(w, region.clone(), &analysis).map_err(|e| PipelineError::stage("psola", e))?;
    let mut out = synthesize(w, region.clone(), &epochs, &shift, &rate).map_err(|e| PipelineError::stage("psola", e))?;
    provenance.synthesis_stages += 1;

    if config.postprocess.is_some() {
        provenance.hook_runs += 1;
        match run_postprocess_hook(&out, config.postprocess.as_ref()) {
            Ok(mut processed) => {
                processed.samples.resize(out.len(), 0.0);
                out = processed;
            }
            Err(e) if config.postprocess_fallback => {
                log::warn!("postprocess hook failed, keeping unprocessed audio: {e}");
                provenance.hook_fallbacks += 1;
            }
            Err(e) => return Err(PipelineError::stage("postprocess", e)),
        }
    }
    if gain != 1.0 {
        out = out.scaled(gain);
    }

    let at = |s: usize| warp.map((s - region.start) as f64).round() as usize;
    let nominal = at(s0)..at(s1).min(out.len());
    let mut bounds = Vec::with_capacity(phonemes.len());
    for j in 0..phonemes.len() {
        let a = at(starts[j]).clamp(nominal.start, nominal.end) - nominal.start;
        let b = if j + 1 < phonemes.len() { at(starts[j + 1]) } else { nominal.end };
        bounds.push((a, b.clamp(nominal.start, nominal.end) - nominal.start));
    }
    Ok(Piece {
        samples: out.samples,
        nominal,
        bounds,
        provenance: PieceProvenance {
            recording: first.recording.to_string(),
            source_samples: s0..s1,
            output_samples: 0..0,
            doc_phonemes: run.doc,
            gain,
            synthesized: true,
        },
    })
}

/// Steps 3 to 8: targets, maps, PSOLA, hook, splice and re-timed alignment.
pub fn render(
    prepared: &Prepared,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    source: &ProsodySource,
    pins: &ProsodyConstraints,
    seed: u64,
) -> Result<EditResult, PipelineError> {
    config.validate()?;
    let plan = &prepared.plan;
    let targets = obtain_targets(prepared, model, config, source, pins, seed)?;
    let fs = recordings[&plan.destination].waveform.sample_rate;
    let overlap = to_sample(plan.crossfade_seconds, fs);
    let pad = overlap + hop_samples(fs);

    let mut provenance = Provenance {
        loudness: prepared.loudness.clone(),
        ..Default::default()
    };
    let mut pieces: Vec<Piece> = Vec::new();
    let n_doc = plan.phonemes.len();
    let last_segment = plan.segments.len() - 1;
    for (k, s) in plan.segments.iter().enumerate() {
        let recording_len = recordings[&s.recording].transcript.phonemes.len();
        // Split the segment where the correction region begins and ends.
        let mut cuts = vec![s.doc_phonemes.start, s.doc_phonemes.end];
        if targets.is_some() {
            for b in [plan.correction.start, plan.correction.end] {
                if s.doc_phonemes.start < b && b < s.doc_phonemes.end {
                    cuts.push(b);
                }
            }
        }
        cuts.sort_unstable();
        for run in cuts.windows(2).map(|w| w[0]..w[1]) {
            let corrected = targets.is_some() && plan.correction.contains(&run.start);
            let piece = match (&targets, corrected) {
                (Some(t), true) => {
                    let offset: f64 = t.durations[..run.start - plan.correction.start].iter().sum();
                    let durations = &t.durations[run.start - plan.correction.start..run.end - plan.correction.start];
                    let run = SynthRun {
                        doc: run,
                        durations,
                        pitch_offset: offset,
                        targets: t,
                    };
                    synth_piece(plan, recordings, model, config, run, s.gain, pad, &mut provenance)?
                }
                _ => {
                    let source_first = s.source_phonemes.start + (run.start - s.doc_phonemes.start);
                    let source_last = s.source_phonemes.start + (run.end - s.doc_phonemes.start);
                    let extend_start = k == 0 && run.start == 0 && source_first == 0;
                    let extend_end = k == last_segment && run.end == n_doc && source_last == recording_len;
                    original_piece(plan, recordings, run, s.gain, pad, extend_start, extend_end)
                }
            };
            pieces.push(piece);
        }
    }

    let splice_pieces: Vec<SplicePiece<'_>> = pieces
        .iter()
        .map(|p| SplicePiece {
            samples: &p.samples,
            nominal: p.nominal.clone(),
        })
        .collect();
    let (waveform, zones) = splice(&splice_pieces, overlap, fs);
    provenance.crossfades = zones;

    let mut intervals = Vec::with_capacity(n_doc);
    let mut offset = 0usize;
    for p in &mut pieces {
        for (i, &(a, b)) in p.provenance.doc_phonemes.clone().zip(&p.bounds) {
            if b <= a {
                return Err(PipelineError::stage(
                    "alignment",
                    format!("phoneme {i} collapsed to zero length in the output"),
                ));
            }
            let symbol = phoneme(plan, recordings, i).interval.symbol.clone();
            intervals.push(PhonemeInterval::new(
                symbol,
                (offset + a) as f64 / fs as f64,
                (offset + b) as f64 / fs as f64,
            ));
        }
        p.provenance.output_samples = offset..offset + p.nominal.len();
        offset += p.nominal.len();
    }
    provenance.correction_output = if plan.correction.is_empty() {
        0..0
    } else {
        let a = intervals[plan.correction.start].start;
        let b = intervals[plan.correction.end - 1].end;
        to_sample(a, fs)..to_sample(b, fs)
    };
    provenance.pieces = pieces.into_iter().map(|p| p.provenance).collect();
    let words = plan
        .words
        .iter()
        .map(|w| WordInterval {
            text: w.text.clone(),
            phonemes: w.phonemes.clone(),
        })
        .collect();
    let transcript = if plan.is_noop() && waveform == recordings[&plan.destination].waveform {
        recordings[&plan.destination].transcript.clone()
    } else {
        AlignedTranscript::new(waveform.duration_seconds(), words, intervals)
            .map_err(|e| PipelineError::stage("alignment", e))?
    };
    Ok(EditResult {
        waveform,
        transcript,
        targets,
        source: source.clone(),
        pins: pins.clone(),
        provenance,
        seed,
        prepared: prepared.clone(),
    })
}

/// Plan, prepare and render in one call.
pub fn execute(
    plan: &SplicePlan,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    source: &ProsodySource,
    seed: u64,
) -> Result<EditResult, PipelineError> {
    let prepared = prepare(plan, recordings, model, config)?;
    render(&prepared, recordings, model, config, source, &ProsodyConstraints::default(), seed)
}

/// Re-renders `prev` with new pins, keeping its loudness and context analysis.
/// Splice and explicit sources have nothing to regenerate, so pins switch them
/// to the built-in generator.
pub fn regenerate_with_overrides(
    prev: &EditResult,
    recordings: &Recordings,
    model: &SpeakerModel,
    config: &PipelineConfig,
    pins: &ProsodyConstraints,
    seed: u64,
) -> Result<EditResult, PipelineError> {
    let source = match &prev.source {
        ProsodySource::Splice | ProsodySource::Explicit { .. } if has_pins(pins) => ProsodySource::Generated,
        other => other.clone(),
    };
    render(&prev.prepared, recordings, model, config, &source, pins, seed)
}
