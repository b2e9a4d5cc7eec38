//! Directory-per-session store.
//!
//! A session directory holds the uploaded recordings as `recordings/<id>.wav` and
//! `recordings/<id>.json`, the session state as `state.json` and the current
//! render as `render.wav`. Sessions are loaded lazily on first use after a
//! restart; the speaker model is recomputed from the recordings.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use speechedit::alignment::{parse_alignment, AlignedTranscript};
use speechedit::audio::{decode_wav, encode_wav};
use speechedit::pipeline::{
    execute, plan_edit, regenerate_with_overrides, render, EditResult, EditScript, PipelineConfig, PipelineError,
    ProsodySource, Recording, Recordings, SpeakerModel,
};
use speechedit::pitch::{track_pitch, PitchContour};
use speechedit::prosody::{ProsodyConstraints, ProsodyTargets};
use thiserror::Error;
use tokio::sync::{Mutex as AsyncMutex, OwnedMutexGuard};

/// A problem with one uploaded file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error("session {0:?} is busy with another request")]
    Busy(String),
    #[error("uploads failed validation")]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    Unprocessable(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("session store: {0}")]
    Storage(String),
}

fn storage(e: impl std::fmt::Display) -> ApiError {
    ApiError::Storage(e.to_string())
}

/// One uploaded recording: WAV bytes plus its alignment document.
#[derive(Clone, Debug)]
pub struct Upload {
    pub id: String,
    pub wav: Vec<u8>,
    pub alignment: String,
}

/// Seed and size of the last candidate request, so a selection re-renders the
/// same candidate the user auditioned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub recordings: Vec<String>,
    pub seed: u64,
    pub script: Option<EditScript>,
    pub result: Option<EditResult>,
    pub candidates: Option<CandidateSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub k: usize,
    pub targets: Option<ProsodyTargets>,
    #[serde(skip)]
    pub preview: Vec<u8>,
}

/// Per-frame display data for the current audio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProsodyView {
    pub recording: Option<String>,
    pub hop: f64,
    pub f0: Vec<Option<f64>>,
    pub voiced: Vec<bool>,
    pub transcript: AlignedTranscript,
    pub targets: Option<ProsodyTargets>,
    /// Correction region as document phoneme indices.
    pub correction: Option<[usize; 2]>,
}

pub struct Session {
    pub id: String,
    dir: PathBuf,
    config: PipelineConfig,
    recordings: Recordings,
    model: SpeakerModel,
    state: SessionState,
    rendered: Option<Vec<u8>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Writes through a temporary file so a crash never leaves a torn file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(storage)?;
    std::fs::rename(&tmp, path).map_err(storage)
}

/// Checks every upload, collecting one diagnostic per failing file.
pub fn validate_uploads(uploads: &[Upload]) -> Result<Recordings, ApiError> {
    if uploads.is_empty() {
        return Err(ApiError::Invalid(vec![Diagnostic {
            file: String::new(),
            message: "a session needs at least one recording".into(),
        }]));
    }
    let mut diagnostics = Vec::new();
    let mut recordings = Recordings::new();
    for u in uploads {
        let mut fail = |file: String, message: String| diagnostics.push(Diagnostic { file, message });
        if !valid_id(&u.id) {
            fail(u.id.clone(), "recording ids use 1 to 64 letters, digits, '-' or '_'".into());
            continue;
        }
        if recordings.contains_key(&u.id) {
            fail(u.id.clone(), "duplicate recording id".into());
            continue;
        }
        let wav = decode_wav(&u.wav).map_err(|e| fail(format!("{}.wav", u.id), e.to_string()));
        let transcript = parse_alignment(&u.alignment).map_err(|e| fail(format!("{}.json", u.id), e.to_string()));
        let (Ok(wav), Ok(transcript)) = (wav, transcript) else { continue };
        match Recording::new(wav, transcript) {
            Ok(r) => {
                recordings.insert(u.id.clone(), r);
            }
            Err(e) => fail(format!("{}.json", u.id), e.to_string()),
        }
    }
    if diagnostics.is_empty() {
        Ok(recordings)
    } else {
        Err(ApiError::Invalid(diagnostics))
    }
}

impl Session {
    fn create(
        id: String,
        dir: PathBuf,
        config: PipelineConfig,
        uploads: &[Upload],
        seed: u64,
    ) -> Result<Self, ApiError> {
        let recordings = validate_uploads(uploads)?;
        let model = SpeakerModel::analyze(&recordings, &config)?;
        let files = dir.join("recordings");
        std::fs::create_dir_all(&files).map_err(storage)?;
        for u in uploads {
            write_atomic(&files.join(format!("{}.wav", u.id)), &u.wav)?;
            write_atomic(&files.join(format!("{}.json", u.id)), u.alignment.as_bytes())?;
        }
        let session = Self {
            id,
            dir,
            config,
            model,
            state: SessionState {
                recordings: recordings.keys().cloned().collect(),
                seed,
                ..Default::default()
            },
            recordings,
            rendered: None,
        };
        session.persist()?;
        Ok(session)
    }

    fn load(id: String, dir: PathBuf, config: PipelineConfig) -> Result<Self, ApiError> {
        let text = std::fs::read_to_string(dir.join("state.json")).map_err(storage)?;
        let state: SessionState = serde_json::from_str(&text).map_err(storage)?;
        let files = dir.join("recordings");
        let mut recordings = Recordings::new();
        for r in &state.recordings {
            let recording = Recording::load(files.join(format!("{r}.wav")), files.join(format!("{r}.json")))?;
            recordings.insert(r.clone(), recording);
        }
        let model = SpeakerModel::analyze(&recordings, &config)?;
        let rendered = match std::fs::read(dir.join("render.wav")) {
            Ok(bytes) => Some(bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(storage(e)),
        };
        let mut state = state;
        if let (Some(result), Some(bytes)) = (state.result.as_mut(), rendered.as_ref()) {
            result.waveform = decode_wav(bytes).map_err(storage)?;
        }
        Ok(Self {
            id,
            dir,
            config,
            recordings,
            model,
            state,
            rendered,
        })
    }

    fn persist(&self) -> Result<(), ApiError> {
        if let Some(bytes) = &self.rendered {
            write_atomic(&self.dir.join("render.wav"), bytes)?;
        }
        let state = serde_json::to_vec_pretty(&self.state).map_err(storage)?;
        write_atomic(&self.dir.join("state.json"), &state)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn recordings(&self) -> &Recordings {
        &self.recordings
    }

    pub fn transcripts(&self) -> BTreeMap<String, AlignedTranscript> {
        self.recordings.iter().map(|(id, r)| (id.clone(), r.transcript.clone())).collect()
    }

    fn result(&self) -> Result<&EditResult, ApiError> {
        self.state
            .result
            .as_ref()
            .ok_or_else(|| ApiError::Unprocessable("no edit has been submitted to this session".into()))
    }

    /// Keeps the PCM16 form of the audio so a reloaded session sees the same samples.
    fn store(&mut self, mut result: EditResult) -> Result<&EditResult, ApiError> {
        let bytes = encode_wav(&result.waveform).map_err(storage)?;
        result.waveform = decode_wav(&bytes).map_err(storage)?;
        self.rendered = Some(bytes);
        self.state.result = Some(result);
        self.persist()?;
        Ok(self.state.result.as_ref().expect("just stored"))
    }

    /// Plans the script and renders the deterministic candidate.
    pub fn submit_edit(&mut self, script: EditScript, seed: Option<u64>) -> Result<&EditResult, ApiError> {
        let seed = seed.unwrap_or(self.state.seed);
        let plan = plan_edit(&script, &self.recordings, self.config.context_phonemes, self.config.crossfade_seconds)?;
        let result = execute(
            &plan,
            &self.recordings,
            &self.model,
            &self.config,
            &ProsodySource::Candidate { k: 0 },
            seed,
        )?;
        self.state.script = Some(script);
        self.state.seed = seed;
        self.state.candidates = None;
        self.store(result)
    }

    fn render_candidate(&self, k: usize, seed: u64) -> Result<EditResult, ApiError> {
        let prev = self.result()?;
        Ok(render(
            &prev.prepared,
            &self.recordings,
            &self.model,
            &self.config,
            &ProsodySource::Candidate { k },
            &prev.pins,
            seed,
        )?)
    }

    /// Renders `n` candidates with full previews. Candidate 0 with the session
    /// seed is the stored deterministic result.
    pub fn candidates(&mut self, n: Option<usize>, seed: Option<u64>) -> Result<Vec<Candidate>, ApiError> {
        let n = n.unwrap_or(self.config.candidates);
        if n == 0 || n > 64 {
            return Err(ApiError::Unprocessable(format!("n must be in 1..=64, got {n}")));
        }
        let seed = seed.unwrap_or(self.state.seed);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let result = self.render_candidate(k, seed)?;
            out.push(Candidate {
                k,
                preview: encode_wav(&result.waveform).map_err(storage)?,
                targets: result.targets,
            });
        }
        self.state.candidates = Some(CandidateSet { n, seed });
        self.persist()?;
        Ok(out)
    }

    pub fn select_candidate(&mut self, k: usize) -> Result<&EditResult, ApiError> {
        let set = self
            .state
            .candidates
            .ok_or_else(|| ApiError::Unprocessable("request candidates before selecting one".into()))?;
        if k >= set.n {
            return Err(ApiError::Unprocessable(format!("candidate {k} out of range, {} were offered", set.n)));
        }
        let result = self.render_candidate(k, set.seed)?;
        self.state.seed = set.seed;
        self.store(result)
    }

    /// Re-renders with pinned durations and pitch; any context in `pins` is ignored.
    pub fn submit_overrides(&mut self, pins: ProsodyConstraints) -> Result<&EditResult, ApiError> {
        let pins = ProsodyConstraints {
            pinned_durations: pins.pinned_durations,
            pinned_pitch: pins.pinned_pitch,
            ..Default::default()
        };
        let prev = self.result()?;
        let result = regenerate_with_overrides(prev, &self.recordings, &self.model, &self.config, &pins, prev.seed)?;
        self.store(result)
    }

    pub fn render(&self) -> Result<Vec<u8>, ApiError> {
        self.rendered
            .clone()
            .ok_or_else(|| ApiError::Unprocessable("nothing has been rendered in this session".into()))
    }

    /// Pitch of the current render, or of a source recording before any edit.
    pub fn prosody(&self, recording: Option<&str>) -> Result<ProsodyView, ApiError> {
        let pitch = |w: &speechedit::audio::Waveform| {
            track_pitch(w, 0..w.len(), &self.config.pitch).map_err(|e| ApiError::Pipeline(PipelineError::Stage {
                stage: "pitch analysis",
                message: e.to_string(),
            }))
        };
        let view = |contour: PitchContour, recording, transcript, targets, correction| ProsodyView {
            recording,
            hop: contour.hop,
            voiced: contour.voiced(),
            f0: contour.f0,
            transcript,
            targets,
            correction,
        };
        match (recording, &self.state.result) {
            (None, Some(result)) => Ok(view(
                pitch(&result.waveform)?,
                None,
                result.transcript.clone(),
                result.targets.clone(),
                Some([result.prepared.plan.correction.start, result.prepared.plan.correction.end]),
            )),
            (id, _) => {
                let id = id.or_else(|| self.state.recordings.first().map(String::as_str)).unwrap_or_default();
                let r = self
                    .recordings
                    .get(id)
                    .ok_or_else(|| ApiError::Unprocessable(format!("unknown recording {id:?}")))?;
                Ok(view(self.model.contour(id)?.clone(), Some(id.to_string()), r.transcript.clone(), None, None))
            }
        }
    }
}

/// Exclusive access to one session for the duration of a request.
pub struct SessionGuard {
    id: String,
    dir: PathBuf,
    config: PipelineConfig,
    slot: OwnedMutexGuard<Option<Session>>,
}

impl SessionGuard {
    /// The session, loading it from disk on first use after a restart.
    pub fn get(&mut self) -> Result<&mut Session, ApiError> {
        if self.slot.is_none() {
            *self.slot = Some(Session::load(self.id.clone(), self.dir.clone(), self.config.clone())?);
        }
        Ok(self.slot.as_mut().expect("loaded"))
    }
}

type Slot = Arc<AsyncMutex<Option<Session>>>;

pub struct SessionStore {
    root: PathBuf,
    config: PipelineConfig,
    slots: Mutex<HashMap<String, Slot>>,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>, config: PipelineConfig) -> Result<Self, ApiError> {
        config.validate()?;
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(storage)?;
        Ok(Self {
            root,
            config,
            slots: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Validates the uploads, analyses them and persists a new session.
    pub fn create(&self, uploads: &[Upload], seed: Option<u64>) -> Result<String, ApiError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.root.join(&id);
        let seed = seed.unwrap_or(self.config.seed);
        let session = Session::create(id.clone(), dir.clone(), self.config.clone(), uploads, seed).inspect_err(|_| {
            let _ = std::fs::remove_dir_all(&dir);
        })?;
        let slot = Arc::new(AsyncMutex::new(Some(session)));
        self.slots.lock().expect("slot map").insert(id.clone(), slot);
        log::info!("created session {id}");
        Ok(id)
    }

    /// Locks a session without waiting; a session already in use is `Busy`.
    pub fn acquire(&self, id: &str) -> Result<SessionGuard, ApiError> {
        let dir = self.root.join(id);
        let slot = {
            let mut slots = self.slots.lock().expect("slot map");
            match slots.get(id) {
                Some(slot) => slot.clone(),
                None if valid_id(id) && dir.join("state.json").is_file() => {
                    slots.entry(id.to_string()).or_default().clone()
                }
                None => return Err(ApiError::NotFound(id.to_string())),
            }
        };
        let slot = slot.try_lock_owned().map_err(|_| ApiError::Busy(id.to_string()))?;
        Ok(SessionGuard {
            id: id.to_string(),
            dir,
            config: self.config.clone(),
            slot,
        })
    }
}
