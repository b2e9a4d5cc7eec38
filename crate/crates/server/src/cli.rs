//! The `speechedit` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use speechedit::audio::save_wav;
use speechedit::eval::{load_manifest, run_harness, Condition, EvalError, DEFAULT_TOP_N};
use speechedit::pipeline::{
    execute, plan_edit, prepare, render, EditResult, EditScript, PipelineConfig, PipelineError, ProsodySource,
    Recording, Recordings, SpeakerModel,
};
use speechedit::prosody::{sample_candidates, ProsodyTargets};
use thiserror::Error;

/// Environment variable naming a pipeline configuration file.
pub const CONFIG_ENV: &str = "SPEECHEDIT_CONFIG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Pipeline(e.to_string())
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline(e) => e.into(),
            EvalError::Manifest(_) | EvalError::UnknownCondition(_) => CliError::Validation(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

fn write_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Pipeline(format!("writing {}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "speechedit", version, about = "Text-based speech editing with context-aware prosody")]
pub struct Cli {
    /// Pipeline configuration JSON (falls back to $SPEECHEDIT_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the pitch contour of a recording as JSON.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Write the contour here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply an edit script and write the edited audio plus a result JSON.
    Edit {
        #[command(flatten)]
        edit: EditArgs,
        /// Render candidate k instead of the deterministic prosody.
        #[arg(long, default_value_t = 0)]
        candidate: usize,
        #[arg(long)]
        out: PathBuf,
        /// Result JSON path; defaults to the output path with a .json extension.
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Write candidate prosody targets as candidate-<k>.json files.
    Candidates {
        #[command(flatten)]
        edit: EditArgs,
        #[arg(long)]
        n: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an edit with explicit prosody targets.
    Render {
        #[command(flatten)]
        edit: EditArgs,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Run the evaluation harness over a corpus manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated conditions; all of them by default.
        #[arg(long, value_delimiter = ',')]
        conditions: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        top_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report directory for report.json and report.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Session store directory.
        #[arg(long, default_value = "sessions")]
        store: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Input {
    /// Recording to edit; its file stem is the recording id.
    #[arg(long = "in")]
    wav: PathBuf,
    /// Alignment JSON for --in.
    #[arg(long)]
    align: PathBuf,
}

#[derive(Args, Debug)]
struct EditArgs {
    #[command(flatten)]
    input: Input,
    /// Extra recording as WAV:ALIGNMENT; its id is the WAV file stem.
    #[arg(long = "source", value_name = "WAV:ALIGNMENT")]
    sources: Vec<String>,
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn recording_id(wav: &Path) -> Result<String, CliError> {
    wav.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Usage(format!("cannot derive a recording id from {}", wav.display())))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(CONFIG_ENV) {
            Some(p) => PathBuf::from(p),
            None => return Ok(PipelineConfig::default()),
        },
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(PipelineConfig::from_json(&text)?)
}

/// Everything an edit-style subcommand needs.
struct Job {
    recordings: Recordings,
    model: SpeakerModel,
    script: EditScript,
    seed: u64,
}

impl Job {
    fn load(args: &EditArgs, config: &PipelineConfig) -> Result<Self, CliError> {
        let mut recordings = Recordings::new();
        let main = recording_id(&args.input.wav)?;
        recordings.insert(main.clone(), Recording::load(&args.input.wav, &args.input.align)?);
        for source in &args.sources {
            let (wav, align) = source
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("--source expects WAV:ALIGNMENT, got {source:?}")))?;
            let id = recording_id(Path::new(wav))?;
            if recordings.insert(id.clone(), Recording::load(wav, align)?).is_some() {
                return Err(CliError::Usage(format!("recording id {id:?} given twice")));
            }
        }
        let text = std::fs::read_to_string(&args.script)
            .map_err(|e| CliError::Validation(format!("{}: {e}", args.script.display())))?;
        let mut script = EditScript::from_json(&text)?;
        script.destination.get_or_insert(main);
        let model = SpeakerModel::analyze(&recordings, config)?;
        Ok(Self {
            recordings,
            model,
            script,
            seed: args.seed.unwrap_or(config.seed),
        })
    }

    fn run(&self, config: &PipelineConfig, source: &ProsodySource) -> Result<EditResult, CliError> {
        let plan = plan_edit(&self.script, &self.recordings, config.context_phonemes, config.crossfade_seconds)?;
        Ok(execute(&plan, &self.recordings, &self.model, config, source, self.seed)?)
    }
}

fn write_result(result: &EditResult, out: &Path, json: Option<&Path>) -> Result<(), CliError> {
    save_wav(&result.waveform, out).map_err(|e| write_error(out, e))?;
    let json = json.map_or_else(|| out.with_extension("json"), Path::to_path_buf);
    let text = serde_json::to_string_pretty(result).map_err(|e| write_error(&json, e))?;
    std::fs::write(&json, text).map_err(|e| write_error(&json, e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Analyze { input, out } => {
            let id = recording_id(&input.wav)?;
            let recordings = Recordings::from([(id.clone(), Recording::load(&input.wav, &input.align)?)]);
            let model = SpeakerModel::analyze(&recordings, &config)?;
            let json = model.contour(&id)?.to_json();
            match out {
                Some(path) => std::fs::write(&path, json).map_err(|e| write_error(&path, e))?,
                None => println!("{json}"),
            }
        }
        Command::Edit {
            edit,
            candidate,
            out,
            result,
        } => {
            let job = Job::load(&edit, &config)?;
            let r = job.run(&config, &ProsodySource::Candidate { k: candidate })?;
            write_result(&r, &out, result.as_deref())?;
        }
        Command::Candidates { edit, n, out } => {
            let job = Job::load(&edit, &config)?;
            let plan = plan_edit(&job.script, &job.recordings, config.context_phonemes, config.crossfade_seconds)?;
            let prepared = prepare(&plan, &job.recordings, &job.model, &config)?;
            if prepared.region.is_empty() {
                return Err(CliError::Validation("the edit has no correction region to generate prosody for".into()));
            }
            let n = n.unwrap_or(config.candidates);
            let list = sample_candidates(
                &prepared.region,
                &prepared.constraints,
                &job.model.stats,
                &job.model.grid,
                n,
                job.seed,
            )
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
            std::fs::create_dir_all(&out).map_err(|e| write_error(&out, e))?;
            for (k, targets) in list.iter().enumerate() {
                let path = out.join(format!("candidate-{k}.json"));
                let text = serde_json::to_string_pretty(targets).map_err(|e| write_error(&path, e))?;
                std::fs::write(&path, text).map_err(|e| write_error(&path, e))?;
            }
        }
        Command::Render {
            edit,
            targets,
            out,
            result,
        } => {
            let job = Job::load(&edit, &config)?;
            let text = std::fs::read_to_string(&targets)
                .map_err(|e| CliError::Validation(format!("{}: {e}", targets.display())))?;
            let targets: ProsodyTargets = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", targets.display())))?;
            let plan = plan_edit(&job.script, &job.recordings, config.context_phonemes, config.crossfade_seconds)?;
            let prepared = prepare(&plan, &job.recordings, &job.model, &config)?;
            let r = render(
                &prepared,
                &job.recordings,
                &job.model,
                &config,
                &ProsodySource::Explicit { targets },
                &Default::default(),
                job.seed,
            )?;
            write_result(&r, &out, result.as_deref())?;
        }
        Command::Eval {
            manifest,
            conditions,
            top_n,
            seed,
            out,
        } => {
            let conditions = if conditions.is_empty() {
                Condition::ALL.to_vec()
            } else {
                conditions.iter().map(|c| c.parse()).collect::<Result<Vec<Condition>, _>>()?
            };
            let recordings = load_manifest(&manifest)?;
            let output = run_harness(&recordings, &config, &conditions, top_n, seed)?;
            output.report.write(&out).map_err(|e| write_error(&out, e))?;
        }
        Command::Serve { addr, store } => {
            let store = crate::session::SessionStore::open(store, config)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Pipeline(e.to_string()))?;
            runtime
                .block_on(crate::http::serve(Arc::new(store), addr))
                .map_err(|e| CliError::Pipeline(format!("server: {e}")))?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; usage problems exit with 2.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("speechedit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
