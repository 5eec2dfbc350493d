//! The `signrec` command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::ctc::{beam_decode, GlossVocabulary};
use crate::cues::{build_cue_sequences, load_landmarks, render_scene_frame, DEFAULT_SKELETON_SIDE};
use crate::dataio::{load_manifest, load_samples, make_batch, InputKind, LoadedSample, SampleInput};
use crate::error::{Error, Result};
use crate::evalkit::{evaluate_model, render_report, EvalReport, ReportFormat};
use crate::models::{build_model, fit, load_checkpoint, save_checkpoint, Architecture, ModelConfig, TrainingLog};
use crate::nncore::{Mode, TrainConfig};
use crate::synthgen::{generate_dataset_with_workers, CorpusSpec};

#[derive(Parser, Debug)]
#[command(name = "signrec", version, about = "Sentence-level sign language recognition with CTC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus (landmarks, frames, manifests, vocabulary).
    Generate {
        /// CorpusSpec JSON; defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Extract cue tensors for every sentence of a manifest into a cache directory.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skeleton image side.
        #[arg(long, default_value_t = DEFAULT_SKELETON_SIDE)]
        side: usize,
    },
    /// Train a model described by a run config; writes model.ckpt and train_log.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decode and score one or more splits.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, required = true)]
        manifest: Vec<PathBuf>,
        #[arg(long, default_value_t = 8)]
        beam: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Decode a single landmark stream to gloss strings.
    Decode {
        #[arg(long)]
        checkpoint: PathBuf,
        landmarks: PathBuf,
        #[arg(long, default_value_t = 8)]
        beam: usize,
    },
    /// Tally search-versus-network faults over a split.
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8)]
        beam: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    McsignCMini,
    RsignCMini,
    RsignCDefault,
}

/// The single JSON file driving `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus directory, relative to the config file.
    pub corpus: PathBuf,
    /// Named architecture; ignored when `model` is given.
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub training: TrainConfig,
    /// Cue cache directory relative to the corpus; defaults to `cues`.
    #[serde(default)]
    pub cue_cache: Option<PathBuf>,
}

impl RunConfig {
    pub fn model_config(&self, vocab_size: usize) -> Result<ModelConfig> {
        let config = match (&self.model, self.preset) {
            (Some(m), _) => m.clone(),
            (None, Some(Preset::McsignCMini)) => ModelConfig::mcsign_c_mini(vocab_size),
            (None, Some(Preset::RsignCMini)) => ModelConfig::rsign_c_mini(vocab_size),
            (None, Some(Preset::RsignCDefault)) => ModelConfig::rsign_c_default(vocab_size),
            (None, None) => return Err(Error::Config("run config needs a preset or a model".into())),
        };
        if config.vocab_size != vocab_size {
            return Err(Error::VocabularyMismatch(format!(
                "model config has {} glosses, corpus vocabulary {}",
                config.vocab_size, vocab_size
            )));
        }
        config.validate()?;
        Ok(config)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// The vocabulary stored next to a manifest.
pub fn vocab_for_manifest(manifest: &Path) -> Result<GlossVocabulary> {
    GlossVocabulary::load(&manifest_dir(manifest).join("vocab.txt"))
}

/// Loads a split into memory in the form `config` consumes.
pub fn load_split(manifest: &Path, vocab: &GlossVocabulary, config: &ModelConfig, cache: Option<&Path>) -> Result<Vec<LoadedSample>> {
    let dataset = load_manifest(manifest, vocab)?;
    load_samples(&dataset, config.input_kind(), config.input_side(), cache)
}

/// Trains from a run config. `base` resolves the relative corpus path.
pub fn train_from_config(run: &RunConfig, base: &Path, out: &Path) -> Result<TrainingLog> {
    let corpus = base.join(&run.corpus);
    let vocab = GlossVocabulary::load(&corpus.join("vocab.txt"))?;
    let config = run.model_config(vocab.len())?;
    let cache = corpus.join(run.cue_cache.clone().unwrap_or_else(|| "cues".into()));
    let cache = (config.input_kind() == InputKind::Cues).then_some(cache.as_path());
    let train = load_split(&corpus.join("train.jsonl"), &vocab, &config, cache)?;
    let dev = load_split(&corpus.join("dev.jsonl"), &vocab, &config, cache)?;
    log::info!("loaded {} train / {} dev sentences", train.len(), dev.len());
    let mut model = build_model::<f32>(&config, run.training.seed)?;
    let outcome = fit(model.as_mut(), &train, &dev, &vocab, &run.training)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_checkpoint(&out.join("model.ckpt"), model.as_ref(), &vocab, outcome.step, &outcome.rng)?;
    let log_path = out.join("train_log.json");
    let text = serde_json::to_string_pretty(&outcome.log).expect("training log serializes") + "\n";
    fs::write(&log_path, text).map_err(|e| Error::io(&log_path, e))?;
    Ok(outcome.log)
}

fn architecture_name(a: Architecture) -> &'static str {
    match a {
        Architecture::RSignC => "RSign-C",
        Architecture::MCSignC => "MCSign-C",
    }
}

fn split_name(manifest: &Path) -> String {
    manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "split".into())
}

/// Evaluates a checkpoint on each manifest.
pub fn evaluate_checkpoint(checkpoint: &Path, manifests: &[PathBuf], beam: usize, workers: usize) -> Result<(Architecture, Vec<EvalReport>)> {
    let mut ckpt = load_checkpoint(checkpoint)?;
    let config = ckpt.model.config().clone();
    let mut reports = Vec::new();
    for manifest in manifests {
        let vocab = vocab_for_manifest(manifest)?;
        if vocab != ckpt.vocabulary {
            return Err(Error::VocabularyMismatch(format!(
                "{} does not match the checkpoint vocabulary",
                manifest.display()
            )));
        }
        let cache = manifest_dir(manifest).join("cues");
        let cache = (config.input_kind() == InputKind::Cues).then_some(cache.as_path());
        let samples = load_split(manifest, &vocab, &config, cache)?;
        reports.push(evaluate_model(ckpt.model.as_mut(), &samples, &vocab, &split_name(manifest), beam, workers)?);
    }
    Ok((config.architecture, reports))
}

/// Decodes one landmark stream; frames or cues are derived on the fly.
pub fn decode_landmarks(checkpoint: &Path, landmarks: &Path, beam: usize) -> Result<Vec<String>> {
    let mut ckpt = load_checkpoint(checkpoint)?;
    let config = ckpt.model.config().clone();
    let frames = load_landmarks(landmarks)?;
    let input = match config.input_kind() {
        InputKind::Cues => SampleInput::Cues(build_cue_sequences(&frames, config.skeleton_side)?),
        InputKind::Frames => SampleInput::Frames(
            frames
                .iter()
                .map(|f| render_scene_frame(f, config.scene_side))
                .collect::<Result<_>>()?,
        ),
    };
    let sample = LoadedSample {
        id: "input".into(),
        input,
        target: Default::default(),
    };
    let batch = make_batch(&[&sample], 0)?;
    let mut rng = rand::SeedableRng::seed_from_u64(0);
    let logits = ckpt.model.forward(&batch, Mode::Infer, &mut rng)?;
    let best = beam_decode(&logits[0], beam)?.into_iter().next().map(|(l, _)| l).unwrap_or_default();
    ckpt.vocabulary.decode(&best)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { spec, out, seed, workers } => {
            let mut spec: CorpusSpec = match spec {
                Some(path) => read_json(&path)?,
                None => CorpusSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let vocab = generate_dataset_with_workers(&spec, &out, workers)?;
            log::info!("wrote corpus with {} glosses to {}", vocab.len(), out.display());
        }
        Command::Extract { manifest, out, side } => {
            let vocab = vocab_for_manifest(&manifest)?;
            let dataset = load_manifest(&manifest, &vocab)?;
            load_samples(&dataset, InputKind::Cues, side, Some(&out))?;
            log::info!("cached cues for {} sentences in {}", dataset.len(), out.display());
        }
        Command::Train { config, out, seed } => {
            let mut run: RunConfig = read_json(&config)?;
            if let Some(seed) = seed {
                run.training.seed = seed;
            }
            let log = train_from_config(&run, &manifest_dir(&config), &out)?;
            log::info!(
                "best dev WER {} at epoch {}",
                log.best_dev_wer.map_or("-".into(), |w| format!("{w:.1}")),
                log.best_epoch
            );
        }
        Command::Evaluate {
            checkpoint,
            manifest,
            beam,
            format,
            out,
            workers,
        } => {
            let (arch, reports) = evaluate_checkpoint(&checkpoint, &manifest, beam, workers)?;
            emit(out.as_deref(), &render_report(&reports, format.into(), architecture_name(arch)))?;
        }
        Command::Decode {
            checkpoint,
            landmarks,
            beam,
        } => {
            let glosses = decode_landmarks(&checkpoint, &landmarks, beam)?;
            emit(None, &(glosses.join(" ") + "\n"))?;
        }
        Command::Diagnose {
            checkpoint,
            manifest,
            beam,
            format,
            out,
            workers,
        } => {
            let (_, reports) = evaluate_checkpoint(&checkpoint, std::slice::from_ref(&manifest), beam, workers)?;
            let r = &reports[0];
            let t = r.tally();
            let text = match format {
                Format::Json => {
                    serde_json::json!({
                        "split": r.split,
                        "beam_size": r.beam_size,
                        "sentences": r.sentences.len(),
                        "correct": t.correct,
                        "network_at_fault": t.network_at_fault,
                        "search_at_fault": t.search_at_fault,
                    })
                    .to_string()
                        + "\n"
                }
                Format::Text => format!(
                    "split {} beam {}\ncorrect {}\nnetwork_at_fault {}\nsearch_at_fault {}\n",
                    r.split, r.beam_size, t.correct, t.network_at_fault, t.search_at_fault
                ),
            };
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
