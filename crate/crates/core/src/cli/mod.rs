//! Command-line front end: `synth`, `preprocess`, `train`, `evaluate`,
//! `analyze` and `saliency`, all configured by a sectioned `key = value`
//! file plus flags. Each command writes its resolved configuration into its
//! output directory before doing any work.

mod commands;
mod config;

pub use commands::{
    cmd_analyze, cmd_evaluate, cmd_preprocess, cmd_saliency, cmd_synth, cmd_train, evaluate_model, load_meta_base,
    load_run, noise_seed, read_run_predictions, saliency_for_run, write_eval_csv, write_eval_outputs,
    write_resolved, AnalyzeSummary, LoadedModel, LoadedRun, Precision, PreprocessSummary, RunPredictions,
    SynthSummary, TrainKind, TrainSummary,
};
pub use config::{
    fill_synth_defaults, fill_train_defaults, root_seed, synth_kind, train_config, Ini, SynthKind,
};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "microdoppler", version, about = "Complex micro-Doppler representation study")]
pub struct Cli {
    /// Configuration file (`[section]` headers, `key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth {
        /// Recordings per class.
        #[arg(long)]
        samples_per_class: Option<usize>,
        /// Generator family.
        #[arg(long, value_enum)]
        kind: Option<SynthFamily>,
    },
    /// Turn `<class>_<id>.rad` recordings into cached maps and a manifest.
    Preprocess {
        /// Directory of recordings.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train a model and evaluate it on the test subset.
    Train {
        #[command(subcommand)]
        kind: TrainCommand,
    },
    /// Evaluate a trained run on a dataset subset.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        /// Dataset directory; defaults to the one the run was trained on.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_parser = ["train", "val", "test"])]
        subset: Option<String>,
    },
    /// Tables and report over the predictions of several runs.
    Analyze {
        /// Run directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Dataset directory; enables saliency export.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Per-class saliency maps of a trained run.
    Saliency {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthFamily {
    Pendulum,
    PhaseOnly,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preprocessed dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// One encoder and head on one representation format.
    Single {
        #[arg(long)]
        format: Option<String>,
        #[command(flatten)]
        common: TrainArgs,
    },
    /// Five encoders with a shared head, two random domains per step.
    Multi {
        #[command(flatten)]
        common: TrainArgs,
    },
    /// Meta module on a frozen base.
    Meta {
        /// Base run directories: one multi-domain run or five single-domain runs.
        #[arg(long, value_delimiter = ',')]
        base: Vec<PathBuf>,
        #[arg(long, value_parser = ["embeddings", "confidences"])]
        input: Option<String>,
        #[arg(long, value_parser = ["linear", "leaky_relu"])]
        activation: Option<String>,
        #[command(flatten)]
        common: TrainArgs,
    },
}

fn set_path(ini: &mut Ini, key: &str, p: &Option<PathBuf>) {
    if let Some(p) = p {
        ini.set("paths", key, p.display());
    }
}

fn apply_train_args(ini: &mut Ini, a: &TrainArgs) {
    set_path(ini, "data", &a.data);
    if let Some(v) = a.epochs {
        ini.set("train", "epochs", v);
    }
    if let Some(v) = a.lr {
        ini.set("train", "lr", v);
    }
    if let Some(v) = a.batch_size {
        ini.set("train", "batch_size", v);
    }
}

fn require_out(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref()
        .ok_or_else(|| Error::InvalidArgument("--out is required for this command".into()))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut ini = match &cli.config {
        Some(p) => Ini::load(p)?,
        None => Ini::default(),
    };
    if let Some(s) = cli.seed {
        ini.set("run", "seed", s);
    }
    match &cli.command {
        Command::Synth { samples_per_class, kind } => {
            if let Some(k) = kind {
                ini.set("synth", "kind", match k {
                    SynthFamily::Pendulum => "pendulum",
                    SynthFamily::PhaseOnly => "phase-only",
                });
            }
            if let Some(n) = samples_per_class {
                ini.set("synth", "samples_per_class", n);
            }
            let out = require_out(&cli.out)?;
            let s = cmd_synth(&mut ini, out)?;
            println!("wrote {} samples to {}", s.files.len(), out.display());
        }
        Command::Preprocess { input } => {
            set_path(&mut ini, "input", input);
            let out = require_out(&cli.out)?;
            let s = cmd_preprocess(&mut ini, out)?;
            println!(
                "{} samples in manifest: {} maps written, {} up to date",
                s.manifest.len(),
                s.written,
                s.skipped
            );
            if !s.failed.is_empty() {
                for (f, e) in &s.failed {
                    eprintln!("{f}: {e}");
                }
                return Err(Error::InvalidState(format!("{} recordings failed", s.failed.len())));
            }
        }
        Command::Train { kind } => {
            let k = match kind {
                TrainCommand::Single { format, common } => {
                    if let Some(f) = format {
                        ini.set("train", "format", f);
                    }
                    apply_train_args(&mut ini, common);
                    TrainKind::Single
                }
                TrainCommand::Multi { common } => {
                    apply_train_args(&mut ini, common);
                    TrainKind::Multi
                }
                TrainCommand::Meta { base, input, activation, common } => {
                    if !base.is_empty() {
                        let joined: Vec<String> = base.iter().map(|p| p.display().to_string()).collect();
                        ini.set("meta", "base", joined.join(","));
                    }
                    if let Some(v) = input {
                        ini.set("meta", "input", v);
                    }
                    if let Some(v) = activation {
                        ini.set("meta", "activation", v);
                    }
                    apply_train_args(&mut ini, common);
                    TrainKind::Meta
                }
            };
            let out = require_out(&cli.out)?;
            let s = cmd_train(&mut ini, k, out)?;
            for e in &s.evals {
                println!("{:<14} clean {:.3}  0 dB {:.3}", e.representation, e.accuracy_clean, e.accuracy_noisy);
            }
        }
        Command::Evaluate { run, data, subset } => {
            ini.set("paths", "run", run.display());
            set_path(&mut ini, "data", data);
            if let Some(s) = subset {
                ini.set("evaluate", "subset", s);
            }
            let out = cli.out.clone().unwrap_or_else(|| run.join("evaluate"));
            for e in cmd_evaluate(&mut ini, &out)? {
                println!("{:<14} clean {:.3}  0 dB {:.3}", e.representation, e.accuracy_clean, e.accuracy_noisy);
            }
        }
        Command::Analyze { runs, data } => {
            set_path(&mut ini, "data", data);
            let out = require_out(&cli.out)?;
            let s = cmd_analyze(&mut ini, runs, out)?;
            println!("wrote {} files to {}", s.files.len(), out.display());
        }
        Command::Saliency { run, data } => {
            ini.set("paths", "run", run.display());
            set_path(&mut ini, "data", data);
            let out = cli.out.clone().unwrap_or_else(|| run.join("saliency"));
            let files = cmd_saliency(&mut ini, &out)?;
            println!("wrote {} saliency maps to {}", files.len(), out.display());
        }
    }
    Ok(())
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
