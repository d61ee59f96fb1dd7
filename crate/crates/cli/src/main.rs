use std::path::PathBuf;
use std::process::ExitCode;

use afprobe_core::store::Split;
use clap::{Args, Parser, Subcommand};

mod commands;
mod systems;

/// Articulatory-feature probing of speech representations.
#[derive(Debug, Parser)]
#[command(name = "afprobe", version, arg_required_else_help = true)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "AFPROBE_THREADS")]
    threads: Option<usize>,

    /// Seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 17)]
    seed: u64,

    /// One of error, warn, info, debug, trace. Logs go to stderr.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute spliced 39-dim MFCC feature files from 16-bit PCM mono WAV.
    Mfcc(MfccArgs),
    /// Attach AF labels to feature frames listed in a manifest.
    Label(LabelArgs),
    /// Train one-vs-rest linear probes on a labeled frame set.
    TrainProbe(TrainArgs),
    /// Score a probe on a labeled test set.
    EvalProbe(EvalArgs),
    /// Phone error rate between reference and hypothesis transcripts.
    Per(PerArgs),
    /// Correlate averaged probe F1 with PER across systems.
    Correlate(CorrelateArgs),
    /// Run the objective gradient and property suite.
    LossCheck(LossCheckArgs),
}

#[derive(Debug, Args)]
struct MfccArgs {
    /// A WAV file or a directory of them.
    #[arg(long)]
    wav: PathBuf,
    /// Output directory; each input becomes <stem>.afpr.
    #[arg(long)]
    out: PathBuf,
    /// Odd number of frames to splice (1 disables splicing).
    #[arg(long, default_value_t = 5)]
    context: usize,
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// TSV: utterance_id, feature file, alignment file, split.
    #[arg(long)]
    manifest: PathBuf,
    /// AF map TSV (default: the bundled folded TIMIT map).
    #[arg(long)]
    af_map: Option<PathBuf>,
    /// Comma-separated phones whose frames are omitted; empty for none.
    #[arg(long, default_value = "sil,h#,pau")]
    drop: String,
    /// Only label utterances of this split.
    #[arg(long)]
    split: Option<Split>,
    /// Sample rate the alignment indices refer to.
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    epochs: u32,
    /// Epochs are raised until each binary problem sees this many updates.
    #[arg(long, default_value_t = 1_000_000)]
    min_updates: u64,
    /// Keep at most this many evenly spaced frames per utterance.
    #[arg(long)]
    max_frames_per_utt: Option<usize>,
    /// Visit training frames in stored order every epoch.
    #[arg(long)]
    no_shuffle: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    probe: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// JSON report destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerArgs {
    /// Reference transcripts, "utterance_id<TAB>phones".
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// Comma-separated system files, each naming a probe report and a PER report.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Paired table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LossCheckArgs {
    /// Random batches per gradient check.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
}

/// Bad command-line values detected after parsing; exits like a clap error.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        return 1;
    }
    let internal = err.chain().any(|e| {
        e.downcast_ref::<afprobe_core::Error>()
            .is_some_and(afprobe_core::Error::is_internal)
    });
    if internal {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Mfcc(a) => commands::mfcc(a),
        Command::Label(a) => commands::label(a),
        Command::TrainProbe(a) => commands::train_probe(a, cli.seed),
        Command::EvalProbe(a) => commands::eval_probe(a),
        Command::Per(a) => commands::per(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::LossCheck(a) => commands::loss_check(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
