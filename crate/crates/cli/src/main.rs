//! `framedrop`: frame construction, erasure-channel simulation, subset
//! spectra and dropout-autoencoder experiments, with CSV/JSON output.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use framedrop::dae::OptimizerKind;
use framedrop::EtfLossVariant;
use serde::Serialize;

use config::{ChannelCommand, ConfigFile, FrameCommand, FrameKind, FrameSource, Resolved, SpectraCommand, TrainCommand, TrainMode};

#[derive(Debug)]
pub enum CliError {
    Core(framedrop::Error),
    Config(String),
    Io(String),
}

impl std::error::Error for CliError {}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
        }
    }
}

impl From<framedrop::Error> for CliError {
    fn from(e: framedrop::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "framedrop", version, about = "Frames, erasure channels and dropout autoencoders")]
struct Cli {
    /// Seed for all randomness [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with parameters (flags take precedence)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a frame and analyze it
    #[command(after_help = "\
OUTPUT:
  frame.csv      first line `m,n`, then m rows of n comma-separated values
  analysis.json  {m, n, coherence, welch_bound, tight_c, equiangularity_spread}
  config.json    resolved parameters and seed")]
    Frame(FrameArgs),
    /// Monte-Carlo erasure-channel errors for LS and unrolled GD decoding
    #[command(after_help = "\
OUTPUT:
  channel.json  {m, n, coherence, mse_least_squares, mse_unrolled_gd, decoder_iters,
                 expected_inverse_trace, predicted_ls_mse}; each estimate is
                 {estimate, std_error, trials, skipped_singular, seed}
  config.json   resolved parameters and seed")]
    Channel(ChannelArgs),
    /// Eigenvalue histogram and trace moments of random subframes
    #[command(after_help = "\
OUTPUT:
  histogram.csv  bin_lo,bin_hi,count
  moments.csv    d,value,std_error,trials  (plus `exhaustive` with --exhaustive)
  config.json    resolved parameters and seed")]
    Spectra(SpectraArgs),
    /// Train the linear dropout autoencoder
    #[command(after_help = "\
OUTPUT:
  trace.csv     step,train_mse,test_mse,cl,coherence,loss (empty cell = not measured)
                online modes and finite mode
  summary.json  online: {mode, batches, initial/final coherence, initial/final test mse}
                finite: {beta, initial_test_mse, initial_coherence, min_test_mse,
                         final_test_mse, final_coherence}
                sweep:  {summaries: [...], etf_mse, etf_coherence}
  sweep.csv     beta,min_test_mse,final_test_mse,final_coherence,etf_mse,etf_coherence
  config.json   resolved parameters and seed")]
    Train(TrainArgs),
}

#[derive(Args, Debug)]
struct FrameSourceArgs {
    #[arg(long, value_enum)]
    kind: Option<FrameKind>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Prime power q = 1 mod 4 for `conference`
    #[arg(long)]
    q: Option<u64>,
    /// Alternating-projection sweeps for `approx-etf`
    #[arg(long)]
    iters: Option<usize>,
    /// Frame CSV for `--kind file`
    #[arg(long)]
    input: Option<PathBuf>,
}

impl FrameSourceArgs {
    fn apply(self, src: &mut FrameSource) {
        set(&mut src.kind, self.kind);
        set(&mut src.m, self.m);
        set(&mut src.n, self.n);
        set(&mut src.q, self.q);
        set(&mut src.iters, self.iters);
        if self.input.is_some() {
            src.input = self.input;
        }
    }
}

#[derive(Args, Debug)]
struct FrameArgs {
    #[command(flatten)]
    source: FrameSourceArgs,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[command(flatten)]
    source: FrameSourceArgs,
    /// Keep probability
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    decoder_iters: Option<usize>,
}

#[derive(Args, Debug)]
struct SpectraArgs {
    #[command(flatten)]
    source: FrameSourceArgs,
    /// Keep probability
    #[arg(long)]
    p: Option<f64>,
    /// Patterns pooled into the histogram
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    moment_trials: Option<usize>,
    /// Add exact moments over all 2^n patterns (n <= 20)
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    mode: Option<TrainMode>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Keep probability of the dropout layer
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    #[arg(long)]
    decoder_iters: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated beta grid for `--mode sweep`
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// ETF-similarity loss: linf, l1 or l2
    #[arg(long)]
    variant: Option<EtfLossVariant>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Batches (online modes) or epochs (finite, sweep)
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    train_set_size: Option<usize>,
    #[arg(long)]
    test_set_size: Option<usize>,
    #[arg(long)]
    test_patterns: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// sgd or adam
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    final_learning_rate: Option<f64>,
    #[arg(long)]
    etf_iters: Option<usize>,
}

impl TrainArgs {
    fn apply(self, cmd: &mut TrainCommand) {
        set(&mut cmd.mode, self.mode);
        set(&mut cmd.m, self.m);
        set(&mut cmd.n, self.n);
        set(&mut cmd.p, self.p);
        set(&mut cmd.sigma_w, self.sigma_w);
        set(&mut cmd.decoder_iters, self.decoder_iters);
        set(&mut cmd.beta, self.beta);
        set(&mut cmd.betas, self.betas);
        set(&mut cmd.variant, self.variant);
        set(&mut cmd.batch_size, self.batch_size);
        set(&mut cmd.steps, self.steps);
        set(&mut cmd.train_set_size, self.train_set_size);
        set(&mut cmd.test_set_size, self.test_set_size);
        set(&mut cmd.test_patterns, self.test_patterns);
        set(&mut cmd.eval_every, self.eval_every);
        set(&mut cmd.optimizer, self.optimizer);
        set(&mut cmd.learning_rate, self.learning_rate);
        if self.final_learning_rate.is_some() {
            cmd.final_learning_rate = self.final_learning_rate;
        }
        set(&mut cmd.etf_iters, self.etf_iters);
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn echo<T: Serialize>(out: &Path, command: &str, seed: u64, params: &T) -> Result<(), CliError> {
    commands::write_json(out, "config.json", &Resolved { command, seed, params })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::empty(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    if let Some(threads) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Frame(args) => {
            let mut cmd: FrameCommand = file.params()?;
            args.source.apply(&mut cmd.source);
            echo(out, "frame", seed, &cmd)?;
            commands::frame(&cmd, seed, out)
        }
        Command::Channel(args) => {
            let mut cmd: ChannelCommand = file.params()?;
            args.source.apply(&mut cmd.source);
            set(&mut cmd.p, args.p);
            set(&mut cmd.sigma_w, args.sigma_w);
            set(&mut cmd.trials, args.trials);
            set(&mut cmd.decoder_iters, args.decoder_iters);
            echo(out, "channel", seed, &cmd)?;
            commands::channel(&cmd, seed, out)
        }
        Command::Spectra(args) => {
            let mut cmd: SpectraCommand = file.params()?;
            args.source.apply(&mut cmd.source);
            set(&mut cmd.p, args.p);
            set(&mut cmd.trials, args.trials);
            set(&mut cmd.bins, args.bins);
            set(&mut cmd.moment_trials, args.moment_trials);
            cmd.exhaustive |= args.exhaustive;
            echo(out, "spectra", seed, &cmd)?;
            commands::spectra(&cmd, seed, out)
        }
        Command::Train(args) => {
            let mut cmd: TrainCommand = file.params()?;
            args.apply(&mut cmd);
            echo(out, "train", seed, &cmd)?;
            commands::train(&cmd, seed, out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
