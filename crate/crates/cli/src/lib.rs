//! Command-line front end: synthetic benchmarks, full runs on WAV input, and
//! analysis of the learned transforms.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use tlnmf::analysis::DEFAULT_SELECTED_ATOMS;
use tlnmf::driver::TransformInit;

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "tlnmf", version, about = "Transform-learning NMF experiments")]
pub struct Cli {
    /// Worker threads for elementwise kernels; 1 gives fully serial runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover a known transform from a perturbed start.
    SynthBench(SynthBenchArgs),
    /// Full TL-NMF on a WAV file.
    Run(RunArgs),
    /// Energy profiles of a run, and atom matching between two runs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SynthBenchArgs {
    /// Frame lengths to sweep (comma separated).
    #[arg(long = "m", value_delimiter = ',', default_value = "10,100,500")]
    pub dims: Vec<usize>,
    #[arg(long = "n", default_value_t = 1000)]
    pub frames: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub perturbation: f64,
    /// Algorithms to compare (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "quasi-newton,projected-gradient")]
    pub algorithm: Vec<String>,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synth-bench")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub input: PathBuf,
    /// TOML file with [tlnmf] and [framing] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Outer iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub inner_tl_iters: Option<usize>,
    #[arg(long, value_parser = parse_init)]
    pub init: Option<TransformInit>,
    #[arg(long)]
    pub frame_ms: Option<f64>,
    #[arg(long)]
    pub frame_samples: Option<usize>,
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub run_dir: PathBuf,
    pub second_run_dir: Option<PathBuf>,
    /// Defaults to the first run directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Atoms selected per run for matching.
    #[arg(long, default_value_t = DEFAULT_SELECTED_ATOMS)]
    pub count: usize,
    /// Seed of the random orthogonal reference transform.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_init(s: &str) -> Result<TransformInit, String> {
    match s {
        "random" => Ok(TransformInit::Random),
        "dct" => Ok(TransformInit::Dct),
        other => Err(format!("unknown init '{other}' (expected random or dct)")),
    }
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            algorithm: self.algorithm.clone(),
            iters: self.iters,
            rank: self.rank,
            lambda: self.lambda,
            inner_tl_iters: self.inner_tl_iters,
            init: self.init,
            frame_ms: self.frame_ms,
            frame_samples: self.frame_samples,
            overlap: self.overlap,
            window: self.window.clone(),
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::SynthBench(a) => commands::synth_bench(&commands::SynthBench {
            dims: a.dims,
            frames: a.frames,
            perturbation: a.perturbation,
            algorithms: a.algorithm,
            iters: a.iters,
            seed: a.seed,
            out_dir: a.out_dir,
            threads: cli.threads,
        }),
        Command::Run(a) => commands::run(&commands::Run {
            overrides: a.overrides(),
            input: a.input,
            config: a.config,
            out_dir: a.out_dir,
            threads: cli.threads,
        }),
        Command::Analyze(a) => commands::analyze(&commands::Analyze {
            run_dir: a.run_dir,
            second_run_dir: a.second_run_dir,
            out_dir: a.out_dir,
            count: a.count,
            seed: a.seed,
            threads: cli.threads,
        }),
    }
}
