use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coreg::pipeline::{self, Command, Invocation, PipelineConfig};
use coreg::Error;

#[derive(Parser)]
#[command(name = "coreg", version, about = "Joint registration and segmentation of two image modalities")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic instance: truth, corrupted initial segmentation, images, sidecar.
    Synth(Common),
    /// Register a synth-layout directory (--input).
    Register(Common),
    /// Score register results (--result) against synth truths (--input), pairwise.
    Eval(Common),
    /// Draw the boundary overlay for one register result.
    Render(Common),
    /// Re-run the invocation recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration (sections: synth, model, symmetry, iters, w, detection_tolerance).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Boundary widths for eval, e.g. 1,2,3,4,5.
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<u32>>,
    /// Alternation rounds for register.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long)]
    result: Vec<PathBuf>,
}

fn invocation(command: Command, args: Common) -> Result<Invocation, Error> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(w) = args.w {
        config.w = w;
    }
    if let Some(iters) = args.iters {
        config.iters = iters;
    }
    Ok(Invocation {
        command,
        config,
        inputs: args.input,
        results: args.result,
        out: args.out,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Cmd::Replay { manifest, out } => pipeline::replay(&manifest, out.as_deref()),
        Cmd::Synth(a) => invocation(Command::Synth, a).and_then(|i| pipeline::run(&i)),
        Cmd::Register(a) => invocation(Command::Register, a).and_then(|i| pipeline::run(&i)),
        Cmd::Eval(a) => invocation(Command::Eval, a).and_then(|i| pipeline::run(&i)),
        Cmd::Render(a) => invocation(Command::Render, a).and_then(|i| pipeline::run(&i)),
    };
    match outcome {
        Ok(m) => {
            eprintln!("wrote {} files to {} in {:.2}s", m.outputs.len(), m.invocation.out.display(), m.timing_seconds);
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("coreg: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("coreg: {e}");
            ExitCode::from(3)
        }
    }
}
