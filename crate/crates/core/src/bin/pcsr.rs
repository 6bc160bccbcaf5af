use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcsr::pipeline::{load_report, summarize, Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(
    name = "pcsr",
    version,
    about = "Multi-frame super-resolution with principal-component patch models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Replaces every configured seed with values derived from this one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render LR sequences and HR goals from the corpus (or import real frames).
    Simulate(Common),
    /// Sample patches and train the principal-component basis.
    TrainBasis(Common),
    /// Register every sequence against its reference frame.
    Register(Common),
    /// Build the step-1 reconstruction and the bicubic baseline.
    Interpolate(Common),
    /// Fit the restoration filter on the training sequences.
    TrainFilter(Common),
    /// Restore the evaluation sequences and write report.json.
    Superresolve(Common),
    /// Compare two images, or every final output against its goal.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "reference")]
        image: Option<PathBuf>,
        #[arg(long, requires = "image")]
        reference: Option<PathBuf>,
    },
    /// Run every stage from simulate to superresolve.
    All(Common),
}

fn configure_threads() {
    let threads = std::env::var("PCSR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (common, stage) = match &cli.command {
        Command::Simulate(c) => (c, Some(Stage::Simulate)),
        Command::TrainBasis(c) => (c, Some(Stage::TrainBasis)),
        Command::Register(c) => (c, Some(Stage::Register)),
        Command::Interpolate(c) => (c, Some(Stage::Interpolate)),
        Command::TrainFilter(c) => (c, Some(Stage::TrainFilter)),
        Command::Superresolve(c) => (c, Some(Stage::Superresolve)),
        Command::Evaluate { common, .. } => (common, Some(Stage::Evaluate)),
        Command::All(c) => (c, None),
    };
    let mut cfg = match PipelineConfig::load(&common.config) {
        Ok(cfg) => cfg.with_seed_override(common.seed),
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    let pipeline = Pipeline::new(cfg);

    if let Command::Evaluate {
        image: Some(image),
        reference: Some(reference),
        ..
    } = &cli.command
    {
        return match pipeline.evaluate_files(image, reference) {
            Ok(q) => {
                println!(
                    "mse {:?}\npsnr {:?}\nmargin {}",
                    q.mse, q.psnr, q.valid_margin
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("stage evaluate failed: {e}");
                ExitCode::from(1)
            }
        };
    }

    let result = match stage {
        Some(Stage::Evaluate) => pipeline
            .evaluate()
            .map(|all| {
                for (name, q) in all {
                    println!("{name}  mse {:?}  psnr {:?}", q.mse, q.psnr);
                }
            })
            .map_err(|source| pcsr::pipeline::StageError {
                stage: Stage::Evaluate,
                source,
            }),
        Some(s) => pipeline.run(s),
        None => pipeline.run_all(),
    };
    match result {
        Ok(()) => {
            if matches!(stage, Some(Stage::Superresolve) | None) {
                if let Ok(report) = load_report(&pipeline.workspace().report()) {
                    print!("{}", summarize(&report));
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
