use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use usaug_cli::manifest::BeamSpec;
use usaug_cli::run::{
    render_inspect, resolve_pipeline, run_bench, run_pair_emit, run_preprocess, write_report,
    RunSummary,
};

/// Deterministic ultrasound image augmentation toolkit.
#[derive(Parser)]
#[command(name = "usaug", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask each image to its field of view and crop to the FOV bounds.
    Preprocess {
        /// Corpus manifest (JSON).
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for cropped images and the updated manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit augmented views per image ({stem}_v0.png, {stem}_v1.png, ...).
    Pair {
        #[arg(long)]
        manifest: PathBuf,
        /// Preset name (byol, augus-o, augus-d, crop-only) or a config file.
        #[arg(long)]
        pipeline: String,
        /// Master seed; overrides the seed stored in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time each transform of a pipeline on one image, single-threaded.
    Bench {
        #[arg(long)]
        pipeline: String,
        /// Image to transform repeatedly.
        #[arg(long)]
        image: PathBuf,
        /// Beam geometry file (JSON).
        #[arg(long)]
        beam: PathBuf,
        /// Timed invocations per transform (after 10 warmup runs).
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print a pipeline's transforms, probabilities, and parameter bounds.
    Inspect {
        #[arg(long)]
        pipeline: String,
    },
}

fn finish(summary: RunSummary) -> ExitCode {
    if summary.skipped == 0 {
        eprintln!("processed {} entries", summary.processed);
        ExitCode::SUCCESS
    } else {
        // Machine-readable error summary on stderr.
        eprintln!("{}", serde_json::to_string(&summary).unwrap());
        ExitCode::FAILURE
    }
}

fn try_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Preprocess { manifest, out } => Ok(finish(run_preprocess(&manifest, &out)?)),
        Command::Pair {
            manifest,
            pipeline,
            seed,
            out,
        } => {
            let mut config = resolve_pipeline(&pipeline)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            Ok(finish(run_pair_emit(&manifest, &config, &out)?))
        }
        Command::Bench {
            pipeline,
            image,
            beam,
            iters,
            report,
        } => {
            let config = resolve_pipeline(&pipeline)?;
            let text = std::fs::read_to_string(&beam)?;
            let spec: BeamSpec = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("malformed beam file {}: {e}", beam.display()))?;
            let result = run_bench(&config, &image, &spec, iters, 10)?;
            for timing in &result.results {
                println!(
                    "{:<5}{:<33}mean {:>9.4} ms  median {:>9.4} ms  std {:>8.4} ms",
                    timing.id, timing.transform, timing.mean_ms, timing.median_ms, timing.std_ms
                );
            }
            if let Some(path) = report {
                write_report(&result, &path)?;
                eprintln!("report written to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { pipeline } => {
            let config = resolve_pipeline(&pipeline)?;
            print!("{}", render_inspect(&config));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", serde_json::json!({ "error": err.to_string() }));
            ExitCode::FAILURE
        }
    }
}
