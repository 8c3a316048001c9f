use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use devcorpus_cli::commands::{self, Failures};
use devcorpus_cli::config::{ConfigError, Overrides, RunConfig};
use devcorpus_cli::report::Reporter;
use devcorpus_core::paramsample::Profile;

#[derive(Parser)]
#[command(name = "devcorpus", version, about = "Develop, split and package RAW-derived JPEG steganalysis corpora")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: config, then $DEVCORPUS_WORKERS, then CPU count).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_parser = commands::profile_of)]
    profile: Option<Profile>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=100))]
    quality: Option<u8>,
    /// Output root (develop/split/verify) or output directory (file verbs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input root holding one subdirectory of CFA files per source.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Emit one JSON object per line instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Develop every catalogued CFA image into JPEG tiles and a manifest.
    Develop,
    /// Hold out the test set, build nested training subsets, report ratios.
    Split,
    /// Print quantisation tables with standardness and estimated quality.
    Inspect { files: Vec<PathBuf> },
    /// Re-encode JPEGs at --quality (default 75).
    Recompress {
        files: Vec<PathBuf>,
        /// Carry non-standard tables to the target instead of replacing them.
        #[arg(long)]
        preserve_nonstandard: bool,
    },
    /// Insecure ±1 flipping of nonzero AC coefficients (pipeline testing only).
    EmbedToy {
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        rate: f64,
    },
    /// Write unrounded decompressions as level-5 MAT files.
    ExportMat { files: Vec<PathBuf> },
    /// Storage needed per format and in total.
    EstimateStorage {
        /// Measure JPEG sizes from a developed output root instead of fixtures.
        #[arg(long)]
        measured_from: Option<PathBuf>,
    },
    /// Check a developed output root against its manifest.
    Verify,
    /// Write a synthetic CFA input tree.
    Fixture {
        /// Comma-separated SOURCE=N pairs.
        #[arg(long, default_value = "ALASKA2=8,BOSS=1,StegoAppDB=2,Wesaturate=1,RAISE=1,Dresden=1")]
        counts: String,
        #[arg(long, default_value_t = 1200)]
        width: usize,
        #[arg(long, default_value_t = 900)]
        height: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<Failures> {
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        profile: cli.profile,
        quality: cli.quality,
        out: cli.out.clone(),
        input: cli.input.clone(),
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let rep = Reporter::new(cli.json);
    let workers = cfg.worker_count();
    match cli.verb {
        Verb::Develop => Ok(commands::cmd_develop(&cfg, &rep)?.failures),
        Verb::Split => commands::cmd_split(&cfg, &rep).map(|_| Vec::new()),
        Verb::Inspect { files } => Ok(commands::cmd_inspect(&files, &rep)),
        Verb::Recompress { files, preserve_nonstandard } => {
            commands::cmd_recompress(&files, cfg.quality, preserve_nonstandard, &cfg.output, workers, &rep)
        }
        Verb::EmbedToy { files, rate } => {
            if !(0.0..=1.0).contains(&rate) {
                return Err(ConfigError(format!("rate {rate} outside [0, 1]")).into());
            }
            commands::cmd_embed_toy(&files, rate, cfg.master_seed, &cfg.output, workers, &rep)
        }
        Verb::ExportMat { files } => commands::cmd_export_mat(&files, &cfg.output, workers, &rep),
        Verb::EstimateStorage { measured_from } => {
            commands::cmd_estimate_storage(&cfg, measured_from.as_deref(), &rep).map(|_| Vec::new())
        }
        Verb::Verify => commands::cmd_verify(&cfg, &rep).map(|_| Vec::new()),
        Verb::Fixture { counts, width, height } => {
            let counts = commands::parse_counts(&counts).map_err(ConfigError)?;
            commands::cmd_fixture(&cfg.output, &counts, width, height, cfg.master_seed, &rep).map(|_| Vec::new())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{} item(s) failed:", failures.len());
            for (item, err) in &failures {
                eprintln!("  {item}: {err}");
            }
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("{e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
