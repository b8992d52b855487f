use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chaosfs::analysis::format_speedup;
use chaosfs::engine::Variant;
use chaosfs_cli::commands::{cmd_bench, cmd_compare, cmd_run, cmd_synth, sidecar_path};
use chaosfs_cli::{CliError, ExperimentConfig, SyntheticSpec};

#[derive(Parser)]
#[command(name = "chaosfs", version, about = "Island-model chaotic BDE feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads per run.
    #[arg(long)]
    threads: Option<usize>,
    /// Runs in the battery.
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// bde, cbde-lm or cbde-tm.
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a battery of seeded runs and write one report per run.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Summarize battery directories and t-test every pair.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
    /// Time the first run of a battery at several thread counts.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated; must include 1.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        thread_counts: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate a synthetic CSV dataset with a sidecar of informative indices.
    Synth {
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        features: usize,
        #[arg(long)]
        informative: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &PathBuf, o: Overrides) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(out) = o.out {
        config.output = out;
    }
    if o.threads.is_some() {
        config.threads = o.threads;
    }
    if let Some(runs) = o.runs {
        config.runs = runs;
    }
    if let Some(seed) = o.seed {
        config.base_seed = seed;
    }
    if let Some(variant) = o.variant {
        config.variant = variant;
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, overrides } => {
            let config = load(&config, overrides)?;
            let outcome = cmd_run(&config)?;
            for (r, report) in outcome.reports.iter().enumerate() {
                let best = report.best_member().expect("non-empty population");
                println!(
                    "run {r}: fitness {:.4}, {} features, test AUC {:.4}, {:.2}s",
                    best.fitness,
                    best.cardinality(),
                    best.test_auc,
                    report.timings.total
                );
            }
            let s = &outcome.summary;
            println!(
                "{}: avg cardinality {:.2}, mean test AUC {:.4}; reports in {}",
                s.variant.model_name(),
                s.avg_cardinality,
                s.mean_auc,
                config.output.display()
            );
        }
        Command::Compare { dirs, out } => {
            let table = cmd_compare(&dirs, &out)?;
            for s in &table.summaries {
                println!("{}: avg cardinality {:.2}, mean test AUC {:.4}", s.variant.model_name(), s.avg_cardinality, s.mean_auc);
            }
            for c in &table.comparisons {
                println!(
                    "{} vs {}: t = {:.2}, p = {:.3e}{}",
                    c.a.model_name(),
                    c.b.model_name(),
                    c.t,
                    c.p,
                    if c.significant { " (significant)" } else { "" }
                );
            }
            println!("tables in {}", out.display());
        }
        Command::Bench {
            config,
            thread_counts,
            mut overrides,
        } => {
            let out = overrides.out.take();
            let config = load(&config, overrides)?;
            let out = out.unwrap_or_else(|| config.output.clone());
            for row in cmd_bench(&config, &thread_counts, &out)? {
                println!("{} threads: {:.2}s, speedup {}", row.threads, row.seconds, format_speedup(row.speedup));
            }
        }
        Command::Synth {
            samples,
            features,
            informative,
            noise,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                n_samples: samples,
                n_features: features,
                n_informative: informative,
                noise,
                seed,
            };
            let sidecar = cmd_synth(&spec, &out)?;
            println!(
                "wrote {} and {} (informative: {:?})",
                out.display(),
                sidecar_path(&out).display(),
                sidecar.informative
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chaosfs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
