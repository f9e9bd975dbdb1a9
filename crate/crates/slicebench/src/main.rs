//! `slicebench` command line: run sweeps, re-emit reports, simulate the
//! dilution model, generate noise-trace corpora, and validate datasets.
//!
//! Exit codes: 0 on success, 1 on config/corpus errors, 2 when a run
//! completed but some examples failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use slicebench::config::RunConfig;
use slicebench::dataset::{load_corpus, write_corpus};
use slicebench::pipeline::{run, RunManifest};
use slicebench::report::{render_report, ReportFormat};
use slicebench_core::dilution::{asymptotic_sweep, simulate, DilutionParams};
use slicebench_core::noise::{sweep_noise, to_example, GoldPosition};
use slicebench_core::seeding::derive_seed;

#[derive(Parser)]
#[command(name = "slicebench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a configured run and write manifest, results, and report.
    Run {
        /// Path to a TOML run config.
        config: PathBuf,
    },
    /// Re-emit the per-setting report from a run manifest.
    Report {
        /// Path to a manifest.json written by `run`.
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Closed-form and Monte Carlo sweeps of the capacity model.
    Simulate {
        /// Effective attention capacity T of the baseline reader.
        #[arg(long, default_value_t = 2)]
        capacity: usize,
        /// Selection recall q of the slicer.
        #[arg(long, default_value_t = 0.5)]
        recall: f64,
        /// Probability of reasoning correctly given the gold segment.
        #[arg(long, default_value_t = 1.0)]
        p_correct: f64,
        /// Context lengths N to sweep, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,4,10,100")]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the delimited table to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build noise traces for every example and export them as a corpus.
    GenNoise {
        #[arg(long)]
        corpus: PathBuf,
        /// Noise levels (total segments per trace), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
        levels: Vec<usize>,
        /// Gold positions: first|middle|last|uniform|<index>.
        #[arg(long, value_delimiter = ',', default_value = "middle")]
        positions: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Load and validate a corpus file.
    Validate {
        corpus: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            let output = run(&config)?;
            println!(
                "run complete: {} examples x {} settings, {} errors; artifacts in {}",
                output.manifest.n_examples,
                output.manifest.settings.len(),
                output.manifest.n_errors,
                config.output_dir.display()
            );
            print!(
                "{}",
                render_report(&output.manifest, ReportFormat::Table)
            );
            Ok(if output.manifest.n_errors > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Report {
            manifest,
            format,
            output,
        } => {
            let raw = std::fs::read_to_string(&manifest)?;
            let manifest: RunManifest = serde_json::from_str(&raw)?;
            let rendered = render_report(&manifest, format.into());
            emit(output.as_deref(), &rendered)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            capacity,
            recall,
            p_correct,
            n_values,
            trials,
            seed,
            output,
        } => {
            anyhow::ensure!(trials >= 1, "trials must be at least 1");
            anyhow::ensure!(!n_values.is_empty(), "n_values must be nonempty");
            for &n in &n_values {
                anyhow::ensure!(
                    n >= capacity,
                    "every context length must be at least the capacity ({capacity}); got {n}"
                );
                // Validates capacity and probability ranges too.
                DilutionParams::new(n, capacity, recall, p_correct)
                    .map_err(|e| anyhow::anyhow!(e))?;
            }
            let rows = asymptotic_sweep(capacity, recall, p_correct, &n_values);
            let mut table = String::from("N,T,q,p,baseline,slice_floor,baseline_mc,slice_mc\n");
            for row in rows {
                let params =
                    DilutionParams::new(row.n_segments, capacity, recall, p_correct).unwrap();
                let row_seed = derive_seed(seed, &[b"simulate", &(row.n_segments as u64).to_le_bytes()]);
                let mc = simulate(&params, trials, row_seed);
                table.push_str(&format!(
                    "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                    row.n_segments,
                    capacity,
                    recall,
                    p_correct,
                    row.baseline,
                    row.slice_floor,
                    mc.baseline,
                    mc.slice
                ));
            }
            emit(output.as_deref(), &table)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenNoise {
            corpus,
            levels,
            positions,
            seed,
            output,
        } => {
            anyhow::ensure!(!levels.is_empty(), "levels must be nonempty");
            anyhow::ensure!(levels.iter().all(|&n| n >= 1), "levels must be at least 1");
            let positions = positions
                .iter()
                .map(|raw| raw.parse::<GoldPosition>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow::anyhow!(e))?;
            anyhow::ensure!(!positions.is_empty(), "positions must be nonempty");

            let examples = load_corpus(&corpus)?;
            let mut bundle = Vec::new();
            for (i, ex) in examples.iter().enumerate() {
                let pool: Vec<_> = examples
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .flat_map(|(_, other)| other.documents.iter().cloned())
                    .collect();
                let traces = sweep_noise(ex, &pool, &levels, &positions, seed)?;
                let mut cells = levels
                    .iter()
                    .flat_map(|&level| positions.iter().map(move |&pos| (level, pos)));
                for trace in &traces {
                    let (level, position) = cells.next().expect("one trace per cell");
                    let mut as_example = to_example(trace, ex);
                    as_example.example_id =
                        format!("{}-n{}-{}", ex.example_id, level, String::from(position));
                    bundle.push(as_example);
                }
            }
            write_corpus(&output, &bundle)?;
            println!(
                "wrote {} traces ({} examples x {} settings) to {}",
                bundle.len(),
                examples.len(),
                levels.len() * positions.len(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { corpus } => {
            let examples = load_corpus(&corpus)?;
            println!("{}: {} examples OK", corpus.display(), examples.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit(path: Option<&std::path::Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}
