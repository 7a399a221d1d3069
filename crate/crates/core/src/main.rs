use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vaxsel::experiment::output::{write_csv, write_dispersion};
use vaxsel::experiment::run::build_graph;
use vaxsel::experiment::{
    emit_csv, emit_dispersion, emit_plot_data, run_experiment, sweep_budget, sweep_samples,
    ExperimentConfig,
};
use vaxsel::topology::{enumerate_all, sample};
use vaxsel::{Error, Graph, Result};

#[derive(Parser)]
#[command(name = "vaxsel", version, about = "Vaccination placement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for repetitions
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm on each repetition
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write log-log runtime data here
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Vary the budget on fixed scenarios
    SweepBudget {
        #[command(flatten)]
        common: Common,
        /// Comma-separated budget fractions; defaults to the config's `budgets`
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<f64>,
    },
    /// Vary the topology count on one fixed graph
    SweepSamples {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sample counts; defaults to the config's `sample_counts`
        #[arg(long, value_delimiter = ',')]
        samples: Vec<usize>,
        /// Per-count mean and quartiles; stderr when omitted
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the graph of one repetition
    GenGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        rep: usize,
    },
    /// Sample (or enumerate) live-edge topologies of a graph file
    GenTopologies {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate every topology with its probability instead of sampling
        #[arg(long)]
        enumerate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn write_rows(out: &Option<PathBuf>, rows: &[vaxsel::experiment::ResultRow]) -> Result<()> {
    match out {
        Some(path) => emit_csv(rows, path),
        None => write_csv(rows, std::io::stdout().lock()),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { common, plot } => {
            let config = common.load()?;
            let rows = pool(common.threads)?.install(|| run_experiment(&config))?;
            write_rows(&common.out, &rows)?;
            if let Some(path) = plot {
                emit_plot_data(&rows, path)?;
            }
        }
        Command::SweepBudget { common, budgets } => {
            let config = common.load()?;
            let budgets = if budgets.is_empty() {
                config.budgets.clone()
            } else {
                budgets
            };
            let rows = pool(common.threads)?.install(|| sweep_budget(&config, &budgets))?;
            write_rows(&common.out, &rows)?;
        }
        Command::SweepSamples {
            common,
            samples,
            summary,
        } => {
            let config = common.load()?;
            let counts = if samples.is_empty() {
                config.sample_counts.clone()
            } else {
                samples
            };
            let (rows, stats) = pool(common.threads)?.install(|| sweep_samples(&config, &counts))?;
            write_rows(&common.out, &rows)?;
            match summary {
                Some(path) => emit_dispersion(&stats, path)?,
                None => write_dispersion(&stats, std::io::stderr().lock())?,
            }
        }
        Command::GenGraph { common, rep } => {
            let config = common.load()?;
            let graph = build_graph(&config, rep)?;
            write_text(&common.out, &graph.to_text())?;
        }
        Command::GenTopologies {
            graph,
            samples,
            seed,
            enumerate,
            out,
        } => {
            let g = Graph::read_file(&graph)?;
            let set = if enumerate {
                enumerate_all(&g)?
            } else {
                sample(&g, samples, seed)?
            };
            write_text(&out, &set.to_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vaxsel: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}
