use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::error;

use styloforge::analysis::GramKind;
use styloforge::experiments::{ExperimentSelector, Source};
use styloforge::generator::ModelKind;
use styloforge::pipeline::{Pipeline, RunConfig, SetName, WORKSPACE_ENV};
use styloforge::Error;

/// Per-author character language models, synthetic corpora and
/// authorship-attribution experiments.
///
/// Exit codes: 0 success, 1 configuration error, 2 missing upstream
/// artifact, 3 runtime or numeric failure.
#[derive(Debug, Parser)]
#[command(name = "styloforge", version)]
struct Cli {
    /// JSON run configuration; unset fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Workspace directory holding all stage outputs.
    #[arg(long, global = true, env = WORKSPACE_ENV)]
    workspace: Option<PathBuf>,

    /// Corpus root laid out as <root>/<author>/<doc>.txt.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Worker threads for per-author and per-cell work.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Nglm,
    Rnnlm,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> ModelKind {
        match m {
            Model::Nglm => ModelKind::Nglm,
            Model::Rnnlm => ModelKind::Rnnlm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grams {
    Char,
    Word,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split every author's documents into alpha and omega sentence pools.
    Split,
    /// Assemble the real alpha and omega document sets.
    BuildDocs,
    /// Train language models on the alpha pools.
    Train {
        model: Model,
        /// Train only this author.
        #[arg(long, conflicts_with = "all")]
        author: Option<String>,
        /// Train every author (the default).
        #[arg(long)]
        all: bool,
    },
    /// Generate the synthetic document set from trained models.
    Generate { model: Model },
    /// Run attribution experiments and write the results table.
    Experiment {
        /// Run the full matrix (the default).
        #[arg(long, conflicts_with = "only")]
        matrix: bool,
        /// Run one experiment, e.g. `a_w`, `abar_w` or `rnnlm:abar_w`.
        #[arg(long)]
        only: Option<ExperimentSelector>,
        /// Sources included in the matrix.
        #[arg(long, value_delimiter = ',', default_value = "real,nglm,rnnlm")]
        sources: Vec<Source>,
    },
    /// Write plot-ready PCA or Jaccard CSVs.
    Analyze {
        #[command(subcommand)]
        analysis: Analysis,
    },
    /// Run split, build-docs, train, generate and experiment in order.
    RunAll,
    /// Print the effective configuration as JSON.
    ShowConfig,
}

#[derive(Debug, Subcommand)]
enum Analysis {
    /// Project n-gram frequency profiles of chunked documents.
    Pca {
        /// Document sets to pool: alpha, omega, nglm, rnnlm.
        #[arg(long, value_delimiter = ',', default_value = "alpha")]
        sets: Vec<SetName>,
        #[arg(long)]
        tag: Option<String>,
    },
    /// Author-by-author Jaccard similarity between two document sets.
    Jaccard {
        /// Exactly two sets: rows then columns.
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        sets: Vec<SetName>,
        #[arg(long, value_enum, default_value = "char")]
        grams: Grams,
        #[arg(long)]
        tag: Option<String>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => 1,
        Error::MissingArtifact { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(workspace) = cli.workspace {
        config.workspace = Some(workspace);
    }
    if let Some(corpus) = cli.corpus {
        config.corpus_root = corpus;
    }
    if let Command::ShowConfig = cli.command {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(());
    }
    let pipeline = Pipeline::new(config)?;
    match cli.command {
        Command::Split => pipeline.split(),
        Command::BuildDocs => pipeline.build_docs(),
        Command::Train { model, author, .. } => pipeline.train(model.into(), author.as_deref()),
        Command::Generate { model } => pipeline.generate(model.into()),
        Command::Experiment { only, sources, .. } => {
            let table = pipeline.experiment(&sources, only)?;
            print!("{}", table.to_csv());
            Ok(())
        }
        Command::Analyze { analysis } => match analysis {
            Analysis::Pca { sets, tag } => {
                let tag = pipeline.analyze_pca(&sets, tag.as_deref())?;
                println!("wrote pca_{tag}.csv");
                Ok(())
            }
            Analysis::Jaccard { sets, grams, tag } => {
                let [a, b] = sets[..] else {
                    return Err(Error::InvalidParameter(format!("jaccard needs exactly two sets, got {}", sets.len())));
                };
                let kind = match grams {
                    Grams::Char => GramKind::Char,
                    Grams::Word => GramKind::Word,
                };
                let matrix = pipeline.analyze_jaccard(a, b, kind, tag.as_deref())?;
                println!(
                    "mean diagonal {:.6}, diagonal statistic {:.6}",
                    matrix.mean_diagonal(),
                    matrix.diagonal_statistic()
                );
                Ok(())
            }
        },
        Command::RunAll => {
            let table = pipeline.run_all()?;
            print!("{}", table.to_csv());
            Ok(())
        }
        Command::ShowConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            error!("{e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
