use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use topictrace::app::{self, run_pipeline, write_atomic, Run, RunConfig, Stage};
use topictrace::corpus::fetch::{default_cache_dir, fetch_records, FetchRequest};
use topictrace::corpus::write_archive;
use topictrace::graph::{Direction, EventKind, TopicNode};
use topictrace::synth::Preset;
use topictrace::{Error, Result};

const DEFAULT_ENDPOINT: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";

#[derive(Parser)]
#[command(
    name = "topictrace",
    version,
    about = "Track topic emergence, splits and merges across time"
)]
struct Cli {
    /// Run configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Concurrent epoch fits; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch records into an archive (with --query), then build the corpus stage.
    Ingest {
        #[arg(long)]
        query: Option<String>,
        #[arg(long, requires = "query")]
        from: Option<i32>,
        #[arg(long, requires = "query")]
        to: Option<i32>,
        #[arg(long, default_value = DEFAULT_ENDPOINT)]
        endpoint: String,
        /// Archive to write; defaults to the configured archive.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Run the corpus and epoch-fitting stages.
    Fit,
    /// Run every stage through the similarity graph and events.
    #[command(alias = "run")]
    Graph,
    /// Print the event report, optionally for one kind.
    Events {
        #[arg(long)]
        kind: Option<EventKind>,
    },
    /// Topic giving the query terms the most probability.
    FindTopic {
        /// Comma-separated terms.
        #[arg(long, value_delimiter = ',', required = true)]
        terms: Vec<String>,
        #[arg(long)]
        epoch: Option<usize>,
    },
    /// Export the lineage sub-graph around a node.
    Trace {
        /// `<epoch>:<topic_id>`
        #[arg(long)]
        node: TopicNode,
        #[arg(long, default_value = "backward")]
        direction: Direction,
        #[arg(long, default_value_t = usize::MAX)]
        depth: usize,
        /// Write the export here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the topics of one epoch by mass.
    Topics {
        #[arg(long)]
        epoch: usize,
    },
    /// Run the pipeline on a synthetic corpus with planted dynamics.
    Synth {
        /// split, merge, emergence or disjoint:<n>
        #[arg(long, default_value = "split")]
        preset: Preset,
        /// Also write the generative spec here.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Summarize a completed run.
    Report,
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|d| d.join(p))
            .unwrap_or_else(|_| p.to_path_buf())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = absolute(out);
    }
    Ok(config)
}

fn run_dir(cli: &Cli) -> Result<PathBuf> {
    match (&cli.out, &cli.config) {
        (Some(out), _) => Ok(out.clone()),
        (None, Some(_)) => Ok(load_config(cli)?.output_path()),
        (None, None) => Ok(RunConfig::default().output_dir),
    }
}

fn print_outcomes(outcomes: &[app::StageOutcome], dir: &Path) {
    for o in outcomes {
        let state = if o.skipped { "up to date" } else { "done" };
        eprintln!("{:<8}{state}", o.stage.name());
    }
    eprintln!("run directory: {}", dir.display());
}

fn pipeline(config: &RunConfig, until: Stage, jobs: usize) -> Result<()> {
    let outcomes = run_pipeline(config, until, jobs)?;
    print_outcomes(&outcomes, &config.output_path());
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest {
            query,
            from,
            to,
            endpoint,
            archive,
        } => {
            let mut config = load_config(cli)?;
            if let Some(query) = query {
                // Reject bad settings before spending time on the network.
                RunConfig {
                    archive: Some(PathBuf::from("-")),
                    synthetic_spec: None,
                    ..config.clone()
                }
                .validate()?;
                let (Some(from), Some(to)) = (from, to) else {
                    return Err(Error::config("from", "--query needs --from and --to"));
                };
                let target = archive
                    .clone()
                    .map(|a| absolute(&a))
                    .or_else(|| config.archive.as_ref().map(|a| config.resolve(a)))
                    .unwrap_or_else(|| config.output_path().join("archive.jsonl"));
                let mut request = FetchRequest::new(query, (*from, *to), endpoint);
                request.cache_dir = Some(default_cache_dir(&config.output_path()));
                let records = fetch_records(&request)?;
                write_archive(&target, &records)?;
                eprintln!("fetched {} records into {}", records.len(), target.display());
                config.archive = Some(target);
                config.synthetic_spec = None;
            }
            config.validate()?;
            pipeline(&config, Stage::Corpus, cli.jobs)
        }
        Command::Fit => pipeline(&load_config(cli)?, Stage::Epochs, cli.jobs),
        Command::Graph => pipeline(&load_config(cli)?, Stage::Graph, cli.jobs),
        Command::Synth { preset, spec_out } => {
            let mut config = match &cli.config {
                Some(_) => load_config(cli)?,
                None => RunConfig {
                    energy_fraction: 1.0,
                    ..load_config(cli)?
                },
            };
            let run = config.output_path();
            let spec = preset.spec(config.master_seed);
            let spec_path = spec_out
                .clone()
                .map(|p| absolute(&p))
                .unwrap_or_else(|| run.join("synthetic_spec.toml"));
            write_atomic(&spec_path, spec.to_toml().as_bytes())?;
            config.archive = None;
            config.synthetic_spec = Some(spec_path);
            pipeline(&config, Stage::Graph, cli.jobs)?;
            print!("{}", app::run_report(&Run::open(&run)?)?);
            Ok(())
        }
        Command::Events { kind } => {
            print!("{}", app::events_report(&Run::open(&run_dir(cli)?)?, *kind)?);
            Ok(())
        }
        Command::FindTopic { terms, epoch } => {
            print!(
                "{}",
                app::find_topic_report(&Run::open(&run_dir(cli)?)?, terms, *epoch)?
            );
            Ok(())
        }
        Command::Trace {
            node,
            direction,
            depth,
            output,
        } => {
            let export = app::trace_export(&Run::open(&run_dir(cli)?)?, *node, *direction, *depth)?;
            match output {
                Some(path) => write_atomic(path, export.as_bytes()),
                None => {
                    println!("{export}");
                    Ok(())
                }
            }
        }
        Command::Topics { epoch } => {
            print!("{}", app::topics_report(&Run::open(&run_dir(cli)?)?, *epoch)?);
            Ok(())
        }
        Command::Report => {
            print!("{}", app::run_report(&Run::open(&run_dir(cli)?)?)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
