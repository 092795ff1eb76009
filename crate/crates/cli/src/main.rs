use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use codegraph_core::graphgen::{sample_dataset, write_dataset, Split};
use codegraph_core::harness::{
    aggregate, overall_accuracy, read_records, render_csv, render_report, run_experiment, Axis, ExperimentConfig,
    HarnessError, ModelResponder,
};
use codegraph_core::{gold_check, CacheMode, EncodingKind, GeneratorKind, SandboxLimits, TaskKind};

#[derive(Parser)]
#[command(name = "codegraph", version, about = "Graph reasoning benchmark: datasets, prompting, sandboxed execution, reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs and write them as line-delimited JSON.
    GenDataset(GenDatasetArgs),
    /// Run an experiment described by a TOML config.
    Run(RunArgs),
    /// Aggregate a records file into a report.
    Report(ReportArgs),
    /// Run the sample programs through the execution pipeline on fresh graphs.
    GoldCheck(GoldCheckArgs),
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Generator families, comma-separated, or `all`.
    #[arg(long, default_value = "er")]
    family: String,
    /// Graphs per family.
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "test")]
    split: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the dataset seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Serve responses only from the cache.
    #[arg(long, conflicts_with = "record")]
    replay: bool,
    /// Call the model on cache misses and store the responses.
    #[arg(long)]
    record: bool,
    #[arg(long)]
    parallel: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A records.jsonl file.
    #[arg(long)]
    from: PathBuf,
    /// `encoding` or `generator`.
    #[arg(long, default_value = "encoding")]
    axis: String,
    /// Print CSV instead of the aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct GoldCheckArgs {
    /// Tasks, comma-separated, or `all`.
    #[arg(long, default_value = "all")]
    tasks: String,
    /// Encodings, comma-separated, or `all`.
    #[arg(long, default_value = "all")]
    encodings: String,
    /// Generator families, comma-separated, or `all`.
    #[arg(long, default_value = "er")]
    generators: String,
    /// Test graphs per family.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    parallel: usize,
    /// Report columns: `encoding` or `generator`.
    #[arg(long, default_value = "encoding")]
    axis: String,
}

fn config_err(e: impl Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn parse_list<T: FromStr + Copy>(text: &str, all: &[T]) -> Result<Vec<T>, HarnessError>
where
    T::Err: Display,
{
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(config_err))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(config_err("empty list")) } else { Ok(v) })
}

fn gen_dataset(args: GenDatasetArgs) -> Result<(), HarnessError> {
    let families = parse_list(&args.family, &GeneratorKind::ALL)?;
    let split: Split = args.split.parse().map_err(config_err)?;
    if args.count == 0 {
        return Err(config_err("--count must be at least 1"));
    }
    let mut graphs = Vec::new();
    for family in families {
        graphs.extend(sample_dataset(family, args.count, split, args.seed).map_err(|e| HarnessError::Runtime(e.to_string()))?);
    }
    let result = match &args.out {
        Some(path) => write_dataset(&graphs, std::fs::File::create(path)?),
        None => write_dataset(&graphs, std::io::stdout().lock()),
    };
    result.map_err(|e| HarnessError::Runtime(e.to_string()))?;
    eprintln!("wrote {} graph(s)", graphs.len());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.dataset.seed = seed;
    }
    if args.replay {
        config.cache_mode = CacheMode::Replay;
    }
    if args.record {
        config.cache_mode = CacheMode::Record;
    }
    if let Some(p) = args.parallel {
        config.parallel = p;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    config.validate()?;
    let responder = ModelResponder::from_config(&config)?;
    let out = run_experiment(&config, &responder)?;
    print!("{}", std::fs::read_to_string(&out.table_path)?);
    println!("results: {}", config.output_dir.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), HarnessError> {
    let axis: Axis = args.axis.parse().map_err(config_err)?;
    let records = read_records(&args.from)?;
    if args.csv {
        print!("{}", render_csv(&aggregate(&records, axis)));
    } else {
        print!("{}", render_report(&records, axis));
    }
    Ok(())
}

fn gold(args: GoldCheckArgs) -> Result<(), HarnessError> {
    let tasks = parse_list(&args.tasks, &TaskKind::ALL)?;
    let encodings = parse_list(&args.encodings, &EncodingKind::ALL)?;
    let generators = parse_list(&args.generators, &GeneratorKind::ALL)?;
    let axis: Axis = args.axis.parse().map_err(config_err)?;
    if args.count == 0 || args.parallel == 0 {
        return Err(config_err("--count and --parallel must be at least 1"));
    }
    let limits = SandboxLimits::default();
    let records = gold_check(&tasks, &encodings, &generators, args.count, args.seed, &limits, args.parallel)?;
    print!("{}", render_report(&records, axis));
    if overall_accuracy(&records) != Some(100.0) {
        for r in records.iter().filter(|r| !r.correct) {
            eprintln!("mismatch {}: {:?} {:?}", r.id, r.failure, r.failure_detail);
        }
        return Err(HarnessError::Runtime("gold path did not reproduce every oracle answer".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDataset(a) => gen_dataset(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::GoldCheck(a) => gold(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
