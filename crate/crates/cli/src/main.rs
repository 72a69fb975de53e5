//! Batch command-line front end for the sum-product network engine.
//!
//! Exit codes: 0 success, 1 usage error, 2 model/validation error,
//! 3 data error. Diagnostics go to standard error; results to standard
//! output or the path given by `--out`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use spn_core::{
    emit_source, from_json, learn_classifier, learn_structure, log_likelihood, mpe,
    optimize_parameters, parse_dsl, print_dsl, read_csv, sample, structure_stats, to_dot, to_json,
    validate, ColumnSpec, Context, DataMatrix, EmitOptions, Error, FamilyRegistry,
    LearnHyperparams, Network, OptimizeOptions, RandomSource,
};

const EXIT_USAGE: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spn",
    version,
    about = "Build, validate, learn, query, sample and compile sum-product networks",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Decimal places for printed numbers.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model for completeness, decomposability and parameter
    /// validity; exits 0 iff the model is valid.
    Validate { model: PathBuf },
    /// Print one log-likelihood per data row.
    Eval {
        model: PathBuf,
        /// CSV data path, or '-' for standard input.
        #[arg(long)]
        data: String,
        /// Skip the first CSV line.
        #[arg(long)]
        header: bool,
    },
    /// Complete missing cells with the approximate most probable
    /// explanation; prints the completed CSV.
    Mpe {
        model: PathBuf,
        #[arg(long)]
        data: String,
        #[arg(long)]
        header: bool,
    },
    /// Fill missing template cells by exact conditional sampling; prints
    /// the completed CSV.
    Sample {
        model: PathBuf,
        /// CSV template whose missing cells are sampled.
        #[arg(long)]
        data: String,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        seed: u64,
        /// Replicate the whole template this many times before filling.
        #[arg(short = 'n', long = "replicate", default_value_t = 1)]
        replicate: usize,
    },
    /// Learn a model from complete data and write it to --out.
    Learn {
        #[arg(long)]
        data: String,
        #[arg(long)]
        header: bool,
        /// JSON file with one {family, cardinality|range} record per column.
        #[arg(long)]
        context: PathBuf,
        /// Learn a classifier with this label column.
        #[arg(long)]
        classifier_label: Option<usize>,
        #[arg(long, default_value_t = 200)]
        min_instances: usize,
        #[arg(long, default_value_t = 0.3)]
        threshold: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gradient-ascent parameter optimization; writes the best-seen model
    /// to --out.
    Optimize {
        model: PathBuf,
        #[arg(long)]
        data: String,
        #[arg(long)]
        header: bool,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a standalone C99 evaluator.
    Compile {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also emit a main() reading CSV rows from standard input.
        #[arg(long)]
        main: bool,
    },
    /// Emit a DOT rendering of the network graph.
    Plot {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print structure statistics as key=value lines.
    Stats { model: PathBuf },
}

/// Per-column context file record.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextColumn {
    family: String,
    #[serde(default)]
    cardinality: Option<usize>,
    #[serde(default)]
    range: Option<[f64; 2]>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version through the error path
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.exit)
        }
    }
}

struct Failure {
    exit: u8,
    message: String,
}

impl Failure {
    fn model(e: impl std::fmt::Display) -> Self {
        Failure {
            exit: EXIT_MODEL,
            message: e.to_string(),
        }
    }

    fn data(e: impl std::fmt::Display) -> Self {
        Failure {
            exit: EXIT_DATA,
            message: e.to_string(),
        }
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            exit: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

/// Classify an engine error by its variant: model-side problems exit 2,
/// data-side problems exit 3.
fn classify(e: Error) -> Failure {
    match e {
        Error::Data(_) => Failure::data(e),
        _ => Failure::model(e),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let precision = cli.precision;
    match cli.command {
        Command::Validate { model } => {
            let net = load_model(&model)?;
            let report = validate(&net);
            print!("{report}");
            if report.ok() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_MODEL))
            }
        }
        Command::Eval { model, data, header } => {
            let net = load_valid_model(&model)?;
            let matrix = load_data(&data, header)?;
            let ll = log_likelihood(&net, &matrix).map_err(classify)?;
            let mut out = std::io::stdout().lock();
            for v in ll {
                writeln!(out, "{v:.precision$}").map_err(|e| Failure::data(e))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mpe { model, data, header } => {
            let net = load_valid_model(&model)?;
            let matrix = load_data(&data, header)?;
            let completed = mpe(&net, &matrix).map_err(classify)?;
            print!("{}", spn_core::write_csv(&completed, precision));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            model,
            data,
            header,
            seed,
            replicate,
        } => {
            let net = load_valid_model(&model)?;
            let template = load_data(&data, header)?.tiled(replicate.max(1));
            let mut rng = RandomSource::new(seed);
            let filled = sample(&net, &template, &mut rng).map_err(classify)?;
            print!("{}", spn_core::write_csv(&filled, precision));
            Ok(ExitCode::SUCCESS)
        }
        Command::Learn {
            data,
            header,
            context,
            classifier_label,
            min_instances,
            threshold,
            seed,
            out,
        } => {
            let matrix = load_data(&data, header)?;
            let ctx = load_context(&context)?;
            let hyper = LearnHyperparams {
                min_instances,
                dependence_threshold: threshold,
                seed,
                ..Default::default()
            };
            let registry = Arc::new(FamilyRegistry::with_builtins());
            let net = match classifier_label {
                Some(label) => learn_classifier(registry, &matrix, &ctx, label, &hyper),
                None => learn_structure(registry, &matrix, &ctx, &hyper),
            }
            .map_err(classify)?;
            save_model(&net, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize {
            model,
            data,
            header,
            epochs,
            lr,
            out,
        } => {
            let net = load_valid_model(&model)?;
            let matrix = load_data(&data, header)?;
            let options = OptimizeOptions {
                epochs,
                learning_rate: lr,
            };
            let optimized = optimize_parameters(&net, &matrix, &options).map_err(classify)?;
            save_model(&optimized, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compile { model, out, main } => {
            let net = load_valid_model(&model)?;
            let options = EmitOptions {
                emit_main: main,
                ..Default::default()
            };
            let source = emit_source(&net, &options).map_err(Failure::model)?;
            std::fs::write(&out, source).map_err(Failure::model)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { model, out } => {
            let net = load_valid_model(&model)?;
            std::fs::write(&out, to_dot(&net)).map_err(Failure::model)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { model } => {
            let net = load_valid_model(&model)?;
            let stats = structure_stats(&net);
            println!("sum={}", stats.sums);
            println!("product={}", stats.products);
            println!("leaf={}", stats.leaves);
            println!("edges={}", stats.edges);
            println!("depth={}", stats.depth);
            println!("params={}", stats.free_params);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Load a model by extension: `.spn` is DSL text, `.json` is the JSON
/// schema.
fn load_model(path: &Path) -> Result<Network, Failure> {
    let registry = Arc::new(FamilyRegistry::with_builtins());
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::model(format!("{}: {e}", path.display())))?;
    let net = match extension(path)? {
        ModelFormat::Dsl => parse_dsl(&text, registry),
        ModelFormat::Json => from_json(&text, registry),
    }
    .map_err(Failure::model)?;
    Ok(net)
}

/// Every subcommand validates before acting; invalid models never run.
fn load_valid_model(path: &Path) -> Result<Network, Failure> {
    let net = load_model(path)?;
    let report = validate(&net);
    if !report.ok() {
        return Err(Failure::model(format!(
            "{} is not a valid network:\n{report}",
            path.display()
        )));
    }
    Ok(net)
}

enum ModelFormat {
    Dsl,
    Json,
}

fn extension(path: &Path) -> Result<ModelFormat, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("spn") => Ok(ModelFormat::Dsl),
        Some("json") => Ok(ModelFormat::Json),
        _ => Err(Failure::usage(format!(
            "{}: model files use the .spn (DSL) or .json extension",
            path.display()
        ))),
    }
}

fn save_model(network: &Network, path: &Path) -> Result<(), Failure> {
    let text = match extension(path)? {
        ModelFormat::Dsl => {
            let mut t = print_dsl(network);
            t.push('\n');
            t
        }
        ModelFormat::Json => {
            let mut t = to_json(network);
            t.push('\n');
            t
        }
    };
    std::fs::write(path, text).map_err(Failure::model)?;
    Ok(())
}

/// Load CSV from a path or standard input (`-`).
fn load_data(spec: &str, header: bool) -> Result<DataMatrix, Failure> {
    let result = if spec == "-" {
        let stdin = std::io::stdin();
        read_csv(stdin.lock(), header)
    } else {
        let file = std::fs::File::open(spec)
            .map_err(|e| Failure::data(format!("{spec}: {e}")))?;
        read_csv(std::io::BufReader::new(file), header)
    };
    result.map_err(Failure::data)
}

fn load_context(path: &Path) -> Result<Context, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::model(format!("{}: {e}", path.display())))?;
    let columns: Vec<ContextColumn> = serde_json::from_str(&text)
        .map_err(|e| Failure::model(format!("{}: {e}", path.display())))?;
    let specs: Result<Vec<ColumnSpec>, Error> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| match (c.cardinality, c.range) {
            (Some(k), None) => ColumnSpec::categorical(&c.family, k),
            (None, Some([lo, hi])) => ColumnSpec::numeric(&c.family, lo, hi),
            _ => Err(Error::Construction(format!(
                "column {i}: exactly one of 'cardinality' or 'range' is required"
            ))),
        })
        .collect();
    let ctx = Context::new(specs.map_err(Failure::model)?).map_err(Failure::model)?;
    Ok(ctx)
}
