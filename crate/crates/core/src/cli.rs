//! Command-line driver behind the `cvforest` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 verification failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{measure_timings, write_level_profile, Mode};
use crate::data::{assign_folds, load_dataset, Dataset, LoadOptions};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validation_estimate, estimate_from_trees};
use crate::induction::{grow_forest, grow_tree_serial, run_serial_cross_validation, InductionConfig, Variant};
use crate::splits::Measure;
use crate::synthetic::{generate_synthetic, random_dataset, Regime, SuiteKind};
use crate::verify::{verify_dataset, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "cvforest", version, about = "Decision trees with cross-validation built into the induction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the tree on the whole dataset and print it as JSON
    Train(TrainArgs),
    /// Cross-validation estimate from the forest (or serially built trees)
    Xval(XvalArgs),
    /// Time the serial and forest procedures and report speedup figures
    Bench(BenchArgs),
    /// Write a synthetic dataset
    Gen(GenArgs),
    /// Check the forest against serially built trees
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Delimited text file with a header row
    #[arg(long)]
    input: PathBuf,
    /// Name of the target column
    #[arg(long)]
    target: String,
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat these columns as discrete even if they look numeric
    #[arg(long, value_delimiter = ',')]
    discrete: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct InductionArgs {
    /// Number of cross-validation folds
    #[arg(long = "folds", default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep class proportions in every fold
    #[arg(long)]
    stratified: bool,
    /// Quality measure; defaults to gain for class targets, variance otherwise
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
    /// Slices with fewer training examples become leaves
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    min_examples: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Depth)]
    variant: VariantArg,
    /// Recompute every fold's statistics directly and fail on a mismatch
    #[arg(long)]
    verify_stats: bool,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write the result here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    induction: InductionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct XvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    induction: InductionArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Parallel)]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    induction: InductionArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Timed repetitions; medians are reported
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    /// Also write the per-level refinement profile here
    #[arg(long)]
    levels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    regime: RegimeArg,
    /// Number of examples
    #[arg(long, default_value_t = 1000)]
    examples: usize,
    /// Number of attributes
    #[arg(long, default_value_t = 20)]
    attributes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Dataset to check; without it a suite of random datasets is used
    #[arg(long, requires = "target")]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, value_delimiter = ',')]
    discrete: Vec<String>,
    /// Size of the random suite
    #[arg(long, default_value_t = 50)]
    datasets: u64,
    #[command(flatten)]
    induction: InductionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MeasureArg {
    Gain,
    Gainratio,
    Variance,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum VariantArg {
    Depth,
    Level,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum ModeArg {
    Serial,
    Parallel,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RegimeArg {
    Stable,
    Unstable,
    Mixed,
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Config(format!("delimiter `{c}` is not a single ASCII character")))
}

fn load(data: &DataArgs) -> Result<Dataset> {
    let mut options = LoadOptions::new(&data.target).delimiter(delimiter_byte(data.delimiter)?);
    for column in &data.discrete {
        options = options.discrete(column);
    }
    let file = File::open(&data.input)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", data.input.display())))?;
    load_dataset(BufReader::new(file), &options)
}

fn config_for(args: &InductionArgs, dataset: &Dataset) -> InductionConfig {
    InductionConfig {
        measure: match args.measure {
            Some(MeasureArg::Gain) => Measure::InformationGain,
            Some(MeasureArg::Gainratio) => Measure::GainRatio,
            Some(MeasureArg::Variance) => Measure::VarianceReduction,
            None => Measure::default_for(dataset.target_kind()),
        },
        min_examples: args.min_examples,
        n: args.folds as usize,
        seed: args.seed,
        stratified: args.stratified,
        variant: match args.variant {
            VariantArg::Depth => Variant::DepthFirst,
            VariantArg::Level => Variant::LevelWise,
        },
        verify: args.verify_stats,
    }
}

fn sink<'a>(output: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(stdout),
    })
}

fn write_json(out: &mut dyn Write, json: &str) -> Result<()> {
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

fn train(args: TrainArgs, stdout: &mut dyn Write) -> Result<i32> {
    let dataset = load(&args.data)?;
    let config = config_for(&args.induction, &dataset);
    let all: Vec<usize> = (0..dataset.len()).collect();
    let tree = grow_tree_serial(&dataset, &all, &config)?;
    let mut out = sink(&args.output.output, stdout)?;
    match args.output.format {
        Format::Json => write_json(&mut out, &tree.to_json()?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["nodes", "tests", "leaves", "depth"])?;
            w.write_record([
                tree.node_count().to_string(),
                tree.test_count().to_string(),
                tree.leaf_count().to_string(),
                tree.depth().to_string(),
            ])?;
            w.flush()?;
        }
    }
    Ok(EXIT_OK)
}

fn xval(args: XvalArgs, stdout: &mut dyn Write) -> Result<i32> {
    let dataset = load(&args.data)?;
    let config = config_for(&args.induction, &dataset);
    let folds = config.folds(&dataset)?;
    let report = match args.mode {
        ModeArg::Parallel => cross_validation_estimate(&grow_forest(&dataset, &folds, &config)?, &dataset, &folds)?,
        ModeArg::Serial => estimate_from_trees(&run_serial_cross_validation(&dataset, &folds, &config)?.folds, &dataset, &folds)?,
        ModeArg::Both => {
            let parallel = cross_validation_estimate(&grow_forest(&dataset, &folds, &config)?, &dataset, &folds)?;
            let serial = estimate_from_trees(&run_serial_cross_validation(&dataset, &folds, &config)?.folds, &dataset, &folds)?;
            if parallel != serial {
                return Err(Error::Verification("serial and parallel estimates differ".into()));
            }
            parallel
        }
    };
    let mut out = sink(&args.output.output, stdout)?;
    match args.output.format {
        Format::Json => write_json(&mut out, &report.to_json()?)?,
        Format::Csv => report.write_csv(out, b',')?,
    }
    Ok(EXIT_OK)
}

fn bench(args: BenchArgs, stdout: &mut dyn Write) -> Result<i32> {
    let dataset = load(&args.data)?;
    let config = config_for(&args.induction, &dataset);
    let folds = config.folds(&dataset)?;
    let mode = match args.mode {
        ModeArg::Serial => Mode::Serial,
        ModeArg::Parallel => Mode::Parallel,
        ModeArg::Both => Mode::Both,
    };
    let run = measure_timings(&dataset, &folds, &config, mode, args.repeats as usize)?;
    if let Some(path) = &args.levels {
        write_level_profile(&run.report.levels, File::create(path)?, b',')?;
    }
    let mut out = sink(&args.output.output, stdout)?;
    match args.output.format {
        Format::Json => write_json(&mut out, &run.report.to_json()?)?,
        Format::Csv => run.report.write_csv(out, b',')?,
    }
    Ok(EXIT_OK)
}

fn gen(args: GenArgs, stdout: &mut dyn Write) -> Result<i32> {
    let regime = match args.regime {
        RegimeArg::Stable => Regime::Stable,
        RegimeArg::Unstable => Regime::Unstable,
        RegimeArg::Mixed => Regime::Mixed,
    };
    let dataset = generate_synthetic(regime, args.examples, args.attributes, args.seed)?;
    let out = sink(&args.output, stdout)?;
    dataset.write_csv(out, delimiter_byte(args.delimiter)?)?;
    Ok(EXIT_OK)
}

fn verify(args: VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let mut report = VerifyReport::default();
    if let (Some(input), Some(target)) = (&args.input, &args.target) {
        let data = DataArgs {
            input: input.clone(),
            target: target.clone(),
            delimiter: args.delimiter,
            discrete: args.discrete.clone(),
        };
        let dataset = load(&data)?;
        let config = config_for(&args.induction, &dataset);
        let folds = config.folds(&dataset)?;
        report.extend(verify_dataset(&dataset, &folds, &config)?);
    } else {
        for k in 0..args.datasets {
            let seed = args.induction.seed.wrapping_add(k);
            let kind = [SuiteKind::Discrete, SuiteKind::Numeric, SuiteKind::Regression][(k % 3) as usize];
            let dataset = random_dataset(kind, seed);
            let n = [2, 3, 5, 10][(k % 4) as usize];
            let config = InductionConfig { n, ..config_for(&args.induction, &dataset) };
            let folds = assign_folds(&dataset, n, seed, false)?;
            report.extend(verify_dataset(&dataset, &folds, &config)?);
        }
    }
    let mut out = sink(&args.output.output, stdout)?;
    match args.output.format {
        Format::Json => write_json(&mut out, &serde_json::to_string_pretty(&report)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["check", "passed", "detail"])?;
            for c in &report.checks {
                w.write_record([c.name.as_str(), if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
            }
            w.flush()?;
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a, stdout),
        Command::Xval(a) => xval(a, stdout),
        Command::Bench(a) => bench(a, stdout),
        Command::Gen(a) => gen(a, stdout),
        Command::Verify(a) => verify(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Verification(_) => EXIT_VERIFY,
                _ => EXIT_DATA,
            }
        }
    }
}

/// Entry point of the binary.
pub fn main() -> i32 {
    run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock())
}
