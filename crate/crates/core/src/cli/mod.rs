//! Command-line front end: one subcommand per pipeline stage, files in between.
//!
//! Exit codes: 0 success, 1 fatal I/O error, 2 configuration or usage error,
//! 3 insufficient data.

mod files;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use crate::benchmark::{
    aggregate, load_benchmark, measure_corpus, save_benchmark, write_factors_csv, BenchmarkDb, BenchmarkError,
    Thresholds, DEFAULT_MIN_SAMPLE_BYTES, DEFAULT_MIN_SYSTEMS,
};
use crate::compressor::{CompressorSpec, DEFAULT_WINDOW};
use crate::corpus::{load_language_profiles, scan_corpus, ProfileSet, ScanError, ScanOptions};
use crate::metrics::{
    mccabe_report, system_sizes, volume_breakdown, write_mccabe_csv, write_volume_csv, write_volume_plot_data,
    FallbackPolicy, MetricsError,
};
use crate::validation::{compare, AliasTable, ExternalRanking, Orientation, ValidationError};

pub use files::{
    merge_measurements, read_measurements, read_measurements_csv, write_atomic, write_measurements_csv,
    MeasurementsError, MeasurementsFile, MEASUREMENTS_SCHEMA_VERSION,
};

/// Schema version of the JSON reports written by `weigh` and `validate`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "conciseness",
    version,
    about = "Language conciseness from source-code compression ratios"
)]
pub struct Cli {
    /// TOML file adding or overriding language profiles.
    #[arg(long, global = true, value_name = "PATH")]
    pub profiles: Option<PathBuf>,

    /// Worker threads for sample processing [default: all cores].
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    /// Format of tabular outputs. The benchmark database itself is always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Omit timestamps so identical inputs give byte-identical outputs.
    #[arg(long, global = true)]
    pub reproducible: bool,

    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean and compress every (system, language) sample under the roots.
    Measure(MeasureArgs),
    /// Aggregate measurement files into a benchmark database.
    Benchmark(BenchmarkArgs),
    /// Raw and CR-weighted volume and McCabe reports for one system.
    Weigh(WeighArgs),
    /// Rank-correlate a benchmark with an external language ranking.
    Validate(ValidateArgs),
    /// Print the factor table of a benchmark database.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Glob (relative to the corpus root) of files or directories to skip; repeatable.
    #[arg(long, value_name = "GLOB")]
    pub exclude: Vec<String>,

    /// Follow symbolic links while walking.
    #[arg(long)]
    pub follow_symlinks: bool,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Corpus roots; each child directory is one system.
    #[arg(required = true, value_name = "ROOT")]
    pub roots: Vec<PathBuf>,

    /// Treat each root as a single system.
    #[arg(long)]
    pub single_system: bool,

    #[command(flatten)]
    pub scan: ScanArgs,

    /// Match window of the built-in compressor in bytes (0 = whole sample).
    #[arg(long, value_name = "BYTES", default_value_t = DEFAULT_WINDOW, conflicts_with = "external")]
    pub window: u64,

    /// Use an external compressor instead, e.g. "xz -9 -c" (stdin to stdout).
    #[arg(long, value_name = "COMMAND")]
    pub external: Option<String>,

    /// Output file [default: stdout].
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Measurement files (JSON, or CSV by extension).
    #[arg(required = true, value_name = "MEASUREMENTS")]
    pub inputs: Vec<PathBuf>,

    /// Samples smaller than this many cleaned bytes are ignored.
    #[arg(long, value_name = "BYTES", default_value_t = DEFAULT_MIN_SAMPLE_BYTES)]
    pub min_sample_bytes: u64,

    /// Languages with fewer qualifying samples get no factor.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MIN_SYSTEMS)]
    pub min_systems: usize,

    /// Output file [default: stdout].
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeighArgs {
    /// Root directory of the system.
    #[arg(value_name = "ROOT")]
    pub root: PathBuf,

    /// Benchmark database to take the factors from.
    #[arg(long, value_name = "PATH")]
    pub benchmark: PathBuf,

    /// Directory receiving volume.*, mccabe.* and volume_plot.csv.
    #[arg(short, long, value_name = "DIR")]
    pub output_dir: PathBuf,

    /// Languages without a factor: error (report separately), cr=1.0, or cr=median.
    #[arg(long, value_name = "POLICY", default_value = "error", value_parser = parse_fallback)]
    pub fallback: FallbackPolicy,

    #[command(flatten)]
    pub scan: ScanArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Benchmark database.
    #[arg(long, value_name = "PATH")]
    pub benchmark: PathBuf,

    /// External ranking CSV with header `language,score`.
    #[arg(long, value_name = "PATH")]
    pub ranking: PathBuf,

    /// Alias CSV with header `alias,canonical`, applied on top of the built-in aliases.
    #[arg(long, value_name = "PATH")]
    pub aliases: Option<PathBuf>,

    /// `same` when a high score means verbose (high CR), `inverted` when it means concise.
    #[arg(long, default_value = "same", value_parser = parse_orientation)]
    pub orientation: Orientation,

    /// Name recorded for the ranking [default: file stem].
    #[arg(long)]
    pub source_name: Option<String>,

    /// Output file [default: stdout].
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Benchmark database.
    #[arg(long, value_name = "PATH")]
    pub benchmark: PathBuf,

    /// Output file [default: stdout].
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

fn parse_fallback(s: &str) -> Result<FallbackPolicy, String> {
    s.parse().map_err(|e: MetricsError| e.to_string())
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse().map_err(|e: ValidationError| e.to_string())
}

/// A failed run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Insufficient(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Insufficient(_) => 3,
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::UnreadableRoot { .. } => CliError::Io(e.to_string()),
            ScanError::BadGlob { .. } | ScanError::DuplicateSystem(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MeasurementsError> for CliError {
    fn from(e: MeasurementsError) -> Self {
        match e {
            MeasurementsError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::MissingFactor { .. } | MetricsError::NoLanguages | MetricsError::NoMcCabe => {
                CliError::Insufficient(e.to_string())
            }
            MetricsError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Undefined => CliError::Insufficient(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(context: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", context.display()))
}

/// Parses the process arguments, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CONCISENESS_LOG")
        .format_timestamp(None)
        .try_init();
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(usize::from(n));
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Measure(args) => cmd_measure(cli, args),
        Command::Benchmark(args) => cmd_benchmark(cli, args),
        Command::Weigh(args) => cmd_weigh(cli, args),
        Command::Validate(args) => cmd_validate(cli, args),
        Command::Report(args) => cmd_report(cli, args),
    })
}

fn profiles(cli: &Cli) -> Result<ProfileSet, CliError> {
    let text = match &cli.profiles {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read profiles {}: {e}", path.display())))?,
        ),
        None => None,
    };
    load_language_profiles(text.as_deref()).map_err(|e| CliError::Config(e.to_string()))
}

fn timestamp(cli: &Cli) -> Option<String> {
    (!cli.reproducible).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => write_atomic(path, bytes).map_err(|e| io_err(path, e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn to_json(value: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn scan_options(scan: &ScanArgs, single_system: bool) -> ScanOptions {
    ScanOptions {
        follow_symlinks: scan.follow_symlinks,
        exclude_globs: scan.exclude.clone(),
        single_system,
    }
}

fn cmd_measure(cli: &Cli, args: &MeasureArgs) -> Result<(), CliError> {
    let profiles = profiles(cli)?;
    let spec = match &args.external {
        Some(command) => {
            let argv: Vec<String> = command.split_whitespace().map(String::from).collect();
            CompressorSpec::external(command.trim(), argv)
        }
        None => CompressorSpec::builtin_with_window(args.window),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let manifest = scan_corpus(&args.roots, &profiles, &scan_options(&args.scan, args.single_system))?;
    info!(
        "{} systems, {} skipped files",
        manifest.systems.len(),
        manifest.skipped.len()
    );
    let result = measure_corpus(&manifest, &profiles, &spec);
    for entry in &result.log {
        warn!(
            "{}{}: {}",
            entry.system_id,
            entry
                .language_id
                .as_deref()
                .map(|l| format!("/{l}"))
                .unwrap_or_default(),
            entry.message
        );
    }
    info!("{} samples measured", result.measurements.len());

    let bytes = match cli.format {
        Format::Json => to_json(&MeasurementsFile {
            schema_version: MEASUREMENTS_SCHEMA_VERSION,
            created_at: timestamp(cli),
            compressor: spec,
            measurements: result.measurements,
            log: result.log,
            skipped: manifest.skipped,
        })?,
        Format::Csv => {
            let mut out = Vec::new();
            write_measurements_csv(&result.measurements, &mut out).map_err(|e| CliError::Config(e.to_string()))?;
            out
        }
    };
    emit(args.output.as_deref(), &bytes)
}

fn cmd_benchmark(cli: &Cli, args: &BenchmarkArgs) -> Result<(), CliError> {
    let sets = args
        .inputs
        .iter()
        .map(|p| read_measurements(p))
        .collect::<Result<Vec<_>, _>>()?;
    let measurements = merge_measurements(sets)?;
    let thresholds = Thresholds {
        min_sample_bytes: args.min_sample_bytes,
        min_systems: args.min_systems,
    };
    let mut db = aggregate(&measurements, thresholds)?;
    db.created_at = timestamp(cli);
    for lang in &db.insufficient_data {
        info!(
            "{}: {} qualifying samples ({} too small), no factor",
            lang.language_id, lang.qualifying_samples, lang.small_samples
        );
    }
    if cli.format == Format::Csv {
        warn!("--format csv does not apply to the benchmark database; writing JSON (use `report` for CSV)");
    }
    let mut bytes = Vec::new();
    save_benchmark(&db, &mut bytes)?;
    emit(args.output.as_deref(), &bytes)
}

fn read_benchmark(path: &Path) -> Result<BenchmarkDb, CliError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    load_benchmark(std::io::BufReader::new(file)).map_err(|e| match e {
        BenchmarkError::Io(e) => io_err(path, e),
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema_version: u32,
    created_at: Option<String>,
    compressor_name: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

fn cmd_weigh(cli: &Cli, args: &WeighArgs) -> Result<(), CliError> {
    let profiles = profiles(cli)?;
    let db = read_benchmark(&args.benchmark)?;
    let manifest = scan_corpus(
        std::slice::from_ref(&args.root),
        &profiles,
        &scan_options(&args.scan, true),
    )?;
    let system = &manifest.systems[0];
    let sizes = system_sizes(system, &profiles).map_err(|e| CliError::Io(e.to_string()))?;
    let locs: BTreeMap<String, u64> = sizes.iter().map(|(l, s)| (l.clone(), s.loc)).collect();

    let volume = volume_breakdown(&system.system_id, &locs, &db, args.fallback)?;
    for m in &volume.missing {
        warn!("{}: {} LOC not weighed ({})", m.language_id, m.raw_loc, m.reason);
    }
    let mccabe = mccabe_report(&system.system_id, &sizes, &db, args.fallback)?;

    fs::create_dir_all(&args.output_dir).map_err(|e| io_err(&args.output_dir, e))?;
    let dir = &args.output_dir;
    let created_at = timestamp(cli);
    match cli.format {
        Format::Json => {
            let doc = |report| Document {
                schema_version: REPORT_SCHEMA_VERSION,
                created_at: created_at.clone(),
                compressor_name: &db.compressor_name,
                report,
            };
            emit(Some(&dir.join("volume.json")), &to_json(&doc(&volume))?)?;
            let doc = Document {
                schema_version: REPORT_SCHEMA_VERSION,
                created_at: created_at.clone(),
                compressor_name: &db.compressor_name,
                report: &mccabe,
            };
            emit(Some(&dir.join("mccabe.json")), &to_json(&doc)?)?;
        }
        Format::Csv => {
            let mut out = Vec::new();
            write_volume_csv(&volume, &mut out)?;
            emit(Some(&dir.join("volume.csv")), &out)?;
            let mut out = Vec::new();
            write_mccabe_csv(&mccabe, &mut out)?;
            emit(Some(&dir.join("mccabe.csv")), &out)?;
        }
    }
    let mut out = Vec::new();
    write_volume_plot_data(&volume, &mut out)?;
    emit(Some(&dir.join("volume_plot.csv")), &out)
}

#[derive(Serialize)]
struct PairRow<'a> {
    language: &'a str,
    local_cr: f64,
    external_score: f64,
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> Result<(), CliError> {
    let db = read_benchmark(&args.benchmark)?;
    let mut aliases = AliasTable::default();
    if let Some(path) = &args.aliases {
        let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
        aliases.extend_from_csv(file)?;
    }
    let name = args.source_name.clone().unwrap_or_else(|| {
        args.ranking
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "external".into())
    });
    let file = fs::File::open(&args.ranking).map_err(|e| io_err(&args.ranking, e))?;
    let external = ExternalRanking::from_csv(&name, file, &aliases)?;
    let report = compare(&db, &external, args.orientation)?;
    info!("{}: n = {}, rho = {}", report.source_name, report.n, report.rho);
    if !report.unmatched_local.is_empty() {
        info!("only in benchmark: {}", report.unmatched_local.join(", "));
    }
    if !report.unmatched_external.is_empty() {
        info!(
            "only in {}: {}",
            report.source_name,
            report.unmatched_external.join(", ")
        );
    }

    let bytes = match cli.format {
        Format::Json => to_json(&Document {
            schema_version: REPORT_SCHEMA_VERSION,
            created_at: timestamp(cli),
            compressor_name: &db.compressor_name,
            report: &report,
        })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for p in &report.pairs {
                w.serialize(PairRow {
                    language: &p.language_id,
                    local_cr: p.local_cr,
                    external_score: p.external_score,
                })
                .map_err(|e| CliError::Config(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    emit(args.output.as_deref(), &bytes)
}

#[derive(Serialize)]
struct FactorTable<'a> {
    compressor_name: &'a str,
    thresholds: Thresholds,
    factors: Vec<&'a crate::benchmark::ConcisenessFactor>,
    insufficient_data: &'a [crate::benchmark::InsufficientLanguage],
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<(), CliError> {
    let db = read_benchmark(&args.benchmark)?;
    let bytes = match cli.format {
        Format::Json => {
            let mut factors: Vec<_> = db.factors.values().collect();
            factors.sort_by(|a, b| a.cr_characteristic.total_cmp(&b.cr_characteristic));
            to_json(&FactorTable {
                compressor_name: &db.compressor_name,
                thresholds: db.thresholds,
                factors,
                insufficient_data: &db.insufficient_data,
            })?
        }
        Format::Csv => {
            let mut out = Vec::new();
            write_factors_csv(&db, &mut out)?;
            out
        }
    };
    emit(args.output.as_deref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from([
            "conciseness",
            "report",
            "--benchmark",
            "db.json",
            "--format",
            "csv",
            "--jobs",
            "2",
            "--reproducible",
        ])
        .unwrap();
        assert_eq!((cli.format, cli.jobs, cli.reproducible), (Format::Csv, Some(2), true));
    }

    #[test]
    fn fallback_and_orientation_values() {
        let cli =
            Cli::try_parse_from(["c", "weigh", "r", "--benchmark", "b", "-o", "d", "--fallback", "cr=1.0"]).unwrap();
        let Command::Weigh(w) = cli.command else { panic!() };
        assert_eq!(w.fallback, FallbackPolicy::Unit);
        assert!(Cli::try_parse_from(["c", "weigh", "r", "--benchmark", "b", "-o", "d", "--fallback", "x"]).is_err());
        assert!(Cli::try_parse_from(["c", "--jobs", "0", "report", "--benchmark", "b"]).is_err());
        let cli = Cli::try_parse_from([
            "c",
            "validate",
            "--benchmark",
            "b",
            "--ranking",
            "r",
            "--orientation",
            "inverted",
        ])
        .unwrap();
        let Command::Validate(v) = cli.command else { panic!() };
        assert_eq!(v.orientation, Orientation::Inverted);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Io(String::new()).exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Insufficient(String::new()).exit_code(), 3);
        let e: CliError = ValidationError::InsufficientData {
            found: 1,
            overlap: vec![],
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = MetricsError::MissingFactor { languages: vec![] }.into();
        assert_eq!(e.exit_code(), 3);
    }
}
