//! Command-line front end for the approximation pipeline.
//!
//! Exit codes: 0 on success, 1 when the pipeline fails, 2 when the
//! configuration is invalid (bad flags, unreadable or mistyped files).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use aakwfa::aak::{aak_approximate, default_truncation};
use aakwfa::bounds::{ErrorReport, ReportOptions};
use aakwfa::hankel::{build_truncation, sample_noise};
use aakwfa::oracle::{oracle_from_wfa, ElmanWeights};
use aakwfa::wfa::{recover_window, spectral_extract};
use aakwfa::{BeyondTable, ElmanOracle, Horizon, NoiseSpec, SequenceOracle, TableOracle, Wfa};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Number of leading singular values written to `singular_values.csv`.
pub const SPECTRUM_ROWS: usize = 32;

#[derive(Debug, Parser)]
#[command(
    name = "aakwfa",
    version,
    about = "Rank-k Hankel approximation and WFA extraction for one-letter sequence models",
    after_help = "Exit codes: 0 success, 1 pipeline error, 2 invalid configuration."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write the automaton, symbol and reports.
    Approximate(ApproximateArgs),
    /// Print the singular values of the truncated Hankel block as CSV.
    Spectrum(SpectrumArgs),
    /// Measure the distance between an oracle and a given automaton.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// JSON array of values f(0), f(1), ...
    Table,
    /// JSON Elman weights.
    Elman,
    /// JSON weighted automaton.
    Wfa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Oracle file.
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long, value_enum)]
    pub kind: OracleKind,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Noise decay exponent; passing it (or a seed) turns noise on.
    #[arg(long)]
    pub noise_p: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    /// Force noise off even when noise flags are present.
    #[arg(long)]
    pub no_noise: bool,
}

impl NoiseArgs {
    pub fn spec(&self) -> NoiseSpec {
        if self.no_noise || (self.noise_p.is_none() && self.noise_seed.is_none()) {
            NoiseSpec::disabled()
        } else {
            NoiseSpec::new(self.noise_p.unwrap_or(2.0), self.noise_seed.unwrap_or(0))
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ApproximateArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Number of states.
    #[arg(long)]
    pub k: usize,
    /// Truncation size; defaults to min(8k, horizon + 1).
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<ReportFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Truncation size; defaults to horizon + 1 for finite tables.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Automaton to compare against.
    #[arg(long)]
    pub wfa: PathBuf,
    /// With --n, adds the lower certificate for automata of at most k states.
    #[arg(long, requires = "n")]
    pub k: Option<usize>,
    #[arg(long, requires = "k")]
    pub n: Option<usize>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<ReportFormat>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Pipeline(aakwfa::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Pipeline(e) => write!(f, "pipeline error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<aakwfa::Error> for CliError {
    fn from(e: aakwfa::Error) -> Self {
        CliError::Pipeline(e)
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Runs one command. The returned string is what goes to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Approximate(args) => cmd_approximate(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config(format!("{} is not a valid {what} file: {e}", path.display())))
}

fn load_wfa(path: &Path) -> Result<Wfa, CliError> {
    read_json(path, "WFA")
}

/// Loads an oracle. Tables are finite: reading past the end is an error.
pub fn load_oracle(args: &OracleArgs) -> Result<Box<dyn SequenceOracle>, CliError> {
    let path = &args.oracle;
    Ok(match args.kind {
        OracleKind::Table => {
            let values: Vec<f64> = read_json(path, "table")?;
            Box::new(TableOracle::new(values, BeyondTable::Error).map_err(|e| config(e.to_string()))?)
        }
        OracleKind::Elman => {
            let weights: ElmanWeights = read_json(path, "Elman weights")?;
            Box::new(ElmanOracle::try_from(weights).map_err(|e| config(e.to_string()))?)
        }
        OracleKind::Wfa => Box::new(oracle_from_wfa(load_wfa(path)?)),
    })
}

fn check_truncation(oracle: &dyn SequenceOracle, k: usize, n: usize) -> Result<(), CliError> {
    if k == 0 {
        return Err(config("k must be at least 1"));
    }
    if n <= k {
        return Err(config(format!("the truncation size must satisfy n > k, got n = {n}, k = {k}")));
    }
    if let Horizon::Last(last) = oracle.horizon() {
        if n > last + 1 {
            return Err(config(format!(
                "n = {n} needs f(0..{}) but the oracle stops at index {last}",
                n - 1
            )));
        }
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_report(dir: &Path, report: &ErrorReport, formats: &[ReportFormat], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if formats.contains(&ReportFormat::Json) {
        written.push(write_file(dir, "report.json", &to_json(report))?);
    }
    if formats.contains(&ReportFormat::Csv) {
        written.push(write_file(dir, "report.csv", &report.to_csv())?);
    }
    Ok(())
}

fn spectrum_csv(values: &[f64]) -> String {
    let mut out = String::from("j,sigma\n");
    for (j, s) in values.iter().enumerate() {
        out.push_str(&format!("{j},{s:.17e}\n"));
    }
    out
}

fn paths(written: &[PathBuf]) -> String {
    written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".into())
}

pub fn cmd_approximate(args: &ApproximateArgs) -> Result<String, CliError> {
    let oracle = load_oracle(&args.oracle)?;
    let k = args.k;
    let n = args.n.unwrap_or_else(|| default_truncation(k, oracle.horizon()));
    check_truncation(oracle.as_ref(), k, n)?;
    let noise = args.noise.spec();
    if noise.enabled && noise.p < 2.0 {
        return Err(config(format!("noise exponent must be at least 2, got {}", noise.p)));
    }
    fs::create_dir_all(&args.out).map_err(|e| config(format!("cannot create {}: {e}", args.out.display())))?;

    let result = aak_approximate(oracle.as_ref(), k, n, &noise)?;
    for w in result.warnings() {
        eprintln!("warning: {}", serde_json::to_string(w).expect("warnings serialize"));
    }
    let window = recover_window(&result.symbol, k)?;
    let wfa = spectral_extract(&window)?;
    let report = ErrorReport::for_run(oracle.as_ref(), &result, &wfa, &ReportOptions::default())?;

    let dir = &args.out;
    let mut written = vec![
        write_file(dir, "wfa.json", &to_json(&wfa))?,
        write_file(dir, "symbol.json", &to_json(&result.symbol))?,
        write_file(dir, "aak.json", &to_json(&result))?,
    ];
    write_report(dir, &report, &args.format, &mut written)?;
    let rows = result.singular_values.len().min(SPECTRUM_ROWS);
    written.push(write_file(dir, "singular_values.csv", &spectrum_csv(&result.singular_values[..rows]))?);

    Ok(format!(
        "sigma_k_n={:.6e} bounds=[{}, {}] outputs={}\n",
        result.sigma_k_n,
        fmt_opt(report.lower_bound),
        fmt_opt(report.upper_bound),
        paths(&written)
    ))
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let oracle = load_oracle(&args.oracle)?;
    let n = match (args.n, oracle.horizon()) {
        (Some(n), _) => n,
        (None, Horizon::Last(last)) => last + 1,
        (None, Horizon::Unbounded) => return Err(config("--n is required for oracles without a finite horizon")),
    };
    if n == 0 {
        return Err(config("n must be at least 1"));
    }
    if let Horizon::Last(last) = oracle.horizon() {
        if n > last + 1 {
            return Err(config(format!("n = {n} exceeds the oracle horizon {}", last + 1)));
        }
    }
    let noise = args.noise.spec();
    let block = build_truncation(oracle.as_ref(), n)?.add(&sample_noise(n, &noise)?)?;
    Ok(spectrum_csv(&block.singular_values()?))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String, CliError> {
    let oracle = load_oracle(&args.oracle)?;
    let wfa = load_wfa(&args.wfa)?;
    let mut report = ErrorReport::compare(oracle.as_ref(), &wfa, &ReportOptions::default())?;
    if let (Some(k), Some(n)) = (args.k, args.n) {
        check_truncation(oracle.as_ref(), k, n)?;
        if wfa.states() > k {
            return Err(config(format!("the automaton has {} states, more than k = {k}", wfa.states())));
        }
        report = report.with_rank_certificate(oracle.as_ref(), &wfa, k, n)?;
    }
    let mut written = Vec::new();
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| config(format!("cannot create {}: {e}", dir.display())))?;
        write_report(dir, &report, &args.format, &mut written)?;
    }
    let mut out = to_json(&report);
    if !written.is_empty() {
        out.push_str(&format!("outputs={}\n", paths(&written)));
    }
    Ok(out)
}
