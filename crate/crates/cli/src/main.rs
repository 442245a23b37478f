//! `boundfa` command-line interface.
//!
//! Exit codes: 0 success, 1 backend or I/O failure, 2 usage error, 3 no DFA
//! meets the bounds.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use boundfa::automata::{Alphabet, Dfa, DotOptions, Sample, Symbol};
use boundfa::datagen::{contains_symbol_dfa, generate, parity_dfa, GenSpec};
use boundfa::encoder::{EncodeError, EncodingSpec, Mode, RegularizerSpec, Task};
use boundfa::eval::{evaluate, run_sweep, sweep_csv, LabeledSet, SweepConfig, SweepDataset, UnknownSymbolPolicy};
use boundfa::learner::{learn_single_bound, learn_two_bound, Bound, LearnError, LearnReport, Outcome, SizeRange};
use boundfa::milp::{parse_rational, write_lp, Rational};
use boundfa::prefix_tree::{PrefixTree, PrefixTreeError};
use boundfa::solver::{
    Backend, EnumerateBackend, ExternalBackend, ExternalConfig, DEFAULT_ENUMERATION_BUDGET,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "boundfa", version, about = "Learn minimal DFAs as anomaly detectors from unlabeled samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a DFA and write dfa.json, dfa.dot and report.json.
    Learn(LearnArgs),
    /// Write the 0/1 model for one size without solving it.
    ExportLp(ExportArgs),
    /// Score a DFA against a labeled test file.
    Eval(EvalArgs),
    /// Generate a dataset from a planted DFA.
    Gen(GenArgs),
    /// Run learning over sizes, bound relaxations and modes; write a CSV.
    Sweep(SweepArgs),
}

fn mode_arg(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("expected two-bound, single-bound-lower or single-bound-upper, got {s:?}"))
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("not a number: {s:?}"))
}

#[derive(Debug, Args)]
struct ProblemArgs {
    #[arg(long, value_parser = mode_arg, default_value = "two-bound")]
    mode: Mode,
    #[arg(long)]
    lower: Option<u64>,
    #[arg(long)]
    upper: Option<u64>,
    /// Number of states (single-bound modes and export-lp).
    #[arg(long)]
    states: Option<usize>,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_sink: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_selfloop: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_parallel: Rational,
    /// Sample file: one word per line, symbols separated by spaces.
    #[arg(long)]
    sample: PathBuf,
}

impl ProblemArgs {
    fn regularizers(&self) -> RegularizerSpec {
        RegularizerSpec {
            lambda_sink: self.lambda_sink,
            lambda_selfloop: self.lambda_selfloop,
            lambda_parallel: self.lambda_parallel,
        }
    }

    fn check_flags(&self, states_required: bool) -> Result<(), CliError> {
        let (l, u) = (self.lower.is_some(), self.upper.is_some());
        match self.mode {
            Mode::TwoBound if !(l && u) => return usage("two-bound needs --lower and --upper"),
            Mode::SingleBoundLower if !l || u => return usage("single-bound-lower needs --lower and no --upper"),
            Mode::SingleBoundUpper if !u || l => return usage("single-bound-upper needs --upper and no --lower"),
            _ => {}
        }
        if (states_required || self.mode != Mode::TwoBound) && self.states.is_none() {
            return usage("--states is required");
        }
        Ok(())
    }

    fn spec(&self, n: usize) -> EncodingSpec {
        let reg = self.regularizers();
        match self.mode {
            Mode::TwoBound => EncodingSpec::two_bound(n, self.lower.unwrap_or(0), self.upper.unwrap_or(0), reg),
            Mode::SingleBoundLower => EncodingSpec::single_lower(n, self.lower.unwrap_or(0), reg),
            Mode::SingleBoundUpper => EncodingSpec::single_upper(n, self.upper.unwrap_or(0), reg),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendKind {
    External,
    Enumerate,
}

#[derive(Debug, Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "external")]
    backend: BackendKind,
    /// Solver command template with {lp_path}, {sol_path}, {time_limit} and
    /// {seed}; defaults to the bundled HiGHS adapter.
    #[arg(long)]
    backend_cmd: Option<String>,
    /// Work limit per solve, in seconds.
    #[arg(long, default_value_t = 100.0)]
    time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Largest number of candidate DFAs the enumerate backend may visit.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    enumeration_budget: u128,
}

impl BackendArgs {
    fn build(&self) -> Result<Box<dyn Backend>, CliError> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return usage("--time-limit must be positive");
        }
        let limit = Duration::from_secs_f64(self.time_limit);
        Ok(match self.backend {
            BackendKind::Enumerate => Box::new(EnumerateBackend {
                budget: self.enumeration_budget,
            }),
            BackendKind::External => match &self.backend_cmd {
                Some(cmd) => {
                    let mut config = ExternalConfig::new(cmd.clone());
                    config.time_limit = limit;
                    config.seed = self.seed;
                    Box::new(ExternalBackend::new(config))
                }
                None => Box::new(ExternalBackend::bundled(limit, self.seed).map_err(failure)?),
            },
        })
    }
}

#[derive(Debug, Args)]
struct LearnArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// First size tried in two-bound mode.
    #[arg(long, default_value_t = 1)]
    start_size: usize,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnknownArg {
    Error,
    Reject,
}

impl From<UnknownArg> for UnknownSymbolPolicy {
    fn from(u: UnknownArg) -> Self {
        match u {
            UnknownArg::Error => UnknownSymbolPolicy::Error,
            UnknownArg::Reject => UnknownSymbolPolicy::RejectWord,
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dfa: PathBuf,
    /// Test file with `<label>\t<word>` lines.
    #[arg(long)]
    labels: PathBuf,
    /// Treatment of symbols outside the DFA alphabet.
    #[arg(long, value_enum, default_value = "error")]
    unknown: UnknownArg,
    /// Write the metrics as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlantedArgs {
    /// `contains:<symbol>`, `parity:<symbol>` or a DFA JSON file.
    #[arg(long, default_value = "contains:x")]
    planted: String,
    /// Comma-separated alphabet for the built-in planted DFAs.
    #[arg(long, value_delimiter = ',', default_value = "a,b,x")]
    alphabet: Vec<String>,
    /// DFA JSON shaping all generated words.
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long, value_parser = rational_arg, default_value = "0.1")]
    ratio: Rational,
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    #[arg(long, default_value_t = 0.8)]
    continue_prob: f64,
}

impl PlantedArgs {
    fn spec(&self, n_total: usize, seed: u64) -> Result<GenSpec, CliError> {
        let planted = match self.planted.split_once(':') {
            Some((kind @ ("contains" | "parity"), sym)) => {
                let symbols: Result<Vec<Symbol>, _> = self.alphabet.iter().map(Symbol::new).collect();
                let alphabet = Alphabet::new(symbols.map_err(|e| CliError::Usage(e.to_string()))?);
                let sym = Symbol::new(sym).map_err(|e| CliError::Usage(e.to_string()))?;
                let dfa = if kind == "contains" {
                    contains_symbol_dfa(alphabet, &sym)
                } else {
                    parity_dfa(alphabet, &sym)
                };
                dfa.ok_or_else(|| CliError::Usage(format!("{sym} is not in the alphabet")))?
            }
            _ => read_dfa(Path::new(&self.planted))?,
        };
        let mut spec = GenSpec::new(planted, n_total, self.ratio, seed);
        spec.source = self.source.as_deref().map(read_dfa).transpose()?;
        spec.min_len = self.min_len;
        spec.max_len = self.max_len;
        spec.continue_prob = self.continue_prob;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    planted: PlantedArgs,
    #[arg(long, default_value_t = 250)]
    n_total: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Dataset directories written by `gen` (train.txt, test.tsv, meta.json).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    data: Vec<PathBuf>,
    /// Generate one planted dataset per seed instead of reading --data.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Dataset sizes for generated datasets, cycled over the seeds.
    #[arg(long, value_delimiter = ',', default_value = "250")]
    n_total: Vec<usize>,
    #[command(flatten)]
    planted: PlantedArgs,
    #[arg(long, value_delimiter = ',', value_parser = mode_arg, default_value = "two-bound")]
    modes: Vec<Mode>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = rational_arg, default_value = "0")]
    deltas: Vec<Rational>,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_sink: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_selfloop: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    lambda_parallel: Rational,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Failure(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn read_sample(path: &Path) -> Result<Sample, CliError> {
    Sample::parse(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_dfa(path: &Path) -> Result<Dfa, CliError> {
    Dfa::from_json(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn encode_error(e: EncodeError) -> CliError {
    match e {
        EncodeError::Model(_) => failure(e),
        _ => CliError::Usage(e.to_string()),
    }
}

fn learn_error(e: LearnError) -> CliError {
    match e {
        LearnError::Encode(e) => encode_error(e),
        LearnError::PrefixTree(e) => CliError::Usage(e.to_string()),
        LearnError::NotDisjoint(_) => CliError::Usage(e.to_string()),
        _ => failure(e),
    }
}

fn write_learn_outputs(report: &LearnReport, out_dir: &Path) -> Result<(), CliError> {
    if let Some(dfa) = &report.dfa {
        write(&out_dir.join("dfa.json"), &dfa.to_json())?;
        write(&out_dir.join("dfa.dot"), &dfa.to_dot(&DotOptions::default()))?;
    }
    write(&out_dir.join("report.json"), &(report.to_json() + "\n"))
}

fn cmd_learn(a: &LearnArgs) -> Result<ExitCode, CliError> {
    a.problem.check_flags(false)?;
    let sample = read_sample(&a.problem.sample)?;
    let backend = a.backend.build()?;
    let reg = a.problem.regularizers();
    let p = &a.problem;
    let report = match p.mode {
        Mode::TwoBound => {
            let range = SizeRange {
                start: a.start_size,
                cap: None,
            };
            learn_two_bound(&sample, p.lower.unwrap_or(0), p.upper.unwrap_or(0), reg, range, &backend)
        }
        Mode::SingleBoundLower => {
            learn_single_bound(&sample, Bound::Lower(p.lower.unwrap_or(0)), p.states.unwrap_or(0), reg, &backend)
        }
        Mode::SingleBoundUpper => {
            learn_single_bound(&sample, Bound::Upper(p.upper.unwrap_or(0)), p.states.unwrap_or(0), reg, &backend)
        }
    }
    .map_err(learn_error)?;
    write_learn_outputs(&report, &a.out_dir)?;
    let tried: Vec<String> = report.sizes_tried.iter().map(|t| format!("{}:{}", t.n, t.status.as_str())).collect();
    match (report.outcome, &report.dfa) {
        (Outcome::Learned, Some(dfa)) => {
            println!(
                "learned {} states, accepted {} of {}, sizes tried [{}]",
                dfa.num_states(),
                report.accepted_count.unwrap_or(0),
                sample.total(),
                tried.join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }
        (Outcome::NoDfaExists, _) => {
            println!("no-dfa-exists: no DFA meets the bounds, sizes tried [{}]", tried.join(", "));
            Ok(ExitCode::from(3))
        }
        (outcome, _) => {
            eprintln!("boundfa: {}: sizes tried [{}]", outcome.as_str(), tried.join(", "));
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_export_lp(a: &ExportArgs) -> Result<ExitCode, CliError> {
    a.problem.check_flags(true)?;
    let sample = read_sample(&a.problem.sample)?;
    let tree = PrefixTree::build(&sample).map_err(|e: PrefixTreeError| CliError::Usage(e.to_string()))?;
    let spec = a.problem.spec(a.problem.states.unwrap_or(0));
    let model = Task::new(&sample, &tree, spec).encode().map_err(encode_error)?;
    let lp = write_lp(&model);
    match &a.out {
        Some(path) => {
            write(path, &lp)?;
            println!(
                "wrote {} variables, {} constraints to {}",
                model.variables().len(),
                model.constraints().len(),
                path.display()
            );
        }
        None => print!("{lp}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(a: &EvalArgs) -> Result<ExitCode, CliError> {
    let dfa = read_dfa(&a.dfa)?;
    let test = LabeledSet::parse(&read(&a.labels)?).map_err(|e| CliError::Usage(format!("{}: {e}", a.labels.display())))?;
    let m = evaluate(&dfa, &test, a.unknown.into()).map_err(failure)?;
    let v = m.to_json_value();
    println!(
        "f1={} precision={} recall={} tp={} fp={} tn={} fn={}",
        v["f1"], v["precision"], v["recall"], m.tp, m.fp, m.tn, m.fn_
    );
    if let Some(path) = &a.out {
        write(path, &(serde_json::to_string_pretty(&v).map_err(failure)? + "\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(a: &GenArgs) -> Result<ExitCode, CliError> {
    let spec = a.planted.spec(a.n_total, a.seed)?;
    let data = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    write(&a.out_dir.join("train.txt"), &data.train.to_text())?;
    write(&a.out_dir.join("test.tsv"), &data.test.to_text())?;
    write(&a.out_dir.join("meta.json"), &(data.meta_json(&spec) + "\n"))?;
    write(&a.out_dir.join("planted.json"), &spec.planted.to_json())?;
    println!(
        "wrote {} training and {} test words ({} anomalies in training) to {}",
        data.train.total(),
        data.test.len(),
        data.train_anomalies,
        a.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_dataset(dir: &Path) -> Result<SweepDataset, CliError> {
    let train = read_sample(&dir.join("train.txt"))?;
    let test = LabeledSet::parse(&read(&dir.join("test.tsv"))?).map_err(|e| CliError::Usage(e.to_string()))?;
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.join("meta.json"))?).map_err(failure)?;
    let ratio = meta["train_ratio"]
        .as_str()
        .and_then(parse_rational)
        .ok_or_else(|| CliError::Usage(format!("{}: meta.json lacks train_ratio", dir.display())))?;
    let goal = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(SweepDataset {
        goal,
        train,
        test,
        ratio,
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<ExitCode, CliError> {
    if a.sizes.is_empty() {
        return usage("--sizes must list at least one size");
    }
    if a.data.is_empty() == a.seeds.is_empty() {
        return usage("give either --data or --seeds");
    }
    if a.n_total.is_empty() {
        return usage("--n-total must list at least one size");
    }
    let mut datasets = Vec::new();
    for dir in &a.data {
        datasets.push(load_dataset(dir)?);
    }
    for (i, &seed) in a.seeds.iter().enumerate() {
        let spec = a.planted.spec(a.n_total[i % a.n_total.len()], seed)?;
        let data = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
        datasets.push(SweepDataset {
            goal: format!("planted-seed{seed}"),
            ratio: data.train_ratio(),
            train: data.train,
            test: data.test,
        });
    }
    let config = SweepConfig {
        datasets,
        modes: a.modes.clone(),
        sizes: a.sizes.clone(),
        deltas: a.deltas.clone(),
        regularizers: RegularizerSpec {
            lambda_sink: a.lambda_sink,
            lambda_selfloop: a.lambda_selfloop,
            lambda_parallel: a.lambda_parallel,
        },
        policy: UnknownSymbolPolicy::Error,
    };
    let backend = a.backend.build()?;
    let rows = run_sweep(&config, &backend).map_err(|e| CliError::Usage(e.to_string()))?;
    write(&a.out, &sweep_csv(&rows).map_err(failure)?)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Learn(a) => cmd_learn(a),
        Command::ExportLp(a) => cmd_export_lp(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("boundfa: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("boundfa: {msg}");
            ExitCode::from(1)
        }
    }
}
