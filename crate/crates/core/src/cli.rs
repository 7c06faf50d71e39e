//! The `avmac` command-line driver.
//!
//! Exit codes: `0` pass (or feasible as requested), `1` a principled negative verdict,
//! `2` a usage or I/O error. JSON reports carry a `schema` field and sorted keys, so
//! identical inputs give byte-identical output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::adversary::{
    describe, exact_error, max_error_exhaustive, monte_carlo_error, overwrite_attack, symmetrization_attack,
    symmetrization_attack_exact, AdversaryError, ErrorProfile, ErrorValue, MonteCarloConfig, Strategy,
    DEFAULT_CONFIDENCE, DEFAULT_EVAL_BUDGET,
};
use crate::channel::{make_adder_channel, ChannelError, ChannelSpec, StateSequence};
use crate::codebook::{codeword_string, CodebookTuple};
use crate::decoder::CanonicalDecoder;
use crate::extension::{
    achieved_rates, build_plan, verify_extension, ExtensionError, ExtensionPlan, DEFAULT_PATTERN_BUDGET,
};
use crate::feasibility::{
    find_overwriter, find_symmetrizer, interior_necessary_conditions, overwritable_orders, symmetrizable_orders,
    FeasibilityError, StateConditionalWitness, SubsetWitness, WitnessKind,
};
use crate::format::{
    parse_channel, parse_codebooks, parse_plan, parse_symbols, parse_witness, serialize_codebooks, serialize_plan,
    serialize_witness, FormatError, PlanFile,
};
use crate::rational::{format_rational, Gamma};
use crate::search::{search, SearchError, SearchSpec, DEFAULT_SEARCH_BUDGET};
use crate::verifier::{verify_zero_error_with, VerifierConfig, VerifyError, DEFAULT_A1_BUDGET};

pub const REPORT_SCHEMA: &str = "avmac-report/1";

/// Witnesses listed per condition in text reports.
const TEXT_WITNESS_LIMIT: usize = 5;
/// Search results listed in text reports.
const TEXT_RESULT_LIMIT: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// An inner code that is not zero-error is a verdict on the input, not a usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Extension(ExtensionError::InnerNotVerified { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "avmac", version, about = "Exact analysis of arbitrarily varying multiple-access channels")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text, global = true)]
    format: OutputFormat,
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ChannelSource {
    /// Adder channel with T binary users and states {0..L}.
    #[arg(long, value_name = "T,L", value_parser = parse_adder)]
    adder: Option<(usize, usize)>,
    /// Channel spec file.
    #[arg(long, value_name = "PATH")]
    channel: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Symmetrizability and overwritability of every user subset; with --gamma, the
    /// necessary conditions for partial correction.
    CheckChannel {
        #[command(flatten)]
        source: ChannelSource,
        /// Fraction of users to correct, as an exact ratio p/q strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Option<Gamma>,
        /// Write every witness found into this directory.
        #[arg(long, value_name = "DIR")]
        witness_dir: Option<PathBuf>,
    },
    /// Zero-error check of a codebook tuple over the adder channel.
    Verify {
        /// Codebook tuple file.
        codebook: PathBuf,
        /// Largest adversarial state.
        #[arg(long)]
        ell: Option<usize>,
        /// Adder parameters; T must match the codebook tuple.
        #[arg(long, value_name = "T,L", value_parser = parse_adder)]
        adder: Option<(usize, usize)>,
        /// Fraction of users to correct, as an exact ratio p/q strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Gamma,
        /// Maximum number of A1 decompositions materialized.
        #[arg(long, default_value_t = DEFAULT_A1_BUDGET)]
        a1_budget: u64,
    },
    /// Search for zero-error codebook tuples.
    Search {
        /// Block length.
        #[arg(long)]
        n: usize,
        /// Largest adversarial state.
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Fraction of users to correct, as an exact ratio p/q strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Gamma,
        /// Codebook sizes, one per user.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Report every tuple instead of one per symmetry orbit.
        #[arg(long)]
        no_symmetry: bool,
        /// Maximum number of candidates examined.
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        /// Stop after this many results.
        #[arg(long)]
        stop_after: Option<usize>,
        /// Write each result as a codebook file into this directory.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Block-length extension by concatenation with outer erasure codes.
    Extend {
        #[command(subcommand)]
        action: ExtendAction,
    },
    /// Error probabilities, exhaustively or by Monte Carlo.
    Evaluate {
        /// Codebook tuple file.
        codebook: PathBuf,
        #[command(flatten)]
        source: ChannelSource,
        /// Fraction of users to correct, as an exact ratio p/q strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Gamma,
        /// Decoder parameter; defaults to L of --adder.
        #[arg(long)]
        ell: Option<usize>,
        /// Exact enumeration or random sampling.
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        /// all (exhaustive only), no-adversary, uniform, fixed:STATES,
        /// symmetrize:USERS or overwrite:USERS (users 1-based, comma-separated).
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Witness file for attack strategies; found by linear feasibility when omitted.
        #[arg(long, value_name = "PATH")]
        witness: Option<PathBuf>,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// RNG seed; results do not depend on the thread count.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Confidence level of the reported interval.
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        /// Maximum number of exact evaluations.
        #[arg(long, default_value_t = DEFAULT_EVAL_BUDGET)]
        budget: u64,
    },
}

#[derive(Debug, Subcommand)]
enum ExtendAction {
    /// Assemble and write a plan file.
    Build {
        /// Inner codebook file.
        #[arg(long)]
        inner: PathBuf,
        /// Fraction of users to correct, as an exact ratio p/q strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Gamma,
        /// Largest adversarial state.
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Number of inner blocks.
        #[arg(long)]
        r: usize,
        /// Outer code as comma-separated words, once per user or once for all users.
        #[arg(long = "outer", required = true, value_name = "WORDS")]
        outer: Vec<String>,
        /// Plan file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaust admissible erasure patterns.
    Verify {
        /// Plan file.
        plan: PathBuf,
        /// Maximum number of erasure patterns examined.
        #[arg(long, default_value_t = DEFAULT_PATTERN_BUDGET)]
        budget: u64,
    },
    /// Achieved per-user rates.
    Rates { plan: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    MonteCarlo,
}

fn parse_gamma(s: &str) -> Result<Gamma, String> {
    s.parse().map_err(|e: crate::rational::GammaError| e.to_string())
}

/// Accepts `T,L` or `t=T,l=L` (also `ell=L`).
fn parse_adder(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split([',', ' ']).filter(|p| !p.is_empty()).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected T,L, got {s:?}"));
    };
    let value = |p: &str, keys: &[&str]| -> Result<usize, String> {
        let v = match p.split_once('=') {
            Some((k, v)) if keys.contains(&k.trim()) => v,
            Some(_) => return Err(format!("unexpected key in {p:?}")),
            None => p,
        };
        v.trim().parse().map_err(|_| format!("not a number: {v:?}"))
    };
    Ok((value(a, &["t", "T"])?, value(b, &["l", "L", "ell", "ℓ"])?))
}

enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }

    fn code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
        }
    }
}

struct Report {
    command: &'static str,
    verdict: Verdict,
    text: String,
    body: Value,
}

impl Report {
    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.text.clone(),
            OutputFormat::Json => {
                let mut obj = serde_json::Map::new();
                obj.insert("schema".into(), json!(REPORT_SCHEMA));
                obj.insert("command".into(), json!(self.command));
                obj.insert("verdict".into(), json!(self.verdict.name()));
                obj.insert("report".into(), self.body.clone());
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Runs the CLI on `argv` (program name first) with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the CLI writing the report to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let rendered = report.render(cli.format);
            let written = match &cli.output {
                Some(path) => {
                    std::fs::write(path, rendered).map_err(|e| CliError::Io { path: path.clone(), source: e })
                }
                None => {
                    out.write_all(rendered.as_bytes()).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })
                }
            };
            match written {
                Ok(()) => report.verdict.code(),
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    builder.build()?.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::CheckChannel { source, gamma, witness_dir } => {
            check_channel(&load_channel(source)?, gamma.as_ref(), witness_dir.as_deref())
        }
        Command::Verify { codebook, ell, adder, gamma, a1_budget } => verify(codebook, *ell, *adder, gamma, *a1_budget),
        Command::Search { n, ell, gamma, sizes, no_symmetry, budget, stop_after, out_dir } => {
            let mut spec = SearchSpec::new(*n, *ell, gamma.clone(), sizes.clone());
            spec.symmetry_reduction = !no_symmetry;
            spec.budget = *budget;
            spec.stop_after = *stop_after;
            run_search(&spec, out_dir.as_deref())
        }
        Command::Extend { action } => match action {
            ExtendAction::Build { inner, gamma, ell, r, outer, out } => {
                extend_build(inner, gamma, *ell, *r, outer, out)
            }
            ExtendAction::Verify { plan, budget } => extend_verify(plan, *budget),
            ExtendAction::Rates { plan } => extend_rates(plan),
        },
        Command::Evaluate {
            codebook,
            source,
            gamma,
            ell,
            mode,
            strategy,
            witness,
            trials,
            seed,
            confidence,
            budget,
        } => {
            let cb = load_codebooks(codebook)?;
            let ch = load_channel(source)?;
            let ell = match (ell, source.adder) {
                (Some(l), _) => *l,
                (None, Some((_, l))) => l,
                (None, None) => return Err(CliError::Usage("--ell is required with --channel".into())),
            };
            let cfg = MonteCarloConfig { trials: *trials, seed: *seed, confidence: *confidence };
            let opts = EvalOptions { ell, mode: *mode, witness: witness.as_deref(), cfg, budget: *budget };
            evaluate(&cb, &ch, gamma, strategy, &opts)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn load_codebooks(path: &Path) -> Result<CodebookTuple, CliError> {
    parse_codebooks(&read(path)?).map_err(|e| CliError::File { path: path.to_path_buf(), source: e })
}

fn load_channel(source: &ChannelSource) -> Result<ChannelSpec, CliError> {
    match (&source.adder, &source.channel) {
        (Some((t, l)), None) => Ok(make_adder_channel(*t, *l)?),
        (None, Some(path)) => parse_channel(&read(path)?).map_err(|e| CliError::File { path: path.clone(), source: e }),
        _ => Err(CliError::Usage("exactly one of --adder and --channel is required".into())),
    }
}

fn users_1based(users: &[usize]) -> String {
    let v: Vec<String> = users.iter().map(|u| (u + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn users_json(users: &[usize]) -> Value {
    json!(users.iter().map(|u| u + 1).collect::<Vec<_>>())
}

/// Parses 1-based, comma-separated user indices into sorted 0-based ones.
fn parse_users(s: &str, t: usize) -> Result<Vec<usize>, CliError> {
    let mut users = Vec::new();
    for part in s.split(',') {
        let u: usize = part.trim().parse().map_err(|_| CliError::Usage(format!("bad user index {part:?}")))?;
        if u == 0 || u > t {
            return Err(CliError::Usage(format!("user {u} out of range 1..={t}")));
        }
        users.push(u - 1);
    }
    users.sort_unstable();
    users.dedup();
    Ok(users)
}

fn channel_summary(ch: &ChannelSpec) -> Value {
    json!({
        "users": ch.users(),
        "inputs": ch.input_sizes(),
        "states": ch.state_count(),
        "outputs": ch.output_count(),
        "s0": ch.s0(),
        "deterministic": ch.is_deterministic(),
    })
}

fn check_channel(ch: &ChannelSpec, gamma: Option<&Gamma>, witness_dir: Option<&Path>) -> Result<Report, CliError> {
    ch.ensure_valid()?;
    let sym = symmetrizable_orders(ch)?;
    let over = overwritable_orders(ch)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "channel: {} users, inputs {:?}, {} states (s0 = {}), {} outputs",
        ch.users(),
        ch.input_sizes(),
        ch.state_count(),
        ch.s0(),
        ch.output_count()
    );
    let subsets = |m: &[SubsetWitness]| m.iter().map(|sw| users_1based(&sw.users)).collect::<Vec<_>>();
    let mut by_size = Vec::new();
    for (m, list) in &sym {
        let ow = over.get(m).map(Vec::as_slice).unwrap_or_default();
        let _ = writeln!(
            text,
            "size {m}: symmetrizable {} of {}; overwritable {}",
            list.len(),
            crate::util::binomial(ch.users() as u64, *m as u64).unwrap_or(0),
            ow.len()
        );
        if !list.is_empty() {
            let _ = writeln!(text, "  symmetrizable: {}", subsets(list).join(" "));
        }
        if !ow.is_empty() {
            let _ = writeln!(text, "  overwritable: {}", subsets(ow).join(" "));
        }
        by_size.push(json!({
            "size": m,
            "symmetrizable": list.iter().map(|sw| users_json(&sw.users)).collect::<Vec<_>>(),
            "overwritable": ow.iter().map(|sw| users_json(&sw.users)).collect::<Vec<_>>(),
        }));
    }
    if let Some(dir) = witness_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        for (kind, map) in [(WitnessKind::Symmetrizer, &sym), (WitnessKind::Overwriter, &over)] {
            for sw in map.values().flatten() {
                let name: Vec<String> = sw.users.iter().map(|u| (u + 1).to_string()).collect();
                let path = dir.join(format!("{kind}_{}.toml", name.join("-")));
                write(&path, &serialize_witness(&sw.witness, Some(kind))?)?;
            }
        }
    }
    let mut body = json!({ "channel": channel_summary(ch), "subsets": by_size });
    let verdict = match gamma {
        None => Verdict::Pass,
        Some(g) => {
            let report = interior_necessary_conditions(ch, g)?;
            let _ = writeln!(
                text,
                "gamma = {g}: t = {}, u = {}, tolerance t - u = {}",
                report.t,
                report.u,
                report.t - report.u
            );
            for f in &report.failures {
                let _ = writeln!(text, "  violated: {f}");
            }
            let _ = writeln!(text, "necessary conditions: {}", if report.passes() { "PASS" } else { "FAIL" });
            body["necessary_conditions"] = json!({
                "gamma": g,
                "t": report.t,
                "u": report.u,
                "pass": report.passes(),
                "failures": report.failures,
            });
            Verdict::from_bool(report.passes())
        }
    };
    Ok(Report { command: "check-channel", verdict, text, body })
}

fn verify(
    path: &Path,
    ell: Option<usize>,
    adder: Option<(usize, usize)>,
    gamma: &Gamma,
    a1_budget: u64,
) -> Result<Report, CliError> {
    let cb = load_codebooks(path)?;
    let ell = match (ell, adder) {
        (Some(l), Some((_, la))) if l != la => {
            return Err(CliError::Usage(format!("--ell {l} disagrees with --adder ell {la}")))
        }
        (_, Some((t, _))) if t != cb.t() => {
            return Err(CliError::Usage(format!("--adder has t = {t} but the codebook has {} users", cb.t())))
        }
        (Some(l), _) => l,
        (None, Some((_, l))) => l,
        (None, None) => return Err(CliError::Usage("one of --ell or --adder is required".into())),
    };
    let report = verify_zero_error_with(&cb, ell, gamma, &VerifierConfig { a1_budget })?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "codebook: t = {}, n = {}, sizes {:?}; ell = {ell}, gamma = {gamma}, u = {}",
        cb.t(),
        cb.n(),
        cb.sizes(),
        report.u
    );
    for c in 1..=3u8 {
        let failures: Vec<_> = report.failures.iter().filter(|f| f.condition() == c).collect();
        if failures.is_empty() {
            let _ = writeln!(text, "condition {c}: ok");
            continue;
        }
        let _ = writeln!(text, "condition {c}: FAIL ({} witnesses)", failures.len());
        for f in failures.iter().take(TEXT_WITNESS_LIMIT) {
            let _ = writeln!(text, "  {f}");
        }
        if failures.len() > TEXT_WITNESS_LIMIT {
            let _ = writeln!(text, "  ... {} more", failures.len() - TEXT_WITNESS_LIMIT);
        }
    }
    let _ = writeln!(text, "verdict: {}", if report.verdict { "ZERO-ERROR" } else { "NOT ZERO-ERROR" });
    let body = json!({
        "codebook": cb,
        "n": cb.n(),
        "verdict": report.verdict,
        "gamma": report.gamma,
        "ell": report.ell,
        "t": report.t,
        "u": report.u,
        "failed_conditions": report.failed_conditions(),
        "failures": report.failures,
    });
    Ok(Report { command: "verify", verdict: Verdict::from_bool(report.verdict), text, body })
}

fn tuple_line(cb: &CodebookTuple) -> String {
    cb.codebooks()
        .iter()
        .map(|b| b.iter().map(|w| codeword_string(w)).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn run_search(spec: &SearchSpec, out_dir: Option<&Path>) -> Result<Report, CliError> {
    let outcome = search(spec)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        for (i, cb) in outcome.results.iter().enumerate() {
            write(&dir.join(format!("tuple_{:04}.txt", i + 1)), &serialize_codebooks(cb))?;
        }
    }
    let s = &outcome.stats;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "search: t = {}, n = {}, ell = {}, gamma = {}, sizes {:?}, symmetry reduction {}",
        spec.t,
        spec.n,
        spec.ell,
        spec.gamma,
        spec.sizes,
        if spec.symmetry_reduction { "on" } else { "off" }
    );
    let rows: [(&str, u64); 10] = [
        ("prefixes generated", s.prefixes_generated),
        ("candidates generated", s.candidates_generated),
        ("pruned: union structure", s.pruned.union_structure + s.prefixes_pruned.union_structure),
        ("pruned: sperner bound", s.pruned.sperner + s.prefixes_pruned.sperner),
        ("pruned: condition 1", s.pruned.condition1 + s.prefixes_pruned.condition1),
        ("pruned: condition 2", s.pruned.condition2 + s.prefixes_pruned.condition2),
        ("pruned: condition 3 scan", s.pruned.condition3_fast + s.prefixes_pruned.condition3_fast),
        ("pruned: condition 3", s.pruned.condition3 + s.prefixes_pruned.condition3),
        ("duplicates", s.duplicates),
        ("fully verified", s.verified),
    ];
    let _ = writeln!(text, "  {:<28}{:>12}", "antichain codebooks per user", format!("{:?}", s.codebooks_per_user));
    for (name, v) in rows {
        let _ = writeln!(text, "  {name:<28}{v:>12}");
    }
    if outcome.budget_exhausted {
        let _ = writeln!(text, "budget exhausted: results are partial");
    }
    if outcome.stopped_early {
        let _ = writeln!(text, "stopped after {} results", outcome.results.len());
    }
    let _ = writeln!(text, "results: {}", outcome.results.len());
    for cb in outcome.results.iter().take(TEXT_RESULT_LIMIT) {
        let _ = writeln!(text, "  {}", tuple_line(cb));
    }
    if outcome.results.len() > TEXT_RESULT_LIMIT {
        let _ = writeln!(text, "  ... {} more", outcome.results.len() - TEXT_RESULT_LIMIT);
    }
    let body = serde_json::to_value(&outcome).expect("search outcome serializes");
    Ok(Report { command: "search", verdict: Verdict::from_bool(!outcome.results.is_empty()), text, body })
}

fn parse_outer_code(s: &str) -> Result<Vec<Vec<usize>>, CliError> {
    s.split(',').map(|w| parse_symbols(w.trim()).map_err(CliError::from)).collect()
}

/// Path of `target` as written into a plan stored in `plan_dir`: relative when both
/// resolve on disk, absolute otherwise.
fn plan_relative(target: &Path, plan_dir: &Path) -> String {
    let (Ok(t), Ok(d)) = (std::fs::canonicalize(target), std::fs::canonicalize(plan_dir)) else {
        return target.to_string_lossy().into_owned();
    };
    let (tc, dc): (Vec<_>, Vec<_>) = (t.components().collect(), d.components().collect());
    let common = tc.iter().zip(&dc).take_while(|(a, b)| a == b).count();
    let mut rel = PathBuf::new();
    for _ in common..dc.len() {
        rel.push("..");
    }
    rel.extend(&tc[common..]);
    rel.to_string_lossy().into_owned()
}

fn plan_dir(plan: &Path) -> &Path {
    match plan.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn load_plan(path: &Path) -> Result<ExtensionPlan, CliError> {
    let file = parse_plan(&read(path)?).map_err(|e| CliError::File { path: path.to_path_buf(), source: e })?;
    let inner = load_codebooks(&plan_dir(path).join(&file.inner))?;
    Ok(build_plan(inner, file.outer_codes()?, file.r, file.ell, &file.gamma)?)
}

fn plan_text(plan: &ExtensionPlan) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "plan: t = {}, u = {}, inner n = {}, r = {}, ell = {}, gamma = {}",
        plan.t,
        plan.u,
        plan.inner.n(),
        plan.r,
        plan.ell,
        plan.gamma
    );
    let _ = writeln!(text, "erasure budget {}; required outer d_min {}", plan.budget, plan.required_dmin);
    for (j, (code, d)) in plan.outer.iter().zip(&plan.outer_dmin).enumerate() {
        let d = d.map_or_else(|| "-".to_string(), |d| d.to_string());
        let _ = writeln!(text, "  user {}: {} outer codewords, d_min {d}", j + 1, code.len());
    }
    for w in &plan.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    text
}

fn extend_build(
    inner_path: &Path,
    gamma: &Gamma,
    ell: usize,
    r: usize,
    outer: &[String],
    out: &Path,
) -> Result<Report, CliError> {
    let inner = load_codebooks(inner_path)?;
    let mut codes = outer.iter().map(|s| parse_outer_code(s)).collect::<Result<Vec<_>, _>>()?;
    if codes.len() == 1 {
        codes = vec![codes.remove(0); inner.t()];
    }
    let plan = build_plan(inner, codes.clone(), r, ell, gamma)?;
    let file = PlanFile::new(plan_relative(inner_path, plan_dir(out)), gamma.clone(), ell, r, &codes);
    write(out, &serialize_plan(&file)?)?;
    let mut text = plan_text(&plan);
    let _ = writeln!(text, "wrote {}", out.display());
    let weak = plan.weak_users();
    let body = json!({ "plan": plan, "weak_users": users_json(&weak) });
    Ok(Report { command: "extend build", verdict: Verdict::from_bool(weak.is_empty()), text, body })
}

fn extend_verify(path: &Path, budget: u64) -> Result<Report, CliError> {
    let plan = load_plan(path)?;
    let verdict = verify_extension(&plan, budget)?;
    let mut text = plan_text(&plan);
    let _ = writeln!(text, "admissible patterns checked: {}", verdict.patterns_checked);
    match &verdict.failure {
        None => {
            let _ = writeln!(text, "every admissible erasure pattern leaves at least u users decodable: PASS");
        }
        Some(f) => {
            let _ = writeln!(text, "FAIL at pattern {}", f.pattern);
            let msgs: Vec<String> = f.messages.iter().map(|m| m.to_string()).collect();
            let _ = writeln!(text, "  outer messages ({}) recover only {} users", msgs.join(","), f.recovered);
        }
    }
    let body = json!({ "plan": plan, "verdict": verdict });
    Ok(Report { command: "extend verify", verdict: Verdict::from_bool(verdict.pass), text, body })
}

fn extend_rates(path: &Path) -> Result<Report, CliError> {
    let plan = load_plan(path)?;
    let rates = achieved_rates(&plan);
    let mut text = String::new();
    let _ = writeln!(text, "{:<6}{:>12}{:>12}{:>12}{:>10}", "user", "inner", "outer", "achieved", "exact");
    for j in 0..plan.t {
        let exact = rates.exact[j].as_ref().map_or_else(|| "-".to_string(), format_rational);
        let _ = writeln!(
            text,
            "{:<6}{:>12.6}{:>12.6}{:>12.6}{:>10}",
            j + 1,
            rates.inner[j],
            rates.outer[j],
            rates.achieved[j],
            exact
        );
    }
    let positive = rates.achieved.iter().all(|&r| r > 0.0);
    let body = json!({ "plan": plan, "rates": rates });
    Ok(Report { command: "extend rates", verdict: Verdict::from_bool(positive), text, body })
}

struct EvalOptions<'a> {
    ell: usize,
    mode: Mode,
    witness: Option<&'a Path>,
    cfg: MonteCarloConfig,
    budget: u64,
}

fn attack_witness(
    ch: &ChannelSpec,
    users: &[usize],
    kind: WitnessKind,
    path: Option<&Path>,
) -> Result<Option<StateConditionalWitness>, CliError> {
    if let Some(p) = path {
        let (w, declared) =
            parse_witness(&read(p)?).map_err(|e| CliError::File { path: p.to_path_buf(), source: e })?;
        if declared.is_some_and(|d| d != kind) {
            return Err(CliError::Usage(format!(
                "{} holds a {} witness, expected {kind}",
                p.display(),
                declared.unwrap()
            )));
        }
        return Ok(Some(w));
    }
    Ok(match kind {
        WitnessKind::Symmetrizer => find_symmetrizer(ch, users)?,
        WitnessKind::Overwriter => find_overwriter(ch, users)?,
    })
}

fn profile_pass(p: &ErrorProfile) -> bool {
    p.entries.iter().all(|e| match &e.value {
        ErrorValue::Exact { value } => num_traits::Zero::is_zero(value),
        ErrorValue::Estimate(est) => est.failures == 0,
    })
}

fn evaluate(
    cb: &CodebookTuple,
    ch: &ChannelSpec,
    gamma: &Gamma,
    strategy: &str,
    opts: &EvalOptions<'_>,
) -> Result<Report, CliError> {
    let decoder = CanonicalDecoder::new_unchecked(cb, opts.ell);
    let (kind_name, arg) = strategy.split_once(':').unwrap_or((strategy, ""));
    let mc = opts.mode == Mode::MonteCarlo;
    let mut note = None;
    let profile = match (kind_name, mc) {
        ("all", false) => max_error_exhaustive(cb, ch, &decoder, gamma, opts.budget)?,
        ("all", true) => {
            return Err(CliError::Usage("strategy \"all\" needs --mode exhaustive; pick a strategy".into()))
        }
        ("no-adversary", false) | ("fixed", false) => {
            let s = if kind_name == "fixed" {
                StateSequence(parse_symbols(arg)?)
            } else {
                StateSequence::no_adversary(cb.n(), ch.s0())
            };
            let value = exact_error(cb, ch, &decoder, &s, gamma)?;
            ErrorProfile::new(vec![crate::adversary::ErrorEntry {
                label: s.to_string(),
                value: ErrorValue::Exact { value },
            }])
        }
        ("no-adversary", true) | ("uniform", true) | ("fixed", true) => {
            let strat = match kind_name {
                "no-adversary" => Strategy::NoAdversary,
                "uniform" => Strategy::UniformRandom,
                _ => Strategy::Fixed(StateSequence(parse_symbols(arg)?)),
            };
            monte_carlo_error(cb, ch, &decoder, &strat, gamma, &opts.cfg)?
        }
        ("uniform", false) => return Err(CliError::Usage("strategy \"uniform\" needs --mode monte-carlo".into())),
        ("symmetrize", _) | ("overwrite", _) => {
            let users = parse_users(arg, ch.users())?;
            let kind = if kind_name == "symmetrize" { WitnessKind::Symmetrizer } else { WitnessKind::Overwriter };
            if kind == WitnessKind::Overwriter && !mc {
                return Err(CliError::Usage("the overwrite attack needs --mode monte-carlo".into()));
            }
            let Some(w) = attack_witness(ch, &users, kind, opts.witness)? else {
                let text = format!("no {kind} exists for users {}: attack unreachable\n", users_1based(&users));
                let body = json!({ "attack": kind, "users": users_json(&users), "witness": Value::Null });
                return Ok(Report { command: "evaluate", verdict: Verdict::Fail, text, body });
            };
            note = Some(format!("{kind} attack on users {}", users_1based(&users)));
            match (kind, mc) {
                (WitnessKind::Symmetrizer, false) => {
                    let value = symmetrization_attack_exact(ch, &users, &w, cb, &decoder, gamma, opts.budget)?;
                    ErrorProfile::new(vec![crate::adversary::ErrorEntry {
                        label: "symmetrization".into(),
                        value: ErrorValue::Exact { value },
                    }])
                }
                (WitnessKind::Symmetrizer, true) => {
                    symmetrization_attack(ch, &users, &w, cb, &decoder, gamma, &opts.cfg)?
                }
                (WitnessKind::Overwriter, _) => overwrite_attack(ch, &users, &w, cb, &decoder, gamma, &opts.cfg)?,
            }
        }
        _ => return Err(CliError::Usage(format!("unknown strategy {strategy:?}"))),
    };
    let mut text = String::new();
    let _ = writeln!(
        text,
        "evaluate: t = {}, n = {}, gamma = {gamma}, decoder ell = {}, mode {}",
        cb.t(),
        cb.n(),
        opts.ell,
        if mc { "monte-carlo" } else { "exhaustive" }
    );
    if let Some(n) = &note {
        let _ = writeln!(text, "{n}");
    }
    if mc {
        let _ =
            writeln!(text, "trials {}, seed {}, confidence {}", opts.cfg.trials, opts.cfg.seed, opts.cfg.confidence);
    }
    let nonzero = profile.entries.iter().filter(|e| e.value.as_f64() > 0.0).count();
    if profile.entries.len() > 1 {
        let _ = writeln!(text, "evaluated {} entries, {nonzero} with positive error", profile.entries.len());
    } else {
        for e in &profile.entries {
            let _ = writeln!(text, "{}: {}", e.label, describe(&e.value));
        }
    }
    if let Some(m) = &profile.max {
        let _ = writeln!(text, "max error: {} at {}", describe(&m.value), m.label);
    }
    if let Some(imp) = &profile.impersonation {
        let _ =
            writeln!(text, "impersonation rate: {:.6} ± {:.6} ({}/{})", imp.mean, imp.radius, imp.failures, imp.trials);
    }
    let body = json!({
        "strategy": strategy,
        "mode": if mc { "monte-carlo" } else { "exhaustive" },
        "seed": mc.then_some(opts.cfg.seed),
        "profile": profile,
    });
    Ok(Report { command: "evaluate", verdict: Verdict::from_bool(profile_pass(&profile)), text, body })
}
