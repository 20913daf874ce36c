//! Argument parsing, scenario assembly and JSON report emission for the
//! `verify` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use covergen::verify::{
    default_grid, run_scenario, spectral_at, CheckpointLabel, GridEntry, Mode, Scenario, ScenarioKind, Verdict,
    VerificationReport, VerifyError,
};
use covergen::integrator::IntegrationError;
use num_complex::Complex64;
use serde::Serialize;

/// Environment variable overriding the default coset budget.
pub const BUDGET_ENV: &str = "COVERGEN_BUDGET";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error(transparent)]
    Scenario(#[from] VerifyError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Lemma,
    Cor,
    Prop2,
    Thm1,
    Thm2,
    Chain,
    Support,
    Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Montecarlo,
}

#[derive(Debug, Parser)]
#[command(name = "verify", version, about = "Brute-force p-adic checks of unramified Whittaker identities on covers of GL_r")]
pub struct Cli {
    /// What to run
    #[arg(value_enum, required_unless_present = "list_scenarios")]
    pub command: Option<Command>,
    /// Cover degree
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Rank of GL_r
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub prime: u64,
    /// Spectral point `a+bi`
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Comma-separated `χ_i^n(p)` values, each `a+bi`
    #[arg(long, allow_hyphen_values = true)]
    pub chi: Option<String>,
    /// Single-step truncation, with `--v-mod`
    #[arg(long, allow_hyphen_values = true, requires = "v_mod")]
    pub v_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true, requires = "v_min")]
    pub v_mod: Option<i32>,
    /// Torus truncation degree (prop2)
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Comma-separated torus valuations (thm1, thm2, chain)
    #[arg(long, allow_hyphen_values = true)]
    pub torus: Option<String>,
    /// Comma-separated checkpoint labels (chain)
    #[arg(long)]
    pub labels: Option<String>,
    /// ε of the lemma
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub epsilon: i64,
    /// Exponent of a = p^k in the lemma
    #[arg(long, default_value_t = 0)]
    pub a_exp: i64,
    /// Random translates (cor) or valuation patterns (support)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    pub mode: ModeArg,
    /// Monte-Carlo sample count
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Coset budget per scenario
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Rational shift `a/b` added to s' (prop2 self-test)
    #[arg(long, allow_hyphen_values = true)]
    pub s_prime_shift: Option<String>,
    /// Report path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print the default suite with expected running times
    #[arg(long)]
    pub list_scenarios: bool,
}

/// A validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub scenarios: Vec<Scenario>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub list_scenarios: bool,
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Usage(format!("cannot parse complex number '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| match x {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => x.parse::<f64>().map_err(|_| bad()),
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn parse_list<T>(s: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    s.split(',').map(|x| f(x.trim()).ok_or_else(|| CliError::Usage(format!("bad {what} entry '{x}'")))).collect()
}

fn kind_of(c: Command) -> Option<ScenarioKind> {
    Some(match c {
        Command::Lemma => ScenarioKind::LemmaSimple1,
        Command::Cor => ScenarioKind::Cor1,
        Command::Prop2 => ScenarioKind::Prop2,
        Command::Thm1 => ScenarioKind::Thm1,
        Command::Thm2 => ScenarioKind::Thm2,
        Command::Chain => ScenarioKind::CheckpointChain,
        Command::Support => ScenarioKind::Support,
        Command::Suite => return None,
    })
}

fn budget_override(flag: Option<u128>) -> Result<Option<u128>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("{BUDGET_ENV}={v} is not an integer"))),
        Err(_) => Ok(None),
    }
}

/// The scenario described by single-command flags.
fn build_scenario(cli: &Cli, kind: ScenarioKind) -> Result<Scenario, CliError> {
    let (n, r) = match kind {
        ScenarioKind::LemmaSimple1 | ScenarioKind::Cor1 => (3, 1),
        _ => (cli.n, cli.r),
    };
    let mut sc = Scenario::new(kind, n, r, cli.prime);
    match kind {
        ScenarioKind::LemmaSimple1 | ScenarioKind::Cor1 => {
            sc = sc.with_schedule(&[(-1, 2), (-2, 3)]).with_tolerance(1e-8);
        }
        ScenarioKind::Prop2 if r > 1 => {
            sc = sc.with_tolerance(1e-4);
            sc.k_max = 3;
            sc.s = Some(spectral_at(0.05, cli.prime));
        }
        ScenarioKind::Thm2 => sc = sc.with_schedule(&[(-1, 0), (-1, 1), (-2, 1)]).with_tolerance(1e-4),
        ScenarioKind::CheckpointChain => sc = sc.with_tolerance(1e-4),
        ScenarioKind::Support => {
            sc = sc.with_tolerance(1e-8);
            sc.samples = 20;
        }
        _ => {}
    }
    if let (Some(a), Some(b)) = (cli.v_min, cli.v_mod) {
        sc = sc.with_schedule(&[(a, b)]);
    }
    if let Some(k) = cli.k_max {
        sc.k_max = k;
    }
    if let Some(s) = &cli.s {
        sc.s = Some(parse_complex(s)?);
    }
    if let Some(c) = &cli.chi {
        sc.chi_n = Some(c.split(',').map(parse_complex).collect::<Result<_, _>>()?);
    }
    sc.torus = match &cli.torus {
        Some(t) => parse_list(t, "torus", |x| x.parse::<i64>().ok())?,
        None if matches!(kind, ScenarioKind::Thm1 | ScenarioKind::Thm2 | ScenarioKind::CheckpointChain) => {
            let mut v = vec![0; sc.r];
            v[0] = sc.n as i64;
            v
        }
        None => Vec::new(),
    };
    if kind == ScenarioKind::CheckpointChain {
        sc.labels = match &cli.labels {
            Some(l) => parse_list(l, "label", |x| x.parse::<CheckpointLabel>().ok())?,
            None if sc.r < sc.n && sc.r == sc.n - 1 => vec![CheckpointLabel::Whit11, CheckpointLabel::Whit2],
            None => vec![
                CheckpointLabel::Local7,
                CheckpointLabel::Local8,
                CheckpointLabel::Local11,
                CheckpointLabel::Local13,
                CheckpointLabel::Local16,
            ],
        };
    }
    sc.epsilon = cli.epsilon;
    sc.a_exp = cli.a_exp;
    if let Some(k) = cli.samples {
        sc.samples = k;
    }
    sc.mode = match cli.mode {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Montecarlo => Mode::Montecarlo { samples: cli.mc_samples },
    };
    sc.seed = cli.seed;
    if let Some(b) = budget_override(cli.budget)? {
        sc.budget = b;
    }
    if let Some(t) = cli.tolerance {
        sc = sc.with_tolerance(t);
    }
    if let Some(sh) = &cli.s_prime_shift {
        let bad = || CliError::Usage(format!("bad --s-prime-shift '{sh}', expected a/b"));
        let (a, b) = sh.split_once('/').ok_or_else(bad)?;
        let (a, b) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        sc.s_prime_shift = Some((a, b));
    }
    sc.name = format!("{}({},{})", sc.kind, sc.n, sc.r);
    sc.validate()?;
    Ok(sc)
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        if cli.threads == Some(0) {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        let scenarios = match cli.command {
            None => Vec::new(),
            Some(c) => match kind_of(c) {
                Some(kind) => vec![build_scenario(cli, kind)?],
                None => {
                    let budget = budget_override(cli.budget)?;
                    default_grid()
                        .into_iter()
                        .map(|e| {
                            let mut sc = e.scenario;
                            if let Some(b) = budget {
                                sc.budget = b;
                            }
                            sc
                        })
                        .collect()
                }
            },
        };
        Ok(Self { command: cli.command, scenarios, out: cli.out.clone(), threads: cli.threads, list_scenarios: cli.list_scenarios })
    }
}

/// Parses a full argument vector, program name first.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    RunConfig::from_cli(&Cli::try_parse_from(argv)?)
}

/// The acceptance grid as text, one scenario per line.
pub fn list_scenarios(grid: &[GridEntry]) -> String {
    let mut s = String::new();
    let mut total = 0.0;
    for e in grid {
        total += e.expected_secs;
        s.push_str(&format!("{:>2}  {:<40} ~{:.1}s\n", e.criterion, e.scenario.name, e.expected_secs));
    }
    s.push_str(&format!("{} scenarios, ~{:.0}s on one core\n", grid.len(), total));
    s
}

/// One report object in the emitted array.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord<'a> {
    pub schema: u32,
    pub scenario: &'a str,
    pub params: &'a std::collections::BTreeMap<String, String>,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub converged: bool,
    pub coset_count: u128,
    pub elapsed_ms: u64,
    pub verdict: Verdict,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_lhs: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_rhs: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub jacobian: &'a [covergen::verify::JacobianCheck],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub notes: &'a [String],
}

impl<'a> From<&'a VerificationReport> for ReportRecord<'a> {
    fn from(r: &'a VerificationReport) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            scenario: &r.scenario,
            params: &r.params,
            lhs_re: r.lhs.re,
            lhs_im: r.lhs.im,
            rhs_re: r.rhs.re,
            rhs_im: r.rhs.im,
            abs_err: r.abs_err,
            rel_err: r.rel_err,
            converged: r.converged,
            coset_count: r.coset_count,
            elapsed_ms: r.elapsed_ms,
            verdict: r.verdict,
            tolerance: r.tolerance,
            stderr: r.stderr,
            tail_bound: r.tail_bound,
            raw_lhs: r.raw_lhs.map(|z| [z.re, z.im]),
            raw_rhs: r.raw_rhs.map(|z| [z.re, z.im]),
            jacobian: &r.jacobian,
            notes: &r.notes,
        }
    }
}

/// Report standing in for a scenario that stopped with an error: budget
/// exhaustion is inconclusive, anything else fails.
pub fn error_report(sc: &Scenario, err: &VerifyError) -> VerificationReport {
    let verdict = match err {
        VerifyError::Integration(IntegrationError::BudgetExceeded { .. }) => Verdict::Inconclusive,
        _ => Verdict::Fail,
    };
    let nan = Complex64::new(f64::NAN, f64::NAN);
    VerificationReport {
        scenario: sc.name.clone(),
        params: Default::default(),
        lhs: nan,
        rhs: nan,
        abs_err: f64::NAN,
        rel_err: f64::NAN,
        converged: false,
        coset_count: 0,
        elapsed_ms: 0,
        verdict,
        tolerance: sc.tolerance,
        raw_lhs: None,
        raw_rhs: None,
        stderr: None,
        tail_bound: None,
        jacobian: Vec::new(),
        notes: vec![format!("error: {err}")],
    }
}

/// Runs the scenarios one after another in the given order.
pub fn run(scenarios: &[Scenario]) -> Vec<VerificationReport> {
    scenarios
        .iter()
        .flat_map(|sc| match run_scenario(sc) {
            Ok(reps) => reps,
            Err(e) => vec![error_report(sc, &e)],
        })
        .collect()
}

/// 0 when every report passes, 1 when any fails, 2 when some are
/// inconclusive and none fails.
pub fn exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        1
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        2
    } else {
        0
    }
}

pub fn to_json(reports: &[VerificationReport]) -> String {
    let recs: Vec<ReportRecord<'_>> = reports.iter().map(ReportRecord::from).collect();
    serde_json::to_string_pretty(&recs).expect("reports serialize")
}

/// Writes the JSON array to `path` (stdout when `None`) and returns the exit
/// code; 3 on I/O failure.
pub fn emit_report(reports: &[VerificationReport], path: Option<&Path>) -> i32 {
    let json = to_json(reports);
    let written = match path {
        Some(p) => std::fs::write(p, json + "\n"),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{json}")
        }
    };
    match written {
        Ok(()) => exit_code(reports),
        Err(e) => {
            eprintln!("{}", CliError::Io(e));
            3
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_ignores_rank_flags() {
        let cli = Cli::try_parse_from(["verify", "lemma", "--n", "5", "--r", "4", "--epsilon", "-1", "--a-exp", "1"]).unwrap();
        let sc = build_scenario(&cli, ScenarioKind::LemmaSimple1).unwrap();
        assert_eq!((sc.n, sc.r, sc.epsilon, sc.a_exp), (3, 1, -1, 1));
    }

    #[test]
    fn chain_defaults_follow_rank() {
        let cli = Cli::try_parse_from(["verify", "chain", "--n", "2", "--r", "1"]).unwrap();
        let sc = build_scenario(&cli, ScenarioKind::CheckpointChain).unwrap();
        assert_eq!(sc.labels, vec![CheckpointLabel::Whit11, CheckpointLabel::Whit2]);
        assert_eq!(sc.torus, vec![2]);
        let cli = Cli::try_parse_from(["verify", "chain", "--n", "2", "--r", "2", "--labels", "local7,local8"]).unwrap();
        let sc = build_scenario(&cli, ScenarioKind::CheckpointChain).unwrap();
        assert_eq!(sc.labels, vec![CheckpointLabel::Local7, CheckpointLabel::Local8]);
    }

    #[test]
    fn explicit_truncation_is_one_step() {
        let cli = Cli::try_parse_from(["verify", "thm2", "--n", "2", "--r", "2", "--v-min", "-2", "--v-mod", "1"]).unwrap();
        let sc = build_scenario(&cli, ScenarioKind::Thm2).unwrap();
        assert_eq!(sc.schedule.steps.len(), 1);
        assert_eq!((sc.schedule.steps[0].v_min, sc.schedule.steps[0].v_mod), (-2, 1));
    }

    #[test]
    fn shift_must_be_a_fraction() {
        for bad in ["1", "1/0", "a/2"] {
            let cli = Cli::try_parse_from(["verify", "prop2", "--s-prime-shift", bad]).unwrap();
            assert!(build_scenario(&cli, ScenarioKind::Prop2).is_err(), "{bad}");
        }
    }
}
