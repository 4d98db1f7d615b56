//! The `qss` command-line front end: self-verification, single runs and
//! batched attack experiments. Every command is a pure function of its flags.

use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qss_core::adversary::trial_seed;
use qss_core::ghz::{
    check_u_relation, form_equivalence, ghz_closed_form, ghz_sum_form, CommonEigenspace, GhzSpec, SOLVER_LIMIT,
};
use qss_core::math::{EIGEN_TOL, EQ_TOL};
use qss_core::mub::{check_mub, eigen_residuals};
use qss_core::protocol::{MaskRule, OrderRule};
use qss_core::{
    estimate_detection, rng_stream, run_protocol, AdversaryKind, AlphaMode, Dim, ProtocolConfig, PureState, QssError,
    RunReport, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qss",
    version,
    about = "Three-party d-level quantum secret sharing simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the bases, states and eigenspace uniqueness for a range of d.
    Verify(VerifyArgs),
    /// Run the protocol once and write the report.
    Run(RunArgs),
    /// Estimate the detection rate of an attack over many runs.
    Attack(AttackArgs),
}

/// An inclusive range of dimensions, written `a..b` or as a single value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimRange(pub RangeInclusive<usize>);

impl FromStr for DimRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid dimension {t:?}"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty dimension range {s:?}"));
        }
        Ok(DimRange(lo..=hi))
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Dimensions to check, e.g. `2..8` (inclusive) or `5`.
    #[arg(long, default_value = "2..8")]
    pub d: DimRange,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaModeArg {
    Fixed,
    /// A fresh hidden value per round.
    String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    PerRound,
    PerRun,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub d: usize,
    /// Half the number of prepared rounds.
    #[arg(long)]
    pub n: usize,
    /// Hidden value for fixed mode; drawn from the seed when omitted.
    #[arg(long)]
    pub alpha: Option<usize>,
    #[arg(long, value_enum, default_value = "fixed")]
    pub alpha_mode: AlphaModeArg,
    /// Test each round independently with this probability instead of
    /// testing exactly `n` rounds.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, value_enum, default_value = "per-round")]
    pub order: OrderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value = "none")]
    pub adversary: String,
    /// Also write the line-delimited transcript here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Exit with status 1 when the run aborts.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub adversary: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<QssError> for CliError {
    fn from(e: QssError) -> Self {
        match e {
            QssError::Contract(_) | QssError::Resource(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn parse_dim(d: usize) -> Result<Dim, CliError> {
    Dim::new(d).map_err(|_| CliError::Usage(format!("d must be at least 2, got {d}")))
}

fn parse_adversary(name: &str) -> Result<AdversaryKind, CliError> {
    name.parse().map_err(CliError::Usage)
}

impl ProtocolArgs {
    pub fn config(&self) -> Result<ProtocolConfig, CliError> {
        let d = parse_dim(self.d)?;
        if self.n < 1 {
            return usage("n must be at least 1");
        }
        let alpha = match (self.alpha_mode, self.alpha) {
            (AlphaModeArg::Fixed, Some(alpha)) => AlphaMode::Fixed { alpha },
            (AlphaModeArg::Fixed, None) => AlphaMode::Fixed {
                alpha: rng_stream(self.seed, "alpha").below(d.get()),
            },
            (AlphaModeArg::String, None) => AlphaMode::PerRound,
            (AlphaModeArg::String, Some(_)) => return usage("--alpha conflicts with --alpha-mode string"),
        };
        let mut cfg = ProtocolConfig::new(d, self.n, alpha, self.seed)?;
        cfg.order = match self.order {
            OrderArg::PerRound => OrderRule::PerRound,
            OrderArg::PerRun => OrderRule::PerRun,
        };
        if let Some(p) = self.test_fraction {
            cfg.mask = MaskRule::Bernoulli { p };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-dimension results of `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct DimCheck {
    pub d: usize,
    pub mub_deviation: f64,
    pub x_residual: f64,
    pub y_residual: f64,
    /// Max over alpha of `1 - |<sum form|closed form>|`.
    pub sum_closed_deviation: f64,
    pub u_relation: bool,
    pub form_equivalence: bool,
    /// Common eigenspace rank for each alpha.
    pub ranks: Vec<usize>,
    /// Max over alpha of `1 - |<eigenvector|closed form>|`; `null` if some
    /// rank was not 1.
    pub generator_deviation: Option<f64>,
    pub largest_discarded: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub eq_tolerance: f64,
    pub eigen_tolerance: f64,
    pub dims: Vec<DimCheck>,
    pub passed: bool,
}

fn phase_deviation(a: &PureState, b: &PureState) -> Result<f64, QssError> {
    Ok((1.0 - a.inner(b)?.norm()).max(0.0))
}

pub fn check_dimension(d: Dim) -> Result<DimCheck, QssError> {
    let res = eigen_residuals(d)?;
    let solver = CommonEigenspace::new(d)?;
    let mut sum_closed: f64 = 0.0;
    let mut u_relation = true;
    let mut forms = true;
    let mut ranks = Vec::new();
    let mut generator: Option<f64> = Some(0.0);
    let mut largest_discarded: f64 = 0.0;
    for a in d.residues() {
        let spec = GhzSpec::xyy(d, a.value());
        let closed = ghz_closed_form(&spec)?;
        sum_closed = sum_closed.max(phase_deviation(&ghz_sum_form(&spec), &closed)?);
        u_relation &= check_u_relation(d, a);
        forms &= form_equivalence(d, a);
        let space = solver.solve(a)?;
        ranks.push(space.rank);
        largest_discarded = largest_discarded.max(space.largest_discarded);
        generator = match (generator, space.basis.as_slice()) {
            (Some(g), [v]) => Some(g.max(phase_deviation(v, &closed)?)),
            _ => None,
        };
    }
    let mub_deviation = check_mub(d);
    let passed = mub_deviation < EQ_TOL
        && res.x < EIGEN_TOL
        && res.y < EIGEN_TOL
        && sum_closed < EQ_TOL
        && u_relation
        && forms
        && ranks.iter().all(|&r| r == 1)
        && generator.is_some_and(|g| g < EQ_TOL);
    Ok(DimCheck {
        d: d.get(),
        mub_deviation,
        x_residual: res.x,
        y_residual: res.y,
        sum_closed_deviation: sum_closed,
        u_relation,
        form_equivalence: forms,
        ranks,
        generator_deviation: generator,
        largest_discarded,
        passed,
    })
}

pub fn cmd_verify(range: &DimRange) -> Result<VerifyReport, CliError> {
    let (lo, hi) = (*range.0.start(), *range.0.end());
    if lo < 2 {
        return usage(format!("d must be at least 2, got d={lo}"));
    }
    if hi > SOLVER_LIMIT {
        return usage(format!("verify supports d <= {SOLVER_LIMIT}, got d={hi}"));
    }
    let dims = range
        .0
        .clone()
        .map(|d| check_dimension(parse_dim(d)?).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = dims.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        eq_tolerance: EQ_TOL,
        eigen_tolerance: EIGEN_TOL,
        dims,
        passed,
    })
}

pub fn cmd_run(config: &ProtocolConfig, adversary: AdversaryKind) -> Result<RunReport, CliError> {
    let mut strategy = adversary.build();
    Ok(run_protocol(config, strategy.as_deref_mut())?)
}

/// The report of trial 0 with the batch estimate under `attack`.
pub fn cmd_attack(config: &ProtocolConfig, adversary: AdversaryKind, trials: usize) -> Result<RunReport, CliError> {
    if adversary == AdversaryKind::None {
        return usage("attack needs an adversary other than none");
    }
    if trials < 1 {
        return usage("trials must be at least 1");
    }
    let estimate = estimate_detection(config, adversary, trials)?;
    let mut first = config.clone();
    first.seed = trial_seed(config.seed, 0);
    let mut report = cmd_run(&first, adversary)?;
    report.attack = Some(estimate);
    Ok(report)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Verify(args) => {
            let report = cmd_verify(&args.d)?;
            for c in &report.dims {
                eprintln!(
                    "d={:<2} mub={:.1e} x={:.1e} y={:.1e} sum/closed={:.1e} u={} forms={} ranks={:?} {}",
                    c.d,
                    c.mub_deviation,
                    c.x_residual,
                    c.y_residual,
                    c.sum_closed_deviation,
                    c.u_relation,
                    c.form_equivalence,
                    c.ranks,
                    if c.passed { "ok" } else { "FAILED" }
                );
            }
            write_output(args.out.as_deref(), &json(&report))?;
            Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Run(args) => {
            let kind = parse_adversary(&args.adversary)?;
            let cfg = args.protocol.config()?;
            let report = cmd_run(&cfg, kind)?;
            write_output(args.protocol.out.as_deref(), &json(&report))?;
            if let Some(path) = &args.transcript {
                fs::write(path, report.transcript_lines())
                    .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
            }
            eprintln!(
                "aborted={} key_length={} agreement={}",
                report.aborted,
                report.alice_key.len(),
                report.key_agreement
            );
            Ok(if args.strict && report.aborted {
                EXIT_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::Attack(args) => {
            let kind = parse_adversary(&args.adversary)?;
            let cfg = args.protocol.config()?;
            let report = cmd_attack(&cfg, kind, args.trials)?;
            write_output(args.protocol.out.as_deref(), &json(&report))?;
            let est = report.attack.as_ref().expect("attack estimate attached");
            let mut line = format!(
                "adversary={} trials={} detected={} rate={:.4} std_error={:.4}",
                est.adversary, est.trials, est.detected, est.rate, est.std_error
            );
            if let (Some(a), Some(z)) = (est.analytic, est.z_score) {
                line.push_str(&format!(" analytic={a:.4} z={z:.2}"));
            }
            eprintln!("{line}");
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
