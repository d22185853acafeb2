//! The `qftkron` command-line front end.
//!
//! Data goes to stdout and diagnostics to stderr. Identical arguments give
//! byte-identical output; wall-clock timings are reported only with
//! `--timing`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use crate::circuit::{
    self, lower_to_circuit, qft_count_report, render_text, simulate_dense_within, SwapStyle,
};
use crate::cp::{
    cp_basis_state, diagonal_cascade_cp, qft_rank_experiment_within, seeded_generic_input,
    steps_to_csv, CPState, RankStep, DEFAULT_PRUNE,
};
use crate::error::Error;
use crate::factor::{
    fft_plan, qft_plan, verify_plan_within, FactorizationPlan, Orientation, PlanKind,
};
use crate::spectral::{dft_matrix_with, Direction};
use crate::tensor::{global_dim, to_digits, DenseLimit, DenseVector};

pub const EXIT_OK: i32 = 0;
/// A check ran and failed its tolerance.
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE_LIMIT: i32 = 3;
/// Unreadable or malformed input files.
pub const EXIT_INPUT: i32 = 4;

/// Overrides the default dense limit when `--dense-limit` is absent.
pub const DENSE_LIMIT_ENV: &str = "QFTKRON_DENSE_LIMIT";

#[derive(Parser, Debug)]
#[command(
    name = "qftkron",
    version,
    about = "DFT factorizations, QFT circuits and rank-growth experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a factorization plan.
    Factor(FactorArgs),
    /// Check a plan against the dense DFT matrix.
    Verify(VerifyArgs),
    /// Lower a QFT plan to a gate circuit.
    Circuit(CircuitArgs),
    /// Run a vector through the lowered QFT circuit.
    Simulate(SimulateArgs),
    /// Track term counts of a sum-of-rank-1 state through the QFT factors.
    Rankgrowth(RankArgs),
}

#[derive(Args, Debug, Clone)]
struct Shape {
    /// Number of sites.
    #[arg(long)]
    n: Option<usize>,
    /// Local dimension of each site.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value_t = OrientationArg::TargetFirst)]
    orientation: OrientationArg,
}

impl Shape {
    fn require(&self) -> Result<(usize, usize), CliError> {
        let n = self.n.ok_or_else(|| CliError::usage("--n is required"))?;
        check_shape(n, self.d)?;
        Ok((n, self.d))
    }
}

fn check_shape(n: usize, d: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    if d < 2 {
        return Err(CliError::usage("--d must be at least 2"));
    }
    Ok(())
}

#[derive(Args, Debug, Clone)]
struct LimitArg {
    /// Largest d^n materialized densely [env: QFTKRON_DENSE_LIMIT; default 4096].
    #[arg(long)]
    dense_limit: Option<usize>,
}

impl LimitArg {
    fn resolve(&self) -> Result<DenseLimit, CliError> {
        if let Some(limit) = self.dense_limit {
            return Ok(DenseLimit(limit));
        }
        match std::env::var(DENSE_LIMIT_ENV) {
            Ok(v) => v.trim().parse().map(DenseLimit).map_err(|_| {
                CliError::usage(format!("{DENSE_LIMIT_ENV} must be an integer, got {v:?}"))
            }),
            Err(_) => Ok(DenseLimit::default()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OrientationArg {
    ControlFirst,
    TargetFirst,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::ControlFirst => Orientation::ControlFirst,
            OrientationArg::TargetFirst => Orientation::TargetFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Fft,
    Qft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SwapStyleArg {
    KeepSwap,
    ThreeCnot,
}

#[derive(Args, Debug)]
struct FactorArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, value_enum, default_value_t = KindArg::Qft)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the plan here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, value_enum, default_value_t = KindArg::Qft)]
    kind: KindArg,
    /// Verify a plan JSON file instead of building one.
    #[arg(long, conflicts_with = "n")]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-11)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    limit: LimitArg,
}

#[derive(Args, Debug)]
struct CircuitArgs {
    #[command(flatten)]
    shape: Shape,
    /// Defaults to three-cnot for d = 2 and keep-swap otherwise.
    #[arg(long, value_enum)]
    swap_style: Option<SwapStyleArg>,
    /// Append gate counts and the closed-form comparison.
    #[arg(long)]
    counts: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    shape: Shape,
    /// Start from basis state e_j.
    #[arg(long, conflicts_with_all = ["input", "random"])]
    basis: Option<usize>,
    /// Vector file: one `re im` pair per line.
    #[arg(long, conflicts_with = "random")]
    input: Option<PathBuf>,
    /// Start from a seeded random unit vector.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the inverse transform.
    #[arg(long)]
    inverse: bool,
    /// Compare against the dense DFT matrix.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    limit: LimitArg,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[command(flatten)]
    shape: Shape,
    /// Run the k-factor diagonal cascade on k+1 sites instead of the QFT.
    #[arg(long, value_name = "K")]
    cascade: Option<usize>,
    /// Start from basis state e_j instead of a seeded generic product state.
    #[arg(long)]
    basis: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative weight below which terms are dropped.
    #[arg(long, default_value_t = DEFAULT_PRUNE)]
    prune: f64,
    /// Keep every candidate term, including zero-weight ones.
    #[arg(long, conflicts_with = "prune")]
    no_prune: bool,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    /// Report measured per-step times instead of zeros.
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    limit: LimitArg,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DenseLimitExceeded { .. } => EXIT_RESOURCE_LIMIT,
            Error::Io(_)
            | Error::Json(_)
            | Error::Malformed(_)
            | Error::DimensionMismatch { .. }
            | Error::WireOutOfRange { .. }
            | Error::WireConflict(_) => EXIT_INPUT,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// What a command produced: stdout text, stderr notes and an exit code.
struct Outcome {
    stdout: String,
    stderr: String,
    code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Factor(a) => cmd_factor(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Circuit(a) => cmd_circuit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Rankgrowth(a) => cmd_rankgrowth(&a),
    };
    match result {
        Ok(o) => {
            let _ = out.write_all(o.stdout.as_bytes());
            let _ = err.write_all(o.stderr.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn build_plan(
    kind: KindArg,
    n: usize,
    d: usize,
    orientation: Orientation,
) -> crate::Result<FactorizationPlan> {
    match kind {
        KindArg::Fft => fft_plan(n, d),
        KindArg::Qft => qft_plan(n, d, orientation),
    }
}

fn kind_name(kind: PlanKind) -> &'static str {
    match kind {
        PlanKind::Fft => "fft",
        PlanKind::Qft => "qft",
    }
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::ControlFirst => "control_first",
        Orientation::TargetFirst => "target_first",
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn reject_csv(format: Format, command: &str) -> Result<(), CliError> {
    if format == Format::Csv {
        return Err(CliError::usage(format!(
            "{command} does not support --format csv"
        )));
    }
    Ok(())
}

fn cmd_factor(a: &FactorArgs) -> Result<Outcome, CliError> {
    reject_csv(a.format, "factor")?;
    let (n, d) = a.shape.require()?;
    let plan = build_plan(a.kind, n, d, a.shape.orientation.into())?;
    let text = match a.format {
        Format::Json => {
            let mut s = plan.to_json()?;
            s.push('\n');
            s
        }
        _ => render_plan(&plan),
    };
    match &a.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(Error::from)?;
            Ok(Outcome {
                stdout: String::new(),
                stderr: format!(
                    "wrote {} factors to {}\n",
                    plan.factors().len(),
                    path.display()
                ),
                code: EXIT_OK,
            })
        }
        None => Ok(Outcome::ok(text)),
    }
}

fn render_plan(plan: &FactorizationPlan) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "plan kind={} n={} d={} orientation={}",
        kind_name(plan.kind()),
        plan.n(),
        plan.d(),
        orientation_name(plan.orientation())
    );
    let width = plan
        .labels()
        .iter()
        .map(|l| l.describe().len())
        .max()
        .unwrap_or(0);
    for (i, f) in plan.factors().iter().enumerate() {
        let support: Vec<String> = f
            .label
            .support(plan.n())
            .iter()
            .map(|s| (s + 1).to_string())
            .collect();
        let _ = writeln!(
            s,
            "{:>4}  {:<width$}  sites [{}]  terms {}",
            i + 1,
            f.label.describe(),
            support.join(","),
            f.operator.terms().len()
        );
    }
    let _ = writeln!(s, "reversal: digit reversal over {} sites", plan.n());
    let single = plan.factors().len() - plan.two_site_factor_count();
    let _ = writeln!(
        s,
        "factors: {} total, {} one-site, {} two-site",
        plan.factors().len(),
        single,
        plan.two_site_factor_count()
    );
    s
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    reject_csv(a.format, "verify")?;
    let limit = a.limit.resolve()?;
    let plan = match &a.plan {
        Some(path) => {
            let text = read_file(path)?;
            FactorizationPlan::from_json(&text).map_err(|e| {
                let mut ce = CliError::from(e);
                if ce.code == EXIT_USAGE {
                    ce.code = EXIT_INPUT;
                }
                ce
            })?
        }
        None => {
            let (n, d) = a.shape.require()?;
            if global_dim(n, d).is_none_or(|dim| dim > limit.0) {
                return Err(Error::DenseLimitExceeded {
                    dim: global_dim(n, d).unwrap_or(usize::MAX),
                    limit: limit.0,
                }
                .into());
            }
            build_plan(a.kind, n, d, a.shape.orientation.into())?
        }
    };
    let residual = verify_plan_within(&plan, limit)?;
    let pass = residual.passes(a.tolerance);
    let stdout = match a.format {
        Format::Json => to_json(&json!({
            "kind": kind_name(plan.kind()),
            "n": plan.n(),
            "d": plan.d(),
            "orientation": plan.orientation(),
            "factor_count": plan.factors().len(),
            "tolerance": a.tolerance,
            "dft_residual": residual.dft_residual,
            "max_unitarity_residual": residual.max_unitarity_residual,
            "factor_unitarity": residual.factor_unitarity,
            "pass": pass,
        }))?,
        _ => format!(
            "verify {} n={} d={} factors={}\ndft residual: {:.3e}\nmax factor unitarity residual: {:.3e}\ntolerance: {:e}\nresult: {}\n",
            kind_name(plan.kind()),
            plan.n(),
            plan.d(),
            plan.factors().len(),
            residual.dft_residual,
            residual.max_unitarity_residual,
            a.tolerance,
            if pass { "PASS" } else { "FAIL" }
        ),
    };
    Ok(Outcome {
        stdout,
        stderr: String::new(),
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn lowered_circuit(
    shape: &Shape,
    style: Option<SwapStyleArg>,
) -> Result<circuit::Circuit, CliError> {
    let (n, d) = shape.require()?;
    let style = match style {
        Some(SwapStyleArg::KeepSwap) => SwapStyle::KeepSwap,
        Some(SwapStyleArg::ThreeCnot) => SwapStyle::ThreeCnot,
        None if d == 2 => SwapStyle::ThreeCnot,
        None => SwapStyle::KeepSwap,
    };
    let plan = qft_plan(n, d, shape.orientation.into())?;
    Ok(lower_to_circuit(&plan, style)?)
}

fn cmd_circuit(a: &CircuitArgs) -> Result<Outcome, CliError> {
    reject_csv(a.format, "circuit")?;
    let c = lowered_circuit(&a.shape, a.swap_style)?;
    let report = a.counts.then(|| qft_count_report(&c));
    let mut stderr = String::new();
    let stdout = match a.format {
        Format::Json => match &report {
            Some(r) => to_json(&json!({ "circuit": c.to_document(), "counts": r }))?,
            None => to_json(&c.to_document())?,
        },
        _ => {
            let mut s = match render_text(&c) {
                Ok(diagram) => diagram,
                Err(_) => {
                    stderr.push_str("diagram omitted: too many wires to render\n");
                    String::new()
                }
            };
            if let Some(r) = &report {
                let _ = writeln!(s, "hadamard/fourier: {}", r.counts.hadamard_or_fourier);
                let _ = writeln!(s, "controlled-R: {}", r.counts.controlled_r);
                let _ = writeln!(s, "cnot: {}", r.counts.cnot);
                let _ = writeln!(s, "swap: {}", r.counts.swap);
                let _ = writeln!(s, "construction cnot (3 per swap): {}", r.construction_cnot);
                let _ = writeln!(s, "closed-form cnot floor(3n/2): {}", r.table_one_cnot);
                if let Some(note) = &r.note {
                    let _ = writeln!(s, "note: {note}");
                }
            }
            s
        }
    };
    Ok(Outcome {
        stdout,
        stderr,
        code: EXIT_OK,
    })
}

/// Parses a vector file: one `re im` pair per line; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_vector(text: &str) -> crate::Result<DenseVector> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Malformed(format!("line {}: {s:?} is not a finite number", lineno + 1))
                })
        };
        match fields.as_slice() {
            [re, im] => values.push(Complex64::new(parse(re)?, parse(im)?)),
            _ => {
                return Err(Error::Malformed(format!(
                    "line {}: expected `re im`, got {} fields",
                    lineno + 1,
                    fields.len()
                )))
            }
        }
    }
    Ok(DenseVector::from(values))
}

/// Inverse of [`parse_vector`].
pub fn format_vector(x: &DenseVector) -> String {
    let mut s = String::with_capacity(x.dim() * 48);
    for z in x.as_slice() {
        let _ = writeln!(s, "{:.17e} {:.17e}", z.re, z.im);
    }
    s
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    reject_csv(a.format, "simulate")?;
    let limit = a.limit.resolve()?;
    let (n, d) = a.shape.require()?;
    let dim = global_dim(n, d).ok_or(Error::DenseLimitExceeded {
        dim: usize::MAX,
        limit: limit.0,
    })?;
    limit.check(dim)?;
    let x = match (&a.input, a.basis, a.random) {
        (Some(path), _, _) => {
            let x = parse_vector(&read_file(path)?).map_err(|e| CliError::input(e.to_string()))?;
            if x.dim() != dim {
                return Err(CliError::input(format!(
                    "input has {} entries, expected d^n = {dim}",
                    x.dim()
                )));
            }
            x
        }
        (None, Some(j), _) => DenseVector::basis(dim, j).map_err(|_| {
            CliError::usage(format!("basis index {j} out of range for dimension {dim}"))
        })?,
        (None, None, true) => random_unit_vector(dim, a.seed),
        (None, None, false) => {
            return Err(CliError::usage("give one of --basis, --input or --random"))
        }
    };
    let mut c = lowered_circuit(&a.shape, None)?;
    if a.inverse {
        c = c.inverse();
    }
    let y = simulate_dense_within(&c, &x, limit)?;
    let check = if a.check {
        let dir = if a.inverse {
            Direction::Inverse
        } else {
            Direction::Forward
        };
        let expected = dft_matrix_with(dim, dir, limit)?.matvec(&x)?;
        Some(y.max_abs_diff(&expected))
    } else {
        None
    };
    let pass = check.is_none_or(|r| r < a.tolerance);
    let mut stderr = String::new();
    let stdout = match a.format {
        Format::Json => to_json(&json!({
            "n": n,
            "d": d,
            "inverse": a.inverse,
            "output": y.as_slice().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "check": check.map(|r| json!({ "max_abs_diff": r, "tolerance": a.tolerance, "pass": pass })),
        }))?,
        _ => {
            if let Some(r) = check {
                let _ = writeln!(
                    stderr,
                    "check: max |circuit - dense DFT| = {r:.3e} ({})",
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            format_vector(&y)
        }
    };
    Ok(Outcome {
        stdout,
        stderr,
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn random_unit_vector(dim: usize, seed: u64) -> DenseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..dim)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let x = DenseVector::from(v);
    let norm = x.norm();
    x.scale(Complex64::new(1.0 / norm, 0.0))
}

#[derive(Serialize)]
struct RankOutput<'a> {
    mode: &'static str,
    n: usize,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<Orientation>,
    input: String,
    prune: f64,
    steps: &'a [RankStep],
    max_term_count: usize,
    final_term_count: usize,
    total_zero_weight: usize,
    final_residual: Option<f64>,
    tolerance: f64,
    pass: bool,
}

fn cmd_rankgrowth(a: &RankArgs) -> Result<Outcome, CliError> {
    let limit = a.limit.resolve()?;
    let prune = if a.no_prune { 0.0 } else { a.prune };
    if prune.is_nan() || prune < 0.0 {
        return Err(CliError::usage("--prune must be non-negative"));
    }
    let d = a.shape.d;
    let n = match a.cascade {
        Some(0) => return Err(CliError::usage("--cascade needs k >= 1")),
        Some(k) => {
            if a.shape.n.is_some_and(|n| n != k + 1) {
                return Err(CliError::usage(
                    "--cascade K runs on K+1 sites; drop --n or set it to K+1",
                ));
            }
            k + 1
        }
        None => a.shape.require()?.0,
    };
    check_shape(n, d)?;
    let dim = global_dim(n, d).ok_or(Error::DenseLimitExceeded {
        dim: usize::MAX,
        limit: limit.0,
    })?;
    limit.check(dim)?;

    let (input, input_desc): (CPState, String) = match a.basis {
        Some(j) => {
            if j >= dim {
                return Err(CliError::usage(format!(
                    "basis index {j} out of range for dimension {dim}"
                )));
            }
            (
                cp_basis_state(&to_digits(j, n, d), d)?,
                format!("basis({j})"),
            )
        }
        None => (
            seeded_generic_input(n, d, a.seed)?,
            format!("generic(seed {})", a.seed),
        ),
    };

    let (mode, orientation, mut steps, final_term_count, final_residual) = match a.cascade {
        Some(k) => {
            let r = diagonal_cascade_cp(k, d, &input, prune)?;
            (
                "cascade",
                None,
                r.steps,
                r.state.term_count(),
                r.final_residual,
            )
        }
        None => {
            let o: Orientation = a.shape.orientation.into();
            let r = qft_rank_experiment_within(n, d, &input, prune, o, limit)?;
            (
                "qft",
                Some(o),
                r.steps,
                r.final_term_count,
                Some(r.final_residual),
            )
        }
    };
    if !a.timing {
        steps.iter_mut().for_each(|s| s.elapsed_ms = 0.0);
    }
    let pass = final_residual.is_none_or(|r| r < a.tolerance);
    let summary = RankOutput {
        mode,
        n,
        d,
        orientation,
        input: input_desc,
        prune,
        max_term_count: steps
            .iter()
            .map(|s| s.term_count)
            .max()
            .unwrap_or(input.term_count()),
        final_term_count,
        total_zero_weight: steps.last().map_or(0, |s| s.zero_weight),
        final_residual,
        tolerance: a.tolerance,
        pass,
        steps: &steps,
    };
    let stdout = match a.format {
        Format::Json => to_json(&summary)?,
        Format::Csv => steps_to_csv(&steps),
        Format::Text => render_rank_text(&summary),
    };
    Ok(Outcome {
        stdout,
        stderr: String::new(),
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn render_rank_text(r: &RankOutput<'_>) -> String {
    let mut s = String::new();
    let _ = write!(s, "rank growth: {} n={} d={}", r.mode, r.n, r.d);
    if let Some(o) = r.orientation {
        let _ = write!(s, " orientation={}", orientation_name(o));
    }
    let _ = writeln!(s, " input={} prune={:e}", r.input, r.prune);
    let width = r
        .steps
        .iter()
        .map(|st| st.factor_label.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let _ = writeln!(
        s,
        "{:>4}  {:<width$}  {:>5}  {:>11}  {:>10}",
        "step", "factor", "terms", "zero_weight", "elapsed_ms"
    );
    for st in r.steps {
        let _ = writeln!(
            s,
            "{:>4}  {:<width$}  {:>5}  {:>11}  {:>10.3}",
            st.step, st.factor_label, st.term_count, st.zero_weight, st.elapsed_ms
        );
    }
    let _ = writeln!(s, "max term count: {}", r.max_term_count);
    let _ = writeln!(
        s,
        "final term count: {} ({} zero-weight)",
        r.final_term_count, r.total_zero_weight
    );
    match r.final_residual {
        Some(res) => {
            let _ = writeln!(
                s,
                "final dense residual: {res:.3e} ({})",
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        None => {
            let _ = writeln!(s, "final dense residual: skipped");
        }
    }
    s
}
