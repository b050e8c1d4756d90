//! Command-line driver: argument parsing, validation, execution and report
//! emission. `main.rs` only maps [`execute`] to a process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use birman_core::corpus::default_corpus;
use birman_core::exact::{constant_a, constant_b, expand_characteristic, parse_rational, Alpha};
use birman_core::quadrature::QuadOptions;
use birman_core::sharpness::{default_eps_grid, sweep, SharpnessParams, SharpnessSweep};
use birman_core::testfunctions::{
    vector_function, CutoffKind, Descriptor, JetFunction, TestFunctionError, VectorFunction,
};
use birman_core::verifier::{
    check_ibp_identity, check_transform_identity, verify_vector, LogKind, ProblemParams, Side, Status,
    VerificationReport,
};
use birman_core::weights::{iter_exp, log_identity_check, Depth};
use birman_core::Rational;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

pub const SCHEMA: &str = "birman-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Largest order accepted on the command line (jets carry 12 derivatives).
pub const MAX_ORDER: u32 = 6;

#[derive(Debug, Parser)]
#[command(name = "birman", version, about = "Verify weighted Birman–Hardy–Rellich inequalities with log refinements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact constants A(j,α), B(j,α) and characteristic coefficients for j = 1..m.
    Constants {
        #[arg(long)]
        m: u32,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check one inequality over a test-function corpus.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        /// `default` or a JSON file holding an array of function descriptors.
        #[arg(long, default_value = "default")]
        corpus: String,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the fixed identity battery (log shift, integration by parts, substitution).
    Identities {
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sweep the leading-constant ratio along the extremizer family.
    Sharpness {
        #[arg(long)]
        m: u32,
        #[arg(long = "l")]
        ell: u32,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        rho: String,
        #[arg(long, value_enum, default_value = "bump-integral")]
        cutoff: CutoffArg,
        /// Comma-separated, strictly decreasing ε values.
        #[arg(long = "eps-grid", value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long = "l")]
    pub ell: u32,
    /// Refinement depth: a non-negative integer or `inf`.
    #[arg(long = "N", default_value = "0")]
    pub depth: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long)]
    pub rho: String,
    /// Anchor of the `ln` variants.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Anchor of the `L` variants.
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long, value_enum)]
    pub side: SideArg,
    #[arg(long, value_enum)]
    pub variant: KindArg,
    /// Dimension of the target space.
    #[arg(long, default_value_t = 1)]
    pub d: u32,
}

#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    #[arg(long = "rel-tol", default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long = "abs-tol", default_value_t = 1e-14)]
    pub abs_tol: f64,
    #[arg(long = "max-panels", default_value_t = 4096)]
    pub max_panels: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Report file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "ln")]
    Ln,
    #[value(name = "L")]
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutoffArg {
    BumpIntegral,
    ExpRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration; nothing was computed.
    #[error("{0}")]
    Usage(String),
    /// A computation could not be completed; no report was written.
    #[error("{0}")]
    Compute(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) | CliError::Io(_) => EXIT_INCONCLUSIVE,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn rational(name: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| usage(format!("--{name}: {e}")))
}

fn positive(name: &str, s: &str) -> Result<Rational, CliError> {
    let r = rational(name, s)?;
    if r <= 0 {
        return Err(usage(format!("--{name} must be positive (got {r})")));
    }
    Ok(r)
}

fn order(m: u32) -> Result<u32, CliError> {
    if m == 0 || m > MAX_ORDER {
        return Err(usage(format!("--m must lie in 1..={MAX_ORDER} (got {m})")));
    }
    Ok(m)
}

impl TolArgs {
    fn options(&self) -> Result<QuadOptions, CliError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.rel_tol) || !ok(self.abs_tol) || (self.rel_tol == 0.0 && self.abs_tol == 0.0) {
            return Err(usage("tolerances must be finite, non-negative and not both zero"));
        }
        if self.max_panels == 0 {
            return Err(usage("--max-panels must be positive"));
        }
        Ok(QuadOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_panels: self.max_panels })
    }
}

/// Where the test functions come from.
#[derive(Debug, Clone)]
pub enum CorpusSource {
    Default,
    Explicit(Vec<Descriptor>),
}

#[derive(Debug, Clone)]
pub struct Output {
    pub format: Format,
    pub path: Option<PathBuf>,
}

impl From<&OutputArgs> for Output {
    fn from(o: &OutputArgs) -> Self {
        Output { format: o.format, path: o.output.clone() }
    }
}

/// A fully validated run. Only [`RunConfig::from_cli`] constructs the
/// computational variants, so holding one means every hypothesis was checked.
#[derive(Debug, Clone)]
pub enum Task {
    Constants { m: u32, alpha: Alpha },
    Verify { params: ProblemParams, functions: Vec<VectorFunction>, opts: QuadOptions },
    Identities { opts: QuadOptions },
    Sharpness { params: SharpnessParams, grid: Vec<f64>, opts: QuadOptions },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    task: Task,
    output: Output,
    echo: serde_json::Value,
}

impl RunConfig {
    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn output(&self) -> &Output {
        &self.output
    }

    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        match &cli.command {
            Command::Constants { m, alpha, out } => {
                let m = order(*m)?;
                let alpha = Alpha::from_rational(rational("alpha", alpha)?);
                let echo = json!({ "command": "constants", "m": m, "alpha": alpha.to_string() });
                Ok(RunConfig { task: Task::Constants { m, alpha }, output: out.into(), echo })
            }
            Command::Verify { problem, corpus, tol, out } => {
                let params = problem_params(problem)?;
                let opts = tol.options()?;
                let source = load_corpus(corpus)?;
                let functions = build_functions(&params, &source)?;
                let mut echo = json!({
                    "command": "verify",
                    "params": params.echo(),
                    "side": params.side.to_string(),
                    "corpus": corpus,
                });
                echo["tolerances"] = tol_echo(&opts);
                Ok(RunConfig { task: Task::Verify { params, functions, opts }, output: out.into(), echo })
            }
            Command::Identities { tol, out } => {
                let opts = tol.options()?;
                let echo = json!({ "command": "identities", "tolerances": tol_echo(&opts) });
                Ok(RunConfig { task: Task::Identities { opts }, output: out.into(), echo })
            }
            Command::Sharpness { m, ell, alpha, rho, cutoff, eps_grid, tol, out } => {
                let m = order(*m)?;
                if *ell == 0 || *ell > m {
                    return Err(usage(format!("order range requires 1 ≤ ℓ ≤ m (got ℓ = {ell}, m = {m})")));
                }
                let alpha = Alpha::from_rational(rational("alpha", alpha)?);
                if alpha.is_exceptional(*ell) == Some(true) {
                    return Err(usage(format!(
                        "sharpness requires A(ℓ,α) ≠ 0, i.e. α ∉ {{1, 3, …, 2ℓ−1}} (got α = {alpha}, ℓ = {ell})"
                    )));
                }
                let rho = positive("rho", rho)?;
                let grid = eps_grid.clone().unwrap_or_else(default_eps_grid);
                if grid.len() < 4 {
                    return Err(usage("--eps-grid needs at least 4 points"));
                }
                if grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(usage("--eps-grid must be strictly decreasing inside (0, 1)"));
                }
                let opts = tol.options()?;
                let cutoff = match cutoff {
                    CutoffArg::BumpIntegral => CutoffKind::BumpIntegral,
                    CutoffArg::ExpRatio => CutoffKind::ExpRatio,
                };
                let echo = json!({
                    "command": "sharpness",
                    "m": m,
                    "ell": ell,
                    "alpha": alpha.to_string(),
                    "rho": rho.to_string(),
                    "cutoff": cutoff,
                    "eps_grid": grid,
                    "tolerances": tol_echo(&opts),
                });
                let params = SharpnessParams { ell: *ell, m, alpha, rho: rho.to_f64(), cutoff };
                Ok(RunConfig { task: Task::Sharpness { params, grid, opts }, output: out.into(), echo })
            }
        }
    }
}

fn tol_echo(o: &QuadOptions) -> serde_json::Value {
    json!({ "rel_tol": o.rel_tol, "abs_tol": o.abs_tol, "max_panels": o.max_panels })
}

/// Translates problem flags into validated parameters.
pub fn problem_params(p: &ProblemArgs) -> Result<ProblemParams, CliError> {
    let m = order(p.m)?;
    let depth: Depth = p.depth.parse().map_err(|_| usage(format!("--N: expected an integer or `inf`, got {:?}", p.depth)))?;
    let alpha = Alpha::from_rational(rational("alpha", &p.alpha)?);
    let rho = positive("rho", &p.rho)?;
    let kind = match p.variant {
        KindArg::Ln => LogKind::Ln,
        KindArg::L => LogKind::L,
    };
    let side = match p.side {
        SideArg::Interior => Side::Interior,
        SideArg::Exterior => Side::Exterior,
    };
    let (own, own_name, other, other_name) = match kind {
        LogKind::Ln => (&p.gamma, "gamma", &p.tau, "tau"),
        LogKind::L => (&p.tau, "tau", &p.gamma, "gamma"),
    };
    if other.is_some() {
        return Err(usage(format!("the {kind} variants are anchored by --{own_name}, not --{other_name}")));
    }
    let anchor = match own {
        Some(s) => positive(own_name, s)?,
        None if depth.is_zero() => rho.clone(),
        None => return Err(usage(format!("N ≥ 1 requires --{own_name}"))),
    };
    let params = ProblemParams { m, ell: p.ell, depth, alpha, rho, anchor, side, kind, d: p.d };
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

pub fn load_corpus(spec: &str) -> Result<CorpusSource, CliError> {
    if spec == "default" {
        return Ok(CorpusSource::Default);
    }
    let text = fs::read_to_string(spec).map_err(|e| usage(format!("--corpus {spec}: {e}")))?;
    let list: Vec<Descriptor> =
        serde_json::from_str(&text).map_err(|e| usage(format!("--corpus {spec}: {e}")))?;
    Ok(CorpusSource::Explicit(list))
}

/// Expands the corpus into `d`-component functions: component `i` is
/// `f·x^i`. Supports are checked here so invalid corpora never reach
/// the quadrature.
pub fn build_functions(params: &ProblemParams, source: &CorpusSource) -> Result<Vec<VectorFunction>, CliError> {
    let order = 2 * params.m as usize;
    let tf = |e: TestFunctionError| usage(format!("corpus: {e}"));
    let scalars = match source {
        CorpusSource::Default => default_corpus(params.side, params.rho.to_f64(), order).map_err(tf)?,
        CorpusSource::Explicit(list) => list
            .iter()
            .map(|d| JetFunction::new(d.clone(), order))
            .collect::<Result<Vec<_>, _>>()
            .map_err(tf)?,
    };
    let (lo, hi) = params.interval();
    let mut out = Vec::with_capacity(scalars.len());
    for f in scalars {
        let (a, b) = f.support();
        if !(a.is_finite() && b.is_finite() && a > lo && b < hi) {
            return Err(usage(format!(
                "corpus: support ({a}, {b}) must lie strictly inside the {} interval ({lo}, {hi})",
                params.side
            )));
        }
        let components = (0..params.d)
            .map(|i| {
                if i == 0 {
                    Ok(f.clone())
                } else {
                    let d = Descriptor::Product {
                        factors: vec![f.descriptor().clone(), Descriptor::Power { p: i as f64 }],
                    };
                    JetFunction::new(d, order)
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(tf)?;
        out.push(vector_function(components).map_err(tf)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantRow {
    pub m: u32,
    pub alpha: String,
    pub a: String,
    pub b: String,
    pub a_f64: f64,
    pub b_f64: f64,
    /// Coefficients of λ⁰, λ¹, …, λ^{2m}.
    pub coefficients: Vec<String>,
    pub properties: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub case: String,
    pub left: f64,
    pub right: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessCheck {
    pub name: String,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessOutput {
    pub sweep: SharpnessSweep,
    pub checks: Vec<SharpnessCheck>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Results {
    Constants(Vec<ConstantRow>),
    Verify(Vec<VerificationReport>),
    Identities(Vec<IdentityRow>),
    Sharpness(SharpnessOutput),
}

impl Results {
    fn statuses(&self) -> Vec<Status> {
        match self {
            Results::Constants(rows) => rows.iter().map(|r| r.properties).collect(),
            Results::Verify(rs) => rs.iter().map(|r| r.status).collect(),
            Results::Identities(rows) => rows.iter().map(|r| r.status).collect(),
            Results::Sharpness(s) => s.checks.iter().map(|c| c.status).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub config: serde_json::Value,
    pub status: Status,
    pub results: Results,
}

impl Report {
    pub fn new(config: serde_json::Value, results: Results) -> Self {
        Report { schema: SCHEMA, config, status: aggregate(&results.statuses()), results }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.status)
    }
}

/// FAIL dominates, then INCONCLUSIVE/UNSUPPORTED; EQUALITY counts as a pass.
pub fn aggregate(statuses: &[Status]) -> Status {
    if statuses.contains(&Status::Fail) {
        Status::Fail
    } else if statuses.contains(&Status::Inconclusive) {
        Status::Inconclusive
    } else if statuses.contains(&Status::Unsupported) {
        Status::Unsupported
    } else {
        Status::Pass
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass | Status::Equality => EXIT_OK,
        Status::Fail => EXIT_FAIL,
        Status::Inconclusive | Status::Unsupported => EXIT_INCONCLUSIVE,
    }
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let results = match &config.task {
        Task::Constants { m, alpha } => Results::Constants(constants_table(*m, alpha)?),
        Task::Verify { params, functions, opts } => {
            let reports = functions
                .iter()
                .map(|f| verify_vector(params, f, opts))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Compute(e.to_string()))?;
            Results::Verify(reports)
        }
        Task::Identities { opts } => Results::Identities(identity_battery(opts)?),
        Task::Sharpness { params, grid, opts } => {
            let s = sweep(params, grid, opts).map_err(|e| CliError::Compute(e.to_string()))?;
            Results::Sharpness(SharpnessOutput { checks: sharpness_checks(&s), sweep: s })
        }
    };
    Ok(Report::new(config.echo.clone(), results))
}

pub fn constants_table(m: u32, alpha: &Alpha) -> Result<Vec<ConstantRow>, CliError> {
    (1..=m)
        .map(|j| {
            let table = expand_characteristic(j, alpha).map_err(|e| CliError::Compute(e.to_string()))?;
            let (a, b) = (constant_a(j, alpha), constant_b(j, alpha));
            Ok(ConstantRow {
                m: j,
                alpha: alpha.to_string(),
                a_f64: a.to_f64(),
                b_f64: b.to_f64(),
                a: a.to_string(),
                b: b.to_string(),
                coefficients: table.coeffs.iter().map(|c| c.to_string()).collect(),
                properties: if table.check_properties().is_ok() { Status::Pass } else { Status::Fail },
            })
        })
        .collect()
}

pub const LOG_IDENTITY_TOL: f64 = 1e-12;
pub const IBP_TOL: f64 = 1e-8;
pub const TRANSFORM_TOL: f64 = 1e-8;

fn identity_row(identity: &str, case: String, left: f64, right: f64, residual: f64, tolerance: f64) -> IdentityRow {
    let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
    IdentityRow { identity: identity.into(), case, left, right, residual, tolerance, status }
}

/// Log-shift identity at 20 points per depth, integration by parts over the
/// interior corpus, and the exterior substitution identity.
pub fn identity_battery(opts: &QuadOptions) -> Result<Vec<IdentityRow>, CliError> {
    let compute = |e: &dyn std::fmt::Display| CliError::Compute(e.to_string());
    let mut rows = Vec::new();
    for n in 1..=4u32 {
        let base = iter_exp(n).map_err(|e| compute(&e))?;
        for i in 0..20 {
            let x = base * 2f64.powf(1.0 + 1.5 * i as f64);
            let r = log_identity_check(n, x).map_err(|e| compute(&e))?;
            rows.push(identity_row("log-shift", format!("N={n} x={x:e}"), f64::NAN, f64::NAN, r, LOG_IDENTITY_TOL));
        }
    }
    let one = Rational::from(1);
    for m in 1..=3u32 {
        for alpha in ["0", "1/2", "-1", "2"] {
            let a: Alpha = alpha.parse().expect("literal");
            let corpus = default_corpus(Side::Interior, 1.0, 2 * m as usize).map_err(|e| compute(&e))?;
            for (i, f) in corpus.iter().enumerate() {
                let c = check_ibp_identity(m, &a, f, opts).map_err(|e| compute(&e))?;
                let case = format!("m={m} alpha={alpha} f={i}");
                rows.push(identity_row("integration-by-parts", case, c.left, c.right, c.residual, IBP_TOL));
            }
        }
    }
    let rho = Rational::from(16);
    for m in 1..=2u32 {
        for n in 0..=2u32 {
            for alpha in ["0", "1/2", "-1/2"] {
                let params = ProblemParams {
                    m,
                    ell: m,
                    depth: Depth::Finite(n),
                    alpha: alpha.parse().expect("literal"),
                    rho: rho.clone(),
                    anchor: one.clone(),
                    side: Side::Exterior,
                    kind: LogKind::Ln,
                    d: 1,
                };
                let corpus = default_corpus(Side::Exterior, 16.0, m as usize).map_err(|e| compute(&e))?;
                for (i, f) in corpus.iter().enumerate() {
                    let c = check_transform_identity(&params, f, opts).map_err(|e| compute(&e))?;
                    let case = format!("m={m} N={n} alpha={alpha} f={i}");
                    rows.push(identity_row("substitution", case, c.left, c.right, c.residual, TRANSFORM_TOL));
                }
            }
        }
    }
    Ok(rows)
}

pub const SHARPNESS_LIMIT_TOL: f64 = 0.02;
pub const SHARPNESS_BOUNDEDNESS: f64 = 5.0;

/// The inequality along the family, the fitted limit and the boundedness of
/// `(R − 1)·ln(1/ε)`.
pub fn sharpness_checks(s: &SharpnessSweep) -> Vec<SharpnessCheck> {
    let pass = |ok: bool| if ok { Status::Pass } else { Status::Fail };
    let below = s.ratios.iter().all(|p| p.ratio >= 1.0 - p.error_bar);
    let mut checks = vec![SharpnessCheck { name: "ratio-at-least-one".into(), status: pass(below) }];
    match &s.fit {
        Some(f) => {
            checks.push(SharpnessCheck {
                name: "fitted-limit".into(),
                status: pass((f.limit - 1.0).abs() <= SHARPNESS_LIMIT_TOL),
            });
            checks.push(SharpnessCheck {
                name: "bounded-scaled-excess".into(),
                status: pass(f.boundedness_ratio <= SHARPNESS_BOUNDEDNESS),
            });
        }
        None => checks.push(SharpnessCheck { name: "fit".into(), status: Status::Inconclusive }),
    }
    checks
}

pub const VERIFY_COLUMNS: [&str; 15] = [
    "kind", "variant", "m", "ell", "N", "alpha", "rho", "anchor", "d", "functions", "lhs", "rhs_total", "slack",
    "error_budget", "status",
];
pub const CONSTANT_COLUMNS: [&str; 8] = ["m", "alpha", "A", "B", "A_f64", "B_f64", "coefficients", "properties"];
pub const IDENTITY_COLUMNS: [&str; 7] = ["identity", "case", "left", "right", "residual", "tolerance", "status"];
pub const SHARPNESS_COLUMNS: [&str; 14] = [
    "ell", "m", "alpha", "rho", "cutoff", "eps", "ratio", "error_bar", "numerator", "denominator", "limit", "c",
    "boundedness_ratio", "rational_limit",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Renders a report in the requested format.
pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| CliError::Io(e.into()))?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            match &report.results {
                Results::Constants(rows) => {
                    w.write_record(CONSTANT_COLUMNS).map_err(csv_err)?;
                    for r in rows {
                        w.write_record([
                            r.m.to_string(),
                            r.alpha.clone(),
                            r.a.clone(),
                            r.b.clone(),
                            num(r.a_f64),
                            num(r.b_f64),
                            r.coefficients.join(" "),
                            r.properties.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
                Results::Verify(rs) => {
                    w.write_record(VERIFY_COLUMNS).map_err(csv_err)?;
                    for r in rs {
                        let kind = serde_json::to_value(r.kind).map_err(|e| CliError::Io(e.into()))?;
                        let functions = serde_json::to_string(&r.functions).map_err(|e| CliError::Io(e.into()))?;
                        let p = &r.params;
                        w.write_record([
                            kind.as_str().unwrap_or_default().to_string(),
                            p.variant.clone(),
                            p.m.to_string(),
                            p.ell.to_string(),
                            p.depth.to_string(),
                            p.alpha.clone(),
                            p.rho.clone(),
                            p.anchor.clone(),
                            p.d.to_string(),
                            functions,
                            num(r.lhs.value),
                            num(r.rhs_total),
                            num(r.slack),
                            num(r.error_budget),
                            r.status.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
                Results::Identities(rows) => {
                    w.write_record(IDENTITY_COLUMNS).map_err(csv_err)?;
                    for r in rows {
                        w.write_record([
                            r.identity.clone(),
                            r.case.clone(),
                            num(r.left),
                            num(r.right),
                            num(r.residual),
                            num(r.tolerance),
                            r.status.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
                Results::Sharpness(s) => {
                    w.write_record(SHARPNESS_COLUMNS).map_err(csv_err)?;
                    let p = &s.sweep.params;
                    let cutoff = serde_json::to_value(p.cutoff).map_err(|e| CliError::Io(e.into()))?;
                    let fit = |g: fn(&birman_core::sharpness::RateFit) -> f64| {
                        s.sweep.fit.as_ref().map(g).map(num).unwrap_or_default()
                    };
                    for pt in &s.sweep.ratios {
                        w.write_record([
                            p.ell.to_string(),
                            p.m.to_string(),
                            p.alpha.to_string(),
                            num(p.rho),
                            cutoff.as_str().unwrap_or_default().to_string(),
                            num(pt.eps),
                            num(pt.ratio),
                            num(pt.error_bar),
                            num(pt.numerator),
                            num(pt.denominator),
                            fit(|f| f.limit),
                            fit(|f| f.c),
                            fit(|f| f.boundedness_ratio),
                            fit(|f| f.rational_limit),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
            w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
        }
    }
}

/// Writes the report to `path` (atomically, via a sibling temporary file)
/// or to standard output.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(report, format)?;
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(&bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| CliError::Io(e.error))?;
        }
    }
    Ok(())
}

/// Parses, validates, runs and emits; returns the process exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|config| {
        let report = run(&config)?;
        emit_report(&report, config.output.format, config.output.path.as_deref())?;
        Ok(report.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let prefix = if matches!(e, CliError::Usage(_)) { "invalid configuration" } else { "error" };
            eprintln!("birman: {prefix}: {e}");
            e.exit_code()
        }
    }
}
