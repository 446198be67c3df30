//! `support-size`: test, estimate, audit, verify, simulate and emit plot data.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use support_size::chebyshev;
use support_size::estimator::build_kernel;
use support_size::functions::{collapse, LabeledSample};
use support_size::params::{self, ConstraintReport, ParamMode, ParamSet, PhiEvaluator, Variant};
use support_size::rational;
use support_size::simulate::{self, derive_seed, DistributionSampler, Family, SparseDistribution};
use support_size::tester::{self, SamplingMode, TestVerdict, TesterConfig, TesterMode, CORE_SIGMA};
use support_size::verify::{self, VerifyOptions};
use support_size::{io, Error, Kernel, Rational, SampleHistogram};

use output::{num, render, Format, Table};

const EXIT_INPUT: u8 = 2;
const EXIT_REJECT: u8 = 3;
const EXIT_PARAMS: u8 = 4;
const EXIT_INVARIANT: u8 = 5;

/// Stream id for the single sampler of `test` and `lower-bound`.
const CLI_STREAM: u64 = 0;

#[derive(Parser, Debug)]
#[command(name = "support-size", version, about = "Sublinear support-size testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the support has at most n elements or is ε-far from that.
    Test(TestArgs),
    /// Estimate a lower bound on the effective support size.
    LowerBound(LowerBoundArgs),
    /// Show tester parameters and the constraint audit.
    Params(ParamsArgs),
    /// Run the invariant suites; exits 5 if any check fails.
    Verify(VerifyArgs),
    /// Monte Carlo study of the tester on a known distribution.
    Simulate(SimulateArgs),
    /// Emit the data behind the figures as CSV or JSON.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    #[value(name = "paper-iv", alias = "paper_IV")]
    PaperIv,
    #[value(name = "paper-ivb", alias = "paper_IVb")]
    PaperIvb,
    Empirical,
    Naive,
}

impl From<ModeArg> for TesterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PaperIv => TesterMode::PaperIV,
            ModeArg::PaperIvb => TesterMode::PaperIVb,
            ModeArg::Empirical => TesterMode::Empirical,
            ModeArg::Naive => TesterMode::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Fixed,
    Poissonized,
}

impl From<SamplingArg> for SamplingMode {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Fixed => SamplingMode::Fixed,
            SamplingArg::Poissonized => SamplingMode::Poissonized,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct TesterArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "empirical")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "poissonized")]
    sampling: SamplingArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    tester: TesterArgs,
    /// Distribution to sample from: a family (`uniform:K`, `point`, `zipf:K:S`,
    /// `two_level:NH:NL:MU`, `far_uniform:N:EPS[:MARGIN]`) or `@path` to a TSV/JSON file.
    #[arg(long, conflicts_with_all = ["samples", "labeled"], required_unless_present_any = ["samples", "labeled"])]
    dist: Option<String>,
    /// Whitespace-separated sample ids from an unknown source.
    #[arg(long, conflicts_with = "labeled")]
    samples: Option<PathBuf>,
    /// `id<TAB>label` lines; tests the labelling function for at most n ones.
    #[arg(long)]
    labeled: Option<PathBuf>,
    /// Target success probability; values above 3/4 use a majority vote over repetitions.
    #[arg(long, default_value_t = CORE_SIGMA)]
    sigma: f64,
    /// Exit 3 on Reject.
    #[arg(long)]
    exit_verdict: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LowerBoundArgs {
    #[command(flatten)]
    tester: TesterArgs,
    #[arg(long)]
    dist: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ParamsArgs {
    /// Support bound; accepts plain integers, `10^K` and `AeK`.
    #[arg(long)]
    n: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "empirical")]
    mode: ModeArg,
    /// Audit explicit parameters instead of constructing them.
    #[arg(long, requires_all = ["ell", "r", "d", "m"])]
    audit: bool,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Points on each `x` grid.
    #[arg(long, default_value_t = verify::DEFAULT_GRID)]
    grid: usize,
    /// Double δ in every kernel before checking.
    #[arg(long)]
    inject_fault: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    tester: TesterArgs,
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    /// `(x, T_d(x))` over `[-1.01, 1.01]`.
    Cheb,
    /// `(p, Q(p))` over `[0, min(1, 2r)]`.
    Q,
    /// `(p, Q*(p), linear bound)` over `[0, 2ℓ]`.
    Qstar,
    /// `(λ, Φ(λ))` over `(0, 1]`.
    Phi,
    /// `(j, 1 + f(j))` for `j = 0..=d`.
    Fvalues,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long, value_enum)]
    figure: Figure,
    /// Number of grid points.
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Degree for the Chebyshev figure, or a degree override for the kernel figures.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, value_enum, default_value = "empirical")]
    mode: ModeArg,
    /// Kernel overrides: `ℓ`, `r` and `m` (rationals and an integer).
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    m: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ParameterSearch(_) | Error::Assumption(_) | Error::DegreeBudget { .. } => EXIT_PARAMS,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// What a command produced: tables to print and the exit code to return.
struct Outcome {
    command: &'static str,
    tables: Vec<Table>,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, output) = match cli.command {
        Command::Test(a) => {
            let o = a.output.clone();
            (cmd_test(a), o)
        }
        Command::LowerBound(a) => {
            let o = a.output.clone();
            (cmd_lower_bound(a), o)
        }
        Command::Params(a) => {
            let o = a.output.clone();
            (cmd_params(a), o)
        }
        Command::Verify(a) => {
            let o = a.output.clone();
            (cmd_verify(a), o)
        }
        Command::Simulate(a) => {
            let o = a.output.clone();
            (cmd_simulate(a), o)
        }
        Command::PlotData(a) => {
            let o = a.output.clone();
            (cmd_plot_data(a), o)
        }
    };
    match result.and_then(|outcome| emit(&outcome, &output).map(|()| outcome.code)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(outcome: &Outcome, output: &OutputArgs) -> CliResult<()> {
    let text = render(outcome.command, &outcome.tables, output.format);
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_eps(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Failure::input(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

fn load_distribution(spec: &str) -> CliResult<SparseDistribution> {
    match spec.strip_prefix('@') {
        Some(path) => Ok(io::read_distribution(path.as_ref())?),
        None => Ok(simulate::make_distribution(&spec.parse::<Family>()?)?),
    }
}

fn read_text(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn plan(args: &TesterArgs) -> CliResult<TesterConfig> {
    check_eps(args.eps)?;
    Ok(TesterConfig::plan(args.n, args.eps, args.mode.into(), args.sampling.into())?)
}

/// Where the parameters came from, for the report.
fn provenance(config: &TesterConfig, mode: ModeArg) -> String {
    match config.kernel() {
        None => format!("naive m={}", tester::naive_sample_size(config.n(), config.eps())),
        Some(k) => format!(
            "{:?} ell={} r={} d={} m={}",
            TesterMode::from(mode),
            rational::format(k.interval().ell()),
            rational::format(k.interval().r()),
            k.degree(),
            k.m()
        ),
    }
}

fn verdict_table(v: &TestVerdict, provenance: &str, source: &str) -> Table {
    let mut t = Table::new(
        "verdict",
        &["decision", "statistic", "threshold", "samples_drawn", "path", "params", "source"],
    );
    t.push(vec![
        json!(format!("{:?}", v.decision)),
        num(v.statistic_value),
        num(v.threshold),
        json!(v.samples_drawn),
        json!(serde_json::to_value(v.path).expect("enum serialises")),
        json!(provenance),
        json!(source),
    ]);
    t
}

fn cmd_test(a: TestArgs) -> CliResult<Outcome> {
    enum Input {
        Samples(SampleHistogram),
        Labeled(LabeledSample),
        Dist(SparseDistribution),
    }
    let (input, source) = if let Some(path) = &a.samples {
        let ids = io::parse_samples(&read_text(path)?)?;
        (Input::Samples(SampleHistogram::from_samples(ids)), format!("samples:{}", path.display()))
    } else if let Some(path) = &a.labeled {
        (Input::Labeled(io::parse_labeled(&read_text(path)?)?), format!("labeled:{}", path.display()))
    } else {
        let spec = a.dist.as_deref().expect("clap requires one input");
        (Input::Dist(load_distribution(spec)?), format!("dist:{spec}"))
    };
    let config = plan(&a.tester)?;
    let prov = provenance(&config, a.tester.mode);
    let verdict = match input {
        Input::Samples(hist) => config.decide(&hist),
        Input::Labeled(sample) => decide_labeled(&config, &sample),
        Input::Dist(dist) => {
            let mut sampler = DistributionSampler::new(&dist, derive_seed(a.tester.seed, CLI_STREAM, 0));
            tester::boosted_tester(&config, a.sigma, &mut sampler)?
        }
    };
    let code = if a.exit_verdict && verdict.decision == tester::Decision::Reject { EXIT_REJECT } else { 0 };
    Ok(Outcome { command: "test", tables: vec![verdict_table(&verdict, &prov, &source)], code })
}

/// Offline function test: with no 1-labelled sample accept; otherwise collapse every
/// 0-labelled sample onto the smallest 1-labelled id and run the distribution decision.
fn decide_labeled(config: &TesterConfig, sample: &LabeledSample) -> TestVerdict {
    match sample.entries().find(|e| e.1 == 1) {
        None => TestVerdict {
            decision: tester::Decision::Accept,
            statistic_value: 0.0,
            threshold: 0.0,
            samples_drawn: sample.total(),
            path: tester::TesterPath::NoOnes,
        },
        Some((z, _, _)) => config.decide(&collapse(sample, z)),
    }
}

fn cmd_lower_bound(a: LowerBoundArgs) -> CliResult<Outcome> {
    check_eps(a.tester.eps)?;
    let dist = load_distribution(&a.dist)?;
    let plan = tester::LowerBoundPlan::new(a.tester.n, a.tester.eps, a.tester.mode.into(), a.tester.sampling.into())?;
    let mut sampler = DistributionSampler::new(&dist, derive_seed(a.tester.seed, CLI_STREAM, 0));
    let result = plan.run(&mut sampler);
    let mut summary = Table::new("estimate", &["estimate", "rounds_used", "samples_drawn"]);
    summary.push(vec![num(result.estimate), json!(result.rounds_used), json!(result.samples_drawn)]);
    let mut rounds =
        Table::new("rounds", &["round", "n_i", "delta_i", "estimate_i", "terminated", "path", "repetitions"]);
    for (i, r) in result.per_round.iter().enumerate() {
        rounds.push(vec![
            json!(i),
            num(r.n_i),
            num(r.delta_i),
            num(r.estimate_i),
            json!(r.terminated),
            serde_json::to_value(r.path).expect("enum serialises"),
            json!(r.repetitions),
        ]);
    }
    Ok(Outcome { command: "lower-bound", tables: vec![summary, rounds], code: 0 })
}

/// Parses `123`, `10^90` or `5.4e84`-style integers (the mantissa must make the value integral).
fn parse_big_n(s: &str) -> CliResult<BigUint> {
    let bad = || Failure::input(format!("--n: cannot read {s:?} as a positive integer"));
    let s = s.trim();
    let value = if let Some((base, exp)) = s.split_once('^') {
        let base: BigUint = base.parse().map_err(|_| bad())?;
        base.pow(exp.parse::<u32>().map_err(|_| bad())?)
    } else if let Some((mant, exp)) = s.split_once(['e', 'E']) {
        let mant = rational::parse(mant).map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        let scaled = mant * Rational::from_integer(BigUint::from(10u32).pow(exp).into());
        if !scaled.is_integer() {
            return Err(bad());
        }
        scaled.to_integer().to_biguint().ok_or_else(bad)?
    } else {
        s.parse().map_err(|_| bad())?
    };
    if value == BigUint::ZERO {
        return Err(bad());
    }
    Ok(value)
}

fn constraint_table(report: &ConstraintReport) -> Table {
    let mut t = Table::new("constraints", &["constraint", "satisfied", "slack"]);
    for e in &report.entries {
        t.push(vec![json!(format!("{:?}", e.id)), json!(e.satisfied), num(e.slack)]);
    }
    t
}

fn param_table(ps: &ParamSet, n: &BigUint, eps: f64) -> Table {
    let mut t = Table::new("params", &["mode", "n", "eps", "ell", "r", "d", "m"]);
    t.push(vec![
        json!(format!("{:?}", ps.mode)),
        json!(n.to_string()),
        num(eps),
        json!(rational::format(&ps.ell)),
        json!(rational::format(&ps.r)),
        json!(ps.d),
        json!(ps.m.to_string()),
    ]);
    t
}

fn cmd_params(a: ParamsArgs) -> CliResult<Outcome> {
    check_eps(a.eps)?;
    let n = parse_big_n(&a.n)?;
    let variant = if a.mode == ModeArg::PaperIv { Variant::IV } else { Variant::IVb };
    let mut tables = Vec::new();
    let ps = if a.audit {
        let rat = |v: &Option<String>, name: &str| -> CliResult<Rational> {
            rational::parse(v.as_deref().unwrap_or_default()).map_err(|e| Failure::input(format!("--{name}: {e}")))
        };
        let m: BigUint = a.m.as_deref().unwrap_or_default().parse().map_err(|_| Failure::input("--m: not an integer"))?;
        let mode = match a.mode {
            ModeArg::PaperIv => ParamMode::PaperIV,
            ModeArg::PaperIvb => ParamMode::PaperIVb,
            _ => ParamMode::Empirical,
        };
        ParamSet::new(rat(&a.ell, "ell")?, rat(&a.r, "r")?, a.d.unwrap_or_default(), m, mode)?
    } else {
        match a.mode {
            ModeArg::PaperIv => params::paper_params(&n, a.eps, Variant::IV)?,
            ModeArg::PaperIvb => params::paper_params(&n, a.eps, Variant::IVb)?,
            ModeArg::Empirical => {
                let small = u64::try_from(&n).map_err(|_| Failure::input("empirical mode needs n to fit 64 bits"))?;
                if !params::empirical_regime(small, a.eps) {
                    return Err(Failure {
                        code: EXIT_PARAMS,
                        message: format!("empirical mode needs n >= 10 and eps in (0.05, 1/3); got n={n} eps={}", a.eps),
                    });
                }
                params::empirical_params(small, a.eps)?
            }
            ModeArg::Naive => {
                let small = u64::try_from(&n).map_err(|_| Failure::input("naive mode needs n to fit 64 bits"))?;
                let mut t = Table::new("params", &["mode", "n", "eps", "m"]);
                t.push(vec![json!("Naive"), json!(small), num(a.eps), json!(tester::naive_sample_size(small, a.eps))]);
                return Ok(Outcome { command: "params", tables: vec![t], code: 0 });
            }
        }
    };
    tables.push(param_table(&ps, &n, a.eps));
    tables.push(constraint_table(&params::check_constraints(&n, a.eps, &ps, variant)?));
    if ps.mode == ParamMode::Empirical {
        if let Ok(small) = u64::try_from(&n) {
            let kernel: Kernel = build_kernel(small, a.eps, &ps)?;
            let mut t = Table::new("semantic_checks", &["check", "passed", "value", "bound"]);
            for c in params::semantic_checks(&kernel)? {
                t.push(vec![json!(c.name), json!(c.passed), num(c.value), num(c.bound)]);
            }
            tables.push(t);
        }
    }
    Ok(Outcome { command: "params", tables, code: 0 })
}

fn cmd_verify(a: VerifyArgs) -> CliResult<Outcome> {
    if a.grid < 2 {
        return Err(Failure::input("--grid must be at least 2"));
    }
    let mut kernels = verify::default_kernels()?;
    if a.inject_fault {
        kernels = kernels.iter().map(|k| k.with_doubled_delta()).collect();
    }
    let outcomes = verify::run_all(&kernels, &VerifyOptions::with_grid(a.grid));
    let mut t = Table::new("checks", &["check", "subject", "passed", "value", "bound", "witness"]);
    for c in &outcomes {
        t.push(vec![
            json!(c.check),
            json!(c.subject),
            json!(c.passed),
            num(c.value),
            num(c.bound),
            c.witness.map(num).unwrap_or(Value::Null),
        ]);
    }
    let failures: Vec<_> = outcomes.iter().filter(|c| !c.passed).collect();
    for c in &failures {
        let at = c.witness.map(|w| format!(" at {w}")).unwrap_or_default();
        eprintln!("FAIL {} [{}]: value {} vs bound {}{at}", c.check, c.subject, c.value, c.bound);
    }
    let code = if failures.is_empty() { 0 } else { EXIT_INVARIANT };
    Ok(Outcome { command: "verify", tables: vec![t], code })
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<Outcome> {
    if a.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    let config = plan(&a.tester)?;
    let dist = load_distribution(&a.dist)?;
    let report = simulate::monte_carlo(&config, &dist, a.trials, a.tester.seed);
    let mut t = Table::new(
        "report",
        &[
            "trials",
            "accept_rate",
            "reject_rate",
            "mean_stat",
            "var_stat",
            "std_error",
            "analytic_mean",
            "analytic_var_bound",
            "max_samples",
            "mean_samples",
            "naive_budget",
            "params",
            "seed",
        ],
    );
    t.push(vec![
        json!(report.trials),
        num(report.accept_rate()),
        num(report.reject_rate()),
        num(report.mean_stat),
        num(report.var_stat),
        num(report.std_error()),
        report.analytic_mean.map(num).unwrap_or(Value::Null),
        num(report.analytic_var_bound),
        json!(report.max_samples),
        num(report.mean_samples),
        json!(tester::naive_sample_size(config.n(), config.eps())),
        json!(provenance(&config, a.tester.mode)),
        json!(report.seeds.master),
    ]);
    Ok(Outcome { command: "simulate", tables: vec![t], code: 0 })
}

/// The kernel behind the kernel figures: the chosen mode's parameters with any overrides applied.
fn plot_kernel(a: &PlotArgs) -> CliResult<Kernel> {
    check_eps(a.eps)?;
    let base = match a.mode {
        ModeArg::PaperIv => params::paper_params(&BigUint::from(a.n), a.eps, Variant::IV)?,
        ModeArg::PaperIvb => params::paper_params(&BigUint::from(a.n), a.eps, Variant::IVb)?,
        ModeArg::Empirical => params::empirical_params(a.n, a.eps)?,
        ModeArg::Naive => return Err(Failure::input("the naive tester has no kernel to plot")),
    };
    let rat = |v: &Option<String>, fallback: &Rational| -> CliResult<Rational> {
        match v {
            Some(s) => rational::parse(s).map_err(|e| Failure::input(e.to_string())),
            None => Ok(fallback.clone()),
        }
    };
    let ell = rat(&a.ell, &base.ell)?;
    let r = rat(&a.r, &base.r)?;
    let m = match a.m {
        Some(m) => BigUint::from(m),
        None => base.m.clone(),
    };
    let ps = ParamSet::new(ell, r, a.d.unwrap_or(base.d), m, base.mode)?;
    Ok(build_kernel(a.n, a.eps, &ps)?)
}

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let steps = (points - 1) as f64;
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / steps)
}

fn cmd_plot_data(a: PlotArgs) -> CliResult<Outcome> {
    if a.grid < 2 {
        return Err(Failure::input("--grid must be at least 2"));
    }
    let table = match a.figure {
        Figure::Cheb => {
            let d = a.d.unwrap_or(11);
            let mut t = Table::new("cheb", &["x", "t_d"]);
            for x in grid(-1.01, 1.01, a.grid) {
                t.push(vec![num(x), num(chebyshev::eval_recurrence(d, x))]);
            }
            t
        }
        Figure::Q => {
            let k = plot_kernel(&a)?;
            let mut t = Table::new("q", &["p", "q"]);
            for p in grid(0.0, (2.0 * k.r_f()).min(1.0), a.grid) {
                t.push(vec![num(p), num(k.q_eval(p))]);
            }
            t
        }
        Figure::Qstar => {
            let k = plot_kernel(&a)?;
            let (ell, delta) = (k.ell_f(), k.delta_f());
            let mut t = Table::new("qstar", &["p", "q", "q_star", "linear"]);
            for p in grid(0.0, 2.0 * ell, a.grid) {
                let linear = (1.0 - delta) * (p / ell).min(1.0);
                t.push(vec![num(p), num(k.q_eval(p)), num(k.q_star_eval(p)), num(linear)]);
            }
            t
        }
        Figure::Phi => {
            let k = plot_kernel(&a)?;
            let phi = PhiEvaluator::new(&k);
            let floor = 1.0 + 0.75 * a.eps;
            let mut t = Table::new("phi", &["lambda", "phi", "floor"]);
            t.push(vec![num(0.0), num(phi.phi_limit_at_zero()), num(floor)]);
            for i in 1..a.grid {
                let lambda = i as f64 / (a.grid - 1) as f64;
                t.push(vec![num(lambda), num(phi.phi_eval(lambda)?), num(floor)]);
            }
            t
        }
        Figure::Fvalues => {
            let k = plot_kernel(&a)?;
            let mut t = Table::new("fvalues", &["j", "one_plus_f"]);
            for j in 0..=k.degree() as u64 {
                t.push(vec![json!(j), num(1.0 + k.f(j))]);
            }
            t
        }
    };
    Ok(Outcome { command: "plot-data", tables: vec![table], code: 0 })
}
