//! Grid-based invariant suites over a set of kernels, with witnesses for every failure.

use num_bigint::BigUint;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::chebyshev;
use crate::error::{invalid, Result};
use crate::estimator::build_kernel;
use crate::params::{self, ConstraintId, ParamMode, ParamSet, PhiEvaluator, Variant, C_D};
use crate::rational::{self, frac};
use crate::{Kernel, Rational};

/// Default number of points on the `x` grids.
pub const DEFAULT_GRID: usize = 1000;

/// Largest degree covered by the coefficient identity.
pub const COEFFICIENT_MAX_DEGREE: usize = 60;

/// Largest degree covered by the growth and derivative bounds.
pub const GROWTH_MAX_DEGREE: usize = 50;

const GROWTH_GAMMA_POINTS: usize = 121;
const GRID_SLACK: f64 = 1e-9;
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VerificationKernel {
    pub label: String,
    pub params: ParamSet,
    pub kernel: Kernel,
    /// Constraints I and IVb both hold, so the Φ bounds are expected.
    pub constraint_i_ivb: bool,
}

impl VerificationKernel {
    pub fn new(label: impl Into<String>, n: u64, eps: f64, params: ParamSet) -> Result<Self> {
        let kernel = build_kernel(n, eps, &params)?;
        let report = params::check_constraints(&BigUint::from(n), eps, &params, Variant::IVb)?;
        let constraint_i_ivb = report.satisfied(ConstraintId::I) && report.satisfied(ConstraintId::IVb);
        Ok(Self { label: label.into(), params, kernel, constraint_i_ivb })
    }

    /// The same kernel with its floating-point `δ` doubled.
    pub fn with_doubled_delta(&self) -> Self {
        let delta = self.kernel.delta() * rational::int(2);
        Self {
            label: format!("{} [delta doubled]", self.label),
            params: self.params.clone(),
            kernel: self.kernel.with_delta_override(delta),
            constraint_i_ivb: self.constraint_i_ivb,
        }
    }
}

/// Parameters sized by Constraints I, II and IVb at small `n`.
///
/// `ℓ` sits exactly on the IVb bound `(1/3)(ε/n) log2(1/ε)`, `r = ratio·ℓ`, `d` is the smallest
/// degree Constraint I allows and `m = ⌈11d / (2(r-ℓ))⌉`. Constraint III is ignored, so these
/// are only meaningful for checking the analytic invariants.
pub fn ivb_params(n: u64, eps: f64, ratio: u64) -> Result<ParamSet> {
    if ratio < 3 || n == 0 || !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("need ratio >= 3, n >= 1, eps in (0,1); got {ratio}, {n}, {eps}")));
    }
    let ell = params::c_ell_ivb() * rational::from_f64_decimal(eps)? / rational::int(n as i64)
        * rational::from_f64((1.0 / eps).log2())?;
    let r = &ell * rational::int(ratio as i64);
    if r > Rational::one() {
        return Err(invalid(format!("r = {} exceeds 1", rational::format(&r))));
    }
    let d = (C_D * ((ratio - 1) as f64 / 2.0).sqrt() * (20.0 / eps).log2()).ceil() as usize;
    let m = rational::ceil_to_biguint(&params::min_sample_size(d, &ell, &r));
    ParamSet::new(ell, r, d, m, ParamMode::PaperIVb)
}

/// The kernels checked by default: the empirical-mode kernels for `(100, 0.25)` and `(200, 0.2)`
/// and four Constraint I + IVb kernels.
pub fn default_kernels() -> Result<Vec<VerificationKernel>> {
    let pinned = |ell: Rational, r: Rational, d: usize, m: u32| ParamSet::new(ell, r, d, BigUint::from(m), ParamMode::Empirical);
    let mut out = vec![
        VerificationKernel::new("empirical n=100 eps=0.25", 100, 0.25, pinned(frac(23, 4000), frac(23, 250), 11, 702)?)?,
        VerificationKernel::new("empirical n=200 eps=0.2", 200, 0.2, pinned(frac(23, 10000), frac(69, 1250), 14, 1456)?)?,
    ];
    for (n, eps, ratio) in [(100, 0.25, 3), (100, 0.25, 16), (100, 0.125, 8), (1000, 0.25, 64)] {
        let label = format!("ivb n={n} eps={eps} r/l={ratio}");
        out.push(VerificationKernel::new(label, n, eps, ivb_params(n, eps, ratio)?)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: &'static str,
    pub subject: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub bound: f64,
    /// Where the worst value occurred (`x`, `λ`, `γ` or `d`, depending on the check).
    pub witness: Option<f64>,
}

impl CheckOutcome {
    fn upper(check: &'static str, subject: &str, value: f64, bound: f64, witness: Option<f64>) -> Self {
        Self { check, subject: subject.to_string(), passed: value <= bound, value, bound, witness }
    }

    fn lower(check: &'static str, subject: &str, value: f64, bound: f64, witness: Option<f64>) -> Self {
        Self { check, subject: subject.to_string(), passed: value >= bound, value, bound, witness }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub grid: usize,
    pub phi_grid: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID, phi_grid: params::PHI_GRID_POINTS }
    }
}

impl VerifyOptions {
    /// Uses `grid` points for the `x` grids and at least the default for the Φ grid.
    pub fn with_grid(grid: usize) -> Self {
        Self { grid: grid.max(2), phi_grid: grid.max(params::PHI_GRID_POINTS) }
    }
}

fn uniform_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let steps = (points - 1).max(1) as f64;
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / steps)
}

/// Geometric points from `hi` down to `hi·1e-6`, followed by a uniform grid on `(0, hi]`.
fn mixed_grid(hi: f64, points: usize) -> Vec<f64> {
    let half = (points / 2).max(2);
    let geometric = (0..half).map(|i| hi * 1e-6f64.powf(i as f64 / (half - 1) as f64));
    let uniform = (1..=half).map(|i| hi * i as f64 / half as f64);
    geometric.chain(uniform).collect()
}

fn worst_by<I: Iterator<Item = (f64, f64)>>(values: I) -> (f64, f64) {
    values.fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// `P_d(0) = -1`, in exact arithmetic against the kernel's `δ`.
pub fn check_p_at_zero(vk: &VerificationKernel) -> CheckOutcome {
    let k = &vk.kernel;
    let p0 = -(k.delta() * chebyshev::eval_rational(k.degree(), &k.interval().psi_at_zero()));
    let exact = p0 == -Rational::one();
    let value = rational::to_f64(&p0);
    CheckOutcome { check: "p_at_zero", subject: vk.label.clone(), passed: exact, value, bound: -1.0, witness: Some(0.0) }
}

/// `|P_d(x)| <= δ` on `[ℓ, r]`.
pub fn check_envelope(vk: &VerificationKernel, points: usize) -> CheckOutcome {
    let k = &vk.kernel;
    let (x, v) = worst_by(uniform_grid(k.ell_f(), k.r_f(), points).map(|x| (x, k.p_poly_eval(x).abs())));
    CheckOutcome::upper("envelope", &vk.label, v, k.delta_f() + GRID_SLACK, Some(x))
}

/// `|1 - Q(x)| <= δ` on `(r, 1]`, reported relative to `δ`.
pub fn check_right_tail(vk: &VerificationKernel, points: usize) -> CheckOutcome {
    let (x, ratio) = params::right_tail_worst(&vk.kernel, points);
    CheckOutcome::upper("right_tail", &vk.label, ratio, 1.0 + GRID_SLACK, Some(x))
}

/// `(1-δ)x/ℓ <= Q(x) <= 1` on `(0, ℓ]`; the value is the largest violation of either side.
pub fn check_light_sandwich(vk: &VerificationKernel, points: usize) -> CheckOutcome {
    let k = &vk.kernel;
    let (ell, delta) = (k.ell_f(), k.delta_f());
    let (x, v) = worst_by(mixed_grid(ell, points).into_iter().map(|x| {
        let q = k.q_eval(x);
        (x, ((1.0 - delta) * x / ell - q).max(q - 1.0))
    }));
    CheckOutcome::upper("light_sandwich", &vk.label, v, ROUNDING_SLACK, Some(x))
}

/// `P_d` is non-decreasing and concave on `[0, ℓ]`; the value is the largest violation of
/// either difference condition.
pub fn check_concavity(vk: &VerificationKernel, points: usize) -> CheckOutcome {
    let k = &vk.kernel;
    let xs: Vec<f64> = uniform_grid(0.0, k.ell_f(), points.max(3)).collect();
    let ps: Vec<f64> = xs.iter().map(|&x| -k.delta_f() * chebyshev::eval_recurrence(k.degree(), k.psi(x))).collect();
    let (x, v) = worst_by((1..ps.len() - 1).map(|i| {
        let rise = ps[i] - ps[i - 1];
        let bend = ps[i + 1] - 2.0 * ps[i] + ps[i - 1];
        (xs[i], (-rise).max(bend))
    }));
    CheckOutcome::upper("concavity", &vk.label, v, ROUNDING_SLACK, Some(x))
}

/// `Q*(x) <= Q(x)` on `(0, 1]`.
pub fn check_q_star(vk: &VerificationKernel, points: usize) -> CheckOutcome {
    let k = &vk.kernel;
    let (x, v) = worst_by(mixed_grid(1.0, points).into_iter().map(|x| (x, k.q_star_eval(x) - k.q_eval(x))));
    CheckOutcome::upper("q_star_below_q", &vk.label, v, ROUNDING_SLACK, Some(x))
}

/// The exact f-table equals the direct formula, and every `|f(k)|` is within its bound.
pub fn check_f_table(vk: &VerificationKernel) -> CheckOutcome {
    let k = &vk.kernel;
    let identity = k.f_table_matches_direct_formula();
    let (j, v) = worst_by((0..=k.degree()).map(|j| {
        let f = rational::to_f64(&k.f_table()[j]).abs();
        (j as f64, f / k.f_value_bound(j))
    }));
    let mut out = CheckOutcome::upper("f_table", &vk.label, v, 1.0 + GRID_SLACK, Some(j));
    out.passed &= identity;
    out
}

/// The Φ checks: the limit at 0 is at least 2, `Φ(1)` and the grid stay above `1 + 3ε/4`, and
/// the differential inequality holds.
pub fn check_phi(vk: &VerificationKernel, points: usize) -> Vec<CheckOutcome> {
    let phi = PhiEvaluator::new(&vk.kernel);
    let floor = 1.0 + 0.75 * vk.kernel.eps();
    let at_one = phi.phi_eval(1.0).expect("λ = 1 is in range");
    let (lam, min) = phi.grid_min(points);
    let mut out = vec![
        CheckOutcome::lower("phi_limit", &vk.label, phi.phi_limit_at_zero(), 2.0 - GRID_SLACK, Some(0.0)),
        CheckOutcome::lower("phi_at_one", &vk.label, at_one, floor, Some(1.0)),
        CheckOutcome::lower("phi_grid", &vk.label, min, floor, Some(lam)),
    ];
    let diff = match phi.differential_check(DEFAULT_GRID) {
        None => CheckOutcome::lower("phi_differential", &vk.label, 0.0, 0.0, None),
        Some(w) => CheckOutcome::lower("phi_differential", &vk.label, w.derivative, w.lower_bound, Some(w.lambda)),
    };
    out.push(diff);
    out
}

/// Every per-kernel check. The Φ checks run only where Constraints I and IVb hold; the Φ grid
/// also runs on empirical kernels, whose search guarantees it.
pub fn kernel_checks(vk: &VerificationKernel, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = vec![
        check_p_at_zero(vk),
        check_envelope(vk, opts.grid),
        check_right_tail(vk, opts.grid),
        check_light_sandwich(vk, opts.grid),
        check_concavity(vk, opts.grid),
        check_q_star(vk, opts.grid),
        check_f_table(vk),
    ];
    if vk.constraint_i_ivb {
        out.extend(check_phi(vk, opts.phi_grid));
    } else if vk.params.mode == ParamMode::Empirical {
        let phi = PhiEvaluator::new(&vk.kernel);
        let (lam, min) = phi.grid_min(opts.phi_grid);
        out.push(CheckOutcome::lower("phi_grid", &vk.label, min, 1.0 + 0.75 * vk.kernel.eps(), Some(lam)));
    }
    out
}

/// `γ` values spaced geometrically over `[1e-6, 1]`.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    let steps = (points - 1).max(1) as f64;
    (0..points).map(|i| 1e-6f64.powf(1.0 - i as f64 / steps)).collect()
}

/// `T_d(1+γ) >= 2^(c d √γ - 1)` for `d <= 50`; the value is the smallest ratio of the two sides.
pub fn check_growth() -> CheckOutcome {
    let gammas = gamma_grid(GROWTH_GAMMA_POINTS);
    let (d, v) = worst_by((1..=GROWTH_MAX_DEGREE).flat_map(|d| {
        gammas.iter().map(move |&g| {
            let t = chebyshev::eval_recurrence(d, 1.0 + g);
            let bound = chebyshev::growth_lower_bound(d, g).expect("γ in range");
            (d as f64, 1.0 - t / bound)
        })
    }));
    CheckOutcome::lower("cheb_growth", "d<=50", 1.0 - v, 1.0 - GRID_SLACK, Some(d))
}

/// `T_d'(1+γ) >= (d/√(3γ)) (T_d(1+γ) - 1)` for `d <= 50`; the value is the smallest ratio.
pub fn check_derivative() -> CheckOutcome {
    let gammas = gamma_grid(GROWTH_GAMMA_POINTS);
    let (d, v) = worst_by((1..=GROWTH_MAX_DEGREE).flat_map(|d| {
        gammas.iter().map(move |&g| {
            let y = 1.0 + g;
            let dt = chebyshev::derivative_at(d, y).expect("y >= 1");
            let bound = d as f64 / (3.0 * g).sqrt() * (chebyshev::eval_recurrence(d, y) - 1.0);
            (d as f64, 1.0 - dt / bound)
        })
    }));
    CheckOutcome::lower("cheb_derivative", "d<=50", 1.0 - v, 1.0 - GRID_SLACK, Some(d))
}

/// Closed-form and recurrence coefficients agree for `d <= 60`, within `|b_j| <= d 3^d`.
/// The value counts failing degrees; the witness is the first one.
pub fn check_coefficients() -> CheckOutcome {
    let bad: Vec<usize> = (0..=COEFFICIENT_MAX_DEGREE)
        .filter(|&d| {
            let rec = chebyshev::coefficients_recurrence(d);
            let bound = chebyshev::coefficient_bound(d.max(1));
            rec != chebyshev::coefficients_formula(d) || rec.coefficients().iter().any(|b| b.abs() > bound)
        })
        .collect();
    CheckOutcome::upper("cheb_coefficients", "d<=60", bad.len() as f64, 0.0, bad.first().map(|&d| d as f64))
}

pub fn chebyshev_checks() -> Vec<CheckOutcome> {
    vec![check_coefficients(), check_growth(), check_derivative()]
}

/// The Chebyshev checks followed by every per-kernel check.
pub fn run_all(kernels: &[VerificationKernel], opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = chebyshev_checks();
    for vk in kernels {
        out.extend(kernel_checks(vk, opts));
    }
    out
}
