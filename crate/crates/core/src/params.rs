//! Constraint audits, paper-mode parameters, the desk-scale parameter search and the soundness
//! function `Φ(λ) = (1 + 1/(Lλ)) Q*(λℓ)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{eval_closed_form_log, log_derivative_at};
use crate::error::{invalid, Error, Result};
use crate::estimator::{EstimatorKernel, SafeInterval};
use crate::rational::{self, frac};
use crate::simulate::{self, SparseDistribution};
use crate::tester::{acceptance_threshold, naive_sample_size};
use crate::{Kernel, Rational};

/// `C_d = 4 ln 2`.
pub const C_D: f64 = 4.0 * std::f64::consts::LN_2;

/// Exponent `a` of the lower end of the assumption `n^{-a} < ε < 1/3`.
pub const A_EXPONENT: f64 = 1.0 / 128.0;

/// `C_ℓ` under Constraint IV.
pub fn c_ell_iv() -> Rational {
    frac(1, 20)
}

/// `C_ℓ = min{C_d / (4√3), 1/3} = 1/3` under Constraint IVb.
pub fn c_ell_ivb() -> Rational {
    frac(1, 3)
}

/// `C_r = 4 a² C_ℓ` with `C_ℓ = 1/20`.
pub fn c_r() -> Rational {
    frac(4, 128 * 128 * 20)
}

/// Default number of `λ` points for the Φ grid.
pub const PHI_GRID_POINTS: usize = 10_000;

/// Number of `x` points on `(r, 1]` for the right-tail check.
pub const RIGHT_TAIL_POINTS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    IV,
    IVb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    PaperIV,
    PaperIVb,
    Empirical,
}

/// Tester parameters `(ℓ, r, d, m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSet {
    pub ell: Rational,
    pub r: Rational,
    pub d: usize,
    pub m: BigUint,
    pub mode: ParamMode,
}

impl ParamSet {
    pub fn new(ell: Rational, r: Rational, d: usize, m: BigUint, mode: ParamMode) -> Result<Self> {
        SafeInterval::new(ell.clone(), r.clone())?;
        if d == 0 || m.is_zero() {
            return Err(invalid("need d >= 1 and m >= 1"));
        }
        Ok(Self { ell, r, d, m, mode })
    }

    pub fn interval(&self) -> SafeInterval {
        SafeInterval::new(self.ell.clone(), self.r.clone()).expect("validated at construction")
    }

    /// `11 d / (2 (r - ℓ))`, the real-valued sample size before ceiling.
    pub fn m_real(&self) -> Rational {
        min_sample_size(self.d, &self.ell, &self.r)
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ell={} r={} d={} m={} mode={:?}",
            rational::format(&self.ell),
            rational::format(&self.r),
            self.d,
            self.m,
            self.mode
        )
    }
}

/// `11 d / (2 (r - ℓ))`.
pub fn min_sample_size(d: usize, ell: &Rational, r: &Rational) -> Rational {
    rational::int(11 * d as i64) / (rational::int(2) * (r - ell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    I,
    II,
    IIIa,
    IIIb,
    IV,
    IVb,
    Assumption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub id: ConstraintId,
    pub satisfied: bool,
    /// Natural-log margin; `>= 0` exactly when satisfied.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub variant: Variant,
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn get(&self, id: ConstraintId) -> Option<&ConstraintEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn satisfied(&self, id: ConstraintId) -> bool {
        self.get(id).is_some_and(|e| e.satisfied)
    }

    pub fn failures(&self) -> Vec<ConstraintId> {
        self.entries.iter().filter(|e| !e.satisfied).map(|e| e.id).collect()
    }
}

/// Makes the slack sign agree with an exactly decided flag.
fn entry(id: ConstraintId, satisfied: bool, slack: f64) -> ConstraintEntry {
    let slack = match (satisfied, slack >= 0.0) {
        (true, false) => 0.0,
        (false, true) => -f64::MIN_POSITIVE,
        _ => slack,
    };
    ConstraintEntry { id, satisfied, slack }
}

fn ln_biguint(n: &BigUint) -> f64 {
    rational::ln_biguint(n)
}

fn ratio_of(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Guarded rounding for log-space comparisons.
fn round_up(x: f64) -> f64 {
    x + x.abs() * 1e-12 + 1e-300
}

fn round_down(x: f64) -> f64 {
    x - x.abs() * 1e-12 - 1e-300
}

/// `n^{-a} < ε < 1/3`.
pub fn assumption_holds(n: &BigUint, eps: f64) -> bool {
    eps > 0.0 && eps < 1.0 / 3.0 && assumption_slack(n, eps) > 0.0 && rational_eps_below_third(eps)
}

fn rational_eps_below_third(eps: f64) -> bool {
    rational::from_f64_decimal(eps).map(|e| e < frac(1, 3)).unwrap_or(false)
}

fn assumption_slack(n: &BigUint, eps: f64) -> f64 {
    let upper = (1.0f64 / 3.0).ln() - eps.ln();
    let lower = eps.ln() + A_EXPONENT * ln_biguint(n);
    upper.min(lower)
}

/// `log2(1/ε)` as an exact rational (of its f64 value).
fn log2_inv(eps: f64) -> Rational {
    rational::from_f64((1.0 / eps).log2()).expect("finite")
}

/// Evaluates Constraints I, II, III (two parts), the selected IV/IVb and the assumption.
pub fn check_constraints(n: &BigUint, eps: f64, params: &ParamSet, variant: Variant) -> Result<ConstraintReport> {
    if n.is_zero() || !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("need n >= 1 and eps in (0,1), got n={n} eps={eps}")));
    }
    let eps_r = rational::from_f64_decimal(eps)?;
    let n_r = ratio_of(n);
    let (ell, r, d) = (&params.ell, &params.r, params.d);
    let diff = r - ell;
    let m_r = Rational::from_integer(BigInt::from(params.m.clone()));
    let ln_n = ln_biguint(n);
    let mut entries = Vec::new();

    // I: d >= C_d √((r-ℓ)/(2ℓ)) log2(20/ε), together with r >= 3ℓ
    let need = C_D * rational::to_f64(&(&diff / (rational::int(2) * ell))).sqrt() * (20.0 / eps).log2();
    let three_ell = ell * rational::int(3);
    let slack_d = (d as f64).ln() - need.ln();
    let slack_r = rational::ln_abs(r) - rational::ln_abs(&three_ell);
    let ok_d = d as f64 >= need;
    let ok_r = *r >= three_ell;
    entries.push(entry(ConstraintId::I, ok_d && ok_r, slack_d.min(slack_r)));

    // II: 2 m (r-ℓ) >= 11 d
    let lhs = rational::int(2) * &m_r * &diff;
    let rhs = rational::int(11 * d as i64);
    entries.push(entry(ConstraintId::II, lhs >= rhs, rational::ln_abs(&lhs) - rational::ln_abs(&rhs)));

    // IIIa: 256 m <= ε² n²
    let lhs = &m_r * rational::int(256);
    let rhs = &eps_r * &eps_r * &n_r * &n_r;
    entries.push(entry(ConstraintId::IIIa, lhs <= rhs, rational::ln_abs(&rhs) - rational::ln_abs(&lhs)));

    // IIIb: d⁶ 9^d ((r+ℓ)/(r-ℓ))^{2d-2} <= m (r-ℓ)² n² / 4, compared in log space
    let ratio = rational::ln_abs(&((r + ell) / &diff));
    let lhs_up = round_up(6.0 * (d as f64).ln()) + round_up(d as f64 * 9f64.ln()) + round_up((2 * d - 2) as f64 * ratio);
    let rhs_down = round_down(
        rational::ln_abs(&m_r) + 2.0 * rational::ln_abs(&diff) + 2.0 * ln_n - 4f64.ln(),
    );
    let slack = rhs_down - lhs_up;
    entries.push(entry(ConstraintId::IIIb, slack >= 0.0, slack));

    // IV / IVb
    let (id, bound) = match variant {
        Variant::IV => (ConstraintId::IV, c_ell_iv() * &eps_r / &n_r),
        Variant::IVb => (ConstraintId::IVb, c_ell_ivb() * &eps_r / &n_r * log2_inv(eps)),
    };
    entries.push(entry(id, *ell <= bound, rational::ln_abs(&bound) - rational::ln_abs(ell)));

    let slack = assumption_slack(n, eps);
    entries.push(entry(ConstraintId::Assumption, assumption_holds(n, eps), slack));
    Ok(ConstraintReport { variant, entries })
}

/// Paper-mode parameters; fails when the assumption `n^{-a} < ε < 1/3` does not hold.
pub fn paper_params(n: &BigUint, eps: f64, variant: Variant) -> Result<ParamSet> {
    if !assumption_holds(n, eps) {
        return Err(Error::Assumption(format!(
            "need n^(-1/128) < eps < 1/3; got eps={eps}, n^(-1/128)={:.6}",
            (-A_EXPONENT * ln_biguint(n)).exp()
        )));
    }
    paper_params_unchecked(n, eps, variant)
}

/// The paper-mode construction without the assumption gate, for audits of out-of-range inputs.
///
/// Variant IV: `ℓ = ε/(20n)`, `r = C_r (ε/n) (ln n / ln(1/ε))²`,
/// `d = ⌈C_d √((r-ℓ)/(2ℓ)) log2(20/ε)⌉`, `m = ⌈11d / (2(r-ℓ))⌉`. Variant IVb multiplies `ℓ` and `r`
/// by `log2(1/ε)` (dividing the real-valued `m` by the same factor) and keeps `d`.
pub fn paper_params_unchecked(n: &BigUint, eps: f64, variant: Variant) -> Result<ParamSet> {
    if n.is_zero() || !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("need n >= 1 and eps in (0,1), got n={n} eps={eps}")));
    }
    let eps_r = rational::from_f64_decimal(eps)?;
    let n_r = ratio_of(n);
    let mut ell = c_ell_iv() * &eps_r / &n_r;
    let log_ratio = ln_biguint(n) / (1.0 / eps).ln();
    let mut r = c_r() * &eps_r / &n_r * rational::from_f64(log_ratio * log_ratio)?;
    if r <= ell {
        return Err(invalid(format!("r <= ell for n={n} eps={eps}; n is too small for paper mode")));
    }
    let d_real = C_D * rational::to_f64(&((&r - &ell) / (rational::int(2) * &ell))).sqrt() * (20.0 / eps).log2();
    let d = d_real.ceil() as usize;
    if variant == Variant::IVb {
        let scale = log2_inv(eps);
        ell *= &scale;
        r *= &scale;
    }
    let m = rational::ceil_to_biguint(&min_sample_size(d, &ell, &r));
    let mode = match variant {
        Variant::IV => ParamMode::PaperIV,
        Variant::IVb => ParamMode::PaperIVb,
    };
    ParamSet::new(ell, r, d, m, mode)
}

/// Whether the empirical search is attempted: `n >= 10` and `ε ∈ (0.05, 1/3)`.
pub fn empirical_regime(n: u64, eps: f64) -> bool {
    n >= 10 && eps > 0.05 && eps < 1.0 / 3.0
}

/// A fixture the empirical search must classify correctly in expectation, with room to spare.
#[derive(Debug, Clone)]
pub struct StressFixture {
    pub label: String,
    pub dist: SparseDistribution,
    /// `true` for `ε`-far fixtures (must reject), `false` for support at most `n` (must accept).
    pub far: bool,
    /// Whether `Var[Ŝ] <= ε²n²/64` is demanded, on top of the Chebyshev margin.
    pub variance_bounded: bool,
}

/// Accept-side fixtures `uniform(n)` and `two_level(⌈0.8n⌉, n-⌈0.8n⌉, 1/10)`; reject-side
/// fixtures: the smallest far uniform, `two_level(⌈0.8n⌉, ⌈0.6n⌉, ε+1/5)` and the light-tailed
/// `two_level(⌈0.8n⌉, 4n, ε+3/20)`. The last one carries per-element Bernoulli noise of order
/// `m(ε+3/20)`, so only its Chebyshev margin is checked.
pub fn stress_fixtures(n: u64, eps: f64) -> Result<Vec<StressFixture>> {
    let eps_r = rational::from_f64_decimal(eps)?;
    let heavy = (4 * n).div_ceil(5);
    let far_k = simulate::smallest_far_uniform_size(n, &eps_r);
    let mut out = vec![StressFixture {
        label: format!("uniform:{n}"),
        dist: simulate::uniform(n)?,
        far: false,
        variance_bounded: true,
    }];
    if heavy < n {
        out.push(StressFixture {
            label: format!("two_level:{heavy}:{}:1/10", n - heavy),
            dist: simulate::two_level(heavy, n - heavy, &frac(1, 10))?,
            far: false,
            variance_bounded: true,
        });
    }
    out.push(StressFixture {
        label: format!("uniform:{far_k}"),
        dist: simulate::uniform(far_k)?,
        far: true,
        variance_bounded: true,
    });
    for (light, mu, bounded) in [((3 * n).div_ceil(5), &eps_r + frac(1, 5), true), (4 * n, &eps_r + frac(3, 20), false)] {
        if mu >= Rational::one() {
            continue;
        }
        let dist = simulate::two_level(heavy, light, &mu)?;
        if simulate::tv_distance_to_supportsize(&dist, n) > eps_r {
            out.push(StressFixture {
                label: format!("two_level:{heavy}:{light}:{}", rational::format(&mu)),
                dist,
                far: true,
                variance_bounded: bounded,
            });
        }
    }
    Ok(out)
}

/// Exact-law mean and variance of `Ŝ` under Poissonized sampling, grouping equal masses.
pub fn statistic_moments(kernel: &Kernel, dist: &SparseDistribution) -> (f64, f64) {
    let mut groups: BTreeMap<u64, u64> = BTreeMap::new();
    for &p in dist.masses_f64() {
        *groups.entry(p.to_bits()).or_insert(0) += 1;
    }
    groups.into_iter().fold((0.0, 0.0), |(e, v), (bits, count)| {
        let (mean, var) = kernel.contribution_moments(f64::from_bits(bits));
        (e + count as f64 * mean, v + count as f64 * var)
    })
}

/// Outcome of one direct (semantic) check on a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

fn check(name: &str, value: f64, bound: f64) -> SemanticCheck {
    SemanticCheck { name: name.to_string(), passed: value <= bound, value, bound }
}

/// `max |1 - Q(x)| / δ` over a grid on `(r, 1]`, with its location.
pub fn right_tail_worst(kernel: &Kernel, points: usize) -> (f64, f64) {
    let r = kernel.r_f();
    let delta = kernel.delta_f();
    let half = (points / 2).max(1);
    let geometric = (0..half).map(|i| r * (1.0 / r).powf((i + 1) as f64 / half as f64));
    let uniform = (0..half).map(|i| r + (1.0 - r) * (i + 1) as f64 / half as f64);
    geometric
        .chain(uniform)
        .map(|x| (x, kernel.q_minus_one(x).abs() / delta))
        .fold((r, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Chebyshev-inequality margin on a fixture: `4 Var / (E - t)²` when `E` is on the correct side
/// of the threshold `t`, otherwise infinity. At most 1 means a wrong decision has probability at
/// most 1/4.
pub fn chebyshev_margin(kernel: &Kernel, fixture: &StressFixture) -> f64 {
    let (mean, var) = statistic_moments(kernel, &fixture.dist);
    let t = acceptance_threshold(kernel.n(), kernel.eps());
    let gap = if fixture.far { mean - t } else { t - mean };
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        4.0 * var / (gap * gap)
    }
}

/// All direct checks the empirical search requires, in evaluation order.
pub fn semantic_checks(kernel: &Kernel) -> Result<Vec<SemanticCheck>> {
    let fixtures = stress_fixtures(kernel.n(), kernel.eps())?;
    SEMANTIC_CHECKS.iter().map(|name| run_semantic_check(kernel, name, &fixtures)).collect()
}

/// Names of the checks run by [`semantic_checks`].
pub const SEMANTIC_CHECKS: [&str; 4] = ["delta", "variance", "right_tail", "phi_grid"];

fn run_semantic_check(kernel: &Kernel, name: &str, fixtures: &[StressFixture]) -> Result<SemanticCheck> {
    let eps = kernel.eps();
    Ok(match name {
        "delta" => {
            let passed = kernel.delta() * rational::int(20) <= rational::from_f64_decimal(eps)?;
            SemanticCheck { name: name.into(), passed, value: kernel.delta_f(), bound: eps / 20.0 }
        }
        "right_tail" => check(name, right_tail_worst(kernel, RIGHT_TAIL_POINTS).1, 1.0 + 1e-9),
        "variance" => {
            let bound = eps * eps * (kernel.n() as f64).powi(2) / 64.0;
            let worst = fixtures
                .iter()
                .map(|f| {
                    let margin = chebyshev_margin(kernel, f);
                    if f.variance_bounded {
                        margin.max(statistic_moments(kernel, &f.dist).1 / bound)
                    } else {
                        margin
                    }
                })
                .fold(0.0, f64::max);
            check(name, worst, 1.0)
        }
        "phi_grid" => {
            let phi = PhiEvaluator::new(kernel);
            let (_, min) = phi.grid_min(PHI_GRID_POINTS);
            let target = 1.0 + 0.75 * eps;
            SemanticCheck { name: name.into(), passed: min >= target, value: min, bound: target }
        }
        other => return Err(invalid(format!("unknown semantic check {other:?}"))),
    })
}

fn passes_all(kernel: &Kernel, fixtures: &[StressFixture]) -> bool {
    SEMANTIC_CHECKS.iter().all(|name| run_semantic_check(kernel, name, fixtures).is_ok_and(|c| c.passed))
}

/// Values of `ℓ n / ε` tried by the search.
fn lambda_grid() -> Vec<Rational> {
    (0..26)
        .map(|i| {
            let v = 0.05 * 1.2f64.powi(i);
            let digits = 3 - v.log10().floor() as i32 - 1;
            rational::round_decimal(v, digits.max(0) as u32).expect("finite")
        })
        .collect()
}

const RATIO_GRID: [u64; 14] = [3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256];

/// Extra degrees tried above the smallest one meeting `δ <= ε/20`.
const DEGREE_SLACK: usize = 6;

/// Smallest `d` with `T_d(ψ(0)) >= 20/ε` in floating point (confirmed exactly later).
fn min_degree(psi0: f64, eps: f64) -> Option<usize> {
    let target = (20.0 / eps).ln();
    (1..=crate::estimator::DEFAULT_MAX_DEGREE).find(|&d| eval_closed_form_log::<f64>(d, psi0).is_ok_and(|v| v >= target))
}

fn search(n: u64, eps: f64) -> Option<ParamSet> {
    let eps_r = rational::from_f64_decimal(eps).ok()?;
    let fixtures = stress_fixtures(n, eps).ok()?;
    let n_r = rational::int(n as i64);
    let budget = naive_sample_size(n, eps);
    let mut candidates = Vec::new();
    for lambda in lambda_grid() {
        let ell = &lambda * &eps_r / &n_r;
        for ratio in RATIO_GRID {
            let r = &ell * rational::int(ratio as i64);
            if r > Rational::one() {
                continue;
            }
            let psi0 = rational::to_f64(&((&r + &ell) / (&r - &ell)));
            let Some(d0) = min_degree(psi0, eps) else { continue };
            for d in d0..=d0 + DEGREE_SLACK {
                let m = min_sample_size(d, &ell, &r).ceil().to_integer().to_u64()?;
                if m < budget {
                    candidates.push((m, d, ratio, ell.clone(), r.clone()));
                }
            }
        }
    }
    candidates.sort_by(|a, b| (a.0, a.1, a.2, &a.3).cmp(&(b.0, b.1, b.2, &b.3)));
    candidates.into_iter().find_map(|(m, d, _, ell, r)| {
        let interval = SafeInterval::new(ell.clone(), r.clone()).ok()?;
        let kernel: Kernel = EstimatorKernel::new(n, eps, interval, d, m).ok()?;
        passes_all(&kernel, &fixtures).then(|| ParamSet::new(ell, r, d, BigUint::from(m), ParamMode::Empirical).ok())?
    })
}

/// Search results keyed by `(n, ε bits)`.
type SearchCache = Mutex<HashMap<(u64, u64), Option<ParamSet>>>;

fn search_cache() -> &'static SearchCache {
    static CACHE: OnceLock<SearchCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Desk-scale parameters: the candidate with the smallest `m = ⌈11d/(2(r-ℓ))⌉` whose kernel passes
/// every check in [`SEMANTIC_CHECKS`].
///
/// Candidates are `ℓ = λε/n` for `λ` on a geometric grid from 0.05, `r/ℓ` from a fixed list, and
/// `d` from the smallest degree with `δ <= ε/20` upward. The result is a pure function of
/// `(n, ε)` and is memoised per process.
pub fn empirical_params(n: u64, eps: f64) -> Result<ParamSet> {
    if !empirical_regime(n, eps) {
        return Err(Error::ParameterSearch(format!(
            "empirical mode needs n >= 10 and eps in (0.05, 1/3), got n={n} eps={eps}"
        )));
    }
    let key = (n, eps.to_bits());
    if let Some(hit) = search_cache().lock().expect("cache lock").get(&key) {
        return hit.clone().ok_or_else(|| search_failure(n, eps));
    }
    let found = search(n, eps);
    search_cache().lock().expect("cache lock").insert(key, found.clone());
    found.ok_or_else(|| search_failure(n, eps))
}

fn search_failure(n: u64, eps: f64) -> Error {
    Error::ParameterSearch(format!("no candidate below the naive budget passes all checks for n={n} eps={eps}"))
}

/// `Φ(λ) = (1 + 1/(Lλ)) Q*(λℓ)` with `L = ℓn/ε`.
#[derive(Debug, Clone, Copy)]
pub struct PhiEvaluator<'a> {
    kernel: &'a Kernel,
    l: f64,
    a: f64,
}

/// A point where the differential inequality fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialWitness {
    pub lambda: f64,
    pub derivative: f64,
    pub lower_bound: f64,
}

impl<'a> PhiEvaluator<'a> {
    pub fn new(kernel: &'a Kernel) -> Self {
        let l = kernel.ell_f() * kernel.n() as f64 / kernel.eps();
        let a = (1.0f64 / 3.0).sqrt() * C_D * (1.0 / kernel.eps()).log2();
        Self { kernel, l, a }
    }

    pub fn kernel(&self) -> &Kernel {
        self.kernel
    }

    /// `L = ℓn/ε`.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// `A = C_d log2(1/ε) / √3`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `K = A / L`.
    pub fn k(&self) -> f64 {
        self.a / self.l
    }

    pub fn phi_eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(crate::error::domain(format!("Φ needs λ in (0, 1], got {lambda}")));
        }
        Ok(self.phi_unchecked(lambda))
    }

    fn phi_unchecked(&self, lambda: f64) -> f64 {
        (1.0 + 1.0 / (self.l * lambda)) * self.kernel.q_star_eval(lambda * self.kernel.ell_f())
    }

    /// `lim_{λ→0+} Φ(λ) = (δε/(ℓn)) (2α/(1-α)) T_d'(1 + 2α/(1-α))`, formed in log space.
    pub fn phi_limit_at_zero(&self) -> f64 {
        let k = self.kernel;
        let iv = k.interval();
        let gamma = rational::int(2) * iv.ell() / (iv.r() - iv.ell());
        let psi0 = rational::to_f64(&iv.psi_at_zero());
        let ln = rational::ln_abs(k.delta()) - self.l.ln()
            + rational::ln_abs(&gamma)
            + log_derivative_at::<f64>(k.degree(), psi0).expect("ψ(0) > 1");
        ln.exp()
    }

    /// `λ` grid: half uniform on `(0, 1]`, half geometric on `(0, min(10/L, 1)]` down to a
    /// millionth of that.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let half = (points / 2).max(1);
        let top = (10.0 / self.l).min(1.0);
        let mut g: Vec<f64> = (1..=half)
            .map(|i| i as f64 / half as f64)
            .chain((0..half).map(|i| top * 1e-6f64.powf(i as f64 / (half - 1).max(1) as f64)))
            .collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    /// Smallest value of Φ over the limit at 0 and the grid, with its `λ` (0 for the limit).
    pub fn grid_min(&self, points: usize) -> (f64, f64) {
        self.grid(points)
            .into_iter()
            .map(|lam| (lam, self.phi_unchecked(lam)))
            .fold((0.0, self.phi_limit_at_zero()), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// `Φ >= 1 + 3ε/4` at the limit and on the grid.
    pub fn phi_grid_check(&self, points: usize) -> bool {
        self.grid_min(points).1 >= 1.0 + 0.75 * self.kernel.eps()
    }

    /// Compares central differences (`h = 1e-7`) of Φ against
    /// `-Φ(A + 1/(λ(Lλ+1))) + (1-δ)A(1 + 1/(Lλ))` on `points` values of `λ` in `[1e-4, 1 - 1e-4]`,
    /// allowing `1e-4` times the magnitude of the terms. Returns the first failure.
    pub fn differential_check(&self, points: usize) -> Option<DifferentialWitness> {
        let h = 1e-7;
        let delta = self.kernel.delta_f();
        let half = (points / 2).max(2);
        let lo = 1e-4f64;
        let geometric = (0..half).map(|i| lo * (0.5 / lo).powf(i as f64 / (half - 1) as f64));
        let uniform = (0..half).map(|i| 0.5 + (0.5 - lo) * i as f64 / (half - 1) as f64);
        geometric.chain(uniform).find_map(|lam| {
            let phi = self.phi_unchecked(lam);
            let derivative = (self.phi_unchecked(lam + h) - self.phi_unchecked(lam - h)) / (2.0 * h);
            let damp = phi * (self.a + 1.0 / (lam * (self.l * lam + 1.0)));
            let drive = (1.0 - delta) * self.a * (1.0 + 1.0 / (self.l * lam));
            let lower_bound = -damp + drive;
            let scale = 1f64.max(damp.abs()).max(drive.abs()).max(derivative.abs());
            (derivative < lower_bound - 1e-4 * scale).then_some(DifferentialWitness { lambda: lam, derivative, lower_bound })
        })
    }
}
