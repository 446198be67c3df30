//! The instantiated linear test statistic.
//!
//! An [`EstimatorKernel`] freezes `(n, ε, ℓ, r, d, m)` together with the exactly computed
//! `δ = 1 / T_d(ψ(0))`, the coefficients `a_k` of `P_d(x) = Σ a_k x^k - 1 = -δ T_d(ψ(x))` and the
//! table `f(k) = a_k k! / m^k`. The exact tables are rounded to the scalar type `S` once, for
//! streaming evaluation of `Ŝ = Σ_j F_j (1 + f(j))`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{self, eval_closed_form_log, eval_recurrence};
use crate::error::{invalid, Error, Result};
use crate::params::ParamSet;
use crate::rational;
use crate::simulate::SparseDistribution;
use crate::{Rational, Scalar};

/// Largest degree accepted by [`build_kernel`].
pub const DEFAULT_MAX_DEGREE: usize = 512;

/// Histograms with more distinct counts than this are summed with compensation.
const COMPENSATED_SUM_THRESHOLD: usize = 1_000_000;

/// The safe interval `[ℓ, r]` on which `|P_d| <= δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafeInterval {
    ell: Rational,
    r: Rational,
}

impl SafeInterval {
    pub fn new(ell: Rational, r: Rational) -> Result<Self> {
        if !(ell.is_positive() && ell < r && r <= Rational::one()) {
            return Err(invalid(format!(
                "safe interval needs 0 < ell < r <= 1, got ell={} r={}",
                rational::format(&ell),
                rational::format(&r)
            )));
        }
        Ok(Self { ell, r })
    }

    pub fn ell(&self) -> &Rational {
        &self.ell
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    /// `α = ℓ / r`.
    pub fn alpha(&self) -> Rational {
        &self.ell / &self.r
    }

    /// `ψ(x) = -(2x - r - ℓ) / (r - ℓ)`, exactly.
    pub fn psi_exact(&self, x: &Rational) -> Rational {
        (&self.r + &self.ell - x * rational::int(2)) / (&self.r - &self.ell)
    }

    /// `ψ(0) = (r + ℓ) / (r - ℓ) = 1 + 2α / (1 - α)`.
    pub fn psi_at_zero(&self) -> Rational {
        (&self.r + &self.ell) / (&self.r - &self.ell)
    }

    /// Floating `ψ(x)`, written so that `ψ(ℓ) = 1` and `ψ(r) = -1` hold bit-exactly.
    pub fn psi<S: Scalar>(&self, x: S) -> S {
        let ell = S::of(rational::to_f64(&self.ell));
        let r = S::of(rational::to_f64(&self.r));
        ((r - x) + (ell - x)) / (r - ell)
    }
}

/// Fixed kernel defining one test statistic.
#[derive(Debug, Clone)]
pub struct EstimatorKernel<S: Scalar> {
    n: u64,
    eps: f64,
    m: u64,
    d: usize,
    interval: SafeInterval,
    delta: Rational,
    f_table: Vec<Rational>,
    a_coeffs: Vec<Rational>,
    // rounded copies for streaming
    f_float: Vec<S>,
    delta_f: S,
    ln_delta: S,
    ell_f: S,
    r_f: S,
    m_f: S,
}

/// Builds the kernel for a parameter set, rejecting `d` above [`DEFAULT_MAX_DEGREE`].
pub fn build_kernel<S: Scalar>(n: u64, eps: f64, params: &ParamSet) -> Result<EstimatorKernel<S>> {
    let m = params
        .m
        .to_u64()
        .ok_or_else(|| invalid(format!("sample size {} does not fit a machine word", params.m)))?;
    let interval = SafeInterval::new(params.ell.clone(), params.r.clone())?;
    EstimatorKernel::new(n, eps, interval, params.d, m)
}

impl<S: Scalar> EstimatorKernel<S> {
    pub fn new(n: u64, eps: f64, interval: SafeInterval, d: usize, m: u64) -> Result<Self> {
        Self::with_max_degree(n, eps, interval, d, m, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(
        n: u64,
        eps: f64,
        interval: SafeInterval,
        d: usize,
        m: u64,
        max_degree: usize,
    ) -> Result<Self> {
        if d == 0 {
            return Err(invalid("degree must be at least 1"));
        }
        if d > max_degree {
            return Err(Error::DegreeBudget { d, max: max_degree });
        }
        if m == 0 {
            return Err(invalid("expected sample size m must be at least 1"));
        }
        if n == 0 || !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("need n >= 1 and eps in (0,1), got n={n} eps={eps}")));
        }
        let delta = eval_rational_inverse(d, &interval.psi_at_zero());
        let a_coeffs = p_coefficients(d, &interval, &delta);
        let m_big = BigInt::from(m);
        let mut f_table = Vec::with_capacity(d + 1);
        f_table.push(-Rational::one());
        let mut k_fact = BigInt::one();
        let mut m_pow = BigInt::one();
        for (k, a) in a_coeffs.iter().enumerate() {
            k_fact *= BigInt::from(k + 1);
            m_pow *= &m_big;
            f_table.push(a * Rational::new(k_fact.clone(), m_pow.clone()));
        }
        let f_float = f_table.iter().map(|f| S::of(rational::to_f64(f))).collect();
        Ok(Self {
            n,
            eps,
            m,
            d,
            delta_f: S::of(rational::to_f64(&delta)),
            ln_delta: S::of(rational::ln_abs(&delta)),
            ell_f: S::of(rational::to_f64(interval.ell())),
            r_f: S::of(rational::to_f64(interval.r())),
            m_f: S::of(m as f64),
            interval,
            delta,
            f_table,
            a_coeffs,
            f_float,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn m(&self) -> u64 {
        self.m
    }
    pub fn degree(&self) -> usize {
        self.d
    }
    pub fn interval(&self) -> &SafeInterval {
        &self.interval
    }
    pub fn delta(&self) -> &Rational {
        &self.delta
    }
    pub fn delta_f(&self) -> S {
        self.delta_f
    }
    pub fn ell_f(&self) -> S {
        self.ell_f
    }
    pub fn r_f(&self) -> S {
        self.r_f
    }

    /// `f(0..=d)`, exact.
    pub fn f_table(&self) -> &[Rational] {
        &self.f_table
    }

    /// `a_1..=a_d`, exact; `a_coeffs()[k - 1] = a_k`.
    pub fn a_coeffs(&self) -> &[Rational] {
        &self.a_coeffs
    }

    /// `f(j)` rounded to `S`; zero beyond the degree.
    pub fn f(&self, j: u64) -> S {
        usize::try_from(j).ok().and_then(|j| self.f_float.get(j).copied()).unwrap_or_else(S::zero)
    }

    /// Copy with `δ` replaced in the floating evaluation path; used for fault injection.
    pub fn with_delta_override(&self, delta: Rational) -> Self {
        let mut k = self.clone();
        k.delta_f = S::of(rational::to_f64(&delta));
        k.ln_delta = S::of(rational::ln_abs(&delta));
        k.delta = delta;
        k
    }

    pub fn psi(&self, x: S) -> S {
        ((self.r_f - x) + (self.ell_f - x)) / (self.r_f - self.ell_f)
    }

    /// The three-term recurrence is used directly unless `|T_d(y)|` could overflow `S`.
    fn recurrence_is_safe(&self, y: S) -> bool {
        let ay = y.abs();
        ay <= S::one() || S::of(self.d as f64) * (S::of(2.0) * ay).ln() < S::max_value().ln() * S::of(0.8)
    }

    /// `P_d(x)` as `(sign, ln |P_d(x)|)`, never touching the monomial form.
    fn p_signed_log(&self, x: S) -> (S, S) {
        let y = self.psi(x);
        let ay = y.abs();
        if ay <= S::one() {
            let v = -self.delta_f * eval_recurrence(self.d, y);
            return (v.signum(), v.abs().ln());
        }
        let lt = eval_closed_form_log(self.d, ay).expect("|y| > 1");
        let t_sign = if y < S::zero() && self.d % 2 == 1 { -S::one() } else { S::one() };
        (-t_sign, self.ln_delta + lt)
    }

    /// `P_d(x) = -δ T_d(ψ(x))`.
    pub fn p_poly_eval(&self, x: S) -> S {
        if x == S::zero() {
            return -S::one();
        }
        let y = self.psi(x);
        if self.recurrence_is_safe(y) {
            return -self.delta_f * eval_recurrence(self.d, y);
        }
        let (sign, log_mag) = self.p_signed_log(x);
        sign * log_mag.exp()
    }

    /// `Q(x) = 1 + e^{-mx} P_d(x)`, formed in log-space when `|ψ(x)| > 1`.
    pub fn q_eval(&self, x: S) -> S {
        if x == S::zero() {
            return S::zero();
        }
        let y = self.psi(x);
        let decay = self.m_f * x;
        if self.recurrence_is_safe(y) && decay < S::max_value().ln() * S::of(0.5) {
            let p = -self.delta_f * eval_recurrence(self.d, y);
            return S::one() + (-decay).exp() * p;
        }
        let (sign, log_mag) = self.p_signed_log(x);
        S::one() + sign * (log_mag - decay).exp()
    }

    /// `Q(x) - 1 = e^{-mx} P_d(x)`, without the cancellation of forming `Q` first.
    pub fn q_minus_one(&self, x: S) -> S {
        let (sign, log_mag) = self.p_signed_log(x);
        sign * (log_mag - self.m_f * x).exp()
    }

    /// `Q*(x)`: `1 + P_d(x)` left of `ℓ`, `1 - δ` from `ℓ` on.
    pub fn q_star_eval(&self, x: S) -> S {
        if x < self.ell_f {
            S::one() + self.p_poly_eval(x)
        } else {
            S::one() - self.delta_f
        }
    }

    /// `Ŝ = Σ_j F_j (1 + f(j))`, summed by ascending count.
    pub fn statistic(&self, hist: &SampleHistogram) -> S {
        let fingerprint = hist.fingerprint();
        let terms = fingerprint
            .iter()
            .map(|(&j, &fj)| S::of(fj as f64) * (S::one() + self.f(j)));
        if fingerprint.len() > COMPENSATED_SUM_THRESHOLD {
            neumaier_sum(terms)
        } else {
            terms.fold(S::zero(), |acc, t| acc + t)
        }
    }

    /// `E[Ŝ] = Σ_i Q(p_i)` under Poissonized sampling.
    pub fn expected_statistic(&self, dist: &SparseDistribution) -> S {
        dist.masses_f64().iter().map(|&p| self.q_eval(S::of(p))).fold(S::zero(), |a, b| a + b)
    }

    /// `δ d² 3^d (2d / (m(r-ℓ)))^k ((r+ℓ)/(r-ℓ))^(d-k)`, the bound on `|f(k)|`.
    pub fn f_value_bound(&self, k: usize) -> S {
        let d = self.d as f64;
        let beta = rational::to_f64(&(self.interval.r() - self.interval.ell()));
        let ratio = rational::ln_abs(&self.interval.psi_at_zero());
        let ln = rational::ln_abs(&self.delta)
            + 2.0 * d.ln()
            + d * 3f64.ln()
            + k as f64 * (2.0 * d / (self.m as f64 * beta)).ln()
            + (self.d - k) as f64 * ratio;
        S::of(ln.exp())
    }

    /// Mean and variance of one element's contribution `1 + f(N)`, `N ~ Poi(m x)`.
    pub fn contribution_moments(&self, x: S) -> (S, S) {
        let mean = self.q_eval(x);
        if x == S::zero() {
            return (mean, S::zero());
        }
        let lambda = self.m_f * x;
        let ln_lambda = lambda.ln();
        let mut ln_fact = S::zero();
        let mut second = S::zero();
        let mut mass = S::zero();
        for j in 0..=self.d {
            if j > 0 {
                ln_fact = ln_fact + S::of(j as f64).ln();
            }
            let pmf = (-lambda + S::of(j as f64) * ln_lambda - ln_fact).exp();
            let c = S::one() + self.f_float[j];
            second = second + pmf * c * c;
            mass = mass + pmf;
        }
        second = second + (S::one() - mass).max(S::zero());
        (mean, (second - mean * mean).max(S::zero()))
    }

    /// Checks the f-table against the direct closed formula, term for term.
    pub fn f_table_matches_direct_formula(&self) -> bool {
        let direct = f_values_direct(self.d, &self.interval, self.m, &self.delta);
        direct == self.f_table
    }
}

fn eval_rational_inverse(d: usize, x: &Rational) -> Rational {
    chebyshev::eval_rational(d, x).recip()
}

/// `a_k = (-1)^{k+1} δ 2^k Σ_{j>=k} b_j C(j,k) (r+ℓ)^{j-k} / (r-ℓ)^j` for `k = 1..=d`.
///
/// The inner sum is carried over the common denominator `sd^d bn^d`, where `r+ℓ = sn/sd` and
/// `r-ℓ = bn/bd`, so it is a sum of integers.
pub fn p_coefficients(d: usize, interval: &SafeInterval, delta: &Rational) -> Vec<Rational> {
    let b = chebyshev::coefficients_recurrence(d);
    let sum = interval.r() + interval.ell();
    let diff = interval.r() - interval.ell();
    let (sn, sd) = (sum.numer().clone(), sum.denom().clone());
    let (bn, bd) = (diff.numer().clone(), diff.denom().clone());
    let powers = |base: &BigInt| {
        let mut v = Vec::with_capacity(d + 1);
        let mut acc = BigInt::one();
        for _ in 0..=d {
            v.push(acc.clone());
            acc *= base;
        }
        v
    };
    let (sn_p, sd_p, bn_p, bd_p) = (powers(&sn), powers(&sd), powers(&bn), powers(&bd));
    let common = Rational::from_integer(&sd_p[d] * &bn_p[d]);
    (1..=d)
        .map(|k| {
            let mut total = BigInt::zero();
            let mut binom = BigInt::one(); // C(k, k)
            for j in k..=d {
                if j > k {
                    binom = binom * BigInt::from(j) / BigInt::from(j - k);
                }
                let bj = b.coefficient(j);
                if bj.is_zero() {
                    continue;
                }
                total += bj * &binom * &sn_p[j - k] * &sd_p[d - j + k] * &bd_p[j] * &bn_p[d - j];
            }
            let mut a = delta * Rational::from_integer(BigInt::one() << k) * Rational::from_integer(total) / &common;
            if k % 2 == 0 {
                a = -a;
            }
            a
        })
        .collect()
}

/// `f(0..=d)` from the direct formula
/// `f(k) = (-1)^{k+1} δ d m^{-k} Σ_{j>=k, j≡d (2)} (-1)^{(d-j)/2} 2^{k+j-1} ((d+j)/2-1)! / (((d-j)/2)! (j-k)!) (r+ℓ)^{j-k}/(r-ℓ)^j`.
pub fn f_values_direct(d: usize, interval: &SafeInterval, m: u64, delta: &Rational) -> Vec<Rational> {
    let sum = interval.r() + interval.ell();
    let diff = interval.r() - interval.ell();
    let mut out = vec![-Rational::one()];
    for k in 1..=d {
        let mut acc = Rational::zero();
        for j in (k..=d).filter(|j| (d - j).is_multiple_of(2)) {
            let half_diff = ((d - j) / 2) as u64;
            let half_sum = ((d + j) / 2) as u64;
            let mut term = Rational::new(
                rational::factorial(half_sum - 1) * (BigInt::one() << (k + j - 1)),
                rational::factorial(half_diff) * rational::factorial((j - k) as u64),
            );
            term = term * num_traits::pow(sum.clone(), j - k) / num_traits::pow(diff.clone(), j);
            if half_diff % 2 == 1 {
                term = -term;
            }
            acc += term;
        }
        let mut f = delta * rational::int(d as i64) * acc / Rational::from_integer(num_traits::pow(BigInt::from(m), k));
        if k % 2 == 0 {
            f = -f;
        }
        out.push(f);
    }
    out
}

fn neumaier_sum<S: Scalar>(terms: impl Iterator<Item = S>) -> S {
    let mut sum = S::zero();
    let mut comp = S::zero();
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            comp = comp + ((sum - next) + t);
        } else {
            comp = comp + ((t - next) + sum);
        }
        sum = next;
    }
    sum + comp
}

/// Per-element sample counts `N_i` (positive entries only).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleHistogram {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl SampleHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<I: IntoIterator<Item = u64>>(samples: I) -> Self {
        let mut h = Self::new();
        for id in samples {
            h.add(id, 1);
        }
        h
    }

    /// From explicit `(id, count)` pairs; zero counts are skipped, repeated ids accumulate.
    pub fn from_counts<I: IntoIterator<Item = (u64, u64)>>(counts: I) -> Self {
        let mut h = Self::new();
        for (id, c) in counts {
            h.add(id, c);
        }
        h
    }

    pub fn add(&mut self, id: u64, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(id).or_insert(0) += count;
        self.total += count;
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, id: u64) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `F_j = #{i : N_i = j}` for `j >= 1`.
    pub fn fingerprint(&self) -> BTreeMap<u64, u64> {
        let mut fp = BTreeMap::new();
        for &c in self.counts.values() {
            *fp.entry(c).or_insert(0) += 1;
        }
        fp
    }

    /// Union of two histograms (counts add on shared ids).
    pub fn merged(&self, other: &Self) -> Self {
        let mut h = self.clone();
        for (&id, &c) in &other.counts {
            h.add(id, c);
        }
        h
    }

    /// Applies an id relabeling; the fingerprint is unchanged when `map` is injective.
    pub fn relabeled(&self, map: impl Fn(u64) -> u64) -> Self {
        Self::from_counts(self.counts.iter().map(|(&id, &c)| (map(id), c)))
    }
}
