//! Chebyshev polynomials of the first kind.
//!
//! Two floating evaluation paths are provided: the three-term recurrence (stable for `|x| <= 1`
//! and moderate growth) and a log-space closed form for `y >= 1` that never overflows. The monomial
//! coefficients grow like `9^d` and are therefore only ever evaluated in exact arithmetic.

use num_bigint::BigInt;
use num_traits::{Num, One, Signed, Zero};

use crate::error::{domain, Result};
use crate::rational;
use crate::{Rational, Scalar};

/// `c = 1 / (2 ln 2)` in `T_d(1 + γ) >= 2^(c d √γ - 1)`.
pub const GROWTH_CONSTANT: f64 = 1.0 / (2.0 * std::f64::consts::LN_2);

/// Degrees up to this bound evaluate `T_d'` exactly from the coefficient form.
pub const EXACT_DERIVATIVE_MAX_DEGREE: usize = 64;

/// `T_d` in the monomial basis with exact integer coefficients, `b_j` multiplying `x^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChebyshevPolynomial {
    coefficients: Vec<BigInt>,
}

impl ChebyshevPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn coefficient(&self, j: usize) -> &BigInt {
        &self.coefficients[j]
    }

    /// Largest `|b_j|`.
    pub fn max_abs_coefficient(&self) -> BigInt {
        self.coefficients.iter().map(|b| b.abs()).max().unwrap_or_default()
    }

    /// Horner evaluation over the rationals.
    pub fn eval_exact(&self, x: &Rational) -> Rational {
        self.coefficients
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, b| acc * x + Rational::from_integer(b.clone()))
    }

    /// Coefficients of `T_d'`.
    pub fn derivative(&self) -> Vec<BigInt> {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, b)| b * BigInt::from(j))
            .collect()
    }

    /// Exact value of `T_d'(y)` at a finite `f64`, rounded once to the nearest `f64`.
    pub fn derivative_at_exact(&self, y: f64) -> f64 {
        let deriv = self.derivative();
        if deriv.is_empty() {
            return 0.0;
        }
        eval_dyadic(&deriv, y)
    }
}

/// Evaluates an integer polynomial exactly at a dyadic `y = mantissa * 2^exp` and rounds once.
fn eval_dyadic(coeffs: &[BigInt], y: f64) -> f64 {
    let (mantissa, exp, sign) = num_traits::Float::integer_decode(y);
    let mant = BigInt::from(mantissa) * BigInt::from(sign);
    let top = coeffs.len() - 1;
    if exp >= 0 {
        let yy = mant << (exp as usize);
        let v = coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * &yy + c);
        return rational::to_f64(&Rational::from_integer(v));
    }
    let s = (-exp) as usize;
    // acc = sum_j c_j mant^j 2^{s(top - j)}, value = acc / 2^{s top}
    let mut acc = coeffs[top].clone();
    for (j, c) in coeffs.iter().enumerate().rev().skip(1) {
        acc = acc * &mant + (c << (s * (top - j)));
    }
    rational::to_f64(&Rational::new(acc, BigInt::one() << (s * top)))
}

/// `T_d(x)` by the three-term recurrence over any ring: floats, `Rational`, `BigInt`.
pub fn eval_recurrence<T: Clone + Num>(d: usize, x: T) -> T {
    if d == 0 {
        return T::one();
    }
    let two_x = x.clone() + x.clone();
    let mut prev = T::one();
    let mut cur = x;
    for _ in 1..d {
        let next = two_x.clone() * cur.clone() - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_d(p/q)` exactly, carried as integers `q^k T_k(p/q)` to avoid per-step gcds.
pub fn eval_rational(d: usize, x: &Rational) -> Rational {
    if d == 0 {
        return Rational::one();
    }
    let p = x.numer();
    let q = x.denom();
    let q2 = q * q;
    let two_p = p * 2;
    let mut prev = BigInt::one();
    let mut cur = p.clone();
    for _ in 1..d {
        let next = &two_p * &cur - &q2 * &prev;
        prev = cur;
        cur = next;
    }
    Rational::new(cur, num_traits::pow(q.clone(), d))
}

/// `ln T_d(y)` for `y >= 1` via the closed form, finite for any `d`.
pub fn eval_closed_form_log<S: Scalar>(d: usize, y: S) -> Result<S> {
    if y.is_nan() || y < S::one() {
        return Err(domain(format!("closed form needs y >= 1, got {y}")));
    }
    if d == 0 || y == S::one() {
        return Ok(S::zero());
    }
    let big_l = log_root(y);
    let dd = S::of(d as f64);
    let two = S::of(2.0);
    Ok(dd * big_l + (-(two * dd * big_l)).exp().ln_1p() - S::LN_2())
}

/// `ln(y + sqrt(y^2 - 1))` with the cancellation near `y = 1` removed.
fn log_root<S: Scalar>(y: S) -> S {
    let one = S::one();
    let s = ((y - one) * (y + one)).sqrt();
    ((y - one) + s).ln_1p()
}

/// Coefficients by running the recurrence on coefficient vectors.
pub fn coefficients_recurrence(d: usize) -> ChebyshevPolynomial {
    let mut prev: Vec<BigInt> = vec![BigInt::one()];
    if d == 0 {
        return ChebyshevPolynomial { coefficients: prev };
    }
    let mut cur: Vec<BigInt> = vec![BigInt::zero(), BigInt::one()];
    for k in 1..d {
        let mut next = vec![BigInt::zero(); k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c * 2;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    ChebyshevPolynomial { coefficients: cur }
}

/// Coefficients from the closed factorial formula
/// `b_j = 2^(j-1) d (-1)^((d-j)/2) ((d+j)/2 - 1)! / (((d-j)/2)! j!)`.
pub fn coefficients_formula(d: usize) -> ChebyshevPolynomial {
    if d == 0 {
        return ChebyshevPolynomial { coefficients: vec![BigInt::one()] };
    }
    let coefficients = (0..=d)
        .map(|j| {
            if (d - j) % 2 == 1 {
                return BigInt::zero();
            }
            let half_diff = ((d - j) / 2) as u64;
            let half_sum = ((d + j) / 2) as u64;
            let numer = rational::factorial(half_sum - 1) * BigInt::from(d);
            let denom = rational::factorial(half_diff) * rational::factorial(j as u64);
            // 2^(j-1) is 1/2 at j = 0; only reachable for even d
            let mut value = Rational::new(numer, denom);
            value = if j == 0 { value / rational::int(2) } else { value * Rational::from_integer(BigInt::one() << (j - 1)) };
            if half_diff % 2 == 1 {
                value = -value;
            }
            debug_assert!(value.is_integer());
            value.to_integer()
        })
        .collect();
    ChebyshevPolynomial { coefficients }
}

/// `2^(c d √γ - 1)` for `γ ∈ [0, 1]`.
pub fn growth_lower_bound(d: usize, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(domain(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok((GROWTH_CONSTANT * d as f64 * gamma.sqrt() - 1.0).exp2())
}

/// `T_d'(y)` for `y >= 1`; exact for moderate `d`, log-space closed form beyond.
pub fn derivative_at(d: usize, y: f64) -> Result<f64> {
    if y.is_nan() || y < 1.0 {
        return Err(domain(format!("derivative needs y >= 1, got {y}")));
    }
    if y == 1.0 {
        return Ok((d * d) as f64);
    }
    if d <= EXACT_DERIVATIVE_MAX_DEGREE {
        return Ok(coefficients_recurrence(d).derivative_at_exact(y));
    }
    Ok(log_derivative_at(d, y)?.exp())
}

/// `ln T_d'(y)` for `y > 1` from `T_d'(y) = d ((y+s)^d - (y-s)^d) / (2s)`, `s = sqrt(y^2-1)`.
pub fn log_derivative_at<S: Scalar>(d: usize, y: S) -> Result<S> {
    if y.is_nan() || y < S::one() {
        return Err(domain(format!("derivative needs y >= 1, got {y}")));
    }
    if d == 0 {
        return Ok(S::neg_infinity());
    }
    let dd = S::of(d as f64);
    if y == S::one() {
        return Ok(S::of(2.0) * dd.ln());
    }
    let one = S::one();
    let s = ((y - one) * (y + one)).sqrt();
    let big_l = log_root(y);
    let two = S::of(2.0);
    // 1 - (y-s)^d/(y+s)^d = -expm1(-2 d L)
    let tail = -(-(two * dd * big_l)).exp_m1();
    Ok(dd.ln() - two.ln() - s.ln() + dd * big_l + tail.ln())
}

/// Number of sign changes of `T_d` on `points` cell-centred grid nodes over `[-1, 1]`.
pub fn sign_changes_on_unit_interval(d: usize, points: usize) -> usize {
    let h = 2.0 / points as f64;
    let mut last: Option<bool> = None;
    let mut changes = 0;
    for k in 0..points {
        let x = -1.0 + (k as f64 + 0.5) * h;
        let v: f64 = eval_recurrence(d, x);
        if v == 0.0 {
            continue;
        }
        let positive = v > 0.0;
        if let Some(prev) = last {
            if prev != positive {
                changes += 1;
            }
        }
        last = Some(positive);
    }
    changes
}

/// `d · 3^d`, the bound on `|b_j|`.
pub fn coefficient_bound(d: usize) -> BigInt {
    BigInt::from(d) * num_traits::pow(BigInt::from(3), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(eval_recurrence(0, 7.3), 1.0);
        assert_eq!(eval_recurrence(1, 0.25), 0.25);
        assert_eq!(eval_recurrence(3, 2.0), 26.0);
        assert_eq!(eval_recurrence(3, BigInt::from(2)), BigInt::from(26));
        assert_eq!(eval_rational(3, &rational::int(2)), rational::int(26));
        assert_eq!(eval_rational(2, &rational::frac(1, 2)), rational::frac(-1, 2));
    }

    #[test]
    fn closed_form_examples() {
        let v: f64 = eval_closed_form_log(3, 2.0).unwrap();
        assert!((v - 26f64.ln()).abs() < 1e-12);
        assert_eq!(eval_closed_form_log(5, 1.0f64).unwrap(), 0.0);
        assert!(eval_closed_form_log(5, 0.5f64).is_err());
        let v32: f32 = eval_closed_form_log(3, 2.0f32).unwrap();
        assert!((v32 - 26f32.ln()).abs() < 1e-5);
    }

    #[test]
    fn closed_form_large_degree_matches_exact() {
        let y = rational::frac(3, 2);
        let exact = eval_rational(200, &y);
        let want = rational::ln_abs(&exact);
        let got: f64 = eval_closed_form_log(200, 1.5).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(coefficients_recurrence(0).coefficients(), &ints(&[1])[..]);
        assert_eq!(coefficients_recurrence(2).coefficients(), &ints(&[-1, 0, 2])[..]);
        assert_eq!(coefficients_recurrence(5).coefficients(), &ints(&[0, 5, 0, -20, 0, 16])[..]);
        assert_eq!(coefficients_formula(1).coefficients(), &ints(&[0, 1])[..]);
        assert_eq!(coefficients_formula(4).coefficient(2), &BigInt::from(-8));
        assert_eq!(coefficients_formula(5), coefficients_recurrence(5));
    }

    #[test]
    fn growth_examples() {
        assert_eq!(growth_lower_bound(17, 0.0).unwrap(), 0.5);
        let b = growth_lower_bound(10, 1.0).unwrap();
        assert!(eval_recurrence(10, 2.0) >= b);
        let b = growth_lower_bound(25, 0.04).unwrap();
        assert!(eval_recurrence(25, 1.04) >= b);
        assert!(growth_lower_bound(3, 1.5).is_err());
        assert!(growth_lower_bound(3, -0.1).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(derivative_at(1, 5.0).unwrap(), 1.0);
        assert_eq!(derivative_at(2, 1.5).unwrap(), 6.0);
        assert_eq!(derivative_at(3, 1.0).unwrap(), 9.0);
        assert!(derivative_at(3, 0.9).is_err());
    }

    #[test]
    fn derivative_paths_agree() {
        for d in [5usize, 20, 64] {
            for y in [1.0001, 1.3, 2.0, 5.0] {
                let exact = coefficients_recurrence(d).derivative_at_exact(y);
                let logv: f64 = log_derivative_at(d, y).unwrap();
                assert!(((logv.exp() - exact) / exact).abs() < 1e-10, "d={d} y={y}");
            }
        }
    }

    #[test]
    fn roots_count() {
        for d in 1..=30 {
            assert_eq!(sign_changes_on_unit_interval(d, 100_000), d, "d={d}");
        }
    }
}
