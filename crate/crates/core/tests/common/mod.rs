//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the library's own constructions: Chebyshev coefficients come from the
//! explicit binomial sum `T_d(x) = Σ_k C(d,2k) (x²-1)^k x^(d-2k)`, the polynomial `P_d` is
//! expanded symbolically, and Poisson probabilities are computed from scratch.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use support_size::Rational;

pub fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Monomial coefficients of `T_d` from the explicit binomial sum.
pub fn cheb_coeffs(d: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); d + 1];
    for k in 0..=d / 2 {
        let outer = binom(d as u64, 2 * k as u64);
        for i in 0..=k {
            let sign = if (k - i) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            out[d - 2 * k + 2 * i] += &outer * binom(k as u64, i as u64) * sign;
        }
    }
    out
}

pub fn horner(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

pub fn cheb_exact(d: usize, x: &Rational) -> Rational {
    let c: Vec<Rational> = cheb_coeffs(d).into_iter().map(Rational::from_integer).collect();
    horner(&c, x)
}

/// Floating `T_d` and `T_d' = d U_{d-1}` by the first- and second-kind recurrences.
pub fn cheb_and_derivative(d: usize, x: f64) -> (f64, f64) {
    let (mut t0, mut t1) = (1.0, x);
    for _ in 1..d {
        (t0, t1) = (t1, 2.0 * x * t1 - t0);
    }
    let t = if d == 0 { 1.0 } else { t1 };
    if d == 0 {
        return (t, 0.0);
    }
    let (mut u0, mut u1) = (1.0, 2.0 * x);
    for _ in 1..d - 1 {
        (u0, u1) = (u1, 2.0 * x * u1 - u0);
    }
    let u = if d == 1 { 1.0 } else { u1 };
    (t, d as f64 * u)
}

/// `(δ, [c_0, ..., c_d])` with `P_d(x) = -δ T_d(ψ(x)) = Σ c_k x^k`, by expanding
/// `(c + s x)^j` for `ψ(x) = c + s x`.
pub fn p_monomial(d: usize, ell: &Rational, r: &Rational) -> (Rational, Vec<Rational>) {
    let c = (r + ell) / (r - ell);
    let s = -Rational::from_integer(BigInt::from(2)) / (r - ell);
    let b = cheb_coeffs(d);
    let mut t = vec![Rational::zero(); d + 1];
    for (j, bj) in b.iter().enumerate() {
        if bj.is_zero() {
            continue;
        }
        for (k, tk) in t.iter_mut().enumerate().take(j + 1) {
            *tk += Rational::from_integer(bj * binom(j as u64, k as u64)) * pow(&c, j - k) * pow(&s, k);
        }
    }
    let delta = cheb_exact(d, &c).recip();
    let p = t.into_iter().map(|tk| -(&delta * tk)).collect();
    (delta, p)
}

pub fn pow(x: &Rational, k: usize) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * x)
}

pub fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `f(k) = c_k k! / m^k` from the symbolic expansion of `P_d`.
pub fn f_oracle(d: usize, ell: &Rational, r: &Rational, m: u64) -> Vec<Rational> {
    let (_, p) = p_monomial(d, ell, r);
    p.into_iter()
        .enumerate()
        .map(|(k, ck)| ck * Rational::new(factorial(k), BigInt::from(m).pow(k as u32)))
        .collect()
}

pub fn poisson_pmf(j: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=j).map(|i| (i as f64).ln()).sum();
    (-lambda + j as f64 * lambda.ln() - ln_fact).exp()
}

/// Smallest `K` with `P(Poisson(λ) > K) <= tail`.
pub fn poisson_cutoff(lambda: f64, tail: f64) -> u64 {
    let mut cdf = 0.0;
    let mut j = 0;
    loop {
        cdf += poisson_pmf(j, lambda);
        if 1.0 - cdf <= tail || j > 10_000 {
            return j;
        }
        j += 1;
    }
}

/// Three binomial standard deviations for a rate estimated from `trials` draws.
pub fn three_sigma(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(x: &Rational) -> Rational {
    x.abs()
}

/// Prints one acceptance line and returns the flag, so the caller can assert on it.
pub fn report(criterion: u32, passed: bool, detail: &str) -> bool {
    println!("criterion {criterion:>2}: {} | {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}
