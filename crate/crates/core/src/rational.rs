//! Helpers for exact rational arithmetic and its interface with floating point.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::Rational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| invalid(format!("non-finite value {x}")))
}

/// The rational with the shortest decimal expansion that rounds to `x`, e.g. `0.3 -> 3/10`.
pub fn from_f64_decimal(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(invalid(format!("non-finite value {x}")));
    }
    parse(&x.to_string())
}

/// Nearest `f64`; infinite when the magnitude overflows.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let l = ln_abs(x);
        if x.is_negative() {
            -l.exp()
        } else {
            l.exp()
        }
    })
}

/// `ln |n|` for an arbitrarily large integer.
pub fn ln_bigint(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln |x|`; `-inf` at zero.
pub fn ln_abs(x: &Rational) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

pub fn ceil_to_biguint(x: &Rational) -> BigUint {
    let c = x.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
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

/// Parses `"3"`, `"-2/7"`, `"0.125"`, `"1e-3"` or `"2.5E+2"` into an exact rational.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(invalid("empty number"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| invalid(format!("bad numerator in {t:?}")))?;
        let d: BigInt = d.trim().parse().map_err(|_| invalid(format!("bad denominator in {t:?}")))?;
        if d.is_zero() {
            return Err(invalid(format!("zero denominator in {t:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| invalid(format!("bad exponent in {t:?}")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (Sign::Minus, rest),
        None => (Sign::Plus, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fracpart) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fracpart.is_empty() {
        return Err(invalid(format!("no digits in {t:?}")));
    }
    if !whole.chars().chain(fracpart.chars()).all(|c| c.is_ascii_digit()) {
        return Err(invalid(format!("not a number: {t:?}")));
    }
    let all = format!("{whole}{fracpart}");
    let mag: BigUint = if all.is_empty() { BigUint::zero() } else { all.parse().map_err(|_| invalid(t.to_string()))? };
    let scale = exponent - fracpart.len() as i64;
    let ten = BigInt::from(10u32);
    let value = BigInt::from_biguint(if mag.is_zero() { Sign::NoSign } else { sign }, mag);
    Ok(if scale >= 0 {
        Rational::from_integer(value * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(value, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Canonical text form: `"p/q"` in lowest terms, or `"p"` for integers. Round-trips through [`parse`].
pub fn format(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rational approximation with denominator `10^digits`, rounded to nearest.
pub fn round_decimal(x: f64, digits: u32) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite value {x}")));
    }
    let den = BigInt::from(10u64).pow(digits);
    let exact = from_f64(x)? * Rational::from_integer(den.clone());
    let rounded = exact.round().to_integer();
    Ok(Rational::new(rounded, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_decimal() {
        assert_eq!(from_f64_decimal(0.3).unwrap(), frac(3, 10));
        assert_eq!(from_f64_decimal(0.25).unwrap(), frac(1, 4));
        assert_eq!(from_f64_decimal(-1e-3).unwrap(), frac(-1, 1000));
        assert!(from_f64_decimal(f64::NAN).is_err());
    }

    #[test]
    fn parse_decimal_and_fraction() {
        assert_eq!(parse("0.07").unwrap(), frac(7, 100));
        assert_eq!(parse("-2/6").unwrap(), frac(-1, 3));
        assert_eq!(parse("1e-3").unwrap(), frac(1, 1000));
        assert_eq!(parse("2.5E+2").unwrap(), int(250));
        assert_eq!(parse(".5").unwrap(), frac(1, 2));
        assert!(parse("abc").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn format_round_trips() {
        for x in [frac(7, 100), int(-3), frac(1, 3)] {
            assert_eq!(parse(&format(&x)).unwrap(), x);
        }
    }

    #[test]
    fn huge_logs() {
        let big = num_traits::pow(BigInt::from(10), 400);
        assert!((ln_bigint(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
        let x = Rational::new(BigInt::one(), big);
        assert!((ln_abs(&x) + 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(60, 30), "118264581564861424".parse::<BigInt>().unwrap());
        assert_eq!(binomial(3, 5), BigInt::zero());
    }
}
