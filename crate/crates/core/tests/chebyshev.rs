mod common;

use common::{cheb_and_derivative, cheb_coeffs, cheb_exact};
use num_bigint::BigInt;
use support_size::chebyshev::{self, coefficient_bound};
use support_size::rational::{self, frac};
use support_size::Rational;

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[test]
fn recurrence_examples() {
    assert_eq!(chebyshev::eval_recurrence(0, 7.3), 1.0);
    assert_eq!(chebyshev::eval_recurrence(1, 0.25), 0.25);
    assert_eq!(chebyshev::eval_recurrence(3, 2.0), 26.0);
    assert_eq!(chebyshev::eval_rational(3, &rational::int(2)), rational::int(26));
}

#[test]
fn closed_form_log_examples() {
    let l3 = chebyshev::eval_closed_form_log(3, 2.0f64).unwrap();
    assert!((l3 - 26f64.ln()).abs() < 1e-12);
    assert_eq!(chebyshev::eval_closed_form_log(5, 1.0f64).unwrap(), 0.0);
    assert!(chebyshev::eval_closed_form_log(4, 0.5f64).is_err());

    let y = 1.5f64;
    let exact = rational::ln_abs(&cheb_exact(200, &frac(3, 2)));
    let closed = chebyshev::eval_closed_form_log(200, y).unwrap();
    let naive = 200.0 * (y + (y * y - 1.0).sqrt()).ln() + 0.5f64.ln();
    assert!((closed - exact).abs() <= 1e-10 * exact.abs());
    assert!((closed - naive).abs() < 1e-9);
}

#[test]
fn closed_form_log_matches_exact_recurrence() {
    let ys = [(1.0, rational::int(1)), (1.001, frac(1001, 1000)), (1.5, frac(3, 2)), (3.0, rational::int(3))];
    for d in [1usize, 2, 7, 30, 64, 128, 200] {
        for (y, yr) in &ys {
            let exact = rational::ln_abs(&cheb_exact(d, yr));
            let got = chebyshev::eval_closed_form_log(d, *y).unwrap();
            assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1e-300), "d={d} y={y}: {got} vs {exact}");
        }
    }
}

#[test]
fn f32_closed_form() {
    let l = chebyshev::eval_closed_form_log(3, 2.0f32).unwrap();
    assert!((l - 26f32.ln()).abs() < 1e-5);
}

#[test]
fn coefficient_examples() {
    assert_eq!(chebyshev::coefficients_recurrence(0).coefficients(), ints(&[1]).as_slice());
    assert_eq!(chebyshev::coefficients_recurrence(2).coefficients(), ints(&[-1, 0, 2]).as_slice());
    assert_eq!(chebyshev::coefficients_recurrence(5).coefficients(), ints(&[0, 5, 0, -20, 0, 16]).as_slice());
    assert_eq!(chebyshev::coefficients_formula(1).coefficients(), ints(&[0, 1]).as_slice());
    assert_eq!(chebyshev::coefficients_formula(4).coefficient(2), &BigInt::from(-8));
    assert_eq!(chebyshev::coefficients_formula(5).coefficients(), ints(&[0, 5, 0, -20, 0, 16]).as_slice());
}

#[test]
fn coefficient_structure() {
    for d in 1..=60usize {
        let t = chebyshev::coefficients_formula(d);
        assert_eq!(t.coefficients(), cheb_coeffs(d).as_slice());
        assert_eq!(t.coefficient(d), &(BigInt::from(1) << (d - 1)));
        let b0 = t.coefficient(0);
        assert!(*b0 == BigInt::from(0) || *b0 == BigInt::from(1) || *b0 == BigInt::from(-1));
        for j in (0..=d).filter(|j| (d - j) % 2 == 1) {
            assert_eq!(t.coefficient(j), &BigInt::from(0));
        }
        assert!(t.max_abs_coefficient() <= coefficient_bound(d));
        assert!(coefficient_bound(d) <= BigInt::from(9).pow(d as u32));
    }
}

#[test]
fn exact_evaluation_agrees_with_recurrence() {
    let x = frac(-7, 9);
    for d in 0..=30 {
        assert_eq!(chebyshev::coefficients_recurrence(d).eval_exact(&x), cheb_exact(d, &x));
    }
}

#[test]
fn bounded_on_unit_interval() {
    for d in 0..=60 {
        for i in 0..1000 {
            let x = -1.0 + 2.0 * i as f64 / 999.0;
            assert!(chebyshev::eval_recurrence(d, x).abs() <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn growth_examples() {
    assert_eq!(chebyshev::growth_lower_bound(17, 0.0).unwrap(), 0.5);
    let c = chebyshev::GROWTH_CONSTANT;
    let b10 = chebyshev::growth_lower_bound(10, 1.0).unwrap();
    assert!((b10 - 2f64.powf(10.0 * c - 1.0)).abs() < 1e-12);
    assert!(chebyshev::eval_recurrence(10, 2.0) > b10);
    let b25 = chebyshev::growth_lower_bound(25, 0.04).unwrap();
    assert!((b25 - 2f64.powf(25.0 * 0.2 * c - 1.0)).abs() < 1e-12);
    assert!(chebyshev::eval_recurrence(25, 1.04) >= b25);
    assert!(chebyshev::growth_lower_bound(3, 1.5).is_err());
    assert!(chebyshev::growth_lower_bound(3, -0.1).is_err());
}

#[test]
fn derivative_examples() {
    assert_eq!(chebyshev::derivative_at(1, 5.0).unwrap(), 1.0);
    assert!((chebyshev::derivative_at(2, 1.5).unwrap() - 6.0).abs() < 1e-12);
    assert_eq!(chebyshev::derivative_at(3, 1.0).unwrap(), 9.0);
    assert!(chebyshev::derivative_at(3, 0.9).is_err());
    assert_eq!(chebyshev::coefficients_recurrence(3).derivative(), ints(&[-3, 0, 12]));
}

#[test]
fn derivative_paths_agree_with_oracle() {
    for d in [1usize, 5, 20, 64, 65, 100, 300] {
        for y in [1.0 + 1e-6, 1.01, 1.3, 2.0] {
            let got = chebyshev::derivative_at(d, y).unwrap();
            let ln_got = chebyshev::log_derivative_at(d, y).unwrap();
            let (_, oracle) = cheb_and_derivative(d, y);
            if oracle.is_finite() {
                assert!((got - oracle).abs() <= 1e-9 * oracle.abs(), "d={d} y={y}: {got} vs {oracle}");
            }
            assert!((ln_got - got.ln()).abs() <= 1e-9 * got.ln().abs().max(1.0) || !got.is_finite());
        }
    }
}

#[test]
fn root_count() {
    for d in 0..=30 {
        assert_eq!(chebyshev::sign_changes_on_unit_interval(d, 20_000), d, "d={d}");
    }
}

#[test]
fn exact_rational_degree_one() {
    let x: Rational = frac(5, 3);
    assert_eq!(chebyshev::eval_recurrence(1, x.clone()), x);
}
