//! Sublinear support-size testing with shifted and scaled Chebyshev polynomials.
//!
//! The crate is organised bottom-up:
//!
//! - [`chebyshev`]: exact and floating evaluation of `T_d`, its coefficients and growth bounds.
//! - [`estimator`]: the instantiated linear test statistic (the f-table, `P_d`, `Q`, `Q*`).
//! - [`params`]: constraint audits, paper-mode parameters and the desk-scale parameter search.
//! - [`tester`]: naive and Chebyshev testers, the dispatcher and the effective-support lower bound.
//! - [`functions`]: the reductions between testing functions in `H_n` and testing distributions.
//! - [`simulate`]: the distribution zoo, exact oracles, seeded samplers and the Monte Carlo harness.
//! - [`io`]: distribution and sample file formats.
//! - [`verify`]: grid invariant suites with failure witnesses.
//!
//! Floating-point evaluation is generic over [`Scalar`] (`f32` or `f64`); everything that must be
//! exact (Chebyshev coefficients, `δ`, the f-table, distribution masses) uses [`Rational`].

#![forbid(unsafe_code)]

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub mod chebyshev;
pub mod estimator;
pub mod functions;
pub mod io;
pub mod params;
pub mod rational;
pub mod simulate;
pub mod tester;
pub mod verify;

mod error;

pub use error::{Error, Result};

/// Exact rational used for every quantity that must not be rounded.
pub type Rational = num_rational::BigRational;

/// Floating-point scalar used by the streaming side of the estimator.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Lossy conversion from `f64`; used for constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Estimator kernel evaluated in double precision.
pub type Kernel = estimator::EstimatorKernel<f64>;
/// Estimator kernel evaluated in single precision.
pub type Kernel32 = estimator::EstimatorKernel<f32>;

pub use chebyshev::ChebyshevPolynomial;
pub use estimator::{EstimatorKernel, SafeInterval, SampleHistogram};
pub use params::{ConstraintReport, ParamMode, ParamSet, PhiEvaluator};
pub use simulate::{SparseDistribution, TrialReport};
pub use tester::{Decision, LowerBoundResult, TestVerdict};
