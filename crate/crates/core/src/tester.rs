//! Naive and Chebyshev support-size testers, the dispatcher, and the effective-support lower bound.

use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimator::{build_kernel, SampleHistogram};
use crate::params::{self, ParamMode};
use crate::Kernel;

/// The success probability the core tester is analysed for.
pub const CORE_SIGMA: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

/// Which decider produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterPath {
    Naive,
    Chebyshev,
    /// The function tester saw no 1-labelled sample and accepted without testing.
    NoOnes,
}

/// Outcome of one tester run.
///
/// For the Chebyshev tester `decision` is `Accept` iff `statistic_value < threshold`. The naive
/// tester reports the distinct count against `threshold = n` and accepts iff it is at most `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub decision: Decision,
    pub statistic_value: f64,
    pub threshold: f64,
    pub samples_drawn: u64,
    pub path: TesterPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Exactly `⌈1.1 m⌉` draws.
    Fixed,
    /// Independent per-element `Poisson(m p_i)` counts.
    Poissonized,
}

/// Source of i.i.d. samples from the unknown distribution.
pub trait Sampler {
    /// `count` i.i.d. draws.
    fn draw(&mut self, count: u64) -> SampleHistogram;

    /// One `Poisson(m)` variate from the sampler's own stream.
    fn poisson_count(&mut self, m: f64) -> u64;

    /// Draws `m' ~ Poisson(m)` and then `m'` i.i.d. samples.
    fn draw_poissonized(&mut self, m: f64) -> SampleHistogram {
        let count = self.poisson_count(m);
        self.draw(count)
    }
}

fn check_inputs(n: u64, eps: f64) -> Result<()> {
    if n == 0 || !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("need n >= 1 and eps in (0,1), got n={n} eps={eps}")));
    }
    Ok(())
}

/// `⌈10(n+1)/ε⌉`, the naive tester's budget.
pub fn naive_sample_size(n: u64, eps: f64) -> u64 {
    (10.0 * (n as f64 + 1.0) / eps).ceil() as u64
}

/// `⌈1.1 m⌉`, the fixed-mode draw count.
pub fn fixed_sample_count(m: u64) -> u64 {
    (m * 11).div_ceil(10)
}

/// Accepts iff at most `n` distinct elements were observed.
pub fn naive_decide(n: u64, hist: &SampleHistogram) -> TestVerdict {
    let distinct = hist.distinct() as u64;
    TestVerdict {
        decision: if distinct <= n { Decision::Accept } else { Decision::Reject },
        statistic_value: distinct as f64,
        threshold: n as f64,
        samples_drawn: hist.total(),
        path: TesterPath::Naive,
    }
}

pub fn naive_tester(n: u64, eps: f64, sampler: &mut dyn Sampler) -> Result<TestVerdict> {
    check_inputs(n, eps)?;
    Ok(naive_decide(n, &sampler.draw(naive_sample_size(n, eps))))
}

/// Distinct count over `⌈10n/ε⌉` draws; at least `min{eff_ε(p), n}` with probability `>= 9/10`.
pub fn naive_lower_bound(n: u64, eps: f64, sampler: &mut dyn Sampler) -> Result<f64> {
    check_inputs(n, eps)?;
    let m = (10.0 * n as f64 / eps).ceil() as u64;
    Ok(sampler.draw(m).distinct() as f64)
}

/// `(1 + ε/2) n`.
pub fn acceptance_threshold(n: u64, eps: f64) -> f64 {
    (1.0 + eps / 2.0) * n as f64
}

/// Evaluates the Chebyshev statistic on a recorded histogram; ties reject.
pub fn chebyshev_decide(kernel: &Kernel, hist: &SampleHistogram) -> TestVerdict {
    let statistic_value = kernel.statistic(hist);
    let threshold = acceptance_threshold(kernel.n(), kernel.eps());
    TestVerdict {
        decision: if statistic_value < threshold { Decision::Accept } else { Decision::Reject },
        statistic_value,
        threshold,
        samples_drawn: hist.total(),
        path: TesterPath::Chebyshev,
    }
}

fn chebyshev_sample(kernel: &Kernel, sampler: &mut dyn Sampler, mode: SamplingMode) -> SampleHistogram {
    match mode {
        SamplingMode::Fixed => sampler.draw(fixed_sample_count(kernel.m())),
        SamplingMode::Poissonized => sampler.draw_poissonized(kernel.m() as f64),
    }
}

pub fn chebyshev_tester(kernel: &Kernel, sampler: &mut dyn Sampler, mode: SamplingMode) -> TestVerdict {
    chebyshev_decide(kernel, &chebyshev_sample(kernel, sampler, mode))
}

/// The mode used to pick tester parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterMode {
    PaperIV,
    PaperIVb,
    Empirical,
    Naive,
}

impl TesterMode {
    pub fn param_mode(self) -> Option<ParamMode> {
        match self {
            TesterMode::PaperIV => Some(ParamMode::PaperIV),
            TesterMode::PaperIVb => Some(ParamMode::PaperIVb),
            TesterMode::Empirical => Some(ParamMode::Empirical),
            TesterMode::Naive => None,
        }
    }
}

/// Whether `(n, ε)` lies where `mode` runs the Chebyshev tester at all.
///
/// Paper modes use `n^{-a} < ε < 1/3`; empirical mode uses `n >= 10` and `ε ∈ (0.05, 1/3)`.
pub fn chebyshev_regime(n: u64, eps: f64, mode: TesterMode) -> bool {
    match mode {
        TesterMode::PaperIV | TesterMode::PaperIVb => params::assumption_holds(&BigUint::from(n), eps),
        TesterMode::Empirical => params::empirical_regime(n, eps),
        TesterMode::Naive => false,
    }
}

/// A fully resolved tester: either naive, or Chebyshev with a prebuilt kernel.
#[derive(Debug, Clone)]
pub struct TesterConfig {
    n: u64,
    eps: f64,
    kind: TesterKind,
}

#[derive(Debug, Clone)]
enum TesterKind {
    Naive,
    Chebyshev { kernel: Arc<Kernel>, sampling: SamplingMode },
}

impl TesterConfig {
    pub fn naive(n: u64, eps: f64) -> Result<Self> {
        check_inputs(n, eps)?;
        Ok(Self { n, eps, kind: TesterKind::Naive })
    }

    pub fn chebyshev(kernel: Arc<Kernel>, sampling: SamplingMode) -> Self {
        Self { n: kernel.n(), eps: kernel.eps(), kind: TesterKind::Chebyshev { kernel, sampling } }
    }

    /// Resolves the dispatcher's choice. Outside the Chebyshev regime this is the naive tester;
    /// inside it, a failed parameter search or kernel build is an error.
    pub fn plan(n: u64, eps: f64, mode: TesterMode, sampling: SamplingMode) -> Result<Self> {
        check_inputs(n, eps)?;
        if !chebyshev_regime(n, eps, mode) {
            return Self::naive(n, eps);
        }
        let ps = match mode {
            TesterMode::PaperIV => params::paper_params(&BigUint::from(n), eps, params::Variant::IV)?,
            TesterMode::PaperIVb => params::paper_params(&BigUint::from(n), eps, params::Variant::IVb)?,
            TesterMode::Empirical => params::empirical_params(n, eps)?,
            TesterMode::Naive => unreachable!("naive handled above"),
        };
        Ok(Self::chebyshev(Arc::new(build_kernel(n, eps, &ps)?), sampling))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.kind {
            TesterKind::Chebyshev { kernel, .. } => Some(kernel),
            TesterKind::Naive => None,
        }
    }

    pub fn path(&self) -> TesterPath {
        match self.kind {
            TesterKind::Naive => TesterPath::Naive,
            TesterKind::Chebyshev { .. } => TesterPath::Chebyshev,
        }
    }

    pub fn run(&self, sampler: &mut dyn Sampler) -> TestVerdict {
        match &self.kind {
            TesterKind::Naive => naive_decide(self.n, &sampler.draw(naive_sample_size(self.n, self.eps))),
            TesterKind::Chebyshev { kernel, sampling } => chebyshev_tester(kernel, sampler, *sampling),
        }
    }

    /// Decides from an already recorded histogram.
    pub fn decide(&self, hist: &SampleHistogram) -> TestVerdict {
        match &self.kind {
            TesterKind::Naive => naive_decide(self.n, hist),
            TesterKind::Chebyshev { kernel, .. } => chebyshev_decide(kernel, hist),
        }
    }

    /// Runs the statistic that [`LowerBoundPlan`] medians: Ŝ for Chebyshev, the distinct count for naive.
    fn estimate(&self, sampler: &mut dyn Sampler) -> (f64, u64) {
        let v = self.run(sampler);
        (v.statistic_value, v.samples_drawn)
    }
}

/// Total front door: any failure to set up the Chebyshev tester falls back to the naive tester.
pub fn support_size_tester(
    n: u64,
    eps: f64,
    sampler: &mut dyn Sampler,
    mode: TesterMode,
    sampling: SamplingMode,
) -> Result<TestVerdict> {
    let config = TesterConfig::plan(n, eps, mode, sampling).or_else(|_| TesterConfig::naive(n, eps))?;
    Ok(config.run(sampler))
}

/// Smallest odd integer `>= 24 ln(1/δ)`, and at least 1.
pub fn repetitions_for(delta: f64) -> u64 {
    let r = (24.0 * (1.0 / delta).ln()).ceil().max(1.0) as u64;
    if r.is_multiple_of(2) {
        r + 1
    } else {
        r
    }
}

/// Median of `repetitions` calls (`repetitions` must be odd).
pub fn median_boost(mut estimate: impl FnMut(u64) -> f64, repetitions: u64) -> Result<f64> {
    if repetitions.is_multiple_of(2) {
        return Err(invalid(format!("repetitions must be odd, got {repetitions}")));
    }
    let mut values: Vec<f64> = (0..repetitions).map(&mut estimate).collect();
    values.sort_by(f64::total_cmp);
    Ok(values[values.len() / 2])
}

/// Runs the core tester `repetitions_for(1 - σ)` times and takes the majority verdict when
/// `σ > 3/4`; otherwise a single run.
pub fn boosted_tester(config: &TesterConfig, sigma: f64, sampler: &mut dyn Sampler) -> Result<TestVerdict> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma must lie in (0,1), got {sigma}")));
    }
    if sigma <= CORE_SIGMA {
        return Ok(config.run(sampler));
    }
    let reps = repetitions_for(1.0 - sigma);
    let runs: Vec<TestVerdict> = (0..reps).map(|_| config.run(sampler)).collect();
    let accepts = runs.iter().filter(|v| v.decision == Decision::Accept).count() as u64;
    let decision = if 2 * accepts > reps { Decision::Accept } else { Decision::Reject };
    let mut stats: Vec<f64> = runs.iter().map(|v| v.statistic_value).collect();
    stats.sort_by(f64::total_cmp);
    Ok(TestVerdict {
        decision,
        statistic_value: stats[stats.len() / 2],
        threshold: runs[0].threshold,
        samples_drawn: runs.iter().map(|v| v.samples_drawn).sum(),
        path: runs[0].path,
    })
}

/// One round of [`good_lower_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub n_i: f64,
    pub delta_i: f64,
    pub estimate_i: f64,
    pub terminated: bool,
    pub path: TesterPath,
    pub repetitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundResult {
    pub estimate: f64,
    pub rounds_used: u64,
    pub samples_drawn: u64,
    pub per_round: Vec<RoundLog>,
}

/// Per-round testers for [`good_lower_bound`], resolved once and reusable across runs.
#[derive(Debug, Clone)]
pub struct LowerBoundPlan {
    n: u64,
    eps: f64,
    rounds: Vec<(f64, f64, TesterConfig)>,
}

impl LowerBoundPlan {
    /// Rounds `i = 0..=⌊log₂ n⌋` with `n_i = n / 2^i` and `δ_i = 1 / (4 · 2^{i+1})`. A round whose
    /// `(⌈n_i⌉, ε)` falls outside the Chebyshev regime, or whose parameters cannot be found, uses
    /// the naive lower bound, and no later round is needed.
    pub fn new(n: u64, eps: f64, mode: TesterMode, sampling: SamplingMode) -> Result<Self> {
        if n < 2 || !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(invalid(format!("need n >= 2 and eps in (0, 1/3), got n={n} eps={eps}")));
        }
        let mut rounds = Vec::new();
        let last = 63 - n.leading_zeros() as u64;
        for i in 0..=last {
            let n_i = n as f64 / (1u64 << i) as f64;
            let delta_i = 1.0 / (4.0 * (1u64 << (i + 1)) as f64);
            let size = n_i.ceil() as u64;
            let config = if chebyshev_regime(size, eps, mode) {
                TesterConfig::plan(size, eps, mode, sampling).ok()
            } else {
                None
            };
            match config {
                Some(c) => rounds.push((n_i, delta_i, c)),
                None => {
                    rounds.push((n_i, delta_i, TesterConfig::naive(size, eps)?));
                    break;
                }
            }
        }
        Ok(Self { n, eps, rounds })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn run(&self, sampler: &mut dyn Sampler) -> LowerBoundResult {
        let mut per_round = Vec::new();
        let mut samples_drawn = 0u64;
        for (n_i, delta_i, config) in &self.rounds {
            let reps = repetitions_for(*delta_i);
            let naive = config.path() == TesterPath::Naive;
            let estimate_i = median_boost(
                |_| {
                    let (value, drawn) = if naive {
                        let m = (10.0 * config.n() as f64 / self.eps).ceil() as u64;
                        (sampler.draw(m).distinct() as f64, m)
                    } else {
                        config.estimate(sampler)
                    };
                    samples_drawn += drawn;
                    value
                },
                reps,
            )
            .expect("odd repetition count");
            let terminated = naive || estimate_i >= n_i / 2.0;
            per_round.push(RoundLog {
                n_i: *n_i,
                delta_i: *delta_i,
                estimate_i,
                terminated,
                path: config.path(),
                repetitions: reps,
            });
            if terminated {
                return LowerBoundResult {
                    estimate: estimate_i.max(1.0),
                    rounds_used: per_round.len() as u64,
                    samples_drawn,
                    per_round,
                };
            }
        }
        LowerBoundResult { estimate: 1.0, rounds_used: per_round.len() as u64, samples_drawn, per_round }
    }
}

pub fn good_lower_bound(n: u64, eps: f64, sampler: &mut dyn Sampler, mode: TesterMode) -> Result<LowerBoundResult> {
    Ok(LowerBoundPlan::new(n, eps, mode, SamplingMode::Poissonized)?.run(sampler))
}
