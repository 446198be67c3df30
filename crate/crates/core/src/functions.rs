//! Sample-based testing of `H_n = {f : |f⁻¹(1)| <= n}` under an unknown distribution, by reduction
//! to support-size testing and back.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::estimator::SampleHistogram;
use crate::simulate::SparseDistribution;
use crate::tester::{Decision, Sampler, TestVerdict, TesterConfig, TesterPath};
use crate::Rational;

/// Default failure budget `ξ` of the function-to-distribution reduction.
pub const DEFAULT_XI: f64 = 0.05;

/// A Boolean function, given by its set of ones, together with the sampling distribution.
#[derive(Debug, Clone)]
pub struct FunctionDistributionPair {
    pub ones: BTreeSet<u64>,
    pub dist: SparseDistribution,
}

impl FunctionDistributionPair {
    pub fn new(ones: BTreeSet<u64>, dist: SparseDistribution) -> Self {
        Self { ones, dist }
    }

    pub fn label(&self, id: u64) -> u8 {
        u8::from(self.ones.contains(&id))
    }

    /// `p^(z)`: every 0-labelled atom's mass moved onto `z`.
    pub fn collapsed_distribution(&self, z: u64) -> Result<SparseDistribution> {
        let mut atoms: BTreeMap<u64, Rational> = BTreeMap::new();
        for (id, p) in self.dist.atoms() {
            let target = if self.ones.contains(id) { *id } else { z };
            *atoms.entry(target).or_insert_with(Rational::zero) += p;
        }
        SparseDistribution::from_atoms(atoms.into_iter().collect())
    }
}

/// Exact distance from `(f, p)` to `H_n`: the mass on ones beyond the `n` heaviest of them.
pub fn farness_from_class(pair: &FunctionDistributionPair, n: u64) -> Rational {
    let mut on_ones: Vec<&Rational> =
        pair.dist.atoms().iter().filter(|(id, _)| pair.ones.contains(id)).map(|(_, p)| p).collect();
    on_ones.sort_by(|a, b| b.cmp(a));
    on_ones.into_iter().skip(n.try_into().unwrap_or(usize::MAX)).sum()
}

/// Multiset of labelled samples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledSample {
    counts: BTreeMap<u64, (u8, u64)>,
    total: u64,
}

impl LabeledSample {
    /// Builds from `(id, label)` pairs, rejecting labels outside `{0, 1}` and inconsistent labels.
    pub fn from_pairs<I: IntoIterator<Item = (u64, u8)>>(pairs: I) -> Result<Self> {
        let mut s = Self::default();
        for (id, label) in pairs {
            s.add(id, label, 1)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, id: u64, label: u8, count: u64) -> Result<()> {
        if label > 1 {
            return Err(invalid(format!("label {label} for id {id} is not 0 or 1")));
        }
        if count == 0 {
            return Ok(());
        }
        let slot = self.counts.entry(id).or_insert((label, 0));
        if slot.0 != label {
            return Err(invalid(format!("id {id} carries both labels")));
        }
        slot.1 += count;
        self.total += count;
        Ok(())
    }

    /// Labels every sample 1.
    pub fn all_ones(hist: &SampleHistogram) -> Self {
        let counts: BTreeMap<u64, (u8, u64)> = hist.counts().iter().map(|(&id, &c)| (id, (1, c))).collect();
        Self { counts, total: hist.total() }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u8, u64)> + '_ {
        self.counts.iter().map(|(&id, &(label, c))| (id, label, c))
    }

    /// Number of samples labelled 1, with multiplicity.
    pub fn ones_total(&self) -> u64 {
        self.entries().filter(|e| e.1 == 1).map(|e| e.2).sum()
    }

    /// Forgets the labels.
    pub fn unlabeled(&self) -> SampleHistogram {
        SampleHistogram::from_counts(self.entries().map(|(id, _, c)| (id, c)))
    }

    /// The `index`-th 1-labelled sample in id order, counting multiplicity.
    fn nth_one(&self, mut index: u64) -> Option<u64> {
        for (id, label, c) in self.entries() {
            if label == 1 {
                if index < c {
                    return Some(id);
                }
                index -= c;
            }
        }
        None
    }
}

/// Replaces every 0-labelled sample by `z`; the result has the same size and no 0-labelled ids.
pub fn collapse(sample: &LabeledSample, z: u64) -> SampleHistogram {
    SampleHistogram::from_counts(sample.entries().map(|(id, label, c)| (if label == 1 { id } else { z }, c)))
}

/// Source of labelled samples `(x, f(x))`, `x ~ p`.
pub trait LabeledSampler {
    fn draw_labeled(&mut self, count: u64) -> LabeledSample;
    fn poisson_count(&mut self, m: f64) -> u64;
    /// Uniform integer in `0..bound`.
    fn uniform_index(&mut self, bound: u64) -> u64;
}

/// Labelled sampler over a known pair.
#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    pair: &'a FunctionDistributionPair,
    rng: ChaCha8Rng,
}

impl<'a> PairSampler<'a> {
    pub fn new(pair: &'a FunctionDistributionPair, seed: u64) -> Self {
        Self { pair, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl LabeledSampler for PairSampler<'_> {
    fn draw_labeled(&mut self, count: u64) -> LabeledSample {
        let mut s = LabeledSample::default();
        for _ in 0..count {
            let id = self.pair.dist.sample_one(&mut self.rng);
            s.add(id, self.pair.label(id), 1).expect("labels come from one function");
        }
        s
    }

    fn poisson_count(&mut self, m: f64) -> u64 {
        if m <= 0.0 {
            return 0;
        }
        use rand_distr::{Distribution, Poisson};
        Poisson::new(m).map(|d| d.sample(&mut self.rng) as u64).unwrap_or(u64::MAX)
    }

    fn uniform_index(&mut self, bound: u64) -> u64 {
        self.rng.random_range(0..bound)
    }
}

/// A support-size tester driven by unlabelled samples.
pub trait DistTester {
    fn test(&self, sampler: &mut dyn Sampler) -> TestVerdict;
}

/// A tester for `H_n` driven by labelled samples.
pub trait FunTester {
    fn test(&self, sampler: &mut dyn LabeledSampler) -> TestVerdict;
}

impl DistTester for TesterConfig {
    fn test(&self, sampler: &mut dyn Sampler) -> TestVerdict {
        self.run(sampler)
    }
}

/// Presents a sampler as a labelled sampler of the constant function 1.
struct AllOnes<'s> {
    inner: &'s mut dyn Sampler,
    rng: ChaCha8Rng,
}

impl LabeledSampler for AllOnes<'_> {
    fn draw_labeled(&mut self, count: u64) -> LabeledSample {
        LabeledSample::all_ones(&self.inner.draw(count))
    }

    fn poisson_count(&mut self, m: f64) -> u64 {
        self.inner.poisson_count(m)
    }

    fn uniform_index(&mut self, bound: u64) -> u64 {
        self.rng.random_range(0..bound)
    }
}

/// Unlabelled view of a labelled sampler with 0-labelled draws replaced by `z`.
struct Collapsed<'s> {
    inner: &'s mut dyn LabeledSampler,
    z: u64,
}

impl Sampler for Collapsed<'_> {
    fn draw(&mut self, count: u64) -> SampleHistogram {
        collapse(&self.inner.draw_labeled(count), self.z)
    }

    fn poisson_count(&mut self, m: f64) -> u64 {
        self.inner.poisson_count(m)
    }
}

/// Distribution tester obtained from a function tester by labelling every sample 1.
#[derive(Debug, Clone)]
pub struct DistFromFun<F> {
    pub inner: F,
    /// Seed for the auxiliary randomness the wrapped tester may request.
    pub seed: u64,
}

impl<F: FunTester> DistTester for DistFromFun<F> {
    fn test(&self, sampler: &mut dyn Sampler) -> TestVerdict {
        self.inner.test(&mut AllOnes { inner: sampler, rng: ChaCha8Rng::seed_from_u64(self.seed) })
    }
}

/// Function tester obtained from a distribution tester by collapsing 0-labelled samples.
#[derive(Debug, Clone)]
pub struct FunFromDist<D> {
    pub inner: D,
    pub eps: f64,
    pub xi: f64,
}

impl<D: DistTester> FunFromDist<D> {
    pub fn new(inner: D, eps: f64, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(invalid(format!("xi must lie in (0,1), got {xi}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        Ok(Self { inner, eps, xi })
    }

    /// `m₁ = ⌈ln(2/ξ)/ε⌉`.
    pub fn phase_one_size(&self) -> u64 {
        ((2.0 / self.xi).ln() / self.eps).ceil() as u64
    }
}

impl<D: DistTester> FunTester for FunFromDist<D> {
    fn test(&self, sampler: &mut dyn LabeledSampler) -> TestVerdict {
        let m1 = self.phase_one_size();
        let first = sampler.draw_labeled(m1);
        let ones = first.ones_total();
        if ones == 0 {
            return TestVerdict {
                decision: Decision::Accept,
                statistic_value: 0.0,
                threshold: 0.0,
                samples_drawn: m1,
                path: TesterPath::NoOnes,
            };
        }
        let z = first.nth_one(sampler.uniform_index(ones)).expect("index below the 1-count");
        let mut verdict = self.inner.test(&mut Collapsed { inner: sampler, z });
        verdict.samples_drawn += m1;
        verdict
    }
}

/// Runs `fun_tester` on samples labelled by the constant function 1.
pub fn dist_tester_from_fun_tester(fun_tester: &dyn FunTester, sampler: &mut dyn Sampler, seed: u64) -> TestVerdict {
    fun_tester.test(&mut AllOnes { inner: sampler, rng: ChaCha8Rng::seed_from_u64(seed) })
}

/// Tests `H_n` with a distribution tester via the collapse construction.
pub fn fun_tester_from_dist_tester(
    dist_tester: &dyn DistTester,
    eps: f64,
    xi: f64,
    sampler: &mut dyn LabeledSampler,
) -> Result<TestVerdict> {
    struct ByRef<'a>(&'a dyn DistTester);
    impl DistTester for ByRef<'_> {
        fn test(&self, sampler: &mut dyn Sampler) -> TestVerdict {
            self.0.test(sampler)
        }
    }
    Ok(FunFromDist::new(ByRef(dist_tester), eps, xi)?.test(sampler))
}
