//! Distribution zoo, exact oracles, seeded samplers and the Monte Carlo harness.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SampleHistogram;
use crate::rational;
use crate::tester::{Decision, Sampler, TesterConfig};
use crate::Rational;

/// Relative deviation from a total mass of one that is silently renormalised.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

fn dist_err(msg: impl Into<String>) -> Error {
    Error::Distribution(msg.into())
}

/// Finite-support distribution with exact masses and a floating cumulative table for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDistribution {
    atoms: Vec<(u64, Rational)>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SparseDistribution {
    /// Builds from `(id, mass)` atoms. Zero masses are dropped; a total within
    /// [`RENORMALIZE_TOLERANCE`] of one is rescaled proportionally, anything further off is an error.
    pub fn from_atoms(atoms: Vec<(u64, Rational)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(atoms.len());
        for (id, mass) in &atoms {
            if !seen.insert(*id) {
                return Err(dist_err(format!("duplicate id {id}")));
            }
            if mass.is_negative() {
                return Err(dist_err(format!("negative mass for id {id}")));
            }
        }
        let mut atoms: Vec<_> = atoms.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        if atoms.is_empty() {
            return Err(dist_err("distribution has no positive mass"));
        }
        let total: Rational = atoms.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            let dev = rational::to_f64(&(&total - Rational::one())).abs();
            if dev > RENORMALIZE_TOLERANCE {
                return Err(dist_err(format!("masses sum to {} (off by {dev:.3e})", rational::to_f64(&total))));
            }
            for (_, p) in atoms.iter_mut() {
                *p = &*p / &total;
            }
        }
        let masses: Vec<f64> = atoms.iter().map(|(_, p)| rational::to_f64(p)).collect();
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = Rational::zero();
        for (_, p) in &atoms {
            acc += p;
            cumulative.push(rational::to_f64(&acc));
        }
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Self { atoms, masses, cumulative })
    }

    pub fn atoms(&self) -> &[(u64, Rational)] {
        &self.atoms
    }

    pub fn masses_f64(&self) -> &[f64] {
        &self.masses
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.atoms.iter().map(|(id, _)| *id)
    }

    pub fn mass(&self, id: u64) -> Rational {
        self.atoms.iter().find(|(i, _)| *i == id).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero)
    }

    /// Atoms sorted by mass, largest first, ties by ascending id.
    pub fn sorted_desc(&self) -> Vec<(u64, Rational)> {
        let mut v = self.atoms.clone();
        v.sort_by(|(ia, pa), (ib, pb)| pb.cmp(pa).then(ia.cmp(ib)));
        v
    }

    /// One categorical draw by inversion of the cumulative table.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[idx].0
    }
}

/// Named fixture families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform { k: u64 },
    Zipf { k: u64, s: f64 },
    TwoLevel { heavy: u64, light: u64, light_mass: Rational },
    FarUniform { n: u64, eps: Rational, margin: Rational },
}

impl FromStr for Family {
    type Err = Error;

    /// `uniform:K`, `point`, `zipf:K:S`, `two_level:NH:NL:MU`, `far_uniform:N:EPS[:MARGIN]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |i: usize| -> Result<u64> {
            parts
                .get(i)
                .ok_or_else(|| dist_err(format!("{s:?}: missing field {i}")))?
                .trim()
                .parse()
                .map_err(|_| dist_err(format!("{s:?}: field {i} is not a non-negative integer")))
        };
        let num = |i: usize| -> Result<Rational> {
            rational::parse(parts.get(i).ok_or_else(|| dist_err(format!("{s:?}: missing field {i}")))?)
        };
        let arity = |k: usize| {
            if parts.len() == k {
                Ok(())
            } else {
                Err(dist_err(format!("{s:?}: expected {} parameter(s)", k - 1)))
            }
        };
        match parts[0] {
            "point" => {
                arity(1)?;
                Ok(Family::Uniform { k: 1 })
            }
            "uniform" => {
                arity(2)?;
                Ok(Family::Uniform { k: int(1)? })
            }
            "zipf" => {
                arity(3)?;
                let s_exp = parts[2].trim().parse().map_err(|_| dist_err(format!("{s:?}: bad exponent")))?;
                Ok(Family::Zipf { k: int(1)?, s: s_exp })
            }
            "two_level" => {
                arity(4)?;
                Ok(Family::TwoLevel { heavy: int(1)?, light: int(2)?, light_mass: num(3)? })
            }
            "far_uniform" => {
                if parts.len() != 3 && parts.len() != 4 {
                    return Err(dist_err(format!("{s:?}: expected far_uniform:N:EPS[:MARGIN]")));
                }
                let margin = if parts.len() == 4 { num(3)? } else { Rational::zero() };
                Ok(Family::FarUniform { n: int(1)?, eps: num(2)?, margin })
            }
            other => Err(dist_err(format!("unknown distribution family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Uniform { k } => write!(f, "uniform:{k}"),
            Family::Zipf { k, s } => write!(f, "zipf:{k}:{s}"),
            Family::TwoLevel { heavy, light, light_mass } => {
                write!(f, "two_level:{heavy}:{light}:{}", rational::format(light_mass))
            }
            Family::FarUniform { n, eps, margin } => {
                write!(f, "far_uniform:{n}:{}:{}", rational::format(eps), rational::format(margin))
            }
        }
    }
}

pub fn make_distribution(family: &Family) -> Result<SparseDistribution> {
    match family {
        Family::Uniform { k } => uniform(*k),
        Family::Zipf { k, s } => zipf(*k, *s),
        Family::TwoLevel { heavy, light, light_mass } => two_level(*heavy, *light, light_mass),
        Family::FarUniform { n, eps, margin } => far_uniform(*n, eps, margin),
    }
}

/// `k` atoms of mass `1/k`, ids `0..k`.
pub fn uniform(k: u64) -> Result<SparseDistribution> {
    if k == 0 {
        return Err(dist_err("uniform needs k >= 1"));
    }
    let p = Rational::new(BigInt::one(), BigInt::from(k));
    SparseDistribution::from_atoms((0..k).map(|i| (i, p.clone())).collect())
}

/// Masses proportional to `(i+1)^{-s}` for ids `0..k`.
pub fn zipf(k: u64, s: f64) -> Result<SparseDistribution> {
    if k == 0 || !s.is_finite() || s < 0.0 {
        return Err(dist_err(format!("zipf needs k >= 1 and finite s >= 0, got k={k} s={s}")));
    }
    let weights: Vec<Rational> = (1..=k).map(|i| rational::from_f64((i as f64).powf(-s))).collect::<Result<_>>()?;
    let total: Rational = weights.iter().sum();
    SparseDistribution::from_atoms(weights.into_iter().enumerate().map(|(i, w)| (i as u64, w / &total)).collect())
}

/// `heavy` atoms sharing `1 - μ` (ids `0..heavy`) and `light` atoms sharing `μ` (the following ids).
pub fn two_level(heavy: u64, light: u64, light_mass: &Rational) -> Result<SparseDistribution> {
    let one = Rational::one();
    if light_mass.is_negative() || light_mass > &one {
        return Err(dist_err("light mass must lie in [0, 1]"));
    }
    if heavy == 0 && !light_mass.is_one() {
        return Err(dist_err("no heavy atoms to carry the heavy mass"));
    }
    if light == 0 && !light_mass.is_zero() {
        return Err(dist_err("no light atoms to carry the light mass"));
    }
    let mut atoms = Vec::new();
    if heavy > 0 {
        let p = (&one - light_mass) / rational::int(heavy as i64);
        atoms.extend((0..heavy).map(|i| (i, p.clone())));
    }
    if light > 0 {
        let p = light_mass / rational::int(light as i64);
        atoms.extend((heavy..heavy + light).map(|i| (i, p.clone())));
    }
    SparseDistribution::from_atoms(atoms)
}

/// Uniform over `⌈n / (1 - ε - margin)⌉` atoms, checked to be strictly `ε`-far from support `n`.
pub fn far_uniform(n: u64, eps: &Rational, margin: &Rational) -> Result<SparseDistribution> {
    let one = Rational::one();
    let denom = &one - eps - margin;
    if !eps.is_positive() || margin.is_negative() || !denom.is_positive() {
        return Err(dist_err("far_uniform needs eps > 0, margin >= 0 and eps + margin < 1"));
    }
    let k = (rational::int(n as i64) / denom).ceil().to_integer().to_u64().ok_or_else(|| dist_err("atom count overflow"))?;
    let dist = uniform(k)?;
    if tv_distance_to_supportsize(&dist, n) <= *eps {
        return Err(dist_err(format!(
            "uniform({k}) is not strictly {}-far from support {n}",
            rational::format(eps)
        )));
    }
    Ok(dist)
}

/// Smallest `k` with `uniform(k)` strictly `ε`-far from support size `n`.
pub fn smallest_far_uniform_size(n: u64, eps: &Rational) -> u64 {
    // (k - n) / k > ε  ⇔  k > n / (1 - ε)
    let bound = rational::int(n as i64) / (Rational::one() - eps);
    (bound.floor().to_integer() + BigInt::one()).to_u64().expect("fits")
}

/// `eff_ε(p)`: the smallest `k` whose sorted tail mass is at most `ε`.
pub fn eff_support(dist: &SparseDistribution, eps: &Rational) -> u64 {
    let mut tail = Rational::one();
    let mut k = 0u64;
    for (_, p) in dist.sorted_desc() {
        if tail <= *eps {
            break;
        }
        tail -= p;
        k += 1;
    }
    k
}

/// Total variation distance to the nearest distribution supported on at most `n` elements.
pub fn tv_distance_to_supportsize(dist: &SparseDistribution, n: u64) -> Rational {
    dist.sorted_desc().into_iter().skip(n.try_into().unwrap_or(usize::MAX)).map(|(_, p)| p).sum()
}

/// SplitMix64 finaliser.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `(stream, index)` under `master`: `splitmix64(splitmix64(master ^ stream·φ) + index)`,
/// with `φ = 0x9E3779B97F4A7C15`. Pure, so any trial can be replayed on its own.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(index))
}

/// `count` i.i.d. draws.
pub fn sample_fixed(dist: &SparseDistribution, count: u64, seed: u64) -> SampleHistogram {
    DistributionSampler::new(dist, seed).draw(count)
}

/// Independent `N_i ~ Poisson(m p_i)` per atom.
pub fn sample_poissonized(dist: &SparseDistribution, m: f64, seed: u64) -> SampleHistogram {
    DistributionSampler::new(dist, seed).draw_poissonized(m)
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
}

/// Sampler over a known distribution with its own ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct DistributionSampler<'a> {
    dist: &'a SparseDistribution,
    rng: ChaCha8Rng,
}

impl<'a> DistributionSampler<'a> {
    pub fn new(dist: &'a SparseDistribution, seed: u64) -> Self {
        Self { dist, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Draws `Poisson(m)` samples one at a time; same law as [`Sampler::draw_poissonized`].
    pub fn draw_poissonized_sequential(&mut self, m: f64) -> SampleHistogram {
        let count = self.poisson_count(m);
        self.draw(count)
    }
}

impl Sampler for DistributionSampler<'_> {
    fn draw(&mut self, count: u64) -> SampleHistogram {
        let mut h = SampleHistogram::new();
        for _ in 0..count {
            h.add(self.dist.sample_one(&mut self.rng), 1);
        }
        h
    }

    fn poisson_count(&mut self, m: f64) -> u64 {
        poisson(&mut self.rng, m)
    }

    fn draw_poissonized(&mut self, m: f64) -> SampleHistogram {
        let mut h = SampleHistogram::new();
        for ((id, _), &p) in self.dist.atoms.iter().zip(&self.dist.masses) {
            let c = poisson(&mut self.rng, m * p);
            h.add(*id, c);
        }
        h
    }
}

/// How the seeds of a Monte Carlo run were derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub stream: u64,
    pub derivation: String,
}

/// Aggregate of repeated tester runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: u64,
    pub accept_count: u64,
    pub mean_stat: f64,
    pub var_stat: f64,
    /// `E[Ŝ] = Σ Q(p_i)`; only defined for the Chebyshev statistic.
    pub analytic_mean: Option<f64>,
    /// `ε² n² / 64`.
    pub analytic_var_bound: f64,
    pub max_samples: u64,
    pub mean_samples: f64,
    pub seeds: SeedRecord,
}

impl TrialReport {
    pub fn accept_rate(&self) -> f64 {
        self.accept_count as f64 / self.trials as f64
    }

    pub fn reject_rate(&self) -> f64 {
        1.0 - self.accept_rate()
    }

    /// Standard error of `mean_stat`.
    pub fn std_error(&self) -> f64 {
        (self.var_stat / self.trials as f64).sqrt()
    }
}

/// Stream id used by [`monte_carlo`].
pub const MONTE_CARLO_STREAM: u64 = 1;

/// Runs `trials` independent testers on `dist`; trial `t` uses `derive_seed(master, 1, t)`.
///
/// Trials run in parallel but are reduced in trial order, so the report does not depend on the
/// thread count.
pub fn monte_carlo(config: &TesterConfig, dist: &SparseDistribution, trials: u64, master_seed: u64) -> TrialReport {
    let verdicts: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut sampler = DistributionSampler::new(dist, derive_seed(master_seed, MONTE_CARLO_STREAM, t));
            config.run(&mut sampler)
        })
        .collect();
    let n = trials.max(1) as f64;
    let accept_count = verdicts.iter().filter(|v| v.decision == Decision::Accept).count() as u64;
    let mean_stat = verdicts.iter().map(|v| v.statistic_value).sum::<f64>() / n;
    let var_stat = if trials > 1 {
        verdicts.iter().map(|v| (v.statistic_value - mean_stat).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let (eps, size) = (config.eps(), config.n() as f64);
    TrialReport {
        trials,
        accept_count,
        mean_stat,
        var_stat,
        analytic_mean: config.kernel().map(|k| k.expected_statistic(dist)),
        analytic_var_bound: eps * eps * size * size / 64.0,
        max_samples: verdicts.iter().map(|v| v.samples_drawn).max().unwrap_or(0),
        mean_samples: verdicts.iter().map(|v| v.samples_drawn as f64).sum::<f64>() / n,
        seeds: SeedRecord {
            master: master_seed,
            stream: MONTE_CARLO_STREAM,
            derivation: "splitmix64(splitmix64(master ^ stream*0x9E3779B97F4A7C15) + trial)".into(),
        },
    }
}
