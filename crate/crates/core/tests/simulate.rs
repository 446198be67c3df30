mod common;

use num_traits::{One, Zero};
use support_size::rational::{self, frac};
use support_size::simulate::{
    self, derive_seed, eff_support, make_distribution, monte_carlo, sample_fixed, sample_poissonized, tv_distance_to_supportsize,
    DistributionSampler, Family, SparseDistribution,
};
use support_size::tester::{Sampler, SamplingMode, TesterConfig, TesterMode};
use support_size::verify;
use support_size::Rational;

fn fixtures() -> Vec<SparseDistribution> {
    vec![
        simulate::uniform(1).unwrap(),
        simulate::uniform(10).unwrap(),
        simulate::uniform(137).unwrap(),
        simulate::zipf(300, 1.0).unwrap(),
        simulate::zipf(60, 0.3).unwrap(),
        simulate::two_level(10, 100, &frac(3, 10)).unwrap(),
        simulate::two_level(80, 400, &frac(2, 5)).unwrap(),
        SparseDistribution::from_atoms(vec![(9, frac(1, 2)), (4, frac(1, 4)), (7, frac(1, 8)), (1, frac(1, 8))]).unwrap(),
    ]
}

#[test]
fn family_examples() {
    let point = make_distribution(&Family::Uniform { k: 1 }).unwrap();
    assert_eq!(point.atoms(), &[(0, Rational::one())]);
    let t = make_distribution(&"two_level:10:100:0.3".parse().unwrap()).unwrap();
    assert!(t.atoms()[..10].iter().all(|(_, p)| *p == frac(7, 100)));
    assert!(t.atoms()[10..].iter().all(|(_, p)| *p == frac(3, 1000)));
    let far = simulate::far_uniform(100, &frac(1, 4), &Rational::zero()).unwrap();
    let k = far.support_size() as i64;
    assert!(k >= 134 && frac(k - 100, k) > frac(1, 4));
    assert!(simulate::far_uniform(100, &frac(1, 4), &frac(1, 10)).unwrap().support_size() >= 154);
    assert!(make_distribution(&"uniform:0".parse().unwrap()).is_err());
    assert!("gauss:3".parse::<Family>().is_err());
    for text in ["uniform:7", "zipf:20:1.5", "two_level:3:4:1/5", "far_uniform:10:1/4:0"] {
        let f: Family = text.parse().unwrap();
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
    }
}

#[test]
fn construction_validation() {
    assert!(SparseDistribution::from_atoms(vec![(1, frac(1, 2)), (1, frac(1, 2))]).is_err());
    assert!(SparseDistribution::from_atoms(vec![(1, frac(3, 2)), (2, frac(-1, 2))]).is_err());
    assert!(SparseDistribution::from_atoms(vec![(1, frac(1, 2)), (2, frac(1, 4))]).is_err());
    let nudged = SparseDistribution::from_atoms(vec![(1, rational::parse("0.5000001").unwrap()), (2, frac(1, 2))]).unwrap();
    let total: Rational = nudged.atoms().iter().map(|(_, p)| p.clone()).sum();
    assert!(total.is_one());
    let dropped = SparseDistribution::from_atoms(vec![(1, Rational::one()), (2, Rational::zero())]).unwrap();
    assert_eq!(dropped.support_size(), 1);
}

#[test]
fn eff_examples() {
    for eps in [frac(1, 10), frac(1, 4), frac(1, 2)] {
        assert_eq!(eff_support(&simulate::uniform(1).unwrap(), &eps), 1);
    }
    assert_eq!(eff_support(&simulate::uniform(10).unwrap(), &frac(1, 4)), 8);
    for k in [1i64, 7, 40, 101] {
        for (a, b) in [(1i64, 4i64), (1, 5), (3, 10)] {
            let expected = ((Rational::one() - frac(a, b)) * rational::int(k)).ceil().to_integer();
            assert_eq!(Rational::from_integer(eff_support(&simulate::uniform(k as u64).unwrap(), &frac(a, b)).into()), Rational::from_integer(expected));
        }
    }
}

#[test]
fn tv_examples() {
    assert!(tv_distance_to_supportsize(&simulate::uniform(5).unwrap(), 5).is_zero());
    assert!(tv_distance_to_supportsize(&simulate::uniform(5).unwrap(), 9).is_zero());
    assert_eq!(tv_distance_to_supportsize(&simulate::uniform(40).unwrap(), 20), frac(1, 2));
    assert_eq!(tv_distance_to_supportsize(&simulate::two_level(10, 100, &frac(3, 10)).unwrap(), 10), frac(3, 10));
}

#[test]
fn eff_and_tv_agree() {
    for dist in fixtures() {
        for eps in [frac(1, 20), frac(1, 4), frac(1, 3)] {
            let k = eff_support(&dist, &eps);
            assert!(tv_distance_to_supportsize(&dist, k) <= eps);
            if k > 0 {
                assert!(tv_distance_to_supportsize(&dist, k - 1) > eps);
            }
        }
    }
}

#[test]
fn fixed_sampling_examples() {
    let point = simulate::uniform(1).unwrap();
    let h = sample_fixed(&point, 7, 1);
    assert_eq!(h.count(0), 7);
    assert_eq!(h.distinct(), 1);
    assert!(sample_fixed(&point, 0, 1).is_empty());
    let two = simulate::uniform(2).unwrap();
    let h = sample_fixed(&two, 1_000_000, 2);
    assert!((h.count(0) as f64 - 500_000.0).abs() <= 5.0 * 500.0);
    assert_eq!(sample_fixed(&two, 1000, 9), sample_fixed(&two, 1000, 9));
}

#[test]
fn poissonized_sampling_examples() {
    let point = simulate::uniform(1).unwrap();
    assert!(sample_poissonized(&point, 0.0, 1).is_empty());
    let counts: Vec<f64> = (0..10_000).map(|s| sample_poissonized(&point, 100.0, s).count(0) as f64).collect();
    let mean = counts.iter().sum::<f64>() / 1e4;
    assert!((mean - 100.0).abs() <= 3.0 * (100.0f64 / 1e4).sqrt());

    let two = simulate::uniform(2).unwrap();
    let pairs: Vec<(f64, f64)> = (0..10_000)
        .map(|s| {
            let h = sample_poissonized(&two, 50.0, s);
            (h.count(0) as f64, h.count(1) as f64)
        })
        .collect();
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / 1e4, acc.1 + p.1 / 1e4));
    let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / (1e4 - 1.0);
    assert!(cov.abs() <= 3.0 * 25.0 / 100.0, "cov {cov}");
}

#[test]
fn per_atom_and_sequential_poissonization_share_a_law() {
    let dist = simulate::zipf(30, 1.0).unwrap();
    let trials = 5000;
    let stats = |sequential: bool| -> (f64, f64) {
        let xs: Vec<(f64, f64)> = (0..trials)
            .map(|s| {
                let mut sampler = DistributionSampler::new(&dist, derive_seed(40, sequential as u64, s));
                let h = if sequential { sampler.draw_poissonized_sequential(60.0) } else { sampler.draw_poissonized(60.0) };
                (h.distinct() as f64, h.count(0) as f64)
            })
            .collect();
        let n = trials as f64;
        (xs.iter().map(|x| x.0).sum::<f64>() / n, xs.iter().map(|x| x.1).sum::<f64>() / n)
    };
    let (d_atom, c_atom) = stats(false);
    let (d_seq, c_seq) = stats(true);
    let p0 = rational::to_f64(&dist.mass(0));
    let se_count = (60.0 * p0 / trials as f64).sqrt();
    assert!((c_atom - c_seq).abs() <= 4.0 * se_count * 2f64.sqrt());
    assert!((d_atom - d_seq).abs() <= 4.0 * (30.0f64 / trials as f64).sqrt(), "{d_atom} vs {d_seq}");
}

#[test]
fn monte_carlo_report_shape() {
    let config = TesterConfig::plan(100, 0.25, TesterMode::Empirical, SamplingMode::Poissonized).unwrap();
    let dist = simulate::uniform(100).unwrap();
    let one = monte_carlo(&config, &dist, 1, 3);
    assert!(one.accept_count <= 1);
    assert_eq!(one.var_stat, 0.0);
    let rep = monte_carlo(&config, &dist, 100, 3);
    assert!(rep.accept_count <= rep.trials && rep.var_stat >= 0.0);
    assert_eq!(rep.analytic_var_bound, 0.25 * 0.25 * 100.0 * 100.0 / 64.0);
    assert!(rep.var_stat <= 1.5 * rep.analytic_var_bound);
    assert!((rep.mean_stat - rep.analytic_mean.unwrap()).abs() <= 3.0 * rep.std_error());
    let naive = monte_carlo(&TesterConfig::naive(100, 0.25).unwrap(), &dist, 10, 3);
    assert!(naive.analytic_mean.is_none());
}

#[test]
fn refinement_worst_case_and_completeness_bounds() {
    for vk in verify::default_kernels().unwrap() {
        let k = &vk.kernel;
        let (ell, delta) = (k.ell_f(), k.delta_f());
        for dist in fixtures() {
            let masses = dist.masses_f64();
            let e = k.expected_statistic(&dist);
            let n_h = masses.iter().filter(|&&p| p >= ell).count() as f64;
            let mu_l: f64 = masses.iter().filter(|&&p| p < ell).sum();
            assert!(e >= (1.0 - delta) * (n_h + mu_l / ell) - 1e-9, "{}: refinement", vk.label);
            assert!(e <= (1.0 + delta) * dist.support_size() as f64 + 1e-9, "{}: completeness", vk.label);

            let mut sorted = masses.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let total_q_star: f64 = sorted.iter().map(|&p| k.q_star_eval(p)).sum();
            for n in [1usize, 2, 5, 50, 200].into_iter().filter(|&n| n <= sorted.len()) {
                let p_n = sorted[n - 1];
                let mu: f64 = sorted[n..].iter().sum();
                let bound = (n as f64 + mu / p_n) * k.q_star_eval(p_n);
                assert!(total_q_star >= bound - 1e-9 * bound.abs().max(1.0), "{}: worst case at n={n}", vk.label);
            }
        }
    }
}

#[test]
fn seed_derivation_is_pure_and_spread() {
    assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(7, 1, i)).collect();
    assert_eq!(seeds.len(), 1000);
    assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
}
