use approx::assert_abs_diff_eq;

use stein_verify::rng::StreamKey;
use stein_verify::stats::ks_two_sample;
use stein_verify::vectors::GammaMethod;
use stein_verify::DistributionFamily;

fn families(k: usize, n: usize) -> Vec<DistributionFamily> {
    vec![
        DistributionFamily::rademacher(k, n).unwrap(),
        DistributionFamily::gaussian(k, n).unwrap(),
        DistributionFamily::centered_exponential(k, n).unwrap(),
        DistributionFamily::heterogeneous_bernoulli(k, n, 0.3).unwrap(),
    ]
}

fn project(w: &[f64], u: &[f64]) -> f64 {
    w.iter().zip(u).map(|(a, b)| a * b).sum()
}

/// KS p-value after snapping to a 1e-9 grid, so that lattice atoms reached
/// by different floating-point routes compare equal.
fn ks_p(a: Vec<f64>, b: Vec<f64>) -> f64 {
    let snap = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| (x * 1e9).round() / 1e9).collect() };
    ks_two_sample(&mut snap(a), &mut snap(b)).1
}

#[test]
fn rademacher_sum_lives_on_lattice() {
    let n = 37;
    let fam = DistributionFamily::rademacher(3, n).unwrap();
    let mut rng = StreamKey::new(1, 1).rng(0);
    for _ in 0..1000 {
        for c in fam.sample_w(&mut rng).iter() {
            let m = c * (n as f64).sqrt();
            assert_abs_diff_eq!(m, m.round(), epsilon = 1e-9);
            assert_eq!((m.round() as i64).rem_euclid(2), 1, "parity of n");
        }
    }
}

#[test]
fn mean_is_zero_for_every_family() {
    for fam in families(2, 20) {
        let draws = 1_000_000;
        let mut rng = StreamKey::new(2, 1).rng(0);
        let mut s = [0.0; 2];
        let mut s2 = [0.0; 2];
        for _ in 0..draws {
            let w = fam.sample_w(&mut rng);
            for j in 0..2 {
                s[j] += w[j];
                s2[j] += w[j] * w[j];
            }
        }
        for j in 0..2 {
            let mean = s[j] / draws as f64;
            let se = ((s2[j] / draws as f64 - mean * mean) / draws as f64).sqrt();
            assert!(mean.abs() <= 5.0 * se, "{:?} coord {j}: {mean} (se {se})", fam.kind);
        }
    }
}

#[test]
fn covariance_is_identity_for_every_family() {
    let k = 3;
    for fam in families(k, 30) {
        let draws = 100_000;
        let mut rng = StreamKey::new(3, 1).rng(0);
        let ws: Vec<Vec<f64>> = (0..draws).map(|_| fam.sample_w(&mut rng).to_vec()).collect();
        for a in 0..k {
            for b in 0..k {
                let prods: Vec<f64> = ws.iter().map(|w| w[a] * w[b]).collect();
                let mean = prods.iter().sum::<f64>() / draws as f64;
                let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((mean - target).abs() <= 5.0 * se, "{:?} ({a},{b}): {mean} (se {se})", fam.kind);
            }
        }
    }
}

#[test]
fn exact_law_sampler_matches_summation() {
    let u = [0.6, -0.8];
    for fam in families(2, 25) {
        let draws = 100_000;
        let mut rng = StreamKey::new(4, 1).rng(0);
        let fast: Vec<f64> = (0..draws).map(|_| project(&fam.sample_w(&mut rng), &u)).collect();
        let key = StreamKey::new(4, 2);
        let slow: Vec<f64> = (0..draws as u64).map(|m| project(&fam.sample_w_by_summation(key, m), &u)).collect();
        let p = ks_p(fast, slow);
        assert!(p > 1e-3, "{:?}: p = {p}", fam.kind);
    }
}

#[test]
fn summation_order_does_not_change_the_law() {
    let fam = DistributionFamily::heterogeneous_bernoulli(1, 15, 0.2).unwrap();
    let draws = 100_000;
    let mut rng = StreamKey::new(5, 1).rng(0);
    let forward: Vec<f64> = (0..draws).map(|_| fam.sample_w(&mut rng)[0]).collect();
    let mut rng = StreamKey::new(5, 2).rng(0);
    let reversed: Vec<f64> = (0..draws)
        .map(|_| (1..=fam.n).rev().map(|i| fam.sample_summand(i, &mut rng).unwrap()[0]).sum())
        .collect();
    assert!(ks_p(forward, reversed) > 1e-3);
}

#[test]
fn leave_one_out_reassembles_w() {
    let u = [0.0, 1.0];
    for fam in families(2, 25) {
        for i in [1, fam.n] {
            let draws = 100_000;
            let mut rng = StreamKey::new(6, 1).rng(i as u64);
            let joint: Vec<f64> = (0..draws)
                .map(|_| {
                    let (rest, x) = fam.sample_w_leave_one_out(i, &mut rng).unwrap();
                    project(&rest, &u) + project(&x, &u)
                })
                .collect();
            let mut rng = StreamKey::new(6, 2).rng(i as u64);
            let direct: Vec<f64> = (0..draws).map(|_| project(&fam.sample_w(&mut rng), &u)).collect();
            let p = ks_p(joint, direct);
            assert!(p > 1e-3, "{:?} i={i}: p = {p}", fam.kind);
        }
    }
}

#[test]
fn rademacher_leave_one_out_law_is_index_free() {
    let fam = DistributionFamily::rademacher(1, 40).unwrap();
    let draws = 100_000;
    let sample = |i: usize, tag: u64| -> Vec<f64> {
        let mut rng = StreamKey::new(7, tag).rng(0);
        (0..draws).map(|_| fam.sample_w_leave_one_out(i, &mut rng).unwrap().0[0]).collect()
    };
    assert!(ks_p(sample(1, 1), sample(40, 2)) > 1e-3);
}

#[test]
fn gaussian_leave_one_out_variance() {
    let n = 4;
    let fam = DistributionFamily::gaussian(2, n).unwrap();
    let draws = 200_000;
    let mut rng = StreamKey::new(8, 1).rng(0);
    let xs: Vec<f64> = (0..draws).map(|_| fam.sample_w_leave_one_out(2, &mut rng).unwrap().0[1]).collect();
    let var = xs.iter().map(|x| x * x).sum::<f64>() / draws as f64;
    // Var of a Gaussian sample second moment is 2 sigma^4.
    let target = 1.0 - 1.0 / n as f64;
    let se = (2.0 * target * target / draws as f64).sqrt();
    assert!((var - target).abs() <= 5.0 * se, "{var} vs {target}");
}

#[test]
fn index_out_of_range_is_an_error() {
    let fam = DistributionFamily::gaussian(2, 5).unwrap();
    let mut rng = StreamKey::new(9, 1).rng(0);
    assert!(fam.sample_w_leave_one_out(0, &mut rng).is_err());
    assert!(fam.sample_w_leave_one_out(6, &mut rng).is_err());
    assert!(DistributionFamily::heterogeneous_bernoulli(1, 5, 1.0).is_err());
    assert!(DistributionFamily::rademacher(0, 5).is_err());
}

#[test]
fn gamma_examples() {
    let g = DistributionFamily::rademacher(4, 400).unwrap().gamma();
    assert_abs_diff_eq!(g.gamma, 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(g.per_summand.iter().sum::<f64>(), g.gamma, epsilon = 1e-12);
    let g = DistributionFamily::gaussian(1, 100).unwrap().gamma();
    assert_abs_diff_eq!(g.gamma, 2.0 * (2.0 / std::f64::consts::PI).sqrt() / 10.0, epsilon = 1e-9);
    assert_abs_diff_eq!(g.gamma, 0.15958, epsilon = 1e-5);
    assert_abs_diff_eq!(DistributionFamily::rademacher(1, 1).unwrap().gamma().gamma, 1.0, epsilon = 1e-15);

    let g = DistributionFamily::centered_exponential(2, 50).unwrap().gamma();
    match g.method {
        GammaMethod::MonteCarlo { se } => assert!(se <= 1e-3 * g.gamma),
        GammaMethod::ClosedForm => {}
    }
    assert_abs_diff_eq!(g.per_summand.iter().sum::<f64>(), g.gamma, epsilon = 1e-12);
}

#[test]
fn rademacher_gamma_is_monotone() {
    let g = |k, n| DistributionFamily::rademacher(k, n).unwrap().gamma().gamma;
    for k in 1..6 {
        for n in [10, 100, 1000] {
            assert!(g(k + 1, n) > g(k, n));
            assert!(g(k, n * 10) < g(k, n));
            assert_abs_diff_eq!(g(k, n), (k as f64).powf(1.5) / (n as f64).sqrt(), epsilon = 1e-12);
        }
    }
}
