use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use stein_verify::rng::StreamKey;
use stein_verify::{ConvexSet, Error, HalfSpace, Polytope, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn unit_square() -> ConvexSet {
    Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap().into()
}

fn random_polytope(k: usize, faces: usize, seed: u64) -> ConvexSet {
    let mut rng = StreamKey::new(seed, 77).rng(0);
    Polytope::random(k, faces, &mut rng).unwrap().into()
}

fn scan(set: &ConvexSet, x: &[f64], lo: &[f64], hi: &[f64], step: f64) -> (f64, Vec<f64>) {
    let counts: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| ((b - a) / step).round() as usize + 1).collect();
    let total: usize = counts.iter().product();
    let mut best = (f64::INFINITY, Vec::new());
    for idx in 0..total {
        let mut rem = idx;
        let y: Vec<f64> = counts
            .iter()
            .zip(lo)
            .map(|(&c, &a)| {
                let v = a + (rem % c) as f64 * step;
                rem /= c;
                v
            })
            .collect();
        if set.contains(&y, &tol()).unwrap() {
            let d = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d < best.0 {
                best = (d, y);
            }
        }
    }
    best
}

/// Brute-force distance over feasible grid points: a coarse scan of the box
/// `[lo, hi]^k`, then a fine scan around the coarse minimizer. The fine box
/// covers every point whose distance is within the coarse error of the
/// minimum, since that sublevel set has diameter below 0.7 here.
fn grid_distance(set: &ConvexSet, x: &[f64], lo: f64, hi: f64, step: f64) -> f64 {
    let k = x.len();
    let (_, y) = scan(set, x, &vec![lo; k], &vec![hi; k], 0.02);
    let fine_lo: Vec<f64> = y.iter().map(|c| c - 0.5).collect();
    let fine_hi: Vec<f64> = y.iter().map(|c| c + 0.5).collect();
    scan(set, x, &fine_lo, &fine_hi, step).0
}

#[test]
fn membership_examples() {
    let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
    assert!(ball.contains(&[0.5, 0.0], &tol()).unwrap());
    let hs = ConvexSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
    assert!(hs.contains(&[0.0, 3.0], &tol()).unwrap());
    assert!(!unit_square().contains(&[1.1, 0.5], &tol()).unwrap());
}

#[test]
fn projection_examples() {
    let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
    let p = ball.project(&[2.0, 0.0], &tol()).unwrap();
    assert_abs_diff_eq!(p.nearest.as_slice(), &[1.0, 0.0][..], epsilon = 1e-12);
    assert_abs_diff_eq!(p.distance, 1.0, epsilon = 1e-12);

    let hs = ConvexSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
    let p = hs.project(&[0.5, 0.3], &tol()).unwrap();
    assert_abs_diff_eq!(p.nearest.as_slice(), &[0.0, 0.3][..], epsilon = 1e-12);
    assert_abs_diff_eq!(p.distance, 0.5, epsilon = 1e-12);

    let p = unit_square().project(&[2.0, 2.0], &tol()).unwrap();
    assert!(p.converged);
    assert_abs_diff_eq!(p.nearest.as_slice(), &[1.0, 1.0][..], epsilon = 1e-9);
    assert_abs_diff_eq!(p.distance, 2f64.sqrt(), epsilon = 1e-9);
}

#[test]
fn distance_and_region_examples() {
    let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
    assert_abs_diff_eq!(ball.distance(&[1.4, 0.0], &tol()).unwrap(), 0.4, epsilon = 1e-12);
    assert_eq!(ball.distance(&[0.3, 0.3], &tol()).unwrap(), 0.0);
    assert!(ball.in_dilation(&[1.4, 0.0], 0.5, &tol()).unwrap());
    assert!(!ball.in_dilation(&[1.6, 0.0], 0.5, &tol()).unwrap());
    assert!(unit_square().in_erosion(&[0.5, 0.5], 0.25).unwrap());
    assert!(!unit_square().in_erosion(&[0.1, 0.5], 0.25).unwrap());
    assert!(!ball.in_erosion(&[0.0, 0.0], 1.5).unwrap());
    assert!(ball.in_erosion(&[0.69, 0.0], 0.3).unwrap());
    let inter = ConvexSet::intersection(vec![ball.clone(), ConvexSet::ball(vec![0.5, 0.0], 1.0).unwrap()]).unwrap();
    assert!(matches!(inter.in_erosion(&[0.2, 0.0], 0.1), Err(Error::UnsupportedSet(_))));
}

#[test]
fn three_face_polytope_matches_grid_oracle() {
    for seed in 0..5 {
        let set = random_polytope(2, 3, seed);
        let mut rng = StreamKey::new(seed, 78).rng(0);
        for _ in 0..4 {
            use rand::Rng;
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let d = set.distance(&x, &tol()).unwrap();
            let oracle = grid_distance(&set, &x, -4.5, 4.5, 1e-3);
            // Grid points are at most step/sqrt(2) from the true nearest point.
            assert!((d - oracle).abs() <= 1e-3, "seed {seed} x {x:?}: {d} vs {oracle}");
        }
    }
}

#[test]
fn one_and_two_dimensional_sets_match_grid_oracle() {
    use rand::Rng;
    let mut rng = StreamKey::new(3, 79).rng(0);
    for case in 0..100 {
        let k = 1 + case % 2;
        let set = match case % 3 {
            0 => random_polytope(k, 4, case as u64),
            1 => ConvexSet::ball((0..k).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(0.2..1.5))
                .unwrap(),
            _ => {
                let a: Vec<f64> = if k == 1 {
                    vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
                } else {
                    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    vec![t.cos(), t.sin()]
                };
                HalfSpace::new(a, rng.random_range(-1.0..1.0)).map(ConvexSet::from).unwrap()
            }
        };
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-2.5..2.5)).collect();
        let d = set.distance(&x, &tol()).unwrap();
        let oracle = grid_distance(&set, &x, -5.0, 5.0, 1e-3);
        assert!((d - oracle).abs() <= 1e-3, "case {case}: {d} vs {oracle}");
    }
}

fn arb_set(k: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (prop::collection::vec(-1.0..1.0f64, k), 0.1..2.0f64)
            .prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (prop::collection::vec(-1.0..1.0f64, k), -1.0..1.0f64)
            .prop_filter("nonzero normal", |(a, _)| a.iter().any(|v| v.abs() > 1e-3))
            .prop_map(|(a, b)| HalfSpace::from_direction(&a, b).unwrap().into()),
        (3..8usize, any::<u64>()).prop_map(move |(f, s)| random_polytope(k, f, s)),
    ]
}

fn arb_case() -> impl Strategy<Value = (ConvexSet, Vec<f64>, Vec<f64>)> {
    (1..5usize).prop_flat_map(|k| {
        (
            arb_set(k),
            prop::collection::vec(-4.0..4.0f64, k),
            prop::collection::vec(-4.0..4.0f64, k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_is_idempotent((set, x, _) in arb_case()) {
        let p = set.project(&x, &tol()).unwrap();
        let again = set.project(&p.nearest, &tol()).unwrap();
        prop_assert!(again.distance <= 1e-10);
        prop_assert!(set.contains(&p.nearest, &tol()).unwrap());
    }

    #[test]
    fn projection_is_nonexpansive((set, x, y) in arb_case()) {
        let px = set.project(&x, &tol()).unwrap().nearest;
        let py = set.project(&y, &tol()).unwrap().nearest;
        let dp: f64 = px.iter().zip(py.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dx: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dp <= dx + 1e-9);
    }

    #[test]
    fn nearest_point_satisfies_obtuse_angle_condition((set, x, _) in arb_case(), seed in any::<u64>()) {
        use rand::Rng;
        let p = set.project(&x, &tol()).unwrap();
        let x0 = p.nearest.as_slice();
        let mut rng = StreamKey::new(seed, 80).rng(0);
        let mut feasible = 0;
        while feasible < 100 {
            let y: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-6.0..6.0)).collect();
            let y = set.project(&y, &tol()).unwrap().nearest;
            let inner: f64 = x.iter().zip(x0).zip(y.iter()).map(|((xi, ai), yi)| (xi - ai) * (yi - ai)).sum();
            prop_assert!(inner <= 1e-10, "inner product {}", inner);
            feasible += 1;
        }
    }

    #[test]
    fn erosion_inside_set_inside_dilation((set, x, _) in arb_case(), eps in 0.01..1.0f64) {
        if set.in_erosion(&x, eps).unwrap() {
            prop_assert!(set.contains(&x, &tol()).unwrap());
        }
        if set.contains(&x, &tol()).unwrap() {
            prop_assert!(set.in_dilation(&x, eps, &tol()).unwrap());
        }
        prop_assert_eq!(set.in_dilation(&x, 0.0, &tol()).unwrap(), set.contains(&x, &tol()).unwrap());
    }
}
