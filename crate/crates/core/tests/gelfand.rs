use faer::{Col, Mat};
use phsim_core::gelfand::{dual_norm, duality_map, transform_triple, von_neumann_check};
use phsim_core::linalg;
use phsim_core::selftest::{monte_carlo_dual_norm, random_col, random_mat, random_spd};
use phsim_core::FiniteQuasiTriple;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triple(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FiniteQuasiTriple {
    let basis = linalg::column_space(random_mat(rng, n, k).as_ref(), 1e-12);
    let k = basis.ncols();
    let gram = random_spd(rng, k, 0.2);
    FiniteQuasiTriple::new(basis, gram).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..9).prop_flat_map(|n| (Just(n), 1..=n, any::<u64>()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duality_map_is_isometric((n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = triple(&mut rng, n, k);
        let g = t.basis() * random_col(&mut rng, t.basis().ncols());
        let psi = duality_map(&t, &g).unwrap();
        prop_assert!(rel(t.plus_norm_coords(&psi), dual_norm(&t, &g)) <= 1e-10);
        // <Ψ g, c>_+ = <g, B c>_0
        let c = random_col(&mut rng, t.basis().ncols());
        let lhs = linalg::dot(&psi, &(t.gram() * &c));
        let rhs = linalg::dot(&g, &(t.basis() * &c));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn minus_triple_dual_is_plus_norm((n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = triple(&mut rng, n, k);
        let minus = t.minus_triple().unwrap();
        let f = t.basis() * random_col(&mut rng, t.basis().ncols());
        prop_assert!(rel(dual_norm(&minus, &f), t.plus_norm(&f)) <= 1e-9);
    }

    #[test]
    fn pivot_norm_between_plus_and_minus((n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = triple(&mut rng, n, k);
        let f = t.basis() * random_col(&mut rng, t.basis().ncols());
        let zero = f.squared_norm_l2();
        prop_assert!(zero <= dual_norm(&t, &f) * t.plus_norm(&f) * (1.0 + 1e-12));
    }

    #[test]
    fn sampling_never_exceeds_dual_norm((n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = triple(&mut rng, n, k);
        let g = random_col(&mut rng, n);
        let g = t.basis() * (t.basis().transpose() * &g);
        let exact = dual_norm(&t, &g);
        let mc = monte_carlo_dual_norm(&t, &g, 200, &mut rng);
        prop_assert!(mc <= exact * (1.0 + 1e-12));
    }

    #[test]
    fn transforms_compose((n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = triple(&mut rng, n, k);
        let a = random_mat(&mut rng, n, n) + Mat::<f64>::identity(n, n) * faer::Scale(3.0);
        let b = random_mat(&mut rng, n, n) + Mat::<f64>::identity(n, n) * faer::Scale(3.0);
        let two_step = transform_triple(&transform_triple(&t, &a).unwrap(), &b).unwrap();
        let one_step = transform_triple(&t, &(&b * &a)).unwrap();
        let f = one_step.basis() * random_col(&mut rng, one_step.basis().ncols());
        prop_assert!(rel(two_step.plus_norm(&f), one_step.plus_norm(&f)) <= 1e-9);
        let g = random_col(&mut rng, n);
        let g = one_step.basis() * (one_step.basis().transpose() * &g);
        prop_assert!(rel(dual_norm(&two_step, &g), dual_norm(&one_step, &g)) <= 1e-9);
    }

    #[test]
    fn von_neumann_holds_for_any_matrix(p in 1usize..6, q in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_mat(&mut rng, p, q);
        prop_assert!(von_neumann_check(&t).pass);
    }
}

#[test]
fn outside_range_is_infinite() {
    let basis = Mat::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let t = FiniteQuasiTriple::new(basis, Mat::identity(1, 1)).unwrap();
    let g = Col::from_fn(3, |i| if i == 1 { 1.0 } else { 0.0 });
    assert_eq!(dual_norm(&t, &g), f64::INFINITY);
    assert_eq!(t.plus_norm(&g), f64::INFINITY);
    assert!(duality_map(&t, &g).is_err());
}

#[test]
fn rejects_bad_inputs() {
    let basis = Mat::<f64>::identity(2, 2);
    assert!(FiniteQuasiTriple::new(basis.clone(), Mat::zeros(2, 2)).is_err());
    let dep = Mat::from_fn(3, 2, |i, _| i as f64);
    assert!(FiniteQuasiTriple::new(dep, Mat::identity(2, 2)).is_err());
    let t = FiniteQuasiTriple::with_gram(Mat::identity(2, 2)).unwrap();
    assert!(transform_triple(&t, &Mat::zeros(2, 2)).is_err());
    assert!(dual_norm(&t, &Col::zeros(3)).is_nan());
}
