use faer::{Col, Mat};
use phsim_core::bc::{
    check_contraction_conditions, check_relation_conditions, spec_verdict, BcForm,
};
use phsim_core::boundary::{boundary_geometry, parse_face_name};
use phsim_core::examples::{
    maxwell_default, mindlin_default, swap_counterexample, wave_default, ExampleSystem,
};
use phsim_core::linalg;
use phsim_core::selftest::{random_col, random_mat, scattering_form};
use phsim_core::system::{
    assemble_colligation, generator_check, impedance_balance_residual, inverse_scattering,
    power_balance_scale, project_onto_kernel, reconstruction_skew_residual,
};
use phsim_core::{
    build_block_tuple, BoundaryConditionSpec, BoundaryPart, BoundarySplitting, BoxGrid, Colligation,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn port(sys: &ExampleSystem, grid: &BoxGrid, faces: &[&str]) -> Colligation {
    let ids: Vec<usize> = faces
        .iter()
        .map(|f| parse_face_name(f, grid.dim()).unwrap())
        .collect();
    let split = BoundarySplitting::from_faces(&boundary_geometry(grid), &ids).unwrap();
    sys.colligation(grid, &split).unwrap()
}

fn line() -> Colligation {
    port(
        &wave_default(1).unwrap(),
        &BoxGrid::unit(1, 9).unwrap(),
        &["x-", "x+"],
    )
}

fn examples() -> Vec<(&'static str, Colligation)> {
    vec![
        (
            "wave",
            port(
                &wave_default(2).unwrap(),
                &BoxGrid::unit(2, 6).unwrap(),
                &["x+", "y-"],
            ),
        ),
        (
            "maxwell",
            port(
                &maxwell_default(0.0).unwrap(),
                &BoxGrid::unit(3, 4).unwrap(),
                &["z+"],
            ),
        ),
        (
            "mindlin",
            port(
                &mindlin_default().unwrap(),
                &BoxGrid::unit(2, 5).unwrap(),
                &["x-"],
            ),
        ),
        ("swap", {
            let grid = BoxGrid::unit(1, 8).unwrap();
            port(&swap_counterexample().unwrap(), &grid, &["x-", "x+"])
        }),
    ]
}

fn clamped_state(c: &Colligation, rng: &mut ChaCha8Rng) -> Col<f64> {
    let x = random_col(rng, c.state_dim());
    let clamp = c.clamp_constraints().unwrap();
    if clamp.is_empty() {
        x
    } else {
        project_onto_kernel(&c.m_x, &clamp.rows, &x).unwrap()
    }
}

/// `A (I + N)` style pair: `W1 = A`, `W2 = A M` with `sym M ⪰ 0`.
fn passing_w(rng: &mut ChaCha8Rng, b: usize) -> (Mat<f64>, Mat<f64>) {
    let a = random_mat(rng, b, b) + Mat::<f64>::identity(b, b) * faer::Scale(2.0);
    let s = random_mat(rng, b, b);
    let k = random_mat(rng, b, b);
    let m = &s * s.transpose() + (&k - k.transpose());
    let w2 = &a * &m;
    (a, w2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn passing_contraction_conditions_give_dissipative_generator(seed in any::<u64>()) {
        let c = line();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w1, w2) = passing_w(&mut rng, c.boundary_dim());
        let spec = BoundaryConditionSpec::new(
            BcForm::W,
            linalg::to_sparse(w1.as_ref()),
            linalg::to_sparse(w2.as_ref()),
        ).unwrap();
        prop_assert!(check_contraction_conditions(&spec).verdict);
        let rep = generator_check(&c, &spec).unwrap();
        prop_assert!(rep.dissipative, "max sym eig {:e}", rep.max_sym_eig);
        prop_assert!(rep.contractive);
    }

    #[test]
    fn w_and_v_verdicts_agree_on_impedance(seed in any::<u64>(), b in 1usize..6, shift in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_mat(&mut rng, b, b);
        let k = random_mat(&mut rng, b, b);
        let sym = &s * s.transpose() * faer::Scale(0.5)
            + Mat::<f64>::identity(b, b) * faer::Scale(shift);
        let m = linalg::to_sparse((&sym + (&k - k.transpose())).as_ref());
        let id = linalg::sparse_identity(b);
        let w = BoundaryConditionSpec::new(BcForm::W, id.clone(), m.clone()).unwrap();
        let v = BoundaryConditionSpec::new(BcForm::V, id, m).unwrap();
        let min_eig = linalg::sym_extreme_eigs(sym.as_ref()).0;
        prop_assume!(min_eig.abs() > 1e-6);
        let wv = check_contraction_conditions(&w).verdict;
        let vv = check_relation_conditions(&v).unwrap().verdict;
        prop_assert_eq!(wv, vv);
        prop_assert_eq!(vv, min_eig > 0.0);
    }

    #[test]
    fn scattering_roundtrip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = line();
        let b = c.boundary_dim();
        let a = random_mat(&mut rng, b, b);
        let r = linalg::to_sparse((&a * a.transpose() + Mat::<f64>::identity(b, b)).as_ref());
        let cs = phsim_core::system::scattering_transform(&c, &r).unwrap();
        let (g, k) = inverse_scattering(&cs.g, &cs.k, &r).unwrap();
        let dg = linalg::to_dense(&g) - linalg::to_dense(&c.maps.g);
        let dk = linalg::to_dense(&k) - linalg::to_dense(&c.maps.k);
        let scale = linalg::max_abs(linalg::to_dense(&c.maps.k).as_ref()).max(1.0);
        prop_assert!(linalg::max_abs(dg.as_ref()) <= 1e-12 * scale);
        prop_assert!(linalg::max_abs(dk.as_ref()) <= 1e-12 * scale);
    }
}

#[test]
fn clamp_and_free_on_every_example() {
    for (name, c) in examples() {
        let b = c.boundary_dim();
        for spec in [
            BoundaryConditionSpec::clamp(b),
            BoundaryConditionSpec::free(b),
        ] {
            assert!(spec_verdict(&spec).unwrap(), "{name}");
            let rep = generator_check(&c, &spec).unwrap();
            assert!(rep.dissipative, "{name}: {:e}", rep.max_sym_eig);
            assert!(
                rep.skew_residual <= 1e-11 * rep.operator_norm.max(1.0),
                "{name}: {:e}",
                rep.skew_residual
            );
        }
    }
}

#[test]
fn reconstruction_is_skew() {
    for (name, c) in examples() {
        let r = reconstruction_skew_residual(&c).unwrap();
        assert!(r <= 1e-11, "{name}: {r:e}");
    }
}

#[test]
fn impedance_balance_on_clamped_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, c) in examples() {
        for _ in 0..20 {
            let x = clamped_state(&c, &mut rng);
            let r = impedance_balance_residual(&c, &x);
            assert!(
                r.abs() <= 1e-11 * power_balance_scale(&c, &x).max(1.0),
                "{name}: {r:e}"
            );
        }
    }
}

#[test]
fn scattering_form_on_wave() {
    let sys = wave_default(2).unwrap();
    let c = port(&sys, &BoxGrid::unit(2, 6).unwrap(), &["x+"]);
    let cs = scattering_form(&sys, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let x = clamped_state(&c, &mut rng);
        let r = phsim_core::system::power_balance_residual(&cs, &x).unwrap();
        assert!(r.abs() <= 1e-11 * power_balance_scale(&cs, &x).max(1.0));
    }
}

#[test]
fn p0_does_no_work() {
    let sys = mindlin_default().unwrap();
    let grid = BoxGrid::unit(2, 5).unwrap();
    let split = BoundarySplitting::all(&boundary_geometry(&grid), BoundaryPart::Gamma1);
    let h = sys.hamiltonian_on(&grid).unwrap();
    let m = sys.m();
    let bare = build_block_tuple(sys.structure.tuple(), &Mat::zeros(m, m)).unwrap();
    let with = assemble_colligation(&sys.structure, &h, &grid, &split, &sys.transform).unwrap();
    let without = assemble_colligation(&bare, &h, &grid, &split, &sys.transform).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = random_col(&mut rng, with.state_dim());
        let d = with.power(&x) - without.power(&x);
        assert!(d.abs() <= 1e-12 * with.energy(&x), "{d:e}");
    }
}

#[test]
fn anti_dissipative_impedance_is_rejected() {
    let c = line();
    let b = c.boundary_dim();
    let spec =
        BoundaryConditionSpec::impedance(linalg::scale_sparse(&linalg::sparse_identity(b), -1.0))
            .unwrap();
    let rep = generator_check(&c, &spec).unwrap();
    assert!(!rep.bc_verdict);
    assert!(!rep.dissipative);
    assert!(!rep.contractive);
}

#[test]
fn degenerate_w_pair_fails_injectivity() {
    let id = linalg::sparse_identity(2);
    let minus = linalg::scale_sparse(&id, -1.0);
    let rep =
        check_contraction_conditions(&BoundaryConditionSpec::new(BcForm::W, id, minus).unwrap());
    assert!(!rep.injective);
    assert!(!rep.verdict);
}
