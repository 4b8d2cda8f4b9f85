use phsim_core::boundary::{
    assemble_traces, boundary_geometry, face_id, kernel_identity_check, parse_face_name,
    pointwise_projector,
};
use phsim_core::linalg;
use phsim_core::selftest::builtin_tuples;
use phsim_core::{l_nu, BoundaryPart, BoundarySplitting, BoxGrid, MatrixTuple};
use proptest::prelude::*;

fn unit_normal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3).prop_filter_map("nonzero", |v| {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        (n > 1e-3).then(|| v.iter().map(|a| a / n).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_idempotent_and_symmetric(idx in 0usize..6, nu in unit_normal()) {
        let l = builtin_tuples().swap_remove(idx).1;
        let ln = l_nu(&l, &nu[..l.dim()]).unwrap();
        let p = pointwise_projector(&ln);
        let pp = &p * &p;
        prop_assert!(linalg::max_abs((&pp - &p).as_ref()) <= 1e-12);
        prop_assert!(linalg::asymmetry(p.as_ref()) <= 1e-12);
        // P L_ν = L_ν
        prop_assert!(linalg::max_abs((&p * &ln - &ln).as_ref()) <= 1e-12);
        prop_assert!(kernel_identity_check(&l, &nu[..l.dim()]).unwrap());
    }

    #[test]
    fn split_projectors_add_up(faces in prop::collection::vec(any::<bool>(), 4)) {
        let grid = BoxGrid::unit(2, 5).unwrap();
        let geom = boundary_geometry(&grid);
        let ids: Vec<usize> = (0..4).filter(|&f| faces[f]).collect();
        let split = BoundarySplitting::from_faces(&geom, &ids).unwrap();
        let tr = assemble_traces(&MatrixTuple::div_grad(2), &grid, &split).unwrap();
        let sum = &tr.pi_gamma0 + &tr.pi_gamma1;
        let diff = linalg::to_dense(&sum) - linalg::to_dense(&tr.pi_boundary);
        prop_assert!(linalg::max_abs(diff.as_ref()) <= 1e-14);
    }
}

#[test]
fn face_entries_cover_corners_once_per_face() {
    let grid = BoxGrid::unit(3, 4).unwrap();
    let geom = boundary_geometry(&grid);
    assert_eq!(geom.face_count(), 6);
    assert_eq!(geom.len(), 6 * 16);
    let w: f64 = geom.entries().iter().map(|e| e.weight).sum();
    assert!((w - 6.0).abs() < 1e-13);
    for e in geom.entries() {
        let n: f64 = e.normal.iter().map(|v| v * v).sum();
        assert_eq!(n, 1.0);
        assert_eq!(e.normal[e.axis], f64::from(e.sign));
    }
}

#[test]
fn face_names_roundtrip() {
    for axis in 0..3 {
        for sign in [-1i8, 1] {
            let f = face_id(axis, sign);
            let name = phsim_core::boundary::face_name(f);
            assert_eq!(parse_face_name(&name, 3), Some(f));
        }
    }
    assert_eq!(parse_face_name("z+", 2), None);
    assert_eq!(parse_face_name("q-", 2), None);
}

#[test]
fn splitting_validation() {
    let grid = BoxGrid::unit(2, 4).unwrap();
    let geom = boundary_geometry(&grid);
    assert!(BoundarySplitting::from_faces(&geom, &[7]).is_err());
    let short = BoundarySplitting::per_entry(vec![BoundaryPart::Gamma1; 3]);
    assert!(short.validate(&geom).is_err());
    let all = BoundarySplitting::all(&geom, BoundaryPart::Gamma1);
    assert!(all.validate(&geom).is_ok());
    assert!(all.indices(BoundaryPart::Gamma0).is_empty());
}
