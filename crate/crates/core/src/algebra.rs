//! Matrix tuples `L = (L_1, ..., L_n)`, the block structure matrices
//! `P_i = [[0, L_i], [L_i^T, 0]]`, and pointwise Hamiltonian densities.

use std::fmt;
use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for symmetry/skewness of matrices read from files.
pub const READ_IN_TOL: f64 = 1e-14;

/// Ordered tuple of `n` real `m1 x m2` matrices defining `L_∂ = Σ ∂_i L_i`.
#[derive(Clone, Debug)]
pub struct MatrixTuple {
    m1: usize,
    m2: usize,
    mats: Vec<Mat<f64>>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<Mat<f64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::InvalidArgument("matrix tuple needs n >= 1".into()));
        };
        let (m1, m2) = (first.nrows(), first.ncols());
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidArgument(
                "matrix tuple entries need m1, m2 >= 1".into(),
            ));
        }
        for m in &mats {
            if m.nrows() != m1 {
                return Err(Error::DimensionMismatch {
                    context: "tuple rows",
                    expected: m1,
                    found: m.nrows(),
                });
            }
            if m.ncols() != m2 {
                return Err(Error::DimensionMismatch {
                    context: "tuple columns",
                    expected: m2,
                    found: m.ncols(),
                });
            }
        }
        Ok(Self { m1, m2, mats })
    }

    /// Build from nested row-major arrays, one per spatial direction.
    pub fn from_rows(data: &[Vec<Vec<f64>>]) -> Result<Self> {
        for (k, m) in data.iter().enumerate() {
            let w = m.first().map(|r| r.len()).unwrap_or(0);
            if m.iter().any(|r| r.len() != w) {
                return Err(Error::InvalidArgument(format!("L_{} is ragged", k + 1)));
            }
        }
        Self::new(data.iter().map(|m| linalg::mat_from_rows(m)).collect())
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn mats(&self) -> &[Mat<f64>] {
        &self.mats
    }

    pub fn get(&self, i: usize) -> &Mat<f64> {
        &self.mats[i]
    }

    /// Elementwise-transposed tuple `L^H = (L_i^T)`.
    pub fn adjoint(&self) -> MatrixTuple {
        MatrixTuple {
            m1: self.m2,
            m2: self.m1,
            mats: self.mats.iter().map(|m| m.transpose().to_owned()).collect(),
        }
    }

    /// Divergence/gradient tuple in `n` dimensions: `L_i = e_i^T`.
    pub fn div_grad(n: usize) -> Self {
        let mats = (0..n)
            .map(|i| Mat::from_fn(1, n, |_, j| if j == i { 1.0 } else { 0.0 }))
            .collect();
        Self::new(mats).expect("div/grad tuple")
    }

    /// Rotation tuple in three dimensions: `L_∂ = rot`, `L_ν f = ν × f`.
    pub fn rot() -> Self {
        let l1 = [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
        let l2 = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let l3 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let mk = |a: [[f64; 3]; 3]| Mat::from_fn(3, 3, |i, j| a[i][j]);
        Self::new(vec![mk(l1), mk(l2), mk(l3)]).expect("rot tuple")
    }

    /// Mindlin plate tuple (`n = 2`, `m1 = 3`, `m2 = 5`), read off the
    /// upper-right block of the plate's `P_∂`.
    pub fn mindlin() -> Self {
        let l1 = [
            [0.0, 0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
        ];
        let l2 = [
            [0.0, 0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
        ];
        let mk = |a: [[f64; 5]; 3]| Mat::from_fn(3, 5, |i, j| a[i][j]);
        Self::new(vec![mk(l1), mk(l2)]).expect("mindlin tuple")
    }

    /// One-dimensional scalar tuple `L_1 = [1]`, giving `A = [[0, d/dξ], [d/dξ, 0]]`.
    pub fn scalar_1d() -> Self {
        Self::new(vec![Mat::from_fn(1, 1, |_, _| 1.0)]).expect("1d tuple")
    }
}

/// `P_i = [[0, L_i], [L_i^T, 0]]` together with a skew-symmetric `P_0`.
#[derive(Clone, Debug)]
pub struct StructureMatrices {
    tuple: MatrixTuple,
    p: Vec<Mat<f64>>,
    p0: Mat<f64>,
}

impl StructureMatrices {
    pub fn tuple(&self) -> &MatrixTuple {
        &self.tuple
    }

    pub fn p(&self) -> &[Mat<f64>] {
        &self.p
    }

    pub fn p0(&self) -> &Mat<f64> {
        &self.p0
    }

    pub fn m(&self) -> usize {
        self.tuple.m()
    }

    pub fn dim(&self) -> usize {
        self.tuple.dim()
    }
}

fn check_p0_shape(l: &MatrixTuple, p0: &Mat<f64>) -> Result<()> {
    let m = l.m();
    if p0.nrows() != m {
        return Err(Error::DimensionMismatch {
            context: "P0 rows",
            expected: m,
            found: p0.nrows(),
        });
    }
    if p0.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "P0 columns",
            expected: m,
            found: p0.ncols(),
        });
    }
    Ok(())
}

fn skew_defect(p0: &Mat<f64>) -> f64 {
    let m = p0.nrows();
    let mut d = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            d = d.max((p0[(i, j)] + p0[(j, i)]).abs());
        }
    }
    d
}

fn assemble_blocks(l: &MatrixTuple) -> Vec<Mat<f64>> {
    let (m1, m) = (l.m1(), l.m());
    l.mats()
        .iter()
        .map(|li| {
            Mat::from_fn(m, m, |r, c| {
                if r < m1 && c >= m1 {
                    li[(r, c - m1)]
                } else if r >= m1 && c < m1 {
                    li[(c, r - m1)]
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// Builds the block tuple `P` for a programmatically constructed `P0`, which
/// must be exactly skew-symmetric.
pub fn build_block_tuple(l: &MatrixTuple, p0: &Mat<f64>) -> Result<StructureMatrices> {
    check_p0_shape(l, p0)?;
    let defect = skew_defect(p0);
    if defect > 0.0 {
        return Err(Error::NotSkew { defect });
    }
    Ok(StructureMatrices {
        tuple: l.clone(),
        p: assemble_blocks(l),
        p0: p0.clone(),
    })
}

/// Same as [`build_block_tuple`] but tolerates rounding in `P0` read from a
/// file (`READ_IN_TOL` relative to `max |P0|`).
pub fn build_block_tuple_from_data(l: &MatrixTuple, p0: &Mat<f64>) -> Result<StructureMatrices> {
    check_p0_shape(l, p0)?;
    let defect = skew_defect(p0);
    if defect > READ_IN_TOL * linalg::max_abs(p0.as_ref()).max(1.0) {
        return Err(Error::NotSkew { defect });
    }
    Ok(StructureMatrices {
        tuple: l.clone(),
        p: assemble_blocks(l),
        p0: p0.clone(),
    })
}

/// `L_ν = Σ ν_i L_i`.
pub fn l_nu(l: &MatrixTuple, nu: &[f64]) -> Result<Mat<f64>> {
    if nu.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            context: "normal vector length",
            expected: l.dim(),
            found: nu.len(),
        });
    }
    let mut out = Mat::<f64>::zeros(l.m1(), l.m2());
    for (li, &ni) in l.mats().iter().zip(nu) {
        if ni != 0.0 {
            out = &out + li * faer::Scale(ni);
        }
    }
    Ok(out)
}

/// Pointwise evaluator `ζ ↦ H(ζ)`.
pub type MatrixField = Arc<dyn Fn(&[f64]) -> Mat<f64> + Send + Sync>;

/// Hamiltonian density with its declared uniform spectral bounds `c I ≤ H ≤ C I`.
#[derive(Clone)]
pub struct HamiltonianDensitySpec {
    evaluator: MatrixField,
    lower: f64,
    upper: f64,
    size: usize,
}

impl fmt::Debug for HamiltonianDensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianDensitySpec")
            .field("size", &self.size)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl HamiltonianDensitySpec {
    pub fn new(size: usize, evaluator: MatrixField, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian bounds need 0 < c <= C, got c = {lower}, C = {upper}"
            )));
        }
        Ok(Self {
            evaluator,
            lower,
            upper,
            size,
        })
    }

    /// Constant density; the bounds are its extreme eigenvalues.
    pub fn constant(h: Mat<f64>) -> Result<Self> {
        let (lo, hi) = linalg::sym_extreme_eigs(h.as_ref());
        let size = h.nrows();
        Self::new(
            size,
            Arc::new(move |_| h.clone()),
            lo.max(f64::MIN_POSITIVE),
            hi.max(lo),
        )
    }

    /// Density whose declared bounds are the extreme eigenvalues over
    /// `points`; fails unless every sample is positive definite.
    pub fn sampled(size: usize, evaluator: MatrixField, points: &[Vec<f64>]) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for z in points {
            let h = evaluator(z);
            if h.nrows() != size || h.ncols() != size {
                return Err(Error::DimensionMismatch {
                    context: "Hamiltonian density",
                    expected: size,
                    found: h.nrows(),
                });
            }
            let (a, b) = linalg::sym_extreme_eigs(h.as_ref());
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if !(lo > 0.0) {
            return Err(Error::NotSpd(format!(
                "Hamiltonian density (min eigenvalue {lo:e})"
            )));
        }
        Self::new(size, evaluator, lo, hi)
    }

    pub fn identity(m: usize) -> Self {
        Self::constant(Mat::identity(m, m)).expect("identity density")
    }

    pub fn eval(&self, zeta: &[f64]) -> Mat<f64> {
        (self.evaluator)(zeta)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointEigenRange {
    pub min_eig: f64,
    pub max_eig: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub points: Vec<PointEigenRange>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub pass: bool,
}

/// Samples `H` at every point and checks symmetry and `c ≤ λ ≤ C` with
/// tolerance `1e-12 · C`.
pub fn validate_hamiltonian(
    spec: &HamiltonianDensitySpec,
    sample_points: &[Vec<f64>],
) -> Result<ValidationReport> {
    if sample_points.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let tol = 1e-12 * spec.upper();
    let mut points = Vec::with_capacity(sample_points.len());
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in sample_points {
        let h = spec.eval(z);
        if h.nrows() != spec.size() || h.ncols() != spec.size() {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian density",
                expected: spec.size(),
                found: h.nrows(),
            });
        }
        let defect = linalg::asymmetry(h.as_ref());
        if defect > 1e-12 * linalg::max_abs(h.as_ref()) {
            return Err(Error::NotSymmetric {
                location: format!("{z:?}"),
                defect,
            });
        }
        let (lo, hi) = linalg::sym_extreme_eigs(h.as_ref());
        gmin = gmin.min(lo);
        gmax = gmax.max(hi);
        points.push(PointEigenRange {
            min_eig: lo,
            max_eig: hi,
        });
    }
    let pass = gmin >= spec.lower() - tol && gmax <= spec.upper() + tol;
    Ok(ValidationReport {
        points,
        min_eig: gmin,
        max_eig: gmax,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> Mat<f64> {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { 0.0 })
    }

    #[test]
    fn div_grad_block_p1() {
        let l = MatrixTuple::div_grad(3);
        let s = build_block_tuple(&l, &Mat::zeros(4, 4)).unwrap();
        let expected = [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.p()[0][(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn rot_blocks_use_transpose_equal_minus() {
        let l = MatrixTuple::rot();
        for li in l.mats() {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(li[(j, i)], -li[(i, j)]);
                }
            }
        }
        let s = build_block_tuple(&l, &Mat::zeros(6, 6)).unwrap();
        let p1 = &s.p()[0];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p1[(i, 3 + j)], l.get(0)[(i, j)]);
                assert_eq!(p1[(3 + i, j)], -l.get(0)[(i, j)]);
            }
        }
    }

    #[test]
    fn rejects_bad_p0() {
        let l = MatrixTuple::div_grad(2);
        assert!(matches!(
            build_block_tuple(&l, &Mat::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut p0 = Mat::<f64>::zeros(3, 3);
        p0[(0, 1)] = 1.0;
        assert!(matches!(
            build_block_tuple(&l, &p0),
            Err(Error::NotSkew { .. })
        ));
        p0[(1, 0)] = -1.0;
        assert!(build_block_tuple(&l, &p0).is_ok());
        p0[(1, 0)] = -1.0 + 1e-16;
        assert!(build_block_tuple(&l, &p0).is_err());
        assert!(build_block_tuple_from_data(&l, &p0).is_ok());
    }

    #[test]
    fn l_nu_examples() {
        let dg = MatrixTuple::div_grad(3);
        let v = l_nu(&dg, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!((v[(0, 0)], v[(0, 1)], v[(0, 2)]), (0.0, 0.0, 1.0));

        let rot = l_nu(&MatrixTuple::rot(), &[0.0, 0.0, 1.0]).unwrap();
        let expected = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(rot[(i, j)], expected[i][j]);
            }
        }
        let z = l_nu(&MatrixTuple::mindlin(), &[0.0, 0.0]).unwrap();
        assert_eq!(linalg::max_abs(z.as_ref()), 0.0);
        assert!(matches!(
            l_nu(&dg, &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rot_l_nu_is_cross_product() {
        let nu = [0.6, 0.0, 0.8];
        let f = [1.0, -2.0, 0.5];
        let m = l_nu(&MatrixTuple::rot(), &nu).unwrap();
        let cross = [
            nu[1] * f[2] - nu[2] * f[1],
            nu[2] * f[0] - nu[0] * f[2],
            nu[0] * f[1] - nu[1] * f[0],
        ];
        for i in 0..3 {
            let v: f64 = (0..3).map(|j| m[(i, j)] * f[j]).sum();
            assert!((v - cross[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn hamiltonian_validation() {
        let id = HamiltonianDensitySpec::identity(3);
        let pts = vec![vec![0.0, 0.0], vec![0.5, 1.0]];
        assert!(validate_hamiltonian(&id, &pts).unwrap().pass);

        // wave density diag(1/rho, T) with rho = 1, T = 2 I on c = 1, C = 2
        let wave =
            HamiltonianDensitySpec::new(3, Arc::new(|_: &[f64]| diag(&[1.0, 2.0, 2.0])), 1.0, 2.0)
                .unwrap();
        let grid_pts: Vec<Vec<f64>> = (0..9)
            .map(|k| vec![(k % 3) as f64 * 0.5, (k / 3) as f64 * 0.5])
            .collect();
        assert!(validate_hamiltonian(&wave, &grid_pts).unwrap().pass);

        let indefinite =
            HamiltonianDensitySpec::new(2, Arc::new(|_: &[f64]| diag(&[1.0, -1.0])), 0.5, 2.0)
                .unwrap();
        let r = validate_hamiltonian(&indefinite, &pts).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_eig, -1.0);

        let skewed = HamiltonianDensitySpec::new(
            2,
            Arc::new(|_: &[f64]| linalg::mat_from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]])),
            0.5,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            validate_hamiltonian(&skewed, &pts),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(validate_hamiltonian(&id, &[]).is_err());
    }

    fn tuples() -> Vec<MatrixTuple> {
        vec![
            MatrixTuple::div_grad(1),
            MatrixTuple::div_grad(2),
            MatrixTuple::div_grad(3),
            MatrixTuple::rot(),
            MatrixTuple::mindlin(),
            MatrixTuple::scalar_1d(),
        ]
    }

    proptest! {
        #[test]
        fn assembled_normal_block_matches_block_of_l_nu(
            which in 0usize..6,
            raw in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let l = &tuples()[which];
            let n = l.dim();
            let norm: f64 = raw[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let nu: Vec<f64> = raw[..n].iter().map(|v| v / norm).collect();
            let s = build_block_tuple(l, &Mat::zeros(l.m(), l.m())).unwrap();
            let mut p_nu = Mat::<f64>::zeros(l.m(), l.m());
            for (pi, ni) in s.p().iter().zip(&nu) {
                p_nu = &p_nu + pi * faer::Scale(*ni);
            }
            let ln = l_nu(l, &nu).unwrap();
            let block = assemble_blocks(&MatrixTuple::new(vec![ln]).unwrap());
            for i in 0..l.m() {
                for j in 0..l.m() {
                    prop_assert_eq!(p_nu[(i, j)], block[0][(i, j)]);
                }
            }
            for pi in s.p() {
                prop_assert_eq!(linalg::asymmetry(pi.as_ref()), 0.0);
            }
        }

        #[test]
        fn l_nu_is_linear(
            which in 0usize..6,
            a in -4i32..4, b in -4i32..4,
            v1 in proptest::collection::vec(-8i32..8, 3),
            v2 in proptest::collection::vec(-8i32..8, 3),
        ) {
            // integer-valued inputs keep the comparison exact
            let l = &tuples()[which];
            let n = l.dim();
            let n1: Vec<f64> = v1[..n].iter().map(|&x| x as f64).collect();
            let n2: Vec<f64> = v2[..n].iter().map(|&x| x as f64).collect();
            let comb: Vec<f64> = n1.iter().zip(&n2).map(|(x, y)| a as f64 * x + b as f64 * y).collect();
            let lhs = l_nu(l, &comb).unwrap();
            let rhs = &l_nu(l, &n1).unwrap() * faer::Scale(a as f64) + &l_nu(l, &n2).unwrap() * faer::Scale(b as f64);
            prop_assert_eq!(linalg::max_abs((&lhs - &rhs).as_ref()), 0.0);
        }
    }
}
