//! Finite-dimensional quasi Gelfand triples.
//!
//! The pivot space is `R^N` with the dot product. The plus space is the span
//! of a basis `B` (N x k) with Gram matrix `G` in basis coordinates, so
//! `||B c||_+^2 = c^T G c`. In finite dimensions the minus norm has the closed
//! form `||g||_- = ||G^{-1/2} B^T g||`.

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::{Col, Mat};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for membership of `g` in `ran B`.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FiniteQuasiTriple {
    basis: Mat<f64>,
    gram: Mat<f64>,
}

impl FiniteQuasiTriple {
    pub fn new(basis: Mat<f64>, gram: Mat<f64>) -> Result<Self> {
        let k = basis.ncols();
        if gram.nrows() != k || gram.ncols() != k {
            return Err(Error::DimensionMismatch {
                context: "Gram size vs basis columns",
                expected: k,
                found: gram.nrows(),
            });
        }
        if k == 0 || k > basis.nrows() {
            return Err(Error::InvalidArgument(format!(
                "basis must have 1..={} columns, got {k}",
                basis.nrows()
            )));
        }
        if linalg::rank(basis.as_ref(), 1e-12) < k {
            return Err(Error::InvalidArgument("basis is rank deficient".into()));
        }
        if !linalg::is_spd(gram.as_ref(), 1e-12) {
            return Err(Error::NotSpd("plus-space Gram".into()));
        }
        Ok(Self {
            basis,
            gram: linalg::symmetrize(gram.as_ref()),
        })
    }

    /// Full-space triple `B = I`.
    pub fn with_gram(gram: Mat<f64>) -> Result<Self> {
        let n = gram.nrows();
        Self::new(Mat::identity(n, n), gram)
    }

    pub fn pivot_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Mat<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    /// `||B c||_+` for plus-space coordinates `c`.
    pub fn plus_norm_coords(&self, c: &Col<f64>) -> f64 {
        linalg::dot(c, &(&self.gram * c)).max(0.0).sqrt()
    }

    /// Plus norm of a pivot vector `f`, or `+inf` when `f` is not in `ran B`.
    pub fn plus_norm(&self, f: &Col<f64>) -> f64 {
        match self.coordinates(f) {
            Some(c) => self.plus_norm_coords(&c),
            None => f64::INFINITY,
        }
    }

    /// Coordinates of `f` in the basis when `f ∈ ran B`.
    pub fn coordinates(&self, f: &Col<f64>) -> Option<Col<f64>> {
        let q = self.basis.qr();
        let c = q.solve_lstsq(f);
        let resid = f - &self.basis * &c;
        let fnorm = f.norm_l2();
        (resid.norm_l2() <= MEMBERSHIP_TOL * fnorm.max(f64::MIN_POSITIVE)).then_some(c)
    }

    /// `B^T g`, the functional `c ↦ <g, B c>` in coordinates.
    fn functional(&self, g: &Col<f64>) -> Col<f64> {
        self.basis.transpose() * g
    }

    fn in_range(&self, g: &Col<f64>) -> bool {
        let q = linalg::column_space(self.basis.as_ref(), 1e-12);
        let proj = &q * (q.transpose() * g);
        (g - &proj).norm_l2() <= MEMBERSHIP_TOL * g.norm_l2()
    }

    /// The minus-side triple: same subspace, norm `||.||_-`.
    pub fn minus_triple(&self) -> Result<Self> {
        let btb = self.basis.transpose() * &self.basis;
        let ginv = linalg::inverse(self.gram.as_ref())?;
        Self::new(self.basis.clone(), &btb * &ginv * &btb)
    }
}

/// `sup_{f ∈ D+} |<g, f>| / ||f||_+`, with `+inf` for `g` outside `ran B`.
pub fn dual_norm(t: &FiniteQuasiTriple, g: &Col<f64>) -> f64 {
    if g.nrows() != t.pivot_dim() {
        return f64::NAN;
    }
    if !t.in_range(g) {
        return f64::INFINITY;
    }
    let ghalf = linalg::spd_power(t.gram.as_ref(), -0.5);
    (&ghalf * t.functional(g)).norm_l2()
}

/// `Ψ g` in plus coordinates: `<Ψ g, f>_+ = <g, f>_0` for all `f ∈ D+`.
pub fn duality_map(t: &FiniteQuasiTriple, g: &Col<f64>) -> Result<Col<f64>> {
    if g.nrows() != t.pivot_dim() {
        return Err(Error::DimensionMismatch {
            context: "dual vector length",
            expected: t.pivot_dim(),
            found: g.nrows(),
        });
    }
    if !dual_norm(t, g).is_finite() {
        return Err(Error::InfiniteNorm);
    }
    let chol = t
        .gram
        .llt(faer::Side::Lower)
        .map_err(|_| Error::NotSpd("plus-space Gram".into()))?;
    Ok(chol.solve(t.functional(g)))
}

/// Triple with plus space `T D+` and `||f||_{Y+} = ||T^{-1} f||_+`.
pub fn transform_triple(t: &FiniteQuasiTriple, tm: &Mat<f64>) -> Result<FiniteQuasiTriple> {
    let n = t.pivot_dim();
    if tm.nrows() != n || tm.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "transformation size",
            expected: n,
            found: tm.nrows(),
        });
    }
    let sv = linalg::singular_values(tm.as_ref());
    let (smax, smin) = (sv[0], sv[n - 1]);
    if smax == 0.0 || smin < 1e-12 * smax {
        return Err(Error::Singular {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    log::debug!("transform_triple: condition number {:e}", smax / smin);
    FiniteQuasiTriple::new(tm * &t.basis, t.gram.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VonNeumannReport {
    /// `max |T^T T - (T^T T)^T|` and the same for `T T^T`.
    pub gram_asymmetry: f64,
    pub cogram_asymmetry: f64,
    pub min_eig_gram: f64,
    pub min_eig_cogram: f64,
    /// Asymmetry of `(I + T^T T)^{-1}` and `(I + T T^T)^{-1}`.
    pub inverse_asymmetry: f64,
    pub pass: bool,
}

pub fn von_neumann_check(tm: &Mat<f64>) -> VonNeumannReport {
    let (p, q) = (tm.nrows(), tm.ncols());
    let ttt = tm.transpose() * tm;
    let tt_t = tm * tm.transpose();
    let a = Mat::<f64>::identity(q, q) + &ttt;
    let b = Mat::<f64>::identity(p, p) + &tt_t;
    let min_a = linalg::sym_extreme_eigs(a.as_ref()).0;
    let min_b = linalg::sym_extreme_eigs(b.as_ref()).0;
    let (inv_a, inv_b) = (linalg::inverse(a.as_ref()), linalg::inverse(b.as_ref()));
    let inverse_asymmetry = match (&inv_a, &inv_b) {
        (Ok(x), Ok(y)) => linalg::asymmetry(x.as_ref()).max(linalg::asymmetry(y.as_ref())),
        _ => f64::INFINITY,
    };
    let gram_asymmetry = linalg::asymmetry(ttt.as_ref());
    let cogram_asymmetry = linalg::asymmetry(tt_t.as_ref());
    let scale = linalg::max_abs(ttt.as_ref()).max(1.0);
    let pass = gram_asymmetry <= 1e-12 * scale
        && cogram_asymmetry <= 1e-12 * scale
        && min_a >= 1.0 - 1e-12 * scale
        && min_b >= 1.0 - 1e-12 * scale
        && inverse_asymmetry <= 1e-10;
    VonNeumannReport {
        gram_asymmetry,
        cogram_asymmetry,
        min_eig_gram: min_a,
        min_eig_cogram: min_b,
        inverse_asymmetry,
        pass,
    }
}
