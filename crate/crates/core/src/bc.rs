//! Boundary coordinates, boundary-condition parameterizations and their
//! dissipativity tests, and the constraint rows that realize them.
//!
//! Γ₁ boundary values are expressed in coordinates that are orthonormal for
//! the boundary port pairing. At a Γ₁ entry with weight `w` and an
//! orthonormal basis `U` of `ran L_ν`, the input and output coordinates are
//!
//! ```text
//! G x = s T_r U^T (Hx)_1,      K x = s T_r^{-T} U^T L_ν (Hx)_2,
//! ```
//!
//! with `s = sqrt(w / 2)` and `T_r = U^T T U`. With the energy
//! `E = x^T M_X x`, `M_X = ½ (Q ⊗ I) H`, every clamped state then satisfies
//! `2 <L_p x, x>_M = 2 <G x, K x>`, the boundary Gram is the identity, and all
//! adjoints below are plain transposes.

use std::fmt;
use std::sync::Arc;

use faer::{Col, Mat};

use crate::algebra::HamiltonianDensitySpec;
use crate::boundary::{BoundaryPart, TraceOperators, RANGE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};
use crate::sbpgrid::BoxGrid;

/// Pointwise boundary matrix field `(ζ, ν) ↦ T(ζ, ν)` (m1 x m1).
pub type BoundaryField = Arc<dyn Fn(&[f64], &[f64]) -> Mat<f64> + Send + Sync>;

/// Invertible pointwise transformation of the Γ₁ boundary values.
#[derive(Clone, Default)]
pub enum BoundaryTransform {
    #[default]
    Identity,
    Pointwise(BoundaryField),
}

impl fmt::Debug for BoundaryTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("Identity"),
            Self::Pointwise(_) => f.write_str("Pointwise(..)"),
        }
    }
}

impl BoundaryTransform {
    /// Multiplication by a scalar field.
    pub fn scalar(field: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, m1: usize) -> Self {
        Self::Pointwise(Arc::new(move |z, _| {
            let a = field(z);
            Mat::from_fn(m1, m1, |i, j| if i == j { a } else { 0.0 })
        }))
    }

    pub fn eval(&self, zeta: &[f64], nu: &[f64], m1: usize) -> Mat<f64> {
        match self {
            Self::Identity => Mat::identity(m1, m1),
            Self::Pointwise(f) => f(zeta, nu),
        }
    }
}

/// Coordinates of one Γ₁ face-node entry inside the boundary space.
#[derive(Clone, Debug)]
pub struct BoundaryBlock {
    pub entry: usize,
    pub node: usize,
    pub offset: usize,
    pub basis: Mat<f64>,
    pub scale: f64,
    pub transform: Mat<f64>,
}

impl BoundaryBlock {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// The Γ₁ boundary maps `G`, `K` and the Γ₀ clamp rows, all acting on states.
#[derive(Clone, Debug)]
pub struct BoundaryMaps {
    pub blocks: Vec<BoundaryBlock>,
    pub dim: usize,
    pub g: SpMat,
    pub k: SpMat,
    pub clamp: SpMat,
}

impl BoundaryMaps {
    pub fn new(
        traces: &TraceOperators,
        h: &HamiltonianDensitySpec,
        grid: &BoxGrid,
        transform: &BoundaryTransform,
    ) -> Result<Self> {
        let (m1, m2) = (traces.m1, traces.m2);
        let m = m1 + m2;
        if h.size() != m {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian size vs m",
                expected: m,
                found: h.size(),
            });
        }
        let nstate = grid.node_count() * m;
        let mut blocks = Vec::new();
        let (mut g, mut k, mut clamp) = (Vec::new(), Vec::new(), Vec::new());
        let mut offset = 0;
        let mut nclamp = 0;
        for (i, e) in traces.geometry.entries().iter().enumerate() {
            let u = linalg::column_space(traces.lnu[i].as_ref(), RANGE_TOL);
            let r = u.ncols();
            if r == 0 {
                continue;
            }
            let z = grid.coords(e.node);
            let hn = h.eval(&z);
            let h1 = hn.subrows(0, m1);
            let h2 = hn.subrows(m1, m2);
            match traces.splitting.labels()[i] {
                BoundaryPart::Gamma0 => {
                    let rows = u.transpose() * h1;
                    push_rows(&mut clamp, nclamp, e.node * m, &rows);
                    nclamp += r;
                }
                BoundaryPart::Gamma1 => {
                    let t = transform.eval(&z, &e.normal, m1);
                    if t.nrows() != m1 || t.ncols() != m1 {
                        return Err(Error::DimensionMismatch {
                            context: "boundary transform size",
                            expected: m1,
                            found: t.nrows(),
                        });
                    }
                    let tu = &t * &u;
                    let leak = &tu - &u * (u.transpose() * &tu);
                    if linalg::max_abs(leak.as_ref()) > 1e-10 * linalg::max_abs(t.as_ref()) {
                        return Err(Error::InvalidArgument(format!(
                            "boundary transform does not preserve ran L_nu at entry {i}"
                        )));
                    }
                    let tr = u.transpose() * &tu;
                    let tr_inv_t = linalg::inverse(tr.as_ref())?.transpose().to_owned();
                    let s = (0.5 * e.weight).sqrt();
                    let grow = (&tr * u.transpose()) * h1 * faer::Scale(s);
                    let krow = (&tr_inv_t * u.transpose() * &traces.lnu[i]) * h2 * faer::Scale(s);
                    push_rows(&mut g, offset, e.node * m, &grow);
                    push_rows(&mut k, offset, e.node * m, &krow);
                    blocks.push(BoundaryBlock {
                        entry: i,
                        node: e.node,
                        offset,
                        basis: u,
                        scale: s,
                        transform: tr,
                    });
                    offset += r;
                }
            }
        }
        Ok(Self {
            blocks,
            dim: offset,
            g: linalg::sparse_from_triplets(offset, nstate, &g),
            k: linalg::sparse_from_triplets(offset, nstate, &k),
            clamp: linalg::sparse_from_triplets(nclamp, nstate, &clamp),
        })
    }

    /// Γ₁ boundary values `(G x, K x)`.
    pub fn values(&self, x: &Col<f64>) -> (Col<f64>, Col<f64>) {
        (linalg::spmv(&self.g, x), linalg::spmv(&self.k, x))
    }
}

fn push_rows(trips: &mut Vec<(usize, usize, f64)>, row0: usize, col0: usize, block: &Mat<f64>) {
    for r in 0..block.nrows() {
        for c in 0..block.ncols() {
            let v = block[(r, c)];
            if v != 0.0 {
                trips.push((row0 + r, col0 + c, v));
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcForm {
    /// `W1 G + W2 K = 0`, judged by the contraction conditions.
    W,
    /// `V1 G + V2 K = 0`, judged by the relation conditions.
    V,
}

/// Boundary condition `A1 G x + A2 K x = s` on the Γ₁ boundary space.
#[derive(Clone, Debug)]
pub struct BoundaryConditionSpec {
    pub form: BcForm,
    pub a1: SpMat,
    pub a2: SpMat,
    pub transform: BoundaryTransform,
    /// Scattering weight `R` when the condition is the scattering input map.
    pub r: Option<SpMat>,
}

impl BoundaryConditionSpec {
    pub fn new(form: BcForm, a1: SpMat, a2: SpMat) -> Result<Self> {
        if a1.nrows() != a2.nrows() || a1.ncols() != a2.ncols() {
            return Err(Error::DimensionMismatch {
                context: "boundary condition matrices",
                expected: a1.nrows() * a1.ncols(),
                found: a2.nrows() * a2.ncols(),
            });
        }
        Ok(Self {
            form,
            a1,
            a2,
            transform: BoundaryTransform::Identity,
            r: None,
        })
    }

    pub fn with_transform(mut self, t: BoundaryTransform) -> Self {
        self.transform = t;
        self
    }

    /// `G x = 0` on Γ₁.
    pub fn clamp(b: usize) -> Self {
        Self::new(
            BcForm::W,
            linalg::sparse_identity(b),
            linalg::sparse_zeros(b, b),
        )
        .unwrap()
    }

    /// `K x = 0` on Γ₁ (energy preserving).
    pub fn free(b: usize) -> Self {
        Self::new(
            BcForm::W,
            linalg::sparse_zeros(b, b),
            linalg::sparse_identity(b),
        )
        .unwrap()
    }

    /// `G x + M K x = 0`.
    pub fn impedance(m: SpMat) -> Result<Self> {
        Self::new(BcForm::V, linalg::sparse_identity(m.nrows()), m)
    }

    /// Scattering input rows `(G x + R K x) / sqrt 2 = u`.
    pub fn scattering(r: SpMat) -> Result<Self> {
        if !linalg::is_spd(linalg::to_dense(&r).as_ref(), 1e-12) {
            return Err(Error::NotSpd("scattering weight R".into()));
        }
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = Self::new(
            BcForm::V,
            linalg::scale_sparse(&linalg::sparse_identity(r.nrows()), c),
            linalg::scale_sparse(&r, c),
        )?;
        s.r = Some(r);
        Ok(s)
    }

    pub fn rows(&self) -> usize {
        self.a1.nrows()
    }

    pub fn boundary_dim(&self) -> usize {
        self.a1.ncols()
    }

    pub fn validate(&self, b: usize) -> Result<()> {
        if self.boundary_dim() != b {
            return Err(Error::DimensionMismatch {
                context: "boundary condition columns vs boundary dimension",
                expected: b,
                found: self.boundary_dim(),
            });
        }
        if let Some(r) = &self.r {
            if r.nrows() != b || r.ncols() != b {
                return Err(Error::DimensionMismatch {
                    context: "scattering weight size",
                    expected: b,
                    found: r.nrows(),
                });
            }
            if !linalg::is_spd(linalg::to_dense(r).as_ref(), 1e-12) {
                return Err(Error::NotSpd("scattering weight R".into()));
            }
        }
        Ok(())
    }

    fn dense(&self) -> (Mat<f64>, Mat<f64>) {
        (linalg::to_dense(&self.a1), linalg::to_dense(&self.a2))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub range_ok: bool,
    pub injective: bool,
    pub inequality_ok: bool,
    pub min_eig: f64,
    pub verdict: bool,
}

/// Range, injectivity and sign conditions for `W1 G + W2 K = 0`.
pub fn check_contraction_conditions(spec: &BoundaryConditionSpec) -> ContractionReport {
    let (w1, w2) = spec.dense();
    let sum = &w1 + &w2;
    let diff = &w1 - &w2;
    let b = sum.ncols();

    let injective = sum.nrows() >= b && linalg::rank(sum.as_ref(), 1e-12) == b;
    let range_ok = range_contains(&sum, &diff);
    let sym = &w1 * w2.transpose() + &w2 * w1.transpose();
    let min_eig = linalg::sym_extreme_eigs(sym.as_ref()).0;
    let scale = linalg::max_abs(sym.as_ref()).max(1.0);
    let inequality_ok = min_eig >= -1e-12 * scale;
    ContractionReport {
        range_ok,
        injective,
        inequality_ok,
        min_eig,
        verdict: range_ok && injective && inequality_ok,
    }
}

/// Every column of `b` lies in `ran a` (least-squares residual per column).
fn range_contains(a: &Mat<f64>, b: &Mat<f64>) -> bool {
    if b.ncols() == 0 {
        return true;
    }
    let q = linalg::column_space(a.as_ref(), 1e-12);
    let resid = b - &q * (q.transpose() * b);
    (0..b.ncols()).all(|j| {
        let r = resid.col(j).norm_l2();
        r <= 1e-10 * b.col(j).norm_l2().max(1.0)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    pub dissipative: bool,
    pub maximal: bool,
    pub max_eig: f64,
    pub dim: usize,
}

/// Subspace of pairs `(q, p)` spanned by the columns of `[Q; P]`.
#[derive(Clone, Debug)]
pub struct DissipativeRelation {
    basis: Mat<f64>,
    gram: Mat<f64>,
}

impl DissipativeRelation {
    pub fn new(basis: Mat<f64>, gram: Mat<f64>) -> Result<Self> {
        let b = gram.nrows();
        if basis.nrows() != 2 * b || gram.ncols() != b {
            return Err(Error::DimensionMismatch {
                context: "relation basis rows vs 2 b",
                expected: 2 * b,
                found: basis.nrows(),
            });
        }
        Ok(Self { basis, gram })
    }

    /// `ker [A1 A2]` with the identity pairing.
    pub fn kernel_of(a1: &Mat<f64>, a2: &Mat<f64>) -> Result<Self> {
        let b = a1.ncols();
        let stacked = Mat::from_fn(a1.nrows(), 2 * b, |i, j| {
            if j < b {
                a1[(i, j)]
            } else {
                a2[(i, j - b)]
            }
        });
        Self::new(
            linalg::null_space(stacked.as_ref(), 1e-12),
            Mat::identity(b, b),
        )
    }

    /// Graph `{(x, A x)}`.
    pub fn graph(a: &Mat<f64>) -> Result<Self> {
        let b = a.ncols();
        let basis = Mat::from_fn(2 * b, b, |i, j| {
            if i < b {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            } else {
                a[(i - b, j)]
            }
        });
        Self::new(basis, Mat::identity(b, b))
    }

    pub fn boundary_dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn basis(&self) -> &Mat<f64> {
        &self.basis
    }

    /// `mul`, the set of `p` paired with `q = 0`.
    pub fn multivalued_part(&self) -> Mat<f64> {
        let b = self.boundary_dim();
        let qpart = self.basis.subrows(0, b).to_owned();
        let kern = linalg::null_space(qpart.as_ref(), 1e-12);
        let p = self.basis.subrows(b, b) * &kern;
        linalg::column_space(p.as_ref(), 1e-12)
    }

    /// `ker`, the set of `q` paired with `p = 0`.
    pub fn kernel(&self) -> Mat<f64> {
        let b = self.boundary_dim();
        let ppart = self.basis.subrows(b, b).to_owned();
        let kern = linalg::null_space(ppart.as_ref(), 1e-12);
        let q = self.basis.subrows(0, b) * &kern;
        linalg::column_space(q.as_ref(), 1e-12)
    }

    pub fn domain(&self) -> Mat<f64> {
        linalg::column_space(self.basis.subrows(0, self.boundary_dim()), 1e-12)
    }

    pub fn range(&self) -> Mat<f64> {
        let b = self.boundary_dim();
        linalg::column_space(self.basis.subrows(b, b), 1e-12)
    }
}

/// `max Re <q, p>` over the unit sphere of the relation, and the dimension test.
pub fn relation_dissipativity(rel: &DissipativeRelation) -> RelationReport {
    let b = rel.boundary_dim();
    let q = linalg::column_space(rel.basis.as_ref(), 1e-12);
    let dim = q.ncols();
    if dim == 0 {
        return RelationReport {
            dissipative: true,
            maximal: b == 0,
            max_eig: 0.0,
            dim,
        };
    }
    let form = q.subrows(0, b).transpose() * &rel.gram * q.subrows(b, b);
    let s = linalg::symmetrize(form.as_ref());
    let max_eig = linalg::sym_extreme_eigs(s.as_ref()).1;
    let scale = linalg::spectral_norm(rel.gram.as_ref()).max(1.0);
    let dissipative = max_eig <= 1e-12 * scale;
    RelationReport {
        dissipative,
        maximal: dissipative && dim == b,
        max_eig,
        dim,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationConditionsReport {
    /// Closedness across the triple holds automatically in finite dimensions.
    pub closed: bool,
    pub relation: RelationReport,
    pub inequality_ok: bool,
    pub min_eig: f64,
    pub verdict: bool,
}

pub fn check_relation_conditions(spec: &BoundaryConditionSpec) -> Result<RelationConditionsReport> {
    let (v1, v2) = spec.dense();
    let rel = DissipativeRelation::kernel_of(&v1, &v2)?;
    let relation = relation_dissipativity(&rel);
    let sym = &v1 * v2.transpose() + &v2 * v1.transpose();
    let min_eig = linalg::sym_extreme_eigs(sym.as_ref()).0;
    let scale = linalg::max_abs(sym.as_ref()).max(1.0);
    let inequality_ok = min_eig >= -1e-12 * scale;
    Ok(RelationConditionsReport {
        closed: true,
        verdict: relation.dissipative && inequality_ok,
        relation,
        inequality_ok,
        min_eig,
    })
}

/// The verdict appropriate for the spec's form.
pub fn spec_verdict(spec: &BoundaryConditionSpec) -> Result<bool> {
    Ok(match spec.form {
        BcForm::W => check_contraction_conditions(spec).verdict,
        BcForm::V => check_relation_conditions(spec)?.verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Clamp(usize),
    Gamma1(usize),
}

/// Constraint rows `C x = s` after pruning dependent rows.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub rows: SpMat,
    pub kinds: Vec<RowKind>,
    pub gamma1_rows: usize,
    pub dropped: usize,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Right-hand side for Γ₁ data `s` (length `gamma1_rows`); clamp rows get 0.
    pub fn rhs(&self, s: &[f64]) -> Col<f64> {
        Col::from_fn(self.len(), |i| match self.kinds[i] {
            RowKind::Clamp(_) => 0.0,
            RowKind::Gamma1(j) => s[j],
        })
    }

    /// Input-injection selector `S` with `rhs = S u`.
    pub fn selector(&self) -> SpMat {
        let t: Vec<_> = self
            .kinds
            .iter()
            .enumerate()
            .filter_map(|(i, k)| match k {
                RowKind::Gamma1(j) => Some((i, *j, 1.0)),
                RowKind::Clamp(_) => None,
            })
            .collect();
        linalg::sparse_from_triplets(self.len(), self.gamma1_rows, &t)
    }

    pub fn dense(&self) -> Mat<f64> {
        linalg::to_dense(&self.rows)
    }
}

/// Rows `A1 G + A2 K` for `spec`, together with the clamp rows, pruned.
pub fn constraints_from_maps(
    spec: &BoundaryConditionSpec,
    maps: &BoundaryMaps,
) -> Result<ConstraintSet> {
    spec.validate(maps.dim)?;
    let gam = &(&spec.a1 * &maps.g) + &(&spec.a2 * &maps.k);
    assemble_constraints(Some(&gam), &maps.clamp)
}

/// Clamp rows only.
pub fn clamp_constraints(maps: &BoundaryMaps) -> Result<ConstraintSet> {
    assemble_constraints(None, &maps.clamp)
}

/// Stack clamp rows (first, higher priority) above Γ₁ rows and prune. A Γ₁
/// row that depends on clamp rows cannot carry independent data and is
/// dropped, so admissible states always stay clamped.
pub fn assemble_constraints(gamma1: Option<&SpMat>, clamp: &SpMat) -> Result<ConstraintSet> {
    let ncols = clamp.ncols();
    let mut rows: Vec<Vec<(usize, f64)>> = sparse_rows(clamp);
    let mut kinds: Vec<RowKind> = (0..clamp.nrows()).map(RowKind::Clamp).collect();
    let gamma1_rows = gamma1.map_or(0, |g| g.nrows());
    if let Some(g) = gamma1 {
        if g.ncols() != ncols {
            return Err(Error::DimensionMismatch {
                context: "constraint row width",
                expected: ncols,
                found: g.ncols(),
            });
        }
        rows.extend(sparse_rows(g));
        kinds.extend((0..g.nrows()).map(RowKind::Gamma1));
    }

    let keep = prune_rows(&rows, ncols, 1e-12);
    let dropped = rows.len() - keep.len();
    let dropped_inputs = keep_complement(&keep, rows.len())
        .filter(|&i| matches!(kinds[i], RowKind::Gamma1(_)))
        .count();
    if dropped_inputs > 0 {
        log::warn!("pruned {dropped} dependent constraint rows ({dropped_inputs} on Γ₁)");
    } else if dropped > 0 {
        log::debug!("pruned {dropped} dependent clamp rows");
    }
    let mut trips = Vec::new();
    let mut kept_kinds = Vec::with_capacity(keep.len());
    for (new, &old) in keep.iter().enumerate() {
        trips.extend(rows[old].iter().map(|&(c, v)| (new, c, v)));
        kept_kinds.push(kinds[old]);
    }
    Ok(ConstraintSet {
        rows: linalg::sparse_from_triplets(keep.len(), ncols, &trips),
        kinds: kept_kinds,
        gamma1_rows,
        dropped,
    })
}

fn keep_complement(keep: &[usize], n: usize) -> impl Iterator<Item = usize> + '_ {
    (0..n).filter(move |i| keep.binary_search(i).is_err())
}

fn sparse_rows(a: &SpMat) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); a.nrows()];
    for (r, c, v) in linalg::triplets(a) {
        if v != 0.0 {
            rows[r].push((c, v));
        }
    }
    for r in &mut rows {
        r.sort_by_key(|&(c, _)| c);
    }
    rows
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Indices (ascending) of a maximal independent subset of `rows`, preferring
/// earlier rows. Rows are grouped into connected components through shared
/// columns and each component is orthogonalized on its own.
pub fn prune_rows(rows: &[Vec<(usize, f64)>], ncols: usize, tol: f64) -> Vec<usize> {
    let n = rows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut owner = vec![usize::MAX; ncols];
    for (i, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            if owner[c] == usize::MAX {
                owner[c] = i;
            } else {
                let (a, b) = (find(&mut parent, i), find(&mut parent, owner[c]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut keep = Vec::new();
    for members in groups.values() {
        let mut cols: Vec<usize> = members
            .iter()
            .flat_map(|&i| rows[i].iter().map(|&(c, _)| c))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let local = |c: usize| cols.binary_search(&c).unwrap();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for &i in members {
            let mut v = vec![0.0; cols.len()];
            for &(c, x) in &rows[i] {
                v[local(c)] += x;
            }
            let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm0 == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for q in &basis {
                    let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > tol * norm0 {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
                keep.push(i);
            }
        }
    }
    keep.sort_unstable();
    keep
}

/// Constraint rows for `spec` on a split grid, built from the traces.
pub fn constraint_matrix(
    spec: &BoundaryConditionSpec,
    traces: &TraceOperators,
    h: &HamiltonianDensitySpec,
    grid: &BoxGrid,
) -> Result<ConstraintSet> {
    let maps = BoundaryMaps::new(traces, h, grid, &spec.transform)?;
    constraints_from_maps(spec, &maps)
}

/// `M`-orthonormal basis `Q` of `ker C` (`Q^T M Q = I`), dense.
pub fn kernel_basis(rows: &Mat<f64>, m: &Mat<f64>) -> Mat<f64> {
    let n = linalg::null_space(rows.as_ref(), 1e-12);
    if n.ncols() == 0 {
        return n;
    }
    let gram = n.transpose() * m * &n;
    &n * linalg::spd_power(gram.as_ref(), -0.5)
}
