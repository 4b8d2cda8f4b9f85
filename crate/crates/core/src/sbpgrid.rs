//! Tensor-product box grids and second-order summation-by-parts operators.
//!
//! Every 1D operator satisfies `Hn D + (Hn D)^T = diag(-1, 0, ..., 0, 1)`, so
//! on a tensor grid with the product quadrature the discrete Green identity
//! `<L_∂ f, g> + <f, L_∂^H g> = Σ_faces w <L_ν f, g>` holds up to rounding.

use faer::{Col, Mat};

use crate::algebra::{l_nu, HamiltonianDensitySpec, MatrixTuple, StructureMatrices};
use crate::boundary::boundary_geometry;
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};

/// Axis-aligned box `Π [a_i, b_i]` with `N_i ≥ 3` nodes per axis.
///
/// Nodes are ordered lexicographically with axis 0 varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid {
    counts: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxGrid {
    pub fn new(counts: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        if lower.len() != counts.len() || upper.len() != counts.len() {
            return Err(Error::InvalidGrid(format!(
                "{} axes but {} lower / {} upper extents",
                counts.len(),
                lower.len(),
                upper.len()
            )));
        }
        for (i, &n) in counts.iter().enumerate() {
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} has {n} nodes, need at least 3"
                )));
            }
            if !(upper[i] > lower[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} has empty extent [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self {
            counts,
            lower,
            upper,
        })
    }

    /// `N` nodes per axis on the unit cube `[0, 1]^n`.
    pub fn unit(n: usize, nodes: usize) -> Result<Self> {
        Self::new(vec![nodes; n], vec![0.0; n], vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = node % self.counts[axis];
            node /= self.counts[axis];
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.lower[axis] + i as f64 * self.spacing(axis))
            .collect()
    }

    pub fn all_coords(&self) -> Vec<Vec<f64>> {
        (0..self.node_count()).map(|p| self.coords(p)).collect()
    }

    /// Stride of axis `axis` in the linear node index.
    pub fn stride(&self, axis: usize) -> usize {
        self.counts[axis + 1..].iter().product()
    }

    pub fn operators(&self) -> Vec<SbpOperator1D> {
        (0..self.dim())
            .map(|a| sbp_1d(self.counts[a], self.spacing(a)).expect("validated grid"))
            .collect()
    }

    /// Tensor-product quadrature weight of every node.
    pub fn quadrature(&self) -> Vec<f64> {
        let ops = self.operators();
        (0..self.node_count())
            .map(|p| {
                self.multi_index(p)
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| ops[a].hn[i])
                    .product()
            })
            .collect()
    }
}

/// Classical second-order diagonal-norm SBP operator on `N` nodes.
#[derive(Clone, Debug)]
pub struct SbpOperator1D {
    pub d: Mat<f64>,
    pub hn: Vec<f64>,
}

impl SbpOperator1D {
    pub fn len(&self) -> usize {
        self.hn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hn.is_empty()
    }

    /// Boundary matrix `diag(-1, 0, ..., 0, 1)`.
    pub fn e(&self) -> Mat<f64> {
        let n = self.len();
        Mat::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (i, j) if i == j && i == n - 1 => 1.0,
            _ => 0.0,
        })
    }

    /// Entrywise max of `|Hn D + (Hn D)^T - E|`.
    pub fn sbp_defect(&self) -> f64 {
        let n = self.len();
        let e = self.e();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v = self.hn[i] * self.d[(i, j)] + self.hn[j] * self.d[(j, i)] - e[(i, j)];
                m = m.max(v.abs());
            }
        }
        m
    }
}

pub fn sbp_1d(n: usize, h: f64) -> Result<SbpOperator1D> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "SBP operator needs N >= 3, got {n}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "spacing must be positive, got {h}"
        )));
    }
    let mut d = Mat::<f64>::zeros(n, n);
    d[(0, 0)] = -1.0 / h;
    d[(0, 1)] = 1.0 / h;
    for i in 1..n - 1 {
        d[(i, i - 1)] = -0.5 / h;
        d[(i, i + 1)] = 0.5 / h;
    }
    d[(n - 1, n - 2)] = -1.0 / h;
    d[(n - 1, n - 1)] = 1.0 / h;
    let mut hn = vec![h; n];
    hn[0] = 0.5 * h;
    hn[n - 1] = 0.5 * h;
    Ok(SbpOperator1D { d, hn })
}

/// Index map between `(node, component)` pairs and `[0, k N)`, components
/// contiguous within each node.
#[derive(Clone, Debug)]
pub struct FieldLayout {
    pub nodes: usize,
    pub components: usize,
}

impl FieldLayout {
    pub fn new(grid: &BoxGrid, components: usize) -> Self {
        Self {
            nodes: grid.node_count(),
            components,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, node: usize, component: usize) -> usize {
        debug_assert!(node < self.nodes && component < self.components);
        node * self.components + component
    }

    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.components, i % self.components)
    }
}

/// Triplets of `Σ_i (D_i ⊗ B_i)` acting on nodal fields, where `D_i` is the
/// axis-`i` SBP derivative lifted to the tensor grid.
fn kron_sum_triplets(
    grid: &BoxGrid,
    ops: &[SbpOperator1D],
    blocks: &[Mat<f64>],
) -> Vec<(usize, usize, f64)> {
    let (rows_per, cols_per) = (blocks[0].nrows(), blocks[0].ncols());
    let mut trips = Vec::new();
    for p in 0..grid.node_count() {
        let idx = grid.multi_index(p);
        for (axis, (op, b)) in ops.iter().zip(blocks).enumerate() {
            let stride = grid.stride(axis);
            let i = idx[axis];
            let base = p - i * stride;
            for k in 0..op.len() {
                let dv = op.d[(i, k)];
                if dv == 0.0 {
                    continue;
                }
                let q = base + k * stride;
                for r in 0..rows_per {
                    for c in 0..cols_per {
                        let v = b[(r, c)];
                        if v != 0.0 {
                            trips.push((p * rows_per + r, q * cols_per + c, dv * v));
                        }
                    }
                }
            }
        }
    }
    trips
}

/// Discrete `L_∂ = Σ ∂_i L_i` (m2-fields to m1-fields) together with the
/// formal adjoint `L_∂^H = Σ ∂_i L_i^T`.
#[derive(Clone, Debug)]
pub struct DiffOperator {
    pub forward: SpMat,
    pub adjoint: SpMat,
}

pub fn assemble_diffop(l: &MatrixTuple, grid: &BoxGrid) -> Result<DiffOperator> {
    assemble_diffop_with(l, grid, &grid.operators())
}

pub(crate) fn assemble_diffop_with(
    l: &MatrixTuple,
    grid: &BoxGrid,
    ops: &[SbpOperator1D],
) -> Result<DiffOperator> {
    check_dim(l.dim(), grid)?;
    let n = grid.node_count();
    let fwd = kron_sum_triplets(grid, ops, l.mats());
    let adj_t = l.adjoint();
    let adj = kron_sum_triplets(grid, ops, adj_t.mats());
    Ok(DiffOperator {
        forward: linalg::sparse_from_triplets(n * l.m1(), n * l.m2(), &fwd),
        adjoint: linalg::sparse_from_triplets(n * l.m2(), n * l.m1(), &adj),
    })
}

fn check_dim(n: usize, grid: &BoxGrid) -> Result<()> {
    if n != grid.dim() {
        return Err(Error::DimensionMismatch {
            context: "tuple dimension vs grid dimension",
            expected: grid.dim(),
            found: n,
        });
    }
    Ok(())
}

/// `D_P = Σ D_i ⊗ P_i` on m-fields.
pub fn assemble_dp(s: &StructureMatrices, grid: &BoxGrid) -> Result<SpMat> {
    check_dim(s.dim(), grid)?;
    let n = grid.node_count() * s.m();
    Ok(linalg::sparse_from_triplets(
        n,
        n,
        &kron_sum_triplets(grid, &grid.operators(), s.p()),
    ))
}

/// `H(ζ)` sampled at every grid node.
pub fn sample_hamiltonian(h: &HamiltonianDensitySpec, grid: &BoxGrid) -> Vec<Mat<f64>> {
    (0..grid.node_count())
        .map(|p| h.eval(&grid.coords(p)))
        .collect()
}

/// Full generator `L_p = (D_P + I ⊗ P_0) H_block` on m-fields.
pub fn assemble_full_operator(
    s: &StructureMatrices,
    h: &HamiltonianDensitySpec,
    grid: &BoxGrid,
) -> Result<SpMat> {
    if h.size() != s.m() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian size vs m",
            expected: s.m(),
            found: h.size(),
        });
    }
    let dp = assemble_dp(s, grid)?;
    let p0 = linalg::block_diag(&vec![s.p0().clone(); grid.node_count()]);
    let hb = linalg::block_diag(&sample_hamiltonian(h, grid));
    let sum = &dp + &p0;
    Ok(&sum * &hb)
}

/// `|<L_∂ f, g>_M + <f, L_∂^H g>_M - b(f, g)|` with the tensor quadrature
/// inner product and the face-node boundary quadrature.
pub fn green_identity_residual(
    l: &MatrixTuple,
    grid: &BoxGrid,
    f: &[f64],
    g: &[f64],
) -> Result<f64> {
    let ops = grid.operators();
    green_identity_residual_with(l, grid, &ops, f, g)
}

pub(crate) fn green_identity_residual_with(
    l: &MatrixTuple,
    grid: &BoxGrid,
    ops: &[SbpOperator1D],
    f: &[f64],
    g: &[f64],
) -> Result<f64> {
    let n = grid.node_count();
    if f.len() != n * l.m2() {
        return Err(Error::DimensionMismatch {
            context: "f field length",
            expected: n * l.m2(),
            found: f.len(),
        });
    }
    if g.len() != n * l.m1() {
        return Err(Error::DimensionMismatch {
            context: "g field length",
            expected: n * l.m1(),
            found: g.len(),
        });
    }
    let op = assemble_diffop_with(l, grid, ops)?;
    let quad = grid.quadrature();
    let fc = linalg::col_from_slice(f);
    let gc = linalg::col_from_slice(g);
    let lf = linalg::spmv(&op.forward, &fc);
    let lhg = linalg::spmv(&op.adjoint, &gc);
    let interior =
        quadrature_dot(&quad, l.m1(), &lf, &gc) + quadrature_dot(&quad, l.m2(), &fc, &lhg);
    Ok((interior - boundary_form(l, grid, f, g)?).abs())
}

/// `b(f, g) = Σ_entries w <L_ν f(node), g(node)>`.
pub fn boundary_form(l: &MatrixTuple, grid: &BoxGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    let faces = boundary_geometry(grid);
    let (m1, m2) = (l.m1(), l.m2());
    let mut b = 0.0;
    for e in faces.entries() {
        let ln = l_nu(l, &e.normal)?;
        let p = e.node;
        for r in 0..m1 {
            let mut acc = 0.0;
            for c in 0..m2 {
                acc += ln[(r, c)] * f[p * m2 + c];
            }
            b += e.weight * acc * g[p * m1 + r];
        }
    }
    Ok(b)
}

/// `Σ_p q_p <a(p), b(p)>` for k-component nodal fields.
pub fn quadrature_dot(quad: &[f64], k: usize, a: &Col<f64>, b: &Col<f64>) -> f64 {
    let mut s = 0.0;
    for (p, w) in quad.iter().enumerate() {
        let mut acc = 0.0;
        for c in 0..k {
            acc += a[p * k + c] * b[p * k + c];
        }
        s += w * acc;
    }
    s
}

pub fn quadrature_norm(quad: &[f64], k: usize, a: &Col<f64>) -> f64 {
    quadrature_dot(quad, k, a, a).sqrt()
}
