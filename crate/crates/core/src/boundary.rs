//! Discrete boundary of a box grid, pointwise projectors onto `ran L_ν`, and
//! the trace maps built from them.

use faer::Mat;

use crate::algebra::{l_nu, MatrixTuple};
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};
use crate::sbpgrid::BoxGrid;

/// Rank tolerance (relative to the largest singular value) for `ran L_ν`.
pub const RANGE_TOL: f64 = 1e-12;

/// One occurrence of a boundary node on one face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceEntry {
    pub face: usize,
    pub axis: usize,
    pub sign: i8,
    pub node: usize,
    pub weight: f64,
    pub normal: Vec<f64>,
}

/// All face-node entries of a box grid. Edge and corner nodes appear once per
/// incident face.
#[derive(Clone, Debug)]
pub struct FaceNodeSet {
    entries: Vec<FaceEntry>,
    faces: usize,
}

impl FaceNodeSet {
    pub fn entries(&self) -> &[FaceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.faces
    }

    pub fn face_entries(&self, face: usize) -> impl Iterator<Item = (usize, &FaceEntry)> {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.face == face)
    }
}

/// Face id `2 * axis + (sign > 0)`.
pub fn face_id(axis: usize, sign: i8) -> usize {
    2 * axis + usize::from(sign > 0)
}

/// Human-readable face name like `x-`, `y+`, `z-` (axes beyond 3 as `a3-`).
pub fn face_name(face: usize) -> String {
    let axis = face / 2;
    let s = if face % 2 == 1 { '+' } else { '-' };
    match axis {
        0 => format!("x{s}"),
        1 => format!("y{s}"),
        2 => format!("z{s}"),
        a => format!("a{a}{s}"),
    }
}

pub fn parse_face_name(name: &str, dim: usize) -> Option<usize> {
    let (head, sign) = name.split_at(name.len().checked_sub(1)?);
    let sign: i8 = match sign {
        "+" => 1,
        "-" => -1,
        _ => return None,
    };
    let axis = match head {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        h => h.strip_prefix('a')?.parse().ok()?,
    };
    (axis < dim).then(|| face_id(axis, sign))
}

pub fn boundary_geometry(grid: &BoxGrid) -> FaceNodeSet {
    let n = grid.dim();
    let ops = grid.operators();
    let mut entries = Vec::new();
    for axis in 0..n {
        for sign in [-1i8, 1] {
            let face = face_id(axis, sign);
            let fixed = if sign < 0 { 0 } else { grid.counts()[axis] - 1 };
            let mut normal = vec![0.0; n];
            normal[axis] = f64::from(sign);
            for p in 0..grid.node_count() {
                let idx = grid.multi_index(p);
                if idx[axis] != fixed {
                    continue;
                }
                let weight = idx
                    .iter()
                    .enumerate()
                    .filter(|&(a, _)| a != axis)
                    .map(|(a, &i)| ops[a].hn[i])
                    .product();
                entries.push(FaceEntry {
                    face,
                    axis,
                    sign,
                    node: p,
                    weight,
                    normal: normal.clone(),
                });
            }
        }
    }
    FaceNodeSet {
        entries,
        faces: 2 * n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPart {
    Gamma0,
    Gamma1,
}

/// Assignment of every face-node entry to Γ₀ or Γ₁.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySplitting {
    labels: Vec<BoundaryPart>,
    face_granular: bool,
}

impl BoundarySplitting {
    /// Whole faces labelled Γ₁, the rest Γ₀.
    pub fn from_faces(geom: &FaceNodeSet, gamma1_faces: &[usize]) -> Result<Self> {
        for &f in gamma1_faces {
            if f >= geom.face_count() {
                return Err(Error::SplitMismatch(format!(
                    "face {f} does not exist ({} faces)",
                    geom.face_count()
                )));
            }
        }
        let labels = geom
            .entries()
            .iter()
            .map(|e| {
                if gamma1_faces.contains(&e.face) {
                    BoundaryPart::Gamma1
                } else {
                    BoundaryPart::Gamma0
                }
            })
            .collect();
        Ok(Self {
            labels,
            face_granular: true,
        })
    }

    pub fn all(geom: &FaceNodeSet, part: BoundaryPart) -> Self {
        Self {
            labels: vec![part; geom.len()],
            face_granular: true,
        }
    }

    /// Arbitrary per-entry labels. Such splittings are outside the geometric
    /// setting the face-granular ones satisfy automatically.
    pub fn per_entry(labels: Vec<BoundaryPart>) -> Self {
        log::warn!("per-entry boundary splitting: thin-boundary conditions are not guaranteed");
        Self {
            labels,
            face_granular: false,
        }
    }

    pub fn labels(&self) -> &[BoundaryPart] {
        &self.labels
    }

    pub fn is_face_granular(&self) -> bool {
        self.face_granular
    }

    pub fn validate(&self, geom: &FaceNodeSet) -> Result<()> {
        if self.labels.len() != geom.len() {
            return Err(Error::SplitMismatch(format!(
                "{} labels for {} face-node entries",
                self.labels.len(),
                geom.len()
            )));
        }
        if self.face_granular {
            for f in 0..geom.face_count() {
                let mut it = geom.face_entries(f).map(|(i, _)| self.labels[i]);
                if let Some(first) = it.next() {
                    if it.any(|l| l != first) {
                        return Err(Error::SplitMismatch(format!(
                            "face {} has mixed labels",
                            face_name(f)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn indices(&self, part: BoundaryPart) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == part)
            .collect()
    }
}

pub fn pointwise_projector(lnu: &Mat<f64>) -> Mat<f64> {
    linalg::range_projector(lnu.as_ref(), RANGE_TOL)
}

/// Trace maps for a tuple on a split grid. Rows are indexed by
/// `entry * m1 + component` (for `gamma0`, `pi_*`, `lnu_trace`).
#[derive(Clone, Debug)]
pub struct TraceOperators {
    pub geometry: FaceNodeSet,
    pub splitting: BoundarySplitting,
    pub m1: usize,
    pub m2: usize,
    /// Restriction of m1-fields to face-node entries.
    pub gamma0: SpMat,
    pub projectors: Vec<Mat<f64>>,
    pub lnu: Vec<Mat<f64>>,
    pub pi_gamma0: SpMat,
    pub pi_gamma1: SpMat,
    pub pi_boundary: SpMat,
    /// `L_ν(entry) f(node)` for m2-fields.
    pub lnu_trace: SpMat,
}

impl TraceOperators {
    pub fn weights(&self) -> Vec<f64> {
        self.geometry.entries().iter().map(|e| e.weight).collect()
    }

    /// `Σ_entries w <a_e, b_e>` for boundary vectors laid out like `gamma0` rows.
    pub fn boundary_dot(&self, a: &faer::Col<f64>, b: &faer::Col<f64>) -> f64 {
        let k = self.m1;
        self.geometry
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| e.weight * (0..k).map(|c| a[i * k + c] * b[i * k + c]).sum::<f64>())
            .sum()
    }
}

pub fn assemble_traces(
    l: &MatrixTuple,
    grid: &BoxGrid,
    split: &BoundarySplitting,
) -> Result<TraceOperators> {
    if l.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            context: "tuple dimension vs grid dimension",
            expected: grid.dim(),
            found: l.dim(),
        });
    }
    let geometry = boundary_geometry(grid);
    split.validate(&geometry)?;
    let (m1, m2) = (l.m1(), l.m2());
    let n = grid.node_count();
    let ne = geometry.len();

    let mut g0 = Vec::new();
    let mut pi = [Vec::new(), Vec::new(), Vec::new()];
    let mut lt = Vec::new();
    let mut projectors = Vec::with_capacity(ne);
    let mut lnus = Vec::with_capacity(ne);
    for (i, e) in geometry.entries().iter().enumerate() {
        let ln = l_nu(l, &e.normal)?;
        let p = pointwise_projector(&ln);
        let part = match split.labels()[i] {
            BoundaryPart::Gamma0 => 0,
            BoundaryPart::Gamma1 => 1,
        };
        for r in 0..m1 {
            g0.push((i * m1 + r, e.node * m1 + r, 1.0));
            for c in 0..m1 {
                let v = p[(r, c)];
                if v != 0.0 {
                    pi[part].push((i * m1 + r, e.node * m1 + c, v));
                    pi[2].push((i * m1 + r, e.node * m1 + c, v));
                }
            }
            for c in 0..m2 {
                let v = ln[(r, c)];
                if v != 0.0 {
                    lt.push((i * m1 + r, e.node * m2 + c, v));
                }
            }
        }
        projectors.push(p);
        lnus.push(ln);
    }
    let [p0, p1, pb] = pi;
    Ok(TraceOperators {
        gamma0: linalg::sparse_from_triplets(ne * m1, n * m1, &g0),
        pi_gamma0: linalg::sparse_from_triplets(ne * m1, n * m1, &p0),
        pi_gamma1: linalg::sparse_from_triplets(ne * m1, n * m1, &p1),
        pi_boundary: linalg::sparse_from_triplets(ne * m1, n * m1, &pb),
        lnu_trace: linalg::sparse_from_triplets(ne * m1, n * m2, &lt),
        projectors,
        lnu: lnus,
        geometry,
        splitting: split.clone(),
        m1,
        m2,
    })
}

/// Whether `ker P = ker L_ν^T` for the projector onto `ran L_ν`.
pub fn kernel_identity_check(l: &MatrixTuple, nu: &[f64]) -> Result<bool> {
    let ln = l_nu(l, nu)?;
    Ok(kernels_agree(&ln))
}

/// Mutual containment of `ker(proj_{ran A})` and `ker(A^T)` by residuals.
pub fn kernels_agree(a: &Mat<f64>) -> bool {
    let p = pointwise_projector(a);
    let kp = linalg::null_space(p.as_ref(), RANGE_TOL);
    let at = a.transpose().to_owned();
    let ka = linalg::null_space(at.as_ref(), RANGE_TOL);
    let scale_a = linalg::spectral_norm(a.as_ref()).max(1.0);
    let res_p_in_a = linalg::max_abs((&at * &kp).as_ref()) / scale_a;
    let res_a_in_p = linalg::max_abs((&p * &ka).as_ref());
    kp.ncols() == ka.ncols() && res_p_in_a <= 1e-10 && res_a_in_p <= 1e-10
}
