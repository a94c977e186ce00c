//! Dense complex operators, density matrices and subspace embeddings.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::TOL;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus of a matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |A - A^dag|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `|i><j|` in dimension `dim`.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

/// `|v><v|` for a (not necessarily normalized) column vector.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("operator dimension must be positive".into()));
        }
        Ok(Self { m })
    }

    /// Constructs an operator that must be Hermitian within the relative
    /// operator tolerance.
    pub fn hermitian(m: CMatrix) -> Result<Self> {
        let op = Self::new(m)?;
        let asym = hermitian_asymmetry(&op.m);
        if asym > TOL.operator_hermiticity * max_abs(&op.m).max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self {
            m: CMatrix::from_diagonal(&CVector::from_column_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        hermitian_asymmetry(&self.m) <= rel_tol * max_abs(&self.m).max(f64::MIN_POSITIVE)
    }

    /// `max |O^dag O - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        max_abs(&(p - CMatrix::identity(self.dim(), self.dim())))
    }

    pub fn trace(&self) -> C64 {
        trace(&self.m)
    }

    /// `U A U^dag`.
    pub fn conjugate_by(&self, u: &Operator) -> Result<Operator> {
        check_dims(u.dim(), self.dim())?;
        Ok(Self {
            m: &u.m * &self.m * u.m.adjoint(),
        })
    }
}

impl From<Operator> for CMatrix {
    fn from(op: Operator) -> Self {
        op.m
    }
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// A density matrix. States tagged `physical` were validated for
/// Hermiticity, unit trace and positivity at construction; untagged ones
/// (adjoint states, propagated matrix units) only carry the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    physical: bool,
}

impl DensityMatrix {
    pub fn physical(m: CMatrix) -> Result<Self> {
        let op = Operator::new(m)?;
        let scale = max_abs(op.matrix()).max(f64::MIN_POSITIVE);
        let asym = hermitian_asymmetry(op.matrix());
        if asym > TOL.state_hermiticity * scale.max(1.0) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (asymmetry {asym:.3e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > TOL.state_trace {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let spectrum = hermitian_spectrum(&op)?;
        let lowest = spectrum.last().copied().unwrap_or(0.0);
        if lowest < TOL.positivity {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lowest:.3e}"
            )));
        }
        Ok(Self { op, physical: true })
    }

    /// Wraps a matrix without physical validation.
    pub fn unchecked(m: CMatrix) -> Result<Self> {
        Ok(Self {
            op: Operator::new(m)?,
            physical: false,
        })
    }

    /// Pure state `|v><v|` for a normalized vector.
    pub fn pure(v: &CVector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state vector norm {norm} != 1")));
        }
        Self::physical(outer(v))
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.op.into_matrix()
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        hs_overlap(&self.op, &self.op).map(|z| z.re).unwrap_or(0.0)
    }
}

/// Hilbert-Schmidt overlap `Tr[A^dag B]`.
pub fn hs_overlap(a: &Operator, b: &Operator) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(hs_overlap_raw(a.matrix(), b.matrix()))
}

pub(crate) fn hs_overlap_raw(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Tr[A B]` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigenvalues of a Hermitian operator, sorted descending.
pub fn hermitian_spectrum(a: &Operator) -> Result<Vec<f64>> {
    let scale = max_abs(a.matrix()).max(1.0);
    let asym = hermitian_asymmetry(a.matrix());
    if asym > TOL.state_hermiticity * scale {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let (values, _) = hermitian_eigen(a.matrix());
    Ok(values)
}

/// Eigen-decomposition of a Hermitian matrix: descending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize so the solver sees an exactly Hermitian input
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Placement of a `d`-dimensional logical subspace inside a larger
/// Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceEmbedding {
    full_dim: usize,
    logical_indices: Vec<usize>,
}

impl SubspaceEmbedding {
    pub fn new(full_dim: usize, logical_indices: Vec<usize>) -> Result<Self> {
        if logical_indices.is_empty() {
            return Err(Error::InvalidEmbedding("no logical indices".into()));
        }
        for (k, &idx) in logical_indices.iter().enumerate() {
            if idx >= full_dim {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    dim: full_dim,
                });
            }
            if logical_indices[..k].contains(&idx) {
                return Err(Error::InvalidEmbedding(format!("index {idx} repeated")));
            }
        }
        Ok(Self {
            full_dim,
            logical_indices,
        })
    }

    /// The trivial embedding of a space into itself.
    pub fn identity(dim: usize) -> Self {
        Self {
            full_dim: dim,
            logical_indices: (0..dim).collect(),
        }
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_indices.len()
    }

    pub fn logical_indices(&self) -> &[usize] {
        &self.logical_indices
    }

    /// Places `sub` on the logical block; every other entry is zero.
    pub fn embed(&self, sub: &Operator) -> Result<Operator> {
        check_dims(sub.dim(), self.logical_dim())?;
        Ok(Operator {
            m: self.embed_raw(sub.matrix()),
        })
    }

    /// Places a logical state vector into the full space.
    pub fn embed_vector(&self, v: &CVector) -> Result<CVector> {
        check_dims(v.len(), self.logical_dim())?;
        let mut out = CVector::zeros(self.full_dim);
        for (a, &ia) in self.logical_indices.iter().enumerate() {
            out[ia] = v[a];
        }
        Ok(out)
    }

    pub(crate) fn embed_raw(&self, sub: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.full_dim, self.full_dim);
        for (a, &ia) in self.logical_indices.iter().enumerate() {
            for (b, &ib) in self.logical_indices.iter().enumerate() {
                out[(ia, ib)] = sub[(a, b)];
            }
        }
        out
    }

    /// Restriction of a full-space operator to the logical block.
    pub fn extract(&self, full: &Operator) -> Result<Operator> {
        check_dims(full.dim(), self.full_dim)?;
        Ok(Operator {
            m: self.extract_raw(full.matrix()),
        })
    }

    pub(crate) fn extract_raw(&self, full: &CMatrix) -> CMatrix {
        let d = self.logical_dim();
        CMatrix::from_fn(d, d, |a, b| {
            full[(self.logical_indices[a], self.logical_indices[b])]
        })
    }

    /// Projector onto the logical subspace in the full space.
    pub fn projector(&self) -> Operator {
        self.embed(&Operator::identity(self.logical_dim()))
            .expect("identity has logical dimension")
    }
}

/// Free-function form of [`SubspaceEmbedding::embed`].
pub fn embed(sub: &Operator, emb: &SubspaceEmbedding) -> Result<Operator> {
    emb.embed(sub)
}
