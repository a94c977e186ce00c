//! Linear maps on `d x d` matrices in the column-stacking convention:
//! the matrix element `(i, j)` sits at vector index `i + j*d`.

use crate::error::{Error, Result};
use crate::operator::{check_dims, matrix_unit, max_abs, trace, CMatrix, CVector, Operator, C64, ZERO};

/// Column-stacked vectorization.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// A superoperator acting on `dim x dim` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: matrix.nrows(),
                right: n,
            });
        }
        Ok(Self { dim, matrix })
    }

    /// Builds the map column by column from its action on matrix units.
    pub fn from_fn<F>(dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&CMatrix) -> Result<CMatrix>,
    {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&matrix_unit(dim, i, j))?;
                check_dims(image.nrows(), dim)?;
                matrix.set_column(i + j * dim, &vectorize(&image));
            }
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        let n = dim * dim;
        Self {
            dim,
            matrix: CMatrix::identity(n, n),
        }
    }

    /// `X -> sum_k K_k X K_k^dag`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let dim = kraus
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for k in kraus {
            check_dims(k.nrows(), dim)?;
            check_dims(k.ncols(), dim)?;
            matrix += k.conjugate().kronecker(k);
        }
        Ok(Self { dim, matrix })
    }

    /// `X -> U X U^dag`.
    pub fn from_unitary(u: &Operator) -> Self {
        let m = u.matrix();
        Self {
            dim: u.dim(),
            matrix: m.conjugate().kronecker(m),
        }
    }

    /// Complete depolarization `X -> Tr[X] I/d`.
    pub fn depolarizing(dim: usize) -> Self {
        Self::from_fn(dim, |x| {
            Ok(CMatrix::identity(dim, dim) * (trace(x) / C64::new(dim as f64, 0.0)))
        })
        .expect("dimensions agree")
    }

    /// Convex (or general linear) combination of maps of equal dimension.
    pub fn combine(terms: &[(f64, Superoperator)]) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, s)| s.dim)
            .ok_or_else(|| Error::InvalidParameter("empty combination".into()))?;
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for (p, s) in terms {
            check_dims(s.dim, dim)?;
            matrix += &s.matrix * C64::new(*p, 0.0);
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_dims(x.nrows(), self.dim)?;
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.dim))
    }

    /// Image of the matrix unit `|i><j|`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> CMatrix {
        let col = self.matrix.column(i + j * self.dim).into_owned();
        unvectorize(&col, self.dim)
    }

    /// Choi matrix `sum_ij |i><j| (x) D(|i><j|)`; its trace is `d` for a
    /// trace-preserving map.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut c = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let img = self.image_of_unit(i, j);
                c.view_mut((i * d, j * d), (d, d)).copy_from(&img);
            }
        }
        c
    }

    /// Largest `|Tr D(|i><j|) - delta_ij|` over all matrix units.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { C64::new(1.0, 0.0) } else { ZERO };
                worst = worst.max((trace(&self.image_of_unit(i, j)) - expect).norm());
            }
        }
        worst
    }

    pub fn compose(&self, first: &Superoperator) -> Result<Self> {
        check_dims(self.dim, first.dim)?;
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Largest entry distance between two maps.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}
