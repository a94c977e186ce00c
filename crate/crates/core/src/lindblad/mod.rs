//! Markovian master equation: model description, dense generator,
//! forward and adjoint propagation on a piecewise-constant control grid.

mod engine;
mod grid;
mod propagate;
pub mod reference;

pub use engine::Integrator;
pub use grid::{ControlPulse, TimeGrid};
pub(crate) use engine::Workspace;
pub(crate) use propagate::Direction;
pub use propagate::{
    dynamical_map, propagate_backward, propagate_forward, Propagation, Propagator,
};

use crate::error::{Error, Result};
use crate::operator::{check_dims, CMatrix, Operator, C64, I};

/// Hermitian couplings to the real and imaginary part of one complex control.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlCoupling {
    pub x: Operator,
    pub y: Operator,
}

/// A jump operator with its rate (1/time).
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOperator {
    pub op: Operator,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    h0: Operator,
    controls: Vec<ControlCoupling>,
    collapse: Vec<CollapseOperator>,
}

impl LindbladModel {
    pub fn new(
        h0: Operator,
        controls: Vec<ControlCoupling>,
        collapse: Vec<CollapseOperator>,
    ) -> Result<Self> {
        let dim = h0.dim();
        h0.is_hermitian(crate::numeric::TOL.operator_hermiticity)
            .then_some(())
            .ok_or(Error::NotHermitian {
                asymmetry: crate::operator::hermitian_asymmetry(h0.matrix()),
            })?;
        for c in &controls {
            for op in [&c.x, &c.y] {
                check_dims(op.dim(), dim)?;
                if !op.is_hermitian(crate::numeric::TOL.operator_hermiticity) {
                    return Err(Error::NotHermitian {
                        asymmetry: crate::operator::hermitian_asymmetry(op.matrix()),
                    });
                }
            }
        }
        for c in &collapse {
            check_dims(c.op.dim(), dim)?;
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "collapse rate must be finite and >= 0, got {}",
                    c.rate
                )));
            }
        }
        Ok(Self {
            h0,
            controls,
            collapse,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn controls(&self) -> &[ControlCoupling] {
        &self.controls
    }

    pub fn collapse_ops(&self) -> &[CollapseOperator] {
        &self.collapse
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// Same model with every rate multiplied by `factor`.
    pub fn with_scaled_rates(&self, factor: f64) -> Result<Self> {
        let collapse = self
            .collapse
            .iter()
            .map(|c| CollapseOperator {
                op: c.op.clone(),
                rate: c.rate * factor,
            })
            .collect();
        Self::new(self.h0.clone(), self.controls.clone(), collapse)
    }

    /// Total Hamiltonian for the given `(Re, Im)` amplitudes.
    pub fn hamiltonian(&self, re_im: &[f64]) -> Result<CMatrix> {
        if re_im.len() != 2 * self.controls.len() {
            return Err(Error::LengthMismatch {
                expected: 2 * self.controls.len(),
                got: re_im.len(),
            });
        }
        let mut h = self.h0.matrix().clone();
        for (k, c) in self.controls.iter().enumerate() {
            h += c.x.matrix() * C64::new(re_im[2 * k], 0.0);
            h += c.y.matrix() * C64::new(re_im[2 * k + 1], 0.0);
        }
        Ok(h)
    }

    /// `sum_m gamma_m A_m^dag A_m`.
    pub(crate) fn decay_operator(&self) -> CMatrix {
        let d = self.dim();
        let mut g = CMatrix::zeros(d, d);
        for c in &self.collapse {
            if c.rate > 0.0 {
                let a = c.op.matrix();
                g += a.adjoint() * a * C64::new(c.rate, 0.0);
            }
        }
        g
    }

    /// Superoperator of the generator (column stacking) at fixed controls.
    pub fn superoperator(&self, re_im: &[f64]) -> Result<crate::superop::Superoperator> {
        let d = self.dim();
        let h = self.hamiltonian(re_im)?;
        let id = CMatrix::identity(d, d);
        let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-I);
        for c in &self.collapse {
            let a = c.op.matrix();
            let ada = a.adjoint() * a;
            let g = C64::new(c.rate, 0.0);
            l += a.conjugate().kronecker(a) * g;
            l -= (id.kronecker(&ada) + ada.transpose().kronecker(&id)) * (g * 0.5);
        }
        crate::superop::Superoperator::new(d, l)
    }
}

/// `-i[H(t), M] + sum_m gamma_m (A M A^dag - 1/2 {A^dag A, M})` for an arbitrary
/// (not necessarily Hermitian) matrix `M`.
pub fn generator_apply(model: &LindbladModel, re_im: &[f64], m: &CMatrix) -> Result<CMatrix> {
    check_dims(m.nrows(), model.dim())?;
    check_dims(m.ncols(), model.dim())?;
    let h = model.hamiltonian(re_im)?;
    let mut out = (&h * m - m * &h) * (-I);
    for c in &model.collapse {
        let a = c.op.matrix();
        let ada = a.adjoint() * a;
        let g = C64::new(c.rate, 0.0);
        out += (a * m * a.adjoint()) * g;
        out -= (&ada * m + m * &ada) * (g * 0.5);
    }
    Ok(out)
}
