//! Dense superoperator-exponential propagation. Slow; meant as a
//! cross-check for the fixed-step integrators on small systems.

use super::{ControlPulse, LindbladModel};
use crate::error::Result;
use crate::operator::{check_dims, CMatrix, C64};
use crate::superop::{unvectorize, vectorize};

fn interval_maps(model: &LindbladModel, pulse: &ControlPulse) -> Result<Vec<CMatrix>> {
    let dt = C64::new(pulse.grid().dt(), 0.0);
    (0..pulse.grid().nt)
        .map(|k| {
            let l = model.superoperator(&pulse.amplitudes(k))?;
            Ok((l.matrix() * dt).exp())
        })
        .collect()
}

/// `rho(T)` for an arbitrary initial matrix.
pub fn propagate_exact(model: &LindbladModel, pulse: &ControlPulse, m: &CMatrix) -> Result<CMatrix> {
    check_dims(m.nrows(), model.dim())?;
    let mut v = vectorize(m);
    for p in interval_maps(model, pulse)? {
        v = p * v;
    }
    Ok(unvectorize(&v, model.dim()))
}

/// Adjoint state at `t = 0` from its value at `T`, through the transposed
/// superoperator: `vec(s_k^T) = exp(L^T dt) vec(s_{k+1}^T)`.
pub fn propagate_adjoint_exact(
    model: &LindbladModel,
    pulse: &ControlPulse,
    sigma_t: &CMatrix,
) -> Result<CMatrix> {
    check_dims(sigma_t.nrows(), model.dim())?;
    let mut v = vectorize(&sigma_t.transpose());
    for p in interval_maps(model, pulse)?.into_iter().rev() {
        v = p.transpose() * v;
    }
    Ok(unvectorize(&v, model.dim()).transpose())
}
