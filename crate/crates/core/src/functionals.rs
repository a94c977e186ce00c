//! Figures of merit: the state-set functional, the fluence-penalized total,
//! average gate fidelity and the distance functional.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::ControlPulse;
use crate::numeric::TOL;
use crate::operator::{hs_overlap_raw, matrix_unit, trace_product, CMatrix, DensityMatrix, Operator, C64};
use crate::random::{haar_state, SeededRng};
use crate::states::{ideal_images, StateSet};
use crate::superop::Superoperator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub j_t: f64,
    pub j_total: f64,
    /// `1 - F_avg`, when it was evaluated.
    pub gate_error: Option<f64>,
    /// Scaled overlaps `c_i Re Tr[O rho_i O^dag rho_i(T)]`.
    pub per_state_overlaps: Vec<f64>,
}

fn check_len(set: &StateSet, finals: usize) -> Result<()> {
    if finals != set.len() {
        return Err(Error::LengthMismatch {
            expected: set.len(),
            got: finals,
        });
    }
    Ok(())
}

/// Scaled overlaps of each final state with its ideal image.
pub fn state_overlaps(set: &StateSet, finals: &[DensityMatrix], o: &Operator) -> Result<Vec<f64>> {
    check_len(set, finals.len())?;
    let images = ideal_images(set, o)?;
    Ok(images
        .iter()
        .zip(finals)
        .zip(set.prefactors())
        .map(|((img, f), c)| c * trace_product(img, f.matrix()).re)
        .collect())
}

/// `J_T = 1 - sum_i (w_i / Tr[rho_i^2]) Re Tr[O rho_i O^dag rho_i(T)]`.
pub fn eval_j_t(set: &StateSet, finals: &[DensityMatrix], o: &Operator) -> Result<f64> {
    Ok(1.0 - state_overlaps(set, finals, o)?.iter().sum::<f64>())
}

/// `J_T` from precomputed terminal conditions `sigma_i(T)`.
pub(crate) fn j_t_from_targets(targets: &[CMatrix], finals: &[CMatrix]) -> (f64, Vec<f64>) {
    let overlaps: Vec<f64> = targets
        .iter()
        .zip(finals)
        .map(|(s, r)| trace_product(s, r).re)
        .collect();
    (1.0 - overlaps.iter().sum::<f64>(), overlaps)
}

/// Update-shape weight of interval `k` from values on the grid points.
pub fn interval_shape(shape: &[f64], k: usize) -> f64 {
    0.5 * (shape[k] + shape[k + 1])
}

/// Fluence penalty `lambda_a sum_k sum_c |eps - eps_ref|^2 / S dt`.
pub fn fluence_penalty(
    pulse: &ControlPulse,
    reference: &ControlPulse,
    shape: &[f64],
    lambda_a: f64,
) -> Result<f64> {
    let grid = pulse.grid();
    if reference.grid() != grid {
        return Err(Error::InvalidGrid("reference pulse on a different grid".into()));
    }
    if reference.n_controls() != pulse.n_controls() {
        return Err(Error::LengthMismatch {
            expected: pulse.n_controls(),
            got: reference.n_controls(),
        });
    }
    if shape.len() != grid.nt + 1 {
        return Err(Error::LengthMismatch {
            expected: grid.nt + 1,
            got: shape.len(),
        });
    }
    let dt = grid.dt();
    let mut total = 0.0;
    for k in 0..grid.nt {
        let dev: f64 = pulse
            .values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a[k] - b[k]).norm_sqr())
            .sum();
        if dev == 0.0 {
            continue;
        }
        let s = interval_shape(shape, k);
        if s <= 0.0 {
            return Err(Error::ZeroShapeWithDeviation { interval: k });
        }
        total += dev / s * dt;
    }
    Ok(lambda_a * total)
}

/// `J = J_T + lambda_a int |eps - eps_ref|^2 / S dt`.
pub fn eval_j_total(
    j_t: f64,
    pulse: &ControlPulse,
    reference: &ControlPulse,
    shape: &[f64],
    lambda_a: f64,
) -> Result<f64> {
    Ok(j_t + fluence_penalty(pulse, reference, shape, lambda_a)?)
}

fn check_gate(map: &Superoperator, o: &Operator) -> Result<()> {
    if map.dim() != o.dim() {
        return Err(Error::DimensionMismatch {
            left: map.dim(),
            right: o.dim(),
        });
    }
    let dev = o.unitarity_deviation();
    if dev > TOL.unitarity {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// Closed-form average gate fidelity from the `d^2` images of the matrix units.
pub fn f_avg(map: &Superoperator, o: &Operator) -> Result<f64> {
    check_gate(map, o)?;
    let d = map.dim();
    let om = o.matrix();
    let od = om.adjoint();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            let img = map.image_of_unit(i, j);
            acc += (&od * &img * om)[(i, j)];
        }
    }
    for i in 0..d {
        let rotated = om * matrix_unit(d, i, i) * &od;
        for j in 0..d {
            acc += trace_product(&rotated, &map.image_of_unit(j, j));
        }
    }
    let f = acc / C64::new((d * (d + 1)) as f64, 0.0);
    if f.im.abs() > TOL.fidelity_imag {
        return Err(Error::ComplexFidelity { imag: f.im });
    }
    Ok(f.re)
}

/// Monte-Carlo estimate of the Haar-averaged pure-state fidelity:
/// `(mean, standard error)`.
pub fn f_avg_monte_carlo(
    map: &Superoperator,
    o: &Operator,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_gate(map, o)?;
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let d = map.dim();
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let psi = haar_state(&mut rng, d);
        let rho = &psi * psi.adjoint();
        let out = map.apply(&rho)?;
        let target = o.matrix() * &psi;
        let f = (target.adjoint() * out * &target)[(0, 0)].re;
        sum += f;
        sum_sq += f * f;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// `J_dist = sum_i Tr[(O rho_i O^dag - rho_i(T))^2]`.
pub fn eval_j_dist(set: &StateSet, finals: &[DensityMatrix], o: &Operator) -> Result<f64> {
    check_len(set, finals.len())?;
    let images = ideal_images(set, o)?;
    Ok(images
        .iter()
        .zip(finals)
        .map(|(img, f)| {
            let diff = img - f.matrix();
            hs_overlap_raw(&diff, &diff).re
        })
        .sum())
}
