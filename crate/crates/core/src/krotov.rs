//! First-order Krotov optimization over a set of density matrices.
//!
//! Each iteration propagates the adjoint states backward under the old pulse
//! and then sweeps forward, updating the pulse interval by interval from the
//! stored adjoint states and the freshly propagated forward states.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{f_avg, fluence_penalty, interval_shape, j_t_from_targets};
use crate::lindblad::{
    ControlPulse, Direction, Integrator, LindbladModel, Propagator, TimeGrid, Workspace,
};
use crate::numeric::TOL;
use crate::operator::{check_dims, trace, CMatrix, Operator, C64};
use crate::states::{target_states, StateSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub max_iterations: usize,
    /// Stop once `J_T` falls below this value.
    pub j_t_threshold: f64,
    /// Stop once the relative decrease of `J_T` in one iteration falls below
    /// this value (0 disables).
    pub min_decrease: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            j_t_threshold: 0.0,
            min_decrease: 0.0,
        }
    }
}

/// Update shape: `sin^2` ramps of length `ramp` at both ends, 1 in between,
/// sampled on the grid points (so it vanishes at `t = 0` and `t = T`).
pub fn flattop_shape(grid: &TimeGrid, ramp: f64) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|t| flattop(t, grid.t_final, ramp))
        .collect()
}

pub(crate) fn flattop(t: f64, t_final: f64, ramp: f64) -> f64 {
    let edge = t.min(t_final - t).max(0.0);
    if ramp <= 0.0 {
        return if edge > 0.0 { 1.0 } else { 0.0 };
    }
    if edge >= ramp {
        1.0
    } else {
        (std::f64::consts::FRAC_PI_2 * edge / ramp).sin().powi(2)
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationProblem {
    pub model: LindbladModel,
    pub set: StateSet,
    /// Gate on the logical subspace.
    pub target: Operator,
    pub guess: ControlPulse,
    pub lambda_a: f64,
    /// Update shape on the `nt + 1` grid points.
    pub shape: Vec<f64>,
    pub stop: StopCriteria,
    /// Evaluate the gate error every this many iterations (0: never).
    pub fidelity_every: usize,
    pub integrator: Integrator,
}

impl OptimizationProblem {
    pub fn validate(&self) -> Result<()> {
        let grid = self.guess.grid();
        check_dims(self.set.embedding().full_dim(), self.model.dim())?;
        check_dims(self.target.dim(), self.set.logical_dim())?;
        if self.guess.n_controls() != self.model.n_controls() {
            return Err(Error::LengthMismatch {
                expected: self.model.n_controls(),
                got: self.guess.n_controls(),
            });
        }
        if !(self.lambda_a > 0.0 && self.lambda_a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_a must be positive, got {}",
                self.lambda_a
            )));
        }
        if self.shape.len() != grid.nt + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.nt + 1,
                got: self.shape.len(),
            });
        }
        if self.shape.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("update shape must be >= 0".into()));
        }
        if self.shape[0] != 0.0 || self.shape[grid.nt] != 0.0 {
            return Err(Error::InvalidParameter(
                "update shape must vanish at t = 0 and t = T".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Status {
    Converged,
    MaxIter,
    MonotonicityFault { iteration: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j_t: f64,
    pub j_total: f64,
    pub gate_error: Option<f64>,
    /// Cumulative number of single-state propagations.
    pub n_propagations: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    /// Pulse of the last iteration that kept the total functional monotonic.
    pub final_pulse: ControlPulse,
    pub trace: Vec<IterationRecord>,
    pub status: Status,
    /// Fidelity-evaluation propagations included in the totals.
    pub n_fidelity_propagations: usize,
}

impl OptimizationResult {
    pub fn last(&self) -> &IterationRecord {
        self.trace.last().expect("trace holds the guess evaluation")
    }

    /// Most recent recorded gate error.
    pub fn last_gate_error(&self) -> Option<f64> {
        self.trace.iter().rev().find_map(|r| r.gate_error)
    }
}

/// Entries of one control quadrature operator.
type Pattern = Vec<(usize, usize, C64)>;

/// Gradient evaluator `g_q = sum_i Im Tr[sigma_i [X_q, rho_i]]`, using the
/// sparsity of the control operators: `Tr[X [rho, sigma]]`.
///
/// With a nonzero `window` each `X` is replaced by its average over one time
/// step in the frame of the diagonal drift,
/// `X_ab (e^{i w_ab h} - 1) / (i w_ab h)` with `w_ab = H_aa - H_bb`. Sampling
/// at the left edge of an interval would otherwise miss the phase the fast
/// drift accumulates across it.
struct Gradient {
    dim: usize,
    quads: Vec<Pattern>,
}

impl Gradient {
    fn new(model: &LindbladModel, window: f64) -> Self {
        let d = model.dim();
        let h0 = model.h0().matrix();
        let average = |a: usize, b: usize| {
            let theta = (h0[(a, a)].re - h0[(b, b)].re) * window;
            if theta.abs() < 1e-8 {
                C64::new(1.0, 0.5 * theta)
            } else {
                (C64::from_polar(1.0, theta) - 1.0) / C64::new(0.0, theta)
            }
        };
        let mut quads = Vec::new();
        for c in model.controls() {
            for op in [&c.x, &c.y] {
                let m = op.matrix();
                let mut p = Vec::new();
                for b in 0..d {
                    for a in 0..d {
                        if m[(a, b)] != C64::new(0.0, 0.0) {
                            p.push((a, b, m[(a, b)] * average(a, b)));
                        }
                    }
                }
                quads.push(p);
            }
        }
        Self { dim: d, quads }
    }

    fn accumulate(&self, sigma: &CMatrix, rho: &CMatrix, out: &mut [f64]) {
        let d = self.dim;
        let s = sigma.as_slice();
        let r = rho.as_slice();
        for (q, pattern) in self.quads.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(a, b, x) in pattern {
                // [rho, sigma]_{ba}
                let mut c = C64::new(0.0, 0.0);
                for k in 0..d {
                    c += r[b + k * d] * s[k + a * d] - s[b + k * d] * r[k + a * d];
                }
                acc += x * c;
            }
            out[q] += acc.im;
        }
    }
}

fn increment_scale(s_t: f64, lambda_a: f64) -> f64 {
    0.5 * s_t / lambda_a
}

/// Pulse increment for every control at one time from the adjoint and
/// forward states there: `(S / 2 lambda_a) sum_i Im Tr[sigma_i [X, rho_i]]`
/// for the real part and the same with `Y` for the imaginary part.
pub fn update_increment(
    sigmas: &[CMatrix],
    rhos: &[CMatrix],
    model: &LindbladModel,
    s_t: f64,
    lambda_a: f64,
) -> Result<Vec<C64>> {
    if sigmas.len() != rhos.len() {
        return Err(Error::LengthMismatch {
            expected: sigmas.len(),
            got: rhos.len(),
        });
    }
    for m in sigmas.iter().chain(rhos) {
        check_dims(m.nrows(), model.dim())?;
    }
    let scale = increment_scale(s_t, lambda_a);
    Ok(model
        .controls()
        .iter()
        .map(|c| {
            let g = |op: &Operator| -> f64 {
                sigmas
                    .iter()
                    .zip(rhos)
                    .map(|(s, r)| trace(&(s * (op.matrix() * r - r * op.matrix()))).im)
                    .sum()
            };
            C64::new(scale * g(&c.x), scale * g(&c.y))
        })
        .collect())
}

/// A problem compiled for repeated iterations.
pub struct Optimizer<'a> {
    problem: &'a OptimizationProblem,
    prop: Propagator,
    gradient: Gradient,
    initials: Vec<CMatrix>,
    targets: Vec<CMatrix>,
    ws: Workspace,
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

impl<'a> Optimizer<'a> {
    pub fn new(problem: &'a OptimizationProblem) -> Result<Self> {
        problem.validate()?;
        let prop = Propagator::new(&problem.model, problem.guess.grid(), problem.integrator)?;
        let targets = target_states(&problem.set, &problem.target)?
            .into_iter()
            .map(|t| symmetrized(t.matrix()))
            .collect();
        let initials = problem
            .set
            .states()
            .iter()
            .map(|s| s.matrix().clone())
            .collect();
        let ws = prop.workspace();
        Ok(Self {
            problem,
            gradient: Gradient::new(&problem.model, problem.guess.grid().dt()),
            prop,
            initials,
            targets,
            ws,
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    /// Terminal conditions of the adjoint states.
    pub fn targets(&self) -> &[CMatrix] {
        &self.targets
    }

    fn check_interval(&self, k: usize, states: &[CMatrix]) -> Result<()> {
        for (y, y0) in states.iter().zip(&self.initials) {
            let tr = trace(y);
            if !(tr.re.is_finite() && tr.im.is_finite()) {
                return Err(Error::IntegratorBreach {
                    interval: k,
                    reason: "state became non-finite".into(),
                });
            }
            let drift = (tr - trace(y0)).norm();
            if drift > TOL.propagation_trace {
                return Err(Error::IntegratorBreach {
                    interval: k,
                    reason: format!("trace drifted by {drift:.3e}"),
                });
            }
        }
        Ok(())
    }

    /// Forward propagation of all set states; returns the final states.
    pub fn forward_all(&mut self, pulse: &ControlPulse) -> Result<Vec<CMatrix>> {
        self.prop.check_pulse(pulse)?;
        let mut states = self.initials.clone();
        let mut amps = Vec::new();
        for k in 0..pulse.grid().nt {
            amps.clear();
            for v in pulse.values() {
                amps.push(v[k].re);
                amps.push(v[k].im);
            }
            self.prop.load(Direction::Forward, &amps, &mut self.ws);
            for y in states.iter_mut() {
                self.prop.step_interval(Direction::Forward, y, &mut self.ws, true);
            }
            self.check_interval(k, &states)?;
        }
        Ok(states)
    }

    /// Adjoint trajectories `[state][k]` under `pulse`.
    fn backward_all(&mut self, pulse: &ControlPulse) -> Result<Vec<Vec<CMatrix>>> {
        let nt = pulse.grid().nt;
        let mut traj: Vec<Vec<CMatrix>> = self
            .targets
            .iter()
            .map(|t| {
                let mut v = Vec::with_capacity(nt + 1);
                v.resize(nt + 1, CMatrix::zeros(0, 0));
                v[nt] = t.clone();
                v
            })
            .collect();
        let mut states = self.targets.clone();
        let mut amps = Vec::new();
        for k in (0..nt).rev() {
            amps.clear();
            for v in pulse.values() {
                amps.push(v[k].re);
                amps.push(v[k].im);
            }
            self.prop.load(Direction::Backward, &amps, &mut self.ws);
            for (y, t) in states.iter_mut().zip(traj.iter_mut()) {
                self.prop.step_interval(Direction::Backward, y, &mut self.ws, true);
                if !y[(0, 0)].re.is_finite() {
                    return Err(Error::IntegratorBreach {
                        interval: k,
                        reason: "adjoint state became non-finite".into(),
                    });
                }
                t[k] = y.clone();
            }
        }
        Ok(traj)
    }

    /// One Krotov iteration: returns the new pulse and the final states.
    pub fn iterate(&mut self, old: &ControlPulse) -> Result<(ControlPulse, Vec<CMatrix>)> {
        self.prop.check_pulse(old)?;
        let sigma = self.backward_all(old)?;
        let grid = *old.grid();
        let nq = 2 * old.n_controls();
        let mut new = old.clone();
        let mut states = self.initials.clone();
        let mut g = vec![0.0; nq];
        let mut amps = vec![0.0; nq];
        for k in 0..grid.nt {
            let s_t = interval_shape(&self.problem.shape, k);
            g.iter_mut().for_each(|x| *x = 0.0);
            if s_t > 0.0 {
                for (traj, rho) in sigma.iter().zip(&states) {
                    self.gradient.accumulate(&traj[k], rho, &mut g);
                }
            }
            let scale = increment_scale(s_t, self.problem.lambda_a);
            for (c, v) in new.values_mut().iter_mut().enumerate() {
                let delta = C64::new(scale * g[2 * c], scale * g[2 * c + 1]);
                if !(delta.re.is_finite() && delta.im.is_finite()) {
                    return Err(Error::NonFiniteUpdate { interval: k });
                }
                v[k] += delta;
                amps[2 * c] = v[k].re;
                amps[2 * c + 1] = v[k].im;
            }
            self.prop.load(Direction::Forward, &amps, &mut self.ws);
            for y in states.iter_mut() {
                self.prop.step_interval(Direction::Forward, y, &mut self.ws, true);
            }
            self.check_interval(k, &states)?;
        }
        Ok((new, states))
    }

    /// `J_T` and per-state overlaps of final states.
    pub fn evaluate(&self, finals: &[CMatrix]) -> (f64, Vec<f64>) {
        j_t_from_targets(&self.targets, finals)
    }

    /// `1 - F_avg` of the pulse on the logical block.
    pub fn gate_error(&self, pulse: &ControlPulse) -> Result<f64> {
        let map = self.prop.dynamical_map(pulse, self.problem.set.embedding())?;
        Ok(1.0 - f_avg(&map, &self.problem.target)?)
    }
}

/// Runs the optimization to completion.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize_with(problem, |_| {})
}

/// As [`optimize`], reporting every iteration record as it is produced.
pub fn optimize_with<F: FnMut(&IterationRecord)>(
    problem: &OptimizationProblem,
    mut on_record: F,
) -> Result<OptimizationResult> {
    let start = Instant::now();
    let mut opt = Optimizer::new(problem)?;
    let n = problem.set.len();
    let d2 = problem.set.logical_dim().pow(2);
    let cadence = problem.fidelity_every;
    let stop = problem.stop;

    let mut n_prop = 0usize;
    let due = |i: usize, last: bool| cadence > 0 && (i % cadence == 0 || last);
    let fidelity = |opt: &Optimizer, pulse: &ControlPulse, n_prop: &mut usize| {
        *n_prop += d2;
        opt.gate_error(pulse)
    };
    let fidelity_count = |trace: &[IterationRecord]| {
        d2 * trace.iter().filter(|r| r.gate_error.is_some()).count()
    };

    let mut pulse = problem.guess.clone();
    let finals = opt.forward_all(&pulse)?;
    n_prop += n;
    let (j_t, _) = opt.evaluate(&finals);
    let last0 = stop.max_iterations == 0 || j_t < stop.j_t_threshold;
    let gate_error = match due(0, last0) {
        true => Some(fidelity(&opt, &pulse, &mut n_prop)?),
        false => None,
    };
    let mut trace = vec![IterationRecord {
        iteration: 0,
        j_t,
        j_total: j_t,
        gate_error,
        n_propagations: n_prop,
        wall_time: start.elapsed().as_secs_f64(),
    }];
    on_record(&trace[0]);
    if last0 {
        let status = if stop.max_iterations == 0 {
            Status::MaxIter
        } else {
            Status::Converged
        };
        return Ok(OptimizationResult {
            final_pulse: pulse,
            n_fidelity_propagations: fidelity_count(&trace),
            trace,
            status,
        });
    }

    let mut status = Status::MaxIter;
    for i in 1..=stop.max_iterations {
        let (new, finals) = opt.iterate(&pulse)?;
        n_prop += 2 * n;
        let (j_t, _) = opt.evaluate(&finals);
        let j_total = j_t + fluence_penalty(&new, &pulse, &problem.shape, problem.lambda_a)?;
        let prev = trace.last().expect("non-empty");
        let fault = j_total > prev.j_total + TOL.monotonicity * prev.j_total.abs();
        let converged = j_t < stop.j_t_threshold
            || (stop.min_decrease > 0.0 && prev.j_t - j_t < stop.min_decrease * prev.j_t.abs());
        let last = fault || converged || i == stop.max_iterations;
        let gate_error = match !fault && due(i, last) {
            true => Some(fidelity(&opt, &new, &mut n_prop)?),
            false => None,
        };
        let rec = IterationRecord {
            iteration: i,
            j_t,
            j_total,
            gate_error,
            n_propagations: n_prop,
            wall_time: start.elapsed().as_secs_f64(),
        };
        on_record(&rec);
        trace.push(rec);
        if fault {
            status = Status::MonotonicityFault { iteration: i };
            break;
        }
        pulse = new;
        if converged {
            status = Status::Converged;
            break;
        }
    }
    Ok(OptimizationResult {
        final_pulse: pulse,
        n_fidelity_propagations: fidelity_count(&trace),
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::matrix_unit;
    use crate::lindblad::ControlCoupling;

    fn sigma_x() -> CMatrix {
        matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)
    }

    fn sigma_y() -> CMatrix {
        (matrix_unit(2, 1, 0) - matrix_unit(2, 0, 1)) * C64::new(0.0, 1.0)
    }

    fn qubit_model() -> LindbladModel {
        LindbladModel::new(
            Operator::zeros(2),
            vec![ControlCoupling {
                x: Operator::hermitian(sigma_x()).unwrap(),
                y: Operator::hermitian(sigma_y()).unwrap(),
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn increment_by_hand() {
        let model = qubit_model();
        let rho = matrix_unit(2, 0, 0);
        let c = 0.7;
        // sigma along x: the commutator with X is traceless against it.
        let inc = update_increment(&[sigma_x() * C64::new(c, 0.0)], &[rho.clone()], &model, 0.8, 2.0)
            .unwrap();
        assert!(inc[0].re.abs() < 1e-15);
        // sigma along y: Tr[c sigma_y [sigma_x, |0><0|]] = -2ic.
        let inc = update_increment(&[sigma_y() * C64::new(c, 0.0)], &[rho], &model, 0.8, 2.0).unwrap();
        assert!((inc[0].re - (0.8 / (2.0 * 2.0)) * (-2.0 * c)).abs() < 1e-15);
    }

    #[test]
    fn zero_shape_gives_zero_increment() {
        let model = qubit_model();
        let inc = update_increment(&[sigma_y()], &[matrix_unit(2, 0, 0)], &model, 0.0, 1.0).unwrap();
        assert_eq!(inc[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn sparse_gradient_matches_dense() {
        use crate::random::{random_density, random_hermitian, seeded};
        let mut rng = seeded(4);
        let d = 4;
        let mut x = random_hermitian(&mut rng, d);
        x[(0, 3)] = C64::new(0.0, 0.0);
        x[(3, 0)] = C64::new(0.0, 0.0);
        let model = LindbladModel::new(
            Operator::zeros(d),
            vec![ControlCoupling {
                x: Operator::hermitian(x).unwrap(),
                y: Operator::hermitian(random_hermitian(&mut rng, d)).unwrap(),
            }],
            vec![],
        )
        .unwrap();
        let sigmas: Vec<CMatrix> = (0..3).map(|_| random_hermitian(&mut rng, d)).collect();
        let rhos: Vec<CMatrix> = (0..3).map(|_| random_density(&mut rng, d)).collect();
        let dense = update_increment(&sigmas, &rhos, &model, 1.0, 0.5).unwrap();
        let grad = Gradient::new(&model, 0.0);
        let mut g = vec![0.0; 2];
        for (s, r) in sigmas.iter().zip(&rhos) {
            grad.accumulate(s, r, &mut g);
        }
        assert!((dense[0].re - g[0]).abs() < 1e-12);
        assert!((dense[0].im - g[1]).abs() < 1e-12);
    }

    #[test]
    fn averaged_gradient_matches_quadrature() {
        use crate::random::{random_density, random_hermitian, seeded};
        let mut rng = seeded(8);
        let d = 3;
        let h = 0.4;
        let energies = [0.0, 2.3, -4.1];
        let h0 = Operator::from_diagonal(&energies.map(|e| C64::new(e, 0.0)));
        let x = random_hermitian(&mut rng, d);
        let y = random_hermitian(&mut rng, d);
        // Simpson average of exp(i H0 t) X exp(-i H0 t) over [0, h]
        let averaged = |m: &CMatrix| {
            let n = 400;
            let mut acc = CMatrix::zeros(d, d);
            for k in 0..=n {
                let t = h * k as f64 / n as f64;
                let u = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d,
                    energies.iter().map(|&e| C64::from_polar(1.0, e * t)),
                ));
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += &u * m * u.adjoint() * C64::new(w, 0.0);
            }
            acc * C64::new(1.0 / (3.0 * n as f64), 0.0)
        };
        let coupling = |a: CMatrix, b: CMatrix| ControlCoupling {
            x: Operator::hermitian(a).unwrap(),
            y: Operator::hermitian(b).unwrap(),
        };
        let model = LindbladModel::new(h0.clone(), vec![coupling(x.clone(), y.clone())], vec![]).unwrap();
        let frame = LindbladModel::new(h0, vec![coupling(averaged(&x), averaged(&y))], vec![]).unwrap();
        let sigmas: Vec<CMatrix> = (0..2).map(|_| random_hermitian(&mut rng, d)).collect();
        let rhos: Vec<CMatrix> = (0..2).map(|_| random_density(&mut rng, d)).collect();
        let dense = update_increment(&sigmas, &rhos, &frame, 1.0, 0.5).unwrap();
        let grad = Gradient::new(&model, h);
        let mut g = vec![0.0; 2];
        for (s, r) in sigmas.iter().zip(&rhos) {
            grad.accumulate(s, r, &mut g);
        }
        assert!((dense[0].re - g[0]).abs() < 1e-9, "{} vs {}", dense[0].re, g[0]);
        assert!((dense[0].im - g[1]).abs() < 1e-9);
    }

    #[test]
    fn averaged_gradient_is_the_interval_derivative() {
        use crate::random::{random_density, random_hermitian, seeded};
        let mut rng = seeded(21);
        let h0 = Operator::from_diagonal(&[C64::new(0.0, 0.0), C64::new(3.0, 0.0)]);
        let model = LindbladModel::new(
            h0,
            vec![ControlCoupling {
                x: Operator::hermitian(sigma_x()).unwrap(),
                y: Operator::hermitian(sigma_y()).unwrap(),
            }],
            vec![],
        )
        .unwrap();
        let grid = TimeGrid::new(2.0, 4, 200).unwrap();
        let prop = Propagator::new(&model, &grid, Integrator::LawsonRk4).unwrap();
        let rho0 = random_density(&mut rng, 2);
        let sigma_t = random_hermitian(&mut rng, 2);
        let zero = ControlPulse::zeros(grid, 1);
        let sigmas = prop.backward(&zero, &sigma_t).unwrap();
        let j = |p: &ControlPulse| trace(&(&sigma_t * prop.forward_matrix(p, &rho0).unwrap())).re;
        let k = 2;
        let mut rho_k = rho0.clone();
        for i in 0..k {
            let mut ws = prop.workspace();
            prop.advance(Direction::Forward, &[0.0, 0.0], &mut rho_k, &mut ws, false);
            let _ = i;
        }
        let grad = Gradient::new(&model, grid.dt());
        let mut g = vec![0.0; 2];
        grad.accumulate(&sigmas[k], &rho_k, &mut g);
        let delta = 1e-5;
        for (q, shift) in [C64::new(delta, 0.0), C64::new(0.0, delta)].into_iter().enumerate() {
            let mut plus = zero.clone();
            plus.values_mut()[0][k] = shift;
            let mut minus = zero.clone();
            minus.values_mut()[0][k] = -shift;
            let fd = (j(&plus) - j(&minus)) / (2.0 * delta);
            assert!((fd - grid.dt() * g[q]).abs() < 1e-6, "{fd} vs {}", grid.dt() * g[q]);
        }
    }

    #[test]
    fn flattop_vanishes_at_edges() {
        let grid = TimeGrid::new(10.0, 100, 1).unwrap();
        let s = flattop_shape(&grid, 2.0);
        assert_eq!(s[0], 0.0);
        assert!(s[100].abs() < 1e-30);
        assert_eq!(s[50], 1.0);
        assert!((s[10] - 0.5).abs() < 1e-12);
    }
}
