use super::engine::{Generator, Integrator, Workspace};
use super::{ControlPulse, LindbladModel, TimeGrid};
use crate::error::{Error, Result};
use crate::numeric::TOL;
use crate::operator::{
    check_dims, hermitian_asymmetry, trace, CMatrix, DensityMatrix,
    SubspaceEmbedding, C64, I,
};
use crate::superop::Superoperator;

/// Result of a forward propagation.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub final_state: DensityMatrix,
    /// States at all `nt + 1` grid points when requested.
    pub trajectory: Option<Vec<CMatrix>>,
}

/// Direction of time stepping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Backward,
}

/// A model compiled for a fixed grid; reusable across pulses and states.
#[derive(Clone, Debug)]
pub struct Propagator {
    dim: usize,
    n_controls: usize,
    grid: TimeGrid,
    integrator: Integrator,
    forward: Generator,
    backward: Generator,
}

impl Propagator {
    pub fn new(model: &LindbladModel, grid: &TimeGrid, integrator: Integrator) -> Result<Self> {
        let d = model.dim();
        let half = C64::new(0.5, 0.0);
        let k = model.h0().matrix() - model.decay_operator() * (I * half);
        let mut quads = Vec::with_capacity(2 * model.n_controls());
        for c in model.controls() {
            quads.push(c.x.matrix().clone());
            quads.push(c.y.matrix().clone());
        }
        let mut jumps_f = Vec::new();
        let mut jumps_b = Vec::new();
        for c in model.collapse_ops() {
            if c.rate > 0.0 {
                let a = c.op.matrix() * C64::new(c.rate.sqrt(), 0.0);
                jumps_b.push(a.adjoint());
                jumps_f.push(a);
            }
        }
        let h = grid.step();
        let forward = Generator::compile(&k, &quads, &jumps_f, h, integrator);
        // Adjoint generator: K -> -K^dag, H_c -> -H_c, A -> A^dag.
        let neg_quads: Vec<CMatrix> = quads.iter().map(|q| -q).collect();
        let backward = Generator::compile(&(-k.adjoint()), &neg_quads, &jumps_b, h, integrator);
        Ok(Self {
            dim: d,
            n_controls: model.n_controls(),
            grid: *grid,
            integrator,
            forward,
            backward,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub(crate) fn workspace(&self) -> Workspace {
        Workspace::new(self.dim)
    }

    pub(crate) fn check_pulse(&self, pulse: &ControlPulse) -> Result<()> {
        if pulse.grid() != &self.grid {
            return Err(Error::InvalidGrid(
                "pulse grid differs from the propagator grid".into(),
            ));
        }
        if pulse.n_controls() != self.n_controls {
            return Err(Error::LengthMismatch {
                expected: self.n_controls,
                got: pulse.n_controls(),
            });
        }
        Ok(())
    }

    fn generator(&self, dir: Direction) -> &Generator {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// Loads the interval's control amplitudes into the workspace.
    pub(crate) fn load(&self, dir: Direction, amplitudes: &[f64], ws: &mut Workspace) {
        self.generator(dir).load(amplitudes, ws);
    }

    /// Advances `y` across one interval with the amplitudes last loaded.
    pub(crate) fn step_interval(
        &self,
        dir: Direction,
        y: &mut CMatrix,
        ws: &mut Workspace,
        hermitian: bool,
    ) {
        let g = self.generator(dir);
        for _ in 0..self.grid.substeps {
            g.step(y.as_mut_slice(), ws, hermitian);
        }
    }

    pub(crate) fn advance(
        &self,
        dir: Direction,
        amplitudes: &[f64],
        y: &mut CMatrix,
        ws: &mut Workspace,
        hermitian: bool,
    ) {
        self.load(dir, amplitudes, ws);
        self.step_interval(dir, y, ws, hermitian);
    }

    fn evolve(
        &self,
        pulse: &ControlPulse,
        m: &CMatrix,
        hermitian: bool,
        positive: bool,
        mut store: Option<&mut Vec<CMatrix>>,
    ) -> Result<CMatrix> {
        self.check_pulse(pulse)?;
        check_dims(m.nrows(), self.dim)?;
        check_dims(m.ncols(), self.dim)?;
        let mut ws = self.workspace();
        let mut amps = Vec::new();
        let mut y = m.clone();
        let tr0 = trace(m);
        let tol = TOL.propagation_trace * tr0.norm().max(1.0);
        if let Some(s) = store.as_deref_mut() {
            s.push(y.clone());
        }
        for k in 0..self.grid.nt {
            pulse.amplitudes_into(k, &mut amps);
            self.advance(Direction::Forward, &amps, &mut y, &mut ws, hermitian);
            let tr = trace(&y);
            if !(tr.re.is_finite() && tr.im.is_finite()) {
                return Err(Error::IntegratorBreach {
                    interval: k,
                    reason: "state became non-finite".into(),
                });
            }
            if (tr - tr0).norm() > tol {
                return Err(Error::IntegratorBreach {
                    interval: k,
                    reason: format!("trace drifted by {:.3e}", (tr - tr0).norm()),
                });
            }
            if positive {
                let pop = y.diagonal().iter().fold(0.0f64, |acc, z| acc.max(z.re.abs()));
                if pop > tr0.norm() * (1.0 + 1e-6) {
                    return Err(Error::IntegratorBreach {
                        interval: k,
                        reason: format!("population {pop:.3e} out of range"),
                    });
                }
            }
            if let Some(s) = store.as_deref_mut() {
                s.push(y.clone());
            }
        }
        Ok(y)
    }

    pub fn forward(
        &self,
        pulse: &ControlPulse,
        rho0: &DensityMatrix,
        store: bool,
    ) -> Result<Propagation> {
        let mut traj = store.then(|| Vec::with_capacity(self.grid.nt + 1));
        let y = self.evolve(pulse, rho0.matrix(), true, rho0.is_physical(), traj.as_mut())?;
        let asym = hermitian_asymmetry(&y);
        if asym > TOL.propagation_trace {
            return Err(Error::IntegratorBreach {
                interval: self.grid.nt - 1,
                reason: format!("Hermiticity lost ({asym:.3e})"),
            });
        }
        Ok(Propagation {
            final_state: DensityMatrix::unchecked(y)?,
            trajectory: traj,
        })
    }

    /// Forward propagation of an arbitrary matrix (linear extension).
    pub fn forward_matrix(&self, pulse: &ControlPulse, m: &CMatrix) -> Result<CMatrix> {
        self.evolve(pulse, m, false, false, None)
    }

    /// Adjoint propagation from `T` down to `0`; entry `k` is the state at `t_k`.
    pub fn backward(&self, pulse: &ControlPulse, sigma_t: &CMatrix) -> Result<Vec<CMatrix>> {
        self.check_pulse(pulse)?;
        check_dims(sigma_t.nrows(), self.dim)?;
        check_dims(sigma_t.ncols(), self.dim)?;
        let scale = crate::operator::max_abs(sigma_t).max(1.0);
        let hermitian = hermitian_asymmetry(sigma_t) <= 1e-12 * scale;
        let mut y = if hermitian {
            (sigma_t + sigma_t.adjoint()) * C64::new(0.5, 0.0)
        } else {
            sigma_t.clone()
        };
        let nt = self.grid.nt;
        let mut traj = vec![CMatrix::zeros(self.dim, self.dim); nt + 1];
        let mut ws = self.workspace();
        let mut amps = Vec::new();
        traj[nt] = y.clone();
        for k in (0..nt).rev() {
            pulse.amplitudes_into(k, &mut amps);
            self.advance(Direction::Backward, &amps, &mut y, &mut ws, hermitian);
            if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::IntegratorBreach {
                    interval: k,
                    reason: "adjoint state became non-finite".into(),
                });
            }
            traj[k] = y.clone();
        }
        Ok(traj)
    }

    /// Map on the logical block obtained by propagating embedded matrix units.
    pub fn dynamical_map(
        &self,
        pulse: &ControlPulse,
        emb: &SubspaceEmbedding,
    ) -> Result<Superoperator> {
        check_dims(emb.full_dim(), self.dim)?;
        let d = emb.logical_dim();
        Superoperator::from_fn(d, |unit| {
            let full = emb.embed_raw(unit);
            let out = self.forward_matrix(pulse, &full)?;
            Ok(emb.extract_raw(&out))
        })
    }
}

pub fn propagate_forward(
    model: &LindbladModel,
    pulse: &ControlPulse,
    rho0: &DensityMatrix,
    store: bool,
) -> Result<Propagation> {
    Propagator::new(model, pulse.grid(), Integrator::default())?.forward(pulse, rho0, store)
}

pub fn propagate_backward(
    model: &LindbladModel,
    pulse: &ControlPulse,
    sigma_t: &CMatrix,
) -> Result<Vec<CMatrix>> {
    Propagator::new(model, pulse.grid(), Integrator::default())?.backward(pulse, sigma_t)
}

pub fn dynamical_map(
    model: &LindbladModel,
    pulse: &ControlPulse,
    emb: &SubspaceEmbedding,
) -> Result<Superoperator> {
    Propagator::new(model, pulse.grid(), Integrator::default())?.dynamical_map(pulse, emb)
}
