use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::C64;

/// Uniform time grid `t_k = k T / nt`, `k = 0..=nt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub nt: usize,
    pub substeps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, nt: usize, substeps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidGrid(format!("total time must be positive, got {t_final}")));
        }
        if nt == 0 {
            return Err(Error::InvalidGrid("nt must be at least 1".into()));
        }
        if substeps == 0 {
            return Err(Error::InvalidGrid("substeps must be at least 1".into()));
        }
        Ok(Self {
            t_final,
            nt,
            substeps,
        })
    }

    /// Grid with the fewest intervals such that `dt <= max_dt`.
    pub fn with_max_step(t_final: f64, max_dt: f64) -> Result<Self> {
        let nt = (t_final / max_dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(t_final, nt, 1)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    /// Integrator step.
    pub fn step(&self) -> f64 {
        self.dt() / self.substeps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_final * k as f64 / self.nt as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.t_final * (k as f64 + 0.5) / self.nt as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.nt).map(|k| self.time(k)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.nt).map(|k| self.midpoint(k)).collect()
    }
}

/// Complex controls, constant on each interval (sampled at its midpoint).
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPulse {
    grid: TimeGrid,
    values: Vec<Vec<C64>>,
}

impl ControlPulse {
    pub fn new(grid: TimeGrid, values: Vec<Vec<C64>>) -> Result<Self> {
        for v in &values {
            if v.len() != grid.nt {
                return Err(Error::LengthMismatch {
                    expected: grid.nt,
                    got: v.len(),
                });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid, n_controls: usize) -> Self {
        Self {
            grid,
            values: vec![vec![C64::new(0.0, 0.0); grid.nt]; n_controls],
        }
    }

    /// Samples `f(control, t)` at interval midpoints.
    pub fn from_fn<F: Fn(usize, f64) -> C64>(grid: TimeGrid, n_controls: usize, f: F) -> Self {
        let values = (0..n_controls)
            .map(|c| grid.midpoints().into_iter().map(|t| f(c, t)).collect())
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_controls(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<C64>] {
        &mut self.values
    }

    pub fn control(&self, k: usize) -> &[C64] {
        &self.values[k]
    }

    /// `(Re, Im)` pairs of all controls on one interval.
    pub fn amplitudes(&self, interval: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.values.len());
        self.amplitudes_into(interval, &mut out);
        out
    }

    pub(crate) fn amplitudes_into(&self, interval: usize, out: &mut Vec<f64>) {
        out.clear();
        for v in &self.values {
            out.push(v[interval].re);
            out.push(v[interval].im);
        }
    }

    /// Largest amplitude modulus over all controls and intervals.
    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }
}
