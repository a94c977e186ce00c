//! The two benchmark systems, their gate targets and guess pulses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krotov::flattop;
use crate::lindblad::{CollapseOperator, ControlCoupling, ControlPulse, LindbladModel, TimeGrid};
use crate::operator::{kron, matrix_unit, CMatrix, Operator, SubspaceEmbedding, C64, I, ONE, ZERO};
use crate::units::{ghz, mhz, rate_from_us};

/// A model together with its logical subspace and control names.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: LindbladModel,
    pub embedding: SubspaceEmbedding,
    pub control_labels: Vec<String>,
}

/// Two Rydberg atoms, single-atom basis `{|0>, |1>, |i>, |r>}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RydbergParams {
    pub delta1_mhz: f64,
    pub delta2_mhz: f64,
    pub e1_ghz: f64,
    pub u_mhz: f64,
    /// Lifetime of `|i>`; `inf` switches decay off.
    pub tau_ns: f64,
    pub t_final_ns: f64,
}

impl Default for RydbergParams {
    fn default() -> Self {
        Self {
            delta1_mhz: 600.0,
            delta2_mhz: 0.0,
            e1_ghz: 6.8,
            u_mhz: 50.0,
            tau_ns: 25.0,
            t_final_ns: 75.0,
        }
    }
}

impl RydbergParams {
    /// Decay-free variant with the shorter gate time used for coherent runs.
    pub fn coherent() -> Self {
        Self {
            tau_ns: f64::INFINITY,
            t_final_ns: 50.0,
            ..Self::default()
        }
    }
}

fn unit(d: usize, i: usize, j: usize) -> CMatrix {
    matrix_unit(d, i, j)
}

fn herm(m: CMatrix) -> Result<Operator> {
    Operator::hermitian(m)
}

pub fn build_rydberg(p: &RydbergParams) -> Result<BuiltModel> {
    if !(p.tau_ns > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lifetime must be positive, got {}",
            p.tau_ns
        )));
    }
    let d1 = 4;
    let id = CMatrix::identity(d1, d1);
    let both = |a: &CMatrix| kron(a, &id) + kron(&id, a);
    let h1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        ZERO,
        C64::new(ghz(p.e1_ghz), 0.0),
        C64::new(mhz(p.delta1_mhz), 0.0),
        C64::new(mhz(p.delta2_mhz), 0.0),
    ]));
    let mut h0 = both(&h1);
    h0[(15, 15)] -= C64::new(mhz(p.u_mhz), 0.0);

    let half = C64::new(0.5, 0.0);
    let coupling = |a: usize, b: usize| -> Result<ControlCoupling> {
        let x = (unit(d1, a, b) + unit(d1, b, a)) * half;
        let y = (unit(d1, a, b) * (-I) + unit(d1, b, a) * I) * half;
        Ok(ControlCoupling {
            x: herm(both(&x))?,
            y: herm(both(&y))?,
        })
    };
    let controls = vec![coupling(0, 2)?, coupling(2, 3)?];

    let mut collapse = Vec::new();
    let rate = 1.0 / p.tau_ns;
    if rate > 0.0 {
        let a = unit(d1, 0, 2);
        collapse.push(CollapseOperator {
            op: Operator::new(kron(&a, &id))?,
            rate,
        });
        collapse.push(CollapseOperator {
            op: Operator::new(kron(&id, &a))?,
            rate,
        });
    }
    Ok(BuiltModel {
        model: LindbladModel::new(herm(h0)?, controls, collapse)?,
        embedding: SubspaceEmbedding::new(16, vec![0, 1, 4, 5])?,
        control_labels: vec!["omega_r".into(), "omega_b".into()],
    })
}

/// Two coupled transmons in the frame rotating at the drive frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmonParams {
    pub omega1_ghz: f64,
    pub omega2_ghz: f64,
    pub omega_d_ghz: f64,
    pub anharmonicity1_mhz: f64,
    pub anharmonicity2_mhz: f64,
    pub j_mhz: f64,
    pub t1_us: [f64; 2],
    pub t2_star_us: [f64; 2],
    /// Levels kept per transmon.
    pub levels: usize,
    pub t_final_ns: f64,
    pub dissipation_scale: f64,
}

impl Default for TransmonParams {
    fn default() -> Self {
        Self {
            omega1_ghz: 4.3796,
            omega2_ghz: 4.6137,
            omega_d_ghz: 4.4985,
            anharmonicity1_mhz: -239.3,
            anharmonicity2_mhz: -242.8,
            j_mhz: -2.3,
            t1_us: [38.0, 32.0],
            t2_star_us: [29.5, 16.0],
            levels: 5,
            t_final_ns: 400.0,
            dissipation_scale: 1.0,
        }
    }
}

impl TransmonParams {
    /// Detunings `omega_q - omega_d` in rad/ns.
    pub fn detunings(&self) -> [f64; 2] {
        [
            ghz(self.omega1_ghz - self.omega_d_ghz),
            ghz(self.omega2_ghz - self.omega_d_ghz),
        ]
    }
}

/// Lowering operator truncated at `n` levels.
pub fn lowering(n: usize) -> CMatrix {
    let mut b = CMatrix::zeros(n, n);
    for i in 1..n {
        b[(i - 1, i)] = C64::new((i as f64).sqrt(), 0.0);
    }
    b
}

pub fn build_transmon(p: &TransmonParams) -> Result<BuiltModel> {
    let n = p.levels;
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 levels per transmon, got {n}"
        )));
    }
    if !(p.dissipation_scale >= 0.0) {
        return Err(Error::InvalidParameter("dissipation_scale must be >= 0".into()));
    }
    let id = CMatrix::identity(n, n);
    let b = lowering(n);
    let b1 = kron(&b, &id);
    let b2 = kron(&id, &b);
    let num = b.adjoint() * &b;
    let n1 = kron(&num, &id);
    let n2 = kron(&id, &num);
    let [det1, det2] = p.detunings();
    let a1 = mhz(p.anharmonicity1_mhz);
    let a2 = mhz(p.anharmonicity2_mhz);
    let re = |x: f64| C64::new(x, 0.0);
    let h0 = &n1 * re(det1 - a1 / 2.0)
        + &n1 * &n1 * re(a1 / 2.0)
        + &n2 * re(det2 - a2 / 2.0)
        + &n2 * &n2 * re(a2 / 2.0)
        + (b1.adjoint() * &b2 + &b1 * b2.adjoint()) * re(mhz(p.j_mhz));

    let sum = &b1 + &b2;
    let x = (&sum + sum.adjoint()) * re(0.5);
    let y = (&sum - sum.adjoint()) * (I * 0.5);
    let controls = vec![ControlCoupling {
        x: herm(x)?,
        y: herm(y)?,
    }];

    let mut collapse = Vec::new();
    for q in 0..2 {
        let embed = |a: &CMatrix| if q == 0 { kron(a, &id) } else { kron(&id, a) };
        let gamma = rate_from_us(p.t1_us[q]) * p.dissipation_scale;
        let gamma_phi = rate_from_us(p.t2_star_us[q]) * p.dissipation_scale;
        for i in 1..n {
            collapse.push(CollapseOperator {
                op: Operator::new(embed(&unit(n, i - 1, i)))?,
                rate: i as f64 * gamma,
            });
        }
        for i in 0..n {
            collapse.push(CollapseOperator {
                op: Operator::new(embed(&unit(n, i, i)))?,
                rate: (i as f64).sqrt() * gamma_phi,
            });
        }
    }
    Ok(BuiltModel {
        model: LindbladModel::new(herm(h0)?, controls, collapse)?,
        embedding: SubspaceEmbedding::new(n * n, vec![0, 1, n, n + 1])?,
        control_labels: vec!["omega".into()],
    })
}

/// `diag(1, 1, 1, e^{i chi})`.
pub fn cphase_target(chi: f64) -> Operator {
    Operator::from_diagonal(&[ONE, ONE, ONE, C64::from_polar(1.0, chi)])
}

pub fn sqrt_iswap_target() -> Operator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::identity(4, 4);
    m[(1, 1)] = C64::new(s, 0.0);
    m[(2, 2)] = C64::new(s, 0.0);
    m[(1, 2)] = C64::new(0.0, s);
    m[(2, 1)] = C64::new(0.0, s);
    Operator::new(m).expect("square")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum GuessShape {
    /// Centered at `T/2` with standard deviation `width_ns`.
    Gaussian { width_ns: f64 },
    /// Flat plateau with `sin^2` ramps of `ramp_ns`.
    Flattop { ramp_ns: f64 },
}

/// Real-valued guess envelope with peak `amplitude` (rad/ns) on every control.
pub fn guess_pulse(
    grid: TimeGrid,
    n_controls: usize,
    shape: GuessShape,
    amplitude: f64,
) -> Result<ControlPulse> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "guess amplitude must be >= 0, got {amplitude}"
        )));
    }
    let t_final = grid.t_final;
    let envelope = move |t: f64| match shape {
        GuessShape::Gaussian { width_ns } => {
            (-0.5 * ((t - 0.5 * t_final) / width_ns).powi(2)).exp()
        }
        GuessShape::Flattop { ramp_ns } => flattop(t, t_final, ramp_ns),
    };
    Ok(ControlPulse::from_fn(grid, n_controls, |_, t| {
        C64::new(amplitude * envelope(t), 0.0)
    }))
}

/// Named parameter presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "rydberg-table1")]
    RydbergTable1,
    #[serde(rename = "transmon-table2")]
    TransmonTable2,
}
