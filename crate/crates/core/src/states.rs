//! Sets of initial states entering the optimization functional, their
//! weights, and the terminal conditions of the adjoint states.
//!
//! All states are built on the logical block (ordering `|00>, |01>, |10>,
//! |11>` for two qubits) and then placed into the full Hilbert space through
//! a [`SubspaceEmbedding`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{outer, CMatrix, CVector, DensityMatrix, Operator, SubspaceEmbedding, C64};
use crate::numeric::TOL;

/// Which reduced (or full) set of states is propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    /// Phase-error state and totally mixed state (diagonal gates only).
    #[serde(rename = "diagonal-2")]
    Diagonal2,
    /// Graded diagonal state, totally rotated projector, totally mixed state.
    #[serde(rename = "minimal-3")]
    Minimal3,
    /// Logical basis projectors plus the totally rotated projector.
    #[serde(rename = "extended-d+1")]
    ExtendedDPlus1,
    /// Logical basis projectors plus a mutually unbiased basis.
    #[serde(rename = "mub-2d")]
    Mub2d,
    /// Spanning set of the logical Liouville space.
    #[serde(rename = "full-d2")]
    FullD2,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetKind::Diagonal2 => "diagonal-2",
            SetKind::Minimal3 => "minimal-3",
            SetKind::ExtendedDPlus1 => "extended-d+1",
            SetKind::Mub2d => "mub-2d",
            SetKind::FullD2 => "full-d2",
        };
        f.write_str(s)
    }
}

/// Extension variants accepted by [`build_extended_set`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    DPlusOne,
    TwoD,
}

/// Weight ratio `w2/w3 = 10` used for the two-state diagonal set.
pub const PHASE_EMPHASIS_WEIGHTS: [f64; 2] = [10.0, 1.0];
/// Weight ratios `w1/w2 = w1/w3 = 20` used for the three-state set.
pub const BASIS_EMPHASIS_WEIGHTS: [f64; 3] = [20.0, 1.0, 1.0];

/// Ordered initial states with weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSet {
    kind: SetKind,
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
    embedding: SubspaceEmbedding,
}

impl StateSet {
    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn embedding(&self) -> &SubspaceEmbedding {
        &self.embedding
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn logical_dim(&self) -> usize {
        self.embedding.logical_dim()
    }

    /// Per-state prefactors `w_i / Tr[rho_i(0)^2]`.
    pub fn prefactors(&self) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w / s.purity())
            .collect()
    }

    fn from_blocks(
        kind: SetKind,
        emb: &SubspaceEmbedding,
        blocks: Vec<CMatrix>,
        weights: &[f64],
    ) -> Result<Self> {
        let weights = normalize_weights(weights, blocks.len())?;
        let states = blocks
            .iter()
            .map(|b| DensityMatrix::physical(emb.embed_raw(b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            states,
            weights,
            embedding: emb.clone(),
        })
    }
}

fn normalize_weights(weights: &[f64], expected: usize) -> Result<Vec<f64>> {
    if weights.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weights must be positive and finite, got {weights:?}"
        )));
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / total).collect())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn require_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::LogicalDimTooSmall(d));
    }
    Ok(())
}

/// Diagonal state with non-degenerate populations `2(d-i+1)/(d(d+1))`.
pub fn graded_diagonal_block(d: usize) -> CMatrix {
    let norm = (d * (d + 1)) as f64;
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            real(2.0 * (d - i) as f64 / norm)
        } else {
            real(0.0)
        }
    })
}

/// Projector onto the uniform superposition, totally rotated with respect
/// to the logical basis.
pub fn totally_rotated_block(d: usize) -> CMatrix {
    CMatrix::from_element(d, d, real(1.0 / d as f64))
}

/// Totally mixed state on the logical block.
pub fn mixed_block(d: usize) -> CMatrix {
    CMatrix::identity(d, d) * real(1.0 / d as f64)
}

fn basis_projector(d: usize, i: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, i)] = real(1.0);
    m
}

/// Vectors of the two-qubit basis mutually unbiased to the logical basis.
pub fn mub_vectors() -> [CVector; 4] {
    let signs = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    signs.map(|s| CVector::from_iterator(4, s.iter().map(|&x| real(0.5 * x))))
}

/// Three-state set: graded diagonal, totally rotated, totally mixed.
pub fn build_minimal_set(emb: &SubspaceEmbedding, weights: [f64; 3]) -> Result<StateSet> {
    let d = emb.logical_dim();
    require_dim(d)?;
    StateSet::from_blocks(
        SetKind::Minimal3,
        emb,
        vec![graded_diagonal_block(d), totally_rotated_block(d), mixed_block(d)],
        &weights,
    )
}

/// Two-state set for Hamiltonians that only admit diagonal gates.
pub fn build_diagonal_set(emb: &SubspaceEmbedding, weights: [f64; 2]) -> Result<StateSet> {
    let d = emb.logical_dim();
    require_dim(d)?;
    StateSet::from_blocks(
        SetKind::Diagonal2,
        emb,
        vec![totally_rotated_block(d), mixed_block(d)],
        &weights,
    )
}

/// `d+1` or `2d` pure-state sets with equal weights.
pub fn build_extended_set(emb: &SubspaceEmbedding, ext: Extension) -> Result<StateSet> {
    let d = emb.logical_dim();
    require_dim(d)?;
    let mut blocks: Vec<CMatrix> = (0..d).map(|i| basis_projector(d, i)).collect();
    let kind = match ext {
        Extension::DPlusOne => {
            blocks.push(totally_rotated_block(d));
            SetKind::ExtendedDPlus1
        }
        Extension::TwoD => {
            if d != 4 {
                return Err(Error::UnsupportedMubDimension(d));
            }
            blocks.extend(mub_vectors().iter().map(outer));
            SetKind::Mub2d
        }
    };
    let weights = vec![1.0; blocks.len()];
    StateSet::from_blocks(kind, emb, blocks, &weights)
}

/// `d^2` pure states spanning the logical operator space: the basis
/// projectors, then for each pair `i < j` the superpositions
/// `(|i> + |j>)/sqrt2` and `(|i> + i|j>)/sqrt2`.
pub fn build_full_basis(emb: &SubspaceEmbedding) -> Result<StateSet> {
    let d = emb.logical_dim();
    require_dim(d)?;
    let mut blocks: Vec<CMatrix> = (0..d).map(|i| basis_projector(d, i)).collect();
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            for phase in [real(1.0), C64::new(0.0, 1.0)] {
                let mut v = CVector::zeros(d);
                v[i] = real(amp);
                v[j] = phase * amp;
                blocks.push(outer(&v));
            }
        }
    }
    let weights = vec![1.0; blocks.len()];
    StateSet::from_blocks(SetKind::FullD2, emb, blocks, &weights)
}

/// Builds any set kind; `weights` is only consulted for the two mixed-state
/// sets (`None` means equal weights).
pub fn build_set(
    kind: SetKind,
    emb: &SubspaceEmbedding,
    weights: Option<&[f64]>,
) -> Result<StateSet> {
    match kind {
        SetKind::Diagonal2 => {
            let w = fixed_weights::<2>(weights)?;
            build_diagonal_set(emb, w)
        }
        SetKind::Minimal3 => {
            let w = fixed_weights::<3>(weights)?;
            build_minimal_set(emb, w)
        }
        SetKind::ExtendedDPlus1 => build_extended_set(emb, Extension::DPlusOne),
        SetKind::Mub2d => build_extended_set(emb, Extension::TwoD),
        SetKind::FullD2 => build_full_basis(emb),
    }
}

fn fixed_weights<const N: usize>(weights: Option<&[f64]>) -> Result<[f64; N]> {
    match weights {
        None => Ok([1.0; N]),
        Some(w) => w.try_into().map_err(|_| Error::LengthMismatch {
            expected: N,
            got: w.len(),
        }),
    }
}

/// Embeds a logical-block gate into the full space, rejecting non-unitary
/// gates.
pub fn embed_gate(o: &Operator, emb: &SubspaceEmbedding) -> Result<Operator> {
    let dev = o.unitarity_deviation();
    if o.dim() == emb.logical_dim() && dev > TOL.unitarity {
        return Err(Error::NotUnitary { deviation: dev });
    }
    emb.embed(o)
}

/// Ideal images `O rho_i(0) O^dag` of every set member.
pub fn ideal_images(set: &StateSet, o: &Operator) -> Result<Vec<CMatrix>> {
    let full = embed_gate(o, set.embedding())?;
    let om = full.matrix();
    Ok(set
        .states()
        .iter()
        .map(|s| om * s.matrix() * om.adjoint())
        .collect())
}

/// Terminal conditions `sigma_i(T) = (w_i / Tr[rho_i^2]) O rho_i(0) O^dag`.
pub fn target_states(set: &StateSet, o: &Operator) -> Result<Vec<DensityMatrix>> {
    let images = ideal_images(set, o)?;
    images
        .into_iter()
        .zip(set.prefactors())
        .map(|(m, c)| DensityMatrix::unchecked(m * real(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{hermitian_spectrum, hs_overlap_raw};
    use approx::assert_abs_diff_eq;

    fn two_qubits() -> SubspaceEmbedding {
        SubspaceEmbedding::identity(4)
    }

    #[test]
    fn minimal_set_d4() {
        let set = build_minimal_set(&two_qubits(), [1.0, 1.0, 1.0]).unwrap();
        let rho1 = set.states()[0].matrix();
        for (i, v) in [0.4, 0.3, 0.2, 0.1].iter().enumerate() {
            assert_abs_diff_eq!(rho1[(i, i)].re, *v, epsilon = 1e-15);
        }
        let rho2 = set.states()[1].matrix();
        assert!(rho2.iter().all(|z| (*z - real(0.25)).norm() < 1e-15));
        let spec = hermitian_spectrum(set.states()[1].operator()).unwrap();
        assert_abs_diff_eq!(spec[0], 1.0, epsilon = 1e-12);
        assert!(spec[1..].iter().all(|x| x.abs() < 1e-12));
        assert_abs_diff_eq!(set.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minimal_set_d2() {
        let set = build_minimal_set(&SubspaceEmbedding::identity(2), [1.0, 2.0, 3.0]).unwrap();
        let rho1 = set.states()[0].matrix();
        assert_abs_diff_eq!(rho1[(0, 0)].re, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho1[(1, 1)].re, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(set.weights()[2], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn minimal_set_rejects_one_level() {
        let emb = SubspaceEmbedding::new(3, vec![1]).unwrap();
        assert_eq!(
            build_minimal_set(&emb, [1.0; 3]).unwrap_err(),
            Error::LogicalDimTooSmall(1)
        );
    }

    #[test]
    fn diagonal_set_weights() {
        let set = build_diagonal_set(&two_qubits(), PHASE_EMPHASIS_WEIGHTS).unwrap();
        assert_abs_diff_eq!(set.weights()[0], 10.0 / 11.0, epsilon = 1e-15);
        assert_abs_diff_eq!(set.weights()[1], 1.0 / 11.0, epsilon = 1e-15);
        let eq = build_diagonal_set(&two_qubits(), [1.0, 1.0]).unwrap();
        assert_eq!(eq.weights(), &[0.5, 0.5]);
        let spec = hermitian_spectrum(eq.states()[1].operator()).unwrap();
        assert!(spec.iter().all(|x| (x - 0.25).abs() < 1e-14));
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(build_diagonal_set(&two_qubits(), [1.0, 0.0]).is_err());
        assert!(build_minimal_set(&two_qubits(), [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn extended_sets() {
        let set = build_extended_set(&two_qubits(), Extension::DPlusOne).unwrap();
        assert_eq!(set.len(), 5);
        assert!(set.states()[4].matrix().iter().all(|z| (*z - real(0.25)).norm() < 1e-15));
        assert!(set.weights().iter().all(|w| (w - 0.2).abs() < 1e-15));

        let mub = build_extended_set(&two_qubits(), Extension::TwoD).unwrap();
        assert_eq!(mub.len(), 8);
        let phi2 = CVector::from_vec(vec![real(0.5), real(-0.5), real(0.5), real(-0.5)]);
        let expected = outer(&phi2);
        assert!((mub.states()[5].matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn mub_rejects_other_dims() {
        let emb = SubspaceEmbedding::identity(3);
        assert_eq!(
            build_extended_set(&emb, Extension::TwoD).unwrap_err(),
            Error::UnsupportedMubDimension(3)
        );
    }

    #[test]
    fn mub_is_unbiased() {
        for v in mub_vectors() {
            for i in 0..4 {
                assert_abs_diff_eq!(v[i].norm_sqr(), 0.25, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn full_basis_counts() {
        assert_eq!(build_full_basis(&two_qubits()).unwrap().len(), 16);
        let two = build_full_basis(&SubspaceEmbedding::identity(2)).unwrap();
        assert_eq!(two.len(), 4);
        for s in two.states() {
            assert_abs_diff_eq!(s.matrix().trace().re, 1.0, epsilon = 1e-15);
        }
        // Gram matrix of the four d=2 states has full rank
        let gram = CMatrix::from_fn(4, 4, |a, b| {
            hs_overlap_raw(two.states()[a].matrix(), two.states()[b].matrix())
        });
        let sv = gram.singular_values();
        assert!(sv.iter().all(|s| *s > 1e-6), "{sv}");
    }

    #[test]
    fn target_states_identity_gate() {
        let set = build_minimal_set(&two_qubits(), [1.0, 1.0, 1.0]).unwrap();
        let targets = target_states(&set, &Operator::identity(4)).unwrap();
        for ((t, s), c) in targets.iter().zip(set.states()).zip(set.prefactors()) {
            assert!((t.matrix() - s.matrix() * real(c)).norm() < 1e-14);
        }
    }

    #[test]
    fn target_states_cphase_on_rotated_projector() {
        let set = build_diagonal_set(&two_qubits(), [1.0, 1.0]).unwrap();
        let cz = Operator::from_diagonal(&[real(1.0), real(1.0), real(1.0), real(-1.0)]);
        let targets = target_states(&set, &cz).unwrap();
        // rho_2 is pure, so the prefactor is w_2 itself.
        assert_abs_diff_eq!(set.prefactors()[0], set.weights()[0], epsilon = 1e-14);
        let scale = set.weights()[0] * 0.25;
        let m = targets[0].matrix();
        for i in 0..4 {
            for j in 0..4 {
                let sign = if (i == 3) != (j == 3) { -1.0 } else { 1.0 };
                assert_abs_diff_eq!(m[(i, j)].re, sign * scale, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn target_states_reject_non_unitary() {
        let set = build_diagonal_set(&two_qubits(), [1.0, 1.0]).unwrap();
        let o = Operator::from_diagonal(&[real(1.0), real(1.0), real(1.0), real(0.5)]);
        match target_states(&set, &o) {
            Err(Error::NotUnitary { deviation }) => assert_abs_diff_eq!(deviation, 0.75),
            other => panic!("unexpected {other:?}"),
        }
    }
}
