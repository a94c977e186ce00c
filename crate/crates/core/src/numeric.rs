//! Shared numeric tolerances.
//!
//! Runtime checks and the test-suite read the same values from here.

/// Tolerance record used by constructors, propagators and checkers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance for operators tagged Hermitian.
    pub operator_hermiticity: f64,
    /// Hermiticity tolerance for physical density matrices (relative to max entry).
    pub state_hermiticity: f64,
    /// Allowed deviation of a state's trace from its construction value.
    pub state_trace: f64,
    /// Lowest admissible eigenvalue of a physical density matrix.
    pub positivity: f64,
    /// Allowed mismatch between the eigenvalue sum and the trace.
    pub spectrum_sum: f64,
    /// Trace drift that aborts a forward propagation.
    pub propagation_trace: f64,
    /// Unitarity check for gate targets.
    pub unitarity: f64,
    /// Eigenvalue gap separating one-dimensional eigenspaces.
    pub eigen_gap: f64,
    /// Rank-1 projector check.
    pub projector: f64,
    /// Relative slack on the monotonic decrease of the total functional.
    pub monotonicity: f64,
    /// Imaginary residue accepted when evaluating the closed-form fidelity.
    pub fidelity_imag: f64,
}

/// The single tolerance policy of the crate.
pub const TOL: Tolerances = Tolerances {
    operator_hermiticity: 1e-12,
    state_hermiticity: 1e-10,
    state_trace: 1e-10,
    positivity: -1e-9,
    spectrum_sum: 1e-9,
    propagation_trace: 1e-8,
    unitarity: 1e-10,
    eigen_gap: 1e-8,
    projector: 1e-9,
    monotonicity: 1e-10,
    fidelity_imag: 1e-8,
};
