//! Sparse compiled form of a Lindblad generator and fixed-step integrators.
//!
//! The generator is written as `L(y) = -i(K y - y K^dag) + sum_j J y J^dag`
//! with `K = H - (i/2) sum gamma A^dag A`. Diagonal jump operators are folded
//! into an elementwise weight matrix. With the integrating-factor scheme the
//! real diagonal of `K` is propagated exactly by elementwise phase factors and
//! RK4 only sees the remainder.

use serde::{Deserialize, Serialize};

use crate::operator::{CMatrix, C64, I, ZERO};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta on the full generator.
    Rk4,
    /// Fourth-order Runge-Kutta in the interaction frame of the diagonal part.
    #[default]
    LawsonRk4,
}

#[derive(Clone, Debug)]
pub(crate) struct Generator {
    dim: usize,
    /// Slots of `K` in row-major (CSR) order: `row_ptr[r]..row_ptr[r+1]`.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    base: Vec<C64>,
    /// Per control quadrature, its coefficient on every slot.
    quads: Vec<Vec<C64>>,
    /// `(out index, y index, coefficient)` of the off-diagonal jump terms.
    jump_terms: Vec<(usize, usize, C64)>,
    /// Elementwise part: diagonal jumps and the control-free diagonal of `K`.
    weights: Option<Vec<C64>>,
    h: f64,
    /// Elementwise propagators of the diagonal over `h` and `h/2`.
    phase: Option<(Vec<C64>, Vec<C64>)>,
}

pub(crate) struct Workspace {
    kval: Vec<C64>,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
    scratch: Vec<C64>,
}

impl Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        let n = dim * dim;
        Self {
            kval: Vec::new(),
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
            scratch: vec![ZERO; n],
        }
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO))
}

impl Generator {
    /// `k`: effective non-Hermitian Hamiltonian at zero control; `quads`:
    /// coefficient operators of the real control amplitudes; `jumps`: jump
    /// operators with the square root of their rate folded in.
    pub(crate) fn compile(
        k: &CMatrix,
        quads: &[CMatrix],
        jumps: &[CMatrix],
        h: f64,
        integrator: Integrator,
    ) -> Self {
        let dim = k.nrows();
        let split = integrator == Integrator::LawsonRk4;
        let mut remainder = k.clone();
        let mut diag = vec![0.0; dim];
        if split {
            // Only the Hermitian part goes into the exponential: pure phases
            // leave the trace untouched, so the scheme stays trace preserving.
            for (a, d) in diag.iter_mut().enumerate() {
                *d = k[(a, a)].re;
                remainder[(a, a)] = C64::new(0.0, k[(a, a)].im);
            }
        }
        // Diagonal entries no control touches act elementwise:
        // -i(K_aa - conj K_bb) y_ab.
        let mut weights: Option<Vec<C64>> = None;
        let free_diag: Vec<bool> = (0..dim)
            .map(|a| remainder[(a, a)] != ZERO && quads.iter().all(|q| q[(a, a)] == ZERO))
            .collect();
        if free_diag.iter().any(|&f| f) {
            let w = weights.get_or_insert_with(|| vec![ZERO; dim * dim]);
            let kd = |a: usize| if free_diag[a] { remainder[(a, a)] } else { ZERO };
            for b in 0..dim {
                for a in 0..dim {
                    w[a + b * dim] += -I * (kd(a) - kd(b).conj());
                }
            }
            for (a, &f) in free_diag.iter().enumerate() {
                if f {
                    remainder[(a, a)] = ZERO;
                }
            }
        }

        let mut row_ptr = vec![0];
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let used = remainder[(r, c)] != ZERO || quads.iter().any(|q| q[(r, c)] != ZERO);
                if used {
                    rows.push(r);
                    cols.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let base = rows.iter().zip(&cols).map(|(&r, &c)| remainder[(r, c)]).collect();
        let quads = quads
            .iter()
            .map(|q| rows.iter().zip(&cols).map(|(&r, &c)| q[(r, c)]).collect())
            .collect();

        let mut jump_terms = Vec::new();
        for j in jumps {
            if is_diagonal(j) {
                let w = weights.get_or_insert_with(|| vec![ZERO; dim * dim]);
                for b in 0..dim {
                    for a in 0..dim {
                        w[a + b * dim] += j[(a, a)] * j[(b, b)].conj();
                    }
                }
            } else {
                let mut entries = Vec::new();
                for c in 0..dim {
                    for r in 0..dim {
                        if j[(r, c)] != ZERO {
                            entries.push((r, c, j[(r, c)]));
                        }
                    }
                }
                for &(a, c, alpha) in &entries {
                    for &(b, e, beta) in &entries {
                        jump_terms.push((a + b * dim, c + e * dim, alpha * beta.conj()));
                    }
                }
            }
        }

        let phase = split.then(|| {
            let make = |step: f64| {
                let mut e = vec![ZERO; dim * dim];
                for b in 0..dim {
                    for a in 0..dim {
                        e[a + b * dim] = C64::from_polar(1.0, -(diag[a] - diag[b]) * step);
                    }
                }
                e
            };
            (make(h), make(0.5 * h))
        });

        Self {
            dim,
            row_ptr,
            cols,
            base,
            quads,
            jump_terms,
            weights,
            h,
            phase,
        }
    }

    /// Slot values of `K` for the given real control amplitudes.
    pub(crate) fn load(&self, amplitudes: &[f64], ws: &mut Workspace) {
        ws.kval.clear();
        ws.kval.extend_from_slice(&self.base);
        for (q, &a) in self.quads.iter().zip(amplitudes) {
            if a != 0.0 {
                for (kv, &c) in ws.kval.iter_mut().zip(q) {
                    *kv += c * a;
                }
            }
        }
    }

    /// Generator minus the diagonal handled by the phase factors.
    fn apply(&self, kval: &[C64], y: &[C64], out: &mut [C64], scratch: &mut [C64], hermitian: bool) {
        let d = self.dim;
        let rp = &self.row_ptr;
        if hermitian {
            // y = y^dag, so W = (K y)^dag has columns W[:, r] = sum_c conj(K_rc) y[:, c]
            // and -i(M - M^dag) reads W both ways.
            scratch.fill(ZERO);
            for (r, wc) in scratch.chunks_exact_mut(d).enumerate() {
                for s in rp[r]..rp[r + 1] {
                    let v = kval[s].conj();
                    let c = self.cols[s];
                    for (w, &yi) in wc.iter_mut().zip(&y[c * d..(c + 1) * d]) {
                        *w += v * yi;
                    }
                }
            }
            for b in 0..d {
                for a in 0..d {
                    let m = scratch[b + a * d].conj() - scratch[a + b * d];
                    out[a + b * d] = C64::new(m.im, -m.re);
                }
            }
        } else {
            for (yc, oc) in y.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                for (r, o) in oc.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for s in rp[r]..rp[r + 1] {
                        acc += kval[s] * yc[self.cols[s]];
                    }
                    *o = -I * acc;
                }
            }
            // + i y K^dag: column r of the result picks column c of y.
            for r in 0..d {
                for s in rp[r]..rp[r + 1] {
                    let pv = I * kval[s].conj();
                    let c = self.cols[s];
                    for a in 0..d {
                        out[a + r * d] += pv * y[a + c * d];
                    }
                }
            }
        }
        for &(o, i, coef) in &self.jump_terms {
            out[o] += coef * y[i];
        }
        if let Some(w) = &self.weights {
            for ((o, &wi), &yi) in out.iter_mut().zip(w).zip(y) {
                *o += wi * yi;
            }
        }
    }

    /// One integrator step of length `h` with the loaded controls.
    pub(crate) fn step(&self, y: &mut [C64], ws: &mut Workspace, hermitian: bool) {
        let h = self.h;
        let Workspace {
            kval,
            k1,
            k2,
            k3,
            k4,
            tmp,
            scratch,
        } = ws;
        match &self.phase {
            None => {
                self.apply(kval, y, k1, scratch, hermitian);
                for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
                    *t = yi + k * (0.5 * h);
                }
                self.apply(kval, tmp, k2, scratch, hermitian);
                for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
                    *t = yi + k * (0.5 * h);
                }
                self.apply(kval, tmp, k3, scratch, hermitian);
                for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
                    *t = yi + k * h;
                }
                self.apply(kval, tmp, k4, scratch, hermitian);
                for i in 0..y.len() {
                    y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            Some((e, e2)) => {
                self.apply(kval, y, k1, scratch, hermitian);
                for i in 0..y.len() {
                    tmp[i] = e2[i] * (y[i] + k1[i] * (0.5 * h));
                }
                self.apply(kval, tmp, k2, scratch, hermitian);
                for i in 0..y.len() {
                    tmp[i] = e2[i] * y[i] + k2[i] * (0.5 * h);
                }
                self.apply(kval, tmp, k3, scratch, hermitian);
                for i in 0..y.len() {
                    tmp[i] = e[i] * y[i] + e2[i] * k3[i] * h;
                }
                self.apply(kval, tmp, k4, scratch, hermitian);
                for i in 0..y.len() {
                    y[i] = e[i] * (y[i] + k1[i] * (h / 6.0))
                        + e2[i] * (k2[i] + k3[i]) * (h / 3.0)
                        + k4[i] * (h / 6.0);
                }
            }
        }
    }
}
