//! Set-property checks and decision procedures for whether a channel is a
//! unitary conjugation.
//!
//! Three routes decide unitarity:
//! - the Choi oracle: rank one with eigenvalue `d`;
//! - statement (2): the canonical projectors and the totally rotated
//!   projector are all mapped onto one-dimensional projectors, the canonical
//!   images staying orthogonal;
//! - statement (3): the map is unital and leaves the spectra of a complete,
//!   totally rotating pair invariant.
//!
//! The battery samples channels and fails on any disagreement between them.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_asymmetry, hermitian_eigen, max_abs, trace, CMatrix, DensityMatrix, C64,
};
use crate::random::{haar_unitary, seeded};
use crate::states::{graded_diagonal_block, totally_rotated_block};
use crate::superop::Superoperator;

/// Trace-preservation and positivity slack for the CPTP tag.
pub const CPTP_TOL: f64 = 1e-8;
/// Eigenvalue tolerance of the Choi rank-one test.
pub const CHOI_TOL: f64 = 1e-6;
/// Tolerance of the projector and spectrum routes on sampled channels.
pub const ROUTE_TOL: f64 = 1e-8;

/// A linear map on `d x d` matrices, tagged CPTP when it passed the check.
#[derive(Clone, Debug)]
pub struct Channel {
    map: Superoperator,
    cptp: bool,
}

impl Channel {
    pub fn new(map: Superoperator) -> Self {
        let cptp = cptp_violation(&map).is_none();
        Self { map, cptp }
    }

    /// Accepts only CPTP maps.
    pub fn cptp(map: Superoperator) -> Result<Self> {
        match cptp_violation(&map) {
            None => Ok(Self { map, cptp: true }),
            Some(why) => Err(Error::NotCptp(why)),
        }
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn map(&self) -> &Superoperator {
        &self.map
    }

    pub fn is_cptp(&self) -> bool {
        self.cptp
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        self.map.apply(x)
    }
}

fn cptp_violation(map: &Superoperator) -> Option<String> {
    let tp = map.trace_preservation_error();
    if tp > CPTP_TOL {
        return Some(format!("trace not preserved ({tp:.3e})"));
    }
    let choi = map.choi();
    let asym = hermitian_asymmetry(&choi);
    if asym > CPTP_TOL {
        return Some(format!("Choi matrix not Hermitian ({asym:.3e})"));
    }
    let (values, _) = hermitian_eigen(&choi);
    let low = values.last().copied().unwrap_or(0.0);
    if low < -CPTP_TOL * map.dim() as f64 {
        return Some(format!("Choi eigenvalue {low:.3e} negative"));
    }
    None
}

fn is_rank_one_projector(p: &CMatrix, tol: f64) -> bool {
    hermitian_asymmetry(p) <= tol
        && max_abs(&(p * p - p)) <= tol
        && (trace(p) - C64::new(1.0, 0.0)).norm() <= tol
}

fn check_projector(p: &CMatrix, what: &str) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::NotSquare {
            rows: p.nrows(),
            cols: p.ncols(),
        });
    }
    if !is_rank_one_projector(p, crate::numeric::TOL.projector) {
        return Err(Error::NotProjector(format!("{what} is not a rank-1 projector")));
    }
    Ok(())
}

/// True iff `p` has a non-vanishing product with every basis projector.
pub fn is_totally_rotated(p: &CMatrix, basis: &[CMatrix]) -> Result<bool> {
    let tol = crate::numeric::TOL.projector;
    check_projector(p, "candidate")?;
    for (i, b) in basis.iter().enumerate() {
        crate::operator::check_dims(b.nrows(), p.nrows())?;
        check_projector(b, &format!("basis element {i}"))?;
        for other in &basis[..i] {
            if (b * other).norm() > tol {
                return Err(Error::NotProjector(format!(
                    "basis element {i} is not orthogonal to the others"
                )));
            }
        }
    }
    Ok(basis.iter().all(|b| (p * b).norm() > tol))
}

/// Outcome of analysing a set of density matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetAnalysis {
    pub complete: bool,
    pub totally_rotating: bool,
    /// Set when a near-degenerate spectrum prevented a decision.
    pub diagnostic: Option<String>,
}

impl SetAnalysis {
    pub fn holds(&self) -> bool {
        self.complete && self.totally_rotating
    }
}

/// One-dimensional eigenprojectors of `rho`: eigenvalues isolated from all
/// others by more than the gap.
fn one_dim_projectors(rho: &CMatrix, gap: f64) -> (Vec<CMatrix>, bool) {
    let (values, vectors) = hermitian_eigen(rho);
    let n = values.len();
    let mut out = Vec::new();
    let mut near_degenerate = false;
    for k in 0..n {
        let left = k > 0 && values[k - 1] - values[k] <= gap;
        let right = k + 1 < n && values[k] - values[k + 1] <= gap;
        if left || right {
            near_degenerate |= !is_cluster_exact(&values, k, gap);
            continue;
        }
        let v = vectors.column(k);
        out.push(&v * v.adjoint());
    }
    (out, near_degenerate)
}

/// A cluster spread over less than `gap / 100` counts as an honest
/// degeneracy rather than an ambiguity.
fn is_cluster_exact(values: &[f64], k: usize, gap: f64) -> bool {
    let (mut lo, mut hi) = (k, k);
    while lo > 0 && values[lo - 1] - values[lo] <= gap {
        lo -= 1;
    }
    while hi + 1 < values.len() && values[hi] - values[hi + 1] <= gap {
        hi += 1;
    }
    values[lo] - values[hi] <= 0.01 * gap
}

/// Searches `candidates` for `d` mutually orthogonal projectors.
fn orthogonal_bases(candidates: &[CMatrix], d: usize, tol: f64) -> Vec<Vec<usize>> {
    fn extend(
        c: &[CMatrix],
        d: usize,
        tol: f64,
        start: usize,
        chosen: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if chosen.len() == d {
            found.push(chosen.clone());
            return;
        }
        for i in start..c.len() {
            if chosen.iter().all(|&j| (&c[i] * &c[j]).norm() <= tol) {
                chosen.push(i);
                extend(c, d, tol, i + 1, chosen, found);
                chosen.pop();
            }
        }
    }
    let mut found = Vec::new();
    extend(candidates, d, tol, 0, &mut Vec::new(), &mut found);
    found
}

/// Whether the eigenprojectors of the set contain a complete orthogonal
/// family and a member projector totally rotated with respect to it.
pub fn analyse_set(set: &[DensityMatrix]) -> Result<SetAnalysis> {
    let tol = crate::numeric::TOL.projector;
    let gap = crate::numeric::TOL.eigen_gap;
    let Some(first) = set.first() else {
        return Err(Error::InvalidState("empty set".into()));
    };
    let d = first.dim();
    let mut candidates: Vec<CMatrix> = Vec::new();
    let mut near_degenerate = false;
    for rho in set {
        crate::operator::check_dims(rho.dim(), d)?;
        let (ps, nd) = one_dim_projectors(rho.matrix(), gap);
        near_degenerate |= nd;
        for p in ps {
            if !candidates.iter().any(|q| max_abs(&(q - &p)) <= tol) {
                candidates.push(p);
            }
        }
    }
    let diagnostic = near_degenerate.then(|| {
        format!("eigenvalues closer than {gap:e}: affected eigenprojectors were not used")
    });
    let bases = orthogonal_bases(&candidates, d, tol);
    let complete = !bases.is_empty();
    let totally_rotating = bases.iter().any(|basis| {
        let members: Vec<CMatrix> = basis.iter().map(|&i| candidates[i].clone()).collect();
        candidates.iter().enumerate().any(|(i, p)| {
            !basis.contains(&i) && is_totally_rotated(p, &members).unwrap_or(false)
        })
    });
    Ok(SetAnalysis {
        complete,
        totally_rotating,
        diagnostic,
    })
}

pub fn is_complete_totally_rotating(set: &[DensityMatrix]) -> Result<bool> {
    analyse_set(set).map(|a| a.holds())
}

/// True iff the sorted spectra of `rho` and its image agree within `tol`.
pub fn spectrum_invariant(ch: &Channel, rho: &DensityMatrix, tol: f64) -> bool {
    let Ok(image) = ch.apply(rho.matrix()) else {
        return false;
    };
    let (before, _) = hermitian_eigen(rho.matrix());
    let (after, _) = hermitian_eigen(&image);
    hermitian_asymmetry(&image) <= tol
        && before.iter().zip(&after).all(|(a, b)| (a - b).abs() <= tol)
}

/// `|D(I/d) - I/d|` in the Frobenius norm is at most `tol`.
pub fn is_unital(ch: &Channel, tol: f64) -> bool {
    let d = ch.dim();
    let mixed = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
    match ch.apply(&mixed) {
        Ok(img) => (img - mixed).norm() <= tol,
        Err(_) => false,
    }
}

/// Choi-matrix oracle: a CPTP map is a unitary conjugation iff its Choi
/// matrix has rank one (the single eigenvalue then equals `d`).
pub fn channel_is_unitary(ch: &Channel) -> Result<bool> {
    if !ch.is_cptp() {
        return Err(Error::NotCptp(
            cptp_violation(ch.map()).unwrap_or_else(|| "untagged".into()),
        ));
    }
    let d = ch.dim() as f64;
    let (values, _) = hermitian_eigen(&ch.map().choi());
    Ok((values[0] - d).abs() <= CHOI_TOL && values[1..].iter().all(|v| v.abs() <= CHOI_TOL))
}

/// Statement-(2) route.
pub fn maps_projectors_to_projectors(ch: &Channel, tol: f64) -> bool {
    let d = ch.dim();
    let mut images = Vec::with_capacity(d);
    for i in 0..d {
        match ch.apply(&crate::operator::matrix_unit(d, i, i)) {
            Ok(img) if is_rank_one_projector(&img, tol) => images.push(img),
            _ => return false,
        }
    }
    for i in 0..d {
        for j in 0..i {
            if (&images[i] * &images[j]).norm() > tol {
                return false;
            }
        }
    }
    matches!(ch.apply(&totally_rotated_block(d)), Ok(img) if is_rank_one_projector(&img, tol))
}

/// The complete, totally rotating pair used by the statement-(3) route.
pub fn reference_pair(d: usize) -> [DensityMatrix; 2] {
    [
        DensityMatrix::physical(graded_diagonal_block(d)).expect("valid state"),
        DensityMatrix::physical(totally_rotated_block(d)).expect("valid state"),
    ]
}

/// Statement-(3) route.
pub fn unital_and_spectrum_preserving(ch: &Channel, pair: &[DensityMatrix], tol: f64) -> bool {
    is_unital(ch, tol) && pair.iter().all(|rho| spectrum_invariant(ch, rho, tol))
}

/// Convex mixture of `n_terms` Haar-random unitary conjugations. Every weight
/// is at least `floor`.
pub fn random_unitary_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_terms: usize,
    floor: f64,
) -> Result<Superoperator> {
    if n_terms == 0 || !(0.0..1.0).contains(&(floor * n_terms as f64)) {
        return Err(Error::InvalidParameter(format!(
            "cannot mix {n_terms} terms with weight floor {floor}"
        )));
    }
    let raw: Vec<f64> = (0..n_terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let free = 1.0 - floor * n_terms as f64;
    let terms: Vec<(f64, Superoperator)> = raw
        .iter()
        .map(|r| {
            let u = haar_unitary(rng, dim);
            (floor + free * r / total, Superoperator::from_unitary(&u))
        })
        .collect();
    Superoperator::combine(&terms)
}

/// Random CPTP map with `rank` Kraus operators taken from a Haar-random
/// Stinespring isometry. Generally neither unital nor unitary.
pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<Superoperator> {
    if rank == 0 {
        return Err(Error::InvalidParameter("Kraus rank must be positive".into()));
    }
    let u = haar_unitary(rng, dim * rank);
    let iso = u.matrix().columns(0, dim);
    let kraus: Vec<CMatrix> = (0..rank)
        .map(|k| iso.rows(k * dim, dim).into_owned())
        .collect();
    Superoperator::from_kraus(&kraus)
}

/// Weight floor of the sampled mixtures: keeps mixtures away from unitaries.
pub const MIXTURE_FLOOR: f64 = 0.05;

/// A channel from the battery's distribution: 1 to 4 mixed unitaries, so
/// roughly a quarter of the samples are unitary.
pub fn sample_battery_channel<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Superoperator> {
    let n = rng.random_range(1..=4);
    random_unitary_mixture(rng, dim, n, MIXTURE_FLOOR)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Disagreement {
    pub sample: usize,
    pub choi: bool,
    pub projectors: bool,
    pub spectra: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryReport {
    pub dim: usize,
    pub samples: usize,
    pub unitary: usize,
    pub disagreements: Vec<Disagreement>,
}

impl BatteryReport {
    /// No disagreement; an empty battery passes vacuously.
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }

    /// Samples on which the statement-2 route matched the Choi oracle.
    pub fn projector_agreements(&self) -> usize {
        self.samples - self.disagreements.iter().filter(|d| d.projectors != d.choi).count()
    }

    /// Samples on which the statement-3 route matched the Choi oracle.
    pub fn spectrum_agreements(&self) -> usize {
        self.samples - self.disagreements.iter().filter(|d| d.spectra != d.choi).count()
    }
}

/// Samples `samples` channels at dimension `dim` and compares the three
/// unitarity routes on each.
pub fn theorem_battery(dim: usize, samples: usize, seed: u64) -> Result<BatteryReport> {
    let mut rng = seeded(seed);
    let pair = reference_pair(dim);
    if !is_complete_totally_rotating(&pair)? {
        return Err(Error::InvalidState("reference pair is not totally rotating".into()));
    }
    let mut unitary = 0;
    let mut disagreements = Vec::new();
    for sample in 0..samples {
        let ch = Channel::cptp(sample_battery_channel(&mut rng, dim)?)?;
        let choi = channel_is_unitary(&ch)?;
        let projectors = maps_projectors_to_projectors(&ch, ROUTE_TOL);
        let spectra = unital_and_spectrum_preserving(&ch, &pair, ROUTE_TOL);
        unitary += usize::from(choi);
        if choi != projectors || choi != spectra {
            disagreements.push(Disagreement {
                sample,
                choi,
                projectors,
                spectra,
            });
        }
    }
    Ok(BatteryReport {
        dim,
        samples,
        unitary,
        disagreements,
    })
}
