use gateopt::lindblad::{ControlPulse, Propagator, TimeGrid, Integrator};
use gateopt::models::{build_rydberg, build_transmon, RydbergParams, TransmonParams};
use gateopt::operator::{kron, max_abs, trace};
use gateopt::random::{haar_state, random_density, seeded};
use gateopt::units::mhz;
use gateopt::{CMatrix, DensityMatrix, C64};

/// Two-tone pulse with peak amplitude `peak_mhz` on the real quadrature.
fn wiggly(grid: TimeGrid, n: usize, seed: u64, peak_mhz: f64) -> ControlPulse {
    let phase = seed as f64;
    ControlPulse::from_fn(grid, n, |c, t| {
        let s = (std::f64::consts::PI * t / grid.t_final).sin();
        let w = 0.3 + 0.1 * c as f64;
        C64::new(
            mhz(peak_mhz) * s * (w * t + phase).cos(),
            0.4 * mhz(peak_mhz) * s * (0.7 * w * t).sin(),
        )
    })
}

/// Partial traces of a state on `C^4 (x) C^4`.
fn reduced(rho: &CMatrix) -> (CMatrix, CMatrix) {
    let mut a = CMatrix::zeros(4, 4);
    let mut b = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                a[(i, j)] += rho[(4 * i + k, 4 * j + k)];
                b[(i, j)] += rho[(4 * k + i, 4 * k + j)];
            }
        }
    }
    (a, b)
}

#[test]
fn rydberg_atoms_factorize_without_interaction() {
    let params = RydbergParams {
        u_mhz: 0.0,
        ..RydbergParams::default()
    };
    let built = build_rydberg(&params).unwrap();
    let grid = TimeGrid::new(params.t_final_ns, 1500, 4).unwrap();
    let prop = Propagator::new(&built.model, &grid, Integrator::LawsonRk4).unwrap();
    let mut rng = seeded(2);
    let rho0 = kron(&random_density(&mut rng, 4), &random_density(&mut rng, 4));
    let out = prop
        .forward(&wiggly(grid, 2, 1, 200.0), &DensityMatrix::physical(rho0).unwrap(), false)
        .unwrap();
    let rho = out.final_state.matrix();
    let (a, b) = reduced(rho);
    // exact in the continuum; what remains is fourth-order integration error
    let err = max_abs(&(rho - kron(&a, &b)));
    assert!(err < 1e-8, "{err}");
}

#[test]
fn rydberg_level_one_population_is_conserved() {
    let params = RydbergParams::default();
    let built = build_rydberg(&params).unwrap();
    let grid = TimeGrid::new(params.t_final_ns, 1500, 1).unwrap();
    let prop = Propagator::new(&built.model, &grid, Integrator::LawsonRk4).unwrap();
    let mut rng = seeded(8);
    for seed in 0..3 {
        let psi = built.embedding.embed_vector(&haar_state(&mut rng, 4)).unwrap();
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let out = prop.forward(&wiggly(grid, 2, seed, 200.0), &rho0, false).unwrap();
        for atom in 0..2 {
            let pop = |m: &CMatrix| {
                (0..16)
                    .filter(|&i| if atom == 0 { i / 4 == 1 } else { i % 4 == 1 })
                    .map(|i| m[(i, i)].re)
                    .sum::<f64>()
            };
            let before = pop(rho0.matrix());
            let after = pop(out.final_state.matrix());
            assert!((before - after).abs() < 1e-7, "atom {atom}: {before} -> {after}");
        }
    }
}

#[test]
fn transmon_without_dissipation_keeps_states_pure() {
    let params = TransmonParams {
        dissipation_scale: 0.0,
        ..TransmonParams::default()
    };
    let built = build_transmon(&params).unwrap();
    let psi = built.embedding.embed_vector(&haar_state(&mut seeded(4), 4)).unwrap();
    let rho0 = DensityMatrix::pure(&psi).unwrap();
    let purity_error = |substeps: usize| {
        let grid = TimeGrid::new(params.t_final_ns, 4000, substeps).unwrap();
        let prop = Propagator::new(&built.model, &grid, Integrator::LawsonRk4).unwrap();
        let out = prop.forward(&wiggly(grid, 1, 0, 50.0), &rho0, false).unwrap();
        let rho = out.final_state.matrix();
        (trace(&(rho * rho)).re - 1.0).abs()
    };
    let coarse = purity_error(1);
    let fine = purity_error(4);
    assert!(coarse < 1e-5, "{coarse}");
    assert!(fine < 1e-8 || fine < coarse / 50.0, "{fine} vs {coarse}");
}

#[test]
fn transmon_dissipation_lowers_purity_in_proportion() {
    let purity_loss = |scale: f64| {
        let params = TransmonParams {
            dissipation_scale: scale,
            ..TransmonParams::default()
        };
        let built = build_transmon(&params).unwrap();
        let grid = TimeGrid::new(params.t_final_ns, 2000, 1).unwrap();
        let prop = Propagator::new(&built.model, &grid, Integrator::LawsonRk4).unwrap();
        let psi = built.embedding.embed_vector(&haar_state(&mut seeded(4), 4)).unwrap();
        let out = prop
            .forward(&ControlPulse::zeros(grid, 1), &DensityMatrix::pure(&psi).unwrap(), false)
            .unwrap();
        1.0 - out.final_state.purity()
    };
    let full = purity_loss(1.0);
    let weak = purity_loss(0.1);
    // 400 ns against microsecond lifetimes: the loss is small and nearly linear
    assert!(full > 1e-3 && full < 0.1, "{full}");
    assert!((weak / full - 0.1).abs() < 0.01, "{weak} vs {full}");
}
