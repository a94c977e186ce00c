//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; the process fails if any criterion does.
//!
//! Individual criteria can be selected by number:
//! `cargo test --release --test acceptance -- 1 5 7`.

use std::time::Instant;

use gateopt::functionals::{eval_j_dist, f_avg, f_avg_monte_carlo};
use gateopt::krotov::{flattop_shape, optimize, OptimizationProblem, Status, StopCriteria};
use gateopt::lindblad::reference::propagate_exact;
use gateopt::lindblad::{
    CollapseOperator, ControlCoupling, ControlPulse, Integrator, LindbladModel, Propagator,
    TimeGrid,
};
use gateopt::models::{
    build_rydberg, build_transmon, cphase_target, guess_pulse, sqrt_iswap_target, BuiltModel,
    GuessShape, RydbergParams, TransmonParams,
};
use gateopt::operator::{hermitian_asymmetry, matrix_unit, max_abs, trace};
use gateopt::random::{ginibre, haar_unitary, random_density, random_hermitian, seeded};
use gateopt::states::{
    build_minimal_set, build_set, SetKind, BASIS_EMPHASIS_WEIGHTS, PHASE_EMPHASIS_WEIGHTS,
};
use gateopt::superop::Superoperator;
use gateopt::units::mhz;
use gateopt::verify::{random_cptp, random_unitary_mixture, theorem_battery};
use gateopt::{CMatrix, DensityMatrix, Operator, SubspaceEmbedding, C64};

const ALL_KINDS: [SetKind; 5] = [
    SetKind::Diagonal2,
    SetKind::Minimal3,
    SetKind::ExtendedDPlus1,
    SetKind::Mub2d,
    SetKind::FullD2,
];

const RYDBERG_LAMBDA: f64 = 0.05;
const TRANSMON_LAMBDA: f64 = 0.1;
const TRANSMON_NT: usize = 4000;
/// Iterations for the transmon plateau runs.
const PLATEAU_ITERATIONS: usize = 400;
/// Published plateaus of the three-state transmon optimization.
const PLATEAU_FULL: f64 = 7e-3;
const PLATEAU_WEAK: f64 = 7e-4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn weights(kind: SetKind, emphasis: bool) -> Option<&'static [f64]> {
    match (kind, emphasis) {
        (SetKind::Diagonal2, true) => Some(&PHASE_EMPHASIS_WEIGHTS),
        (SetKind::Minimal3, true) => Some(&BASIS_EMPHASIS_WEIGHTS),
        _ => None,
    }
}

fn rydberg_problem(kind: SetKind, nt: usize, iterations: usize) -> (OptimizationProblem, BuiltModel) {
    let params = RydbergParams::default();
    let built = build_rydberg(&params).unwrap();
    let grid = TimeGrid::new(params.t_final_ns, nt, 1).unwrap();
    let guess = guess_pulse(
        grid,
        2,
        GuessShape::Gaussian {
            width_ns: params.t_final_ns / 8.0,
        },
        mhz(300.0),
    )
    .unwrap();
    let problem = OptimizationProblem {
        model: built.model.clone(),
        set: build_set(kind, &built.embedding, weights(kind, true)).unwrap(),
        target: cphase_target(std::f64::consts::PI),
        shape: flattop_shape(&grid, 5.0),
        guess,
        lambda_a: RYDBERG_LAMBDA,
        stop: StopCriteria {
            max_iterations: iterations,
            ..Default::default()
        },
        fidelity_every: 0,
        integrator: Integrator::LawsonRk4,
    };
    (problem, built)
}

fn transmon_problem(kind: SetKind, scale: f64, iterations: usize) -> (OptimizationProblem, BuiltModel) {
    let params = TransmonParams {
        dissipation_scale: scale,
        ..TransmonParams::default()
    };
    let built = build_transmon(&params).unwrap();
    let grid = TimeGrid::new(params.t_final_ns, TRANSMON_NT, 1).unwrap();
    let guess = guess_pulse(grid, 1, GuessShape::Flattop { ramp_ns: 20.0 }, mhz(35.0)).unwrap();
    let problem = OptimizationProblem {
        model: built.model.clone(),
        set: build_set(kind, &built.embedding, weights(kind, true)).unwrap(),
        target: sqrt_iswap_target(),
        shape: flattop_shape(&grid, 20.0),
        guess,
        lambda_a: TRANSMON_LAMBDA,
        stop: StopCriteria {
            max_iterations: iterations,
            ..Default::default()
        },
        fidelity_every: 0,
        integrator: Integrator::LawsonRk4,
    };
    (problem, built)
}

fn gate_error(problem: &OptimizationProblem, built: &BuiltModel, pulse: &ControlPulse) -> f64 {
    let prop = Propagator::new(&problem.model, pulse.grid(), problem.integrator).unwrap();
    let map = prop.dynamical_map(pulse, &built.embedding).unwrap();
    1.0 - f_avg(&map, &problem.target).unwrap()
}

/// Largest relative increase of the total functional between iterations.
fn worst_increase(j: &[f64]) -> f64 {
    j.windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_1() -> Outcome {
    let iterations = 50;
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut rydberg_time = 0.0;
    for (model, kind) in ALL_KINDS
        .iter()
        .map(|k| ("rydberg", *k))
        .chain(ALL_KINDS.iter().map(|k| ("transmon", *k)))
    {
        let start = Instant::now();
        let (problem, _) = match model {
            "rydberg" => rydberg_problem(kind, 2000, iterations),
            _ => transmon_problem(kind, 1.0, iterations),
        };
        let r = optimize(&problem).unwrap();
        if model == "rydberg" {
            rydberg_time += start.elapsed().as_secs_f64();
        }
        let j: Vec<f64> = r.trace.iter().map(|t| t.j_total).collect();
        let w = worst_increase(&j);
        worst = worst.max(w);
        let done = r.trace.len() - 1;
        if r.status != Status::MaxIter || done < iterations || w > 1e-10 {
            failures.push(format!("{model}/{kind}: {:?} after {done}", r.status));
        }
    }
    let budget = rydberg_time < 600.0;
    outcome(
        failures.is_empty() && budget,
        format!(
            "10 runs x {iterations} iterations, largest relative increase {worst:.1e}, \
             Rydberg runs {rydberg_time:.0} s{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; faults: {}", failures.join(", "))
            }
        ),
    )
}

struct Plateau {
    error: f64,
    /// Relative change of the gate error over the last quarter of the run.
    drift: f64,
    status: Status,
    seconds: f64,
}

fn transmon_plateau(scale: f64) -> Plateau {
    let start = Instant::now();
    let (mut problem, built) = transmon_problem(SetKind::Minimal3, scale, PLATEAU_ITERATIONS);
    problem.fidelity_every = PLATEAU_ITERATIONS / 4;
    let r = optimize(&problem).unwrap();
    let errors: Vec<f64> = r.trace.iter().filter_map(|t| t.gate_error).collect();
    let error = gate_error(&problem, &built, &r.final_pulse);
    let before = errors[errors.len().saturating_sub(2)];
    Plateau {
        error,
        drift: (error - before).abs() / error,
        status: r.status,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value >= reference / factor && value <= reference * factor
}

fn criterion_2(full: &Plateau) -> Outcome {
    let ok = within_factor(full.error, PLATEAU_FULL, 3.0)
        && full.drift < 0.1
        && full.status == Status::MaxIter
        && full.seconds < 3600.0;
    outcome(
        ok,
        format!(
            "gate error {:.3e} (accepted range {:.2e}..{:.2e}), change over the last {} iterations {:.1}%, {:.0} s",
            full.error,
            PLATEAU_FULL / 3.0,
            PLATEAU_FULL * 3.0,
            PLATEAU_ITERATIONS / 4,
            100.0 * full.drift,
            full.seconds
        ),
    )
}

fn criterion_3(full: &Plateau, weak: &Plateau) -> Outcome {
    let ratio = full.error / weak.error;
    let ok = within_factor(weak.error, PLATEAU_WEAK, 3.0)
        && within_factor(ratio, 10.0, 3.0)
        && weak.drift < 0.1
        && weak.status == Status::MaxIter;
    outcome(
        ok,
        format!(
            "gate error {:.3e} at one tenth of the rates (accepted range {:.2e}..{:.2e}), \
             ratio to full dissipation {ratio:.1}, change over the last {} iterations {:.1}%",
            weak.error,
            PLATEAU_WEAK / 3.0,
            PLATEAU_WEAK * 3.0,
            PLATEAU_ITERATIONS / 4,
            100.0 * weak.drift
        ),
    )
}

/// Optimizes with `kind` until at least `budget` propagations were spent.
fn run_to_budget(
    problem: &mut OptimizationProblem,
    built: &BuiltModel,
    budget: usize,
) -> (f64, usize) {
    let per_iteration = 2 * problem.set.len();
    problem.stop.max_iterations = (budget - problem.set.len()).div_ceil(per_iteration);
    let r = optimize(problem).unwrap();
    assert_eq!(r.status, Status::MaxIter, "{}", problem.set.kind());
    (gate_error(problem, built, &r.final_pulse), r.last().n_propagations)
}

fn criterion_4() -> Outcome {
    let budget = 2000;
    let mut details = Vec::new();
    let mut ok = true;
    for (model, reduced) in [("rydberg", SetKind::Diagonal2), ("transmon", SetKind::Minimal3)] {
        let mut errors = Vec::new();
        for kind in [reduced, SetKind::FullD2] {
            let (mut problem, built) = match model {
                "rydberg" => rydberg_problem(kind, 3000, 0),
                _ => transmon_problem(kind, 1.0, 0),
            };
            errors.push(run_to_budget(&mut problem, &built, budget));
        }
        let ((e_red, n_red), (e_full, n_full)) = (errors[0], errors[1]);
        ok &= e_red <= 1.2 * e_full;
        details.push(format!(
            "{model}: {reduced} {e_red:.3e} ({n_red} propagations) vs full-d2 {e_full:.3e} ({n_full})"
        ));
    }
    outcome(ok, details.join("; "))
}

fn criterion_5() -> Outcome {
    let mut rng = seeded(2024);
    let samples = 100_000;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let d = 2 + k % 3;
        let map = if k % 2 == 0 {
            random_cptp(&mut rng, d, 1 + k % 4).unwrap()
        } else {
            random_unitary_mixture(&mut rng, d, 1 + k % 3, 0.05).unwrap()
        };
        let o = haar_unitary(&mut rng, d);
        let exact = f_avg(&map, &o).unwrap();
        let (mean, err) = f_avg_monte_carlo(&map, &o, samples, 500 + k as u64).unwrap();
        let z = if err > 0.0 {
            (mean - exact).abs() / err
        } else if (mean - exact).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
    }
    let mut depolarizing = Vec::new();
    for d in 2..=4 {
        let map = Superoperator::depolarizing(d);
        let o = haar_unitary(&mut rng, d);
        let exact = f_avg(&map, &o).unwrap();
        let (mean, err) = f_avg_monte_carlo(&map, &o, samples, d as u64).unwrap();
        let inv = 1.0 / d as f64;
        // every sample is 1/d, so the standard error is at rounding level
        depolarizing.push((exact - inv).abs() < 1e-14 && (mean - inv).abs() <= (4.0 * err).max(1e-12));
    }
    outcome(
        worst <= 4.0 && depolarizing.iter().all(|&b| b),
        format!(
            "20 maps, largest deviation {worst:.2} standard errors; depolarizing 1/d at d = 2, 3, 4: {depolarizing:?}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = seeded(66);
    let set = build_minimal_set(&SubspaceEmbedding::identity(4), [1.0, 1.0, 1.0]).unwrap();
    let o = sqrt_iswap_target();
    let images = |u: &Operator| -> Vec<DensityMatrix> {
        let map = Superoperator::from_unitary(u);
        set.states()
            .iter()
            .map(|s| DensityMatrix::unchecked(map.apply(s.matrix()).unwrap()).unwrap())
            .collect()
    };
    let mut smallest = f64::INFINITY;
    let mut tested = 0;
    while tested < 100 {
        let u = haar_unitary(&mut rng, 4);
        if (u.matrix().adjoint() * o.matrix()).trace().norm() >= 4.0 - 1e-6 {
            continue;
        }
        tested += 1;
        smallest = smallest.min(eval_j_dist(&set, &images(&u), &o).unwrap());
    }
    let mut largest = 0.0f64;
    for _ in 0..10 {
        let theta = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU);
        let u = Operator::new(o.matrix() * C64::from_polar(1.0, theta)).unwrap();
        largest = largest.max(eval_j_dist(&set, &images(&u), &o).unwrap());
    }
    outcome(
        smallest > 1e-6 && largest < 1e-10,
        format!("smallest J_dist over 100 unitaries {smallest:.3e}, largest for global phases {largest:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let samples = 300;
    let mut ok = true;
    let mut parts = Vec::new();
    for d in 2..=4 {
        let r = theorem_battery(d, samples, 700 + d as u64).unwrap();
        ok &= r.passed() && r.samples >= 200;
        parts.push(format!(
            "d = {d}: {} disagreements, {} of {} unitary",
            r.disagreements.len(),
            r.unitary,
            r.samples
        ));
    }
    outcome(ok, parts.join("; "))
}

fn wiggly(grid: TimeGrid, n: usize, peak_mhz: f64) -> ControlPulse {
    ControlPulse::from_fn(grid, n, |c, t| {
        let s = (std::f64::consts::PI * t / grid.t_final).sin();
        let w = 0.3 + 0.1 * c as f64;
        C64::new(mhz(peak_mhz) * s * (w * t).cos(), 0.4 * mhz(peak_mhz) * s * (0.7 * w * t).sin())
    })
}

fn random_model(seed: u64, d: usize) -> LindbladModel {
    let mut rng = seeded(seed);
    let herm = |rng: &mut _, s: f64| Operator::hermitian(random_hermitian(rng, d) * C64::new(s, 0.0)).unwrap();
    let h0 = herm(&mut rng, 1.0);
    let x = herm(&mut rng, 0.5);
    let y = herm(&mut rng, 0.5);
    let jump = Operator::new(ginibre(&mut rng, d, d) * C64::new(0.5, 0.0)).unwrap();
    LindbladModel::new(
        h0,
        vec![ControlCoupling { x, y }],
        vec![CollapseOperator { op: jump, rate: 0.3 }],
    )
    .unwrap()
}

fn smooth(grid: TimeGrid) -> ControlPulse {
    ControlPulse::from_fn(grid, 1, |_, s| {
        let env = (std::f64::consts::PI * s / grid.t_final).sin().powi(2);
        C64::new(1.5 * env, 0.7 * env * (2.0 * s).cos())
    })
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    // trace and Hermiticity over full gate durations
    let rydberg = build_rydberg(&RydbergParams::default()).unwrap();
    let transmon = build_transmon(&TransmonParams::default()).unwrap();
    let mut drift = 0.0f64;
    for (built, t, nt) in [(&rydberg, 75.0, 3000), (&transmon, 400.0, TRANSMON_NT)] {
        let grid = TimeGrid::new(t, nt, 1).unwrap();
        let pulse = wiggly(grid, built.model.n_controls(), 40.0);
        let prop = Propagator::new(&built.model, &grid, Integrator::LawsonRk4).unwrap();
        let rho0 = DensityMatrix::physical(random_density(&mut seeded(8), built.model.dim())).unwrap();
        let traj = prop.forward(&pulse, &rho0, true).unwrap().trajectory.unwrap();
        for rho in &traj {
            drift = drift.max((trace(rho).re - 1.0).abs()).max(hermitian_asymmetry(rho));
        }
    }
    ok &= drift < 1e-8;
    parts.push(format!("trace/Hermiticity drift {drift:.1e}"));

    // amplitude damping against exp(-gamma t)
    let gamma = 0.7;
    let damping = LindbladModel::new(
        Operator::zeros(2),
        vec![],
        vec![CollapseOperator {
            op: Operator::new(matrix_unit(2, 0, 1)).unwrap(),
            rate: gamma,
        }],
    )
    .unwrap();
    let grid = TimeGrid::new(5.0, 500, 1).unwrap();
    let excited = DensityMatrix::physical(matrix_unit(2, 1, 1)).unwrap();
    let mut damping_err = 0.0f64;
    for scheme in [Integrator::Rk4, Integrator::LawsonRk4] {
        let prop = Propagator::new(&damping, &grid, scheme).unwrap();
        let traj = prop
            .forward(&ControlPulse::zeros(grid, 0), &excited, true)
            .unwrap()
            .trajectory
            .unwrap();
        for (k, rho) in traj.iter().enumerate() {
            damping_err = damping_err.max((rho[(1, 1)].re - (-gamma * grid.time(k)).exp()).abs());
        }
    }
    ok &= damping_err < 1e-6;
    parts.push(format!("amplitude damping error {damping_err:.1e}"));

    // fourth-order convergence of plain RK4
    let model = random_model(77, 3);
    let rho0 = DensityMatrix::physical(random_density(&mut seeded(78), 3)).unwrap();
    let run = |substeps: usize| {
        let grid = TimeGrid::new(4.0, 20, substeps).unwrap();
        let prop = Propagator::new(&model, &grid, Integrator::Rk4).unwrap();
        prop.forward(&smooth(grid), &rho0, false).unwrap().final_state.into_matrix()
    };
    let (a, b, c) = (run(1), run(2), run(4));
    let ratio = max_abs(&(&a - &b)) / max_abs(&(&b - &c));
    ok &= (12.0..=20.0).contains(&ratio);
    parts.push(format!("RK4 step-halving ratio {ratio:.1}"));

    // dense superoperator exponential
    let mut dense = 0.0f64;
    for (seed, d) in [(1u64, 2usize), (2, 4), (3, 9)] {
        let model = random_model(seed, d);
        let grid = TimeGrid::new(2.0, 200, 1).unwrap();
        let pulse = smooth(grid);
        let rho0 = random_density(&mut seeded(seed + 100), d);
        let expect = propagate_exact(&model, &pulse, &rho0).unwrap();
        for scheme in [Integrator::Rk4, Integrator::LawsonRk4] {
            let prop = Propagator::new(&model, &grid, scheme).unwrap();
            let got = prop.forward_matrix(&pulse, &rho0).unwrap();
            dense = dense.max(max_abs(&(got - &expect)));
        }
    }
    ok &= dense < 1e-7;
    parts.push(format!("dense-oracle deviation {dense:.1e}"));
    outcome(ok, parts.join(", "))
}

/// Population of single-atom level `|1>` summed over both atoms.
fn level_one_population(rho: &CMatrix) -> f64 {
    (0..16)
        .map(|i| rho[(i, i)].re * (f64::from(u8::from(i / 4 == 1)) + f64::from(u8::from(i % 4 == 1))))
        .sum()
}

fn criterion_9() -> Outcome {
    let (mut problem, built) = rydberg_problem(SetKind::Diagonal2, 3000, 30);
    problem.stop.max_iterations = 30;
    let r = optimize(&problem).unwrap();
    let pulse = r.final_pulse;
    let grid = *pulse.grid();
    let prop = Propagator::new(&problem.model, &grid, Integrator::LawsonRk4).unwrap();
    let mut rng = seeded(909);
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            // logical basis projectors and random logical mixtures
            let block = if j == 0 {
                matrix_unit(4, i, i)
            } else {
                random_density(&mut rng, 4)
            };
            let rho0 = DensityMatrix::physical(
                built.embedding.embed(&Operator::new(block).unwrap()).unwrap().into_matrix(),
            )
            .unwrap();
            let before = level_one_population(rho0.matrix());
            let traj = prop.forward(&pulse, &rho0, true).unwrap().trajectory.unwrap();
            for rho in &traj {
                worst = worst.max((level_one_population(rho) - before).abs());
            }
        }
    }
    outcome(
        worst < 1e-7,
        format!("largest change of the |1> population {worst:.1e} after 30 iterations of optimization"),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let run = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    };
    let cheap: [(usize, fn() -> Outcome); 4] = [(5, criterion_5), (6, criterion_6), (7, criterion_7), (8, criterion_8)];
    for (n, f) in cheap {
        if run(n) {
            report(n, f());
        }
    }
    if run(9) {
        report(9, criterion_9());
    }
    if run(1) {
        report(1, criterion_1());
    }
    if run(2) || run(3) {
        let full = transmon_plateau(1.0);
        if run(2) {
            report(2, criterion_2(&full));
        }
        if run(3) {
            let weak = transmon_plateau(0.1);
            report(3, criterion_3(&full, &weak));
        }
    }
    if run(4) {
        report(4, criterion_4());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
