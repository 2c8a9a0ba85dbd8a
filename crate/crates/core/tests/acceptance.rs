//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! measured residual before asserting, so `--nocapture` gives a summary.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::Command;

use subgeom::density::{
    assemble_density, observable_average, relative_subphase_matrix, DensityMatrixSnapshot,
};
use subgeom::model::{
    build_two_level, Drive, DriveTerm, HamiltonianModel, Regime, SplitMode, TwoLevelSpec, Waveform,
};
use subgeom::numerics::{
    cumulative_trapezoid, random_hermitian, CVector, ComplexMatrix, StateVector, TimeGrid, C64,
};
use subgeom::phases::{
    aa_phase, berry_phase_connection, berry_phase_decomposed, direct_connection_integral,
    phase_distance, sub_geometric_phases, sub_phase_quadrature, wrap_phase, PhaseLedger,
    DEFAULT_THRESHOLD,
};
use subgeom::propagation::{
    adiabatic_expansion, assemble_state, direct_schrodinger_solve, first_order_coefficients,
    integrate_coefficients, CoefficientTrajectory, StateTrajectory,
};
use subgeom::twolevel::{analytic_dynamical, analytic_total_phase, TwoLevelAngles};

fn report(criterion: &str, passed: bool, detail: String) {
    println!(
        "{} {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn sci(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn max_over<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Case {
    name: &'static str,
    model: HamiltonianModel,
    initial: CVector,
}

struct Run {
    name: &'static str,
    model: HamiltonianModel,
    traj: CoefficientTrajectory,
    ledger: PhaseLedger,
    oracle: StateTrajectory,
}

fn ramp_spec() -> TwoLevelSpec {
    TwoLevelSpec {
        delta: 1.0,
        w_mag: Waveform::ramp(0.3, 1.2),
        w_phase: Waveform::winding(),
    }
}

fn grid(t_end: f64, n: usize) -> TimeGrid {
    TimeGrid::new(0.0, t_end, n).unwrap()
}

fn random_four_level(grid: TimeGrid) -> HamiltonianModel {
    let drive = Drive::Terms(vec![
        DriveTerm {
            matrix: random_hermitian(4, 0.3, 11),
            waveform: Waveform::Sinusoid {
                amplitude: 1.0,
                cycles: 2.0,
                phase: 0.0,
                offset: 0.0,
            },
        },
        DriveTerm {
            matrix: random_hermitian(4, 0.2, 12),
            waveform: Waveform::ramp(0.0, 1.0),
        },
    ]);
    HamiltonianModel::new(
        random_hermitian(4, 1.0, 7),
        drive,
        SplitMode::Initial,
        grid,
        Regime::Nonadiabatic,
    )
    .unwrap()
}

/// The oracle-comparison runs: n_steps = 4000 over T = 10.
fn cases() -> Vec<Case> {
    let g = grid(10.0, 4000);
    let ground = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let mixed = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
    vec![
        Case {
            name: "two-level initial split",
            model: build_two_level(&ramp_spec(), g, SplitMode::Initial).unwrap(),
            initial: ground.clone(),
        },
        Case {
            name: "two-level bare split",
            model: build_two_level(&ramp_spec(), g, SplitMode::Bare).unwrap(),
            initial: ground,
        },
        Case {
            name: "two-level superposition",
            model: build_two_level(&ramp_spec(), g, SplitMode::Initial).unwrap(),
            initial: mixed,
        },
        Case {
            name: "random four-level",
            model: random_four_level(g),
            initial: CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, -0.5)]),
        },
    ]
}

fn run(case: Case) -> Run {
    let g = *case.model.grid();
    let traj = integrate_coefficients(&case.model, &case.initial, &g).unwrap();
    let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD).unwrap();
    let psi0 = StateVector::new(traj.basis().unitary() * &case.initial).unwrap();
    let oracle = direct_schrodinger_solve(&case.model, &psi0, &g).unwrap();
    Run {
        name: case.name,
        model: case.model,
        traj,
        ledger,
        oracle,
    }
}

fn runs() -> Vec<Run> {
    cases().into_iter().map(run).collect()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let mut ok = true;
    for r in runs() {
        let d = assemble_state(&r.traj, None)
            .unwrap()
            .max_distance(&r.oracle)
            .unwrap();
        let regrouped = assemble_state(&r.traj, Some(&r.ledger))
            .unwrap()
            .max_distance(&r.oracle)
            .unwrap();
        let pass = d <= 1e-6 && regrouped <= 1e-6;
        ok &= pass;
        report(
            "1 oracle equivalence",
            pass,
            format!(
                "{}: max |ψ - ψ_direct| = {d:.3e}, via phase ledger {regrouped:.3e} (tol 1e-6)",
                r.name
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_2_connection_identity() {
    let mut trajectories: Vec<(String, CoefficientTrajectory)> = runs()
        .into_iter()
        .map(|r| (r.name.to_string(), r.traj))
        .collect();
    let m = build_two_level(&ramp_spec(), grid(10.0, 4000), SplitMode::Initial).unwrap();
    trajectories.push((
        "adiabatic expansion".into(),
        adiabatic_expansion(&m, 0, m.grid()).unwrap(),
    ));
    let m = build_two_level(&ramp_spec(), grid(10.0, 4000), SplitMode::Bare).unwrap();
    trajectories.push((
        "adiabatic expansion, bare".into(),
        adiabatic_expansion(&m, 0, m.grid()).unwrap(),
    ));

    let mut ok = true;
    for (name, traj) in trajectories {
        let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD).unwrap();
        let d = (berry_phase_decomposed(&traj, &ledger).unwrap()
            - direct_connection_integral(&traj).unwrap())
        .abs();
        ok &= d <= 1e-10;
        report(
            "2 connection identity",
            d <= 1e-10,
            format!("{name}: {d:.3e} (tol 1e-10)"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_3_adiabatic_consistency() {
    let mut beta_err = Vec::new();
    let mut berry_err = Vec::new();
    for t_end in [50.0, 100.0, 200.0] {
        // Δ = 0 puts the whole loop on θ = π/2
        let g = grid(t_end, (200.0 * t_end) as usize);
        let m = HamiltonianModel::new(
            ComplexMatrix::zeros(2),
            Drive::TwoLevel {
                w_mag: Waveform::constant(1.0),
                w_phase: Waveform::winding(),
            },
            SplitMode::Initial,
            g,
            Regime::Adiabatic,
        )
        .unwrap();
        let c0 = StateVector::basis(2, 0).amplitudes().clone();
        let traj = integrate_coefficients(&m, &c0, &g).unwrap();
        let r = aa_phase(&traj, &m, t_end).unwrap();
        let berry = berry_phase_connection(&m, 0, &g).unwrap();
        beta_err.push(phase_distance(r.aa_beta, PI));
        berry_err.push(phase_distance(berry, PI));
    }
    // The discrete connection phase of an equatorial loop is π to rounding at
    // every rate, so "monotone" is read as non-increasing above rounding.
    let beta_monotone = beta_err.windows(2).all(|w| w[1] < w[0]);
    let berry_monotone = berry_err.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let berry_close = berry_err[2] <= 1e-6;
    report(
        "3 adiabatic consistency",
        beta_monotone,
        format!(
            "|β_AA - π| over T = 50, 100, 200: {} (strictly decreasing)",
            sci(&beta_err)
        ),
    );
    report(
        "3 adiabatic consistency",
        berry_monotone && berry_close,
        format!(
            "|β_Berry - π| over T = 50, 100, 200: {} (non-increasing, ≤ 1e-6 at T = 200)",
            sci(&berry_err)
        ),
    );
    assert!(beta_monotone && berry_monotone && berry_close);
}

#[test]
fn criterion_4_aa_decomposition() {
    let mut ok = true;
    for r in runs() {
        let g = *r.traj.grid();
        let tau = g.t_end();
        let p = aa_phase(&r.traj, &r.model, tau).unwrap();
        let phi = r.oracle.states[0]
            .dotc(r.oracle.states.last().unwrap())
            .arg();
        let energy: Vec<f64> = g
            .times()
            .zip(&r.oracle.states)
            .map(|(t, psi)| {
                psi.dotc(&r.model.evaluate_hamiltonian(t).unwrap().apply(psi))
                    .re
            })
            .collect();
        let alpha = -*cumulative_trapezoid(&energy, &g).unwrap().last().unwrap();
        let d_phi = phase_distance(p.total_phi, phi);
        let d_alpha = (p.dynamical_alpha - alpha).abs();
        let exact = p.aa_beta == wrap_phase(p.total_phi - p.dynamical_alpha);
        let pass = d_phi <= 1e-6 && d_alpha <= 1e-6 && exact;
        ok &= pass;
        report(
            "4 AA decomposition",
            pass,
            format!(
                "{}: |φ - φ_direct| = {d_phi:.3e}, |α - α_direct| = {d_alpha:.3e} (tol 1e-6), β = φ - α exact: {exact}",
                r.name
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_5_two_level_closed_forms() {
    let spec = TwoLevelSpec {
        delta: 1.0,
        w_mag: Waveform::constant(1.0),
        w_phase: Waveform::constant(0.0),
    };
    let alpha = analytic_dynamical(&spec, &grid(1.0, 100)).unwrap();
    let d_alpha = (alpha + 2f64.sqrt()).abs();
    report(
        "5 closed forms",
        d_alpha <= 1e-10,
        format!("α(Δ = |w| = 1, τ = 1) + √2 = {d_alpha:.3e} (tol 1e-10)"),
    );

    let g = grid(1.0, 100);
    let total = |theta: f64, delta: Waveform| {
        let a = TwoLevelAngles::new(Waveform::constant(theta), delta, g).unwrap();
        analytic_total_phase(&a, 1.0).unwrap()
    };
    let cases = [
        (
            "θ(0) = θ(τ), δ(0) = δ(τ)",
            total(0.8, Waveform::constant(0.2)),
            0.0,
        ),
        (
            "θ = π/2, full winding",
            total(FRAC_PI_2, Waveform::winding()),
            0.0,
        ),
        (
            "θ = π/2, quarter winding",
            total(FRAC_PI_2, Waveform::ramp(0.0, FRAC_PI_2)),
            -FRAC_PI_4,
        ),
    ];
    let mut ok = d_alpha <= 1e-10;
    for (name, got, want) in cases {
        let d = (got - want).abs();
        ok &= d <= 1e-12;
        report(
            "5 closed forms",
            d <= 1e-12,
            format!("total phase, {name}: {d:.3e} (tol 1e-12)"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_6_density_invariants() {
    let mut ok = true;
    for r in runs() {
        let (mut herm, mut trace, mut idem, mut outer) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (j, t) in r.traj.grid().times().enumerate() {
            let s = assemble_density(&r.traj, &r.ledger, t).unwrap();
            herm = herm.max(s.hermiticity_residual());
            trace = trace.max((s.trace() - c(1.0, 0.0)).norm());
            idem = idem.max(s.idempotency_residual());
            let psi = assemble_state(&r.traj, None).unwrap().states[j].clone();
            outer = outer.max(s.rho.max_abs_diff(&ComplexMatrix::outer(&psi)));
        }
        let pass = herm <= 1e-10 && trace <= 1e-8 && idem <= 1e-8 && outer <= 1e-8;
        ok &= pass;
        report(
            "6 density invariants",
            pass,
            format!(
                "{}: hermiticity {herm:.3e} (1e-10), trace {trace:.3e} (1e-8), idempotency {idem:.3e} (1e-8), outer product {outer:.3e} (1e-8)",
                r.name
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_7_perturbative_order() {
    let g = grid(10.0, 4000);
    let errors: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&eps| {
            let spec = TwoLevelSpec {
                delta: 1.0,
                w_mag: Waveform::constant(eps),
                w_phase: Waveform::winding(),
            };
            let m = build_two_level(&spec, g, SplitMode::Bare).unwrap();
            let exact =
                integrate_coefficients(&m, StateVector::basis(2, 0).amplitudes(), &g).unwrap();
            let approx = first_order_coefficients(&m, 0, &g, true).unwrap();
            max_over(
                exact
                    .coefficients()
                    .iter()
                    .zip(approx.coefficients())
                    .map(|(a, b)| (a - b).norm()),
            )
        })
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    report(
        "7 perturbative order",
        pass,
        format!(
            "errors at ε = 0.02, 0.01, 0.005: {}; ratios {ratios:.4?} (range [3.5, 4.5])",
            sci(&errors)
        ),
    );
    assert!(pass);
}

fn observed_order(model: &HamiltonianModel, psi0: &StateVector, n: usize) -> f64 {
    let end = |steps: usize| {
        let g = model.grid().with_steps(steps).unwrap();
        direct_schrodinger_solve(&model.with_grid(g), psi0, &g)
            .unwrap()
            .states
            .pop()
            .unwrap()
    };
    let (a, b, c) = (end(n), end(2 * n), end(4 * n));
    ((&a - &b).norm() / (&b - &c).norm()).log2()
}

#[test]
fn criterion_8_numerical_hygiene() {
    let mut ok = true;

    let stationary = HamiltonianModel::stationary(
        ComplexMatrix::from_real_diagonal(&[-2.0, 0.5, 3.0]),
        grid(10.0, 500),
        Regime::Adiabatic,
    )
    .unwrap();
    let psi = StateVector::new(CVector::from_vec(vec![
        c(0.6, 0.0),
        c(0.0, 0.48),
        c(0.64, 0.0),
    ]))
    .unwrap();
    let driven = build_two_level(&ramp_spec(), grid(10.0, 500), SplitMode::Initial).unwrap();
    for (name, model, psi0, n) in [
        ("exponential", &stationary, psi, 500),
        ("driven two-level", &driven, StateVector::basis(2, 1), 500),
    ] {
        let order = observed_order(model, &psi0, n);
        let pass = (3.8..=4.2).contains(&order);
        ok &= pass;
        report(
            "8 RK4 order",
            pass,
            format!("{name}: observed order {order:.4} (range [3.8, 4.2])"),
        );
    }

    let all = runs();
    for r in &all {
        let q = sub_phase_quadrature(&r.traj, &r.ledger).unwrap();
        let d = max_over(
            r.ledger
                .gamma()
                .iter()
                .zip(&q)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())),
        );
        ok &= d <= 1e-7;
        report(
            "8 unwrap vs quadrature",
            d <= 1e-7,
            format!("{}: {d:.3e} (tol 1e-7)", r.name),
        );
    }

    for r in &all {
        let g = *r.traj.grid();
        let shifted = r.traj.coefficients()[0].clone() * C64::from_polar(1.0, 0.7);
        let other = integrate_coefficients(&r.model, &shifted, &g).unwrap();
        let l2 = sub_geometric_phases(&other, DEFAULT_THRESHOLD).unwrap();
        let mut d = 0.0f64;
        for (j, t) in g.times().enumerate() {
            d = d.max(max_over(
                r.ledger.gamma()[j]
                    .iter()
                    .zip(&l2.gamma()[j])
                    .map(|(a, b)| (a - b).abs()),
            ));
            let (a, b) = (
                relative_subphase_matrix(&r.ledger, t).unwrap(),
                relative_subphase_matrix(&l2, t).unwrap(),
            );
            for (ra, rb) in a.values.iter().zip(&b.values) {
                d = d.max(max_over(ra.iter().zip(rb).map(|(x, y)| (x - y).abs())));
            }
        }
        ok &= d <= 1e-10;
        report(
            "8 gauge invariance",
            d <= 1e-10,
            format!("{}: {d:.3e} (tol 1e-10)", r.name),
        );
    }

    let again = runs();
    let same = all.iter().zip(&again).all(|(a, b)| {
        a.traj.coefficients() == b.traj.coefficients()
            && a.ledger.gamma() == b.ledger.gamma()
            && a.oracle.states == b.oracle.states
    });
    ok &= same;
    report("8 determinism", same, "library reruns bit-identical".into());

    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("runspecs/two_level_ramp.toml");
    let outputs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            for cmd in ["simulate", "density", "verify"] {
                let status = Command::new(env!("CARGO_BIN_EXE_subgeom"))
                    .arg("--model")
                    .arg(&spec)
                    .arg("--out-dir")
                    .arg(dir.path())
                    .arg(cmd)
                    .output()
                    .unwrap()
                    .status;
                assert!(status.success(), "{cmd} failed");
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            files
        })
        .collect();
    let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
    ok &= same;
    report(
        "8 determinism",
        same,
        format!(
            "CLI reruns byte-identical across {} output files",
            outputs[0].len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_9_observable_from_density() {
    let sx = ComplexMatrix::pauli_x();
    let mut ok = true;
    for r in runs().into_iter().filter(|r| r.model.dim() == 2) {
        let states = assemble_state(&r.traj, None).unwrap();
        let mut d = 0.0f64;
        for (j, t) in r.traj.grid().times().enumerate() {
            let rho = assemble_density(&r.traj, &r.ledger, t).unwrap();
            let from_rho = observable_average(&rho, &sx).unwrap();
            let psi = &states.states[j];
            let from_psi = psi.dotc(&sx.apply(psi)).re;
            d = d.max((from_rho - from_psi).abs());
            // the same number through an explicit pure snapshot
            let pure = observable_average(&DensityMatrixSnapshot::pure(t, psi), &sx).unwrap();
            d = d.max((pure - from_psi).abs());
        }
        ok &= d <= 1e-9;
        report(
            "9 observable",
            d <= 1e-9,
            format!("{}: max |tr(ρσx) - <ψ|σx|ψ>| = {d:.3e} (tol 1e-9)", r.name),
        );
    }
    assert!(ok);
}
