//! Channel-resolved phases of a four-level system driven out of a superposition.
//! Each channel's phase splits into a sub-geometric part γ_k and a dynamical part d_k.

use subgeom::density::relative_subphase_matrix;
use subgeom::model::{Drive, DriveTerm, HamiltonianModel, Regime, SplitMode, Waveform};
use subgeom::numerics::{random_hermitian, CVector, TimeGrid, C64};
use subgeom::phases::{sub_geometric_phases, sub_phase_quadrature, DEFAULT_THRESHOLD};
use subgeom::propagation::integrate_coefficients;

fn main() -> subgeom::Result<()> {
    let grid = TimeGrid::new(0.0, 10.0, 4000)?;
    let drive = Drive::Terms(vec![DriveTerm {
        matrix: random_hermitian(4, 0.3, 11),
        waveform: Waveform::Sinusoid {
            amplitude: 1.0,
            cycles: 2.0,
            phase: 0.0,
            offset: 0.0,
        },
    }]);
    let model = HamiltonianModel::new(
        random_hermitian(4, 1.0, 7),
        drive,
        SplitMode::Initial,
        grid,
        Regime::Nonadiabatic,
    )?;
    let c0 = CVector::from_vec(vec![
        C64::new(0.5, 0.0),
        C64::new(0.0, 0.5),
        C64::new(0.5, 0.0),
        C64::new(0.0, -0.5),
    ]);

    let traj = integrate_coefficients(&model, &c0, &grid)?;
    let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD)?;
    let quad = sub_phase_quadrature(&traj, &ledger)?;
    let end = grid.n_steps();

    println!("channel energies: {:?}", traj.energies());
    println!(
        "{:>3} {:>14} {:>14} {:>14} {:>10}",
        "k", "γ_k", "γ_k (quad)", "d_k", "|c_k|"
    );
    for k in 0..traj.dim() {
        println!(
            "{k:>3} {:>14.9} {:>14.9} {:>14.9} {:>10.6}",
            ledger.gamma()[end][k],
            quad[end][k],
            ledger.dynamical()[end][k],
            traj.coefficients()[end][k].norm()
        );
    }

    let rel = relative_subphase_matrix(&ledger, grid.t_end())?;
    println!("relative sub-phases γ_k - γ_l at t = {}:", grid.t_end());
    for row in &rel.values {
        println!(
            "  {}",
            row.iter()
                .map(|v| format!("{v:>10.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    Ok(())
}
