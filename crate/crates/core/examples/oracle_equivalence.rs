//! Channel-picture integration reassembled into a state vector, compared with a
//! direct solve of the Schrödinger equation in the original basis.

use subgeom::model::{build_two_level, SplitMode, TwoLevelSpec, Waveform};
use subgeom::numerics::{StateVector, TimeGrid};
use subgeom::phases::{sub_geometric_phases, DEFAULT_THRESHOLD};
use subgeom::propagation::{assemble_state, direct_schrodinger_solve, integrate_coefficients};

fn main() -> subgeom::Result<()> {
    let spec = TwoLevelSpec {
        delta: 1.0,
        w_mag: Waveform::ramp(0.3, 1.2),
        w_phase: Waveform::winding(),
    };
    for split in [SplitMode::Initial, SplitMode::Bare, SplitMode::Subtract] {
        for n in [1000, 2000, 4000] {
            let grid = TimeGrid::new(0.0, 10.0, n)?;
            let model = build_two_level(&spec, grid, split)?;
            let c0 = StateVector::basis(2, 0);
            let traj = integrate_coefficients(&model, c0.amplitudes(), &grid)?;
            let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD)?;
            let psi0 = StateVector::new(traj.basis().unitary() * c0.amplitudes())?;
            let direct = direct_schrodinger_solve(&model, &psi0, &grid)?;
            let plain = assemble_state(&traj, None)?.max_distance(&direct)?;
            let regrouped = assemble_state(&traj, Some(&ledger))?.max_distance(&direct)?;
            println!("{split:?} n = {n:>5}: max distance {plain:.3e}, through the phase ledger {regrouped:.3e}");
        }
    }
    Ok(())
}
