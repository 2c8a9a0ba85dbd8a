//! Aharonov-Anandan decomposition φ = α + β for an equatorial loop, at
//! several loop durations. β approaches the Berry value π as the loop slows.

use subgeom::model::{Drive, HamiltonianModel, Regime, SplitMode, Waveform};
use subgeom::numerics::{ComplexMatrix, StateVector, TimeGrid};
use subgeom::phases::aa_phase;
use subgeom::propagation::integrate_coefficients;

fn main() -> subgeom::Result<()> {
    println!(
        "{:>6} {:>14} {:>14} {:>14} {:>14}",
        "T", "φ", "α", "β_AA", "Berry"
    );
    for t_end in [10.0, 25.0, 50.0, 100.0, 200.0] {
        let grid = TimeGrid::new(0.0, t_end, (200.0 * t_end) as usize)?;
        let model = HamiltonianModel::new(
            ComplexMatrix::zeros(2),
            Drive::TwoLevel {
                w_mag: Waveform::constant(1.0),
                w_phase: Waveform::winding(),
            },
            SplitMode::Initial,
            grid,
            Regime::Adiabatic,
        )?;
        let traj = integrate_coefficients(&model, StateVector::basis(2, 0).amplitudes(), &grid)?;
        let r = aa_phase(&traj, &model, t_end)?;
        println!(
            "{t_end:>6} {:>14.9} {:>14.9} {:>14.9} {:>14.9}",
            r.total_phi,
            r.dynamical_alpha,
            r.aa_beta,
            r.berry_connection.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
