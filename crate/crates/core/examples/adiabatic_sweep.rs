//! Sweep-rate study on an open path: the coupling winds once while its
//! magnitude ramps. Slower sweeps leave less population outside the
//! instantaneous ground state, and β_AA approaches the parallel-transport
//! phase of that ground-state path.

use subgeom::model::{build_two_level, SplitMode, TwoLevelSpec, Waveform};
use subgeom::numerics::TimeGrid;
use subgeom::phases::{aa_phase, berry_phase_connection, phase_distance};
use subgeom::propagation::{adiabatic_expansion, integrate_coefficients};

fn main() -> subgeom::Result<()> {
    let spec = TwoLevelSpec {
        delta: 1.0,
        w_mag: Waveform::ramp(0.3, 1.2),
        w_phase: Waveform::winding(),
    };
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "T", "P(excited)", "β_AA", "transport", "difference"
    );
    for t_end in [2.0, 5.0, 10.0, 20.0, 40.0] {
        let grid = TimeGrid::new(0.0, t_end, (400.0 * t_end) as usize)?;
        let model = build_two_level(&spec, grid, SplitMode::Initial)?;
        let c0 = subgeom::numerics::StateVector::basis(2, 0)
            .amplitudes()
            .clone();
        let traj = integrate_coefficients(&model, &c0, &grid)?;
        let adiabatic = adiabatic_expansion(&model, 0, &grid)?;

        // population left outside the instantaneous ground state
        let psi = traj.basis().unitary() * traj.channel_amplitudes(grid.n_steps());
        let ground = adiabatic.basis().unitary() * adiabatic.coefficients()[grid.n_steps()].clone();
        let excited = 1.0 - ground.dotc(&psi).norm_sqr();

        let r = aa_phase(&traj, &model, t_end)?;
        let transport = berry_phase_connection(&model, 0, &grid)?;
        let gap = phase_distance(r.aa_beta, transport);
        println!(
            "{t_end:>6} {excited:>12.3e} {:>12.8} {transport:>12.8} {gap:>12.3e}",
            r.aa_beta
        );
    }
    Ok(())
}
