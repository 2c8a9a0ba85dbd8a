//! Density matrices assembled from channel data. A coherent superposition keeps
//! the relative sub-phase in its off-diagonal and in <σx>; an equal-weight
//! mixture of the two channel runs has neither.

use subgeom::density::{assemble_density, mix, observable_average, MixedStateSpec};
use subgeom::model::{build_two_level, SplitMode, TwoLevelSpec, Waveform};
use subgeom::numerics::{CVector, ComplexMatrix, TimeGrid, C64};
use subgeom::phases::{sub_geometric_phases, DEFAULT_THRESHOLD};
use subgeom::propagation::integrate_coefficients;

fn main() -> subgeom::Result<()> {
    let grid = TimeGrid::new(0.0, 10.0, 4000)?;
    let spec = TwoLevelSpec {
        delta: 1.0,
        w_mag: Waveform::ramp(0.3, 1.2),
        w_phase: Waveform::winding(),
    };
    let model = build_two_level(&spec, grid, SplitMode::Initial)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let start = |a: C64, b: C64| CVector::from_vec(vec![a, b]);
    let runs = [
        start(C64::new(s, 0.0), C64::new(s, 0.0)),
        start(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        start(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
    ];
    let sx = ComplexMatrix::pauli_x();

    for t in [0.0, 2.5, 5.0, 10.0] {
        let mut snaps = Vec::new();
        for c0 in &runs {
            let traj = integrate_coefficients(&model, c0, &grid)?;
            let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD)?;
            snaps.push(assemble_density(&traj, &ledger, t)?);
        }
        let mixture =
            MixedStateSpec::new(vec![(0.5, "channel 0".into()), (0.5, "channel 1".into())])?;
        let mixed = mix(&mixture, &snaps[1..])?;
        println!(
            "t = {t:>4}: coherent purity {:.6} <σx> {:>9.6} | mixture purity {:.6} <σx> {:>9.6}",
            snaps[0].purity,
            observable_average(&snaps[0], &sx)?,
            mixed.purity,
            observable_average(&mixed, &sx)?
        );
    }
    Ok(())
}
