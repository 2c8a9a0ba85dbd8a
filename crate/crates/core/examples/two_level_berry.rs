//! Berry phase of the two-level ground state around a closed coupling loop,
//! numerically and in closed form.

use std::f64::consts::PI;

use subgeom::model::{build_two_level, SplitMode, TwoLevelSpec, Waveform};
use subgeom::numerics::TimeGrid;
use subgeom::phases::{berry_phase_connection, minimum_gap};
use subgeom::twolevel::{analytic_berry, TwoLevelAngles};

fn main() -> subgeom::Result<()> {
    let grid = TimeGrid::new(0.0, 40.0, 8000)?;
    println!(
        "{:>8} {:>14} {:>14} {:>10}",
        "|w|/Δ", "numeric", "closed form", "min gap"
    );
    for ratio in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let spec = TwoLevelSpec {
            delta: 1.0,
            w_mag: Waveform::constant(ratio),
            w_phase: Waveform::winding(),
        };
        let model = build_two_level(&spec, grid, SplitMode::Initial)?;
        let angles = TwoLevelAngles::from_spec(&spec, grid)?;
        let numeric = berry_phase_connection(&model, 0, &grid)?;
        let exact = analytic_berry(&angles, &grid)?;
        let gap = minimum_gap(&model, 0, &grid)?;
        println!("{ratio:>8.2} {numeric:>14.10} {exact:>14.10} {gap:>10.4}");
    }
    println!("equatorial limit: π = {PI:.10}");
    Ok(())
}
