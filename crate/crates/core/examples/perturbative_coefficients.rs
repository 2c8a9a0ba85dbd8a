//! First-order channel coefficients against exact integration: the error
//! shrinks by ~4 per halving of the coupling.

use subgeom::model::{build_two_level, SplitMode, TwoLevelSpec, Waveform};
use subgeom::numerics::{StateVector, TimeGrid};
use subgeom::propagation::{first_order_coefficients, integrate_coefficients};

fn main() -> subgeom::Result<()> {
    let grid = TimeGrid::new(0.0, 10.0, 4000)?;
    let mut last: Option<f64> = None;
    for eps in [0.04, 0.02, 0.01, 0.005] {
        let spec = TwoLevelSpec {
            delta: 1.0,
            w_mag: Waveform::constant(eps),
            w_phase: Waveform::winding(),
        };
        let model = build_two_level(&spec, grid, SplitMode::Bare)?;
        let exact = integrate_coefficients(&model, StateVector::basis(2, 0).amplitudes(), &grid)?;
        let approx = first_order_coefficients(&model, 0, &grid, true)?;
        let err = exact
            .coefficients()
            .iter()
            .zip(approx.coefficients())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        match last {
            Some(prev) => println!("ε = {eps:<6} max error {err:.4e}  ratio {:.3}", prev / err),
            None => println!("ε = {eps:<6} max error {err:.4e}"),
        }
        last = Some(err);
    }
    Ok(())
}
