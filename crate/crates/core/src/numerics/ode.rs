use super::grid::TimeGrid;
use super::matrix::{CVector, C64};
use crate::error::{Error, Result};

/// One classical fourth-order Runge-Kutta step for `y' = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &CVector, h: f64) -> Result<CVector>
where
    F: FnMut(f64, &CVector) -> CVector,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Validation(format!(
            "RK4 step must be positive, got {h}"
        )));
    }
    let k1 = checked(f(t, y), t)?;
    let k2 = checked(
        f(t + 0.5 * h, &(y + &k1 * C64::new(0.5 * h, 0.0))),
        t + 0.5 * h,
    )?;
    let k3 = checked(
        f(t + 0.5 * h, &(y + &k2 * C64::new(0.5 * h, 0.0))),
        t + 0.5 * h,
    )?;
    let k4 = checked(f(t + h, &(y + &k3 * C64::new(h, 0.0))), t + h)?;
    let incr =
        (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    Ok(y + incr)
}

fn checked(v: CVector, t: f64) -> Result<CVector> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(v)
    } else {
        Err(Error::numeric("ODE right-hand side is not finite", Some(t)))
    }
}

/// Integrates `y' = f(t, y)` across every step of `grid`, returning the state at each grid point.
pub fn integrate<F>(mut f: F, grid: &TimeGrid, y0: CVector) -> Result<Vec<CVector>>
where
    F: FnMut(f64, &CVector) -> CVector,
{
    let h = grid.step();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0);
    for j in 0..grid.n_steps() {
        let next = rk4_step(&mut f, grid.time(j), &out[j], h)?;
        out.push(next);
    }
    Ok(out)
}
