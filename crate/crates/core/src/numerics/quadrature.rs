use std::ops::{Add, Mul};

use super::grid::TimeGrid;
use crate::error::{Error, Result};

/// Cumulative composite-trapezoid integral of `samples` over `grid`.
///
/// Entry `j` holds the integral from `t0` to `t_j`; entry 0 is exactly zero.
pub fn cumulative_trapezoid<T>(samples: &[T], grid: &TimeGrid) -> Result<Vec<T>>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    if samples.len() != grid.len() {
        return Err(Error::Shape(format!(
            "quadrature needs {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    let half_h = 0.5 * grid.step();
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = T::default();
    out.push(acc);
    for w in samples.windows(2) {
        acc = acc + (w[0] + w[1]) * half_h;
        out.push(acc);
    }
    Ok(out)
}

/// Component-wise [`cumulative_trapezoid`] of vector-valued samples, `[j][k]`.
pub fn cumulative_trapezoid_rows<T>(samples: &[Vec<T>], grid: &TimeGrid) -> Result<Vec<Vec<T>>>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let width = samples.first().map_or(0, Vec::len);
    if samples.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("ragged samples in quadrature".into()));
    }
    let mut out = vec![Vec::with_capacity(width); samples.len()];
    for k in 0..width {
        let column: Vec<T> = samples.iter().map(|r| r[k]).collect();
        for (row, v) in out.iter_mut().zip(cumulative_trapezoid(&column, grid)?) {
            row.push(v);
        }
    }
    Ok(out)
}

/// Full-span trapezoid integral.
pub fn trapezoid<T>(samples: &[T], grid: &TimeGrid) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    Ok(*cumulative_trapezoid(samples, grid)?
        .last()
        .expect("grid has at least three points"))
}
