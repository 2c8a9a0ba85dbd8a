use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_j = t0 + j * h`, `j = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) {
            return Err(Error::Validation("grid bounds must be finite".into()));
        }
        if t_end <= t0 {
            return Err(Error::Validation(format!(
                "grid needs t_end > t0 (got t0 = {t0}, t_end = {t_end})"
            )));
        }
        if n_steps < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 steps (got {n_steps})"
            )));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t0
    }

    pub fn step(&self) -> f64 {
        self.duration() / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            self.t0 + j as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time(j))
    }

    /// Time elapsed since `t0`.
    pub fn elapsed(&self, t: f64) -> f64 {
        t - self.t0
    }

    /// Normalized path parameter `u = (t - t0) / (t_end - t0)`.
    pub fn path_parameter(&self, t: f64) -> f64 {
        (t - self.t0) / self.duration()
    }

    fn slack(&self) -> f64 {
        1e-9 * self.duration().max(self.t0.abs()).max(self.t_end.abs())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 - self.slack() && t <= self.t_end + self.slack()
    }

    pub fn check_contains(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Range {
                t,
                t0: self.t0,
                t_end: self.t_end,
            })
        }
    }

    /// Index of the grid point at `t`; fails if `t` is not on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.check_contains(t)?;
        let x = (t - self.t0) / self.step();
        let j = x.round().max(0.0) as usize;
        if j > self.n_steps || (self.time(j) - t).abs() > self.slack() {
            return Err(Error::Validation(format!("t = {t} is not a grid point")));
        }
        Ok(j)
    }

    /// Same span, different resolution.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.t0, self.t_end, n_steps)
    }

    /// True when `other` starts at the same time and lies inside this span.
    pub fn covers(&self, other: &TimeGrid) -> bool {
        (other.t0 - self.t0).abs() <= self.slack() && other.t_end <= self.t_end + self.slack()
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps
            && (self.t0 - other.t0).abs() <= self.slack()
            && (self.t_end - other.t_end).abs() <= self.slack()
    }
}
