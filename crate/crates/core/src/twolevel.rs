//! Closed forms for the two-level model `H = diag(-Δ, Δ) + [[0, w], [w*, 0]]`
//! with `w = |w| e^{iδ}` and mixing angle `tan θ = |w| / Δ`.

use serde::Serialize;

use crate::density::DensityMatrixSnapshot;
use crate::error::{Error, Result};
use crate::model::{TwoLevelSpec, Waveform};
use crate::numerics::{
    cumulative_trapezoid, trapezoid, CVector, ComplexMatrix, StateVector, TimeGrid, C64,
};
use crate::phases::wrap_phase;

/// Distance from `0` or `π` at which a channel of the two-level state counts as empty.
pub const SINGULAR_THETA: f64 = 1e-6;

#[derive(Clone, Debug)]
enum Theta {
    Direct(Waveform),
    Coupling { delta: f64, w_mag: Waveform },
}

/// `θ(t)` and `δ(t)` along a grid.
#[derive(Clone, Debug)]
pub struct TwoLevelAngles {
    theta: Theta,
    delta_angle: Waveform,
    grid: TimeGrid,
}

impl TwoLevelAngles {
    pub fn from_spec(spec: &TwoLevelSpec, grid: TimeGrid) -> Result<Self> {
        spec.validate()?;
        Self::from_coupling(spec.delta, spec.w_mag.clone(), spec.w_phase.clone(), grid)
    }

    /// Like [`Self::from_spec`] but also accepts `Δ = 0`, where `θ = π/2` wherever `w ≠ 0`.
    pub fn from_coupling(
        delta: f64,
        w_mag: Waveform,
        w_phase: Waveform,
        grid: TimeGrid,
    ) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Validation(format!(
                "splitting must be non-negative, got {delta}"
            )));
        }
        w_mag.validate()?;
        w_phase.validate()?;
        Ok(Self {
            theta: Theta::Coupling { delta, w_mag },
            delta_angle: w_phase,
            grid,
        })
    }

    /// Angles given directly as waveforms of the path parameter.
    pub fn new(theta: Waveform, delta_angle: Waveform, grid: TimeGrid) -> Result<Self> {
        theta.validate()?;
        delta_angle.validate()?;
        Ok(Self {
            theta: Theta::Direct(theta),
            delta_angle,
            grid,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn u(&self, t: f64) -> f64 {
        self.grid.path_parameter(t)
    }

    pub fn theta(&self, t: f64) -> f64 {
        let u = self.u(t);
        match &self.theta {
            Theta::Direct(w) => w.value(u),
            Theta::Coupling { delta, w_mag } => w_mag.value(u).abs().atan2(*delta),
        }
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.delta_angle.value(self.u(t))
    }

    pub fn theta_rate(&self, t: f64) -> f64 {
        let u = self.u(t);
        let per_u = match &self.theta {
            Theta::Direct(w) => w.derivative(u),
            Theta::Coupling { delta, w_mag } => {
                let w = w_mag.value(u);
                let r2 = delta * delta + w * w;
                if r2 == 0.0 {
                    0.0
                } else {
                    delta * w.signum() * w_mag.derivative(u) / r2
                }
            }
        };
        per_u / self.grid.duration()
    }

    pub fn delta_rate(&self, t: f64) -> f64 {
        self.delta_angle.derivative(self.u(t)) / self.grid.duration()
    }
}

/// `(cos θ/2, -e^{-iδ} sin θ/2)`, the eigenvector of `H` with eigenvalue `-√(Δ² + |w|²)`.
pub fn instantaneous_ground_state(angles: &TwoLevelAngles, t: f64) -> Result<StateVector> {
    angles.grid.check_contains(t)?;
    let (th, d) = (angles.theta(t), angles.delta(t));
    Ok(StateVector::new_unchecked(CVector::from_vec(vec![
        C64::new((th / 2.0).cos(), 0.0),
        -C64::from_polar((th / 2.0).sin(), -d),
    ])))
}

/// `(cos θ/2, e^{-iδ} sin θ/2)`, the commonly quoted form. It is the ground
/// state of the Hamiltonian with `w → -w`, not of `H` itself; kept for comparison.
pub fn printed_ground_state(angles: &TwoLevelAngles, t: f64) -> Result<StateVector> {
    angles.grid.check_contains(t)?;
    let (th, d) = (angles.theta(t), angles.delta(t));
    Ok(StateVector::new_unchecked(CVector::from_vec(vec![
        C64::new((th / 2.0).cos(), 0.0),
        C64::from_polar((th / 2.0).sin(), -d),
    ])))
}

fn check_covers(angles: &TwoLevelAngles, grid: &TimeGrid) -> Result<()> {
    if angles.grid.covers(grid) {
        Ok(())
    } else {
        Err(Error::Range {
            t: grid.t_end(),
            t0: angles.grid.t0(),
            t_end: angles.grid.t_end(),
        })
    }
}

/// `∫ sin²(θ/2) δ̇ dt` by trapezoid on `grid`.
pub fn analytic_berry(angles: &TwoLevelAngles, grid: &TimeGrid) -> Result<f64> {
    check_covers(angles, grid)?;
    let f: Vec<f64> = grid
        .times()
        .map(|t| (angles.theta(t) / 2.0).sin().powi(2) * angles.delta_rate(t))
        .collect();
    trapezoid(&f, grid)
}

/// `-∫ √(Δ² + |w|²) dt` by trapezoid on `grid`, with the waveforms traversed over `grid`.
///
/// This is the dynamical phase of the upper level; the lower level acquires its negative.
pub fn analytic_dynamical(spec: &TwoLevelSpec, grid: &TimeGrid) -> Result<f64> {
    spec.validate()?;
    let f: Vec<f64> = grid
        .times()
        .map(|t| {
            let w = spec.w_mag.value(grid.path_parameter(t));
            -(spec.delta * spec.delta + w * w).sqrt()
        })
        .collect();
    trapezoid(&f, grid)
}

/// `arg[cos(θ₀/2) cos(θ_τ/2) + e^{i(δ₀ - δ_τ)} sin(θ₀/2) sin(θ_τ/2)]`, the phase of
/// the overlap between the instantaneous ground states at `t0` and `τ`.
pub fn analytic_total_phase(angles: &TwoLevelAngles, tau: f64) -> Result<f64> {
    angles.grid.check_contains(tau)?;
    let t0 = angles.grid.t0();
    let (a, b) = (angles.theta(t0) / 2.0, angles.theta(tau) / 2.0);
    let bracket = C64::new(a.cos() * b.cos(), 0.0)
        + C64::from_polar(a.sin() * b.sin(), angles.delta(t0) - angles.delta(tau));
    let magnitude = bracket.norm();
    if magnitude <= 1e-10 {
        return Err(Error::OrthogonalStates { magnitude });
    }
    Ok(wrap_phase(bracket.arg()))
}

/// Which channel sub-phase integrands to use for the two-level density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrandReading {
    /// `-(1/2) sin cos θ̇ / cos²` and `[(1/2) sin cos θ̇ - sin² δ̇] / sin²`
    /// (half-angles), taken as written.
    Printed,
    /// `Re[i c̄_k ċ_k / |c_k|²]` for `c = (cos θ/2, -e^{-iδ} sin θ/2)`, which gives `0` and `δ̇`.
    Derived,
}

impl IntegrandReading {
    fn integrands(self, angles: &TwoLevelAngles, t: f64) -> [f64; 2] {
        let th = angles.theta(t);
        let (s, c) = ((th / 2.0).sin(), (th / 2.0).cos());
        let (dth, dd) = (angles.theta_rate(t), angles.delta_rate(t));
        match self {
            IntegrandReading::Printed => [
                -0.5 * s * c * dth / (c * c),
                (0.5 * s * c * dth - s * s * dd) / (s * s),
            ],
            IntegrandReading::Derived => [0.0, dd],
        }
    }
}

/// Channel sub-phases `[γ_1(t), γ_2(t)]` accumulated on the angle grid.
pub fn closed_form_subphases(
    angles: &TwoLevelAngles,
    reading: IntegrandReading,
    t: f64,
) -> Result<[f64; 2]> {
    let j = angles.grid.index_of(t)?;
    let times: Vec<f64> = angles.grid.times().collect();
    for &tj in &times[..=j] {
        let theta = angles.theta(tj);
        if theta.abs() < SINGULAR_THETA || (theta - std::f64::consts::PI).abs() < SINGULAR_THETA {
            return Err(Error::SingularChannel { t: tj, theta });
        }
    }
    let samples: Vec<Vec<f64>> = times
        .iter()
        .map(|&tj| reading.integrands(angles, tj).to_vec())
        .collect();
    let columns: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            let col: Vec<f64> = samples.iter().map(|r| r[k]).collect();
            cumulative_trapezoid(&col, &angles.grid)
        })
        .collect::<Result<_>>()?;
    Ok([columns[0][j], columns[1][j]])
}

/// Two-level density matrix with channel sub-phases.
///
/// `Printed` composes the phases with the full coefficients as written:
/// `ρ_12 = e^{i(γ_1 - γ_2)} cos(θ/2) sin(θ/2) e^{iδ}`. Because the coefficient
/// phases already carry `δ`, this does not reproduce `|ψ_-><ψ_-|` once `δ`
/// moves. `Derived` uses residual amplitudes `a_k = c_k e^{-iγ_k}`, so
/// `ρ_12 = e^{i(γ_1 - γ_2)} a_1 ā_2` equals the ground-state projector.
pub fn closed_form_density(
    angles: &TwoLevelAngles,
    reading: IntegrandReading,
    t: f64,
) -> Result<DensityMatrixSnapshot> {
    let [g1, g2] = closed_form_subphases(angles, reading, t)?;
    let th = angles.theta(t);
    let (s, c) = ((th / 2.0).sin(), (th / 2.0).cos());
    let off = match reading {
        IntegrandReading::Printed => C64::from_polar(c * s, g1 - g2 + angles.delta(t)),
        IntegrandReading::Derived => {
            let psi = instantaneous_ground_state(angles, t)?;
            let a1 = psi.amplitudes()[0] * C64::from_polar(1.0, -g1);
            let a2 = psi.amplitudes()[1] * C64::from_polar(1.0, -g2);
            C64::from_polar(1.0, g1 - g2) * a1 * a2.conj()
        }
    };
    let rho = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new(c * c, 0.0),
        (1, 1) => C64::new(s * s, 0.0),
        (0, 1) => off,
        _ => off.conj(),
    });
    Ok(DensityMatrixSnapshot::new(t, rho))
}
