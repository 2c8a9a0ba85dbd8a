//! Channel-coefficient dynamics in the fixed eigenbasis of `h0`, plus a
//! direct Schrödinger solver that serves as the independent reference.
//!
//! With `ψ(t) = Σ_k c_k(t) e^{-iω_k s} |ψ_k^0>` and `s = t - t0`, the
//! coefficients obey `i ċ_k = Σ_l e^{i(ω_k - ω_l)s} <ψ_k^0|ΔH(t)|ψ_l^0> c_l`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HamiltonianModel, InitialBasis, Regime};
use crate::numerics::{
    cumulative_trapezoid_rows, hermitian_eigensystem, integrate, CVector, ComplexMatrix,
    StateVector, TimeGrid, C64,
};
use crate::phases::PhaseLedger;

/// Norm drift allowed before a run is rejected as under-resolved.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);

/// Which frame the stored coefficients live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    /// Free evolution `e^{-iω_k s}` factored out of each channel.
    Interaction,
    /// Plain components `<ψ_k^0|ψ(t)>`.
    Schrodinger,
}

/// Starting amplitudes in the channel basis.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Channel(usize),
    Amplitudes(Vec<C64>),
}

impl InitialCondition {
    pub fn resolve(&self, dim: usize) -> Result<CVector> {
        match self {
            InitialCondition::Channel(n) => {
                if *n >= dim {
                    return Err(Error::Validation(format!(
                        "initial channel {n} out of range for dimension {dim}"
                    )));
                }
                let mut v = CVector::zeros(dim);
                v[*n] = C64::new(1.0, 0.0);
                Ok(v)
            }
            InitialCondition::Amplitudes(a) => {
                if a.len() != dim {
                    return Err(Error::Shape(format!(
                        "{} initial amplitudes for dimension {dim}",
                        a.len()
                    )));
                }
                Ok(CVector::from_vec(a.clone()))
            }
        }
    }

    pub fn channel(&self) -> Option<usize> {
        match self {
            InitialCondition::Channel(n) => Some(*n),
            InitialCondition::Amplitudes(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientTrajectory {
    grid: TimeGrid,
    basis: InitialBasis,
    coefficients: Vec<CVector>,
    rates: Vec<CVector>,
    initial_channel: Option<usize>,
    norm_history: Vec<f64>,
    picture: Picture,
    shifts: Vec<Vec<f64>>,
}

impl CoefficientTrajectory {
    /// Builds a trajectory from sampled coefficients. Missing rates are
    /// estimated with second-order finite differences. Diagonal level shifts
    /// start at zero; see [`Self::with_level_shifts`].
    pub fn from_samples(
        grid: TimeGrid,
        basis: InitialBasis,
        coefficients: Vec<CVector>,
        rates: Option<Vec<CVector>>,
        picture: Picture,
        initial_channel: Option<usize>,
    ) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} coefficient samples on a {}-point grid",
                coefficients.len(),
                grid.len()
            )));
        }
        if let Some(bad) = coefficients.iter().find(|c| c.len() != basis.dim()) {
            return Err(Error::Shape(format!(
                "coefficient vector of length {} for {} channels",
                bad.len(),
                basis.dim()
            )));
        }
        let rates = match rates {
            Some(r) if r.len() != coefficients.len() => {
                return Err(Error::Shape(
                    "rates and coefficients differ in length".into(),
                ))
            }
            Some(r) => r,
            None => finite_difference_rates(&grid, &coefficients),
        };
        let norm_history = coefficients.iter().map(|c| c.norm_squared()).collect();
        let shifts = vec![vec![0.0; basis.dim()]; grid.len()];
        Ok(Self {
            grid,
            basis,
            coefficients,
            rates,
            initial_channel,
            norm_history,
            picture,
            shifts,
        })
    }

    /// Records `<ψ_k^0|ΔH(t)|ψ_k^0>` from `model` at every grid point.
    pub fn with_level_shifts(mut self, model: &HamiltonianModel) -> Result<Self> {
        check_grid(model, &self.grid)?;
        if model.dim() != self.dim() {
            return Err(Error::Shape(
                "model and trajectory dimensions differ".into(),
            ));
        }
        self.shifts = self
            .grid
            .times()
            .map(|t| {
                let v = self.basis.to_channels(&model.delta_h_unchecked(t));
                (0..self.dim()).map(|k| v.get(k, k).re).collect()
            })
            .collect();
        Ok(self)
    }

    /// Diagonal elements `<ψ_k^0|ΔH(t_j)|ψ_k^0>`, indexed `[j][k]`.
    pub fn level_shifts(&self) -> &[Vec<f64>] {
        &self.shifts
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn basis(&self) -> &InitialBasis {
        &self.basis
    }

    pub fn energies(&self) -> &[f64] {
        &self.basis.energies
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn coefficients(&self) -> &[CVector] {
        &self.coefficients
    }

    /// `ċ_k` at every grid point.
    pub fn rates(&self) -> &[CVector] {
        &self.rates
    }

    pub fn initial_channel(&self) -> Option<usize> {
        self.initial_channel
    }

    pub fn norm_history(&self) -> &[f64] {
        &self.norm_history
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn norm_drift(&self) -> f64 {
        let n0 = self.norm_history[0];
        self.norm_history
            .iter()
            .map(|n| (n - n0).abs())
            .fold(0.0, f64::max)
    }

    /// Factor that turns a stored coefficient into the physical channel amplitude at grid point `j`.
    pub fn frame_factor(&self, j: usize, k: usize) -> C64 {
        match self.picture {
            Picture::Interaction => {
                let s = self.grid.elapsed(self.grid.time(j));
                C64::from_polar(1.0, -self.basis.energies[k] * s)
            }
            Picture::Schrodinger => C64::new(1.0, 0.0),
        }
    }

    /// `<ψ_k^0|ψ(t_j)>`.
    pub fn channel_amplitude(&self, j: usize, k: usize) -> C64 {
        self.coefficients[j][k] * self.frame_factor(j, k)
    }

    /// Channel amplitudes at grid point `j` as a vector in the channel basis.
    pub fn channel_amplitudes(&self, j: usize) -> CVector {
        CVector::from_fn(self.dim(), |k, _| self.channel_amplitude(j, k))
    }
}

/// Second-order finite differences; one-sided at the ends.
pub fn finite_difference_rates(grid: &TimeGrid, samples: &[CVector]) -> Vec<CVector> {
    let n = samples.len();
    let h = grid.step();
    (0..n)
        .map(|j| {
            if j == 0 {
                (&samples[1] * C64::new(4.0, 0.0) - &samples[0] * C64::new(3.0, 0.0) - &samples[2])
                    / C64::new(2.0 * h, 0.0)
            } else if j == n - 1 {
                (&samples[j] * C64::new(3.0, 0.0) - &samples[j - 1] * C64::new(4.0, 0.0)
                    + &samples[j - 2])
                    / C64::new(2.0 * h, 0.0)
            } else {
                (&samples[j + 1] - &samples[j - 1]) / C64::new(2.0 * h, 0.0)
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<CVector>,
}

impl StateTrajectory {
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.states[0].norm_squared();
        self.states
            .iter()
            .map(|s| (s.norm_squared() - n0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest vector-norm distance over grid points.
    pub fn max_distance(&self, other: &StateTrajectory) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Shape(
                "state trajectories live on different grids".into(),
            ));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn check_grid(model: &HamiltonianModel, grid: &TimeGrid) -> Result<()> {
    if model.grid().covers(grid) {
        Ok(())
    } else {
        Err(Error::Range {
            t: grid.t_end(),
            t0: model.grid().t0(),
            t_end: model.grid().t_end(),
        })
    }
}

fn check_drift(drift: f64, grid: &TimeGrid) -> Result<()> {
    if drift > NORM_DRIFT_LIMIT {
        Err(Error::Resolution {
            drift,
            limit: NORM_DRIFT_LIMIT,
            n_steps: grid.n_steps(),
        })
    } else {
        Ok(())
    }
}

/// Exact channel dynamics: RK4 on the interaction-picture system.
pub fn integrate_coefficients(
    model: &HamiltonianModel,
    initial: &CVector,
    grid: &TimeGrid,
) -> Result<CoefficientTrajectory> {
    check_grid(model, grid)?;
    if initial.len() != model.dim() {
        return Err(Error::Shape(format!(
            "initial vector has {} entries, model dimension is {}",
            initial.len(),
            model.dim()
        )));
    }
    let n2 = initial.norm_squared();
    if (n2 - 1.0).abs() > StateVector::NORM_TOL {
        return Err(Error::Validation(format!(
            "initial coefficients not normalized (norm² = {n2})"
        )));
    }
    let basis = model.initial_eigenbasis()?;
    let (coefficients, rates) = {
        let rhs = interaction_rhs(model, &basis);
        let coefficients = integrate(&rhs, grid, initial.clone())?;
        let rates: Vec<CVector> = grid
            .times()
            .zip(&coefficients)
            .map(|(t, c)| rhs(t, c))
            .collect();
        (coefficients, rates)
    };

    let traj = CoefficientTrajectory::from_samples(
        *grid,
        basis,
        coefficients,
        Some(rates),
        Picture::Interaction,
        pure_channel(initial),
    )?
    .with_level_shifts(model)?;
    check_drift(traj.norm_drift(), grid)?;
    Ok(traj)
}

/// Index `n` when `v` is exactly `e_n`.
fn pure_channel(v: &CVector) -> Option<usize> {
    let one = C64::new(1.0, 0.0);
    let n = v.iter().position(|&x| x == one)?;
    v.iter()
        .enumerate()
        .all(|(k, &x)| k == n || x == C64::new(0.0, 0.0))
        .then_some(n)
}

fn interaction_rhs<'a>(
    model: &'a HamiltonianModel,
    basis: &'a InitialBasis,
) -> impl Fn(f64, &CVector) -> CVector + 'a {
    let t0 = model.grid().t0();
    move |t: f64, c: &CVector| {
        let s = t - t0;
        let v = basis.to_channels(&model.delta_h_unchecked(t));
        let x = CVector::from_fn(c.len(), |l, _| {
            c[l] * C64::from_polar(1.0, -basis.energies[l] * s)
        });
        let y = v.apply(&x);
        CVector::from_fn(c.len(), |k, _| {
            -I * C64::from_polar(1.0, basis.energies[k] * s) * y[k]
        })
    }
}

/// First-order perturbative coefficients for a run starting in channel `n`:
/// `c_k(t) = -i ∫ e^{i(ω_k - ω_n)s'} <ψ_k^0|ΔH|ψ_n^0> dt'`, plus 1 on the diagonal.
/// With `include_diagonal = false` the diagonal correction is dropped and `c_n ≡ 1`.
/// No renormalization is applied.
pub fn first_order_coefficients(
    model: &HamiltonianModel,
    n: usize,
    grid: &TimeGrid,
    include_diagonal: bool,
) -> Result<CoefficientTrajectory> {
    check_grid(model, grid)?;
    if model.regime() != Regime::Adiabatic {
        return Err(Error::Validation(
            "first-order coefficients are only defined for adiabatic-regime models".into(),
        ));
    }
    let basis = model.initial_eigenbasis()?;
    let dim = basis.dim();
    if n >= dim {
        return Err(Error::Validation(format!(
            "channel {n} out of range for dimension {dim}"
        )));
    }
    let t0 = grid.t0();
    let rates: Vec<CVector> = grid
        .times()
        .map(|t| {
            let s = t - t0;
            let v = basis.to_channels(&model.delta_h_unchecked(t));
            CVector::from_fn(dim, |k, _| {
                if k == n && !include_diagonal {
                    C64::new(0.0, 0.0)
                } else {
                    -I * C64::from_polar(1.0, (basis.energies[k] - basis.energies[n]) * s)
                        * v.get(k, n)
                }
            })
        })
        .collect();
    let rows: Vec<Vec<C64>> = rates.iter().map(|r| r.iter().copied().collect()).collect();
    let coefficients = cumulative_trapezoid_rows(&rows, grid)?
        .into_iter()
        .map(|mut c| {
            c[n] += C64::new(1.0, 0.0);
            CVector::from_vec(c)
        })
        .collect();
    CoefficientTrajectory::from_samples(
        *grid,
        basis,
        coefficients,
        Some(rates),
        Picture::Interaction,
        Some(n),
    )?
    .with_level_shifts(model)
}

/// RK4 on `i ψ' = H(t) ψ` in the original basis. This shares no code path
/// with the channel machinery beyond the integrator itself.
pub fn direct_schrodinger_solve(
    model: &HamiltonianModel,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    check_grid(model, grid)?;
    if psi0.dim() != model.dim() {
        return Err(Error::Shape(format!(
            "psi0 has {} entries, model dimension is {}",
            psi0.dim(),
            model.dim()
        )));
    }
    let f = |t: f64, psi: &CVector| (model.h0() + &model.delta_h_unchecked(t)).apply(psi) * -I;
    let states = integrate(f, grid, psi0.amplitudes().clone())?;
    let traj = StateTrajectory {
        grid: *grid,
        states,
    };
    check_drift(traj.norm_drift(), grid)?;
    Ok(traj)
}

/// Reassembles `|ψ(t)>` from channel data.
///
/// Without a ledger this is `Σ_k c_k e^{-iω_k s} |ψ_k^0>`. With one, each
/// channel is rebuilt as `e^{iγ_k} e^{-i d_k} a_k |ψ_k^0>` from its sub-geometric
/// phase, dynamical phase and residual amplitude; the two agree to rounding.
pub fn assemble_state(
    traj: &CoefficientTrajectory,
    ledger: Option<&PhaseLedger>,
) -> Result<StateTrajectory> {
    let u = traj.basis().unitary();
    let states = match ledger {
        None => (0..traj.grid().len())
            .map(|j| u * traj.channel_amplitudes(j))
            .collect(),
        Some(ledger) => {
            ledger.check_matches(traj)?;
            (0..traj.grid().len())
                .map(|j| {
                    let a = ledger.residual_amplitudes(traj, j);
                    let channels =
                        CVector::from_fn(traj.dim(), |k, _| ledger.phase_factor(j, k) * a[k]);
                    u * channels
                })
                .collect()
        }
    };
    Ok(StateTrajectory {
        grid: *traj.grid(),
        states,
    })
}

/// Expansion of the instantaneous eigenstate `n` of `H(t)` in the fixed basis,
/// `c_k(t) = <ψ_k^0|ψ_n(t)>`, in the gauge where `c_n(t)` is real and positive.
/// Stored in the Schrödinger picture.
pub fn adiabatic_expansion(
    model: &HamiltonianModel,
    n: usize,
    grid: &TimeGrid,
) -> Result<CoefficientTrajectory> {
    check_grid(model, grid)?;
    let basis = model.initial_eigenbasis()?;
    if n >= basis.dim() {
        return Err(Error::Validation(format!(
            "band {n} out of range for dimension {}",
            basis.dim()
        )));
    }
    let u_dag: DMatrix<C64> = basis.unitary().adjoint();
    let mut coefficients = Vec::with_capacity(grid.len());
    for t in grid.times() {
        let v = instantaneous_band(model, n, t)?;
        let mut c = &u_dag * v;
        let anchor = c[n];
        if anchor.norm() < 1e-8 {
            return Err(Error::numeric(
                format!("band {n} has no overlap with its initial channel; gauge undefined"),
                Some(t),
            ));
        }
        c *= anchor.conj() / anchor.norm();
        c[n] = C64::new(c[n].re, 0.0);
        coefficients.push(c);
    }
    CoefficientTrajectory::from_samples(
        *grid,
        basis,
        coefficients,
        None,
        Picture::Schrodinger,
        Some(n),
    )?
    .with_level_shifts(model)
}

/// Eigenvector `n` (ascending order) of `H(t)`, refusing degenerate neighbours.
pub(crate) fn instantaneous_band(model: &HamiltonianModel, n: usize, t: f64) -> Result<CVector> {
    let h: ComplexMatrix = model.evaluate_hamiltonian(t)?;
    let es = hermitian_eigensystem(&h)?;
    let gap_tol = 1e-9;
    let below = n.checked_sub(1).map(|m| es.values[n] - es.values[m]);
    let above = es.values.get(n + 1).map(|e| e - es.values[n]);
    if below.into_iter().chain(above).any(|g| g < gap_tol) {
        return Err(Error::Degeneracy(format!(
            "band {n} meets a neighbour at t = {t}"
        )));
    }
    Ok(es.vectors[n].amplitudes().clone())
}
