//! Sub-geometric phases, Berry phases and the Aharonov–Anandan phase.
//!
//! Every channel amplitude is regrouped as
//! `χ_k(t) = e^{iγ_k(t)} e^{-i d_k(t)} a_k(t)`, where `γ_k` is the sub-geometric
//! phase (minus the unwrapped argument of `c_k`), `d_k` the channel dynamical
//! phase and `a_k` the residual amplitude.

use std::f64::consts::PI;

use log::{debug, info};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{HamiltonianModel, Regime};
use crate::numerics::{
    cumulative_trapezoid, cumulative_trapezoid_rows, hermitian_eigensystem, CVector, TimeGrid, C64,
};
use crate::propagation::{adiabatic_expansion, instantaneous_band, CoefficientTrajectory, Picture};

pub const DEFAULT_THRESHOLD: f64 = 1e-8;

/// Maps an angle to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// A stretch of grid points where a channel was below the masking threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskEvent {
    pub channel: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug)]
pub struct PhaseLedger {
    grid: TimeGrid,
    picture: Picture,
    threshold: f64,
    /// `[j][k]`
    gamma: Vec<Vec<f64>>,
    amp_log: Vec<Vec<f64>>,
    dynamical: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
    events: Vec<MaskEvent>,
}

impl PhaseLedger {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.gamma[0].len()
    }

    /// Sub-geometric phases `γ_k(t_j)`, indexed `[j][k]`.
    pub fn gamma(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    /// Accumulated `ln(|c_k(t)| / |c_k(0)|)` over resolved stretches.
    pub fn amp_log(&self) -> &[Vec<f64>] {
        &self.amp_log
    }

    /// Channel dynamical phases `d_k(t_j) = ω_k s + ∫ <ψ_k^0|ΔH|ψ_k^0>`.
    pub fn dynamical(&self) -> &[Vec<f64>] {
        &self.dynamical
    }

    /// `true` where `|c_k(t_j)|` is below threshold.
    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    pub fn events(&self) -> &[MaskEvent] {
        &self.events
    }

    pub fn is_masked(&self, j: usize, k: usize) -> bool {
        self.mask[j][k]
    }

    /// Channels masked at grid point `j`.
    pub fn masked_channels(&self, j: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.mask[j][k]).collect()
    }

    /// `e^{iγ_k} e^{-i d_k}` at grid point `j`.
    pub fn phase_factor(&self, j: usize, k: usize) -> C64 {
        C64::from_polar(1.0, self.gamma[j][k] - self.dynamical[j][k])
    }

    /// Residual amplitudes `a_k = χ_k e^{-iγ_k} e^{i d_k}` at grid point `j`.
    pub fn residual_amplitudes(&self, traj: &CoefficientTrajectory, j: usize) -> CVector {
        let chi = traj.channel_amplitudes(j);
        CVector::from_fn(self.dim(), |k, _| chi[k] * self.phase_factor(j, k).conj())
    }

    pub(crate) fn check_matches(&self, traj: &CoefficientTrajectory) -> Result<()> {
        if !self.grid.same_as(traj.grid())
            || self.dim() != traj.dim()
            || self.picture != traj.picture()
        {
            return Err(Error::Shape(
                "phase ledger does not belong to this trajectory".into(),
            ));
        }
        Ok(())
    }
}

/// Extracts `γ_k`, `amp_log_k` and `d_k` from a trajectory.
///
/// `γ_k` is accumulated from increments `-arg(c_k(t_{j+1}) c̄_k(t_j))`; increments
/// touching a masked point are skipped, so `γ_k` holds its last resolved value
/// while the channel is below `threshold`.
pub fn sub_geometric_phases(traj: &CoefficientTrajectory, threshold: f64) -> Result<PhaseLedger> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::Validation(format!(
            "masking threshold must be positive, got {threshold}"
        )));
    }
    let grid = *traj.grid();
    let dim = traj.dim();
    let c = traj.coefficients();
    let mask: Vec<Vec<bool>> = c
        .iter()
        .map(|cj| cj.iter().map(|x| x.norm() < threshold).collect())
        .collect();
    if let Some(j) = mask.iter().position(|m| m.iter().all(|&x| x)) {
        debug!("all channels below threshold at t = {}", grid.time(j));
        return Err(Error::EmptySupport { threshold });
    }

    let mut gamma = vec![vec![0.0; dim]; grid.len()];
    let mut amp_log = vec![vec![0.0; dim]; grid.len()];
    for j in 0..grid.n_steps() {
        for k in 0..dim {
            let (g, a) = if mask[j][k] || mask[j + 1][k] {
                (0.0, 0.0)
            } else {
                let (next, prev) = (c[j + 1][k], c[j][k]);
                (
                    -(next * prev.conj()).arg(),
                    (next.norm() / prev.norm()).ln(),
                )
            };
            gamma[j + 1][k] = gamma[j][k] + g;
            amp_log[j + 1][k] = amp_log[j][k] + a;
        }
    }

    let shifts = cumulative_trapezoid_rows(traj.level_shifts(), &grid)?;
    let dynamical = grid
        .times()
        .zip(shifts)
        .map(|(t, integral)| {
            let s = grid.elapsed(t);
            (0..dim)
                .map(|k| traj.energies()[k] * s + integral[k])
                .collect()
        })
        .collect();

    let events = mask_events(&grid, &mask);
    for e in &events {
        debug!("channel {} masked on [{}, {}]", e.channel, e.start, e.end);
    }
    Ok(PhaseLedger {
        grid,
        picture: traj.picture(),
        threshold,
        gamma,
        amp_log,
        dynamical,
        mask,
        events,
    })
}

fn mask_events(grid: &TimeGrid, mask: &[Vec<bool>]) -> Vec<MaskEvent> {
    let dim = mask[0].len();
    let mut events = Vec::new();
    for k in 0..dim {
        let mut start = None;
        for j in 0..mask.len() {
            match (mask[j][k], start) {
                (true, None) => start = Some(j),
                (false, Some(s)) => {
                    events.push(MaskEvent {
                        channel: k,
                        start: grid.time(s),
                        end: grid.time(j - 1),
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            events.push(MaskEvent {
                channel: k,
                start: grid.time(s),
                end: grid.t_end(),
            });
        }
    }
    events
}

/// `Re[i c̄ ċ] = -Im(c̄ ċ)`.
fn weighted_rate(c: C64, dc: C64) -> f64 {
    -(c.conj() * dc).im
}

/// Interval weights (×h) for `∫_{t_j}^{t_j+1}` from samples at offsets
/// `first..first + len` relative to `j`, most accurate first.
const INTERVAL_RULES: [(isize, &[f64]); 5] = [
    (
        -2,
        &[
            11.0 / 1440.0,
            -93.0 / 1440.0,
            802.0 / 1440.0,
            802.0 / 1440.0,
            -93.0 / 1440.0,
            11.0 / 1440.0,
        ],
    ),
    (-1, &[-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0]),
    (0, &[9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0]),
    (-2, &[1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0]),
    (0, &[0.5, 0.5]),
];

/// `γ_k` by quadrature of `Re[i c̄_k ċ_k / |c_k|²]` using the stored rates,
/// skipping the same intervals as the ledger. Each interval integrates the
/// local interpolating polynomial: six points where available, four near the
/// ends of the grid or of a masked stretch, the trapezoid as a last resort.
/// Indexed `[j][k]`.
pub fn sub_phase_quadrature(
    traj: &CoefficientTrajectory,
    ledger: &PhaseLedger,
) -> Result<Vec<Vec<f64>>> {
    ledger.check_matches(traj)?;
    let h = traj.grid().step();
    let (c, dc) = (traj.coefficients(), traj.rates());
    let (n, dim) = (c.len(), traj.dim());
    let mut out = vec![vec![0.0; dim]; n];
    for k in 0..dim {
        let g: Vec<Option<f64>> = (0..n)
            .map(|j| {
                (!ledger.mask[j][k]).then(|| weighted_rate(c[j][k], dc[j][k]) / c[j][k].norm_sqr())
            })
            .collect();
        let at = |j: isize| -> Option<f64> {
            usize::try_from(j)
                .ok()
                .and_then(|j| g.get(j).copied().flatten())
        };
        for j in 0..n - 1 {
            let inc = INTERVAL_RULES
                .iter()
                .find_map(|&(first, weights)| {
                    let base = j as isize + first;
                    (0..weights.len())
                        .map(|i| at(base + i as isize).map(|v| v * weights[i]))
                        .sum::<Option<f64>>()
                })
                .map_or(0.0, |s| h * s);
            out[j + 1][k] = out[j][k] + inc;
        }
    }
    Ok(out)
}

/// Trapezoidal integral of `Re[i Σ_k c̄_k ċ_k]` over the whole grid.
pub fn direct_connection_integral(traj: &CoefficientTrajectory) -> Result<f64> {
    let integrand: Vec<f64> = traj
        .coefficients()
        .iter()
        .zip(traj.rates())
        .map(|(c, dc)| {
            c.iter()
                .zip(dc.iter())
                .map(|(&a, &b)| weighted_rate(a, b))
                .sum()
        })
        .collect();
    Ok(*cumulative_trapezoid(&integrand, traj.grid())?
        .last()
        .unwrap())
}

/// Probability-weighted sum of sub-phase rates, `∫ Σ_k |c_k|² Re[i c̄_k ċ_k / |c_k|²] dt`.
/// At masked points the weight times the rate is taken in its cancelled form.
pub fn berry_phase_decomposed(traj: &CoefficientTrajectory, ledger: &PhaseLedger) -> Result<f64> {
    ledger.check_matches(traj)?;
    let integrand: Vec<f64> = (0..traj.grid().len())
        .map(|j| {
            (0..traj.dim())
                .map(|k| {
                    let (c, dc) = (traj.coefficients()[j][k], traj.rates()[j][k]);
                    if ledger.mask[j][k] {
                        weighted_rate(c, dc)
                    } else {
                        let w = c.norm_sqr();
                        w * (weighted_rate(c, dc) / w)
                    }
                })
                .sum()
        })
        .collect();
    Ok(*cumulative_trapezoid(&integrand, traj.grid())?
        .last()
        .unwrap())
}

/// Berry phase of band `n` along `grid`: instantaneous eigenvectors are
/// parallel-transported (each rotated to a positive real overlap with its
/// predecessor) and the phase of `<ψ_n(t0)|ψ̃_n(t_end)>` is returned in
/// `(-π, π]`. For a closed path this is the Berry phase; for an open path it
/// is the Pancharatnam phase between the endpoints.
pub fn berry_phase_connection(model: &HamiltonianModel, n: usize, grid: &TimeGrid) -> Result<f64> {
    if !model.grid().covers(grid) {
        return Err(Error::Range {
            t: grid.t_end(),
            t0: model.grid().t0(),
            t_end: model.grid().t_end(),
        });
    }
    if n >= model.dim() {
        return Err(Error::Validation(format!(
            "band {n} out of range for dimension {}",
            model.dim()
        )));
    }
    let first = instantaneous_band(model, n, grid.t0())?;
    let mut prev = first.clone();
    for t in grid.times().skip(1) {
        let mut v = instantaneous_band(model, n, t)?;
        let overlap = prev.dotc(&v);
        if overlap.norm() < 1e-6 {
            return Err(Error::numeric(
                "consecutive eigenvectors nearly orthogonal; refine the grid",
                Some(t),
            ));
        }
        v *= overlap.conj() / overlap.norm();
        prev = v;
    }
    Ok(wrap_phase(first.dotc(&prev).arg()))
}

/// Smallest gap between band `n` and its neighbours along the grid.
pub fn minimum_gap(model: &HamiltonianModel, n: usize, grid: &TimeGrid) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for t in grid.times() {
        let es = hermitian_eigensystem(&model.evaluate_hamiltonian(t)?)?;
        if n > 0 {
            gap = gap.min(es.values[n] - es.values[n - 1]);
        }
        if let Some(e) = es.values.get(n + 1) {
            gap = gap.min(e - es.values[n]);
        }
    }
    Ok(gap)
}

/// `arg <ψ(t0)|ψ(τ)>` on the principal branch.
pub fn total_phase(traj: &CoefficientTrajectory, tau: f64) -> Result<f64> {
    let j = traj.grid().index_of(tau)?;
    let overlap = traj.channel_amplitudes(0).dotc(&traj.channel_amplitudes(j));
    let magnitude = overlap.norm();
    if magnitude <= 1e-10 {
        return Err(Error::OrthogonalStates { magnitude });
    }
    Ok(wrap_phase(overlap.arg()))
}

/// `α(τ) = -∫ <ψ|H|ψ> dt`, evaluated in the channel basis as
/// `Σ_k |χ_k|² E_k + Σ_{kl} χ̄_k χ_l <ψ_k^0|ΔH|ψ_l^0>`.
pub fn aa_dynamical_phase(
    traj: &CoefficientTrajectory,
    model: &HamiltonianModel,
    tau: f64,
) -> Result<f64> {
    let energy = energy_expectation(traj, model)?;
    let j = traj.grid().index_of(tau)?;
    Ok(-cumulative_trapezoid(&energy, traj.grid())?[j])
}

/// `<ψ(t_j)|H(t_j)|ψ(t_j)>` at every grid point.
pub fn energy_expectation(
    traj: &CoefficientTrajectory,
    model: &HamiltonianModel,
) -> Result<Vec<f64>> {
    if model.dim() != traj.dim() {
        return Err(Error::Shape(
            "model and trajectory dimensions differ".into(),
        ));
    }
    let basis = traj.basis();
    traj.grid()
        .times()
        .enumerate()
        .map(|(j, t)| {
            let chi = traj.channel_amplitudes(j);
            let v = basis.to_channels(&model.delta_h(t)?);
            let diag: f64 = chi
                .iter()
                .zip(&basis.energies)
                .map(|(x, e)| x.norm_sqr() * e)
                .sum();
            let coupling = chi.dotc(&v.apply(&chi));
            if coupling.im.abs() > 1e-9 {
                return Err(Error::numeric(
                    format!("energy expectation has imaginary part {:e}", coupling.im),
                    Some(t),
                ));
            }
            Ok(diag + coupling.re)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub tau: f64,
    pub total_phi: f64,
    pub dynamical_alpha: f64,
    /// `φ - α` wrapped to `(-π, π]`.
    pub aa_beta: f64,
    pub berry_connection: Option<f64>,
    pub berry_decomposed: Option<f64>,
    /// `γ_k(τ)`.
    pub channel_gammas: Vec<f64>,
    pub amp_logs: Vec<f64>,
    /// `Γ_kl = γ_k - γ_l` at `τ`.
    pub relative_matrix: Vec<Vec<f64>>,
    pub masked_channels: Vec<usize>,
}

pub fn aa_phase(
    traj: &CoefficientTrajectory,
    model: &HamiltonianModel,
    tau: f64,
) -> Result<PhaseReport> {
    aa_phase_with_threshold(traj, model, tau, DEFAULT_THRESHOLD)
}

/// [`aa_phase`] with an explicit masking threshold.
///
/// Berry values are filled in for adiabatic-regime runs that start in a single
/// channel. The decomposed value needs the instantaneous eigenstate to keep a
/// nonzero overlap with its initial channel; when it does not, it is left
/// empty and the reason is logged.
pub fn aa_phase_with_threshold(
    traj: &CoefficientTrajectory,
    model: &HamiltonianModel,
    tau: f64,
    threshold: f64,
) -> Result<PhaseReport> {
    let j = traj.grid().index_of(tau)?;
    let ledger = sub_geometric_phases(traj, threshold)?;
    let total_phi = total_phase(traj, tau)?;
    let dynamical_alpha = aa_dynamical_phase(traj, model, tau)?;
    let aa_beta = wrap_phase(total_phi - dynamical_alpha);

    let (mut berry_connection, mut berry_decomposed) = (None, None);
    if let (Regime::Adiabatic, Some(n), true) = (model.regime(), traj.initial_channel(), j >= 2) {
        let sub = TimeGrid::new(traj.grid().t0(), tau, j)?;
        berry_connection = Some(berry_phase_connection(model, n, &sub)?);
        match adiabatic_expansion(model, n, &sub) {
            Ok(expansion) => {
                let l = sub_geometric_phases(&expansion, threshold)?;
                berry_decomposed = Some(berry_phase_decomposed(&expansion, &l)?);
            }
            Err(e @ Error::Numeric { .. }) => info!("decomposed Berry phase unavailable: {e}"),
            Err(e) => return Err(e),
        }
    }

    let gammas = ledger.gamma[j].clone();
    let relative_matrix = gammas
        .iter()
        .map(|gk| gammas.iter().map(|gl| gk - gl).collect())
        .collect();
    Ok(PhaseReport {
        tau,
        total_phi,
        dynamical_alpha,
        aa_beta,
        berry_connection,
        berry_decomposed,
        channel_gammas: gammas,
        amp_logs: ledger.amp_log[j].clone(),
        relative_matrix,
        masked_channels: ledger.masked_channels(j),
    })
}
