use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::output::{table_csv, trajectory_csv, write_json, write_text};
use super::runspec::{RunSpec, SCHEMA_VERSION};
use crate::density::{
    assemble_density, mix, relative_subphase_matrix, DensityMatrixSnapshot, MixedStateSpec,
    RelativePhaseMatrix,
};
use crate::error::{Error, Result};
use crate::model::{HamiltonianModel, Regime, SplitMode};
use crate::numerics::{CVector, ComplexMatrix, StateVector, TimeGrid};
use crate::phases::{
    aa_phase_with_threshold, energy_expectation, phase_distance, sub_geometric_phases, MaskEvent,
    PhaseLedger, PhaseReport,
};
use crate::propagation::{
    assemble_state, direct_schrodinger_solve, integrate_coefficients, CoefficientTrajectory,
    StateTrajectory,
};

/// A validated spec with its model built.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub spec: RunSpec,
    pub model: HamiltonianModel,
    pub grid: TimeGrid,
    pub initial: CVector,
    pub tau: f64,
    pub threshold: f64,
}

impl Prepared {
    pub fn new(spec: RunSpec) -> Result<Self> {
        let model = spec.build_model()?;
        let grid = *model.grid();
        let initial = spec.initial_vector(model.dim())?;
        let tau = spec.tau(&grid)?;
        let threshold = spec.threshold()?;
        Ok(Self {
            spec,
            model,
            grid,
            initial,
            tau,
            threshold,
        })
    }

    /// Same run with another model and grid (used by sweeps).
    fn with_model(&self, model: HamiltonianModel) -> Result<Self> {
        let grid = *model.grid();
        let tau = if self.spec.run.tau.is_some() {
            self.tau
        } else {
            grid.t_end()
        };
        grid.index_of(tau)?;
        Ok(Self {
            model,
            grid,
            tau,
            ..self.clone()
        })
    }

    /// The initial state in the original basis.
    pub fn initial_state(&self, traj_basis: &crate::model::InitialBasis) -> Result<StateVector> {
        StateVector::new(traj_basis.unitary() * &self.initial)
    }
}

pub struct Simulation {
    pub traj: CoefficientTrajectory,
    pub ledger: PhaseLedger,
    pub energy: Vec<f64>,
    pub phases: PhaseReport,
}

pub fn run_simulation(p: &Prepared) -> Result<Simulation> {
    let traj = integrate_coefficients(&p.model, &p.initial, &p.grid)?;
    let ledger = sub_geometric_phases(&traj, p.threshold)?;
    let energy = energy_expectation(&traj, &p.model)?;
    let phases = aa_phase_with_threshold(&traj, &p.model, p.tau, p.threshold)?;
    Ok(Simulation {
        traj,
        ledger,
        energy,
        phases,
    })
}

/// Direct solve from the same initial state, for oracle comparisons.
pub fn oracle_states(p: &Prepared, traj: &CoefficientTrajectory) -> Result<StateTrajectory> {
    direct_schrodinger_solve(&p.model, &p.initial_state(traj.basis())?, &p.grid)
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelInfo {
    pub kind: &'static str,
    pub split: SplitMode,
    pub regime: Regime,
    pub dim: usize,
}

impl ModelInfo {
    pub fn of(p: &Prepared) -> Self {
        Self {
            kind: p.spec.model_kind(),
            split: p.model.split(),
            regime: p.model.regime(),
            dim: p.model.dim(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub initial_channel: Option<usize>,
    /// `[re, im]` per channel.
    pub initial_amplitudes: Vec<[f64; 2]>,
    pub threshold: f64,
    pub tau: f64,
}

impl RunInfo {
    pub fn of(p: &Prepared) -> Self {
        Self {
            initial_channel: p
                .spec
                .run
                .amplitudes
                .is_none()
                .then(|| p.spec.run.initial_channel.unwrap_or(0)),
            initial_amplitudes: p.initial.iter().map(|z| [z.re, z.im]).collect(),
            threshold: p.threshold,
            tau: p.tau,
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub model: ModelInfo,
    pub grid: TimeGrid,
    pub run: RunInfo,
    /// `E_k^0`, needed to rebuild channel amplitudes from the CSV coefficients.
    pub basis_energies: Vec<f64>,
    pub norm_drift: f64,
    pub phases: PhaseReport,
    pub mask_events: Vec<MaskEvent>,
}

fn run_report(command: &'static str, p: &Prepared, sim: &Simulation) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        command,
        model: ModelInfo::of(p),
        grid: p.grid,
        run: RunInfo::of(p),
        basis_energies: sim.traj.energies().to_vec(),
        norm_drift: sim.traj.norm_drift(),
        phases: sim.phases.clone(),
        mask_events: sim.ledger.events().to_vec(),
    }
}

pub fn simulate(p: &Prepared, out_dir: &Path) -> Result<RunReport> {
    let sim = run_simulation(p)?;
    let report = run_report("simulate", p, &sim);
    let outputs = &p.spec.outputs;
    if outputs.wants("csv") {
        let path = out_dir.join(&outputs.trajectory);
        write_text(&path, &trajectory_csv(&sim.traj, &sim.ledger, &sim.energy))?;
        info!("wrote {}", path.display());
    }
    if outputs.wants("json") {
        let path = out_dir.join(&outputs.report);
        write_json(&path, &report)?;
        info!("wrote {}", path.display());
    }
    Ok(report)
}

pub fn phases(p: &Prepared, out_dir: &Path) -> Result<RunReport> {
    let sim = run_simulation(p)?;
    let report = run_report("phases", p, &sim);
    write_json(&out_dir.join(&p.spec.outputs.phases), &report)?;
    Ok(report)
}

#[derive(Serialize)]
pub struct DensityEntry {
    pub snapshot: DensityMatrixSnapshot,
    pub relative_phases: RelativePhaseMatrix,
    /// `max |ρ - |ψ><ψ||` against the direct solve.
    pub oracle_residual: f64,
}

#[derive(Serialize)]
pub struct MixtureReport {
    pub components: Vec<(f64, String)>,
    pub snapshots: Vec<DensityMatrixSnapshot>,
}

#[derive(Serialize)]
pub struct DensityReport {
    pub schema_version: u32,
    pub model: ModelInfo,
    pub grid: TimeGrid,
    pub run: RunInfo,
    pub entries: Vec<DensityEntry>,
    pub mixture: Option<MixtureReport>,
}

fn density_times(p: &Prepared) -> Result<Vec<f64>> {
    let times = p
        .spec
        .run
        .density_times
        .clone()
        .unwrap_or_else(|| vec![p.grid.t0(), p.grid.t_end()]);
    for &t in &times {
        p.grid
            .index_of(t)
            .map_err(|e| Error::Validation(format!("run.density_times: {e}")))?;
    }
    Ok(times)
}

fn snapshots(
    traj: &CoefficientTrajectory,
    ledger: &PhaseLedger,
    times: &[f64],
) -> Result<Vec<DensityMatrixSnapshot>> {
    times
        .iter()
        .map(|&t| assemble_density(traj, ledger, t))
        .collect()
}

pub fn density(p: &Prepared, out_dir: &Path) -> Result<DensityReport> {
    let times = density_times(p)?;
    let traj = integrate_coefficients(&p.model, &p.initial, &p.grid)?;
    let ledger = sub_geometric_phases(&traj, p.threshold)?;
    let oracle = oracle_states(p, &traj)?;
    let entries = times
        .iter()
        .map(|&t| {
            let snapshot = assemble_density(&traj, &ledger, t)?;
            let psi = &oracle.states[p.grid.index_of(t)?];
            Ok(DensityEntry {
                oracle_residual: snapshot.rho.max_abs_diff(&ComplexMatrix::outer(psi)),
                relative_phases: relative_subphase_matrix(&ledger, t)?,
                snapshot,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let components = p.spec.mixture()?;
    let mixture = if components.is_empty() {
        None
    } else {
        let spec =
            MixedStateSpec::new(components.iter().map(|(w, l, _)| (*w, l.clone())).collect())?;
        let per_component = components
            .par_iter()
            .map(|(_, _, ic)| {
                let c0 = ic.resolve(p.model.dim())?;
                let traj = integrate_coefficients(&p.model, &c0, &p.grid)?;
                let ledger = sub_geometric_phases(&traj, p.threshold)?;
                snapshots(&traj, &ledger, &times)
            })
            .collect::<Result<Vec<_>>>()?;
        let mixed = (0..times.len())
            .map(|i| {
                let at: Vec<_> = per_component.iter().map(|s| s[i].clone()).collect();
                mix(&spec, &at)
            })
            .collect::<Result<_>>()?;
        Some(MixtureReport {
            components: spec.components().to_vec(),
            snapshots: mixed,
        })
    };

    let report = DensityReport {
        schema_version: SCHEMA_VERSION,
        model: ModelInfo::of(p),
        grid: p.grid,
        run: RunInfo::of(p),
        entries,
        mixture,
    };
    write_json(&out_dir.join(&p.spec.outputs.density), &report)?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Sweep rate ε: the path is traversed in `T = 1/ε` at fixed step size.
    Rate,
    /// Multiplier on the drive strength.
    Amplitude,
    #[value(name = "n_steps")]
    NSteps,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "value",
    "t_end",
    "n_steps",
    "total_phi",
    "dynamical_alpha",
    "aa_beta",
    "berry_connection",
    "berry_gap",
    "norm_drift",
    "oracle_residual",
    "step_residual",
];

fn sweep_point(base: &Prepared, param: SweepParam, value: f64) -> Result<Prepared> {
    let bad = |msg: String| Error::Validation(format!("sweep value {value}: {msg}"));
    if !value.is_finite() {
        return Err(bad("not finite".into()));
    }
    let model = match param {
        SweepParam::Rate => {
            if value <= 0.0 {
                return Err(bad("rate must be positive".into()));
            }
            let duration = 1.0 / value;
            let n = (duration / base.grid.step()).round().max(2.0) as usize;
            let grid = TimeGrid::new(base.grid.t0(), base.grid.t0() + duration, n)?;
            base.model.with_grid(grid)
        }
        SweepParam::Amplitude => base.model.with_drive_scale(value)?,
        SweepParam::NSteps => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(bad("n_steps must be an integer ≥ 2".into()));
            }
            base.model.with_grid(base.grid.with_steps(value as usize)?)
        }
    };
    base.with_model(model)
}

fn sweep_row(base: &Prepared, param: SweepParam, value: f64) -> Result<Vec<Option<f64>>> {
    let p = sweep_point(base, param, value)?;
    let sim = run_simulation(&p)?;
    let oracle = oracle_states(&p, &sim.traj)?;
    let oracle_residual = assemble_state(&sim.traj, None)?.max_distance(&oracle)?;
    let fine = direct_schrodinger_solve(
        &p.model,
        &p.initial_state(sim.traj.basis())?,
        &p.grid.with_steps(2 * p.grid.n_steps())?,
    )?;
    let step_residual = (oracle.states.last().unwrap() - fine.states.last().unwrap()).norm();
    let r = &sim.phases;
    Ok(vec![
        Some(value),
        Some(p.grid.t_end()),
        Some(p.grid.n_steps() as f64),
        Some(r.total_phi),
        Some(r.dynamical_alpha),
        Some(r.aa_beta),
        r.berry_connection,
        r.berry_connection.map(|b| phase_distance(r.aa_beta, b)),
        Some(sim.traj.norm_drift()),
        Some(oracle_residual),
        Some(step_residual),
    ])
}

/// One row per value, in input order; points run in parallel.
pub fn sweep(p: &Prepared, param: SweepParam, values: &[f64], out_dir: &Path) -> Result<String> {
    let rows = values
        .par_iter()
        .map(|&v| sweep_row(p, param, v))
        .collect::<Result<Vec<_>>>()?;
    let csv = table_csv(&SWEEP_HEADER, &rows);
    write_text(&out_dir.join(&p.spec.outputs.sweep), &csv)?;
    Ok(csv)
}

/// Parses a comma-separated value list; an empty string gives an empty list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Validation(format!("--values: '{s}': {e}")))
        })
        .collect()
}
