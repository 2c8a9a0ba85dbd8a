//! Split Hamiltonians `H(t) = H(0) + ΔH(t)`.
//!
//! Time dependence is written against the normalized path parameter
//! `u = (t - t0) / (t_end - t0)`, so a model describes one traversal of a
//! parameter path and the grid duration sets how fast it is traversed.
//! Stretching `t_end` slows the sweep without changing the path.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_eigensystem, ComplexMatrix, EigenSystem, StateVector, TimeGrid, C64,
};

/// Scalar function of the path parameter `u ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Constant {
        value: f64,
    },
    /// Linear from `from` at `u = 0` to `to` at `u = 1`.
    Ramp {
        from: f64,
        to: f64,
    },
    /// `offset + amplitude * sin(2π · cycles · u + phase)`.
    Sinusoid {
        amplitude: f64,
        cycles: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    Sum {
        parts: Vec<Waveform>,
    },
    /// Samples at equally spaced `u`, linearly interpolated. Derivatives are
    /// centered differences over one sample spacing.
    Samples {
        values: Vec<f64>,
    },
}

impl Waveform {
    pub fn constant(value: f64) -> Self {
        Waveform::Constant { value }
    }

    pub fn ramp(from: f64, to: f64) -> Self {
        Waveform::Ramp { from, to }
    }

    /// One full phase winding, `2π u`.
    pub fn winding() -> Self {
        Waveform::ramp(0.0, 2.0 * PI)
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            Waveform::Constant { value } => *value,
            Waveform::Ramp { from, to } => from + (to - from) * u,
            Waveform::Sinusoid {
                amplitude,
                cycles,
                phase,
                offset,
            } => offset + amplitude * (2.0 * PI * cycles * u + phase).sin(),
            Waveform::Sum { parts } => parts.iter().map(|p| p.value(u)).sum(),
            Waveform::Samples { values } => {
                let m = values.len() - 1;
                let x = u.clamp(0.0, 1.0) * m as f64;
                let lo = (x.floor() as usize).min(m - 1);
                let frac = x - lo as f64;
                values[lo] * (1.0 - frac) + values[lo + 1] * frac
            }
        }
    }

    /// `d/du`.
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Waveform::Constant { .. } => 0.0,
            Waveform::Ramp { from, to } => to - from,
            Waveform::Sinusoid {
                amplitude,
                cycles,
                phase,
                ..
            } => amplitude * 2.0 * PI * cycles * (2.0 * PI * cycles * u + phase).cos(),
            Waveform::Sum { parts } => parts.iter().map(|p| p.derivative(u)).sum(),
            Waveform::Samples { values } => {
                let h = 1.0 / (values.len() - 1) as f64;
                let (a, b) = ((u - h).max(0.0), (u + h).min(1.0));
                (self.value(b) - self.value(a)) / (b - a)
            }
        }
    }

    /// Multiplies the whole waveform by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Waveform::Constant { value } => Waveform::constant(value * factor),
            Waveform::Ramp { from, to } => Waveform::ramp(from * factor, to * factor),
            Waveform::Sinusoid {
                amplitude,
                cycles,
                phase,
                offset,
            } => Waveform::Sinusoid {
                amplitude: amplitude * factor,
                cycles: *cycles,
                phase: *phase,
                offset: offset * factor,
            },
            Waveform::Sum { parts } => Waveform::Sum {
                parts: parts.iter().map(|p| p.scaled(factor)).collect(),
            },
            Waveform::Samples { values } => Waveform::Samples {
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            Waveform::Constant { value } => value.is_finite(),
            Waveform::Ramp { from, to } => from.is_finite() && to.is_finite(),
            Waveform::Sinusoid {
                amplitude,
                cycles,
                phase,
                offset,
            } => [amplitude, cycles, phase, offset]
                .iter()
                .all(|x| x.is_finite()),
            Waveform::Sum { parts } => {
                for p in parts {
                    p.validate()?;
                }
                true
            }
            Waveform::Samples { values } => {
                if values.len() < 2 {
                    return Err(Error::Validation(
                        "sampled waveform needs at least 2 values".into(),
                    ));
                }
                values.iter().all(|v| v.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "waveform has non-finite parameters: {self:?}"
            )))
        }
    }
}

/// How `H(t)` is divided into the reference Hamiltonian and its departure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// `h0 = H(t0)` in full, `ΔH(t) = H(t) - H(t0)`.
    #[default]
    Initial,
    /// `h0` is the static part only and `ΔH(t)` is the whole drive, so `ΔH(t0)` may be nonzero.
    Bare,
    /// `h0` is the static part and `ΔH(t) = drive(t) - drive(t0)`.
    /// This discards the static piece of the drive: the model Hamiltonian
    /// is `static + drive(t) - drive(t0)`.
    Subtract,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Initial => "initial",
            SplitMode::Bare => "bare",
            SplitMode::Subtract => "subtract",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(SplitMode::Initial),
            "bare" => Ok(SplitMode::Bare),
            "subtract" => Ok(SplitMode::Subtract),
            other => Err(Error::Validation(format!(
                "unknown split '{other}' (expected initial, bare or subtract)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    Adiabatic,
    Nonadiabatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveTerm {
    /// Hermitian.
    pub matrix: ComplexMatrix,
    pub waveform: Waveform,
}

/// Time-dependent part of the Hamiltonian, before splitting.
#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    None,
    /// Two-level coupling `[[0, w], [w*, 0]]` with `w = |w| e^{iδ}`.
    TwoLevel {
        w_mag: Waveform,
        w_phase: Waveform,
    },
    /// `Σ_i V_i f_i(u)`.
    Terms(Vec<DriveTerm>),
    /// Samples at equally spaced `u` in `[0, 1]`, linearly interpolated.
    Tabulated(Vec<ComplexMatrix>),
}

impl Drive {
    fn at(&self, u: f64, dim: usize) -> ComplexMatrix {
        match self {
            Drive::None => ComplexMatrix::zeros(dim),
            Drive::TwoLevel { w_mag, w_phase } => {
                let w = C64::from_polar(w_mag.value(u), w_phase.value(u));
                let zero = C64::new(0.0, 0.0);
                ComplexMatrix::from_fn(2, |i, j| match (i, j) {
                    (0, 1) => w,
                    (1, 0) => w.conj(),
                    _ => zero,
                })
            }
            Drive::Terms(terms) => terms.iter().fold(ComplexMatrix::zeros(dim), |acc, term| {
                &acc + &term.matrix.scale_real(term.waveform.value(u))
            }),
            Drive::Tabulated(samples) => {
                let m = samples.len() - 1;
                let x = (u.clamp(0.0, 1.0)) * m as f64;
                let lo = (x.floor() as usize).min(m - 1);
                let frac = x - lo as f64;
                &samples[lo].scale_real(1.0 - frac) + &samples[lo + 1].scale_real(frac)
            }
        }
    }

    /// Multiplies the drive strength by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Drive::None => Drive::None,
            Drive::TwoLevel { w_mag, w_phase } => Drive::TwoLevel {
                w_mag: w_mag.scaled(factor),
                w_phase: w_phase.clone(),
            },
            Drive::Terms(terms) => Drive::Terms(
                terms
                    .iter()
                    .map(|t| DriveTerm {
                        matrix: t.matrix.clone(),
                        waveform: t.waveform.scaled(factor),
                    })
                    .collect(),
            ),
            Drive::Tabulated(samples) => {
                Drive::Tabulated(samples.iter().map(|s| s.scale_real(factor)).collect())
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Drive::None => Ok(()),
            Drive::TwoLevel { w_mag, w_phase } => {
                if dim != 2 {
                    return Err(Error::Shape(format!(
                        "two-level drive on a {dim}-level model"
                    )));
                }
                w_mag.validate()?;
                w_phase.validate()
            }
            Drive::Terms(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if t.matrix.dim() != dim {
                        return Err(Error::Shape(format!(
                            "drive term {i} is {0}x{0}, model is {dim}x{dim}",
                            t.matrix.dim()
                        )));
                    }
                    t.matrix.ensure_hermitian(&format!("drive term {i}"))?;
                    t.waveform.validate()?;
                }
                Ok(())
            }
            Drive::Tabulated(samples) => {
                if samples.len() < 2 {
                    return Err(Error::Validation(
                        "tabulated drive needs at least 2 samples".into(),
                    ));
                }
                for (i, s) in samples.iter().enumerate() {
                    if s.dim() != dim {
                        return Err(Error::Shape(format!(
                            "tabulated sample {i} is {0}x{0}, model is {dim}x{dim}",
                            s.dim()
                        )));
                    }
                    s.ensure_hermitian(&format!("tabulated sample {i}"))?;
                }
                Ok(())
            }
        }
    }
}

/// `H(t) = h0 + ΔH(t)` on a fixed time span.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    static_part: ComplexMatrix,
    drive: Drive,
    split: SplitMode,
    grid: TimeGrid,
    regime: Regime,
    h0: ComplexMatrix,
    drive_origin: ComplexMatrix,
}

impl HamiltonianModel {
    pub fn new(
        static_part: ComplexMatrix,
        drive: Drive,
        split: SplitMode,
        grid: TimeGrid,
        regime: Regime,
    ) -> Result<Self> {
        let dim = static_part.dim();
        static_part.ensure_hermitian("static Hamiltonian")?;
        drive.validate(dim)?;
        let drive_origin = drive.at(0.0, dim);
        let h0 = match split {
            SplitMode::Initial => &static_part + &drive_origin,
            SplitMode::Bare | SplitMode::Subtract => static_part.clone(),
        };
        Ok(Self {
            static_part,
            drive,
            split,
            grid,
            regime,
            h0,
            drive_origin,
        })
    }

    /// Time-independent model, `ΔH ≡ 0`.
    pub fn stationary(h: ComplexMatrix, grid: TimeGrid, regime: Regime) -> Result<Self> {
        Self::new(h, Drive::None, SplitMode::Initial, grid, regime)
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn static_part(&self) -> &ComplexMatrix {
        &self.static_part
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn split(&self) -> SplitMode {
        self.split
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn delta_h(&self, t: f64) -> Result<ComplexMatrix> {
        self.grid.check_contains(t)?;
        Ok(self.delta_h_unchecked(t))
    }

    pub(crate) fn delta_h_unchecked(&self, t: f64) -> ComplexMatrix {
        let drive = self.drive.at(self.grid.path_parameter(t), self.dim());
        match self.split {
            SplitMode::Bare => drive,
            SplitMode::Initial | SplitMode::Subtract => &drive - &self.drive_origin,
        }
    }

    /// `h0 + ΔH(t)`.
    pub fn evaluate_hamiltonian(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(&self.h0 + &self.delta_h(t)?)
    }

    pub fn initial_eigenbasis(&self) -> Result<InitialBasis> {
        let es = hermitian_eigensystem(&self.h0)?;
        if self.regime == Regime::Adiabatic && es.is_degenerate() {
            return Err(Error::Degeneracy(format!(
                "H(0) has degenerate levels {:?}; adiabatic runs need a resolvable basis",
                es.degenerate_clusters
            )));
        }
        Ok(InitialBasis::from(es))
    }

    /// Same model on another grid. The path is re-traversed over the new span.
    pub fn with_grid(&self, grid: TimeGrid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    pub fn with_regime(&self, regime: Regime) -> Self {
        Self {
            regime,
            ..self.clone()
        }
    }

    pub fn with_drive_scale(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.static_part.clone(),
            self.drive.scaled(factor),
            self.split,
            self.grid,
            self.regime,
        )
    }
}

/// Eigenbasis `{|ψ_k^0>}` of `h0` with energies `E_k^0` (equal to `ω_k` with ħ = 1).
#[derive(Clone, Debug)]
pub struct InitialBasis {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
    pub degenerate_clusters: Vec<Vec<usize>>,
    unitary: nalgebra::DMatrix<C64>,
}

impl From<EigenSystem> for InitialBasis {
    fn from(es: EigenSystem) -> Self {
        let unitary = es.unitary();
        Self {
            energies: es.values,
            states: es.vectors,
            degenerate_clusters: es.degenerate_clusters,
            unitary,
        }
    }
}

impl InitialBasis {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Angular frequencies `ω_k = E_k / ħ`.
    pub fn frequencies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the basis vectors.
    pub fn unitary(&self) -> &nalgebra::DMatrix<C64> {
        &self.unitary
    }

    /// Matrix elements `<ψ_k^0| M |ψ_l^0>`.
    pub fn to_channels(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.conjugate_by(&self.unitary)
    }
}

/// Parameters of the two-level example `H = diag(-Δ, Δ) + [[0, w], [w*, 0]]`, `w = |w| e^{iδ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelSpec {
    pub delta: f64,
    pub w_mag: Waveform,
    pub w_phase: Waveform,
}

impl TwoLevelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Validation(format!(
                "two-level splitting must be positive, got {}",
                self.delta
            )));
        }
        self.w_mag.validate()?;
        self.w_phase.validate()
    }

    pub fn coupling(&self, u: f64) -> C64 {
        C64::from_polar(self.w_mag.value(u), self.w_phase.value(u))
    }

    /// Mixing angle with `tan θ = |w| / Δ`.
    pub fn theta(&self, u: f64) -> f64 {
        (self.w_mag.value(u).abs() / self.delta).atan()
    }

    /// The full two-level Hamiltonian at path parameter `u`, independent of any split.
    pub fn hamiltonian(&self, u: f64) -> ComplexMatrix {
        let w = self.coupling(u);
        let d = self.delta;
        ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => C64::new(-d, 0.0),
            (1, 1) => C64::new(d, 0.0),
            (0, 1) => w,
            _ => w.conj(),
        })
    }

    pub fn static_part(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[-self.delta, self.delta])
    }

    pub fn drive(&self) -> Drive {
        Drive::TwoLevel {
            w_mag: self.w_mag.clone(),
            w_phase: self.w_phase.clone(),
        }
    }
}

pub fn build_two_level(
    spec: &TwoLevelSpec,
    grid: TimeGrid,
    split: SplitMode,
) -> Result<HamiltonianModel> {
    spec.validate()?;
    HamiltonianModel::new(
        spec.static_part(),
        spec.drive(),
        split,
        grid,
        Regime::Adiabatic,
    )
}
