//! Versioned TOML run specification.
//!
//! ```toml
//! schema_version = 1
//!
//! [model]
//! kind = "two_level"          # or "general"
//! split = "initial"           # initial | bare | subtract
//! delta = 1.0
//! w_mag = { kind = "ramp", from = 0.0, to = 0.8 }
//! w_phase = { kind = "ramp", from = 0.0, to = 6.283185307179586 }
//!
//! [grid]
//! t0 = 0.0
//! t_end = 10.0
//! n_steps = 4000
//!
//! [run]
//! initial_channel = 0         # or amplitudes = [[re, im], ...]
//! regime = "adiabatic"
//! threshold = 1e-8
//!
//! [outputs]
//! report = "report.json"
//! trajectory = "trajectory.csv"
//! ```
//!
//! General models take `static` as a matrix (rows of `[re, im]` entries,
//! `{ diagonal = [...] }` or `{ random = { dim, scale, seed } }`), plus either
//! `[[model.terms]]` entries (`matrix`, `waveform`) or `tabulated`
//! (`{ samples = [...] }` inline, or `{ file = "path.json" }` relative to the spec).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Drive, DriveTerm, HamiltonianModel, Regime, SplitMode, TwoLevelSpec, Waveform};
use crate::numerics::{random_hermitian, CVector, ComplexMatrix, StateVector, TimeGrid, C64};
use crate::propagation::InitialCondition;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub schema_version: u32,
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSection {
    TwoLevel {
        #[serde(default)]
        split: SplitMode,
        delta: f64,
        w_mag: Waveform,
        w_phase: Waveform,
    },
    General {
        #[serde(default)]
        split: SplitMode,
        #[serde(rename = "static")]
        static_part: MatrixSpec,
        #[serde(default)]
        terms: Vec<TermSpec>,
        tabulated: Option<TabulatedSpec>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<[f64; 2]>>),
    Diagonal { diagonal: Vec<f64> },
    Random { random: RandomMatrix },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMatrix {
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub matrix: MatrixSpec,
    pub waveform: Waveform,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TabulatedSpec {
    Inline { samples: Vec<MatrixSpec> },
    File { file: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub initial_channel: Option<usize>,
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub regime: Regime,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Time at which phases are reported; defaults to the end of the grid.
    pub tau: Option<f64>,
    /// Times for density snapshots; defaults to `[t0, t_end]`.
    pub density_times: Option<Vec<f64>>,
    #[serde(default)]
    pub mixture: Vec<MixtureComponent>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            initial_channel: None,
            amplitudes: None,
            regime: Regime::default(),
            threshold: default_threshold(),
            tau: None,
            density_times: None,
            mixture: Vec::new(),
        }
    }
}

fn default_threshold() -> f64 {
    crate::phases::DEFAULT_THRESHOLD
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub initial_channel: Option<usize>,
    pub amplitudes: Option<Vec<[f64; 2]>>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub report: PathBuf,
    pub trajectory: PathBuf,
    pub phases: PathBuf,
    pub density: PathBuf,
    pub verify: PathBuf,
    pub sweep: PathBuf,
    /// Any of `"json"`, `"csv"`.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            trajectory: "trajectory.csv".into(),
            phases: "phases.json".into(),
            density: "density.json".into(),
            verify: "verify.json".into(),
            sweep: "sweep.csv".into(),
            formats: vec!["json".into(), "csv".into()],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

/// Command-line overrides applied on top of a spec.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub split: Option<SplitMode>,
    pub n_steps: Option<usize>,
    pub t_end: Option<f64>,
    pub threshold: Option<f64>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{name}: {msg}"))
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be finite, got {x}")))
    }
}

fn complex_vec(name: &str, v: &[[f64; 2]]) -> Result<Vec<C64>> {
    v.iter()
        .enumerate()
        .map(|(i, [re, im])| {
            finite(&format!("{name}[{i}]"), *re)?;
            finite(&format!("{name}[{i}]"), *im)?;
            Ok(C64::new(*re, *im))
        })
        .collect()
}

fn initial_condition(
    name: &str,
    channel: Option<usize>,
    amplitudes: &Option<Vec<[f64; 2]>>,
) -> Result<InitialCondition> {
    match (channel, amplitudes) {
        (Some(_), Some(_)) => Err(field(
            name,
            "initial_channel and amplitudes are mutually exclusive",
        )),
        (Some(n), None) => Ok(InitialCondition::Channel(n)),
        (None, Some(a)) => {
            let a = complex_vec(&format!("{name}.amplitudes"), a)?;
            let n2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            if (n2 - 1.0).abs() > StateVector::NORM_TOL {
                return Err(field(
                    &format!("{name}.amplitudes"),
                    format!("must be normalized, norm² = {n2}"),
                ));
            }
            Ok(InitialCondition::Amplitudes(a))
        }
        (None, None) => Ok(InitialCondition::Channel(0)),
    }
}

impl MatrixSpec {
    pub fn build(&self, name: &str) -> Result<ComplexMatrix> {
        let m = match self {
            MatrixSpec::Rows(rows) => {
                let rows: Vec<Vec<C64>> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| complex_vec(&format!("{name}[{i}]"), r))
                    .collect::<Result<_>>()?;
                ComplexMatrix::from_rows(&rows).map_err(|e| field(name, e))?
            }
            MatrixSpec::Diagonal { diagonal } => {
                for (i, d) in diagonal.iter().enumerate() {
                    finite(&format!("{name}.diagonal[{i}]"), *d)?;
                }
                if diagonal.is_empty() {
                    return Err(field(name, "diagonal must not be empty"));
                }
                ComplexMatrix::from_real_diagonal(diagonal)
            }
            MatrixSpec::Random { random } => {
                finite(&format!("{name}.random.scale"), random.scale)?;
                if random.dim == 0 {
                    return Err(field(name, "random.dim must be positive"));
                }
                random_hermitian(random.dim, random.scale, random.seed)
            }
        };
        m.ensure_hermitian(name).map_err(|e| field(name, e))?;
        Ok(m)
    }
}

#[derive(Deserialize)]
struct TabulatedFile {
    samples: Vec<MatrixSpec>,
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut spec = Self::parse(&text)?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    spec.schema_version
                ),
            ));
        }
        Ok(spec)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(split) = o.split {
            match &mut self.model {
                ModelSection::TwoLevel { split: s, .. }
                | ModelSection::General { split: s, .. } => *s = split,
            }
        }
        if let Some(n) = o.n_steps {
            self.grid.n_steps = n;
        }
        if let Some(t) = o.t_end {
            self.grid.t_end = t;
        }
        if let Some(th) = o.threshold {
            self.run.threshold = th;
        }
    }

    pub fn split(&self) -> SplitMode {
        match &self.model {
            ModelSection::TwoLevel { split, .. } | ModelSection::General { split, .. } => *split,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        finite("grid.t0", self.grid.t0)?;
        finite("grid.t_end", self.grid.t_end)?;
        TimeGrid::new(self.grid.t0, self.grid.t_end, self.grid.n_steps)
            .map_err(|e| field("grid", e))
    }

    pub fn threshold(&self) -> Result<f64> {
        let th = self.run.threshold;
        if th > 0.0 && th.is_finite() {
            Ok(th)
        } else {
            Err(field(
                "run.threshold",
                format!("must be positive and finite, got {th}"),
            ))
        }
    }

    pub fn tau(&self, grid: &TimeGrid) -> Result<f64> {
        let tau = self.run.tau.unwrap_or(grid.t_end());
        grid.index_of(tau).map_err(|e| field("run.tau", e))?;
        Ok(tau)
    }

    /// The two-level parameters, if this is a two-level spec.
    pub fn two_level(&self) -> Option<TwoLevelSpec> {
        match &self.model {
            ModelSection::TwoLevel {
                delta,
                w_mag,
                w_phase,
                ..
            } => Some(TwoLevelSpec {
                delta: *delta,
                w_mag: w_mag.clone(),
                w_phase: w_phase.clone(),
            }),
            ModelSection::General { .. } => None,
        }
    }

    pub fn model_kind(&self) -> &'static str {
        match self.model {
            ModelSection::TwoLevel { .. } => "two_level",
            ModelSection::General { .. } => "general",
        }
    }

    /// Builds the Hamiltonian on the spec's grid. Two-level specs accept
    /// `delta = 0`, which places the path on the equator of the Bloch sphere.
    pub fn build_model(&self) -> Result<HamiltonianModel> {
        let grid = self.time_grid()?;
        let regime = self.run.regime;
        match &self.model {
            ModelSection::TwoLevel {
                split,
                delta,
                w_mag,
                w_phase,
            } => {
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return Err(field(
                        "model.delta",
                        format!("must be non-negative and finite, got {delta}"),
                    ));
                }
                w_mag.validate().map_err(|e| field("model.w_mag", e))?;
                w_phase.validate().map_err(|e| field("model.w_phase", e))?;
                let drive = Drive::TwoLevel {
                    w_mag: w_mag.clone(),
                    w_phase: w_phase.clone(),
                };
                HamiltonianModel::new(
                    ComplexMatrix::from_real_diagonal(&[-delta, *delta]),
                    drive,
                    *split,
                    grid,
                    regime,
                )
            }
            ModelSection::General {
                split,
                static_part,
                terms,
                tabulated,
            } => {
                let h = static_part.build("model.static")?;
                let drive = match (terms.is_empty(), tabulated) {
                    (false, Some(_)) => {
                        return Err(field("model", "terms and tabulated are mutually exclusive"));
                    }
                    (true, None) => Drive::None,
                    (false, None) => Drive::Terms(
                        terms
                            .iter()
                            .enumerate()
                            .map(|(i, t)| {
                                let name = format!("model.terms[{i}]");
                                t.waveform.validate().map_err(|e| field(&name, e))?;
                                Ok(DriveTerm {
                                    matrix: t.matrix.build(&format!("{name}.matrix"))?,
                                    waveform: t.waveform.clone(),
                                })
                            })
                            .collect::<Result<_>>()?,
                    ),
                    (true, Some(tab)) => {
                        let samples = match tab {
                            TabulatedSpec::Inline { samples } => samples.clone(),
                            TabulatedSpec::File { file } => {
                                let path = self.base_dir.join(file);
                                let text = fs::read_to_string(&path).map_err(|e| {
                                    field(
                                        "model.tabulated.file",
                                        format!("cannot read {}: {e}", path.display()),
                                    )
                                })?;
                                serde_json::from_str::<TabulatedFile>(&text)
                                    .map_err(|e| field("model.tabulated.file", e))?
                                    .samples
                            }
                        };
                        Drive::Tabulated(
                            samples
                                .iter()
                                .enumerate()
                                .map(|(i, m)| m.build(&format!("model.tabulated.samples[{i}]")))
                                .collect::<Result<_>>()?,
                        )
                    }
                };
                HamiltonianModel::new(h, drive, *split, grid, regime)
            }
        }
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        initial_condition("run", self.run.initial_channel, &self.run.amplitudes)
    }

    pub fn initial_vector(&self, dim: usize) -> Result<CVector> {
        self.initial_condition()?
            .resolve(dim)
            .map_err(|e| field("run", e))
    }

    /// Mixture components as `(weight, label, initial condition)`.
    pub fn mixture(&self) -> Result<Vec<(f64, String, InitialCondition)>> {
        self.run
            .mixture
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let name = format!("run.mixture[{i}]");
                finite(&format!("{name}.weight"), c.weight)?;
                let ic = initial_condition(&name, c.initial_channel, &c.amplitudes)?;
                let label = c.label.clone().unwrap_or_else(|| format!("component {i}"));
                Ok((c.weight, label, ic))
            })
            .collect()
    }
}
