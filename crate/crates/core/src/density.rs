//! Channel-resolved density matrices, relative sub-geometric phases and mixtures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{CVector, ComplexMatrix, C64};
use crate::phases::PhaseLedger;
use crate::propagation::CoefficientTrajectory;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrixSnapshot {
    pub t: f64,
    #[serde(serialize_with = "serialize_rows")]
    pub rho: ComplexMatrix,
    /// `tr ρ²`
    pub purity: f64,
}

fn serialize_rows<S: serde::Serializer>(
    m: &ComplexMatrix,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = m
        .to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
        .collect();
    rows.serialize(s)
}

impl DensityMatrixSnapshot {
    pub fn new(t: f64, rho: ComplexMatrix) -> Self {
        let purity = (&rho * &rho).trace().re;
        Self { t, rho, purity }
    }

    /// `|ψ><ψ|`
    pub fn pure(t: f64, psi: &CVector) -> Self {
        Self::new(t, ComplexMatrix::outer(psi))
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.rho.hermiticity_residual()
    }

    /// `max |ρ² - ρ|`, zero for a pure state.
    pub fn idempotency_residual(&self) -> f64 {
        (&self.rho * &self.rho).max_abs_diff(&self.rho)
    }
}

/// Density matrix at `t` rebuilt from the ledger,
/// `ρ = Σ_kl e^{i(γ_k - γ_l)} e^{-i(d_k - d_l)} a_k ā_l |ψ_k^0><ψ_l^0|`,
/// expressed in the original basis.
pub fn assemble_density(
    traj: &CoefficientTrajectory,
    ledger: &PhaseLedger,
    t: f64,
) -> Result<DensityMatrixSnapshot> {
    let j = traj.grid().index_of(t)?;
    ledger.check_matches(traj)?;
    for k in ledger.masked_channels(j) {
        let weight = traj.channel_amplitude(j, k).norm();
        if weight > ledger.threshold() {
            return Err(Error::FactorizationInvalid {
                channel: k,
                t,
                weight,
            });
        }
    }
    let a = ledger.residual_amplitudes(traj, j);
    let phases: Vec<C64> = (0..traj.dim()).map(|k| ledger.phase_factor(j, k)).collect();
    let channel_rho = ComplexMatrix::from_fn(traj.dim(), |k, l| {
        phases[k] * phases[l].conj() * a[k] * a[l].conj()
    });
    let rho = channel_rho.conjugate_by(&traj.basis().unitary().adjoint());
    Ok(DensityMatrixSnapshot::new(t, rho))
}

/// `Γ_kl = γ_k - γ_l` at one time, with entries involving a masked channel flagged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativePhaseMatrix {
    pub values: Vec<Vec<f64>>,
    pub flagged: Vec<Vec<bool>>,
}

impl RelativePhaseMatrix {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k][l]
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .flat_map(|k| (0..n).map(move |l| (k, l)))
            .map(|(k, l)| (self.values[k][l] + self.values[l][k]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn relative_subphase_matrix(ledger: &PhaseLedger, t: f64) -> Result<RelativePhaseMatrix> {
    let j = ledger.grid().index_of(t)?;
    Ok(relative_from_gammas(&ledger.gamma()[j], &ledger.mask()[j]))
}

pub(crate) fn relative_from_gammas(gamma: &[f64], mask: &[bool]) -> RelativePhaseMatrix {
    RelativePhaseMatrix {
        values: gamma
            .iter()
            .map(|gk| gamma.iter().map(|gl| gk - gl).collect())
            .collect(),
        flagged: mask
            .iter()
            .map(|&mk| mask.iter().map(|&ml| mk || ml).collect())
            .collect(),
    }
}

/// Weights and labels of the pure runs making up a mixture.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedStateSpec {
    components: Vec<(f64, String)>,
}

impl MixedStateSpec {
    pub const WEIGHT_TOL: f64 = 1e-12;

    pub fn new(components: Vec<(f64, String)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation(
                "a mixture needs at least one component".into(),
            ));
        }
        if let Some((p, label)) = components
            .iter()
            .find(|(p, _)| !(*p >= 0.0 && p.is_finite()))
        {
            return Err(Error::Validation(format!(
                "component '{label}' has invalid weight {p}"
            )));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > Self::WEIGHT_TOL {
            return Err(Error::Validation(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self { components })
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().map(|(p, _)| *p)
    }

    pub fn components(&self) -> &[(f64, String)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// `ρ = Σ_k p_k ρ_k`. No phase relation between components is introduced.
pub fn mix(
    spec: &MixedStateSpec,
    snapshots: &[DensityMatrixSnapshot],
) -> Result<DensityMatrixSnapshot> {
    if snapshots.len() != spec.len() {
        return Err(Error::Shape(format!(
            "{} snapshots for {} mixture components",
            snapshots.len(),
            spec.len()
        )));
    }
    let first = &snapshots[0];
    for s in snapshots {
        if s.dim() != first.dim() {
            return Err(Error::Shape(
                "mixture components differ in dimension".into(),
            ));
        }
        if s.t != first.t {
            return Err(Error::Shape(format!(
                "mixture components at t = {} and t = {}",
                first.t, s.t
            )));
        }
    }
    let rho = spec
        .weights()
        .zip(snapshots)
        .fold(ComplexMatrix::zeros(first.dim()), |acc, (p, s)| {
            &acc + &s.rho.scale_real(p)
        });
    Ok(DensityMatrixSnapshot::new(first.t, rho))
}

/// `Re tr(ρ A)` for Hermitian `A`.
pub fn observable_average(snapshot: &DensityMatrixSnapshot, a: &ComplexMatrix) -> Result<f64> {
    if a.dim() != snapshot.dim() {
        return Err(Error::Shape(format!(
            "observable is {0}x{0}, density matrix is {1}x{1}",
            a.dim(),
            snapshot.dim()
        )));
    }
    a.ensure_hermitian("observable")?;
    let value = (&snapshot.rho * a).trace();
    if value.im.abs() > 1e-9 {
        return Err(Error::numeric(
            format!("tr(ρA) has imaginary part {:e}", value.im),
            Some(snapshot.t),
        ));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_two_level, HamiltonianModel, Regime, SplitMode, TwoLevelSpec, Waveform,
    };
    use crate::numerics::{random_hermitian, StateVector, TimeGrid};
    use crate::phases::{sub_geometric_phases, DEFAULT_THRESHOLD};
    use crate::propagation::{assemble_state, direct_schrodinger_solve, integrate_coefficients};

    fn projector(dim: usize, k: usize) -> DensityMatrixSnapshot {
        DensityMatrixSnapshot::pure(0.0, StateVector::basis(dim, k).amplitudes())
    }

    #[test]
    fn stationary_projector() {
        let grid = TimeGrid::new(0.0, 5.0, 500).unwrap();
        let h = random_hermitian(3, 1.0, 3);
        let m = HamiltonianModel::stationary(h, grid, Regime::Adiabatic).unwrap();
        let c0 = StateVector::basis(3, 1).amplitudes().clone();
        let traj = integrate_coefficients(&m, &c0, &grid).unwrap();
        let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD).unwrap();
        let want = ComplexMatrix::outer(traj.basis().states[1].amplitudes());
        for t in [0.0, 2.5, 5.0] {
            let snap = assemble_density(&traj, &ledger, t).unwrap();
            assert!(snap.rho.max_abs_diff(&want) < 1e-12);
            assert!((snap.purity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_density_matches_oracle_outer_product() {
        let grid = TimeGrid::new(0.0, 10.0, 4000).unwrap();
        let spec = TwoLevelSpec {
            delta: 1.0,
            w_mag: Waveform::ramp(0.0, 0.8),
            w_phase: Waveform::winding(),
        };
        let m = build_two_level(&spec, grid, SplitMode::Initial).unwrap();
        let c0 = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let traj = integrate_coefficients(&m, &c0, &grid).unwrap();
        let ledger = sub_geometric_phases(&traj, DEFAULT_THRESHOLD).unwrap();
        let psi0 = StateVector::new(traj.basis().unitary() * &c0).unwrap();
        let oracle = direct_schrodinger_solve(&m, &psi0, &grid).unwrap();
        let assembled = assemble_state(&traj, None).unwrap();
        for (j, t) in grid.times().enumerate().step_by(97) {
            let snap = assemble_density(&traj, &ledger, t).unwrap();
            assert!(
                snap.rho
                    .max_abs_diff(&ComplexMatrix::outer(&oracle.states[j]))
                    < 1e-8
            );
            assert!(
                snap.rho
                    .max_abs_diff(&ComplexMatrix::outer(&assembled.states[j]))
                    < 1e-10
            );
            assert!(snap.hermiticity_residual() < 1e-10);
            assert!((snap.trace() - 1.0).norm() < 1e-10);
            assert!(snap.idempotency_residual() < 1e-8);
        }
    }

    #[test]
    fn relative_matrix_definition() {
        let r = relative_from_gammas(&[0.3, 0.1], &[false, false]);
        assert!((r.get(0, 1) - 0.2).abs() < 1e-15);
        assert!((r.get(1, 0) + 0.2).abs() < 1e-15);
        assert_eq!(r.get(0, 0), 0.0);
        assert_eq!(r.antisymmetry_residual(), 0.0);
        let flagged = relative_from_gammas(&[0.3, 0.1, 0.0], &[false, true, false]);
        assert!(flagged.flagged[0][1] && flagged.flagged[1][2] && !flagged.flagged[0][2]);
    }

    #[test]
    fn mixtures() {
        let a = projector(2, 0);
        let spec = MixedStateSpec::new(vec![(1.0, "a".into())]).unwrap();
        assert_eq!(mix(&spec, std::slice::from_ref(&a)).unwrap(), a);

        let spec = MixedStateSpec::new(vec![(0.5, "a".into()), (0.5, "b".into())]).unwrap();
        let m = mix(&spec, &[a.clone(), projector(2, 1)]).unwrap();
        assert!(
            m.rho
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5]))
                < 1e-15
        );
        assert!((m.purity - 0.5).abs() < 1e-15);

        let psi = StateVector::normalized(CVector::from_vec(vec![
            C64::new(1.0, 0.5),
            C64::new(-0.3, 2.0),
        ]))
        .unwrap();
        let b = DensityMatrixSnapshot::pure(0.0, psi.amplitudes());
        let spec = MixedStateSpec::new(vec![(0.3, "a".into()), (0.7, "b".into())]).unwrap();
        let m = mix(&spec, &[a.clone(), b.clone()]).unwrap();
        assert!((m.trace() - 1.0).norm() < 1e-12);
        assert!(m.purity < 1.0);
        assert!(m.purity <= 0.3 * 0.3 + 0.7 * 0.7 + 2.0 * 0.3 * 0.7 + 1e-12);

        assert!(MixedStateSpec::new(vec![(0.3, "a".into()), (0.6, "b".into())]).is_err());
        assert!(MixedStateSpec::new(vec![(-0.5, "a".into()), (1.5, "b".into())]).is_err());
        let late = DensityMatrixSnapshot { t: 1.0, ..b };
        assert!(matches!(mix(&spec, &[a, late]), Err(Error::Shape(_))));
    }

    #[test]
    fn observables() {
        let h = random_hermitian(3, 1.0, 9);
        let es = crate::numerics::hermitian_eigensystem(&h).unwrap();
        for k in 0..3 {
            let snap = DensityMatrixSnapshot::pure(0.0, es.vectors[k].amplitudes());
            assert!((observable_average(&snap, &h).unwrap() - es.values[k]).abs() < 1e-12);
            assert!(
                (observable_average(&snap, &ComplexMatrix::identity(3)).unwrap() - 1.0).abs()
                    < 1e-12
            );
        }
        let snap = projector(2, 0);
        let bad = ComplexMatrix::from_fn(2, |i, j| C64::new(0.0, (i + 2 * j) as f64));
        assert!(observable_average(&snap, &bad).is_err());
        assert!(matches!(
            observable_average(&snap, &ComplexMatrix::identity(3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn sigma_x_sees_relative_phase() {
        let c = CVector::from_vec(vec![C64::from_polar(0.6, 0.4), C64::from_polar(0.8, -1.1)]);
        let snap = DensityMatrixSnapshot::pure(0.0, &c);
        let sx = ComplexMatrix::pauli_x();
        let want = 2.0 * 0.6 * 0.8 * (-1.1f64 - 0.4).cos();
        let direct = c.dotc(&sx.apply(&c)).re;
        let got = observable_average(&snap, &sx).unwrap();
        assert!((got - want).abs() < 1e-9 && (got - direct).abs() < 1e-9);
    }
}
