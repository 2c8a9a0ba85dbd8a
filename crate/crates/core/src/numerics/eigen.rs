//! Dense Hermitian eigendecomposition with a deterministic eigenvector gauge.

use nalgebra::linalg::SymmetricEigen;

use super::matrix::{CVector, ComplexMatrix, StateVector, C64};
use crate::error::{Error, Result};

/// Eigenvalues within this fraction of `maxnorm` form a degenerate cluster.
pub const DEGENERACY_RTOL: f64 = 1e-9;

const RESIDUAL_RTOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal; entry `i` belongs to `values[i]`.
    pub vectors: Vec<StateVector>,
    /// Index groups of (numerically) equal eigenvalues, only groups of two or more.
    pub degenerate_clusters: Vec<Vec<usize>>,
}

impl EigenSystem {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_clusters.is_empty()
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn unitary(&self) -> nalgebra::DMatrix<C64> {
        let cols: Vec<CVector> = self
            .vectors
            .iter()
            .map(|v| v.amplitudes().clone())
            .collect();
        nalgebra::DMatrix::from_columns(&cols)
    }
}

/// Rotates `v` so that its largest-magnitude entry (first one on ties) is real and positive.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    if best_mag > 0.0 {
        let rot = v[best].conj() / best_mag;
        *v *= rot;
        v[best] = C64::new(v[best].re, 0.0);
    }
}

pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<EigenSystem> {
    m.ensure_hermitian("eigenproblem input")?;
    let scale = m.max_norm();
    let dim = m.dim();
    let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, MAX_SWEEPS).ok_or_else(
        || {
            Error::numeric(
                format!("Hermitian eigensolver did not converge on a {dim}x{dim} matrix"),
                None,
            )
        },
    )?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim);
    for &i in &order {
        let lambda = eig.eigenvalues[i];
        let mut v: CVector = eig.eigenvectors.column(i).into_owned();
        v.unscale_mut(v.norm());
        fix_phase(&mut v);
        let residual = (m.apply(&v) - &v * C64::new(lambda, 0.0)).norm();
        if residual > RESIDUAL_RTOL * scale.max(f64::MIN_POSITIVE) && residual > 1e-300 {
            return Err(Error::numeric(
                format!("eigenpair residual {residual:.3e} on a {dim}x{dim} matrix"),
                None,
            ));
        }
        values.push(lambda);
        vectors.push(StateVector::new_unchecked(v));
    }

    Ok(EigenSystem {
        degenerate_clusters: clusters(&values, DEGENERACY_RTOL * scale),
        values,
        vectors,
    })
}

fn clusters(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0];
    for i in 1..values.len() {
        if values[i] - values[i - 1] <= tol {
            current.push(i);
        } else {
            if current.len() > 1 {
                out.push(std::mem::take(&mut current));
            }
            current = vec![i];
        }
    }
    if current.len() > 1 {
        out.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::numerics::matrix::random_hermitian;

    fn residual_ok(m: &ComplexMatrix, es: &EigenSystem) {
        let scale = m.max_norm();
        for (lambda, v) in es.values.iter().zip(&es.vectors) {
            let r = (m.apply(v.amplitudes()) - v.amplitudes() * C64::new(*lambda, 0.0)).norm();
            assert!(r <= 1e-10 * scale, "residual {r}");
        }
        for (i, a) in es.vectors.iter().enumerate() {
            for (j, b) in es.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b.amplitudes()) - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let es = hermitian_eigensystem(&m).unwrap();
        assert_eq!(es.values, vec![-1.0, 1.0]);
        assert_eq!(es.vectors[0], StateVector::basis(2, 1));
        assert_eq!(es.vectors[1], StateVector::basis(2, 0));
    }

    #[test]
    fn pauli_x() {
        let es = hermitian_eigensystem(&ComplexMatrix::pauli_x()).unwrap();
        assert!((es.values[0] + 1.0).abs() < 1e-14 && (es.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = es.vectors[0].amplitudes();
        let v1 = es.vectors[1].amplitudes();
        // largest entry made real-positive; ties go to the first entry
        assert!((v0[0] - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((v0[1] - C64::new(-s, 0.0)).norm() < 1e-12);
        assert!((v1[0] - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((v1[1] - C64::new(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn seeded_random_four_level() {
        let m = random_hermitian(4, 1.0, 7);
        let es = hermitian_eigensystem(&m).unwrap();
        residual_ok(&m, &es);
        assert!(!es.is_degenerate());
    }

    #[test]
    fn degenerate_cluster_reported() {
        let m = ComplexMatrix::from_real_diagonal(&[2.0, 0.5, 2.0]);
        let es = hermitian_eigensystem(&m).unwrap();
        assert_eq!(es.degenerate_clusters, vec![vec![1, 2]]);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            hermitian_eigensystem(&m),
            Err(Error::Convention(_))
        ));
    }

    #[test]
    fn phase_fixing_is_deterministic() {
        let m = random_hermitian(5, 2.0, 99);
        let a = hermitian_eigensystem(&m).unwrap();
        let b = hermitian_eigensystem(&m).unwrap();
        assert_eq!(a.vectors, b.vectors);
        for v in &a.vectors {
            let amps = v.amplitudes();
            let (k, _) = amps.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
                if z.norm() > acc.1 {
                    (i, z.norm())
                } else {
                    acc
                }
            });
            assert_eq!(amps[k].im, 0.0);
            assert!(amps[k].re > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn residual_bound_holds(dim in 1usize..9, seed in any::<u64>(), scale in 0.01f64..50.0) {
            let m = random_hermitian(dim, scale, seed);
            let es = hermitian_eigensystem(&m).unwrap();
            residual_ok(&m, &es);
        }
    }
}
