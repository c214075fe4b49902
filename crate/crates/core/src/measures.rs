//! Purity, concurrence, logarithmic negativity and spin-up density.

use std::collections::BTreeSet;

use ndarray::Array2;
use ndarray_linalg::SVD;

use crate::error::{Error, Result};
use crate::qops::{
    embed_local, hermitian_eigen, kron, partial_transpose_matrix, pauli, trace_product,
    DensityMatrix, C64,
};

/// Singular values below this are left out of trace norms.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// A split of the sites into `part_x` and its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    part_x: Vec<usize>,
    part_y: Vec<usize>,
}

impl Bipartition {
    pub fn new(part_x: &[usize], n_sites: usize) -> Result<Self> {
        let x: BTreeSet<usize> = part_x.iter().copied().collect();
        if x.is_empty() {
            return Err(Error::EmptySiteSet);
        }
        if let Some(&s) = x.iter().find(|&&s| s >= n_sites) {
            return Err(Error::SiteOutOfRange { site: s, n_sites });
        }
        if x.len() == n_sites {
            return Err(Error::InvalidParameter(
                "bipartition must leave the complement nonempty".into(),
            ));
        }
        let part_y = (0..n_sites).filter(|s| !x.contains(s)).collect();
        Ok(Self {
            part_x: x.into_iter().collect(),
            part_y,
        })
    }

    /// Even-indexed sites against odd-indexed sites.
    pub fn odd_even(n_sites: usize) -> Result<Self> {
        let even: Vec<usize> = (0..n_sites).step_by(2).collect();
        Self::new(&even, n_sites)
    }

    pub fn part_x(&self) -> &[usize] {
        &self.part_x
    }

    pub fn part_y(&self) -> &[usize] {
        &self.part_y
    }

    pub fn swapped(&self) -> Self {
        Self {
            part_x: self.part_y.clone(),
            part_y: self.part_x.clone(),
        }
    }
}

/// `tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    trace_product(rho.matrix(), rho.matrix()).re
}

/// Two-qubit concurrence `max(0, l1 - l2 - l3 - l4)`.
///
/// The `l_j` are the square roots of the eigenvalues of
/// `rho (Y x Y) rho^* (Y x Y)`, obtained as the singular values of
/// `sqrt(rho) (Y x Y) sqrt(rho)^*`. Eigenvalues of `rho` at round-off level
/// are set to zero first, so near-pure states do not pick up `sqrt(1e-16)` noise.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.space().dims() != [2, 2] {
        return Err(Error::InvalidParameter(format!(
            "concurrence needs two qubits, got dimensions {:?}",
            rho.space().dims()
        )));
    }
    let (vals, vecs) = hermitian_eigen(rho.matrix())?;
    let top = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = 4.0 * f64::EPSILON * top;
    let mut root = Array2::<C64>::zeros((4, 4));
    for (k, &p) in vals.iter().enumerate() {
        if p > floor {
            let v = vecs.column(k);
            for i in 0..4 {
                for j in 0..4 {
                    root[[i, j]] += v[i] * v[j].conj() * p.sqrt();
                }
            }
        }
    }
    let yy = kron(&pauli::sigma_y(), &pauli::sigma_y());
    let m = root.dot(&yy).dot(&root.mapv(|z| z.conj()));
    let (_, s, _) = m.svd(false, false)?;
    let mut lambdas: Vec<f64> = s.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Sum of singular values, dropping those below [`SINGULAR_FLOOR`].
pub fn trace_norm(m: &Array2<C64>) -> Result<f64> {
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.iter().filter(|&&v| v >= SINGULAR_FLOOR).sum())
}

/// `log2 ||rho^{T_X}||_1`.
pub fn log_negativity(rho: &DensityMatrix, bp: &Bipartition) -> Result<f64> {
    let n_sites = rho.space().n_sites();
    if bp.part_x.len() + bp.part_y.len() != n_sites
        || bp.part_x.iter().chain(&bp.part_y).any(|&s| s >= n_sites)
    {
        return Err(Error::InvalidParameter(format!(
            "bipartition does not cover the {n_sites} sites of the state"
        )));
    }
    let pt = partial_transpose_matrix(rho.matrix(), rho.space(), &bp.part_x)?;
    Ok(trace_norm(&pt)?.log2().max(0.0))
}

/// `(1/N) sum_j (1 + <sigma_z^j>)/2`.
pub fn spin_up_density(rho: &DensityMatrix) -> Result<f64> {
    let space = rho.space();
    if !space.is_qubits() {
        return Err(Error::InvalidParameter(
            "spin-up density needs qubit sites".into(),
        ));
    }
    let n = space.n_sites();
    let mut total = 0.0;
    for j in 0..n {
        let z = embed_local(&pauli::sigma_z(), j, space)?;
        total += 0.5 * (1.0 + trace_product(rho.matrix(), z.matrix()).re);
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{c, HilbertSpec};
    use ndarray::{array, Array1};

    fn two_qubits() -> HilbertSpec {
        HilbertSpec::qubits(2).unwrap()
    }

    fn dark_state(z: f64) -> DensityMatrix {
        let psi = array![c(1.0), c(0.0), c(0.0), c(-z)];
        DensityMatrix::pure(&psi, &two_qubits()).unwrap()
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&dark_state(0.4)) - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(&HilbertSpec::qubits(3).unwrap());
        assert!((purity(&mixed) - 0.125).abs() < 1e-15);
        let d = DensityMatrix::new(
            array![[c(0.75), c(0.0)], [c(0.0), c(0.25)]],
            HilbertSpec::qubits(1).unwrap(),
        )
        .unwrap();
        assert!((purity(&d) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&dark_state(1.0)).unwrap() - 1.0).abs() < 1e-12);
        let product = DensityMatrix::basis_state(&[0, 1], &two_qubits()).unwrap();
        assert!(concurrence(&product).unwrap().abs() < 1e-12);
        for z in [0.1, 0.3, 0.7] {
            let expected = 2.0 * z / (1.0 + z * z);
            assert!((concurrence(&dark_state(z)).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn concurrence_rejects_other_spaces() {
        let rho = DensityMatrix::maximally_mixed(&HilbertSpec::qubits(3).unwrap());
        assert!(concurrence(&rho).is_err());
    }

    #[test]
    fn log_negativity_examples() {
        let bp = Bipartition::new(&[0], 2).unwrap();
        let product = DensityMatrix::basis_state(&[1, 0], &two_qubits()).unwrap();
        assert!(log_negativity(&product, &bp).unwrap().abs() < 1e-12);
        assert!((log_negativity(&dark_state(1.0), &bp).unwrap() - 1.0).abs() < 1e-12);
        for z in [0.2f64, 0.5, 0.9] {
            let expected = (1.0 + 2.0 * z / (1.0 + z * z)).log2();
            assert!((log_negativity(&dark_state(z), &bp).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bipartition_validation() {
        assert!(matches!(Bipartition::new(&[], 3), Err(Error::EmptySiteSet)));
        assert!(Bipartition::new(&[0, 1, 2], 3).is_err());
        assert!(Bipartition::new(&[5], 3).is_err());
        let bp = Bipartition::odd_even(5).unwrap();
        assert_eq!(bp.part_x(), &[0, 2, 4]);
        assert_eq!(bp.part_y(), &[1, 3]);
    }

    #[test]
    fn spin_up_density_examples() {
        let space = HilbertSpec::qubits(3).unwrap();
        let down = DensityMatrix::basis_state(&[0, 0, 0], &space).unwrap();
        let up = DensityMatrix::basis_state(&[1, 1, 1], &space).unwrap();
        assert!(spin_up_density(&down).unwrap().abs() < 1e-15);
        assert!((spin_up_density(&up).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(&space);
        assert!((spin_up_density(&mixed).unwrap() - 0.5).abs() < 1e-15);
        let psi: Array1<C64> = array![
            c(1.0),
            c(0.0),
            c(0.0),
            c(1.0),
            c(0.0),
            c(0.0),
            c(0.0),
            c(0.0)
        ];
        let one_third = DensityMatrix::pure(&psi, &space).unwrap();
        // (|000> + |011>)/sqrt2: sites 1 and 2 are up with probability 1/2
        assert!((spin_up_density(&one_third).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
