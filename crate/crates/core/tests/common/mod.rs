#![allow(dead_code)]

use fme_core::fme::FmeModel;
use fme_core::qops::{DensityMatrix, HilbertSpec, Operator, C64};
use ndarray::{Array1, Array2};
use ndarray_linalg::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * scale
    })
}

pub fn real_gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |_| rng.sample(StandardNormal))
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array2<C64> {
    let g = gaussian_matrix(rng, n, scale);
    (&g + &dagger(&g)) * c(0.5)
}

pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let (q, _) = gaussian_matrix(rng, n, 1.0).qr().unwrap();
    q
}

pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let (q, _) = real_gaussian_matrix(rng, n).qr().unwrap();
    q
}

pub fn random_state(rng: &mut ChaCha8Rng, space: &HilbertSpec) -> DensityMatrix {
    let d = space.total_dim();
    let g = gaussian_matrix(rng, d, 1.0);
    let m = g.dot(&dagger(&g));
    let tr = m.diag().sum();
    let m = m / tr;
    let m = (&m + &dagger(&m)) * c(0.5);
    DensityMatrix::new(m, space.clone()).unwrap()
}

pub fn random_pure(rng: &mut ChaCha8Rng, space: &HilbertSpec) -> DensityMatrix {
    let d = space.total_dim();
    let psi = Array1::from_shape_fn(d, |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    DensityMatrix::pure(&psi, space).unwrap()
}

/// Random Hamiltonian plus `n_jumps` random jump operators.
pub fn random_model(rng: &mut ChaCha8Rng, space: &HilbertSpec, n_jumps: usize) -> FmeModel {
    let d = space.total_dim();
    let h = Operator::new(hermitian(rng, d, 0.5), space.clone()).unwrap();
    let jumps = (0..n_jumps)
        .map(|_| Operator::new(gaussian_matrix(rng, d, 0.4), space.clone()).unwrap())
        .collect();
    FmeModel::new(h, jumps).unwrap()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Plain Kronecker product, written independently of the library.
pub fn kron2(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, m) = (a.nrows(), b.nrows());
    Array2::from_shape_fn((n * m, n * m), |(r, col)| {
        a[[r / m, col / m]] * b[[r % m, col % m]]
    })
}

/// `op` on `site` of `n` qubits.
pub fn qubit_op(op: &Array2<C64>, site: usize, n: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::eye(1);
    for s in 0..n {
        let f = if s == site {
            op.clone()
        } else {
            Array2::eye(2)
        };
        out = kron2(&out, &f);
    }
    out
}

pub fn sx() -> Array2<C64> {
    ndarray::array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
}

pub fn sz() -> Array2<C64> {
    ndarray::array![[c(-1.0), c(0.0)], [c(0.0), c(1.0)]]
}

pub fn sm() -> Array2<C64> {
    ndarray::array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]]
}

pub fn sp() -> Array2<C64> {
    ndarray::array![[c(0.0), c(0.0)], [c(1.0), c(0.0)]]
}

/// Matrix of `rho -> -i[H, rho] + sum D[J] rho` evaluated column by column.
pub fn direct_generator(model: &FmeModel, rho: &Array2<C64>) -> Array2<C64> {
    let h = model.hamiltonian().matrix();
    let i = C64::new(0.0, 1.0);
    let mut out = (h.dot(rho) - rho.dot(h)) * (-i);
    for j in model.jumps() {
        let j = j.matrix();
        let jd = dagger(j);
        let jj = jd.dot(j);
        out = out + j.dot(rho).dot(&jd) - (jj.dot(rho) + rho.dot(&jj)) * c(0.5);
    }
    out
}

/// Smallest trace-norm distance helper: half the sum of |eigenvalues|.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    use ndarray_linalg::{Eigh, UPLO};
    let diff = a - b;
    let h = (&diff + &dagger(&diff)) * c(0.5);
    let (vals, _) = h.eigh(UPLO::Lower).unwrap();
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic shift permutation `|s_0 ... s_{n-1}> -> |s_{n-1} s_0 ... s_{n-2}>`.
pub fn cyclic_shift(n: usize) -> Array2<C64> {
    let d = 1usize << n;
    let mut p = Array2::zeros((d, d));
    for idx in 0..d {
        let bits: Vec<usize> = (0..n).map(|s| (idx >> (n - 1 - s)) & 1).collect();
        let mut out = 0;
        for s in 0..n {
            let b = bits[(s + n - 1) % n];
            out |= b << (n - 1 - s);
        }
        p[[out, idx]] = c(1.0);
    }
    p
}
