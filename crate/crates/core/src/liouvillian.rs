//! Vectorized Lindblad generators, steady states and time evolution.
//!
//! Density matrices are vectorized column-major, `vec(rho)[i + d*j] = rho[i][j]`,
//! so that `vec(A rho B) = (B^T kron A) vec(rho)`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Factorize, Solve, QR};

use crate::error::{Error, Result};
use crate::fme::FmeModel;
use crate::qops::{c, dagger, kron, max_abs, min_eigenvalue, DensityMatrix, HilbertSpec, C64, I};
use crate::sparse::{gmres, Csr, GmresOptions};

/// Hilbert-space dimensions up to this size keep a dense Liouvillian.
pub const DENSE_MAX_DIM: usize = 32;

/// Null-space threshold relative to `||L||_max`.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest `d^2` handled by the eigendecomposition steady-state path.
pub const EIGEN_MAX_SIZE: usize = 256;

/// Largest `d^2` handled by dense LU or dense eigendecomposition.
pub const DENSE_SOLVE_MAX_SIZE: usize = 4096;

/// Evolved states with an eigenvalue below this are rejected.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Storage {
    #[default]
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(Array2<C64>),
    Sparse(Csr<C64>),
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: HilbertSpec,
    repr: Repr,
    norm_max: f64,
}

pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    Array1::from_shape_fn(d * d, |k| rho[[k % d, k / d]])
}

pub fn unvectorize(v: &Array1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j])
}

/// `K = -iH - (1/2) sum_k J_k^dag J_k`, so that `L = I(x)K + conj(K)(x)I + sum conj(J)(x)J`.
fn effective_generator(model: &FmeModel) -> Array2<C64> {
    let mut k = model.hamiltonian().matrix() * (-I);
    for j in model.jumps() {
        let jj = dagger(j.matrix()).dot(j.matrix());
        k.scaled_add(c(-0.5), &jj);
    }
    k
}

fn nonzeros(m: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    m.indexed_iter()
        .filter(|(_, v)| **v != c(0.0))
        .map(|((i, j), v)| (i, j, *v))
        .collect()
}

fn build_dense(model: &FmeModel) -> Array2<C64> {
    let d = model.space().total_dim();
    let eye: Array2<C64> = Array2::eye(d);
    let k = effective_generator(model);
    let mut l = kron(&eye, &k) + kron(&k.mapv(|z| z.conj()), &eye);
    for j in model.jumps() {
        l = l + kron(&j.matrix().mapv(|z| z.conj()), j.matrix());
    }
    l
}

fn build_sparse(model: &FmeModel) -> Csr<C64> {
    let d = model.space().total_dim();
    let k_nz = nonzeros(&effective_generator(model));
    let jump_nz: Vec<_> = model.jumps().iter().map(|j| nonzeros(j.matrix())).collect();
    let cap = 2 * d * k_nz.len() + jump_nz.iter().map(|v| v.len() * v.len()).sum::<usize>();
    let mut trips = Vec::with_capacity(cap);
    for &(i, kk, v) in &k_nz {
        // I (x) K
        for j in 0..d {
            trips.push((i + d * j, kk + d * j, v));
        }
        // conj(K) (x) I: row block i, column block kk
        for a in 0..d {
            trips.push((a + d * i, a + d * kk, v.conj()));
        }
    }
    for nz in &jump_nz {
        for &(j, l, b) in nz {
            let bc = b.conj();
            for &(i, k, a) in nz {
                trips.push((i + d * j, k + d * l, bc * a));
            }
        }
    }
    Csr::from_triplets(d * d, d * d, trips)
}

impl Liouvillian {
    pub fn new(model: &FmeModel) -> Self {
        Self::with_storage(model, Storage::Auto)
    }

    pub fn with_storage(model: &FmeModel, storage: Storage) -> Self {
        let dense = match storage {
            Storage::Auto => model.space().total_dim() <= DENSE_MAX_DIM,
            Storage::Dense => true,
            Storage::Sparse => false,
        };
        let repr = if dense {
            Repr::Dense(build_dense(model))
        } else {
            Repr::Sparse(build_sparse(model))
        };
        let norm_max = match &repr {
            Repr::Dense(m) => max_abs(m),
            Repr::Sparse(m) => m.values().iter().fold(0.0f64, |acc, z| acc.max(z.norm())),
        };
        Self {
            space: model.space().clone(),
            repr,
            norm_max,
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Hilbert-space dimension `d`; the superoperator is `d^2 x d^2`.
    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    /// Largest absolute matrix entry.
    pub fn norm_max(&self) -> f64 {
        self.norm_max
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(m) => m.to_dense(),
        }
    }

    fn to_csr(&self) -> Csr<C64> {
        match &self.repr {
            Repr::Dense(m) => Csr::from_dense(m),
            Repr::Sparse(m) => m.clone(),
        }
    }

    pub fn matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        match &self.repr {
            Repr::Dense(m) => m.dot(v),
            Repr::Sparse(m) => m.matvec(v),
        }
    }

    /// `L(rho)` as a matrix.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        unvectorize(&self.matvec(&vectorize(rho)), self.dim())
    }

    /// `||L vec(rho)||_max`.
    pub fn residual(&self, rho: &Array2<C64>) -> f64 {
        max_abs(&self.apply(rho))
    }

    /// Residual bound `1e-9 max(1, ||L||_max)` used to accept a steady state.
    pub fn residual_tolerance(&self) -> f64 {
        DEGENERACY_TOL * self.norm_max.max(1.0)
    }

    fn null_threshold(&self) -> f64 {
        DEGENERACY_TOL * self.norm_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteadyStateMethod {
    /// Eigendecomposition for `d^2 <= 256`, dense LU up to 4096, GMRES above.
    #[default]
    Auto,
    Eigen,
    Direct,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub unique: bool,
    /// `||L vec(rho)||_max`.
    pub residual: f64,
    pub method: SteadyStateMethod,
}

impl SteadyState {
    pub fn converged(&self, l: &Liouvillian) -> bool {
        self.residual <= l.residual_tolerance()
    }
}

pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    steady_state_with(l, SteadyStateMethod::Auto)
}

pub fn steady_state_with(l: &Liouvillian, method: SteadyStateMethod) -> Result<SteadyState> {
    let d = l.dim();
    let size = d * d;
    if l.norm_max == 0.0 {
        return finish(l, Array2::eye(d), false, method);
    }
    let method = match method {
        SteadyStateMethod::Auto if size <= EIGEN_MAX_SIZE => SteadyStateMethod::Eigen,
        SteadyStateMethod::Auto if size <= DENSE_SOLVE_MAX_SIZE => SteadyStateMethod::Direct,
        SteadyStateMethod::Auto => SteadyStateMethod::Iterative,
        m => m,
    };
    match method {
        SteadyStateMethod::Eigen => {
            if size > DENSE_SOLVE_MAX_SIZE {
                return Err(Error::UnsupportedSize(format!(
                    "eigendecomposition of a {size}x{size} Liouvillian"
                )));
            }
            let (rho, unique) = eigen_null_state(l)?;
            finish(l, rho, unique, method)
        }
        SteadyStateMethod::Direct => {
            if size > DENSE_SOLVE_MAX_SIZE {
                return Err(Error::UnsupportedSize(format!(
                    "dense LU of a {size}x{size} system"
                )));
            }
            let (rho, unique) = direct_state(l)?;
            finish(l, rho, unique, method)
        }
        _ => {
            let rho = iterative_state(l)?;
            finish(l, rho, true, SteadyStateMethod::Iterative)
        }
    }
}

fn finish(
    l: &Liouvillian,
    mut rho: Array2<C64>,
    unique: bool,
    method: SteadyStateMethod,
) -> Result<SteadyState> {
    crate::qops::hermitize_normalize(&mut rho)?;
    let residual = l.residual(&rho);
    Ok(SteadyState {
        rho: DensityMatrix::from_raw(rho, l.space.clone())?,
        unique,
        residual,
        method,
    })
}

fn eigen_null_state(l: &Liouvillian) -> Result<(Array2<C64>, bool)> {
    let d = l.dim();
    let (vals, vecs) = l.to_dense().eig()?;
    let thr = l.null_threshold();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm()));
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| vals[i].norm() <= thr)
        .collect();
    if null.len() <= 1 {
        let v = vecs.column(order[0]).to_owned();
        return Ok((unvectorize(&v, d), true));
    }
    // minimum-norm trace-one element of the null space
    let mut basis = Array2::<C64>::zeros((d * d, null.len()));
    for (col, &i) in null.iter().enumerate() {
        basis.column_mut(col).assign(&vecs.column(i));
    }
    let (q, _) = basis.qr()?;
    let traces: Vec<C64> = (0..q.ncols())
        .map(|k| (0..d).map(|i| q[[i + d * i, k]]).sum())
        .collect();
    let total: f64 = traces.iter().map(|t| t.norm_sqr()).sum();
    if total < 1e-24 {
        return Err(Error::SolverFailure(
            "null space contains no trace-carrying state".into(),
        ));
    }
    let mut v = Array1::<C64>::zeros(d * d);
    for (k, t) in traces.iter().enumerate() {
        v.scaled_add(t.conj() / total, &q.column(k));
    }
    Ok((unvectorize(&v, d), false))
}

/// Coordinates of a Hermitian `d x d` matrix: diagonal, then `Re rho_ij`
/// and `Im rho_ij` for `i < j`.
struct HermitianParams {
    d: usize,
    n_pairs: usize,
    pair: Vec<usize>,
}

impl HermitianParams {
    fn new(d: usize) -> Self {
        let mut pair = vec![usize::MAX; d * d];
        let mut p = 0;
        for i in 0..d {
            for j in i + 1..d {
                pair[i * d + j] = p;
                p += 1;
            }
        }
        Self {
            d,
            n_pairs: p,
            pair,
        }
    }

    fn len(&self) -> usize {
        self.d * self.d
    }

    fn re(&self, i: usize, j: usize) -> usize {
        self.d + self.pair[i * self.d + j]
    }

    fn im(&self, i: usize, j: usize) -> usize {
        self.d + self.n_pairs + self.pair[i * self.d + j]
    }

    /// Real rows of `L` restricted to Hermitian inputs and outputs.
    fn real_rows(&self, l: &Csr<C64>) -> Vec<Vec<(usize, f64)>> {
        let d = self.d;
        let mut rows = vec![Vec::new(); self.len()];
        for j in 0..d {
            for i in 0..=j {
                let r = i + d * j;
                let mut re_row = Vec::new();
                let mut im_row = Vec::new();
                for (col, a) in l.row(r) {
                    let (k, m) = (col % d, col / d);
                    if k == m {
                        re_row.push((k, a.re));
                        im_row.push((k, a.im));
                    } else if k < m {
                        let (x, y) = (self.re(k, m), self.im(k, m));
                        re_row.push((x, a.re));
                        re_row.push((y, -a.im));
                        im_row.push((x, a.im));
                        im_row.push((y, a.re));
                    } else {
                        let (x, y) = (self.re(m, k), self.im(m, k));
                        re_row.push((x, a.re));
                        re_row.push((y, a.im));
                        im_row.push((x, a.im));
                        im_row.push((y, -a.re));
                    }
                }
                if i == j {
                    rows[i] = re_row;
                } else {
                    rows[self.re(i, j)] = re_row;
                    rows[self.im(i, j)] = im_row;
                }
            }
        }
        rows
    }

    /// Rows of the square system whose first (redundant) row is replaced by
    /// the trace functional.
    fn bordered_rows(&self, l: &Csr<C64>) -> Vec<Vec<(usize, f64)>> {
        let mut rows = self.real_rows(l);
        rows[0] = (0..self.d).map(|i| (i, 1.0)).collect();
        rows
    }

    fn to_matrix(&self, p: &Array1<f64>) -> Array2<C64> {
        let d = self.d;
        Array2::from_shape_fn((d, d), |(i, j)| match i.cmp(&j) {
            std::cmp::Ordering::Equal => c(p[i]),
            std::cmp::Ordering::Less => C64::new(p[self.re(i, j)], p[self.im(i, j)]),
            std::cmp::Ordering::Greater => C64::new(p[self.re(j, i)], -p[self.im(j, i)]),
        })
    }
}

fn dense_from_rows(rows: &[Vec<(usize, f64)>], n: usize) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((n, n));
    for (r, row) in rows.iter().enumerate() {
        for &(col, v) in row {
            a[[r, col]] += v;
        }
    }
    a
}

fn unit_rhs(n: usize) -> Array1<f64> {
    let mut b = Array1::zeros(n);
    b[0] = 1.0;
    b
}

/// Dense real LU on the trace-bordered Hermitian system; the smallest
/// singular value of the bordered matrix decides uniqueness.
fn direct_state(l: &Liouvillian) -> Result<(Array2<C64>, bool)> {
    let params = HermitianParams::new(l.dim());
    let n = params.len();
    let a = dense_from_rows(&params.bordered_rows(&l.to_csr()), n);
    let b = unit_rhs(n);
    let sigma_tol = DEGENERACY_TOL * l.norm_max.max(1.0);
    // a singular factorization falls through to the regularized solve
    if let Ok(lu) = a.factorize() {
        let mut x = lu.solve(&b)?;
        let r = &b - &a.dot(&x);
        x = x + lu.solve(&r)?;
        let sigma = smallest_singular_value(&lu, n)?;
        if sigma >= sigma_tol && x.iter().all(|v| v.is_finite()) {
            return Ok((params.to_matrix(&x), true));
        }
    }
    Ok((params.to_matrix(&regularized_solve(&a, &b)?), false))
}

/// Inverse iteration on `A^T A` through the LU factors.
fn smallest_singular_value<L: Solve<f64>>(lu: &L, n: usize) -> Result<f64> {
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    let mut growth = 0.0;
    for _ in 0..6 {
        let norm = v.dot(&v).sqrt();
        v /= norm;
        let w = lu.solve(&lu.solve_t(&v)?)?;
        growth = w.dot(&w).sqrt();
        v = w;
    }
    if !growth.is_finite() || growth == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / growth.sqrt())
}

/// Tikhonov-regularized least squares, approximating the minimum-norm
/// solution of a consistent singular system.
fn regularized_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let ata = a.t().dot(a);
    let scale = ata.diag().iter().fold(0.0f64, |m, v| m.max(*v));
    let mu = 1e-14 * scale.max(1.0);
    let mut reg = ata;
    for i in 0..reg.nrows() {
        reg[[i, i]] += mu;
    }
    Ok(reg.solve_into(a.t().dot(b))?)
}

fn iterative_state(l: &Liouvillian) -> Result<Array2<C64>> {
    let params = HermitianParams::new(l.dim());
    let n = params.len();
    let rows = params.bordered_rows(&l.to_csr());
    let trips = rows
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().map(move |&(col, v)| (r, col, v)))
        .collect();
    let a = Csr::from_triplets(n, n, trips);
    let x = gmres(&a, &unit_rhs(n), GmresOptions::default())?;
    Ok(params.to_matrix(&x))
}

fn check_times(t: f64, dt: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("step {dt} must be > 0")));
    }
    Ok(())
}

/// Classical fourth-order Runge-Kutta on `vec(rho)`, without any projection.
/// The final step is shortened to land exactly on `t`.
pub fn propagate(l: &Liouvillian, v0: &Array1<C64>, t: f64, dt: f64) -> Result<Array1<C64>> {
    check_times(t, dt)?;
    let mut v = v0.clone();
    let mut elapsed = 0.0;
    while elapsed < t {
        let h = dt.min(t - elapsed);
        if h <= t * 1e-15 {
            break;
        }
        let k1 = l.matvec(&v);
        let k2 = l.matvec(&(&v + &(&k1 * c(h / 2.0))));
        let k3 = l.matvec(&(&v + &(&k2 * c(h / 2.0))));
        let k4 = l.matvec(&(&v + &(&k3 * c(h))));
        v = v + (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
        elapsed += h;
    }
    Ok(v)
}

/// Integrates to time `t`, then Hermitizes, renormalizes and checks positivity.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t: f64, dt: f64) -> Result<DensityMatrix> {
    if rho0.space() != l.space() {
        return Err(Error::SpaceMismatch);
    }
    check_times(t, dt)?;
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let v = propagate(l, &vectorize(rho0.matrix()), t, dt)?;
    let mut rho = unvectorize(&v, l.dim());
    crate::qops::hermitize_normalize(&mut rho)?;
    let min_eigenvalue = min_eigenvalue(&rho)?;
    if min_eigenvalue < -POSITIVITY_TOL {
        return Err(Error::NegativeEigenvalue { min_eigenvalue });
    }
    DensityMatrix::from_raw(rho, l.space.clone())
}

/// `-max Re(lambda)` over eigenvalues outside the null threshold.
pub fn spectral_gap(l: &Liouvillian) -> Result<f64> {
    let size = l.dim() * l.dim();
    if size > DENSE_SOLVE_MAX_SIZE {
        return Err(Error::UnsupportedSize(format!(
            "spectral gap of a {size}x{size} Liouvillian"
        )));
    }
    if l.norm_max == 0.0 {
        return Ok(0.0);
    }
    let vals = l.to_dense().eigvals_only()?;
    let thr = l.null_threshold();
    let slowest = vals
        .iter()
        .filter(|z| z.norm() > thr)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if slowest == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((-slowest).max(0.0))
}

trait EigvalsOnly {
    fn eigvals_only(&self) -> Result<Array1<C64>>;
}

impl EigvalsOnly for Array2<C64> {
    fn eigvals_only(&self) -> Result<Array1<C64>> {
        use ndarray_linalg::EigVals;
        Ok(self.eigvals()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fme::{build_model, FmeSetup, SiteOperator};
    use crate::qops::{pauli, Operator};
    use ndarray::array;

    fn decay_model() -> FmeModel {
        let setup = FmeSetup::without_feedback(
            HilbertSpec::qubits(1).unwrap(),
            vec![SiteOperator::new(0, pauli::sigma_minus())],
            array![[c(1.0)]],
        )
        .unwrap();
        build_model(&setup).unwrap()
    }

    fn projector(level: usize) -> Array2<C64> {
        let mut m = Array2::zeros((2, 2));
        m[[level, level]] = c(1.0);
        m
    }

    #[test]
    fn empty_model_gives_zero_liouvillian() {
        let l = Liouvillian::new(&FmeModel::empty(&HilbertSpec::qubits(1).unwrap()));
        assert_eq!(l.norm_max(), 0.0);
        let ss = steady_state(&l).unwrap();
        assert!(!ss.unique);
        assert!(max_abs(&(ss.rho.matrix() - &(Array2::<C64>::eye(2) * c(0.5)))) < 1e-15);
        assert_eq!(spectral_gap(&l).unwrap(), 0.0);
    }

    #[test]
    fn amplitude_decay_generator() {
        let l = Liouvillian::new(&decay_model());
        let out = l.apply(&projector(1));
        assert!(max_abs(&(out - (projector(0) - projector(1)))) < 1e-15);
    }

    #[test]
    fn vectorization_is_column_major() {
        let m = array![[c(1.0), c(2.0)], [c(3.0), c(4.0)]];
        assert_eq!(vectorize(&m), array![c(1.0), c(3.0), c(2.0), c(4.0)]);
        assert_eq!(unvectorize(&vectorize(&m), 2), m);
    }

    #[test]
    fn decay_steady_state_is_ground_state() {
        let l = Liouvillian::new(&decay_model());
        for method in [
            SteadyStateMethod::Eigen,
            SteadyStateMethod::Direct,
            SteadyStateMethod::Iterative,
        ] {
            let ss = steady_state_with(&l, method).unwrap();
            assert!(ss.unique, "{method:?}");
            assert!(
                max_abs(&(ss.rho.matrix() - &projector(0))) < 1e-12,
                "{method:?}"
            );
        }
    }

    #[test]
    fn degenerate_null_space_is_flagged() {
        // pure dephasing keeps every diagonal state stationary
        let space = HilbertSpec::qubits(1).unwrap();
        let z = Operator::new(pauli::sigma_z(), space.clone()).unwrap();
        let model = FmeModel::new(Operator::zeros(&space), vec![z]).unwrap();
        let l = Liouvillian::new(&model);
        for method in [SteadyStateMethod::Eigen, SteadyStateMethod::Direct] {
            let ss = steady_state_with(&l, method).unwrap();
            assert!(!ss.unique, "{method:?}");
            assert!(ss.converged(&l));
            assert!((ss.rho.matrix().diag().sum() - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn decay_evolution_matches_exponential() {
        let l = Liouvillian::new(&decay_model());
        let rho0 = DensityMatrix::basis_state(&[1], l.space()).unwrap();
        let rho = evolve(&rho0, &l, 1.0, 1e-3).unwrap();
        assert!((rho.matrix()[[1, 1]].re - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(evolve(&rho0, &l, 0.0, 0.1).unwrap(), rho0);
    }

    #[test]
    fn evolve_rejects_bad_times() {
        let l = Liouvillian::new(&decay_model());
        let rho0 = DensityMatrix::basis_state(&[1], l.space()).unwrap();
        assert!(evolve(&rho0, &l, -1.0, 0.1).is_err());
        assert!(evolve(&rho0, &l, 1.0, 0.0).is_err());
    }

    #[test]
    fn evolve_flags_too_large_steps() {
        let l = Liouvillian::new(&decay_model());
        let rho0 = DensityMatrix::basis_state(&[1], l.space()).unwrap();
        // RK4 with h = 3 amplifies the decaying mode; the state goes negative
        assert!(matches!(
            evolve(&rho0, &l, 30.0, 3.0),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn decay_gap_is_one_half() {
        let l = Liouvillian::new(&decay_model());
        assert!((spectral_gap(&l).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dense_and_sparse_builders_agree() {
        let model = decay_model();
        let a = Liouvillian::with_storage(&model, Storage::Dense).to_dense();
        let b = Liouvillian::with_storage(&model, Storage::Sparse).to_dense();
        assert!(max_abs(&(a - b)) < 1e-15);
    }
}
