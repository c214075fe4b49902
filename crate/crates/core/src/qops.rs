//! Complex operator algebra on tensor-product Hilbert spaces.
//!
//! Site 0 is the leftmost tensor factor everywhere in this crate, so a basis
//! index `i` decomposes as `i = i_0 * (d_1 d_2 ...) + i_1 * (d_2 ...) + ...`.
//! Qubit basis states are `|0>` (lower) and `|1>` (upper), with
//! `sigma_minus |1> = |0>` and `sigma_z |0> = -|0>`.

use std::ops::{Add, Mul, Sub};

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, FactorizeInto, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest full-space dimension held as a dense operator.
pub const MAX_DENSE_DIM: usize = 4096;

/// Absolute tolerance for Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Local dimensions of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    dims: Vec<usize>,
    total_dim: usize,
}

impl HilbertSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no sites".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("local dimension {d} < 2")));
        }
        let total_dim = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= MAX_DENSE_DIM)
            .ok_or_else(|| {
                Error::UnsupportedSize(format!(
                    "total dimension of {dims:?} exceeds {MAX_DENSE_DIM}"
                ))
            })?;
        Ok(Self { dims, total_dim })
    }

    /// `n` qubit sites.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn is_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.dims.len() {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Row-major strides of the multi-index (site 0 has the largest stride).
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Basis index of a product state given per-site levels.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} levels for {} sites",
                levels.len(),
                self.dims.len()
            )));
        }
        let strides = self.strides();
        let mut idx = 0;
        for (k, (&l, &d)) in levels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(Error::DimensionMismatch(format!(
                    "level {l} on site {k} with dimension {d}"
                )));
            }
            idx += l * strides[k];
        }
        Ok(idx)
    }
}

/// Square complex matrix acting on a [`HilbertSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: Array2<C64>,
    space: HilbertSpec,
}

impl Operator {
    pub fn new(matrix: Array2<C64>, space: HilbertSpec) -> Result<Self> {
        let n = space.total_dim();
        if matrix.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "matrix {:?} on a space of dimension {n}",
                matrix.dim()
            )));
        }
        Ok(Self { matrix, space })
    }

    pub fn zeros(space: &HilbertSpec) -> Self {
        let n = space.total_dim();
        Self {
            matrix: Array2::zeros((n, n)),
            space: space.clone(),
        }
    }

    pub fn identity(space: &HilbertSpec) -> Self {
        let n = space.total_dim();
        Self {
            matrix: Array2::eye(n),
            space: space.clone(),
        }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: dagger(&self.matrix),
            space: self.space.clone(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            space: self.space.clone(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        (self * other)? - (other * self)?
    }

    fn same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Result<Operator>;

    fn mul(self, rhs: &'a Operator) -> Result<Operator> {
        self.same_space(rhs)?;
        Ok(Operator {
            matrix: self.matrix.dot(&rhs.matrix),
            space: self.space.clone(),
        })
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Result<Operator>;

    fn add(self, rhs: &'a Operator) -> Result<Operator> {
        self.same_space(rhs)?;
        Ok(Operator {
            matrix: &self.matrix + &rhs.matrix,
            space: self.space.clone(),
        })
    }
}

impl Add for Operator {
    type Output = Result<Operator>;

    fn add(self, rhs: Operator) -> Result<Operator> {
        &self + &rhs
    }
}

impl Sub for Operator {
    type Output = Result<Operator>;

    fn sub(self, rhs: Operator) -> Result<Operator> {
        self.same_space(&rhs)?;
        Ok(Operator {
            matrix: self.matrix - rhs.matrix,
            space: self.space,
        })
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<C64>,
    space: HilbertSpec,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at [`STATE_TOL`].
    pub fn new(matrix: Array2<C64>, space: HilbertSpec) -> Result<Self> {
        let op = Operator::new(matrix, space)?;
        let herm = op.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - c(1.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = min_eigenvalue(&op.matrix)?;
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            matrix: op.matrix,
            space: op.space,
        })
    }

    /// Hermitizes and trace-normalizes without validating positivity.
    pub(crate) fn from_raw(mut matrix: Array2<C64>, space: HilbertSpec) -> Result<Self> {
        hermitize_normalize(&mut matrix)?;
        Ok(Self { matrix, space })
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &Array1<C64>, space: &HilbertSpec) -> Result<Self> {
        if psi.len() != space.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state vector of length {} on a space of dimension {}",
                psi.len(),
                space.total_dim()
            )));
        }
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        let matrix = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / norm_sq);
        Ok(Self {
            matrix,
            space: space.clone(),
        })
    }

    /// Product basis state `|l_0 l_1 ...>`.
    pub fn basis_state(levels: &[usize], space: &HilbertSpec) -> Result<Self> {
        let idx = space.basis_index(levels)?;
        let n = space.total_dim();
        let mut matrix = Array2::zeros((n, n));
        matrix[[idx, idx]] = c(1.0);
        Ok(Self {
            matrix,
            space: space.clone(),
        })
    }

    pub fn maximally_mixed(space: &HilbertSpec) -> Self {
        let n = space.total_dim();
        Self {
            matrix: Array2::eye(n) / c(n as f64),
            space: space.clone(),
        }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn as_operator(&self) -> Operator {
        Operator {
            matrix: self.matrix.clone(),
            space: self.space.clone(),
        }
    }

    /// `<psi|rho|psi>` for a normalized `psi`.
    pub fn fidelity_pure(&self, psi: &Array1<C64>) -> f64 {
        let rho_psi = self.matrix.dot(psi);
        psi.iter()
            .zip(rho_psi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(trace_product(&self.matrix, op.matrix()))
    }

    /// `W rho W^dag`; `W` must be unitary for the result to stay a state.
    pub fn conjugate_by(&self, w: &Array2<C64>) -> Result<Self> {
        let out = w.dot(&self.matrix).dot(&dagger(w));
        Self::from_raw(out, self.space.clone())
    }
}

/// Named single-qubit operators.
pub mod pauli {
    use super::*;

    pub fn identity() -> Array2<C64> {
        Array2::eye(2)
    }

    /// `|0><1|`.
    pub fn sigma_minus() -> Array2<C64> {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = c(1.0);
        m
    }

    /// `|1><0|`.
    pub fn sigma_plus() -> Array2<C64> {
        let mut m = Array2::zeros((2, 2));
        m[[1, 0]] = c(1.0);
        m
    }

    pub fn sigma_x() -> Array2<C64> {
        sigma_plus() + sigma_minus()
    }

    /// `-i (sigma_plus - sigma_minus)`.
    pub fn sigma_y() -> Array2<C64> {
        (sigma_plus() - sigma_minus()) * (-I)
    }

    /// `|1><1| - |0><0|`.
    pub fn sigma_z() -> Array2<C64> {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = c(-1.0);
        m[[1, 1]] = c(1.0);
        m
    }
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&b.mapv(|z| z * aij));
        }
    }
    out
}

/// `I x ... x op x ... x I` with `op` on `site`.
pub fn embed_local(op: &Array2<C64>, site: usize, space: &HilbertSpec) -> Result<Operator> {
    space.check_site(site)?;
    let d = space.dims()[site];
    if op.dim() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "local operator {:?} on site {site} of dimension {d}",
            op.dim()
        )));
    }
    let left: usize = space.dims()[..site].iter().product();
    let right: usize = space.dims()[site + 1..].iter().product();
    let n = space.total_dim();
    let mut m = Array2::zeros((n, n));
    // block structure: I_left x op x I_right
    for l in 0..left {
        for a in 0..d {
            for b in 0..d {
                let v = op[[a, b]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let row0 = (l * d + a) * right;
                let col0 = (l * d + b) * right;
                for r in 0..right {
                    m[[row0 + r, col0 + r]] = v;
                }
            }
        }
    }
    Operator::new(m, space.clone())
}

/// Reduced state on `keep` (sites are returned in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    let space = rho.space();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &s in &kept {
        space.check_site(s)?;
    }
    let traced: Vec<usize> = (0..space.n_sites()).filter(|s| !kept.contains(s)).collect();
    let strides = space.strides();
    let dims = space.dims();

    let kept_dims: Vec<usize> = kept.iter().map(|&s| dims[s]).collect();
    let out_space = HilbertSpec::new(kept_dims.clone())?;
    let nk = out_space.total_dim();
    let nt: usize = traced.iter().map(|&s| dims[s]).product();

    let offsets = |sites: &[usize], count: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(count);
        for mut idx in 0..count {
            let mut off = 0;
            for &s in sites.iter().rev() {
                off += (idx % dims[s]) * strides[s];
                idx /= dims[s];
            }
            out.push(off);
        }
        out
    };
    let kept_off = offsets(&kept, nk);
    let traced_off = offsets(&traced, nt);

    let m = rho.matrix();
    let mut out = Array2::zeros((nk, nk));
    for (i, &ri) in kept_off.iter().enumerate() {
        for (j, &cj) in kept_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += m[[ri + t, cj + t]];
            }
            out[[i, j]] = acc;
        }
    }
    DensityMatrix::from_raw(out, out_space)
}

/// Exchanges the row and column indices of `sites`.
pub fn partial_transpose_matrix(
    m: &Array2<C64>,
    space: &HilbertSpec,
    sites: &[usize],
) -> Result<Array2<C64>> {
    for &s in sites {
        space.check_site(s)?;
    }
    let n = space.total_dim();
    if m.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix {:?} on a space of dimension {n}",
            m.dim()
        )));
    }
    let strides = space.strides();
    let dims = space.dims();
    let mut sites: Vec<usize> = sites.to_vec();
    sites.sort_unstable();
    sites.dedup();
    let mut out = Array2::zeros((n, n));
    for r in 0..n {
        for col in 0..n {
            let (mut r2, mut c2) = (r, col);
            for &s in &sites {
                let dr = (r / strides[s]) % dims[s];
                let dc = (col / strides[s]) % dims[s];
                r2 = r2 - dr * strides[s] + dc * strides[s];
                c2 = c2 - dc * strides[s] + dr * strides[s];
            }
            out[[r2, c2]] = m[[r, col]];
        }
    }
    Ok(out)
}

pub fn partial_transpose(rho: &DensityMatrix, sites: &[usize]) -> Result<Operator> {
    let m = partial_transpose_matrix(rho.matrix(), rho.space(), sites)?;
    Operator::new(m, rho.space().clone())
}

/// Ascending eigenvalues and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let h = (m + &dagger(m)) * c(0.5);
    Ok(h.eigh(UPLO::Lower)?)
}

pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Result<Array1<f64>> {
    Ok(hermitian_eigen(m)?.0)
}

pub fn min_eigenvalue(m: &Array2<C64>) -> Result<f64> {
    let ev = hermitian_eigenvalues(m)?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `(1/2) ||a - b||_1` for Hermitian `a`, `b`.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> Result<f64> {
    let ev = hermitian_eigenvalues(&(a - b))?;
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

pub(crate) fn hermitize_normalize(m: &mut Array2<C64>) -> Result<()> {
    let h = (&*m + &dagger(m)) * c(0.5);
    let tr = h.diag().sum().re;
    if !tr.is_finite() || tr.abs() < 1e-300 {
        return Err(Error::InvalidState(format!("cannot normalize trace {tr}")));
    }
    *m = h / c(tr);
    Ok(())
}

const PADE_THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
        ],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        _ => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
    }
}

fn one_norm(m: &Array2<C64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé kernel.
pub fn matrix_exp(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix_exp of non-square {:?}",
            a.dim()
        )));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = one_norm(a);
    let ident: Array2<C64> = Array2::eye(n);
    if norm == 0.0 {
        return Ok(ident);
    }

    for &(m, theta) in &PADE_THETA {
        if norm <= theta {
            return pade_small(a, m, &ident);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = a / c(2f64.powi(squarings as i32));
    let mut r = pade13(&scaled, &ident)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

fn pade_small(a: &Array2<C64>, m: usize, ident: &Array2<C64>) -> Result<Array2<C64>> {
    let b = pade_coefficients(m);
    let a2 = a.dot(a);
    // powers A^0, A^2, A^4, ...
    let mut even_powers = vec![ident.clone(), a2.clone()];
    while even_powers.len() <= m / 2 {
        let next = even_powers.last().unwrap().dot(&a2);
        even_powers.push(next);
    }
    let mut u_inner: Array2<C64> = Array2::zeros(a.dim());
    let mut v: Array2<C64> = Array2::zeros(a.dim());
    for k in 0..=m / 2 {
        u_inner = u_inner + &even_powers[k] * c(b[2 * k + 1]);
        v = v + &even_powers[k] * c(b[2 * k]);
    }
    let u = a.dot(&u_inner);
    solve_pade(&u, &v)
}

fn pade13(a: &Array2<C64>, ident: &Array2<C64>) -> Result<Array2<C64>> {
    let b = pade_coefficients(13);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_tail = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let u_inner = a6.dot(&u_tail) + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + ident * c(b[1]);
    let u = a.dot(&u_inner);
    let v_tail = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = a6.dot(&v_tail) + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + ident * c(b[0]);
    solve_pade(&u, &v)
}

/// Solves `(V - U) X = V + U`.
fn solve_pade(u: &Array2<C64>, v: &Array2<C64>) -> Result<Array2<C64>> {
    let p = v + u;
    let q = v - u;
    let lu = q.factorize_into()?;
    let n = p.nrows();
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        let col = lu.solve(&p.column(j).to_owned())?;
        out.column_mut(j).assign(&col);
    }
    Ok(out)
}

pub fn matrix_exp_op(a: &Operator) -> Result<Operator> {
    Operator::new(matrix_exp(a.matrix())?, a.space().clone())
}
