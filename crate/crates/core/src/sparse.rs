//! Compressed sparse row storage and a restarted GMRES solver.

use ndarray::{Array1, Array2, LinalgScalar};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: LinalgScalar + PartialEq> Csr<T> {
    /// Duplicate entries are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut trips: Vec<(usize, usize, T)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<T> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                let tail = values.last_mut().unwrap();
                *tail = *tail + v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &Array2<T>) -> Self {
        let zero = T::zero();
        let trips = m
            .indexed_iter()
            .filter(|(_, v)| **v != zero)
            .map(|((r, c), v)| (r, c, *v))
            .collect();
        Self::from_triplets(m.nrows(), m.ncols(), trips)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn matvec(&self, x: &Array1<T>) -> Array1<T> {
        assert_eq!(x.len(), self.n_cols);
        Array1::from_shape_fn(self.n_rows, |r| {
            self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c])
        })
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                out[[r, c]] = out[[r, c]] + v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Relative residual target `||b - Ax|| / ||b||`.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 120,
            max_iter: 20_000,
            tol: 1e-13,
        }
    }
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Restarted GMRES with Jacobi (diagonal) preconditioning on the right.
pub fn gmres(a: &Csr<f64>, b: &Array1<f64>, opts: GmresOptions) -> Result<Array1<f64>> {
    let n = a.n_rows();
    let mut inv_diag = Array1::from_elem(n, 1.0);
    for r in 0..n {
        if let Some((_, v)) = a.row(r).find(|&(c, _)| c == r) {
            if v.abs() > 1e-300 {
                inv_diag[r] = 1.0 / v;
            }
        }
    }
    let b_norm = norm(b);
    let mut x = Array1::<f64>::zeros(n);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    while total < opts.max_iter {
        let r = b - &a.matvec(&x);
        let beta = norm(&r);
        if beta / b_norm <= opts.tol {
            return Ok(x);
        }
        let mut basis: Vec<Array1<f64>> = vec![r / beta];
        let mut h = Array2::<f64>::zeros((m + 1, m));
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            let z = &basis[k] * &inv_diag;
            let mut w = a.matvec(&z);
            for (i, v) in basis.iter().enumerate() {
                let hik = w.dot(v);
                h[[i, k]] = hik;
                w.scaled_add(-hik, v);
            }
            let w_norm = norm(&w);
            h[[k + 1, k]] = w_norm;
            for i in 0..k {
                let t = cs[i] * h[[i, k]] + sn[i] * h[[i + 1, k]];
                h[[i + 1, k]] = -sn[i] * h[[i, k]] + cs[i] * h[[i + 1, k]];
                h[[i, k]] = t;
            }
            let denom = h[[k, k]].hypot(h[[k + 1, k]]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[[k, k]] / denom;
            sn[k] = h[[k + 1, k]] / denom;
            h[[k, k]] = denom;
            h[[k + 1, k]] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let rel = g[k + 1].abs() / b_norm;
            if rel <= opts.tol || w_norm == 0.0 || total >= opts.max_iter {
                break;
            }
            basis.push(w / w_norm);
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[[i, j]] * y[j];
            }
            y[i] = s / h[[i, i]];
        }
        let mut update = Array1::<f64>::zeros(n);
        for (yi, v) in y.iter().zip(&basis) {
            update.scaled_add(*yi, v);
        }
        x = x + update * &inv_diag;
    }
    let r = b - &a.matvec(&x);
    let final_rel = norm(&r) / b_norm;
    if final_rel <= opts.tol {
        return Ok(x);
    }
    Err(Error::SolverFailure(format!(
        "GMRES did not converge in {} iterations (relative residual {:e})",
        opts.max_iter, final_rel
    )))
}
