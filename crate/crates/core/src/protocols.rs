//! Concrete setups: the two-qubit entangling protocol, its ring extension,
//! and the engineered dissipative transverse-field Ising model.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, SVD};

use crate::error::{Error, Result};
use crate::fme::{build_model, combine_models, mix_jumps, FmeModel, FmeSetup, SiteOperator};
use crate::qops::{c, dagger, pauli, HilbertSpec, C64, I};

/// Largest feedback parameter accepted; the gains diverge as `z -> 1`.
pub const Z_MAX: f64 = 0.99;

/// Largest accepted condition number of `Re[V]`.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitParams {
    z: f64,
}

impl TwoQubitParams {
    pub fn new(z: f64) -> Result<Self> {
        if !(0.0..=Z_MAX).contains(&z) {
            return Err(Error::InvalidParameter(format!(
                "z = {z} outside [0, {Z_MAX}]; feedback gains diverge as z -> 1"
            )));
        }
        Ok(Self { z })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// `(s_+, s_-) = (sqrt(z(1+z)), sqrt(1-z))`.
    pub fn couplings(&self) -> (f64, f64) {
        let z = self.z;
        ((z * (1.0 + z)).sqrt(), (1.0 - z).sqrt())
    }

    /// `g_pm = z (s_- pm s_+) / (sqrt2 s_+ s_-)`, written so that `z = 0` gives zero.
    pub fn gains(&self) -> (f64, f64) {
        let z = self.z;
        let (sp, sm) = self.couplings();
        let pre = z.sqrt() / ((2.0 * (1.0 + z)).sqrt() * sm);
        (pre * (sm + sp), pre * (sm - sp))
    }

    /// `(|00> - z|11>) / sqrt(1 + z^2)`.
    pub fn dark_state(&self) -> Array1<C64> {
        let n = (1.0 + self.z * self.z).sqrt();
        Array1::from(vec![c(1.0 / n), c(0.0), c(0.0), c(-self.z / n)])
    }
}

/// The beam splitter `(1/sqrt2) [[1, 1], [i, -i]]`.
pub fn two_qubit_interferometer() -> Array2<C64> {
    Array2::from_shape_vec((2, 2), vec![c(1.0), c(1.0), I, -I]).unwrap() * c(FRAC_1_SQRT_2)
}

/// Two-qubit protocol acting on sites `a` and `b` of `space`.
pub fn pair_setup(space: &HilbertSpec, a: usize, b: usize, p: TwoQubitParams) -> Result<FmeSetup> {
    if a == b {
        return Err(Error::InvalidParameter("pair sites must differ".into()));
    }
    if !space.is_qubits() {
        return Err(Error::InvalidSpace("the protocol needs qubit sites".into()));
    }
    space.check_site(a)?;
    space.check_site(b)?;
    let (sp, sm) = p.couplings();
    let (gp, gm) = p.gains();
    let (up, down) = (pauli::sigma_plus(), pauli::sigma_minus());
    let s_plus = &up * c(sp) + &down * c(sm);
    let s_minus = &up * c(sp) - &down * c(sm);
    let mut feedback = vec![vec![None; space.n_sites()]; 2];
    feedback[0][a] = Some(pauli::sigma_y() * c(gp));
    feedback[0][b] = Some(pauli::sigma_y() * c(gm));
    feedback[1][a] = Some(pauli::sigma_x() * c(gm));
    feedback[1][b] = Some(pauli::sigma_x() * c(-gp));
    FmeSetup::new(
        space.clone(),
        vec![SiteOperator::new(a, s_plus), SiteOperator::new(b, s_minus)],
        two_qubit_interferometer(),
        feedback,
    )
}

pub fn two_qubit_setup(p: TwoQubitParams) -> Result<FmeSetup> {
    pair_setup(&HilbertSpec::qubits(2)?, 0, 1, p)
}

pub fn two_qubit_model(p: TwoQubitParams) -> Result<FmeModel> {
    build_model(&two_qubit_setup(p)?)
}

/// Pair protocols on `(j, j+1 mod n)` for every `j`.
pub fn ring_model(n: usize, p: TwoQubitParams) -> Result<FmeModel> {
    chain_of_pairs(n, p, true)
}

/// Like [`ring_model`] without the closing pair `(n-1, 0)`.
pub fn open_chain_model(n: usize, p: TwoQubitParams) -> Result<FmeModel> {
    chain_of_pairs(n, p, false)
}

fn chain_of_pairs(n: usize, p: TwoQubitParams, periodic: bool) -> Result<FmeModel> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "a ring needs at least 3 sites, got {n}"
        )));
    }
    let space = HilbertSpec::qubits(n)?;
    let n_pairs = if periodic { n } else { n - 1 };
    let models = (0..n_pairs)
        .map(|j| build_model(&pair_setup(&space, j, (j + 1) % n, p)?))
        .collect::<Result<Vec<_>>>()?;
    combine_models(&models)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingParams {
    pub n: usize,
    pub delta: f64,
    pub b: f64,
    pub r: f64,
}

impl IsingParams {
    pub fn new(n: usize, delta: f64, b: f64, r: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "Ising ring needs at least 3 sites, got {n}"
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("r = {r} must be > 0")));
        }
        if !(delta.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter("Delta and B must be finite".into()));
        }
        Ok(Self { n, delta, b, r })
    }

    /// From the sweep axes `g = B/Delta` and `alpha = r / sqrt|Delta|`.
    pub fn from_scaled(n: usize, delta: f64, g: f64, alpha: f64) -> Result<Self> {
        Self::new(n, delta, g * delta, alpha * delta.abs().sqrt())
    }
}

/// `F_jk = exp(2 pi i jk / n) / sqrt n`.
pub fn dft_matrix(n: usize) -> Array2<C64> {
    let norm = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(j, k)| {
        C64::from_polar(norm, 2.0 * PI * ((j * k) % n) as f64 / n as f64)
    })
}

/// Cyclic shift with `S_{k,k+1} = 1` and `S_{n-1,0} = 1`.
pub fn shift_matrix(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(j, k)| if k == (j + 1) % n { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone)]
pub struct IsingInterferometer {
    pub dft: Array2<C64>,
    pub shift: Array2<f64>,
    pub lambda_sq: Array1<C64>,
    pub lambda: Array1<C64>,
    /// `V = F diag(lambda) F^dag`, unitary and symmetric.
    pub v: Array2<C64>,
}

/// Interferometer with `(I + V^T V)^{-1} = (I + iS + iS^T)/2`.
pub fn ising_interferometer(n: usize) -> Result<IsingInterferometer> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "interferometer needs at least 3 ports, got {n}"
        )));
    }
    let lambda_sq = Array1::from_shape_fn(n, |k| {
        let cos = (2.0 * PI * k as f64 / n as f64).cos();
        C64::new(1.0, -2.0 * cos) / C64::new(1.0, 2.0 * cos)
    });
    if let Some(k) = lambda_sq.iter().position(|l| (l + 1.0).norm() < 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "lambda_{k}^2 = -1 has no consistent square root"
        )));
    }
    let mut lambda = lambda_sq.mapv(|l| l.sqrt());
    for k in 1..n {
        if k > n - k {
            lambda[k] = lambda[n - k];
        }
    }
    let dft = dft_matrix(n);
    let mut scaled = dft.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|z| z * lambda[k]);
    }
    let v = scaled.dot(&dagger(&dft));
    Ok(IsingInterferometer {
        dft,
        shift: shift_matrix(n),
        lambda_sq,
        lambda,
        v,
    })
}

#[derive(Debug, Clone)]
pub struct IsingDerived {
    pub interferometer: IsingInterferometer,
    /// `Delta_kl` with `Delta_kk = -B`.
    pub coupling: Array2<f64>,
    /// `G = Delta Re[V]^{-1}`, rows are sites, columns detectors.
    pub gains: Array2<f64>,
    /// `Gamma = G V^*`.
    pub gamma: Array2<C64>,
    pub condition: f64,
}

/// `Delta = -B I + (Delta/2)(S + S^T)`.
pub fn ising_coupling(p: &IsingParams) -> Array2<f64> {
    let s = shift_matrix(p.n);
    let mut m = (&s + &s.t()) * (p.delta / 2.0);
    for k in 0..p.n {
        m[[k, k]] -= p.b;
    }
    m
}

pub fn ising_derived(p: &IsingParams) -> Result<IsingDerived> {
    let interferometer = ising_interferometer(p.n)?;
    let re_v = interferometer.v.mapv(|z| z.re);
    let (_, sv, _) = re_v.svd(false, false)?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let coupling = ising_coupling(p);
    let gains = coupling.dot(&re_v.inv()?);
    let gamma = gains.mapv(c).dot(&interferometer.v.mapv(|z| z.conj()));
    Ok(IsingDerived {
        interferometer,
        coupling,
        gains,
        gamma,
        condition,
    })
}

/// Measurement setups for the `A` fields (interferometer `V`) and the
/// `B` fields (interferometer `V^*`).
pub fn ising_setups(p: &IsingParams) -> Result<(FmeSetup, FmeSetup, IsingDerived)> {
    let derived = ising_derived(p)?;
    let space = HilbertSpec::qubits(p.n)?;
    let system_ops: Vec<SiteOperator> = (0..p.n)
        .map(|j| SiteOperator::new(j, pauli::sigma_minus() * c(p.r)))
        .collect();
    let feedback: Vec<Vec<Option<Array2<C64>>>> = (0..p.n)
        .map(|k| {
            (0..p.n)
                .map(|l| {
                    let g = derived.gains[[l, k]] / p.r;
                    (g != 0.0).then(|| pauli::sigma_x() * c(g))
                })
                .collect()
        })
        .collect();
    let v = &derived.interferometer.v;
    let a = FmeSetup::new(
        space.clone(),
        system_ops.clone(),
        v.clone(),
        feedback.clone(),
    )?;
    let b = FmeSetup::new(space, system_ops, v.mapv(|z| z.conj()), feedback)?;
    Ok((a, b, derived))
}

#[derive(Debug, Clone)]
pub struct IsingModel {
    pub model: FmeModel,
    pub derived: IsingDerived,
}

/// Combined `A` and `B` models. Each jump set is rotated by the adjoint
/// interferometer, giving `J_k = r sigma_-^k - (i/r) sum_j Gamma_jk sigma_x^j`
/// (and `Gamma^*` for the `B` fields).
pub fn ising_model(p: &IsingParams) -> Result<IsingModel> {
    let (a, b, derived) = ising_setups(p)?;
    let ma = mix_jumps(&build_model(&a)?, &dagger(a.interferometer()))?;
    let mb = mix_jumps(&build_model(&b)?, &dagger(b.interferometer()))?;
    Ok(IsingModel {
        model: combine_models(&[ma, mb])?,
        derived,
    })
}
