//! Direct simulation of one coarse-grained measurement-and-feedback cycle on
//! truncated Fock spaces, used to validate the feedback master equation.
//!
//! Each detector mode starts in vacuum and couples through
//! `H_int = i sum_k (Z_k b_k^dag - Z_k^dag b_k)`. The modes are measured in
//! the `x` quadrature on a fixed grid and the outcomes drive the feedback
//! `exp(-i sqrt2 eps sum_k x_k F_k)`.

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fme::{build_model, transformed_system_ops, FmeSetup};
use crate::liouvillian::{evolve, Liouvillian};
use crate::qops::{
    c, dagger, kron, matrix_exp, trace_distance, DensityMatrix, HilbertSpec, C64, I, MAX_DENSE_DIM,
};

/// Smallest grid probability mass accepted per mode.
pub const MIN_GRID_MASS: f64 = 1.0 - 1e-4;

const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub fock_dim: usize,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            fock_dim: 4,
            x_max: 6.0,
            n_points: 241,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(3..=20).contains(&self.fock_dim) {
            return Err(Error::InvalidParameter(format!(
                "fock_dim = {} outside [3, 20]",
                self.fock_dim
            )));
        }
        if self.n_points < 3 || !(self.x_max.is_finite() && self.x_max > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature grid needs x_max > 0 and at least 3 points".into(),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_max / (self.n_points - 1) as f64
    }

    pub fn grid(&self) -> Array1<f64> {
        let dx = self.dx();
        Array1::from_shape_fn(self.n_points, |i| -self.x_max + i as f64 * dx)
    }
}

/// `<x|n>` for `n < fock_dim`, one row per grid point.
pub fn hermite_amplitudes(fock_dim: usize, grid: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((grid.len(), fock_dim));
    let norm0 = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in grid.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * x * x).exp();
        for n in 0..fock_dim {
            out[[i, n]] = cur;
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseStepParams {
    pub epsilon: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Order in which detector modes are measured; `None` is ascending.
    pub mode_order: Option<Vec<usize>>,
}

impl CoarseStepParams {
    pub fn new(epsilon: f64, n_traj: usize, seed: u64) -> Self {
        Self {
            epsilon,
            n_traj,
            seed,
            mode_order: None,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} outside (0, 0.2]"
        )));
    }
    Ok(())
}

/// Kraus operators and feedback generators for one coarse step.
#[derive(Debug, Clone)]
pub struct OracleKernel {
    space: HilbertSpec,
    n_modes: usize,
    fock_dim: usize,
    epsilon: f64,
    kraus: Vec<Array2<C64>>,
    feedback: Vec<Array2<C64>>,
    grid: Array1<f64>,
    dx: f64,
    psi: Array2<f64>,
}

impl OracleKernel {
    pub fn new(setup: &FmeSetup, fc: &FieldConfig, epsilon: f64) -> Result<Self> {
        fc.validate()?;
        check_epsilon(epsilon)?;
        let space = setup.space().clone();
        let d = space.total_dim();
        let n_modes = setup.n_ports();
        let f = fc.fock_dim;
        let field_dim = f
            .checked_pow(n_modes as u32)
            .filter(|&fd| fd.saturating_mul(d) <= MAX_DENSE_DIM)
            .ok_or_else(|| {
                Error::UnsupportedSize(format!(
                    "{n_modes} modes of dimension {f} on a system of dimension {d}"
                ))
            })?;

        let mut a: Array2<C64> = Array2::zeros((f, f));
        for n in 1..f {
            a[[n - 1, n]] = c((n as f64).sqrt());
        }
        let zs = transformed_system_ops(setup)?;
        let eye_f: Array2<C64> = Array2::eye(f);
        let mut gen: Array2<C64> = Array2::zeros((d * field_dim, d * field_dim));
        for (k, z) in zs.iter().enumerate() {
            let mut b = Array2::<C64>::eye(1);
            for m in 0..n_modes {
                b = kron(&b, if m == k { &a } else { &eye_f });
            }
            // -i eps H_int = eps (Z b^dag - Z^dag b)
            gen = gen + kron(z.matrix(), &dagger(&b)) - kron(&dagger(z.matrix()), &b);
        }
        let w = matrix_exp(&(gen * c(epsilon)))?;
        let kraus = (0..field_dim)
            .map(|n| Array2::from_shape_fn((d, d), |(i, j)| w[[i * field_dim + n, j * field_dim]]))
            .collect();
        let feedback = setup
            .feedback_totals()?
            .into_iter()
            .map(|op| op.into_matrix())
            .collect();
        let grid = fc.grid();
        let psi = hermite_amplitudes(f, &grid);
        Ok(Self {
            space,
            n_modes,
            fock_dim: f,
            epsilon,
            kraus,
            feedback,
            grid,
            dx: fc.dx(),
            psi,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// `G_nm = tr(A_n rho A_m^dag)` over multi-indices of the field.
    fn gram(&self, rho: &Array2<C64>) -> Array2<C64> {
        let k = self.kraus.len();
        let left: Vec<Array2<C64>> = self.kraus.iter().map(|a| a.dot(rho)).collect();
        Array2::from_shape_fn((k, k), |(n, m)| {
            left[n]
                .iter()
                .zip(self.kraus[m].iter())
                .map(|(x, y)| x * y.conj())
                .sum()
        })
    }

    /// Splits a field multi-index over `modes` into the digit of `mode` and
    /// the index over the remaining modes.
    fn split(&self, idx: usize, modes: &[usize], pos: usize) -> (usize, usize) {
        let f = self.fock_dim;
        let len = modes.len();
        let stride = f.pow((len - 1 - pos) as u32);
        let digit = (idx / stride) % f;
        let high = idx / (stride * f);
        let low = idx % stride;
        (digit, high * stride + low)
    }

    /// Unnormalized marginal density of mode `modes[pos]` on the grid.
    fn marginal(&self, g: &Array2<C64>, modes: &[usize], pos: usize) -> Vec<f64> {
        let f = self.fock_dim;
        let mut gk = Array2::<C64>::zeros((f, f));
        for n in 0..g.nrows() {
            let (a, rest_n) = self.split(n, modes, pos);
            for m in 0..g.ncols() {
                let (b, rest_m) = self.split(m, modes, pos);
                if rest_n == rest_m {
                    gk[[a, b]] += g[[n, m]];
                }
            }
        }
        (0..self.grid.len())
            .map(|i| {
                let mut p = 0.0;
                for a in 0..f {
                    for b in 0..f {
                        p += self.psi[[i, a]] * self.psi[[i, b]] * gk[[a, b]].re;
                    }
                }
                p.max(0.0)
            })
            .collect()
    }

    /// Conditions the Gram tensor on outcome `x_i` of mode `modes[pos]`.
    fn condition(&self, g: &Array2<C64>, modes: &[usize], pos: usize, i: usize) -> Array2<C64> {
        let rest = g.nrows() / self.fock_dim;
        let mut out = Array2::<C64>::zeros((rest, rest));
        for n in 0..g.nrows() {
            let (a, rn) = self.split(n, modes, pos);
            for m in 0..g.ncols() {
                let (b, rm) = self.split(m, modes, pos);
                out[[rn, rm]] += g[[n, m]] * (self.psi[[i, a]] * self.psi[[i, b]]);
            }
        }
        out
    }

    fn check_mass(&self, mass: f64, total: f64, mode: usize) -> Result<()> {
        let rel = mass / total;
        if rel.is_nan() || rel < MIN_GRID_MASS {
            return Err(Error::TruncationLeak { mode, mass: rel });
        }
        Ok(())
    }

    /// `M(x) = sum_n prod_k psi_{n_k}(x_k) A_n` for grid indices `xi`.
    fn measurement_op(&self, xi: &[usize]) -> Array2<C64> {
        let d = self.space.total_dim();
        let f = self.fock_dim;
        let mut m = Array2::<C64>::zeros((d, d));
        for (n, a) in self.kraus.iter().enumerate() {
            let mut amp = 1.0;
            let mut rest = n;
            for k in (0..self.n_modes).rev() {
                amp *= self.psi[[xi[k], rest % f]];
                rest /= f;
            }
            if amp != 0.0 {
                m.scaled_add(c(amp), a);
            }
        }
        m
    }

    fn feedback_unitary(&self, xs: &[f64]) -> Result<Array2<C64>> {
        let d = self.space.total_dim();
        let mut h = Array2::<C64>::zeros((d, d));
        for (x, f) in xs.iter().zip(&self.feedback) {
            h.scaled_add(c(*x), f);
        }
        matrix_exp(&(h * (-I * (2f64.sqrt() * self.epsilon))))
    }

    /// One sampled trajectory step; returns the normalized conditional state
    /// and the outcomes in mode order.
    pub fn sample(
        &self,
        rho: &Array2<C64>,
        rng: &mut ChaCha8Rng,
        order: &[usize],
    ) -> Result<(Array2<C64>, Vec<f64>)> {
        let mut g = self.gram(rho);
        let mut remaining: Vec<usize> = (0..self.n_modes).collect();
        let mut xi = vec![0usize; self.n_modes];
        for &mode in order {
            let pos = remaining.iter().position(|&m| m == mode).ok_or_else(|| {
                Error::InvalidParameter(format!("mode order repeats or misses mode {mode}"))
            })?;
            let total: f64 = g.diag().iter().map(|z| z.re).sum();
            let weights = self.marginal(&g, &remaining, pos);
            self.check_mass(weights.iter().sum::<f64>() * self.dx, total, mode)?;
            let dist = WeightedIndex::new(&weights)
                .map_err(|e| Error::SolverFailure(format!("sampling mode {mode}: {e}")))?;
            let i = dist.sample(rng);
            xi[mode] = i;
            g = self.condition(&g, &remaining, pos, i);
            remaining.remove(pos);
        }
        let xs: Vec<f64> = xi.iter().map(|&i| self.grid[i]).collect();
        let m = self.measurement_op(&xi);
        let u = self.feedback_unitary(&xs)?.dot(&m);
        let mut out = u.dot(rho).dot(&dagger(&u));
        let tr = out.diag().sum().re;
        out /= c(tr);
        Ok((out, xs))
    }

    /// Average over all outcomes by summing over the full grid.
    pub fn quadrature_step(&self, rho: &Array2<C64>) -> Result<Array2<C64>> {
        let g = self.gram(rho);
        let total: f64 = g.diag().iter().map(|z| z.re).sum();
        let modes: Vec<usize> = (0..self.n_modes).collect();
        for pos in 0..self.n_modes {
            let mass = self.marginal(&g, &modes, pos).iter().sum::<f64>() * self.dx;
            self.check_mass(mass, total, pos)?;
        }
        let d = self.space.total_dim();
        let np = self.grid.len();
        let weight = self.dx.powi(self.n_modes as i32);
        let mut acc = Array2::<C64>::zeros((d, d));
        let mut xi = vec![0usize; self.n_modes];
        for flat in 0..np.pow(self.n_modes as u32) {
            let mut rest = flat;
            for k in (0..self.n_modes).rev() {
                xi[k] = rest % np;
                rest /= np;
            }
            let xs: Vec<f64> = xi.iter().map(|&i| self.grid[i]).collect();
            let u = self.feedback_unitary(&xs)?.dot(&self.measurement_op(&xi));
            acc.scaled_add(c(weight), &u.dot(rho).dot(&dagger(&u)));
        }
        Ok(acc)
    }
}

/// Sample moments of one detector's outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureStats {
    pub count: usize,
    pub mean: f64,
    pub mean_sq: f64,
    pub se_mean: f64,
    pub se_mean_sq: f64,
}

impl QuadratureStats {
    fn from_sums(count: usize, s1: f64, s2: f64, s4: f64) -> Self {
        let n = count as f64;
        let mean = s1 / n;
        let mean_sq = s2 / n;
        let var = (mean_sq - mean * mean).max(0.0);
        let var_sq = (s4 / n - mean_sq * mean_sq).max(0.0);
        Self {
            count,
            mean,
            mean_sq,
            se_mean: (var / n).sqrt(),
            se_mean_sq: (var_sq / n).sqrt(),
        }
    }

    /// `|mean| <= k se` and `|mean_sq - 1/2| <= k se`.
    pub fn matches_vacuum(&self, k: f64) -> bool {
        self.mean.abs() <= k * self.se_mean && (self.mean_sq - 0.5).abs() <= k * self.se_mean_sq
    }
}

/// Trajectory ensemble after a number of steps.
#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Average state after each step.
    pub averages: Vec<Array2<C64>>,
    /// Mean squared Frobenius distance of single trajectories from the final average.
    pub spread: f64,
    /// First-step outcome moments per mode.
    pub x_stats: Vec<QuadratureStats>,
    /// First-step outcomes, one row per trajectory.
    pub x_samples: Array2<f64>,
}

struct ChunkSums {
    states: Vec<Array2<C64>>,
    frob_sq: f64,
    x: Vec<[f64; 3]>,
    samples: Vec<f64>,
}

fn run_chunk(
    kernel: &OracleKernel,
    rho0: &Array2<C64>,
    p: &CoarseStepParams,
    order: &[usize],
    steps: usize,
    range: std::ops::Range<usize>,
) -> Result<ChunkSums> {
    let d = kernel.space.total_dim();
    let mut sums = ChunkSums {
        states: vec![Array2::zeros((d, d)); steps],
        frob_sq: 0.0,
        x: vec![[0.0; 3]; kernel.n_modes],
        samples: Vec::with_capacity(range.len() * kernel.n_modes),
    };
    for t in range {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(t as u64);
        let mut rho = rho0.clone();
        for step in 0..steps {
            let (next, xs) = kernel.sample(&rho, &mut rng, order)?;
            rho = next;
            sums.states[step] += &rho;
            if step == 0 {
                for (acc, &x) in sums.x.iter_mut().zip(&xs) {
                    let x2 = x * x;
                    acc[0] += x;
                    acc[1] += x2;
                    acc[2] += x2 * x2;
                }
                sums.samples.extend_from_slice(&xs);
            }
        }
        sums.frob_sq += rho.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(sums)
}

/// Runs `p.n_traj` independent trajectories for `steps` steps. Trajectory
/// `t` draws from the ChaCha8 stream `t` of `p.seed`, and chunk sums are
/// merged in index order, so results do not depend on the thread count.
pub fn run_ensemble(
    kernel: &OracleKernel,
    rho0: &DensityMatrix,
    p: &CoarseStepParams,
    steps: usize,
) -> Result<Ensemble> {
    if rho0.space() != kernel.space() {
        return Err(Error::SpaceMismatch);
    }
    if p.n_traj == 0 || steps == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory and one step".into(),
        ));
    }
    let order = match &p.mode_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..kernel.n_modes).collect::<Vec<_>>() {
                return Err(Error::InvalidParameter(format!(
                    "mode order {o:?} is not a permutation of 0..{}",
                    kernel.n_modes
                )));
            }
            o.clone()
        }
        None => (0..kernel.n_modes).collect(),
    };
    let n_chunks = p.n_traj.div_ceil(CHUNK);
    let chunks: Vec<ChunkSums> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let range = ci * CHUNK..((ci + 1) * CHUNK).min(p.n_traj);
            run_chunk(kernel, rho0.matrix(), p, &order, steps, range)
        })
        .collect::<Result<_>>()?;

    let d = kernel.space.total_dim();
    let mut states = vec![Array2::<C64>::zeros((d, d)); steps];
    let mut frob_sq = 0.0;
    let mut x = vec![[0.0; 3]; kernel.n_modes];
    let mut samples = Vec::with_capacity(p.n_traj * kernel.n_modes);
    for ch in chunks {
        for (s, cs) in states.iter_mut().zip(&ch.states) {
            *s += cs;
        }
        frob_sq += ch.frob_sq;
        for (acc, cx) in x.iter_mut().zip(&ch.x) {
            for i in 0..3 {
                acc[i] += cx[i];
            }
        }
        samples.extend(ch.samples);
    }
    let n = p.n_traj as f64;
    let averages: Vec<Array2<C64>> = states.into_iter().map(|s| s / c(n)).collect();
    let last = averages.last().unwrap();
    let mean_frob: f64 = last.iter().map(|z| z.norm_sqr()).sum();
    let x_stats = x
        .iter()
        .map(|s| QuadratureStats::from_sums(p.n_traj, s[0], s[1], s[2]))
        .collect();
    Ok(Ensemble {
        spread: (frob_sq / n - mean_frob).max(0.0),
        averages,
        x_stats,
        x_samples: Array2::from_shape_vec((p.n_traj, kernel.n_modes), samples)
            .expect("sample count"),
    })
}

#[derive(Debug, Clone)]
pub struct CoarseStep {
    pub rho_avg: DensityMatrix,
    pub x_stats: Vec<QuadratureStats>,
    pub x_samples: Array2<f64>,
}

/// Trajectory average of one measurement-and-feedback step.
pub fn coarse_step(
    rho: &DensityMatrix,
    setup: &FmeSetup,
    fc: &FieldConfig,
    p: &CoarseStepParams,
) -> Result<CoarseStep> {
    let kernel = OracleKernel::new(setup, fc, p.epsilon)?;
    let ens = run_ensemble(&kernel, rho, p, 1)?;
    Ok(CoarseStep {
        rho_avg: DensityMatrix::from_raw(ens.averages[0].clone(), setup.space().clone())?,
        x_stats: ens.x_stats,
        x_samples: ens.x_samples,
    })
}

/// Exact grid average of one step, without sampling noise.
pub fn coarse_step_quadrature(
    rho: &DensityMatrix,
    setup: &FmeSetup,
    fc: &FieldConfig,
    epsilon: f64,
) -> Result<DensityMatrix> {
    let kernel = OracleKernel::new(setup, fc, epsilon)?;
    if rho.space() != kernel.space() {
        return Err(Error::SpaceMismatch);
    }
    DensityMatrix::from_raw(kernel.quadrature_step(rho.matrix())?, rho.space().clone())
}

/// One step of the master equation, `exp(eps^2 L) rho`.
pub fn fme_increment(rho: &DensityMatrix, l: &Liouvillian, epsilon: f64) -> Result<DensityMatrix> {
    let dt = epsilon * epsilon;
    evolve(rho, l, dt, dt / 4.0)
}

/// Trace distance between the grid-averaged step and the master-equation step.
pub fn deterministic_residual(
    rho: &DensityMatrix,
    setup: &FmeSetup,
    fc: &FieldConfig,
    epsilon: f64,
) -> Result<f64> {
    let l = Liouvillian::new(&build_model(setup)?);
    let step = coarse_step_quadrature(rho, setup, fc, epsilon)?;
    trace_distance(step.matrix(), fme_increment(rho, &l, epsilon)?.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub trace_distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub epsilon: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub steps: Vec<StepReport>,
    pub x_stats: Vec<QuadratureStats>,
    /// One-step deterministic deviation divided by `eps^3`.
    pub c1: f64,
    /// Trace-distance scale of single-trajectory fluctuations.
    pub c2: f64,
}

/// Compares the trajectory average with master-equation propagation after
/// each of `steps` steps. The bound is `c1 eps^3 k + c2 / sqrt(n_traj)` with
/// both constants measured on this run.
pub fn validate_against_fme(
    rho0: &DensityMatrix,
    setup: &FmeSetup,
    fc: &FieldConfig,
    p: &CoarseStepParams,
    steps: usize,
) -> Result<OracleReport> {
    let kernel = OracleKernel::new(setup, fc, p.epsilon)?;
    let ens = run_ensemble(&kernel, rho0, p, steps)?;
    let l = Liouvillian::new(&build_model(setup)?);
    let eps3 = p.epsilon.powi(3);
    let c1 = deterministic_residual(rho0, setup, fc, p.epsilon)? / eps3;
    let d = rho0.dim() as f64;
    let c2 = 0.5 * d.sqrt() * ens.spread.sqrt();
    let mut fme = rho0.clone();
    let mut reports = Vec::with_capacity(steps);
    for (k, avg) in ens.averages.iter().enumerate() {
        fme = fme_increment(&fme, &l, p.epsilon)?;
        reports.push(StepReport {
            step: k + 1,
            trace_distance: trace_distance(avg, fme.matrix())?,
            bound: c1 * eps3 * (k + 1) as f64 + c2 / (p.n_traj as f64).sqrt(),
        });
    }
    Ok(OracleReport {
        epsilon: p.epsilon,
        n_traj: p.n_traj,
        seed: p.seed,
        steps: reports,
        x_stats: ens.x_stats,
        c1,
        c2,
    })
}
