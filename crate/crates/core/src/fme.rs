//! Feedback master equation ingredients: system operators, interferometer,
//! local feedback, and the resulting Hamiltonian and jump operators.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qops::{
    c, dagger, embed_local, hermitian_eigenvalues, hermiticity_deviation, max_abs, pauli,
    HilbertSpec, Operator, C64, I,
};

/// Tolerance for unitarity of interferometers and Hermiticity of feedback.
pub const SETUP_TOL: f64 = 1e-10;

/// Threshold for the per-(port, site) norms in [`locc_check`].
pub const LOCC_TOL: f64 = 1e-10;

/// A local matrix acting on one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOperator {
    pub site: usize,
    pub matrix: Array2<C64>,
}

impl SiteOperator {
    pub fn new(site: usize, matrix: Array2<C64>) -> Self {
        Self { site, matrix }
    }

    pub fn embed(&self, space: &HilbertSpec) -> Result<Operator> {
        embed_local(&self.matrix, self.site, space)
    }
}

/// Declarative measurement-and-feedback setup.
///
/// Input port `j` couples to `system_ops[j]`, which acts on a single site.
/// The interferometer mixes the ports, and detector `k` drives the local
/// feedback `feedback[k][l]` on site `l` (absent entries are zero).
#[derive(Debug, Clone)]
pub struct FmeSetup {
    space: HilbertSpec,
    system_ops: Vec<SiteOperator>,
    interferometer: Array2<C64>,
    feedback: Vec<Vec<Option<Array2<C64>>>>,
}

impl FmeSetup {
    pub fn new(
        space: HilbertSpec,
        system_ops: Vec<SiteOperator>,
        interferometer: Array2<C64>,
        feedback: Vec<Vec<Option<Array2<C64>>>>,
    ) -> Result<Self> {
        let n_ports = system_ops.len();
        if interferometer.dim() != (n_ports, n_ports) {
            return Err(Error::DimensionMismatch(format!(
                "interferometer {:?} for {n_ports} ports",
                interferometer.dim()
            )));
        }
        for op in &system_ops {
            space.check_site(op.site)?;
            let d = space.dims()[op.site];
            if op.matrix.dim() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "system operator {:?} on site {} of dimension {d}",
                    op.matrix.dim(),
                    op.site
                )));
            }
        }
        let deviation = unitarity_deviation(&interferometer);
        if deviation > SETUP_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        if feedback.len() != n_ports {
            return Err(Error::DimensionMismatch(format!(
                "{} feedback channels for {n_ports} detectors",
                feedback.len()
            )));
        }
        for (k, row) in feedback.iter().enumerate() {
            if row.len() != space.n_sites() {
                return Err(Error::DimensionMismatch(format!(
                    "feedback channel {k} lists {} sites, space has {}",
                    row.len(),
                    space.n_sites()
                )));
            }
            for (l, entry) in row.iter().enumerate() {
                let Some(f) = entry else { continue };
                let d = space.dims()[l];
                if f.dim() != (d, d) {
                    return Err(Error::DimensionMismatch(format!(
                        "feedback {:?} on site {l} of dimension {d}",
                        f.dim()
                    )));
                }
                let deviation = hermiticity_deviation(f);
                if deviation > SETUP_TOL {
                    return Err(Error::NonHermitianFeedback {
                        channel: k,
                        site: l,
                        deviation,
                    });
                }
            }
        }
        Ok(Self {
            space,
            system_ops,
            interferometer,
            feedback,
        })
    }

    /// Setup with no feedback at all.
    pub fn without_feedback(
        space: HilbertSpec,
        system_ops: Vec<SiteOperator>,
        interferometer: Array2<C64>,
    ) -> Result<Self> {
        let feedback = vec![vec![None; space.n_sites()]; system_ops.len()];
        Self::new(space, system_ops, interferometer, feedback)
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn system_ops(&self) -> &[SiteOperator] {
        &self.system_ops
    }

    pub fn interferometer(&self) -> &Array2<C64> {
        &self.interferometer
    }

    pub fn feedback(&self) -> &[Vec<Option<Array2<C64>>>] {
        &self.feedback
    }

    pub fn n_ports(&self) -> usize {
        self.system_ops.len()
    }

    /// `F_k = sum_l F_k^l` on the full space, one per detector.
    pub fn feedback_totals(&self) -> Result<Vec<Operator>> {
        self.feedback
            .iter()
            .map(|row| {
                let mut total = Operator::zeros(&self.space);
                for (l, entry) in row.iter().enumerate() {
                    if let Some(f) = entry {
                        total = (&total + &embed_local(f, l, &self.space)?)?;
                    }
                }
                Ok(total)
            })
            .collect()
    }
}

/// `max |(U^dag U - I)_ij|`.
pub fn unitarity_deviation(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(dagger(u).dot(u) - Array2::<C64>::eye(n)))
}

/// Hamiltonian and jump operators of a feedback master equation.
#[derive(Debug, Clone)]
pub struct FmeModel {
    space: HilbertSpec,
    hamiltonian: Operator,
    jumps: Vec<Operator>,
}

impl FmeModel {
    pub fn new(hamiltonian: Operator, jumps: Vec<Operator>) -> Result<Self> {
        let deviation = hamiltonian.hermiticity_deviation();
        if deviation > SETUP_TOL {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian is not Hermitian (deviation {deviation:e})"
            )));
        }
        let space = hamiltonian.space().clone();
        if jumps.iter().any(|j| j.space() != &space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space,
            hamiltonian,
            jumps,
        })
    }

    /// Model with no dynamics on `space`.
    pub fn empty(space: &HilbertSpec) -> Self {
        Self {
            space: space.clone(),
            hamiltonian: Operator::zeros(space),
            jumps: Vec::new(),
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    /// Same jumps with `H = 0` (purely dissipative dynamics).
    pub fn without_hamiltonian(&self) -> Self {
        Self {
            space: self.space.clone(),
            hamiltonian: Operator::zeros(&self.space),
            jumps: self.jumps.clone(),
        }
    }
}

/// `Z_k = sum_j U_kj S_j`.
pub fn transformed_system_ops(setup: &FmeSetup) -> Result<Vec<Operator>> {
    let embedded: Vec<Operator> = setup
        .system_ops
        .iter()
        .map(|s| s.embed(&setup.space))
        .collect::<Result<_>>()?;
    let u = &setup.interferometer;
    let n = setup.space.total_dim();
    (0..setup.n_ports())
        .map(|k| {
            let mut z = Array2::<C64>::zeros((n, n));
            for (j, s) in embedded.iter().enumerate() {
                let ukj = u[[k, j]];
                if ukj != c(0.0) {
                    z.scaled_add(ukj, s.matrix());
                }
            }
            Operator::new(z, setup.space.clone())
        })
        .collect()
}

/// `H = (1/2) sum_k (F_k Z_k + Z_k^dag F_k)` and `J_k = Z_k - i F_k`.
pub fn build_model(setup: &FmeSetup) -> Result<FmeModel> {
    let zs = transformed_system_ops(setup)?;
    let fs = setup.feedback_totals()?;
    let n = setup.space.total_dim();
    let mut h = Array2::<C64>::zeros((n, n));
    let mut jumps = Vec::with_capacity(zs.len());
    for (z, f) in zs.iter().zip(&fs) {
        let fz = f.matrix().dot(z.matrix());
        h = h + &fz * c(0.5) + dagger(&fz) * c(0.5);
        jumps.push(Operator::new(
            z.matrix() - &(f.matrix() * I),
            setup.space.clone(),
        )?);
    }
    FmeModel::new(Operator::new(h, setup.space.clone())?, jumps)
}

/// Sums Hamiltonians and concatenates jump lists.
pub fn combine_models(models: &[FmeModel]) -> Result<FmeModel> {
    let Some(first) = models.first() else {
        return Err(Error::InvalidParameter("no models to combine".into()));
    };
    let mut h = first.hamiltonian.clone();
    let mut jumps = first.jumps.clone();
    for m in &models[1..] {
        if m.space != first.space {
            return Err(Error::SpaceMismatch);
        }
        h = (&h + &m.hamiltonian)?;
        jumps.extend(m.jumps.iter().cloned());
    }
    FmeModel::new(h, jumps)
}

/// Replaces the jumps by `J'_k = sum_l W_kl J_l`; the dissipator is unchanged
/// for unitary `W`.
pub fn mix_jumps(model: &FmeModel, w: &Array2<C64>) -> Result<FmeModel> {
    let m = model.jumps.len();
    if w.dim() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "mixing matrix {:?} for {m} jumps",
            w.dim()
        )));
    }
    let deviation = unitarity_deviation(w);
    if deviation > SETUP_TOL {
        return Err(Error::NonUnitary { deviation });
    }
    let n = model.space.total_dim();
    let jumps = (0..m)
        .map(|k| {
            let mut j = Array2::<C64>::zeros((n, n));
            for (l, jl) in model.jumps.iter().enumerate() {
                j.scaled_add(w[[k, l]], jl.matrix());
            }
            Operator::new(j, model.space.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    FmeModel::new(model.hamiltonian.clone(), jumps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoccViolation {
    pub port: usize,
    pub site: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoccReport {
    pub is_locc_sufficient: bool,
    /// Operator norm of `sum_k Im[U_kj] F_k^l` for every port `j` and site `l`.
    pub norms: Vec<LoccViolation>,
}

impl LoccReport {
    pub fn violations(&self) -> impl Iterator<Item = &LoccViolation> {
        self.norms.iter().filter(|v| v.norm > LOCC_TOL)
    }
}

/// Evaluates `sum_k Im[U_kj] F_k^l = 0` for all ports `j` and sites `l`.
///
/// A `true` verdict is sufficient for LOCC dynamics; `false` proves nothing.
pub fn locc_check(setup: &FmeSetup) -> Result<LoccReport> {
    let u = &setup.interferometer;
    let mut norms = Vec::new();
    for j in 0..setup.n_ports() {
        for l in 0..setup.space.n_sites() {
            let d = setup.space.dims()[l];
            let mut acc = Array2::<C64>::zeros((d, d));
            for (k, row) in setup.feedback.iter().enumerate() {
                if let Some(f) = &row[l] {
                    acc.scaled_add(c(u[[k, j]].im), f);
                }
            }
            // real combination of Hermitian matrices, so the norm is max |eig|
            let norm = hermitian_eigenvalues(&acc)?
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            norms.push(LoccViolation {
                port: j,
                site: l,
                norm,
            });
        }
    }
    Ok(LoccReport {
        is_locc_sufficient: norms.iter().all(|v| v.norm <= LOCC_TOL),
        norms,
    })
}

/// Serializable description of an [`FmeSetup`] on qubit sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    pub n_sites: usize,
    pub system_ops: Vec<SiteOpSpec>,
    /// Rows of `[re, im]` pairs.
    pub interferometer: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub feedback: Vec<FeedbackSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteOpSpec {
    pub site: usize,
    #[serde(flatten)]
    pub op: LocalOpSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSpec {
    pub channel: usize,
    pub site: usize,
    #[serde(flatten)]
    pub op: LocalOpSpec,
}

/// Either a named qubit operator times a real scale, or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocalOpSpec {
    Named {
        op: String,
        #[serde(default = "one")]
        scale: f64,
    },
    Matrix {
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

fn one() -> f64 {
    1.0
}

impl LocalOpSpec {
    pub fn to_matrix(&self) -> Result<Array2<C64>> {
        match self {
            LocalOpSpec::Named { op, scale } => {
                let m = match op.as_str() {
                    "sigma_x" => pauli::sigma_x(),
                    "sigma_y" => pauli::sigma_y(),
                    "sigma_z" => pauli::sigma_z(),
                    "sigma_plus" => pauli::sigma_plus(),
                    "sigma_minus" => pauli::sigma_minus(),
                    "identity" => pauli::identity(),
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "unknown operator name `{other}`"
                        )))
                    }
                };
                Ok(m * c(*scale))
            }
            LocalOpSpec::Matrix { matrix } => complex_matrix(matrix),
        }
    }
}

pub fn complex_matrix(rows: &[Vec<[f64; 2]>]) -> Result<Array2<C64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(
            "matrix rows must be square".into(),
        ));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl SetupSpec {
    pub fn build(&self) -> Result<FmeSetup> {
        let space = HilbertSpec::qubits(self.n_sites)?;
        let system_ops = self
            .system_ops
            .iter()
            .map(|s| Ok(SiteOperator::new(s.site, s.op.to_matrix()?)))
            .collect::<Result<Vec<_>>>()?;
        let u = complex_matrix(&self.interferometer)?;
        let mut feedback = vec![vec![None; self.n_sites]; system_ops.len()];
        for f in &self.feedback {
            if f.channel >= system_ops.len() {
                return Err(Error::InvalidParameter(format!(
                    "feedback channel {} but only {} detectors",
                    f.channel,
                    system_ops.len()
                )));
            }
            space.check_site(f.site)?;
            let m = f.op.to_matrix()?;
            let slot: &mut Option<Array2<C64>> = &mut feedback[f.channel][f.site];
            *slot = Some(match slot.take() {
                Some(prev) => prev + m,
                None => m,
            });
        }
        FmeSetup::new(space, system_ops, u, feedback)
    }
}
