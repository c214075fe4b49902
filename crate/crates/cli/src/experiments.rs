//! Grid sweeps and one-off runs behind each subcommand.

use std::time::Instant;

use fme_core::fme::{locc_check, FmeModel, FmeSetup, LOCC_TOL};
use fme_core::liouvillian::{steady_state_with, Liouvillian, SteadyState};
use fme_core::measures::{concurrence, log_negativity, purity, spin_up_density, Bipartition};
use fme_core::oracle::{validate_against_fme, CoarseStepParams, FieldConfig};
use fme_core::protocols::{
    ising_model, ising_setups, ring_model, two_qubit_model, two_qubit_setup, IsingParams,
    TwoQubitParams,
};
use fme_core::qops::{partial_trace, DensityMatrix, HilbertSpec, C64};
use ndarray::Array2;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    HamiltonianChoice, InitialState, IsingConfig, IsingField, LoccConfig, OracleConfig, Params,
    RingConfig, RunConfig, SetupSource, SolverConfig, TwoQubitConfig,
};
use crate::table::{Cell, Table};
use crate::Failure;

/// Result of one run before it is written out.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    /// Rows whose solve failed or did not meet the residual tolerance.
    pub flagged: usize,
    /// Wall time per row in seconds, in row order.
    pub row_seconds: Vec<f64>,
    /// Experiment-specific summary for the manifest.
    pub summary: Value,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    match &cfg.params {
        Params::TwoQubit(c) => Ok(two_qubit(c, &cfg.solver)),
        Params::Ring(c) => Ok(ring(c, &cfg.solver)),
        Params::Ising(c) => Ok(ising(c, &cfg.solver)),
        Params::LoccCheck(c) => locc(c),
        Params::Oracle(c) => oracle(c),
    }
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn solve(model: &FmeModel, solver: &SolverConfig) -> Result<(SteadyState, bool), String> {
    let l = Liouvillian::with_storage(model, solver.storage());
    let ss = steady_state_with(&l, solver.method()).map_err(|e| e.to_string())?;
    let ok = ss.converged(&l);
    Ok((ss, ok))
}

/// Evaluates `points` in parallel and keeps them in grid order.
fn sweep<P: Sync, F>(points: &[P], f: F) -> (Vec<Vec<Cell>>, Vec<bool>, Vec<f64>)
where
    F: Fn(&P) -> (Vec<Cell>, bool) + Sync,
{
    let results: Vec<(Vec<Cell>, bool, f64)> = points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let (row, flagged) = f(p);
            (row, flagged, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut flags = Vec::with_capacity(results.len());
    let mut times = Vec::with_capacity(results.len());
    for (r, fl, t) in results {
        rows.push(r);
        flags.push(fl);
        times.push(t);
    }
    (rows, flags, times)
}

fn finish(
    table_cols: Vec<String>,
    (rows, flags, times): (Vec<Vec<Cell>>, Vec<bool>, Vec<f64>),
    summary: Value,
) -> Outcome {
    let mut table = Table::new(table_cols);
    for r in rows {
        table.push(r);
    }
    Outcome {
        table,
        flagged: flags.iter().filter(|&&f| f).count(),
        row_seconds: times,
        summary,
    }
}

fn nan_row(prefix: Vec<Cell>, width: usize) -> Vec<Cell> {
    let mut row = prefix;
    while row.len() < width - 2 {
        row.push(Cell::Float(f64::NAN));
    }
    row.push(Cell::Flag(false));
    row.push(Cell::Flag(true));
    row
}

fn pair_concurrence(rho: &DensityMatrix, a: usize, b: usize) -> f64 {
    partial_trace(rho, &[a, b])
        .and_then(|r| concurrence(&r))
        .unwrap_or(f64::NAN)
}

fn two_qubit(c: &TwoQubitConfig, solver: &SolverConfig) -> Outcome {
    let cols = columns(&[
        "z",
        "fidelity",
        "purity",
        "concurrence",
        "log_negativity",
        "residual",
        "unique",
        "flagged",
    ]);
    let width = cols.len();
    let zs = c.z.values();
    let bp = Bipartition::new(&[0], 2).expect("two sites");
    let out = sweep(&zs, |&z| {
        let p = TwoQubitParams::new(z).expect("validated");
        let solved = two_qubit_model(p)
            .map_err(|e| e.to_string())
            .and_then(|m| solve(&m, solver));
        match solved {
            Ok((ss, ok)) => (
                vec![
                    Cell::Float(z),
                    Cell::Float(ss.rho.fidelity_pure(&p.dark_state())),
                    Cell::Float(purity(&ss.rho)),
                    Cell::Float(concurrence(&ss.rho).unwrap_or(f64::NAN)),
                    Cell::Float(log_negativity(&ss.rho, &bp).unwrap_or(f64::NAN)),
                    Cell::Float(ss.residual),
                    Cell::Flag(ss.unique),
                    Cell::Flag(!ok),
                ],
                !ok,
            ),
            Err(e) => {
                eprintln!("two-qubit z = {z}: {e}");
                (nan_row(vec![Cell::Float(z)], width), true)
            }
        }
    });
    finish(cols, out, Value::Null)
}

fn bipartition_label(part: &[usize]) -> String {
    let sites: Vec<String> = part.iter().map(|s| s.to_string()).collect();
    format!("log_negativity_{}", sites.join("_"))
}

fn ring(c: &RingConfig, solver: &SolverConfig) -> Outcome {
    let mut names: Vec<String> = columns(&[
        "n",
        "z",
        "purity",
        "concurrence_nn",
        "concurrence_nnn",
        "log_negativity_odd_even",
    ]);
    names.extend(c.bipartitions.iter().map(|p| bipartition_label(p)));
    names.extend(columns(&[
        "spin_up_density",
        "residual",
        "unique",
        "flagged",
    ]));
    let width = names.len();
    let points: Vec<(usize, f64)> =
        c.n.iter()
            .flat_map(|&n| c.z.values().into_iter().map(move |z| (n, z)))
            .collect();
    let out = sweep(&points, |&(n, z)| {
        let p = TwoQubitParams::new(z).expect("validated");
        let prefix = vec![Cell::Int(n as u64), Cell::Float(z)];
        let solved = ring_model(n, p)
            .map_err(|e| e.to_string())
            .and_then(|m| solve(&m, solver));
        let (ss, ok) = match solved {
            Ok(s) => s,
            Err(e) => {
                eprintln!("ring n = {n} z = {z}: {e}");
                return (nan_row(prefix, width), true);
            }
        };
        let rho = &ss.rho;
        let mut row = prefix;
        row.push(Cell::Float(purity(rho)));
        row.push(Cell::Float(pair_concurrence(rho, 0, 1)));
        row.push(Cell::Float(pair_concurrence(rho, 0, 2)));
        let mut parts = vec![Bipartition::odd_even(n)];
        parts.extend(c.bipartitions.iter().map(|x| Bipartition::new(x, n)));
        for bp in parts {
            let v = bp
                .and_then(|bp| log_negativity(rho, &bp))
                .unwrap_or(f64::NAN);
            row.push(Cell::Float(v));
        }
        row.push(Cell::Float(spin_up_density(rho).unwrap_or(f64::NAN)));
        row.push(Cell::Float(ss.residual));
        row.push(Cell::Flag(ss.unique));
        row.push(Cell::Flag(!ok));
        (row, !ok)
    });
    finish(names, out, Value::Null)
}

fn ising(c: &IsingConfig, solver: &SolverConfig) -> Outcome {
    let cols = columns(&[
        "n",
        "delta",
        "g",
        "alpha",
        "b",
        "r",
        "hamiltonian",
        "spin_up_density",
        "purity",
        "residual",
        "unique",
        "flagged",
    ]);
    let width = cols.len();
    let with_h: &[bool] = match c.hamiltonian {
        HamiltonianChoice::Both => &[true, false],
        HamiltonianChoice::Full => &[true],
        HamiltonianChoice::Dissipative => &[false],
    };
    let mut points = Vec::new();
    for alpha in c.alpha.values() {
        for g in c.g.values() {
            for &h in with_h {
                points.push((alpha, g, h));
            }
        }
    }
    let out = sweep(&points, |&(alpha, g, h)| {
        let prefix = |p: Option<&IsingParams>| {
            vec![
                Cell::Int(c.n as u64),
                Cell::Float(c.delta),
                Cell::Float(g),
                Cell::Float(alpha),
                Cell::Float(p.map_or(g * c.delta, |p| p.b)),
                Cell::Float(p.map_or(alpha * c.delta.abs().sqrt(), |p| p.r)),
                Cell::Flag(h),
            ]
        };
        let params = match IsingParams::from_scaled(c.n, c.delta, g, alpha) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("ising g = {g} alpha = {alpha}: {e}");
                return (nan_row(prefix(None), width), true);
            }
        };
        let solved = ising_model(&params)
            .map(|m| {
                if h {
                    m.model
                } else {
                    m.model.without_hamiltonian()
                }
            })
            .map_err(|e| e.to_string())
            .and_then(|m| solve(&m, solver));
        match solved {
            Ok((ss, ok)) => {
                let mut row = prefix(Some(&params));
                row.push(Cell::Float(spin_up_density(&ss.rho).unwrap_or(f64::NAN)));
                row.push(Cell::Float(purity(&ss.rho)));
                row.push(Cell::Float(ss.residual));
                row.push(Cell::Flag(ss.unique));
                row.push(Cell::Flag(!ok));
                (row, !ok)
            }
            Err(e) => {
                eprintln!("ising g = {g} alpha = {alpha}: {e}");
                (nan_row(prefix(Some(&params)), width), true)
            }
        }
    });
    finish(cols, out, Value::Null)
}

fn build_setup(s: &SetupSource) -> Result<FmeSetup, Failure> {
    let setup = match s {
        SetupSource::TwoQubit { z } => TwoQubitParams::new(*z).and_then(two_qubit_setup),
        SetupSource::Ising {
            n,
            delta,
            b,
            r,
            field,
        } => IsingParams::new(*n, *delta, *b, *r)
            .and_then(|p| ising_setups(&p))
            .map(|(a, b, _)| match field {
                IsingField::A => a,
                IsingField::B => b,
            }),
        SetupSource::Custom(spec) => spec.build(),
    };
    setup.map_err(|e| Failure::Solver(format!("building setup: {e}")))
}

fn locc(c: &LoccConfig) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let setup = build_setup(&c.setup)?;
    let report = locc_check(&setup).map_err(|e| Failure::Solver(e.to_string()))?;
    let mut table = Table::new(columns(&["port", "site", "norm", "violation"]));
    for v in &report.norms {
        table.push(vec![
            Cell::Int(v.port as u64),
            Cell::Int(v.site as u64),
            Cell::Float(v.norm),
            Cell::Flag(v.norm > LOCC_TOL),
        ]);
    }
    let n_rows = table.rows.len();
    Ok(Outcome {
        table,
        flagged: 0,
        row_seconds: vec![start.elapsed().as_secs_f64() / n_rows.max(1) as f64; n_rows],
        summary: json!({
            "is_locc_sufficient": report.is_locc_sufficient,
            "violations": report.violations().count(),
        }),
    })
}

fn initial_state(init: &InitialState, space: &HilbertSpec) -> Result<DensityMatrix, Failure> {
    let bad = |e: fme_core::Error| Failure::Config(format!("oracle.initial: {e}"));
    match init {
        InitialState::Named(_) => Ok(DensityMatrix::maximally_mixed(space)),
        InitialState::Basis { basis } => DensityMatrix::basis_state(basis, space).map_err(bad),
        InitialState::Diagonal { diagonal } => {
            let d = space.total_dim();
            if diagonal.len() != d {
                return Err(Failure::Config(format!(
                    "oracle.initial.diagonal: expected {d} entries, got {}",
                    diagonal.len()
                )));
            }
            let m = Array2::from_diag(&ndarray::Array1::from_iter(
                diagonal.iter().map(|&p| C64::new(p, 0.0)),
            ));
            DensityMatrix::new(m, space.clone()).map_err(bad)
        }
    }
}

fn oracle(c: &OracleConfig) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let setup = build_setup(&c.setup)?;
    let rho0 = initial_state(&c.initial, setup.space())?;
    let p = CoarseStepParams::new(c.epsilon, c.n_traj, c.seed);
    let fc = FieldConfig::from(c.field);
    let report = validate_against_fme(&rho0, &setup, &fc, &p, c.steps)
        .map_err(|e| Failure::Solver(format!("oracle: {e}")))?;
    let mut table = Table::new(columns(&[
        "step",
        "trace_distance",
        "bound",
        "within_bound",
    ]));
    let mut flagged = 0;
    for s in &report.steps {
        let within = s.trace_distance <= s.bound;
        flagged += usize::from(!within);
        table.push(vec![
            Cell::Int(s.step as u64),
            Cell::Float(s.trace_distance),
            Cell::Float(s.bound),
            Cell::Flag(within),
        ]);
    }
    let x_stats: Vec<Value> = report
        .x_stats
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "mode": k,
                "count": s.count,
                "mean": s.mean,
                "mean_sq": s.mean_sq,
                "se_mean": s.se_mean,
                "se_mean_sq": s.se_mean_sq,
                "matches_vacuum_4se": s.matches_vacuum(4.0),
            })
        })
        .collect();
    let n_rows = table.rows.len();
    Ok(Outcome {
        table,
        flagged,
        row_seconds: vec![start.elapsed().as_secs_f64() / n_rows as f64; n_rows],
        summary: json!({
            "epsilon": report.epsilon,
            "n_traj": report.n_traj,
            "seed": report.seed,
            "c1": report.c1,
            "c2": report.c2,
            "x_stats": x_stats,
        }),
    })
}
