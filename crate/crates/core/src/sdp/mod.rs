//! Hermitian semidefinite programming on top of a real conic backend.
//!
//! Problems are stated over Hermitian matrix variables with complex linear
//! equalities (see [`SdpBuilder`] and [`MatExpr`]) and solved by reduction to
//! a real conic program (see [`realify`]).

pub mod adapter;
pub mod problem;
pub mod realify;

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub use adapter::{farkas_residual, ClarabelSolver, ConicSolution, ConicSolver, ConicStatus};
pub use problem::{Equality, GroupSlot, HermitianVariable, LinExpr, MatExpr, SdpBuilder, SdpProblem, Sense, Term, VarId};
pub use realify::{realify, RealCone, RealConicProblem};

pub type CMat = ComplexMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub status_text: String,
    /// Objective at the returned primal point; `0` for feasibility problems
    /// and `NaN` unless optimal.
    pub value: f64,
    /// `|primal - dual|` of the real program.
    pub gap: f64,
    pub primal: BTreeMap<String, CMat>,
    /// Multipliers keyed by PSD variable id and by equality group name.
    pub dual: BTreeMap<String, CMat>,
    /// Normalized Farkas residual when infeasible.
    pub farkas_residual: Option<f64>,
    pub iterations: u32,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Fails with [`Error::Solver`] unless optimal.
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::solver(
                self.status_text.clone(),
                format!("expected an optimal solution, got {:?}", self.status),
            ))
        }
    }

    pub fn primal(&self, id: &str) -> Result<&CMat> {
        self.primal
            .get(id)
            .ok_or_else(|| Error::InternalInconsistency(format!("no primal value for `{id}`")))
    }

    pub fn dual(&self, key: &str) -> Result<&CMat> {
        self.dual
            .get(key)
            .ok_or_else(|| Error::InternalInconsistency(format!("no dual value for `{key}`")))
    }

    pub fn scalar(&self, id: &str) -> Result<f64> {
        Ok(self.primal(id)?.get(0, 0).re)
    }
}

pub fn solve(problem: &SdpProblem, solver: &dyn ConicSolver) -> Result<SdpSolution> {
    let (real, map) = realify(problem)?;
    let raw = solver.solve(&real)?;
    let status = match raw.status {
        ConicStatus::Optimal => SdpStatus::Optimal,
        ConicStatus::Infeasible => SdpStatus::Infeasible,
        ConicStatus::Unbounded => SdpStatus::Unbounded,
        ConicStatus::Failed => SdpStatus::NumericalFailure,
    };
    let mut primal = BTreeMap::new();
    let mut dual = BTreeMap::new();
    let mut value = f64::NAN;
    let mut farkas = None;
    if status == SdpStatus::Optimal {
        for (v, var) in problem.variables.iter().enumerate() {
            primal.insert(var.id.clone(), map.primal(v, &raw.x));
        }
        value = if problem.sense == Sense::Feasibility {
            0.0
        } else {
            evaluate(&problem.objective, problem, &primal).re
        };
    }
    if matches!(status, SdpStatus::Optimal | SdpStatus::Infeasible) {
        for &(v, start) in &map.psd_rows {
            dual.insert(problem.variables[v.0].id.clone(), map.psd_dual(v, start, &raw.z));
        }
        group_duals(problem, &map.eq_rows, &raw.z, &mut dual);
    }
    if status == SdpStatus::Infeasible {
        farkas = farkas_residual(&real, &raw.z);
    }
    Ok(SdpSolution {
        status,
        status_text: raw.status_text,
        value,
        gap: (raw.primal_objective - raw.dual_objective).abs(),
        primal,
        dual,
        farkas_residual: farkas,
        iterations: raw.iterations,
    })
}

/// Equality multipliers assembled into Hermitian `Y` with
/// `Σ Re[w_ij (L - H)_ij] = tr[Y (L - H)]` over the emitted upper triangle.
fn group_duals(problem: &SdpProblem, rows: &[[Option<usize>; 2]], z: &[f64], out: &mut BTreeMap<String, CMat>) {
    for (eq, slots) in problem.equalities.iter().zip(rows) {
        let Some(g) = &eq.group else { continue };
        let entry = out.entry(g.name.clone()).or_insert_with(|| CMat::zeros(g.dim, g.dim));
        let yr = slots[0].map_or(0.0, |r| z[r]);
        let yi = slots[1].map_or(0.0, |r| z[r]);
        if g.row == g.col {
            entry.set(g.row, g.row, Complex64::new(yr, 0.0));
        } else {
            let w = Complex64::new(yr, -yi) * 0.5;
            entry.set(g.col, g.row, w);
            entry.set(g.row, g.col, w.conj());
        }
    }
}

pub fn evaluate(e: &LinExpr, problem: &SdpProblem, values: &BTreeMap<String, CMat>) -> Complex64 {
    let mut acc = e.constant;
    for t in &e.terms {
        let m = &values[&problem.variables[t.var.0].id];
        acc += t.coeff * m.get(t.row, t.col);
    }
    acc
}

/// Largest absolute equality residual of `values`.
pub fn equality_residual(problem: &SdpProblem, values: &BTreeMap<String, CMat>) -> f64 {
    problem
        .equalities
        .iter()
        .map(|eq| (evaluate(&eq.lhs, problem, values) - eq.rhs).norm())
        .fold(0.0, f64::max)
}

/// Feasibility of a solved family member.
///
/// Feasibility problems count when optimal; slack maximizations when the
/// optimum is at least `-tol`; slack minimizations when it is at most `tol`.
pub fn is_feasible(problem: &SdpProblem, solution: &SdpSolution, tol: f64) -> bool {
    if !solution.is_optimal() {
        return false;
    }
    match problem.sense {
        Sense::Feasibility => true,
        Sense::Maximize => solution.value >= -tol,
        Sense::Minimize => solution.value <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    /// Midpoint of the final bracket.
    pub boundary: f64,
    pub lo: f64,
    pub hi: f64,
    pub solves: usize,
}

/// Boundary of a monotone family feasible at `lo` and infeasible at `hi`.
///
/// Uses at most `⌈log₂((hi - lo)/tol)⌉ + 2` solves.
pub fn bisect_feasibility(
    family: impl Fn(f64) -> Result<SdpProblem>,
    lo: f64,
    hi: f64,
    tol: f64,
    feas_tol: f64,
    solver: &dyn ConicSolver,
) -> Result<Bisection> {
    if !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Bracket(format!("invalid bracket [{lo}, {hi}] with tol {tol}")));
    }
    let probe = |t: f64| -> Result<bool> {
        let p = family(t)?;
        let s = solve(&p, solver)?;
        if s.status == SdpStatus::NumericalFailure {
            return Err(Error::solver(s.status_text, format!("bisection solve failed at {t}")));
        }
        Ok(is_feasible(&p, &s, feas_tol))
    };
    if !probe(lo)? {
        return Err(Error::Bracket(format!("family infeasible at lower end {lo}")));
    }
    if probe(hi)? {
        return Err(Error::Bracket(format!("family feasible at upper end {hi}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut solves = 2;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if probe(mid)? {
            a = mid;
        } else {
            b = mid;
        }
        solves += 1;
    }
    Ok(Bisection {
        boundary: 0.5 * (a + b),
        lo: a,
        hi: b,
        solves,
    })
}

/// Writes the problem as JSON when `dir` is set; returns the file path.
pub fn dump_problem(problem: &SdpProblem, dir: Option<&Path>, tag: &str) -> Result<Option<std::path::PathBuf>> {
    let Some(dir) = dir else { return Ok(None) };
    std::fs::create_dir_all(dir).map_err(|e| Error::InvalidParameter(format!("dump dir: {e}")))?;
    let path = dir.join(format!("{tag}.json"));
    let json = serde_json::to_string(problem).map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::InvalidParameter(format!("dump write: {e}")))?;
    Ok(Some(path))
}
