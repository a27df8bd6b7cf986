//! Conic solver backends.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdp::realify::{unpack_svec, RealCone, RealConicProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: ConicStatus,
    /// Backend status as reported, e.g. `AlmostSolved`.
    pub status_text: String,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: u32,
}

/// Backend for `min qᵀx s.t. Ax + s = b, s ∈ K`.
pub trait ConicSolver: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;
    fn solve(&self, problem: &RealConicProblem) -> Result<ConicSolution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClarabelSolver {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self {
            tol_gap: 1e-10,
            tol_feas: 1e-10,
            max_iter: 400,
        }
    }
}

impl ConicSolver for ClarabelSolver {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, problem: &RealConicProblem) -> Result<ConicSolution> {
        let m = problem.a.len();
        let n = problem.num_vars;
        let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
        for (r, row) in problem.a.iter().enumerate() {
            for &(c, v) in row {
                ii.push(r);
                jj.push(c);
                vv.push(v);
            }
        }
        let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
        let p = CscMatrix::<f64>::zeros((n, n));
        let cones: Vec<SupportedConeT<f64>> = problem
            .cones
            .iter()
            .map(|c| match *c {
                RealCone::Zero(k) => ZeroConeT(k),
                RealCone::Nonnegative(k) => NonnegativeConeT(k),
                RealCone::PsdTriangle(k) => PSDTriangleConeT(k),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol_gap)
            .tol_gap_rel(self.tol_gap)
            .tol_feas(self.tol_feas)
            .tol_ktratio(1e-8)
            .chordal_decomposition_enable(false)
            .build()
            .map_err(|e| Error::solver("settings", e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &problem.q, &a, &problem.b, &cones, settings)
            .map_err(|e| Error::solver("setup", format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => ConicStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConicStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => ConicStatus::Unbounded,
            _ => ConicStatus::Failed,
        };
        Ok(ConicSolution {
            status,
            status_text: format!("{:?}", sol.status),
            x: sol.x.clone(),
            z: sol.z.clone(),
            primal_objective: sol.obj_val,
            dual_objective: sol.obj_val_dual,
            iterations: sol.iterations,
        })
    }
}

/// Relative violation of the Farkas conditions `Aᵀz = 0`, `z ∈ K*`,
/// `bᵀz < 0`, normalized by `|bᵀz|`. `None` if `bᵀz ≥ 0`.
pub fn farkas_residual(problem: &RealConicProblem, z: &[f64]) -> Option<f64> {
    let btz: f64 = problem.b.iter().zip(z).map(|(b, z)| b * z).sum();
    if !(btz < 0.0) {
        return None;
    }
    let atz = problem.a_transpose_times(z);
    let mut worst = atz.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    for cone in &problem.cones {
        let rows = cone.rows();
        let block = &z[start..start + rows];
        match *cone {
            RealCone::Zero(_) => {}
            RealCone::Nonnegative(_) => {
                for &v in block {
                    worst = worst.max(-v);
                }
            }
            RealCone::PsdTriangle(k) => {
                let m = unpack_svec(block, k);
                let dm = nalgebra::DMatrix::from_fn(k, k, |i, j| m[i][j]);
                let min = dm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
                worst = worst.max(-min);
            }
        }
        start += rows;
    }
    Some(worst / btz.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp_and_infeasible_lp() {
        // min x s.t. x = 2 (zero cone), x ≥ 0
        let p = RealConicProblem {
            num_vars: 1,
            q: vec![1.0],
            a: vec![vec![(0, 1.0)], vec![(0, -1.0)]],
            b: vec![2.0, 0.0],
            cones: vec![RealCone::Zero(1), RealCone::Nonnegative(1)],
        };
        let s = ClarabelSolver::default().solve(&p).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-8);

        let infeasible = RealConicProblem {
            b: vec![-1.0, 0.0],
            ..p
        };
        let s = ClarabelSolver::default().solve(&infeasible).unwrap();
        assert_eq!(s.status, ConicStatus::Infeasible);
        let r = farkas_residual(&infeasible, &s.z).unwrap();
        assert!(r < 1e-6, "farkas residual {r}");
    }
}
