//! Diamond-norm distance between channels.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::Channel;
use crate::sdp::{self, LinExpr, MatExpr, SdpBuilder};

/// `‖N − M‖⋄` via the semidefinite program
///
/// ```text
/// ½‖N − M‖⋄ = max tr[J(N − M) W]  s.t.  0 ⪯ W ⪯ 𝕀_out ⊗ ρ,  tr ρ = 1
/// ```
///
/// where `J` is the unnormalized Choi operator on `out ⊗ in`.
pub fn diamond_distance(n: &Channel<f64>, m: &Channel<f64>, cfg: &Config) -> Result<f64> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::InvalidShape(format!(
            "channels {}→{} and {}→{} differ in shape",
            n.dim_in(),
            n.dim_out(),
            m.dim_in(),
            m.dim_out()
        )));
    }
    let (din, dout) = (n.dim_in(), n.dim_out());
    let delta = (n.choi_matrix() - m.choi_matrix()).scale(din as f64);
    if delta.max_abs() < cfg.tol.rep * 1e-3 {
        return Ok(0.0);
    }
    let mut b = SdpBuilder::new();
    let w = b.var("W", din * dout, true);
    let s = b.var("S", din * dout, true);
    let rho = b.var("rho", din, true);
    let w_e = MatExpr::var(w, din * dout);
    let rho_e = MatExpr::var(rho, din);
    b.eq_matrix(&w_e.add(&MatExpr::var(s, din * dout))?, &rho_e.identity_kron(dout), "dominance")?;
    b.eq(&rho_e.trace(), &LinExpr::constant(1.0.into()));
    b.maximize(w_e.trace_with(&delta.hermitian_part()));
    let problem = b.build();
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "diamond")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    Ok((2.0 * sol.value).clamp(0.0, 2.0))
}

/// `max_ψ ‖((N − M) ⊗ ℐ)(ψ)‖₁` over the given pure inputs on `in ⊗ in`.
pub fn diamond_lower_bound_on_inputs(n: &Channel<f64>, m: &Channel<f64>, inputs: &[Vec<num_complex::Complex64>]) -> Result<f64> {
    let d = n.dim_in();
    let mut best = 0.0f64;
    for psi in inputs {
        let rho = ComplexMatrix::outer(psi);
        let mut diff = ComplexMatrix::zeros(n.dim_out() * d, n.dim_out() * d);
        for (ch, sign) in [(n, 1.0), (m, -1.0)] {
            for k in ch.kraus() {
                let big = k.kron(&ComplexMatrix::identity(d));
                diff += &rho.conjugate_by(&big).scale(sign);
            }
        }
        best = best.max(diff.hermitian_part().trace_norm_h());
    }
    Ok(best)
}
