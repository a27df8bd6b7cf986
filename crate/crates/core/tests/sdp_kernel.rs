use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT::PSDTriangleConeT,
    SupportedConeT::ZeroConeT,
};
use ipres_core::quantum::random::{random_hermitian, random_state, seeded};
use ipres_core::sdp::{
    self, bisect_feasibility, ClarabelSolver, LinExpr, MatExpr, SdpBuilder, SdpStatus,
};
use ipres_core::{ComplexMatrix, Error};
use rand::Rng;

type CMat = ComplexMatrix;

fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Real symmetric embedding `[[Re A, −Im A], [Im A, Re A]]`.
fn embed(a: &CMat) -> Vec<Vec<f64>> {
    let d = a.rows();
    let mut m = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            let z = a.get(i, j);
            m[i][j] = z.re;
            m[i + d][j + d] = z.re;
            m[i][j + d] = -z.im;
            m[i + d][j] = z.im;
        }
    }
    m
}

/// Coefficients of `½ tr(Â M)` on `svec(M)`.
fn half_trace_row(a_hat: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let n = a_hat.len();
    let mut row = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            let v = if i == j { 0.5 * a_hat[i][i] } else { 0.5 * std::f64::consts::SQRT_2 * a_hat[i][j] };
            if v != 0.0 {
                row.push((svec_index(i, j), v));
            }
        }
    }
    row
}

/// `max Re tr[C X]` over density matrices with `tr[A_k X] = b_k`, solved by a
/// full symmetric `2d × 2d` variable tied down with block equalities.
fn reference_value(c: &CMat, cons: &[(CMat, f64)]) -> f64 {
    let d = c.rows();
    let n2 = 2 * d;
    let nv = n2 * (n2 + 1) / 2;
    let off = std::f64::consts::FRAC_1_SQRT_2;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..d {
        for i in 0..=j {
            let s = if i == j { 1.0 } else { off };
            rows.push(vec![(svec_index(i, j), s), (svec_index(i + d, j + d), -s)]);
            rhs.push(0.0);
        }
    }
    for j in 0..d {
        for i in 0..=j {
            if i == j {
                rows.push(vec![(svec_index(i, i + d), off)]);
            } else {
                rows.push(vec![(svec_index(i, j + d), off), (svec_index(j, i + d), off)]);
            }
            rhs.push(0.0);
        }
    }
    rows.push(half_trace_row(&embed(&CMat::identity(d))));
    rhs.push(1.0);
    for (a, b) in cons {
        rows.push(half_trace_row(&embed(a)));
        rhs.push(*b);
    }
    let n_eq = rows.len();
    let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    for (r, row) in rows.iter().enumerate() {
        for &(col, v) in row {
            ii.push(r);
            jj.push(col);
            vv.push(v);
        }
    }
    for k in 0..nv {
        ii.push(n_eq + k);
        jj.push(k);
        vv.push(-1.0);
    }
    rhs.extend(std::iter::repeat_n(0.0, nv));
    let a = CscMatrix::new_from_triplets(n_eq + nv, nv, ii, jj, vv);
    let mut q = vec![0.0; nv];
    for (col, v) in half_trace_row(&embed(c)) {
        q[col] = -v;
    }
    let p = CscMatrix::<f64>::zeros((nv, nv));
    let cones = [ZeroConeT(n_eq), PSDTriangleConeT(n2)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p, &q, &a, &rhs, &cones, settings).unwrap();
    solver.solve();
    assert!(matches!(solver.solution.status, SolverStatus::Solved | SolverStatus::AlmostSolved));
    -solver.solution.obj_val
}

fn complex_value(c: &CMat, cons: &[(CMat, f64)]) -> f64 {
    let d = c.rows();
    let mut b = SdpBuilder::new();
    let x = b.var("X", d, true);
    let xe = MatExpr::var(x, d);
    b.eq(&xe.trace(), &LinExpr::constant(1.0.into()));
    for (a, v) in cons {
        b.eq(&LinExpr::trace_with(a, x), &LinExpr::constant((*v).into()));
    }
    b.maximize(LinExpr::trace_with(c, x));
    let sol = sdp::solve(&b.build(), &ClarabelSolver::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal, "{}", sol.status_text);
    sol.value
}

#[test]
fn realification_matches_reference_embedding() {
    for seed in 0..50u64 {
        let mut rng = seeded(1000 + seed);
        let d = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=3);
        let c: CMat = random_hermitian(d, &mut rng);
        let x0 = random_state::<f64, _>(d, &mut rng);
        let cons: Vec<(CMat, f64)> = (0..m)
            .map(|_| {
                let a: CMat = random_hermitian(d, &mut rng);
                let v = a.trace_product(x0.matrix()).re;
                (a, v)
            })
            .collect();
        let ours = complex_value(&c, &cons);
        let theirs = reference_value(&c, &cons);
        assert!((ours - theirs).abs() <= 1e-7, "seed {seed} d={d} m={m}: {ours} vs {theirs}");
    }
}

#[test]
fn optimal_primal_satisfies_constraints() {
    let mut rng = seeded(4);
    let c: CMat = random_hermitian(3, &mut rng);
    let a: CMat = random_hermitian(3, &mut rng);
    let x0 = random_state::<f64, _>(3, &mut rng);
    let mut b = SdpBuilder::new();
    let x = b.var("X", 3, true);
    b.eq(&MatExpr::var(x, 3).trace(), &LinExpr::constant(1.0.into()));
    b.eq(&LinExpr::trace_with(&a, x), &LinExpr::constant(a.trace_product(x0.matrix())));
    b.maximize(LinExpr::trace_with(&c, x));
    let problem = b.build();
    let sol = sdp::solve(&problem, &ClarabelSolver::default()).unwrap();
    assert!(sol.is_optimal());
    assert!(sdp::equality_residual(&problem, &sol.primal) <= 1e-7);
    assert!(sol.primal("X").unwrap().min_eigenvalue_h() >= -1e-8);
}

#[test]
fn infeasible_problems_carry_farkas_rays() {
    let mut rng = seeded(8);
    for _ in 0..5 {
        let d = rng.gen_range(2..=3);
        let g: CMat = random_hermitian(d, &mut rng);
        let pd = &(&g * &g) + &CMat::identity(d).scale(0.1);
        let mut b = SdpBuilder::new();
        let x = b.var("X", d, true);
        b.eq(&MatExpr::var(x, d).trace(), &LinExpr::constant(1.0.into()));
        b.eq(&LinExpr::trace_with(&pd, x), &LinExpr::constant((-0.5).into()));
        b.minimize(LinExpr::zero());
        let sol = sdp::solve(&b.build(), &ClarabelSolver::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let r = sol.farkas_residual.expect("ray present");
        assert!(r <= 1e-6, "farkas residual {r}");
    }
}

#[test]
fn bisection_brackets() {
    let family = |t: f64| {
        let mut b = SdpBuilder::new();
        let x = b.var("x", 1, true);
        let s = b.var("s", 1, true);
        b.eq(&LinExpr::entry(x, 0, 0), &LinExpr::constant(t.into()));
        b.eq(
            &(&LinExpr::entry(x, 0, 0) + &LinExpr::entry(s, 0, 0)),
            &LinExpr::constant(0.3.into()),
        );
        b.maximize(LinExpr::zero());
        Ok(b.build())
    };
    let solver = ClarabelSolver::default();
    let r = bisect_feasibility(family, 0.0, 1.0, 1e-4, 1e-7, &solver).unwrap();
    assert!((r.boundary - 0.3).abs() <= 1e-4);
    assert!(r.solves <= 17);
    assert!(matches!(
        bisect_feasibility(family, 1.0, 0.0, 1e-4, 1e-7, &solver),
        Err(Error::Bracket(_))
    ));
}
