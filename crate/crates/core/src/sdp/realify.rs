//! Reduction of Hermitian SDPs to real conic programs.
//!
//! A Hermitian `d×d` variable `X = A + iB` becomes `d(d+1)/2` real parts
//! `a_ij (i ≤ j)` and `d(d-1)/2` imaginary parts `b_ij (i < j)`, and
//! `X ⪰ 0` becomes `[[A, -B], [B, A]] ⪰ 0`. The real program has the form
//!
//! ```text
//! min qᵀx  s.t.  Ax + s = b,  s ∈ K
//! ```
//!
//! with `K` a product of zero, nonnegative and PSD-triangle cones, in that
//! order. PSD triangles are stored column-major upper triangular with
//! off-diagonal entries scaled by `√2`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdp::problem::{SdpProblem, Sense, VarId};
use crate::sdp::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealCone {
    Zero(usize),
    Nonnegative(usize),
    /// Side length of the PSD block.
    PsdTriangle(usize),
}

impl RealCone {
    pub fn rows(&self) -> usize {
        match *self {
            RealCone::Zero(n) | RealCone::Nonnegative(n) => n,
            RealCone::PsdTriangle(k) => k * (k + 1) / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealConicProblem {
    pub num_vars: usize,
    pub q: Vec<f64>,
    /// Sparse rows of `A`.
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub cones: Vec<RealCone>,
}

impl RealConicProblem {
    /// `Aᵀz`.
    pub fn a_transpose_times(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for (row, zr) in self.a.iter().zip(z) {
            for &(c, v) in row {
                out[c] += v * zr;
            }
        }
        out
    }

    pub fn a_times(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }
}

/// Bookkeeping to map real solutions back to Hermitian matrices.
#[derive(Debug, Clone)]
pub struct RealifyMap {
    pub(crate) var_offset: Vec<usize>,
    pub(crate) var_dim: Vec<usize>,
    /// Real and imaginary row of each complex equality, if emitted.
    pub(crate) eq_rows: Vec<[Option<usize>; 2]>,
    /// `(variable, first row)` of each PSD constraint.
    pub(crate) psd_rows: Vec<(VarId, usize)>,
}

/// Offsets for the real parametrization of one `d×d` Hermitian variable.
#[derive(Debug, Clone)]
pub(crate) struct HermLayout {
    d: usize,
    re: Vec<usize>,
    im: Vec<usize>,
}

impl HermLayout {
    pub(crate) fn new(d: usize) -> Self {
        let mut re = vec![usize::MAX; d * d];
        let mut im = vec![usize::MAX; d * d];
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                re[i * d + j] = k;
                k += 1;
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                im[i * d + j] = k;
                k += 1;
            }
        }
        debug_assert_eq!(k, d * d);
        Self { d, re, im }
    }

    /// `X_ij = Σ re-part + i Σ im-part` over local parameter indices.
    pub(crate) fn entry(&self, i: usize, j: usize) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        let d = self.d;
        if i == j {
            (Some((self.re[i * d + i], 1.0)), None)
        } else if i < j {
            (Some((self.re[i * d + j], 1.0)), Some((self.im[i * d + j], 1.0)))
        } else {
            (Some((self.re[j * d + i], 1.0)), Some((self.im[j * d + i], -1.0)))
        }
    }

    pub(crate) fn assemble(&self, x: &[f64]) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |i, j| {
            let (re, im) = self.entry(i, j);
            let r = re.map_or(0.0, |(k, c)| c * x[k]);
            let m = im.map_or(0.0, |(k, c)| c * x[k]);
            Complex64::new(r, m)
        })
    }
}

/// Real and imaginary parts of `c · X_ij` as sparse rows over global indices.
fn term_parts(layout: &HermLayout, offset: usize, i: usize, j: usize, c: Complex64, re_acc: &mut BTreeMap<usize, f64>, im_acc: &mut BTreeMap<usize, f64>) {
    let (re, im) = layout.entry(i, j);
    if let Some((k, s)) = re {
        // c · Re X contributes (cr + i ci) · s · a
        *re_acc.entry(offset + k).or_default() += c.re * s;
        *im_acc.entry(offset + k).or_default() += c.im * s;
    }
    if let Some((k, s)) = im {
        // c · i Im X contributes (i cr - ci) · s · b
        *re_acc.entry(offset + k).or_default() -= c.im * s;
        *im_acc.entry(offset + k).or_default() += c.re * s;
    }
}

fn finish(acc: BTreeMap<usize, f64>) -> Vec<(usize, f64)> {
    acc.into_iter().filter(|(_, v)| *v != 0.0).collect()
}

pub fn realify(problem: &SdpProblem) -> Result<(RealConicProblem, RealifyMap)> {
    problem.validate()?;
    let layouts: Vec<HermLayout> = problem.variables.iter().map(|v| HermLayout::new(v.dim)).collect();
    let mut var_offset = Vec::with_capacity(layouts.len());
    let mut n = 0;
    for v in &problem.variables {
        var_offset.push(n);
        n += v.dim * v.dim;
    }

    let mut a: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut eq_rows = Vec::with_capacity(problem.equalities.len());
    for eq in &problem.equalities {
        let mut re_acc = BTreeMap::new();
        let mut im_acc = BTreeMap::new();
        for t in &eq.lhs.terms {
            term_parts(&layouts[t.var.0], var_offset[t.var.0], t.row, t.col, t.coeff, &mut re_acc, &mut im_acc);
        }
        let mut slots = [None, None];
        for (slot, (row, rhs)) in [(finish(re_acc), eq.rhs.re), (finish(im_acc), eq.rhs.im)].into_iter().enumerate() {
            if row.is_empty() && rhs.abs() <= 1e-14 {
                continue;
            }
            slots[slot] = Some(a.len());
            a.push(row);
            b.push(rhs);
        }
        eq_rows.push(slots);
    }
    let mut cones = Vec::new();
    if !a.is_empty() {
        cones.push(RealCone::Zero(a.len()));
    }

    let mut psd_rows = Vec::new();
    let scalars: Vec<usize> = (0..problem.variables.len())
        .filter(|&v| problem.variables[v].psd && problem.variables[v].dim == 1)
        .collect();
    if !scalars.is_empty() {
        for &v in &scalars {
            psd_rows.push((VarId(v), a.len()));
            a.push(vec![(var_offset[v], -1.0)]);
            b.push(0.0);
        }
        cones.push(RealCone::Nonnegative(scalars.len()));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for (v, var) in problem.variables.iter().enumerate() {
        if !var.psd || var.dim == 1 {
            continue;
        }
        let d = var.dim;
        let layout = &layouts[v];
        psd_rows.push((VarId(v), a.len()));
        for col in 0..2 * d {
            for row in 0..=col {
                // M = [[Re X, -Im X], [Im X, Re X]]
                let (i, j) = (row % d, col % d);
                let (re, im) = layout.entry(i, j);
                let (use_im, sign) = match (row < d, col < d) {
                    (true, true) | (false, false) => (false, 1.0),
                    (true, false) => (true, -1.0),
                    (false, true) => (true, 1.0),
                };
                let part = if use_im { im } else { re };
                let scale = if row == col { 1.0 } else { sqrt2 };
                let entry = match part {
                    Some((k, c)) => vec![(var_offset[v] + k, -sign * c * scale)],
                    None => Vec::new(),
                };
                a.push(entry);
                b.push(0.0);
            }
        }
        cones.push(RealCone::PsdTriangle(2 * d));
    }

    let obj_sign = match problem.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize | Sense::Feasibility => 1.0,
    };
    let mut q = vec![0.0; n];
    if problem.sense != Sense::Feasibility {
        for t in &problem.objective.terms {
            let mut re_acc = BTreeMap::new();
            let mut im_acc = BTreeMap::new();
            term_parts(&layouts[t.var.0], var_offset[t.var.0], t.row, t.col, t.coeff, &mut re_acc, &mut im_acc);
            for (k, v) in re_acc {
                q[k] += obj_sign * v;
            }
        }
    }
    if a.is_empty() {
        return Err(Error::InvalidProblem("problem has no constraints".into()));
    }
    Ok((
        RealConicProblem {
            num_vars: n,
            q,
            a,
            b,
            cones,
        },
        RealifyMap {
            var_offset,
            var_dim: problem.variables.iter().map(|v| v.dim).collect(),
            eq_rows,
            psd_rows,
        },
    ))
}

impl RealifyMap {
    pub(crate) fn primal(&self, v: usize, x: &[f64]) -> CMat {
        let d = self.var_dim[v];
        HermLayout::new(d).assemble(&x[self.var_offset[v]..self.var_offset[v] + d * d])
    }

    /// Hermitian `Y` with `Re tr(Y X) = ⟨z, svec M(X)⟩` for the PSD block of `v`.
    pub(crate) fn psd_dual(&self, v: VarId, start: usize, z: &[f64]) -> CMat {
        let d = self.var_dim[v.0];
        if d == 1 {
            return CMat::from_fn(1, 1, |_, _| Complex64::new(z[start], 0.0));
        }
        let zm = unpack_svec(&z[start..start + d * (2 * d + 1)], 2 * d);
        CMat::from_fn(d, d, |i, j| {
            let p = zm[i][j] + zm[i + d][j + d];
            let q = zm[i + d][j] - zm[i][j + d];
            Complex64::new(p, q)
        })
    }
}

/// Symmetric matrix from a column-major upper-triangular `√2`-scaled vector.
pub(crate) fn unpack_svec(v: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    let mut idx = 0;
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    for col in 0..k {
        for row in 0..=col {
            let val = if row == col { v[idx] } else { v[idx] * inv };
            m[row][col] = val;
            m[col][row] = val;
            idx += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::{LinExpr, SdpBuilder};

    #[test]
    fn layout_round_trip() {
        let l = HermLayout::new(3);
        let x: Vec<f64> = (0..9).map(|k| k as f64 + 1.0).collect();
        let m = l.assemble(&x);
        assert!(m.is_hermitian(0.0));
        let mut seen: Vec<usize> = l.re.iter().chain(&l.im).copied().filter(|&k| k != usize::MAX).collect();
        seen.sort();
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn svec_unpack_matches_layout() {
        let m = unpack_svec(&[1.0, 2.0 * std::f64::consts::SQRT_2, 3.0], 2);
        let want = [[1.0, 2.0], [2.0, 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn complex_coefficient_rows() {
        // (1 + 2i) X_01 = 3 + 4i  with X_01 = a + ib
        let mut b = SdpBuilder::new();
        let x = b.var("X", 2, false);
        let mut lhs = LinExpr::entry(x, 0, 1);
        lhs = lhs.scaled(Complex64::new(1.0, 2.0));
        b.eq(&lhs, &LinExpr::constant(Complex64::new(3.0, 4.0)));
        let (p, map) = realify(&b.build()).unwrap();
        let [re, im] = map.eq_rows[0];
        let (re, im) = (re.unwrap(), im.unwrap());
        // real: a - 2b = 3, imaginary: 2a + b = 4
        let l = HermLayout::new(2);
        let a_idx = l.re[1];
        let b_idx = l.im[1];
        let get = |row: &Vec<(usize, f64)>, k: usize| row.iter().find(|e| e.0 == k).map_or(0.0, |e| e.1);
        assert_eq!(get(&p.a[re], a_idx), 1.0);
        assert_eq!(get(&p.a[re], b_idx), -2.0);
        assert_eq!(get(&p.a[im], a_idx), 2.0);
        assert_eq!(get(&p.a[im], b_idx), 1.0);
        assert_eq!((p.b[re], p.b[im]), (3.0, 4.0));
    }
}
