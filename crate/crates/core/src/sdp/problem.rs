//! Hermitian SDP model and a small expression algebra for building it.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Subsystem;
use crate::sdp::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianVariable {
    pub id: String,
    pub dim: usize,
    pub psd: bool,
}

/// `coeff · X[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub var: VarId,
    pub row: usize,
    pub col: usize,
    pub coeff: Complex64,
}

/// Complex affine functional of variable entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<Term>,
    #[serde(default)]
    pub constant: Complex64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn entry(var: VarId, row: usize, col: usize) -> Self {
        Self {
            terms: vec![Term {
                var,
                row,
                col,
                coeff: Complex64::new(1.0, 0.0),
            }],
            constant: Complex64::new(0.0, 0.0),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
            constant: self.constant * s,
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: Complex64) {
        self.terms.extend(other.terms.iter().map(|t| Term {
            coeff: t.coeff * s,
            ..*t
        }));
        self.constant += other.constant * s;
    }

    /// `tr(C X)` for a variable `X` of dimension `C.rows()`.
    pub fn trace_with(c: &CMat, var: VarId) -> Self {
        let n = c.rows();
        let mut e = LinExpr::zero();
        for i in 0..n {
            for j in 0..n {
                let coeff = c.get(j, i);
                if coeff.norm() > 0.0 {
                    e.terms.push(Term {
                        var,
                        row: i,
                        col: j,
                        coeff,
                    });
                }
            }
        }
        e
    }

    /// Sums duplicate `(var, row, col)` terms and drops exact zeros.
    pub fn simplified(&self) -> Self {
        let mut acc: BTreeMap<(VarId, usize, usize), Complex64> = BTreeMap::new();
        for t in &self.terms {
            *acc.entry((t.var, t.row, t.col)).or_default() += t.coeff;
        }
        Self {
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|((var, row, col), coeff)| Term { var, row, col, coeff })
                .collect(),
            constant: self.constant,
        }
    }
}

impl Add for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, Complex64::new(1.0, 0.0));
        out
    }
}

impl Sub for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, Complex64::new(-1.0, 0.0));
        out
    }
}

/// Matrix whose entries are affine expressions in the SDP variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatExpr {
    rows: usize,
    cols: usize,
    entries: Vec<LinExpr>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![LinExpr::zero(); rows * cols],
        }
    }

    pub fn var(var: VarId, dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = LinExpr::entry(var, i, j);
            }
        }
        m
    }

    pub fn constant(c: &CMat) -> Self {
        let mut m = Self::zeros(c.rows(), c.cols());
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                m.entries[i * c.cols() + j] = LinExpr::constant(c.get(i, j));
            }
        }
        m
    }

    /// `s · 𝕀` with `s` a 1×1 variable.
    pub fn scalar_identity(var: VarId, dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = LinExpr::entry(var, 0, 0);
        }
        m
    }

    /// `e · C` for a scalar expression `e` and constant matrix `C`.
    pub fn scalar_times(e: &LinExpr, c: &CMat) -> Self {
        let mut m = Self::zeros(c.rows(), c.cols());
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                let z = c.get(i, j);
                if z.norm() > 0.0 {
                    m.entries[i * c.cols() + j] = e.scaled(z);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LinExpr {
        &self.entries[i * self.cols + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        &mut self.entries[i * self.cols + j]
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidShape(format!(
                "expression shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.add_scaled(b, Complex64::new(1.0, 0.0));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scaled(Complex64::new(s, 0.0))).collect(),
        }
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.rows.min(self.cols) {
            e.add_scaled(self.get(i, i), Complex64::new(1.0, 0.0));
        }
        e
    }

    /// `tr(C · self)`.
    pub fn trace_with(&self, c: &CMat) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = c.get(j, i);
                if z.norm() > 0.0 {
                    e.add_scaled(self.get(i, j), z);
                }
            }
        }
        e
    }

    /// `left · self · right`.
    pub fn sandwich(&self, left: &CMat, right: &CMat) -> Result<Self> {
        if left.cols() != self.rows || right.rows() != self.cols {
            return Err(Error::InvalidShape("sandwich dimension mismatch".into()));
        }
        let mut out = Self::zeros(left.rows(), right.cols());
        for i in 0..left.rows() {
            for j in 0..right.cols() {
                let slot = out.get_mut(i, j);
                for k in 0..self.rows {
                    let l_ik = left.get(i, k);
                    if l_ik.norm() == 0.0 {
                        continue;
                    }
                    for l in 0..self.cols {
                        let r_lj = right.get(l, j);
                        if r_lj.norm() == 0.0 {
                            continue;
                        }
                        slot.add_scaled(&self.entries[k * self.cols + l], l_ik * r_lj);
                    }
                }
            }
        }
        Ok(out)
    }

    fn factor_check(&self, d_a: usize, d_b: usize) -> Result<()> {
        if self.rows != self.cols || self.rows != d_a * d_b {
            return Err(Error::InvalidShape(format!(
                "{}x{} expression does not factor as {d_a}*{d_b}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn partial_trace(&self, d_a: usize, d_b: usize, subsystem: Subsystem) -> Result<Self> {
        self.factor_check(d_a, d_b)?;
        let one = Complex64::new(1.0, 0.0);
        Ok(match subsystem {
            Subsystem::A => {
                let mut out = Self::zeros(d_b, d_b);
                for b1 in 0..d_b {
                    for b2 in 0..d_b {
                        for a in 0..d_a {
                            let src = self.get(a * d_b + b1, a * d_b + b2).clone();
                            out.get_mut(b1, b2).add_scaled(&src, one);
                        }
                    }
                }
                out
            }
            Subsystem::B => {
                let mut out = Self::zeros(d_a, d_a);
                for a1 in 0..d_a {
                    for a2 in 0..d_a {
                        for b in 0..d_b {
                            let src = self.get(a1 * d_b + b, a2 * d_b + b).clone();
                            out.get_mut(a1, a2).add_scaled(&src, one);
                        }
                    }
                }
                out
            }
        })
    }

    pub fn partial_transpose(&self, d_a: usize, d_b: usize, subsystem: Subsystem) -> Result<Self> {
        self.factor_check(d_a, d_b)?;
        let n = d_a * d_b;
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let (a1, b1) = (r / d_b, r % d_b);
                let (a2, b2) = (c / d_b, c % d_b);
                let (sr, sc) = match subsystem {
                    Subsystem::A => (a2 * d_b + b1, a1 * d_b + b2),
                    Subsystem::B => (a1 * d_b + b2, a2 * d_b + b1),
                };
                *out.get_mut(r, c) = self.get(sr, sc).clone();
            }
        }
        Ok(out)
    }

    /// `self ⊗ 𝕀_d`, tensored on the right as the fast index.
    pub fn kron_identity(&self, d: usize) -> Self {
        let mut out = Self::zeros(self.rows * d, self.cols * d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..d {
                    *out.get_mut(i * d + k, j * d + k) = self.get(i, j).clone();
                }
            }
        }
        out
    }

    /// `𝕀_d ⊗ self`.
    pub fn identity_kron(&self, d: usize) -> Self {
        let mut out = Self::zeros(self.rows * d, self.cols * d);
        for k in 0..d {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    *out.get_mut(k * self.rows + i, k * self.cols + j) = self.get(i, j).clone();
                }
            }
        }
        out
    }

    /// Heisenberg action of the map whose normalized Choi matrix (on
    /// `out ⊗ in`) is `self`: `d_in · (tr_out[J (E ⊗ 𝕀)])ᵀ`.
    pub fn heisenberg_of_choi(&self, effect: &CMat, dim_in: usize, dim_out: usize) -> Result<Self> {
        self.factor_check(dim_out, dim_in)?;
        if effect.rows() != dim_out || !effect.is_square() {
            return Err(Error::InvalidShape("effect dimension mismatch".into()));
        }
        let scale = dim_in as f64;
        let mut out = Self::zeros(dim_in, dim_in);
        for n in 0..dim_in {
            for m in 0..dim_in {
                let slot = out.get_mut(n, m);
                for i in 0..dim_out {
                    for j in 0..dim_out {
                        let e_ji = effect.get(j, i);
                        if e_ji.norm() == 0.0 {
                            continue;
                        }
                        slot.add_scaled(&self.entries[(i * dim_in + m) * self.cols + j * dim_in + n], e_ji * scale);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
    Feasibility,
}

/// Position of an equality inside a named matrix constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSlot {
    pub name: String,
    pub dim: usize,
    pub row: usize,
    pub col: usize,
}

/// Complex equation `lhs = rhs`, i.e. two real equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equality {
    pub lhs: LinExpr,
    pub rhs: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSlot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub variables: Vec<HermitianVariable>,
    pub equalities: Vec<Equality>,
    pub objective: LinExpr,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for v in &self.variables {
            if v.dim == 0 {
                return Err(Error::InvalidProblem(format!("variable `{}` has dim 0", v.id)));
            }
            if !seen.insert(v.id.as_str()) {
                return Err(Error::InvalidProblem(format!("duplicate variable id `{}`", v.id)));
            }
        }
        let check = |e: &LinExpr| -> Result<()> {
            for t in &e.terms {
                let v = self
                    .variables
                    .get(t.var.0)
                    .ok_or_else(|| Error::InvalidProblem(format!("unknown variable {}", t.var.0)))?;
                if t.row >= v.dim || t.col >= v.dim {
                    return Err(Error::InvalidProblem(format!(
                        "entry ({}, {}) outside `{}` ({}x{})",
                        t.row, t.col, v.id, v.dim, v.dim
                    )));
                }
                if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                    return Err(Error::InvalidProblem("non-finite coefficient".into()));
                }
            }
            Ok(())
        };
        for eq in &self.equalities {
            check(&eq.lhs)?;
            if !(eq.rhs.re.is_finite() && eq.rhs.im.is_finite()) {
                return Err(Error::InvalidProblem("non-finite right-hand side".into()));
            }
        }
        check(&self.objective)
    }

    pub fn variable(&self, id: &str) -> Option<(VarId, &HermitianVariable)> {
        self.variables
            .iter()
            .enumerate()
            .find(|(_, v)| v.id == id)
            .map(|(i, v)| (VarId(i), v))
    }
}

/// Incremental construction of an [`SdpProblem`].
#[derive(Debug, Clone)]
pub struct SdpBuilder {
    problem: SdpProblem,
}

impl Default for SdpBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpBuilder {
    pub fn new() -> Self {
        Self {
            problem: SdpProblem {
                variables: Vec::new(),
                equalities: Vec::new(),
                objective: LinExpr::zero(),
                sense: Sense::Feasibility,
            },
        }
    }

    pub fn var(&mut self, id: impl Into<String>, dim: usize, psd: bool) -> VarId {
        self.problem.variables.push(HermitianVariable {
            id: id.into(),
            dim,
            psd,
        });
        VarId(self.problem.variables.len() - 1)
    }

    pub fn dim_of(&self, v: VarId) -> usize {
        self.problem.variables[v.0].dim
    }

    /// Scalar equation `lhs = rhs` (constants of both sides folded).
    pub fn eq(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        let diff = (lhs - rhs).simplified();
        self.problem.equalities.push(Equality {
            rhs: -diff.constant,
            lhs: LinExpr {
                terms: diff.terms,
                constant: Complex64::new(0.0, 0.0),
            },
            group: None,
        });
    }

    /// Hermitian matrix equation; only the upper triangle is emitted.
    pub fn eq_matrix(&mut self, lhs: &MatExpr, rhs: &MatExpr, group: &str) -> Result<()> {
        let diff = lhs.sub(rhs)?;
        if diff.rows() != diff.cols() {
            return Err(Error::InvalidShape("matrix equality must be square".into()));
        }
        let n = diff.rows();
        for i in 0..n {
            for j in i..n {
                let e = diff.get(i, j).simplified();
                self.problem.equalities.push(Equality {
                    rhs: -e.constant,
                    lhs: LinExpr {
                        terms: e.terms,
                        constant: Complex64::new(0.0, 0.0),
                    },
                    group: Some(GroupSlot {
                        name: group.to_string(),
                        dim: n,
                        row: i,
                        col: j,
                    }),
                });
            }
        }
        Ok(())
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.problem.objective = objective.simplified();
        self.problem.sense = Sense::Maximize;
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.problem.objective = objective.simplified();
        self.problem.sense = Sense::Minimize;
    }

    pub fn build(self) -> SdpProblem {
        self.problem
    }
}
