//! Coefficient functions of shifted scheduling samples.
//!
//! A [`PolyCoeff`] is a real polynomial in variables `p_j(k + δ)`; evaluating
//! it along a scheduling trajectory at time `k` is the `⋄` operation. The
//! forward shift `→r` adds one to every offset, so that
//! `(→r ⋄ p)(k) = (r ⋄ p)(k + 1)`. Polynomials are closed under `+`, `·` and
//! shifts, which is all the observability, reachability and impulse-response
//! constructions need.
//!
//! Canonical form: monomial factors sorted by `(component, offset)` with
//! merged powers, terms sorted by monomial with merged coefficients, and
//! terms whose coefficient is exactly zero removed.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signals::Trajectory;

/// The variable `p_component(k + offset)`; `component` is one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchedVar {
    pub component: usize,
    pub offset: i32,
}

impl SchedVar {
    pub const fn new(component: usize, offset: i32) -> Self {
        Self { component, offset }
    }
}

/// Product of powers of scheduling variables. The empty product is `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    factors: Vec<(SchedVar, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: SchedVar) -> Self {
        Self {
            factors: alloc::vec![(v, 1)],
        }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (SchedVar, u32)>) -> Self {
        let mut f: Vec<_> = factors.into_iter().filter(|(_, e)| *e > 0).collect();
        f.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(SchedVar, u32)> = Vec::with_capacity(f.len());
        for (v, e) in f {
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Self { factors: merged }
    }

    pub fn factors(&self) -> &[(SchedVar, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_factors(self.factors.iter().chain(other.factors.iter()).copied())
    }

    fn shifted(&self, d: i32) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .map(|(v, e)| (SchedVar::new(v.component, v.offset + d), *e))
                .collect(),
        }
    }

    fn offset_hull(&self) -> Option<(i32, i32)> {
        hull(self.factors.iter().map(|(v, _)| v.offset))
    }

    fn eval_with(&self, value: &impl Fn(SchedVar) -> f64) -> f64 {
        let mut acc = 1.0;
        for (v, e) in &self.factors {
            let x = value(*v);
            for _ in 0..*e {
                acc *= x;
            }
        }
        acc
    }
}

fn hull(offsets: impl Iterator<Item = i32>) -> Option<(i32, i32)> {
    offsets.fold(None, |acc, o| match acc {
        None => Some((o, o)),
        Some((lo, hi)) => Some((lo.min(o), hi.max(o))),
    })
}

fn merge_hull(a: Option<(i32, i32)>, b: Option<(i32, i32)>) -> Option<(i32, i32)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub monomial: Monomial,
}

/// A scalar coefficient function `r`, polynomial in shifted scheduling
/// samples of an `n_p`-dimensional scheduling signal.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeff {
    n_p: usize,
    terms: Vec<Term>,
    window: Option<(i32, i32)>,
}

impl PolyCoeff {
    pub fn zero(n_p: usize) -> Self {
        Self {
            n_p,
            terms: Vec::new(),
            window: None,
        }
    }

    pub fn constant(n_p: usize, c: f64) -> Self {
        Self::normalized(
            n_p,
            alloc::vec![Term {
                coeff: c,
                monomial: Monomial::one(),
            }],
        )
    }

    /// The single variable `p_component(k + offset)`.
    pub fn var(n_p: usize, component: usize, offset: i32) -> Result<Self> {
        Self::from_terms(
            n_p,
            [(1.0, Monomial::var(SchedVar::new(component, offset)))],
        )
    }

    /// `c[0] + Σ_j c[j] p_j(k + offset)`, with `c.len() == n_p + 1`.
    pub fn affine(n_p: usize, c: &[f64], offset: i32) -> Result<Self> {
        if c.len() != n_p + 1 {
            return Err(Error::DimensionMismatch {
                what: "affine coefficient list",
                expected: n_p + 1,
                found: c.len(),
            });
        }
        let mut terms = alloc::vec![(c[0], Monomial::one())];
        for (j, cj) in c[1..].iter().enumerate() {
            terms.push((*cj, Monomial::var(SchedVar::new(j + 1, offset))));
        }
        Self::from_terms(n_p, terms)
    }

    /// Builds and normalizes; rejects components outside `[1, n_p]`.
    pub fn from_terms(
        n_p: usize,
        terms: impl IntoIterator<Item = (f64, Monomial)>,
    ) -> Result<Self> {
        let mut out = Vec::new();
        for (coeff, monomial) in terms {
            if let Some((v, _)) = monomial
                .factors()
                .iter()
                .find(|(v, _)| v.component == 0 || v.component > n_p)
            {
                return Err(Error::InvalidShape(format!(
                    "scheduling component {} outside [1, {n_p}]",
                    v.component
                )));
            }
            out.push(Term { coeff, monomial });
        }
        Ok(Self::normalized(n_p, out))
    }

    fn normalized(n_p: usize, mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.monomial.cmp(&b.monomial));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.monomial == t.monomial => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        let window = merged
            .iter()
            .fold(None, |acc, t| merge_hull(acc, t.monomial.offset_hull()));
        Self {
            n_p,
            terms: merged,
            window,
        }
    }

    /// Re-normalizes; the result equals `self` for any value built through
    /// this module.
    pub fn normalize(&self) -> Self {
        Self::normalized(self.n_p, self.terms.clone())
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Tight `[δ_min, δ_max]` hull of offsets; `None` for constants.
    pub fn window(&self) -> Option<(i32, i32)> {
        self.window
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.window.is_none()
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [t] if t.monomial.is_one() => Some(t.coeff),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.monomial.degree())
            .max()
            .unwrap_or(0)
    }

    fn check_np(&self, other: &Self) -> Result<()> {
        if self.n_p != other.n_p {
            return Err(Error::DimensionMismatch {
                what: "scheduling dimension",
                expected: self.n_p,
                found: other.n_p,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_np(other)?;
        let terms = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .cloned()
            .collect();
        Ok(Self::normalized(self.n_p, terms))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_np(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    monomial: a.monomial.mul(&b.monomial),
                });
            }
        }
        Ok(Self::normalized(self.n_p, terms))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: c * t.coeff,
                monomial: t.monomial.clone(),
            })
            .collect();
        Self::normalized(self.n_p, terms)
    }

    /// Adds `d` to every offset: `(shift_by(r, d) ⋄ p)(k) = (r ⋄ p)(k + d)`.
    pub fn shift_by(&self, d: i32) -> Self {
        if d == 0 || self.is_constant() {
            return self.clone();
        }
        Self {
            n_p: self.n_p,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff,
                    monomial: t.monomial.shifted(d),
                })
                .collect(),
            window: self.window.map(|(a, b)| (a + d, b + d)),
        }
    }

    /// `→r`.
    pub fn shift_fwd(&self) -> Self {
        self.shift_by(1)
    }

    /// `←r`.
    pub fn shift_bwd(&self) -> Self {
        self.shift_by(-1)
    }

    /// `(r ⋄ p)(k)`.
    pub fn eval_diamond(&self, p: &Trajectory, k: i64) -> Result<f64> {
        if p.dim() != self.n_p {
            return Err(Error::DimensionMismatch {
                what: "scheduling trajectory",
                expected: self.n_p,
                found: p.dim(),
            });
        }
        if let Some((lo, hi)) = self.window {
            p.require_window(k + lo as i64, k + hi as i64)?;
        }
        Ok(self.eval_with(|v| p.sample(k + v.offset as i64).unwrap_or_default()[v.component - 1]))
    }

    /// Evaluates with an arbitrary assignment of the variables.
    pub fn eval_with(&self, value: impl Fn(SchedVar) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.monomial.eval_with(&value))
            .sum()
    }
}

impl fmt::Display for PolyCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            for (v, e) in t.monomial.factors() {
                write!(f, "*p{}(k{:+})", v.component, v.offset)?;
                if *e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Matrix of coefficient functions sharing one scheduling dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMatrix {
    rows: usize,
    cols: usize,
    n_p: usize,
    entries: Vec<PolyCoeff>,
}

impl CoeffMatrix {
    pub fn zeros(n_p: usize, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            n_p,
            entries: alloc::vec![PolyCoeff::zero(n_p); rows * cols],
        }
    }

    pub fn identity(n_p: usize, n: usize) -> Self {
        let mut m = Self::zeros(n_p, n, n);
        for i in 0..n {
            m.entries[i * n + i] = PolyCoeff::constant(n_p, 1.0);
        }
        m
    }

    pub fn from_constant(n_p: usize, m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(PolyCoeff::constant(n_p, m[(i, j)]));
            }
        }
        Self {
            rows,
            cols,
            n_p,
            entries,
        }
    }

    /// Row-major entries; every entry must have scheduling dimension `n_p`.
    pub fn from_entries(
        n_p: usize,
        rows: usize,
        cols: usize,
        entries: Vec<PolyCoeff>,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(e) = entries.iter().find(|e| e.n_p() != n_p) {
            return Err(Error::DimensionMismatch {
                what: "entry scheduling dimension",
                expected: n_p,
                found: e.n_p(),
            });
        }
        Ok(Self {
            rows,
            cols,
            n_p,
            entries,
        })
    }

    pub fn from_fn(
        n_p: usize,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<PolyCoeff>,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j)?);
            }
        }
        Self::from_entries(n_p, rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn get(&self, i: usize, j: usize) -> &PolyCoeff {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[PolyCoeff] {
        &self.entries
    }

    pub fn window(&self) -> Option<(i32, i32)> {
        self.entries
            .iter()
            .fold(None, |acc, e| merge_hull(acc, e.window()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(PolyCoeff::is_zero)
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(PolyCoeff::is_constant)
    }

    pub fn degree(&self) -> u32 {
        self.entries
            .iter()
            .map(PolyCoeff::degree)
            .max()
            .unwrap_or(0)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_p != other.n_p {
            return Err(Error::DimensionMismatch {
                what: "scheduling dimension",
                expected: self.n_p,
                found: other.n_p,
            });
        }
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                what: "matrix shape",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(Self { entries, ..*self })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_p != other.n_p {
            return Err(Error::DimensionMismatch {
                what: "scheduling dimension",
                expected: self.n_p,
                found: other.n_p,
            });
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "inner matrix dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        Self::from_fn(self.n_p, self.rows, other.cols, |i, j| {
            let mut acc = PolyCoeff::zero(self.n_p);
            for l in 0..self.cols {
                let (a, b) = (self.get(i, l), other.get(l, j));
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc = acc.try_add(&a.try_mul(b)?)?;
            }
            Ok(acc)
        })
    }

    pub fn neg(&self) -> Self {
        self.map(PolyCoeff::neg)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn shift_by(&self, d: i32) -> Self {
        self.map(|e| e.shift_by(d))
    }

    pub fn shift_fwd(&self) -> Self {
        self.shift_by(1)
    }

    pub fn shift_bwd(&self) -> Self {
        self.shift_by(-1)
    }

    fn map(&self, f: impl Fn(&PolyCoeff) -> PolyCoeff) -> Self {
        Self {
            entries: self.entries.iter().map(f).collect(),
            ..*self
        }
    }

    /// `(M ⋄ p)(k)`.
    pub fn eval(&self, p: &Trajectory, k: i64) -> Result<DMatrix<f64>> {
        if p.dim() != self.n_p {
            return Err(Error::DimensionMismatch {
                what: "scheduling trajectory",
                expected: self.n_p,
                found: p.dim(),
            });
        }
        if let Some((lo, hi)) = self.window() {
            p.require_window(k + lo as i64, k + hi as i64)?;
        }
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).eval_diamond(p, k)?;
            }
        }
        Ok(out)
    }

    pub fn eval_with(&self, value: impl Fn(SchedVar) -> f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).eval_with(&value)
        })
    }

    /// Stacks blocks vertically; all blocks need the same column count.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidShape("vstack of no blocks".into()))?;
        let mut entries = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != first.cols || b.n_p != first.n_p {
                return Err(Error::DimensionMismatch {
                    what: "vstack block columns",
                    expected: first.cols,
                    found: b.cols,
                });
            }
            entries.extend(b.entries.iter().cloned());
            rows += b.rows;
        }
        Self::from_entries(first.n_p, rows, first.cols, entries)
    }

    /// Stacks blocks horizontally; all blocks need the same row count.
    pub fn hstack(blocks: &[Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidShape("hstack of no blocks".into()))?;
        if let Some(b) = blocks
            .iter()
            .find(|b| b.rows != first.rows || b.n_p != first.n_p)
        {
            return Err(Error::DimensionMismatch {
                what: "hstack block rows",
                expected: first.rows,
                found: b.rows,
            });
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut entries = Vec::with_capacity(first.rows * cols);
        for i in 0..first.rows {
            for b in blocks {
                entries.extend(b.entries[i * b.cols..(i + 1) * b.cols].iter().cloned());
            }
        }
        Self::from_entries(first.n_p, first.rows, cols, entries)
    }

    /// Copy of the `rows × cols` block starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<Self> {
        if r0 + rows > self.rows || c0 + cols > self.cols {
            return Err(Error::InvalidShape(format!(
                "block {rows}x{cols} at ({r0}, {c0}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        Self::from_fn(self.n_p, rows, cols, |i, j| {
            Ok(self.get(r0 + i, c0 + j).clone())
        })
    }
}
