//! LPV state-space, input-output and kernel representations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::schedcalc::{CoeffMatrix, PolyCoeff};
use crate::signals::Trajectory;

/// One invariant violation found by `validate`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Violation {
    Shape {
        matrix: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    SchedulingDimension {
        matrix: String,
        expected: usize,
        found: usize,
    },
    /// Entry of `a_i`/`b_i` depends on an offset other than `-i`.
    OffsetLocality {
        matrix: String,
        row: usize,
        col: usize,
        offset: i32,
        required: i32,
    },
    /// `n_a >= n_b >= 1` does not hold.
    Order {
        n_a: usize,
        n_b: usize,
    },
    ZeroLeadingCoefficient {
        order: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape {
                matrix,
                expected,
                found,
            } => write!(
                f,
                "{matrix} has shape {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::SchedulingDimension {
                matrix,
                expected,
                found,
            } => write!(f, "{matrix} uses n_p = {found}, expected {expected}"),
            Violation::OffsetLocality {
                matrix,
                row,
                col,
                offset,
                required,
            } => write!(
                f,
                "{matrix}[{row},{col}] depends on offset {offset}, only {required} allowed"
            ),
            Violation::Order { n_a, n_b } => {
                write!(
                    f,
                    "orders must satisfy n_a >= n_b >= 1, got n_a = {n_a}, n_b = {n_b}"
                )
            }
            Violation::ZeroLeadingCoefficient { order } => {
                write!(f, "leading coefficient r_{order} is identically zero")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidModel(format!(
                "{v} ({} violation(s))",
                self.violations.len()
            ))),
        }
    }

    fn shape(&mut self, name: &str, m: &CoeffMatrix, expected: (usize, usize), n_p: usize) {
        if m.shape() != expected {
            self.violations.push(Violation::Shape {
                matrix: name.into(),
                expected,
                found: m.shape(),
            });
        }
        if m.n_p() != n_p {
            self.violations.push(Violation::SchedulingDimension {
                matrix: name.into(),
                expected: n_p,
                found: m.n_p(),
            });
        }
    }
}

/// `q x = (A⋄p) x + (B⋄p) u,  y = (C⋄p) x + (D⋄p) u`.
///
/// Dimensions are read off the matrices: `n_x = rows(A)`, `n_u = cols(B)`,
/// `n_y = rows(C)`, `n_p` from `A`. Construction does not validate; call
/// [`LpvSsModel::validate`] or rely on the operations, which refuse invalid
/// models with `InvalidModel`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpvSsModel {
    a: CoeffMatrix,
    b: CoeffMatrix,
    c: CoeffMatrix,
    d: CoeffMatrix,
}

impl LpvSsModel {
    pub fn new(a: CoeffMatrix, b: CoeffMatrix, c: CoeffMatrix, d: CoeffMatrix) -> Self {
        Self { a, b, c, d }
    }

    /// LTI model embedded with scheduling dimension `n_p`.
    pub fn from_constant(
        n_p: usize,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
    ) -> Self {
        Self::new(
            CoeffMatrix::from_constant(n_p, a),
            CoeffMatrix::from_constant(n_p, b),
            CoeffMatrix::from_constant(n_p, c),
            CoeffMatrix::from_constant(n_p, d),
        )
    }

    pub fn a(&self) -> &CoeffMatrix {
        &self.a
    }
    pub fn b(&self) -> &CoeffMatrix {
        &self.b
    }
    pub fn c(&self) -> &CoeffMatrix {
        &self.c
    }
    pub fn d(&self) -> &CoeffMatrix {
        &self.d
    }
    pub fn n_x(&self) -> usize {
        self.a.rows()
    }
    pub fn n_u(&self) -> usize {
        self.b.cols()
    }
    pub fn n_y(&self) -> usize {
        self.c.rows()
    }
    pub fn n_p(&self) -> usize {
        self.a.n_p()
    }

    /// Offset hull over all four matrices.
    pub fn window(&self) -> Option<(i32, i32)> {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .filter_map(|m| m.window())
            .fold(None, |acc, (lo, hi)| match acc {
                None => Some((lo, hi)),
                Some((a, b)) => Some((a.min(lo), b.max(hi))),
            })
    }

    pub fn validate(&self) -> ValidationReport {
        let (nx, nu, ny, np) = (self.n_x(), self.n_u(), self.n_y(), self.n_p());
        let mut r = ValidationReport::default();
        r.shape("A", &self.a, (nx, nx), np);
        r.shape("B", &self.b, (nx, nu), np);
        r.shape("C", &self.c, (ny, nx), np);
        r.shape("D", &self.d, (ny, nu), np);
        r
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().into_result()
    }
}

/// `y(k) + Σ_{i=1}^{n_a} a_i y(k−i) = Σ_{i=1}^{n_b} b_i u(k−i)`, where
/// `a_i`, `b_i` depend on scheduling at offset `−i` only.
#[derive(Clone, Debug, PartialEq)]
pub struct LpvIoModel {
    n_u: usize,
    n_y: usize,
    n_p: usize,
    a: Vec<CoeffMatrix>,
    b: Vec<CoeffMatrix>,
}

impl LpvIoModel {
    pub fn new(
        n_u: usize,
        n_y: usize,
        n_p: usize,
        a: Vec<CoeffMatrix>,
        b: Vec<CoeffMatrix>,
    ) -> Self {
        Self {
            n_u,
            n_y,
            n_p,
            a,
            b,
        }
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn n_a(&self) -> usize {
        self.a.len()
    }
    pub fn n_b(&self) -> usize {
        self.b.len()
    }
    /// `a_1 … a_{n_a}`.
    pub fn a_coeffs(&self) -> &[CoeffMatrix] {
        &self.a
    }
    /// `b_1 … b_{n_b}`.
    pub fn b_coeffs(&self) -> &[CoeffMatrix] {
        &self.b
    }

    /// All coefficient entries have degree at most one.
    pub fn is_affine(&self) -> bool {
        self.a.iter().chain(&self.b).all(|m| m.degree() <= 1)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        if !(self.n_a() >= self.n_b() && self.n_b() >= 1) {
            r.violations.push(Violation::Order {
                n_a: self.n_a(),
                n_b: self.n_b(),
            });
        }
        for (name, list, cols) in [("a", &self.a, self.n_y), ("b", &self.b, self.n_u)] {
            for (idx, m) in list.iter().enumerate() {
                let i = idx + 1;
                let label = format!("{name}_{i}");
                r.shape(&label, m, (self.n_y, cols), self.n_p);
                for row in 0..m.rows() {
                    for col in 0..m.cols() {
                        let entry = m.get(row, col);
                        for t in entry.terms() {
                            for (v, _) in t.monomial.factors() {
                                if v.offset != -(i as i32) {
                                    r.violations.push(Violation::OffsetLocality {
                                        matrix: label.clone(),
                                        row,
                                        col,
                                        offset: v.offset,
                                        required: -(i as i32),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        r
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().into_result()
    }
}

/// `R(ξ) = Σ_{j=0}^{n} r_j ξ^j`, acting as `(R(q)⋄p) w = Σ_j (r_j⋄p) w(k+j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelRep {
    coeffs: Vec<CoeffMatrix>,
}

impl KernelRep {
    pub fn new(coeffs: Vec<CoeffMatrix>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[CoeffMatrix] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let Some(first) = self.coeffs.first() else {
            r.violations
                .push(Violation::ZeroLeadingCoefficient { order: 0 });
            return r;
        };
        for (j, m) in self.coeffs.iter().enumerate() {
            r.shape(&format!("r_{j}"), m, first.shape(), first.n_p());
        }
        if self.coeffs.last().is_some_and(CoeffMatrix::is_zero) {
            r.violations.push(Violation::ZeroLeadingCoefficient {
                order: self.order(),
            });
        }
        r
    }

    /// `((R(q)⋄p) w)(k)`.
    pub fn residual_at(&self, w: &Trajectory, p: &Trajectory, k: i64) -> Result<DVector<f64>> {
        let first = self
            .coeffs
            .first()
            .ok_or_else(|| Error::InvalidModel("empty kernel".into()))?;
        if w.dim() != first.cols() {
            return Err(Error::DimensionMismatch {
                what: "kernel signal",
                expected: first.cols(),
                found: w.dim(),
            });
        }
        let mut acc = DVector::zeros(first.rows());
        for (j, r) in self.coeffs.iter().enumerate() {
            let wk = DVector::from_column_slice(w.at(k + j as i64)?);
            acc += r.eval(p, k)? * wk;
        }
        Ok(acc)
    }

    /// Largest `|(R(q)⋄p) w|` over every `k` where all needed samples exist,
    /// together with the number of time steps checked.
    pub fn max_residual(&self, w: &Trajectory, p: &Trajectory) -> Result<(f64, usize)> {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for k in w.t_start()..=w.t_end() - self.order() as i64 {
            match self.residual_at(w, p, k) {
                Ok(r) => {
                    worst = worst.max(r.amax());
                    checked += 1;
                }
                Err(Error::WindowOutOfRange { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok((worst, checked))
    }
}

/// Kernel form of an IO model with `w = col(u, y)`:
/// `R(ξ) = [−R_u(ξ) | R_y(ξ)]`, `R_y = I ξ^{n_a} + Σ ã_i ξ^{n_a−i}`,
/// `R_u = Σ b̃_i ξ^{n_a−i}`, where `ã_i`, `b̃_i` are the coefficients shifted
/// forward by `n_a`. Row `k` of the kernel equation is the difference
/// equation at time `k + n_a`.
pub fn io_to_kernel(model: &LpvIoModel) -> Result<KernelRep> {
    model.ensure_valid()?;
    let (nu, ny, np, na) = (model.n_u(), model.n_y(), model.n_p(), model.n_a());
    let mut coeffs: Vec<CoeffMatrix> = (0..=na)
        .map(|_| CoeffMatrix::zeros(np, ny, nu + ny))
        .collect();
    let place = |target: &CoeffMatrix, block: &CoeffMatrix, col0: usize| -> Result<CoeffMatrix> {
        CoeffMatrix::from_fn(np, ny, nu + ny, |i, j| {
            let base = target.get(i, j);
            if j >= col0 && j < col0 + block.cols() {
                base.try_add(block.get(i, j - col0))
            } else {
                Ok(base.clone())
            }
        })
    };
    coeffs[na] = place(&coeffs[na], &CoeffMatrix::identity(np, ny), nu)?;
    for (idx, a) in model.a_coeffs().iter().enumerate() {
        let j = na - (idx + 1);
        coeffs[j] = place(&coeffs[j], &a.shift_by(na as i32), nu)?;
    }
    for (idx, b) in model.b_coeffs().iter().enumerate() {
        let j = na - (idx + 1);
        coeffs[j] = place(&coeffs[j], &b.shift_by(na as i32).neg(), 0)?;
    }
    Ok(KernelRep::new(coeffs))
}

/// Coefficients of the SISO example with `n_a = n_b = n_p = 2`; each row is
/// `[c_0, c_1, c_2]` for `c_0 + c_1 p_1(k−i) + c_2 p_2(k−i)`.
pub const VERHOEK_A: [[f64; 3]; 2] = [[1.0, -0.5, -0.1], [0.5, -0.7, -0.1]];
pub const VERHOEK_B: [[f64; 3]; 2] = [[0.5, -0.4, 0.01], [0.2, -0.3, -0.2]];

/// The SISO shifted-affine example system.
pub fn example_verhoek() -> LpvIoModel {
    let coeff = |c: &[f64; 3], i: usize| {
        let entry = PolyCoeff::affine(2, c, -(i as i32)).expect("three coefficients for n_p = 2");
        CoeffMatrix::from_entries(2, 1, 1, alloc::vec![entry]).expect("1x1")
    };
    let a = VERHOEK_A
        .iter()
        .enumerate()
        .map(|(i, c)| coeff(c, i + 1))
        .collect();
    let b = VERHOEK_B
        .iter()
        .enumerate()
        .map(|(i, c)| coeff(c, i + 1))
        .collect();
    LpvIoModel::new(1, 1, 2, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedcalc::{Monomial, SchedVar};

    fn p_const(v: [f64; 2], t0: i64, len: usize) -> Trajectory {
        Trajectory::from_fn(2, t0, len, |_, o| o.copy_from_slice(&v)).unwrap()
    }

    #[test]
    fn verhoek_example_is_valid_and_matches_coefficients() {
        let m = example_verhoek();
        assert!(m.validate().is_valid());
        assert_eq!((m.n_a(), m.n_b(), m.n_p()), (2, 2, 2));
        assert!(m.is_affine());
        // a_1 at p(k−1) = (0, 0)
        let p0 = p_const([0.0, 0.0], 0, 3);
        assert_eq!(m.a_coeffs()[0].eval(&p0, 1).unwrap()[(0, 0)], 1.0);
        // b_2 at p(k−2) = (1, 1): 0.2 − 0.3 − 0.2
        let p1 = p_const([1.0, 1.0], 0, 3);
        let b2 = m.b_coeffs()[1].eval(&p1, 2).unwrap()[(0, 0)];
        assert!((b2 - (-0.3)).abs() < 1e-15);
    }

    #[test]
    fn offset_locality_violation_is_flagged() {
        let mut a = example_verhoek().a_coeffs().to_vec();
        a[0] = CoeffMatrix::from_entries(2, 1, 1, alloc::vec![PolyCoeff::var(2, 1, 0).unwrap()])
            .unwrap();
        let m = LpvIoModel::new(1, 1, 2, a, example_verhoek().b_coeffs().to_vec());
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::OffsetLocality {
                offset: 0,
                required: -1,
                ..
            }
        ));
        assert!(matches!(io_to_kernel(&m), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn order_and_shape_violations() {
        let one = CoeffMatrix::identity(0, 1);
        let m = LpvIoModel::new(
            1,
            1,
            0,
            alloc::vec![one.clone()],
            alloc::vec![one.clone(), one.clone()],
        );
        assert!(m
            .validate()
            .violations
            .contains(&Violation::Order { n_a: 1, n_b: 2 }));

        let ss = LpvSsModel::new(
            CoeffMatrix::identity(1, 2),
            CoeffMatrix::zeros(1, 3, 1),
            CoeffMatrix::zeros(1, 1, 2),
            CoeffMatrix::zeros(0, 1, 1),
        );
        let v = ss.validate().violations;
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::Shape { matrix, .. } if matrix == "B")));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::SchedulingDimension { matrix, .. } if matrix == "D")));
        assert!(ss.ensure_valid().is_err());
    }

    #[test]
    fn static_model_kernel() {
        // n_a = 1, a_1 = 0, b_1 = 3  →  y(k+1) − 3 u(k) = 0
        let m = LpvIoModel::new(
            1,
            1,
            0,
            alloc::vec![CoeffMatrix::zeros(0, 1, 1)],
            alloc::vec![CoeffMatrix::from_constant(
                0,
                &DMatrix::from_element(1, 1, 3.0)
            )],
        );
        let k = io_to_kernel(&m).unwrap();
        assert_eq!(k.order(), 1);
        assert_eq!(k.coeffs()[0].get(0, 0).constant_value(), Some(-3.0));
        assert_eq!(k.coeffs()[0].get(0, 1).constant_value(), Some(0.0));
        assert_eq!(k.coeffs()[1].get(0, 0).constant_value(), Some(0.0));
        assert_eq!(k.coeffs()[1].get(0, 1).constant_value(), Some(1.0));
        assert!(k.validate().is_valid());
    }

    #[test]
    fn verhoek_kernel_shifts_coefficients() {
        let k = io_to_kernel(&example_verhoek()).unwrap();
        assert_eq!(k.order(), 2);
        // r_1 y-part is a_1 shifted by 2: depends on p(k+1)
        let y1 = k.coeffs()[1].get(0, 1);
        let want = PolyCoeff::from_terms(
            2,
            [
                (1.0, Monomial::one()),
                (-0.5, Monomial::var(SchedVar::new(1, 1))),
                (-0.1, Monomial::var(SchedVar::new(2, 1))),
            ],
        )
        .unwrap();
        assert_eq!(y1, &want);
        // r_0 u-part is −b_2 shifted by 2: depends on p(k)
        assert_eq!(k.coeffs()[0].get(0, 0).window(), Some((0, 0)));
        assert_eq!(k.coeffs()[0].get(0, 0).terms()[0].coeff, -0.2);
    }

    #[test]
    fn empty_kernel_is_flagged() {
        assert!(!KernelRep::new(Vec::new()).validate().is_valid());
        let zero_lead = KernelRep::new(alloc::vec![
            CoeffMatrix::identity(0, 1),
            CoeffMatrix::zeros(0, 1, 1)
        ]);
        assert!(zero_lead
            .validate()
            .violations
            .contains(&Violation::ZeroLeadingCoefficient { order: 1 }));
    }
}
