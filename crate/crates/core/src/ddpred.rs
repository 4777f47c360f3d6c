//! Data-driven prediction from one measured trajectory.
//!
//! Two routes are available. The Hankel route looks for a combination `g` of
//! data windows that matches the query on all known rows, with the
//! scheduling constraints `H_L(p ⊗ w) − P̄ H_L(w)` pinned to zero. The
//! annihilator route takes the left kernel of the extended data Hankel
//! matrix at a depth where the data has more windows than the behavior has
//! dimensions, evaluates every kernel row along the query scheduling at all
//! offsets and solves the resulting equations for the unknown outputs. It
//! needs far fewer samples than the Hankel route at depth `L`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    left_null_space, lstsq, rank_of_values, relative_singular_value, singular_values, RANK_TOL,
};
use crate::signals::{sched_block_diag, Trajectory};

/// A measured `(u, p, y)` sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct DataRecord {
    pub u: Trajectory,
    pub p: Trajectory,
    pub y: Trajectory,
    pub provenance: String,
}

impl DataRecord {
    pub fn new(u: Trajectory, p: Trajectory, y: Trajectory) -> Result<Self> {
        u.require_same_interval(&p)?;
        u.require_same_interval(&y)?;
        Ok(Self {
            u,
            p,
            y,
            provenance: String::new(),
        })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
    pub fn n_u(&self) -> usize {
        self.u.dim()
    }
    pub fn n_y(&self) -> usize {
        self.y.dim()
    }
    pub fn n_p(&self) -> usize {
        self.p.dim()
    }

    /// `col(w, p ⊗ w)` with `w = col(u, y)`.
    pub fn extended_io(&self) -> Result<Trajectory> {
        self.u.stack(&self.y)?.kron_extend(&self.p)
    }
}

/// Row ranges of the four stacked blocks of a [`PredictorSystem`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowPartition {
    pub u: Range<usize>,
    pub u_constraint: Range<usize>,
    pub y: Range<usize>,
    pub y_constraint: Range<usize>,
}

/// `[H_L(u); H_L(p⊗u) − P̄ H_L(u); H_L(y); H_L(p⊗y) − P̄ H_L(y)]` with the
/// measured scheduling inside the Hankel matrices and the query scheduling
/// in `P̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorSystem {
    pub l: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub n_p: usize,
    pub matrix: DMatrix<f64>,
    pub rows: RowPartition,
}

impl PredictorSystem {
    pub fn col_count(&self) -> usize {
        self.matrix.ncols()
    }

    /// Output rows belonging to samples `samples` of the window.
    pub fn y_rows(&self, samples: Range<usize>) -> Range<usize> {
        self.rows.y.start + samples.start * self.n_y..self.rows.y.start + samples.end * self.n_y
    }
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

fn check_depth(l: usize, t: usize) -> Result<()> {
    if l == 0 || l > t {
        return Err(Error::InvalidShape(format!(
            "window length {l} needs 1 <= L <= T = {t}"
        )));
    }
    Ok(())
}

pub fn build_predictor(
    data: &DataRecord,
    p_query: &Trajectory,
    l: usize,
) -> Result<PredictorSystem> {
    check_depth(l, data.len())?;
    check_dim("query scheduling", data.n_p(), p_query.dim())?;
    check_dim("query scheduling length", l, p_query.len())?;
    let (nu, ny, np) = (data.n_u(), data.n_y(), data.n_p());
    let constraint = |w: &Trajectory| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let n = w.dim();
        let h = w.hankel_max(l)?.into_matrix();
        let pw = w.kron_extend(&data.p)?.channels(n..(1 + np) * n)?;
        let c = pw.hankel_max(l)?.into_matrix() - sched_block_diag(p_query, n) * &h;
        Ok((h, c))
    };
    let (hu, cu) = constraint(&data.u)?;
    let (hy, cy) = constraint(&data.y)?;
    let blocks = [&hu, &cu, &hy, &cy];
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut matrix = DMatrix::zeros(total, hu.ncols());
    let mut ranges = Vec::with_capacity(4);
    let mut at = 0;
    for b in blocks {
        matrix.rows_mut(at, b.nrows()).copy_from(b);
        ranges.push(at..at + b.nrows());
        at += b.nrows();
    }
    let rows = RowPartition {
        u: ranges[0].clone(),
        u_constraint: ranges[1].clone(),
        y: ranges[2].clone(),
        y_constraint: ranges[3].clone(),
    };
    Ok(PredictorSystem {
        l,
        n_u: nu,
        n_y: ny,
        n_p: np,
        matrix,
        rows,
    })
}

/// Left kernel of the extended data Hankel matrix `H_d(col(w, p ⊗ w))`.
///
/// Each row is a candidate annihilator of depth `d` with constant
/// coefficients on the extended coordinates `col(w(k), p(k) ⊗ w(k))`,
/// `w = col(u, y)`, stacked over `d` consecutive samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Annihilators {
    pub depth: usize,
    pub n_w: usize,
    pub n_p: usize,
    /// One basis vector per row, orthonormal.
    pub basis: DMatrix<f64>,
    /// Singular values of the extended data Hankel matrix.
    pub singular_values: Vec<f64>,
}

impl Annihilators {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn extended_rows(&self) -> usize {
        self.basis.ncols()
    }

    /// Largest `|r · col(w, p ⊗ w)|` over all rows and all depth-`d`
    /// windows of `(u, y, p)`.
    pub fn residual_on(&self, u: &Trajectory, y: &Trajectory, p: &Trajectory) -> Result<f64> {
        check_dim("signal", self.n_w, u.dim() + y.dim())?;
        check_dim("scheduling", self.n_p, p.dim())?;
        let h = u.stack(y)?.kron_extend(p)?.hankel_max(self.depth)?;
        Ok((&self.basis * h.matrix()).amax())
    }

    /// Constraint rows on `vec(w̄)` over a window of `p_bar.len()` samples:
    /// every basis row placed at every admissible offset and evaluated
    /// along `p_bar`.
    pub fn constraints(&self, p_bar: &Trajectory) -> Result<DMatrix<f64>> {
        check_dim("scheduling", self.n_p, p_bar.dim())?;
        let (d, nw, np) = (self.depth, self.n_w, self.n_p);
        let l = p_bar.len();
        if d > l {
            return Err(Error::InvalidShape(format!(
                "annihilator depth {d} exceeds window {l}"
            )));
        }
        let block = (1 + np) * nw;
        let offsets = l - d + 1;
        let mut c = DMatrix::zeros(offsets * self.dim(), l * nw);
        let pbar: Vec<&[f64]> = p_bar.iter().map(|(_, s)| s).collect();
        for s in 0..offsets {
            for (ri, r) in self.basis.row_iter().enumerate() {
                let row = s * self.dim() + ri;
                for i in 0..d {
                    let t = s + i;
                    let ri_block = r.columns(i * block, block);
                    for ch in 0..nw {
                        let mut v = ri_block[ch];
                        for (j, pj) in pbar[t].iter().enumerate() {
                            v += pj * ri_block[nw + j * nw + ch];
                        }
                        c[(row, t * nw + ch)] = v;
                    }
                }
            }
        }
        Ok(c)
    }
}

/// Numeric left kernel of `H_L(col(w, p ⊗ w))` for the data.
pub fn left_nullspace(data: &DataRecord, l: usize, tol: f64) -> Result<Annihilators> {
    check_depth(l, data.len())?;
    let h = data.extended_io()?.hankel_max(l)?.into_matrix();
    Ok(Annihilators {
        depth: l,
        n_w: data.n_u() + data.n_y(),
        n_p: data.n_p(),
        basis: left_null_space(&h, tol),
        singular_values: singular_values(&h),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Least-squares residual relative to `max(1, |w|∞)`.
    pub residual: f64,
}

/// Whether `(u_test, y_test)` under `p_test` is a combination of data
/// windows satisfying the scheduling constraints.
pub fn span_membership(
    data: &DataRecord,
    u_test: &Trajectory,
    y_test: &Trajectory,
    p_test: &Trajectory,
    tol: f64,
) -> Result<Membership> {
    u_test.require_same_interval(y_test)?;
    u_test.require_same_interval(p_test)?;
    check_dim("input", data.n_u(), u_test.dim())?;
    check_dim("output", data.n_y(), y_test.dim())?;
    let sys = build_predictor(data, p_test, u_test.len())?;
    let mut rhs = DVector::zeros(sys.matrix.nrows());
    rhs.rows_mut(sys.rows.u.start, sys.rows.u.len())
        .copy_from(&u_test.vec());
    rhs.rows_mut(sys.rows.y.start, sys.rows.y.len())
        .copy_from(&y_test.vec());
    let sol = lstsq(&sys.matrix, &rhs, RANK_TOL);
    let residual = sol.residual / rhs.amax().max(1.0);
    Ok(Membership {
        member: residual <= tol,
        residual,
    })
}

/// A prediction query: an initial window and the future input and
/// scheduling directly after it.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub u_ini: Trajectory,
    pub p_ini: Trajectory,
    pub y_ini: Trajectory,
    pub u_r: Trajectory,
    pub p_r: Trajectory,
}

impl Query {
    pub fn t_ini(&self) -> usize {
        self.u_ini.len()
    }
    pub fn t_r(&self) -> usize {
        self.u_r.len()
    }

    fn validate(&self, data: &DataRecord) -> Result<()> {
        self.u_ini.require_same_interval(&self.p_ini)?;
        self.u_ini.require_same_interval(&self.y_ini)?;
        self.u_r.require_same_interval(&self.p_r)?;
        if self.u_ini.t_end() + 1 != self.u_r.t_start() {
            return Err(Error::NonAdjacentIntervals {
                left_end: self.u_ini.t_end(),
                right_start: self.u_r.t_start(),
            });
        }
        check_dim("input", data.n_u(), self.u_ini.dim())?;
        check_dim("input", data.n_u(), self.u_r.dim())?;
        check_dim("output", data.n_y(), self.y_ini.dim())?;
        check_dim("scheduling", data.n_p(), self.p_ini.dim())?;
        check_dim("scheduling", data.n_p(), self.p_r.dim())?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PredictMethod {
    /// Hankel route when the depth-`L` data Hankel matrix has more columns
    /// than its rank, annihilator route otherwise.
    #[default]
    Auto,
    HankelSpan,
    Annihilator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Route {
    HankelSpan,
    Annihilator,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::HankelSpan => "hankel_span",
            Route::Annihilator => "annihilator",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Ok,
    Ambiguous,
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "ok",
            Verdict::Ambiguous => "ambiguous",
            Verdict::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictOptions {
    pub method: PredictMethod,
    /// Residual bound relative to `max(1, |known data|∞)`.
    pub tol: f64,
    /// Bound on both uniqueness margins.
    pub margin_tol: f64,
    /// Relative singular-value threshold for ranks and null spaces.
    pub rank_tol: f64,
    /// State dimension hypothesis for the PE check at order `L + n_x`.
    pub n_x: Option<usize>,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            method: PredictMethod::Auto,
            tol: 1e-7,
            margin_tol: 1e-7,
            rank_tol: RANK_TOL,
            n_x: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult {
    pub y_r: Trajectory,
    /// Data window combination, Hankel route only.
    pub g: Option<Vec<f64>>,
    pub residual: f64,
    /// `min(pe_margin, determinacy_margin)`.
    pub output_uniqueness_margin: f64,
    /// Relative smallest required singular value of the extended input
    /// Hankel matrix at the working depth.
    pub pe_margin: f64,
    /// Relative smallest singular value of the `y_r` columns of the
    /// annihilator equations at the query scheduling.
    pub determinacy_margin: f64,
    pub verdict: Verdict,
    pub route: Route,
    pub depth: usize,
    pub annihilator_count: usize,
    pub warnings: Vec<String>,
}

impl PredictionResult {
    /// `Ok` for verdict ok, the matching error otherwise.
    pub fn into_result(self, opts: &PredictOptions) -> Result<Self> {
        match self.verdict {
            Verdict::Ok => Ok(self),
            Verdict::Ambiguous => Err(Error::Ambiguous {
                margin: self.output_uniqueness_margin,
                tol: opts.margin_tol,
            }),
            Verdict::Infeasible => Err(Error::Infeasible {
                residual: self.residual,
                tol: opts.tol,
            }),
        }
    }
}

fn extended_rank(data: &DataRecord, d: usize, tol: f64) -> Result<(usize, usize)> {
    let h = data.extended_io()?.hankel_max(d)?.into_matrix();
    Ok((rank_of_values(&singular_values(&h), tol), h.ncols()))
}

/// Largest depth `d <= l` whose extended data Hankel matrix has more
/// columns than its rank.
fn surplus_depth(data: &DataRecord, l: usize, tol: f64) -> Result<Option<usize>> {
    for d in (1..=l.min(data.len())).rev() {
        let (rank, cols) = extended_rank(data, d, tol)?;
        if rank < cols {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

fn pe_margin(data: &DataRecord, d: usize) -> Result<f64> {
    let s = singular_values(data.u.kron_extend(&data.p)?.hankel_max(d)?.matrix());
    let required = (1 + data.n_p()) * data.n_u() * d;
    Ok(relative_singular_value(&s, required.saturating_sub(1)))
}

/// Unknown (`y_r`) and known column indices of `vec(w̄)`.
fn split_columns(nu: usize, ny: usize, t_ini: usize, l: usize) -> (Vec<usize>, Vec<usize>) {
    let nw = nu + ny;
    let mut unknown = Vec::new();
    let mut known = Vec::new();
    for t in 0..l {
        for ch in 0..nw {
            if t >= t_ini && ch >= nu {
                unknown.push(t * nw + ch);
            } else {
                known.push(t * nw + ch);
            }
        }
    }
    (unknown, known)
}

fn known_values(q: &Query, nu: usize, ny: usize) -> Result<DVector<f64>> {
    let mut v = Vec::new();
    for (t, u) in q.u_ini.iter() {
        v.extend_from_slice(u);
        v.extend_from_slice(q.y_ini.at(t)?);
    }
    for (_, u) in q.u_r.iter() {
        v.extend_from_slice(u);
    }
    debug_assert_eq!(v.len(), q.t_ini() * (nu + ny) + q.t_r() * nu);
    Ok(DVector::from_vec(v))
}

fn relative_min_singular(m: &DMatrix<f64>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    let s = singular_values(m);
    relative_singular_value(&s, m.ncols().saturating_sub(1))
}

/// Predicts the output over the interval of `q.u_r`.
///
/// The verdict is ambiguous when either margin is at most
/// `opts.margin_tol`, infeasible when the residual exceeds `opts.tol`, and
/// ok otherwise. Use [`PredictionResult::into_result`] to turn the first
/// two into errors.
pub fn predict(data: &DataRecord, q: &Query, opts: &PredictOptions) -> Result<PredictionResult> {
    q.validate(data)?;
    let (nu, ny) = (data.n_u(), data.n_y());
    let (t_ini, t_r) = (q.t_ini(), q.t_r());
    let l = t_ini + t_r;
    check_depth(l, data.len())?;
    let p_bar = q.p_ini.concat(&q.p_r)?;

    let mut warnings = Vec::new();
    match opts.n_x {
        Some(n_x) if l + n_x <= data.len() => {
            let pe = crate::analysis::check_pe(&data.u, &data.p, l + n_x, opts.rank_tol)?;
            if !pe.verdict {
                warnings.push(format!(
                    "data not persistently exciting of order {}: rank {} of {}",
                    l + n_x,
                    pe.extended_input_rank,
                    pe.required
                ));
            }
        }
        Some(n_x) => warnings.push(format!(
            "data too short to check excitation of order {}",
            l + n_x
        )),
        None => warnings.push(String::from(
            "state dimension unknown; excitation of order L + n_x not checked",
        )),
    }

    let (route, depth) = match opts.method {
        PredictMethod::HankelSpan => (Route::HankelSpan, l),
        PredictMethod::Annihilator | PredictMethod::Auto => {
            let d = surplus_depth(data, l, opts.rank_tol)?.ok_or_else(|| {
                Error::InvalidShape(String::from(
                    "data too short: no window depth has more windows than dimensions",
                ))
            })?;
            if d == l && opts.method == PredictMethod::Auto {
                (Route::HankelSpan, l)
            } else {
                (Route::Annihilator, d)
            }
        }
    };

    let ann = left_nullspace(data, depth, opts.rank_tol)?;
    let c = ann.constraints(&p_bar)?;
    let (unknown, known) = split_columns(nu, ny, t_ini, l);
    let c_unknown = c.select_columns(&unknown);
    let c_known = c.select_columns(&known);
    let w_known = known_values(q, nu, ny)?;
    let scale = w_known.amax().max(1.0);
    let determinacy_margin = relative_min_singular(&c_unknown);
    let pe_margin = pe_margin(data, depth)?;

    let (y_flat, g, residual) = match route {
        Route::HankelSpan => {
            let sys = build_predictor(data, &p_bar, l)?;
            let y_ini_rows = sys.y_rows(0..t_ini);
            let y_r_rows = sys.y_rows(t_ini..l);
            let mut keep: Vec<usize> = Vec::new();
            keep.extend(sys.rows.u.clone());
            keep.extend(sys.rows.u_constraint.clone());
            keep.extend(y_ini_rows.clone());
            keep.extend(sys.rows.y_constraint.clone());
            let a = sys.matrix.select_rows(&keep);
            let mut b = DVector::zeros(keep.len());
            let u_all = q.u_ini.concat(&q.u_r)?.vec();
            b.rows_mut(0, u_all.len()).copy_from(&u_all);
            let y0 = sys.rows.u.len() + sys.rows.u_constraint.len();
            b.rows_mut(y0, y_ini_rows.len()).copy_from(&q.y_ini.vec());
            let sol = lstsq(&a, &b, opts.rank_tol);
            let y = sys.matrix.rows(y_r_rows.start, y_r_rows.len()) * &sol.x;
            (
                y.as_slice().to_vec(),
                Some(sol.x.as_slice().to_vec()),
                sol.residual / scale,
            )
        }
        Route::Annihilator => {
            let rhs = -(&c_known * &w_known);
            let sol = lstsq(&c_unknown, &rhs, opts.rank_tol);
            (sol.x.as_slice().to_vec(), None, sol.residual / scale)
        }
    };

    let output_uniqueness_margin = pe_margin.min(determinacy_margin);
    let verdict = if output_uniqueness_margin <= opts.margin_tol {
        Verdict::Ambiguous
    } else if residual > opts.tol {
        Verdict::Infeasible
    } else {
        Verdict::Ok
    };
    Ok(PredictionResult {
        y_r: Trajectory::from_flat(ny, q.u_r.t_start(), t_r, y_flat)?,
        g,
        residual,
        output_uniqueness_margin,
        pe_margin,
        determinacy_margin,
        verdict,
        route,
        depth,
        annihilator_count: ann.dim(),
        warnings,
    })
}
