//! Forward simulation, impulse response coefficients, the response map and
//! initial-state estimation.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::analysis::{obsv_matrix, reach_matrix};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, rank_of_values, singular_values, RANK_TOL};
use crate::models::{LpvIoModel, LpvSsModel};
use crate::schedcalc::CoeffMatrix;
use crate::signals::Trajectory;

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Output over the input interval.
    pub y: Trajectory,
    /// State over the input interval plus the terminal state.
    pub x: Trajectory,
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

/// `x(k+1) = (A⋄p)(k) x(k) + (B⋄p)(k) u(k)`, `y(k) = (C⋄p)(k) x(k) + (D⋄p)(k) u(k)`
/// from `x(t_start) = x0`.
///
/// `p` must cover every sample the coefficients read; nothing is
/// extrapolated.
pub fn simulate_ss(
    model: &LpvSsModel,
    x0: &DVector<f64>,
    u: &Trajectory,
    p: &Trajectory,
) -> Result<SimResult> {
    model.ensure_valid()?;
    check_dim("initial state", model.n_x(), x0.len())?;
    check_dim("input", model.n_u(), u.dim())?;
    check_dim("scheduling", model.n_p(), p.dim())?;
    let (nx, ny) = (model.n_x(), model.n_y());
    let mut xs = Vec::with_capacity((u.len() + 1) * nx);
    let mut ys = Vec::with_capacity(u.len() * ny);
    let mut x = x0.clone();
    for (k, uk) in u.iter() {
        let uk = DVector::from_column_slice(uk);
        xs.extend(x.iter());
        let y = model.c().eval(p, k)? * &x + model.d().eval(p, k)? * &uk;
        ys.extend(y.iter());
        x = model.a().eval(p, k)? * &x + model.b().eval(p, k)? * &uk;
    }
    xs.extend(x.iter());
    Ok(SimResult {
        y: Trajectory::from_flat(ny, u.t_start(), u.len(), ys)?,
        x: Trajectory::from_flat(nx, u.t_start(), u.len() + 1, xs)?,
    })
}

/// Solves `y(k) = −Σ a_i y(k−i) + Σ b_i u(k−i)` forward from the `n_a`
/// samples in `y_init`. The result covers `[y_init.t_start, u.t_end]`.
pub fn simulate_io(
    model: &LpvIoModel,
    u: &Trajectory,
    p: &Trajectory,
    y_init: &Trajectory,
) -> Result<Trajectory> {
    model.ensure_valid()?;
    check_dim("input", model.n_u(), u.dim())?;
    check_dim("output", model.n_y(), y_init.dim())?;
    check_dim("scheduling", model.n_p(), p.dim())?;
    check_dim("initial output samples", model.n_a(), y_init.len())?;
    let ny = model.n_y();
    let t0 = y_init.t_start();
    let first = y_init.t_end() + 1;
    if u.t_end() < y_init.t_end() {
        return Err(Error::InvalidShape(
            "input ends before the initial output window".into(),
        ));
    }
    let mut ys: Vec<f64> = y_init.as_flat().to_vec();
    for k in first..=u.t_end() {
        let mut yk = DVector::zeros(ny);
        for (idx, a) in model.a_coeffs().iter().enumerate() {
            let back = ((k - (idx as i64 + 1) - t0) as usize) * ny;
            yk -= a.eval(p, k)? * DVector::from_column_slice(&ys[back..back + ny]);
        }
        for (idx, b) in model.b_coeffs().iter().enumerate() {
            yk += b.eval(p, k)? * DVector::from_column_slice(u.at(k - (idx as i64 + 1))?);
        }
        ys.extend(yk.iter());
    }
    Trajectory::from_flat(ny, t0, (u.t_end() - t0 + 1) as usize, ys)
}

/// Impulse response coefficient `h_n`: `D` for `n = 0`, otherwise
/// `→ⁿC · →ⁿ⁻¹A ⋯ →A · B`.
pub fn impulse_coeff(model: &LpvSsModel, n: usize) -> Result<CoeffMatrix> {
    model.ensure_valid()?;
    if n == 0 {
        return Ok(model.d().clone());
    }
    let mut acc = model.b().clone();
    for j in 1..n {
        acc = model.a().shift_by(j as i32).try_mul(&acc)?;
    }
    model.c().shift_by(n as i32).try_mul(&acc)
}

/// Lower block-triangular `T_{t1}` with block `(i, j) = →ʲ h_{i−j}`
/// (zero-based), so that `(T⋄p)(k)` maps `u(k…k+t1−1)` to the zero-state
/// outputs `y(k…k+t1−1)`.
pub fn toeplitz(model: &LpvSsModel, t1: usize) -> Result<CoeffMatrix> {
    if t1 == 0 {
        return Err(Error::InvalidShape("Toeplitz matrix needs t1 >= 1".into()));
    }
    let (ny, nu, np) = (model.n_y(), model.n_u(), model.n_p());
    let h: Vec<CoeffMatrix> = (0..t1)
        .map(|n| impulse_coeff(model, n))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(t1);
    for i in 0..t1 {
        let blocks: Vec<CoeffMatrix> = (0..t1)
            .map(|j| {
                if j <= i {
                    h[i - j].shift_by(j as i32)
                } else {
                    CoeffMatrix::zeros(np, ny, nu)
                }
            })
            .collect();
        rows.push(CoeffMatrix::hstack(&blocks)?);
    }
    CoeffMatrix::vstack(&rows)
}

/// `vec(y) = (O_T⋄p)(t0) x̃ + (T_T⋄p)(t0) vec(u)` over the interval of `u`.
pub fn response_map(
    model: &LpvSsModel,
    x_tilde: &DVector<f64>,
    u: &Trajectory,
    p: &Trajectory,
) -> Result<DVector<f64>> {
    check_dim("initial state", model.n_x(), x_tilde.len())?;
    check_dim("input", model.n_u(), u.dim())?;
    let t = u.len();
    let o = obsv_matrix(model, t)?.eval(p, u.t_start())?;
    let tt = toeplitz(model, t)?.eval(p, u.t_start())?;
    Ok(o * x_tilde + tt * u.vec())
}

/// Settings for [`estimate_initial_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateEstimateOptions {
    /// Minimal window length accepted; `None` means `n_x`.
    pub lag_bound: Option<usize>,
    /// Bound on the residual relative to `max(1, |y|∞)`.
    pub tol: f64,
    /// Relative singular-value threshold for the rank test.
    pub rank_tol: f64,
}

impl Default for StateEstimateOptions {
    fn default() -> Self {
        Self {
            lag_bound: None,
            tol: 1e-7,
            rank_tol: RANK_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InitialState {
    /// State at the start of the window.
    pub x: Vec<f64>,
    /// Relative residual of the fit.
    pub residual: f64,
    /// Smallest singular value of the observability evaluation.
    pub sigma_min: f64,
    pub rank: usize,
}

/// Least-squares `x̄` with `vec(y_ini) = (O⋄p)(t0) x̄ + (T⋄p)(t0) vec(u_ini)`.
pub fn estimate_initial_state(
    model: &LpvSsModel,
    u_ini: &Trajectory,
    p_ini: &Trajectory,
    y_ini: &Trajectory,
    opts: &StateEstimateOptions,
) -> Result<InitialState> {
    u_ini.require_same_interval(y_ini)?;
    check_dim("input", model.n_u(), u_ini.dim())?;
    check_dim("output", model.n_y(), y_ini.dim())?;
    let (nx, steps) = (model.n_x(), u_ini.len());
    let lag_bound = opts.lag_bound.unwrap_or(nx);
    let t0 = u_ini.t_start();
    let o = obsv_matrix(model, steps)?.eval(p_ini, t0)?;
    let s = singular_values(&o);
    let rank = rank_of_values(&s, opts.rank_tol);
    let sigma_min = if s.len() < nx {
        0.0
    } else {
        s.last().copied().unwrap_or(0.0)
    };
    if steps < lag_bound || rank < nx {
        return Err(Error::RankDeficientObservability {
            steps,
            lag_bound,
            rank,
            required: nx,
            sigma_min,
        });
    }
    let rhs = y_ini.vec() - toeplitz(model, steps)?.eval(p_ini, t0)? * u_ini.vec();
    let sol = lstsq(&o, &rhs, opts.rank_tol);
    let residual = sol.residual / y_ini.vec().amax().max(1.0);
    if residual > opts.tol {
        return Err(Error::InconsistentTrajectory {
            residual,
            tol: opts.tol,
        });
    }
    Ok(InitialState {
        x: sol.x.iter().copied().collect(),
        residual,
        sigma_min,
        rank,
    })
}

/// `x(t_end + 1)` from `x(t_start) = x1`:
/// `(A(t_end) ⋯ A(t_start)) x1 + (R_T⋄p)(t_end) · col(u(t_end), …, u(t_start))`.
pub fn propagate_state(
    model: &LpvSsModel,
    x1: &DVector<f64>,
    u_ini: &Trajectory,
    p_ini: &Trajectory,
) -> Result<DVector<f64>> {
    model.ensure_valid()?;
    check_dim("initial state", model.n_x(), x1.len())?;
    check_dim("input", model.n_u(), u_ini.dim())?;
    let (t0, t_end, nu) = (u_ini.t_start(), u_ini.t_end(), model.n_u());
    let mut x = x1.clone();
    for k in t0..=t_end {
        x = model.a().eval(p_ini, k)? * x;
    }
    let r = reach_matrix(model, u_ini.len())?.eval(p_ini, t_end)?;
    let mut reversed = DVector::zeros(u_ini.len() * nu);
    for (i, k) in (t0..=t_end).rev().enumerate() {
        reversed.rows_mut(i * nu, nu).copy_from_slice(u_ini.at(k)?);
    }
    Ok(x + r * reversed)
}

/// `[0, I; (O_L⋄p)(t0), (T_L⋄p)(t0)]`, mapping `(x̃, vec(u))` to
/// `(vec(u), vec(y))`. Its rank is the dimension of the behavior restricted
/// to `L` samples for this scheduling.
pub fn restricted_behavior_map(
    model: &LpvSsModel,
    p: &Trajectory,
    t0: i64,
    l: usize,
) -> Result<DMatrix<f64>> {
    let o = obsv_matrix(model, l)?.eval(p, t0)?;
    let t = toeplitz(model, l)?.eval(p, t0)?;
    let (nx, nul) = (o.ncols(), t.ncols());
    let mut m = DMatrix::zeros(nul + o.nrows(), nx + nul);
    m.view_mut((0, nx), (nul, nul)).fill_with_identity();
    m.view_mut((nul, 0), (o.nrows(), nx)).copy_from(&o);
    m.view_mut((nul, nx), (o.nrows(), nul)).copy_from(&t);
    Ok(m)
}
