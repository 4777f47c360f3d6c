//! Structural observability and reachability, minimality and persistence of
//! excitation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{rank_of_values, singular_values, RANK_TOL};
use crate::models::LpvSsModel;
use crate::random;
use crate::schedcalc::CoeffMatrix;
use crate::signals::Trajectory;

/// `O_n = col(o_1, …, o_n)` with `o_1 = C`, `o_{i+1} = →o_i · A`.
pub fn obsv_matrix(model: &LpvSsModel, n: usize) -> Result<CoeffMatrix> {
    model.ensure_valid()?;
    if n == 0 {
        return Err(Error::InvalidShape(
            "observability matrix needs n >= 1".into(),
        ));
    }
    let mut blocks = vec![model.c().clone()];
    for _ in 1..n {
        let next = blocks[blocks.len() - 1].shift_fwd().try_mul(model.a())?;
        blocks.push(next);
    }
    CoeffMatrix::vstack(&blocks)
}

/// `R_n = [r_1, …, r_n]` with `r_1 = B`, `r_{i+1} = A · ←r_i`.
pub fn reach_matrix(model: &LpvSsModel, n: usize) -> Result<CoeffMatrix> {
    model.ensure_valid()?;
    if n == 0 {
        return Err(Error::InvalidShape(
            "reachability matrix needs n >= 1".into(),
        ));
    }
    let mut blocks = vec![model.b().clone()];
    for _ in 1..n {
        let next = model.a().try_mul(&blocks[blocks.len() - 1].shift_bwd())?;
        blocks.push(next);
    }
    CoeffMatrix::hstack(&blocks)
}

/// Settings for randomized generic-rank tests.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTestOptions {
    pub trials: usize,
    /// Relative singular-value threshold.
    pub tol: f64,
    pub seed: u64,
    /// Per-component scheduling box; `None` means `[-1, 1]` for every component.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for RankTestOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            tol: RANK_TOL,
            seed: 0,
            bounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StructuralRankReport {
    /// Smallest rank seen over all trials.
    pub tested_rank: usize,
    pub required_rank: usize,
    pub num_trials: usize,
    pub pass_count: usize,
    pub tolerance: f64,
    /// True only when every trial reached the required rank.
    pub verdict: bool,
}

/// Generic rank of `M⋄p` at `k = 0`, decided over random scheduling draws.
///
/// Trial `i` draws from stream `i` of `opts.seed`, so a report depends only
/// on the options.
pub fn structural_rank(
    m: &CoeffMatrix,
    required: usize,
    opts: &RankTestOptions,
) -> Result<StructuralRankReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidShape(
            "structural rank test needs at least one trial".into(),
        ));
    }
    let n_p = m.n_p();
    let bounds = match &opts.bounds {
        Some(b) if b.len() != n_p => {
            return Err(Error::DimensionMismatch {
                what: "scheduling box",
                expected: n_p,
                found: b.len(),
            })
        }
        Some(b) => b.clone(),
        None => vec![(-1.0, 1.0); n_p],
    };
    let (lo, hi) = m.window().unwrap_or((0, 0));
    let (lo, hi) = (lo.min(0) as i64, hi.max(0) as i64);
    let mut tested_rank = usize::MAX;
    let mut pass_count = 0;
    for trial in 0..opts.trials {
        let mut rng = random::stream(opts.seed, trial as u64);
        let p = random::uniform_trajectory(&mut rng, &bounds, lo, (hi - lo + 1) as usize)?;
        let rank = rank_of_values(&singular_values(&m.eval(&p, 0)?), opts.tol);
        tested_rank = tested_rank.min(rank);
        if rank >= required {
            pass_count += 1;
        }
    }
    Ok(StructuralRankReport {
        tested_rank,
        required_rank: required,
        num_trials: opts.trials,
        pass_count,
        tolerance: opts.tol,
        verdict: pass_count == opts.trials,
    })
}

/// Column rank `n_x` of `O_{n_x}`.
pub fn is_struct_observable(
    model: &LpvSsModel,
    opts: &RankTestOptions,
) -> Result<StructuralRankReport> {
    let n = model.n_x().max(1);
    structural_rank(&obsv_matrix(model, n)?, model.n_x(), opts)
}

/// Row rank `n_x` of `R_{n_x}`.
pub fn is_struct_reachable(
    model: &LpvSsModel,
    opts: &RankTestOptions,
) -> Result<StructuralRankReport> {
    let n = model.n_x().max(1);
    structural_rank(&reach_matrix(model, n)?, model.n_x(), opts)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MinimalityReport {
    pub observability: StructuralRankReport,
    pub reachability: StructuralRankReport,
    /// Observable and reachable; state-trimness is taken to follow from
    /// reachability.
    pub minimal: bool,
}

pub fn minimality_report(model: &LpvSsModel, opts: &RankTestOptions) -> Result<MinimalityReport> {
    let observability = is_struct_observable(model, opts)?;
    let reachability = is_struct_reachable(model, opts)?;
    let minimal = observability.verdict && reachability.verdict;
    Ok(MinimalityReport {
        observability,
        reachability,
        minimal,
    })
}

/// Smallest `n <= n_x` with `O_n` of generic column rank `n_x`, if any.
pub fn observability_lag(model: &LpvSsModel, opts: &RankTestOptions) -> Result<Option<usize>> {
    for n in 1..=model.n_x().max(1) {
        if structural_rank(&obsv_matrix(model, n)?, model.n_x(), opts)?.verdict {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PeReport {
    pub order_l: usize,
    /// Rank of `H_L(col(u, p ⊗ u))`.
    pub extended_input_rank: usize,
    /// `(1 + n_p) n_u L`.
    pub required: usize,
    /// Rank of `H_L(u)`.
    pub hankel_rank: usize,
    pub verdict: bool,
    /// Singular values of the extended input Hankel matrix, descending.
    pub singular_values: Vec<f64>,
    pub output: Option<OutputPeReport>,
}

/// Rank of the extended input-output Hankel matrix for a state dimension
/// hypothesis.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OutputPeReport {
    pub n_x: usize,
    /// Rank of `H_L(col(w, p ⊗ w))`, `w = col(u, y)`.
    pub extended_io_rank: usize,
    /// `(1 + n_p) n_u L + n_p n_y L + n_x`.
    pub required: usize,
    pub verdict: bool,
}

/// Persistence of excitation of order `L` for the shifted-affine class.
pub fn check_pe(u: &Trajectory, p: &Trajectory, l: usize, tol: f64) -> Result<PeReport> {
    u.require_same_interval(p)?;
    if l == 0 || u.len() < l {
        return Err(Error::InvalidShape(alloc::format!(
            "PE order {l} needs 1 <= L <= T = {}",
            u.len()
        )));
    }
    let ext = u.kron_extend(p)?.hankel_max(l)?;
    let s = singular_values(ext.matrix());
    let extended_input_rank = rank_of_values(&s, tol);
    let required = (1 + p.dim()) * u.dim() * l;
    let hankel_rank = rank_of_values(&singular_values(u.hankel_max(l)?.matrix()), tol);
    Ok(PeReport {
        order_l: l,
        extended_input_rank,
        required,
        hankel_rank,
        verdict: extended_input_rank == required,
        singular_values: s,
        output: None,
    })
}

/// [`check_pe`] plus the rank of the extended input-output Hankel matrix.
///
/// For a generic system with `n_x` states the extended coordinates
/// `col(u, p ⊗ u, p ⊗ y)` over `L` samples are free, and `y` adds `n_x`
/// further directions through the initial state.
pub fn check_pe_with_output(
    u: &Trajectory,
    y: &Trajectory,
    p: &Trajectory,
    l: usize,
    n_x: usize,
    tol: f64,
) -> Result<PeReport> {
    let mut report = check_pe(u, p, l, tol)?;
    u.require_same_interval(y)?;
    let w = u.stack(y)?;
    let rank = rank_of_values(
        &singular_values(w.kron_extend(p)?.hankel_max(l)?.matrix()),
        tol,
    );
    let required = (1 + p.dim()) * u.dim() * l + p.dim() * y.dim() * l + n_x;
    report.output = Some(OutputPeReport {
        n_x,
        extended_io_rank: rank,
        required,
        verdict: rank == required,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedcalc::PolyCoeff;
    use nalgebra::DMatrix;

    fn scalar(n_p: usize, c: PolyCoeff) -> CoeffMatrix {
        CoeffMatrix::from_entries(n_p, 1, 1, vec![c]).unwrap()
    }

    fn lti(a: &[f64], b: &[f64], c: &[f64], n: usize) -> LpvSsModel {
        LpvSsModel::from_constant(
            1,
            &DMatrix::from_row_slice(n, n, a),
            &DMatrix::from_row_slice(n, 1, b),
            &DMatrix::from_row_slice(1, n, c),
            &DMatrix::zeros(1, 1),
        )
    }

    #[test]
    fn constant_model_gives_kalman_matrices() {
        let m = lti(&[0.5, 1.0, -0.2, 0.3], &[1.0, 2.0], &[1.0, -1.0], 2);
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -0.2, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let p = Trajectory::zeros(1, -5, 11).unwrap();
        let o = obsv_matrix(&m, 3).unwrap().eval(&p, 0).unwrap();
        let want_o = DMatrix::from_rows(&[
            c.row(0).into_owned(),
            (&c * &a).row(0).into_owned(),
            (&c * &a * &a).row(0).into_owned(),
        ]);
        assert!((o - want_o).amax() < 1e-14);
        let r = reach_matrix(&m, 2).unwrap().eval(&p, 0).unwrap();
        let want_r =
            DMatrix::from_columns(&[b.column(0).into_owned(), (&a * &b).column(0).into_owned()]);
        assert!((r - want_r).amax() < 1e-14);
    }

    #[test]
    fn obsv_and_reach_windows_follow_shifts() {
        // A = p1(k): o_2 = C A depends on p(k), r_2 = A ←B with B = p1(k)
        let a = scalar(1, PolyCoeff::var(1, 1, 0).unwrap());
        let m = LpvSsModel::new(
            a.clone(),
            a,
            CoeffMatrix::identity(1, 1),
            CoeffMatrix::zeros(1, 1, 1),
        );
        let o3 = obsv_matrix(&m, 3).unwrap();
        assert_eq!(o3.window(), Some((0, 1)));
        let r3 = reach_matrix(&m, 3).unwrap();
        assert_eq!(r3.window(), Some((-2, 0)));
        let p = Trajectory::scalar(-2, &[2.0, 3.0, 5.0, 7.0]).unwrap();
        // o_3(0) = p(1) p(0) = 7 * 5; r_3(0) = p(0) p(-1) p(-2) = 5 * 3 * 2
        assert_eq!(o3.eval(&p, 0).unwrap()[(2, 0)], 35.0);
        assert_eq!(r3.eval(&p, 0).unwrap()[(0, 2)], 30.0);
    }

    #[test]
    fn structural_rank_trivial_cases() {
        let opts = RankTestOptions::default();
        let id = structural_rank(&CoeffMatrix::identity(2, 3), 3, &opts).unwrap();
        assert!(id.verdict);
        assert_eq!((id.tested_rank, id.pass_count), (3, 20));
        let z = structural_rank(&CoeffMatrix::zeros(2, 3, 3), 1, &opts).unwrap();
        assert!(!z.verdict);
        assert_eq!(z.tested_rank, 0);
        assert!(structural_rank(
            &CoeffMatrix::identity(0, 1),
            1,
            &RankTestOptions { trials: 0, ..opts }
        )
        .is_err());
    }

    #[test]
    fn structural_rank_is_reproducible() {
        let m = CoeffMatrix::from_entries(
            1,
            2,
            2,
            vec![
                PolyCoeff::var(1, 1, 0).unwrap(),
                PolyCoeff::constant(1, 1.0),
                PolyCoeff::constant(1, 1.0),
                PolyCoeff::var(1, 1, 1).unwrap(),
            ],
        )
        .unwrap();
        let opts = RankTestOptions {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(
            structural_rank(&m, 2, &opts).unwrap(),
            structural_rank(&m, 2, &opts).unwrap()
        );
    }

    #[test]
    fn autonomous_and_blind_models() {
        let opts = RankTestOptions::default();
        let no_input = lti(&[0.5, 1.0, -0.2, 0.3], &[0.0, 0.0], &[1.0, 0.0], 2);
        assert!(!is_struct_reachable(&no_input, &opts).unwrap().verdict);
        assert!(is_struct_observable(&no_input, &opts).unwrap().verdict);
        let blind = lti(&[0.5, 1.0, -0.2, 0.3], &[1.0, 0.0], &[0.0, 0.0], 2);
        assert!(!is_struct_observable(&blind, &opts).unwrap().verdict);
        let full = lti(&[0.5, 1.0, -0.2, 0.3], &[1.0, 0.0], &[1.0, 0.0], 2);
        let rep = minimality_report(&full, &opts).unwrap();
        assert!(rep.minimal);
        assert_eq!(observability_lag(&full, &opts).unwrap(), Some(2));
    }

    #[test]
    fn pe_trivial_cases() {
        let u = Trajectory::zeros(1, 1, 10).unwrap();
        let p = Trajectory::zeros(2, 1, 10).unwrap();
        let r = check_pe(&u, &p, 3, RANK_TOL).unwrap();
        assert!(!r.verdict);
        assert_eq!((r.extended_input_rank, r.required), (0, 9));

        let mut rng = random::stream(3, 0);
        let u = random::uniform_trajectory(&mut rng, &[(-1.0, 1.0)], 1, 10).unwrap();
        let p0 = Trajectory::zeros(0, 1, 10).unwrap();
        let r = check_pe(&u, &p0, 1, RANK_TOL).unwrap();
        assert!(r.verdict);
        assert_eq!(r.extended_input_rank, 1);
        assert!(matches!(
            check_pe(&u, &p0, 11, RANK_TOL),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn pe_is_monotone_in_order() {
        let mut rng = random::stream(5, 0);
        let u = random::uniform_trajectory(&mut rng, &[(-1.0, 1.0)], 1, 30).unwrap();
        let p = random::uniform_trajectory(&mut rng, &[(-1.0, 1.0), (-1.0, 1.0)], 1, 30).unwrap();
        let mut prev = true;
        for l in 1..=12 {
            let v = check_pe(&u, &p, l, RANK_TOL).unwrap().verdict;
            assert!(prev || !v, "PE of order {l} without order {}", l - 1);
            prev = v;
        }
        assert!(check_pe(&u, &p, 7, RANK_TOL).unwrap().verdict);
        assert!(!check_pe(&u, &p, 9, RANK_TOL).unwrap().verdict);
    }
}
