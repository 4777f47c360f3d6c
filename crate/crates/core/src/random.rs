//! Portable pseudo-random draws.
//!
//! Every stream is a ChaCha8 generator seeded from a `u64` seed and selected
//! with an explicit stream id, so draws do not depend on platform or on the
//! order in which other streams are consumed.

pub use rand_chacha::rand_core::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::LpvSsModel;
use crate::schedcalc::{CoeffMatrix, PolyCoeff};
use crate::signals::Trajectory;

pub const GENERATOR: &str = "ChaCha8";

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform on `[0, 1)` from the top 53 bits of one `u64`.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Trajectory with channel `i` uniform on `bounds[i]`, drawn sample-major.
pub fn uniform_trajectory(
    rng: &mut impl RngCore,
    bounds: &[(f64, f64)],
    t_start: i64,
    len: usize,
) -> Result<Trajectory> {
    if let Some((lo, hi)) = bounds
        .iter()
        .find(|(lo, hi)| lo > hi || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::InvalidShape(alloc::format!(
            "invalid bound [{lo}, {hi}]"
        )));
    }
    Trajectory::from_fn(bounds.len(), t_start, len, |_, out| {
        for (o, (lo, hi)) in out.iter_mut().zip(bounds) {
            *o = uniform(rng, *lo, *hi);
        }
    })
}

/// Matrix with entries `c_0 + Σ_j c_j p_j(k)`, every `c` uniform on
/// `[-scale, scale]`.
pub fn affine_coeff_matrix(
    rng: &mut impl RngCore,
    n_p: usize,
    rows: usize,
    cols: usize,
    scale: f64,
) -> CoeffMatrix {
    CoeffMatrix::from_fn(n_p, rows, cols, |_, _| {
        let c: alloc::vec::Vec<f64> = (0..=n_p).map(|_| uniform(rng, -scale, scale)).collect();
        PolyCoeff::affine(n_p, &c, 0)
    })
    .expect("affine entries match n_p")
}

/// State-space model with affine dependence on `p(k)`. `A` is scaled by
/// `1 / (n_x (1 + n_p))` so that responses stay bounded for `p` in `[-1, 1]`.
pub fn affine_ss_model(
    rng: &mut impl RngCore,
    n_x: usize,
    n_u: usize,
    n_y: usize,
    n_p: usize,
) -> LpvSsModel {
    let a_scale = 0.9 / (n_x.max(1) * (1 + n_p)) as f64;
    let a = affine_coeff_matrix(rng, n_p, n_x, n_x, a_scale);
    let b = affine_coeff_matrix(rng, n_p, n_x, n_u, 1.0);
    let c = affine_coeff_matrix(rng, n_p, n_y, n_x, 1.0);
    let d = affine_coeff_matrix(rng, n_p, n_y, n_u, 1.0);
    LpvSsModel::new(a, b, c, d)
}
