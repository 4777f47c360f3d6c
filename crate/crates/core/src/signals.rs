//! Finite trajectories and the matrices built from them.
//!
//! A [`Trajectory`] carries its time labels explicitly, so windows taken out
//! of a longer record keep their position on the time axis. Samples are stored
//! sample-major in one flat buffer; `vec` of a trajectory is that buffer.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A signal `w` restricted to the interval `[t_start, t_end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    t_start: i64,
    len: usize,
    data: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from a flat sample-major buffer.
    ///
    /// `dim` may be zero (an empty scheduling signal for LTI data); the
    /// number of samples is then carried by `len` alone.
    pub fn from_flat(dim: usize, t_start: i64, len: usize, data: Vec<f64>) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidShape(
                "trajectory must hold at least one sample".into(),
            ));
        }
        if data.len() != dim * len {
            return Err(Error::DimensionMismatch {
                what: "trajectory buffer",
                expected: dim * len,
                found: data.len(),
            });
        }
        Ok(Self {
            dim,
            t_start,
            len,
            data,
        })
    }

    pub fn from_rows<I, R>(dim: usize, t_start: i64, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        let mut len = 0;
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "trajectory sample",
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
            len += 1;
        }
        Self::from_flat(dim, t_start, len, data)
    }

    /// Scalar trajectory starting at `t_start`.
    pub fn scalar(t_start: i64, values: &[f64]) -> Result<Self> {
        Self::from_flat(1, t_start, values.len(), values.to_vec())
    }

    pub fn zeros(dim: usize, t_start: i64, len: usize) -> Result<Self> {
        Self::from_flat(dim, t_start, len, alloc::vec![0.0; dim * len])
    }

    /// Fills each sample with `f(t, sample)`.
    pub fn from_fn(
        dim: usize,
        t_start: i64,
        len: usize,
        mut f: impl FnMut(i64, &mut [f64]),
    ) -> Result<Self> {
        let mut data = alloc::vec![0.0; dim * len];
        for i in 0..len {
            f(t_start + i as i64, &mut data[i * dim..(i + 1) * dim]);
        }
        Self::from_flat(dim, t_start, len, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> i64 {
        self.t_start
    }

    pub fn t_end(&self) -> i64 {
        self.t_start + self.len as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.t_start && t <= self.t_end()
    }

    /// Sample at time `t`, if inside the interval.
    pub fn sample(&self, t: i64) -> Option<&[f64]> {
        if !self.contains(t) {
            return None;
        }
        let i = (t - self.t_start) as usize;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Sample at time `t`, or `WindowOutOfRange`.
    pub fn at(&self, t: i64) -> Result<&[f64]> {
        self.sample(t).ok_or(Error::WindowOutOfRange {
            needed_start: t,
            needed_end: t,
            available_start: self.t_start,
            available_end: self.t_end(),
        })
    }

    pub fn require_window(&self, from: i64, to: i64) -> Result<()> {
        if from < self.t_start || to > self.t_end() {
            return Err(Error::WindowOutOfRange {
                needed_start: from,
                needed_end: to,
                available_start: self.t_start,
                available_end: self.t_end(),
            });
        }
        Ok(())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Iterates `(t, sample)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &[f64])> + '_ {
        (0..self.len).map(move |i| {
            (
                self.t_start + i as i64,
                &self.data[i * self.dim..(i + 1) * self.dim],
            )
        })
    }

    /// Sub-trajectory over `[from, to]`, keeping time labels.
    pub fn window(&self, from: i64, to: i64) -> Result<Self> {
        if to < from {
            return Err(Error::InvalidShape(format!("empty window [{from}, {to}]")));
        }
        self.require_window(from, to)?;
        let a = (from - self.t_start) as usize;
        let b = (to - self.t_start) as usize + 1;
        Self::from_flat(
            self.dim,
            from,
            b - a,
            self.data[a * self.dim..b * self.dim].to_vec(),
        )
    }

    /// Same samples, relabelled to start at `t_start`.
    pub fn retimed(&self, t_start: i64) -> Self {
        Self {
            t_start,
            ..self.clone()
        }
    }

    /// `vec(w)`: the samples stacked into one column.
    pub fn vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    /// `w1 ∧ w2`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.t_start != self.t_end() + 1 {
            return Err(Error::NonAdjacentIntervals {
                left_end: self.t_end(),
                right_start: other.t_start,
            });
        }
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                what: "concatenated trajectory",
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_flat(self.dim, self.t_start, self.len + other.len, data)
    }

    /// Channel-wise stacking `col(self, other)` over a shared interval.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        self.require_same_interval(other)?;
        let dim = self.dim + other.dim;
        Self::from_fn(dim, self.t_start, self.len, |t, out| {
            let (a, b) = out.split_at_mut(self.dim);
            a.copy_from_slice(self.sample(t).unwrap_or_default());
            b.copy_from_slice(other.sample(t).unwrap_or_default());
        })
    }

    /// Keeps channels `range` of every sample.
    pub fn channels(&self, range: core::ops::Range<usize>) -> Result<Self> {
        if range.end > self.dim || range.start > range.end {
            return Err(Error::InvalidShape(format!(
                "channel range {range:?} outside dimension {}",
                self.dim
            )));
        }
        let width = range.end - range.start;
        Self::from_fn(width, self.t_start, self.len, |t, out| {
            out.copy_from_slice(&self.sample(t).unwrap_or_default()[range.clone()]);
        })
    }

    pub fn require_same_interval(&self, other: &Self) -> Result<()> {
        if self.t_start != other.t_start || self.len != other.len {
            return Err(Error::IntervalMismatch {
                a_start: self.t_start,
                a_end: self.t_end(),
                b_start: other.t_start,
                b_end: other.t_end(),
            });
        }
        Ok(())
    }

    /// Hankel matrix with `block_rows` block rows and `cols` columns.
    pub fn hankel(&self, block_rows: usize, cols: usize) -> Result<HankelMatrix> {
        if block_rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(
                "Hankel dimensions must be positive".into(),
            ));
        }
        if block_rows > self.len || cols > self.len - block_rows + 1 {
            return Err(Error::InvalidShape(format!(
                "Hankel {block_rows}x{cols} does not fit a trajectory of length {}",
                self.len
            )));
        }
        let d = self.dim;
        let data = DMatrix::from_fn(block_rows * d, cols, |r, c| {
            let (i, ch) = (r / d, r % d);
            self.data[(i + c) * d + ch]
        });
        Ok(HankelMatrix {
            block_rows,
            cols,
            block_dim: d,
            data,
        })
    }

    /// Hankel matrix with the maximal number of columns `T - block_rows + 1`.
    pub fn hankel_max(&self, block_rows: usize) -> Result<HankelMatrix> {
        if block_rows == 0 || block_rows > self.len {
            return Err(Error::InvalidShape(format!(
                "depth {block_rows} invalid for a trajectory of length {}",
                self.len
            )));
        }
        self.hankel(block_rows, self.len - block_rows + 1)
    }

    /// Per-sample `col(w(k), p(k) ⊗ w(k))`, `p` in major order.
    pub fn kron_extend(&self, p: &Self) -> Result<Self> {
        self.require_same_interval(p)?;
        let (nw, np) = (self.dim, p.dim);
        Self::from_fn((1 + np) * nw, self.t_start, self.len, |t, out| {
            let w = self.sample(t).unwrap_or_default();
            let pk = p.sample(t).unwrap_or_default();
            out[..nw].copy_from_slice(w);
            for (j, pj) in pk.iter().enumerate() {
                for (r, wr) in w.iter().enumerate() {
                    out[nw + j * nw + r] = pj * wr;
                }
            }
        })
    }
}

/// `H_{t1,t2}(w)` together with its block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelMatrix {
    pub block_rows: usize,
    pub cols: usize,
    pub block_dim: usize,
    pub data: DMatrix<f64>,
}

impl HankelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Block `(i, j)`, zero-based.
    pub fn block(&self, i: usize, j: usize) -> DVector<f64> {
        let d = self.block_dim;
        self.data.view((i * d, j), (d, 1)).column(0).into_owned()
    }
}

/// Block-diagonal matrix with diagonal blocks `p̄(k) ⊗ I_n`.
///
/// Shape is `(L·n_p·n) × (L·n)` where `L` is the length of `p_bar`.
pub fn sched_block_diag(p_bar: &Trajectory, n: usize) -> DMatrix<f64> {
    let (l, np) = (p_bar.len(), p_bar.dim());
    let mut m = DMatrix::zeros(l * np * n, l * n);
    for (k, (_, pk)) in p_bar.iter().enumerate() {
        for (j, pj) in pk.iter().enumerate() {
            for r in 0..n {
                m[(k * np * n + j * n + r, k * n + r)] = *pj;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(dim: usize, t0: i64, len: usize) -> Trajectory {
        Trajectory::from_fn(dim, t0, len, |t, out| {
            for (c, v) in out.iter_mut().enumerate() {
                *v = (t as f64) * 10.0 + c as f64;
            }
        })
        .unwrap()
    }

    #[test]
    fn vec_stacks_samples() {
        let w = Trajectory::scalar(1, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(w.vec().as_slice(), &[1.0, 2.0, 3.0]);
        let w2 = Trajectory::from_rows(2, 1, [[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(w2.vec().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn concat_adjacent_and_rejects_gaps() {
        let a = Trajectory::scalar(1, &[1.0, 2.0]).unwrap();
        let b = Trajectory::scalar(3, &[3.0]).unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!((c.t_start(), c.t_end()), (1, 3));
        assert_eq!(c.as_flat(), &[1.0, 2.0, 3.0]);

        let gap = Trajectory::scalar(4, &[3.0]).unwrap();
        assert!(matches!(
            a.concat(&gap),
            Err(Error::NonAdjacentIntervals {
                left_end: 2,
                right_start: 4
            })
        ));
        let wide = Trajectory::zeros(2, 3, 1).unwrap();
        assert!(matches!(
            a.concat(&wide),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hankel_small_case() {
        let w = Trajectory::scalar(1, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let h = w.hankel_max(2).unwrap();
        let expect = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(h.data, expect);

        let full = w.hankel_max(5).unwrap();
        assert_eq!(full.cols, 1);
        assert_eq!(full.data.column(0).into_owned(), w.vec());
    }

    #[test]
    fn hankel_shape_errors() {
        let w = Trajectory::scalar(1, &[1.0, 2.0, 3.0]).unwrap();
        assert!(w.hankel(2, 3).is_err());
        assert!(w.hankel_max(4).is_err());
        assert!(w.hankel(0, 1).is_err());
    }

    #[test]
    fn kron_extend_examples() {
        let w = Trajectory::scalar(0, &[2.0]).unwrap();
        let p = Trajectory::from_rows(2, 0, [[3.0, 4.0]]).unwrap();
        assert_eq!(w.kron_extend(&p).unwrap().as_flat(), &[2.0, 6.0, 8.0]);

        let p0 = Trajectory::zeros(2, 0, 1).unwrap();
        assert_eq!(w.kron_extend(&p0).unwrap().as_flat(), &[2.0, 0.0, 0.0]);

        let shifted = Trajectory::zeros(2, 1, 1).unwrap();
        assert!(matches!(
            w.kron_extend(&shifted),
            Err(Error::IntervalMismatch { .. })
        ));
    }

    #[test]
    fn sched_block_diag_examples() {
        let p = Trajectory::from_rows(2, 1, [[2.0, 3.0]]).unwrap();
        assert_eq!(
            sched_block_diag(&p, 1),
            DMatrix::from_row_slice(2, 1, &[2.0, 3.0])
        );
        let z = Trajectory::zeros(2, 1, 3).unwrap();
        assert!(sched_block_diag(&z, 2).iter().all(|v| *v == 0.0));
        assert_eq!(sched_block_diag(&z, 2).shape(), (12, 6));
    }

    #[test]
    fn window_keeps_labels() {
        let w = ramp(2, -3, 8);
        let s = w.window(0, 2).unwrap();
        assert_eq!((s.t_start(), s.len()), (0, 3));
        assert_eq!(s.sample(1), w.sample(1));
        assert!(w.window(-4, 0).is_err());
    }

    #[test]
    fn zero_dimensional_trajectory() {
        let p = Trajectory::zeros(0, 1, 5).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p.sample(3), Some(&[][..]));
        let u = Trajectory::scalar(1, &[1.0; 5]).unwrap();
        assert_eq!(u.kron_extend(&p).unwrap(), u);
    }

    proptest! {
        #[test]
        fn concat_lengths_and_vec(a in prop::collection::vec(-5.0f64..5.0, 1..12),
                                  b in prop::collection::vec(-5.0f64..5.0, 1..12),
                                  t0 in -20i64..20) {
            let w1 = Trajectory::scalar(t0, &a).unwrap();
            let w2 = Trajectory::scalar(w1.t_end() + 1, &b).unwrap();
            let w = w1.concat(&w2).unwrap();
            prop_assert_eq!(w.len(), w1.len() + w2.len());
            let mut stacked = a.clone();
            stacked.extend_from_slice(&b);
            prop_assert_eq!(w.as_flat(), &stacked[..]);
        }

        #[test]
        fn hankel_columns_are_windows(dim in 1usize..4, len in 2usize..20, depth_frac in 0.0f64..1.0) {
            let w = ramp(dim, 5, len);
            let depth = 1 + ((len - 1) as f64 * depth_frac) as usize;
            let h = w.hankel_max(depth).unwrap();
            for j in 0..h.cols {
                let t = w.t_start() + j as i64;
                let win = w.window(t, t + depth as i64 - 1).unwrap();
                prop_assert_eq!(h.data.column(j).into_owned(), win.vec());
            }
            // shift structure
            for i in 0..depth - 1 {
                for j in 0..h.cols - 1 {
                    prop_assert_eq!(h.block(i + 1, j), h.block(i, j + 1));
                }
            }
        }

        #[test]
        fn kron_dims_and_block_diag_identity(nw in 1usize..4, np in 0usize..4, len in 1usize..6,
                                             seed in any::<u64>()) {
            let mut s = seed;
            let mut next = move || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
            };
            let w = Trajectory::from_fn(nw, 1, len, |_, o| o.iter_mut().for_each(|v| *v = next())).unwrap();
            let p = Trajectory::from_fn(np, 1, len, |_, o| o.iter_mut().for_each(|v| *v = next())).unwrap();
            let ext = w.kron_extend(&p).unwrap();
            prop_assert_eq!(ext.dim(), (1 + np) * nw);

            // sched_block_diag(p, n_w) · vec(w) == vec(p ⊗ w)
            let pw = ext.channels(nw..ext.dim()).unwrap();
            let lhs = sched_block_diag(&p, nw) * w.vec();
            let diff = (lhs - pw.vec()).amax();
            prop_assert!(diff <= 1e-15);

            // regrouping H_L(col(w, p⊗w)) recovers H_L(w)
            let depth = len;
            let he = ext.hankel_max(depth).unwrap();
            let hw = w.hankel_max(depth).unwrap();
            let d = ext.dim();
            for i in 0..depth {
                for r in 0..nw {
                    prop_assert_eq!(he.data.row(i * d + r).into_owned(), hw.data.row(i * nw + r).into_owned());
                }
            }
        }
    }

    #[test]
    fn stack_and_channels_round_trip() {
        let u = ramp(1, 1, 4);
        let y = ramp(2, 1, 4);
        let w = u.stack(&y).unwrap();
        assert_eq!(w.dim(), 3);
        assert_eq!(w.channels(0..1).unwrap(), u);
        assert_eq!(w.channels(1..3).unwrap(), y);
    }
}
