//! Core data containers, the squared loss over a candidate split, the gain
//! process used by the argmin/argmax search, and column centering.
//!
//! Time indices follow the convention that a split at `tau` assigns rows
//! `1..=tau` (1-based) to the first segment and the rest to the second; a
//! split at `0` or `T` leaves one segment empty and the corresponding sum is
//! zero.

use std::ops::RangeInclusive;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{check_len, Error, Result};

/// An observed `T x p` panel, one time point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    data: Array2<f64>,
}

impl SeriesMatrix {
    /// Wraps a `T x p` matrix, requiring `T >= 2`, `p >= 1` and finite
    /// entries. The asymptotic theory wants `p >= 3` (so `log p >= 1`), but
    /// smaller panels are accepted.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (t_len, dim) = data.dim();
        if t_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "series needs at least 2 rows, got {t_len}"
            )));
        }
        if dim < 1 {
            return Err(Error::InvalidArgument(
                "series needs at least 1 column".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        Ok(Self { data })
    }

    /// Builds a series from row vectors, all of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no rows".into()));
        }
        let dim = rows[0].len();
        let mut data = Array2::zeros((rows.len(), dim));
        for (t, row) in rows.iter().enumerate() {
            check_len(dim, row.len())?;
            for (j, v) in row.iter().enumerate() {
                data[[t, j]] = *v;
            }
        }
        Self::new(data)
    }

    pub fn t_len(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.data.row(t)
    }

    pub(crate) fn from_validated(data: Array2<f64>) -> Self {
        Self { data }
    }
}

/// A pair of segment mean estimates together with their supports and the
/// soft-thresholding levels that produced them (`0` when unregularized).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPair {
    pub theta1: Array1<f64>,
    pub theta2: Array1<f64>,
    /// Indices of the nonzero entries of `theta1`, ascending.
    pub support1: Vec<usize>,
    /// Indices of the nonzero entries of `theta2`, ascending.
    pub support2: Vec<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl MeanPair {
    /// Records a pair of mean vectors; supports are read off the exact zero
    /// pattern.
    pub fn new(theta1: Array1<f64>, theta2: Array1<f64>, lambda1: f64, lambda2: f64) -> Self {
        let support1 = support_of(theta1.view());
        let support2 = support_of(theta2.view());
        Self {
            theta1,
            theta2,
            support1,
            support2,
            lambda1,
            lambda2,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta1.len()
    }

    /// Union of the two supports, ascending.
    pub fn support_union(&self) -> Vec<usize> {
        union_sorted(&self.support1, &self.support2)
    }
}

/// Indices of nonzero entries, ascending.
pub fn support_of(v: ArrayView1<'_, f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(j, _)| j)
        .collect()
}

pub(crate) fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// The estimated jump between the two segments.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSummary {
    /// `eta = theta1 - theta2`.
    pub eta: Array1<f64>,
    /// Euclidean norm of `eta`.
    pub xi: f64,
    /// Max-absolute entry of `eta`.
    pub psi: f64,
    /// Union of the supports of the two mean estimates, ascending.
    pub support_union: Vec<usize>,
}

impl JumpSummary {
    pub fn new(eta: Array1<f64>, support_union: Vec<usize>) -> Self {
        let xi = eta.dot(&eta).sqrt();
        let psi = eta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self {
            eta,
            xi,
            psi,
            support_union,
        }
    }

    pub fn from_pair(pair: &MeanPair) -> Self {
        let eta = &pair.theta1 - &pair.theta2;
        Self::new(eta, pair.support_union())
    }
}

/// The gain process `C(tau) = -T (Q(tau) - Q(anchor))` on an inclusive tau
/// range; larger values indicate a better split, so the loss argmin is the
/// profile argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile {
    tau_lo: usize,
    values: Vec<f64>,
    anchor: usize,
}

impl GainProfile {
    pub fn tau_range(&self) -> RangeInclusive<usize> {
        self.tau_lo..=self.tau_lo + self.values.len() - 1
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a tau inside the profile range.
    pub fn value_at(&self, tau: usize) -> f64 {
        self.values[tau - self.tau_lo]
    }

    /// Argmax over the intersection of the profile range and `range`;
    /// ties resolve to the smallest tau.
    pub fn argmax_in(&self, range: RangeInclusive<usize>) -> Result<usize> {
        let lo = (*range.start()).max(self.tau_lo);
        let hi = (*range.end()).min(self.tau_lo + self.values.len() - 1);
        if lo > hi {
            return Err(Error::InvalidArgument("empty search range".into()));
        }
        let mut best_tau = lo;
        let mut best = self.value_at(lo);
        for tau in lo + 1..=hi {
            let v = self.value_at(tau);
            if v > best {
                best = v;
                best_tau = tau;
            }
        }
        Ok(best_tau)
    }
}

fn sq_dist(row: ArrayView1<'_, f64>, theta: &Array1<f64>) -> f64 {
    row.iter()
        .zip(theta.iter())
        .map(|(x, th)| {
            let d = x - th;
            d * d
        })
        .sum()
}

/// Squared loss `Q(tau, theta1, theta2)`: the average over all rows of the
/// squared distance to the segment mean the split assigns them, i.e.
/// `(1/T) sum_{t<=tau} ||x_t - theta1||^2 + (1/T) sum_{t>tau} ||x_t - theta2||^2`.
/// Empty boundary sums are zero.
pub fn squared_loss(
    x: &SeriesMatrix,
    tau: usize,
    theta1: &Array1<f64>,
    theta2: &Array1<f64>,
) -> Result<f64> {
    let t_len = x.t_len();
    check_len(x.dim(), theta1.len())?;
    check_len(x.dim(), theta2.len())?;
    if tau > t_len {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} outside [0, {t_len}]"
        )));
    }
    let mut acc = 0.0;
    for t in 0..t_len {
        let theta = if t < tau { theta1 } else { theta2 };
        acc += sq_dist(x.row(t), theta);
    }
    Ok(acc / t_len as f64)
}

/// Gain profile over the full range `0..=T`, anchored so that
/// `values[anchor] = 0` exactly.
///
/// Computed in `O(T p)` total: moving the split past row `t` changes `-T Q`
/// by `||x_t - theta2||^2 - ||x_t - theta1||^2`, so the profile is a running
/// sum of those per-row differences re-based at the anchor.
pub fn gain_profile(
    x: &SeriesMatrix,
    theta1: &Array1<f64>,
    theta2: &Array1<f64>,
    anchor: usize,
) -> Result<GainProfile> {
    let t_len = x.t_len();
    check_len(x.dim(), theta1.len())?;
    check_len(x.dim(), theta2.len())?;
    if anchor > t_len {
        return Err(Error::InvalidArgument(format!(
            "anchor = {anchor} outside [0, {t_len}]"
        )));
    }
    let mut partial = Vec::with_capacity(t_len + 1);
    partial.push(0.0);
    let mut acc = 0.0;
    for t in 0..t_len {
        let row = x.row(t);
        acc += sq_dist(row, theta2) - sq_dist(row, theta1);
        partial.push(acc);
    }
    let base = partial[anchor];
    let values = partial.iter().map(|v| v - base).collect();
    Ok(GainProfile {
        tau_lo: 0,
        values,
        anchor,
    })
}

/// Subtracts the column-wise grand mean from every row.
pub fn center_columns(x: &SeriesMatrix) -> SeriesMatrix {
    let mean = x
        .data()
        .mean_axis(Axis(0))
        .expect("series has at least one row");
    let centered = x.data() - &mean;
    SeriesMatrix::from_validated(centered)
}
