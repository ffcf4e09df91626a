//! Piecewise sample means, the soft-thresholding estimator, BIC tuning over
//! a threshold grid, and support-restricted refitting.

use ndarray::Array1;

use crate::error::{check_len, Error, Result};
use crate::model::{MeanPair, SeriesMatrix};

/// An ascending grid of positive soft-thresholding levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty lambda grid".into()));
        }
        if values[0] <= 0.0 || !values[0].is_finite() {
            return Err(Error::InvalidArgument("lambda grid must be positive".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1] || !w[1].is_finite()) {
            return Err(Error::InvalidArgument(
                "lambda grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// 25 equally spaced values in the open interval `(0, 0.5)`:
    /// `0.5 k / 26` for `k = 1..=25`, both endpoints excluded.
    pub fn default_grid() -> Self {
        let values = (1..=25).map(|k| 0.5 * k as f64 / 26.0).collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One evaluated point of the BIC criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicRecord {
    pub lambda: f64,
    pub score: f64,
    /// Size of the union of the two estimated supports.
    pub support_size: usize,
}

fn check_interior_tau(t_len: usize, tau: usize) -> Result<()> {
    if tau < 1 || tau > t_len - 1 {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} leaves an empty segment (need 1..={})",
            t_len - 1
        )));
    }
    Ok(())
}

/// Segment averages `(mean of rows 1..=tau, mean of rows tau+1..=T)`;
/// both segments must be nonempty.
pub fn piecewise_means(x: &SeriesMatrix, tau: usize) -> Result<(Array1<f64>, Array1<f64>)> {
    check_interior_tau(x.t_len(), tau)?;
    let dim = x.dim();
    let mut m1 = Array1::zeros(dim);
    let mut m2 = Array1::zeros(dim);
    for t in 0..x.t_len() {
        let target = if t < tau { &mut m1 } else { &mut m2 };
        *target += &x.row(t);
    }
    m1 /= tau as f64;
    m2 /= (x.t_len() - tau) as f64;
    Ok((m1, m2))
}

/// Componentwise `sign(v_j) (|v_j| - lambda)_+`.
pub fn soft_threshold(v: &Array1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    Ok(v.mapv(|x| {
        let shrunk = x.abs() - lambda;
        if shrunk > 0.0 {
            x.signum() * shrunk
        } else {
            0.0
        }
    }))
}

/// Soft-thresholded piecewise means at a split.
pub fn thresholded_means(
    x: &SeriesMatrix,
    tau: usize,
    lambda1: f64,
    lambda2: f64,
) -> Result<MeanPair> {
    let (m1, m2) = piecewise_means(x, tau)?;
    let theta1 = soft_threshold(&m1, lambda1)?;
    let theta2 = soft_threshold(&m2, lambda2)?;
    Ok(MeanPair::new(theta1, theta2, lambda1, lambda2))
}

/// BIC-type criterion for a fitted pair at a split:
/// residual sum of squares over both segments plus `|S| log T`, where `S`
/// is the union of the two estimated supports. Unlike the squared loss,
/// no `1/T` factor is applied.
pub fn bic_score(x: &SeriesMatrix, tau: usize, pair: &MeanPair) -> Result<BicRecord> {
    check_interior_tau(x.t_len(), tau)?;
    check_len(x.dim(), pair.dim())?;
    let mut rss = 0.0;
    for t in 0..x.t_len() {
        let theta = if t < tau { &pair.theta1 } else { &pair.theta2 };
        for (xv, th) in x.row(t).iter().zip(theta.iter()) {
            let d = xv - th;
            rss += d * d;
        }
    }
    let support_size = pair.support_union().len();
    let score = rss + support_size as f64 * (x.t_len() as f64).ln();
    Ok(BicRecord {
        lambda: pair.lambda1,
        score,
        support_size,
    })
}

/// Evaluates the BIC over the grid with a common threshold
/// `lambda1 = lambda2 = lambda` and returns the minimizing threshold and
/// its fitted pair. Score ties resolve to the largest (sparsest) lambda.
pub fn tune_lambda(x: &SeriesMatrix, tau: usize, grid: &LambdaGrid) -> Result<(f64, MeanPair)> {
    let mut best: Option<(f64, f64, MeanPair)> = None;
    for &lambda in grid.values() {
        let pair = thresholded_means(x, tau, lambda, lambda)?;
        let record = bic_score(x, tau, &pair)?;
        let take = match &best {
            None => true,
            Some((best_score, _, _)) => record.score <= *best_score,
        };
        if take {
            best = Some((record.score, lambda, pair));
        }
    }
    let (_, lambda, pair) = best.expect("grid is nonempty");
    Ok((lambda, pair))
}

/// Piecewise means restricted to the given supports (zero elsewhere,
/// thresholds recorded as 0).
pub fn refit_means(
    x: &SeriesMatrix,
    tau: usize,
    support1: &[usize],
    support2: &[usize],
) -> Result<MeanPair> {
    let dim = x.dim();
    for &j in support1.iter().chain(support2.iter()) {
        if j >= dim {
            return Err(Error::InvalidArgument(format!(
                "support index {j} out of range for p = {dim}"
            )));
        }
    }
    let (m1, m2) = piecewise_means(x, tau)?;
    let mut theta1 = Array1::zeros(dim);
    let mut theta2 = Array1::zeros(dim);
    for &j in support1 {
        theta1[j] = m1[j];
    }
    for &j in support2 {
        theta2[j] = m2[j];
    }
    Ok(MeanPair::new(theta1, theta2, 0.0, 0.0))
}

/// The rate-theoretic threshold
/// `8 max( sigma sqrt(2 c_u1 log(p v T) / (c_u T l_T)), u_T psi / (c_u l_T) )`.
///
/// Provided as a diagnostic only: it depends on quantities (`sigma`, `l_T`,
/// `psi`) that are unknown in practice, which is why the estimation pipeline
/// tunes thresholds by BIC instead.
#[allow(clippy::too_many_arguments)]
pub fn theoretical_lambda(
    sigma: f64,
    t_len: usize,
    dim: usize,
    l_t: f64,
    u_t: f64,
    psi: f64,
    c_u: f64,
    c_u1: f64,
) -> f64 {
    let log_pt = (dim.max(t_len) as f64).ln();
    let first = sigma * (2.0 * c_u1 * log_pt / (c_u * t_len as f64 * l_t)).sqrt();
    let second = u_t * psi / (c_u * l_t);
    8.0 * first.max(second)
}
