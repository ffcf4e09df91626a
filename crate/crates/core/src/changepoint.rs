//! The plug-in argmin estimator, coarse-grid initialization, the two-step
//! refinement algorithms, and the regularized boundary (no-change) test.

use std::ops::RangeInclusive;
use std::time::Instant;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::mean_estimation::{tune_lambda, LambdaGrid};
use crate::model::{gain_profile, squared_loss, GainProfile, MeanPair, SeriesMatrix};

/// Full output of the two-step estimation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointFit {
    /// Initializer the pipeline started from.
    pub init_tau: usize,
    /// Split after the first argmin update.
    pub step1_tau: usize,
    /// Final split after the second argmin update.
    pub step2_tau: usize,
    /// Tuned thresholded means at the initializer.
    pub step1_means: MeanPair,
    /// Tuned thresholded means at `step1_tau`.
    pub step2_means: MeanPair,
    pub step1_lambda: f64,
    pub step2_lambda: f64,
    /// Gain profile of the second step (anchor 0), kept for diagnostics.
    pub profile: GainProfile,
    /// Wall-clock time of the full tuned pipeline.
    pub elapsed_seconds: f64,
}

/// Outcome of the regularized boundary test: `selected_tau == T` means no
/// change was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDecision {
    pub gamma: f64,
    /// Loss at the no-change split `tau = T`.
    pub q_at_t: f64,
    /// Loss at the interior argmin.
    pub q_at_hat: f64,
    /// Interior argmin if its loss beats the boundary by at least gamma,
    /// otherwise `T`.
    pub selected_tau: usize,
}

/// Minimizer of `Q(tau, theta1, theta2)` over the given split range,
/// computed through the `O(T p)` gain profile. Ties resolve to the
/// smallest tau.
pub fn plugin_argmin(
    x: &SeriesMatrix,
    theta1: &Array1<f64>,
    theta2: &Array1<f64>,
    range: RangeInclusive<usize>,
) -> Result<usize> {
    if range.is_empty() || *range.end() > x.t_len() {
        return Err(Error::InvalidArgument(format!(
            "search range {:?} not inside [0, {}]",
            range,
            x.t_len()
        )));
    }
    let profile = gain_profile(x, theta1, theta2, 0)?;
    profile.argmax_in(range)
}

/// Default number of coarse-grid candidates: `max(3, round(ln T))`.
pub fn default_grid_count(t_len: usize) -> usize {
    ((t_len as f64).ln().round() as usize).max(3)
}

/// Coarse-grid pick of an initializer: `grid_count` equally spaced interior
/// candidates, each fitted with BIC-tuned thresholded means; the candidate
/// with the smallest loss at its own fit wins.
pub fn coarse_grid_init(
    x: &SeriesMatrix,
    grid_count: usize,
    lambda_grid: &LambdaGrid,
) -> Result<usize> {
    if grid_count < 1 {
        return Err(Error::InvalidArgument("grid_count must be >= 1".into()));
    }
    let t_len = x.t_len();
    if t_len < 3 {
        return Err(Error::InvalidArgument(
            "need T >= 3 for an interior candidate".into(),
        ));
    }
    let mut best: Option<(f64, usize)> = None;
    let mut last_candidate = usize::MAX;
    for k in 1..=grid_count {
        let candidate = (t_len * k / (grid_count + 1)).clamp(1, t_len - 1);
        if candidate == last_candidate {
            continue;
        }
        last_candidate = candidate;
        let (_, pair) = tune_lambda(x, candidate, lambda_grid)?;
        let q = squared_loss(x, candidate, &pair.theta1, &pair.theta2)?;
        if best.map_or(true, |(bq, _)| q < bq) {
            best = Some((q, candidate));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

fn check_fit_preconditions(x: &SeriesMatrix, tau: usize, label: &str) -> Result<()> {
    let t_len = x.t_len();
    if t_len < 3 {
        return Err(Error::InvalidArgument(format!(
            "two-step estimation needs T >= 3, got {t_len}"
        )));
    }
    if tau < 1 || tau > t_len - 1 {
        return Err(Error::InvalidArgument(format!(
            "{label} = {tau} outside 1..={}",
            t_len - 1
        )));
    }
    Ok(())
}

/// Two-step pipeline: tune thresholded means at the initializer, take the
/// plug-in argmin, re-tune at that split, and take the argmin once more.
/// Exactly two change-point updates are performed; further iterations bring
/// no statistical improvement.
///
/// `init_tau` defaults to `T / 2`, the farthest initializer in a mean
/// distance sense, which the estimator is insensitive to.
pub fn algorithm1(
    x: &SeriesMatrix,
    init_tau: Option<usize>,
    lambda_grid: &LambdaGrid,
) -> Result<ChangePointFit> {
    let start = Instant::now();
    let t_len = x.t_len();
    let init = init_tau.unwrap_or(t_len / 2);
    check_fit_preconditions(x, init, "init_tau")?;

    let (step1_lambda, step1_means) = tune_lambda(x, init, lambda_grid)?;
    let step1_tau = plugin_argmin(
        x,
        &step1_means.theta1,
        &step1_means.theta2,
        1..=t_len - 1,
    )?;

    let fit = second_step(x, init, step1_tau, step1_lambda, step1_means, lambda_grid)?;
    Ok(ChangePointFit {
        elapsed_seconds: start.elapsed().as_secs_f64(),
        ..fit
    })
}

/// Second-step refinement of an externally supplied near-optimal estimate:
/// tunes thresholded means at `step1_tau` and performs one argmin update.
/// The step-1 fields of the output echo that tuning.
pub fn algorithm2(
    x: &SeriesMatrix,
    step1_tau: usize,
    lambda_grid: &LambdaGrid,
) -> Result<ChangePointFit> {
    let start = Instant::now();
    check_fit_preconditions(x, step1_tau, "step1_tau")?;
    let (lambda, means) = tune_lambda(x, step1_tau, lambda_grid)?;
    let fit = second_step(x, step1_tau, step1_tau, lambda, means, lambda_grid)?;
    Ok(ChangePointFit {
        elapsed_seconds: start.elapsed().as_secs_f64(),
        ..fit
    })
}

fn second_step(
    x: &SeriesMatrix,
    init_tau: usize,
    step1_tau: usize,
    step1_lambda: f64,
    step1_means: MeanPair,
    lambda_grid: &LambdaGrid,
) -> Result<ChangePointFit> {
    let t_len = x.t_len();
    let (step2_lambda, step2_means) = tune_lambda(x, step1_tau, lambda_grid)?;
    let profile = gain_profile(x, &step2_means.theta1, &step2_means.theta2, 0)?;
    let step2_tau = profile.argmax_in(1..=t_len - 1)?;
    Ok(ChangePointFit {
        init_tau,
        step1_tau,
        step2_tau,
        step1_means,
        step2_means,
        step1_lambda,
        step2_lambda,
        profile,
        elapsed_seconds: 0.0,
    })
}

/// Default boundary-test threshold `2 p ln(T) / T`, a rough upper bound on
/// the loss gap residual noise can produce under no change.
pub fn default_boundary_gamma(t_len: usize, dim: usize) -> f64 {
    2.0 * dim as f64 * (t_len as f64).ln() / t_len as f64
}

/// Regularized boundary test: returns the interior argmin unless its loss
/// improvement over the no-change split `tau = T` is below gamma, in which
/// case `T` ("no change") is selected.
pub fn boundary_test(
    x: &SeriesMatrix,
    theta1: &Array1<f64>,
    theta2: &Array1<f64>,
    gamma: f64,
) -> Result<BoundaryDecision> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let t_len = x.t_len();
    let tau_hat = plugin_argmin(x, theta1, theta2, 1..=t_len - 1)?;
    let q_at_t = squared_loss(x, t_len, theta1, theta2)?;
    let q_at_hat = squared_loss(x, tau_hat, theta1, theta2)?;
    let selected_tau = if q_at_t - q_at_hat < gamma { t_len } else { tau_hat };
    Ok(BoundaryDecision {
        gamma,
        q_at_t,
        q_at_hat,
        selected_tau,
    })
}
