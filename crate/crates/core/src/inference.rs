//! Estimation of the jump vector, jump size and asymptotic variance from a
//! fitted split, and assembly of confidence intervals under either limiting
//! regime.
//!
//! The asymptotic variance is read off a one-dimensional projection of the
//! series onto the estimated jump direction, which avoids estimating the
//! full `p x p` covariance.

use crate::changepoint::ChangePointFit;
use crate::error::{Error, Result};
use crate::limitdist::{
    quantile_nonvanishing, quantile_vanishing, IncrementLaw, Regime, RegimeKind, RwConfig,
};
use crate::mean_estimation::refit_means;
use crate::model::{JumpSummary, MeanPair, SeriesMatrix};

/// Plug-in variance estimate from the projected series.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    /// Sample variance of the projected residuals (divisor `T`).
    pub sigma_inf_sq_hat: f64,
    /// Euclidean norm of the refitted jump.
    pub xi_hat: f64,
    /// Projected segment means of the refitted fit.
    pub projected_means: (f64, f64),
}

/// A two-sided confidence interval for the change point.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalResult {
    pub tau_hat: usize,
    /// Regime the interval was built under, with the plug-in parameters used.
    pub regime: Regime,
    pub alpha: f64,
    /// Limiting-law quantile entering the margin.
    pub quantile: f64,
    /// Real-valued margin of error before rounding.
    pub margin: f64,
    /// Integer endpoints, margin rounded up and clipped to `[1, T-1]`.
    pub lo: usize,
    pub hi: usize,
}

/// Refits segment means on the given supports and summarizes the implied
/// jump. Returns the summary together with the refitted pair the projection
/// step needs.
pub fn estimate_jump(
    x: &SeriesMatrix,
    tau_hat: usize,
    support1: &[usize],
    support2: &[usize],
) -> Result<(JumpSummary, MeanPair)> {
    let refit = refit_means(x, tau_hat, support1, support2)?;
    let jump = JumpSummary::from_pair(&refit);
    Ok((jump, refit))
}

/// Sample variance of the series projected onto the normalized jump
/// direction: with `z_t = eta' x_t / xi` and projected segment means
/// `mu_1, mu_2`, returns `(1/T) [ sum_{t<=tau} (z_t - mu_1)^2 +
/// sum_{t>tau} (z_t - mu_2)^2 ]`.
pub fn estimate_sigma_inf(
    x: &SeriesMatrix,
    tau_hat: usize,
    jump: &JumpSummary,
    refit: &MeanPair,
) -> Result<VarianceEstimate> {
    let t_len = x.t_len();
    if tau_hat < 1 || tau_hat > t_len - 1 {
        return Err(Error::InvalidArgument(format!(
            "tau_hat = {tau_hat} outside 1..={}",
            t_len - 1
        )));
    }
    if jump.eta.len() != x.dim() || refit.dim() != x.dim() {
        return Err(Error::DimMismatch {
            expected: x.dim(),
            actual: jump.eta.len(),
        });
    }
    if jump.xi <= 0.0 {
        return Err(Error::DegenerateJump);
    }
    let inv_xi = 1.0 / jump.xi;
    let mu1 = inv_xi * jump.eta.dot(&refit.theta1);
    let mu2 = inv_xi * jump.eta.dot(&refit.theta2);
    let mut acc = 0.0;
    for t in 0..t_len {
        let z = inv_xi * jump.eta.dot(&x.row(t));
        let mu = if t < tau_hat { mu1 } else { mu2 };
        acc += (z - mu) * (z - mu);
    }
    Ok(VarianceEstimate {
        sigma_inf_sq_hat: acc / t_len as f64,
        xi_hat: jump.xi,
        projected_means: (mu1, mu2),
    })
}

/// Builds a confidence interval around the fit's final split.
///
/// Jump and variance are estimated from the fit's step-2 supports by
/// refitting. Vanishing regime: margin `q_v(alpha) sigma_hat^2 / xi_hat^2`.
/// Non-vanishing regime: margin is the simulated walk quantile with the
/// estimated `xi_hat` and `sigma_hat^2` plugged in. The margin is rounded
/// up and the interval clipped to `[1, T-1]`.
pub fn confidence_interval(
    x: &SeriesMatrix,
    fit: &ChangePointFit,
    kind: RegimeKind,
    alpha: f64,
    law: IncrementLaw,
    config: &RwConfig,
) -> Result<IntervalResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let tau_hat = fit.step2_tau;
    let (jump, refit) = estimate_jump(
        x,
        tau_hat,
        &fit.step2_means.support1,
        &fit.step2_means.support2,
    )?;
    if jump.xi <= 0.0 {
        return Err(Error::DegenerateJump);
    }
    let var = estimate_sigma_inf(x, tau_hat, &jump, &refit)?;
    let sigma_sq = var.sigma_inf_sq_hat;

    let (regime, quantile, margin) = match kind {
        RegimeKind::Vanishing => {
            let q = quantile_vanishing(alpha)?;
            let regime = Regime {
                kind: RegimeKind::Vanishing,
                sigma_inf_sq: sigma_sq,
                xi_inf: None,
                law: IncrementLaw::Gaussian,
            };
            (regime, q, q * sigma_sq / (jump.xi * jump.xi))
        }
        RegimeKind::NonVanishing => {
            if sigma_sq == 0.0 {
                // noiseless residuals: the walk is a deterministic descent
                // and its argmax sits at the origin
                let regime = Regime {
                    kind: RegimeKind::NonVanishing,
                    sigma_inf_sq: 0.0,
                    xi_inf: Some(jump.xi),
                    law,
                };
                (regime, 0.0, 0.0)
            } else {
                let regime = Regime::non_vanishing(jump.xi, sigma_sq, law)?;
                let q = quantile_nonvanishing(&regime, alpha, config)?;
                (regime, q, q)
            }
        }
    };

    let radius = margin.ceil() as usize;
    let lo = tau_hat.saturating_sub(radius).max(1);
    let hi = (tau_hat + radius).min(x.t_len() - 1);
    Ok(IntervalResult {
        tau_hat,
        regime,
        alpha,
        quantile,
        margin,
        lo,
        hi,
    })
}
