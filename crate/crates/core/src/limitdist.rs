//! Quantiles of the two limiting laws of the change-point estimator: the
//! argmax of a two-sided drifted Brownian motion (vanishing-jump regime) and
//! the argmax of a two-sided negative-drift random walk over the integers
//! (non-vanishing regime).
//!
//! Both laws are symmetric around zero, so a confidence interval is a single
//! radius: the upper quantile of the argmax magnitude. Simulations run one
//! independent generator per (replication, side) so results are bit-identical
//! for any thread count.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, substream_seed};

/// Which limiting law applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// Jump size tends to zero; Brownian-motion limit.
    Vanishing,
    /// Jump size tends to a positive constant; random-walk limit.
    NonVanishing,
}

/// Parametric family of the walk increments (the projected-noise law).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementLaw {
    Gaussian,
    Laplace,
}

/// A limiting regime with its plug-in parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Asymptotic variance of the projected noise.
    pub sigma_inf_sq: f64,
    /// Limiting jump size; only present in the non-vanishing regime.
    pub xi_inf: Option<f64>,
    pub law: IncrementLaw,
}

impl Regime {
    pub fn vanishing(sigma_inf_sq: f64) -> Result<Self> {
        if sigma_inf_sq <= 0.0 || !sigma_inf_sq.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_inf_sq must be positive, got {sigma_inf_sq}"
            )));
        }
        Ok(Self {
            kind: RegimeKind::Vanishing,
            sigma_inf_sq,
            xi_inf: None,
            law: IncrementLaw::Gaussian,
        })
    }

    pub fn non_vanishing(xi_inf: f64, sigma_inf_sq: f64, law: IncrementLaw) -> Result<Self> {
        if xi_inf <= 0.0 || !xi_inf.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "xi_inf must be positive, got {xi_inf}"
            )));
        }
        if sigma_inf_sq <= 0.0 || !sigma_inf_sq.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_inf_sq must be positive, got {sigma_inf_sq}"
            )));
        }
        Ok(Self {
            kind: RegimeKind::NonVanishing,
            sigma_inf_sq,
            xi_inf: Some(xi_inf),
            law,
        })
    }
}

/// Adaptive-horizon rule for walk truncation: start at `initial` steps per
/// side and double until the running max sits strictly inside the first half
/// and the end value has fallen `margin_sds` increment standard deviations
/// below it. Negative drift makes the argmax almost surely finite, so this
/// terminates with the exact (untruncated) argmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonPolicy {
    pub initial: usize,
    pub margin_sds: f64,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        Self {
            initial: 64,
            margin_sds: 10.0,
        }
    }
}

/// Replication count, seed and truncation rule for walk simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwConfig {
    pub replications: usize,
    pub seed: u64,
    pub horizon: HorizonPolicy,
}

impl RwConfig {
    pub fn new(replications: usize, seed: u64) -> Result<Self> {
        if replications < 1 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        Ok(Self {
            replications,
            seed,
            horizon: HorizonPolicy::default(),
        })
    }
}

impl Default for RwConfig {
    fn default() -> Self {
        Self {
            replications: 3000,
            seed: 0,
            horizon: HorizonPolicy::default(),
        }
    }
}

/// Monte-Carlo defaults for the vanishing-regime quantile at levels other
/// than the pinned one.
pub const VANISHING_MC_PATHS: usize = 200_000;
pub const VANISHING_MC_STEP: f64 = 0.01;
pub const VANISHING_MC_SEED: u64 = 17;

/// Upper bound on adaptive doubling; unreachable for any admissible drift.
const MAX_HORIZON_STEPS: usize = 1 << 26;

#[derive(Clone, Copy)]
enum Increment {
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl Increment {
    fn for_regime(law: IncrementLaw, mean: f64, variance: f64) -> Self {
        match law {
            IncrementLaw::Gaussian => Increment::Gaussian {
                mean,
                sd: variance.sqrt(),
            },
            // variance of Laplace(scale b) is 2 b^2
            IncrementLaw::Laplace => Increment::Laplace {
                mean,
                scale: (variance / 2.0).sqrt(),
            },
        }
    }

    fn sd(&self) -> f64 {
        match *self {
            Increment::Gaussian { sd, .. } => sd,
            Increment::Laplace { scale, .. } => std::f64::consts::SQRT_2 * scale,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Increment::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            Increment::Laplace { mean, scale } => {
                let u: f64 = rng.sample(Open01);
                let c = u - 0.5;
                mean - scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
            }
        }
    }
}

/// Runs one side of a walk out to an adaptive horizon and returns the side's
/// running maximum and its (1-based) index. Ties keep the earliest index.
fn side_max_adaptive(
    rng: &mut ChaCha8Rng,
    inc: Increment,
    policy: HorizonPolicy,
) -> Result<(f64, usize)> {
    let margin = policy.margin_sds * inc.sd();
    let mut horizon = policy.initial.max(2);
    let mut pos = 0usize;
    let mut value = 0.0;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_k = 0usize;
    loop {
        while pos < horizon {
            pos += 1;
            value += inc.sample(rng);
            if value > best_v {
                best_v = value;
                best_k = pos;
            }
        }
        if best_k * 2 < horizon && value < best_v - margin {
            return Ok((best_v, best_k));
        }
        if horizon >= MAX_HORIZON_STEPS {
            return Err(Error::InvalidArgument(
                "walk failed to stabilize within the maximum horizon".into(),
            ));
        }
        horizon *= 2;
    }
}

/// Fixed-horizon variant: exactly `steps` increments, no stop rule.
fn side_max_fixed(rng: &mut ChaCha8Rng, inc: Increment, steps: usize) -> (f64, usize) {
    let mut value = 0.0;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_k = 0usize;
    for pos in 1..=steps {
        value += inc.sample(rng);
        if value > best_v {
            best_v = value;
            best_k = pos;
        }
    }
    (best_v, best_k)
}

fn rw_increment(regime: &Regime) -> Result<Increment> {
    if regime.kind != RegimeKind::NonVanishing {
        return Err(Error::InvalidArgument(
            "random-walk simulation needs a non-vanishing regime".into(),
        ));
    }
    let xi = regime.xi_inf.ok_or_else(|| {
        Error::InvalidArgument("non-vanishing regime is missing xi_inf".into())
    })?;
    if xi <= 0.0 || regime.sigma_inf_sq <= 0.0 {
        return Err(Error::InvalidArgument(
            "xi_inf and sigma_inf_sq must be positive".into(),
        ));
    }
    let xi_sq = xi * xi;
    Ok(Increment::for_regime(
        regime.law,
        -xi_sq,
        4.0 * xi_sq * regime.sigma_inf_sq,
    ))
}

/// Combines the origin and the two side maxima into the walk's global argmax
/// over the integers. The walk is zero at the origin; exact value ties (a
/// null event for continuous increments) resolve toward zero.
fn combine_sides(pos: (f64, usize), neg: (f64, usize)) -> i64 {
    let mut best_v = 0.0;
    let mut best_k = 0i64;
    if pos.0 > best_v {
        best_v = pos.0;
        best_k = pos.1 as i64;
    }
    if neg.0 > best_v {
        best_k = -(neg.1 as i64);
    }
    best_k
}

fn side_rng(seed: u64, replication: usize, side: u64) -> ChaCha8Rng {
    rng_from_seed(substream_seed(seed, &[replication as u64, side]))
}

/// Draws `config.replications` realizations of the argmax (over the
/// integers) of the two-sided negative-drift random walk whose increments
/// have mean `-xi_inf^2` and variance `4 xi_inf^2 sigma_inf_sq` under the
/// regime's law. Deterministic for a fixed config, independent of threading.
pub fn simulate_rw_argmax(regime: &Regime, config: &RwConfig) -> Result<Vec<i64>> {
    let inc = rw_increment(regime)?;
    if config.replications < 1 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let pos = side_max_adaptive(&mut side_rng(config.seed, rep, 0), inc, config.horizon)?;
            let neg = side_max_adaptive(&mut side_rng(config.seed, rep, 1), inc, config.horizon)?;
            Ok(combine_sides(pos, neg))
        })
        .collect()
}

/// Same as [`simulate_rw_argmax`] but with both sides truncated at a fixed
/// number of steps. Used to verify that the adaptive horizon loses nothing.
pub fn simulate_rw_argmax_truncated(
    regime: &Regime,
    config: &RwConfig,
    steps: usize,
) -> Result<Vec<i64>> {
    let inc = rw_increment(regime)?;
    if steps < 1 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    Ok((0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let pos = side_max_fixed(&mut side_rng(config.seed, rep, 0), inc, steps);
            let neg = side_max_fixed(&mut side_rng(config.seed, rep, 1), inc, steps);
            combine_sides(pos, neg)
        })
        .collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Order-statistic quantile: the `ceil(level n)`-th smallest value.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Symmetric interval radius for the non-vanishing regime: the empirical
/// `(1 - alpha)` quantile of `|argmax|`, which by the symmetry of the
/// two-sided law matches the `(1 - alpha/2)` quantile of the signed argmax.
/// Deterministic given the config seed.
pub fn quantile_nonvanishing(regime: &Regime, alpha: f64, config: &RwConfig) -> Result<f64> {
    check_alpha(alpha)?;
    let draws = simulate_rw_argmax(regime, config)?;
    let mut magnitudes: Vec<f64> = draws.iter().map(|z| z.unsigned_abs() as f64).collect();
    magnitudes.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(empirical_quantile(&magnitudes, 1.0 - alpha))
}

/// Monte-Carlo estimate of the `(1 - alpha/2)` quantile of
/// `argmax_z (2 W(z) - |z|)` from discretized two-sided Brownian paths with
/// the given step, each extended adaptively until its argmax has stabilized.
pub fn quantile_vanishing_mc(alpha: f64, paths: usize, step: f64, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if paths < 1 {
        return Err(Error::InvalidArgument("paths must be >= 1".into()));
    }
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    // Per step: 2 W increment minus the drift spent over the step.
    let inc = Increment::Gaussian {
        mean: -step,
        sd: 2.0 * step.sqrt(),
    };
    // Initial horizon of 64 time units per side, measured in steps.
    let policy = HorizonPolicy {
        initial: (64.0 / step).ceil() as usize,
        margin_sds: 10.0,
    };
    let signed: Result<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|rep| {
            let pos = side_max_adaptive(&mut side_rng(seed, rep, 0), inc, policy)?;
            let neg = side_max_adaptive(&mut side_rng(seed, rep, 1), inc, policy)?;
            let k = combine_sides(pos, neg);
            Ok(k as f64 * step)
        })
        .collect();
    let mut signed = signed?;
    signed.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(empirical_quantile(&signed, 1.0 - alpha / 2.0))
}

fn vanishing_cache() -> &'static Mutex<HashMap<(u64, u64, u64, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `(1 - alpha/2)` quantile of the Brownian argmax law
/// `argmax_z (2 W(z) - |z|)`.
///
/// At `alpha = 0.05` the tabulated critical value `11.03` is returned
/// exactly; any other level falls back to the Monte-Carlo path estimate at
/// the module defaults, cached per level.
pub fn quantile_vanishing(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if (alpha - 0.05).abs() < 1e-12 {
        return Ok(11.03);
    }
    let key = (
        alpha.to_bits(),
        VANISHING_MC_PATHS as u64,
        VANISHING_MC_STEP.to_bits(),
        VANISHING_MC_SEED,
    );
    if let Some(q) = vanishing_cache().lock().expect("cache lock").get(&key) {
        return Ok(*q);
    }
    let q = quantile_vanishing_mc(alpha, VANISHING_MC_PATHS, VANISHING_MC_STEP, VANISHING_MC_SEED)?;
    vanishing_cache().lock().expect("cache lock").insert(key, q);
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nv(xi: f64, sigma_sq: f64, law: IncrementLaw) -> Regime {
        Regime::non_vanishing(xi, sigma_sq, law).unwrap()
    }

    #[test]
    fn regime_constructors_validate() {
        assert!(Regime::vanishing(0.0).is_err());
        assert!(Regime::non_vanishing(0.0, 1.0, IncrementLaw::Gaussian).is_err());
        assert!(Regime::non_vanishing(1.0, -1.0, IncrementLaw::Gaussian).is_err());
        let r = nv(2.0, 1.5, IncrementLaw::Laplace);
        assert_eq!(r.xi_inf, Some(2.0));
    }

    #[test]
    fn laplace_increment_matches_requested_moments() {
        let inc = Increment::for_regime(IncrementLaw::Laplace, -4.0, 16.0);
        let mut rng = rng_from_seed(1);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = inc.sample(&mut rng);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean + 4.0).abs() < 0.05, "mean {mean}");
        assert!((var - 16.0).abs() < 0.5, "var {var}");
        assert!((inc.sd() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_drift_pins_argmax_at_zero() {
        let regime = nv(10.0, 0.01, IncrementLaw::Gaussian);
        let config = RwConfig::new(2000, 5).unwrap();
        let draws = simulate_rw_argmax(&regime, &config).unwrap();
        let zeros = draws.iter().filter(|z| **z == 0).count();
        assert!(zeros as f64 >= 0.99 * draws.len() as f64);
    }

    #[test]
    fn argmax_law_is_centered() {
        let regime = nv(1.0, 1.0, IncrementLaw::Gaussian);
        let config = RwConfig::new(100_000, 9).unwrap();
        let draws = simulate_rw_argmax(&regime, &config).unwrap();
        let mean = draws.iter().map(|z| *z as f64).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn adaptive_horizon_matches_long_fixed_truncation() {
        let regime = nv(1.0, 1.0, IncrementLaw::Gaussian);
        let config = RwConfig::new(10_000, 13).unwrap();
        let adaptive = simulate_rw_argmax(&regime, &config).unwrap();
        let truncated = simulate_rw_argmax_truncated(&regime, &config, 500).unwrap();
        assert_eq!(adaptive, truncated);
    }

    #[test]
    fn simulation_is_deterministic() {
        let regime = nv(1.5, 2.0, IncrementLaw::Laplace);
        let config = RwConfig::new(500, 21).unwrap();
        assert_eq!(
            simulate_rw_argmax(&regime, &config).unwrap(),
            simulate_rw_argmax(&regime, &config).unwrap()
        );
    }

    #[test]
    fn nv_quantile_monotone_in_alpha_and_concentrated_at_zero() {
        let regime = nv(1.0, 1.0, IncrementLaw::Gaussian);
        let config = RwConfig::new(3000, 3).unwrap();
        let q05 = quantile_nonvanishing(&regime, 0.05, &config).unwrap();
        let q90 = quantile_nonvanishing(&regime, 0.90, &config).unwrap();
        assert!(q90 <= q05);

        let tight = nv(10.0, 0.01, IncrementLaw::Gaussian);
        for alpha in [0.05, 0.2, 0.5] {
            assert_eq!(quantile_nonvanishing(&tight, alpha, &config).unwrap(), 0.0);
        }
    }

    #[test]
    fn nv_quantile_stable_under_more_replications() {
        let regime = nv(2.1469, 1.7891, IncrementLaw::Gaussian);
        let q3k = quantile_nonvanishing(&regime, 0.05, &RwConfig::new(3000, 8).unwrap()).unwrap();
        let q100k =
            quantile_nonvanishing(&regime, 0.05, &RwConfig::new(100_000, 99).unwrap()).unwrap();
        assert!((q3k - q100k).abs() <= 1.0, "q3k {q3k} vs q100k {q100k}");
    }

    #[test]
    fn vanishing_quantile_pinned_at_tabulated_level() {
        assert_eq!(quantile_vanishing(0.05).unwrap(), 11.03);
        assert!(quantile_vanishing(0.0).is_err());
        assert!(quantile_vanishing(1.0).is_err());
    }

    #[test]
    fn vanishing_mc_tracks_pin_and_monotonicity_at_reduced_scale() {
        let q05 = quantile_vanishing_mc(0.05, 20_000, 0.02, 7).unwrap();
        let q10 = quantile_vanishing_mc(0.10, 20_000, 0.02, 7).unwrap();
        assert!(q05 > q10);
        assert!((q05 - 11.03).abs() < 1.0, "q05 {q05}");
    }

    #[test]
    fn quantile_helpers() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.5), 2.0);
        assert_eq!(empirical_quantile(&v, 0.75), 3.0);
        assert_eq!(empirical_quantile(&v, 0.76), 4.0);
        assert_eq!(empirical_quantile(&v, 1.0), 4.0);
    }
}
