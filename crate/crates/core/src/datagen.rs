//! Synthetic model generation: the sparse two-segment mean design, Toeplitz
//! covariance with its Cholesky factor, Gaussian and Laplace noise, and full
//! series sampling with the ground truth attached.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::model::SeriesMatrix;
use crate::seeding::rng_from_seed;

/// Noise family of the simulated panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
}

/// Parameters of one simulated design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub t_len: usize,
    pub dim: usize,
    pub tau0: usize,
    /// Sparsity of each mean vector.
    pub s: usize,
    /// Multiplier applied to both mean vectors.
    pub scale_c: f64,
    /// Toeplitz correlation decay, `|rho| < 1`.
    pub rho: f64,
    pub family: NoiseFamily,
    pub seed: u64,
    /// Debug multiplier on the noise; `0` produces the noiseless series.
    pub noise_scale: f64,
}

impl DesignSpec {
    pub fn new(t_len: usize, dim: usize, tau0: usize, family: NoiseFamily, seed: u64) -> Self {
        Self {
            t_len,
            dim,
            tau0,
            s: 5,
            scale_c: 1.0,
            rho: 0.5,
            family,
            seed,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_len < 2 {
            return Err(Error::InvalidArgument("t_len must be >= 2".into()));
        }
        if self.tau0 < 1 || self.tau0 > self.t_len - 1 {
            return Err(Error::InvalidArgument(format!(
                "tau0 = {} outside 1..={}",
                self.tau0,
                self.t_len - 1
            )));
        }
        if 2 * self.s > self.dim {
            return Err(Error::InvalidArgument(format!(
                "need 2 s <= p, got s = {}, p = {}",
                self.s, self.dim
            )));
        }
        if self.rho.abs() >= 1.0 || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if !(self.scale_c >= 0.0) || !(self.noise_scale >= 0.0) {
            return Err(Error::InvalidArgument(
                "scale_c and noise_scale must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A Toeplitz covariance together with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovFactor {
    sigma: Array2<f64>,
    factor: Array2<f64>,
}

impl CovFactor {
    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    /// Lower-triangular `L` with `L L' = sigma`.
    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

/// The sparse two-segment design: `theta1` carries `s` equally spaced values
/// from `1` down to `0.25` on its first `s` coordinates, `theta2` the same
/// values shifted to coordinates `s..2s`, both multiplied by `scale_c`.
/// For `s = 5` this gives a unit-scale jump size of about `2.1469`.
pub fn standard_means(p: usize, s: usize, scale_c: f64) -> Result<(Array1<f64>, Array1<f64>)> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be >= 1".into()));
    }
    if 2 * s > p {
        return Err(Error::InvalidArgument(format!(
            "need 2 s <= p, got s = {s}, p = {p}"
        )));
    }
    let mut theta1 = Array1::zeros(p);
    let mut theta2 = Array1::zeros(p);
    for k in 0..s {
        let v = if s == 1 {
            1.0
        } else {
            1.0 - 0.75 * k as f64 / (s - 1) as f64
        };
        theta1[k] = scale_c * v;
        theta2[s + k] = scale_c * v;
    }
    Ok((theta1, theta2))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Factorization(format!(
                        "nonpositive pivot {sum} at index {i}"
                    )));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Builds the Toeplitz covariance `sigma_ij = rho^|i-j|` and its lower
/// Cholesky factor.
pub fn toeplitz_factor(p: usize, rho: f64) -> Result<CovFactor> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".into()));
    }
    if rho.abs() >= 1.0 || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rho must satisfy |rho| < 1, got {rho}"
        )));
    }
    let mut sigma = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            sigma[[i, j]] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    let factor = cholesky(&sigma)?;
    Ok(CovFactor { sigma, factor })
}

fn draw_unit(rng: &mut ChaCha8Rng, family: NoiseFamily) -> f64 {
    match family {
        NoiseFamily::Gaussian => rng.sample(StandardNormal),
        NoiseFamily::Laplace => {
            // unit variance forces scale 1/sqrt(2)
            let u: f64 = rng.sample(Open01);
            let c = u - 0.5;
            -std::f64::consts::FRAC_1_SQRT_2 * c.signum() * (1.0 - 2.0 * c.abs()).ln()
        }
    }
}

/// Draws a `t_len x p` noise panel with rows i.i.d. `L g_t`, where `g_t` has
/// independent zero-mean unit-variance components of the given family and
/// `L` is the covariance factor.
pub fn gen_noise(t_len: usize, factor: &CovFactor, family: NoiseFamily, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    gen_noise_with_rng(t_len, factor, family, &mut rng)
}

pub(crate) fn gen_noise_with_rng(
    t_len: usize,
    factor: &CovFactor,
    family: NoiseFamily,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let p = factor.dim();
    let raw = Array2::from_shape_fn((t_len, p), |_| draw_unit(rng, family));
    raw.dot(&factor.factor().t())
}

/// Samples a full series under the design and returns it together with the
/// true jump vector and jump size. Deterministic given the spec's seed.
pub fn gen_series(spec: &DesignSpec) -> Result<(SeriesMatrix, Array1<f64>, f64)> {
    let factor = toeplitz_factor(spec.dim, spec.rho)?;
    gen_series_with_factor(spec, &factor)
}

/// Same as [`gen_series`] with a precomputed covariance factor, so callers
/// running many replications of one design pay for the factorization once.
pub fn gen_series_with_factor(
    spec: &DesignSpec,
    factor: &CovFactor,
) -> Result<(SeriesMatrix, Array1<f64>, f64)> {
    spec.validate()?;
    if factor.dim() != spec.dim {
        return Err(Error::DimMismatch {
            expected: spec.dim,
            actual: factor.dim(),
        });
    }
    let (theta1, theta2) = standard_means(spec.dim, spec.s, spec.scale_c)?;
    let mut data = gen_noise(spec.t_len, factor, spec.family, spec.seed);
    if spec.noise_scale != 1.0 {
        data.mapv_inplace(|v| v * spec.noise_scale);
    }
    for t in 0..spec.t_len {
        let base = if t < spec.tau0 { &theta1 } else { &theta2 };
        let mut row = data.row_mut(t);
        row += base;
    }
    let eta = &theta1 - &theta2;
    let xi = eta.dot(&eta).sqrt();
    Ok((SeriesMatrix::new(data)?, eta, xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_means_match_design_values() {
        let (th1, th2) = standard_means(12, 5, 1.0).unwrap();
        let expect = [1.0, 0.8125, 0.625, 0.4375, 0.25];
        for (k, v) in expect.iter().enumerate() {
            assert_eq!(th1[k], *v);
            assert_eq!(th2[5 + k], *v);
        }
        assert!(th1.iter().skip(5).all(|v| *v == 0.0));
        let eta = &th1 - &th2;
        let xi = eta.dot(&eta).sqrt();
        assert!((xi - 2.146946).abs() < 1e-6);
        assert!((xi * xi - 4.609375).abs() < 1e-12);
    }

    #[test]
    fn standard_means_scale_homogeneously() {
        let (a1, a2) = standard_means(12, 5, 2.0).unwrap();
        let (b1, b2) = standard_means(12, 5, 1.0).unwrap();
        let xi = |t1: &Array1<f64>, t2: &Array1<f64>| {
            let e = t1 - t2;
            e.dot(&e).sqrt()
        };
        assert!((xi(&a1, &a2) - 2.0 * xi(&b1, &b2)).abs() < 1e-12);
        let (z1, z2) = standard_means(12, 5, 0.0).unwrap();
        assert_eq!(xi(&z1, &z2), 0.0);
    }

    #[test]
    fn standard_means_reject_crowded_supports() {
        assert!(standard_means(9, 5, 1.0).is_err());
    }

    #[test]
    fn toeplitz_small_cases() {
        let f = toeplitz_factor(2, 0.5).unwrap();
        assert_eq!(f.sigma()[[0, 1]], 0.5);
        assert_eq!(f.sigma()[[0, 0]], 1.0);
        let id = toeplitz_factor(3, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(id.sigma()[[i, j]], expect);
                assert_eq!(id.factor()[[i, j]], expect);
            }
        }
        assert!(toeplitz_factor(3, 1.0).is_err());
        assert!(toeplitz_factor(3, -1.2).is_err());
    }

    #[test]
    fn toeplitz_factor_reconstructs_sigma() {
        let f = toeplitz_factor(50, 0.5).unwrap();
        let rebuilt = f.factor().dot(&f.factor().t());
        let err = rebuilt
            .iter()
            .zip(f.sigma().iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn toeplitz_factor_matches_ar1_closed_form() {
        // For sigma_ij = rho^|i-j| the Cholesky factor has the explicit
        // AR(1) form L[i][0] = rho^i, L[i][j] = rho^(i-j) sqrt(1 - rho^2).
        let rho: f64 = 0.37;
        let f = toeplitz_factor(8, rho).unwrap();
        let root = (1.0 - rho * rho).sqrt();
        for i in 0..8 {
            for j in 0..=i {
                let expect = if j == 0 {
                    rho.powi(i as i32)
                } else {
                    rho.powi((i - j) as i32) * root
                };
                assert!((f.factor()[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_has_unit_component_variance() {
        let f = toeplitz_factor(2, 0.0).unwrap();
        for family in [NoiseFamily::Gaussian, NoiseFamily::Laplace] {
            let eps = gen_noise(100_000, &f, family, 31);
            for j in 0..2 {
                let col = eps.column(j);
                let mean = col.sum() / col.len() as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / col.len() as f64;
                assert!((var - 1.0).abs() < 0.02, "{family:?} var {var}");
                assert!(mean.abs() < 0.02);
            }
        }
    }

    #[test]
    fn laplace_noise_has_heavy_tails() {
        let f = toeplitz_factor(1, 0.0).unwrap();
        let eps = gen_noise(1_000_000, &f, NoiseFamily::Laplace, 37);
        let col = eps.column(0);
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let m2 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m4 = col.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let excess_kurtosis = m4 / (m2 * m2) - 3.0;
        assert!(
            excess_kurtosis > 2.5 && excess_kurtosis < 3.5,
            "excess kurtosis {excess_kurtosis}"
        );
    }

    #[test]
    fn noise_covariance_matches_toeplitz_target() {
        let p = 10;
        let f = toeplitz_factor(p, 0.5).unwrap();
        let t_len = 200_000;
        let eps = gen_noise(t_len, &f, NoiseFamily::Gaussian, 41);
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for t in 0..t_len {
                    acc += eps[[t, i]] * eps[[t, j]];
                }
                let cov = acc / t_len as f64;
                let target = 0.5_f64.powi((i as i32 - j as i32).abs());
                assert!(
                    (cov - target).abs() < 0.02,
                    "cov[{i},{j}] = {cov}, target {target}"
                );
            }
        }
    }

    #[test]
    fn families_share_second_moments() {
        let p = 4;
        let f = toeplitz_factor(p, 0.5).unwrap();
        let t_len = 100_000;
        let g = gen_noise(t_len, &f, NoiseFamily::Gaussian, 43);
        let l = gen_noise(t_len, &f, NoiseFamily::Laplace, 47);
        for i in 0..p {
            for j in 0..p {
                let cov = |m: &Array2<f64>| {
                    (0..t_len).map(|t| m[[t, i]] * m[[t, j]]).sum::<f64>() / t_len as f64
                };
                assert!((cov(&g) - cov(&l)).abs() < 0.03, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_noise_series_has_exact_segment_means() {
        let mut spec = DesignSpec::new(20, 12, 8, NoiseFamily::Gaussian, 51);
        spec.noise_scale = 0.0;
        let (x, eta, xi) = gen_series(&spec).unwrap();
        let (th1, th2) = standard_means(12, 5, 1.0).unwrap();
        for t in 0..20 {
            let base = if t < 8 { &th1 } else { &th2 };
            for j in 0..12 {
                assert_eq!(x.row(t)[j], base[j]);
            }
        }
        assert!((xi - 2.146946).abs() < 1e-6);
        assert_eq!(eta, &th1 - &th2);
    }

    #[test]
    fn series_generation_is_seed_deterministic() {
        let spec = DesignSpec::new(30, 12, 10, NoiseFamily::Laplace, 57);
        let (a, _, _) = gen_series(&spec).unwrap();
        let (b, _, _) = gen_series(&spec).unwrap();
        assert_eq!(a, b);
        let mut other = spec;
        other.seed = 58;
        let (c, _, _) = gen_series(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_segment_means_track_truth() {
        let spec = DesignSpec::new(200, 50, 40, NoiseFamily::Gaussian, 61);
        let (x, _, _) = gen_series(&spec).unwrap();
        let (th1, th2) = standard_means(50, 5, 1.0).unwrap();
        let (m1, m2) = crate::mean_estimation::piecewise_means(&x, 40).unwrap();
        // componentwise 3 sd / sqrt(segment length) with unit variances
        for j in 0..50 {
            assert!((m1[j] - th1[j]).abs() < 3.0 / (40.0_f64).sqrt());
            assert!((m2[j] - th2[j]).abs() < 3.0 / (160.0_f64).sqrt());
        }
    }

    #[test]
    fn design_spec_validation() {
        let mut spec = DesignSpec::new(10, 12, 0, NoiseFamily::Gaussian, 1);
        assert!(spec.validate().is_err());
        spec.tau0 = 5;
        assert!(spec.validate().is_ok());
        spec.rho = 1.0;
        assert!(spec.validate().is_err());
    }
}
