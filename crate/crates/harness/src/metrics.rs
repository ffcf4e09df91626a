//! Aggregated experiment metrics.

use hdchange_core::datagen::{DesignSpec, NoiseFamily};
use hdchange_core::limitdist::RegimeKind;

/// Which estimator a metric row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// First-pass plug-in argmin from the fixed initializer.
    Step1,
    /// Final estimate after the second update.
    Al1,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Step1 => "step1",
            Method::Al1 => "al1",
        }
    }
}

pub fn regime_str(kind: RegimeKind) -> &'static str {
    match kind {
        RegimeKind::Vanishing => "v",
        RegimeKind::NonVanishing => "nv",
    }
}

pub fn family_str(family: NoiseFamily) -> &'static str {
    match family {
        NoiseFamily::Gaussian => "gaussian",
        NoiseFamily::Laplace => "laplace",
    }
}

/// Stable identifier of one design cell.
pub fn design_id(design: &DesignSpec) -> String {
    let mut id = format!(
        "T{}_p{}_tau{}_{}",
        design.t_len,
        design.dim,
        design.tau0,
        family_str(design.family)
    );
    if design.scale_c != 1.0 {
        id.push_str(&format!("_c{}", design.scale_c));
    }
    id
}

/// One aggregated cell: estimation rows carry bias/rmse/time, inference rows
/// additionally coverage and average margin for one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub design_id: String,
    pub t_len: usize,
    pub dim: usize,
    pub tau0: usize,
    pub family: NoiseFamily,
    pub scale_c: f64,
    pub method: Method,
    pub regime: Option<RegimeKind>,
    pub replications: usize,
    /// `|mean(tau_hat - tau0)|`.
    pub bias: f64,
    /// `sqrt(mean (tau_hat - tau0)^2)`.
    pub rmse: f64,
    /// Mean wall-clock seconds per replication (not serialized into the
    /// deterministic outputs).
    pub mean_time_s: f64,
    pub coverage: Option<f64>,
    pub avg_margin: Option<f64>,
    /// Replications with a zero estimated jump, excluded from coverage.
    pub degenerate_count: usize,
}

/// Bias and RMSE of a vector of signed errors.
pub fn bias_rmse(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let msq = errors.iter().map(|e| e * e).sum::<f64>() / n;
    (mean.abs(), msq.sqrt())
}
