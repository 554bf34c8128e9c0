//! Estimators built on replicated samples.

mod cutoff;
mod mixing;
mod occupation;
mod survival;

pub use cutoff::{cutoff_curve, Branch, CutoffParams, CutoffRow, CutoffTable};
pub use mixing::{
    estimate_alpha_mixing, estimate_d, estimate_rho, shape_mixing_check, AlphaParams, RhoEstimate, ShapeParams,
};
pub use occupation::{
    estimate_clt, estimate_rate_function, occupation_time, CltParams, CltReport, Observable, PsiPoint,
    RateFunctionEstimate, RateParams,
};
pub use survival::{
    complete_convergence_check, estimate_beta, estimate_lambda_c, estimate_survival_coupled, estimate_survival_prob,
    estimate_tau_tail,
    BetaParams, ConvergencePoint, ConvergenceReport, LambdaCParams, TauTail,
};

use std::collections::BTreeMap;

use contact_core::process::TruncationReport;
use contact_core::{GraphError, SimError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::events::EventError;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("bracket [{lo}, {hi}] does not straddle the threshold: survival {p_lo} at the low end, {p_hi} at the high end")]
    Bracket { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },
    #[error("no grid point has enough hits at any horizon")]
    AllSparse,
    #[error("degenerate variance estimate {sigma2} for a non-constant observable")]
    Degenerate { sigma2: f64 },
    #[error("truncation check failed: discrepancy {} above {} (radius {} vs {})", .0.discrepancy, .0.tolerance, .0.radius, .0.doubled_radius)]
    Truncation(TruncationReport),
}

impl EstimateError {
    /// Whether the error is an aborted sampler (acceptance floor or
    /// truncation guard) rather than a bad configuration.
    pub fn is_abort(&self) -> bool {
        matches!(
            self,
            EstimateError::Sim(
                SimError::AcceptanceFloor { .. } | SimError::TruncationTooSmall(_) | SimError::FrontAtBoundary { .. }
            ) | EstimateError::Truncation(_)
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, EstimateError> {
    Err(EstimateError::Invalid(msg.into()))
}

/// A point estimate with its sampling metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub censored_fraction: f64,
    pub seed: u64,
    /// Hash of the configuration that produced the estimate.
    pub meta: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, Value>,
}

impl Estimate {
    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.diagnostics.insert(key.to_owned(), serde_json::to_value(value).expect("serializable"));
        self
    }
}

/// Short SHA-256 of the JSON form of a configuration.
pub fn config_hash(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    AlphaCovariance,
    TvLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCurve {
    pub kind: MixingKind,
    pub event_family: String,
    pub points: Vec<CurvePoint>,
    /// Plug-in TV bias scale per point (zero for covariances).
    pub bias: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
}

impl MixingCurve {
    pub fn at(&self, t: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.t - t).abs() < 1e-9)
    }
}

/// Vertex ids of `Δ_r` on a lattice built by the core crate.
pub fn box_sites(radius: usize, dim: usize) -> Vec<usize> {
    (0..(2 * radius + 1).pow(dim as u32)).collect()
}

pub(crate) fn check_grid(times: &[f64]) -> Result<(), EstimateError> {
    if times.is_empty() {
        return invalid("empty time grid");
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return invalid("time grid must be finite, non-negative and strictly increasing");
    }
    Ok(())
}
