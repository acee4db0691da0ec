//! Gaussian-mechanism calibration for (epsilon, delta)-feature DP of a
//! Laplace random projection.
//!
//! The chain is: clipped inputs differ by at most `2 C_f`, so the linear map
//! has sensitivity `2 C_f ||W||_2`; the spectral norm is bounded with
//! probability `1 - delta` by `C_w b (sqrt r + sqrt d)`; the Gaussian
//! mechanism then needs `sigma^2 >= 2 Delta^2 ln(1.25/delta) / eps^2`, which
//! is relaxed with `(sqrt r + sqrt d)^2 <= 2 (r + d)`.

use crate::error::{ensure_positive, Error, Result};
use crate::randmat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || epsilon.is_nan() {
            return Err(Error::Parameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Output of [`calibrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCalibration {
    /// Privacy noise variance per latent coordinate.
    pub sigma2: f64,
    /// l2 sensitivity bound `2 C_f C_w b (sqrt r + sqrt d)`.
    pub sensitivity: f64,
    pub c_w: f64,
    /// Latent-norm bound `C_f C_w b (sqrt r + sqrt d)`.
    pub d_z: f64,
}

pub fn calibrate(budget: PrivacyBudget, r: usize, d: usize, b: f64, clip_norm: f64) -> Result<NoiseCalibration> {
    if r > d {
        return Err(Error::Dimension(format!("r={r} exceeds d={d}")));
    }
    ensure_positive("clip norm C_f", clip_norm)?;
    let sb = randmat::spectral_bound(r, d, b, budget.delta)?;
    let eps = budget.epsilon;
    let sigma2 = 8.0 * sb.c_w.powi(2) * b * b * clip_norm * clip_norm * (r + d) as f64 * (1.25 / budget.delta).ln()
        / (eps * eps);
    Ok(NoiseCalibration {
        sigma2,
        sensitivity: sensitivity_bound(clip_norm, sb.norm_bound)?,
        c_w: sb.c_w,
        d_z: clip_norm * sb.norm_bound,
    })
}

/// `2 C_f ||W||` for neighbouring clipped features.
pub fn sensitivity_bound(clip_norm: f64, spectral_norm_bound: f64) -> Result<f64> {
    ensure_positive("clip norm C_f", clip_norm)?;
    ensure_positive("spectral norm bound", spectral_norm_bound)?;
    Ok(2.0 * clip_norm * spectral_norm_bound)
}

/// Classical Gaussian-mechanism variance `2 Delta^2 ln(1.25/delta) / eps^2`.
pub fn sigma_from_sensitivity(sensitivity: f64, budget: PrivacyBudget) -> Result<f64> {
    ensure_positive("sensitivity", sensitivity)?;
    Ok(2.0 * sensitivity * sensitivity * (1.25 / budget.delta).ln() / (budget.epsilon * budget.epsilon))
}
