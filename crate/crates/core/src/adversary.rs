//! Eavesdropper model: observation, scalar-rescaling estimator, its minimax
//! MSE floor, and transfer of the latent error back to feature space.

use nalgebra::DVector;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::pipeline::LatentVector;
use crate::randmat::{self, EncoderMatrix};
use crate::rng::{self, Stage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryChannel {
    pub g: f64,
    pub sigma_a2: f64,
}

impl AdversaryChannel {
    pub fn new(g: f64, sigma_a2: f64) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::Parameter(format!("adversary gain g must be finite, got {g}")));
        }
        ensure_non_negative("sigma_a2", sigma_a2)?;
        Ok(Self { g, sigma_a2 })
    }
}

/// Closed-form minimax solution for the estimator `z_hat = gamma * y_adv`
/// over `‖z‖ <= d_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxBound {
    pub nu2: f64,
    pub d_z: f64,
    pub r: usize,
    pub g: f64,
    pub alpha: f64,
    pub bound: f64,
    pub gamma_star: f64,
}

/// `y_adv = g alpha z + g alpha n + m_adv` with fresh privacy noise `n` and
/// receiver noise `m_adv`.
pub fn observe(z: &LatentVector, alpha: f64, adv: &AdversaryChannel, sigma2: f64, seed: u64) -> Result<DVector<f64>> {
    ensure_non_negative("privacy noise variance", sigma2)?;
    let r = z.values.len();
    let mut g_n = rng::stream(seed, Stage::PrivacyNoise, 0);
    let n = DVector::from_vec(rng::gaussian_vec(&mut g_n, r, sigma2));
    let transmitted = (&z.values + n) * alpha;
    Ok(observe_transmitted(&transmitted, adv, seed))
}

/// `g z' + m_adv` for an already-transmitted `z' = alpha (z + n)`. The
/// harness uses this so the eavesdropper sees the same privacy noise as the
/// server.
pub fn observe_transmitted(z_prime: &DVector<f64>, adv: &AdversaryChannel, seed: u64) -> DVector<f64> {
    let mut g_m = rng::stream(seed, Stage::AdversaryNoise, 0);
    let m = DVector::from_vec(rng::gaussian_vec(&mut g_m, z_prime.len(), adv.sigma_a2));
    z_prime * adv.g + m
}

/// `nu^2 = g^2 alpha^2 sigma^2 + sigma_a^2`.
pub fn effective_noise(g: f64, alpha: f64, sigma2: f64, sigma_a2: f64) -> f64 {
    g * g * alpha * alpha * sigma2 + sigma_a2
}

pub fn estimate_latent(y_adv: &DVector<f64>, gamma: f64) -> DVector<f64> {
    y_adv * gamma
}

/// Expected `‖gamma y_adv - z‖²`: `(gamma g alpha - 1)^2 ‖z‖² + gamma^2 r nu^2`.
pub fn adversary_mse(gamma: f64, z_norm2: f64, g: f64, alpha: f64, r: usize, nu2: f64) -> f64 {
    let bias = gamma * g * alpha - 1.0;
    bias * bias * z_norm2 + gamma * gamma * r as f64 * nu2
}

pub fn minimax_bound(g: f64, alpha: f64, d_z: f64, r: usize, nu2: f64) -> Result<MinimaxBound> {
    if d_z == 0.0 {
        return Err(Error::Degenerate("d_z = 0: the latent is known to be zero".into()));
    }
    ensure_positive("d_z", d_z)?;
    ensure_positive("nu2", nu2)?;
    ensure_positive("alpha", alpha)?;
    if r == 0 {
        return Err(Error::Parameter("r must be >= 1".into()));
    }
    if !g.is_finite() {
        return Err(Error::Parameter(format!("g must be finite, got {g}")));
    }
    let d2 = d_z * d_z;
    let rn = r as f64 * nu2;
    let denom = g * g * alpha * alpha * d2 + rn;
    Ok(MinimaxBound {
        nu2,
        d_z,
        r,
        g,
        alpha,
        bound: rn * d2 / denom,
        gamma_star: g * alpha * d2 / denom,
    })
}

/// `W^+ z_hat` with the Moore-Penrose pseudoinverse.
pub fn reconstruct_feature(w: &EncoderMatrix, z_hat: &DVector<f64>) -> Result<DVector<f64>> {
    let pinv = randmat::pseudoinverse(w.entries(), randmat::DEFAULT_PINV_TOL);
    reconstruct_with(&pinv, z_hat)
}

/// As [`reconstruct_feature`] with a precomputed pseudoinverse.
pub fn reconstruct_with(pinv: &nalgebra::DMatrix<f64>, z_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if pinv.ncols() != z_hat.len() {
        return Err(Error::Dimension(format!(
            "pseudoinverse expects length {} but got {}",
            pinv.ncols(),
            z_hat.len()
        )));
    }
    Ok(pinv * z_hat)
}

/// `mse_adv / (c^2 (sqrt d - sqrt r - t)^2)`.
pub fn feature_transfer_bound(mse_adv: f64, c: f64, d: usize, r: usize, t: f64) -> Result<f64> {
    ensure_positive("transfer constant c", c)?;
    ensure_non_negative("adversary MSE", mse_adv)?;
    let gap = (d as f64).sqrt() - (r as f64).sqrt() - t;
    if !(gap > 0.0) {
        return Err(Error::Regime(format!("sqrt(d) - sqrt(r) - t = {gap} must be positive")));
    }
    Ok(mse_adv / (c * c * gap * gap))
}

/// Default `c` such that `sigma_min(W) ≈ c (sqrt d - sqrt r)`: the entry
/// standard deviation `b sqrt 2`.
pub fn default_transfer_constant(b: f64) -> f64 {
    b * std::f64::consts::SQRT_2
}

/// Monte Carlo estimate of the transfer constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConstantEstimate {
    pub mean_sigma_min: f64,
    pub min_sigma_min: f64,
    /// `mean_sigma_min / (sqrt d - sqrt r)`
    pub c: f64,
    pub draws: usize,
}

pub fn estimate_transfer_constant(
    r: usize,
    d: usize,
    b: f64,
    draws: usize,
    seed: u64,
) -> Result<TransferConstantEstimate> {
    if draws == 0 {
        return Err(Error::Parameter("draws must be >= 1".into()));
    }
    if r >= d {
        return Err(Error::Regime(format!(
            "need r < d for a non-trivial gap, got r={r}, d={d}"
        )));
    }
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for i in 0..draws {
        let w = randmat::sample_encoder(r, d, b, rng::derive_seed(seed, Stage::Encoder, i as u64))?;
        let s = randmat::smallest_singular_value(w.entries())?;
        sum += s;
        min = min.min(s);
    }
    let mean = sum / draws as f64;
    Ok(TransferConstantEstimate {
        mean_sigma_min: mean,
        min_sigma_min: min,
        c: mean / ((d as f64).sqrt() - (r as f64).sqrt()),
        draws,
    })
}
