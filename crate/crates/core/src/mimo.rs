//! Massive-MIMO transmission: `M` transmit antennas, a single-antenna server
//! and a single-antenna eavesdropper, one latent coordinate per channel use.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::rng::{self, Stage};

/// Fading-magnitude law for the antenna gains. Both have unit mean power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLaw {
    /// `|N(0, 1)|`
    HalfNormal,
    /// Rayleigh with scale `1/sqrt 2`.
    Rayleigh,
}

impl ChannelLaw {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelLaw::HalfNormal => "half_normal",
            ChannelLaw::Rayleigh => "rayleigh",
        }
    }

    /// `E[h]` for one antenna.
    pub fn mean(&self) -> f64 {
        match self {
            ChannelLaw::HalfNormal => (2.0 / std::f64::consts::PI).sqrt(),
            ChannelLaw::Rayleigh => std::f64::consts::FRAC_1_SQRT_2 * (std::f64::consts::PI / 2.0).sqrt(),
        }
    }
}

impl FromStr for ChannelLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_normal" => Ok(ChannelLaw::HalfNormal),
            "rayleigh" => Ok(ChannelLaw::Rayleigh),
            other => Err(Error::Parameter(format!(
                "unknown channel law `{other}` (expected half_normal or rayleigh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    pub h_vec: DVector<f64>,
    pub h_adv: DVector<f64>,
    pub sigma_m2: f64,
    pub sigma_a2: f64,
}

impl MimoChannel {
    pub fn new(h_vec: DVector<f64>, h_adv: DVector<f64>, sigma_m2: f64, sigma_a2: f64) -> Result<Self> {
        if h_vec.is_empty() || h_vec.len() != h_adv.len() {
            return Err(Error::Dimension(format!(
                "channel vectors must be non-empty and equal length ({} vs {})",
                h_vec.len(),
                h_adv.len()
            )));
        }
        if h_vec.iter().chain(h_adv.iter()).any(|&x| !(x >= 0.0)) {
            return Err(Error::Parameter("channel entries must be non-negative".into()));
        }
        ensure_non_negative("sigma_m2", sigma_m2)?;
        ensure_non_negative("sigma_a2", sigma_a2)?;
        Ok(Self {
            h_vec,
            h_adv,
            sigma_m2,
            sigma_a2,
        })
    }

    pub fn antennas(&self) -> usize {
        self.h_vec.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoBound {
    pub r: usize,
    pub alpha: f64,
    pub sigma2: f64,
    pub sigma_a2: f64,
    pub c_z2: f64,
    pub antennas: usize,
    pub bound: f64,
}

/// Independent legitimate and adversary channels with i.i.d. entries.
pub fn sample_channels(
    antennas: usize,
    law: ChannelLaw,
    sigma_m2: f64,
    sigma_a2: f64,
    seed: u64,
) -> Result<MimoChannel> {
    if antennas < 1 {
        return Err(Error::Parameter("antenna count M must be >= 1".into()));
    }
    let draw = |index: u64| {
        let mut g = rng::stream(seed, Stage::Channel, index);
        match law {
            ChannelLaw::HalfNormal => DVector::from_fn(antennas, |_, _| rng::gaussian(&mut g, 1.0).abs()),
            // inverse CDF: sigma sqrt(-2 ln U), U in (0, 1]
            ChannelLaw::Rayleigh => DVector::from_fn(antennas, |_, _| {
                let u = 1.0 - g.random::<f64>();
                std::f64::consts::FRAC_1_SQRT_2 * (-2.0 * u.ln()).sqrt()
            }),
        }
    };
    MimoChannel::new(draw(0), draw(1), sigma_m2, sigma_a2)
}

/// Server and adversary observations, `M x r`; column `i` is channel use `i`.
pub fn transmit_receive(z_prime: &DVector<f64>, ch: &MimoChannel, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = ch.antennas();
    let r = z_prime.len();
    let mut gs = rng::stream(seed, Stage::ServerNoise, 0);
    let mut ga = rng::stream(seed, Stage::AdversaryNoise, 0);
    let sd_m = ch.sigma_m2.sqrt();
    let sd_a = ch.sigma_a2.sqrt();
    let mut server = &ch.h_vec * z_prime.transpose();
    let mut adversary = &ch.h_adv * z_prime.transpose();
    // column-major: antennas vary fastest within a channel use
    for i in 0..r {
        for k in 0..m {
            server[(k, i)] += rng::gaussian(&mut gs, sd_m);
            adversary[(k, i)] += rng::gaussian(&mut ga, sd_a);
        }
    }
    (server, adversary)
}

/// Correlator estimate `z_hat[i] = h_adv^T y_adv[i] / alpha`.
pub fn adversary_estimate(y_adv: &DMatrix<f64>, h_adv: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    ensure_positive("alpha", alpha)?;
    if y_adv.nrows() != h_adv.len() {
        return Err(Error::Dimension(format!(
            "observations have {} antennas but channel has {}",
            y_adv.nrows(),
            h_adv.len()
        )));
    }
    Ok(y_adv.transpose() * h_adv / alpha)
}

/// Correlator divided by `‖h_adv‖²`, putting the estimate on the scale of `z`.
pub fn adversary_estimate_normalized(y_adv: &DMatrix<f64>, h_adv: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let gain = h_adv.norm_squared();
    if gain == 0.0 {
        return Err(Error::Degenerate("adversary channel is identically zero".into()));
    }
    Ok(adversary_estimate(y_adv, h_adv, alpha)? / gain)
}

/// `r (alpha^2 sigma^2 / M + sigma_a^2) / (alpha^2 (C_z^2 + sigma^2) / M + sigma_a^2)`.
pub fn mimo_bound(r: usize, alpha: f64, sigma2: f64, sigma_a2: f64, c_z2: f64, antennas: usize) -> Result<MimoBound> {
    if r < 1 || antennas < 1 {
        return Err(Error::Parameter(format!(
            "need r >= 1 and M >= 1 (got r={r}, M={antennas})"
        )));
    }
    for (name, v) in [
        ("alpha", alpha),
        ("sigma2", sigma2),
        ("sigma_a2", sigma_a2),
        ("c_z2", c_z2),
    ] {
        ensure_non_negative(name, v)?;
    }
    let m = antennas as f64;
    let a2 = alpha * alpha;
    let num = a2 * sigma2 / m + sigma_a2;
    let den = a2 * (c_z2 + sigma2) / m + sigma_a2;
    if den == 0.0 {
        return Err(Error::Degenerate(
            "denominator alpha^2 (C_z^2 + sigma^2)/M + sigma_a^2 is zero".into(),
        ));
    }
    // 0/0 cannot happen here: num == 0 with den > 0 gives bound 0.
    Ok(MimoBound {
        r,
        alpha,
        sigma2,
        sigma_a2,
        c_z2,
        antennas,
        bound: r as f64 * num / den,
    })
}

/// Inputs of the correlator Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoScenario {
    pub r: usize,
    pub antennas: usize,
    pub alpha: f64,
    pub sigma2: f64,
    pub sigma_m2: f64,
    pub sigma_a2: f64,
    pub c_z2: f64,
    pub law: ChannelLaw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoSimulation {
    pub trials: usize,
    /// Normalized correlator MSE on `z`.
    pub adv_mse: f64,
    pub adv_mse_stderr: f64,
    /// Raw (unnormalized) correlator MSE.
    pub adv_raw_mse: f64,
    /// Server MSE with matched-filter combining normalized by `‖h‖²`.
    pub server_mse: f64,
    pub bound: f64,
}

/// One block-fading trial: fresh channels, privacy noise and receiver noise.
/// `z` has norm `sqrt(c_z2)` in a random direction.
pub fn simulate_trial(sc: &MimoScenario, seed: u64) -> Result<(f64, f64, f64)> {
    let ch = sample_channels(sc.antennas, sc.law, sc.sigma_m2, sc.sigma_a2, seed)?;
    let mut gp = rng::stream(seed, Stage::Probe, 0);
    let z = DVector::from_vec(rng::unit_vector(&mut gp, sc.r)) * sc.c_z2.sqrt();
    let mut gn = rng::stream(seed, Stage::PrivacyNoise, 0);
    let n = DVector::from_vec(rng::gaussian_vec(&mut gn, sc.r, sc.sigma2));
    let z_prime = (&z + n) * sc.alpha;
    let (y, y_adv) = transmit_receive(&z_prime, &ch, seed);
    let adv = adversary_estimate_normalized(&y_adv, &ch.h_adv, sc.alpha)?;
    let raw = adversary_estimate(&y_adv, &ch.h_adv, sc.alpha)?;
    let server = adversary_estimate_normalized(&y, &ch.h_vec, sc.alpha)?;
    Ok((
        (adv - &z).norm_squared(),
        (raw - &z).norm_squared(),
        (server - &z).norm_squared(),
    ))
}

pub fn simulate(sc: &MimoScenario, trials: usize, seed: u64) -> Result<MimoSimulation> {
    use rayon::prelude::*;
    if trials < 2 {
        return Err(Error::Parameter("need at least 2 trials".into()));
    }
    let bound = mimo_bound(sc.r, sc.alpha, sc.sigma2, sc.sigma_a2, sc.c_z2, sc.antennas)?.bound;
    let per_trial: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| simulate_trial(sc, rng::derive_seed(seed, Stage::Trial, i as u64)))
        .collect::<Result<_>>()?;
    let adv = crate::harness::stats::Summary::from_values(per_trial.iter().map(|t| t.0));
    let raw = crate::harness::stats::Summary::from_values(per_trial.iter().map(|t| t.1));
    let server = crate::harness::stats::Summary::from_values(per_trial.iter().map(|t| t.2));
    Ok(MimoSimulation {
        trials,
        adv_mse: adv.mean(),
        adv_mse_stderr: adv.stderr(),
        adv_raw_mse: raw.mean(),
        server_mse: server.mean(),
        bound,
    })
}
