//! The flat parameter record every experiment is driven from.

use crate::acquisition::TransformKind;
use crate::adversary::{effective_noise, minimax_bound, AdversaryChannel, MinimaxBound};
use crate::error::{Error, Result};
use crate::mimo::ChannelLaw;
use crate::pipeline::{dbm_to_milliwatts, ChannelRealization};
use crate::privacy::{calibrate, NoiseCalibration, PrivacyBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Pseudoinverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMode {
    /// `beta = 1/(alpha h)`.
    PerfectCsi,
    /// `beta = 1/(alpha h (1 + csi_error))`.
    Perturbed,
}

/// Which MSE feeds the accuracy lower bound in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyMse {
    /// Closed-form server bound (conservative).
    Bound,
    /// Monte Carlo server f-MSE.
    Empirical,
}

/// Every knob of the simulator. Defaults are the reference setting
/// `C_f = 2, b = 0.01, d = 50, delta = 1e-5, alpha = g = 1, sigma_a^2 = 1`
/// at `epsilon = 1, r = 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub r: usize,
    /// Raw-signal dimension for subsampled acquisition; `0` disables it.
    pub m_dim: usize,
    /// Antenna count for the MIMO extension.
    pub antennas: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub b: f64,
    pub clip_norm: f64,
    pub p_dbm: f64,
    /// Overrides the power-derived `alpha` when set.
    pub alpha: Option<f64>,
    pub h: f64,
    pub g: f64,
    pub sigma_m2: f64,
    pub sigma_a2: f64,
    pub sigma_w2: f64,
    pub omega: f64,
    /// Defaults to `d_z^2`.
    pub c_z2: Option<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub decoder: DecoderKind,
    pub beta_mode: BetaMode,
    pub csi_error: f64,
    /// Overrides the calibrated privacy noise variance.
    pub sigma2: Option<f64>,
    pub margin: f64,
    pub p_flip: f64,
    /// Adversary rescaling; defaults to the minimax `gamma*`.
    pub gamma: Option<f64>,
    /// When set, the adversary is probed with a latent of exactly this norm
    /// in a random direction instead of the encoded feature.
    pub z_norm: Option<f64>,
    pub transform: TransformKind,
    pub channel_law: ChannelLaw,
    /// Transfer constant `c`; defaults to `b sqrt 2`.
    pub transfer_c: Option<f64>,
    pub transfer_t: f64,
    pub accuracy_mse: AccuracyMse,
    /// Upper end of the dimension scan; defaults to `d`.
    pub r_max: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 50,
            r: 10,
            m_dim: 0,
            antennas: 64,
            epsilon: 1.0,
            delta: 1e-5,
            b: 0.01,
            clip_norm: 2.0,
            p_dbm: 0.0,
            alpha: None,
            h: 1.0,
            g: 1.0,
            sigma_m2: 0.1,
            sigma_a2: 1.0,
            sigma_w2: 0.0,
            omega: 1.0,
            c_z2: None,
            trials: 1000,
            master_seed: 0,
            decoder: DecoderKind::Pseudoinverse,
            beta_mode: BetaMode::PerfectCsi,
            csi_error: 0.0,
            sigma2: None,
            margin: 1.0,
            p_flip: 0.0,
            gamma: None,
            z_norm: None,
            transform: TransformKind::Dct,
            channel_law: ChannelLaw::HalfNormal,
            transfer_c: None,
            transfer_t: 0.0,
            accuracy_mse: AccuracyMse::Bound,
            r_max: None,
        }
    }
}

/// Every key accepted by [`ExperimentConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "d",
    "r",
    "m_dim",
    "M",
    "epsilon",
    "delta",
    "b",
    "C_f",
    "P_dbm",
    "alpha",
    "h",
    "g",
    "sigma_m2",
    "sigma_a2",
    "sigma_w2",
    "omega",
    "c_z2",
    "trials",
    "seed",
    "decoder",
    "beta_mode",
    "csi_error",
    "sigma2",
    "margin",
    "p_flip",
    "gamma",
    "z_norm",
    "transform",
    "channel_law",
    "transfer_c",
    "transfer_t",
    "accuracy_mse",
    "r_max",
];

/// Ratio of the largest synthetic task feature norm to the margin.
pub const TASK_NORM_FACTOR: f64 = 1.802_775_637_731_995; // sqrt(1.5^2 + 1)

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_opt<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "auto" | "none" | "" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Assign one `key=value` pair. Range checks happen in [`validate`].
    ///
    /// [`validate`]: ExperimentConfig::validate
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "d" => self.d = parse_num(key, v)?,
            "r" => self.r = parse_num(key, v)?,
            "m_dim" => self.m_dim = parse_num(key, v)?,
            "M" => self.antennas = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "b" => self.b = parse_num(key, v)?,
            "C_f" => self.clip_norm = parse_num(key, v)?,
            "P_dbm" => self.p_dbm = parse_num(key, v)?,
            "alpha" => self.alpha = parse_opt(key, v)?,
            "h" => self.h = parse_num(key, v)?,
            "g" => self.g = parse_num(key, v)?,
            "sigma_m2" => self.sigma_m2 = parse_num(key, v)?,
            "sigma_a2" => self.sigma_a2 = parse_num(key, v)?,
            "sigma_w2" => self.sigma_w2 = parse_num(key, v)?,
            "omega" => self.omega = parse_num(key, v)?,
            "c_z2" => self.c_z2 = parse_opt(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.master_seed = parse_num(key, v)?,
            "decoder" => {
                self.decoder = match v {
                    "pseudoinverse" => DecoderKind::Pseudoinverse,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("unknown decoder `{v}` (expected pseudoinverse)"),
                        ))
                    }
                }
            }
            "beta_mode" => {
                self.beta_mode = match v {
                    "perfect_csi" => BetaMode::PerfectCsi,
                    "perturbed" => BetaMode::Perturbed,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("unknown mode `{v}` (expected perfect_csi or perturbed)"),
                        ))
                    }
                }
            }
            "csi_error" => self.csi_error = parse_num(key, v)?,
            "sigma2" => self.sigma2 = parse_opt(key, v)?,
            "margin" => self.margin = parse_num(key, v)?,
            "p_flip" => self.p_flip = parse_num(key, v)?,
            "gamma" => self.gamma = parse_opt(key, v)?,
            "z_norm" => self.z_norm = parse_opt(key, v)?,
            "transform" => self.transform = v.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "channel_law" => self.channel_law = v.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "transfer_c" => self.transfer_c = parse_opt(key, v)?,
            "transfer_t" => self.transfer_t = parse_num(key, v)?,
            "accuracy_mse" => {
                self.accuracy_mse = match v {
                    "bound" => AccuracyMse::Bound,
                    "empirical" => AccuracyMse::Empirical,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("unknown source `{v}` (expected bound or empirical)"),
                        ))
                    }
                }
            }
            "r_max" => self.r_max = parse_opt(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Check every invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, constraint: &str, value: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, format!("requires {constraint}, got {value}")))
            }
        };
        check(self.d >= 1, "d", "d>=1", self.d.to_string())?;
        check(self.r >= 1 && self.r <= self.d, "r", "1<=r<=d", self.r.to_string())?;
        check(
            self.m_dim == 0 || self.m_dim >= self.d,
            "m_dim",
            "m_dim=0 or m_dim>=d",
            self.m_dim.to_string(),
        )?;
        if self.m_dim > 0 && self.transform == TransformKind::Hadamard {
            check(
                self.m_dim.is_power_of_two(),
                "m_dim",
                "a power of two for hadamard",
                self.m_dim.to_string(),
            )?;
        }
        check(self.antennas >= 1, "M", "M>=1", self.antennas.to_string())?;
        check(self.epsilon > 0.0, "epsilon", "epsilon>0", self.epsilon.to_string())?;
        check(
            self.delta > 0.0 && self.delta < 1.0,
            "delta",
            "0<delta<1",
            self.delta.to_string(),
        )?;
        check(self.b > 0.0 && self.b.is_finite(), "b", "b>0", self.b.to_string())?;
        check(
            self.clip_norm > 0.0 && self.clip_norm.is_finite(),
            "C_f",
            "C_f>0",
            self.clip_norm.to_string(),
        )?;
        check(
            self.p_dbm.is_finite(),
            "P_dbm",
            "a finite value",
            self.p_dbm.to_string(),
        )?;
        if let Some(a) = self.alpha {
            check(a > 0.0 && a.is_finite(), "alpha", "alpha>0", a.to_string())?;
        }
        check(self.h.is_finite() && self.h != 0.0, "h", "h!=0", self.h.to_string())?;
        check(self.g.is_finite(), "g", "a finite value", self.g.to_string())?;
        for (key, v) in [
            ("sigma_m2", self.sigma_m2),
            ("sigma_a2", self.sigma_a2),
            ("sigma_w2", self.sigma_w2),
        ] {
            check(v >= 0.0 && v.is_finite(), key, &format!("{key}>=0"), v.to_string())?;
        }
        check(
            self.omega > 0.0 && self.omega.is_finite(),
            "omega",
            "omega>0",
            self.omega.to_string(),
        )?;
        if let Some(c) = self.c_z2 {
            check(c >= 0.0 && c.is_finite(), "c_z2", "c_z2>=0", c.to_string())?;
        }
        check(self.trials >= 1, "trials", "trials>=1", self.trials.to_string())?;
        check(
            self.csi_error > -1.0 && self.csi_error.is_finite(),
            "csi_error",
            "csi_error>-1",
            self.csi_error.to_string(),
        )?;
        if let Some(s) = self.sigma2 {
            check(s >= 0.0 && s.is_finite(), "sigma2", "sigma2>=0", s.to_string())?;
        }
        check(
            self.margin > 0.0 && self.margin.is_finite(),
            "margin",
            "margin>0",
            self.margin.to_string(),
        )?;
        check(
            self.margin * TASK_NORM_FACTOR <= self.clip_norm,
            "margin",
            "margin*1.8028<=C_f so synthetic task features survive clipping",
            self.margin.to_string(),
        )?;
        check(
            (0.0..0.5).contains(&self.p_flip),
            "p_flip",
            "0<=p_flip<0.5",
            self.p_flip.to_string(),
        )?;
        if let Some(g) = self.gamma {
            check(g.is_finite(), "gamma", "a finite value", g.to_string())?;
        }
        if let Some(z) = self.z_norm {
            check(z >= 0.0 && z.is_finite(), "z_norm", "z_norm>=0", z.to_string())?;
        }
        if let Some(c) = self.transfer_c {
            check(c > 0.0 && c.is_finite(), "transfer_c", "transfer_c>0", c.to_string())?;
        }
        check(
            self.transfer_t >= 0.0 && self.transfer_t.is_finite(),
            "transfer_t",
            "transfer_t>=0",
            self.transfer_t.to_string(),
        )?;
        if let Some(rm) = self.r_max {
            check(rm >= 1 && rm <= self.d, "r_max", "1<=r_max<=d", rm.to_string())?;
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| dbm_to_milliwatts(self.p_dbm).sqrt())
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        PrivacyBudget::new(self.epsilon, self.delta)
    }

    /// Calibration at `(epsilon, delta, r, d, b, C_f)`, with `sigma2`
    /// replaced by the override when one is configured.
    pub fn calibration(&self) -> Result<NoiseCalibration> {
        let mut cal = calibrate(self.budget()?, self.r, self.d, self.b, self.clip_norm)?;
        if let Some(s) = self.sigma2 {
            cal.sigma2 = s;
        }
        Ok(cal)
    }

    pub fn channel(&self) -> Result<ChannelRealization> {
        ChannelRealization::with_alpha(self.h, self.sigma_m2, self.alpha())
    }

    pub fn adversary(&self) -> Result<AdversaryChannel> {
        AdversaryChannel::new(self.g, self.sigma_a2)
    }

    pub fn effective_csi_error(&self) -> f64 {
        match self.beta_mode {
            BetaMode::PerfectCsi => 0.0,
            BetaMode::Perturbed => self.csi_error,
        }
    }

    pub fn nu2(&self) -> Result<f64> {
        Ok(effective_noise(
            self.g,
            self.alpha(),
            self.calibration()?.sigma2,
            self.sigma_a2,
        ))
    }

    pub fn minimax(&self) -> Result<MinimaxBound> {
        let cal = self.calibration()?;
        minimax_bound(self.g, self.alpha(), cal.d_z, self.r, self.nu2()?)
    }

    pub fn c_z2(&self) -> Result<f64> {
        match self.c_z2 {
            Some(c) => Ok(c),
            None => Ok(self.calibration()?.d_z.powi(2)),
        }
    }

    pub fn transfer_c(&self) -> f64 {
        self.transfer_c
            .unwrap_or_else(|| crate::adversary::default_transfer_constant(self.b))
    }

    pub fn r_max(&self) -> usize {
        self.r_max.unwrap_or(self.d)
    }

    /// `P_0` of the synthetic margin task.
    pub fn p0(&self) -> f64 {
        1.0 - self.p_flip
    }
}
