//! Device-to-server transmission chain: clip, project, privatize, scale,
//! fade, rescale, decode.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::randmat::{self, EncoderMatrix};
use crate::rng::{self, Stage};

/// A feature after l2 clipping; `‖values‖ <= clip_norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: DVector<f64>,
    pub clip_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector {
    pub values: DVector<f64>,
    pub privatized: bool,
}

/// Legitimate block-fading link. `alpha * alpha == power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h: f64,
    pub sigma_m2: f64,
    alpha: f64,
    power: f64,
}

impl ChannelRealization {
    /// `power` in linear units (mW when derived from dBm).
    pub fn new(h: f64, sigma_m2: f64, power: f64) -> Result<Self> {
        ensure_positive("transmit power P", power)?;
        Self::build(h, sigma_m2, power.sqrt(), power)
    }

    pub fn with_alpha(h: f64, sigma_m2: f64, alpha: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        Self::build(h, sigma_m2, alpha, alpha * alpha)
    }

    pub fn from_dbm(h: f64, sigma_m2: f64, p_dbm: f64) -> Result<Self> {
        Self::new(h, sigma_m2, dbm_to_milliwatts(p_dbm))
    }

    fn build(h: f64, sigma_m2: f64, alpha: f64, power: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::Parameter(format!("channel gain h must be finite, got {h}")));
        }
        ensure_non_negative("sigma_m2", sigma_m2)?;
        Ok(Self {
            h,
            sigma_m2,
            alpha,
            power,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// `10^(dBm/10)` milliwatts.
pub fn dbm_to_milliwatts(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerEstimate {
    pub z_hat: DVector<f64>,
    pub f_hat: DVector<f64>,
    pub beta: f64,
}

/// Scale `raw` onto the l2 ball of radius `clip_norm`. A zero vector is
/// returned unchanged.
pub fn clip_feature(raw: &DVector<f64>, clip_norm: f64) -> Result<FeatureVector> {
    if raw.is_empty() {
        return Err(Error::Dimension("feature vector is empty".into()));
    }
    ensure_positive("clip norm C_f", clip_norm)?;
    let norm = raw.norm();
    let values = if norm > clip_norm {
        let mut v = raw * (clip_norm / norm);
        // Rounding can leave the rescaled norm a few ulps above the radius.
        while v.norm() > clip_norm {
            v *= 1.0 - f64::EPSILON;
        }
        v
    } else {
        raw.clone()
    };
    Ok(FeatureVector { values, clip_norm })
}

pub fn encode(w: &EncoderMatrix, f: &FeatureVector) -> Result<LatentVector> {
    if w.cols() != f.values.len() {
        return Err(Error::Dimension(format!(
            "encoder expects d={} but feature has length {}",
            w.cols(),
            f.values.len()
        )));
    }
    Ok(LatentVector {
        values: w.entries() * &f.values,
        privatized: false,
    })
}

/// Add N(0, sigma2 I) drawn from the privacy-noise substream of `seed`.
pub fn privatize(z: &LatentVector, sigma2: f64, seed: u64) -> Result<LatentVector> {
    ensure_non_negative("privacy noise variance", sigma2)?;
    let mut g = rng::stream(seed, Stage::PrivacyNoise, 0);
    let noise = DVector::from_vec(rng::gaussian_vec(&mut g, z.values.len(), sigma2));
    Ok(LatentVector {
        values: &z.values + noise,
        privatized: true,
    })
}

pub fn transmit(z_tilde: &LatentVector, alpha: f64) -> Result<DVector<f64>> {
    ensure_positive("alpha", alpha)?;
    Ok(&z_tilde.values * alpha)
}

/// `y = h z' + m` with `m ~ N(0, sigma_m2 I)` from the server-noise substream.
pub fn channel_apply(z_prime: &DVector<f64>, ch: &ChannelRealization, seed: u64) -> DVector<f64> {
    let mut g = rng::stream(seed, Stage::ServerNoise, 0);
    let m = DVector::from_vec(rng::gaussian_vec(&mut g, z_prime.len(), ch.sigma_m2));
    z_prime * ch.h + m
}

pub fn server_postprocess(y: &DVector<f64>, beta: f64) -> Result<DVector<f64>> {
    ensure_positive("beta", beta)?;
    Ok(y * beta)
}

pub fn decode(decoder: &DMatrix<f64>, z_hat: &DVector<f64>, beta: f64) -> Result<ServerEstimate> {
    if decoder.ncols() != z_hat.len() {
        return Err(Error::Dimension(format!(
            "decoder has {} columns but latent estimate has length {}",
            decoder.ncols(),
            z_hat.len()
        )));
    }
    Ok(ServerEstimate {
        f_hat: decoder * z_hat,
        z_hat: z_hat.clone(),
        beta,
    })
}

/// Static parameters of the chain (everything but the encoder and the input).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub clip_norm: f64,
    pub sigma2: f64,
    pub channel: ChannelRealization,
    /// Relative error on the gain the server uses for `beta`:
    /// `h_est = h (1 + csi_error)`. Zero means perfect CSI.
    pub csi_error: f64,
}

/// Every intermediate of one transmission plus the server-side errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRecord {
    pub f: FeatureVector,
    pub z: LatentVector,
    pub z_tilde: LatentVector,
    pub z_prime: DVector<f64>,
    pub y: DVector<f64>,
    pub estimate: ServerEstimate,
    /// `‖z_hat/(beta h alpha) - z‖²`
    pub server_z_err2: f64,
    /// `‖f_hat - f‖²`
    pub server_f_err2: f64,
}

/// The chain with its encoder, pseudoinverse decoder and `beta` fixed.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    encoder: EncoderMatrix,
    decoder: DMatrix<f64>,
    beta: f64,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, encoder: EncoderMatrix) -> Result<Self> {
        let decoder = randmat::pseudoinverse(encoder.entries(), randmat::DEFAULT_PINV_TOL);
        Self::with_decoder(cfg, encoder, decoder)
    }

    pub fn with_decoder(cfg: PipelineConfig, encoder: EncoderMatrix, decoder: DMatrix<f64>) -> Result<Self> {
        ensure_positive("clip norm C_f", cfg.clip_norm)?;
        ensure_non_negative("privacy noise variance", cfg.sigma2)?;
        if decoder.shape() != (encoder.cols(), encoder.rows()) {
            return Err(Error::Dimension(format!(
                "decoder must be {}x{}, got {:?}",
                encoder.cols(),
                encoder.rows(),
                decoder.shape()
            )));
        }
        let h_est = cfg.channel.h * (1.0 + cfg.csi_error);
        let beta = (1.0 / (cfg.channel.alpha() * h_est)).abs();
        if h_est == 0.0 || !beta.is_finite() {
            return Err(Error::Degenerate(
                "server-side inversion needs a non-zero channel estimate".into(),
            ));
        }
        // A negative channel estimate is absorbed into the sign of the
        // effective scaling, so beta itself stays positive.
        let beta = if h_est < 0.0 { -beta } else { beta };
        Ok(Self {
            cfg,
            encoder,
            decoder,
            beta,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn encoder(&self) -> &EncoderMatrix {
        &self.encoder
    }

    pub fn decoder(&self) -> &DMatrix<f64> {
        &self.decoder
    }

    /// `1 / (alpha h_est)`; negative when the estimated gain is negative.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn run(&self, raw: &DVector<f64>, seed: u64) -> Result<PipelineRecord> {
        let ch = &self.cfg.channel;
        let f = clip_feature(raw, self.cfg.clip_norm)?;
        let z = encode(&self.encoder, &f)?;
        let z_tilde = privatize(&z, self.cfg.sigma2, seed)?;
        let z_prime = transmit(&z_tilde, ch.alpha())?;
        let y = channel_apply(&z_prime, ch, seed);
        // server_postprocess requires beta > 0; a sign flip is applied here.
        let z_hat = server_postprocess(&y, self.beta.abs())? * self.beta.signum();
        let estimate = decode(&self.decoder, &z_hat, self.beta)?;
        let gain = self.beta * ch.h * ch.alpha();
        let server_z_err2 = (&z_hat / gain - &z.values).norm_squared();
        let server_f_err2 = (&estimate.f_hat - &f.values).norm_squared();
        Ok(PipelineRecord {
            f,
            z,
            z_tilde,
            z_prime,
            y,
            estimate,
            server_z_err2,
            server_f_err2,
        })
    }
}

/// One end-to-end trial with the default pseudoinverse decoder.
pub fn run_pipeline(
    cfg: PipelineConfig,
    encoder: EncoderMatrix,
    raw: &DVector<f64>,
    seed: u64,
) -> Result<PipelineRecord> {
    Pipeline::new(cfg, encoder)?.run(raw, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randmat::{sample_encoder, spectral_norm};
    use proptest::prelude::*;

    fn vector(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn quiet_cfg(h: f64, alpha: f64) -> PipelineConfig {
        PipelineConfig {
            clip_norm: 10.0,
            sigma2: 0.0,
            channel: ChannelRealization::with_alpha(h, 0.0, alpha).unwrap(),
            csi_error: 0.0,
        }
    }

    #[test]
    fn clipping_cases() {
        let inside = vector(&[0.3, 0.4]);
        assert_eq!(clip_feature(&inside, 1.0).unwrap().values, inside);

        let outside = vector(&[4.0, 0.0, 0.0]);
        let c = clip_feature(&outside, 1.0).unwrap();
        assert!((c.values.norm() - 1.0).abs() < 1e-12);
        assert!((c.values[0] - 1.0).abs() < 1e-12);

        let c = clip_feature(&vector(&[3.0, 4.0]), 2.5).unwrap();
        assert!((c.values[0] - 1.5).abs() < 1e-15 && (c.values[1] - 2.0).abs() < 1e-15);

        let zero = clip_feature(&vector(&[0.0, 0.0]), 1.0).unwrap();
        assert!(zero.values.iter().all(|&x| x == 0.0));

        assert!(matches!(
            clip_feature(&DVector::zeros(0), 1.0),
            Err(Error::Dimension(_))
        ));
        assert!(clip_feature(&inside, 0.0).is_err());
    }

    #[test]
    fn encoding_cases() {
        let w = sample_encoder(3, 5, 1.0, 4).unwrap();
        let f = clip_feature(&DVector::zeros(5), 1.0).unwrap();
        assert!(encode(&w, &f).unwrap().values.iter().all(|&x| x == 0.0));

        let eye = EncoderMatrix::from_matrix(DMatrix::identity(4, 4), 1.0).unwrap();
        let f = clip_feature(&vector(&[0.1, -0.2, 0.3, 0.0]), 1.0).unwrap();
        assert_eq!(encode(&eye, &f).unwrap().values, f.values);

        let bad = clip_feature(&DVector::zeros(4), 1.0).unwrap();
        assert!(matches!(encode(&w, &bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn encoding_respects_operator_norm() {
        let w = sample_encoder(6, 20, 0.2, 17).unwrap();
        let norm = spectral_norm(w.entries()).unwrap();
        let cf = 1.7;
        for i in 0..1000 {
            let mut g = rng::stream(i, Stage::Feature, 0);
            let raw = DVector::from_vec(rng::gaussian_vec(&mut g, 20, 1.0));
            let f = clip_feature(&raw, cf).unwrap();
            let z = encode(&w, &f).unwrap();
            assert!(z.values.norm() <= norm * cf * (1.0 + 1e-12));
        }
    }

    #[test]
    fn privatize_zero_noise_is_identity_and_deterministic() {
        let z = LatentVector {
            values: vector(&[1.0, -2.0]),
            privatized: false,
        };
        let same = privatize(&z, 0.0, 5).unwrap();
        assert_eq!(same.values, z.values);
        assert!(same.privatized);
        assert_eq!(privatize(&z, 2.0, 9).unwrap(), privatize(&z, 2.0, 9).unwrap());
        assert!(privatize(&z, -1.0, 0).is_err());
    }

    #[test]
    fn privatize_noise_moments() {
        let sigma2 = 2.5;
        let z = LatentVector {
            values: DVector::from_element(1, 3.0),
            privatized: false,
        };
        let n = 100_000u64;
        let diffs: Vec<f64> = (0..n)
            .map(|s| privatize(&z, sigma2, s).unwrap().values[0] - 3.0)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 5.0 * (sigma2 / n as f64).sqrt());
        assert!((var / sigma2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn transmit_and_power_conversion() {
        let z = LatentVector {
            values: vector(&[1.0, 2.0, -2.0]),
            privatized: true,
        };
        assert_eq!(transmit(&z, 1.0).unwrap(), z.values);
        let ch = ChannelRealization::from_dbm(1.0, 0.0, 30.0).unwrap();
        assert!((ch.power() - 1000.0).abs() < 1e-9);
        assert!((ch.alpha() - 31.622776601683793).abs() < 1e-12);
        assert_eq!(ch.alpha() * ch.alpha(), ch.power());
        let zp = transmit(&z, ch.alpha()).unwrap();
        assert!((zp.norm() - ch.alpha() * z.values.norm()).abs() < 1e-12);
        assert!(transmit(&z, 0.0).is_err());
    }

    #[test]
    fn channel_gain_and_noise() {
        let zp = vector(&[1.0, -3.0, 0.5]);
        let clean = ChannelRealization::with_alpha(1.0, 0.0, 1.0).unwrap();
        assert_eq!(channel_apply(&zp, &clean, 1), zp);
        let neg = ChannelRealization::with_alpha(-0.5, 0.0, 1.0).unwrap();
        assert_eq!(channel_apply(&zp, &neg, 1), &zp * -0.5);

        let noisy = ChannelRealization::with_alpha(0.7, 0.3, 1.0).unwrap();
        let one = vector(&[2.0]);
        let n = 100_000u64;
        let res: Vec<f64> = (0..n).map(|s| channel_apply(&one, &noisy, s)[0] - 1.4).collect();
        let mean = res.iter().sum::<f64>() / n as f64;
        let var = res.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / 0.3 - 1.0).abs() < 0.02);
    }

    #[test]
    fn postprocess_cases() {
        let y = vector(&[2.0, -4.0]);
        assert_eq!(server_postprocess(&y, 1.0).unwrap(), y);
        assert_eq!(server_postprocess(&y, 3.0).unwrap(), &y * 3.0);
        assert!(server_postprocess(&y, 0.0).is_err());
    }

    #[test]
    fn decoding_cases() {
        let dec = DMatrix::<f64>::zeros(4, 2);
        let est = decode(&dec, &vector(&[1.0, 2.0]), 1.0).unwrap();
        assert!(est.f_hat.iter().all(|&x| x == 0.0));
        assert!(matches!(decode(&dec, &vector(&[1.0]), 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn noiseless_square_chain_is_exact() {
        let w = sample_encoder(6, 6, 0.4, 21).unwrap();
        let cfg = quiet_cfg(-0.8, 3.0);
        let raw = vector(&[0.1, 0.2, -0.3, 0.4, 0.0, -0.1]);
        let rec = run_pipeline(cfg, w, &raw, 0).unwrap();
        assert!((&rec.estimate.f_hat - &rec.f.values).amax() < 1e-10);
        assert!(rec.server_f_err2 < 1e-20);
        assert!((&rec.estimate.z_hat - &rec.z.values).amax() < 1e-12);
    }

    #[test]
    fn noiseless_wide_chain_projects_onto_row_space() {
        let w = sample_encoder(4, 9, 0.4, 22).unwrap();
        let pinv = randmat::pseudoinverse(w.entries(), randmat::DEFAULT_PINV_TOL);
        let projector = &pinv * w.entries();
        let cfg = quiet_cfg(1.3, 2.0);
        let raw = DVector::from_fn(9, |i, _| (i as f64 * 0.7).sin());
        let rec = run_pipeline(cfg, w, &raw, 3).unwrap();
        let f = &rec.f.values;
        assert!((&rec.estimate.f_hat - &projector * f).amax() < 1e-10);
        let residual = ((&projector - DMatrix::<f64>::identity(9, 9)) * f).norm_squared();
        assert!((rec.server_f_err2 - residual).abs() < 1e-10);
    }

    #[test]
    fn perfect_csi_latent_error_statistics() {
        let (r, d) = (3, 5);
        let sigma2 = 0.4;
        let ch = ChannelRealization::with_alpha(0.6, 0.9, 2.0).unwrap();
        let cfg = PipelineConfig {
            clip_norm: 1.0,
            sigma2,
            channel: ch,
            csi_error: 0.0,
        };
        let p = Pipeline::new(cfg, sample_encoder(r, d, 0.5, 8).unwrap()).unwrap();
        let raw = DVector::from_element(d, 0.3);
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for s in 0..n {
            let rec = p.run(&raw, s).unwrap();
            let e = &rec.estimate.z_hat - &rec.z.values;
            sum += e.sum();
            sum2 += e.norm_squared();
        }
        let count = (n as usize * r) as f64;
        let target = sigma2 + 0.9 / (4.0 * 0.36);
        let mean = sum / count;
        assert!(mean.abs() < 5.0 * (target / count).sqrt());
        assert!(((sum2 / count - mean * mean) / target - 1.0).abs() < 0.03);
    }

    #[test]
    fn csi_error_biases_the_estimate() {
        let w = sample_encoder(3, 3, 1.0, 1).unwrap();
        let mut cfg = quiet_cfg(2.0, 1.0);
        cfg.csi_error = 0.25;
        let p = Pipeline::new(cfg, w).unwrap();
        assert!((p.beta() - 1.0 / 2.5).abs() < 1e-15);
        let rec = p.run(&vector(&[0.2, 0.1, -0.3]), 0).unwrap();
        assert!((&rec.estimate.z_hat - &rec.z.values * 0.8).amax() < 1e-12);
        let mut zero = quiet_cfg(0.0, 1.0);
        zero.csi_error = 0.0;
        assert!(matches!(
            Pipeline::new(zero, sample_encoder(2, 2, 1.0, 0).unwrap()),
            Err(Error::Degenerate(_))
        ));
    }

    proptest! {
        #[test]
        fn clipping_is_idempotent(xs in proptest::collection::vec(-100.0f64..100.0, 1..20), c in 0.01f64..50.0) {
            let once = clip_feature(&DVector::from_vec(xs), c).unwrap();
            prop_assert!(once.values.norm() <= c * (1.0 + 1e-12));
            let twice = clip_feature(&once.values, c).unwrap();
            prop_assert_eq!(once.values, twice.values);
        }

        #[test]
        fn chain_is_affine_in_the_feature(seed in 0u64..1000, t in -2.0f64..2.0) {
            let w = sample_encoder(3, 6, 0.5, seed).unwrap();
            let cfg = PipelineConfig {
                clip_norm: 1e6,
                sigma2: 0.5,
                channel: ChannelRealization::with_alpha(0.9, 0.2, 1.5).unwrap(),
                csi_error: 0.1,
            };
            let p = Pipeline::new(cfg, w).unwrap();
            let a = DVector::from_fn(6, |i, _| i as f64 - 2.0);
            let b = DVector::from_fn(6, |i, _| (i as f64).cos());
            let mix = &a * t + &b * (1.0 - t);
            let fa = p.run(&a, seed).unwrap().estimate.f_hat;
            let fb = p.run(&b, seed).unwrap().estimate.f_hat;
            let fm = p.run(&mix, seed).unwrap().estimate.f_hat;
            prop_assert!((fm - (fa * t + fb * (1.0 - t))).amax() < 1e-8);
        }
    }
}
