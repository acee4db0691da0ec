use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{AccuracyMse, ExperimentConfig};
use super::stats::Summary;
use super::task::{synth_margin_task, MarginTask};
use crate::acquisition::{self, AcquisitionOperator};
use crate::adversary::{self, AdversaryChannel, MinimaxBound};
use crate::bounds::{self, AccuracyBound, ServerMseBound};
use crate::error::{Error, Result};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::privacy::NoiseCalibration;
use crate::randmat;
use crate::rng::{self, Stage};

/// Per-metric aggregates of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub n: usize,
    /// `‖z_hat/(beta h alpha) - z‖²`
    pub server_z: Summary,
    /// `‖f_hat - f‖²`
    pub server_f: Summary,
    /// `‖gamma y_adv - z‖²`
    pub adversary_z: Summary,
    /// `‖W^+ z_hat_adv - f‖²`, or `‖W^+ (z_hat_adv - z)‖²` for probe runs.
    pub adversary_f: Summary,
    /// `‖x_hat - x‖²` through the acquisition inverse; absent without acquisition.
    pub raw_input: Option<Summary>,
    /// Fraction of server decisions matching the ground-truth label.
    pub accuracy: Summary,
}

/// Squared errors of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub server_z: f64,
    pub server_f: f64,
    pub adversary_z: f64,
    pub adversary_f: f64,
    pub raw_input: Option<f64>,
    pub correct: bool,
}

impl TrialStats {
    /// Aggregate records in index order.
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let pick = |f: fn(&TrialRecord) -> f64| Summary::from_values(records.iter().map(f));
        let raw_input = if records.iter().all(|r| r.raw_input.is_some()) && !records.is_empty() {
            Some(Summary::from_values(records.iter().filter_map(|r| r.raw_input)))
        } else {
            None
        };
        TrialStats {
            n: records.len(),
            server_z: pick(|r| r.server_z),
            server_f: pick(|r| r.server_f),
            adversary_z: pick(|r| r.adversary_z),
            adversary_f: pick(|r| r.adversary_f),
            raw_input,
            accuracy: pick(|r| if r.correct { 1.0 } else { 0.0 }),
        }
    }
}

/// Closed forms evaluated at one configuration and encoder draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForms {
    pub calibration: NoiseCalibration,
    pub nu2: f64,
    /// `None` when `nu2 = 0` or `d_z = 0` (bound undefined).
    pub minimax: Option<MinimaxBound>,
    /// Server bound at the worst-case feature norm `‖f‖ = C_f`.
    pub server: ServerMseBound,
    pub gamma: f64,
}

/// A configuration with its encoder, decoder, task and acquisition operator
/// materialized. Trials are pure functions of `(experiment, index)`.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    pipeline: Pipeline,
    adversary: AdversaryChannel,
    closed: ClosedForms,
    task: MarginTask,
    acquisition: Option<AcquisitionOperator>,
}

impl Experiment {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.master_seed;
        let encoder = randmat::sample_encoder(cfg.r, cfg.d, cfg.b, rng::derive_seed(seed, Stage::Encoder, 0))?;
        let calibration = cfg.calibration()?;
        let pcfg = PipelineConfig {
            clip_norm: cfg.clip_norm,
            sigma2: calibration.sigma2,
            channel: cfg.channel()?,
            csi_error: cfg.effective_csi_error(),
        };
        let pipeline = Pipeline::new(pcfg, encoder)?;
        let alpha = cfg.alpha();
        let nu2 = adversary::effective_noise(cfg.g, alpha, calibration.sigma2, cfg.sigma_a2);
        let minimax = adversary::minimax_bound(cfg.g, alpha, calibration.d_z, cfg.r, nu2).ok();
        let gamma = match (cfg.gamma, minimax) {
            (Some(g), _) => g,
            (None, Some(m)) => m.gamma_star,
            (None, None) if cfg.g != 0.0 => 1.0 / (cfg.g * alpha),
            (None, None) => 0.0,
        };
        let server = bounds::server_mse_bound(
            pipeline.beta(),
            cfg.h,
            alpha,
            pipeline.decoder(),
            pipeline.encoder(),
            calibration.sigma2,
            cfg.sigma_m2,
            cfg.clip_norm * cfg.clip_norm,
        )?;
        let task = synth_margin_task(cfg.d, cfg.margin, cfg.p_flip, rng::derive_seed(seed, Stage::Task, 0))?;
        let acquisition = if cfg.m_dim > 0 {
            Some(
                acquisition::build(
                    cfg.m_dim,
                    cfg.d,
                    cfg.transform,
                    rng::derive_seed(seed, Stage::Acquisition, 0),
                )?
                .with_noise(cfg.sigma_w2)?,
            )
        } else {
            None
        };
        Ok(Self {
            cfg: cfg.clone(),
            pipeline,
            adversary: cfg.adversary()?,
            closed: ClosedForms {
                calibration,
                nu2,
                minimax,
                server,
                gamma,
            },
            task,
            acquisition,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn closed_forms(&self) -> &ClosedForms {
        &self.closed
    }

    pub fn task(&self) -> &MarginTask {
        &self.task
    }

    pub fn with_task(mut self, task: MarginTask) -> Result<Self> {
        if task.dim() != self.cfg.d {
            return Err(Error::Dimension(format!(
                "task dimension {} != d={}",
                task.dim(),
                self.cfg.d
            )));
        }
        self.task = task;
        Ok(self)
    }

    pub fn acquisition(&self) -> Option<&AcquisitionOperator> {
        self.acquisition.as_ref()
    }

    /// Accuracy lower bound with the configured MSE source.
    pub fn accuracy_bound(&self, stats: &TrialStats) -> Result<AccuracyBound> {
        let mse = match self.cfg.accuracy_mse {
            AccuracyMse::Bound => self.closed.server.total,
            AccuracyMse::Empirical => stats.server_f.mean(),
        };
        bounds::accuracy_lower_bound(self.cfg.p0(), mse, self.cfg.margin)
    }

    /// Raw signal whose noiseless acquisition equals `f`, plus a random
    /// component outside the sampled subspace.
    fn raw_signal(&self, op: &AcquisitionOperator, f: &DVector<f64>, seed: u64) -> Result<DVector<f64>> {
        let mut g = rng::stream(seed, Stage::Acquisition, 2);
        let scale = self.cfg.clip_norm / (op.m_dim() as f64).sqrt();
        let noise = DVector::from_vec(rng::gaussian_vec(&mut g, op.m_dim(), scale * scale));
        let outside = &noise - op.project(&noise)?;
        Ok(acquisition::invert(op, f)? + outside)
    }

    pub fn trial(&self, index: usize) -> Result<TrialRecord> {
        let seed = rng::derive_seed(self.cfg.master_seed, Stage::Trial, index as u64);
        let sample = self.task.sample(index as u64, seed);
        let (input, raw_x) = match &self.acquisition {
            Some(op) => {
                let x = self.raw_signal(op, &sample.features, seed)?;
                (acquisition::acquire(op, &x, seed)?, Some(x))
            }
            None => (sample.features.clone(), None),
        };
        let rec = self.pipeline.run(&input, seed)?;
        let alpha = self.cfg.alpha();
        let w_pinv = self.pipeline.decoder();

        let (z_adv, z_prime) = match self.cfg.z_norm {
            Some(norm) => {
                let mut g = rng::stream(seed, Stage::Probe, 0);
                let z = DVector::from_vec(rng::unit_vector(&mut g, self.cfg.r)) * norm;
                let noise = &rec.z_tilde.values - &rec.z.values;
                let zp = (&z + noise) * alpha;
                (z, zp)
            }
            None => (rec.z.values.clone(), rec.z_prime.clone()),
        };
        let y_adv = adversary::observe_transmitted(&z_prime, &self.adversary, seed);
        let z_hat_adv = adversary::estimate_latent(&y_adv, self.closed.gamma);
        let latent_err = &z_hat_adv - &z_adv;
        let f_hat_adv = adversary::reconstruct_with(w_pinv, &z_hat_adv)?;
        let adversary_f = if self.cfg.z_norm.is_some() {
            (w_pinv * &latent_err).norm_squared()
        } else {
            (&f_hat_adv - &rec.f.values).norm_squared()
        };
        let raw_input = match (&self.acquisition, raw_x) {
            (Some(op), Some(x)) => Some((acquisition::invert(op, &f_hat_adv)? - x).norm_squared()),
            _ => None,
        };
        Ok(TrialRecord {
            server_z: rec.server_z_err2,
            server_f: rec.server_f_err2,
            adversary_z: latent_err.norm_squared(),
            adversary_f,
            raw_input,
            correct: self.task.classify(&rec.estimate.f_hat) == sample.label,
        })
    }

    /// All trials, evaluated in parallel and aggregated in index order.
    pub fn records(&self) -> Result<Vec<TrialRecord>> {
        (0..self.cfg.trials)
            .into_par_iter()
            .map(|i| {
                self.trial(i).map_err(|e| Error::Trial {
                    trial: i,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn run(&self) -> Result<TrialStats> {
        Ok(TrialStats::from_records(&self.records()?))
    }
}

pub fn run_trials(cfg: &ExperimentConfig) -> Result<TrialStats> {
    Experiment::new(cfg)?.run()
}

/// Server-side accuracy of `task`'s classifier on decoded features.
pub fn empirical_accuracy(task: &MarginTask, cfg: &ExperimentConfig) -> Result<f64> {
    let exp = Experiment::new(cfg)?.with_task(task.clone())?;
    Ok(exp.run()?.accuracy.mean())
}
