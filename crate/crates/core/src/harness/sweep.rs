use std::str::FromStr;

use super::config::ExperimentConfig;
use super::trials::{Experiment, TrialStats};
use crate::bounds::{optimal_dim_consistent, ConsistentDimensionProblem};
use crate::error::{Error, Result};
use crate::mimo::{self, MimoScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    R,
    Antennas,
    D,
    Omega,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::R => "r",
            SweepAxis::Antennas => "M",
            SweepAxis::D => "d",
            SweepAxis::Omega => "omega",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(SweepAxis::Epsilon),
            "r" => Ok(SweepAxis::R),
            "M" | "m" => Ok(SweepAxis::Antennas),
            "d" => Ok(SweepAxis::D),
            "omega" => Ok(SweepAxis::Omega),
            other => Err(Error::config(
                "axis",
                format!("unknown axis `{other}` (expected epsilon, r, M, d or omega)"),
            )),
        }
    }
}

/// MIMO simulations are skipped above this antenna count.
pub const MAX_SIMULATED_ANTENNAS: usize = 65_536;

/// One sweep point: the Monte Carlo stats plus every closed form recomputed
/// at this point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    /// The configuration actually run (for the omega axis `r` is the
    /// recalibrated optimal dimension).
    pub config: ExperimentConfig,
    pub sigma2: f64,
    pub c_w: f64,
    pub d_z: f64,
    pub nu2: f64,
    /// Minimax bound; on the `M` axis the MIMO lower bound.
    pub bound_adv: f64,
    pub gamma_star: f64,
    /// Adversary latent MSE; on the `M` axis the normalized correlator MSE.
    pub mse_adv_emp: f64,
    pub ci95_mse_adv: f64,
    pub mse_server_emp: f64,
    pub bound_server: f64,
    pub acc_emp: f64,
    pub acc_bound: f64,
    pub stats: TrialStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

fn point_config(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(Error::config(
                axis.as_str(),
                format!("sweep value {v} is not a positive integer"),
            ))
        }
    };
    match axis {
        SweepAxis::Epsilon => cfg.epsilon = value,
        SweepAxis::R => cfg.r = as_count(value)?,
        SweepAxis::Antennas => cfg.antennas = as_count(value)?,
        SweepAxis::D => {
            cfg.d = as_count(value)?;
            if let Some(rm) = cfg.r_max {
                cfg.r_max = Some(rm.min(cfg.d));
            }
        }
        SweepAxis::Omega => {
            cfg.omega = value;
            cfg.validate()?;
            let problem = ConsistentDimensionProblem {
                budget: cfg.budget()?,
                b: cfg.b,
                clip_norm: cfg.clip_norm,
                d: cfg.d,
                g: cfg.g,
                alpha: cfg.alpha(),
                sigma_a2: cfg.sigma_a2,
                omega: value,
                r_max: cfg.r_max(),
            };
            cfg.r = optimal_dim_consistent(&problem)
                .map_err(|e| match e {
                    Error::Infeasible(m) => Error::Infeasible(format!("omega={value}: {m}")),
                    other => other,
                })?
                .r_star;
        }
    }
    cfg.validate().map_err(|e| match e {
        Error::Config { key, message } => Error::Config {
            key,
            message: format!("{message} (sweep value {value})"),
        },
        other => other,
    })?;
    Ok(cfg)
}

pub fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let cfg = point_config(base, axis, value)?;
    let exp = Experiment::new(&cfg)?;
    let stats = exp.run()?;
    let cf = *exp.closed_forms();
    let (bound_adv, mse_adv_emp, ci95_mse_adv) = if axis == SweepAxis::Antennas {
        let sc = MimoScenario {
            r: cfg.r,
            antennas: cfg.antennas,
            alpha: cfg.alpha(),
            sigma2: cf.calibration.sigma2,
            sigma_m2: cfg.sigma_m2,
            sigma_a2: cfg.sigma_a2,
            c_z2: cfg.c_z2()?,
            law: cfg.channel_law,
        };
        let bound = mimo::mimo_bound(sc.r, sc.alpha, sc.sigma2, sc.sigma_a2, sc.c_z2, sc.antennas)?.bound;
        if cfg.antennas <= MAX_SIMULATED_ANTENNAS && cfg.trials >= 2 {
            let sim = mimo::simulate(&sc, cfg.trials, cfg.master_seed)?;
            (bound, sim.adv_mse, 1.959_963_984_540_054 * sim.adv_mse_stderr)
        } else {
            (bound, f64::NAN, f64::NAN)
        }
    } else {
        (
            cf.minimax.map_or(f64::NAN, |m| m.bound),
            stats.adversary_z.mean(),
            stats.adversary_z.ci95_half_width().unwrap_or(f64::NAN),
        )
    };
    Ok(SweepRow {
        axis_value: value,
        sigma2: cf.calibration.sigma2,
        c_w: cf.calibration.c_w,
        d_z: cf.calibration.d_z,
        nu2: cf.nu2,
        bound_adv,
        gamma_star: cf.minimax.map_or(f64::NAN, |m| m.gamma_star),
        mse_adv_emp,
        ci95_mse_adv,
        mse_server_emp: stats.server_f.mean(),
        bound_server: cf.server.total,
        acc_emp: stats.accuracy.mean(),
        acc_bound: exp.accuracy_bound(&stats)?.lower,
        config: cfg,
        stats,
    })
}

pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::config("values", "sweep needs at least one value"));
    }
    let rows = values
        .iter()
        .map(|&v| sweep_point(base, axis, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { axis, rows })
}
