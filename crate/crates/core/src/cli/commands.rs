use crate::adversary::{self, feature_transfer_bound};
use crate::bounds::{self, ConsistentDimensionProblem};
use crate::error::{Error, Result};
use crate::harness::sweep::SweepAxis;
use crate::harness::{self, Experiment, ExperimentConfig, Summary};
use crate::mimo::{self, MimoScenario};
use crate::randmat;
use crate::rng::{self, Stage};

use super::table::Table;

pub const SWEEP_COLUMNS: &[&str] = &[
    "axis_value",
    "sigma2",
    "c_w",
    "d_z",
    "nu2",
    "bound_adv",
    "gamma_star",
    "mse_adv_emp",
    "mse_server_emp",
    "bound_server",
    "acc_emp",
    "acc_bound",
    "ci95_mse_adv",
];

fn or_nan(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Regime(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

pub fn calibrate(cfg: &ExperimentConfig) -> Result<Table> {
    let cal = crate::privacy::calibrate(cfg.budget()?, cfg.r, cfg.d, cfg.b, cfg.clip_norm)?;
    let mut t = Table::new(&[
        "epsilon",
        "delta",
        "r",
        "d",
        "b",
        "C_f",
        "c_w",
        "sigma2",
        "sensitivity",
        "d_z",
    ]);
    t.push(vec![
        cfg.epsilon.into(),
        cfg.delta.into(),
        cfg.r.into(),
        cfg.d.into(),
        cfg.b.into(),
        cfg.clip_norm.into(),
        cal.c_w.into(),
        cal.sigma2.into(),
        cal.sensitivity.into(),
        cal.d_z.into(),
    ]);
    Ok(t)
}

pub fn bound(cfg: &ExperimentConfig) -> Result<Table> {
    let exp = Experiment::new(cfg)?;
    let cf = exp.closed_forms();
    let mm = cfg.minimax()?;
    let transfer = or_nan(feature_transfer_bound(
        mm.bound,
        cfg.transfer_c(),
        cfg.d,
        cfg.r,
        cfg.transfer_t,
    ))?;
    let acc = bounds::accuracy_lower_bound(cfg.p0(), cf.server.total, cfg.margin)?;
    let mut t = Table::new(&[
        "sigma2",
        "c_w",
        "d_z",
        "alpha",
        "nu2",
        "bound_adv",
        "gamma_star",
        "bound_adv_feature",
        "approx_term",
        "privacy_term",
        "channel_term",
        "bound_server",
        "p0",
        "acc_bound",
    ]);
    t.push(vec![
        cf.calibration.sigma2.into(),
        cf.calibration.c_w.into(),
        cf.calibration.d_z.into(),
        cfg.alpha().into(),
        cf.nu2.into(),
        mm.bound.into(),
        mm.gamma_star.into(),
        transfer.into(),
        cf.server.approx_term.into(),
        cf.server.privacy_term.into(),
        cf.server.channel_term.into(),
        cf.server.total.into(),
        acc.p0.into(),
        acc.lower.into(),
    ]);
    Ok(t)
}

fn summary_row(t: &mut Table, name: &str, s: &Summary, reference: f64) {
    let (lo, hi) = s.ci95().unwrap_or((f64::NAN, f64::NAN));
    t.push(vec![
        name.into(),
        (s.count() as usize).into(),
        s.mean().into(),
        s.variance().into(),
        s.stderr().into(),
        lo.into(),
        hi.into(),
        reference.into(),
    ]);
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Table> {
    let exp = Experiment::new(cfg)?;
    let stats = exp.run()?;
    let cf = exp.closed_forms();
    let acc = exp.accuracy_bound(&stats)?;
    let mut t = Table::new(&[
        "metric",
        "n",
        "mean",
        "variance",
        "stderr",
        "ci95_low",
        "ci95_high",
        "closed_form",
    ]);
    summary_row(&mut t, "server_z", &stats.server_z, f64::NAN);
    summary_row(&mut t, "server_f", &stats.server_f, cf.server.total);
    summary_row(
        &mut t,
        "adversary_z",
        &stats.adversary_z,
        cf.minimax.map_or(f64::NAN, |m| m.bound),
    );
    summary_row(&mut t, "adversary_f", &stats.adversary_f, f64::NAN);
    if let Some(raw) = &stats.raw_input {
        summary_row(&mut t, "adversary_raw", raw, f64::NAN);
    }
    summary_row(&mut t, "accuracy", &stats.accuracy, acc.lower);
    Ok(t)
}

pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Table> {
    let result = harness::sweep(cfg, axis, values)?;
    let mut t = Table::new(SWEEP_COLUMNS);
    for row in &result.rows {
        t.push(vec![
            row.axis_value.into(),
            row.sigma2.into(),
            row.c_w.into(),
            row.d_z.into(),
            row.nu2.into(),
            row.bound_adv.into(),
            row.gamma_star.into(),
            row.mse_adv_emp.into(),
            row.mse_server_emp.into(),
            row.bound_server.into(),
            row.acc_emp.into(),
            row.acc_bound.into(),
            row.ci95_mse_adv.into(),
        ]);
    }
    Ok(t)
}

pub fn dimension(cfg: &ExperimentConfig) -> Result<Table> {
    let cal = cfg.calibration()?;
    let nu2 = cfg.nu2()?;
    let explicit = bounds::optimal_dim_explicit(cfg.g, cfg.alpha(), cal.d_z, nu2, cfg.omega)?;
    let problem = ConsistentDimensionProblem {
        budget: cfg.budget()?,
        b: cfg.b,
        clip_norm: cfg.clip_norm,
        d: cfg.d,
        g: cfg.g,
        alpha: cfg.alpha(),
        sigma_a2: cfg.sigma_a2,
        omega: cfg.omega,
        r_max: cfg.r_max(),
    };
    let consistent = bounds::optimal_dim_consistent(&problem)?;
    let (dz_c, nu2_c, _) = problem.evaluate(consistent.r_star)?;
    let mut t = Table::new(&["mode", "omega", "r_star", "d_z", "nu2", "bound_at_r_star"]);
    t.push(vec![
        explicit.mode.as_str().into(),
        cfg.omega.into(),
        explicit.r_star.into(),
        cal.d_z.into(),
        nu2.into(),
        explicit.bound_at_r_star.into(),
    ]);
    t.push(vec![
        consistent.mode.as_str().into(),
        cfg.omega.into(),
        consistent.r_star.into(),
        dz_c.into(),
        nu2_c.into(),
        consistent.bound_at_r_star.into(),
    ]);
    Ok(t)
}

pub fn mimo(cfg: &ExperimentConfig) -> Result<Table> {
    let cal = cfg.calibration()?;
    let c_z2 = cfg.c_z2()?;
    let alpha = cfg.alpha();
    let bound = mimo::mimo_bound(cfg.r, alpha, cal.sigma2, cfg.sigma_a2, c_z2, cfg.antennas)?;
    let nu2_single = adversary::effective_noise(1.0, alpha, cal.sigma2, cfg.sigma_a2);
    let single = adversary::minimax_bound(1.0, alpha, c_z2.sqrt(), cfg.r, nu2_single)?;
    let sc = MimoScenario {
        r: cfg.r,
        antennas: cfg.antennas,
        alpha,
        sigma2: cal.sigma2,
        sigma_m2: cfg.sigma_m2,
        sigma_a2: cfg.sigma_a2,
        c_z2,
        law: cfg.channel_law,
    };
    let sim = mimo::simulate(&sc, cfg.trials, cfg.master_seed)?;
    let mut t = Table::new(&[
        "M",
        "r",
        "alpha",
        "sigma2",
        "sigma_a2",
        "c_z2",
        "bound_mimo",
        "bound_single_antenna",
        "trials",
        "mse_adv_emp",
        "stderr_mse_adv",
        "mse_adv_raw",
        "mse_server_emp",
    ]);
    t.push(vec![
        cfg.antennas.into(),
        cfg.r.into(),
        alpha.into(),
        cal.sigma2.into(),
        cfg.sigma_a2.into(),
        c_z2.into(),
        bound.bound.into(),
        single.bound.into(),
        sim.trials.into(),
        sim.adv_mse.into(),
        sim.adv_mse_stderr.into(),
        sim.adv_raw_mse.into(),
        sim.server_mse.into(),
    ]);
    Ok(t)
}

/// Draws used for the Monte Carlo estimate of the transfer constant.
const TRANSFER_DRAWS: usize = 200;

pub fn acquire_demo(cfg: &ExperimentConfig) -> Result<Table> {
    let mut cfg = cfg.clone();
    if cfg.m_dim == 0 {
        cfg.m_dim = (2 * cfg.d).next_power_of_two();
    }
    cfg.validate()?;
    let exp = Experiment::new(&cfg)?;
    let stats = exp.run()?;
    let raw = stats
        .raw_input
        .ok_or_else(|| Error::Parameter("acquisition stage is not active".into()))?;
    let sigma_min = randmat::smallest_singular_value(exp.pipeline().encoder().entries())?;
    let est = adversary::estimate_transfer_constant(
        cfg.r,
        cfg.d,
        cfg.b,
        TRANSFER_DRAWS,
        rng::derive_seed(cfg.master_seed, Stage::Probe, 1),
    )?;
    let mse_z = stats.adversary_z.mean();
    let c_default = cfg.transfer_c();
    let bound_default = or_nan(feature_transfer_bound(mse_z, c_default, cfg.d, cfg.r, cfg.transfer_t))?;
    let bound_emp = or_nan(feature_transfer_bound(mse_z, est.c, cfg.d, cfg.r, cfg.transfer_t))?;
    let mut t = Table::new(&[
        "m_dim",
        "d",
        "r",
        "transform",
        "trials",
        "mse_adv_z",
        "mse_adv_f",
        "mse_adv_raw",
        "bound_adv",
        "sigma_min_w",
        "transfer_c_default",
        "transfer_c_emp",
        "bound_adv_feature",
        "bound_adv_feature_emp_c",
    ]);
    t.push(vec![
        cfg.m_dim.into(),
        cfg.d.into(),
        cfg.r.into(),
        cfg.transform.as_str().into(),
        stats.n.into(),
        mse_z.into(),
        stats.adversary_f.mean().into(),
        raw.mean().into(),
        exp.closed_forms().minimax.map_or(f64::NAN, |m| m.bound).into(),
        sigma_min.into(),
        c_default.into(),
        est.c.into(),
        bound_default.into(),
        bound_emp.into(),
    ]);
    Ok(t)
}
