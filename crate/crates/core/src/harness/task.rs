//! Two-class nearest-centroid task with a known margin.
//!
//! Centroids sit at `±margin·u`. Every clean feature has its `u` component of
//! magnitude in `[margin, 1.5 margin]`, so any perturbation shorter than
//! `margin` leaves the decision unchanged. Labels are flipped on a
//! deterministic, evenly spread `p_flip` fraction of trial indices, which
//! makes the clean accuracy over `n` trials exactly `1 - floor(n p_flip)/n`.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct MarginTask {
    axis: DVector<f64>,
    margin: f64,
    p_flip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub features: DVector<f64>,
    /// Ground-truth label in `{-1, +1}`.
    pub label: i8,
}

pub fn synth_margin_task(d: usize, margin: f64, p_flip: f64, seed: u64) -> Result<MarginTask> {
    if d == 0 {
        return Err(Error::Dimension("task dimension must be >= 1".into()));
    }
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::Parameter(format!("margin must be positive, got {margin}")));
    }
    if !(0.0..0.5).contains(&p_flip) {
        return Err(Error::Parameter(format!("p_flip must lie in [0, 0.5), got {p_flip}")));
    }
    let mut g = rng::stream(seed, Stage::Task, 0);
    let axis = DVector::from_vec(rng::unit_vector(&mut g, d));
    Ok(MarginTask { axis, margin, p_flip })
}

impl MarginTask {
    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn axis(&self) -> &DVector<f64> {
        &self.axis
    }

    /// Nominal clean accuracy `1 - p_flip`.
    pub fn p0(&self) -> f64 {
        1.0 - self.p_flip
    }

    pub fn centroid(&self, label: i8) -> DVector<f64> {
        &self.axis * (self.margin * label as f64)
    }

    pub fn max_norm(&self) -> f64 {
        self.margin * super::config::TASK_NORM_FACTOR
    }

    pub fn is_flipped(&self, index: u64) -> bool {
        let p = self.p_flip;
        ((index + 1) as f64 * p).floor() > (index as f64 * p).floor()
    }

    pub fn sample(&self, index: u64, seed: u64) -> LabeledFeature {
        let mut g = rng::stream(seed, Stage::Label, index);
        let side: i8 = if g.random::<bool>() { 1 } else { -1 };
        let along = self.margin * (1.0 + 0.5 * g.random::<f64>());
        let mut features = &self.axis * (along * side as f64);
        if self.dim() > 1 {
            let v = DVector::from_vec(rng::gaussian_vec(&mut g, self.dim(), 1.0));
            let orth = &v - &self.axis * self.axis.dot(&v);
            let n = orth.norm();
            if n > 0.0 {
                features += orth * (self.margin * g.random::<f64>() / n);
            }
        }
        let label = if self.is_flipped(index) { -side } else { side };
        LabeledFeature { features, label }
    }

    /// Nearest centroid; ties go to `+1`.
    pub fn classify(&self, f: &DVector<f64>) -> i8 {
        if self.axis.dot(f) >= 0.0 {
            1
        } else {
            -1
        }
    }
}
