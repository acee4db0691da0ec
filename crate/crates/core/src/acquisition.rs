//! Subsampled orthogonal acquisition `f = P_d T x + w` and its zero-fill
//! inverse `x_hat = T^T P_d^T f_hat`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{ensure_non_negative, Error, Result};
use crate::rng::{self, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// Normalized Sylvester-Hadamard; size must be a power of two.
    Hadamard,
    /// Orthonormal DCT-II.
    Dct,
    /// Q factor of a Gaussian matrix.
    RandomOrthogonal,
}

impl TransformKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransformKind::Hadamard => "hadamard",
            TransformKind::Dct => "dct",
            TransformKind::RandomOrthogonal => "random_orthogonal",
        }
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(TransformKind::Hadamard),
            "dct" => Ok(TransformKind::Dct),
            "random_orthogonal" => Ok(TransformKind::RandomOrthogonal),
            other => Err(Error::Parameter(format!(
                "unknown transform `{other}` (expected hadamard, dct or random_orthogonal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionOperator {
    transform: DMatrix<f64>,
    selection: Vec<usize>,
    sigma_w2: f64,
}

impl AcquisitionOperator {
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// Selected transform rows, in selection order.
    pub fn selection(&self) -> &[usize] {
        &self.selection
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    pub fn m_dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn d(&self) -> usize {
        self.selection.len()
    }

    pub fn with_noise(mut self, sigma_w2: f64) -> Result<Self> {
        ensure_non_negative("sigma_w2", sigma_w2)?;
        self.sigma_w2 = sigma_w2;
        Ok(self)
    }

    /// The `d x m_dim` matrix `A = P_d T`.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d(), self.m_dim(), |i, j| self.transform[(self.selection[i], j)])
    }

    /// Noise-free `A x`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.m_dim() {
            return Err(Error::Dimension(format!(
                "expected length {}, got {}",
                self.m_dim(),
                x.len()
            )));
        }
        Ok(DVector::from_iterator(
            self.d(),
            self.selection
                .iter()
                .map(|&row| self.transform.row(row).transpose().dot(x)),
        ))
    }

    /// Orthogonal projection of `x` onto the span of the selected rows.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        invert(self, &self.apply(x)?)
    }
}

pub fn hadamard(m_dim: usize) -> Result<DMatrix<f64>> {
    if m_dim == 0 || !m_dim.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "Hadamard size must be a power of two, got {m_dim}"
        )));
    }
    let scale = 1.0 / (m_dim as f64).sqrt();
    Ok(DMatrix::from_fn(m_dim, m_dim, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            scale
        } else {
            -scale
        }
    }))
}

pub fn dct(m_dim: usize) -> DMatrix<f64> {
    let n = m_dim as f64;
    DMatrix::from_fn(m_dim, m_dim, |k, j| {
        let norm = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        norm * (PI * (j as f64 + 0.5) * k as f64 / n).cos()
    })
}

pub fn random_orthogonal(m_dim: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::stream(seed, Stage::Acquisition, 1);
    let gauss = DMatrix::from_fn(m_dim, m_dim, |_, _| rng::gaussian(&mut g, 1.0));
    let qr = gauss.qr();
    let (mut q, r) = qr.unpack();
    // Fix column signs so the result is Haar distributed.
    for j in 0..m_dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `d` distinct indices from `0..m_dim`, uniformly without replacement.
pub fn select_rows(m_dim: usize, d: usize, seed: u64) -> Vec<usize> {
    let mut g = rng::stream(seed, Stage::Acquisition, 0);
    let mut idx: Vec<usize> = (0..m_dim).collect();
    for i in 0..d.min(m_dim) {
        let j = g.random_range(i..m_dim);
        idx.swap(i, j);
    }
    idx.truncate(d);
    idx
}

/// Noise-free operator; attach measurement noise with
/// [`AcquisitionOperator::with_noise`].
pub fn build(m_dim: usize, d: usize, kind: TransformKind, seed: u64) -> Result<AcquisitionOperator> {
    if d == 0 || m_dim == 0 {
        return Err(Error::Dimension(format!(
            "need d, m_dim >= 1 (got d={d}, m_dim={m_dim})"
        )));
    }
    if d > m_dim {
        return Err(Error::Dimension(format!("cannot select d={d} rows from m_dim={m_dim}")));
    }
    let transform = match kind {
        TransformKind::Hadamard => hadamard(m_dim)?,
        TransformKind::Dct => dct(m_dim),
        TransformKind::RandomOrthogonal => random_orthogonal(m_dim, seed),
    };
    Ok(AcquisitionOperator {
        transform,
        selection: select_rows(m_dim, d, seed),
        sigma_w2: 0.0,
    })
}

pub fn acquire(op: &AcquisitionOperator, x: &DVector<f64>, seed: u64) -> Result<DVector<f64>> {
    let clean = op.apply(x)?;
    if op.sigma_w2 == 0.0 {
        return Ok(clean);
    }
    let mut g = rng::stream(seed, Stage::MeasurementNoise, 0);
    Ok(clean + DVector::from_vec(rng::gaussian_vec(&mut g, op.d(), op.sigma_w2)))
}

pub fn invert(op: &AcquisitionOperator, f_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if f_hat.len() != op.d() {
        return Err(Error::Dimension(format!(
            "expected length {}, got {}",
            op.d(),
            f_hat.len()
        )));
    }
    let mut filled = DVector::zeros(op.m_dim());
    for (&row, &v) in op.selection.iter().zip(f_hat.iter()) {
        filled[row] = v;
    }
    Ok(op.transform.transpose() * filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonality_residual(t: &DMatrix<f64>) -> f64 {
        (t.transpose() * t - DMatrix::<f64>::identity(t.nrows(), t.nrows())).amax()
    }

    fn random_vec(seed: u64, n: usize) -> DVector<f64> {
        let mut g = rng::stream(seed, Stage::Probe, 0);
        DVector::from_vec(rng::gaussian_vec(&mut g, n, 1.0))
    }

    #[test]
    fn hadamard_is_normalized_and_orthogonal() {
        let h = hadamard(8).unwrap();
        let s = 1.0 / 8f64.sqrt();
        assert!(h.iter().all(|&x| (x.abs() - s).abs() < 1e-15));
        assert!(orthogonality_residual(&h) < 1e-12);
        assert!(matches!(
            build(12, 4, TransformKind::Hadamard, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn dct_and_random_orthogonal_are_orthogonal() {
        for m in [1, 5, 16, 31] {
            assert!(orthogonality_residual(&dct(m)) < 1e-12);
        }
        let q = random_orthogonal(16, 3);
        assert!(orthogonality_residual(&q) < 1e-12);
        assert_ne!(q, random_orthogonal(16, 4));
    }

    #[test]
    fn full_selection_is_permutation() {
        let op = build(10, 10, TransformKind::Dct, 5).unwrap();
        let mut sel = op.selection().to_vec();
        sel.sort();
        assert_eq!(sel, (0..10).collect::<Vec<_>>());
        let sub = build(10, 4, TransformKind::Dct, 5).unwrap();
        let mut s = sub.selection().to_vec();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn row_selection_is_roughly_uniform() {
        let mut counts = [0usize; 8];
        for seed in 0..8000 {
            for i in select_rows(8, 2, seed) {
                counts[i] += 1;
            }
        }
        // each row is chosen with probability 1/4
        for c in counts {
            assert!((c as f64 / 2000.0 - 1.0).abs() < 0.1, "{counts:?}");
        }
    }

    #[test]
    fn acquisition_examples() {
        let op = build(16, 16, TransformKind::RandomOrthogonal, 1).unwrap();
        let x = random_vec(1, 16);
        let f = acquire(&op, &x, 0).unwrap();
        assert!((f.norm() - x.norm()).abs() < 1e-10);
        assert!((invert(&op, &f).unwrap() - &x).amax() < 1e-10);
        assert!(acquire(&op, &DVector::zeros(16), 0).unwrap().iter().all(|&v| v == 0.0));
        assert!(invert(&op, &DVector::zeros(16)).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(acquire(&op, &DVector::zeros(15), 0), Err(Error::Dimension(_))));
        assert!(matches!(invert(&op, &DVector::zeros(3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn measurement_noise_variance() {
        let op = build(8, 3, TransformKind::Hadamard, 2)
            .unwrap()
            .with_noise(0.2)
            .unwrap();
        let x = random_vec(2, 8);
        let clean = op.apply(&x).unwrap();
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for s in 0..n {
            let e = acquire(&op, &x, s).unwrap() - &clean;
            sum += e.sum();
            sum2 += e.norm_squared();
        }
        let count = 3.0 * n as f64;
        let mean = sum / count;
        assert!(((sum2 / count - mean * mean) / 0.2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn inverse_is_an_isometry_on_differences() {
        let op = build(32, 9, TransformKind::Dct, 7).unwrap();
        for s in 0..200 {
            let a = random_vec(s, 9);
            let b = random_vec(s + 1000, 9);
            let lhs = (invert(&op, &a).unwrap() - invert(&op, &b).unwrap()).norm();
            assert!((lhs - (a - b).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_an_idempotent_projector() {
        let op = build(16, 6, TransformKind::Hadamard, 11).unwrap();
        let a = op.matrix();
        let pi = a.transpose() * &a;
        for s in 0..50 {
            let x = random_vec(s, 16);
            let p = op.project(&x).unwrap();
            assert!((&p - &pi * &x).amax() < 1e-10);
            assert!((op.project(&p).unwrap() - &p).amax() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_error_splits_orthogonally() {
        let op = build(16, 6, TransformKind::RandomOrthogonal, 3).unwrap();
        for s in 0..100 {
            let x = random_vec(s, 16);
            let f = acquire(&op, &x, s).unwrap();
            let f_hat = &f + random_vec(s + 77, 6) * 0.3;
            let x_hat = invert(&op, &f_hat).unwrap();
            let lhs = (&x_hat - &x).norm_squared();
            let outside = (&x - op.project(&x).unwrap()).norm_squared();
            let rhs = (&f_hat - &f).norm_squared() + outside;
            assert!((lhs - rhs).abs() < 1e-9 * lhs.max(1.0));
            assert!(lhs.sqrt() >= (&f_hat - &f).norm() - 1e-12);
        }
    }

    #[test]
    fn transform_kind_parsing() {
        assert_eq!("dct".parse::<TransformKind>().unwrap(), TransformKind::Dct);
        assert_eq!("hadamard".parse::<TransformKind>().unwrap().as_str(), "hadamard");
        assert!("fft".parse::<TransformKind>().is_err());
    }
}
