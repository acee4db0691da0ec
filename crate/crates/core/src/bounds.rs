//! Server-side closed forms and projection-dimension selection.

use nalgebra::DMatrix;

use crate::adversary::{effective_noise, minimax_bound};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::privacy::{calibrate, PrivacyBudget};
use crate::randmat::EncoderMatrix;

/// Three-term upper bound on `E‖f_hat - f‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerMseBound {
    pub approx_term: f64,
    pub privacy_term: f64,
    pub channel_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBound {
    pub p0: f64,
    pub margin: f64,
    pub mse: f64,
    /// `max(0, p0 (1 - mse / margin^2))`
    pub lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionMode {
    /// Noise and latent bound held fixed across r.
    Explicit,
    /// Noise and latent bound recalibrated at every r.
    Consistent,
}

impl DimensionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DimensionMode::Explicit => "explicit",
            DimensionMode::Consistent => "consistent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionSolution {
    pub r_star: usize,
    pub omega: f64,
    pub mode: DimensionMode,
    /// Minimax adversary bound at `r_star`.
    pub bound_at_r_star: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn server_mse_bound(
    beta: f64,
    h: f64,
    alpha: f64,
    decoder: &DMatrix<f64>,
    w: &EncoderMatrix,
    sigma2: f64,
    sigma_m2: f64,
    f_norm2: f64,
) -> Result<ServerMseBound> {
    if decoder.shape() != (w.cols(), w.rows()) {
        return Err(Error::Dimension(format!(
            "decoder must be {}x{}, got {:?}",
            w.cols(),
            w.rows(),
            decoder.shape()
        )));
    }
    ensure_non_negative("sigma2", sigma2)?;
    ensure_non_negative("sigma_m2", sigma_m2)?;
    ensure_non_negative("f_norm2", f_norm2)?;
    let gain = beta * h * alpha;
    let d = w.cols();
    let mismatch = decoder * w.entries() * gain - DMatrix::<f64>::identity(d, d);
    let dec_fro2 = decoder.norm_squared();
    let approx_term = mismatch.norm_squared() * f_norm2;
    let privacy_term = gain * gain * sigma2 * dec_fro2;
    let channel_term = beta * beta * sigma_m2 * dec_fro2;
    Ok(ServerMseBound {
        approx_term,
        privacy_term,
        channel_term,
        total: approx_term + privacy_term + channel_term,
    })
}

pub fn accuracy_lower_bound(p0: f64, mse: f64, margin: f64) -> Result<AccuracyBound> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::Parameter(format!("margin must be positive, got {margin}")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Parameter(format!("p0 must lie in [0, 1], got {p0}")));
    }
    if !(mse >= 0.0) {
        return Err(Error::Parameter(format!("mse must be non-negative, got {mse}")));
    }
    let lower = (p0 * (1.0 - mse / (margin * margin))).max(0.0);
    Ok(AccuracyBound { p0, margin, mse, lower })
}

/// `ceil(g^2 alpha^2 D^2 Omega / (nu^2 (D^2 - Omega)))`, floored at 1.
pub fn optimal_dim_explicit(g: f64, alpha: f64, d_z: f64, nu2: f64, omega: f64) -> Result<DimensionSolution> {
    ensure_positive("d_z", d_z)?;
    ensure_positive("nu2", nu2)?;
    ensure_positive("omega", omega)?;
    let d2 = d_z * d_z;
    if omega >= d2 {
        return Err(Error::Infeasible(format!(
            "target omega={omega} is not below d_z^2={d2}; the adversary bound never reaches it"
        )));
    }
    let raw = g * g * alpha * alpha * d2 * omega / (nu2 * (d2 - omega));
    if !raw.is_finite() || raw > u32::MAX as f64 {
        return Err(Error::Infeasible(format!(
            "required dimension {raw} is not representable"
        )));
    }
    let mut r = (raw.ceil() as usize).max(1);
    // Nudge across the ceiling when rounding put us one step off.
    let meets = |r: usize| minimax_bound(g, alpha, d_z, r, nu2).map(|m| m.bound >= omega);
    while r > 1 && meets(r - 1)? {
        r -= 1;
    }
    while !meets(r)? {
        r += 1;
    }
    Ok(DimensionSolution {
        r_star: r,
        omega,
        mode: DimensionMode::Explicit,
        bound_at_r_star: minimax_bound(g, alpha, d_z, r, nu2)?.bound,
    })
}

/// Parameters of the recalibrating solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistentDimensionProblem {
    pub budget: PrivacyBudget,
    pub b: f64,
    pub clip_norm: f64,
    pub d: usize,
    pub g: f64,
    pub alpha: f64,
    pub sigma_a2: f64,
    pub omega: f64,
    pub r_max: usize,
}

impl ConsistentDimensionProblem {
    /// `(d_z, nu2, minimax bound)` with the noise calibrated at dimension `r`.
    pub fn evaluate(&self, r: usize) -> Result<(f64, f64, f64)> {
        let cal = calibrate(self.budget, r, self.d, self.b, self.clip_norm)?;
        let nu2 = effective_noise(self.g, self.alpha, cal.sigma2, self.sigma_a2);
        let mb = minimax_bound(self.g, self.alpha, cal.d_z, r, nu2)?;
        Ok((cal.d_z, nu2, mb.bound))
    }
}

/// Smallest `r` in `[1, r_max]` whose recalibrated minimax bound reaches
/// `omega`.
pub fn optimal_dim_consistent(p: &ConsistentDimensionProblem) -> Result<DimensionSolution> {
    ensure_positive("omega", p.omega)?;
    if p.r_max == 0 || p.r_max > p.d {
        return Err(Error::Parameter(format!(
            "r_max must lie in [1, d={}], got {}",
            p.d, p.r_max
        )));
    }
    for r in 1..=p.r_max {
        let (_, _, bound) = p.evaluate(r)?;
        if bound >= p.omega {
            return Ok(DimensionSolution {
                r_star: r,
                omega: p.omega,
                mode: DimensionMode::Consistent,
                bound_at_r_star: bound,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no r in [1, {}] gives an adversary bound >= omega={}",
        p.r_max, p.omega
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randmat::{pseudoinverse, sample_encoder, DEFAULT_PINV_TOL};
    use proptest::prelude::*;

    #[test]
    fn square_inverse_has_no_approximation_error() {
        let w = sample_encoder(5, 5, 0.5, 2).unwrap();
        let dec = w.entries().clone().try_inverse().unwrap();
        let (h, alpha, sigma2, sm2) = (0.7, 3.0, 0.2, 0.5);
        let beta = 1.0 / (alpha * h);
        let sb = server_mse_bound(beta, h, alpha, &dec, &w, sigma2, sm2, 2.0).unwrap();
        let fro = dec.norm_squared();
        assert!(sb.approx_term < 1e-18);
        assert!((sb.total - (sigma2 * fro + sm2 / (h * h * alpha * alpha) * fro)).abs() < 1e-9 * sb.total);
        assert_eq!(sb.total, sb.approx_term + sb.privacy_term + sb.channel_term);
    }

    #[test]
    fn pseudoinverse_approximation_term_counts_missing_rank() {
        for (r, d) in [(3usize, 8usize), (10, 50), (1, 2)] {
            let w = sample_encoder(r, d, 0.01, r as u64).unwrap();
            let dec = pseudoinverse(w.entries(), DEFAULT_PINV_TOL);
            let (h, alpha) = (1.4, 2.0);
            let sb = server_mse_bound(1.0 / (alpha * h), h, alpha, &dec, &w, 0.0, 0.0, 3.0).unwrap();
            assert!((sb.approx_term - (d - r) as f64 * 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn server_bound_rejects_mismatched_decoder() {
        let w = sample_encoder(2, 4, 1.0, 0).unwrap();
        let dec = DMatrix::zeros(2, 4);
        assert!(matches!(
            server_mse_bound(1.0, 1.0, 1.0, &dec, &w, 0.0, 0.0, 1.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rescaling_alpha_and_beta() {
        let w = sample_encoder(3, 7, 0.3, 9).unwrap();
        let dec = pseudoinverse(w.entries(), DEFAULT_PINV_TOL);
        let (beta, h, alpha) = (0.8, 0.9, 1.7);
        let base = server_mse_bound(beta, h, alpha, &dec, &w, 0.4, 0.6, 1.2).unwrap();
        for c in [0.5, 2.0] {
            let s = server_mse_bound(beta / c, h, alpha * c, &dec, &w, 0.4, 0.6, 1.2).unwrap();
            assert!((s.approx_term - base.approx_term).abs() < 1e-10 * base.approx_term.max(1.0));
            assert!((s.privacy_term - base.privacy_term).abs() < 1e-10 * base.privacy_term);
            assert!((s.channel_term * c * c - base.channel_term).abs() < 1e-10 * base.channel_term);
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_lower_bound(0.8, 0.0, 1.0).unwrap().lower, 0.8);
        assert_eq!(accuracy_lower_bound(0.8, 4.0, 2.0).unwrap().lower, 0.0);
        assert_eq!(accuracy_lower_bound(0.8, 9.0, 2.0).unwrap().lower, 0.0);
        assert!((accuracy_lower_bound(0.9, 1.0, 2.0).unwrap().lower - 0.675).abs() < 1e-15);
        assert!(matches!(accuracy_lower_bound(0.9, 1.0, 0.0), Err(Error::Parameter(_))));
        assert!(accuracy_lower_bound(1.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn explicit_dimension_examples() {
        let sol = optimal_dim_explicit(1.0, 1.0, 2.0, 0.11, 3.0).unwrap();
        assert_eq!(sol.r_star, 110);
        assert_eq!(sol.mode, DimensionMode::Explicit);
        assert_eq!(optimal_dim_explicit(1.0, 1.0, 2.0, 0.11, 1e-300).unwrap().r_star, 1);
        assert!(matches!(
            optimal_dim_explicit(1.0, 1.0, 2.0, 0.11, 4.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            optimal_dim_explicit(1.0, 1.0, 2.0, 0.11, 5.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn explicit_dimension_is_minimal_by_scan() {
        let (g, alpha, d_z, nu2) = (0.9, 1.3, 1.7, 0.05);
        for k in 1..40 {
            let omega = d_z * d_z * k as f64 / 40.0;
            let sol = optimal_dim_explicit(g, alpha, d_z, nu2, omega).unwrap();
            let scan = (1..)
                .find(|&r| minimax_bound(g, alpha, d_z, r, nu2).unwrap().bound >= omega)
                .unwrap();
            assert_eq!(sol.r_star, scan);
        }
    }

    fn reference_problem(omega: f64) -> ConsistentDimensionProblem {
        ConsistentDimensionProblem {
            budget: PrivacyBudget::new(1.0, 1e-5).unwrap(),
            b: 0.01,
            clip_norm: 2.0,
            d: 50,
            g: 1.0,
            alpha: 1.0,
            sigma_a2: 1.0,
            omega,
            r_max: 50,
        }
    }

    #[test]
    fn consistent_dimension_is_minimal() {
        let p = reference_problem(3.0);
        let sol = optimal_dim_consistent(&p).unwrap();
        assert!(sol.bound_at_r_star >= 3.0);
        for r in 1..sol.r_star {
            assert!(p.evaluate(r).unwrap().2 < 3.0);
        }
        assert!(matches!(
            optimal_dim_consistent(&reference_problem(1e3)),
            Err(Error::Infeasible(_))
        ));
        let mut bad = reference_problem(1.0);
        bad.r_max = 51;
        assert!(optimal_dim_consistent(&bad).is_err());
    }

    proptest! {
        #[test]
        fn accuracy_bound_monotonicity(p0 in 0.0f64..=1.0, mse in 0.0f64..10.0, margin in 0.1f64..5.0, dm in 0.0f64..5.0) {
            let base = accuracy_lower_bound(p0, mse, margin).unwrap().lower;
            prop_assert!(accuracy_lower_bound(p0, mse + dm, margin).unwrap().lower <= base);
            prop_assert!(accuracy_lower_bound(p0, mse, margin + dm).unwrap().lower >= base);
            prop_assert!(accuracy_lower_bound((p0 + dm / 10.0).min(1.0), mse, margin).unwrap().lower >= base);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}
