//! Random Laplacian projection encoders, their spectral-norm bound, and
//! SVD-based pseudoinversion.

use nalgebra::DMatrix;

use crate::error::{ensure_positive, Error, Result};
use crate::rng::{self, Stage};

/// An `r x d` projection with i.i.d. Laplace(0, b) entries.
///
/// Regenerating from the same `(rows, cols, scale, seed)` yields bit-identical
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMatrix {
    entries: DMatrix<f64>,
    scale: f64,
    seed: u64,
}

impl EncoderMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Wrap an arbitrary matrix as an encoder. Used for identity or
    /// hand-built encoders in tests and the C API.
    pub fn from_matrix(entries: DMatrix<f64>, scale: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("encoder must be non-empty".into()));
        }
        if entries.nrows() > entries.ncols() {
            return Err(Error::Dimension(format!(
                "encoder rows r={} exceed columns d={}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            entries,
            scale,
            seed: 0,
        })
    }
}

/// High-probability bound on the spectral norm of a Laplace encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBound {
    pub c_w: f64,
    /// `c_w * b * (sqrt(r) + sqrt(d))`
    pub norm_bound: f64,
    pub fail_prob: f64,
}

pub fn sample_encoder(r: usize, d: usize, b: f64, seed: u64) -> Result<EncoderMatrix> {
    if r == 0 || d == 0 {
        return Err(Error::Dimension(format!("encoder needs r, d >= 1 (got r={r}, d={d})")));
    }
    if r > d {
        return Err(Error::Dimension(format!("encoder rows r={r} exceed columns d={d}")));
    }
    ensure_positive("Laplace scale b", b)?;
    let mut rng = rng::stream(seed, Stage::Encoder, 0);
    // Row-major fill so the stream order does not depend on nalgebra's layout.
    let mut entries = DMatrix::zeros(r, d);
    for i in 0..r {
        for j in 0..d {
            entries[(i, j)] = rng::laplace(&mut rng, b);
        }
    }
    Ok(EncoderMatrix {
        entries,
        scale: b,
        seed,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Err(Error::Dimension("matrix must be non-empty".into()));
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?[0])
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    Ok(*singular_values(m)?.last().expect("non-empty"))
}

/// `C_w = 4 (1 + ln(2/delta) / (sqrt r + sqrt d))` and the norm bound
/// `C_w b (sqrt r + sqrt d)`.
pub fn spectral_bound(r: usize, d: usize, b: f64, delta: f64) -> Result<SpectralBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if r == 0 || d == 0 {
        return Err(Error::Dimension(format!("need r, d >= 1 (got r={r}, d={d})")));
    }
    ensure_positive("Laplace scale b", b)?;
    let root_sum = (r as f64).sqrt() + (d as f64).sqrt();
    let c_w = 4.0 * (1.0 + (2.0 / delta).ln() / root_sum);
    Ok(SpectralBound {
        c_w,
        norm_bound: c_w * b * root_sum,
        fail_prob: delta,
    })
}

/// Moore-Penrose pseudoinverse through the SVD. Singular values at or below
/// `tol * sigma_max` are treated as zero.
pub fn pseudoinverse(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return DMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if sigma_max == 0.0 {
        return DMatrix::zeros(cols, rows);
    }
    let cutoff = tol.max(0.0) * sigma_max;
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        // out += v_k u_k^T / s
        let v_k = v_t.row(k).transpose();
        let u_k = u.column(k);
        out += (v_k * u_k.transpose()) / s;
    }
    out
}

/// Default relative cutoff used by the pipeline decoders.
pub const DEFAULT_PINV_TOL: f64 = 1e-12;
