//! Running moments and a few test statistics.

/// Count, mean and sum of squared deviations (Welford). Merging two
/// summaries uses the pairwise update of Chan et al., so the result does not
/// depend on how trials were partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    n: u64,
    mean: f64,
    m2: f64,
}

/// Minimum sample size for reporting a normal-approximation interval.
pub const MIN_CI_SAMPLES: u64 = 30;

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut s = Self::new();
        for v in values {
            s.push(v);
        }
        s
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Summary) -> Summary {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Summary { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// NaN when empty.
    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance; zero for a single sample.
    pub fn variance(&self) -> f64 {
        match self.n {
            0 => f64::NAN,
            1 => 0.0,
            n => (self.m2 / (n - 1) as f64).max(0.0),
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Normal-approximation 95% interval, only for `n >= 30`.
    pub fn ci95(&self) -> Option<(f64, f64)> {
        if self.n < MIN_CI_SAMPLES {
            return None;
        }
        let half = 1.959_963_984_540_054 * self.stderr();
        Some((self.mean - half, self.mean + half))
    }

    pub fn ci95_half_width(&self) -> Option<f64> {
        self.ci95().map(|(lo, hi)| 0.5 * (hi - lo))
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_sf(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let log_odds = (p / (1.0 - p)).ln();
    let mut log_pmf = n as f64 * (1.0 - p).ln();
    let mut logs = Vec::with_capacity((n - k + 1) as usize);
    for i in 0..n {
        if i >= k {
            logs.push(log_pmf);
        }
        log_pmf += ((n - i) as f64 / (i + 1) as f64).ln() + log_odds;
    }
    logs.push(log_pmf);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
        .exp()
        .min(1.0)
}

/// One-sided test of `H0: p <= p0` after `k` successes in `n` trials.
/// Returns true when `H0` is *not* rejected at level `alpha`.
pub fn binomial_rate_consistent(n: u64, k: u64, p0: f64, alpha: f64) -> bool {
    binomial_sf(n, p0, k) >= alpha
}
