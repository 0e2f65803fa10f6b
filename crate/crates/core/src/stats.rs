//! Small statistics helpers: estimates with standard errors, compensated
//! sums and batch-means ratio estimators.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    pub fn relative_error(&self) -> f64 {
        (self.stderr / self.value).abs()
    }

    /// `1/x` with first-order error propagation.
    pub fn recip(self) -> Self {
        Self::new(1.0 / self.value, self.stderr / (self.value * self.value))
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.value * factor, self.stderr * factor.abs())
    }

    /// Product of two independent estimates.
    pub fn mul(self, other: Self) -> Self {
        let value = self.value * other.value;
        let rel = self.relative_error().hypot(other.relative_error());
        Self::new(value, (value * rel).abs())
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_score(&self, other: &Self) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        if se == 0.0 {
            if self.value == other.value { 0.0 } else { f64::INFINITY }
        } else {
            (self.value - other.value).abs() / se
        }
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<KahanSum>().total() / n as f64;
    if n == 1 {
        return Estimate::new(mean, 0.0);
    }
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<KahanSum>()
        .total()
        / (n - 1) as f64;
    Estimate::new(mean, (var / n as f64).sqrt())
}

/// Number of contiguous batches used for ratio-estimator errors.
pub const DEFAULT_BATCHES: usize = 64;

/// Weighted mean `Σ wᵢ fᵢ / Σ wᵢ` with a batch-means standard error.
///
/// Points are grouped into contiguous batches so that correlated neighbours
/// (e.g. the two roots of one draw) stay in the same batch.
pub fn weighted_mean(weights: &[f64], values: &[f64], batches: usize) -> Estimate {
    assert_eq!(weights.len(), values.len());
    let n = weights.len();
    let num: KahanSum = weights.iter().zip(values).map(|(w, f)| w * f).collect();
    let den: KahanSum = weights.iter().copied().collect();
    let ratio = num.total() / den.total();
    let b = batches.min(n);
    if b < 2 {
        return Estimate::new(ratio, f64::NAN);
    }
    let mut totals = Vec::with_capacity(b);
    for i in 0..b {
        let lo = i * n / b;
        let hi = (i + 1) * n / b;
        let s: f64 = (lo..hi).map(|k| weights[k] * values[k]).sum();
        let w: f64 = weights[lo..hi].iter().sum();
        totals.push((s, w));
    }
    let w_bar = den.total() / b as f64;
    let dev: f64 = totals.iter().map(|(s, w)| (s - ratio * w).powi(2)).sum();
    let var = dev / ((b * (b - 1)) as f64 * w_bar * w_bar);
    Estimate::new(ratio, var.sqrt())
}

/// Median of a slice (NaNs are not expected).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least-squares slope and its standard error for `y = a + b x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, Estimate) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (intercept, Estimate::new(slope, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }

    #[test]
    fn weighted_mean_of_constant_is_exact() {
        let w: Vec<f64> = (0..1000).map(|i| 1.0 + (i % 7) as f64).collect();
        let f = vec![3.25; 1000];
        let e = weighted_mean(&w, &f, DEFAULT_BATCHES);
        assert_eq!(e.value, 3.25);
        assert!(e.stderr < 1e-12);
    }

    #[test]
    fn uniform_weight_stderr_matches_plain_mean() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f: Vec<f64> = (0..6400).map(|_| rng.random::<f64>()).collect();
        let w = vec![1.0; f.len()];
        let a = weighted_mean(&w, &f, DEFAULT_BATCHES);
        let b = mean_stderr(&f);
        assert!((a.value - b.value).abs() < 1e-12);
        // batch means are noisier but of the same order
        assert!(a.stderr / b.stderr > 0.5 && a.stderr / b.stderr < 2.0);
    }

    #[test]
    fn median_and_fit() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 1.5 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 0.5).abs() < 1e-12 && (b.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_propagation() {
        let e = Estimate::new(4.0, 0.4).recip();
        assert!((e.value - 0.25).abs() < 1e-15 && (e.stderr - 0.025).abs() < 1e-15);
        let p = Estimate::new(2.0, 0.02).mul(Estimate::new(3.0, 0.03));
        assert!((p.relative_error() - 2f64.sqrt() * 0.01).abs() < 1e-12);
    }
}
