//! Monte Carlo estimates and deterministic reductions.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Point estimate with its standard error and the number of samples behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, std_error: 0.0, n_samples: 1 }
    }

    /// Sample mean and `sd / sqrt(n)` of `samples`, summed in index order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let ss = neumaier_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
        let var = ss / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), n_samples: n })
    }

    /// Binomial proportion `hits / n` with standard error `sqrt(p(1-p)/n)`.
    pub fn proportion(hits: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("proportion of zero trials".into()));
        }
        let p = hits as f64 / n as f64;
        Ok(Self { mean: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), n_samples: n })
    }

    pub fn scale(self, c: f64) -> Self {
        Self { mean: self.mean * c, std_error: self.std_error * c.abs(), ..self }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_se(&self, other: &MCEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// `|self - target|` in units of the standard error; infinite when the
    /// standard error is zero and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Compensated sum; summation order is the iterator order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Parallel map over `0..n` with results in index order, so any reduction
/// over the output is independent of the number of worker threads.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Per-component sample means and standard errors of vector-valued samples.
///
/// `fill(i, out)` writes the `k` components of sample `i`. Sums are taken
/// over fixed-size chunks in index order and then combined in chunk order,
/// so the result does not depend on the number of worker threads.
pub fn vector_moments<F>(n: usize, k: usize, fill: F) -> Result<Vec<MCEstimate>>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    const CHUNK: usize = 1024;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    let n_chunks = n.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = par_map(n_chunks, |c| {
        let mut sum = vec![0.0; k];
        let mut sq = vec![0.0; k];
        let mut buf = vec![0.0; k];
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            fill(i, &mut buf);
            for j in 0..k {
                sum[j] += buf[j];
                sq[j] += buf[j] * buf[j];
            }
        }
        (sum, sq)
    });
    Ok((0..k)
        .map(|j| {
            let sum = neumaier_sum(partial.iter().map(|p| p.0[j]));
            let sq = neumaier_sum(partial.iter().map(|p| p.1[j]));
            let mean = sum / n as f64;
            let var = ((sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0);
            MCEstimate { mean, std_error: (var / n as f64).sqrt(), n_samples: n }
        })
        .collect())
}

/// Column-wise moments of equally long sample rows.
pub fn map_indexed_moments(rows: &[Vec<f64>]) -> Result<Vec<MCEstimate>> {
    let k = rows.first().map_or(0, Vec::len);
    vector_moments(rows.len(), k, |i, out| out.copy_from_slice(&rows[i]))
}
