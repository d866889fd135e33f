//! Brute-force checks on small instances: the inclusion-exclusion survivor,
//! the max-min identity and the first-order copula expansion.

use crate::error::{Error, Result};
use crate::estimate::{neumaier_sum, vector_moments, MCEstimate};
use crate::functionals::{point_weights, weighted_max};
use crate::generators::{map_generator_paths, GeneratorSpec};
use crate::processes::PathEnsemble;
use crate::stream::RandomStream;

/// Largest number of points for subset enumeration (4095 subsets).
pub const MAX_ORACLE_POINTS: usize = 12;

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ORACLE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "subset enumeration needs 1 <= k <= {MAX_ORACLE_POINTS}, got {k}"
        )));
    }
    Ok(())
}

/// `(-1)^{|T| - 1}` for the subset encoded by `mask`.
fn subset_sign(mask: usize) -> f64 {
    if mask.count_ones() % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `out[mask] = max_{i in mask} a_i` for every nonempty `mask`; `out[0]` is
/// left at negative infinity.
fn subset_maxima(a: &[f64], out: &mut [f64]) {
    out[0] = f64::NEG_INFINITY;
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)].max(a[low]);
    }
}

/// `P(eta_{t_i} > s f(t_i), i = 1..k)` for the standard max-stable process
/// generated by `spec`, evaluated as
/// `sum_T (-1)^{|T|-1} (1 - exp(-s E(max_{i in T} |f(t_i)| Z_{t_i})))`.
///
/// All subset expectations come from one shared set of generator samples.
/// The standard error is the delta-method error of the whole alternating
/// sum, computed from per-sample influence values.
pub fn survivor_via_inclusion_exclusion(
    spec: &GeneratorSpec,
    points: &[f64],
    f_at_points: &[f64],
    s: f64,
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    check_k(points.len())?;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("level s = {s} must be positive")));
    }
    let weights = point_weights(points, f_at_points)?;
    let n_sub = 1usize << points.len();
    let subset_row = |z: &[f64]| {
        let a: Vec<f64> = weights.iter().zip(z).map(|(w, z)| w * z).collect();
        let mut row = vec![0.0; n_sub];
        subset_maxima(&a, &mut row);
        row
    };

    let rows = map_generator_paths(spec, points, n_samples, stream, subset_row);
    let moments = vector_moments(rows.len(), n_sub - 1, |i, out| out.copy_from_slice(&rows[i][1..]))?;
    let means: Vec<f64> = moments.iter().map(|m| m.mean).collect();

    let value = neumaier_sum((1..n_sub).map(|mask| subset_sign(mask) * -(-s * means[mask - 1]).exp_m1()));
    let grads: Vec<f64> = (1..n_sub).map(|mask| subset_sign(mask) * s * (-s * means[mask - 1]).exp()).collect();
    let influence: Vec<f64> = rows
        .iter()
        .map(|row| neumaier_sum((1..n_sub).map(|mask| grads[mask - 1] * (row[mask] - means[mask - 1]))))
        .collect();
    let spread = MCEstimate::from_samples(&influence)?;
    Ok(MCEstimate { mean: value, std_error: spread.std_error, n_samples })
}

/// `sum_{T nonempty} (-1)^{|T|-1} max_{i in T} a_i == min_i a_i`, up to
/// `1e-12` relative to `max_i |a_i|`.
pub fn maxmin_identity_check(a: &[f64]) -> Result<bool> {
    check_k(a.len())?;
    if let Some(v) = a.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite entry {v}")));
    }
    let mut maxima = vec![0.0; 1 << a.len()];
    subset_maxima(a, &mut maxima);
    let lhs = neumaier_sum((1..maxima.len()).map(|mask| subset_sign(mask) * maxima[mask]));
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok((lhs - min).abs() <= 1e-12 * scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaRow {
    /// `||1 - y||_inf`.
    pub eps: f64,
    /// Empirical `P(U_t <= y_t for all grid t)`.
    pub empirical: MCEstimate,
    /// `1 - E(max_t (1 - y_t) Z_t)`.
    pub expansion: MCEstimate,
    pub discrepancy: f64,
    pub std_error: f64,
    /// `|discrepancy| / eps`.
    pub ratio: f64,
    /// `max(|discrepancy| - 4 std_error, 0) / eps`, the part of the ratio
    /// not explained by Monte Carlo noise.
    pub excess_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaReport {
    pub rows: Vec<CopulaRow>,
    /// Excess ratio nonincreasing along the (decreasing) `eps` sequence.
    pub passed: bool,
}

/// Compares the empirical copula of `ens` at `y = 1 - eps * direction`
/// with its first-order expansion, for each `eps` in a strictly decreasing
/// list. `direction` lives on the ensemble grid with values in `[0, 1]`.
pub fn copula_expansion_check(
    ens: &PathEnsemble,
    direction: &[f64],
    eps: &[f64],
    n_samples: usize,
    stream: RandomStream,
) -> Result<CopulaReport> {
    let grid = ens.grid();
    if direction.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), got: direction.len() });
    }
    if let Some(v) = direction.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("direction entry {v} outside [0, 1]")));
    }
    if let Some(e) = eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
        return Err(Error::InvalidArgument(format!("eps = {e} puts y outside (0, 1]")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps values must be strictly decreasing".into()));
    }
    if ens.descriptor().mixing_cap.is_some() {
        return Err(Error::InvalidArgument("copula check needs an unconditioned ensemble".into()));
    }
    let margin = ens.descriptor().current_margin();
    let spec = &ens.descriptor().generator;
    let maxima = map_generator_paths(spec, &grid.points(), n_samples, stream, |z| weighted_max(direction, z));
    let dnorm = MCEstimate::from_samples(&maxima)?;

    let copula_paths: Vec<Vec<f64>> = ens.map_paths(|p| p.iter().map(|&v| margin.cdf(v)).collect());
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let hits = copula_paths
            .iter()
            .filter(|u| u.iter().zip(direction).all(|(u, d)| *u <= 1.0 - e * d))
            .count();
        let empirical = MCEstimate::proportion(hits, ens.len())?;
        let expansion = MCEstimate { mean: 1.0 - e * dnorm.mean, std_error: e * dnorm.std_error, n_samples };
        let discrepancy = empirical.mean - expansion.mean;
        let std_error = empirical.combined_se(&expansion);
        let (ratio, excess_ratio) = if e > 0.0 {
            (discrepancy.abs() / e, (discrepancy.abs() - 4.0 * std_error).max(0.0) / e)
        } else {
            (0.0, 0.0)
        };
        rows.push(CopulaRow { eps: e, empirical, expansion, discrepancy, std_error, ratio, excess_ratio });
    }
    let passed = rows.windows(2).all(|w| w[1].excess_ratio <= w[0].excess_ratio);
    Ok(CopulaReport { rows, passed })
}
