//! Monte Carlo functionals of the generator: the D-norm, window minima and
//! finite-dimensional max-stable distribution values.
//!
//! Every functional evaluated with the same `(spec, sites, stream)` sees the
//! same generator paths, so identities between functionals hold path by path.

use crate::error::{Error, Result};
use crate::estimate::MCEstimate;
use crate::generators::{map_generator_paths, GeneratorSpec};
use crate::grid::GridFunction;
use crate::stream::RandomStream;

/// `||f||_D = E(max_i |f(t_i)| Z_{t_i})` over the grid of `f`.
pub fn dnorm_estimate(
    spec: &GeneratorSpec,
    f: &GridFunction,
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    let weights: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let sites = f.grid().points();
    let samples = map_generator_paths(spec, &sites, n_samples, stream, |z| weighted_max(&weights, z));
    MCEstimate::from_samples(&samples)
}

/// `E(min_{t in [a, b]} |f(t)| Z_t)` over the grid points of the snapped window.
pub fn min_functional_estimate(
    spec: &GeneratorSpec,
    f: &GridFunction,
    window: (f64, f64),
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    let (lo, hi) = f.grid().window(window.0, window.1)?;
    let weights: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let sites = f.grid().points();
    let samples = map_generator_paths(spec, &sites, n_samples, stream, |z| {
        weighted_min(&weights[lo..=hi], &z[lo..=hi])
    });
    MCEstimate::from_samples(&samples)
}

/// `G_{t_1..t_k}(x) = exp(-E(max_i |x_i| Z_{t_i}))` for `x <= 0`, with the
/// standard error carried through `exp` by the delta method.
pub fn fidis_evd_value(
    spec: &GeneratorSpec,
    points: &[f64],
    x: &[f64],
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    let weights = point_weights(points, x)?;
    let samples = map_generator_paths(spec, points, n_samples, stream, |z| weighted_max(&weights, z));
    let norm = MCEstimate::from_samples(&samples)?;
    let value = (-norm.mean).exp();
    Ok(MCEstimate { mean: value, std_error: value * norm.std_error, n_samples: norm.n_samples })
}

/// `E(min_i |x_i| Z_{t_i})` at arbitrary points.
pub fn min_at_points_estimate(
    spec: &GeneratorSpec,
    points: &[f64],
    x: &[f64],
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    let weights = point_weights(points, x)?;
    let samples = map_generator_paths(spec, points, n_samples, stream, |z| weighted_min(&weights, z));
    MCEstimate::from_samples(&samples)
}

/// `|x_i|` after checking `x <= 0` and `t_i` in `[0, 1]`.
pub(crate) fn point_weights(points: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if points.len() != x.len() || points.is_empty() {
        return Err(Error::InvalidArgument("points and x must have equal, nonzero length".into()));
    }
    if let Some(v) = x.iter().find(|&&v| !(v <= 0.0)) {
        return Err(Error::InvalidArgument(format!("function value {v} must be <= 0")));
    }
    if let Some(t) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidArgument(format!("point {t} outside [0, 1]")));
    }
    Ok(x.iter().map(|v| v.abs()).collect())
}

pub(crate) fn weighted_max(weights: &[f64], z: &[f64]) -> f64 {
    weights.iter().zip(z).fold(0.0_f64, |acc, (w, z)| acc.max(w * z))
}

pub(crate) fn weighted_min(weights: &[f64], z: &[f64]) -> f64 {
    weights.iter().zip(z).fold(f64::INFINITY, |acc, (w, z)| acc.min(w * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn stream() -> RandomStream {
        RandomStream::new(5)
    }

    fn kernel() -> GeneratorSpec {
        GeneratorSpec::moving_triangular(0.25).unwrap()
    }

    #[test]
    fn constant_generator_gives_sup_norm() {
        let grid = Grid::new(50).unwrap();
        let f = GridFunction::from_fn(grid, |t| -(2.0 - t) * t).unwrap();
        let e = dnorm_estimate(&GeneratorSpec::Constant, &f, 100, stream()).unwrap();
        assert_eq!(e.mean, f.sup_norm());
        assert_eq!(e.std_error, 0.0);
        let zero = GridFunction::constant(grid, 0.0).unwrap();
        assert_eq!(dnorm_estimate(&kernel(), &zero, 100, stream()).unwrap().mean, 0.0);
    }

    #[test]
    fn logistic_dnorm_at_anchors() {
        // Grid n = 3 misses the anchor at 0, so evaluate at the anchors directly
        // through the fidis route: -log G(-1,..,-1) = ||(1,..,1)||_2 = 2.
        let spec = GeneratorSpec::logistic_frechet(4, 2.0).unwrap();
        let anchors = spec.anchors().unwrap();
        let g = fidis_evd_value(&spec, &anchors, &[-1.0; 4], 200_000, stream()).unwrap();
        let norm = -g.mean.ln();
        let se = g.std_error / g.mean;
        assert!((norm - 2.0).abs() < 4.0 * se, "{norm} +- {se}");
    }

    #[test]
    fn min_functional_examples() {
        let grid = Grid::new(100).unwrap();
        let minus_one = GridFunction::constant(grid, -1.0).unwrap();
        let c = min_functional_estimate(&GeneratorSpec::Constant, &minus_one, (0.0, 1.0), 10, stream()).unwrap();
        assert_eq!(c.mean, 1.0);
        let k = min_functional_estimate(&kernel(), &minus_one, (0.0, 1.0), 1000, stream()).unwrap();
        assert_eq!(k.mean, 0.0);
        let f = GridFunction::from_fn(grid, |t| t - 1.0).unwrap();
        let h = min_functional_estimate(&GeneratorSpec::Constant, &f, (0.0, 0.5), 10, stream()).unwrap();
        assert!((h.mean - 0.5).abs() < 1e-12);
        assert!(min_functional_estimate(&kernel(), &f, (0.2, 1.5), 10, stream()).is_err());
    }

    #[test]
    fn fidis_examples() {
        let e = fidis_evd_value(&kernel(), &[0.2, 0.7], &[0.0, 0.0], 100, stream()).unwrap();
        assert_eq!(e.mean, 1.0);
        let c = fidis_evd_value(&GeneratorSpec::Constant, &[0.2, 0.7], &[-1.0, -1.0], 10, stream()).unwrap();
        assert!((c.mean - (-1.0f64).exp()).abs() < 1e-15);
        let spec = GeneratorSpec::logistic_frechet(2, 2.0).unwrap();
        let l = fidis_evd_value(&spec, &[0.0, 1.0], &[-1.0, -1.0], 200_000, stream()).unwrap();
        let target = (-(2.0f64).sqrt()).exp();
        assert!(l.z_score(target) < 4.0, "{l:?} vs {target}");
        assert!(fidis_evd_value(&kernel(), &[0.2], &[0.5], 10, stream()).is_err());
    }

    #[test]
    fn complete_dependence_fidis_is_exp_of_max() {
        let x = [-0.3, -1.7, -0.9];
        let c = fidis_evd_value(&GeneratorSpec::Constant, &[0.1, 0.5, 0.9], &x, 10, stream()).unwrap();
        assert_eq!(c.mean, (-1.7f64).exp());
    }

    #[test]
    fn sandwich_and_min_bound() {
        let grid = Grid::new(80).unwrap();
        let f = GridFunction::from_fn(grid, |t| -(0.5 + t * t)).unwrap();
        let spec = kernel();
        let m = spec.sup_bound().unwrap();
        let d = dnorm_estimate(&spec, &f, 20_000, stream()).unwrap();
        let sup = f.sup_norm();
        assert!(d.mean >= sup - 4.0 * d.std_error);
        assert!(d.mean <= m * sup + 4.0 * d.std_error);
        let mn = min_functional_estimate(&spec, &f, (0.3, 0.4), 20_000, stream()).unwrap();
        assert!(mn.mean <= d.mean + 4.0 * d.combined_se(&mn));
    }

    #[test]
    fn homogeneity_on_common_paths() {
        let grid = Grid::new(60).unwrap();
        let f = GridFunction::from_fn(grid, |t| t - 1.0).unwrap();
        let cf = GridFunction::from_fn(grid, |t| -3.0 * (t - 1.0)).unwrap();
        let spec = GeneratorSpec::logistic_frechet(3, 2.0).unwrap();
        let a = dnorm_estimate(&spec, &f, 5000, stream()).unwrap();
        let b = dnorm_estimate(&spec, &cf, 5000, stream()).unwrap();
        assert!((b.mean - 3.0 * a.mean).abs() <= 1e-12 * b.mean);
    }
}
