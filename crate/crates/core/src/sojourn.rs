//! Sojourn times above threshold functions `s f`, fragility-index ratios and
//! the sojourn-time survivor, both in closed form (as a generator
//! expectation) and empirically from path ensembles.

use crate::error::{Error, Result};
use crate::estimate::{map_indexed_moments, MCEstimate};
use crate::generators::{map_generator_paths, GeneratorSpec};
use crate::grid::{descending_nonnegative, level_from_sorted, Grid, GridFunction};
use crate::margins::MarginSpec;
use crate::processes::PathEnsemble;
use crate::stream::RandomStream;

/// Conditional estimates are not reported below this many conditioning paths.
pub const DEFAULT_MIN_EXCEEDANCES: usize = 100;

/// Threshold function `s f` with `f <= 0`, `||f||_inf <= 1` and level `s > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    f: GridFunction,
    s: f64,
}

impl ThresholdSpec {
    pub fn new(f: GridFunction, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("threshold level {s} must be positive")));
        }
        if let Some(v) = f.values().iter().find(|&&v| v > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold function must be <= 0, found {v}")));
        }
        if f.sup_norm() > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold function has sup norm {} > 1",
                f.sup_norm()
            )));
        }
        Ok(Self { f, s })
    }

    /// `f = -1`: the constant threshold `-s`.
    pub fn constant(grid: Grid, s: f64) -> Result<Self> {
        Self::new(GridFunction::constant(grid, -1.0)?, s)
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn level(&self) -> f64 {
        self.s
    }

    pub fn grid(&self) -> Grid {
        self.f.grid()
    }

    pub fn with_level(&self, s: f64) -> Result<Self> {
        Self::new(self.f.clone(), s)
    }

    /// `s ||f||_inf`, the deepest point of the threshold.
    pub fn magnitude(&self) -> f64 {
        self.s * self.f.sup_norm()
    }

    pub fn is_constant(&self) -> bool {
        let v = self.f.values();
        v.iter().all(|&x| x == v[0])
    }

    /// `s <= s_0 = 1 / (m ||f||_inf)`, where the GPP results hold exactly.
    pub fn within_exact_range(&self, generator_bound: f64) -> bool {
        self.magnitude() * generator_bound <= 1.0
    }

    /// Threshold values `s f(t_i)`.
    pub fn values(&self) -> Vec<f64> {
        self.f.values().iter().map(|v| self.s * v).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivorPoint {
    pub y: f64,
    pub survivor: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SojournSummary {
    pub p_positive: MCEstimate,
    pub mean_conditional: MCEstimate,
    pub survivor_curve: Vec<SurvivorPoint>,
}

/// `n_points` equispaced values covering `[0, 1]`.
pub fn uniform_mesh(n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n_points).map(|i| i as f64 / (n_points - 1) as f64).collect(),
    }
}

/// Default y mesh: 101 points.
pub fn default_y_mesh() -> Vec<f64> {
    uniform_mesh(101)
}

/// `(1/n) #{i : path_i > s f(t_i)}`.
pub fn sojourn_time(path: &GridFunction, th: &ThresholdSpec) -> Result<f64> {
    if path.grid() != th.grid() {
        return Err(Error::GridMismatch { expected: th.grid().len(), got: path.grid().len() });
    }
    Ok(sojourn_on_grid(path.values(), &th.values()))
}

pub(crate) fn sojourn_on_grid(path: &[f64], threshold: &[f64]) -> f64 {
    let count = path.iter().zip(threshold).filter(|(x, t)| x > t).count();
    count as f64 / path.len() as f64
}

/// Validates that `th` can be evaluated on `ens`, including the coverage
/// requirement of conditioned ensembles.
pub(crate) fn check_threshold(ens: &PathEnsemble, th: &ThresholdSpec) -> Result<()> {
    check_magnitude(ens, th.grid(), th.magnitude())
}

pub(crate) fn check_magnitude(ens: &PathEnsemble, grid: Grid, magnitude: f64) -> Result<()> {
    if ens.grid() != grid {
        return Err(Error::GridMismatch { expected: ens.grid().len(), got: grid.len() });
    }
    let d = ens.descriptor();
    if d.mixing_cap.is_some() {
        if d.margin.is_some() {
            return Err(Error::InvalidArgument(
                "conditioned ensembles are evaluated on their native scale only".into(),
            ));
        }
        ens.ensure_covers(magnitude)?;
    }
    Ok(())
}

fn sojourns(ens: &PathEnsemble, th: &ThresholdSpec) -> Result<Vec<f64>> {
    check_threshold(ens, th)?;
    let thr = th.values();
    Ok(ens.map_paths(|p| sojourn_on_grid(p, &thr)))
}

fn positive_part(sojourns: &[f64], min_exceedances: usize) -> Result<Vec<f64>> {
    let positive: Vec<f64> = sojourns.iter().copied().filter(|&x| x > 0.0).collect();
    if positive.len() < min_exceedances.max(2) {
        return Err(Error::FloorUnmet { observed: positive.len(), required: min_exceedances.max(2) });
    }
    Ok(positive)
}

/// `P(S > 0)`, rescaled by the sampling weight of conditioned ensembles.
pub fn exceedance_probability(ens: &PathEnsemble, th: &ThresholdSpec) -> Result<MCEstimate> {
    let soj = sojourns(ens, th)?;
    let hits = soj.iter().filter(|&&x| x > 0.0).count();
    Ok(MCEstimate::proportion(hits, soj.len())?.scale(ens.descriptor().sampling_weight()))
}

/// `FI_n(s) / n = (1 - c) / P(S_n(s) > 0)` with `c = F(s f)` for constant `f`.
pub fn fragility_index_ratio(ens: &PathEnsemble, th: &ThresholdSpec, margin: MarginSpec) -> Result<MCEstimate> {
    if !th.is_constant() {
        return Err(Error::InvalidArgument(
            "the fragility index is defined for constant thresholds only".into(),
        ));
    }
    if margin != ens.descriptor().current_margin() {
        return Err(Error::InvalidArgument(format!(
            "margin {} does not match the ensemble margin {}",
            margin.name(),
            ens.descriptor().current_margin().name()
        )));
    }
    let p = exceedance_probability(ens, th)?;
    if p.mean <= 0.0 {
        return Err(Error::FloorUnmet { observed: 0, required: 1 });
    }
    let level = th.level() * th.f().values()[0];
    let tail = 1.0 - margin.cdf(level);
    let ratio = tail / p.mean;
    Ok(MCEstimate { mean: ratio, std_error: ratio * p.std_error / p.mean, n_samples: p.n_samples })
}

/// `E(S | S > 0)` from the paths with positive sojourn.
pub fn mean_conditional_sojourn(
    ens: &PathEnsemble,
    th: &ThresholdSpec,
    min_exceedances: usize,
) -> Result<MCEstimate> {
    let soj = sojourns(ens, th)?;
    MCEstimate::from_samples(&positive_part(&soj, min_exceedances)?)
}

/// Empirical `P(S > y | S > 0)` at each mesh point, binomial errors.
pub fn empirical_sojourn_survivor(
    ens: &PathEnsemble,
    th: &ThresholdSpec,
    y_mesh: &[f64],
    min_exceedances: usize,
) -> Result<Vec<SurvivorPoint>> {
    let soj = sojourns(ens, th)?;
    survivor_from_positive(&positive_part(&soj, min_exceedances)?, y_mesh)
}

fn survivor_from_positive(positive: &[f64], y_mesh: &[f64]) -> Result<Vec<SurvivorPoint>> {
    let mut sorted = positive.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    y_mesh
        .iter()
        .map(|&y| {
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidArgument(format!("mesh value {y} outside [0, 1]")));
            }
            let above = n - sorted.partition_point(|&x| x <= y);
            let est = MCEstimate::proportion(above, n)?;
            Ok(SurvivorPoint { y, survivor: est.mean, std_error: est.std_error })
        })
        .collect()
}

pub fn sojourn_summary(
    ens: &PathEnsemble,
    th: &ThresholdSpec,
    y_mesh: &[f64],
    min_exceedances: usize,
) -> Result<SojournSummary> {
    let soj = sojourns(ens, th)?;
    let hits = soj.iter().filter(|&&x| x > 0.0).count();
    let p_positive = MCEstimate::proportion(hits, soj.len())?.scale(ens.descriptor().sampling_weight());
    let positive = positive_part(&soj, min_exceedances)?;
    Ok(SojournSummary {
        p_positive,
        mean_conditional: MCEstimate::from_samples(&positive)?,
        survivor_curve: survivor_from_positive(&positive, y_mesh)?,
    })
}

/// Closed-form sojourn survivor `1 - H_f(y)` of a standard GPP, evaluated
/// by Monte Carlo over generator paths.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalSurvivor {
    pub curve: Vec<SurvivorPoint>,
    /// `E(max_t |f(t)| Z_t)`, which equals `||f||_D`.
    pub denominator: MCEstimate,
}

/// `1 - H_f(y) = E(u*(y)) / E(u*(0))`, where `u*(y)` is the level at which
/// the occupation of `|f| Z` drops to `y`. The measure of
/// `{u : occupation(|f| Z, u) > y}` is exactly `u*(y)`, so the `du`
/// integral collapses and only the expectation over `Z` remains.
pub fn theoretical_sojourn_survivor(
    spec: &GeneratorSpec,
    f: &GridFunction,
    y_mesh: &[f64],
    n_samples: usize,
    stream: RandomStream,
) -> Result<TheoreticalSurvivor> {
    if let Some(v) = f.values().iter().find(|&&v| v > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold function must be <= 0, found {v}")));
    }
    if let Some(y) = y_mesh.iter().find(|y| !(0.0..=1.0).contains(*y)) {
        return Err(Error::InvalidArgument(format!("mesh value {y} outside [0, 1]")));
    }
    let weights: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let sites = f.grid().points();
    // Component 0 is u*(0); then one component per mesh point.
    let k = y_mesh.len() + 1;
    let levels: Vec<Vec<f64>> = map_generator_paths(spec, &sites, n_samples, stream, |z| {
        let prod: Vec<f64> = weights.iter().zip(z).map(|(w, z)| w * z).collect();
        let mut sorted = descending_nonnegative(&prod).expect("nonnegative by construction");
        let mut out = Vec::with_capacity(k);
        out.push(sorted[0]);
        for &y in y_mesh {
            out.push(if y >= 1.0 { 0.0 } else { level_from_sorted(&mut sorted, y).expect("y in [0,1)") });
        }
        out
    });
    let moments = map_indexed_moments(&levels)?;
    let denominator = moments[0];
    if !(denominator.mean > 0.0) {
        return Err(Error::Degenerate("sojourn survivor denominator is zero".into()));
    }
    let curve = y_mesh
        .iter()
        .enumerate()
        .map(|(j, &y)| {
            let ratio = moments[j + 1].mean / denominator.mean;
            // Delta method for a ratio of means on common samples.
            let infl: Vec<f64> = levels.iter().map(|l| (l[j + 1] - ratio * l[0]) / denominator.mean).collect();
            let se = MCEstimate::from_samples(&infl).map(|e| e.std_error).unwrap_or(0.0);
            SurvivorPoint { y, survivor: ratio, std_error: se }
        })
        .collect();
    Ok(TheoreticalSurvivor { curve, denominator })
}

/// `sup_y |a(y) - b(y)|` over a shared mesh.
pub fn sup_distance(a: &[SurvivorPoint], b: &[SurvivorPoint]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.survivor - y.survivor).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{sample_gpp, sample_pareto_process, MixingDf};

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn stream() -> RandomStream {
        RandomStream::new(3)
    }

    /// Direct count, written independently of `sojourn_on_grid`.
    fn count_above(path: &[f64], thr: &[f64]) -> f64 {
        let mut c = 0usize;
        for i in 0..path.len() {
            if path[i] > thr[i] {
                c += 1;
            }
        }
        c as f64 / path.len() as f64
    }

    #[test]
    fn sojourn_examples() {
        let g = grid(10);
        let th = ThresholdSpec::constant(g, 0.01).unwrap();
        let low = GridFunction::constant(g, -0.5).unwrap();
        let high = GridFunction::constant(g, -0.005).unwrap();
        assert_eq!(sojourn_time(&low, &th).unwrap(), 0.0);
        assert_eq!(sojourn_time(&high, &th).unwrap(), 1.0);
        let ramp = GridFunction::from_fn(g, |t| t - 1.0).unwrap();
        let th5 = ThresholdSpec::constant(g, 0.5).unwrap();
        let got = sojourn_time(&ramp, &th5).unwrap();
        assert_eq!(got, count_above(ramp.values(), &th5.values()));
        assert_eq!(got, 0.5);
        assert!(sojourn_time(&GridFunction::constant(grid(5), 0.0).unwrap(), &th).is_err());
    }

    #[test]
    fn threshold_validation() {
        let g = grid(4);
        assert!(ThresholdSpec::new(GridFunction::constant(g, 0.1).unwrap(), 0.1).is_err());
        assert!(ThresholdSpec::new(GridFunction::constant(g, -2.0).unwrap(), 0.1).is_err());
        assert!(ThresholdSpec::constant(g, 0.0).is_err());
        let th = ThresholdSpec::constant(g, 0.2).unwrap();
        assert!(th.within_exact_range(4.0));
        assert!(!th.within_exact_range(6.0));
    }

    #[test]
    fn riemann_refinement_is_first_order() {
        let path = |t: f64| -0.3 + 0.25 * (6.0 * t).sin();
        let exact = {
            // Fine-grid reference for the Lebesgue measure of {path > -0.2}.
            let n = 2_000_000;
            (1..=n).filter(|&i| path(i as f64 / n as f64) > -0.2).count() as f64 / n as f64
        };
        for n in [50usize, 100, 200, 400] {
            let g = grid(n);
            let p = GridFunction::from_fn(g, path).unwrap();
            let th = ThresholdSpec::constant(g, 0.2).unwrap();
            let err = (sojourn_time(&p, &th).unwrap() - exact).abs();
            assert!(err <= 4.0 / n as f64, "n={n}: {err}");
        }
    }

    #[test]
    fn constant_generator_fi_and_mean_are_one() {
        let g = grid(20);
        let ens = sample_gpp(&GeneratorSpec::Constant, -10.0, g, 50_000, stream()).unwrap();
        let th = ThresholdSpec::constant(g, 0.01).unwrap();
        let fi = fragility_index_ratio(&ens, &th, MarginSpec::StdGppTail).unwrap();
        assert!(fi.z_score(1.0) < 4.0, "{fi:?}");
        let mean = mean_conditional_sojourn(&ens, &th, 100).unwrap();
        assert_eq!(mean.mean, 1.0);
        assert!(fragility_index_ratio(&ens, &th, MarginSpec::UniformOn01).is_err());
        let ramp = ThresholdSpec::new(GridFunction::from_fn(g, |t| t - 1.0).unwrap(), 0.01).unwrap();
        assert!(fragility_index_ratio(&ens, &ramp, MarginSpec::StdGppTail).is_err());
    }

    #[test]
    fn zero_exceedances_are_flagged() {
        let g = grid(20);
        let ens = sample_gpp(&GeneratorSpec::Constant, -10.0, g, 100, stream()).unwrap();
        let th = ThresholdSpec::constant(g, 1e-9).unwrap();
        assert!(matches!(
            fragility_index_ratio(&ens, &th, MarginSpec::StdGppTail),
            Err(Error::FloorUnmet { observed: 0, .. })
        ));
        assert!(matches!(mean_conditional_sojourn(&ens, &th, 100), Err(Error::FloorUnmet { .. })));
    }

    #[test]
    fn complete_dependence_theoretical_survivors() {
        let g = grid(500);
        let mesh = default_y_mesh();
        let ramp = GridFunction::from_fn(g, |t| t - 1.0).unwrap();
        let th = theoretical_sojourn_survivor(&GeneratorSpec::Constant, &ramp, &mesh, 10, stream()).unwrap();
        for p in &th.curve {
            assert!((p.survivor - (1.0 - p.y)).abs() < 0.01, "{p:?}");
        }
        let flat = GridFunction::constant(g, -1.0).unwrap();
        let th = theoretical_sojourn_survivor(&GeneratorSpec::Constant, &flat, &mesh, 10, stream()).unwrap();
        for p in &th.curve[..mesh.len() - 1] {
            assert_eq!(p.survivor, 1.0);
        }
        assert_eq!(th.curve.last().unwrap().survivor, 0.0);
    }

    #[test]
    fn degenerate_denominator_rejected() {
        let g = grid(10);
        let zero = GridFunction::constant(g, 0.0).unwrap();
        let r = theoretical_sojourn_survivor(&GeneratorSpec::Constant, &zero, &[0.0, 0.5], 10, stream());
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn conditioned_ensembles_check_coverage() {
        let g = grid(30);
        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let ens = sample_pareto_process(&spec, MixingDf::Uniform01, -10.0, Some(0.04), g, 5000, stream()).unwrap();
        let ok = ThresholdSpec::constant(g, 0.01).unwrap();
        let too_deep = ThresholdSpec::constant(g, 0.02).unwrap();
        assert!(exceedance_probability(&ens, &ok).is_ok());
        assert!(exceedance_probability(&ens, &too_deep).is_err());
    }

    #[test]
    fn survivor_curves_are_monotone() {
        let g = grid(100);
        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let ens = sample_pareto_process(&spec, MixingDf::Uniform01, -10.0, Some(0.02), g, 5000, stream()).unwrap();
        let f = GridFunction::from_fn(g, |t| -(0.5 + 0.5 * t)).unwrap();
        let th = ThresholdSpec::new(f, 0.005).unwrap();
        let curve = empirical_sojourn_survivor(&ens, &th, &default_y_mesh(), 100).unwrap();
        assert_eq!(curve[0].survivor, 1.0);
        assert!(curve.windows(2).all(|w| w[1].survivor <= w[0].survivor));
        assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.survivor)));
    }
}
