//! Simulation of standard max-stable processes, standard generalized Pareto
//! processes and their mixing-perturbed relatives on a grid.
//!
//! Ensembles are described by an [`EnsembleDescriptor`] that pins down every
//! path: path `i` is a deterministic function of the descriptor and `i`.
//! Freshly sampled ensembles regenerate paths on demand, which keeps
//! multi-million path experiments out of memory; ensembles read from disk
//! hold their values.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::estimate::par_map;
use crate::generators::{frechet_mean, GeneratorSpec};
use crate::grid::{Grid, GridFunction};
use crate::margins::MarginSpec;
use crate::stream::RandomStream;

/// Law of the mixing variable `W` in `X_t = max(-W / Z_t, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixingDf {
    /// `W ~ Uniform(0, 1)`: the standard GPP.
    Uniform01,
    /// `W ~ Exp(1)`, whose df is `x + o(x)` at zero.
    StdExponential,
}

impl MixingDf {
    pub fn name(&self) -> &'static str {
        match self {
            MixingDf::Uniform01 => "uniform",
            MixingDf::StdExponential => "exponential",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(MixingDf::Uniform01),
            "exponential" => Ok(MixingDf::StdExponential),
            other => Err(Error::Parse(format!("unknown mixing df '{other}'"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MixingDf::Uniform01 => x.clamp(0.0, 1.0),
            MixingDf::StdExponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
        }
    }

    /// Inverse-cdf draw restricted to `[0, cap)`.
    fn draw<R: Rng + ?Sized>(&self, cap: Option<f64>, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            MixingDf::Uniform01 => u * cap.unwrap_or(1.0).min(1.0),
            MixingDf::StdExponential => {
                let mass = cap.map_or(1.0, |c| self.cdf(c));
                -(-u * mass).ln_1p()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    /// Standard max-stable process with `P(eta_t <= x) = e^x`.
    MaxStable,
    /// `max(-W / Z_t, M)`; a standard GPP when `W` is uniform.
    Pareto { mixing: MixingDf, clip: f64 },
}

impl ProcessKind {
    /// Margin of the process on its native (standardized) scale.
    pub fn native_margin(&self) -> MarginSpec {
        match self {
            ProcessKind::MaxStable => MarginSpec::NegExponential,
            ProcessKind::Pareto { .. } => MarginSpec::StdGppTail,
        }
    }
}

/// Everything needed to reproduce an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDescriptor {
    pub kind: ProcessKind,
    pub generator: GeneratorSpec,
    pub grid_size: usize,
    pub n_paths: usize,
    pub stream_key: u64,
    /// Pareto kinds only: `W` is drawn conditionally on `W < cap`.
    pub mixing_cap: Option<f64>,
    /// Max-stable kind with unbounded generator: per-path bound on the
    /// probability that the truncated series differs from the full one.
    pub eps_trunc: Option<f64>,
    /// Margin the paths have been transformed to, if any.
    pub margin: Option<MarginSpec>,
}

impl EnsembleDescriptor {
    pub fn current_margin(&self) -> MarginSpec {
        self.margin.unwrap_or_else(|| self.kind.native_margin())
    }

    /// Probability of the sampling event `{W < cap}`; 1 when unconditioned.
    pub fn sampling_weight(&self) -> f64 {
        match (self.kind, self.mixing_cap) {
            (ProcessKind::Pareto { mixing, .. }, Some(cap)) => mixing.cdf(cap),
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: Grid,
    descriptor: EnsembleDescriptor,
    stored: Option<Vec<Vec<f64>>>,
}

impl PathEnsemble {
    /// Ensemble backed by stored path values (e.g. read from disk).
    pub fn from_paths(descriptor: EnsembleDescriptor, paths: Vec<Vec<f64>>) -> Result<Self> {
        let grid = Grid::new(descriptor.grid_size)?;
        if paths.len() != descriptor.n_paths {
            return Err(Error::InvalidArgument(format!(
                "descriptor announces {} paths, got {}",
                descriptor.n_paths,
                paths.len()
            )));
        }
        if let Some(p) = paths.iter().find(|p| p.len() != grid.len()) {
            return Err(Error::GridMismatch { expected: grid.len(), got: p.len() });
        }
        Ok(Self { grid, descriptor, stored: Some(paths) })
    }

    fn generated(descriptor: EnsembleDescriptor) -> Result<Self> {
        let grid = Grid::new(descriptor.grid_size)?;
        Ok(Self { grid, descriptor, stored: None })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn descriptor(&self) -> &EnsembleDescriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.descriptor.n_paths
    }

    pub fn is_empty(&self) -> bool {
        self.descriptor.n_paths == 0
    }

    pub fn is_materialized(&self) -> bool {
        self.stored.is_some()
    }

    /// Largest threshold magnitude `|s f|` (on the native scale) for which
    /// the sampling event contains every exceedance, given the generator bound.
    pub fn covered_magnitude(&self) -> f64 {
        match self.descriptor.mixing_cap {
            None => f64::INFINITY,
            Some(cap) => match self.descriptor.generator.sup_bound() {
                Some(bound) => cap / bound,
                None => 0.0,
            },
        }
    }

    /// Rejects exceedance events of native-scale magnitude `magnitude` that a
    /// conditioned ensemble cannot represent without bias.
    pub fn ensure_covers(&self, magnitude: f64) -> Result<()> {
        let covered = self.covered_magnitude();
        if magnitude > covered * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "ensemble conditioned on W < {:?} only covers thresholds of magnitude <= {covered}, got {magnitude}",
                self.descriptor.mixing_cap
            )));
        }
        Ok(())
    }

    pub fn path_values(&self, i: usize) -> Vec<f64> {
        match &self.stored {
            Some(paths) => paths[i].clone(),
            None => {
                let mut out = vec![0.0; self.grid.len()];
                self.generate(i, &self.grid.points(), &mut out);
                out
            }
        }
    }

    pub fn path(&self, i: usize) -> GridFunction {
        GridFunction::new(self.grid, self.path_values(i)).expect("paths are finite")
    }

    /// Applies `f` to every path in parallel; results are in path order.
    pub fn map_paths<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync + Send,
    {
        match &self.stored {
            Some(paths) => par_map(paths.len(), |i| f(&paths[i])),
            None => {
                let sites = self.grid.points();
                par_map(self.len(), |i| {
                    let mut out = vec![0.0; sites.len()];
                    self.generate(i, &sites, &mut out);
                    f(&out)
                })
            }
        }
    }

    pub fn materialize(&self) -> PathEnsemble {
        let paths = self.map_paths(<[f64]>::to_vec);
        Self { grid: self.grid, descriptor: self.descriptor.clone(), stored: Some(paths) }
    }

    fn generate(&self, i: usize, sites: &[f64], out: &mut [f64]) {
        let d = &self.descriptor;
        let mut rng = RandomStream::from_key(d.stream_key).substream(i as u64);
        match d.kind {
            ProcessKind::Pareto { mixing, clip } => {
                let w = mixing.draw(d.mixing_cap, &mut rng);
                d.generator.sample_at(sites, &mut rng, out);
                for v in out.iter_mut() {
                    *v = if *v > 0.0 { (-w / *v).max(clip) } else { clip };
                }
            }
            ProcessKind::MaxStable => {
                match d.generator {
                    GeneratorSpec::LogisticFrechet { dim, p } if p.is_finite() => {
                        let eps = d.eps_trunc.expect("checked at construction");
                        simple_msp_logistic(dim, p, eps, sites, &mut rng, out);
                    }
                    _ => {
                        let bound = d.generator.sup_bound().expect("checked at construction");
                        simple_msp_bounded(&d.generator, bound, sites, &mut rng, out);
                    }
                }
                for v in out.iter_mut() {
                    *v = -1.0 / *v;
                }
            }
        }
        if let Some(target) = d.margin {
            let source = d.kind.native_margin();
            for v in out.iter_mut() {
                *v = target
                    .quantile(source.cdf(*v))
                    .expect("transform range checked at construction");
            }
        }
    }
}

/// Default clipping constant `M = -10^6 / m`.
pub fn default_clip(spec: &GeneratorSpec) -> f64 {
    -1e6 / spec.generator_constant()
}

/// Standard GPP `V_t = max(-U / Z_t, M)`.
pub fn sample_gpp(
    spec: &GeneratorSpec,
    clip: f64,
    grid: Grid,
    n_paths: usize,
    stream: RandomStream,
) -> Result<PathEnsemble> {
    sample_pareto_process(spec, MixingDf::Uniform01, clip, None, grid, n_paths, stream)
}

/// `X_t = max(-W / Z_t, M)` with `W` drawn from `mixing`.
pub fn sample_perturbed_gpp(
    spec: &GeneratorSpec,
    mixing: MixingDf,
    clip: f64,
    grid: Grid,
    n_paths: usize,
    stream: RandomStream,
) -> Result<PathEnsemble> {
    sample_pareto_process(spec, mixing, clip, None, grid, n_paths, stream)
}

/// General Pareto-type sampler. With `mixing_cap = Some(c)` the mixing
/// variable is drawn from its law conditioned on `W < c`; for a generator
/// bounded by `b` every exceedance of a threshold with magnitude at most
/// `c / b` happens inside that event, so conditional exceedance laws are
/// unchanged and unconditional probabilities scale by `P(W < c)`.
pub fn sample_pareto_process(
    spec: &GeneratorSpec,
    mixing: MixingDf,
    clip: f64,
    mixing_cap: Option<f64>,
    grid: Grid,
    n_paths: usize,
    stream: RandomStream,
) -> Result<PathEnsemble> {
    if !(clip < 0.0) {
        return Err(Error::InvalidArgument(format!("clip M = {clip} must be negative")));
    }
    if let Some(cap) = mixing_cap {
        if !(cap > 0.0) {
            return Err(Error::InvalidArgument(format!("mixing cap {cap} must be positive")));
        }
        if !spec.is_bounded() {
            return Err(Error::InvalidArgument(
                "conditioned sampling needs a bounded generator".into(),
            ));
        }
    }
    PathEnsemble::generated(EnsembleDescriptor {
        kind: ProcessKind::Pareto { mixing, clip },
        generator: spec.clone(),
        grid_size: grid.len(),
        n_paths,
        stream_key: stream.key(),
        mixing_cap,
        eps_trunc: None,
        margin: None,
    })
}

/// Standard max-stable process `eta = -1 / xi` with
/// `xi_t = max_i Z^(i)_t / Gamma_i` over unit-rate Poisson arrivals.
///
/// Bounded generators are simulated exactly at the grid points. The
/// Frechet-based generator is truncated once the expected number of later
/// arrivals that could still change a grid value is at most `eps_trunc`.
pub fn sample_msp(
    spec: &GeneratorSpec,
    grid: Grid,
    n_paths: usize,
    eps_trunc: Option<f64>,
    stream: RandomStream,
) -> Result<PathEnsemble> {
    let eps_trunc = if spec.is_bounded() {
        None
    } else {
        match eps_trunc {
            Some(e) if e > 0.0 => Some(e),
            Some(e) => return Err(Error::InvalidArgument(format!("eps_trunc {e} must be positive"))),
            None => {
                return Err(Error::InvalidArgument(
                    "unbounded generator needs a truncation tolerance eps_trunc".into(),
                ))
            }
        }
    };
    PathEnsemble::generated(EnsembleDescriptor {
        kind: ProcessKind::MaxStable,
        generator: spec.clone(),
        grid_size: grid.len(),
        n_paths,
        stream_key: stream.key(),
        mixing_cap: None,
        eps_trunc,
        margin: None,
    })
}

/// Pointwise `target.quantile(source.cdf(x))`, rank preserving per path.
pub fn transform_margins(ensemble: &PathEnsemble, target: MarginSpec) -> Result<PathEnsemble> {
    let source = ensemble.descriptor.current_margin();
    if source == target {
        return Ok(ensemble.clone());
    }
    let mut descriptor = ensemble.descriptor.clone();
    descriptor.margin = Some(target);
    match &ensemble.stored {
        Some(paths) => {
            let mapped = paths
                .iter()
                .map(|p| p.iter().map(|&v| target.quantile(source.cdf(v))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            PathEnsemble::from_paths(descriptor, mapped)
        }
        None => {
            if ensemble.descriptor.margin.is_some() {
                return Err(Error::InvalidArgument(
                    "generated ensembles can only be transformed from their native margin".into(),
                ));
            }
            // Pareto kinds reach cdf value 0 at the clip; max-stable paths stay in (0, 1).
            let reaches_zero = matches!(ensemble.descriptor.kind, ProcessKind::Pareto { .. });
            if reaches_zero {
                target.quantile(0.0)?;
                target.quantile(1.0)?;
            }
            PathEnsemble::generated(descriptor)
        }
    }
}

const MAX_SERIES_TERMS: usize = 100_000_000;

fn simple_msp_bounded<R: Rng + ?Sized>(
    spec: &GeneratorSpec,
    bound: f64,
    sites: &[f64],
    rng: &mut R,
    xi: &mut [f64],
) {
    xi.fill(0.0);
    let mut z = vec![0.0; sites.len()];
    let mut gamma = 0.0_f64;
    let mut floor = 0.0_f64;
    for _ in 0..MAX_SERIES_TERMS {
        gamma += rng.sample::<f64, _>(Exp1);
        // No later arrival can exceed bound / gamma, so nothing can change.
        if floor > 0.0 && bound / gamma <= floor {
            return;
        }
        spec.sample_at(sites, rng, &mut z);
        floor = f64::INFINITY;
        for (x, &zt) in xi.iter_mut().zip(&z) {
            *x = x.max(zt / gamma);
            floor = floor.min(*x);
        }
    }
    panic!("max-stable series did not cover the grid after {MAX_SERIES_TERMS} arrivals");
}

/// Truncated series for the interpolated Frechet generator.
///
/// Each arrival first draws the largest anchor value; only arrivals whose
/// largest anchor value could lift some segment are completed (remaining
/// anchors drawn conditionally below the maximum). After arrival `Gamma`,
/// the expected number of later arrivals that lift segment `s` is at most
/// `2 (c mu_s)^-p Gamma^(1-p) / (p - 1)`, with `mu_s` the current minimum
/// of `xi` over the segment and `c` the Frechet mean.
fn simple_msp_logistic<R: Rng + ?Sized>(
    dim: usize,
    p: f64,
    eps: f64,
    sites: &[f64],
    rng: &mut R,
    xi: &mut [f64],
) {
    let segments = dim - 1;
    let c = frechet_mean(p);
    let seg_of: Vec<(usize, f64)> = sites
        .iter()
        .map(|&t| {
            let pos = t * segments as f64;
            let seg = (pos.floor() as usize).min(segments - 1);
            (seg, pos - seg as f64)
        })
        .collect();
    let mut seg_min = vec![0.0_f64; segments];
    xi.fill(0.0);
    let mut anchors = vec![0.0; dim];
    let mut gamma = 0.0_f64;
    let mut gamma_stop = f64::INFINITY;
    let mut dirty = false;
    let inv_p = 1.0 / p;
    for _ in 0..MAX_SERIES_TERMS {
        gamma += rng.sample::<f64, _>(Exp1);
        let lowest = seg_min.iter().copied().fold(f64::INFINITY, f64::min);
        // Largest of `dim` iid Frechet(p): P(M <= x) = exp(-dim x^-p).
        let e: f64 = rng.sample(Exp1);
        let top = (e / dim as f64).powf(-inv_p);
        if top / (c * gamma) <= lowest {
            if gamma >= gamma_stop {
                return;
            }
            continue;
        }
        let arg = rng.random_range(0..dim);
        let top_pow = top.powf(-p);
        for (k, a) in anchors.iter_mut().enumerate() {
            *a = if k == arg {
                top / c
            } else {
                let e: f64 = rng.sample(Exp1);
                (top_pow + e).powf(-inv_p) / c
            };
        }
        for s in 0..segments {
            let hi = anchors[s].max(anchors[s + 1]);
            if hi / gamma <= seg_min[s] {
                continue;
            }
            dirty = true;
            let mut m = f64::INFINITY;
            for (x, &(seg, theta)) in xi.iter_mut().zip(&seg_of) {
                if seg != s {
                    continue;
                }
                let z = (1.0 - theta) * anchors[s] + theta * anchors[s + 1];
                *x = x.max(z / gamma);
                m = m.min(*x);
            }
            seg_min[s] = if m.is_finite() { m } else { f64::INFINITY };
        }
        if dirty {
            gamma_stop = if seg_min.iter().all(|&m| m > 0.0) {
                let k: f64 = seg_min.iter().map(|&m| 2.0 * (c * m).powf(-p)).sum::<f64>() / (p - 1.0);
                (k / eps).powf(1.0 / (p - 1.0))
            } else {
                f64::INFINITY
            };
            dirty = false;
        }
        if gamma >= gamma_stop {
            return;
        }
    }
    panic!("max-stable series exceeded {MAX_SERIES_TERMS} arrivals");
}
