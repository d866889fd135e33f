//! Generator processes `Z`: nonnegative, `E(Z_t) = 1` for every `t`, and with
//! an integrable supremum. The generator constant is `m = E(max_t Z_t)`.

use rand::Rng;
use rand_distr::Exp1;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::estimate::{par_map, MCEstimate};
use crate::grid::{Grid, GridFunction};
use crate::stream::RandomStream;

/// Shape of the kernel `g` of a moving-kernel generator, placed on the
/// circle `[0, 1)` and centered at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// Peak `1 / w` at the center, linear decay to 0 at distance `w`.
    Triangular { half_width: f64 },
    /// Height `1 / w` on an arc of length `w`.
    Rectangular { width: f64 },
}

impl KernelShape {
    fn value(&self, x: f64) -> f64 {
        match *self {
            KernelShape::Triangular { half_width: w } => {
                let d = x.min(1.0 - x);
                if d >= w {
                    0.0
                } else {
                    (1.0 - d / w) / w
                }
            }
            KernelShape::Rectangular { width: w } => {
                if x < w {
                    1.0 / w
                } else {
                    0.0
                }
            }
        }
    }

    /// Integral of the kernel over the circle.
    fn integral(&self) -> f64 {
        match *self {
            KernelShape::Triangular { half_width: w } if w <= 0.5 => 1.0,
            // The two flanks overlap on the circle and get cut at distance 1/2.
            KernelShape::Triangular { half_width: w } => (1.0 - 0.25 / w) / w,
            KernelShape::Rectangular { width: w } => w.min(1.0) / w,
        }
    }

    fn peak(&self) -> f64 {
        match *self {
            KernelShape::Triangular { half_width: w } => 1.0 / w,
            KernelShape::Rectangular { width: w } => 1.0 / w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// `Z_t = 1`: complete dependence.
    Constant,
    /// `Z_t = g((t - T) mod 1)` with `T ~ Uniform[0, 1)`.
    MovingKernel(KernelShape),
    /// Equiprobable atoms `(z_1, .., z_d)` placed at anchors `(i-1)/(d-1)` and
    /// linearly interpolated in between.
    DiscreteInterpolated { atoms: Vec<Vec<f64>> },
    /// Anchor values `X_i / Gamma(1 - 1/p)` with independent Frechet(`p`)
    /// `X_i`, linearly interpolated. `p = inf` is the constant generator.
    LogisticFrechet { dim: usize, p: f64 },
}

impl GeneratorSpec {
    pub fn moving_triangular(half_width: f64) -> Result<Self> {
        Self::moving_kernel(KernelShape::Triangular { half_width })
    }

    pub fn moving_rectangular(width: f64) -> Result<Self> {
        Self::moving_kernel(KernelShape::Rectangular { width })
    }

    pub fn moving_kernel(shape: KernelShape) -> Result<Self> {
        let w = match shape {
            KernelShape::Triangular { half_width } => half_width,
            KernelShape::Rectangular { width } => width,
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidGenerator(format!("kernel width {w} must be positive")));
        }
        let area = shape.integral();
        if (area - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGenerator(format!("kernel integrates to {area}, not 1")));
        }
        Ok(GeneratorSpec::MovingKernel(shape))
    }

    pub fn discrete_interpolated(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let d = atoms.first().map_or(0, Vec::len);
        if d < 2 {
            return Err(Error::InvalidGenerator("interpolated generator needs d >= 2".into()));
        }
        if atoms.iter().any(|a| a.len() != d) {
            return Err(Error::InvalidGenerator("atoms differ in dimension".into()));
        }
        if atoms.iter().flatten().any(|&z| !(z.is_finite() && z >= 0.0)) {
            return Err(Error::InvalidGenerator("atoms must be finite and nonnegative".into()));
        }
        for i in 0..d {
            let mean = atoms.iter().map(|a| a[i]).sum::<f64>() / atoms.len() as f64;
            if (mean - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGenerator(format!("component {} has mean {mean}, not 1", i + 1)));
            }
        }
        Ok(GeneratorSpec::DiscreteInterpolated { atoms })
    }

    pub fn logistic_frechet(dim: usize, p: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidGenerator("logistic generator needs d >= 2".into()));
        }
        if !(p > 1.0) {
            return Err(Error::InvalidGenerator(format!("logistic exponent {p} must exceed 1")));
        }
        Ok(GeneratorSpec::LogisticFrechet { dim, p })
    }

    /// Almost-sure upper bound of `Z`, if the generator is bounded.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            GeneratorSpec::Constant => Some(1.0),
            GeneratorSpec::MovingKernel(k) => Some(k.peak()),
            GeneratorSpec::DiscreteInterpolated { atoms } => {
                Some(atoms.iter().flatten().fold(0.0_f64, |a, &b| a.max(b)))
            }
            GeneratorSpec::LogisticFrechet { p, .. } if p.is_infinite() => Some(1.0),
            GeneratorSpec::LogisticFrechet { .. } => None,
        }
    }

    /// Closed-form generator constant `E(max_{t in [0,1]} Z_t)`.
    pub fn generator_constant(&self) -> f64 {
        match self {
            GeneratorSpec::Constant => 1.0,
            GeneratorSpec::MovingKernel(k) => k.peak(),
            GeneratorSpec::DiscreteInterpolated { atoms } => {
                let total: f64 = atoms.iter().map(|a| a.iter().fold(0.0_f64, |x, &y| x.max(y))).sum();
                total / atoms.len() as f64
            }
            GeneratorSpec::LogisticFrechet { p, .. } if p.is_infinite() => 1.0,
            GeneratorSpec::LogisticFrechet { dim, p } => (*dim as f64).powf(1.0 / p),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_bound().is_some()
    }

    /// Anchor positions of the interpolated variants.
    pub fn anchors(&self) -> Option<Vec<f64>> {
        let d = match self {
            GeneratorSpec::DiscreteInterpolated { atoms } => atoms[0].len(),
            GeneratorSpec::LogisticFrechet { dim, p } if p.is_finite() => *dim,
            _ => return None,
        };
        Some((0..d).map(|i| i as f64 / (d - 1) as f64).collect())
    }

    /// Short human-readable label used in metadata records.
    pub fn describe(&self) -> String {
        match self {
            GeneratorSpec::Constant => "constant".into(),
            GeneratorSpec::MovingKernel(KernelShape::Triangular { half_width }) => {
                format!("moving_kernel(triangular, w={half_width})")
            }
            GeneratorSpec::MovingKernel(KernelShape::Rectangular { width }) => {
                format!("moving_kernel(rectangular, w={width})")
            }
            GeneratorSpec::DiscreteInterpolated { atoms } => {
                let body: Vec<String> = atoms
                    .iter()
                    .map(|a| a.iter().map(f64::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                format!("discrete_interpolated({})", body.join("; "))
            }
            GeneratorSpec::LogisticFrechet { dim, p } => format!("logistic_frechet(d={dim}, p={p})"),
        }
    }

    /// Draws one realization of `Z` and evaluates it at `sites` (times in
    /// `[0, 1]`). Every site set consumes the random numbers identically, so
    /// evaluating on a subset of a grid gives the restriction of the grid path.
    pub fn sample_at<R: Rng + ?Sized>(&self, sites: &[f64], rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(sites.len(), out.len());
        match self {
            GeneratorSpec::Constant => out.fill(1.0),
            GeneratorSpec::MovingKernel(kernel) => {
                let shift: f64 = rng.random();
                for (o, &t) in out.iter_mut().zip(sites) {
                    *o = kernel.value((t - shift).rem_euclid(1.0));
                }
            }
            GeneratorSpec::DiscreteInterpolated { atoms } => {
                let atom = &atoms[rng.random_range(0..atoms.len())];
                interpolate(atom, sites, out);
            }
            GeneratorSpec::LogisticFrechet { p, .. } if p.is_infinite() => out.fill(1.0),
            GeneratorSpec::LogisticFrechet { dim, p } => {
                let anchors = sample_logistic_anchors(*dim, *p, rng);
                interpolate(&anchors, sites, out);
            }
        }
    }
}

/// `Gamma(1 - 1/p)`, the mean of a Frechet(`p`) variable.
pub(crate) fn frechet_mean(p: f64) -> f64 {
    gamma(1.0 - 1.0 / p)
}

/// One Frechet(`p`) draw, `P(X <= x) = exp(-x^-p)`.
pub(crate) fn sample_frechet<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    if p == 2.0 {
        1.0 / e.sqrt()
    } else {
        e.powf(-1.0 / p)
    }
}

fn sample_logistic_anchors<R: Rng + ?Sized>(dim: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let scale = frechet_mean(p);
    (0..dim).map(|_| sample_frechet(p, rng) / scale).collect()
}

/// Linear interpolation of anchor values placed at `(i-1)/(d-1)`.
pub(crate) fn interpolate(anchor_values: &[f64], sites: &[f64], out: &mut [f64]) {
    let segments = anchor_values.len() - 1;
    for (o, &t) in out.iter_mut().zip(sites) {
        let pos = t * segments as f64;
        let seg = (pos.floor() as usize).min(segments - 1);
        let theta = pos - seg as f64;
        *o = if theta == 0.0 {
            anchor_values[seg]
        } else if theta == 1.0 {
            anchor_values[seg + 1]
        } else {
            (1.0 - theta) * anchor_values[seg] + theta * anchor_values[seg + 1]
        };
    }
}

/// Applies `f` to `n_samples` independent generator paths on `sites`, path
/// `i` drawn from substream `i`. Results come back in path order.
pub fn map_generator_paths<T, F>(
    spec: &GeneratorSpec,
    sites: &[f64],
    n_samples: usize,
    stream: RandomStream,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    par_map(n_samples, |i| {
        let mut rng = stream.substream(i as u64);
        let mut buf = vec![0.0; sites.len()];
        spec.sample_at(sites, &mut rng, &mut buf);
        f(&buf)
    })
}

pub fn sample_generator_path(spec: &GeneratorSpec, grid: Grid, stream: RandomStream) -> GridFunction {
    let sites = grid.points();
    let mut out = vec![0.0; sites.len()];
    spec.sample_at(&sites, &mut stream.substream(0), &mut out);
    GridFunction::new(grid, out).expect("generator paths are finite")
}

/// Monte Carlo estimate of `m = E(max_t Z_t)` over the grid points.
pub fn generator_constant_estimate(
    spec: &GeneratorSpec,
    grid: Grid,
    n_samples: usize,
    stream: RandomStream,
) -> Result<MCEstimate> {
    let maxima = map_generator_paths(spec, &grid.points(), n_samples, stream, |z| {
        z.iter().fold(0.0_f64, |a, &b| a.max(b))
    });
    MCEstimate::from_samples(&maxima)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> RandomStream {
        RandomStream::new(11)
    }

    #[test]
    fn constant_paths_are_one() {
        let grid = Grid::new(17).unwrap();
        let path = sample_generator_path(&GeneratorSpec::Constant, grid, stream());
        assert!(path.values().iter().all(|&v| v == 1.0));
        let m = generator_constant_estimate(&GeneratorSpec::Constant, grid, 10, stream()).unwrap();
        assert_eq!((m.mean, m.std_error), (1.0, 0.0));
    }

    #[test]
    fn kernel_validation() {
        assert!(GeneratorSpec::moving_triangular(0.25).is_ok());
        assert!(GeneratorSpec::moving_triangular(0.5).is_ok());
        assert!(GeneratorSpec::moving_triangular(0.6).is_err());
        assert!(GeneratorSpec::moving_triangular(0.0).is_err());
        assert!(GeneratorSpec::moving_rectangular(1.0).is_ok());
        assert!(GeneratorSpec::moving_rectangular(1.5).is_err());
    }

    #[test]
    fn triangular_kernel_geometry() {
        // Peak 4, area 1: every path is bounded by 4 and integrates to 1 up
        // to grid error.
        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let grid = Grid::new(1000).unwrap();
        let stats = map_generator_paths(&spec, &grid.points(), 200, stream(), |z| {
            (z.iter().fold(0.0_f64, |a, &b| a.max(b)), z.iter().sum::<f64>() / z.len() as f64)
        });
        for (max, mean) in stats {
            assert!(max <= 4.0 + 1e-12);
            assert!(max > 4.0 - 16.0 / 1000.0);
            assert!((mean - 1.0).abs() < 1e-3);
        }
        let m = generator_constant_estimate(&spec, grid, 1000, stream()).unwrap();
        assert!((m.mean - 4.0).abs() < 0.02);
    }

    #[test]
    fn discrete_interpolated_linear_path() {
        let spec = GeneratorSpec::discrete_interpolated(vec![vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let grid = Grid::new(1000).unwrap();
        let path = sample_generator_path(&spec, grid, stream());
        let max = path.values().iter().fold(0.0_f64, |a, &b| a.max(b));
        assert!((max - 2.0).abs() < 1e-2);
        assert!((path.riemann_mean() - 1.0).abs() < 2e-3);
        assert_eq!(spec.generator_constant(), 2.0);
        assert!(GeneratorSpec::discrete_interpolated(vec![vec![2.0, 0.0]]).is_err());
        assert!(GeneratorSpec::discrete_interpolated(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn interpolation_hits_anchors() {
        let mut out = [0.0; 5];
        interpolate(&[1.0, 3.0, 2.0], &[0.0, 0.25, 0.5, 0.75, 1.0], &mut out);
        assert_eq!(out, [1.0, 2.0, 3.0, 2.5, 2.0]);
    }

    #[test]
    fn logistic_validation_and_constant() {
        assert!(GeneratorSpec::logistic_frechet(1, 2.0).is_err());
        assert!(GeneratorSpec::logistic_frechet(3, 1.0).is_err());
        let spec = GeneratorSpec::logistic_frechet(4, 2.0).unwrap();
        assert!((spec.generator_constant() - 2.0).abs() < 1e-15);
        assert!(!spec.is_bounded());
        let inf = GeneratorSpec::logistic_frechet(4, f64::INFINITY).unwrap();
        assert_eq!(inf.sup_bound(), Some(1.0));
        assert!((frechet_mean(2.0) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn marginal_means_are_one() {
        // 5 probe sites, 1e5 paths, |mean - 1| < 4 s.e. for every bounded variant
        // and the Frechet-based one.
        let probes = [0.1, 0.3, 0.5, 0.77, 1.0];
        let specs = [
            GeneratorSpec::moving_triangular(0.25).unwrap(),
            GeneratorSpec::moving_rectangular(0.3).unwrap(),
            GeneratorSpec::discrete_interpolated(vec![vec![2.0, 0.0, 1.0], vec![0.0, 2.0, 1.0]]).unwrap(),
            GeneratorSpec::logistic_frechet(4, 3.0).unwrap(),
        ];
        for spec in &specs {
            let paths = map_generator_paths(spec, &probes, 100_000, stream(), |z| z.to_vec());
            for k in 0..probes.len() {
                let col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
                let e = MCEstimate::from_samples(&col).unwrap();
                assert!(e.z_score(1.0) < 4.0, "{spec:?} at {}: {e:?}", probes[k]);
            }
        }
    }

    #[test]
    fn bounded_variants_never_exceed_bound() {
        let grid = Grid::new(97).unwrap();
        for spec in [
            GeneratorSpec::moving_triangular(0.25).unwrap(),
            GeneratorSpec::moving_rectangular(0.4).unwrap(),
            GeneratorSpec::discrete_interpolated(vec![vec![3.0, 0.0], vec![0.0, 1.5], vec![0.0, 1.5]]).unwrap(),
        ] {
            let bound = spec.sup_bound().unwrap();
            let over = map_generator_paths(&spec, &grid.points(), 100_000, stream(), |z| {
                z.iter().filter(|&&v| v > bound + 1e-12 || v < 0.0).count()
            });
            assert_eq!(over.iter().sum::<usize>(), 0);
        }
    }

    #[test]
    fn logistic_components_reproduce_p_norm() {
        // At the anchors E(max_i |x_i| Z_i) = ||x||_p.
        let spec = GeneratorSpec::logistic_frechet(4, 2.0).unwrap();
        let anchors = spec.anchors().unwrap();
        for (x, target) in [(vec![1.0; 4], 2.0), (vec![1.0, 0.0, 0.0, 0.0], 1.0)] {
            let vals = map_generator_paths(&spec, &anchors, 200_000, stream(), |z| {
                z.iter().zip(&x).map(|(a, b)| a * b).fold(0.0_f64, f64::max)
            });
            let e = MCEstimate::from_samples(&vals).unwrap();
            assert!(e.z_score(target) < 4.0, "{e:?} vs {target}");
        }
    }

    #[test]
    fn paths_are_deterministic() {
        let spec = GeneratorSpec::logistic_frechet(3, 2.5).unwrap();
        let grid = Grid::new(50).unwrap();
        let a = sample_generator_path(&spec, grid, stream());
        let b = sample_generator_path(&spec, grid, stream());
        assert_eq!(a, b);
    }
}
