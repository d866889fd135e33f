//! Remaining excursion time above `s f` from an inspection point `t0`.
//!
//! On the grid, `tau = (k - i0) / n` where `i0` is the index of `t0` and `k`
//! the first index at or after `i0` whose value does not exceed the
//! threshold; `tau = 1 - t0` when no later point fails. The survivor is
//! reported on the mesh `u_j = j / n`, `j = 0 .. n - i0 - 1`, and
//! `tau > u_j` exactly when the points in the closed window `[t0, t0 + u_j]`
//! all exceed. The last mesh point carries the mass at `1 - t0`.

use crate::error::{Error, Result};
use crate::estimate::{vector_moments, MCEstimate};
use crate::generators::{map_generator_paths, GeneratorSpec};
use crate::grid::{Grid, GridFunction};
use crate::processes::PathEnsemble;
use crate::sojourn::{check_magnitude, ThresholdSpec};
use crate::stream::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionLaw {
    /// Inspection point, snapped to the grid.
    pub t0: f64,
    pub u_mesh: Vec<f64>,
    pub survivor: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `P(tau = 1 - t0)`.
    pub mass_at_end: f64,
    pub expectation: MCEstimate,
    /// Conditioning paths (empirical) or generator samples (theoretical).
    pub n_samples: usize,
}

impl ExcursionLaw {
    /// `(1/n) sum_j survivor(u_j)`, the expectation implied by the survivor.
    pub fn riemann_expectation(&self, grid: Grid) -> f64 {
        self.survivor.iter().sum::<f64>() * grid.step()
    }
}

/// Zero-based index of `t0` and the number of mesh points after it.
fn inspection_index(grid: Grid, t0: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&t0) {
        return Err(Error::InvalidArgument(format!("inspection point {t0} outside [0, 1)")));
    }
    let i0 = grid.snap(t0)?;
    if i0 + 1 >= grid.len() {
        return Err(Error::InvalidArgument(format!("inspection point {t0} snaps to the right endpoint")));
    }
    Ok((i0, grid.len() - 1 - i0))
}

fn excursion_steps(path: &[f64], threshold: &[f64], i0: usize) -> Option<usize> {
    if !(path[i0] > threshold[i0]) {
        return None;
    }
    let n = path.len();
    let k = (i0..n).find(|&i| !(path[i] > threshold[i])).unwrap_or(n - 1);
    Some(k - i0)
}

/// `tau_{t0}(s)` for one path; an error when the path does not exceed at `t0`.
pub fn remaining_excursion_time(path: &GridFunction, th: &ThresholdSpec, t0: f64) -> Result<f64> {
    if path.grid() != th.grid() {
        return Err(Error::GridMismatch { expected: th.grid().len(), got: path.grid().len() });
    }
    let grid = path.grid();
    let (i0, _) = inspection_index(grid, t0)?;
    excursion_steps(path.values(), &th.values(), i0)
        .map(|k| k as f64 * grid.step())
        .ok_or_else(|| Error::Degenerate(format!("path does not exceed the threshold at t0 = {t0}")))
}

/// Limit law `P(T > u) = E(min_{t0 <= t <= t0+u} |f(t)| Z_t) / |f(t0)|`.
pub fn excursion_survivor_theoretical(
    spec: &GeneratorSpec,
    f: &GridFunction,
    t0: f64,
    n_samples: usize,
    stream: RandomStream,
) -> Result<ExcursionLaw> {
    let grid = f.grid();
    let (i0, len) = inspection_index(grid, t0)?;
    let f0 = f.values()[i0].abs();
    if f0 == 0.0 {
        return Err(Error::InvalidArgument("threshold function vanishes at t0".into()));
    }
    let weights: Vec<f64> = f.values().iter().map(|v| v.abs() / f0).collect();
    let sites = grid.points();
    let step = grid.step();
    // Components: running minimum at each mesh point, then the Riemann mean.
    let mins: Vec<Vec<f64>> = map_generator_paths(spec, &sites, n_samples, stream, |z| {
        let mut out = Vec::with_capacity(len + 1);
        let mut run = f64::INFINITY;
        for j in 0..len {
            run = run.min(weights[i0 + j] * z[i0 + j]);
            out.push(run);
        }
        out.push(out.iter().sum::<f64>() * step);
        out
    });
    let moments = vector_moments(mins.len(), len + 1, |i, out| out.copy_from_slice(&mins[i]))?;
    let survivor: Vec<f64> = moments[..len].iter().map(|m| m.mean).collect();
    let std_error = moments[..len].iter().map(|m| m.std_error).collect();
    Ok(ExcursionLaw {
        t0: grid.point(i0),
        u_mesh: (0..len).map(|j| j as f64 * step).collect(),
        mass_at_end: survivor[len - 1],
        survivor,
        std_error,
        expectation: moments[len],
        n_samples,
    })
}

/// Empirical survivor of `tau_{t0}(s)` among paths exceeding at `t0`.
pub fn excursion_survivor_empirical(
    ens: &PathEnsemble,
    th: &ThresholdSpec,
    t0: f64,
    min_conditioning: usize,
) -> Result<ExcursionLaw> {
    let grid = th.grid();
    let (i0, len) = inspection_index(grid, t0)?;
    check_magnitude(ens, grid, th.level() * th.f().values()[i0].abs())?;
    let thr = th.values();
    let steps: Vec<usize> = ens.map_paths(|p| excursion_steps(p, &thr, i0)).into_iter().flatten().collect();
    let floor = min_conditioning.max(2);
    if steps.len() < floor {
        return Err(Error::FloorUnmet { observed: steps.len(), required: floor });
    }
    let n = steps.len();
    // counts[k] = number of conditioning paths with exactly k steps.
    let mut counts = vec![0usize; len + 1];
    for &k in &steps {
        counts[k] += 1;
    }
    let mut above = n;
    let mut survivor = Vec::with_capacity(len);
    let mut std_error = Vec::with_capacity(len);
    for &c in &counts[..len] {
        above -= c;
        let est = MCEstimate::proportion(above, n)?;
        survivor.push(est.mean);
        std_error.push(est.std_error);
    }
    let taus: Vec<f64> = steps.iter().map(|&k| k as f64 * grid.step()).collect();
    Ok(ExcursionLaw {
        t0: grid.point(i0),
        u_mesh: (0..len).map(|j| j as f64 * grid.step()).collect(),
        mass_at_end: survivor[len - 1],
        survivor,
        std_error,
        expectation: MCEstimate::from_samples(&taus)?,
        n_samples: n,
    })
}

/// `sup_u |a(u) - b(u)|` on a shared mesh.
pub fn sup_distance(a: &ExcursionLaw, b: &ExcursionLaw) -> f64 {
    a.survivor.iter().zip(&b.survivor).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{sample_gpp, sample_pareto_process, MixingDf};

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn remaining_time_examples() {
        let g = grid(10);
        let th = ThresholdSpec::constant(g, 0.01).unwrap();
        let high = GridFunction::constant(g, -0.001).unwrap();
        assert!((remaining_excursion_time(&high, &th, 0.5).unwrap() - 0.5).abs() < 1e-12);

        let down = GridFunction::from_fn(g, |t| -t).unwrap();
        let th5 = ThresholdSpec::constant(g, 0.5).unwrap();
        assert!((remaining_excursion_time(&down, &th5, 0.2).unwrap() - 0.3).abs() < 1e-12);

        let mut spike = vec![-1.0; 10];
        spike[3] = 0.0;
        let spike = GridFunction::new(g, spike).unwrap();
        assert!((remaining_excursion_time(&spike, &th, 0.4).unwrap() - 0.1).abs() < 1e-12);
        assert!(remaining_excursion_time(&spike, &th, 0.6).is_err());
    }

    #[test]
    fn remaining_time_on_fine_grid() {
        // -t > -0.5 fails first at t = 0.5, independent of resolution.
        for n in [100usize, 1000] {
            let g = grid(n);
            let down = GridFunction::from_fn(g, |t| -t).unwrap();
            let th = ThresholdSpec::constant(g, 0.5).unwrap();
            assert!((remaining_excursion_time(&down, &th, 0.2).unwrap() - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn theoretical_complete_dependence() {
        let g = grid(100);
        let flat = GridFunction::constant(g, -1.0).unwrap();
        let law = excursion_survivor_theoretical(&GeneratorSpec::Constant, &flat, 0.3, 10, RandomStream::new(1)).unwrap();
        assert!(law.survivor.iter().all(|&v| v == 1.0));
        assert_eq!(law.mass_at_end, 1.0);
        assert!((law.expectation.mean - 0.7).abs() < 1e-12);

        let f = GridFunction::from_fn(g, |t| -(2.0 - t) / 2.0).unwrap();
        let law = excursion_survivor_theoretical(&GeneratorSpec::Constant, &f, 0.0, 10, RandomStream::new(1)).unwrap();
        let f0 = 2.0 - g.point(0);
        for (u, s) in law.u_mesh.iter().zip(&law.survivor) {
            let expected = (2.0 - g.point(0) - u) / f0;
            assert!((s - expected).abs() < 1e-12);
            assert!((s - (1.0 - u / 2.0)).abs() < 0.01);
        }
    }

    #[test]
    fn theoretical_kernel_vanishes_beyond_support() {
        let g = grid(200);
        let flat = GridFunction::constant(g, -1.0).unwrap();
        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let law = excursion_survivor_theoretical(&spec, &flat, 0.0, 20_000, RandomStream::new(2)).unwrap();
        assert!((law.survivor[0] - 1.0).abs() < 4.0 * law.std_error[0] + 1e-12);
        for (u, s) in law.u_mesh.iter().zip(&law.survivor) {
            if *u >= 0.5 {
                assert_eq!(*s, 0.0);
            }
        }
        assert!(law.survivor.windows(2).all(|w| w[1] <= w[0]));
        assert!(excursion_survivor_theoretical(&spec, &GridFunction::constant(g, 0.0).unwrap(), 0.2, 10, RandomStream::new(2)).is_err());
    }

    #[test]
    fn empirical_complete_dependence_and_consistency() {
        let g = grid(100);
        let th = ThresholdSpec::constant(g, 0.01).unwrap();
        let ens = sample_gpp(&GeneratorSpec::Constant, -10.0, g, 50_000, RandomStream::new(4)).unwrap();
        let law = excursion_survivor_empirical(&ens, &th, 0.25, 100).unwrap();
        assert!(law.survivor.iter().all(|&v| v == 1.0));
        assert!((law.expectation.mean - 0.75).abs() < 1e-12);

        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let ens = sample_pareto_process(&spec, MixingDf::Uniform01, -10.0, Some(0.04), g, 20_000, RandomStream::new(4)).unwrap();
        let law = excursion_survivor_empirical(&ens, &th, 0.25, 100).unwrap();
        assert!((law.riemann_expectation(g) - law.expectation.mean).abs() < 1e-12);
        assert_eq!(law.mass_at_end, *law.survivor.last().unwrap());
        assert!(law.survivor.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn floor_and_t0_checks() {
        let g = grid(20);
        let th = ThresholdSpec::constant(g, 1e-6).unwrap();
        let ens = sample_gpp(&GeneratorSpec::Constant, -10.0, g, 100, RandomStream::new(4)).unwrap();
        assert!(matches!(excursion_survivor_empirical(&ens, &th, 0.3, 100), Err(Error::FloorUnmet { .. })));
        assert!(excursion_survivor_empirical(&ens, &th, 1.0, 100).is_err());
    }
}
