//! Uniform grids on `[0, 1]` and functions sampled on them.
//!
//! The grid convention is `t_i = i / n` for `i = 1..=n`: the right endpoint
//! is a grid point and the left endpoint is not. Internally points are
//! addressed by a zero-based index `j`, so `t_j = (j + 1) / n`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing `1 / n`.
    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        (j + 1) as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Zero-based index of the grid point nearest to `t`, clamped to the grid.
    pub fn snap(&self, t: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, 1]")));
        }
        let i = (t * self.n as f64).round() as usize;
        Ok(i.clamp(1, self.n) - 1)
    }

    /// Inclusive index range of the grid points covering the window `[a, b]`
    /// after snapping both endpoints.
    pub fn window(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        if a > b {
            return Err(Error::InvalidArgument(format!("empty window [{a}, {b}]")));
        }
        Ok((self.snap(a)?, self.snap(b)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite grid value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn riemann_mean(&self) -> f64 {
        riemann_mean(&self.values)
    }

    pub fn occupation_above(&self, level: f64) -> f64 {
        occupation_above(&self.values, level)
    }

    pub fn level_for_occupation(&self, y: f64) -> Result<f64> {
        level_for_occupation(&self.values, y)
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `(1/n) * sum(values)`, the grid approximation of the integral over `[0, 1]`.
pub fn riemann_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fraction of grid points strictly above `level`.
pub fn occupation_above(values: &[f64], level: f64) -> f64 {
    let count = values.iter().filter(|&&v| v > level).count();
    count as f64 / values.len() as f64
}

/// `sup{u >= 0 : occupation_above(values, u) > y}` for nonnegative values.
///
/// With the values sorted descending this is the `k`-th largest value,
/// `k = floor(y n) + 1`. The Lebesgue measure of `{u >= 0 : occupation > y}`
/// equals this level, which is what turns the sojourn survivor integral
/// into a plain expectation.
pub fn level_for_occupation(values: &[f64], y: f64) -> Result<f64> {
    let mut sorted = descending_nonnegative(values)?;
    let level = level_from_sorted(&mut sorted, y)?;
    Ok(level)
}

/// Copy of `values` sorted in descending order; rejects negative entries.
pub(crate) fn descending_nonnegative(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(Error::InvalidArgument(format!(
            "occupation level inversion needs nonnegative values, got {v}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted)
}

pub(crate) fn level_from_sorted(sorted_desc: &mut [f64], y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("occupation fraction {y} outside [0, 1)")));
    }
    let n = sorted_desc.len();
    let k = (y * n as f64).floor() as usize + 1;
    Ok(if k <= n { sorted_desc[k - 1] } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn grid_points_follow_i_over_n() {
        let grid = g(4);
        assert_eq!(grid.points(), vec![0.25, 0.5, 0.75, 1.0]);
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn riemann_mean_examples() {
        assert_eq!(GridFunction::constant(g(7), 1.0).unwrap().riemann_mean(), 1.0);
        let id = GridFunction::from_fn(g(4), |t| t).unwrap();
        assert!((id.riemann_mean() - 0.625).abs() < 1e-15);
        let id10 = GridFunction::from_fn(g(10), |t| t).unwrap();
        let ind: Vec<f64> = id10.values().iter().map(|&v| f64::from(u8::from(v > 0.5))).collect();
        assert!((riemann_mean(&ind) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn occupation_examples() {
        assert_eq!(GridFunction::constant(g(5), 0.0).unwrap().occupation_above(0.0), 0.0);
        assert_eq!(GridFunction::constant(g(5), 1.0).unwrap().occupation_above(0.0), 1.0);
        let id = GridFunction::from_fn(g(10), |t| t).unwrap();
        assert_eq!(id.occupation_above(0.5), 0.5);
    }

    #[test]
    fn level_inversion_examples() {
        let v = [3.0, 1.0, 2.0, 0.0];
        assert_eq!(level_for_occupation(&v, 0.5).unwrap(), 1.0);
        assert_eq!(level_for_occupation(&v, 0.0).unwrap(), 3.0);
        for y in [0.0, 0.3, 0.99] {
            assert_eq!(level_for_occupation(&[2.5; 6], y).unwrap(), 2.5);
        }
        assert!(level_for_occupation(&[1.0, -0.1], 0.2).is_err());
        assert!(level_for_occupation(&[1.0], 1.0).is_err());
    }

    #[test]
    fn window_snapping() {
        let grid = g(10);
        assert_eq!(grid.window(0.0, 0.5).unwrap(), (0, 4));
        assert_eq!(grid.window(0.25, 0.25).unwrap(), (2, 2));
        assert!(grid.window(0.5, 1.2).is_err());
        assert!(grid.window(0.6, 0.5).is_err());
    }
}
