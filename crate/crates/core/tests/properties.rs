use proptest::prelude::*;

use sojourn_lab::excursion::remaining_excursion_time;
use sojourn_lab::grid::{level_for_occupation, occupation_above, riemann_mean};
use sojourn_lab::io::{ensemble_from_csv, ensemble_to_csv};
use sojourn_lab::oracle::maxmin_identity_check;
use sojourn_lab::processes::sample_gpp;
use sojourn_lab::sojourn::{sojourn_time, ThresholdSpec};
use sojourn_lab::{GeneratorSpec, Grid, GridFunction, PathEnsemble, RandomStream};

fn nonneg_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.5), 0.0..10.0f64], 1..24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The measure of `{u >= 0 : occupation_above(g, u) > y}`, integrated on
    /// a fine midpoint mesh, equals `level_for_occupation(g, y)`.
    #[test]
    fn level_is_measure_of_superlevel_set(values in nonneg_values(), y in 0.0..1.0f64) {
        let top = values.iter().cloned().fold(0.0, f64::max) + 1.0;
        let mesh = 20_000;
        let h = top / mesh as f64;
        let measure = (0..mesh)
            .filter(|&i| occupation_above(&values, (i as f64 + 0.5) * h) > y)
            .count() as f64 * h;
        let level = level_for_occupation(&values, y).unwrap();
        prop_assert!((measure - level).abs() <= h, "{} vs {}", measure, level);
    }

    #[test]
    fn level_at_zero_is_max(values in nonneg_values()) {
        let max = values.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(level_for_occupation(&values, 0.0).unwrap(), max);
    }

    #[test]
    fn monotonicity(values in nonneg_values(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(level_for_occupation(&values, hi).unwrap() <= level_for_occupation(&values, lo).unwrap());
        prop_assert!(occupation_above(&values, 10.0 * hi) <= occupation_above(&values, 10.0 * lo));
    }

    #[test]
    fn riemann_mean_of_indicator_is_occupation(values in prop::collection::vec(-5.0..5.0f64, 1..30), level in -5.0..5.0f64) {
        let ind: Vec<f64> = values.iter().map(|&v| if v > level { 1.0 } else { 0.0 }).collect();
        prop_assert_eq!(riemann_mean(&ind), occupation_above(&values, level));
    }

    #[test]
    fn sojourn_is_occupation_of_difference(
        values in prop::collection::vec(-1.0..0.0f64, 2..30),
        s in 1e-4..1.0f64,
    ) {
        let grid = Grid::new(values.len()).unwrap();
        let path = GridFunction::new(grid, values.clone()).unwrap();
        let f = GridFunction::from_fn(grid, |t| t - 1.0).unwrap();
        let th = ThresholdSpec::new(f.clone(), s).unwrap();
        let diff: Vec<f64> = values.iter().zip(f.values()).map(|(x, fv)| x - s * fv).collect();
        let soj = sojourn_time(&path, &th).unwrap();
        prop_assert!((0.0..=1.0).contains(&soj));
        prop_assert_eq!(soj, occupation_above(&diff, 0.0));
    }

    #[test]
    fn excursion_time_is_a_grid_multiple(
        values in prop::collection::vec(-0.02..0.0f64, 4..40),
        t0 in 0.0..0.9f64,
    ) {
        let grid = Grid::new(values.len()).unwrap();
        let path = GridFunction::new(grid, values).unwrap();
        let th = ThresholdSpec::constant(grid, 0.01).unwrap();
        if let Ok(tau) = remaining_excursion_time(&path, &th, t0) {
            let i0 = grid.snap(t0).unwrap();
            let k = tau * grid.len() as f64;
            prop_assert!(tau > 0.0 && tau <= 1.0 - grid.point(i0) + 1e-12);
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn maxmin_identity(a in prop::collection::vec(-1e6..1e6f64, 1..=12)) {
        prop_assert!(maxmin_identity_check(&a).unwrap());
    }

    #[test]
    fn ensemble_csv_round_trip_is_bit_exact(
        raw in prop::collection::vec(prop::collection::vec(any::<f64>(), 5), 1..8),
    ) {
        let paths: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|p| p.into_iter().map(|v| if v.is_finite() { v } else { -1.0 }).collect())
            .collect();
        let template = sample_gpp(&GeneratorSpec::Constant, -10.0, Grid::new(5).unwrap(), paths.len(), RandomStream::new(0)).unwrap();
        let ens = PathEnsemble::from_paths(template.descriptor().clone(), paths.clone()).unwrap();
        let back = ensemble_from_csv(&ensemble_to_csv(&ens), ens.descriptor().clone()).unwrap();
        for (i, p) in paths.iter().enumerate() {
            let q = back.path_values(i);
            prop_assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
