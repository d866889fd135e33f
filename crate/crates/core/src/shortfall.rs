//! Expected shortfall `ES(s) = E(I(s) | S(s) > 0)` with
//! `I(s) = int_0^1 (Y_t - s) 1(Y_t > s) dt`.

use crate::error::{Error, Result};
use crate::estimate::MCEstimate;
use crate::grid::GridFunction;
use crate::margins::MarginSpec;
use crate::processes::PathEnsemble;

/// Riemann mean of `(path - s)^+`.
pub fn excess_integral(path: &GridFunction, s: f64) -> f64 {
    excess_on_grid(path.values(), s)
}

fn excess_on_grid(path: &[f64], s: f64) -> f64 {
    path.iter().map(|&y| if y > s { y - s } else { 0.0 }).sum::<f64>() / path.len() as f64
}

fn check_ensemble(ens: &PathEnsemble, s: f64) -> Result<MarginSpec> {
    if ens.descriptor().mixing_cap.is_some() {
        return Err(Error::InvalidArgument(
            "shortfall estimates need an unconditioned ensemble".into(),
        ));
    }
    let margin = ens.descriptor().current_margin();
    if s >= margin.upper_endpoint() {
        return Err(Error::Degenerate(format!(
            "level {s} is at or above the upper endpoint {}; no exceedances possible",
            margin.upper_endpoint()
        )));
    }
    Ok(margin)
}

/// `P(sup_t Y_t <= s)`, which on the copula scale is `P(sup_t U_t <= F(s))`.
pub fn sup_below_probability(ens: &PathEnsemble, s: f64) -> Result<MCEstimate> {
    let below = ens.map_paths(|p| p.iter().all(|&y| y <= s));
    MCEstimate::proportion(below.into_iter().filter(|&b| b).count(), ens.len())
}

/// Mean excess integral over the paths that exceed `s` somewhere.
pub fn expected_shortfall_empirical(ens: &PathEnsemble, s: f64, min_exceedances: usize) -> Result<MCEstimate> {
    check_ensemble(ens, s)?;
    let excess: Vec<f64> = ens
        .map_paths(|p| p.iter().any(|&y| y > s).then(|| excess_on_grid(p, s)))
        .into_iter()
        .flatten()
        .collect();
    let floor = min_exceedances.max(2);
    if excess.len() < floor {
        return Err(Error::FloorUnmet { observed: excess.len(), required: floor });
    }
    MCEstimate::from_samples(&excess)
}

/// `ES(s) = int_s^omega (1 - F) / (1 - P(sup U <= F(s)))`, an identity at
/// every level.
pub fn expected_shortfall_exact(margin: MarginSpec, sup_copula_prob: MCEstimate, s: f64) -> Result<MCEstimate> {
    let tail = margin.tail_integral(s);
    if tail.is_infinite() {
        return Err(Error::DivergentTail);
    }
    let denom = 1.0 - sup_copula_prob.mean;
    if !(denom > 0.0) {
        return Err(Error::Degenerate("no exceedance mass in the denominator".into()));
    }
    let es = tail / denom;
    Ok(MCEstimate { mean: es, std_error: es * sup_copula_prob.std_error / denom, n_samples: sup_copula_prob.n_samples })
}

/// Leading term `int_s^omega (1 - F) / (1 - F(s)) / m`.
pub fn expected_shortfall_asymptotic(margin: MarginSpec, m: f64, s: f64) -> Result<f64> {
    let tail = margin.tail_integral(s);
    if tail.is_infinite() {
        return Err(Error::DivergentTail);
    }
    if s >= margin.upper_endpoint() {
        return Ok(0.0);
    }
    Ok(tail / (1.0 - margin.cdf(s)) / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;
    use crate::grid::Grid;
    use crate::processes::{sample_gpp, sample_pareto_process, transform_margins, MixingDf};
    use crate::stream::RandomStream;

    #[test]
    fn excess_examples() {
        let g = Grid::new(1000).unwrap();
        let low = GridFunction::constant(g, 0.2).unwrap();
        assert_eq!(excess_integral(&low, 0.5), 0.0);
        let high = GridFunction::constant(g, 1.5).unwrap();
        assert!((excess_integral(&high, 0.5) - 1.0).abs() < 1e-12);
        let ramp = GridFunction::from_fn(g, |t| t).unwrap();
        assert!((excess_integral(&ramp, 0.5) - 0.125).abs() < 1e-3);
    }

    #[test]
    fn asymptotic_leading_term() {
        let u = MarginSpec::UniformOn01;
        assert!((expected_shortfall_asymptotic(u, 1.0, 0.9).unwrap() - 0.05).abs() < 1e-12);
        assert!((expected_shortfall_asymptotic(u, 4.0, 0.9).unwrap() - 0.0125).abs() < 1e-12);
        assert_eq!(expected_shortfall_asymptotic(u, 4.0, 1.0).unwrap(), 0.0);
        assert_eq!(expected_shortfall_asymptotic(MarginSpec::StdParetoTail, 1.0, 5.0), Err(Error::DivergentTail));
    }

    #[test]
    fn exact_formula_complete_dependence() {
        let s = 0.8;
        let p = MCEstimate::exact(s);
        let es = expected_shortfall_exact(MarginSpec::UniformOn01, p, s).unwrap();
        assert!((es.mean - (1.0 - s) / 2.0).abs() < 1e-12);
        assert_eq!(expected_shortfall_exact(MarginSpec::StdParetoTail, p, 3.0), Err(Error::DivergentTail));
        assert!(expected_shortfall_exact(MarginSpec::UniformOn01, MCEstimate::exact(1.0), s).is_err());
    }

    #[test]
    fn empirical_matches_exact_and_asymptotic() {
        let g = Grid::new(50).unwrap();
        let stream = RandomStream::new(17);
        let gpp = sample_gpp(&GeneratorSpec::Constant, -10.0, g, 100_000, stream).unwrap();
        let uni = transform_margins(&gpp, MarginSpec::UniformOn01).unwrap();
        let s = 0.95;
        let emp = expected_shortfall_empirical(&uni, s, 100).unwrap();
        let sup = sup_below_probability(&uni, s).unwrap();
        let exact = expected_shortfall_exact(MarginSpec::UniformOn01, sup, s).unwrap();
        assert!((emp.mean - exact.mean).abs() < 4.0 * emp.combined_se(&exact));
        assert!((emp.mean - 0.025).abs() < 4.0 * emp.std_error);
        assert!(expected_shortfall_empirical(&uni, 1.0, 100).is_err());
    }

    #[test]
    fn conditioned_ensembles_rejected() {
        let g = Grid::new(10).unwrap();
        let spec = GeneratorSpec::moving_triangular(0.25).unwrap();
        let ens = sample_pareto_process(&spec, MixingDf::Uniform01, -1.0, Some(0.1), g, 10, RandomStream::new(1)).unwrap();
        assert!(expected_shortfall_empirical(&ens, -0.01, 1).is_err());
    }
}
