//! Univariate marginal distribution functions with closed-form tail integrals.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginSpec {
    /// `F(x) = x` on `[0, 1]`.
    UniformOn01,
    /// `F(x) = e^x` on `x <= 0`, the margin of a standard max-stable process.
    NegExponential,
    /// `F(x) = 1 - 1/x` on `x >= 1`. A generalized Pareto process `Z / U`
    /// with generator bound `m` has this margin above `m`.
    StdParetoTail,
    /// `F(x) = 1 + x` on `[-1, 0]`, the upper tail of a standard GPP `V`.
    StdGppTail,
}

impl MarginSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MarginSpec::UniformOn01 => "uniform",
            MarginSpec::NegExponential => "neg_exponential",
            MarginSpec::StdParetoTail => "pareto",
            MarginSpec::StdGppTail => "gpp_tail",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(MarginSpec::UniformOn01),
            "neg_exponential" => Ok(MarginSpec::NegExponential),
            "pareto" => Ok(MarginSpec::StdParetoTail),
            "gpp_tail" => Ok(MarginSpec::StdGppTail),
            other => Err(Error::Parse(format!("unknown margin '{other}'"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginSpec::UniformOn01 => x.clamp(0.0, 1.0),
            MarginSpec::NegExponential => {
                if x >= 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            MarginSpec::StdParetoTail => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0 - 1.0 / x
                }
            }
            MarginSpec::StdGppTail => (1.0 + x).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileUndefined(q));
        }
        match self {
            MarginSpec::UniformOn01 => Ok(q),
            MarginSpec::NegExponential if q > 0.0 => Ok(q.ln()),
            MarginSpec::StdParetoTail if q < 1.0 => Ok(1.0 / (1.0 - q)),
            MarginSpec::StdGppTail => Ok(q - 1.0),
            _ => Err(Error::QuantileUndefined(q)),
        }
    }

    /// `omega(F) = sup{x : F(x) < 1}`.
    pub fn upper_endpoint(&self) -> f64 {
        match self {
            MarginSpec::UniformOn01 => 1.0,
            MarginSpec::NegExponential | MarginSpec::StdGppTail => 0.0,
            MarginSpec::StdParetoTail => f64::INFINITY,
        }
    }

    /// `int_s^omega(F) (1 - F(x)) dx`; `+inf` for the Pareto tail.
    pub fn tail_integral(&self, s: f64) -> f64 {
        match self {
            MarginSpec::UniformOn01 => {
                if s >= 1.0 {
                    0.0
                } else if s <= 0.0 {
                    0.5 - s
                } else {
                    0.5 * (1.0 - s) * (1.0 - s)
                }
            }
            MarginSpec::NegExponential => {
                if s >= 0.0 {
                    0.0
                } else {
                    s.exp_m1() - s
                }
            }
            MarginSpec::StdParetoTail => f64::INFINITY,
            MarginSpec::StdGppTail => {
                if s >= 0.0 {
                    0.0
                } else if s <= -1.0 {
                    -0.5 - s
                } else {
                    0.5 * s * s
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [MarginSpec; 4] = [
        MarginSpec::UniformOn01,
        MarginSpec::NegExponential,
        MarginSpec::StdParetoTail,
        MarginSpec::StdGppTail,
    ];

    /// Midpoint rule on `[s, hi]`, independent of the closed forms.
    fn tail_by_quadrature(m: MarginSpec, s: f64, hi: f64) -> f64 {
        let n = 200_000;
        let h = (hi - s) / n as f64;
        (0..n).map(|i| 1.0 - m.cdf(s + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn quantile_inverts_cdf_on_support() {
        let cases = [
            (MarginSpec::UniformOn01, vec![0.0, 0.3, 0.99]),
            (MarginSpec::NegExponential, vec![-5.0, -0.2, -1e-3]),
            (MarginSpec::StdParetoTail, vec![1.5, 10.0, 1e3]),
            (MarginSpec::StdGppTail, vec![-0.9, -0.25, -1e-3]),
        ];
        for (m, xs) in cases {
            for x in xs {
                let back = m.quantile(m.cdf(x)).unwrap();
                assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "{m:?} {x} -> {back}");
            }
        }
    }

    #[test]
    fn undefined_quantiles() {
        assert!(MarginSpec::NegExponential.quantile(0.0).is_err());
        assert!(MarginSpec::StdParetoTail.quantile(1.0).is_err());
        assert!(MarginSpec::UniformOn01.quantile(1.2).is_err());
    }

    #[test]
    fn tail_integrals_match_quadrature() {
        for (m, s, hi) in [
            (MarginSpec::UniformOn01, 0.9, 1.0),
            (MarginSpec::UniformOn01, -0.5, 1.0),
            (MarginSpec::NegExponential, -2.0, 0.0),
            (MarginSpec::StdGppTail, -0.3, 0.0),
            (MarginSpec::StdGppTail, -1.5, 0.0),
        ] {
            let exact = m.tail_integral(s);
            let quad = tail_by_quadrature(m, s, hi);
            assert!((exact - quad).abs() < 1e-8, "{m:?} at {s}: {exact} vs {quad}");
        }
        assert!(MarginSpec::StdParetoTail.tail_integral(5.0).is_infinite());
        for m in ALL {
            if m.upper_endpoint().is_finite() {
                assert_eq!(m.tail_integral(m.upper_endpoint()), 0.0);
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for m in ALL {
            assert_eq!(MarginSpec::from_name(m.name()).unwrap(), m);
        }
        assert!(MarginSpec::from_name("gumbel").is_err());
    }
}
