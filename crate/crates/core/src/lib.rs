//! Random wavelet series priors on `R^d`.
//!
//! Samples Besov and Bernoulli-Besov sequence priors, evaluates weighted
//! Besov sequence norms and wavelet syntheses, decides the regularity
//! conditions under which samples converge, and runs Monte Carlo experiments
//! that probe those conditions at finite truncation.
//!
//! ```
//! use rws_core::{sample_field, seq_norm, CapPolicy, PriorSpec, SpaceSpec, TemplateDistribution, Truncation};
//!
//! let prior = PriorSpec::besov(-1.0, -1.0, -1.0, 0.0, TemplateDistribution::Gaussian);
//! let truncation = Truncation::new(1, 6, CapPolicy::Default).unwrap();
//! let field = sample_field(&prior, &truncation, 7).unwrap();
//! let norm = seq_norm(&field, &SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap()).unwrap();
//! assert!(norm.total.is_finite());
//! ```

pub mod analysis;
pub mod conditions;
mod error;
pub mod lattice;
pub mod manifest;
pub mod priors;
pub mod rng;
pub mod seqspace;
pub mod wavelets;

pub use conditions::{
    min_k, property_a, property_a_dprime, property_a_prime, property_b, property_b_prime,
    PropertyVerdict, Real,
};
pub use error::{Error, Result};
pub use lattice::{
    enumerate_shifts, points_up_to, shell_count, weight_sum, BasisIndex, ShellTable, WeightSum,
};
pub use manifest::Manifest;
pub use priors::{
    bernoulli_prob, deterministic_coeff, sample_draws, sample_field, template_moment_ok, Draws,
    Family, MomentCondition, PriorSpec, TemplateDistribution,
};
pub use seqspace::{
    level_norm, seq_norm, weight_shift, weight_w_sigma, CapPolicy, CoefficientField, Exponent,
    NormReport, SpaceSpec, Truncation,
};
pub use wavelets::{cascade, scaling_filter, FilterPair, WaveletSystem};

/// Parses a real number written as a decimal or as a ratio `a/b`.
pub fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Input(format!("'{text}' is not a real number"));
    let value = match text.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            n / d
        }
        None => match text {
            "inf" | "+inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => text.parse().map_err(|_| bad())?,
        },
    };
    if value.is_nan() {
        return Err(bad());
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::parse_real;

    #[test]
    fn parses_reals() {
        assert_eq!(parse_real("-1/2").unwrap(), -0.5);
        assert_eq!(parse_real(" 0.25 ").unwrap(), 0.25);
        assert_eq!(parse_real("inf").unwrap(), f64::INFINITY);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("NaN").is_err());
    }
}
