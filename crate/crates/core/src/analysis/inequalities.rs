//! Numeric checks of the auxiliary probabilistic inequalities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{input, Result};
use crate::priors::{normal_cdf, normal_quantile};
use crate::rng::KeyedStream;

/// Nonnegative random variable with finitely many atoms, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    /// `(value, probability)` pairs.
    pub atoms: Vec<(BigRational, BigRational)>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return input("distribution needs at least one atom");
        }
        if atoms
            .iter()
            .any(|(v, p)| v.is_negative() || p.is_negative())
        {
            return input("values and probabilities must be nonnegative");
        }
        let total: BigRational = atoms.iter().map(|(_, p)| p.clone()).sum();
        if total != BigRational::one() {
            return input(format!("probabilities sum to {total}, not 1"));
        }
        Ok(FiniteDistribution { atoms })
    }

    /// Builds from small integer ratios `(value_num, value_den, weight)`;
    /// weights are normalized.
    pub fn from_weights(atoms: &[(i64, i64, u64)]) -> Result<Self> {
        let total: u64 = atoms.iter().map(|a| a.2).sum();
        if total == 0 {
            return input("weights must not all vanish");
        }
        let atoms = atoms
            .iter()
            .map(|&(n, d, w)| {
                if d == 0 {
                    return input("zero denominator");
                }
                Ok((
                    BigRational::new(BigInt::from(n), BigInt::from(d)),
                    BigRational::new(BigInt::from(w), BigInt::from(total)),
                ))
            })
            .collect::<Result<_>>()?;
        Self::new(atoms)
    }

    /// Random distribution with 1 to 8 atoms, values `a/b` with `a < 40`,
    /// `b <= 6`, and integer weights in `1..=10`. The first atom is positive,
    /// so the second moment never vanishes.
    pub fn random(stream: &mut KeyedStream) -> Self {
        let mut draw = |n: u64| (stream.next_uniform() * n as f64) as u64;
        let atoms = 1 + draw(8);
        let spec: Vec<(i64, i64, u64)> = (0..atoms)
            .map(|i| {
                let a = if i == 0 { 1 + draw(39) } else { draw(40) };
                (a as i64, 1 + draw(6) as i64, 1 + draw(10))
            })
            .collect();
        Self::from_weights(&spec).expect("weights are positive")
    }

    pub fn moment(&self, k: u32) -> BigRational {
        self.atoms
            .iter()
            .map(|(v, p)| num_traits::pow(v.clone(), k as usize) * p)
            .sum()
    }
}

/// `P(X > sigma E[X]) - (1 - sigma)^2 E[X]^2 / E[X^2]`, exactly.
pub fn verify_paley_zygmund(dist: &FiniteDistribution, sigma: &BigRational) -> Result<BigRational> {
    if sigma.is_negative() || *sigma > BigRational::one() {
        return input("sigma must lie in [0, 1]");
    }
    let m1 = dist.moment(1);
    let m2 = dist.moment(2);
    if m2.is_zero() {
        return input("the distribution is the point mass at zero");
    }
    let level = sigma * &m1;
    let tail: BigRational = dist
        .atoms
        .iter()
        .filter(|(v, _)| *v > level)
        .map(|(_, p)| p.clone())
        .sum();
    let one_minus = BigRational::one() - sigma;
    Ok(tail - &one_minus * &one_minus * &m1 * &m1 / m2)
}

/// `E[X^sigma]` for `X ~ Binomial(n, rho)` by exact pmf summation in `f64`.
pub fn binomial_moment(n: u32, rho: f64, sigma: f64) -> Result<f64> {
    if n == 0 || n > 64 {
        return input("n must lie in 1..=64");
    }
    if !(rho > 0.0 && rho < 1.0) {
        return input("rho must lie in (0, 1)");
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return input("sigma must be positive");
    }
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
        }
        let pmf = binom * rho.powi(k as i32) * (1.0 - rho).powi((n - k) as i32);
        total += pmf * (k as f64).powf(sigma);
    }
    Ok(total)
}

/// `E[X^sigma] / max(n rho, (n rho)^sigma)` for `X ~ Binomial(n, rho)`.
pub fn verify_binomial_bound(n: u32, rho: f64, sigma: f64) -> Result<f64> {
    let mean = n as f64 * rho;
    Ok(binomial_moment(n, rho, sigma)? / mean.max(mean.powf(sigma)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGaussianResult {
    pub n: u64,
    pub trials: usize,
    /// Fraction of trials with `max_i |X_i| >= sqrt(ln n)`.
    pub fraction: f64,
    pub std_error: f64,
}

/// `P(max_i |X_i| >= sqrt(ln n))` for `n` i.i.d. standard normals.
pub fn sup_gaussian_oracle(n: u64) -> f64 {
    let c = (n as f64).ln().sqrt();
    let inside = 2.0 * normal_cdf(c) - 1.0;
    1.0 - inside.powf(n as f64)
}

/// Monte Carlo frequency of `max_i |X_i| >= sqrt(ln n)`.
pub fn verify_sup_gaussian(n: u64, trials: usize, seed: u64) -> Result<SupGaussianResult> {
    if n < 3 {
        return input("n must be at least 3");
    }
    if trials == 0 {
        return input("at least one trial is required");
    }
    let threshold = (n as f64).ln().sqrt();
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut stream = KeyedStream::new(seed, trial as u64);
            (0..n).any(|_| normal_quantile(stream.next_uniform()).abs() >= threshold) as usize
        })
        .sum();
    let fraction = hits as f64 / trials as f64;
    Ok(SupGaussianResult {
        n,
        trials,
        fraction,
        std_error: (fraction * (1.0 - fraction) / trials as f64).sqrt(),
    })
}
