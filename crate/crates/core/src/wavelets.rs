//! Compactly supported Daubechies wavelet systems.
//!
//! Filters come from spectral factorization of the Daubechies polynomial,
//! keeping the zeros inside the unit circle (extremal phase). The scaling
//! function is tabulated on the dyadic grid `i / 2^L` by the cascade
//! algorithm, started from the eigenvector of the integer-grid refinement
//! matrix for eigenvalue 1. Off-grid values are linear interpolations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{input, require_finite, Error, Result};
use crate::lattice::{BasisIndex, BoxIter, Neumaier};
use crate::seqspace::CoefficientField;

pub const MAX_ORDER: usize = 12;

/// Refinement filters of Daubechies-`N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub order: usize,
    /// Scaling coefficients, `sum h = sqrt 2`.
    pub h: Vec<f64>,
    /// Wavelet coefficients `g_k = (-1)^k h_{2N-1-k}`.
    pub g: Vec<f64>,
}

impl FilterPair {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// `max_n |sum_k h_k h_{k+2n} - delta_{n,0}|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let len = self.h.len();
        let mut worst: f64 = 0.0;
        for shift in (0..len).step_by(2) {
            let s: f64 = (0..len - shift)
                .map(|k| self.h[k] * self.h[k + shift])
                .sum();
            let target = if shift == 0 { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
        worst
    }

    /// `|sum h - sqrt 2|`.
    pub fn sum_residual(&self) -> f64 {
        (self.h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // Horner with derivative; coefficients in ascending order
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a real polynomial given by ascending coefficients.
fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots: Vec<Complex64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = eval_poly(coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-17 * r.norm().max(1.0) {
                break;
            }
        }
        if !r.re.is_finite() || !r.im.is_finite() {
            return Err(Error::Numeric("polynomial root finding diverged".into()));
        }
    }
    Ok(roots)
}

/// Extremal-phase Daubechies-`N` filters, `1 <= N <= 12`.
pub fn scaling_filter(order: usize) -> Result<FilterPair> {
    if !(1..=MAX_ORDER).contains(&order) {
        return input(format!(
            "Daubechies order must be in 1..={MAX_ORDER}, got {order}"
        ));
    }
    // P(y) = sum_{k<N} C(N-1+k, k) y^k with y = sin^2(w/2)
    let p: Vec<f64> = (0..order).map(|k| binomial(order - 1 + k, k)).collect();
    let y_roots = poly_roots(&p)?;

    // y = (2 - z - 1/z)/4  <=>  z^2 + (4y - 2) z + 1 = 0; keep |z| < 1
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mul = |poly: &mut Vec<Complex64>, root: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * root;
        }
        *poly = next;
    };
    for y in y_roots {
        let b = 4.0 * y - 2.0;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (-b + disc) / 2.0;
        let z2 = (-b - disc) / 2.0;
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        mul(&mut poly, z);
    }
    for _ in 0..order {
        mul(&mut poly, Complex64::new(-1.0, 0.0));
    }
    // ascending coefficients of prod (z - z_i)(z + 1)^N; h is the reversal
    let mut h: Vec<f64> = poly.iter().rev().map(|c| c.re).collect();
    let total: f64 = h.iter().sum();
    let scale = std::f64::consts::SQRT_2 / total;
    for c in h.iter_mut() {
        *c *= scale;
    }
    let len = h.len();
    let g = (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * h[len - 1 - k]
        })
        .collect();
    Ok(FilterPair { order, h, g })
}

/// Default smoothness order `k` attributed to Daubechies-`N`.
///
/// Uses the asymptotic Hoelder rate `0.2075 N` rounded down, which gives 2
/// for `N = 10`. This is metadata only; nothing here proves regularity.
pub fn default_smoothness(order: usize) -> u32 {
    (0.2075 * order as f64).floor() as u32
}

/// Dyadic tables of the scaling and wavelet functions plus tensor metadata.
#[derive(Debug, Clone)]
pub struct WaveletSystem {
    pub filters: FilterPair,
    pub depth: u32,
    /// `psi_F(i / 2^depth)` for `i = 0..=(2N-1) 2^depth`.
    pub phi: Vec<f64>,
    /// `psi_M(i / 2^depth)` on the same grid.
    pub psi: Vec<f64>,
    pub d: usize,
    pub k_reg: u32,
}

fn integer_samples(filters: &FilterPair) -> Result<Vec<f64>> {
    let len = filters.len();
    // unknowns phi(0..=len-2); phi(len-1) = 0
    let n = len - 1;
    let s2 = std::f64::consts::SQRT_2;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            let k = 2 * row as i64 - col as i64;
            let hk = if (0..len as i64).contains(&k) {
                filters.h[k as usize]
            } else {
                0.0
            };
            a[(row, col)] = s2 * hk - if row == col { 1.0 } else { 0.0 };
        }
    }
    // columns of the refinement matrix sum to one, so one row is redundant
    let mut rhs = DVector::<f64>::zeros(n);
    for col in 0..n {
        a[(0, col)] = 1.0;
    }
    rhs[0] = 1.0;
    let solution = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular cascade initialization".into()))?;
    let residual = (&a * &solution - &rhs).amax();
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::Numeric(format!(
            "cascade initialization did not converge (residual {residual:e})"
        )));
    }
    let mut out: Vec<f64> = solution.iter().copied().collect();
    out.push(0.0);
    Ok(out)
}

fn refine(coeffs: &[f64], coarse: &[f64], coarse_level: u32, support: usize) -> Vec<f64> {
    let fine_level = coarse_level + 1;
    let count = support * (1usize << fine_level) + 1;
    let step = 1usize << coarse_level;
    let s2 = std::f64::consts::SQRT_2;
    (0..count)
        .map(|i| {
            let mut acc = 0.0;
            for (k, &c) in coeffs.iter().enumerate() {
                let off = k * step;
                if off <= i {
                    if let Some(v) = coarse.get(i - off) {
                        acc += c * v;
                    }
                }
            }
            s2 * acc
        })
        .collect()
}

/// Cascade tables at grid spacing `2^-depth`, `depth >= 4`.
pub fn cascade(filters: &FilterPair, depth: u32) -> Result<WaveletSystem> {
    if depth < 4 {
        return input(format!("cascade depth must be at least 4, got {depth}"));
    }
    if depth > 24 {
        return input(format!("cascade depth {depth} is too large"));
    }
    let support = filters.len() - 1;
    let mut table = integer_samples(filters)?;
    for level in 0..depth - 1 {
        table = refine(&filters.h, &table, level, support);
    }
    let psi = refine(&filters.g, &table, depth - 1, support);
    let phi = refine(&filters.h, &table, depth - 1, support);
    if phi.iter().chain(psi.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("cascade produced non-finite values".into()));
    }
    Ok(WaveletSystem {
        k_reg: default_smoothness(filters.order),
        filters: filters.clone(),
        depth,
        phi,
        psi,
        d: 1,
    })
}

impl WaveletSystem {
    /// Daubechies-`order` system at the given depth and tensor dimension.
    pub fn daubechies(order: usize, depth: u32, d: usize) -> Result<Self> {
        if d == 0 {
            return input("dimension must be at least 1");
        }
        let mut sys = cascade(&scaling_filter(order)?, depth)?;
        sys.d = d;
        Ok(sys)
    }

    pub fn with_dimension(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.k_reg = k;
        self
    }

    pub fn order(&self) -> usize {
        self.filters.order
    }

    /// Right end of the common support `[0, 2N - 1]`.
    pub fn support(&self) -> f64 {
        (self.filters.len() - 1) as f64
    }

    pub fn spacing(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    /// Linear interpolation between table nodes, except for the Haar
    /// system, which is piecewise constant on dyadic cells and is read as a
    /// right-continuous step function.
    fn lookup(table: &[f64], depth: u32, step: bool, x: f64) -> f64 {
        if x.is_nan() || x < 0.0 {
            return 0.0;
        }
        let pos = x * (depth as f64).exp2();
        let i0 = pos.floor();
        let last = (table.len() - 1) as f64;
        if i0 >= last {
            return if pos == last {
                table[table.len() - 1]
            } else {
                0.0
            };
        }
        let i = i0 as usize;
        let frac = pos - i0;
        if frac == 0.0 || step {
            table[i]
        } else {
            table[i] * (1.0 - frac) + table[i + 1] * frac
        }
    }

    /// Scaling function `psi_F(x)`.
    pub fn scaling(&self, x: f64) -> f64 {
        Self::lookup(&self.phi, self.depth, self.order() == 1, x)
    }

    /// Wavelet function `psi_M(x)`.
    pub fn wavelet(&self, x: f64) -> f64 {
        Self::lookup(&self.psi, self.depth, self.order() == 1, x)
    }

    fn factor(&self, wavelet: bool, x: f64) -> f64 {
        if wavelet {
            self.wavelet(x)
        } else {
            self.scaling(x)
        }
    }

    /// Tensor basis function `Psi_{j,t,m}(x)`.
    pub fn eval_basis(&self, idx: &BasisIndex, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), idx.m.len());
        if idx.j == 0 {
            idx.m
                .iter()
                .zip(x)
                .map(|(&m, &xk)| self.scaling(xk - m as f64))
                .product()
        } else {
            let scale = ((idx.j - 1) as f64).exp2();
            let amp = (((idx.j - 1) as f64) * x.len() as f64 / 2.0).exp2();
            let mut value = amp;
            for (k, (&m, &xk)) in idx.m.iter().zip(x).enumerate() {
                value *= self.factor(idx.is_wavelet(k), scale * xk - m as f64);
                if value == 0.0 {
                    break;
                }
            }
            value
        }
    }

    /// Evaluates `sum a_{j,t,m} Psi_{j,t,m}` at every grid point.
    ///
    /// Only shifts whose support contains the point are visited. Summation
    /// order is fixed (field order) and compensated, so the result does not
    /// depend on how points are distributed across threads.
    pub fn synthesize(&self, field: &CoefficientField, grid: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = field.d();
        for x in grid {
            if x.len() != d {
                return input(format!("grid point of length {} in dimension {d}", x.len()));
            }
            for &c in x {
                require_finite("grid coordinate", c)?;
            }
        }
        let support = self.support();
        Ok(grid
            .par_iter()
            .map(|x| {
                let mut acc = Neumaier::default();
                for level in field.levels() {
                    let scale = if level.j == 0 {
                        1.0
                    } else {
                        ((level.j - 1) as f64).exp2()
                    };
                    // m_k in [scale x_k - support, scale x_k]
                    let mut lo = Vec::with_capacity(d);
                    let mut hi = Vec::with_capacity(d);
                    let cap = level.cap as i64;
                    for &xk in x {
                        lo.push(((scale * xk - support).floor() as i64).max(-cap));
                        hi.push(((scale * xk).ceil() as i64).min(cap));
                    }
                    for m in BoxIter::new(lo, hi) {
                        let a = level.get(&m);
                        if a != 0.0 {
                            let idx = BasisIndex {
                                j: level.j,
                                t: level.t,
                                m,
                            };
                            acc.add(a * self.eval_basis(&idx, x));
                        }
                    }
                }
                acc.total()
            })
            .collect())
    }

    /// Largest `|sum_i (x_i)^l psi_M(x_i) 2^-L|` over `l <= up_to`.
    pub fn check_vanishing_moments(&self, up_to: usize) -> Result<f64> {
        if up_to >= self.order() {
            return input(format!(
                "moment order {up_to} is not guaranteed to vanish for Daubechies-{}",
                self.order()
            ));
        }
        let h = self.spacing();
        let center = self.support() / 2.0;
        let mut worst: f64 = 0.0;
        for l in 0..=up_to {
            let s: Neumaier = self
                .psi
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 * h - center).powi(l as i32) * v * h)
                .collect();
            worst = worst.max(s.total().abs());
        }
        Ok(worst)
    }

    /// Riemann sum of `psi_F` over its support.
    pub fn scaling_integral(&self) -> f64 {
        let h = self.spacing();
        self.phi.iter().map(|v| v * h).collect::<Neumaier>().total()
    }

    /// Quadrature of `<Psi_a, Psi_b>` as a product of one-dimensional
    /// left Riemann sums on a dyadic grid fine enough for both factors.
    pub fn inner_product(&self, a: &BasisIndex, b: &BasisIndex) -> f64 {
        let d = a.m.len();
        let top = a.j.max(b.j).max(1) - 1;
        let h = (-((self.depth + top) as f64)).exp2();
        let mut total = 1.0;
        for k in 0..d {
            let (lo_a, hi_a) = self.factor_support(a, k);
            let (lo_b, hi_b) = self.factor_support(b, k);
            let lo = lo_a.max(lo_b);
            let hi = hi_a.min(hi_b);
            if lo >= hi {
                return 0.0;
            }
            let i0 = (lo / h).floor() as i64;
            let i1 = (hi / h).ceil() as i64;
            let s: Neumaier = (i0..i1)
                .map(|i| {
                    let x = i as f64 * h;
                    self.factor_1d(a, k, x) * self.factor_1d(b, k, x) * h
                })
                .collect();
            total *= s.total();
        }
        total
    }

    fn level_scale(j: u32) -> f64 {
        if j == 0 {
            1.0
        } else {
            ((j - 1) as f64).exp2()
        }
    }

    fn factor_support(&self, idx: &BasisIndex, k: usize) -> (f64, f64) {
        let s = Self::level_scale(idx.j);
        let m = idx.m[k] as f64;
        (m / s, (m + self.support()) / s)
    }

    fn factor_1d(&self, idx: &BasisIndex, k: usize, x: f64) -> f64 {
        let s = Self::level_scale(idx.j);
        let amp = if idx.j == 0 { 1.0 } else { s.sqrt() };
        let wavelet = idx.j > 0 && idx.is_wavelet(k);
        amp * self.factor(wavelet, s * x - idx.m[k] as f64)
    }

    /// `max |<Psi_a, Psi_b> - delta_{a,b}|` over the given pairs.
    pub fn check_orthonormality(&self, pairs: &[(BasisIndex, BasisIndex)]) -> f64 {
        pairs
            .par_iter()
            .map(|(a, b)| {
                let target = if a == b { 1.0 } else { 0.0 };
                (self.inner_product(a, b) - target).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Published extremal-phase coefficients, independent of the factorization.
    const D2: [f64; 4] = [
        0.482_962_913_144_534_1,
        0.836_516_303_737_807_9,
        0.224_143_868_042_013_4,
        -0.129_409_522_551_260_4,
    ];
    const D3: [f64; 6] = [
        0.332_670_552_950_082_6,
        0.806_891_509_311_092_6,
        0.459_877_502_118_491_4,
        -0.135_011_020_010_254_6,
        -0.085_441_273_882_026_7,
        0.035_226_291_885_709_5,
    ];

    #[test]
    fn haar_filter() {
        let f = scaling_filter(1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.h[0] - r).abs() < 1e-15 && (f.h[1] - r).abs() < 1e-15);
        assert_eq!(f.g.len(), 2);
        assert!((f.g[0] - r).abs() < 1e-15 && (f.g[1] + r).abs() < 1e-15);
    }

    #[test]
    fn published_coefficients() {
        let f = scaling_filter(2).unwrap();
        for (a, b) in f.h.iter().zip(D2) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let f = scaling_filter(3).unwrap();
        for (a, b) in f.h.iter().zip(D3) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn filter_invariants_all_orders() {
        for n in 1..=MAX_ORDER {
            let f = scaling_filter(n).unwrap();
            assert_eq!(f.len(), 2 * n);
            assert!(f.sum_residual() < 1e-12, "N={n}: {}", f.sum_residual());
            assert!(
                f.orthonormality_residual() < 1e-10,
                "N={n}: {}",
                f.orthonormality_residual()
            );
            for k in 0..2 * n {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(f.g[k], sign * f.h[2 * n - 1 - k]);
            }
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(scaling_filter(0).is_err());
        assert!(scaling_filter(13).is_err());
        assert!(cascade(&scaling_filter(2).unwrap(), 3).is_err());
    }

    #[test]
    fn haar_tables() {
        let sys = WaveletSystem::daubechies(1, 4, 1).unwrap();
        for i in 0..16 {
            let x = i as f64 / 16.0;
            assert!((sys.scaling(x) - 1.0).abs() < 1e-15, "x={x}");
            let want = if x < 0.5 { 1.0 } else { -1.0 };
            assert!((sys.wavelet(x) - want).abs() < 1e-15, "x={x}");
        }
        assert_eq!(sys.scaling(1.0), 0.0);
        assert_eq!(sys.scaling(-0.1), 0.0);
        assert!((sys.wavelet(0.4999) - 1.0).abs() < 1e-15);
        assert!((sys.wavelet(0.9999) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_consistency() {
        let f = scaling_filter(3).unwrap();
        let coarse = cascade(&f, 9).unwrap();
        let fine = cascade(&f, 10).unwrap();
        for i in (0..fine.phi.len()).step_by(7) {
            let x = i as f64 * fine.spacing();
            let rhs: f64 =
                f.h.iter()
                    .enumerate()
                    .map(|(k, &hk)| hk * coarse.scaling(2.0 * x - k as f64))
                    .sum::<f64>()
                    * std::f64::consts::SQRT_2;
            assert!((fine.scaling(x) - rhs).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn eval_basis_examples() {
        let sys = WaveletSystem::daubechies(1, 10, 1).unwrap();
        let idx = BasisIndex::new(0, 0, vec![0]).unwrap();
        assert!((sys.eval_basis(&idx, &[0.25]) - 1.0).abs() < 1e-15);
        let idx = BasisIndex::new(1, 1, vec![0]).unwrap();
        assert!((sys.eval_basis(&idx, &[0.25]) - 1.0).abs() < 1e-15);
        let sys2 = sys.clone().with_dimension(2);
        let idx = BasisIndex::new(2, 1, vec![0, 0]).unwrap();
        assert!((sys2.eval_basis(&idx, &[0.2, 0.2]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn integral_and_moments() {
        for n in [1, 2, 4] {
            let sys = WaveletSystem::daubechies(n, 10, 1).unwrap();
            assert!((sys.scaling_integral() - 1.0).abs() < 1e-4);
        }
        let haar = WaveletSystem::daubechies(1, 10, 1).unwrap();
        assert!(haar.check_vanishing_moments(0).unwrap() < 1e-12);
        let d2 = WaveletSystem::daubechies(2, 10, 1).unwrap();
        assert!(d2.check_vanishing_moments(1).unwrap() < 1e-4);
        let d4 = WaveletSystem::daubechies(4, 10, 1).unwrap();
        assert!(d4.check_vanishing_moments(3).unwrap() < 1e-4);
        assert!(d4.check_vanishing_moments(4).is_err());
    }

    #[test]
    fn orthonormality_examples() {
        let haar = WaveletSystem::daubechies(1, 10, 1).unwrap();
        let a = BasisIndex::new(1, 1, vec![0]).unwrap();
        let b = BasisIndex::new(1, 1, vec![1]).unwrap();
        assert!(haar.check_orthonormality(&[(a.clone(), a.clone())]) < 1e-12);
        assert!(haar.check_orthonormality(&[(a, b)]) < 1e-12);
        let d2 = WaveletSystem::daubechies(2, 10, 1).unwrap();
        let a = BasisIndex::new(1, 1, vec![0]).unwrap();
        let b = BasisIndex::new(2, 1, vec![0]).unwrap();
        assert!(d2.check_orthonormality(&[(a, b)]) < 1e-3);
    }
}
