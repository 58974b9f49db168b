//! Index bookkeeping over `Z^d`: basis indices, sup-norm shells and lattice
//! weight sums.
//!
//! Shifts are enumerated by nondecreasing sup-norm; inside a shell the order
//! is lexicographic, which makes the enumeration a canonical bijection.

use crate::error::{input, require_finite, Error, Result};

/// Sup-norm of an integer vector.
pub fn sup_norm(m: &[i64]) -> u64 {
    m.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

/// Index `(j, t, m)` of one wavelet / coefficient.
///
/// The type `t` is a bit mask over coordinates: bit `k` set means the `k`-th
/// factor is the wavelet function (`M`), cleared means the scaling function
/// (`F`). Level 0 only carries the all-`F` type, levels `j >= 1` carry every
/// type except all-`F`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub j: u32,
    pub t: u32,
    pub m: Vec<i64>,
}

impl BasisIndex {
    pub fn new(j: u32, t: u32, m: Vec<i64>) -> Result<Self> {
        let idx = BasisIndex { j, t, m };
        idx.validate(idx.m.len())?;
        Ok(idx)
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.m.len() != d || d == 0 {
            return input(format!(
                "shift has length {} but dimension is {d}",
                self.m.len()
            ));
        }
        if !type_is_valid(self.j, self.t, d) {
            return input(format!(
                "type {} is not admissible at level {} in dimension {d}",
                self.t, self.j
            ));
        }
        Ok(())
    }

    /// Whether coordinate `k` uses the wavelet function.
    pub fn is_wavelet(&self, k: usize) -> bool {
        self.t >> k & 1 == 1
    }
}

/// Whether `t` belongs to `T_j` in dimension `d`.
pub fn type_is_valid(j: u32, t: u32, d: usize) -> bool {
    if d == 0 || d > 16 {
        return false;
    }
    let all = 1u32 << d;
    if j == 0 {
        t == 0
    } else {
        t >= 1 && t < all
    }
}

/// The type set `T_j` as bit masks.
pub fn types_at(j: u32, d: usize) -> Vec<u32> {
    if j == 0 {
        vec![0]
    } else {
        (1..(1u32 << d)).collect()
    }
}

/// Render a type mask as an `F`/`M` word, coordinate 0 first.
pub fn type_label(t: u32, d: usize) -> String {
    (0..d)
        .map(|k| if t >> k & 1 == 1 { 'M' } else { 'F' })
        .collect()
}

fn checked_pow(base: u128, exp: usize) -> Result<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base)
            .ok_or(Error::Overflow("lattice point count"))?;
    }
    Ok(acc)
}

/// `#{m in Z^d : |m|_inf <= 2^j} = (2^{j+1} + 1)^d`.
pub fn points_up_to(j: u32, d: usize) -> Result<u128> {
    if d == 0 {
        return input("dimension must be at least 1");
    }
    let side = 1u128
        .checked_shl(j + 1)
        .filter(|s| s.leading_zeros() > 0)
        .ok_or(Error::Overflow("lattice point count"))?
        + 1;
    checked_pow(side, d)
}

/// `#{m in Z^d : 2^j < |m|_inf <= 2^{j+1}}`.
pub fn shell_count(j: u32, d: usize) -> Result<u128> {
    let outer = points_up_to(j + 1, d)?;
    let inner = points_up_to(j, d)?;
    Ok(outer - inner)
}

/// Number of points with `|m|_inf <= cap`, i.e. `(2 cap + 1)^d`.
pub fn cube_count(d: usize, cap: u64) -> Result<u128> {
    let side = (cap as u128)
        .checked_mul(2)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("cube count"))?;
    checked_pow(side, d)
}

/// Counts `M_j` and `N_j` for `j = 0..=j_max` in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellTable {
    pub d: usize,
    pub points: Vec<u128>,
    pub shells: Vec<u128>,
}

impl ShellTable {
    pub fn new(d: usize, j_max: u32) -> Result<Self> {
        let mut points = Vec::with_capacity(j_max as usize + 1);
        let mut shells = Vec::with_capacity(j_max as usize + 1);
        for j in 0..=j_max {
            points.push(points_up_to(j, d)?);
            shells.push(shell_count(j, d)?);
        }
        Ok(ShellTable { d, points, shells })
    }

    pub fn m(&self, j: u32) -> u128 {
        self.points[j as usize]
    }

    pub fn n(&self, j: u32) -> u128 {
        self.shells[j as usize]
    }
}

/// All points of the cube `|m|_inf <= cap` in lexicographic order.
pub fn cube_lexicographic(d: usize, cap: u64) -> Vec<Vec<i64>> {
    let cap = cap as i64;
    let side = (2 * cap + 1) as usize;
    let total = side.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![-cap; d];
    for _ in 0..total {
        out.push(cur.clone());
        for k in (0..d).rev() {
            if cur[k] < cap {
                cur[k] += 1;
                break;
            }
            cur[k] = -cap;
        }
    }
    out
}

/// Enumeration of `{m : |m|_inf <= cap}` with nondecreasing sup-norm,
/// lexicographic inside each shell. The origin comes first.
pub fn enumerate_shifts(d: usize, cap: u64) -> Vec<Vec<i64>> {
    let mut pts = cube_lexicographic(d, cap);
    // stable sort keeps the lexicographic order inside a shell
    pts.sort_by_key(|m| sup_norm(m));
    pts
}

/// Lexicographic iterator over the integer box `lo <= m <= hi`.
#[derive(Debug, Clone)]
pub struct BoxIter {
    lo: Vec<i64>,
    hi: Vec<i64>,
    next: Option<Vec<i64>>,
}

impl BoxIter {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        let empty = lo.iter().zip(&hi).any(|(a, b)| a > b);
        let next = if empty { None } else { Some(lo.clone()) };
        BoxIter { lo, hi, next }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for k in (0..succ.len()).rev() {
            if succ[k] < self.hi[k] {
                succ[k] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ[k] = self.lo[k];
        }
        Some(current)
    }
}

/// Value of a lattice weight sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSum {
    Finite(f64),
    Divergent,
}

impl WeightSum {
    pub fn value(self) -> Option<f64> {
        match self {
            WeightSum::Finite(v) => Some(v),
            WeightSum::Divergent => None,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shell weight `(2l+1)^d - (2l-1)^d` written as `sum_n c_n u^n` with
/// `u = 1 + l/a`, so that each summand of the shell series is a pure power.
fn shell_power_coefficients(d: usize, a: f64) -> Vec<f64> {
    // (2l+1)^d - (2l-1)^d = sum_k C(d,k) 2^k l^k (1 - (-1)^{d-k})
    let mut by_l = vec![0.0; d];
    for (k, slot) in by_l.iter_mut().enumerate() {
        if (d - k) % 2 == 1 {
            *slot = 2.0 * binomial(d, k) * 2f64.powi(k as i32);
        }
    }
    // l^k = a^k (u - 1)^k
    let mut by_u = vec![0.0; d];
    for (k, &b) in by_l.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let ak = a.powi(k as i32);
        for (i, slot) in by_u.iter_mut().enumerate().take(k + 1) {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            *slot += b * ak * binomial(k, i) * sign;
        }
    }
    by_u
}

/// Falling factorial `g (g-1) ... (g-r+1)`.
fn falling(g: f64, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (g - i as f64))
}

/// `sum_{m in Z^d} (1 + |m|_inf / a)^e`.
///
/// Finite iff `e < -d`. Shells are summed exactly up to a cutoff; the tail is
/// the Euler-Maclaurin expansion of the (closed form) integral of the shell
/// series, whose remainder is far below `1e-9` relative at the cutoff used.
pub fn weight_sum(d: usize, a: f64, e: f64) -> Result<WeightSum> {
    require_finite("scale a", a)?;
    require_finite("exponent e", e)?;
    if d == 0 {
        return input("dimension must be at least 1");
    }
    if a < 1.0 {
        return input(format!("scale a must be >= 1, got {a}"));
    }
    if e >= -(d as f64) {
        return Ok(WeightSum::Divergent);
    }
    let cutoff = (64.0 * a).max(2048.0).ceil() as u64;
    let coeffs = shell_power_coefficients(d, a);

    let mut sum = Neumaier::default();
    sum.add(1.0);
    for l in 1..cutoff {
        let lf = l as f64;
        let shell = (2.0 * lf + 1.0).powi(d as i32) - (2.0 * lf - 1.0).powi(d as i32);
        sum.add(shell * (1.0 + lf / a).powf(e));
    }

    // tail sum_{l >= L} g(l) with g(l) = sum_n c_n u^{n+e}, u = 1 + l/a
    let u = 1.0 + cutoff as f64 / a;
    let mut tail = 0.0;
    for (n, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let g = n as f64 + e;
        let integral = -a * u.powf(g + 1.0) / (g + 1.0);
        let value = u.powf(g);
        let d1 = falling(g, 1) * u.powf(g - 1.0) / a;
        let d3 = falling(g, 3) * u.powf(g - 3.0) / a.powi(3);
        let d5 = falling(g, 5) * u.powf(g - 5.0) / a.powi(5);
        tail += c * (integral + value / 2.0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0);
    }
    sum.add(tail);
    Ok(WeightSum::Finite(sum.total()))
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
