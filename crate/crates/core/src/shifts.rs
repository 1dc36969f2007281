//! Backward/forward shifts as composition operators on the discrete measure
//! space: closed-form orbit norms of finite-support vectors, the p-free
//! ratio sequences behind the chaos certificates, and near-zero profiles of
//! the weight.
//!
//! Everything is evaluated at `‖·‖^p` (never the p-th root) so the exact
//! rational backend stays exact.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::density::IndexSet;
use crate::numeric::{log_sum_exp, Rational};
use crate::weights::{Side, WeightSequence};

pub use crate::weights::ShiftKind;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShiftError {
    #[error("support must consist of sorted disjoint intervals")]
    BadSupport,
    #[error("support is empty")]
    EmptySupport,
    #[error("coefficient list length {got} does not match support size {expected}")]
    CoefficientMismatch { expected: u64, got: u64 },
    #[error("denominator Σ|C_j| v_j is zero: support/weight domain mismatch")]
    ZeroDenominator,
    #[error("exact backend unavailable (float-only weight or complex coefficients)")]
    ExactUnavailable,
}

/// A finite set of indices in `ℤ` stored as sorted disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    intervals: Vec<(i64, i64)>,
}

impl Support {
    pub fn intervals(intervals: Vec<(i64, i64)>) -> Result<Self, ShiftError> {
        if intervals.iter().any(|&(lo, hi)| lo > hi)
            || intervals.windows(2).any(|w| w[0].1 >= w[1].0)
        {
            return Err(ShiftError::BadSupport);
        }
        if intervals.is_empty() {
            return Err(ShiftError::EmptySupport);
        }
        Ok(Support { intervals })
    }

    pub fn single(lo: i64, hi: i64) -> Result<Self, ShiftError> {
        Self::intervals(vec![(lo, hi)])
    }

    pub fn points(points: &[i64]) -> Result<Self, ShiftError> {
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(ShiftError::EmptySupport);
        }
        let mut intervals: Vec<(i64, i64)> = Vec::new();
        for p in sorted {
            match intervals.last_mut() {
                Some(last) if last.1 + 1 == p => last.1 = p,
                _ => intervals.push((p, p)),
            }
        }
        Ok(Support { intervals })
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn len(&self) -> u64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as u64)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty supports
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    pub fn min(&self) -> i64 {
        self.intervals[0].0
    }

    pub fn max(&self) -> i64 {
        self.intervals[self.intervals.len() - 1].1
    }
}

/// Coefficients aligned with the support enumerated in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Ones,
    PerIndex(Vec<Complex64>),
}

impl Coefficients {
    fn check_len(&self, support: &Support) -> Result<(), ShiftError> {
        if let Coefficients::PerIndex(v) = self {
            let expected = support.len();
            if v.len() as u64 != expected {
                return Err(ShiftError::CoefficientMismatch {
                    expected,
                    got: v.len() as u64,
                });
            }
            if v.iter().any(|c| c.norm_sqr() == 0.0) {
                return Err(ShiftError::BadSupport);
            }
        }
        Ok(())
    }

    /// Only the moduli enter the ratio; complex phases are discarded here.
    /// A common magnitude cancels from every ratio, so uniform coefficient
    /// lists collapse to the accelerated path.
    fn magnitudes_f64(&self) -> MagView<f64> {
        match self {
            Coefficients::Ones => MagView::Uniform,
            Coefficients::PerIndex(v) => {
                let mags: Vec<f64> = v.iter().map(|c| c.norm()).collect();
                if mags.windows(2).all(|w| w[0] == w[1]) {
                    MagView::Uniform
                } else {
                    MagView::PerIndex(mags)
                }
            }
        }
    }

    /// Exact magnitudes need real coefficients (any finite `f64` is an exact
    /// binary rational).
    fn magnitudes_exact(&self) -> Result<MagView<Rational>, ShiftError> {
        match self {
            Coefficients::Ones => Ok(MagView::Uniform),
            Coefficients::PerIndex(v) => {
                if v.iter().any(|c| c.im != 0.0) {
                    return Err(ShiftError::ExactUnavailable);
                }
                let mags: Vec<Rational> = v
                    .iter()
                    .map(|c| Rational::from_float(c.re.abs()).expect("finite coefficient"))
                    .collect();
                if mags.windows(2).all(|w| w[0] == w[1]) {
                    Ok(MagView::Uniform)
                } else {
                    Ok(MagView::PerIndex(mags))
                }
            }
        }
    }
}

enum MagView<T> {
    Uniform,
    PerIndex(Vec<T>),
}

// ---------------------------------------------------------------------------
// Simple functions and shift operators
// ---------------------------------------------------------------------------

/// Finite-support vector: each support index `j` is the singleton `{j}` with
/// mass `v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    coeffs: BTreeMap<i64, Complex64>,
}

impl SimpleFunction {
    pub fn new(pairs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        SimpleFunction {
            coeffs: pairs
                .into_iter()
                .filter(|(_, c)| c.norm_sqr() != 0.0)
                .collect(),
        }
    }

    pub fn indicator(j: i64) -> Self {
        Self::new([(j, Complex64::one())])
    }

    /// Indicator of an integer interval with unit coefficients.
    pub fn interval(lo: i64, hi: i64) -> Self {
        Self::new((lo..=hi).map(|j| (j, Complex64::one())))
    }

    pub fn zero() -> Self {
        SimpleFunction {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        self.coeffs.get(&j).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&j, &c)| (j, c))
    }
}

/// A backward or forward shift acting on the weighted space.
#[derive(Debug, Clone)]
pub struct ShiftOperator {
    pub kind: ShiftKind,
    pub weight: WeightSequence,
}

impl ShiftOperator {
    pub fn new(kind: ShiftKind, weight: WeightSequence) -> Self {
        ShiftOperator { kind, weight }
    }

    pub fn side(&self) -> Side {
        self.weight.side()
    }

    /// Index whose mass is pulled to `j` after `n` steps: `j - n` for the
    /// backward shift, `j + n` for the forward shift.
    pub fn preimage_index(&self, j: i64, n: u64) -> i64 {
        let shifted = match self.kind {
            ShiftKind::Backward => j as i128 - n as i128,
            ShiftKind::Forward => j as i128 + n as i128,
        };
        i64::try_from(shifted).expect("shifted index overflows i64")
    }

    /// `μ(φ^{-n}({j}))`, i.e. the weight at the shifted index (0 under the
    /// unilateral out-of-domain convention).
    pub fn preimage_mass(&self, j: i64, n: u64) -> f64 {
        self.weight.value(self.preimage_index(j, n))
    }

    pub fn preimage_mass_exact(&self, j: i64, n: u64) -> Option<Rational> {
        self.weight.exact(self.preimage_index(j, n))
    }

    /// `‖T^n f‖^p = Σ_j |c_j|^p μ(φ^{-n}({j}))`, summed in support order.
    pub fn orbit_norm_p(&self, f: &SimpleFunction, n: u64, p: f64) -> f64 {
        f.iter()
            .map(|(j, c)| c.norm().powf(p) * self.preimage_mass(j, n))
            .sum()
    }

    /// `ln ‖T^n f‖^p` accumulated in the log domain for huge dynamic ranges.
    pub fn orbit_norm_p_log(&self, f: &SimpleFunction, n: u64, p: f64) -> f64 {
        let terms: Vec<f64> = f
            .iter()
            .map(|(j, c)| p * c.norm().ln() + self.weight.log_value(self.preimage_index(j, n)))
            .collect();
        log_sum_exp(&terms)
    }

    /// Exact `‖T^n f‖^p` for real coefficients and integer `p`, when the
    /// weight has an exact backend.
    pub fn orbit_norm_p_exact(
        &self,
        f: &SimpleFunction,
        n: u64,
        p: u32,
    ) -> Result<Rational, ShiftError> {
        if !self.weight.is_exact() {
            return Err(ShiftError::ExactUnavailable);
        }
        let mut acc = Rational::zero();
        for (j, c) in f.iter() {
            if c.im != 0.0 {
                return Err(ShiftError::ExactUnavailable);
            }
            let mag = Rational::from_float(c.re.abs()).ok_or(ShiftError::ExactUnavailable)?;
            let mass = self
                .weight
                .exact(self.preimage_index(j, n))
                .ok_or(ShiftError::ExactUnavailable)?;
            acc += Pow::pow(&mag, p) * mass;
        }
        Ok(acc)
    }

    /// The shifted simple function `T^n f` (coefficients move by `∓n`;
    /// indices leaving a unilateral domain are dropped — they carry no mass).
    pub fn shift_function(&self, f: &SimpleFunction, n: u64) -> SimpleFunction {
        let moved = f.iter().map(|(j, c)| {
            let target = match self.kind {
                ShiftKind::Backward => j as i128 - n as i128,
                ShiftKind::Forward => j as i128 + n as i128,
            };
            (
                i64::try_from(target).expect("shifted index overflows i64"),
                c,
            )
        });
        SimpleFunction::new(moved.filter(|&(j, _)| self.weight.in_domain(j)))
    }
}

// ---------------------------------------------------------------------------
// Ratio engine
// ---------------------------------------------------------------------------

trait RatioScalar: Clone {
    fn accum_zero() -> Self;
    fn add_assign(&mut self, o: &Self);
    fn sub_assign(&mut self, o: &Self);
    fn mul(&self, o: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// `(passes ratio >= k, is a near-tie)` for `num/den` against `k`.
    fn threshold_test(num: &Self, den: &Self, k: u32) -> (bool, bool);
}

impl RatioScalar for f64 {
    fn accum_zero() -> Self {
        0.0
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_assign(&mut self, o: &Self) {
        *self -= o;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn threshold_test(num: &Self, den: &Self, k: u32) -> (bool, bool) {
        // float backend: pass at ratio >= k - 1e-9, flag ties within 1e-9
        let rhs = k as f64 * den;
        let slack = 1e-9 * den;
        (*num >= rhs - slack, (*num - rhs).abs() <= slack)
    }
}

impl RatioScalar for Rational {
    fn accum_zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_assign(&mut self, o: &Self) {
        *self -= o;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn threshold_test(num: &Self, den: &Self, k: u32) -> (bool, bool) {
        // exact backend: non-strict inequality, ties are unambiguous
        (num >= &(den * Rational::from_integer(k.into())), false)
    }
}

/// Walks `n = 1..=n_max` producing the numerator `Σ_j |C_j| v_{j∓n}` and the
/// fixed denominator `Σ_j |C_j| v_j`.
///
/// With uniform coefficients the numerator is maintained per interval as a
/// sliding window (the common magnitude cancels from every ratio and is
/// dropped). Windows are recomputed from scratch at a fixed period so float
/// error stays bounded; the period depends only on the block shape, which
/// keeps results identical between sequential and parallel block runs.
fn walk_ratios<T: RatioScalar>(
    weight_at: &impl Fn(i64) -> T,
    kind: ShiftKind,
    support: &Support,
    mags: &MagView<T>,
    n_max: u64,
    mut visit: impl FnMut(u64, &T, &T),
) -> Result<(), ShiftError> {
    let mut den = T::accum_zero();
    match mags {
        MagView::Uniform => {
            for j in support.iter() {
                den.add_assign(&weight_at(j));
            }
        }
        MagView::PerIndex(m) => {
            for (idx, j) in support.iter().enumerate() {
                den.add_assign(&m[idx].mul(&weight_at(j)));
            }
        }
    }
    if den.is_zero() {
        return Err(ShiftError::ZeroDenominator);
    }
    if n_max == 0 {
        return Ok(());
    }

    let step: i64 = match kind {
        ShiftKind::Backward => -1,
        ShiftKind::Forward => 1,
    };

    match mags {
        MagView::Uniform => {
            let ranges = support.ranges();
            let refresh = (support.len() / 4).max(4096);
            let window_sum = |n: u64| -> T {
                let mut acc = T::accum_zero();
                for &(lo, hi) in ranges {
                    let (a, b) = shifted_range(lo, hi, step, n);
                    for i in a..=b {
                        acc.add_assign(&weight_at(i));
                    }
                }
                acc
            };
            let mut num = window_sum(1);
            visit(1, &num, &den);
            for n in 2..=n_max {
                if (n - 1) % refresh == 0 {
                    num = window_sum(n);
                } else {
                    for &(lo, hi) in ranges {
                        let (pa, pb) = shifted_range(lo, hi, step, n - 1);
                        let (a, b) = shifted_range(lo, hi, step, n);
                        if step < 0 {
                            num.sub_assign(&weight_at(pb));
                            num.add_assign(&weight_at(a));
                        } else {
                            num.sub_assign(&weight_at(pa));
                            num.add_assign(&weight_at(b));
                        }
                    }
                }
                visit(n, &num, &den);
            }
        }
        MagView::PerIndex(m) => {
            for n in 1..=n_max {
                let mut num = T::accum_zero();
                for (idx, j) in support.iter().enumerate() {
                    let i = shifted_index(j, step, n);
                    num.add_assign(&m[idx].mul(&weight_at(i)));
                }
                visit(n, &num, &den);
            }
        }
    }
    Ok(())
}

fn shifted_index(j: i64, step: i64, n: u64) -> i64 {
    i64::try_from(j as i128 + step as i128 * n as i128).expect("shifted index overflows i64")
}

fn shifted_range(lo: i64, hi: i64, step: i64, n: u64) -> (i64, i64) {
    (shifted_index(lo, step, n), shifted_index(hi, step, n))
}

/// One certificate block's counting result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCount {
    pub count: u64,
    /// Up to 10 sample indices achieving the bound.
    pub witness_ns: Vec<u64>,
    /// Float-backend entries within the tie band around the threshold.
    pub near_ties: u64,
}

/// Counts `card{1 <= n <= n_max : Σ|C_j| v_{j∓n} / Σ|C_j| v_j >= k}` with the
/// exact rational backend.
pub fn count_ratio_at_least_exact(
    op: &ShiftOperator,
    support: &Support,
    coeffs: &Coefficients,
    n_max: u64,
    k: u32,
) -> Result<BlockCount, ShiftError> {
    coeffs.check_len(support)?;
    if !op.weight.is_exact() {
        return Err(ShiftError::ExactUnavailable);
    }
    let mags = coeffs.magnitudes_exact()?;
    let weight = &op.weight;
    let weight_at = move |i: i64| weight.exact(i).expect("exact weight");
    let mut out = BlockCount {
        count: 0,
        witness_ns: Vec::new(),
        near_ties: 0,
    };
    walk_ratios(&weight_at, op.kind, support, &mags, n_max, |n, num, den| {
        let (pass, _) = Rational::threshold_test(num, den, k);
        if pass {
            out.count += 1;
            if out.witness_ns.len() < 10 {
                out.witness_ns.push(n);
            }
        }
    })?;
    Ok(out)
}

/// Float-backend counterpart of [`count_ratio_at_least_exact`]. Entries
/// within `1e-9` of the threshold are counted as passing and flagged as
/// near-ties.
pub fn count_ratio_at_least_f64(
    op: &ShiftOperator,
    support: &Support,
    coeffs: &Coefficients,
    n_max: u64,
    k: u32,
) -> Result<BlockCount, ShiftError> {
    coeffs.check_len(support)?;
    let mags = coeffs.magnitudes_f64();
    let weight = &op.weight;
    let weight_at = move |i: i64| weight.value(i);
    let mut out = BlockCount {
        count: 0,
        witness_ns: Vec::new(),
        near_ties: 0,
    };
    walk_ratios(&weight_at, op.kind, support, &mags, n_max, |n, num, den| {
        let (pass, tie) = f64::threshold_test(num, den, k);
        if pass {
            out.count += 1;
            if out.witness_ns.len() < 10 {
                out.witness_ns.push(n);
            }
        }
        if tie {
            out.near_ties += 1;
        }
    })?;
    Ok(out)
}

/// Materialized ratio sequence (exact backend): entry `n` (1-based) is
/// `Σ|C_j| v_{j∓n} / Σ|C_j| v_j`. The ratios carry no `p`.
pub fn ratio_sequence_exact(
    op: &ShiftOperator,
    support: &Support,
    coeffs: &Coefficients,
    n_max: u64,
) -> Result<Vec<Rational>, ShiftError> {
    coeffs.check_len(support)?;
    if !op.weight.is_exact() {
        return Err(ShiftError::ExactUnavailable);
    }
    let mags = coeffs.magnitudes_exact()?;
    let weight = &op.weight;
    let weight_at = move |i: i64| weight.exact(i).expect("exact weight");
    let mut out = Vec::with_capacity(n_max as usize);
    walk_ratios(&weight_at, op.kind, support, &mags, n_max, |_, num, den| {
        out.push(num / den);
    })?;
    Ok(out)
}

/// Float counterpart of [`ratio_sequence_exact`].
pub fn ratio_sequence_f64(
    op: &ShiftOperator,
    support: &Support,
    coeffs: &Coefficients,
    n_max: u64,
) -> Result<Vec<f64>, ShiftError> {
    coeffs.check_len(support)?;
    let mags = coeffs.magnitudes_f64();
    let weight = &op.weight;
    let weight_at = move |i: i64| weight.value(i);
    let mut out = Vec::with_capacity(n_max as usize);
    walk_ratios(&weight_at, op.kind, support, &mags, n_max, |_, num, den| {
        out.push(num / den);
    })?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Near-zero profile
// ---------------------------------------------------------------------------

/// Per-`k` result of [`near_zero_profile`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearZeroRow {
    pub k: u32,
    /// `card{1 <= n <= n_max : v_{∓n} < 1/k}` (restricted to the probe set
    /// when one was supplied).
    pub count_at_horizon: u64,
    /// First `N` with `count(N) >= N (1 - 1/k)`.
    pub first_achieved: Option<u64>,
    /// Largest such `N <= n_max`, with its count.
    pub last_achieved: Option<(u64, u64)>,
}

impl NearZeroRow {
    pub fn achieved(&self) -> bool {
        self.first_achieved.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct NearZeroProfile {
    pub n_max: u64,
    pub rows: Vec<NearZeroRow>,
}

/// Scans `v_{-n}` (backward) or `v_{n}` (forward) over `n <= n_max` and, for
/// each `k <= k_max`, reports the count of near-zero times and the horizons
/// where `count >= N(1 - 1/k)` is achieved — the finite form of "the weight
/// vanishes along a set of upper density one".
pub fn near_zero_profile(
    weight: &WeightSequence,
    kind: ShiftKind,
    k_max: u32,
    n_max: u64,
) -> NearZeroProfile {
    near_zero_scan(weight, kind, k_max, n_max, None)
}

/// Same as [`near_zero_profile`] but counting only times inside `set`. The
/// achievement test keeps the full-horizon denominator `N`.
pub fn near_zero_profile_along(
    weight: &WeightSequence,
    kind: ShiftKind,
    k_max: u32,
    n_max: u64,
    set: &IndexSet,
) -> NearZeroProfile {
    near_zero_scan(weight, kind, k_max, n_max, Some(set))
}

fn near_zero_scan(
    weight: &WeightSequence,
    kind: ShiftKind,
    k_max: u32,
    n_max: u64,
    set: Option<&IndexSet>,
) -> NearZeroProfile {
    assert!(k_max >= 1);
    let exact = weight.is_exact();
    let thresholds: Vec<Rational> = (1..=k_max)
        .map(|k| Rational::new(1.into(), k.into()))
        .collect();
    let mut counts = vec![0u64; k_max as usize];
    let mut first = vec![None; k_max as usize];
    let mut last = vec![None; k_max as usize];
    for n in 1..=n_max {
        let member = match set {
            Some(s) => s.contains(n).unwrap_or(false),
            None => true,
        };
        if member {
            let idx = match kind {
                ShiftKind::Backward => -(n as i64),
                ShiftKind::Forward => n as i64,
            };
            if exact {
                let v = weight.exact(idx).expect("exact weight");
                for (ki, t) in thresholds.iter().enumerate() {
                    if &v < t {
                        counts[ki] += 1;
                    }
                }
            } else {
                let v = weight.value(idx);
                for (ki, count) in counts.iter_mut().enumerate() {
                    if v < 1.0 / (ki as f64 + 1.0) {
                        *count += 1;
                    }
                }
            }
        }
        for ki in 0..k_max as usize {
            let k = ki as u64 + 1;
            // count >= N (1 - 1/k)  <=>  k * count >= N (k - 1)
            if k as u128 * counts[ki] as u128 >= n as u128 * (k - 1) as u128 {
                if first[ki].is_none() {
                    first[ki] = Some(n);
                }
                last[ki] = Some((n, counts[ki]));
            }
        }
    }
    NearZeroProfile {
        n_max,
        rows: (0..k_max as usize)
            .map(|ki| NearZeroRow {
                k: ki as u32 + 1,
                count_at_horizon: counts[ki],
                first_achieved: first[ki],
                last_achieved: last[ki],
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational_to_f64;
    use crate::weights::{
        from_weighted_shift, Exponent, RationalTable, ShiftScalars, ShiftWeightData,
    };
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn harmonic_backward() -> ShiftOperator {
        ShiftOperator::new(ShiftKind::Backward, WeightSequence::harmonic())
    }

    /// Exact harmonic number H_m (0 for m <= 0) — independent summation oracle.
    fn harmonic_number(m: i64) -> Rational {
        let mut acc = Rational::zero();
        for i in 1..=m.max(0) {
            acc += rat(1, i);
        }
        acc
    }

    /// Brute-force oracle: materialize a dense vector on a window, apply the
    /// shift literally n times, then sum |x_m|^p v_m.
    fn brute_force_norm_p(op: &ShiftOperator, f: &SimpleFunction, n: u64, p: f64) -> f64 {
        let lo = f.support().min().unwrap_or(0).min(-20) - n as i64 - 5;
        let hi = f.support().max().unwrap_or(0).max(20) + n as i64 + 5;
        let len = (hi - lo + 1) as usize;
        let at = |j: i64| -> usize { (j - lo) as usize };
        let mut x = vec![Complex64::zero(); len];
        for (j, c) in f.iter() {
            x[at(j)] = c;
        }
        for _ in 0..n {
            let mut y = vec![Complex64::zero(); len];
            for m in lo..=hi {
                let src = match op.kind {
                    ShiftKind::Backward => m + 1,
                    ShiftKind::Forward => m - 1,
                };
                if src >= lo && src <= hi {
                    y[at(m)] = x[at(src)];
                }
                if op.side() == Side::Unilateral && m < 1 {
                    y[at(m)] = Complex64::zero();
                }
            }
            x = y;
        }
        (lo..=hi)
            .map(|m| x[at(m)].norm().powf(p) * op.weight.value(m))
            .sum()
    }

    #[test]
    fn preimage_mass_examples() {
        let op = harmonic_backward();
        // oracle: apply i -> i+1 three times to {10} backwards: {7}
        let mut idx = 10i64;
        for _ in 0..3 {
            idx -= 1;
        }
        assert_eq!(idx, op.preimage_index(10, 3));
        assert_eq!(op.preimage_mass_exact(10, 3).unwrap(), rat(1, 7));
        assert_eq!(op.preimage_mass_exact(4, 0).unwrap(), rat(1, 4));
        assert_eq!(op.preimage_mass_exact(5, 7).unwrap(), Rational::zero());
    }

    #[test]
    fn orbit_norm_identity_case() {
        let op = harmonic_backward();
        let f = SimpleFunction::new([
            (3, Complex64::new(2.0, 0.0)),
            (7, Complex64::new(-1.0, 1.0)),
        ]);
        let norm0 = op.orbit_norm_p(&f, 0, 2.0);
        let direct: f64 = f
            .iter()
            .map(|(j, c)| c.norm().powi(2) * op.weight.value(j))
            .sum();
        assert!((norm0 - direct).abs() < 1e-15);
    }

    #[test]
    fn orbit_norm_indicator_shift() {
        let op = harmonic_backward();
        let f = SimpleFunction::indicator(10);
        let exact = op.orbit_norm_p_exact(&f, 3, 1).unwrap();
        assert_eq!(exact, rat(1, 7));
        let brute = brute_force_norm_p(&op, &f, 3, 1.0);
        assert!((op.orbit_norm_p(&f, 3, 1.0) - brute).abs() < 1e-15);
    }

    #[test]
    fn orbit_norm_interval_is_harmonic_sum() {
        let op = harmonic_backward();
        let f = SimpleFunction::interval(17, 64);
        let exact = op.orbit_norm_p_exact(&f, 17, 1).unwrap();
        assert_eq!(exact, harmonic_number(47));
    }

    #[test]
    fn orbit_norm_log_agrees() {
        let op = harmonic_backward();
        let f = SimpleFunction::interval(17, 64);
        for p in [1.0, 2.0, 3.0] {
            let lin = op.orbit_norm_p(&f, 17, p);
            let log = op.orbit_norm_p_log(&f, 17, p);
            assert!((log - lin.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_sequence_spot_value() {
        let op = harmonic_backward();
        let support = Support::single(17, 64).unwrap();
        let seq = ratio_sequence_exact(&op, &support, &Coefficients::Ones, 64).unwrap();
        // oracle: exact harmonic sums
        let expected = harmonic_number(47) / (harmonic_number(64) - harmonic_number(16));
        assert_eq!(seq[16], expected); // entry n = 17
        assert!(seq[16] >= rat(2, 1));
        let f = ratio_sequence_f64(&op, &support, &Coefficients::Ones, 64).unwrap();
        let exact_f = rational_to_f64(&expected);
        assert!((f[16] - exact_f).abs() / exact_f < 1e-12);
    }

    #[test]
    fn ratio_singleton_leaves_domain() {
        let op = harmonic_backward();
        let support = Support::single(5, 5).unwrap();
        let seq = ratio_sequence_exact(&op, &support, &Coefficients::Ones, 10).unwrap();
        assert_eq!(seq[6], Rational::zero()); // n = 7 > j = 5
    }

    #[test]
    fn ratio_constant_weight_is_one() {
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let op = ShiftOperator::new(ShiftKind::Backward, v);
        let support = Support::intervals(vec![(-4, -1), (3, 7)]).unwrap();
        let seq = ratio_sequence_exact(&op, &support, &Coefficients::Ones, 30).unwrap();
        assert!(seq.iter().all(|r| r == &Rational::one()));
    }

    #[test]
    fn ratio_zero_denominator_detected() {
        let op = harmonic_backward();
        let support = Support::single(-3, -1).unwrap(); // out of the unilateral domain
        assert_eq!(
            ratio_sequence_exact(&op, &support, &Coefficients::Ones, 5),
            Err(ShiftError::ZeroDenominator)
        );
    }

    #[test]
    fn counting_matches_sequence() {
        let op = harmonic_backward();
        let support = Support::single(17, 64).unwrap();
        let seq = ratio_sequence_exact(&op, &support, &Coefficients::Ones, 64).unwrap();
        let direct = seq.iter().filter(|r| **r >= rat(2, 1)).count() as u64;
        let counted =
            count_ratio_at_least_exact(&op, &support, &Coefficients::Ones, 64, 2).unwrap();
        assert_eq!(counted.count, direct);
        assert!(counted.count >= 32); // N_2 (1 - 1/2)
        let float = count_ratio_at_least_f64(&op, &support, &Coefficients::Ones, 64, 2).unwrap();
        assert_eq!(float.count, counted.count);
        assert_eq!(float.near_ties, 0);
    }

    #[test]
    fn near_zero_piecewise() {
        let v = WeightSequence::piecewise_bilateral();
        let profile = near_zero_profile(&v, ShiftKind::Backward, 3, 4 * 3125);
        let k2 = &profile.rows[1];
        assert!(k2.achieved());
        assert_eq!(k2.first_achieved, Some(54)); // N = 2 n_3
        let k3 = &profile.rows[2];
        assert!(k3.achieved());
        assert_eq!(k3.first_achieved, Some(768)); // N = 3 n_4
                                                  // oracle: direct scan of v_{-n}
        let direct = (1..=54).filter(|&n| v.value(-(n as i64)) < 0.5).count() as u64;
        assert_eq!(direct, 27);
    }

    #[test]
    fn near_zero_constant_never() {
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let profile = near_zero_profile(&v, ShiftKind::Backward, 4, 500);
        for row in &profile.rows[1..] {
            assert!(!row.achieved());
            assert_eq!(row.count_at_horizon, 0);
        }
    }

    #[test]
    fn near_zero_growing_converted_never() {
        // w ≡ 2 backward bilateral: v_{-n} = 2^n grows
        let w = ShiftWeightData::new(
            ShiftScalars::Moduli(RationalTable::constant(rat(2, 1)).unwrap()),
            rat(2, 1),
        )
        .unwrap();
        let v = from_weighted_shift(&w, &Exponent::Int(1), ShiftKind::Backward, Side::Bilateral)
            .unwrap();
        // oracle: direct scan
        assert!(v.exact(-5).unwrap() > Rational::one());
        let profile = near_zero_profile(&v, ShiftKind::Backward, 3, 200);
        for row in &profile.rows[1..] {
            assert!(!row.achieved());
        }
    }

    #[test]
    fn sliding_and_direct_paths_agree() {
        // same block computed with Ones (sliding) and explicit equal
        // coefficients (promoted to the same path), then non-uniform
        // coefficients cross-checked by hand
        let op = harmonic_backward();
        let support = Support::intervals(vec![(3, 10), (20, 25)]).unwrap();
        let ones = ratio_sequence_exact(&op, &support, &Coefficients::Ones, 40).unwrap();
        let coeffs: Vec<Complex64> = (0..support.len())
            .map(|_| Complex64::new(2.0, 0.0))
            .collect();
        let scaled =
            ratio_sequence_exact(&op, &support, &Coefficients::PerIndex(coeffs), 40).unwrap();
        assert_eq!(ones, scaled);
        let mut coeffs: Vec<Complex64> = (0..support.len())
            .map(|_| Complex64::new(1.0, 0.0))
            .collect();
        coeffs[0] = Complex64::new(3.0, 0.0);
        let seq = ratio_sequence_exact(&op, &support, &Coefficients::PerIndex(coeffs), 5).unwrap();
        let w = |i: i64| -> Rational { op.weight.exact(i).unwrap() };
        let num = rat(3, 1) * w(3 - 2)
            + (4..=10)
                .map(|j| w(j - 2))
                .fold(Rational::zero(), |a, b| a + b)
            + (20..=25)
                .map(|j| w(j - 2))
                .fold(Rational::zero(), |a, b| a + b);
        let den = rat(3, 1) * w(3)
            + (4..=10).map(w).fold(Rational::zero(), |a, b| a + b)
            + (20..=25).map(w).fold(Rational::zero(), |a, b| a + b);
        assert_eq!(seq[1], num / den);
    }

    #[test]
    fn forward_shift_unilateral_masses() {
        let op = ShiftOperator::new(ShiftKind::Forward, WeightSequence::harmonic());
        assert_eq!(op.preimage_mass_exact(3, 4).unwrap(), rat(1, 7));
        let f = SimpleFunction::indicator(3);
        let brute = brute_force_norm_p(&op, &f, 4, 1.0);
        assert!((op.orbit_norm_p(&f, 4, 1.0) - brute).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn orbit_norm_matches_brute_force(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let bilateral = rng.gen_bool(0.5);
            let (weight, lo, hi) = if bilateral {
                (WeightSequence::piecewise_bilateral(), -60i64, 60i64)
            } else {
                (WeightSequence::harmonic(), 1i64, 120i64)
            };
            let kind = if rng.gen_bool(0.5) { ShiftKind::Backward } else { ShiftKind::Forward };
            let op = ShiftOperator::new(kind, weight);
            let f = SimpleFunction::new((0..rng.gen_range(1..8)).map(|_| {
                (
                    rng.gen_range(lo..=hi),
                    Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                )
            }));
            let n = rng.gen_range(0..=30u64);
            for p in [1.0, 2.0, 3.0] {
                let closed = op.orbit_norm_p(&f, n, p);
                let brute = brute_force_norm_p(&op, &f, n, p);
                let tol = 1e-12 * (1.0 + closed.abs());
                prop_assert!((closed - brute).abs() <= tol, "closed={closed} brute={brute}");
            }
        }

        #[test]
        fn orbit_norm_semigroup(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let op = ShiftOperator::new(
                if rng.gen_bool(0.5) { ShiftKind::Backward } else { ShiftKind::Forward },
                WeightSequence::piecewise_bilateral(),
            );
            let f = SimpleFunction::new((0..rng.gen_range(1..6)).map(|_| {
                (rng.gen_range(-40i64..=40), Complex64::new(rng.gen_range(1..6) as f64, 0.0))
            }));
            let m = rng.gen_range(0..=10u64);
            let n = rng.gen_range(0..=10u64);
            let whole = op.orbit_norm_p_exact(&f, m + n, 2).unwrap();
            let shifted = op.shift_function(&f, m);
            let staged = op.orbit_norm_p_exact(&shifted, n, 2).unwrap();
            prop_assert_eq!(whole, staged);
        }

        #[test]
        fn ratio_scaling_invariance(scale in 1u32..50, k in 2u32..5) {
            let op = harmonic_backward();
            let support = Support::single(9, 40).unwrap();
            let coeffs: Vec<Complex64> = (0..support.len())
                .map(|i| Complex64::new((1 + (i % 3)) as f64, 0.0))
                .collect();
            let scaled: Vec<Complex64> = coeffs.iter().map(|c| c * scale as f64).collect();
            let a = count_ratio_at_least_exact(
                &op, &support, &Coefficients::PerIndex(coeffs), 60, k,
            ).unwrap();
            let b = count_ratio_at_least_exact(
                &op, &support, &Coefficients::PerIndex(scaled), 60, k,
            ).unwrap();
            prop_assert_eq!(a.count, b.count);
            prop_assert_eq!(a.witness_ns, b.witness_ns);
        }

        #[test]
        fn ratios_are_p_free(n_max in 5u64..40) {
            // the ratio sequence never sees p; spot-check that p-th power
            // norms reproduce it for several p
            let op = harmonic_backward();
            let support = Support::single(5, 12).unwrap();
            let seq = ratio_sequence_exact(&op, &support, &Coefficients::Ones, n_max).unwrap();
            for p in [1u32, 2, 3] {
                let f = SimpleFunction::interval(5, 12);
                let denom = op.orbit_norm_p_exact(&f, 0, p).unwrap();
                let n_probe = (n_max / 2).max(1);
                let num = op.orbit_norm_p_exact(&f, n_probe, p).unwrap();
                prop_assert_eq!(num / denom, seq[(n_probe - 1) as usize].clone());
            }
        }
    }
}
