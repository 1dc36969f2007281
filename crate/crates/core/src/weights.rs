//! Weight sequences over `ℕ` or `ℤ` viewed as point masses `μ({j}) = v_j`,
//! including the generators used throughout the library and the
//! weighted-shift ↔ weighted-space conversion.
//!
//! Unilateral weights follow the convention `v_m = 0` for `m <= 0`; bilateral
//! weights are strictly positive on all of `ℤ`.

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{parse_rational, rational_ln, rational_to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Unilateral,
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Backward,
    Forward,
}

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("weight values must be strictly positive")]
    NonPositiveValue,
    #[error("weighted-shift data has no fill value: index {index} is undefined")]
    MissingWeightIndex { index: i64 },
    #[error("exponent p must satisfy p >= 1 (got {0})")]
    InvalidExponent(f64),
    #[error("mirrored weights require a bilateral inner weight")]
    MirrorNeedsBilateral,
    #[error("|w_{index}| exceeds the declared bound")]
    BoundViolated { index: i64 },
    #[error("invalid weight spec: {0}")]
    BadSpec(String),
}

/// Finite table `i -> value` with a constant extension outside the explicit
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTable {
    pub offset: i64,
    pub values: Vec<Rational>,
    pub fill: Option<Rational>,
}

impl RationalTable {
    pub fn new(
        offset: i64,
        values: Vec<Rational>,
        fill: Option<Rational>,
    ) -> Result<Self, WeightError> {
        if values.iter().any(|v| !v.is_positive())
            || fill.as_ref().is_some_and(|f| !f.is_positive())
        {
            return Err(WeightError::NonPositiveValue);
        }
        Ok(RationalTable {
            offset,
            values,
            fill,
        })
    }

    pub fn constant(value: Rational) -> Result<Self, WeightError> {
        Self::new(0, Vec::new(), Some(value))
    }

    fn get(&self, i: i64) -> Option<&Rational> {
        let idx = i - self.offset;
        if idx >= 0 && (idx as usize) < self.values.len() {
            Some(&self.values[idx as usize])
        } else {
            self.fill.as_ref()
        }
    }

    /// Product of entries over the inclusive index range `[a, b]`.
    fn range_product(&self, a: i64, b: i64) -> Rational {
        debug_assert!(a <= b);
        let mut acc = Rational::one();
        let lo = self.offset.max(a);
        let hi = (self.offset + self.values.len() as i64 - 1).min(b);
        let mut explicit = 0i64;
        if lo <= hi {
            for i in lo..=hi {
                acc *= &self.values[(i - self.offset) as usize];
            }
            explicit = hi - lo + 1;
        }
        let fill_count = (b - a + 1) - explicit;
        if fill_count > 0 {
            let f = self.fill.as_ref().expect("fill checked at construction");
            acc *= Pow::pow(f, fill_count as i32);
        }
        acc
    }

    /// `Σ ln(entry)` over `[a, b]`, with the fill contribution in closed form.
    fn range_log_sum(&self, a: i64, b: i64) -> f64 {
        debug_assert!(a <= b);
        let lo = self.offset.max(a);
        let hi = (self.offset + self.values.len() as i64 - 1).min(b);
        let mut acc = 0.0;
        let mut explicit = 0i64;
        if lo <= hi {
            for i in lo..=hi {
                acc += rational_ln(&self.values[(i - self.offset) as usize]);
            }
            explicit = hi - lo + 1;
        }
        let fill_count = (b - a + 1) - explicit;
        if fill_count > 0 {
            let f = self.fill.as_ref().expect("fill checked at construction");
            acc += fill_count as f64 * rational_ln(f);
        }
        acc
    }
}

/// Exponent `p >= 1` of the `ℓ^p` space a shift acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Int(u32),
    Real(f64),
}

impl Exponent {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Exponent::Int(p) => p as f64,
            Exponent::Real(p) => p,
        }
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let p = self.as_f64();
        if p >= 1.0 && p.is_finite() {
            Ok(())
        } else {
            Err(WeightError::InvalidExponent(p))
        }
    }

    /// Integer exponents stay exact, everything else goes through `f64`.
    pub fn from_rational(r: &Rational) -> Self {
        if r.denom().is_one() {
            if let Some(p) = r.numer().to_u32() {
                return Exponent::Int(p);
            }
        }
        Exponent::Real(rational_to_f64(r))
    }
}

#[derive(Debug, Clone)]
enum Generator {
    Harmonic,
    PiecewiseBilateral,
    Table(RationalTable),
    Mirrored(Box<WeightSequence>),
    /// `v_n = ∏ powp(i)^{∓1}` with exact rational `|w_i|^p` entries.
    ConvertedExact {
        powp: RationalTable,
        kind: ShiftKind,
    },
    /// Same products kept in the log domain.
    ConvertedLog {
        offset: i64,
        log_values: Vec<f64>,
        log_fill: f64,
        kind: ShiftKind,
    },
}

/// A positive weight over `ℕ` or `ℤ`. Immutable after construction; all
/// evaluation is pure.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    side: Side,
    gen: Generator,
}

impl WeightSequence {
    /// `v_n = 1/n` for `n >= 1` (unilateral).
    pub fn harmonic() -> Self {
        WeightSequence {
            side: Side::Unilateral,
            gen: Generator::Harmonic,
        }
    }

    /// Bilateral weight with `v_n = 1/n` on the positive side, `v_0 = 1`, and
    /// on the negative side (writing `m = -n`, `n_k = k^k`, `N_k = k·k^k`)
    /// `v = 1` on `(N_{k-1}, n_k]` and `v = 1/k` on `(n_k, N_k]`. The two
    /// branch families tile the negative indices without overlap.
    pub fn piecewise_bilateral() -> Self {
        WeightSequence {
            side: Side::Bilateral,
            gen: Generator::PiecewiseBilateral,
        }
    }

    pub fn table(side: Side, table: RationalTable) -> Self {
        WeightSequence {
            side,
            gen: Generator::Table(table),
        }
    }

    /// Constant weight `v ≡ value`.
    pub fn constant(side: Side, value: Rational) -> Result<Self, WeightError> {
        Ok(Self::table(side, RationalTable::constant(value)?))
    }

    /// Reverses a bilateral weight about index 0.
    pub fn mirrored(inner: WeightSequence) -> Result<Self, WeightError> {
        if inner.side != Side::Bilateral {
            return Err(WeightError::MirrorNeedsBilateral);
        }
        Ok(WeightSequence {
            side: Side::Bilateral,
            gen: Generator::Mirrored(Box::new(inner)),
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn in_domain(&self, n: i64) -> bool {
        match self.side {
            Side::Unilateral => n >= 1,
            Side::Bilateral => true,
        }
    }

    /// Whether [`WeightSequence::exact`] returns values for in-domain indices.
    pub fn is_exact(&self) -> bool {
        match &self.gen {
            Generator::ConvertedLog { .. } => false,
            Generator::Mirrored(inner) => inner.is_exact(),
            _ => true,
        }
    }

    /// Exact weight at `n` (including the exact 0 of out-of-domain indices),
    /// or `None` when the generator only has a float backend.
    pub fn exact(&self, n: i64) -> Option<Rational> {
        if !self.in_domain(n) {
            return Some(Rational::zero());
        }
        match &self.gen {
            Generator::Harmonic => Some(Rational::new(BigInt::one(), BigInt::from(n))),
            Generator::PiecewiseBilateral => Some(piecewise_value(n)),
            Generator::Table(t) => t.get(n).cloned(),
            Generator::Mirrored(inner) => inner.exact(-n),
            Generator::ConvertedExact { powp, kind } => Some(converted_exact(powp, *kind, n)),
            Generator::ConvertedLog { .. } => None,
        }
    }

    /// `ln v_n`, with an exact `-inf` sentinel for zero mass.
    pub fn log_value(&self, n: i64) -> f64 {
        if !self.in_domain(n) {
            return f64::NEG_INFINITY;
        }
        match &self.gen {
            Generator::Harmonic => -(n as f64).ln(),
            Generator::PiecewiseBilateral => rational_ln(&piecewise_value(n)),
            Generator::Table(t) => match t.get(n) {
                Some(v) => rational_ln(v),
                None => f64::NEG_INFINITY,
            },
            Generator::Mirrored(inner) => inner.log_value(-n),
            Generator::ConvertedExact { powp, kind } => converted_log_from_table(powp, *kind, n),
            Generator::ConvertedLog {
                offset,
                log_values,
                log_fill,
                kind,
            } => converted_log(*offset, log_values, *log_fill, *kind, n),
        }
    }

    /// Weight as `f64`. Converted generators evaluate through the log domain
    /// so huge dynamic ranges stay meaningful; closed-form generators avoid
    /// the rational detour (this accessor sits in the ratio engine's hot
    /// loop).
    pub fn value(&self, n: i64) -> f64 {
        if !self.in_domain(n) {
            return 0.0;
        }
        match &self.gen {
            Generator::Harmonic => 1.0 / n as f64,
            Generator::PiecewiseBilateral => piecewise_value_f64(n),
            Generator::Table(t) => t.get(n).map(rational_to_f64).unwrap_or(0.0),
            Generator::Mirrored(inner) => inner.value(-n),
            Generator::ConvertedExact { .. } | Generator::ConvertedLog { .. } => {
                self.log_value(n).exp()
            }
        }
    }
}

/// Piecewise bilateral closed form (see [`WeightSequence::piecewise_bilateral`]).
fn piecewise_value(n: i64) -> Rational {
    if n >= 1 {
        return Rational::new(BigInt::one(), BigInt::from(n));
    }
    if n == 0 {
        return Rational::one();
    }
    let m = n.unsigned_abs() as u128;
    let mut k: u32 = 1;
    loop {
        let nk = (k as u128).pow(k);
        let upper = k as u128 * nk; // N_k
        if m <= nk {
            return Rational::one();
        }
        if m <= upper {
            return Rational::new(BigInt::one(), BigInt::from(k));
        }
        k += 1;
    }
}

fn piecewise_value_f64(n: i64) -> f64 {
    if n >= 1 {
        return 1.0 / n as f64;
    }
    if n == 0 {
        return 1.0;
    }
    let m = n.unsigned_abs() as u128;
    let mut k: u32 = 1;
    loop {
        let nk = (k as u128).pow(k);
        if m <= nk {
            return 1.0;
        }
        if m <= k as u128 * nk {
            return 1.0 / k as f64;
        }
        k += 1;
    }
}

fn converted_exact(powp: &RationalTable, kind: ShiftKind, n: i64) -> Rational {
    // backward: v_n = ∏_{i=1}^n powp(i)^{-1} (n >= 1), ∏_{i=n+1}^0 powp(i) (n <= -1)
    // forward flips both exponents; v_0 = 1 either way.
    if n == 0 {
        return Rational::one();
    }
    let (prod, invert_pos) = if n >= 1 {
        (powp.range_product(1, n), true)
    } else {
        (powp.range_product(n + 1, 0), false)
    };
    let invert = match kind {
        ShiftKind::Backward => invert_pos,
        ShiftKind::Forward => !invert_pos,
    };
    if invert {
        prod.recip()
    } else {
        prod
    }
}

fn converted_log_from_table(powp: &RationalTable, kind: ShiftKind, n: i64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (sum, invert_pos) = if n >= 1 {
        (powp.range_log_sum(1, n), true)
    } else {
        (powp.range_log_sum(n + 1, 0), false)
    };
    let invert = match kind {
        ShiftKind::Backward => invert_pos,
        ShiftKind::Forward => !invert_pos,
    };
    if invert {
        -sum
    } else {
        sum
    }
}

fn converted_log(offset: i64, log_values: &[f64], log_fill: f64, kind: ShiftKind, n: i64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b, invert_pos) = if n >= 1 {
        (1, n, true)
    } else {
        (n + 1, 0, false)
    };
    let lo = offset.max(a);
    let hi = (offset + log_values.len() as i64 - 1).min(b);
    let mut acc = 0.0;
    let mut explicit = 0i64;
    if lo <= hi {
        for i in lo..=hi {
            acc += log_values[(i - offset) as usize];
        }
        explicit = hi - lo + 1;
    }
    acc += ((b - a + 1) - explicit) as f64 * log_fill;
    let invert = match kind {
        ShiftKind::Backward => invert_pos,
        ShiftKind::Forward => !invert_pos,
    };
    if invert {
        -acc
    } else {
        acc
    }
}

// ---------------------------------------------------------------------------
// Weighted-shift data and conversion
// ---------------------------------------------------------------------------

/// Scalar data of a weighted shift. Only the moduli matter for the induced
/// weight, so the entries are positive rationals.
#[derive(Debug, Clone)]
pub enum ShiftScalars {
    /// `|w_i|` itself; products stay exact for integer `p`.
    Moduli(RationalTable),
    /// `|w_i|^p` supplied directly; products stay exact for any `p`.
    ModuliPowP(RationalTable),
}

#[derive(Debug, Clone)]
pub struct ShiftWeightData {
    pub scalars: ShiftScalars,
    /// Declared bound with `|w_i| <= bound`.
    pub bound: Rational,
}

impl ShiftWeightData {
    pub fn new(scalars: ShiftScalars, bound: Rational) -> Result<Self, WeightError> {
        if !bound.is_positive() {
            return Err(WeightError::NonPositiveValue);
        }
        if let ShiftScalars::Moduli(t) = &scalars {
            for (idx, v) in t.values.iter().enumerate() {
                if v > &bound {
                    return Err(WeightError::BoundViolated {
                        index: t.offset + idx as i64,
                    });
                }
            }
            if t.fill.as_ref().is_some_and(|f| f > &bound) {
                return Err(WeightError::BoundViolated { index: i64::MAX });
            }
        }
        Ok(ShiftWeightData { scalars, bound })
    }

    fn table(&self) -> &RationalTable {
        match &self.scalars {
            ShiftScalars::Moduli(t) | ShiftScalars::ModuliPowP(t) => t,
        }
    }
}

/// Converts weighted-shift scalars into the equivalent weighted-space weight:
/// `v_n = ∏_{i=1}^n |w_i|^{-p}` for the backward shift (with the reciprocal
/// products on negative indices and `v_0 = 1`) and the opposite exponents for
/// the forward shift. Products are exact when the scalar data allows it and
/// log-domain floats otherwise.
pub fn from_weighted_shift(
    w: &ShiftWeightData,
    p: &Exponent,
    kind: ShiftKind,
    side: Side,
) -> Result<WeightSequence, WeightError> {
    p.validate()?;
    if w.table().fill.is_none() {
        // a total weight needs w on all indices
        let missing = w.table().offset + w.table().values.len() as i64;
        return Err(WeightError::MissingWeightIndex { index: missing });
    }
    let gen = match (&w.scalars, p) {
        (ShiftScalars::ModuliPowP(t), _) => Generator::ConvertedExact {
            powp: t.clone(),
            kind,
        },
        (ShiftScalars::Moduli(t), Exponent::Int(p)) => {
            let powp = RationalTable {
                offset: t.offset,
                values: t.values.iter().map(|v| Pow::pow(v, *p)).collect(),
                fill: t.fill.as_ref().map(|f| Pow::pow(f, *p)),
            };
            Generator::ConvertedExact { powp, kind }
        }
        (ShiftScalars::Moduli(t), Exponent::Real(p)) => Generator::ConvertedLog {
            offset: t.offset,
            log_values: t.values.iter().map(|v| p * rational_ln(v)).collect(),
            log_fill: p * rational_ln(t.fill.as_ref().expect("checked above")),
            kind,
        },
    };
    Ok(WeightSequence { side, gen })
}

// ---------------------------------------------------------------------------
// Boundedness probe
// ---------------------------------------------------------------------------

/// Finite-range probe of the shift-boundedness ratio. This estimates
/// `sup v_n/v_{n+1}` (backward) or `sup v_{n+1}/v_n` (forward) over the probe
/// range only; it is not a proof of boundedness.
#[derive(Debug, Clone)]
pub struct BoundProbe {
    pub max_ratio: f64,
    pub max_exact: Option<Rational>,
    pub witness: i64,
    /// Indices skipped because the denominator weight was 0 (out of domain).
    pub skipped: u64,
}

pub fn shift_bounded(
    v: &WeightSequence,
    kind: ShiftKind,
    range: std::ops::RangeInclusive<i64>,
) -> BoundProbe {
    let mut best_f = f64::NEG_INFINITY;
    let mut best_exact: Option<Rational> = None;
    let mut witness = *range.start();
    let mut skipped = 0u64;
    let exact = v.is_exact();
    for n in range.clone() {
        let (num_i, den_i) = match kind {
            ShiftKind::Backward => (n, n + 1),
            ShiftKind::Forward => (n + 1, n),
        };
        if exact {
            let num = v.exact(num_i).expect("exact weight");
            let den = v.exact(den_i).expect("exact weight");
            if den.is_zero() {
                skipped += 1;
                continue;
            }
            let r = num / den;
            if best_exact.as_ref().is_none_or(|b| &r > b) {
                best_f = rational_to_f64(&r);
                best_exact = Some(r);
                witness = n;
            }
        } else {
            let den_log = v.log_value(den_i);
            if den_log == f64::NEG_INFINITY {
                skipped += 1;
                continue;
            }
            let r = (v.log_value(num_i) - den_log).exp();
            if r > best_f {
                best_f = r;
                witness = n;
            }
        }
    }
    if best_f == f64::NEG_INFINITY {
        best_f = 0.0;
    }
    BoundProbe {
        max_ratio: best_f,
        max_exact: best_exact,
        witness,
        skipped,
    }
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

/// Wire form of a weight: `{"side": ..., "generator": {"kind": ..., ...}}`.
/// Rationals travel as strings (`"1/2"`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    pub side: Side,
    pub generator: GeneratorSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Harmonic,
    PiecewiseBilateral,
    Table {
        offset: i64,
        values: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fill: Option<String>,
    },
    WeightedShift {
        w: TableSpec,
        p: String,
        shift_kind: ShiftKind,
        #[serde(default)]
        pow_p: bool,
    },
    Mirrored {
        inner: Box<GeneratorSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    pub offset: i64,
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
}

fn parse_rat_field(s: &str, field: &str) -> Result<Rational, WeightError> {
    parse_rational(s).map_err(|e| WeightError::BadSpec(format!("{field}: {e}")))
}

impl TableSpec {
    fn to_table(&self) -> Result<RationalTable, WeightError> {
        let values = self
            .values
            .iter()
            .map(|s| parse_rat_field(s, "values"))
            .collect::<Result<Vec<_>, _>>()?;
        let fill = self
            .fill
            .as_ref()
            .map(|s| parse_rat_field(s, "fill"))
            .transpose()?;
        RationalTable::new(self.offset, values, fill)
    }
}

impl WeightSpec {
    pub fn to_weight(&self) -> Result<WeightSequence, WeightError> {
        build_generator(&self.generator, self.side)
    }
}

fn build_generator(spec: &GeneratorSpec, side: Side) -> Result<WeightSequence, WeightError> {
    match spec {
        GeneratorSpec::Harmonic => {
            if side != Side::Unilateral {
                return Err(WeightError::BadSpec(
                    "harmonic generator is unilateral".into(),
                ));
            }
            Ok(WeightSequence::harmonic())
        }
        GeneratorSpec::PiecewiseBilateral => {
            if side != Side::Bilateral {
                return Err(WeightError::BadSpec(
                    "piecewise_bilateral generator is bilateral".into(),
                ));
            }
            Ok(WeightSequence::piecewise_bilateral())
        }
        GeneratorSpec::Table {
            offset,
            values,
            fill,
        } => {
            let values = values
                .iter()
                .map(|s| parse_rat_field(s, "values"))
                .collect::<Result<Vec<_>, _>>()?;
            let fill = match fill {
                Some(s) => Some(parse_rat_field(s, "fill")?),
                // default out-of-table policy: extend with weight 1
                None => Some(Rational::one()),
            };
            Ok(WeightSequence::table(
                side,
                RationalTable::new(*offset, values, fill)?,
            ))
        }
        GeneratorSpec::WeightedShift {
            w,
            p,
            shift_kind,
            pow_p,
        } => {
            let table = w.to_table()?;
            let bound = match &w.bound {
                Some(s) => parse_rat_field(s, "bound")?,
                None => {
                    // default to the largest declared scalar
                    let mut b = table.fill.clone().unwrap_or_else(Rational::one);
                    for v in &table.values {
                        if v > &b {
                            b = v.clone();
                        }
                    }
                    b
                }
            };
            let scalars = if *pow_p {
                ShiftScalars::ModuliPowP(table)
            } else {
                ShiftScalars::Moduli(table)
            };
            let data = ShiftWeightData::new(scalars, bound)?;
            let p = Exponent::from_rational(&parse_rat_field(p, "p")?);
            from_weighted_shift(&data, &p, *shift_kind, side)
        }
        GeneratorSpec::Mirrored { inner } => {
            let inner = build_generator(inner, Side::Bilateral)?;
            WeightSequence::mirrored(inner)
        }
    }
}
