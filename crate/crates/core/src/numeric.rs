//! Shared numeric helpers: exact rationals, decimal rendering, and stable
//! log-domain accumulation.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar used by all exact backends.
pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer part in rational literal `{0}`")]
    BadInteger(String),
    #[error("zero denominator in rational literal `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p"` or `"p/q"` (optionally signed) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let num: BigInt = num_str
        .parse()
        .map_err(|_| ParseRationalError::BadInteger(s.to_string()))?;
    let den: BigInt = match den_str {
        Some(d) => d
            .parse()
            .map_err(|_| ParseRationalError::BadInteger(s.to_string()))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Renders a rational as `"p"` or `"p/q"` (lowest terms).
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders a rational in decimal with up to `sig` significant digits,
/// round-half-away-from-zero, trailing zeros trimmed (`1/2` -> `"0.5"`).
pub fn rational_to_decimal(r: &Rational, sig: usize) -> String {
    assert!(sig > 0);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.abs();
    // e with 10^(e-1) <= a < 10^e, i.e. the digit count before the point.
    let ten = Rational::from_integer(BigInt::from(10));
    let one = Rational::one();
    let mut e: i64 = 0;
    if a >= one {
        let mut t = a.clone();
        while t >= one {
            t /= &ten;
            e += 1;
        }
    } else {
        let mut t = a.clone();
        let mut k: i64 = 0;
        while t < one {
            t *= &ten;
            k += 1;
        }
        e = 1 - k;
    }
    // scaled = round(a * 10^(sig - e)) has exactly `sig` digits (or sig+1 on carry).
    let shift = sig as i64 - e;
    let pow = BigInt::from(10u32).pow(shift.unsigned_abs() as u32);
    let scaled_rat = if shift >= 0 {
        &a * Rational::from_integer(pow)
    } else {
        &a / Rational::from_integer(pow)
    };
    // round half away from zero
    let two = BigInt::from(2);
    let (num, den) = (scaled_rat.numer().clone(), scaled_rat.denom().clone());
    let mut scaled: BigInt = (&num * &two + &den) / (&den * &two);
    let mut digits = scaled.to_string();
    if digits.len() > sig {
        // rounding carried into an extra digit (e.g. 999.96 -> 1000)
        e += 1;
        scaled /= BigInt::from(10u32).pow((digits.len() - sig) as u32);
        digits = scaled.to_string();
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e <= 0 {
        out.push_str("0.");
        for _ in 0..(-e) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
        if out.ends_with('.') {
            out.pop();
        }
    } else if (e as usize) >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(e as usize - digits.len()) {
            out.push('0');
        }
    } else {
        let (int_part, frac_part) = digits.split_at(e as usize);
        out.push_str(int_part);
        let frac = frac_part.trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
    }
    out
}

/// Converts a rational to `f64`, falling back to a sign-correct infinity on
/// overflow. Exact zero maps to exact `0.0`.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Natural log of a positive rational, computed as `ln(num) - ln(den)` so
/// values far outside the `f64` range keep an accurate logarithm.
pub fn rational_ln(r: &Rational) -> f64 {
    assert!(r.is_positive(), "rational_ln needs a positive argument");
    bigint_ln(r.numer()) - bigint_ln(r.denom())
}

fn bigint_ln(x: &BigInt) -> f64 {
    debug_assert!(x.sign() == Sign::Plus);
    let bits = x.bits();
    if bits <= 52 {
        return x.to_f64().expect("small BigInt fits f64").ln();
    }
    // x = m * 2^s with m holding the top 52 bits
    let s = bits - 52;
    let m = (x >> s).to_f64().expect("52-bit mantissa fits f64");
    m.ln() + s as f64 * std::f64::consts::LN_2
}

/// `ln(Σ exp(l_i))` with the usual max-shift for stability. Empty input and
/// all-`-inf` input yield `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&l| (l - m).exp()).sum();
    m + sum.ln()
}

/// `⌈num/den⌉` for a nonnegative rational given as a [`Rational`].
pub fn ceil_to_u64(r: &Rational) -> u64 {
    assert!(!r.is_negative());
    let q = r.ceil();
    q.to_integer().to_u64().expect("ceiling fits u64")
}
