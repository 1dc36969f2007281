//! Certificate verification for the distributional-chaos characterizations:
//! per-block counting of `ratio >= k` times against the `N_k ε` requirement,
//! the near-zero condition probe for the bilateral/forward variants, DCC
//! probing, scrambled-pair statistics and p-independence reporting.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::IndexSet;
use crate::numeric::{ceil_to_u64, parse_rational, rational_to_string, Rational};
use crate::shifts::{
    count_ratio_at_least_exact, count_ratio_at_least_f64, near_zero_profile,
    near_zero_profile_along, Coefficients, ShiftError, ShiftKind, ShiftOperator, SimpleFunction,
    Support,
};
use crate::weights::{Side, WeightSequence};

#[derive(Debug, Error, PartialEq)]
pub enum ChaosError {
    #[error("invalid certificate: {0}")]
    BadCertificate(String),
    #[error("support of block k={k} lies outside the weight's domain")]
    DomainMismatch { k: u32 },
    #[error("exact backend refused: block horizon {n} exceeds the configured maximum {max}")]
    BackendOverflow { n: u64, max: u64 },
    #[error("example certificate infeasible for k={k} (supported range is 1..={max})")]
    InfeasibleK { k: u32, max: u32 },
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// Witness data for distributional-chaos verification: a fraction `ε ∈ (0, 1]`
/// and blocks `(k, N_k, S_k, C_k)` with `k` and `N_k` increasing. The
/// optional density-one set feeds the near-zero condition probe of the
/// bilateral/forward variants.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub epsilon: Rational,
    pub blocks: Vec<CertBlock>,
    pub density_one_set: Option<IndexSet>,
}

#[derive(Debug, Clone)]
pub struct CertBlock {
    pub k: u32,
    pub n_k: u64,
    pub support: Support,
    pub coeffs: Coefficients,
}

impl Certificate {
    pub fn validate(&self) -> Result<(), ChaosError> {
        if !self.epsilon.is_positive() || self.epsilon > Rational::one() {
            return Err(ChaosError::BadCertificate(
                "epsilon must be in (0, 1]".into(),
            ));
        }
        if self.blocks.is_empty() {
            return Err(ChaosError::BadCertificate("no blocks".into()));
        }
        if self.blocks.windows(2).any(|w| w[0].k >= w[1].k) {
            return Err(ChaosError::BadCertificate(
                "block thresholds k must be strictly increasing".into(),
            ));
        }
        if self.blocks.windows(2).any(|w| w[0].n_k >= w[1].n_k) {
            return Err(ChaosError::BadCertificate(
                "block horizons N_k must be increasing".into(),
            ));
        }
        if self.blocks.iter().any(|b| b.n_k == 0) {
            return Err(ChaosError::BadCertificate(
                "block horizon N_k must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Float,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendUsed {
    Exact,
    Float,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub backend: Backend,
    /// Exact backend is refused above this block horizon.
    pub n_exact_max: u64,
    /// Verify blocks in parallel (results are identical to sequential).
    pub parallel: bool,
    /// Horizon for the near-zero condition probe; defaults to the largest
    /// block horizon.
    pub condition_horizon: Option<u64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            backend: Backend::Auto,
            n_exact_max: 5000,
            parallel: true,
            condition_horizon: None,
        }
    }
}

/// Verdict for one certificate block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockVerdict {
    pub k: u32,
    pub n_k: u64,
    /// `card{1 <= n <= N_k : ratio_n >= k}`.
    pub count: u64,
    /// `⌈N_k ε⌉`.
    pub required: u64,
    pub pass: bool,
    /// The strict bound `N_k (1 - 1/k)` is vacuous (k = 1).
    pub trivial: bool,
    pub witness_ns: Vec<u64>,
    pub backend: BackendUsed,
    pub near_ties: u64,
}

/// Finite probe of the condition "v vanishes along a set of upper density
/// one": for each `k` up to the certificate's largest threshold, some
/// horizon `N` must satisfy `card{n <= N : v_{∓n} < 1/k} >= N(1 - 1/k)`
/// (counting inside the declared density-one set when one is present).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionProbe {
    pub k_max: u32,
    pub horizon: u64,
    pub along_declared_set: bool,
    pub rows: Vec<ConditionRow>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionRow {
    pub k: u32,
    pub count_at_horizon: u64,
    pub first_achieved: Option<u64>,
    pub last_achieved: Option<(u64, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub pass: bool,
    pub blocks: Vec<BlockVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_i: Option<ConditionProbe>,
}

fn verify_block(
    op: &ShiftOperator,
    block: &CertBlock,
    epsilon: &Rational,
    opts: &VerifyOptions,
) -> Result<BlockVerdict, ChaosError> {
    if op.side() == Side::Unilateral && block.support.min() < 1 {
        return Err(ChaosError::DomainMismatch { k: block.k });
    }
    let required = ceil_to_u64(&(epsilon * Rational::from_integer(BigInt::from(block.n_k))));
    let exact_possible = op.weight.is_exact()
        && !matches!(&block.coeffs, Coefficients::PerIndex(v) if v.iter().any(|c| c.im != 0.0));
    let use_exact = match opts.backend {
        Backend::Exact => {
            if block.n_k > opts.n_exact_max {
                return Err(ChaosError::BackendOverflow {
                    n: block.n_k,
                    max: opts.n_exact_max,
                });
            }
            if !exact_possible {
                return Err(ChaosError::Shift(ShiftError::ExactUnavailable));
            }
            true
        }
        Backend::Float => false,
        Backend::Auto => exact_possible && block.n_k <= opts.n_exact_max,
    };
    let counted = if use_exact {
        count_ratio_at_least_exact(op, &block.support, &block.coeffs, block.n_k, block.k)?
    } else {
        count_ratio_at_least_f64(op, &block.support, &block.coeffs, block.n_k, block.k)?
    };
    Ok(BlockVerdict {
        k: block.k,
        n_k: block.n_k,
        count: counted.count,
        required,
        pass: counted.count >= required,
        trivial: block.k == 1,
        witness_ns: counted.witness_ns,
        backend: if use_exact {
            BackendUsed::Exact
        } else {
            BackendUsed::Float
        },
        near_ties: counted.near_ties,
    })
}

/// Verifies a certificate against a weight: every block must reach its
/// `⌈N_k ε⌉` count, and for the shift variants that need it (bilateral
/// backward, any forward) the near-zero condition probe must succeed up to
/// the certificate's largest horizon.
pub fn verify_certificate(
    weight: &WeightSequence,
    kind: ShiftKind,
    cert: &Certificate,
    opts: &VerifyOptions,
) -> Result<CertificateVerdict, ChaosError> {
    cert.validate()?;
    let op = ShiftOperator::new(kind, weight.clone());
    let blocks: Vec<BlockVerdict> = if opts.parallel {
        cert.blocks
            .par_iter()
            .map(|b| verify_block(&op, b, &cert.epsilon, opts))
            .collect::<Result<_, _>>()?
    } else {
        cert.blocks
            .iter()
            .map(|b| verify_block(&op, b, &cert.epsilon, opts))
            .collect::<Result<_, _>>()?
    };

    let needs_condition = match (kind, weight.side()) {
        (ShiftKind::Backward, Side::Bilateral) => true,
        (ShiftKind::Forward, _) => true,
        (ShiftKind::Backward, Side::Unilateral) => false,
    };
    let condition_i = if needs_condition || cert.density_one_set.is_some() {
        let k_max = cert.blocks.last().map(|b| b.k).unwrap_or(1).max(1);
        let horizon = opts
            .condition_horizon
            .unwrap_or_else(|| cert.blocks.last().map(|b| b.n_k).unwrap_or(1));
        let profile = match &cert.density_one_set {
            Some(set) => near_zero_profile_along(weight, kind, k_max, horizon, set),
            None => near_zero_profile(weight, kind, k_max, horizon),
        };
        let rows: Vec<ConditionRow> = profile
            .rows
            .iter()
            .map(|r| ConditionRow {
                k: r.k,
                count_at_horizon: r.count_at_horizon,
                first_achieved: r.first_achieved,
                last_achieved: r.last_achieved,
            })
            .collect();
        let pass = rows.iter().all(|r| r.first_achieved.is_some());
        Some(ConditionProbe {
            k_max,
            horizon,
            along_declared_set: cert.density_one_set.is_some(),
            rows,
            pass,
        })
    } else {
        None
    };

    let pass = blocks.iter().all(|b| b.pass) && condition_i.as_ref().is_none_or(|c| c.pass);
    Ok(CertificateVerdict {
        pass,
        blocks,
        condition_i,
    })
}

/// Largest threshold the generated example certificate supports (the float
/// backend walks `2k(2k)^k` entries per block).
pub const EXAMPLE_K_MAX: u32 = 6;
/// Largest threshold whose block fits the default exact-backend size.
pub const EXAMPLE_K_MAX_EXACT: u32 = 3;

/// The harmonic-weight backward-shift example certificate: block `k` has
/// `N_k = 2k(2k)^k`, support `[(2k)^k + 1, 2k(2k)^k]`, unit coefficients and
/// `ε = 1/2`. A `k = 1` block is degenerate (the strict bound `N_1(1 - 1/1)`
/// is 0) and gets flagged trivial by verification.
pub fn example_certificate(
    k_range: std::ops::RangeInclusive<u32>,
) -> Result<Certificate, ChaosError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 1 || lo > hi || hi > EXAMPLE_K_MAX {
        return Err(ChaosError::InfeasibleK {
            k: hi.max(lo),
            max: EXAMPLE_K_MAX,
        });
    }
    let mut blocks = Vec::new();
    for k in lo..=hi {
        let base = 2 * k as u128;
        let pow = base.pow(k); // (2k)^k
        let n_k = u64::try_from(base * pow).expect("horizon fits u64 for k <= 6");
        let s_lo = i64::try_from(pow + 1).expect("fits");
        let s_hi = i64::try_from(n_k).expect("fits");
        blocks.push(CertBlock {
            k,
            n_k,
            support: Support::single(s_lo, s_hi)?,
            coeffs: Coefficients::Ones,
        });
    }
    Ok(Certificate {
        epsilon: Rational::new(BigInt::one(), BigInt::from(2)),
        blocks,
        density_one_set: None,
    })
}

// ---------------------------------------------------------------------------
// DCC probe
// ---------------------------------------------------------------------------

/// Finite-horizon probe of the two-part chaos criterion for supplied orbit
/// norm families.
#[derive(Debug, Clone, Serialize)]
pub struct DccReport {
    pub a_rows: Vec<DccARow>,
    /// Every `x_i` eventually stays below every tolerance along the tail of
    /// the probed set.
    pub a_holds: bool,
    pub b_rows: Vec<DccBRow>,
    pub b_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DccARow {
    pub x_index: usize,
    pub tolerance: f64,
    /// Largest member of the probe set violating the tolerance (0 when none
    /// does); `None` when no tail is free of violations.
    pub tail_start: Option<u64>,
    /// Members of the set strictly beyond `tail_start`.
    pub tail_len: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DccBRow {
    pub k_index: usize,
    pub horizon: u64,
    pub count: u64,
    pub required: u64,
    pub pass: bool,
}

/// Probes: (a) the norms `x_norms[i](n)` vanish along the tail of `set`
/// against a decreasing tolerance schedule; (b) each `y_norms[k]` exceeds
/// `eps` on at least `⌈N_k eps⌉` of the first `N_k` steps.
pub fn dcc_probe(
    x_norms: &[&(dyn Fn(u64) -> f64 + Sync)],
    set: &IndexSet,
    y_norms: &[&(dyn Fn(u64) -> f64 + Sync)],
    eps: f64,
    n_ks: &[u64],
    tolerances: &[f64],
) -> Result<DccReport, ChaosError> {
    if y_norms.len() != n_ks.len() {
        return Err(ChaosError::BadCertificate(
            "y_norms and N_ks must pair up".into(),
        ));
    }
    if n_ks.windows(2).any(|w| w[0] >= w[1]) || n_ks.first() == Some(&0) {
        return Err(ChaosError::BadCertificate(
            "N_ks must be strictly increasing and positive".into(),
        ));
    }
    let n_global = n_ks.iter().copied().max().unwrap_or(1);
    let members = set
        .members_leq(n_global)
        .map_err(|e| ChaosError::BadCertificate(format!("probe set: {e}")))?;

    let mut a_rows = Vec::new();
    for (i, f) in x_norms.iter().enumerate() {
        for &tol in tolerances {
            let worst_violation = members.iter().rev().find(|&&n| f(n) >= tol).copied();
            let (tail_start, tail_len) = match worst_violation {
                None => (Some(0), members.len() as u64),
                Some(m) => {
                    let beyond = members.iter().filter(|&&n| n > m).count() as u64;
                    if beyond > 0 {
                        (Some(m), beyond)
                    } else {
                        (None, 0)
                    }
                }
            };
            a_rows.push(DccARow {
                x_index: i,
                tolerance: tol,
                tail_start,
                tail_len,
            });
        }
    }
    let a_holds = a_rows
        .iter()
        .all(|r| r.tail_start.is_some() && r.tail_len > 0);

    let mut b_rows = Vec::new();
    for (k_index, (&n_k, f)) in n_ks.iter().zip(y_norms).enumerate() {
        let count = (1..=n_k).filter(|&j| f(j) > eps).count() as u64;
        let required = (n_k as f64 * eps).ceil() as u64;
        b_rows.push(DccBRow {
            k_index,
            horizon: n_k,
            count,
            required,
            pass: count >= required,
        });
    }
    let b_holds = b_rows.iter().all(|r| r.pass);

    Ok(DccReport {
        a_rows,
        a_holds,
        b_rows,
        b_holds,
    })
}

// ---------------------------------------------------------------------------
// Pair statistics
// ---------------------------------------------------------------------------

/// Finite-horizon counts of how often an orbit-difference stays below the
/// separation and proximity thresholds. The estimates are ratios at this
/// horizon, not limits.
#[derive(Debug, Clone, Serialize)]
pub struct PairStats {
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub below_delta_count: u64,
    pub below_epsilon_count: u64,
    /// `card{n <= N : diff < ε} / N` as an exact ratio (estimates `F(ε)`).
    pub f_lower_estimate: String,
    /// `card{n <= N : diff < δ} / N` as an exact ratio (estimates `F*(δ)`).
    pub f_upper_estimate: String,
}

pub fn pair_stats(diff: &dyn Fn(u64) -> f64, eps: f64, delta: f64, horizon: u64) -> PairStats {
    assert!(horizon >= 1);
    let mut below_delta = 0u64;
    let mut below_eps = 0u64;
    for n in 1..=horizon {
        let d = diff(n);
        if d < delta {
            below_delta += 1;
        }
        if d < eps {
            below_eps += 1;
        }
    }
    let ratio = |c: u64| rational_to_string(&Rational::new(BigInt::from(c), BigInt::from(horizon)));
    PairStats {
        epsilon: eps,
        delta,
        horizon,
        below_delta_count: below_delta,
        below_epsilon_count: below_eps,
        f_lower_estimate: ratio(below_eps),
        f_upper_estimate: ratio(below_delta),
    }
}

// ---------------------------------------------------------------------------
// p-independence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PIndependenceReport {
    /// `(p, overall pass)` — identical across p by construction since the
    /// verified ratios are p-free.
    pub verdicts: Vec<(f64, bool)>,
    pub identical: bool,
    pub spot_checks: Vec<SpotCheck>,
}

/// `‖T^n s‖^p / ‖s‖^p` computed from orbit norms with coefficients
/// `C^{1/p}`, against the p-free ratio the verification consumed.
#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub p: f64,
    pub k: u32,
    pub n: u64,
    pub ratio_from_norms: f64,
    pub ratio_direct: f64,
    pub rel_err: f64,
}

pub fn p_independence_report(
    weight: &WeightSequence,
    kind: ShiftKind,
    cert: &Certificate,
    ps: &[f64],
    opts: &VerifyOptions,
) -> Result<(PIndependenceReport, CertificateVerdict), ChaosError> {
    let verdict = verify_certificate(weight, kind, cert, opts)?;
    let verdicts: Vec<(f64, bool)> = ps.iter().map(|&p| (p, verdict.pass)).collect();

    let op = ShiftOperator::new(kind, weight.clone());
    let mut spot_checks = Vec::new();
    for block in cert.blocks.iter().filter(|b| b.n_k <= 100_000) {
        let n_probe = (block.n_k / 2).max(1);
        // direct p-free ratio at n_probe
        let num: f64 = block
            .support
            .iter()
            .zip(mag_iter(&block.coeffs, block.support.len()))
            .map(|(j, m)| m * op.preimage_mass(j, n_probe))
            .sum();
        let den: f64 = block
            .support
            .iter()
            .zip(mag_iter(&block.coeffs, block.support.len()))
            .map(|(j, m)| m * weight.value(j))
            .sum();
        let ratio_direct = num / den;
        for &p in ps {
            let s = SimpleFunction::new(
                block
                    .support
                    .iter()
                    .zip(mag_iter(&block.coeffs, block.support.len()))
                    .map(|(j, m)| (j, Complex64::new(m.powf(1.0 / p), 0.0))),
            );
            let norm_n = op.orbit_norm_p(&s, n_probe, p);
            let norm_0 = op.orbit_norm_p(&s, 0, p);
            let ratio_from_norms = norm_n / norm_0;
            let rel_err = ((ratio_from_norms - ratio_direct) / ratio_direct).abs();
            spot_checks.push(SpotCheck {
                p,
                k: block.k,
                n: n_probe,
                ratio_from_norms,
                ratio_direct,
                rel_err,
            });
        }
    }
    Ok((
        PIndependenceReport {
            identical: verdicts.windows(2).all(|w| w[0].1 == w[1].1),
            verdicts,
            spot_checks,
        },
        verdict,
    ))
}

fn mag_iter(coeffs: &Coefficients, len: u64) -> Box<dyn Iterator<Item = f64> + '_> {
    match coeffs {
        Coefficients::Ones => Box::new(std::iter::repeat_n(1.0, len as usize)),
        Coefficients::PerIndex(v) => Box::new(v.iter().map(|c| c.norm())),
    }
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

/// Wire form of a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub epsilon: String,
    pub blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_one_set: Option<Vec<(u64, u64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDoc {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "S")]
    pub s: Vec<(i64, i64)>,
    #[serde(rename = "C")]
    pub c: CoeffDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffDoc {
    /// `"ones"`.
    Named(String),
    /// `[[re, im], ...]` aligned with the support in increasing order.
    List(Vec<(f64, f64)>),
}

impl CertificateDoc {
    pub fn to_certificate(&self) -> Result<Certificate, ChaosError> {
        let epsilon = parse_rational(&self.epsilon)
            .map_err(|e| ChaosError::BadCertificate(format!("epsilon: {e}")))?;
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let support = Support::intervals(b.s.clone())?;
            let coeffs = match &b.c {
                CoeffDoc::Named(name) if name == "ones" => Coefficients::Ones,
                CoeffDoc::Named(other) => {
                    return Err(ChaosError::BadCertificate(format!(
                        "unknown coefficient shorthand `{other}`"
                    )));
                }
                CoeffDoc::List(pairs) => Coefficients::PerIndex(
                    pairs
                        .iter()
                        .map(|&(re, im)| Complex64::new(re, im))
                        .collect(),
                ),
            };
            blocks.push(CertBlock {
                k: b.k,
                n_k: b.n,
                support,
                coeffs,
            });
        }
        let density_one_set = match &self.density_one_set {
            Some(ivs) => Some(
                IndexSet::intervals(ivs.clone())
                    .map_err(|e| ChaosError::BadCertificate(format!("density_one_set: {e}")))?,
            ),
            None => None,
        };
        let cert = Certificate {
            epsilon,
            blocks,
            density_one_set,
        };
        cert.validate()?;
        Ok(cert)
    }

    pub fn from_certificate(cert: &Certificate) -> Self {
        CertificateDoc {
            epsilon: rational_to_string(&cert.epsilon),
            blocks: cert
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    k: b.k,
                    n: b.n_k,
                    s: b.support.ranges().to_vec(),
                    c: match &b.coeffs {
                        Coefficients::Ones => CoeffDoc::Named("ones".into()),
                        Coefficients::PerIndex(v) => {
                            CoeffDoc::List(v.iter().map(|c| (c.re, c.im)).collect())
                        }
                    },
                })
                .collect(),
            density_one_set: cert.density_one_set.as_ref().map(|s| match s {
                IndexSet::Intervals(ivs) => ivs.clone(),
                IndexSet::Explicit(list) => list.iter().map(|&n| (n, n)).collect(),
                IndexSet::Predicate { .. } => Vec::new(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shifts::ratio_sequence_exact;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn half() -> Rational {
        rat(1, 2)
    }

    #[test]
    fn example_certificate_shapes() {
        let cert = example_certificate(2..=3).unwrap();
        assert_eq!(cert.epsilon, half());
        assert_eq!(cert.blocks[0].k, 2);
        assert_eq!(cert.blocks[0].n_k, 64);
        assert_eq!(cert.blocks[0].support.ranges(), &[(17, 64)]);
        assert_eq!(cert.blocks[1].n_k, 1296);
        assert_eq!(cert.blocks[1].support.ranges(), &[(217, 1296)]);
        assert!(matches!(
            example_certificate(2..=9),
            Err(ChaosError::InfeasibleK { .. })
        ));
    }

    #[test]
    fn harmonic_example_passes_exactly() {
        let cert = example_certificate(2..=3).unwrap();
        let verdict = verify_certificate(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Exact,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(verdict.pass);
        assert!(verdict.condition_i.is_none()); // unilateral backward variant
        for b in &verdict.blocks {
            // the witness-range bound N_k (1 - 1/k) is stronger than ⌈N_k ε⌉
            let strict_bound = b.n_k - b.n_k / b.k as u64;
            assert!(b.count >= strict_bound, "k={} count={}", b.k, b.count);
            assert_eq!(b.backend, BackendUsed::Exact);
        }
    }

    #[test]
    fn constant_weight_fails_all_blocks() {
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let cert = example_certificate(2..=3).unwrap();
        let verdict =
            verify_certificate(&v, ShiftKind::Backward, &cert, &VerifyOptions::default()).unwrap();
        assert!(!verdict.pass);
        for b in &verdict.blocks {
            assert_eq!(b.count, 0); // ratio ≡ 1 < 2
            assert!(!b.pass);
        }
    }

    #[test]
    fn k1_block_is_trivial_flagged() {
        let cert = example_certificate(1..=2).unwrap();
        let verdict = verify_certificate(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &cert,
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(verdict.blocks[0].trivial);
        assert!(!verdict.blocks[1].trivial);
    }

    #[test]
    fn piecewise_bilateral_with_density_set() {
        // blocks inherited from the harmonic positive side, plus the
        // near-zero condition along A = ∪ [k^k + 1, (k-1) k^k]
        let v = WeightSequence::piecewise_bilateral();
        let mut cert = example_certificate(2..=3).unwrap();
        let mut ivs = Vec::new();
        for k in 3..=8u64 {
            let nk = k.pow(k as u32);
            ivs.push((nk + 1, (k - 1) * nk));
        }
        cert.density_one_set = Some(IndexSet::intervals(ivs).unwrap());
        let verdict =
            verify_certificate(&v, ShiftKind::Backward, &cert, &VerifyOptions::default()).unwrap();
        assert!(verdict.pass);
        let probe = verdict
            .condition_i
            .expect("bilateral backward probes the condition");
        assert!(probe.pass);
        assert!(probe.along_declared_set);
        // oracle: direct scan — v(-n) < 1/2 on A∩[1,54] gives exactly 27 = 54/2
        let direct = (1..=54u64)
            .filter(|&n| {
                let in_a = (3..=8u64).any(|k| {
                    let nk = k.pow(k as u32);
                    nk < n && n <= (k - 1) * nk
                });
                in_a && v.exact(-(n as i64)).unwrap() < half()
            })
            .count() as u64;
        assert_eq!(direct, 27);
    }

    #[test]
    fn mirrored_forward_certificate_passes() {
        // reversing the bilateral weight about 0 turns the backward example
        // into a forward one: supports negate, ratios are identical
        let v = WeightSequence::mirrored(WeightSequence::piecewise_bilateral()).unwrap();
        let backward = example_certificate(2..=3).unwrap();
        let blocks: Vec<CertBlock> = backward
            .blocks
            .iter()
            .map(|b| CertBlock {
                k: b.k,
                n_k: b.n_k,
                support: Support::single(-(b.support.max()), -(b.support.min())).unwrap(),
                coeffs: Coefficients::Ones,
            })
            .collect();
        let cert = Certificate {
            epsilon: half(),
            blocks,
            density_one_set: None,
        };
        let verdict =
            verify_certificate(&v, ShiftKind::Forward, &cert, &VerifyOptions::default()).unwrap();
        assert!(verdict.pass, "{verdict:?}");
        // forward variant probes the near-zero condition on v_{+n}
        let probe = verdict.condition_i.expect("forward variant probes");
        assert!(probe.pass);
        // counts match the backward example block for block
        let straight = verify_certificate(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &example_certificate(2..=3).unwrap(),
            &VerifyOptions::default(),
        )
        .unwrap();
        for (f, b) in verdict.blocks.iter().zip(&straight.blocks) {
            // the mirrored weight keeps the negative side alive where the
            // unilateral harmonic weight vanishes, so the forward counts
            // dominate the unilateral backward ones
            assert!(f.count >= b.count, "k={}: {} < {}", f.k, f.count, b.count);
        }
    }

    #[test]
    fn exact_and_float_backends_agree() {
        let cert = example_certificate(2..=3).unwrap();
        let v = WeightSequence::harmonic();
        let exact = verify_certificate(
            &v,
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Exact,
                ..Default::default()
            },
        )
        .unwrap();
        let float = verify_certificate(
            &v,
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Float,
                ..Default::default()
            },
        )
        .unwrap();
        for (e, f) in exact.blocks.iter().zip(&float.blocks) {
            assert_eq!(e.count, f.count, "k={}", e.k);
            assert_eq!(f.near_ties, 0, "near-tie at k={} must be reported", e.k);
        }
    }

    #[test]
    fn float_ties_are_reported_not_absorbed() {
        // constant weight, threshold k = 1: every ratio sits exactly on the
        // threshold, so the float backend must flag every entry
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let cert = Certificate {
            epsilon: half(),
            blocks: vec![CertBlock {
                k: 1,
                n_k: 20,
                support: Support::single(-3, 3).unwrap(),
                coeffs: Coefficients::Ones,
            }],
            density_one_set: None,
        };
        let verdict = verify_certificate(
            &v,
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Float,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(verdict.blocks[0].count, 20);
        assert_eq!(verdict.blocks[0].near_ties, 20);
        let exact = verify_certificate(
            &v,
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Exact,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(exact.blocks[0].count, verdict.blocks[0].count);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let cert = example_certificate(2..=4).unwrap();
        let v = WeightSequence::harmonic();
        let par =
            verify_certificate(&v, ShiftKind::Backward, &cert, &VerifyOptions::default()).unwrap();
        let seq = verify_certificate(
            &v,
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                parallel: false,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in par.blocks.iter().zip(&seq.blocks) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exact_backend_refuses_large_blocks() {
        let cert = example_certificate(4..=4).unwrap(); // N_4 = 32768
        let err = verify_certificate(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &cert,
            &VerifyOptions {
                backend: Backend::Exact,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(ChaosError::BackendOverflow { .. })));
    }

    #[test]
    fn domain_mismatch_detected() {
        let cert = Certificate {
            epsilon: half(),
            blocks: vec![CertBlock {
                k: 2,
                n_k: 10,
                support: Support::single(-5, 5).unwrap(),
                coeffs: Coefficients::Ones,
            }],
            density_one_set: None,
        };
        let err = verify_certificate(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &cert,
            &VerifyOptions::default(),
        );
        assert!(matches!(err, Err(ChaosError::DomainMismatch { k: 2 })));
    }

    #[test]
    fn raising_epsilon_cannot_rescue_a_failing_block() {
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let mut cert = example_certificate(2..=2).unwrap();
        let fail_small =
            verify_certificate(&v, ShiftKind::Backward, &cert, &VerifyOptions::default()).unwrap();
        assert!(!fail_small.pass);
        cert.epsilon = rat(9, 10);
        let fail_big =
            verify_certificate(&v, ShiftKind::Backward, &cert, &VerifyOptions::default()).unwrap();
        assert!(!fail_big.pass);
        assert!(fail_big.blocks[0].required >= fail_small.blocks[0].required);
    }

    #[test]
    fn dcc_probe_basis_vectors() {
        // ‖T^n χ_{j}‖^p = v_{j-n} = 0 once n >= j: condition (a) holds exactly
        let op = ShiftOperator::new(ShiftKind::Backward, WeightSequence::harmonic());
        let x1 = move |n: u64| op.preimage_mass(10, n);
        let op2 = ShiftOperator::new(ShiftKind::Backward, WeightSequence::harmonic());
        let x2 = move |n: u64| op2.preimage_mass(25, n);
        let all = IndexSet::predicate(|_| true, 10_000).unwrap();
        let zero_y = |_: u64| 0.0f64;
        let report =
            dcc_probe(&[&x1, &x2], &all, &[&zero_y], 0.5, &[100], &[1.0, 0.5, 0.1]).unwrap();
        assert!(report.a_holds);
        // y ≡ 0 fails (b) for every eps > 0
        assert!(!report.b_holds);
    }

    #[test]
    fn dcc_probe_example_witness_vectors() {
        // y_k = z_k / (k^{1/p} ‖z_k‖): ‖T^n y_k‖ = (ratio_n / k)^{1/p} >= 1
        // on the witness range, so the (b) count reaches N_k (1 - 1/k)
        let v = WeightSequence::harmonic();
        let op = ShiftOperator::new(ShiftKind::Backward, v.clone());
        let cert = example_certificate(2..=3).unwrap();
        let p = 2.0f64;
        let mut y_fns: Vec<Box<dyn Fn(u64) -> f64 + Sync>> = Vec::new();
        for block in &cert.blocks {
            let ratios =
                ratio_sequence_exact(&op, &block.support, &block.coeffs, block.n_k).unwrap();
            let k = block.k as f64;
            y_fns.push(Box::new(move |n: u64| {
                let r = ratios[(n - 1) as usize].to_f64().unwrap_or(0.0);
                (r / k).powf(1.0 / p)
            }));
        }
        let y_refs: Vec<&(dyn Fn(u64) -> f64 + Sync)> = y_fns.iter().map(|b| b.as_ref()).collect();
        let x = |_: u64| 0.0f64;
        let all = IndexSet::predicate(|_| true, 10_000).unwrap();
        let report = dcc_probe(&[&x], &all, &y_refs, 0.5, &[64, 1296], &[1.0, 0.5]).unwrap();
        assert!(report.b_holds);
        for row in &report.b_rows {
            let k = row.k_index as u64 + 2;
            let strict_bound = row.horizon - row.horizon / k;
            assert!(row.count >= strict_bound);
        }
    }

    #[test]
    fn pair_stats_cases() {
        let zero = |_: u64| 0.0f64;
        let s = pair_stats(&zero, 0.5, 0.1, 100);
        assert_eq!(s.below_delta_count, 100);
        assert_eq!(s.below_epsilon_count, 100);
        assert_eq!(s.f_upper_estimate, "1");

        let linear = |n: u64| n as f64;
        let s = pair_stats(&linear, 100.0, 7.5, 200);
        assert_eq!(s.below_delta_count, 7); // n in 1..=7
        assert_eq!(s.below_epsilon_count, 99);

        // alternating: 0 on A (piecewise blocks), n off A
        let a: Vec<(u64, u64)> = (3..=6u64)
            .map(|k| {
                let nk = k.pow(k as u32);
                (nk + 1, (k - 1) * nk)
            })
            .collect();
        let a_set = IndexSet::intervals(a.clone()).unwrap();
        let diff = move |n: u64| {
            if a.iter().any(|&(lo, hi)| lo <= n && n <= hi) {
                0.0
            } else {
                n as f64
            }
        };
        let horizon = 768;
        let s = pair_stats(&diff, 0.5, 0.5, horizon);
        // oracle: direct count of A ∩ [1, horizon]
        let expect = a_set.count_leq(horizon).unwrap();
        assert_eq!(s.below_delta_count, expect);
    }

    #[test]
    fn p_independence_identical_verdicts() {
        let cert = example_certificate(2..=3).unwrap();
        let (report, verdict) = p_independence_report(
            &WeightSequence::harmonic(),
            ShiftKind::Backward,
            &cert,
            &[1.0, 2.0, 3.0],
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(verdict.pass);
        assert!(report.identical);
        assert_eq!(report.verdicts.len(), 3);
        assert!(report.verdicts.iter().all(|&(_, pass)| pass));
        assert!(!report.spot_checks.is_empty());
        for check in &report.spot_checks {
            assert!(check.rel_err <= 1e-9, "spot check {check:?}");
        }
    }

    #[test]
    fn p_independence_identical_failures() {
        let v = WeightSequence::constant(Side::Bilateral, Rational::one()).unwrap();
        let cert = example_certificate(2..=2).unwrap();
        let (report, verdict) = p_independence_report(
            &v,
            ShiftKind::Backward,
            &cert,
            &[1.0, 2.0],
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(!verdict.pass);
        assert!(report.identical);
        assert!(report.verdicts.iter().all(|&(_, pass)| !pass));
    }

    #[test]
    fn certificate_doc_roundtrip() {
        let json = r#"{
            "epsilon": "1/2",
            "blocks": [{"k": 2, "N": 64, "S": [[17, 64]], "C": "ones"}],
            "density_one_set": [[28, 54]]
        }"#;
        let doc: CertificateDoc = serde_json::from_str(json).unwrap();
        let cert = doc.to_certificate().unwrap();
        assert_eq!(cert.epsilon, half());
        assert_eq!(cert.blocks[0].support.ranges(), &[(17, 64)]);
        let back = CertificateDoc::from_certificate(&cert);
        assert_eq!(back.epsilon, "1/2");

        let bad: CertificateDoc = serde_json::from_str(
            r#"{"epsilon": "3/2", "blocks": [{"k": 2, "N": 4, "S": [[1, 2]], "C": "ones"}]}"#,
        )
        .unwrap();
        assert!(bad.to_certificate().is_err());
    }

    #[test]
    fn certificate_validation_rejects_bad_shapes() {
        let mk = |k1: u32, k2: u32, n1: u64, n2: u64| Certificate {
            epsilon: half(),
            blocks: vec![
                CertBlock {
                    k: k1,
                    n_k: n1,
                    support: Support::single(1, 4).unwrap(),
                    coeffs: Coefficients::Ones,
                },
                CertBlock {
                    k: k2,
                    n_k: n2,
                    support: Support::single(1, 4).unwrap(),
                    coeffs: Coefficients::Ones,
                },
            ],
            density_one_set: None,
        };
        assert!(mk(2, 2, 4, 8).validate().is_err()); // k not increasing
        assert!(mk(2, 3, 8, 8).validate().is_err()); // N_k not increasing
        assert!(mk(2, 3, 4, 8).validate().is_ok());
    }
}
