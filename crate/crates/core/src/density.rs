//! Finite-horizon density arithmetic for subsets of `ℕ` (positive integers)
//! and the inductive construction of index sets with full upper density on
//! which a family of values is uniformly small.
//!
//! Densities are never claimed as limits. Every quantity is a count or an
//! exact ratio at an explicitly supplied horizon.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::numeric::{ceil_to_u64, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DensityError {
    #[error("explicit index list must be strictly increasing with entries >= 1")]
    BadExplicitList,
    #[error("intervals must satisfy 1 <= lo <= hi and be sorted and disjoint")]
    BadIntervals,
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("predicate set queried at {requested} beyond its declared horizon {horizon}")]
    HorizonExceeded { horizon: u64, requested: u64 },
    #[error("horizons must be nonempty and strictly increasing")]
    BadHorizons,
}

/// A subset of the positive integers in one of three representations.
///
/// Predicate-form sets carry a declared evaluation horizon and are never
/// queried beyond it.
#[derive(Clone)]
pub enum IndexSet {
    /// Strictly increasing list of indices, all >= 1.
    Explicit(Vec<u64>),
    /// Pairwise disjoint closed intervals `[lo, hi]`, sorted, `lo >= 1`.
    Intervals(Vec<(u64, u64)>),
    /// Membership predicate valid on `[1, horizon]`.
    Predicate {
        pred: Arc<dyn Fn(u64) -> bool + Send + Sync>,
        horizon: u64,
    },
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Explicit(v) => write!(f, "IndexSet::Explicit({} entries)", v.len()),
            IndexSet::Intervals(v) => write!(f, "IndexSet::Intervals({:?})", v),
            IndexSet::Predicate { horizon, .. } => {
                write!(f, "IndexSet::Predicate {{ horizon: {} }}", horizon)
            }
        }
    }
}

impl IndexSet {
    pub fn explicit(list: Vec<u64>) -> Result<Self, DensityError> {
        let ok = !list.contains(&0) && list.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(DensityError::BadExplicitList);
        }
        Ok(IndexSet::Explicit(list))
    }

    pub fn intervals(list: Vec<(u64, u64)>) -> Result<Self, DensityError> {
        let sorted = list.windows(2).all(|w| w[0].1 < w[1].0);
        let valid = list.iter().all(|&(lo, hi)| lo >= 1 && lo <= hi);
        if !sorted || !valid {
            return Err(DensityError::BadIntervals);
        }
        Ok(IndexSet::Intervals(list))
    }

    pub fn predicate(
        pred: impl Fn(u64) -> bool + Send + Sync + 'static,
        horizon: u64,
    ) -> Result<Self, DensityError> {
        if horizon == 0 {
            return Err(DensityError::ZeroHorizon);
        }
        Ok(IndexSet::Predicate {
            pred: Arc::new(pred),
            horizon,
        })
    }

    pub fn empty() -> Self {
        IndexSet::Explicit(Vec::new())
    }

    /// `card(A ∩ [1, n])`.
    pub fn count_leq(&self, n: u64) -> Result<u64, DensityError> {
        if n == 0 {
            return Err(DensityError::ZeroHorizon);
        }
        match self {
            IndexSet::Explicit(list) => Ok(list.partition_point(|&x| x <= n) as u64),
            IndexSet::Intervals(ivs) => Ok(ivs
                .iter()
                .take_while(|&&(lo, _)| lo <= n)
                .map(|&(lo, hi)| hi.min(n) - lo + 1)
                .sum()),
            IndexSet::Predicate { pred, horizon } => {
                if n > *horizon {
                    return Err(DensityError::HorizonExceeded {
                        horizon: *horizon,
                        requested: n,
                    });
                }
                Ok((1..=n).filter(|&m| pred(m)).count() as u64)
            }
        }
    }

    pub fn contains(&self, n: u64) -> Result<bool, DensityError> {
        if n == 0 {
            return Ok(false);
        }
        match self {
            IndexSet::Explicit(list) => Ok(list.binary_search(&n).is_ok()),
            IndexSet::Intervals(ivs) => Ok(ivs.iter().any(|&(lo, hi)| lo <= n && n <= hi)),
            IndexSet::Predicate { pred, horizon } => {
                if n > *horizon {
                    return Err(DensityError::HorizonExceeded {
                        horizon: *horizon,
                        requested: n,
                    });
                }
                Ok(pred(n))
            }
        }
    }

    /// Members of `A ∩ [1, n]` in increasing order.
    pub fn members_leq(&self, n: u64) -> Result<Vec<u64>, DensityError> {
        if n == 0 {
            return Err(DensityError::ZeroHorizon);
        }
        match self {
            IndexSet::Explicit(list) => Ok(list[..list.partition_point(|&x| x <= n)].to_vec()),
            IndexSet::Intervals(ivs) => Ok(ivs
                .iter()
                .take_while(|&&(lo, _)| lo <= n)
                .flat_map(|&(lo, hi)| lo..=hi.min(n))
                .collect()),
            IndexSet::Predicate { pred, horizon } => {
                if n > *horizon {
                    return Err(DensityError::HorizonExceeded {
                        horizon: *horizon,
                        requested: n,
                    });
                }
                Ok((1..=n).filter(|&m| pred(m)).collect())
            }
        }
    }
}

/// Counts and exact ratios of a set at a family of horizons. The upper and
/// lower fields are finite-horizon estimates over the supplied horizons, not
/// limits.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub horizons: Vec<u64>,
    pub counts: Vec<u64>,
    pub ratios: Vec<Rational>,
    pub upper_estimate: Rational,
    pub lower_estimate: Rational,
}

pub fn density_profile(set: &IndexSet, horizons: &[u64]) -> Result<DensityProfile, DensityError> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(DensityError::BadHorizons);
    }
    let counts: Vec<u64> = horizons
        .iter()
        .map(|&n| set.count_leq(n))
        .collect::<Result<_, _>>()?;
    let ratios: Vec<Rational> = counts
        .iter()
        .zip(horizons)
        .map(|(&c, &n)| Rational::new(BigInt::from(c), BigInt::from(n)))
        .collect();
    let upper = ratios.iter().max().expect("nonempty").clone();
    let lower = ratios.iter().min().expect("nonempty").clone();
    Ok(DensityProfile {
        horizons: horizons.to_vec(),
        counts,
        ratios,
        upper_estimate: upper,
        lower_estimate: lower,
    })
}

// ---------------------------------------------------------------------------
// Density-one merge construction
// ---------------------------------------------------------------------------

/// How strict the per-block smallness threshold is when selecting block `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// Threshold `1/k` for block `k`: the emitted-block conditions are
    /// enforced directly on the intersected set.
    Direct,
    /// Threshold `1/(2k^2)` for block `k >= 2` together with the per-family
    /// cardinality requirement that makes the block conditions automatic.
    ProofTwoKSquared,
}

/// Horizon family `(M_j)` plus the threshold rule.
#[derive(Debug, Clone)]
pub struct MergeSchedule {
    pub horizons: Vec<u64>,
    pub rule: ThresholdRule,
}

impl MergeSchedule {
    /// Geometric default `M_j = ⌈(3/2)^j⌉` capped at `n_max` (the cap itself
    /// is included as the final horizon).
    pub fn geometric(n_max: u64) -> Self {
        let mut horizons = Vec::new();
        let mut x = 1.0f64;
        loop {
            x *= 1.5;
            let m = (x.ceil() as u64).min(n_max);
            if horizons.last() != Some(&m) {
                horizons.push(m);
            }
            if m == n_max {
                break;
            }
        }
        MergeSchedule {
            horizons,
            rule: ThresholdRule::Direct,
        }
    }

    pub fn with_rule(mut self, rule: ThresholdRule) -> Self {
        self.rule = rule;
        self
    }
}

/// One emitted block `A_k ⊂ (M_{m_{k-1}}, M_{m_k}]`.
#[derive(Debug, Clone)]
pub struct MergeBlock {
    pub k: u32,
    /// Index of `m_k` into the schedule's horizon list.
    pub m_index: usize,
    /// `M_{m_k}`.
    pub horizon: u64,
    /// `M_{m_{k-1}}` (0 for the first block).
    pub lower: u64,
    pub members: Vec<u64>,
    /// `⌈M_{m_k} (1 - 1/k)⌉` — the block cardinality requirement.
    pub required: u64,
    /// Threshold the members were selected under.
    pub threshold: f64,
    /// Largest `values_i(n)` over the block, for `i <= k` (`-inf` if empty).
    pub max_value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeStop {
    /// The ratio condition `M_{m_{k-1}}/M_j < 1/(2k)` has no candidate
    /// horizon left in the schedule for block `next_k`.
    HorizonExhausted { next_k: u32 },
    /// Candidate horizons existed for block `k` but the cardinality
    /// requirement failed at every one of them.
    Infeasible { k: u32 },
}

/// Result of [`merge_density_one`]: the union set plus the construction log.
#[derive(Debug, Clone)]
pub struct MergeConstruction {
    pub set: IndexSet,
    pub blocks: Vec<MergeBlock>,
    pub stop: MergeStop,
}

impl MergeConstruction {
    pub fn achieved_k(&self) -> u32 {
        self.blocks.last().map(|b| b.k).unwrap_or(0)
    }
}

/// Builds `A = ∪_k A_k` inductively: block `k` lives in
/// `(M_{m_{k-1}}, M_{m_k}]`, has cardinality at least `M_{m_k}(1 - 1/k)`,
/// and `values_i(n) < 1/k` on it for every `i <= k`. `m_k` is chosen as the
/// smallest schedule index satisfying the ratio condition
/// `M_{m_{k-1}}/M_{m_k} < 1/(2k)` and the rule's cardinality requirement;
/// when no further block fits, the last block is re-emitted at the largest
/// feasible horizon and the construction reports why it stopped.
///
/// `values` are evaluated once per index up to the schedule's last horizon
/// and cached, so they must be pure.
pub fn merge_density_one(
    values: &[&(dyn Fn(u64) -> f64 + Sync)],
    schedule: &MergeSchedule,
) -> Result<MergeConstruction, DensityError> {
    let horizons = &schedule.horizons;
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(DensityError::BadHorizons);
    }
    let n_max = *horizons.last().expect("nonempty");
    let cache: Vec<Vec<f64>> = values
        .iter()
        .map(|f| (1..=n_max).map(f).collect())
        .collect();
    let value_at = |i: usize, n: u64| cache[i][(n - 1) as usize];

    let threshold_for = |k: u32| -> f64 {
        match schedule.rule {
            ThresholdRule::Direct => 1.0 / k as f64,
            ThresholdRule::ProofTwoKSquared => {
                if k == 1 {
                    1.0
                } else {
                    1.0 / (2 * k * k) as f64
                }
            }
        }
    };

    // Members of the candidate block for `k` over (lower, m_hor].
    let block_members = |k: u32, lower: u64, m_hor: u64| -> Vec<u64> {
        let fam = values.len().min(k as usize);
        let t = threshold_for(k);
        ((lower + 1)..=m_hor)
            .filter(|&n| (0..fam).all(|i| value_at(i, n) < t))
            .collect()
    };

    let required_for = |k: u32, m_hor: u64| -> u64 {
        // ⌈M (1 - 1/k)⌉ = ⌈M (k-1) / k⌉
        ceil_to_u64(&Rational::new(
            BigInt::from(m_hor) * BigInt::from(k - 1),
            BigInt::from(k),
        ))
    };

    // Under the proof rule the selected horizon must additionally satisfy the
    // per-family bound card{n <= M : values_i(n) < 1/(2k^2)} >= M(1 - 1/(2k^2)).
    let proof_family_ok = |k: u32, m_hor: u64| -> bool {
        if schedule.rule != ThresholdRule::ProofTwoKSquared || k == 1 {
            return true;
        }
        let fam = values.len().min(k as usize);
        let t = threshold_for(k);
        let need = m_hor as u128 * (2 * k as u128 * k as u128 - 1);
        (0..fam).all(|i| {
            let count = (1..=m_hor).filter(|&n| value_at(i, n) < t).count() as u128;
            count * 2 * k as u128 * k as u128 >= need
        })
    };

    let mut blocks: Vec<MergeBlock> = Vec::new();
    let stop;
    let mut k: u32 = 1;
    loop {
        let (prev_index, lower) = match blocks.last() {
            Some(b) => (b.m_index as i64, b.horizon),
            None => (-1, 0),
        };
        // Condition (2): 2k * M_{m_{k-1}} < M_j. Vacuous for k = 1.
        let ratio_ok =
            |m_hor: u64| -> bool { k == 1 || (2 * k as u128) * (lower as u128) < m_hor as u128 };
        let mut chosen = None;
        let mut any_ratio_ok = false;
        let first_j = (prev_index + 1) as usize;
        for (j, &m_hor) in horizons.iter().enumerate().skip(first_j) {
            if !ratio_ok(m_hor) {
                continue;
            }
            any_ratio_ok = true;
            if !proof_family_ok(k, m_hor) {
                continue;
            }
            let members = block_members(k, lower, m_hor);
            if (members.len() as u64) >= required_for(k, m_hor) {
                chosen = Some((j, members));
                break;
            }
        }
        match chosen {
            Some((j, members)) => {
                let m_hor = horizons[j];
                let fam = values.len().min(k as usize);
                let max_value = members
                    .iter()
                    .flat_map(|&n| (0..fam).map(move |i| value_at(i, n)))
                    .fold(f64::NEG_INFINITY, f64::max);
                blocks.push(MergeBlock {
                    k,
                    m_index: j,
                    horizon: m_hor,
                    lower,
                    members,
                    required: required_for(k, m_hor),
                    threshold: threshold_for(k),
                    max_value,
                });
                k += 1;
            }
            None => {
                stop = if any_ratio_ok {
                    MergeStop::Infeasible { k }
                } else {
                    MergeStop::HorizonExhausted { next_k: k }
                };
                break;
            }
        }
    }

    // Re-emit the final block at the largest feasible horizon so the union
    // covers as much of [1, n_max] as the conditions allow.
    if let Some(last) = blocks.last().cloned() {
        let k = last.k;
        let lower = last.lower;
        let ratio_ok =
            |m_hor: u64| -> bool { k == 1 || (2 * k as u128) * (lower as u128) < m_hor as u128 };
        for j in ((last.m_index + 1)..horizons.len()).rev() {
            let m_hor = horizons[j];
            if !ratio_ok(m_hor) || !proof_family_ok(k, m_hor) {
                continue;
            }
            let members = block_members(k, lower, m_hor);
            if (members.len() as u64) >= required_for(k, m_hor) {
                let fam = values.len().min(k as usize);
                let max_value = members
                    .iter()
                    .flat_map(|&n| (0..fam).map(move |i| value_at(i, n)))
                    .fold(f64::NEG_INFINITY, f64::max);
                *blocks.last_mut().expect("nonempty") = MergeBlock {
                    k,
                    m_index: j,
                    horizon: m_hor,
                    lower,
                    members,
                    required: required_for(k, m_hor),
                    threshold: threshold_for(k),
                    max_value,
                };
                break;
            }
        }
    }

    let mut all: Vec<u64> = Vec::new();
    for b in &blocks {
        all.extend_from_slice(&b.members);
    }
    debug_assert!(all.windows(2).all(|w| w[0] < w[1]));
    Ok(MergeConstruction {
        set: IndexSet::Explicit(all),
        blocks,
        stop,
    })
}
