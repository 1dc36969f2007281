//! Disk-automorphism dynamics on the unit circle: fixed-point
//! classification, normal-form iteration, arc preimages with their
//! normalized Lebesgue measures, and the parabolic strip/growth machinery
//! behind the dense-chaos verdict for circle composition operators.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MobiusError {
    #[error("matrix determinant is zero")]
    ZeroDeterminant,
    #[error("map does not preserve the unit disk")]
    NotAutomorphism,
    #[error("trace test and fixed-point location disagree (numerically degenerate input)")]
    DegenerateClassification,
    #[error("hypothesis Im σ(z) >= (1 + ⌈1/b⌉) b violated: needed {needed}, got {got}")]
    HypothesisViolated { needed: f64, got: f64 },
    #[error("strip index {j} below the admissible minimum {min}")]
    StripOutOfRange { j: i64, min: i64 },
    #[error("arc is not contained in the designated strip")]
    ContainmentViolated,
    #[error("strip {j} has angular width {width:e}, below the 1e-13 resolution floor")]
    ResolutionExceeded { j: u64, width: f64 },
    #[error("operation defined for parabolic automorphisms only")]
    NotParabolic,
    #[error("invalid automorphism spec: {0}")]
    BadSpec(String),
}

/// Angle of a nonzero complex number normalized to `[0, 2π)`.
pub fn angle_of(z: Complex64) -> f64 {
    z.im.atan2(z.re).rem_euclid(TAU)
}

/// `θ(z) - base` normalized to `[0, 2π)` — the branch used by all parabolic
/// computations, which measure angles from the fixed point.
pub fn angle_from(base: f64, z: Complex64) -> f64 {
    (angle_of(z) - base).rem_euclid(TAU)
}

fn unit(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

// ---------------------------------------------------------------------------
// Möbius maps
// ---------------------------------------------------------------------------

/// `z ↦ (az + b)/(cz + d)` with `ad - bc` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// Value of a Möbius map, with the point at infinity kept explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointOrInf {
    Finite(Complex64),
    Infinity,
}

impl PointOrInf {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            PointOrInf::Finite(z) => Some(z),
            PointOrInf::Infinity => None,
        }
    }
}

impl MobiusMap {
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, MobiusError> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(MobiusError::ZeroDeterminant);
        }
        let s = det.sqrt();
        Ok(MobiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        MobiusMap {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn rotation(theta: f64) -> Self {
        MobiusMap::new(
            unit(theta),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .expect("rotation is invertible")
    }

    pub fn apply(&self, z: Complex64) -> PointOrInf {
        let den = self.c * z + self.d;
        if den.norm() < 1e-300 {
            return PointOrInf::Infinity;
        }
        PointOrInf::Finite((self.a * z + self.b) / den)
    }

    pub fn apply_inf(&self) -> PointOrInf {
        if self.c.norm() < 1e-300 {
            PointOrInf::Infinity
        } else {
            PointOrInf::Finite(self.a / self.c)
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        // adjugate; determinant is already 1
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        // self ∘ other as matrices
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Matrix power by binary exponentiation (negative `n` uses the inverse).
    pub fn pow(&self, n: i64) -> MobiusMap {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = MobiusMap::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// `φ'(z) = 1/(cz + d)^2` (determinant is normalized to 1).
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        1.0 / (den * den)
    }

    /// Checks that the map sends sample points of `𝕋` to `𝕋` (to `1e-10`)
    /// and `𝔻` into `𝔻`.
    pub fn is_disk_automorphism(&self) -> bool {
        for i in 0..32 {
            let z = unit(TAU * i as f64 / 32.0 + 0.05);
            match self.apply(z) {
                PointOrInf::Finite(w) => {
                    if (w.norm() - 1.0).abs() > 1e-10 {
                        return false;
                    }
                }
                PointOrInf::Infinity => return false,
            }
        }
        match self.apply(Complex64::new(0.0, 0.0)) {
            PointOrInf::Finite(w) => w.norm() < 1.0 + 1e-10,
            PointOrInf::Infinity => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Conjugacy class of a disk automorphism, keyed by its fixed points.
#[derive(Debug, Clone, PartialEq)]
pub enum AutomorphismClass {
    Identity,
    /// One fixed point inside the disk; conjugate to the rotation
    /// `w ↦ e^{iθ} w`.
    Elliptic {
        fixed_interior: Complex64,
        rotation_angle: f64,
    },
    /// A single fixed point on the circle; conjugate to `w ↦ w + bi`.
    Parabolic {
        alpha: Complex64,
        b: f64,
    },
    /// Two fixed points on the circle; conjugate to `w ↦ λw` with the
    /// attractive point `alpha` and repulsive point `beta`.
    Hyperbolic {
        alpha: Complex64,
        beta: Complex64,
        lambda: f64,
    },
}

impl AutomorphismClass {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AutomorphismClass::Identity => "identity",
            AutomorphismClass::Elliptic { .. } => "elliptic",
            AutomorphismClass::Parabolic { .. } => "parabolic",
            AutomorphismClass::Hyperbolic { .. } => "hyperbolic",
        }
    }

    pub fn has_fixed_point_in_disk(&self) -> bool {
        matches!(
            self,
            AutomorphismClass::Identity | AutomorphismClass::Elliptic { .. }
        )
    }
}

/// A disk automorphism together with its classification; iteration goes
/// through the conjugated normal form, which keeps long orbits accurate.
#[derive(Debug, Clone)]
pub struct ClassifiedMap {
    pub map: MobiusMap,
    pub class: AutomorphismClass,
}

/// Classifies a disk automorphism by solving its fixed-point quadratic and
/// cross-checking against the normalized-trace test (`tr² = 4 det` exactly
/// at the parabolic boundary).
pub fn classify(map: &MobiusMap) -> Result<ClassifiedMap, MobiusError> {
    if !map.is_disk_automorphism() {
        return Err(MobiusError::NotAutomorphism);
    }
    // identity?
    let ident = (0..8).all(|i| {
        let z = unit(TAU * i as f64 / 8.0 + 0.1);
        match map.apply(z) {
            PointOrInf::Finite(w) => (w - z).norm() < 1e-12,
            PointOrInf::Infinity => false,
        }
    });
    if ident {
        return Ok(ClassifiedMap {
            map: *map,
            class: AutomorphismClass::Identity,
        });
    }

    let trace = map.a + map.d;
    let t2 = trace * trace; // real for disk automorphisms after det-normalization
    let t2_re = t2.re;

    let class = if map.c.norm() < 1e-14 {
        // affine rotation about an interior point; the second fixed point is ∞
        let p = map.b / (map.d - map.a);
        if p.norm() >= 1.0 {
            return Err(MobiusError::DegenerateClassification);
        }
        if t2_re > 4.0 + 1e-9 {
            return Err(MobiusError::DegenerateClassification);
        }
        let mult = map.derivative(p);
        AutomorphismClass::Elliptic {
            fixed_interior: p,
            rotation_angle: angle_of(mult),
        }
    } else {
        // fixed points of c z^2 + (d - a) z - b = 0; the discriminant equals
        // tr^2 - 4 at determinant 1. The trace decides the class (stable),
        // the fixed-point locations must agree with it (cross-check).
        let disc = t2 - 4.0;
        let sq = disc.sqrt();
        let z1 = (map.a - map.d + sq) / (2.0 * map.c);
        let z2 = (map.a - map.d - sq) / (2.0 * map.c);
        if t2.im.abs() > 1e-6 {
            return Err(MobiusError::DegenerateClassification);
        }
        if disc.norm() <= 1e-9 {
            // parabolic: the double root must sit on the circle
            let alpha = (z1 + z2) / 2.0;
            if (alpha.norm() - 1.0).abs() > 1e-6 {
                return Err(MobiusError::DegenerateClassification);
            }
            let alpha = alpha / alpha.norm();
            // b from ψ = σ∘φ∘σ^{-1} = translation by bi, read off at σ(-α) = 0
            let phi_neg_alpha = map
                .apply(-alpha)
                .finite()
                .ok_or(MobiusError::DegenerateClassification)?;
            let sigma = (alpha + phi_neg_alpha) / (alpha - phi_neg_alpha);
            AutomorphismClass::Parabolic { alpha, b: sigma.im }
        } else if t2_re > 4.0 {
            // hyperbolic: two distinct fixed points on the circle
            let both_on_circle = (z1.norm() - 1.0).abs() < 1e-7 && (z2.norm() - 1.0).abs() < 1e-7;
            if !both_on_circle {
                return Err(MobiusError::DegenerateClassification);
            }
            let d1 = map.derivative(z1).norm();
            let (alpha, beta, lambda) = if d1 < 1.0 {
                (z1, z2, d1)
            } else {
                (z2, z1, map.derivative(z2).norm())
            };
            AutomorphismClass::Hyperbolic {
                alpha: alpha / alpha.norm(),
                beta: beta / beta.norm(),
                lambda,
            }
        } else {
            // elliptic: exactly one fixed point strictly inside the disk
            let p = if z1.norm() < 1.0 { z1 } else { z2 };
            if p.norm() >= 1.0 {
                return Err(MobiusError::DegenerateClassification);
            }
            AutomorphismClass::Elliptic {
                fixed_interior: p,
                rotation_angle: angle_of(map.derivative(p)),
            }
        }
    };
    Ok(ClassifiedMap { map: *map, class })
}

/// Builds the map from its normal form: the conjugation `σ` returning the
/// class representative (`λw`, `w + bi`, or `e^{iθ}w`) is inverted exactly.
pub fn from_normal_form(class: &AutomorphismClass) -> Result<MobiusMap, MobiusError> {
    let one = Complex64::new(1.0, 0.0);
    match class {
        AutomorphismClass::Identity => Ok(MobiusMap::identity()),
        AutomorphismClass::Elliptic {
            fixed_interior,
            rotation_angle,
        } => {
            let p = *fixed_interior;
            // m(z) = (z - p)/(1 - conj(p) z), rotation in the middle
            let m = MobiusMap::new(one, -p, -p.conj(), one)?;
            let rot = MobiusMap::rotation(*rotation_angle);
            Ok(m.inverse().compose(&rot).compose(&m))
        }
        AutomorphismClass::Parabolic { alpha, b } => {
            let sigma = MobiusMap::new(one, *alpha, -one, *alpha)?;
            let shift =
                MobiusMap::new(one, Complex64::new(0.0, *b), Complex64::new(0.0, 0.0), one)?;
            Ok(sigma.inverse().compose(&shift).compose(&sigma))
        }
        AutomorphismClass::Hyperbolic {
            alpha,
            beta,
            lambda,
        } => {
            let sigma = MobiusMap::new(-one, *alpha, -one, *beta)?;
            let scale = MobiusMap::new(
                Complex64::new(*lambda, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                one,
            )?;
            Ok(sigma.inverse().compose(&scale).compose(&sigma))
        }
    }
}

impl ClassifiedMap {
    /// `φ^n(z)` through the conjugated normal form. Matrix powers are only
    /// used for the identity.
    pub fn iterate(&self, n: i64, z: Complex64) -> PointOrInf {
        match &self.class {
            AutomorphismClass::Identity => PointOrInf::Finite(z),
            AutomorphismClass::Elliptic {
                fixed_interior,
                rotation_angle,
            } => {
                let p = *fixed_interior;
                let w = (z - p) / (1.0 - p.conj() * z);
                let rotated = w * unit((n as f64 * rotation_angle).rem_euclid(TAU));
                PointOrInf::Finite((rotated + p) / (1.0 + p.conj() * rotated))
            }
            AutomorphismClass::Parabolic { alpha, b } => {
                let a = *alpha;
                if (z - a).norm() < 1e-15 {
                    return PointOrInf::Finite(a);
                }
                let w = (a + z) / (a - z) + Complex64::new(0.0, n as f64 * b);
                let den = w + 1.0;
                if den.norm() < 1e-300 {
                    return PointOrInf::Infinity;
                }
                PointOrInf::Finite(a * (w - 1.0) / den)
            }
            AutomorphismClass::Hyperbolic {
                alpha,
                beta,
                lambda,
            } => {
                let (a, bt) = (*alpha, *beta);
                if (z - a).norm() < 1e-15 {
                    return PointOrInf::Finite(a);
                }
                if (z - bt).norm() < 1e-15 {
                    return PointOrInf::Finite(bt);
                }
                let scale = lambda.powi(n.clamp(-4000, 4000) as i32);
                let w = (a - z) / (bt - z) * scale;
                if !w.re.is_finite() || !w.im.is_finite() {
                    // λ^n overflowed: the orbit has reached the repulsive point
                    return PointOrInf::Finite(bt);
                }
                let den = w - 1.0;
                if den.norm() < 1e-300 {
                    return PointOrInf::Infinity;
                }
                PointOrInf::Finite((bt * w - a) / den)
            }
        }
    }

    /// `φ^n` restricted to `𝕋`: the result is renormalized onto the circle.
    pub fn iterate_circle(&self, n: i64, z: Complex64) -> Complex64 {
        match self.iterate(n, z) {
            PointOrInf::Finite(w) => {
                let r = w.norm();
                if r > 0.0 {
                    w / r
                } else {
                    w
                }
            }
            // the pole never lies on the circle for a disk automorphism
            PointOrInf::Infinity => unreachable!("pole on the unit circle"),
        }
    }
}

// ---------------------------------------------------------------------------
// Cayley-type imaginary part
// ---------------------------------------------------------------------------

/// `Im σ(z)` for `σ(z) = (α+z)/(α-z)` and unit `z`, via the trigonometric
/// closed form `sin Δ / (1 - cos Δ) = cot(Δ/2)` with `Δ = θ(z) - θ(α)`.
/// Returns `+inf` at `z = α` (where `σ(α) = ∞`).
pub fn cayley_imaginary(alpha: Complex64, z: Complex64) -> f64 {
    let delta = angle_from(angle_of(alpha), z);
    if delta < 1e-15 || TAU - delta < 1e-15 {
        return f64::INFINITY;
    }
    1.0 / (delta / 2.0).tan()
}

/// Inverse of [`cayley_imaginary`]: the angle offset `Δ ∈ (0, 2π)` with
/// `cot(Δ/2) = level`.
pub fn angle_at_level(level: f64) -> f64 {
    2.0 * 1.0f64.atan2(level).rem_euclid(PI)
}

// ---------------------------------------------------------------------------
// Arcs
// ---------------------------------------------------------------------------

/// A circular arc, counterclockwise from `start`, with normalized Lebesgue
/// measure `length / 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    pub fn new(start: f64, length: f64) -> Self {
        assert!(length > 0.0 && length <= TAU + 1e-12, "arc length {length}");
        Arc {
            start: start.rem_euclid(TAU),
            length: length.min(TAU),
        }
    }

    /// Arc with the given normalized measure centered at `mid_angle`.
    pub fn from_midpoint(mid_angle: f64, measure: f64) -> Self {
        assert!(measure > 0.0 && measure <= 1.0);
        let length = measure * TAU;
        Arc::new(mid_angle - length / 2.0, length)
    }

    pub fn measure(&self) -> f64 {
        self.length / TAU
    }

    pub fn end(&self) -> f64 {
        (self.start + self.length).rem_euclid(TAU)
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + self.length / 2.0).rem_euclid(TAU)
    }

    pub fn complement(&self) -> Arc {
        Arc::new(self.start + self.length, TAU - self.length)
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        (theta - self.start).rem_euclid(TAU) <= self.length
    }

    /// Whether `self` sits inside `other` up to angular tolerance `tol`.
    pub fn contained_in(&self, other: &Arc, tol: f64) -> bool {
        let off = (self.start - other.start).rem_euclid(TAU);
        let off = if off > TAU - tol { 0.0 } else { off };
        off <= other.length + tol && off + self.length <= other.length + tol
    }
}

/// Preimage `φ^{-n}(I)` of an arc: both endpoints are pulled back and the
/// image of the midpoint picks which of the two candidate arcs is the right
/// one. Lengths collapsing below `1e-14` are clamped and flagged.
pub fn arc_preimage(map: &ClassifiedMap, n: u64, arc: &Arc) -> (Arc, bool) {
    if arc.length >= TAU - 1e-15 {
        return (*arc, false);
    }
    let steps = -(n as i64);
    let wa = map.iterate_circle(steps, unit(arc.start));
    let wb = map.iterate_circle(steps, unit(arc.start + arc.length));
    let wm = map.iterate_circle(steps, unit(arc.start + arc.length / 2.0));
    let a1 = angle_of(wa);
    let a2 = angle_of(wb);
    let mid = angle_of(wm);
    let candidate = (a2 - a1).rem_euclid(TAU);
    let offset = (mid - a1).rem_euclid(TAU);
    let (start, mut length) = if offset <= candidate {
        (a1, candidate)
    } else {
        (a2, TAU - candidate)
    };
    let mut degenerate = false;
    if length < 1e-14 {
        length = 1e-14;
        degenerate = true;
    }
    (Arc::new(start, length), degenerate)
}

// ---------------------------------------------------------------------------
// Parabolic machinery
// ---------------------------------------------------------------------------

fn ceil_recip(b: f64) -> i64 {
    (1.0 / b).ceil() as i64
}

/// Closed-form derivative of the inverse angle map `y = φ^{-1}(z)` of a
/// parabolic automorphism, together with the lower bound
/// `Im σ(z) / (Im σ(z) - b)` it must exceed.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeCheck {
    pub derivative: f64,
    pub lower_bound: f64,
    pub exceeds_bound: bool,
}

/// Requires `Im σ(z) >= (1 + ⌈1/b⌉) b` (so the preimage stays in the upper
/// quadrant where the closed form is monotone). `b` must be positive.
pub fn circle_derivative(
    alpha: Complex64,
    b: f64,
    z: Complex64,
) -> Result<DerivativeCheck, MobiusError> {
    assert!(b > 0.0, "parabolic translation must be positive here");
    let s = cayley_imaginary(alpha, z);
    let needed = (1.0 + ceil_recip(b) as f64) * b;
    if s < needed || s.is_nan() {
        return Err(MobiusError::HypothesisViolated { needed, got: s });
    }
    let theta_alpha = angle_of(alpha);
    let dz = angle_from(theta_alpha, z);
    let dy = angle_at_level(s - b);
    let derivative = (1.0 - dy.cos()) / (1.0 - dz.cos());
    let lower_bound = s / (s - b);
    Ok(DerivativeCheck {
        derivative,
        lower_bound,
        exceeds_bound: derivative > lower_bound,
    })
}

/// The arc `T_j` with `Im σ(T_j) = [(j-1)b, jb)`, defined for
/// `j >= 2 + ⌈1/b⌉`. Adjacent strips share exactly one boundary angle and
/// their measures decrease in `j`.
pub fn parabolic_strips(alpha: Complex64, b: f64, j: i64) -> Result<Arc, MobiusError> {
    assert!(b > 0.0);
    let min = 2 + ceil_recip(b);
    if j < min {
        return Err(MobiusError::StripOutOfRange { j, min });
    }
    let theta_alpha = angle_of(alpha);
    let inner = angle_at_level(j as f64 * b); // higher level, closer to α
    let outer = angle_at_level((j - 1) as f64 * b);
    Ok(Arc::new(theta_alpha + inner, outer - inner))
}

/// One step of [`growth_bound_check`].
#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub k: u64,
    pub measure: f64,
    /// `(j/(j-k)) μ(B)`.
    pub bound: f64,
    pub pass: bool,
    /// `μ(φ^{-k}(B)) >= ((j-k+1)/(j-k)) μ(φ^{-(k-1)}(B))`.
    pub step_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub j: i64,
    pub base_measure: f64,
    pub rows: Vec<GrowthRow>,
    pub pass: bool,
}

/// Checks `μ(φ^{-k}(B)) >= (j/(j-k)) μ(B)` for `B ⊂ T_j` at every requested
/// `k` in `[0, j - 1 - ⌈1/b⌉]`, along with the single-step recursion.
/// Preimages go through [`arc_preimage`], whose parabolic path is the exact
/// level arithmetic of the conjugated translation.
pub fn growth_bound_check(
    map: &ClassifiedMap,
    j: i64,
    arc: &Arc,
    ks: &[u64],
) -> Result<GrowthReport, MobiusError> {
    let (alpha, b) = match &map.class {
        AutomorphismClass::Parabolic { alpha, b } => (*alpha, *b),
        _ => return Err(MobiusError::NotParabolic),
    };
    let strip = parabolic_strips(alpha, b, j)?;
    if !arc.contained_in(&strip, 1e-10) {
        return Err(MobiusError::ContainmentViolated);
    }
    let k_cap = (j - 1 - ceil_recip(b)) as u64;
    if ks.iter().any(|&k| k > k_cap) {
        return Err(MobiusError::StripOutOfRange {
            j: k_cap as i64,
            min: 0,
        });
    }
    let base = arc.measure();
    let mut rows = Vec::new();
    for &k in ks {
        let measure = if k == 0 {
            base
        } else {
            arc_preimage(map, k, arc).0.measure()
        };
        let bound = j as f64 / (j - k as i64) as f64 * base;
        let prev = if k == 0 {
            base
        } else {
            arc_preimage(map, k - 1, arc).0.measure()
        };
        let step_bound = if k == 0 {
            prev
        } else {
            (j - k as i64 + 1) as f64 / (j - k as i64) as f64 * prev
        };
        rows.push(GrowthRow {
            k,
            measure,
            bound,
            pass: measure >= bound - 1e-12,
            step_pass: measure >= step_bound - 1e-12,
        });
    }
    let pass = rows.iter().all(|r| r.pass && r.step_pass);
    Ok(GrowthReport {
        j,
        base_measure: base,
        rows,
        pass,
    })
}

/// Norm table of the unboundedness witness vector `f_i = Σ_j j^{-1/p} 𝟙_{B_j}`
/// built from equal-measure sub-arcs `B_j ⊂ T_j`.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessTable {
    pub i: u32,
    pub n_i: u64,
    pub j_hi: u64,
    /// Common measure of the `B_j` (the measure of the thinnest strip used).
    pub piece_measure: f64,
    pub f_norm_p: f64,
    pub rows: Vec<WitnessRow>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub k: u64,
    pub norm_p: f64,
    pub ratio: f64,
    /// `(ln(i·n_i - k) - ln(1 + ⌈1/b⌉)) · μ(B)`.
    pub log_bound: f64,
    pub pass: bool,
}

/// Builds the witness for a parabolic automorphism: `n_i = 2^i`, strips up
/// to `j = i·n_i + 2 + ⌈1/b⌉`, sub-arcs of equal measure, and checks the
/// logarithmic lower bound on `‖T^k f_i‖^p` at sampled `k`. Fails with
/// `ResolutionExceeded` when the strips collapse below the `1e-13` angular
/// floor.
pub fn unboundedness_witness(
    class: &AutomorphismClass,
    i: u32,
    p: f64,
) -> Result<WitnessTable, MobiusError> {
    let (alpha, b) = match class {
        AutomorphismClass::Parabolic { alpha, b } => (*alpha, *b),
        _ => return Err(MobiusError::NotParabolic),
    };
    assert!(p >= 1.0);
    let map = ClassifiedMap {
        map: from_normal_form(class)?,
        class: class.clone(),
    };
    let c1b = ceil_recip(b);
    let n_i = 2u64.pow(i);
    let j_hi = i as u64 * n_i + 2 + c1b as u64;
    let thin = parabolic_strips(alpha, b, j_hi as i64)?;
    if thin.length < 1e-13 {
        return Err(MobiusError::ResolutionExceeded {
            j: j_hi,
            width: thin.length,
        });
    }
    let piece = thin.measure();
    // B_j anchored at the inner (higher-level) end of T_j
    let arcs: Vec<(u64, Arc)> = (n_i..=j_hi)
        .map(|j| {
            let t = parabolic_strips(alpha, b, j as i64).expect("j in range");
            (j, Arc::new(t.start, piece * TAU))
        })
        .collect();
    let f_norm_p: f64 = arcs.iter().map(|(j, a)| a.measure() / *j as f64).sum();

    // sample k across [n_i, (i-1) n_i], capped by the admissible range
    let k_hi = ((i as u64 - 1) * n_i).max(n_i);
    let k_cap = i as u64 * n_i - 1 - c1b as u64;
    let mut ks: Vec<u64> = vec![n_i, (n_i + k_hi) / 2, k_hi]
        .into_iter()
        .map(|k| k.min(k_cap))
        .collect();
    ks.dedup();
    let mut rows = Vec::new();
    for k in ks {
        let norm_p: f64 = arcs
            .iter()
            .map(|(j, a)| arc_preimage(&map, k, a).0.measure() / *j as f64)
            .sum();
        let log_bound = ((i as u64 * n_i - k) as f64).ln() - (1.0 + c1b as f64).ln();
        let log_bound = log_bound * piece;
        rows.push(WitnessRow {
            k,
            norm_p,
            ratio: norm_p / f_norm_p,
            log_bound,
            pass: norm_p >= log_bound,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(WitnessTable {
        i,
        n_i,
        j_hi,
        piece_measure: piece,
        f_norm_p,
        rows,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Dense-chaos verdict
// ---------------------------------------------------------------------------

/// Verdict plus evidence: automorphisms without interior fixed points admit
/// shrinking arc preimages (plus a growth witness), those with one preserve
/// arc measures after conjugation to a rotation.
#[derive(Debug, Clone, Serialize)]
pub struct DdcVerdict {
    pub chaotic: bool,
    pub kind: String,
    pub evidence: DdcEvidence,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DdcEvidence {
    /// Measures of `φ^{-n}(C_k)` where `C_k` is the complement of the arc of
    /// measure `1/(2k)` around the attractive fixed point. The preimages
    /// concentrate near the repulsive point and shrink toward measure 0.
    AttractorDecay {
        curves: Vec<DecayCurve>,
        growth: GrowthWitness,
    },
    /// Arc measures are invariant under the rotation conjugate.
    RotationInvariance {
        max_deviation: f64,
        samples: Vec<(u64, f64)>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCurve {
    pub k: u32,
    pub points: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthWitness {
    Parabolic {
        report: GrowthReport,
    },
    Hyperbolic {
        m: f64,
        rows: Vec<GrowthRow>,
        pass: bool,
    },
}

/// Derivative-based growth near the attractive point of a hyperbolic map:
/// `μ(φ^{-k}(B_n)) >= M^k μ(B_n)` with `M = (1+λ)/(2λ)`, for `B_n` chosen so
/// that all `k <= n` preimages stay where `|（φ^{-1})'| > M`.
fn hyperbolic_growth(map: &ClassifiedMap, n: u64) -> GrowthWitness {
    let (alpha, lambda) = match &map.class {
        AutomorphismClass::Hyperbolic { alpha, lambda, .. } => (*alpha, *lambda),
        _ => unreachable!("hyperbolic_growth on a non-hyperbolic map"),
    };
    let m = (1.0 + lambda) / (2.0 * lambda);
    let inv = map.map.inverse();
    let theta_alpha = angle_of(alpha);
    // largest arc around α where |(φ^{-1})'| clears M
    let mut eps0 = 0.4;
    while eps0 > 1e-5 {
        let arc = Arc::from_midpoint(theta_alpha, eps0);
        let ok = (0..64).all(|s| {
            let theta = arc.start + arc.length * (s as f64 + 0.5) / 64.0;
            inv.derivative(unit(theta)).norm() > m
        });
        if ok {
            break;
        }
        eps0 /= 2.0;
    }
    let base = Arc::from_midpoint(theta_alpha, eps0);
    // pull the base forward n times: every later preimage stays inside it
    let fa = map.iterate_circle(n as i64, unit(base.start));
    let fb = map.iterate_circle(n as i64, unit(base.start + base.length));
    let a1 = angle_of(fa);
    let len = (angle_of(fb) - a1).rem_euclid(TAU);
    let b_n = Arc::new(a1, len.max(1e-14));
    let base_measure = b_n.measure();
    let mut rows = Vec::new();
    for k in 0..=n {
        let measure = arc_preimage(map, k, &b_n).0.measure();
        let bound = m.powi(k as i32) * base_measure;
        rows.push(GrowthRow {
            k,
            measure,
            bound,
            pass: measure >= bound * (1.0 - 1e-9),
            step_pass: true,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    GrowthWitness::Hyperbolic { m, rows, pass }
}

/// Dense-chaos verdict for the induced composition operator: true exactly
/// when the automorphism has no fixed point in the disk (parabolic or
/// hyperbolic), with finite-horizon evidence either way.
pub fn ddc_verdict(map: &MobiusMap, horizon: u64) -> Result<DdcVerdict, MobiusError> {
    let classified = classify(map)?;
    let chaotic = !classified.class.has_fixed_point_in_disk();
    let evidence = match &classified.class {
        AutomorphismClass::Parabolic { alpha, b } => {
            let curves = decay_curves(&classified, *alpha, horizon);
            // the growth machinery needs a positive translation; for b < 0
            // the inverse map provides it and is parabolic at the same point
            let growth_map = if *b > 0.0 {
                classified.clone()
            } else {
                ClassifiedMap {
                    map: classified.map.inverse(),
                    class: AutomorphismClass::Parabolic {
                        alpha: *alpha,
                        b: -b,
                    },
                }
            };
            let j = 20;
            let strip = parabolic_strips(*alpha, b.abs(), j)?;
            let report = growth_bound_check(
                &growth_map,
                j,
                &strip,
                &(0..=(j - 1 - ceil_recip(b.abs())) as u64).collect::<Vec<_>>(),
            )?;
            DdcEvidence::AttractorDecay {
                curves,
                growth: GrowthWitness::Parabolic { report },
            }
        }
        AutomorphismClass::Hyperbolic { alpha, .. } => {
            let curves = decay_curves(&classified, *alpha, horizon);
            let growth = hyperbolic_growth(&classified, 8);
            DdcEvidence::AttractorDecay { curves, growth }
        }
        AutomorphismClass::Elliptic { .. } | AutomorphismClass::Identity => {
            // conjugate to a rotation and confirm arc-measure invariance
            let rot = match &classified.class {
                AutomorphismClass::Elliptic { rotation_angle, .. } => {
                    MobiusMap::rotation(*rotation_angle)
                }
                _ => MobiusMap::identity(),
            };
            let rot = classify(&rot)?;
            let arc = Arc::from_midpoint(1.0, 0.23);
            let mut samples = Vec::new();
            let mut max_dev = 0.0f64;
            for n in 1..=horizon.min(50) {
                let measure = arc_preimage(&rot, n, &arc).0.measure();
                let dev = (measure - arc.measure()).abs();
                max_dev = max_dev.max(dev);
                samples.push((n, measure));
            }
            DdcEvidence::RotationInvariance {
                max_deviation: max_dev,
                samples,
            }
        }
    };
    Ok(DdcVerdict {
        chaotic,
        kind: classified.class.kind_name().to_string(),
        evidence,
    })
}

fn decay_curves(map: &ClassifiedMap, alpha: Complex64, horizon: u64) -> Vec<DecayCurve> {
    let theta_alpha = angle_of(alpha);
    (1..=3u32)
        .map(|k| {
            let c_k = Arc::from_midpoint(theta_alpha, 1.0 / (2.0 * k as f64)).complement();
            let points = (0..=horizon)
                .map(|n| (n, arc_preimage(map, n, &c_k).0.measure()))
                .collect();
            DecayCurve { k, points }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

/// Wire form of an automorphism: either coefficients or a normal form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutomorphismDoc {
    Matrix {
        a: (f64, f64),
        b: (f64, f64),
        c: (f64, f64),
        d: (f64, f64),
    },
    Normal {
        normal_form: NormalFormDoc,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalFormDoc {
    Hyperbolic {
        alpha_angle: f64,
        beta_angle: f64,
        lambda: f64,
    },
    Parabolic {
        alpha_angle: f64,
        b: f64,
    },
    Rotation {
        angle: f64,
    },
}

impl AutomorphismDoc {
    pub fn to_map(&self) -> Result<MobiusMap, MobiusError> {
        match self {
            AutomorphismDoc::Matrix { a, b, c, d } => {
                let cx = |t: (f64, f64)| Complex64::new(t.0, t.1);
                MobiusMap::new(cx(*a), cx(*b), cx(*c), cx(*d))
            }
            AutomorphismDoc::Normal { normal_form } => {
                let class = match normal_form {
                    NormalFormDoc::Hyperbolic {
                        alpha_angle,
                        beta_angle,
                        lambda,
                    } => {
                        if !(0.0 < *lambda && *lambda < 1.0) {
                            return Err(MobiusError::BadSpec("lambda must lie in (0, 1)".into()));
                        }
                        if (alpha_angle - beta_angle).rem_euclid(TAU).abs() < 1e-12 {
                            return Err(MobiusError::BadSpec(
                                "hyperbolic fixed points must be distinct".into(),
                            ));
                        }
                        AutomorphismClass::Hyperbolic {
                            alpha: unit(*alpha_angle),
                            beta: unit(*beta_angle),
                            lambda: *lambda,
                        }
                    }
                    NormalFormDoc::Parabolic { alpha_angle, b } => {
                        if *b == 0.0 {
                            return Err(MobiusError::BadSpec(
                                "parabolic translation b must be nonzero".into(),
                            ));
                        }
                        AutomorphismClass::Parabolic {
                            alpha: unit(*alpha_angle),
                            b: *b,
                        }
                    }
                    NormalFormDoc::Rotation { angle } => {
                        return MobiusMap::new(
                            unit(*angle),
                            Complex64::new(0.0, 0.0),
                            Complex64::new(0.0, 0.0),
                            Complex64::new(1.0, 0.0),
                        );
                    }
                };
                from_normal_form(&class)
            }
        }
    }
}
