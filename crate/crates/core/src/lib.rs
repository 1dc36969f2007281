//! Finite-horizon analysis of distributional chaos for shift and composition
//! operators.
//!
//! The library works with weighted `ℓ^p` spaces over `ℕ` or `ℤ` seen as
//! `L^p` spaces of a discrete measure (point masses `μ({j}) = v_j`), and with
//! `L^p` of the unit circle under disk automorphisms. It provides:
//!
//! - [`density`]: counting and density estimates for subsets of `ℕ`, plus the
//!   inductive construction of index sets of full upper density on which a
//!   family of values is uniformly small.
//! - [`weights`]: weight-sequence generators (harmonic, piecewise bilateral,
//!   tables, mirrored) and the weighted-shift ↔ weighted-space conversion.
//! - [`shifts`]: closed-form orbit norms of finite-support vectors under
//!   backward/forward shifts, and the p-free ratio sequences they induce.
//! - [`chaos`]: verification of witness certificates for distributional
//!   chaos, scrambled-pair statistics, and p-independence reports.
//! - [`mobius`]: disk-automorphism classification, normal-form iteration,
//!   arc preimages on the circle, and the parabolic/hyperbolic growth
//!   machinery behind the dense-chaos verdict.
//!
//! Everything here is finite-horizon: the library never claims a limit, it
//! reports counts and inequalities at explicitly stated horizons. Exact
//! rational arithmetic is used wherever generators are rational; a log-domain
//! float backend covers the rest.

pub mod chaos;
pub mod density;
pub mod mobius;
pub mod numeric;
pub mod shifts;
pub mod weights;

pub use numeric::Rational;
