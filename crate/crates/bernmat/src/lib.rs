//! Empirical toolkit for the singularity of random Bernoulli matrices.
//!
//! The crate combines exact integer linear algebra (determinant-based
//! singularity oracles), exact Lévy concentration-function machinery for
//! Bernoulli-weighted sums, a random averaging process on `ℓ₁(Z)`,
//! randomized rounding to the integer lattice with verifiable certificates,
//! and a reproducible experiment harness driving all of the above.
//!
//! Layering, bottom to top:
//!
//! * [`rng`], [`model`] — counter-based reproducible sampling of Bernoulli
//!   and sign matrices/vectors.
//! * [`exactlinalg`] — exact determinant/rank/nullspace over the integers,
//!   floating `s_min` and spectral norm.
//! * [`concentration`] — exact laws of `∑ bᵢxᵢ`, Lévy concentration,
//!   anticoncentration thresholds, essential LCD.
//! * [`geometry`] — compressible/incompressible classification and integer
//!   product domains with admissibility checking.
//! * [`averaging`] — the two-point averaging recursion on windowed
//!   functions with decay, spike and mixing diagnostics.
//! * [`rounding`] — randomized rounding with certified anticoncentration
//!   preservation.
//! * [`experiments`] — parallel, bit-reproducible experiment drivers with
//!   JSON/CSV persistence.
//! * [`oracle`] — independent brute-force reference implementations used
//!   only to validate the fast paths.

pub mod averaging;
pub mod concentration;
pub mod exactlinalg;
pub mod experiments;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod rounding;
