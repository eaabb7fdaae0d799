//! Vector bundles from generalized pairs of unitary cocycles.
//!
//! Given two families of unitary transition functions `g±` on the overlaps of
//! a finite covering, the crate assembles the matrix fields
//! `A± = (φ_α φ_β g±_αβ)`, clamps them to `B± = f(A±)`, forms the block field
//!
//! ```text
//!     Q = [ 1 − B₊   κ(B₊) ]
//!         [ κ(B₊)    B₋    ]
//! ```
//!
//! and extracts a genuine projection from `Q` by a spectral cut. Every step is
//! measured against its explicit operator-norm bound, and the resulting
//! bundles are compared through their rank and first Chern number.
//!
//! The crate is `no_std` (with `alloc`). Enable `std` for the standard
//! library, `parallel` to spread per-point work over a rayon pool, and
//! `serde` for serializable reports.

#![cfg_attr(not(feature = "std"), no_std)]
// NaN must fail bound checks, hence `!(x < bound)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod almostrep;
pub mod assembly;
pub mod cocycle;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod projection;
pub mod space;
pub mod spectral;

mod par;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use num_complex::Complex64;

/// Measured quantities at or below this level are rounding noise; a bound
/// check on such a value passes regardless of how small the bound is.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// `measured < bound`, treating values within [`ROUNDOFF_FLOOR`] of zero as zero.
pub fn strictly_below(measured: f64, bound: f64) -> bool {
    measured < bound || measured <= ROUNDOFF_FLOOR
}
