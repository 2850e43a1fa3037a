//! Constructive machinery around the least negative Hecke eigenvalue of
//! level-one eigenforms.
//!
//! * [`cheb_minorant`]: the Chebyshev peak polynomial `f` and its certification.
//! * [`sato_tate`]: `g = |f|²` expanded in Fourier and Chebyshev (`X_n`) bases.
//! * [`modforms`]: exact q-expansions, the Miller basis, Hecke matrices, eigenforms.
//! * [`petersson`]: harmonic weights and the Petersson-average decay scan.
//! * [`detector`]: the detector `G(f)`, the set `A`, and the sign-propagation check.

pub mod arith;
pub mod cheb_minorant;
pub mod detector;
pub mod error;
pub mod modforms;
pub mod petersson;
pub mod quadrature;
pub mod sato_tate;

pub use error::{Error, Result};
