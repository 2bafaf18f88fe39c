//! Stochastic factorizations of random walks with killing on the integers.
//!
//! A discrete-time birth-death chain on the integers, with transition
//! probabilities `a(n)` (up), `b(n)` (stay), `c(n)` (down), can be written as
//! a product of two simpler chains: one reflecting at the origin, one
//! absorbing. The two orders of multiplication give different families:
//!
//! * reflecting times absorbing, a two-parameter family (`factor::ra_factorize`),
//! * absorbing times reflecting, unique when it exists (`factor::ar_factorize`).
//!
//! Swapping the factors is a discrete Darboux transformation
//! (`factor::darboux_ra`, `factor::darboux_ar`); it produces an almost
//! birth-death chain with extra `1 <-> -1` jumps in one direction and removes
//! them in the other. The chain's block-tridiagonal form (fold the negative
//! states onto the positive ones, `chain::relabel_to_blocks`) carries 2x2
//! matrix orthogonal polynomials and a spectral matrix on `[-1, 1]`; the
//! Darboux transformations act on that matrix as Geronimus and Christoffel
//! transformations (`spectral::geronimus`, `spectral::christoffel`), and
//! n-step transition probabilities come out of a Karlin-McGregor integral
//! (`spectral::km_table`).
//!
//! Everything numerical can be cross-checked against a dense finite
//! truncation of the chain (`verify`), which is exact for finitely many steps
//! by finite propagation speed.

pub mod cfrac;
pub mod chain;
pub mod cli;
pub mod error;
pub mod factor;
pub mod io;
pub mod mat2;
pub mod opoly;
pub mod seq;
pub mod spectral;
pub mod verify;

pub use chain::{AlmostBDChain, BDChain};
pub use error::{Error, Result};
