//! Computational companion to the convergence-case Khintchine theorem for
//! self-similar fractals.
//!
//! The crate is organised around the chain of objects the theory passes
//! through:
//!
//! * [`ifs`] — similarity iterated function systems, the coding map and
//!   Bernoulli sampling of the limit set.
//! * [`flow`] — the translation of similarity maps into `SL(d+1, R)` via the
//!   action of the parabolic group `P = AKU`, random-walk products and the
//!   diagonal flow `a_t u_x`.
//! * [`lattice`] — exact sup-norm shortest vectors and the height function
//!   `l = -log Δ` on the space of unimodular lattices.
//! * [`orbit`] — long trajectories in the space of lattices tracked with
//!   exact integer bookkeeping so that heights stay accurate far beyond the
//!   range where raw matrix products overflow.
//! * [`excursion`] — return times, excursion lengths and peaks, tail and
//!   growth-bound diagnostics, and the exponent budget.
//! * [`dani`] — the `ψ ↔ r` correspondence and series classification.
//! * [`approx`] — brute-force ψ-approximability scans and the lattice
//!   cross-check.
//! * [`constants`] — covering certificates and the decay exponents `α_l`, `ϖ`
//!   for Cantor products.

pub mod approx;
pub mod constants;
pub mod dani;
pub mod error;
pub mod excursion;
pub mod flow;
pub mod ifs;
pub mod lattice;
pub mod linalg;
pub mod orbit;
pub mod seeds;

pub use error::{Error, Result};
