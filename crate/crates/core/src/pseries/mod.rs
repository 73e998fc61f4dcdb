//! Trigonometric series whose coefficients are sums of products of inverse
//! powers of affine functions of the actions.
//!
//! The basis is complex exponentials e^{i k·q}; every series is kept hermitian
//! (c₋ₖ = conj cₖ) so it is real on real arguments.

mod coeff;
pub mod index;
mod series;

pub use coeff::{ActionRational, Affine, Factor, Factors, Term};
pub use index::{Index, MAX_DIM};
pub use series::{Ball, Domain, PoissonSeries, Selector};
