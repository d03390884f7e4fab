//! Consecutive-collision chords of the rotating Kepler problem and the
//! circular restricted three-body problem on Moser-regularized energy levels.
//!
//! The crate is organized around the closed-form dynamics on the unit
//! cotangent bundle of the 3-sphere: coordinates and Hamiltonians
//! ([`kepler_core`]), constrained numerical integration ([`flow`]), the
//! geodesic open book and its Poincaré return map ([`openbook`]), chord
//! search on the collision locus ([`chords`]), Robbin–Salamon /
//! Conley–Zehnder index machinery ([`indices`]), a filtered-complex
//! spectral sequence engine over Z/2 ([`specseq`]), and a closed-form
//! 2-dimensional Liouville toy model ([`liouville_toy`]).

pub mod acceptance;
pub mod chords;
pub mod error;
pub mod flow;
pub mod indices;
pub mod kepler_core;
pub mod liouville_toy;
pub mod openbook;
pub mod specseq;
pub mod table;

pub use error::CoreError;
