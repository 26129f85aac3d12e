//! Permutation routing on Ramanujan hypergraphs and expander overlays.
//!
//! The crate builds the graph families (projective planes, random regular
//! hypergraphs, grid hypergraphs, Cayley graphs, voltage covers), certifies
//! their spectra, routes permutations by two-phase Valiant routing realised as
//! matching-swap schedules, and evaluates the overlay, algebraic, multiscale,
//! entanglement and adaptive routing protocols built on top.

pub mod adaptive;
pub mod algebraic;
pub mod entangle;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod multiscale;
pub mod overlay;
pub mod rng;
pub mod route;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use graphs::{GridModel, GridSpec, Hypergraph, LiftConvention, VoltageAssignment, WeightedGraph};
pub use spectral::SpectralSummary;
