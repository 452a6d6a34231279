//! Stable subordinate random walks on the integer lattice and the capacity of
//! their range.
//!
//! The crate is organised around the objects a capacity-of-the-range study
//! needs:
//!
//! * [`walk`]: step laws (simple, Sibuya-subordinate, loop-free, loop-inserted),
//!   path sampling and the one-step-loop insertion coupling;
//! * [`green`]: lattice Green functions computed by three independent
//!   backends, truncated Green functions, return probabilities and the
//!   error-scaling function `h_d`;
//! * [`capacity`]: equilibrium measures, exact and Monte Carlo capacities, the
//!   occupation-measure lower bound and the union/intersection decomposition;
//! * [`range`]: range sets of paths, Green cross sums and the dyadic check;
//! * [`experiments`]: seeded, worker-count independent Monte Carlo studies;
//! * [`cli`]: the `rangecap` command-line front end.
//!
//! Every random object is a pure function of a master seed and a stream id,
//! see [`rng::RngStream`].

pub mod capacity;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod green;
pub mod lattice;
pub mod limits;
pub mod linalg;
pub mod numerics;
pub mod range;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::{Site, MAX_DIM};
pub use rng::{Purpose, RngStream, StreamId};
