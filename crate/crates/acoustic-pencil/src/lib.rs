//! Boundary-integral laboratory for acoustic transmission resonances of small
//! inclusions: Nyström assembly of the Q-function pencil, direct resonance
//! location, and the first-order small-inclusion expansions.

pub mod asymptotics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod qfunction;
pub mod resolvent_probe;
pub mod resonance_finder;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
