//! Simultaneous alignment and classification of band-limited signals on the
//! circle through a semidefinite relaxation of a non-unique game over
//! `SO(2) x Z_M`, with a max-k-cut special case, rounding, an invariant
//! signature baseline and a benchmark harness.

pub mod baseline;
pub mod bench;
pub mod error;
pub mod harmonics;
pub mod kmeans;
pub mod penalty;
pub mod rounding;
pub mod sdp;
pub mod seed;
pub mod signals;

pub use error::{Error, Result};
pub use harmonics::{Bandwidth, CyclicElement, ProductElement, RotationAngle};
pub use signals::{Dataset, Signal};
