//! Greedy walks on marked Poisson point processes.
//!
//! The crate simulates the persistent-dust walk on the line (points carrying
//! one or two marks, one mark removed per visit), the nearest-unvisited walk
//! in the plane and in strips, and the disc-based explorer process. On top of
//! the simulators it computes the gap observable, renewal blocks and hitting
//! times of the 1D walk, and a small statistics layer (Kolmogorov-Smirnov,
//! Hill, running means) with a seeded replication harness.

pub mod acceptance;
pub mod format;
pub mod observables;
pub mod point_process;
pub mod presets;
pub mod rng;
pub mod stats;
pub mod walk1d;
pub mod walk2d;

pub use point_process::{MarkLaw, MarkedConfiguration, MarkedPoint, PalmVariant, PoissonLine, Side};
pub use rng::RngStream;
pub use walk1d::{Environment, HitSet, StopRule, Termination, Trajectory, Walk, WalkError};
