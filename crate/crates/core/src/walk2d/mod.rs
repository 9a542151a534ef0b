//! Greedy walks in the plane and in a strip, and the disc explorer.

mod arcs;
mod explorer;
mod tourist;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arcs::{uncovered_arcs, AngularIntervals};
pub use explorer::{
    explorer_run, residual_area, solve_radius, AreaEstimate, Disc, DiscChain, ExplorerOptions, ExplorerRun,
};
pub use tourist::{tourist_run_2d, tourist_walk, Geometry, PointSource, PoissonPlane, TouristWalk, Trajectory2d};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Walk2dError {
    #[error("exact distance tie from ({x}, {y})")]
    AmbiguousTie { x: f64, y: f64 },
    #[error("no unvisited point left")]
    Exhausted,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("area tolerance {requested:e} not met, achieved bound {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },
    #[error("no uncovered arc at the solved radius of step {step}")]
    GeometryInconsistency { step: usize },
}

/// Magnitudes of the maximal runs of strictly decreasing x-coordinates.
pub fn backtrack_lengths(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut run_start: Option<f64> = None;
    for w in xs.windows(2) {
        if w[1] < w[0] {
            run_start.get_or_insert(w[0]);
        } else if let Some(s) = run_start.take() {
            out.push(s - w[0]);
        }
    }
    if let (Some(s), Some(&last)) = (run_start, xs.last()) {
        out.push(s - last);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtracks() {
        assert_eq!(backtrack_lengths(&[0.0, 2.0, 1.0, 3.0]), vec![1.0]);
        assert!(backtrack_lengths(&[0.0, 1.0, 2.0, 5.0]).is_empty());
        assert_eq!(backtrack_lengths(&[0.0, 4.0, 3.0, 1.0, 2.0, 1.5]), vec![3.0, 0.5]);
        assert!(backtrack_lengths(&[]).is_empty());
    }
}
