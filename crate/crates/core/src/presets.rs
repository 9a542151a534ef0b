//! Fixed recipes for the figure-style runs.

use crate::point_process::{MarkLaw, PalmVariant, PoissonLine};
use crate::rng::RngStream;
use crate::walk1d::{run, start_walk, Environment, StopRule, Trajectory, WalkError};
use crate::walk2d::{tourist_run_2d, Geometry, Point2, Trajectory2d, Walk2dError};

pub const FIGURE3_P: f64 = 0.5;
pub const FIGURE3_STEPS: u64 = 40_000;
pub const FIGURE2_STEPS: u64 = 10_000;

/// 1D walk under P^1 started at the origin.
pub fn palm_walk_1d(stream: RngStream, p: f64, intensity: f64, steps: u64) -> Result<Trajectory, WalkError> {
    let line = PoissonLine::new(stream, intensity, MarkLaw::two_point(p)?)?;
    let cfg = line.realize_palm(-line.cell_len, line.cell_len, PalmVariant::P1)?;
    let mut w = start_walk(Environment::lazy(cfg, line), 0.0)?;
    Ok(run(&mut w, StopRule::MaxSteps(steps))?.trajectory)
}

pub fn figure3(stream: RngStream) -> Result<Trajectory, WalkError> {
    palm_walk_1d(stream, FIGURE3_P, 1.0, FIGURE3_STEPS)
}

pub fn figure2(stream: RngStream) -> Result<Trajectory2d, Walk2dError> {
    tourist_run_2d(Geometry::Plane, 1.0, Point2::ORIGIN, FIGURE2_STEPS, stream)
}

/// Steps `n > after` at which the walk crosses or lands on the origin
/// coming from the other side.
pub fn origin_crossings_after(t: &Trajectory, after: usize) -> usize {
    let mut count = 0;
    for n in (after + 1).max(1)..t.positions.len() {
        let (a, b) = (t.positions[n - 1], t.positions[n]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings() {
        let t = Trajectory { start: 0.0, positions: vec![0.0, 1.0, -1.0, -2.0, 3.0, 0.0], marks_left: vec![0; 6] };
        assert_eq!(origin_crossings_after(&t, 0), 3);
        assert_eq!(origin_crossings_after(&t, 3), 2);
        assert_eq!(origin_crossings_after(&t, 5), 0);
    }
}
