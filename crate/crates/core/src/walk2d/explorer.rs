use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::arcs::uncovered_measure;
use super::{uncovered_arcs, Point2, Trajectory2d, Walk2dError};
use crate::rng::{RngStream, StreamTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscChain {
    pub discs: Vec<Disc>,
    /// Target incremental areas `A_k`.
    pub areas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorerOptions {
    /// Area tolerance relative to `A_k`.
    pub area_rel_tol: f64,
    /// Relative tolerance for "on the boundary" and "outside earlier discs".
    pub boundary_rel_tol: f64,
    /// Subdivision budget of one area evaluation.
    pub max_pieces: usize,
}

impl Default for ExplorerOptions {
    fn default() -> Self {
        Self { area_rel_tol: 1e-6, boundary_rel_tol: 1e-9, max_pieces: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub area: f64,
    pub error_bound: f64,
}

fn relevant(center: Point2, r: f64, discs: &[Disc]) -> Vec<Disc> {
    discs.iter().filter(|d| d.center.dist(&center) < r + d.radius).copied().collect()
}

/// Radii in `(0, r)` where the uncovered measure may fail to be smooth.
fn breakpoints(center: Point2, r: f64, discs: &[Disc]) -> Vec<f64> {
    let mut b = vec![0.0, r];
    for d in discs {
        let dist = d.center.dist(&center);
        b.push((dist - d.radius).abs());
        b.push(dist + d.radius);
    }
    for (i, p) in discs.iter().enumerate() {
        for q in &discs[i + 1..] {
            let d = p.center.dist(&q.center);
            if d == 0.0 || d >= p.radius + q.radius || d <= (p.radius - q.radius).abs() {
                continue;
            }
            let a = (p.radius * p.radius - q.radius * q.radius + d * d) / (2.0 * d);
            let h = (p.radius * p.radius - a * a).max(0.0).sqrt();
            let ux = (q.center.x - p.center.x) / d;
            let uy = (q.center.y - p.center.y) / d;
            let mx = p.center.x + a * ux;
            let my = p.center.y + a * uy;
            b.push(Point2::new(mx - h * uy, my + h * ux).dist(&center));
            b.push(Point2::new(mx + h * uy, my - h * ux).dist(&center));
        }
    }
    b.retain(|x| (0.0..=r).contains(x));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `|B(center, r) \ union(discs)|` by radial quadrature of the uncovered
/// angular measure, subdividing until the summed error bound is within
/// `tolerance`.
pub fn residual_area(center: Point2, r: f64, discs: &[Disc], tolerance: f64) -> Result<AreaEstimate, Walk2dError> {
    residual_area_with(center, r, discs, tolerance, ExplorerOptions::default().max_pieces)
}

fn residual_area_with(
    center: Point2,
    r: f64,
    discs: &[Disc],
    tolerance: f64,
    max_pieces: usize,
) -> Result<AreaEstimate, Walk2dError> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Walk2dError::InvalidInput(format!("radius {r}")));
    }
    if !(tolerance > 0.0) {
        return Err(Walk2dError::InvalidInput(format!("tolerance {tolerance}")));
    }
    if r == 0.0 {
        return Ok(AreaEstimate { area: 0.0, error_bound: 0.0 });
    }
    let discs = relevant(center, r, discs);
    if discs.is_empty() {
        return Ok(AreaEstimate { area: PI * r * r, error_bound: 0.0 });
    }
    if discs.iter().any(|d| d.center.dist(&center) + r <= d.radius) {
        return Ok(AreaEstimate { area: 0.0, error_bound: 0.0 });
    }
    let f = |rho: f64| rho * uncovered_measure(center, rho, &discs);
    let bp = breakpoints(center, r, &discs);
    let mut stack: Vec<(f64, f64)> = bp.windows(2).map(|w| (w[0], w[1])).rev().collect();
    let (mut area, mut error) = (0.0, 0.0);
    let mut pieces = stack.len();
    while let Some((a, b)) = stack.pop() {
        let share = tolerance * (b - a) / r;
        let out = quadrature::integrate(f, a, b, share);
        if out.error_estimate <= share || b - a <= r * 1e-12 {
            area += out.integral;
            error += out.error_estimate;
            continue;
        }
        pieces += 1;
        if pieces > max_pieces {
            return Err(Walk2dError::ToleranceNotMet { requested: tolerance, achieved: error + out.error_estimate });
        }
        let m = 0.5 * (a + b);
        stack.push((m, b));
        stack.push((a, m));
    }
    if error > tolerance {
        return Err(Walk2dError::ToleranceNotMet { requested: tolerance, achieved: error });
    }
    Ok(AreaEstimate { area: area.clamp(0.0, PI * r * r), error_bound: error })
}

/// Radius `r` with `residual_area(center, r) = target` within `tolerance`.
/// Newton steps on `r m(r)`, falling back to bisection of the bracket.
pub fn solve_radius(center: Point2, target: f64, discs: &[Disc], tolerance: f64) -> Result<f64, Walk2dError> {
    solve_radius_with(center, target, discs, tolerance, ExplorerOptions::default().max_pieces)
}

fn solve_radius_with(
    center: Point2,
    target: f64,
    discs: &[Disc],
    tolerance: f64,
    max_pieces: usize,
) -> Result<f64, Walk2dError> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Walk2dError::InvalidInput(format!("target area {target}")));
    }
    let area = |r: f64| residual_area_with(center, r, discs, tolerance / 4.0, max_pieces);
    // the residual area never exceeds pi r^2
    let mut lo = (target / PI).sqrt();
    let mut hi = 2.0 * lo;
    let mut f_hi = area(hi)?.area;
    let mut guard = 0;
    while f_hi < target {
        lo = hi;
        hi *= 2.0;
        f_hi = area(hi)?.area;
        guard += 1;
        if guard > 200 {
            return Err(Walk2dError::ToleranceNotMet { requested: tolerance, achieved: target - f_hi });
        }
    }
    let mut r = lo;
    for _ in 0..200 {
        let diff = area(r)?.area - target;
        if diff.abs() <= tolerance / 2.0 {
            return Ok(r);
        }
        if diff < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope = r * uncovered_measure(center, r, discs);
        let newton = r - diff / slope;
        r = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= hi * 1e-15 {
            break;
        }
    }
    Err(Walk2dError::ToleranceNotMet { requested: tolerance, achieved: (area(r)?.area - target).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorerRun {
    pub chain: DiscChain,
    pub trajectory: Trajectory2d,
}

/// Explorer started at the origin: `A_k ~ Exp(1)`, `D_k` centred at `S_{k-1}`
/// with residual area `A_k`, and `S_k` uniform by arc length on the part of
/// its boundary outside the earlier discs.
pub fn explorer_run(n_steps: usize, stream: RngStream, opts: ExplorerOptions) -> Result<ExplorerRun, Walk2dError> {
    if n_steps == 0 {
        return Err(Walk2dError::InvalidInput("n_steps must be at least 1".into()));
    }
    let mut rng = stream.tagged(StreamTag::Explorer);
    let mut chain = DiscChain::default();
    let mut positions = vec![Point2::ORIGIN];
    for k in 1..=n_steps {
        let here = positions[k - 1];
        let a: f64 = rng.sample(Exp1);
        let r = solve_radius_with(here, a, &chain.discs, opts.area_rel_tol * a, opts.max_pieces)?;
        let arcs = uncovered_arcs(here, r, &chain.discs);
        let theta = arcs.angle_at(rng.random::<f64>()).ok_or(Walk2dError::GeometryInconsistency { step: k })?;
        let next = Point2::new(here.x + r * theta.cos(), here.y + r * theta.sin());
        if chain.discs.iter().any(|d| d.center.dist(&next) < d.radius * (1.0 - opts.boundary_rel_tol)) {
            return Err(Walk2dError::GeometryInconsistency { step: k });
        }
        chain.discs.push(Disc { center: here, radius: r });
        chain.areas.push(a);
        positions.push(next);
    }
    Ok(ExplorerRun { chain, trajectory: Trajectory2d { start: Point2::ORIGIN, positions } })
}

impl DiscChain {
    /// Largest `|residual area - A_k| / A_k` over the chain.
    pub fn max_area_error(&self) -> Result<f64, Walk2dError> {
        let mut worst: f64 = 0.0;
        for (k, (d, a)) in self.discs.iter().zip(&self.areas).enumerate() {
            let est = residual_area(d.center, d.radius, &self.discs[..k], a * 1e-9)?;
            worst = worst.max((est.area - a).abs() / a);
        }
        Ok(worst)
    }
}
