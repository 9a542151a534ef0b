use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{Disc, Point2};

/// Disjoint, sorted arcs `[lo, hi)` within `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngularIntervals {
    pub arcs: Vec<(f64, f64)>,
}

impl AngularIntervals {
    pub fn full() -> Self {
        Self { arcs: vec![(0.0, TAU)] }
    }

    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        self.arcs.iter().any(|&(a, b)| a <= t && t < b)
    }

    /// Angle at arc-length fraction `u * measure` along the arcs.
    pub fn angle_at(&self, u: f64) -> Option<f64> {
        let mut left = u * self.measure();
        for &(a, b) in &self.arcs {
            if left < b - a {
                return Some(a + left);
            }
            left -= b - a;
        }
        self.arcs.last().map(|&(a, b)| a.max(b - f64::EPSILON * TAU))
    }

    /// Complement in `[0, 2 pi)` of a union of arcs given as `(centre, half_width)`.
    pub fn complement_of(covered: &[(f64, f64)]) -> Self {
        let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(covered.len() + 2);
        for &(mid, half) in covered {
            if half >= PI {
                return Self::empty();
            }
            let lo = (mid - half).rem_euclid(TAU);
            let hi = lo + 2.0 * half;
            if hi > TAU {
                pieces.push((lo, TAU));
                pieces.push((0.0, hi - TAU));
            } else {
                pieces.push((lo, hi));
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut arcs = Vec::new();
        let mut cursor = 0.0;
        for (lo, hi) in pieces {
            if lo > cursor {
                arcs.push((cursor, lo));
            }
            cursor = f64::max(cursor, hi);
        }
        if cursor < TAU {
            arcs.push((cursor, TAU));
        }
        Self { arcs }
    }
}

/// Angular extent of the circle `(center, r)` inside `disc`, as
/// `(centre angle, half-width)`. `None` when they do not overlap on the circle;
/// a half-width of `pi` means the whole circle is covered.
pub(crate) fn covered_arc(center: Point2, r: f64, disc: &Disc) -> Option<(f64, f64)> {
    let dx = disc.center.x - center.x;
    let dy = disc.center.y - center.y;
    let d = dx.hypot(dy);
    let big_r = disc.radius;
    if d + r <= big_r {
        return Some((0.0, PI));
    }
    if d >= r + big_r || r >= d + big_r {
        return None;
    }
    let cos_half = ((r * r + d * d - big_r * big_r) / (2.0 * r * d)).clamp(-1.0, 1.0);
    Some((dy.atan2(dx), cos_half.acos()))
}

/// Arcs of the circle `(center, r)` lying outside every disc.
pub fn uncovered_arcs(center: Point2, r: f64, discs: &[Disc]) -> AngularIntervals {
    let covered: Vec<(f64, f64)> = discs.iter().filter_map(|d| covered_arc(center, r, d)).collect();
    AngularIntervals::complement_of(&covered)
}

/// Uncovered angular measure, without materializing the arcs when possible.
pub(crate) fn uncovered_measure(center: Point2, r: f64, discs: &[Disc]) -> f64 {
    let mut covered = [(0.0, 0.0); 8];
    let mut n = 0;
    let mut spill = Vec::new();
    for d in discs {
        if let Some(c) = covered_arc(center, r, d) {
            if c.1 >= PI {
                return 0.0;
            }
            if n < covered.len() {
                covered[n] = c;
                n += 1;
            } else {
                spill.push(c);
            }
        }
    }
    match (n, spill.is_empty()) {
        (0, _) => TAU,
        (1, true) => TAU - 2.0 * covered[0].1,
        _ => {
            spill.extend_from_slice(&covered[..n]);
            AngularIntervals::complement_of(&spill).measure()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(x: f64, y: f64, r: f64) -> Disc {
        Disc { center: Point2::new(x, y), radius: r }
    }

    #[test]
    fn no_discs_full_circle() {
        assert_eq!(uncovered_arcs(Point2::ORIGIN, 1.0, &[]), AngularIntervals::full());
    }

    #[test]
    fn containing_disc_empties() {
        assert!(uncovered_arcs(Point2::ORIGIN, 1.0, &[disc(0.1, 0.0, 3.0)]).is_empty());
        assert_eq!(uncovered_measure(Point2::ORIGIN, 1.0, &[disc(0.1, 0.0, 3.0)]), 0.0);
    }

    #[test]
    fn unit_disc_at_one() {
        let a = uncovered_arcs(Point2::ORIGIN, 1.0, &[disc(1.0, 0.0, 1.0)]);
        let third = PI / 3.0;
        assert_eq!(a.arcs.len(), 1);
        assert!((a.arcs[0].0 - third).abs() < 1e-12);
        assert!((a.arcs[0].1 - (TAU - third)).abs() < 1e-12);
        assert!(!a.contains(0.0) && !a.contains(-0.5) && a.contains(PI));
    }

    #[test]
    fn disjoint_and_inner_discs_do_not_cover() {
        let a = uncovered_arcs(Point2::ORIGIN, 1.0, &[disc(5.0, 0.0, 1.0), disc(0.0, 0.2, 0.3)]);
        assert_eq!(a, AngularIntervals::full());
    }

    #[test]
    fn overlapping_arcs_merge() {
        let discs = [disc(1.0, 0.0, 1.0), disc(0.0, 1.0, 1.0), disc(1.0, 0.0, 0.5)];
        let a = uncovered_arcs(Point2::ORIGIN, 1.0, &discs);
        let expected = TAU - (PI / 2.0 + 2.0 * PI / 3.0);
        assert!((a.measure() - expected).abs() < 1e-12);
        assert!((uncovered_measure(Point2::ORIGIN, 1.0, &discs) - expected).abs() < 1e-12);
    }

    #[test]
    fn angle_at_walks_arcs() {
        let a = AngularIntervals { arcs: vec![(0.0, 1.0), (2.0, 4.0)] };
        assert_eq!(a.angle_at(0.0), Some(0.0));
        assert!((a.angle_at(0.5).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(AngularIntervals::empty().angle_at(0.3), None);
    }
}
