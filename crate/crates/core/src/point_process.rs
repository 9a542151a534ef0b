//! Marked Poisson environments on the line.
//!
//! A [`PoissonLine`] is the infinite environment: a Poisson process of a given
//! intensity, cut into fixed-length cells that are each realized from their
//! own keyed sub-stream. A [`MarkedConfiguration`] is the finite window of it
//! that has been realized so far. Because each cell is a pure function of
//! `(seed, stream_id, cell index)`, extending a window in any sequence of
//! stretches yields the same points as realizing the final window at once.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{RngStream, StreamTag};

/// Default cell length of the lazily realized line. A power of two keeps cell
/// boundaries exact in binary floating point.
pub const DEFAULT_CELL_LEN: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointProcessError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),
    #[error("extension length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("invalid mark law: {0}")]
    InvalidMarkLaw(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("a point already sits at the origin; condition an unconditioned sample")]
    ConditioningConflict,
}

/// Distribution of the number of marks carried by each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarkLaw {
    /// Two marks with probability `p`, one otherwise.
    TwoPoint { p: f64 },
    /// `weights[i]` is the probability of carrying `i + 1` marks.
    General { weights: Vec<f64> },
}

impl MarkLaw {
    pub fn two_point(p: f64) -> Result<Self, PointProcessError> {
        let law = MarkLaw::TwoPoint { p };
        law.validate()?;
        Ok(law)
    }

    pub fn general(weights: Vec<f64>) -> Result<Self, PointProcessError> {
        let law = MarkLaw::General { weights };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<(), PointProcessError> {
        match self {
            MarkLaw::TwoPoint { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(PointProcessError::InvalidMarkLaw(format!("p = {p} outside [0, 1]")));
                }
            }
            MarkLaw::General { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(PointProcessError::InvalidMarkLaw(
                        "weights must be nonempty, finite and nonnegative".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(PointProcessError::InvalidMarkLaw(format!("weights sum to {total}")));
                }
            }
        }
        Ok(())
    }

    /// Probability of a double mark under the two-point law.
    pub fn double_probability(&self) -> Option<f64> {
        match self {
            MarkLaw::TwoPoint { p } => Some(*p),
            MarkLaw::General { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        match self {
            MarkLaw::TwoPoint { p } => {
                if u < *p {
                    2
                } else {
                    1
                }
            }
            MarkLaw::General { weights } => {
                let mut acc = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i as u32 + 1;
                    }
                }
                // rounding left u above the accumulated mass
                weights.iter().rposition(|w| *w > 0.0).unwrap_or(0) as u32 + 1
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub position: f64,
    pub marks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Palm conditionings: a point at the origin (`P1`), additionally carrying
/// two marks (`P2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PalmVariant {
    P1,
    P2,
}

/// The realized part of a marked environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedConfiguration {
    pub points: Vec<MarkedPoint>,
    pub left_frontier: f64,
    pub right_frontier: f64,
    pub intensity: f64,
    pub mark_law: MarkLaw,
}

impl MarkedConfiguration {
    /// Builds a configuration from explicit `(position, marks)` pairs, with
    /// frontiers at the extreme points. Intended for hand-built environments.
    pub fn from_points(points: &[(f64, u32)]) -> Result<Self, PointProcessError> {
        let pts: Vec<MarkedPoint> = points
            .iter()
            .map(|&(position, marks)| MarkedPoint { position, marks })
            .collect();
        check_sorted(pts.iter().map(|p| p.position))?;
        if pts.iter().any(|p| p.marks == 0) {
            return Err(PointProcessError::InvalidInput("every point needs at least one mark".into()));
        }
        let left_frontier = pts.first().map_or(0.0, |p| p.position);
        let right_frontier = pts.last().map_or(0.0, |p| p.position);
        Ok(Self {
            points: pts,
            left_frontier,
            right_frontier,
            intensity: 1.0,
            mark_law: MarkLaw::TwoPoint { p: 0.0 },
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// Index of the point at exactly `position`.
    pub fn index_of(&self, position: f64) -> Option<usize> {
        self.points
            .binary_search_by(|p| p.position.total_cmp(&position))
            .ok()
    }

    pub fn marks_at(&self, position: f64) -> Option<u32> {
        self.index_of(position).map(|i| self.points[i].marks)
    }

    pub fn total_marks(&self) -> u64 {
        self.points.iter().map(|p| p.marks as u64).sum()
    }

    /// Total marks on points inside `[a, b]`.
    pub fn marks_in(&self, a: f64, b: f64) -> u64 {
        let lo = self.points.partition_point(|p| p.position < a);
        let hi = self.points.partition_point(|p| p.position <= b);
        self.points[lo..hi].iter().map(|p| p.marks as u64).sum()
    }

    /// Checks the structural invariants: strictly increasing positions inside
    /// the frontiers, at least one mark per point.
    pub fn validate(&self) -> Result<(), PointProcessError> {
        check_sorted(self.positions())?;
        for p in &self.points {
            if p.marks == 0 {
                return Err(PointProcessError::InvalidInput(format!("point {} has no marks", p.position)));
            }
            if p.position < self.left_frontier || p.position > self.right_frontier {
                return Err(PointProcessError::InvalidInput(format!(
                    "point {} outside frontiers [{}, {}]",
                    p.position, self.left_frontier, self.right_frontier
                )));
            }
        }
        Ok(())
    }

    /// Realizes the environment on a new stretch of `length` beyond one
    /// frontier. Points already present are left untouched.
    pub fn extend_frontier(
        &self,
        side: Side,
        length: f64,
        line: &PoissonLine,
    ) -> Result<MarkedConfiguration, PointProcessError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(PointProcessError::InvalidLength(length));
        }
        let mut out = self.clone();
        match side {
            Side::Right => {
                let new_frontier = self.right_frontier + length;
                let fresh = line.points_between(self.right_frontier, new_frontier);
                out.points.extend(fresh);
                out.right_frontier = new_frontier;
            }
            Side::Left => {
                let new_frontier = self.left_frontier - length;
                let mut fresh = line.points_between(new_frontier, self.left_frontier);
                // points_between is open on the left; the new frontier itself
                // is a probability-zero location
                fresh.extend(out.points.drain(..));
                out.points = fresh;
                out.left_frontier = new_frontier;
            }
        }
        Ok(out)
    }
}

fn check_sorted(positions: impl Iterator<Item = f64>) -> Result<(), PointProcessError> {
    let mut prev = f64::NEG_INFINITY;
    for x in positions {
        if !x.is_finite() {
            return Err(PointProcessError::InvalidInput(format!("non-finite position {x}")));
        }
        if x <= prev {
            return Err(PointProcessError::InvalidInput(format!(
                "positions must be strictly increasing ({prev} then {x})"
            )));
        }
        prev = x;
    }
    Ok(())
}

/// Exact Poisson sample on `[a, b]`, generated by exponential gaps from `a`.
pub fn sample_interval<R: Rng + ?Sized>(
    intensity: f64,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<Vec<f64>, PointProcessError> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(PointProcessError::InvalidIntensity(intensity));
    }
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(PointProcessError::InvalidInterval { a, b });
    }
    let mut out = Vec::new();
    let mut x = a;
    loop {
        let gap: f64 = Exp1.sample(rng);
        x += gap / intensity;
        if x > b {
            break;
        }
        out.push(x);
    }
    Ok(out)
}

/// Gives every position an independent mark count drawn from `mark_law`.
pub fn assign_marks<R: Rng + ?Sized>(
    positions: &[f64],
    mark_law: &MarkLaw,
    intensity: f64,
    rng: &mut R,
) -> Result<MarkedConfiguration, PointProcessError> {
    mark_law.validate()?;
    check_sorted(positions.iter().copied())?;
    let points: Vec<MarkedPoint> = positions
        .iter()
        .map(|&position| MarkedPoint { position, marks: mark_law.sample(rng) })
        .collect();
    Ok(MarkedConfiguration {
        left_frontier: positions.first().copied().unwrap_or(0.0),
        right_frontier: positions.last().copied().unwrap_or(0.0),
        points,
        intensity,
        mark_law: mark_law.clone(),
    })
}

/// Inserts the Palm point at the origin.
///
/// `P1` draws its marks from the configuration's mark law, `P2` always gives
/// it two marks.
pub fn palm_condition<R: Rng + ?Sized>(
    config: &MarkedConfiguration,
    variant: PalmVariant,
    rng: &mut R,
) -> Result<MarkedConfiguration, PointProcessError> {
    if config.index_of(0.0).is_some() {
        return Err(PointProcessError::ConditioningConflict);
    }
    let marks = match variant {
        PalmVariant::P1 => config.mark_law.sample(rng),
        PalmVariant::P2 => 2,
    };
    let mut out = config.clone();
    let at = out.points.partition_point(|p| p.position < 0.0);
    out.points.insert(at, MarkedPoint { position: 0.0, marks });
    out.left_frontier = out.left_frontier.min(0.0);
    out.right_frontier = out.right_frontier.max(0.0);
    Ok(out)
}

/// The infinite marked Poisson environment of one replica stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonLine {
    pub stream: RngStream,
    pub intensity: f64,
    pub mark_law: MarkLaw,
    pub cell_len: f64,
}

impl PoissonLine {
    pub fn new(stream: RngStream, intensity: f64, mark_law: MarkLaw) -> Result<Self, PointProcessError> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(PointProcessError::InvalidIntensity(intensity));
        }
        mark_law.validate()?;
        Ok(Self { stream, intensity, mark_law, cell_len: DEFAULT_CELL_LEN })
    }

    pub fn cell_index(&self, x: f64) -> i64 {
        (x / self.cell_len).floor() as i64
    }

    /// All points of cell `i`, i.e. of `[i * cell_len, (i + 1) * cell_len)`.
    pub fn cell_points(&self, i: i64) -> Vec<MarkedPoint> {
        let mut rng = self.stream.cell(StreamTag::LineCell, i, 0);
        let start = i as f64 * self.cell_len;
        let end = start + self.cell_len;
        let mut out = Vec::with_capacity((self.cell_len * self.intensity * 1.5) as usize + 4);
        let mut x = start;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            x += gap / self.intensity;
            if x >= end {
                break;
            }
            let marks = self.mark_law.sample(&mut rng);
            out.push(MarkedPoint { position: x, marks });
        }
        out
    }

    /// Points in the half-open stretch `(a, b]`, ascending.
    pub fn points_between(&self, a: f64, b: f64) -> Vec<MarkedPoint> {
        let mut out = Vec::new();
        if !(a < b) {
            return out;
        }
        for i in self.cell_index(a)..=self.cell_index(b) {
            out.extend(self.cell_points(i).into_iter().filter(|p| p.position > a && p.position <= b));
        }
        out
    }

    /// Realizes the environment on `[a, b]`.
    pub fn realize(&self, a: f64, b: f64) -> Result<MarkedConfiguration, PointProcessError> {
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(PointProcessError::InvalidInterval { a, b });
        }
        let mut points = Vec::new();
        for i in self.cell_index(a)..=self.cell_index(b) {
            points.extend(self.cell_points(i).into_iter().filter(|p| p.position >= a && p.position <= b));
        }
        Ok(MarkedConfiguration {
            points,
            left_frontier: a,
            right_frontier: b,
            intensity: self.intensity,
            mark_law: self.mark_law.clone(),
        })
    }

    /// Marks of the Palm point at the origin for this stream.
    pub fn palm_marks(&self, variant: PalmVariant) -> u32 {
        match variant {
            PalmVariant::P1 => self.mark_law.sample(&mut self.stream.tagged(StreamTag::PalmMark)),
            PalmVariant::P2 => 2,
        }
    }

    /// Realizes `[a, b]` (which must contain the origin) and applies the Palm
    /// conditioning with this stream's palm mark.
    pub fn realize_palm(&self, a: f64, b: f64, variant: PalmVariant) -> Result<MarkedConfiguration, PointProcessError> {
        if !(a <= 0.0 && 0.0 <= b) {
            return Err(PointProcessError::InvalidInterval { a, b });
        }
        let cfg = self.realize(a, b)?;
        palm_condition(&cfg, variant, &mut self.stream.tagged(StreamTag::PalmMark))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn line(seed: u64, p: f64) -> PoissonLine {
        PoissonLine::new(RngStream::new(seed, 0), 1.0, MarkLaw::two_point(p).unwrap()).unwrap()
    }

    #[test]
    fn zero_length_interval_is_empty() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(sample_interval(1.0, 0.0, 0.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(
            sample_interval(1.0, 1.0, 0.0, &mut rng),
            Err(PointProcessError::InvalidInterval { .. })
        ));
        assert!(matches!(
            sample_interval(0.0, 0.0, 1.0, &mut rng),
            Err(PointProcessError::InvalidIntensity(_))
        ));
    }

    #[test]
    fn mean_count_on_hundred() {
        let mut total = 0usize;
        for s in 0..10_000 {
            let mut rng = RngStream::new(11, s).rng();
            total += sample_interval(1.0, 0.0, 100.0, &mut rng).unwrap().len();
        }
        let mean = total as f64 / 10_000.0;
        assert!((99.0..=101.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn degenerate_thinning() {
        let mut rng = RngStream::new(2, 0).rng();
        let xs = sample_interval(1.0, 0.0, 500.0, &mut rng).unwrap();
        let none = assign_marks(&xs, &MarkLaw::two_point(0.0).unwrap(), 1.0, &mut rng).unwrap();
        assert!(none.points.iter().all(|p| p.marks == 1));
        let all = assign_marks(&xs, &MarkLaw::two_point(1.0).unwrap(), 1.0, &mut rng).unwrap();
        assert!(all.points.iter().all(|p| p.marks == 2));
    }

    #[test]
    fn half_thinning_fraction() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        let mut rng = RngStream::new(3, 0).rng();
        let cfg = assign_marks(&xs, &MarkLaw::two_point(0.5).unwrap(), 1.0, &mut rng).unwrap();
        let frac = cfg.points.iter().filter(|p| p.marks == 2).count() as f64 / 1e4;
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn unsorted_positions_rejected() {
        let mut rng = RngStream::new(3, 0).rng();
        let law = MarkLaw::two_point(0.5).unwrap();
        assert!(assign_marks(&[1.0, 0.5], &law, 1.0, &mut rng).is_err());
        assert!(assign_marks(&[1.0, 1.0], &law, 1.0, &mut rng).is_err());
    }

    #[test]
    fn palm_variants() {
        let mut rng = RngStream::new(4, 0).rng();
        let cfg = line(4, 0.5).realize(-10.0, 10.0).unwrap();
        let p2 = palm_condition(&cfg, PalmVariant::P2, &mut rng).unwrap();
        assert_eq!(p2.marks_at(0.0), Some(2));
        assert_eq!(p2.len(), cfg.len() + 1);
        p2.validate().unwrap();

        let cfg0 = line(4, 0.0).realize(-10.0, 10.0).unwrap();
        let p1 = palm_condition(&cfg0, PalmVariant::P1, &mut rng).unwrap();
        assert_eq!(p1.marks_at(0.0), Some(1));

        assert_eq!(
            palm_condition(&p2, PalmVariant::P1, &mut rng),
            Err(PointProcessError::ConditioningConflict)
        );
    }

    #[test]
    fn palm_p1_double_fraction() {
        let mut doubles = 0;
        for s in 0..10_000 {
            let l = PoissonLine::new(RngStream::new(5, s), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
            if l.realize_palm(-1.0, 1.0, PalmVariant::P1).unwrap().marks_at(0.0) == Some(2) {
                doubles += 1;
            }
        }
        let frac = doubles as f64 / 1e4;
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn extension_is_history_independent() {
        let l = line(6, 0.5);
        let base = l.realize(-5.0, 5.0).unwrap();
        let twice = base
            .extend_frontier(Side::Right, 100.0, &l)
            .unwrap()
            .extend_frontier(Side::Right, 100.0, &l)
            .unwrap();
        let once = base.extend_frontier(Side::Right, 200.0, &l).unwrap();
        assert_eq!(twice, once);
        assert_eq!(once, l.realize(-5.0, 205.0).unwrap());

        let left = base.extend_frontier(Side::Left, 1e-9, &l).unwrap();
        assert_eq!(&left.points[left.len() - base.len()..], &base.points[..]);
        left.validate().unwrap();
        let far_left = base.extend_frontier(Side::Left, 37.5, &l).unwrap();
        assert_eq!(far_left, l.realize(-42.5, 5.0).unwrap());
    }

    #[test]
    fn invalid_extension_length() {
        let l = line(6, 0.5);
        let base = l.realize(0.0, 1.0).unwrap();
        assert!(base.extend_frontier(Side::Right, 0.0, &l).is_err());
        assert!(base.extend_frontier(Side::Left, f64::NAN, &l).is_err());
    }

    #[test]
    fn general_law_samples_support() {
        let law = MarkLaw::general(vec![0.2, 0.3, 0.5]).unwrap();
        let mut rng = RngStream::new(8, 0).rng();
        let mut counts = [0usize; 4];
        for _ in 0..30_000 {
            counts[law.sample(&mut rng) as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!((counts[3] as f64 / 30_000.0 - 0.5).abs() < 0.02);
        assert!(MarkLaw::general(vec![0.5, 0.1]).is_err());
        assert!(MarkLaw::two_point(1.5).is_err());
    }
}
