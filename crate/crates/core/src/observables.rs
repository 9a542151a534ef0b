//! Observables of the 1D walk that are read off a trajectory and its
//! realized environment.
//!
//! * the gap observable `R_y` (max form, min form, and the interval-union
//!   "percolative" form on mirrored labels),
//! * the gap event check: a gap right of `X_k` larger than `R_{X_k}` forces a
//!   return to the non-positive half-line before `X_{k+1}` is reached,
//! * the renewal blocks `(l, xi, L)` of the walk on the half-line environment
//!   with one mark at the origin, and the return criterion built on them,
//! * a finite-horizon diagnostic for "the walk started at x stays right of x".
//!
//! Everything defined through possibly infinite times carries a censored flag.
//! The state of the environment at a given time is reconstructed by replaying
//! the trajectory on the realized configuration, which doubles as a check that
//! every recorded step was the greedy one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point_process::{MarkedConfiguration, PalmVariant, PoissonLine};
use crate::walk1d::{
    hitting_time, run_observed, start_walk, start_walk_with, Environment, HitSet, StopRule, Termination, TieMode,
    Trajectory, Walk, WalkError, WalkOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("trajectory step {step} is not the greedy step on the given configuration")]
    ReplayMismatch { step: usize },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

fn check_labels(labels: &[f64]) -> Result<(), ObservableError> {
    if labels.len() < 2 {
        return Err(ObservableError::InvalidInput("need at least the anchor y and the origin".into()));
    }
    if *labels.last().unwrap() != 0.0 {
        return Err(ObservableError::InvalidInput("labels must end at 0".into()));
    }
    if labels.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(ObservableError::InvalidInput("labels must be strictly decreasing".into()));
    }
    Ok(())
}

/// `max { y - z_j : y - z_j > 2 (y - z_{j-1}) }` over labels `y = z_0 > ... > z_n = 0`.
pub fn script_r_max_form(labels: &[f64]) -> Result<f64, ObservableError> {
    check_labels(labels)?;
    let y = labels[0];
    Ok(labels
        .windows(2)
        .filter(|w| y - w[1] > 2.0 * (y - w[0]))
        .map(|w| y - w[1])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `y - min { z_j : z_{j-1} - z_j > y - z_{j-1} }`.
pub fn script_r_min_form(labels: &[f64]) -> Result<f64, ObservableError> {
    check_labels(labels)?;
    let y = labels[0];
    let lowest = labels
        .windows(2)
        .filter(|w| w[0] - w[1] > y - w[0])
        .map(|w| w[1])
        .fold(f64::INFINITY, f64::min);
    Ok(y - lowest)
}

/// The gap observable of decreasing labels anchored at `y` and `0`.
pub fn script_r(labels: &[f64]) -> Result<f64, ObservableError> {
    let r = script_r_max_form(labels)?;
    debug_assert_eq!(Ok(r), script_r_min_form(labels));
    Ok(r)
}

/// `-inf` of the part of `(2 min, 0]` left uncovered by the intervals
/// `[2x, x]`, for a finite set of non-positive points containing `0`.
pub fn percolative_r(points: &[f64]) -> Result<f64, ObservableError> {
    if points.is_empty() || !points.contains(&0.0) {
        return Err(ObservableError::InvalidInput("point set must contain 0".into()));
    }
    if points.iter().any(|x| !(*x <= 0.0) || !x.is_finite()) {
        return Err(ObservableError::InvalidInput("points must be finite and non-positive".into()));
    }
    let mut intervals: Vec<(f64, f64)> = points.iter().map(|&x| (2.0 * x, x)).collect();
    // sweep downwards from 0 by right endpoint
    intervals.sort_by(|a, b| b.1.total_cmp(&a.1));
    let floor = intervals.iter().map(|iv| iv.0).fold(f64::INFINITY, f64::min);
    let mut covered_down_to = f64::INFINITY;
    let mut lowest_gap_end = None;
    for (lo, hi) in intervals {
        if covered_down_to == f64::INFINITY {
            if hi < 0.0 {
                // (hi, 0] is uncovered
                lowest_gap_end = Some(hi);
            }
            covered_down_to = lo;
            continue;
        }
        if hi < covered_down_to {
            // the open gap (hi, covered_down_to) is uncovered
            lowest_gap_end = Some(hi);
        }
        covered_down_to = covered_down_to.min(lo);
    }
    debug_assert!(covered_down_to == floor);
    Ok(lowest_gap_end.map_or(0.0, |z| -z))
}

/// `R_y` read off a walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapObservable {
    pub y: f64,
    /// Points still carrying a mark in `[0, y]` at `T_y`, decreasing.
    pub labels: Vec<f64>,
    pub value: f64,
    /// Neither `T_y` nor the first entry into `(-inf, 0]` happened in the record.
    pub censored: bool,
}

/// Computes `R_y` for a walk started at the origin. The value is `0` when the
/// walk entered `(-inf, 0]` before reaching `y`. The origin is always the last
/// label.
pub fn gap_at_walk(
    trajectory: &Trajectory,
    config: &MarkedConfiguration,
    y: f64,
) -> Result<GapObservable, ObservableError> {
    if !(y > 0.0) || config.index_of(y).is_none() {
        return Err(ObservableError::InvalidInput(format!("{y} is not a positive point of the configuration")));
    }
    if trajectory.positions.first() != Some(&0.0) {
        return Err(ObservableError::InvalidInput("walk must start at the origin".into()));
    }
    let t_y = hitting_time(trajectory, HitSet::Point(y));
    let t_neg = hitting_time(trajectory, HitSet::NonPositive);
    let zero = |censored| GapObservable { y, labels: Vec::new(), value: 0.0, censored };
    let t_y = match (t_y, t_neg) {
        (None, None) => return Ok(zero(true)),
        (None, Some(_)) => return Ok(zero(false)),
        (Some(ty), Some(tn)) if tn < ty => return Ok(zero(false)),
        (Some(ty), _) => ty,
    };
    let mut visits: HashMap<u64, u32> = HashMap::new();
    for &x in &trajectory.positions[..t_y] {
        if (0.0..=y).contains(&x) {
            *visits.entry(x.to_bits()).or_default() += 1;
        }
    }
    let lo = config.points.partition_point(|p| p.position < 0.0);
    let hi = config.points.partition_point(|p| p.position <= y);
    let mut labels: Vec<f64> = config.points[lo..hi]
        .iter()
        .filter(|p| p.marks > visits.get(&p.position.to_bits()).copied().unwrap_or(0))
        .map(|p| p.position)
        .rev()
        .collect();
    if labels.last() != Some(&0.0) {
        labels.push(0.0);
    }
    let value = script_r(&labels)?;
    Ok(GapObservable { y, labels, value, censored: false })
}

/// One first visit `T_{X_k}` before the walk entered `(-inf, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEvent {
    pub k: u64,
    pub x_k: f64,
    /// `T_{X_k}`.
    pub step: u64,
    /// `X_{k+1} - X_k`; `None` when `X_{k+1}` was never realized.
    pub gap: Option<f64>,
    /// Whether `X_{k+1} - X_k > R_{X_k}`; `None` when undecidable.
    pub triggered: Option<bool>,
    /// `R_{X_k}`, computed in full for triggered events.
    pub r_value: Option<f64>,
    /// For triggered events: whether `T_{R_-} < T_{X_{k+1}}`; `None` if censored.
    pub conclusion_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapLemmaReport {
    pub events: Vec<GapEvent>,
    /// First `n >= 1` with `S_n <= 0`, if within the record.
    pub t_nonpositive: Option<u64>,
}

impl GapLemmaReport {
    pub fn triggered(&self) -> impl Iterator<Item = &GapEvent> {
        self.events.iter().filter(|e| e.triggered == Some(true))
    }

    pub fn falsifications(&self) -> usize {
        self.triggered().filter(|e| e.conclusion_holds == Some(false)).count()
    }

    pub fn censored_triggered(&self) -> usize {
        self.triggered().filter(|e| e.conclusion_holds.is_none()).count()
    }
}

fn replay_walk(config: &MarkedConfiguration, trajectory: &Trajectory) -> Result<Walk, ObservableError> {
    let walk = start_walk_with(
        Environment::fixed(config.clone()),
        trajectory.start,
        WalkOptions { tie_mode: TieMode::Strict, ..Default::default() },
    )?;
    if trajectory.positions.first() != Some(&walk.current()) {
        return Err(ObservableError::ReplayMismatch { step: 0 });
    }
    Ok(walk)
}

fn replay_step(walk: &mut Walk, trajectory: &Trajectory, n: usize) -> Result<f64, ObservableError> {
    let x = walk.step().map_err(|_| ObservableError::ReplayMismatch { step: n })?;
    if x != trajectory.positions[n] || walk.marks_left_here() != trajectory.marks_left[n] {
        return Err(ObservableError::ReplayMismatch { step: n });
    }
    Ok(x)
}

/// Checks the gap event at every first visit of a positive point before the
/// walk entered `(-inf, 0]`. Requires a double mark at the origin.
pub fn check_gap_lemma(
    trajectory: &Trajectory,
    config: &MarkedConfiguration,
) -> Result<GapLemmaReport, ObservableError> {
    let idx0 = config
        .index_of(0.0)
        .ok_or_else(|| ObservableError::InvalidInput("no point at the origin".into()))?;
    if config.points[idx0].marks != 2 {
        return Err(ObservableError::InvalidInput("the origin must carry two marks".into()));
    }
    if trajectory.start != 0.0 {
        return Err(ObservableError::InvalidInput("walk must start at the origin".into()));
    }
    let mut walk = replay_walk(config, trajectory)?;
    let mut events: Vec<GapEvent> = Vec::new();
    // first_visit[j] = T_{X_j}, j >= 1
    let mut first_visit: Vec<u64> = vec![0];
    let mut t_neg = None;
    for n in 1..trajectory.positions.len() {
        let x = replay_step(&mut walk, trajectory, n)?;
        if x <= 0.0 {
            t_neg = Some(n as u64);
            break;
        }
        let i = walk.cursor() as usize;
        let k = i - idx0;
        if k < first_visit.len() {
            continue;
        }
        if k != first_visit.len() {
            return Err(ObservableError::InvalidInput(format!("walk skipped over X_{} at step {n}", first_visit.len())));
        }
        first_visit.push(n as u64);
        let gap = config.points.get(i + 1).map(|p| p.position - x);
        let (triggered, r_value) = match gap {
            None => (None, None),
            Some(g) => {
                let (trig, r) = gap_trigger(&walk, x, g);
                (Some(trig), trig.then_some(r))
            }
        };
        events.push(GapEvent { k: k as u64, x_k: x, step: n as u64, gap, triggered, r_value, conclusion_holds: None });
    }
    for e in events.iter_mut().filter(|e| e.triggered == Some(true)) {
        let next_k = e.k as usize + 1;
        e.conclusion_holds = if next_k < first_visit.len() {
            Some(false)
        } else if t_neg.is_some() {
            Some(true)
        } else {
            None
        };
    }
    Ok(GapLemmaReport { events, t_nonpositive: t_neg })
}

/// Decides `gap > R_y` at the walk's current point `y`, scanning live labels
/// downwards from `y` to the origin. Stops as soon as a qualifying label at
/// distance `>= gap` is found. Returns the decision and the largest
/// qualifying distance seen (the full `R_y` when triggered).
fn gap_trigger(walk: &Walk, y: f64, gap: f64) -> (bool, f64) {
    let list = walk.live_list();
    let mut prev_z = y;
    let mut r = f64::NEG_INFINITY;
    let mut node = walk.left_candidate();
    while let Some(id) = node {
        // the origin is always a label, even once its marks are gone
        let z = list.position(id).max(0.0);
        if prev_z - z > y - prev_z {
            r = y - z;
            if r >= gap {
                return (false, r);
            }
        }
        if z == 0.0 {
            break;
        }
        prev_z = z;
        node = list.prev(id);
    }
    (true, r)
}

/// One renewal block of the half-line walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalBlock {
    pub k: u64,
    /// Block start `L_0 + ... + L_{k-1}`.
    pub start: f64,
    /// Maximal displacement right of `start` before its removal. A lower
    /// bound when censored.
    pub ell: f64,
    /// Gap after `start + ell`.
    pub xi: Option<f64>,
    /// `ell + xi`.
    pub length: Option<f64>,
    /// The point `start + ell + xi`, kept exactly for comparisons.
    pub end: Option<f64>,
    pub censored: bool,
    /// At the first visit of `start + length`: no mark left to its left.
    /// `None` when that point was not reached within the record.
    pub clearing_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalDecomposition {
    pub blocks: Vec<RenewalBlock>,
}

impl RenewalDecomposition {
    /// Uncensored `L_k`, `k >= 1`.
    pub fn lengths(&self) -> Vec<f64> {
        self.blocks.iter().filter(|b| b.k >= 1).filter_map(|b| b.length).collect()
    }

    pub fn clearing_violations(&self) -> usize {
        self.blocks.iter().filter(|b| b.clearing_holds == Some(false)).count()
    }

    pub fn clearing_checked(&self) -> usize {
        self.blocks.iter().filter(|b| b.clearing_holds.is_some()).count()
    }
}

/// Environment with the marks of `line` on `(0, inf)` plus exactly one mark at
/// the origin, and nothing on the negative side.
pub fn half_line_environment(line: &PoissonLine) -> Result<Environment, ObservableError> {
    let mut cfg = line.realize(0.0, line.cell_len).map_err(WalkError::from)?;
    cfg.points.retain(|p| p.position > 0.0);
    cfg.points.insert(0, crate::point_process::MarkedPoint { position: 0.0, marks: 1 });
    cfg.left_frontier = 0.0;
    Ok(Environment::right_lazy(cfg, line.clone()))
}

/// Splits a walk on the half-line environment into renewal blocks.
pub fn renewal_decompose(
    trajectory: &Trajectory,
    config: &MarkedConfiguration,
) -> Result<RenewalDecomposition, ObservableError> {
    if config.points.first().map(|p| (p.position, p.marks)) != Some((0.0, 1)) {
        return Err(ObservableError::InvalidInput(
            "expected exactly one mark at the origin and nothing to its left".into(),
        ));
    }
    let len = config.len();
    let mut walk = replay_walk(config, trajectory)?;
    let steps = trajectory.positions.len();
    let mut removal: Vec<Option<u64>> = vec![None; len];
    // residual[i]: marks left on [0, X_i) at T_{X_i}
    let mut residual: Vec<Option<u64>> = vec![None; len];
    // max_upto[n]: index of the rightmost point visited by step n
    let mut max_upto: Vec<u32> = Vec::with_capacity(steps);
    let mut live_left_of_front: u64 = 0;
    let mut front: usize = 0;
    residual[0] = Some(0);
    live_left_of_front += config.points[0].marks as u64;
    live_left_of_front -= 1;
    if walk.marks_left_here() == 0 {
        removal[0] = Some(0);
    }
    max_upto.push(0);
    for n in 1..steps {
        replay_step(&mut walk, trajectory, n)?;
        let i = walk.cursor() as usize;
        if i > front {
            if i != front + 1 {
                return Err(ObservableError::InvalidInput(format!("walk skipped a point at step {n}")));
            }
            residual[i] = Some(live_left_of_front);
            live_left_of_front += config.points[i].marks as u64;
            front = i;
        }
        live_left_of_front -= 1;
        if walk.marks_left_here() == 0 {
            removal[i] = Some(n as u64);
        }
        max_upto.push(front as u32);
    }

    let mut blocks = Vec::new();
    let mut b = 0usize;
    let mut k = 0u64;
    loop {
        let start = config.points[b].position;
        let Some(t_r) = removal[b] else {
            blocks.push(RenewalBlock {
                k,
                start,
                ell: config.points[front].position - start,
                xi: None,
                length: None,
                end: None,
                censored: true,
                clearing_holds: None,
            });
            break;
        };
        let m = max_upto[t_r as usize] as usize;
        let ell = config.points[m].position - start;
        if m + 1 >= len {
            blocks.push(RenewalBlock { k, start, ell, xi: None, length: None, end: None, censored: true, clearing_holds: None });
            break;
        }
        let xi = config.points[m + 1].position - config.points[m].position;
        blocks.push(RenewalBlock {
            k,
            start,
            ell,
            xi: Some(xi),
            length: Some(ell + xi),
            end: Some(config.points[m + 1].position),
            censored: false,
            clearing_holds: residual[m + 1].map(|r| r == 0),
        });
        b = m + 1;
        k += 1;
    }
    Ok(RenewalDecomposition { blocks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Violated,
    /// The needed quantities lie beyond the recorded horizon.
    Undecided,
    /// The premise did not occur within the record.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnReport {
    /// First return to `(-inf, 0]`, if observed.
    pub t_return: Option<u64>,
    /// A return implies `L_{k+1} > L_0 + ... + L_k` for some `k`.
    pub implication: Verdict,
    /// `L_1 <= X_{T+1} - X_1` with `T` the return time.
    pub l1_bound: Verdict,
}

/// Checks the return criterion for a walk with two marks at the origin whose
/// first step goes right, against the blocks of the half-line walk on the same
/// positive environment.
pub fn return_criterion(
    trajectory: &Trajectory,
    config: &MarkedConfiguration,
    blocks: &RenewalDecomposition,
) -> Result<ReturnReport, ObservableError> {
    let idx0 = config
        .index_of(0.0)
        .ok_or_else(|| ObservableError::InvalidInput("no point at the origin".into()))?;
    if config.points[idx0].marks != 2 || trajectory.positions.first() != Some(&0.0) {
        return Err(ObservableError::InvalidInput("expected a walk from a double mark at the origin".into()));
    }
    let x1 = config.points.get(idx0 + 1).map(|p| p.position);
    if trajectory.positions.get(1).copied() != x1 || x1.is_none() {
        return Err(ObservableError::InvalidInput("first step must go to X_1".into()));
    }
    if blocks.blocks.get(1).is_some_and(|b| Some(b.start) != x1) {
        return Err(ObservableError::InvalidInput("blocks do not come from the same positive environment".into()));
    }
    let Some(t) = hitting_time(trajectory, HitSet::NonPositive) else {
        return Ok(ReturnReport { t_return: None, implication: Verdict::Vacuous, l1_bound: Verdict::Vacuous });
    };
    let reach = trajectory.positions[..t].iter().copied().fold(0.0, f64::max);

    let mut implication = Verdict::Violated;
    for b in blocks.blocks.iter().skip(1).filter(|b| b.start <= reach) {
        // L > start  <=>  end > 2 start, exact in floating point
        let long = match b.end {
            Some(e) => e > 2.0 * b.start,
            None => b.ell > b.start,
        };
        if long {
            implication = Verdict::Holds;
            break;
        }
        if b.censored {
            implication = Verdict::Undecided;
        }
    }
    if implication == Verdict::Violated && blocks.blocks.last().is_some_and(|b| b.censored && b.start <= reach) {
        implication = Verdict::Undecided;
    }

    // L_1 <= X_{T+1} - X_1  <=>  X_1 + L_1 <= X_{T+1}
    let l1_bound = match (blocks.blocks.get(1).and_then(|b| b.end), config.points.get(idx0 + t + 1)) {
        (Some(end), Some(xt)) => {
            if end <= xt.position {
                Verdict::Holds
            } else {
                Verdict::Violated
            }
        }
        _ => Verdict::Undecided,
    };
    Ok(ReturnReport { t_return: Some(t as u64), implication, l1_bound })
}

/// Finite-horizon look at whether the walk started at the double-marked
/// point `x` stays strictly right of `x`. A heuristic upper approximation of
/// the infinite-horizon event, never a substitute for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZDiagnostic {
    pub x: f64,
    pub horizon: u64,
    pub stayed_right: bool,
    pub exit_step: Option<u64>,
    pub heuristic: bool,
}

pub fn z_horizon_diagnostic(env: Environment, x: f64, horizon: u64) -> Result<ZDiagnostic, ObservableError> {
    if env.config.marks_at(x) != Some(2) {
        return Err(ObservableError::InvalidInput(format!("{x} is not a double-marked point")));
    }
    let mut walk = start_walk(env, x)?;
    let term = run_observed(&mut walk, StopRule::Hit { set: HitSet::Interval(f64::NEG_INFINITY, x), budget: horizon }, |_, _, _| {})?;
    let exit_step = match term {
        Termination::StopConditionMet { step } => Some(step),
        _ => None,
    };
    Ok(ZDiagnostic { x, horizon, stayed_right: exit_step.is_none(), exit_step, heuristic: true })
}

/// Serializable record of one observable evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub observable: String,
    pub anchor: f64,
    pub value: Option<f64>,
    pub censored: bool,
    pub horizon: u64,
}

/// A `P^2` environment realized around the origin.
pub fn palm_environment(line: &PoissonLine, variant: PalmVariant) -> Result<Environment, ObservableError> {
    let cfg = line.realize_palm(-line.cell_len, line.cell_len, variant).map_err(WalkError::from)?;
    Ok(Environment::lazy(cfg, line.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::MarkLaw;
    use crate::rng::RngStream;
    use crate::walk1d::{run, start_walk};

    #[test]
    fn script_r_examples() {
        let a = [10.0, 9.0, 8.0, 6.0, 2.0, 1.0, 0.0];
        assert_eq!(script_r_max_form(&a), Ok(1.0));
        assert_eq!(script_r_min_form(&a), Ok(1.0));
        let b = [10.0, 9.0, 4.0, 0.0];
        assert_eq!(script_r(&b), Ok(6.0));
        assert_eq!(script_r_min_form(&b), Ok(6.0));
        assert_eq!(script_r(&[3.5, 0.0]), Ok(3.5));
    }

    #[test]
    fn script_r_rejects_bad_labels() {
        assert!(script_r(&[1.0]).is_err());
        assert!(script_r(&[3.0, 1.0]).is_err());
        assert!(script_r(&[3.0, 4.0, 0.0]).is_err());
    }

    #[test]
    fn percolative_examples() {
        assert_eq!(percolative_r(&[0.0, -1.0, -6.0, -10.0]), Ok(6.0));
        assert_eq!(percolative_r(&[0.0, -2.5]), Ok(2.5));
        assert_eq!(percolative_r(&[-6.0, 0.0, -10.0, -1.0]), Ok(6.0));
        assert!(percolative_r(&[]).is_err());
        assert!(percolative_r(&[-1.0]).is_err());
    }

    #[test]
    fn gap_observable_at_first_step() {
        let cfg = MarkedConfiguration::from_points(&[(-5.0, 1), (0.0, 2), (1.0, 1), (10.0, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(cfg.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(3)).unwrap().trajectory;
        assert_eq!(t.positions, vec![0.0, 1.0, 0.0, -5.0]);
        let g = gap_at_walk(&t, &cfg, 1.0).unwrap();
        assert_eq!(g.labels, vec![1.0, 0.0]);
        assert_eq!(g.value, 1.0);
        // walk went non-positive before reaching 10
        let g10 = gap_at_walk(&t, &cfg, 10.0).unwrap();
        assert_eq!((g10.value, g10.censored), (0.0, false));
        assert!(gap_at_walk(&t, &cfg, 2.0).is_err());
    }

    #[test]
    fn gap_lemma_hand_trigger() {
        let cfg = MarkedConfiguration::from_points(&[(-5.0, 1), (0.0, 2), (1.0, 1), (10.0, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(cfg.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(3)).unwrap().trajectory;
        let rep = check_gap_lemma(&t, &cfg).unwrap();
        assert_eq!(rep.events.len(), 1);
        let e = &rep.events[0];
        assert_eq!((e.k, e.triggered, e.r_value, e.conclusion_holds), (1, Some(true), Some(1.0), Some(true)));
        assert_eq!(rep.t_nonpositive, Some(2));
        assert_eq!(rep.falsifications(), 0);
    }

    #[test]
    fn gap_lemma_without_trigger() {
        let cfg = MarkedConfiguration::from_points(&[(-50.0, 1), (0.0, 2), (1.0, 1), (1.5, 1), (2.2, 1), (3.0, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(cfg.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(3)).unwrap().trajectory;
        assert_eq!(t.positions, vec![0.0, 1.0, 1.5, 2.2]);
        let rep = check_gap_lemma(&t, &cfg).unwrap();
        assert_eq!(rep.triggered().count(), 0);
        assert!(rep.events.iter().all(|e| e.triggered != Some(true)));
    }

    #[test]
    fn replay_mismatch_is_detected() {
        let cfg = MarkedConfiguration::from_points(&[(-5.0, 1), (0.0, 2), (1.0, 1), (10.0, 1)]).unwrap();
        let t = Trajectory { start: 0.0, positions: vec![0.0, 10.0], marks_left: vec![1, 0] };
        assert_eq!(check_gap_lemma(&t, &cfg), Err(ObservableError::ReplayMismatch { step: 1 }));
    }

    #[test]
    fn renewal_blocks_hand_case() {
        // omega+ = {0:1, 1:1, 1.5:2, 2.4:1, 6:1}
        let cfg = MarkedConfiguration::from_points(&[(0.0, 1), (1.0, 1), (1.5, 2), (2.4, 1), (6.0, 1), (6.5, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(cfg.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(5)).unwrap().trajectory;
        assert_eq!(t.positions, vec![0.0, 1.0, 1.5, 2.4, 1.5, 6.0]);
        let d = renewal_decompose(&t, &cfg).unwrap();
        let b = &d.blocks;
        assert_eq!((b[0].ell, b[0].length), (0.0, Some(1.0)));
        assert_eq!((b[1].start, b[1].ell, b[1].length), (1.0, 0.0, Some(0.5)));
        assert_eq!(b[2].start, 1.5);
        assert!((b[2].ell - 0.9).abs() < 1e-12);
        assert_eq!(b[2].length, Some(6.0 - 1.5));
        assert_eq!(b[2].clearing_holds, Some(true));
        assert!(b[3].censored || b[3].start == 6.0);
        assert_eq!(d.clearing_violations(), 0);
    }

    #[test]
    fn return_after_first_block() {
        let full = MarkedConfiguration::from_points(&[(-9.0, 1), (0.0, 2), (1.0, 1), (1.5, 1), (4.5, 1), (5.0, 1)]).unwrap();
        let plus = MarkedConfiguration::from_points(&[(0.0, 1), (1.0, 1), (1.5, 1), (4.5, 1), (5.0, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(full.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(3)).unwrap().trajectory;
        assert_eq!(t.positions, vec![0.0, 1.0, 1.5, 0.0]);
        let mut wp = start_walk(Environment::fixed(plus.clone()), 0.0).unwrap();
        let tp = run(&mut wp, StopRule::MaxSteps(4)).unwrap().trajectory;
        let d = renewal_decompose(&tp, &plus).unwrap();
        assert_eq!(d.blocks[2].length, Some(3.0));
        let rep = return_criterion(&t, &full, &d).unwrap();
        assert_eq!(rep.t_return, Some(3));
        assert_eq!(rep.implication, Verdict::Holds);
        assert_eq!(rep.l1_bound, Verdict::Holds);
    }

    #[test]
    fn l1_bound_fails_on_immediate_return_from_double_mark() {
        // S = (0, 1, 0): T = 2, but on omega+ the double mark at 1 lets the
        // walk reach 3.2 before clearing it, so L_1 = 5 > X_3 - X_1 = 2.2
        let full = MarkedConfiguration::from_points(&[(-9.0, 1), (0.0, 2), (1.0, 2), (3.0, 1), (3.2, 1), (6.0, 1)]).unwrap();
        let plus = MarkedConfiguration::from_points(&[(0.0, 1), (1.0, 2), (3.0, 1), (3.2, 1), (6.0, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(full.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(2)).unwrap().trajectory;
        assert_eq!(t.positions, vec![0.0, 1.0, 0.0]);
        let mut wp = start_walk(Environment::fixed(plus.clone()), 0.0).unwrap();
        let tp = run(&mut wp, StopRule::MaxSteps(5)).unwrap().trajectory;
        assert_eq!(tp.positions, vec![0.0, 1.0, 3.0, 3.2, 1.0, 6.0]);
        let d = renewal_decompose(&tp, &plus).unwrap();
        assert_eq!(d.blocks[1].length, Some(5.0));
        let rep = return_criterion(&t, &full, &d).unwrap();
        assert_eq!(rep.implication, Verdict::Holds);
        assert_eq!(rep.l1_bound, Verdict::Violated);
    }

    #[test]
    fn never_returning_is_vacuous() {
        let full = MarkedConfiguration::from_points(&[(-9.0, 1), (0.0, 2), (1.0, 1), (1.5, 1), (2.1, 1)]).unwrap();
        let mut w = start_walk(Environment::fixed(full.clone()), 0.0).unwrap();
        let t = run(&mut w, StopRule::MaxSteps(2)).unwrap().trajectory;
        let rep = return_criterion(&t, &full, &RenewalDecomposition { blocks: vec![] }).unwrap();
        assert_eq!(rep.implication, Verdict::Vacuous);
    }

    #[test]
    fn z_diagnostic_left_first_step() {
        let cfg = MarkedConfiguration::from_points(&[(-1.0, 1), (0.0, 2), (3.0, 1)]).unwrap();
        for h in [1, 5, 100] {
            let d = z_horizon_diagnostic(Environment::fixed(cfg.clone()), 0.0, h).unwrap();
            assert!(!d.stayed_right);
        }
        let single = MarkedConfiguration::from_points(&[(0.0, 1), (3.0, 1)]).unwrap();
        assert!(z_horizon_diagnostic(Environment::fixed(single), 0.0, 3).is_err());
    }

    #[test]
    fn z_diagnostic_monotone_in_horizon() {
        for s in 0..30 {
            let line = PoissonLine::new(RngStream::new(77, s), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
            let env = palm_environment(&line, PalmVariant::P2).unwrap();
            let flags: Vec<bool> = [1u64, 10, 100, 1_000, 10_000]
                .iter()
                .map(|&h| z_horizon_diagnostic(env.clone(), 0.0, h).unwrap().stayed_right)
                .collect();
            assert!(flags.windows(2).all(|w| w[0] >= w[1]), "{flags:?}");
        }
    }

    #[test]
    fn simulated_gap_values_in_range() {
        for s in 0..40 {
            let line = PoissonLine::new(RngStream::new(5, s), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
            let env = palm_environment(&line, PalmVariant::P2).unwrap();
            let mut w = start_walk(env, 0.0).unwrap();
            let t = run(&mut w, StopRule::MaxSteps(300)).unwrap().trajectory;
            let cfg = w.realized_config();
            for &y in t.positions.iter().filter(|&&x| x > 0.0).take(30) {
                let g = gap_at_walk(&t, &cfg, y).unwrap();
                assert!(g.value >= 0.0 && g.value <= y);
                if !g.labels.is_empty() {
                    assert_eq!(script_r_min_form(&g.labels).unwrap(), g.value);
                }
            }
        }
    }
}
