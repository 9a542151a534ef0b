//! The greedy walk on a marked configuration of the line.
//!
//! The walk removes one mark at its current point and jumps to the nearest
//! other point still carrying a mark. Only the two live neighbours of the
//! current position can ever be the next target, so the live points are kept
//! in a doubly linked list and every step costs O(1) amortized. Fully cleared
//! points are unlinked; the environment is extended lazily whenever a point
//! beyond a frontier could be closer than the best realized candidate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point_process::{MarkLaw, MarkedConfiguration, MarkedPoint, PointProcessError, PoissonLine};

pub(crate) const NIL: u32 = u32::MAX;

/// Default length of one lazy extension stretch.
pub const DEFAULT_STRETCH: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("exact tie between candidates {left} and {right} seen from {from}")]
    AmbiguousTie { from: f64, left: f64, right: f64 },
    #[error("no marked point is left in the environment")]
    Exhausted,
    #[error("invalid stop rule: {0}")]
    InvalidStopRule(String),
    #[error("checkpoint is inconsistent: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    PointProcess(#[from] PointProcessError),
}

/// How exact distance ties are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieMode {
    /// Ties are an error (they have probability zero under the model).
    #[default]
    Strict,
    /// The right candidate wins. For hand-built configurations only.
    PreferRight,
}

/// Live points in position order, linked through their live neighbours.
#[derive(Debug, Clone, Default)]
pub struct LiveList {
    pos: Vec<f64>,
    marks: Vec<u32>,
    prev: Vec<u32>,
    next: Vec<u32>,
    head: u32,
    tail: u32,
}

impl LiveList {
    pub fn new() -> Self {
        Self { head: NIL, tail: NIL, ..Default::default() }
    }

    /// Node `i` is point `i`; points with zero marks are stored but unlinked.
    pub fn from_sorted(points: &[MarkedPoint]) -> Self {
        let mut list = Self::new();
        for p in points {
            list.push_back(p.position, p.marks);
        }
        list
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn position(&self, i: u32) -> f64 {
        self.pos[i as usize]
    }

    pub fn marks(&self, i: u32) -> u32 {
        self.marks[i as usize]
    }

    pub fn prev(&self, i: u32) -> Option<u32> {
        some(self.prev[i as usize])
    }

    pub fn next(&self, i: u32) -> Option<u32> {
        some(self.next[i as usize])
    }

    pub fn head(&self) -> Option<u32> {
        some(self.head)
    }

    pub fn tail(&self) -> Option<u32> {
        some(self.tail)
    }

    /// Appends a node to the right of every node already stored.
    pub fn push_back(&mut self, position: f64, marks: u32) -> u32 {
        let id = self.pos.len() as u32;
        self.pos.push(position);
        self.marks.push(marks);
        self.next.push(NIL);
        if marks == 0 {
            self.prev.push(NIL);
            return id;
        }
        self.prev.push(self.tail);
        if self.tail != NIL {
            self.next[self.tail as usize] = id;
        } else {
            self.head = id;
        }
        self.tail = id;
        id
    }

    /// Appends a node to the left of every node already stored.
    pub fn push_front(&mut self, position: f64, marks: u32) -> u32 {
        let id = self.pos.len() as u32;
        self.pos.push(position);
        self.marks.push(marks);
        self.prev.push(NIL);
        if marks == 0 {
            self.next.push(NIL);
            return id;
        }
        self.next.push(self.head);
        if self.head != NIL {
            self.prev[self.head as usize] = id;
        } else {
            self.tail = id;
        }
        self.head = id;
        id
    }

    /// Removes one mark and unlinks the node when it reaches zero. The removed
    /// node keeps its last neighbour links. Returns the marks left.
    pub fn remove_mark(&mut self, i: u32) -> u32 {
        let iu = i as usize;
        debug_assert!(self.marks[iu] > 0, "removing a mark from a cleared point");
        self.marks[iu] -= 1;
        if self.marks[iu] == 0 {
            let (p, n) = (self.prev[iu], self.next[iu]);
            if p != NIL {
                self.next[p as usize] = n;
            } else {
                self.head = n;
            }
            if n != NIL {
                self.prev[n as usize] = p;
            } else {
                self.tail = p;
            }
        }
        self.marks[iu]
    }
}

#[inline]
fn some(i: u32) -> Option<u32> {
    (i != NIL).then_some(i)
}

/// A configuration together with how it may grow.
#[derive(Debug, Clone)]
pub struct Environment {
    pub config: MarkedConfiguration,
    pub line: Option<PoissonLine>,
    pub extend_left: bool,
    pub extend_right: bool,
}

impl Environment {
    /// A finite configuration with nothing beyond its frontiers.
    pub fn fixed(config: MarkedConfiguration) -> Self {
        Self { config, line: None, extend_left: false, extend_right: false }
    }

    /// A realized window of `line`, extended on both sides on demand.
    pub fn lazy(config: MarkedConfiguration, line: PoissonLine) -> Self {
        Self { config, line: Some(line), extend_left: true, extend_right: true }
    }

    /// Empty to the left of the left frontier; lazy on the right.
    pub fn right_lazy(config: MarkedConfiguration, line: PoissonLine) -> Self {
        Self { config, line: Some(line), extend_left: false, extend_right: true }
    }
}

/// Evolving state of one walk: `S_n`, the live marks `omega_{n+1}` (the mark at
/// `S_n` already removed), and the realized environment.
#[derive(Debug, Clone)]
pub struct Walk {
    list: LiveList,
    initial: Vec<u32>,
    line: Option<PoissonLine>,
    extend_left: bool,
    extend_right: bool,
    left_frontier: f64,
    right_frontier: f64,
    intensity: f64,
    mark_law: MarkLaw,
    stretch: f64,
    tie_mode: TieMode,
    start: f64,
    current: f64,
    cursor: u32,
    left: u32,
    right: u32,
    n: u64,
    removed_total: u64,
    last_marks_left: u32,
}

/// Options for [`start_walk_with`].
#[derive(Debug, Clone, Copy)]
pub struct WalkOptions {
    pub tie_mode: TieMode,
    pub stretch: f64,
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self { tie_mode: TieMode::Strict, stretch: DEFAULT_STRETCH }
    }
}

/// Starts the walk at the point of the environment nearest to `x` (which may
/// be `x` itself) and removes one mark there.
pub fn start_walk(env: Environment, x: f64) -> Result<Walk, WalkError> {
    start_walk_with(env, x, WalkOptions::default())
}

pub fn start_walk_with(env: Environment, x: f64, opts: WalkOptions) -> Result<Walk, WalkError> {
    env.config.validate()?;
    if !(opts.stretch > 0.0 && opts.stretch.is_finite()) {
        return Err(PointProcessError::InvalidLength(opts.stretch).into());
    }
    let cfg = env.config;
    let list = LiveList::from_sorted(&cfg.points);
    let initial = cfg.points.iter().map(|p| p.marks).collect();
    let mut walk = Walk {
        list,
        initial,
        line: env.line,
        extend_left: env.extend_left,
        extend_right: env.extend_right,
        left_frontier: cfg.left_frontier,
        right_frontier: cfg.right_frontier,
        intensity: cfg.intensity,
        mark_law: cfg.mark_law,
        stretch: opts.stretch,
        tie_mode: opts.tie_mode,
        start: x,
        current: x,
        cursor: NIL,
        left: NIL,
        right: NIL,
        n: 0,
        removed_total: 0,
        last_marks_left: 0,
    };
    let idx = cfg.points.partition_point(|p| p.position < x);
    let (left, right) = if idx < cfg.points.len() && cfg.points[idx].position == x {
        // x itself is a point: distance zero, no competitor
        (NIL, idx as u32)
    } else {
        (
            if idx > 0 { idx as u32 - 1 } else { NIL },
            if idx < cfg.points.len() { idx as u32 } else { NIL },
        )
    };
    let target = walk.resolve(x, left, right)?;
    walk.visit(target);
    Ok(walk)
}

impl Walk {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn removed_total(&self) -> u64 {
        self.removed_total
    }

    /// Live structure of the evolved environment. Node ids of a walk started
    /// on a fixed configuration are the configuration's point indices.
    pub fn live_list(&self) -> &LiveList {
        &self.list
    }

    /// Node id of `S_n`.
    pub fn cursor(&self) -> u32 {
        self.cursor
    }

    /// Live neighbour left of `S_n` (excluding `S_n` itself), if realized.
    pub fn left_candidate(&self) -> Option<u32> {
        some(self.left)
    }

    /// Live neighbour right of `S_n` (excluding `S_n` itself), if realized.
    pub fn right_candidate(&self) -> Option<u32> {
        some(self.right)
    }

    /// Marks left at the current point after this step's removal.
    pub fn marks_left_here(&self) -> u32 {
        self.last_marks_left
    }

    pub fn frontiers(&self) -> (f64, f64) {
        (self.left_frontier, self.right_frontier)
    }

    /// Every realized point with its initial marks.
    pub fn realized_config(&self) -> MarkedConfiguration {
        self.collect_config(|i| self.initial[i])
    }

    /// Every realized point still carrying marks, with its current count.
    pub fn live_config(&self) -> MarkedConfiguration {
        let mut cfg = self.collect_config(|i| self.list.marks[i]);
        cfg.points.retain(|p| p.marks > 0);
        cfg
    }

    fn collect_config(&self, marks: impl Fn(usize) -> u32) -> MarkedConfiguration {
        let mut points: Vec<MarkedPoint> = (0..self.list.len())
            .map(|i| MarkedPoint { position: self.list.pos[i], marks: marks(i) })
            .collect();
        points.sort_by(|a, b| a.position.total_cmp(&b.position));
        MarkedConfiguration {
            points,
            left_frontier: self.left_frontier,
            right_frontier: self.right_frontier,
            intensity: self.intensity,
            mark_law: self.mark_law.clone(),
        }
    }

    /// Total live marks on points in `[a, b]`, realizing the window first.
    pub fn live_marks_in(&mut self, a: f64, b: f64) -> Result<u64, WalkError> {
        while self.left_frontier > a && self.extend_left {
            self.extend_left_stretch()?;
        }
        while self.right_frontier < b && self.extend_right {
            self.extend_right_stretch()?;
        }
        Ok((0..self.list.len())
            .filter(|&i| (a..=b).contains(&self.list.pos[i]))
            .map(|i| self.list.marks[i] as u64)
            .sum())
    }

    /// Advances one step and returns the new position.
    #[inline]
    pub fn step(&mut self) -> Result<f64, WalkError> {
        let target = self.resolve(self.current, self.left, self.right)?;
        self.visit(target);
        self.n += 1;
        Ok(self.current)
    }

    #[inline]
    fn visit(&mut self, target: u32) {
        self.cursor = target;
        self.current = self.list.position(target);
        self.last_marks_left = self.list.remove_mark(target);
        self.removed_total += 1;
        self.left = self.list.prev[target as usize];
        self.right = self.list.next[target as usize];
    }

    /// Chooses the nearest of the two live candidates around `from`,
    /// realizing more of the environment while an unrealized point could
    /// still be closer.
    #[inline]
    fn resolve(&mut self, from: f64, mut left: u32, mut right: u32) -> Result<u32, WalkError> {
        loop {
            let dl = if left != NIL { from - self.list.position(left) } else { f64::INFINITY };
            let dr = if right != NIL { self.list.position(right) - from } else { f64::INFINITY };
            let best = dl.min(dr);
            if left == NIL && self.extend_left && from - self.left_frontier < best {
                left = self.extend_left_stretch()?;
                continue;
            }
            if right == NIL && self.extend_right && self.right_frontier - from < best {
                right = self.extend_right_stretch()?;
                continue;
            }
            return match (left != NIL, right != NIL) {
                (false, false) => Err(WalkError::Exhausted),
                (true, false) => Ok(left),
                (false, true) => Ok(right),
                (true, true) => {
                    if dl < dr {
                        Ok(left)
                    } else if dr < dl {
                        Ok(right)
                    } else {
                        match self.tie_mode {
                            TieMode::Strict => Err(WalkError::AmbiguousTie {
                                from,
                                left: self.list.position(left),
                                right: self.list.position(right),
                            }),
                            TieMode::PreferRight => Ok(right),
                        }
                    }
                }
            };
        }
    }

    /// Realizes one stretch beyond the right frontier; returns the new node
    /// nearest to the old frontier, or NIL when the stretch is empty.
    fn extend_right_stretch(&mut self) -> Result<u32, WalkError> {
        let line = self.line.as_ref().ok_or(WalkError::Exhausted)?;
        let new_frontier = self.right_frontier + self.stretch;
        let fresh = line.points_between(self.right_frontier, new_frontier);
        self.right_frontier = new_frontier;
        let mut first = NIL;
        for p in fresh {
            let id = self.list.push_back(p.position, p.marks);
            self.initial.push(p.marks);
            if first == NIL {
                first = id;
            }
        }
        Ok(first)
    }

    fn extend_left_stretch(&mut self) -> Result<u32, WalkError> {
        let line = self.line.as_ref().ok_or(WalkError::Exhausted)?;
        let new_frontier = self.left_frontier - self.stretch;
        let fresh = line.points_between(new_frontier, self.left_frontier);
        self.left_frontier = new_frontier;
        let mut first = NIL;
        for p in fresh.into_iter().rev() {
            let id = self.list.push_front(p.position, p.marks);
            self.initial.push(p.marks);
            if first == NIL {
                first = id;
            }
        }
        Ok(first)
    }

    /// Snapshot from which the walk can be resumed bit-for-bit.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut order: Vec<usize> = (0..self.list.len()).collect();
        order.sort_by(|&a, &b| self.list.pos[a].total_cmp(&self.list.pos[b]));
        let nodes = order
            .iter()
            .map(|&i| CheckpointNode { position: self.list.pos[i], initial: self.initial[i], marks: self.list.marks[i] })
            .collect();
        let pos_of = |i: u32| some(i).map(|i| self.list.position(i));
        Checkpoint {
            line: self.line.clone(),
            extend_left: self.extend_left,
            extend_right: self.extend_right,
            left_frontier: self.left_frontier,
            right_frontier: self.right_frontier,
            intensity: self.intensity,
            mark_law: self.mark_law.clone(),
            stretch: self.stretch,
            tie_mode: self.tie_mode,
            start: self.start,
            current: self.current,
            left: pos_of(self.left),
            right: pos_of(self.right),
            n: self.n,
            removed_total: self.removed_total,
            last_marks_left: self.last_marks_left,
            nodes,
        }
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Walk, WalkError> {
        let mut list = LiveList::new();
        let mut initial = Vec::with_capacity(cp.nodes.len());
        let mut prev = f64::NEG_INFINITY;
        for node in &cp.nodes {
            if !(node.position > prev) || node.marks > node.initial {
                return Err(WalkError::BadCheckpoint("nodes out of order or marks above initial".into()));
            }
            prev = node.position;
            list.push_back(node.position, node.marks);
            initial.push(node.initial);
        }
        let find = |x: Option<f64>| -> Result<u32, WalkError> {
            match x {
                None => Ok(NIL),
                Some(x) => cp
                    .nodes
                    .binary_search_by(|n| n.position.total_cmp(&x))
                    .map(|i| i as u32)
                    .map_err(|_| WalkError::BadCheckpoint(format!("candidate {x} not among nodes"))),
            }
        };
        let left = find(cp.left)?;
        let right = find(cp.right)?;
        let cursor = find(Some(cp.current))?;
        Ok(Walk {
            list,
            initial,
            line: cp.line,
            extend_left: cp.extend_left,
            extend_right: cp.extend_right,
            left_frontier: cp.left_frontier,
            right_frontier: cp.right_frontier,
            intensity: cp.intensity,
            mark_law: cp.mark_law,
            stretch: cp.stretch,
            tie_mode: cp.tie_mode,
            start: cp.start,
            current: cp.current,
            cursor,
            left,
            right,
            n: cp.n,
            removed_total: cp.removed_total,
            last_marks_left: cp.last_marks_left,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointNode {
    pub position: f64,
    pub initial: u32,
    pub marks: u32,
}

/// Cursor, frontier and realized environment of a walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub line: Option<PoissonLine>,
    pub extend_left: bool,
    pub extend_right: bool,
    pub left_frontier: f64,
    pub right_frontier: f64,
    pub intensity: f64,
    pub mark_law: MarkLaw,
    pub stretch: f64,
    pub tie_mode: TieMode,
    pub start: f64,
    pub current: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub n: u64,
    pub removed_total: u64,
    pub last_marks_left: u32,
    pub nodes: Vec<CheckpointNode>,
}

/// Subsets of the line used for hitting times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HitSet {
    /// `(-inf, 0]`.
    NonPositive,
    Point(f64),
    /// Closed interval `[a, b]`.
    Interval(f64, f64),
}

impl HitSet {
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            HitSet::NonPositive => x <= 0.0,
            HitSet::Point(p) => x == p,
            HitSet::Interval(a, b) => a <= x && x <= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run exactly this many steps after `S_0`.
    MaxSteps(u64),
    /// Stop at the first `n >= 1` with `S_n` in the set, or at the budget.
    Hit { set: HitSet, budget: u64 },
    /// Stop once no mark remains in `[a, b]`, or at the budget.
    WindowCleared { a: f64, b: f64, budget: u64 },
}

impl StopRule {
    pub fn budget(&self) -> u64 {
        match *self {
            StopRule::MaxSteps(n) => n,
            StopRule::Hit { budget, .. } | StopRule::WindowCleared { budget, .. } => budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// The stop condition held at this step.
    StopConditionMet { step: u64 },
    /// The step budget ran out first.
    BudgetExhausted { steps: u64 },
    /// `MaxSteps` completed.
    Completed { steps: u64 },
}

/// Recorded path `S_0, ..., S_N` with the marks left at each target after the
/// visit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: f64,
    pub positions: Vec<f64>,
    pub marks_left: Vec<u32>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of steps after `S_0`.
    pub fn steps(&self) -> u64 {
        self.positions.len().saturating_sub(1) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub termination: Termination,
}

/// Runs the walk under `stop` and records every step.
pub fn run(walk: &mut Walk, stop: StopRule) -> Result<RunOutcome, WalkError> {
    let mut traj = Trajectory {
        start: walk.start(),
        positions: vec![walk.current()],
        marks_left: vec![walk.marks_left_here()],
    };
    let termination = run_observed(walk, stop, |_, x, m| {
        traj.positions.push(x);
        traj.marks_left.push(m);
    })?;
    Ok(RunOutcome { trajectory: traj, termination })
}

/// Runs the walk under `stop`, calling `observe(n, S_n, marks_left)` after
/// each step `n >= 1` instead of recording.
pub fn run_observed<F>(walk: &mut Walk, stop: StopRule, mut observe: F) -> Result<Termination, WalkError>
where
    F: FnMut(u64, f64, u32),
{
    match stop {
        StopRule::MaxSteps(budget) => {
            while walk.n() < budget {
                let x = walk.step()?;
                observe(walk.n(), x, walk.marks_left_here());
            }
            Ok(Termination::Completed { steps: walk.n() })
        }
        StopRule::Hit { set, budget } => {
            while walk.n() < budget {
                let x = walk.step()?;
                observe(walk.n(), x, walk.marks_left_here());
                if set.contains(x) {
                    return Ok(Termination::StopConditionMet { step: walk.n() });
                }
            }
            Ok(Termination::BudgetExhausted { steps: walk.n() })
        }
        StopRule::WindowCleared { a, b, budget } => {
            if !(a <= b) {
                return Err(WalkError::InvalidStopRule(format!("window [{a}, {b}]")));
            }
            // marks already removed at S_0 are accounted for by live_marks_in
            let mut left = walk.live_marks_in(a, b)?;
            if left == 0 {
                return Ok(Termination::StopConditionMet { step: walk.n() });
            }
            while walk.n() < budget {
                let x = walk.step()?;
                observe(walk.n(), x, walk.marks_left_here());
                if a <= x && x <= b {
                    left -= 1;
                    if left == 0 {
                        return Ok(Termination::StopConditionMet { step: walk.n() });
                    }
                }
            }
            Ok(Termination::BudgetExhausted { steps: walk.n() })
        }
    }
}

/// Nearest point carrying a mark to `from`, other than `exclude`, in a fixed
/// configuration. A point at `from` itself is eligible unless excluded.
pub fn nearest_marked(
    config: &MarkedConfiguration,
    from: f64,
    exclude: Option<f64>,
    tie_mode: TieMode,
) -> Result<f64, WalkError> {
    let eligible = |p: &&MarkedPoint| p.marks > 0 && Some(p.position) != exclude;
    let idx = config.points.partition_point(|p| p.position < from);
    let right = config.points[idx..].iter().find(eligible);
    let left = config.points[..idx].iter().rev().find(eligible);
    match (left, right) {
        (None, None) => Err(WalkError::Exhausted),
        (Some(l), None) => Ok(l.position),
        (None, Some(r)) => Ok(r.position),
        (Some(l), Some(r)) => {
            let (dl, dr) = (from - l.position, r.position - from);
            if dl < dr {
                Ok(l.position)
            } else if dr < dl {
                Ok(r.position)
            } else {
                match tie_mode {
                    TieMode::Strict => Err(WalkError::AmbiguousTie { from, left: l.position, right: r.position }),
                    TieMode::PreferRight => Ok(r.position),
                }
            }
        }
    }
}

/// Lazy variant of [`nearest_marked`]: realizes the environment as needed.
pub fn nearest_marked_lazy(env: Environment, from: f64, exclude: Option<f64>) -> Result<f64, WalkError> {
    let mut cfg = env.config;
    loop {
        let res = nearest_marked(&cfg, from, exclude, TieMode::Strict);
        let d = match &res {
            Ok(y) => (y - from).abs(),
            Err(WalkError::Exhausted) => f64::INFINITY,
            Err(_) => return res,
        };
        let line = match &env.line {
            Some(l) => l,
            None => return res,
        };
        if env.extend_left && from - cfg.left_frontier < d {
            cfg = cfg.extend_frontier(crate::point_process::Side::Left, DEFAULT_STRETCH, line)?;
        } else if env.extend_right && cfg.right_frontier - from < d {
            cfg = cfg.extend_frontier(crate::point_process::Side::Right, DEFAULT_STRETCH, line)?;
        } else {
            return res;
        }
    }
}

/// First `n >= 1` with `S_n` in `set`; `None` when not hit within the record.
pub fn hitting_time(trajectory: &Trajectory, set: HitSet) -> Option<usize> {
    trajectory.positions.iter().skip(1).position(|&x| set.contains(x)).map(|i| i + 1)
}

/// Replays `trajectory` on `config` and checks that every step went to the
/// nearest marked point. Returns the index of the first inconsistent step.
pub fn replay_check(config: &MarkedConfiguration, trajectory: &Trajectory) -> Result<(), usize> {
    let mut marks: Vec<u32> = config.points.iter().map(|p| p.marks).collect();
    let mut work = config.clone();
    let mut prev: Option<f64> = None;
    for (n, &x) in trajectory.positions.iter().enumerate() {
        let expected = match prev {
            None => nearest_marked(&work, trajectory.start, None, TieMode::Strict),
            Some(s) => nearest_marked(&work, s, Some(s), TieMode::Strict),
        };
        if expected != Ok(x) {
            return Err(n);
        }
        let i = config.index_of(x).ok_or(n)?;
        marks[i] -= 1;
        work.points[i].marks = marks[i];
        if trajectory.marks_left.get(n) != Some(&marks[i]) {
            return Err(n);
        }
        prev = Some(x);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{MarkLaw, PalmVariant, PoissonLine};
    use crate::rng::RngStream;

    fn fixed(points: &[(f64, u32)]) -> Environment {
        Environment::fixed(MarkedConfiguration::from_points(points).unwrap())
    }

    #[test]
    fn nearest_examples() {
        let cfg = MarkedConfiguration::from_points(&[(-3.0, 1), (1.0, 1)]).unwrap();
        assert_eq!(nearest_marked(&cfg, 0.0, None, TieMode::Strict), Ok(1.0));
        let tie = MarkedConfiguration::from_points(&[(-1.0, 1), (1.0, 1)]).unwrap();
        assert!(matches!(
            nearest_marked(&tie, 0.0, None, TieMode::Strict),
            Err(WalkError::AmbiguousTie { .. })
        ));
        assert_eq!(nearest_marked(&tie, 0.0, None, TieMode::PreferRight), Ok(1.0));
        let single = MarkedConfiguration::from_points(&[(5.0, 2)]).unwrap();
        assert_eq!(nearest_marked(&single, 0.0, None, TieMode::Strict), Ok(5.0));
        assert_eq!(nearest_marked(&single, 5.0, Some(5.0), TieMode::Strict), Err(WalkError::Exhausted));
    }

    #[test]
    fn start_examples() {
        let w = start_walk(fixed(&[(1.0, 1), (4.0, 1)]), 2.0).unwrap();
        assert_eq!(w.current(), 1.0);
        let w = start_walk(fixed(&[(1.0, 2)]), 0.0).unwrap();
        assert_eq!(w.current(), 1.0);
        assert_eq!(w.marks_left_here(), 1);
        assert_eq!(w.removed_total(), 1);
    }

    #[test]
    fn start_at_palm_point() {
        let line = PoissonLine::new(RngStream::new(9, 0), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
        let cfg = line.realize_palm(-8.0, 8.0, PalmVariant::P1).unwrap();
        let w = start_walk(Environment::lazy(cfg, line), 0.0).unwrap();
        assert_eq!(w.current(), 0.0);
    }

    #[test]
    fn hand_simulated_runs() {
        let mut w = start_walk(fixed(&[(-3.0, 1), (1.0, 1), (2.0, 2), (5.0, 1)]), 0.0).unwrap();
        let out = run(&mut w, StopRule::MaxSteps(4)).unwrap();
        assert_eq!(out.trajectory.positions, vec![1.0, 2.0, 5.0, 2.0, -3.0]);
        assert_eq!(out.trajectory.marks_left, vec![0, 1, 0, 0, 0]);
        assert_eq!(w.removed_total(), 5);
        assert_eq!(hitting_time(&out.trajectory, HitSet::NonPositive), Some(4));

        let mut w = start_walk(fixed(&[(-3.0, 1), (1.0, 1), (2.0, 1), (5.0, 1)]), 0.0).unwrap();
        let out = run(&mut w, StopRule::MaxSteps(3)).unwrap();
        assert_eq!(out.trajectory.positions, vec![1.0, 2.0, 5.0, -3.0]);
        assert_eq!(w.step(), Err(WalkError::Exhausted));
    }

    #[test]
    fn hitting_time_conventions() {
        let t = Trajectory { start: 0.0, positions: vec![1.0, 2.0, 5.0, -3.0], marks_left: vec![0; 4] };
        assert_eq!(hitting_time(&t, HitSet::Point(1.0)), None);
        assert_eq!(hitting_time(&t, HitSet::Interval(4.0, 6.0)), Some(2));
        let t0 = Trajectory { start: 0.0, positions: vec![-1.0, 2.0], marks_left: vec![0; 2] };
        assert_eq!(hitting_time(&t0, HitSet::NonPositive), None);
    }

    #[test]
    fn hit_rule_reports_budget_separately() {
        let mut w = start_walk(fixed(&[(0.0, 2), (1.0, 1), (1.5, 1), (2.2, 1), (3.0, 1)]), 0.0).unwrap();
        let out = run(&mut w, StopRule::Hit { set: HitSet::NonPositive, budget: 2 }).unwrap();
        assert_eq!(out.termination, Termination::BudgetExhausted { steps: 2 });
        let mut w = start_walk(fixed(&[(-9.0, 1), (0.0, 2), (1.0, 1), (5.0, 1)]), 0.0).unwrap();
        let out = run(&mut w, StopRule::Hit { set: HitSet::NonPositive, budget: 10 }).unwrap();
        assert_eq!(out.trajectory.positions, vec![0.0, 1.0, 0.0]);
        assert_eq!(out.termination, Termination::StopConditionMet { step: 2 });
    }

    fn lazy_walk(seed: u64, p: f64, variant: PalmVariant) -> Walk {
        let line = PoissonLine::new(RngStream::new(seed, 0), 1.0, MarkLaw::two_point(p).unwrap()).unwrap();
        let cfg = line.realize_palm(-4.0, 4.0, variant).unwrap();
        start_walk(Environment::lazy(cfg, line), 0.0).unwrap()
    }

    #[test]
    fn lazy_run_replays_on_realized_config() {
        for seed in 0..20 {
            let mut w = lazy_walk(seed, 0.5, PalmVariant::P1);
            let out = run(&mut w, StopRule::MaxSteps(3_000)).unwrap();
            let cfg = w.realized_config();
            cfg.validate().unwrap();
            assert_eq!(replay_check(&cfg, &out.trajectory), Ok(()), "seed {seed}");
        }
    }

    #[test]
    fn mark_conservation_in_window() {
        let mut w = lazy_walk(3, 0.5, PalmVariant::P2);
        let out = run(&mut w, StopRule::MaxSteps(5_000)).unwrap();
        let init = w.realized_config();
        let live = w.live_config();
        let (a, b) = (-20.0, 30.0);
        let removed = out.trajectory.positions.iter().filter(|&&x| a <= x && x <= b).count() as u64;
        assert_eq!(init.marks_in(a, b), removed + live.marks_in(a, b));
        assert_eq!(w.removed_total(), out.trajectory.len() as u64);
    }

    #[test]
    fn walk_is_independent_of_stretch() {
        let line = PoissonLine::new(RngStream::new(17, 2), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
        let cfg = line.realize_palm(-1.0, 1.0, PalmVariant::P2).unwrap();
        let mut a = start_walk_with(Environment::lazy(cfg.clone(), line.clone()), 0.0, WalkOptions { stretch: 3.0, ..Default::default() }).unwrap();
        let mut b = start_walk(Environment::lazy(cfg, line), 0.0).unwrap();
        let ta = run(&mut a, StopRule::MaxSteps(2_000)).unwrap();
        let tb = run(&mut b, StopRule::MaxSteps(2_000)).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted() {
        let mut full = lazy_walk(21, 0.5, PalmVariant::P1);
        let whole = run(&mut full, StopRule::MaxSteps(4_000)).unwrap().trajectory;
        let mut first = lazy_walk(21, 0.5, PalmVariant::P1);
        run(&mut first, StopRule::MaxSteps(1_500)).unwrap();
        let mut resumed = Walk::from_checkpoint(first.checkpoint()).unwrap();
        let rest = run(&mut resumed, StopRule::MaxSteps(4_000)).unwrap().trajectory;
        assert_eq!(&whole.positions[1_500..], &rest.positions[..]);
        assert_eq!(resumed.realized_config(), full.realized_config());
        assert_eq!(resumed.live_config(), full.live_config());
    }

    #[test]
    fn window_cleared_rule() {
        let mut w = start_walk(fixed(&[(-3.0, 1), (1.0, 1), (2.0, 2), (5.0, 1)]), 0.0).unwrap();
        let out = run(&mut w, StopRule::WindowCleared { a: 0.0, b: 3.0, budget: 10 }).unwrap();
        assert_eq!(out.termination, Termination::StopConditionMet { step: 3 });
    }

    #[test]
    fn single_mark_walk_settles() {
        for seed in 0..50 {
            let mut w = lazy_walk(seed, 0.0, PalmVariant::P1);
            let t = run(&mut w, StopRule::MaxSteps(2_000)).unwrap().trajectory;
            let dirs: Vec<bool> = t.positions.windows(2).map(|w| w[1] > w[0]).collect();
            let last_rev = dirs.windows(2).rposition(|d| d[0] != d[1]).map_or(0, |i| i + 1);
            assert!(last_rev < 1_000, "seed {seed} reversed at {last_rev}");
        }
    }
}
