use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Point2, Walk2dError};
use crate::rng::{RngStream, StreamTag};
use crate::walk1d::TieMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Plane,
    /// `R x [0, eps]`.
    Strip { eps: f64 },
}

/// Poisson process on the plane or strip, realized cell by cell from keyed
/// sub-streams.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonPlane {
    pub stream: RngStream,
    pub intensity: f64,
    pub geometry: Geometry,
    pub cell: f64,
}

impl PoissonPlane {
    pub fn new(stream: RngStream, intensity: f64, geometry: Geometry) -> Result<Self, Walk2dError> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Walk2dError::InvalidInput(format!("intensity {intensity}")));
        }
        // about four points per cell
        let cell = match geometry {
            Geometry::Plane => 2.0 / intensity.sqrt(),
            Geometry::Strip { eps } if eps > 0.0 && eps.is_finite() => 4.0 / (intensity * eps),
            Geometry::Strip { eps } => return Err(Walk2dError::InvalidInput(format!("strip width {eps}"))),
        };
        Ok(Self { stream, intensity, geometry, cell })
    }

    pub fn cell_points(&self, i: i64, j: i64) -> Vec<Point2> {
        let (height, y0) = match self.geometry {
            Geometry::Plane => (self.cell, j as f64 * self.cell),
            Geometry::Strip { eps } => {
                if j != 0 {
                    return Vec::new();
                }
                (eps, 0.0)
            }
        };
        let mut rng = self.stream.cell(StreamTag::PlaneCell, i, j);
        let mean = self.intensity * self.cell * height;
        let n = Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize;
        let x0 = i as f64 * self.cell;
        (0..n)
            .map(|_| Point2::new(x0 + self.cell * rng.random::<f64>(), y0 + height * rng.random::<f64>()))
            .collect()
    }
}

/// Where the points of a tourist walk come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSource {
    Poisson(PoissonPlane),
    /// A finite point set, binned into square cells of side `cell`.
    Fixed { points: Vec<Point2>, geometry: Geometry, cell: f64 },
}

impl PointSource {
    pub fn fixed(points: Vec<Point2>, geometry: Geometry) -> Result<Self, Walk2dError> {
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Walk2dError::InvalidInput("non-finite point".into()));
        }
        if let Geometry::Strip { eps } = geometry {
            if points.iter().any(|p| p.y < 0.0 || p.y > eps) {
                return Err(Walk2dError::InvalidInput("point outside the strip".into()));
            }
        }
        Ok(PointSource::Fixed { points, geometry, cell: 1.0 })
    }

    fn geometry(&self) -> Geometry {
        match self {
            PointSource::Poisson(p) => p.geometry,
            PointSource::Fixed { geometry, .. } => *geometry,
        }
    }

    fn cell(&self) -> f64 {
        match self {
            PointSource::Poisson(p) => p.cell,
            PointSource::Fixed { cell, .. } => *cell,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct CellState {
    points: Vec<Point2>,
    visited: Vec<bool>,
    live: usize,
}

/// 2D trajectory `S_0, ..., S_N`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory2d {
    pub start: Point2,
    pub positions: Vec<Point2>,
}

/// Walk that always moves to the nearest unvisited point.
#[derive(Debug, Clone)]
pub struct TouristWalk {
    source: PointSource,
    cells: HashMap<(i64, i64), CellState>,
    current: Point2,
    n: u64,
    tie_mode: TieMode,
    /// For fixed sources: unvisited count and the cell index range.
    fixed_live: usize,
    fixed_bounds: (i64, i64, i64, i64),
}

pub fn tourist_walk(source: PointSource, start: Point2, tie_mode: TieMode) -> Result<TouristWalk, Walk2dError> {
    if let Geometry::Strip { eps } = source.geometry() {
        if start.y < 0.0 || start.y > eps {
            return Err(Walk2dError::InvalidInput("start outside the strip".into()));
        }
    }
    let mut walk = TouristWalk {
        source,
        cells: HashMap::new(),
        current: start,
        n: 0,
        tie_mode,
        fixed_live: 0,
        fixed_bounds: (0, -1, 0, -1),
    };
    if let PointSource::Fixed { points, cell, geometry } = &walk.source {
        let (cell, geometry) = (*cell, *geometry);
        let mut bounds = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in points.clone() {
            let key = cell_key(p, cell, geometry);
            bounds = (bounds.0.min(key.0), bounds.1.max(key.0), bounds.2.min(key.1), bounds.3.max(key.1));
            let c = walk.cells.entry(key).or_default();
            c.points.push(p);
            c.visited.push(false);
            c.live += 1;
        }
        walk.fixed_live = points.len();
        walk.fixed_bounds = bounds;
    }
    Ok(walk)
}

fn cell_key(p: Point2, cell: f64, geometry: Geometry) -> (i64, i64) {
    let i = (p.x / cell).floor() as i64;
    match geometry {
        Geometry::Plane => (i, (p.y / cell).floor() as i64),
        Geometry::Strip { .. } => (i, 0),
    }
}

impl TouristWalk {
    pub fn current(&self) -> Point2 {
        self.current
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of cells realized so far.
    pub fn realized_cells(&self) -> usize {
        self.cells.len()
    }

    /// Every realized point with its visited flag.
    pub fn realized_points(&self) -> Vec<(Point2, bool)> {
        let mut keys: Vec<_> = self.cells.keys().copied().collect();
        keys.sort_unstable();
        keys.iter()
            .flat_map(|k| {
                let c = &self.cells[k];
                c.points.iter().copied().zip(c.visited.iter().copied())
            })
            .collect()
    }

    fn cell_state(&mut self, key: (i64, i64)) -> &CellState {
        if !self.cells.contains_key(&key) {
            let state = match &self.source {
                PointSource::Poisson(pp) => {
                    let points = pp.cell_points(key.0, key.1);
                    CellState { visited: vec![false; points.len()], live: points.len(), points }
                }
                PointSource::Fixed { .. } => CellState::default(),
            };
            self.cells.insert(key, state);
        }
        &self.cells[&key]
    }

    fn ring_beyond_fixed(&self, centre: (i64, i64), ring: i64) -> bool {
        let (x0, x1, y0, y1) = self.fixed_bounds;
        let dx = (centre.0 - x0).abs().max((x1 - centre.0).abs());
        let dy = (centre.1 - y0).abs().max((y1 - centre.1).abs());
        ring > dx.max(dy)
    }

    /// Moves to the nearest unvisited point and marks it visited.
    pub fn step(&mut self) -> Result<Point2, Walk2dError> {
        let geometry = self.source.geometry();
        let cell = self.source.cell();
        let fixed = matches!(self.source, PointSource::Fixed { .. });
        if fixed && self.fixed_live == 0 {
            return Err(Walk2dError::Exhausted);
        }
        let here = self.current;
        let centre = cell_key(here, cell, geometry);
        let mut best: Option<(f64, (i64, i64), usize)> = None;
        let mut tied = false;
        let mut ring: i64 = 0;
        loop {
            if let Some((d2, _, _)) = best {
                // anything in this ring or beyond is at least (ring - 1) cells away
                let reach = (ring - 1) as f64 * cell;
                if reach > 0.0 && d2 < reach * reach {
                    break;
                }
            }
            if fixed && self.ring_beyond_fixed(centre, ring) {
                break;
            }
            for key in ring_cells(centre, ring, geometry) {
                let state = self.cell_state(key);
                if state.live == 0 {
                    continue;
                }
                for (idx, p) in state.points.iter().enumerate() {
                    if state.visited[idx] {
                        continue;
                    }
                    let d2 = p.dist2(&here);
                    match best {
                        Some((b, _, _)) if d2 > b => {}
                        Some((b, _, _)) if d2 == b => tied = true,
                        _ => {
                            best = Some((d2, key, idx));
                            tied = false;
                        }
                    }
                }
            }
            ring += 1;
        }
        let Some((_, key, idx)) = best else {
            return Err(Walk2dError::Exhausted);
        };
        if tied && self.tie_mode == TieMode::Strict {
            return Err(Walk2dError::AmbiguousTie { x: here.x, y: here.y });
        }
        let state = self.cells.get_mut(&key).expect("realized");
        state.visited[idx] = true;
        state.live -= 1;
        if fixed {
            self.fixed_live -= 1;
        }
        self.current = state.points[idx];
        self.n += 1;
        Ok(self.current)
    }
}

fn ring_cells(centre: (i64, i64), ring: i64, geometry: Geometry) -> Vec<(i64, i64)> {
    let (ci, cj) = centre;
    if ring == 0 {
        return vec![centre];
    }
    match geometry {
        Geometry::Strip { .. } => vec![(ci - ring, 0), (ci + ring, 0)],
        Geometry::Plane => {
            let mut v = Vec::with_capacity(8 * ring as usize);
            for d in -ring..=ring {
                v.push((ci + d, cj - ring));
                v.push((ci + d, cj + ring));
            }
            for d in -ring + 1..ring {
                v.push((ci - ring, cj + d));
                v.push((ci + ring, cj + d));
            }
            v
        }
    }
}

/// Runs `n_steps` steps of the tourist walk on a Poisson process.
pub fn tourist_run_2d(
    geometry: Geometry,
    intensity: f64,
    start: Point2,
    n_steps: u64,
    stream: RngStream,
) -> Result<Trajectory2d, Walk2dError> {
    let source = PointSource::Poisson(PoissonPlane::new(stream, intensity, geometry)?);
    let mut walk = tourist_walk(source, start, TieMode::Strict)?;
    let mut positions = Vec::with_capacity(n_steps as usize + 1);
    positions.push(start);
    for _ in 0..n_steps {
        positions.push(walk.step()?);
    }
    Ok(Trajectory2d { start, positions })
}
