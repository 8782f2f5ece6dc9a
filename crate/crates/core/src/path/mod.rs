//! Shortest free path on the inflated occupancy grid.
//!
//! Search runs over the 8-connected grid with straight steps costing one
//! cell and diagonal steps `√2` cells. Diagonal steps may not cut a corner:
//! both orthogonal neighbours must be free. Path costs are tracked as exact
//! counts of straight and diagonal steps, so two searches that find paths of
//! equal length report bit-identical distances.
//!
//! The grid path overestimates the true shortest length by up to 8% for
//! headings between the grid axes and diagonals. The reported `d_min` is the
//! length after string pulling: waypoints are dropped while the straight
//! segment between the remaining ones stays free. [`shortest_free_path`]
//! tests segments against the grid; [`shortest_flyable_path`] tests them
//! with the simulator's swept collision check, so a segment the drone can fly
//! is never charged a detour.
//!
//! String pulling cannot leave the homotopy class the grid search chose, and
//! the octile metric can prefer the wrong side of an obstacle.
//! [`shortest_flyable_path`] therefore also runs an any-angle search (Theta*)
//! and keeps the shorter of the two polylines.

mod astar;
mod dijkstra;
mod theta;

pub use astar::shortest_free_path;

use crate::geometry::World;
pub use dijkstra::dijkstra_reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::OccupancyGrid;
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("{0} lies outside the grid")]
    OutsideGrid(&'static str),
    #[error("{0} cell is occupied")]
    Blocked(&'static str),
    #[error("goal unreachable")]
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// Length of the string-pulled path from `start` to `goal`, metres.
    pub d_min: f64,
    /// Length of the 8-connected grid path, metres.
    pub grid_length: f64,
    /// String-pulled polyline, starting at `start` and ending at `goal`.
    pub waypoints: Vec<Vec2>,
    /// Centres of the grid path cells from start to goal.
    pub cells: Vec<Vec2>,
}

/// Exact path cost as step counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct StepCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCost {
    pub fn key(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    pub fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }

    pub fn metres(self, cell: f64) -> f64 {
        self.key() * cell
    }
}

pub(crate) const NEIGHBOURS: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Neighbour cell reached by `(dx, dy)` from `(x, y)`, honouring the
/// no-corner-cutting rule.
pub(crate) fn neighbour(grid: &OccupancyGrid, x: usize, y: usize, dx: i32, dy: i32) -> Option<(usize, usize)> {
    let nx = x as i64 + dx as i64;
    let ny = y as i64 + dy as i64;
    if nx < 0 || ny < 0 || nx >= grid.width as i64 || ny >= grid.height as i64 {
        return None;
    }
    let (nx, ny) = (nx as usize, ny as usize);
    if grid.is_occupied(nx, ny) {
        return None;
    }
    if dx != 0 && dy != 0 && (grid.is_occupied(nx, y) || grid.is_occupied(x, ny)) {
        return None;
    }
    Some((nx, ny))
}

pub(crate) fn endpoints(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<((usize, usize), (usize, usize)), PathError> {
    let s = grid.cell_of(start).ok_or(PathError::OutsideGrid("start"))?;
    let g = grid.cell_of(goal).ok_or(PathError::OutsideGrid("goal"))?;
    if grid.is_occupied(s.0, s.1) {
        return Err(PathError::Blocked("start"));
    }
    if grid.is_occupied(g.0, g.1) {
        return Err(PathError::Blocked("goal"));
    }
    Ok((s, g))
}

/// `true` if every cell the segment `a`-`b` passes through is free. A
/// segment through a cell corner needs both side cells free, the same rule
/// as a diagonal grid step.
pub fn line_of_sight(grid: &OccupancyGrid, a: Vec2, b: Vec2) -> bool {
    let (Some((x0, y0)), Some(end)) = (grid.cell_of(a), grid.cell_of(b)) else { return false };
    let free = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < grid.width && (y as usize) < grid.height && !grid.is_occupied(x as usize, y as usize);
    let (mut x, mut y) = (x0 as i64, y0 as i64);
    if !free(x, y) {
        return false;
    }
    let d = b - a;
    let cs = grid.cell_size;
    let axis = |d: f64, p: f64, o: f64, c: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((c + 1) as f64 * cs + o - p) / d, cs / d)
        } else if d < 0.0 {
            (-1, (c as f64 * cs + o - p) / d, -cs / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (sx, mut tx, dtx) = axis(d.x, a.x, grid.origin.x, x);
    let (sy, mut ty, dty) = axis(d.y, a.y, grid.origin.y, y);
    let eps = 1e-9;
    let (ex, ey) = (end.0 as i64, end.1 as i64);
    for _ in 0..grid.width + grid.height + 2 {
        if (x, y) == (ex, ey) {
            return true;
        }
        if (tx - ty).abs() <= eps {
            if !free(x + sx, y) || !free(x, y + sy) {
                return false;
            }
            x += sx;
            y += sy;
            tx += dtx;
            ty += dty;
        } else if tx < ty {
            x += sx;
            tx += dtx;
        } else {
            y += sy;
            ty += dty;
        }
        if !free(x, y) {
            return false;
        }
    }
    (x, y) == (ex, ey)
}

/// Grid search as [`shortest_free_path`], string pulled against the exact
/// scene for a drone of diameter `d_drone` flying at `altitude`.
pub fn shortest_flyable_path(world: &World, grid: &OccupancyGrid, start: Vec2, goal: Vec2, d_drone: f64, altitude: f64) -> Result<PathResult, PathError> {
    let mut r = shortest_free_path(grid, start, goal)?;
    let at = |p: Vec2| crate::Vec3::new(p.x, p.y, altitude);
    let free = |a: Vec2, b: Vec2| world.swept_collision(at(a), at(b), d_drone).is_none();
    let pulled = pull_string(start, goal, &r.cells, free);
    let best = match theta::any_angle(grid, start, goal, free) {
        Ok(any) if polyline_length(&any) < polyline_length(&pulled) => any,
        _ => pulled,
    };
    let mut pts = tighten(best, free, true);
    // Subdividing lets the taut string bend around obstacles in short chords.
    for _ in 0..3 {
        let mut fine = Vec::with_capacity(2 * pts.len());
        for w in pts.windows(2) {
            fine.push(w[0]);
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.push(goal);
        pts = tighten(fine, free, false);
    }
    r.waypoints = tighten(pts, free, true);
    r.d_min = polyline_length(&r.waypoints);
    Ok(r)
}

/// Greedy string pulling of a grid path with the true endpoints substituted
/// for the first and last cell centres. Each anchor first tries the goal
/// directly, then extends as far along the path as `free` allows.
pub(crate) fn pull_string(start: Vec2, goal: Vec2, cells: &[Vec2], free: impl Fn(Vec2, Vec2) -> bool) -> Vec<Vec2> {
    let n = cells.len();
    if n < 2 {
        return vec![start, goal];
    }
    let mut pts = cells.to_vec();
    pts[0] = start;
    pts[n - 1] = goal;
    let mut out = vec![start];
    let mut anchor = 0;
    while anchor < n - 1 {
        if free(pts[anchor], goal) {
            out.push(goal);
            break;
        }
        // Adjacent points are always joined, even when an off-centre endpoint
        // grazes a third cell.
        let mut next = anchor + 1;
        while next < n - 1 && free(pts[anchor], pts[next + 1]) {
            next += 1;
        }
        out.push(pts[next]);
        anchor = next;
    }
    out
}

/// Slides interior vertices towards the chord of their neighbours while both
/// adjacent segments stay free. With `drop`, vertices whose neighbours see
/// each other are removed. Never lengthens the polyline.
pub(crate) fn tighten(mut pts: Vec<Vec2>, free: impl Fn(Vec2, Vec2) -> bool, drop: bool) -> Vec<Vec2> {
    for _ in 0..50 {
        let before = polyline_length(&pts);
        let mut i = 1;
        while i + 1 < pts.len() {
            let (a, v, b) = (pts[i - 1], pts[i], pts[i + 1]);
            if drop && free(a, b) {
                pts.remove(i);
                continue;
            }
            let ab = b - a;
            let s = ((v - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            let target = a + ab * s;
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..20 {
                let mid = 0.5 * (lo + hi);
                let w = v + (target - v) * mid;
                if free(a, w) && free(w, b) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo > 0.0 {
                pts[i] = v + (target - v) * lo;
            }
            i += 1;
        }
        if before - polyline_length(&pts) < 1e-7 {
            break;
        }
    }
    pts
}

pub(crate) fn polyline_length(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn open(w: usize, h: usize, cell: f64) -> OccupancyGrid {
        OccupancyGrid::new_free(Vec2::new(-1.0, -1.0) * cell / 2.0, cell, w, h)
    }

    #[test]
    fn straight_and_diagonal_chains() {
        let g = open(40, 40, 0.5);
        let r = shortest_free_path(&g, Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)).unwrap();
        assert!((r.d_min - 10.0).abs() < 1e-12);
        let r = shortest_free_path(&g, Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0)).unwrap();
        assert!((r.d_min - 10.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        assert_eq!(r.cells.len(), 21);
        assert_eq!(r.waypoints.len(), 2);
        // Off-axis headings are no longer charged the octile excess.
        let r = shortest_free_path(&g, Vec2::new(0.0, 0.0), Vec2::new(15.0, 6.0)).unwrap();
        assert!((r.d_min - Vec2::new(15.0, 6.0).norm()).abs() < 1e-9);
        assert!(r.grid_length > r.d_min * 1.05);
    }

    #[test]
    fn blocking_disc_matches_dijkstra() {
        let mut g = open(60, 40, 0.5);
        for y in 0..g.height {
            for x in 0..g.width {
                if (g.center(x, y) - Vec2::new(10.0, 5.0)).norm() < 3.0 {
                    g.set(x, y, true);
                }
            }
        }
        let (s, t) = (Vec2::new(2.0, 5.0), Vec2::new(20.0, 5.0));
        let r = shortest_free_path(&g, s, t).unwrap();
        assert_eq!(r.grid_length, dijkstra_reference(&g, s, t).unwrap());
        assert!(r.d_min > 18.0 && r.d_min <= r.grid_length);
        assert_polyline(&g, &r);
    }

    #[test]
    fn unreachable_and_blocked() {
        let mut g = open(20, 20, 1.0);
        for y in 0..20 {
            g.set(10, y, true);
        }
        let (s, t) = (Vec2::new(2.0, 2.0), Vec2::new(15.0, 2.0));
        assert_eq!(shortest_free_path(&g, s, t), Err(PathError::Unreachable));
        assert_eq!(dijkstra_reference(&g, s, t), Err(PathError::Unreachable));
        assert_eq!(shortest_free_path(&g, Vec2::new(10.0, 3.0), t), Err(PathError::Blocked("start")));
        assert_eq!(shortest_free_path(&g, s, Vec2::new(99.0, 3.0)), Err(PathError::OutsideGrid("goal")));
    }

    #[test]
    fn flyable_path_takes_a_grazing_straight_segment() {
        use crate::geometry::{rasterize_occupancy, Bounds, Cylinder, ObstacleMap};
        let map = ObstacleMap::with_cylinders(Bounds::centered(40.0, 40.0), vec![Cylinder::new(Vec2::new(5.0, 0.0), 0.5, 10.0)]);
        let world = World::new(map);
        let grid = rasterize_occupancy(&world, 0.2, 0.6, 1.5);
        let (s, t) = (Vec2::new(0.0, 0.85), Vec2::new(10.0, 0.85));
        let exact = shortest_flyable_path(&world, &grid, s, t, 0.6, 1.5).unwrap();
        assert_eq!(exact.waypoints, vec![s, t]);
        assert!((exact.d_min - 10.0).abs() < 1e-12);
        let coarse = shortest_free_path(&grid, s, t).unwrap();
        assert!(coarse.d_min >= exact.d_min);
        assert_eq!(coarse.grid_length, exact.grid_length);
        // Through the cylinder the exact check must detour.
        let (s, t) = (Vec2::new(0.0, 0.3), Vec2::new(10.0, 0.3));
        let r = shortest_flyable_path(&world, &grid, s, t, 0.6, 1.5).unwrap();
        assert!(r.d_min > 10.0);
        for w in r.waypoints.windows(2) {
            assert!(world.swept_collision(crate::Vec3::new(w[0].x, w[0].y, 1.5), crate::Vec3::new(w[1].x, w[1].y, 1.5), 0.6).is_none());
        }
    }

    #[test]
    fn diagonal_cannot_cut_corners() {
        let mut g = open(3, 3, 1.0);
        g.set(1, 0, true);
        g.set(0, 1, true);
        let r = shortest_free_path(&g, g.center(0, 0), g.center(1, 1));
        assert_eq!(r, Err(PathError::Unreachable));
    }

    fn assert_polyline(g: &OccupancyGrid, r: &PathResult) {
        let mut len = 0.0;
        for w in r.cells.windows(2) {
            let d = w[1] - w[0];
            assert!(d.x.abs() <= g.cell_size * 1.000001 && d.y.abs() <= g.cell_size * 1.000001);
            len += d.norm();
        }
        assert!((len - r.grid_length).abs() < 1e-9);
        assert!((polyline_length(&r.waypoints) - r.d_min).abs() < 1e-9);
        assert!(r.d_min <= r.grid_length + 1e-9);
    }

    fn random_grid(seed: u64, n: usize, density: f64) -> OccupancyGrid {
        let mut rng = stream_rng(seed, Stream::Oracle);
        let mut g = OccupancyGrid::new_free(Vec2::zeros(), 1.0, n, n);
        for y in 0..n {
            for x in 0..n {
                g.set(x, y, rng.gen::<f64>() < density);
            }
        }
        g
    }

    #[test]
    fn astar_equals_dijkstra_on_random_grids() {
        let mut solved = 0;
        for seed in 0..100u64 {
            let mut g = random_grid(seed, 64, 0.2);
            g.set(0, 0, false);
            g.set(63, 63, false);
            let (s, t) = (g.center(0, 0), g.center(63, 63));
            match (shortest_free_path(&g, s, t), dijkstra_reference(&g, s, t)) {
                (Ok(a), Ok(d)) => {
                    assert_eq!(a.grid_length, d);
                    assert_polyline(&g, &a);
                    solved += 1;
                }
                (Err(a), Err(d)) => assert_eq!(a, d),
                (a, d) => panic!("seed {seed}: {a:?} vs {d:?}"),
            }
        }
        assert!(solved > 50);
    }

    proptest! {
        #[test]
        fn octile_lower_bound_and_monotonicity(seed in 0u64..10_000, sx in 0usize..32, sy in 0usize..32,
                                               gx in 0usize..32, gy in 0usize..32, drop in 0usize..1024) {
            let mut g = random_grid(seed, 32, 0.25);
            g.set(sx, sy, false);
            g.set(gx, gy, false);
            let (s, t) = (g.center(sx, sy), g.center(gx, gy));
            if let Ok(r) = shortest_free_path(&g, s, t) {
                prop_assert!(r.grid_length >= (t - s).norm() - 2.0 * g.cell_size * std::f64::consts::SQRT_2);
                prop_assert!(r.d_min >= (t - s).norm() - 1e-9);
                prop_assert!(r.d_min <= r.grid_length + 1e-9);
                for w in r.waypoints.windows(2).skip(1).take(r.waypoints.len().saturating_sub(3)) {
                    prop_assert!(line_of_sight(&g, w[0], w[1]));
                }
                let (dx, dy) = (drop % 32, drop / 32);
                g.set(dx, dy, false);
                let r2 = shortest_free_path(&g, s, t).unwrap();
                prop_assert!(r2.grid_length <= r.grid_length);
            }
        }
    }
}
