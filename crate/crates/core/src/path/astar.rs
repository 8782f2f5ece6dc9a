use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{endpoints, neighbour, polyline_length, pull_string, PathError, PathResult, StepCost, NEIGHBOURS};
use crate::geometry::OccupancyGrid;
use crate::Vec2;

const SQRT2_M1: f64 = std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    h: f64,
    cell: u32,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // Reversed for a min-heap on (f, h, cell).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

fn octile(x: usize, y: usize, gx: usize, gy: usize) -> f64 {
    let dx = x.abs_diff(gx) as f64;
    let dy = y.abs_diff(gy) as f64;
    dx.max(dy) + SQRT2_M1 * dx.min(dy)
}

/// A* with the octile heuristic from the cell containing `start` to the
/// cell containing `goal`.
pub fn shortest_free_path(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<PathResult, PathError> {
    let ((sx, sy), (gx, gy)) = endpoints(grid, start, goal)?;
    let n = grid.width * grid.height;
    let mut best: Vec<Option<StepCost>> = vec![None; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();

    let s = grid.index(sx, sy);
    let goal_idx = grid.index(gx, gy);
    best[s] = Some(StepCost::default());
    let h0 = octile(sx, sy, gx, gy);
    heap.push(Open { f: h0, h: h0, cell: s as u32 });

    while let Some(Open { cell, .. }) = heap.pop() {
        let i = cell as usize;
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == goal_idx {
            break;
        }
        let (x, y) = (i % grid.width, i / grid.width);
        let g = best[i].expect("expanded cell has a cost");
        for &(dx, dy) in &NEIGHBOURS {
            let Some((nx, ny)) = neighbour(grid, x, y, dx, dy) else { continue };
            let j = grid.index(nx, ny);
            if closed[j] {
                continue;
            }
            let cand = g.step(dx != 0 && dy != 0);
            if best[j].map_or(true, |b| cand.key() < b.key()) {
                best[j] = Some(cand);
                parent[j] = i as u32;
                let h = octile(nx, ny, gx, gy);
                heap.push(Open { f: cand.key() + h, h, cell: j as u32 });
            }
        }
    }

    let cost = best[goal_idx].filter(|_| closed[goal_idx]).ok_or(PathError::Unreachable)?;
    let mut cells = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != s {
        cur = parent[cur] as usize;
        cells.push(cur);
    }
    cells.reverse();
    let cells: Vec<Vec2> = cells.into_iter().map(|c| grid.center(c % grid.width, c / grid.width)).collect();
    let waypoints = pull_string(start, goal, &cells, |a, b| super::line_of_sight(grid, a, b));
    Ok(PathResult { d_min: polyline_length(&waypoints), grid_length: cost.metres(grid.cell_size), waypoints, cells })
}
