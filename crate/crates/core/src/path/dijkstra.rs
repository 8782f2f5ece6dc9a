use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{endpoints, neighbour, PathError, StepCost, NEIGHBOURS};
use crate::geometry::OccupancyGrid;
use crate::Vec2;

/// Uniform-cost search with the same connectivity and step costs as
/// [`super::shortest_free_path`]. Kept as an independent reference.
pub fn dijkstra_reference(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<f64, PathError> {
    let ((sx, sy), (gx, gy)) = endpoints(grid, start, goal)?;
    let n = grid.width * grid.height;
    let mut dist: Vec<Option<StepCost>> = vec![None; n];
    let mut done = vec![false; n];
    // Keys are compared through their bit patterns; non-negative f64 values
    // order the same way as their IEEE bits.
    let mut heap = BinaryHeap::new();
    let s = grid.index(sx, sy);
    let target = grid.index(gx, gy);
    dist[s] = Some(StepCost::default());
    heap.push(Reverse((0u64, s)));

    while let Some(Reverse((_, i))) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        if i == target {
            return Ok(dist[i].unwrap().metres(grid.cell_size));
        }
        let here = dist[i].unwrap();
        let (x, y) = (i % grid.width, i / grid.width);
        for &(dx, dy) in &NEIGHBOURS {
            if let Some((nx, ny)) = neighbour(grid, x, y, dx, dy) {
                let j = grid.index(nx, ny);
                let cand = here.step(dx != 0 && dy != 0);
                if !done[j] && dist[j].map_or(true, |d| cand.key() < d.key()) {
                    dist[j] = Some(cand);
                    heap.push(Reverse((cand.key().to_bits(), j)));
                }
            }
        }
    }
    Err(PathError::Unreachable)
}
