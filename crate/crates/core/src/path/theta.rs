use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{endpoints, neighbour, PathError, NEIGHBOURS};
use crate::geometry::OccupancyGrid;
use crate::Vec2;

/// Theta*: grid search whose nodes may link to any earlier node in line of
/// sight. Nodes sit at cell centres except the start and goal, which keep
/// their true positions. Every segment of the result satisfies `free`.
pub(crate) fn any_angle(grid: &OccupancyGrid, start: Vec2, goal: Vec2, free: impl Fn(Vec2, Vec2) -> bool) -> Result<Vec<Vec2>, PathError> {
    let ((sx, sy), (gx, gy)) = endpoints(grid, start, goal)?;
    let s = grid.index(sx, sy);
    let target = grid.index(gx, gy);
    if s == target {
        return Ok(vec![start, goal]);
    }
    let pos = |i: usize| {
        if i == s {
            start
        } else if i == target {
            goal
        } else {
            grid.center(i % grid.width, i / grid.width)
        }
    };
    let n = grid.width * grid.height;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[s] = 0.0;
    parent[s] = s as u32;
    let h = |i: usize| (pos(i) - goal).norm();
    // Non-negative floats order like their bit patterns.
    heap.push(Reverse((h(s).to_bits(), h(s).to_bits(), s)));

    while let Some(Reverse((_, _, i))) = heap.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == target {
            break;
        }
        let (x, y) = (i % grid.width, i / grid.width);
        let p = parent[i] as usize;
        for &(dx, dy) in &NEIGHBOURS {
            let Some((nx, ny)) = neighbour(grid, x, y, dx, dy) else { continue };
            let j = grid.index(nx, ny);
            if closed[j] {
                continue;
            }
            let pj = pos(j);
            let (from, cost) = if p != i && free(pos(p), pj) {
                (p, g[p] + (pos(p) - pj).norm())
            } else if free(pos(i), pj) {
                (i, g[i] + (pos(i) - pj).norm())
            } else {
                continue;
            };
            if cost < g[j] {
                g[j] = cost;
                parent[j] = from as u32;
                let hj = h(j);
                heap.push(Reverse(((cost + hj).to_bits(), hj.to_bits(), j)));
            }
        }
    }

    if !closed[target] {
        return Err(PathError::Unreachable);
    }
    let mut out = vec![goal];
    let mut cur = target;
    while cur != s {
        cur = parent[cur] as usize;
        out.push(pos(cur));
    }
    out.reverse();
    Ok(out)
}
