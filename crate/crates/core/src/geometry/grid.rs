use serde::{Deserialize, Serialize};

use super::World;
use crate::Vec2;

/// Planar free-space raster at flight altitude, obstacles inflated by the
/// drone radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub origin: Vec2,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// All-free grid whose cell `(0, 0)` has its lower-left corner at `origin`.
    pub fn new_free(origin: Vec2, cell_size: f64, width: usize, height: usize) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        Self { origin, cell_size, width, height, occupied: vec![false; width * height] }
    }

    /// Builds a grid from a row-major occupancy mask (`y * width + x`).
    pub fn from_mask(origin: Vec2, cell_size: f64, width: usize, height: usize, occupied: Vec<bool>) -> Self {
        assert_eq!(occupied.len(), width * height, "mask size mismatch");
        assert!(cell_size > 0.0, "cell size must be positive");
        Self { origin, cell_size, width, height, occupied }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.occupied[self.index(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, occupied: bool) {
        let i = self.index(x, y);
        self.occupied[i] = occupied;
    }

    pub fn center(&self, x: usize, y: usize) -> Vec2 {
        self.origin + Vec2::new((x as f64 + 0.5) * self.cell_size, (y as f64 + 0.5) * self.cell_size)
    }

    /// Cell containing `p`, if any.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 || fx.is_nan() || fy.is_nan() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn mask(&self) -> &[bool] {
        &self.occupied
    }
}

/// `true` when the cell is wider than the thinnest obstacle, so thin
/// obstacles may fall between cell centres.
pub fn coarse_resolution(world: &World, cell_size: f64) -> bool {
    world.map().min_radius().is_some_and(|r| cell_size > 2.0 * r)
}

/// Rasterises the scene at `altitude`. A cell is occupied iff
/// [`World::check_collision`] reports a contact at its centre; cells whose
/// centre falls outside the bounds are occupied too.
pub fn rasterize_occupancy(world: &World, cell_size: f64, d_drone: f64, altitude: f64) -> OccupancyGrid {
    assert!(cell_size > 0.0, "cell size must be positive");
    if coarse_resolution(world, cell_size) {
        tracing::warn!(cell_size, "occupancy cell larger than the thinnest obstacle; thin obstacles may be missed");
    }
    let map = world.map();
    let b = map.bounds;
    let width = ((b.width() / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let height = ((b.height() / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let mut grid = OccupancyGrid::new_free(b.min, cell_size, width, height);
    let half = d_drone / 2.0;

    for y in 0..height {
        for x in 0..width {
            let c = grid.center(x, y);
            if !b.contains(c) || b.edge_distance(c) - half < 0.0 {
                grid.set(x, y, true);
            }
        }
    }
    for cyl in &map.cylinders {
        if altitude < map.ground_z || altitude > map.ground_z + cyl.height {
            continue;
        }
        let reach = cyl.radius + half;
        let x0 = (((cyl.center.x - reach - b.min.x) / cell_size).floor().max(0.0)) as usize;
        let y0 = (((cyl.center.y - reach - b.min.y) / cell_size).floor().max(0.0)) as usize;
        let x1 = ((((cyl.center.x + reach - b.min.x) / cell_size).ceil()) as usize).min(width - 1);
        let y1 = ((((cyl.center.y + reach - b.min.y) / cell_size).ceil()) as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = grid.center(x, y);
                if (c - cyl.center).norm() - reach < 0.0 {
                    grid.set(x, y, true);
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Cylinder, ObstacleMap};
    use crate::Vec3;
    use proptest::prelude::*;

    fn raster_by_point_checks(world: &World, grid: &OccupancyGrid, d: f64, z: f64) -> Vec<bool> {
        let mut out = Vec::new();
        for y in 0..grid.height {
            for x in 0..grid.width {
                let c = grid.center(x, y);
                let outside = !world.bounds().contains(c);
                out.push(outside || world.check_collision(Vec3::new(c.x, c.y, z), d).is_some());
            }
        }
        out
    }

    #[test]
    fn empty_map_has_only_border_ring() {
        let w = World::new(ObstacleMap::empty(Bounds::centered(10.0, 8.0)));
        let g = rasterize_occupancy(&w, 0.2, 0.6, 1.5);
        assert_eq!((g.width, g.height), (50, 40));
        for y in 0..g.height {
            for x in 0..g.width {
                let border = x == 0 || y == 0 || x == g.width - 1 || y == g.height - 1;
                if border {
                    assert!(g.is_occupied(x, y));
                }
                let c = g.center(x, y);
                if w.bounds().edge_distance(c) > 0.3 {
                    assert!(!g.is_occupied(x, y));
                }
            }
        }
    }

    #[test]
    fn single_cylinder_disc() {
        let map = ObstacleMap::with_cylinders(Bounds::centered(10.0, 10.0), vec![Cylinder::new(Vec2::zeros(), 0.5, 4.0)]);
        let w = World::new(map);
        let g = rasterize_occupancy(&w, 0.2, 0.6, 1.5);
        for y in 0..g.height {
            for x in 0..g.width {
                let r = g.center(x, y).norm();
                if r < 0.8 - 0.2 {
                    assert!(g.is_occupied(x, y));
                }
                if r > 0.8 + 0.2 && w.bounds().edge_distance(g.center(x, y)) > 0.3 {
                    assert!(!g.is_occupied(x, y));
                }
            }
        }
    }

    #[test]
    fn drone_wide_gap_is_closed() {
        // Surfaces 0.6 m apart, exactly one drone diameter.
        let map = ObstacleMap::with_cylinders(
            Bounds::centered(10.0, 10.0),
            vec![Cylinder::new(Vec2::new(-0.8, 0.0), 0.5, 4.0), Cylinder::new(Vec2::new(0.8, 0.0), 0.5, 4.0)],
        );
        let w = World::new(map);
        let g = rasterize_occupancy(&w, 0.1, 0.6, 1.5);
        // Every cell column between the axes has an occupied cell on the row
        // through the centres, so nothing slips through at y = 0.
        let (_, row) = g.cell_of(Vec2::new(0.0, 0.0)).unwrap();
        for y in row.saturating_sub(1)..=row {
            for x in 0..g.width {
                let c = g.center(x, y);
                if c.x.abs() < 0.8 {
                    assert!(g.is_occupied(x, y), "cell {x},{y} at {c:?} free");
                }
            }
        }
    }

    #[test]
    fn coarse_cells_are_flagged() {
        let map = ObstacleMap::with_cylinders(Bounds::centered(10.0, 10.0), vec![Cylinder::new(Vec2::zeros(), 0.1, 4.0)]);
        let w = World::new(map);
        assert!(coarse_resolution(&w, 0.5));
        assert!(!coarse_resolution(&w, 0.1));
    }

    /// Flood fill over free cells without crossing occupied cells.
    fn flood(grid: &OccupancyGrid, sx: usize, sy: usize) -> Vec<bool> {
        let mut seen = vec![false; grid.width * grid.height];
        let mut stack = vec![(sx, sy)];
        while let Some((x, y)) = stack.pop() {
            let i = grid.index(x, y);
            if seen[i] || grid.is_occupied(x, y) {
                continue;
            }
            seen[i] = true;
            if x > 0 { stack.push((x - 1, y)); }
            if y > 0 { stack.push((x, y - 1)); }
            if x + 1 < grid.width { stack.push((x + 1, y)); }
            if y + 1 < grid.height { stack.push((x, y + 1)); }
        }
        seen
    }

    proptest! {
        #[test]
        fn raster_matches_point_checks(cs in prop::collection::vec((-9.0..9.0f64, -9.0..9.0f64, 0.2..1.5f64), 0..12),
                                       cell in 0.15..0.6f64) {
            let cyl = cs.into_iter().map(|(x, y, r)| Cylinder::new(Vec2::new(x, y), r, 4.0)).collect();
            let w = World::new(ObstacleMap::with_cylinders(Bounds::centered(20.0, 20.0), cyl));
            let g = rasterize_occupancy(&w, cell, 0.6, 1.5);
            prop_assert_eq!(g.mask().to_vec(), raster_by_point_checks(&w, &g, 0.6, 1.5));
            prop_assert!(g.width as f64 * cell >= 20.0 - 1e-9);
            prop_assert!(g.height as f64 * cell >= 20.0 - 1e-9);
        }

        #[test]
        fn flood_fill_never_enters_occupied(cs in prop::collection::vec((-9.0..9.0f64, -9.0..9.0f64, 0.2..1.5f64), 1..12)) {
            let cyl = cs.into_iter().map(|(x, y, r)| Cylinder::new(Vec2::new(x, y), r, 4.0)).collect();
            let w = World::new(ObstacleMap::with_cylinders(Bounds::centered(20.0, 20.0), cyl));
            let g = rasterize_occupancy(&w, 0.25, 0.6, 1.5);
            if let Some(start) = (0..g.width * g.height).find(|i| !g.mask()[*i]) {
                let reach = flood(&g, start % g.width, start / g.width);
                for (i, r) in reach.iter().enumerate() {
                    if *r {
                        prop_assert!(!g.mask()[i]);
                        let c = g.center(i % g.width, i / g.width);
                        prop_assert!(w.check_collision(Vec3::new(c.x, c.y, 1.5), 0.6).is_none());
                    }
                }
            }
        }
    }
}
