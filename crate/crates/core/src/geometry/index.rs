//! Uniform bucket grid over cylinder footprints.

use super::{Bounds, Cylinder};
use crate::Vec2;

const MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone)]
pub(crate) struct CylinderIndex {
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// CSR layout: cylinders of cell `k` are `items[offsets[k]..offsets[k + 1]]`.
    offsets: Vec<u32>,
    items: Vec<u32>,
    pub max_radius: f64,
}

impl CylinderIndex {
    pub fn build(bounds: &Bounds, cylinders: &[Cylinder]) -> Self {
        let max_radius = cylinders.iter().map(|c| c.radius).fold(0.0, f64::max);
        let mut cell = (2.0 * max_radius).max(1.0);
        while ((bounds.width() / cell).ceil() * (bounds.height() / cell).ceil()) as usize > MAX_CELLS {
            cell *= 2.0;
        }
        let nx = ((bounds.width() / cell).ceil() as usize).max(1);
        let ny = ((bounds.height() / cell).ceil() as usize).max(1);

        let mut counts = vec![0u32; nx * ny + 1];
        let mut spans = Vec::with_capacity(cylinders.len());
        for c in cylinders {
            let (x0, y0) = clamp_cell(bounds.min, cell, nx, ny, c.center - Vec2::repeat(c.radius));
            let (x1, y1) = clamp_cell(bounds.min, cell, nx, ny, c.center + Vec2::repeat(c.radius));
            spans.push((x0, y0, x1, y1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    counts[y * nx + x + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; *offsets.last().unwrap() as usize];
        for (i, &(x0, y0, x1, y1)) in spans.iter().enumerate() {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let k = y * nx + x;
                    items[fill[k] as usize] = i as u32;
                    fill[k] += 1;
                }
            }
        }
        Self { origin: bounds.min, cell, nx, ny, offsets, items, max_radius }
    }

    pub fn cell_of(&self, p: Vec2) -> (usize, usize) {
        clamp_cell(self.origin, self.cell, self.nx, self.ny, p)
    }

    pub fn bucket(&self, x: usize, y: usize) -> &[u32] {
        let k = y * self.nx + x;
        &self.items[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }

    /// Cylinder ids whose footprint buckets overlap the rectangle, sorted and
    /// deduplicated.
    pub fn query_rect(&self, lo: Vec2, hi: Vec2, out: &mut Vec<u32>) {
        out.clear();
        let (x0, y0) = self.cell_of(lo);
        let (x1, y1) = self.cell_of(hi);
        for y in y0..=y1 {
            for x in x0..=x1 {
                out.extend_from_slice(self.bucket(x, y));
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

fn clamp_cell(origin: Vec2, cell: f64, nx: usize, ny: usize, p: Vec2) -> (usize, usize) {
    let fx = ((p.x - origin.x) / cell).floor();
    let fy = ((p.y - origin.y) / cell).floor();
    let x = if fx.is_nan() { 0.0 } else { fx.clamp(0.0, (nx - 1) as f64) };
    let y = if fy.is_nan() { 0.0 } else { fy.clamp(0.0, (ny - 1) as f64) };
    (x as usize, y as usize)
}
