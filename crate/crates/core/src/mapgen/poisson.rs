//! Bridson's Poisson disc sampler with a gap-filling pass.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::Bounds;
use crate::rng::{stream_rng, Stream};
use crate::Vec2;

/// Candidate attempts per active point before it is retired.
pub const BRIDSON_ATTEMPTS: usize = 30;

/// Lattice spacing of the gap-filling pass, as a fraction of the radius.
const FILL_SPACING: f64 = 0.25;

/// Samples points in `bounds` with pairwise distance at least `r`.
///
/// Bridson's dart throwing (30 attempts per active point, candidates
/// uniform in the annulus `[r, 2r]`) runs until the active list is empty.
/// A lattice of spacing `r / 4` is then scanned in row-major order; every
/// lattice point still `r` or more away from all samples seeds a new
/// Bridson run. The result is deterministic for a given seed, including
/// the order of points.
pub fn poisson_disc_sample(bounds: &Bounds, r: f64, seed: u64) -> Vec<Vec2> {
    assert!(r > 0.0 && r.is_finite(), "Poisson radius must be positive");
    let mut rng = stream_rng(seed, Stream::Map);
    let mut s = Sampler::new(bounds, r);

    let first = Vec2::new(
        rng.gen_range(bounds.min.x..bounds.max.x),
        rng.gen_range(bounds.min.y..bounds.max.y),
    );
    s.insert(first);
    s.run(&mut rng);

    let step = r * FILL_SPACING;
    let nx = (bounds.width() / step).ceil() as usize;
    let ny = (bounds.height() / step).ceil() as usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = Vec2::new(
                (bounds.min.x + (i as f64 + 0.5) * step).min(bounds.max.x),
                (bounds.min.y + (j as f64 + 0.5) * step).min(bounds.max.y),
            );
            if s.is_far(p) {
                s.insert(p);
                s.run(&mut rng);
            }
        }
    }
    s.points
}

struct Sampler<'a> {
    bounds: &'a Bounds,
    r: f64,
    cell: f64,
    gw: usize,
    gh: usize,
    grid: Vec<u32>,
    points: Vec<Vec2>,
    active: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

impl<'a> Sampler<'a> {
    fn new(bounds: &'a Bounds, r: f64) -> Self {
        let cell = r / std::f64::consts::SQRT_2;
        let gw = ((bounds.width() / cell).ceil() as usize).max(1);
        let gh = ((bounds.height() / cell).ceil() as usize).max(1);
        Self { bounds, r, cell, gw, gh, grid: vec![EMPTY; gw * gh], points: Vec::new(), active: Vec::new() }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let x = (((p.x - self.bounds.min.x) / self.cell) as usize).min(self.gw - 1);
        let y = (((p.y - self.bounds.min.y) / self.cell) as usize).min(self.gh - 1);
        (x, y)
    }

    fn insert(&mut self, p: Vec2) {
        let (x, y) = self.cell_of(p);
        let id = self.points.len() as u32;
        self.grid[y * self.gw + x] = id;
        self.points.push(p);
        self.active.push(id);
    }

    /// `true` when every existing sample is at least `r` away.
    fn is_far(&self, p: Vec2) -> bool {
        let (cx, cy) = self.cell_of(p);
        let x0 = cx.saturating_sub(2);
        let y0 = cy.saturating_sub(2);
        let x1 = (cx + 2).min(self.gw - 1);
        let y1 = (cy + 2).min(self.gh - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let id = self.grid[y * self.gw + x];
                if id != EMPTY && (self.points[id as usize] - p).norm() < self.r {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, rng: &mut ChaCha8Rng) {
        let (r2, r2x4) = (self.r * self.r, 4.0 * self.r * self.r);
        while !self.active.is_empty() {
            let slot = rng.gen_range(0..self.active.len());
            let base = self.points[self.active[slot] as usize];
            let mut placed = false;
            for _ in 0..BRIDSON_ATTEMPTS {
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let rho = rng.gen_range(r2..r2x4).sqrt();
                let q = base + Vec2::new(rho * theta.cos(), rho * theta.sin());
                let inside = q.x >= self.bounds.min.x
                    && q.x < self.bounds.max.x
                    && q.y >= self.bounds.min.y
                    && q.y < self.bounds.max.y;
                if inside && self.is_far(q) {
                    self.insert(q);
                    placed = true;
                    break;
                }
            }
            if !placed {
                self.active.swap_remove(slot);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn min_pairwise(points: &[Vec2]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min((points[i] - points[j]).norm());
            }
        }
        best
    }

    #[test]
    fn spacing_and_packing_bound() {
        let b = Bounds::new(Vec2::zeros(), Vec2::new(160.0, 160.0));
        let pts = poisson_disc_sample(&b, 5.0, 42);
        assert!(min_pairwise(&pts) >= 5.0);
        let bound = b.area() / (std::f64::consts::PI * 2.5 * 2.5);
        assert!((pts.len() as f64) <= bound, "{} > {bound}", pts.len());
        assert!(pts.iter().all(|p| b.contains(*p)));
    }

    #[test]
    fn tiny_bounds_hold_one_point() {
        let b = Bounds::new(Vec2::zeros(), Vec2::new(3.0, 3.0));
        // Diagonal 4.24 < r = 5, so no second point fits.
        assert_eq!(poisson_disc_sample(&b, 5.0, 1).len(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let b = Bounds::centered(60.0, 40.0);
        assert_eq!(poisson_disc_sample(&b, 2.3, 9), poisson_disc_sample(&b, 2.3, 9));
        assert_ne!(poisson_disc_sample(&b, 2.3, 9), poisson_disc_sample(&b, 2.3, 10));
    }

    #[test]
    fn random_probes_are_covered() {
        let b = Bounds::centered(80.0, 80.0);
        let r = 3.1;
        let pts = poisson_disc_sample(&b, r, 5);
        let mut rng = stream_rng(77, Stream::Oracle);
        let mut uncovered = 0;
        for _ in 0..10_000 {
            let p = Vec2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            if !pts.iter().any(|q| (q - p).norm() <= r) {
                uncovered += 1;
            }
        }
        assert!(uncovered <= 10, "{uncovered} uncovered probes");
    }
}
