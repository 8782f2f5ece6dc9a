use super::index::CylinderIndex;
use super::{Bounds, Contact, ContactTarget, Cylinder, GeometryError, ObstacleMap};
use crate::{Vec2, Vec3};

/// An [`ObstacleMap`] with a spatial index, ready for queries.
///
/// All queries are pure functions of the immutable map, so a `World` can be
/// shared by reference between any number of worker threads.
#[derive(Debug, Clone)]
pub struct World {
    map: ObstacleMap,
    index: CylinderIndex,
}

impl World {
    pub fn new(map: ObstacleMap) -> Self {
        let index = CylinderIndex::build(&map.bounds, &map.cylinders);
        Self { map, index }
    }

    pub fn map(&self) -> &ObstacleMap {
        &self.map
    }

    pub fn bounds(&self) -> &Bounds {
        &self.map.bounds
    }

    pub fn into_map(self) -> ObstacleMap {
        self.map
    }

    /// Distance along `dir` from `origin` to the first cylinder surface,
    /// ground plane or arena wall, capped at `max_range`.
    ///
    /// An origin strictly inside a cylinder has zero free distance.
    pub fn ray_cast(&self, origin: Vec3, dir: Vec3, max_range: f64) -> Result<f64, GeometryError> {
        check_ray(&self.map.bounds, origin, dir)?;
        let mut best = static_hit(&self.map, origin, dir, max_range);
        if self.map.cylinders.is_empty() || best <= 0.0 {
            return Ok(best.max(0.0));
        }
        let cyl = &self.map.cylinders;
        let ground = self.map.ground_z;
        let idx = &self.index;
        let (mut cx, mut cy) = idx.cell_of(origin.xy());

        let horizontal = dir.x * dir.x + dir.y * dir.y;
        if horizontal < 1e-24 {
            for &i in idx.bucket(cx, cy) {
                if let Some(t) = ray_cylinder(&cyl[i as usize], ground, origin, dir) {
                    best = best.min(t);
                }
            }
            return Ok(best);
        }

        // Amanatides–Woo traversal of the bucket grid.
        let step_x: isize = if dir.x > 0.0 { 1 } else { -1 };
        let step_y: isize = if dir.y > 0.0 { 1 } else { -1 };
        let next_boundary = |c: usize, step: isize, o: f64, start: f64| -> f64 {
            let edge = if step > 0 { c + 1 } else { c } as f64;
            start + edge * idx.cell - o
        };
        let mut t_max_x = if dir.x != 0.0 {
            next_boundary(cx, step_x, origin.x, idx.origin.x) / dir.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dir.y != 0.0 {
            next_boundary(cy, step_y, origin.y, idx.origin.y) / dir.y
        } else {
            f64::INFINITY
        };
        let t_dx = if dir.x != 0.0 { idx.cell / dir.x.abs() } else { f64::INFINITY };
        let t_dy = if dir.y != 0.0 { idx.cell / dir.y.abs() } else { f64::INFINITY };

        loop {
            for &i in idx.bucket(cx, cy) {
                if let Some(t) = ray_cylinder(&cyl[i as usize], ground, origin, dir) {
                    best = best.min(t);
                }
            }
            let t_exit = t_max_x.min(t_max_y);
            if best <= t_exit {
                break;
            }
            if t_max_x < t_max_y {
                let nx = cx as isize + step_x;
                if nx < 0 || nx >= idx.nx as isize {
                    break;
                }
                cx = nx as usize;
                t_max_x += t_dx;
            } else {
                let ny = cy as isize + step_y;
                if ny < 0 || ny >= idx.ny as isize {
                    break;
                }
                cy = ny as usize;
                t_max_y += t_dy;
            }
        }
        Ok(best)
    }

    /// Point collision test for a spherical drone of diameter `d_drone`.
    ///
    /// Contact iff the horizontal distance to a cylinder axis is strictly less
    /// than `radius + d_drone / 2` while `z` lies within the cylinder height, or
    /// the drone is strictly closer than `d_drone / 2` to the arena edge.
    /// Touching is not a collision. With several contacts the deepest wins,
    /// ties going to the lower obstacle index and obstacles before the wall.
    pub fn check_collision(&self, position: Vec3, d_drone: f64) -> Option<Contact> {
        let half = d_drone / 2.0;
        let p2 = position.xy();
        let reach = Vec2::repeat(self.index.max_radius + half);
        let mut ids = Vec::new();
        self.index.query_rect(p2 - reach, p2 + reach, &mut ids);

        let mut best: Option<(f64, ContactTarget)> = None;
        for &i in &ids {
            let c = &self.map.cylinders[i as usize];
            if !within_height(c, self.map.ground_z, position.z) {
                continue;
            }
            let dist = (p2 - c.center).norm();
            let clearance = dist - (c.radius + half);
            if clearance < 0.0 && best.map_or(true, |(b, _)| clearance < b) {
                best = Some((clearance, ContactTarget::Obstacle(i as usize)));
            }
        }
        let wall = self.map.bounds.edge_distance(p2) - half;
        if wall < 0.0 && best.map_or(true, |(b, _)| wall < b) {
            best = Some((wall, ContactTarget::Boundary));
        }
        best.map(|(_, target)| self.contact_at(target, position, 0.0))
    }

    /// First contact along the straight segment `p0 → p1` for a drone of
    /// diameter `d_drone`, or `None` if the whole segment is free.
    pub fn swept_collision(&self, p0: Vec3, p1: Vec3, d_drone: f64) -> Option<Contact> {
        if let Some(c) = self.check_collision(p0, d_drone) {
            return Some(c);
        }
        if p0 == p1 {
            return None;
        }
        let half = d_drone / 2.0;
        let reach = Vec2::repeat(self.index.max_radius + half);
        let lo = p0.xy().inf(&p1.xy()) - reach;
        let hi = p0.xy().sup(&p1.xy()) + reach;
        let mut ids = Vec::new();
        self.index.query_rect(lo, hi, &mut ids);

        let mut best: Option<(f64, ContactTarget)> = None;
        let mut consider = |s: f64, target: ContactTarget| {
            if best.map_or(true, |(b, _)| s < b) {
                best = Some((s, target));
            }
        };
        for &i in &ids {
            let c = &self.map.cylinders[i as usize];
            if let Some(s) = segment_entry(c, self.map.ground_z, half, p0, p1) {
                consider(s, ContactTarget::Obstacle(i as usize));
            }
        }
        if let Some(s) = segment_wall_entry(&self.map.bounds, half, p0, p1) {
            consider(s, ContactTarget::Boundary);
        }
        best.map(|(s, target)| self.contact_at(target, p0 + (p1 - p0) * s, s))
    }

    fn contact_at(&self, target: ContactTarget, drone: Vec3, fraction: f64) -> Contact {
        let point = match target {
            ContactTarget::Obstacle(i) => {
                let c = &self.map.cylinders[i];
                let offset = drone.xy() - c.center;
                let n = offset.norm();
                let dir = if n > 0.0 { offset / n } else { Vec2::new(1.0, 0.0) };
                let q = c.center + dir * c.radius;
                Vec3::new(q.x, q.y, drone.z)
            }
            ContactTarget::Boundary => {
                let q = self.map.bounds.nearest_edge_point(drone.xy());
                Vec3::new(q.x, q.y, drone.z)
            }
        };
        Contact { point, target, drone_position: drone, fraction }
    }
}

pub(crate) fn check_ray(bounds: &Bounds, origin: Vec3, dir: Vec3) -> Result<(), GeometryError> {
    if !origin.iter().all(|v| v.is_finite()) || !bounds.contains(origin.xy()) {
        return Err(GeometryError::OriginOutsideBounds { x: origin.x, y: origin.y });
    }
    let n = dir.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
        return Err(GeometryError::BadDirection(n));
    }
    Ok(())
}

/// Nearest hit among range cap, arena walls and ground plane.
pub(crate) fn static_hit(map: &ObstacleMap, origin: Vec3, dir: Vec3, max_range: f64) -> f64 {
    let b = &map.bounds;
    let mut best = max_range;
    if dir.x > 0.0 {
        best = best.min((b.max.x - origin.x) / dir.x);
    } else if dir.x < 0.0 {
        best = best.min((b.min.x - origin.x) / dir.x);
    }
    if dir.y > 0.0 {
        best = best.min((b.max.y - origin.y) / dir.y);
    } else if dir.y < 0.0 {
        best = best.min((b.min.y - origin.y) / dir.y);
    }
    if dir.z < 0.0 {
        best = best.min(((map.ground_z - origin.z) / dir.z).max(0.0));
    }
    best.max(0.0)
}

fn within_height(c: &Cylinder, ground: f64, z: f64) -> bool {
    z >= ground && z <= ground + c.height
}

/// Ray parameter of the first hit with a solid finite cylinder.
pub(crate) fn ray_cylinder(c: &Cylinder, ground: f64, o: Vec3, d: Vec3) -> Option<f64> {
    let top = ground + c.height;
    let ox = o.x - c.center.x;
    let oy = o.y - c.center.y;
    let cc = ox * ox + oy * oy - c.radius * c.radius;
    let mut hit: Option<f64> = None;

    if cc < 0.0 && o.z >= ground && o.z <= top {
        return Some(0.0);
    }
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = ox * d.x + oy * d.y;
        if cc >= 0.0 && b < 0.0 {
            let disc = b * b - a * cc;
            if disc >= 0.0 {
                // Stable entry root: cc / (-b + sqrt(disc)) == (-b - sqrt(disc)) / a.
                let t = cc / (-b + disc.sqrt());
                let z = o.z + t * d.z;
                if t >= 0.0 && z >= ground && z <= top {
                    hit = Some(t);
                }
            }
        }
    }
    // Top cap, seen from above.
    if d.z < 0.0 && o.z > top {
        let t = (top - o.z) / d.z;
        let px = ox + t * d.x;
        let py = oy + t * d.y;
        if px * px + py * py <= c.radius * c.radius {
            hit = Some(hit.map_or(t, |h: f64| h.min(t)));
        }
    }
    hit
}

/// Earliest `s ∈ [0, 1]` where the drone centre on `p0 + s (p1 - p0)` is
/// strictly inside the cylinder inflated by `half`.
fn segment_entry(c: &Cylinder, ground: f64, half: f64, p0: Vec3, p1: Vec3) -> Option<f64> {
    let r = c.radius + half;
    let d = p1 - p0;
    let ox = p0.x - c.center.x;
    let oy = p0.y - c.center.y;
    let cc = ox * ox + oy * oy - r * r;
    let a = d.x * d.x + d.y * d.y;

    // Open interval of planar penetration.
    let (s_in, s_out) = if a == 0.0 {
        if cc < 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        let b = ox * d.x + oy * d.y;
        let disc = b * b - a * cc;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        ((-b - sq) / a, (-b + sq) / a)
    };

    // Closed interval where z is within the cylinder height.
    let top = ground + c.height;
    let (z_lo, z_hi) = if d.z == 0.0 {
        if p0.z >= ground && p0.z <= top {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        let s_a = (ground - p0.z) / d.z;
        let s_b = (top - p0.z) / d.z;
        (s_a.min(s_b), s_a.max(s_b))
    };

    let lo = s_in.max(z_lo).max(0.0);
    let hi = s_out.min(z_hi).min(1.0);
    if lo < hi || (lo == hi && lo > s_in && lo < s_out) {
        Some(lo)
    } else {
        None
    }
}

/// Earliest `s` where the segment enters the open band of width `half`
/// along the arena walls.
fn segment_wall_entry(b: &Bounds, half: f64, p0: Vec3, p1: Vec3) -> Option<f64> {
    let d = p1 - p0;
    let mut best: Option<f64> = None;
    let mut push = |s: f64| {
        if (0.0..1.0).contains(&s) {
            best = Some(best.map_or(s, |v: f64| v.min(s)));
        }
    };
    if d.x < 0.0 {
        push((b.min.x + half - p0.x) / d.x);
    } else if d.x > 0.0 {
        push((b.max.x - half - p0.x) / d.x);
    }
    if d.y < 0.0 {
        push((b.min.y + half - p0.y) / d.y);
    } else if d.y > 0.0 {
        push((b.max.y - half - p0.y) / d.y);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(half: f64) -> Bounds {
        Bounds::centered(2.0 * half, 2.0 * half)
    }

    fn one_cylinder(x: f64, y: f64, r: f64) -> World {
        World::new(ObstacleMap::with_cylinders(square(20.0), vec![Cylinder::new(Vec2::new(x, y), r, 5.0)]))
    }

    /// Marches along the ray in small steps until the point is inside a
    /// cylinder or outside the arena.
    fn march(map: &ObstacleMap, o: Vec3, d: Vec3, max: f64, step: f64) -> f64 {
        let mut t = 0.0;
        while t < max {
            let p = o + d * t;
            let inside_cyl = map.cylinders.iter().any(|c| {
                (p.xy() - c.center).norm() <= c.radius && p.z >= map.ground_z && p.z <= map.ground_z + c.height
            });
            if inside_cyl || !map.bounds.contains(p.xy()) || p.z < map.ground_z {
                return t;
            }
            t += step;
        }
        max
    }

    #[test]
    fn ray_hits_cylinder_dead_ahead() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let t = w.ray_cast(Vec3::new(0.0, 0.0, 1.5), Vec3::x(), 100.0).unwrap();
        assert!((t - 4.5).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_offset_cylinder_matches_marching() {
        let w = one_cylinder(5.0, 0.4, 0.5);
        let o = Vec3::new(0.0, 0.0, 1.5);
        let t = w.ray_cast(o, Vec3::x(), 100.0).unwrap();
        let marched = march(w.map(), o, Vec3::x(), 100.0, 1e-4);
        assert!((t - 4.7).abs() < 1e-12, "{t}");
        assert!((t - marched).abs() <= 1e-4, "{t} vs {marched}");
    }

    #[test]
    fn empty_arena_rays_stop_at_walls() {
        let w = World::new(ObstacleMap::empty(Bounds::centered(160.0, 160.0)));
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::TAU / 16.0;
            let d = Vec3::new(a.cos(), a.sin(), 0.0);
            let t = w.ray_cast(Vec3::new(0.0, 0.0, 1.5), d, 1e3).unwrap();
            let exact = 80.0 / a.cos().abs().max(a.sin().abs());
            assert!((t - exact).abs() < 1e-9);
        }
        let t = w.ray_cast(Vec3::new(0.0, 0.0, 1.5), Vec3::x(), 1e3).unwrap();
        assert_eq!(t, 80.0);
    }

    #[test]
    fn ray_from_outside_is_rejected() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let err = w.ray_cast(Vec3::new(30.0, 0.0, 1.5), Vec3::x(), 10.0).unwrap_err();
        assert!(matches!(err, GeometryError::OriginOutsideBounds { .. }));
        assert!(w.ray_cast(Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), 10.0).is_err());
    }

    #[test]
    fn ray_respects_range_ground_and_caps() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let o = Vec3::new(0.0, 0.0, 1.5);
        assert_eq!(w.ray_cast(o, Vec3::x(), 2.0).unwrap(), 2.0);
        // Straight down onto the ground.
        assert!((w.ray_cast(o, -Vec3::z(), 10.0).unwrap() - 1.5).abs() < 1e-12);
        // Over the top of a 5 m cylinder.
        let high = Vec3::new(0.0, 0.0, 6.0);
        assert_eq!(w.ray_cast(high, Vec3::x(), 15.0).unwrap(), 15.0);
        // Down onto its cap from above.
        let above = Vec3::new(5.0, 0.0, 8.0);
        assert!((w.ray_cast(above, -Vec3::z(), 20.0).unwrap() - 3.0).abs() < 1e-12);
        // Inside the solid.
        assert_eq!(w.ray_cast(Vec3::new(5.0, 0.0, 1.0), Vec3::x(), 20.0).unwrap(), 0.0);
    }

    #[test]
    fn collision_examples() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let c = w.check_collision(Vec3::new(4.4, 0.0, 1.5), 0.6).expect("contact");
        assert_eq!(c.target, ContactTarget::Obstacle(0));
        assert!(((c.point.xy() - Vec2::new(5.0, 0.0)).norm() - 0.5).abs() < 1e-6);
        assert!(w.check_collision(Vec3::new(3.0, 0.0, 1.5), 0.6).is_none());
        // Exactly touching.
        assert!(w.check_collision(Vec3::new(4.25, 0.0, 1.5), 0.5).is_none());
        // Above the cylinder.
        assert!(w.check_collision(Vec3::new(5.0, 0.0, 5.5), 0.6).is_none());
    }

    #[test]
    fn collision_with_walls() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let c = w.check_collision(Vec3::new(19.8, 3.0, 1.5), 0.6).unwrap();
        assert_eq!(c.target, ContactTarget::Boundary);
        assert!((c.point - Vec3::new(20.0, 3.0, 1.5)).norm() < 1e-12);
        assert!(w.check_collision(Vec3::new(19.7, 3.0, 1.5), 0.6).is_none());
    }

    #[test]
    fn swept_segment_through_cylinder() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        let p0 = Vec3::new(0.0, 0.0, 1.5);
        let p1 = Vec3::new(10.0, 0.0, 1.5);
        let c = w.swept_collision(p0, p1, 0.6).expect("contact");
        // Analytic entry into the inflated disc.
        assert!((c.drone_position.x - 4.2).abs() < 1e-9);
        // Cross-check by marching the drone centre in 1e-4 m steps.
        let mut x = 0.0;
        while w.check_collision(Vec3::new(x, 0.0, 1.5), 0.6).is_none() {
            x += 1e-4;
        }
        assert!((x - c.drone_position.x).abs() <= 1e-4 + 1e-9);
        assert!(((c.point.xy() - Vec2::new(5.0, 0.0)).norm() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn swept_free_and_degenerate() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        assert!(w.swept_collision(Vec3::new(0.0, 2.0, 1.5), Vec3::new(10.0, 2.0, 1.5), 0.6).is_none());
        let p = Vec3::new(4.4, 0.1, 1.5);
        assert_eq!(w.swept_collision(p, p, 0.6), w.check_collision(p, 0.6));
        let q = Vec3::new(1.0, 1.0, 1.5);
        assert_eq!(w.swept_collision(q, q, 0.6), None);
    }

    #[test]
    fn swept_tangent_is_not_contact() {
        let w = one_cylinder(5.0, 0.0, 0.5);
        // Passes exactly at distance 0.8 = 0.5 + 0.3.
        assert!(w.swept_collision(Vec3::new(0.0, 0.8, 1.5), Vec3::new(10.0, 0.8, 1.5), 0.6).is_none());
    }

    #[test]
    fn swept_into_wall() {
        let w = World::new(ObstacleMap::empty(square(10.0)));
        let c = w.swept_collision(Vec3::new(0.0, 0.0, 1.5), Vec3::new(12.0, 0.0, 1.5), 0.6).unwrap();
        assert_eq!(c.target, ContactTarget::Boundary);
        assert!((c.drone_position.x - 9.7).abs() < 1e-9);
    }

    fn arb_map() -> impl Strategy<Value = ObstacleMap> {
        prop::collection::vec((-18.0..18.0f64, -18.0..18.0f64, 0.1..2.0f64, 1.0..6.0f64), 0..25).prop_map(|cs| {
            let cylinders = cs
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, r, h))| Cylinder { center: Vec2::new(x, y), radius: r, height: h, group: i as u32 })
                .collect();
            ObstacleMap::with_cylinders(square(20.0), cylinders)
        })
    }

    proptest! {
        #[test]
        fn indexed_ray_cast_equals_linear(map in arb_map(), ox in -19.0..19.0f64, oy in -19.0..19.0f64,
                                          oz in 0.0..7.0f64, yaw in 0.0..6.3f64, pitch in -1.2..1.2f64) {
            let w = World::new(map.clone());
            let o = Vec3::new(ox, oy, oz);
            let d = Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
            let fast = w.ray_cast(o, d, 50.0).unwrap();
            let slow = map.ray_cast_linear(o, d, 50.0).unwrap();
            prop_assert_eq!(fast, slow);
            prop_assert!(fast <= 50.0);
        }

        #[test]
        fn point_just_short_of_hit_is_free(map in arb_map(), ox in -19.0..19.0f64, oy in -19.0..19.0f64, yaw in 0.0..6.3f64) {
            let w = World::new(map);
            let o = Vec3::new(ox, oy, 1.5);
            prop_assume!(w.check_collision(o, 1e-9).is_none());
            let d = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
            let t = w.ray_cast(o, d, 100.0).unwrap();
            let p = o + d * (t * (1.0 - 1e-6));
            prop_assert!(w.check_collision(p, 1e-9).is_none());
        }

        #[test]
        fn swept_existence_is_symmetric(map in arb_map(), a in (-19.0..19.0f64, -19.0..19.0f64),
                                        b in (-19.0..19.0f64, -19.0..19.0f64), d in 0.1..1.0f64) {
            let w = World::new(map);
            let p0 = Vec3::new(a.0, a.1, 1.5);
            let p1 = Vec3::new(b.0, b.1, 1.5);
            prop_assert_eq!(w.swept_collision(p0, p1, d).is_some(), w.swept_collision(p1, p0, d).is_some());
        }

        #[test]
        fn swept_agrees_with_dense_sampling(map in arb_map(), a in (-19.0..19.0f64, -19.0..19.0f64),
                                            b in (-19.0..19.0f64, -19.0..19.0f64)) {
            let w = World::new(map);
            let p0 = Vec3::new(a.0, a.1, 1.5);
            let p1 = Vec3::new(b.0, b.1, 1.5);
            let swept = w.swept_collision(p0, p1, 0.6);
            let n = 4000;
            let first = (0..=n).map(|k| k as f64 / n as f64)
                .find(|s| w.check_collision(p0 + (p1 - p0) * *s, 0.6).is_some());
            match (swept, first) {
                (Some(c), Some(s)) => prop_assert!(c.fraction <= s + 1e-12),
                (None, Some(s)) => prop_assert!(false, "sampled contact at {} missed", s),
                _ => {}
            }
        }

        #[test]
        fn map_json_round_trip(map in arb_map()) {
            let back = ObstacleMap::from_json(&map.to_json()).unwrap();
            prop_assert_eq!(back, map);
        }
    }
}
