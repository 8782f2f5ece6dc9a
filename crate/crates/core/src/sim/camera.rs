use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::{GeometryError, World};
use crate::{Vec2, Vec3};

/// Pinhole depth camera, optical axis horizontal along the drone heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, radians.
    pub horizontal_fov: f64,
    pub max_range: f64,
    /// Frame rate, Hz. The algorithm is queried once per frame.
    pub rate: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { width: 160, height: 120, horizontal_fov: std::f64::consts::FRAC_PI_2, max_range: 20.0, rate: 20.0 }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err("camera resolution must be non-zero".into());
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < std::f64::consts::PI) {
            return Err("camera field of view must lie in (0, pi)".into());
        }
        if !(self.max_range > 0.0) || !(self.rate > 0.0) {
            return Err("camera range and rate must be positive".into());
        }
        Ok(())
    }

    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.horizontal_fov / 2.0).tan()
    }

    /// Unit ray through the centre of pixel `(u, v)` for a camera looking
    /// along `yaw`. Row 0 is the top of the image, column 0 its left edge.
    pub fn pixel_ray(&self, yaw: f64, u: u32, v: u32) -> Vec3 {
        let f = self.focal_px();
        let right = (u as f64 + 0.5 - self.width as f64 / 2.0) / f;
        let down = (v as f64 + 0.5 - self.height as f64 / 2.0) / f;
        let forward = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
        let right_axis = Vec3::new(yaw.sin(), -yaw.cos(), 0.0);
        (forward + right_axis * right - Vec3::z() * down).normalize()
    }
}

/// Row-major range image. Pixels with no hit within range hold `max_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    /// Little-endian 32-bit floats, base64 encoded on the wire.
    #[serde(serialize_with = "encode_depth", deserialize_with = "decode_depth")]
    pub data: Vec<f32>,
}

impl DepthImage {
    pub fn at(&self, u: u32, v: u32) -> f32 {
        self.data[(v * self.width + u) as usize]
    }
}

fn encode_depth<S: Serializer>(data: &[f32], s: S) -> Result<S::Ok, S::Error> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    s.serialize_str(&STANDARD.encode(bytes))
}

fn decode_depth<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f32>, D::Error> {
    let text = String::deserialize(d)?;
    let bytes = STANDARD.decode(text.as_bytes()).map_err(serde::de::Error::custom)?;
    if bytes.len() % 4 != 0 {
        return Err(serde::de::Error::custom("depth payload is not a whole number of f32 values"));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// Smallest depth value reported, so every pixel stays strictly positive.
const MIN_DEPTH: f32 = 1e-6;

/// Renders the range image seen from `position` looking along `yaw`, one
/// analytic ray per pixel.
pub fn render_depth(world: &World, position: Vec3, yaw: f64, camera: &CameraModel) -> Result<DepthImage, GeometryError> {
    let mut data = Vec::with_capacity((camera.width * camera.height) as usize);
    for v in 0..camera.height {
        for u in 0..camera.width {
            let ray = camera.pixel_ray(yaw, u, v);
            let t = world.ray_cast(position, ray, camera.max_range)?;
            data.push((t as f32).clamp(MIN_DEPTH, camera.max_range as f32));
        }
    }
    Ok(DepthImage { width: camera.width, height: camera.height, data })
}

/// Camera heading: along the horizontal velocity once the drone moves,
/// otherwise towards the goal.
pub fn camera_yaw(velocity: Vec3, position: Vec3, goal: Vec3) -> f64 {
    let v: Vec2 = velocity.xy();
    if v.norm() > 0.2 {
        v.y.atan2(v.x)
    } else {
        let g = goal.xy() - position.xy();
        if g.norm() > 0.0 {
            g.y.atan2(g.x)
        } else {
            0.0
        }
    }
}
