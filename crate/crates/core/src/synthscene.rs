//! Synthetic tabletop RGB-D scenes.
//!
//! Objects are analytic primitives on a rectangular table, ray-cast through a
//! pinhole camera. The world frame has its origin at the table centre on the
//! floor and `z` pointing up; the table top is at `z = table.height`.
//!
//! Noise is drawn from one ChaCha stream per image row, with a fixed number of
//! draws per pixel, so a pixel's noise depends only on the seed and its index.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{ObjectClass, PerClass};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scene::{CameraModel, RgbdFrame, TablePlane};
use crate::segmentation::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    /// Size along world x and y (meters).
    pub extent: [f64; 2],
    pub height: f64,
    pub color: [u8; 3],
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            extent: [1.2, 0.8],
            height: 0.75,
            color: [185, 170, 145],
        }
    }
}

/// Class-specific dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum Shape {
    Dish { radius: f64, thickness: f64 },
    /// Spherical cap with the given rim radius and depth.
    Bowl { radius: f64, depth: f64 },
    /// Open cylinder.
    Glass { radius: f64, height: f64 },
    Cutlery { length: f64, width: f64, thickness: f64 },
}

impl Shape {
    pub fn default_for(class: ObjectClass) -> Result<Shape> {
        Ok(match class {
            ObjectClass::Dish => Shape::Dish {
                radius: 0.11,
                thickness: 0.01,
            },
            ObjectClass::Bowl => Shape::Bowl {
                radius: 0.08,
                depth: 0.06,
            },
            ObjectClass::Glass => Shape::Glass {
                radius: 0.035,
                height: 0.11,
            },
            ObjectClass::Cutlery => Shape::Cutlery {
                length: 0.18,
                width: 0.025,
                thickness: 0.008,
            },
            ObjectClass::Unknown => return Err(Error::UnsupportedClass(class)),
        })
    }

    pub fn class(&self) -> ObjectClass {
        match self {
            Shape::Dish { .. } => ObjectClass::Dish,
            Shape::Bowl { .. } => ObjectClass::Bowl,
            Shape::Glass { .. } => ObjectClass::Glass,
            Shape::Cutlery { .. } => ObjectClass::Cutlery,
        }
    }

    pub fn scaled(&self, s: f64) -> Shape {
        match *self {
            Shape::Dish { radius, thickness } => Shape::Dish {
                radius: radius * s,
                thickness: thickness * s,
            },
            Shape::Bowl { radius, depth } => Shape::Bowl {
                radius: radius * s,
                depth: depth * s,
            },
            Shape::Glass { radius, height } => Shape::Glass {
                radius: radius * s,
                height: height * s,
            },
            Shape::Cutlery {
                length,
                width,
                thickness,
            } => Shape::Cutlery {
                length: length * s,
                width: width * s,
                thickness: thickness * s,
            },
        }
    }

    fn dims(&self) -> Vec<f64> {
        match *self {
            Shape::Dish { radius, thickness } => vec![radius, thickness],
            Shape::Bowl { radius, depth } => vec![radius, depth],
            Shape::Glass { radius, height } => vec![radius, height],
            Shape::Cutlery {
                length,
                width,
                thickness,
            } => vec![length, width, thickness],
        }
    }

    /// Height above the table.
    pub fn height(&self) -> f64 {
        match *self {
            Shape::Dish { thickness, .. } => thickness,
            Shape::Bowl { depth, .. } => depth,
            Shape::Glass { height, .. } => height,
            Shape::Cutlery { thickness, .. } => thickness,
        }
    }

    /// Radius of the smallest circle around the pose that contains the footprint.
    pub fn footprint_radius(&self) -> f64 {
        match *self {
            Shape::Dish { radius, .. } | Shape::Bowl { radius, .. } | Shape::Glass { radius, .. } => radius,
            Shape::Cutlery { length, width, .. } => 0.5 * length.hypot(width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Ground-truth label, `≥ 1`.
    pub id: u16,
    pub shape: Shape,
    pub pose: Pose2,
    pub color: [u8; 3],
    /// Palette name used as the colour-training label.
    #[serde(default)]
    pub color_name: Option<String>,
}

impl ObjectSpec {
    pub fn class(&self) -> ObjectClass {
        self.shape.class()
    }

    pub fn color_label(&self) -> String {
        self.color_name.clone().unwrap_or_else(|| {
            let [r, g, b] = self.color;
            format!("#{r:02x}{g:02x}{b:02x}")
        })
    }

    /// Whether the world point lies in the primitive grown by `tol`.
    pub fn contains(&self, p: &Vec3, table_height: f64, tol: f64) -> bool {
        let (c, s) = (self.pose.yaw.cos(), self.pose.yaw.sin());
        let (dx, dy) = (p.x - self.pose.x, p.y - self.pose.y);
        let z = p.z - table_height;
        let rho = dx.hypot(dy);
        match self.shape {
            Shape::Dish { radius, thickness } => rho <= radius + tol && z >= -tol && z <= thickness + tol,
            Shape::Glass { radius, height } => rho <= radius + tol && z >= -tol && z <= height + tol,
            Shape::Bowl { radius, depth } => {
                let r = sphere_radius(radius, depth);
                let d = (dx * dx + dy * dy + (z - r).powi(2)).sqrt();
                (d - r).abs() <= tol && z <= depth + tol
            }
            Shape::Cutlery {
                length,
                width,
                thickness,
            } => {
                let lx = c * dx + s * dy;
                let ly = -s * dx + c * dy;
                lx.abs() <= length / 2.0 + tol && ly.abs() <= width / 2.0 + tol && z >= -tol && z <= thickness + tol
            }
        }
    }
}

fn sphere_radius(rim_radius: f64, depth: f64) -> f64 {
    (rim_radius * rim_radius + depth * depth) / (2.0 * depth)
}

/// Intrinsics plus a look-at pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub intrinsics: CameraModel,
    pub position: Vec3,
    pub look_at: Vec3,
}

impl CameraSpec {
    /// Camera at `distance` from `target`, looking down at `depression` radians,
    /// placed on the −y side.
    pub fn looking_at(intrinsics: CameraModel, target: Vec3, distance: f64, depression: f64) -> Self {
        Self {
            intrinsics,
            position: target + distance * Vec3::new(0.0, -depression.cos(), depression.sin()),
            look_at: target,
        }
    }

    /// Columns are the camera x (right), y (down) and z (forward) axes in world coordinates.
    pub fn rotation(&self) -> Result<Mat3> {
        let f = self.look_at - self.position;
        if !(f.norm() > 0.0) {
            return Err(Error::invalid("camera position equals its look-at point"));
        }
        let f = f.normalize();
        let mut right = f.cross(&Vec3::z());
        if right.norm() < 1e-9 {
            right = f.cross(&Vec3::y());
        }
        let right = right.normalize();
        let down = f.cross(&right);
        Ok(Mat3::from_columns(&[right, down, f]))
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Result<Vec3> {
        Ok(self.rotation()?.transpose() * (p - self.position))
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Result<Vec3> {
        Ok(self.position + self.rotation()? * p)
    }

    /// The world plane `z = height` in camera coordinates.
    pub fn table_plane(&self, height: f64) -> Result<TablePlane> {
        let r = self.rotation()?;
        TablePlane::from_normal(r.transpose() * Vec3::z(), height - self.position.z)
    }
}

impl Default for CameraSpec {
    fn default() -> Self {
        let table = TableSpec::default();
        CameraSpec::looking_at(
            CameraModel::default(),
            Vec3::new(0.0, 0.0, table.height),
            1.2,
            45f64.to_radians(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Gaussian depth noise (meters).
    pub depth_sigma: f64,
    pub dropout_rate: f64,
    /// Extra dropout probability on glass pixels.
    pub specular_dropout_boost: f64,
    /// Per-channel colour noise (8-bit units).
    pub color_jitter: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            depth_sigma: 0.003,
            dropout_rate: 0.02,
            specular_dropout_boost: 0.35,
            color_jitter: 8.0,
        }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self {
            depth_sigma: 0.0,
            dropout_rate: 0.0,
            specular_dropout_boost: 0.0,
            color_jitter: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if prob(self.dropout_rate)
            && prob(self.specular_dropout_boost)
            && self.depth_sigma >= 0.0
            && self.color_jitter >= 0.0
        {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid noise parameters {self:?}")))
        }
    }
}

/// Point lamp with Blinn-Phong highlights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lighting {
    /// Lamp position (world frame).
    pub position: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    /// Overall brightness factor.
    pub gain: f64,
    /// Highlight strength on object surfaces (0 disables).
    pub specular: f64,
    pub shininess: f64,
}

impl Default for Lighting {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.4, 0.5, 2.1),
            ambient: 0.55,
            diffuse: 0.45,
            gain: 1.0,
            specular: 0.5,
            shininess: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub table: TableSpec,
    pub objects: Vec<ObjectSpec>,
    pub camera: CameraSpec,
    #[serde(default)]
    pub lighting: Lighting,
    #[serde(default)]
    pub noise: NoiseParams,
    pub seed: u64,
}

const BACKGROUND: [u8; 3] = [40, 40, 40];

impl SceneSpec {
    pub fn empty(seed: u64) -> Self {
        Self {
            table: TableSpec::default(),
            objects: Vec::new(),
            camera: CameraSpec::default(),
            lighting: Lighting::default(),
            noise: NoiseParams::default(),
            seed,
        }
    }

    pub fn object(&self, id: u16) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Checks dimensions, ids, table containment and pairwise footprint overlap.
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.camera.intrinsics.validate()?;
        self.camera.rotation()?;
        let [tx, ty] = self.table.extent;
        if !(tx > 0.0 && ty > 0.0 && self.table.height.is_finite()) {
            return Err(Error::invalid("table extent must be positive"));
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if o.id == 0 || !ids.insert(o.id) {
                return Err(Error::invalid(format!("object id {} is zero or repeated", o.id)));
            }
            if o.shape.dims().iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(Error::invalid(format!("object {} has a non-positive dimension", o.id)));
            }
            let r = o.shape.footprint_radius();
            if o.pose.x.abs() + r > tx / 2.0 || o.pose.y.abs() + r > ty / 2.0 {
                return Err(Error::invalid(format!("object {} leaves the table", o.id)));
            }
        }
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if footprints_overlap(a, b) {
                    return Err(Error::invalid(format!("objects {} and {} overlap", a.id, b.id)));
                }
            }
        }
        Ok(())
    }
}

/// Conservative overlap test on the circumscribed footprint circles.
pub fn footprints_overlap(a: &ObjectSpec, b: &ObjectSpec) -> bool {
    let d = (a.pose.x - b.pose.x).hypot(a.pose.y - b.pose.y);
    d < a.shape.footprint_radius() + b.shape.footprint_radius()
}

/// Same scene without object `id`; the seed is kept.
pub fn remove_object(spec: &SceneSpec, id: u16) -> Result<SceneSpec> {
    if spec.object(id).is_none() {
        return Err(Error::invalid(format!("no object with id {id}")));
    }
    let mut out = spec.clone();
    out.objects.retain(|o| o.id != id);
    Ok(out)
}

/// Noise-free per-pixel object ids (`0` = table or background).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl GroundTruth {
    pub fn mask(&self, id: u16) -> Mask {
        Mask::from_vec(self.width, self.height, self.labels.iter().map(|&l| l == id).collect())
    }

    pub fn pixel_count(&self, id: u16) -> usize {
        self.labels.iter().filter(|&&l| l == id).count()
    }
}

#[derive(Debug, Clone)]
pub struct Rendering {
    pub frame: RgbdFrame,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Surface {
    Table,
    Object { index: usize, glass: bool },
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    normal: Vec3,
    surface: Surface,
}

fn nearer(best: &mut Option<Hit>, t: f64, normal: Vec3, surface: Surface) {
    if t > 1e-9 && best.map_or(true, |b| t < b.t) {
        *best = Some(Hit { t, normal, surface });
    }
}

/// Ray/infinite-cylinder intersections in the XY plane, sorted.
fn cylinder_hits(o: &Vec3, d: &Vec3, cx: f64, cy: f64, r: f64) -> Option<(f64, f64)> {
    let (ox, oy) = (o.x - cx, o.y - cy);
    let a = d.x * d.x + d.y * d.y;
    if a < 1e-18 {
        return None;
    }
    let b = ox * d.x + oy * d.y;
    let c = ox * ox + oy * oy - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

fn intersect_object(o: &Vec3, d: &Vec3, obj: &ObjectSpec, base: f64, index: usize, best: &mut Option<Hit>) {
    let (px, py) = (obj.pose.x, obj.pose.y);
    let radial = |p: &Vec3| Vec3::new(p.x - px, p.y - py, 0.0).normalize();
    let at = |t: f64| o + d * t;
    let surface = Surface::Object {
        index,
        glass: obj.class() == ObjectClass::Glass,
    };
    // A horizontal disk `z = h` of radius `r` around the pose.
    let disk = |h: f64, r: f64, best: &mut Option<Hit>| {
        if d.z.abs() > 1e-15 {
            let t = (h - o.z) / d.z;
            let p = at(t);
            if (p.x - px).hypot(p.y - py) <= r {
                nearer(best, t, Vec3::z(), surface);
            }
        }
    };
    match obj.shape {
        Shape::Dish { radius, thickness } => {
            disk(base + thickness, radius, best);
            if let Some((t1, _)) = cylinder_hits(o, d, px, py, radius) {
                let z = at(t1).z;
                if z >= base && z <= base + thickness {
                    nearer(best, t1, radial(&at(t1)), surface);
                }
            }
        }
        Shape::Glass { radius, height } => {
            if let Some((t1, t2)) = cylinder_hits(o, d, px, py, radius) {
                for t in [t1, t2] {
                    let z = at(t).z;
                    if z >= base && z <= base + height {
                        nearer(best, t, radial(&at(t)), surface);
                    }
                }
            }
            disk(base + 0.004_f64.min(height / 4.0), radius, best);
        }
        Shape::Bowl { radius, depth } => {
            let r = sphere_radius(radius, depth);
            let c = Vec3::new(px, py, base + r);
            let oc = o - c;
            let a = d.norm_squared();
            let b = oc.dot(d);
            let disc = b * b - a * (oc.norm_squared() - r * r);
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for t in [(-b - sq) / a, (-b + sq) / a] {
                    let p = at(t);
                    if p.z >= base && p.z <= base + depth {
                        nearer(best, t, (p - c) / r, surface);
                    }
                }
            }
        }
        Shape::Cutlery {
            length,
            width,
            thickness,
        } => {
            // Slab test in the object's local frame.
            let (c, s) = (obj.pose.yaw.cos(), obj.pose.yaw.sin());
            let lo = Vec3::new(c * (o.x - px) + s * (o.y - py), -s * (o.x - px) + c * (o.y - py), o.z - base);
            let ld = Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z);
            let half = [length / 2.0, width / 2.0];
            let bounds = [(-half[0], half[0]), (-half[1], half[1]), (0.0, thickness)];
            let mut t_near = f64::NEG_INFINITY;
            let mut t_far = f64::INFINITY;
            let mut axis = 2;
            let mut sign = 1.0;
            for k in 0..3 {
                let (lo_b, hi_b) = bounds[k];
                if ld[k].abs() < 1e-15 {
                    if lo[k] < lo_b || lo[k] > hi_b {
                        return;
                    }
                    continue;
                }
                let (mut ta, mut tb) = ((lo_b - lo[k]) / ld[k], (hi_b - lo[k]) / ld[k]);
                let mut sg = -1.0;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                    sg = 1.0;
                }
                if ta > t_near {
                    t_near = ta;
                    axis = k;
                    sign = sg;
                }
                t_far = t_far.min(tb);
            }
            if t_near <= t_far {
                let local = match axis {
                    0 => Vec3::new(sign, 0.0, 0.0),
                    1 => Vec3::new(0.0, sign, 0.0),
                    _ => Vec3::new(0.0, 0.0, sign),
                };
                let normal = Vec3::new(c * local.x - s * local.y, s * local.x + c * local.y, local.z);
                nearer(best, t_near, normal, surface);
            }
        }
    }
}

fn shade(base: [u8; 3], point: &Vec3, normal: &Vec3, view: &Vec3, light: &Lighting, glossy: bool) -> [f64; 3] {
    let mut n = *normal;
    if n.dot(view) < 0.0 {
        n = -n;
    }
    let l = (light.position - point).normalize();
    let lambert = n.dot(&l).max(0.0);
    let k = (light.ambient + light.diffuse * lambert) * light.gain;
    let spec = if glossy && light.specular > 0.0 {
        let h = (l + view).normalize();
        light.specular * n.dot(&h).max(0.0).powf(light.shininess) * 255.0
    } else {
        0.0
    };
    base.map(|c| c as f64 * k + spec)
}

/// Distance of the sampled lamp from the table centre (meters).
const LAMP_DISTANCE: f64 = 1.5;

/// Splits a 64-bit seed into decorrelated child seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ray-casts the scene and applies sensor noise.
pub fn render(spec: &SceneSpec) -> Result<Rendering> {
    spec.validate()?;
    let cam = spec.camera.intrinsics;
    let rot = spec.camera.rotation()?;
    let origin = spec.camera.position;
    let (w, h) = (cam.width, cam.height);
    let table_z = spec.table.height;
    let [tx, ty] = spec.table.extent;
    let noise = spec.noise;
    // Pixel boxes outside which an object cannot be hit.
    let culling: Vec<[f64; 4]> = spec
        .objects
        .iter()
        .map(|o| {
            Ok(projected_bounds(o, &spec.camera, table_z)?
                .map(|b| [b[0] - 1.0, b[1] - 1.0, b[2] + 1.0, b[3] + 1.0])
                .unwrap_or([f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY]))
        })
        .collect::<Result<_>>()?;

    let rows: Vec<(Vec<[u8; 3]>, Vec<f64>, Vec<u16>)> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, v as u64));
            let mut rgb = Vec::with_capacity(w);
            let mut depth = Vec::with_capacity(w);
            let mut labels = Vec::with_capacity(w);
            for u in 0..w {
                // Fixed draw count per pixel keeps streams aligned across scenes.
                let drop: f64 = rng.random();
                let nd: f64 = rng.sample(StandardNormal);
                let nc: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];

                let ray_cam = Vec3::new((u as f64 - cam.cx) / cam.fx, (v as f64 - cam.cy) / cam.fy, 1.0);
                let d = rot * ray_cam;
                let mut best = None;
                if d.z < 0.0 {
                    let t = (table_z - origin.z) / d.z;
                    let p = origin + d * t;
                    if p.x.abs() <= tx / 2.0 && p.y.abs() <= ty / 2.0 {
                        nearer(&mut best, t, Vec3::z(), Surface::Table);
                    }
                }
                let (uf, vf) = (u as f64, v as f64);
                for (i, obj) in spec.objects.iter().enumerate() {
                    let b = &culling[i];
                    if uf >= b[0] && uf <= b[2] && vf >= b[1] && vf <= b[3] {
                        intersect_object(&origin, &d, obj, table_z, i, &mut best);
                    }
                }
                let view = -d.normalize();
                let (color, z, label, glass) = match best {
                    None => (BACKGROUND.map(f64::from), 0.0, 0u16, false),
                    Some(hit) => {
                        let (base, label, glossy, glass) = match hit.surface {
                            Surface::Table => (spec.table.color, 0, false, false),
                            Surface::Object { index, glass } => {
                                let o = &spec.objects[index];
                                (o.color, o.id, true, glass)
                            }
                        };
                        let point = origin + d * hit.t;
                        (shade(base, &point, &hit.normal, &view, &spec.lighting, glossy), hit.t, label, glass)
                    }
                };
                let mut z = z;
                if z > 0.0 {
                    let p_drop = noise.dropout_rate + if glass { noise.specular_dropout_boost } else { 0.0 };
                    if drop < p_drop {
                        z = 0.0;
                    } else {
                        z = (z + noise.depth_sigma * nd).max(0.0);
                    }
                }
                rgb.push(std::array::from_fn(|k| {
                    (color[k] + noise.color_jitter * nc[k]).round().clamp(0.0, 255.0) as u8
                }));
                depth.push(z);
                labels.push(label);
            }
            (rgb, depth, labels)
        })
        .collect();

    let mut rgb = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    let mut labels = Vec::with_capacity(w * h);
    for (r, d, l) in rows {
        rgb.extend(r);
        depth.extend(d);
        labels.extend(l);
    }
    Ok(Rendering {
        frame: RgbdFrame::new(w, h, rgb, depth)?,
        truth: GroundTruth {
            width: w,
            height: h,
            labels,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteColor {
    pub name: String,
    pub rgb: [u8; 3],
}

pub fn default_palette() -> Vec<PaletteColor> {
    [
        ("red", [200, 35, 35]),
        ("green", [35, 160, 60]),
        ("blue", [40, 80, 200]),
        ("yellow", [225, 200, 40]),
        ("purple", [140, 50, 170]),
    ]
    .into_iter()
    .map(|(name, rgb)| PaletteColor {
        name: name.to_string(),
        rgb,
    })
    .collect()
}

/// What [`sample_scene`] varies and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizerConfig {
    pub counts: PerClass<usize>,
    /// Placement window for object poses (world x and y, meters).
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Uniform scale applied to the default dimensions.
    pub scale_range: [f64; 2],
    pub palette: Vec<PaletteColor>,
    /// Minimum gap between footprint circles (meters).
    pub min_gap: f64,
    /// Minimum gap between projected object boxes (pixels).
    pub min_pixel_gap: f64,
    pub max_retries: usize,
    pub table: TableSpec,
    pub intrinsics: CameraModel,
    pub camera_distance: f64,
    /// Downward viewing angle in degrees.
    pub camera_depression: f64,
    pub light_gain_range: [f64; 2],
    pub noise: NoiseParams,
}

impl Default for RandomizerConfig {
    fn default() -> Self {
        Self {
            counts: PerClass {
                glass: 1,
                dish: 1,
                bowl: 1,
                cutlery: 1,
            },
            x_range: [-0.42, 0.42],
            y_range: [-0.25, 0.28],
            scale_range: [0.9, 1.1],
            palette: default_palette(),
            min_gap: 0.03,
            min_pixel_gap: 16.0,
            max_retries: 2000,
            table: TableSpec::default(),
            intrinsics: CameraModel::default(),
            camera_distance: 1.2,
            camera_depression: 45.0,
            light_gain_range: [0.9, 1.1],
            noise: NoiseParams::default(),
        }
    }
}

impl RandomizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        if !(ordered(self.x_range) && ordered(self.y_range) && ordered(self.scale_range) && ordered(self.light_gain_range)) {
            return Err(Error::invalid("randomizer ranges must be finite with lo <= hi"));
        }
        if self.scale_range[0] <= 0.0 || self.camera_distance <= 0.0 {
            return Err(Error::invalid("scale and camera distance must be positive"));
        }
        if self.palette.is_empty() {
            return Err(Error::invalid("palette is empty"));
        }
        if self.max_retries == 0 {
            return Err(Error::invalid("max_retries must be at least 1"));
        }
        self.noise.validate()
    }

    pub fn camera(&self) -> CameraSpec {
        CameraSpec::looking_at(
            self.intrinsics,
            Vec3::new(0.0, 0.0, self.table.height),
            self.camera_distance,
            self.camera_depression.to_radians(),
        )
    }
}

/// Projected pixel box of an object's bounding volume, `[u0, v0, u1, v1]`.
pub fn projected_bounds(obj: &ObjectSpec, camera: &CameraSpec, table_height: f64) -> Result<Option<[f64; 4]>> {
    let r = obj.shape.footprint_radius();
    let top = obj.shape.height();
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for k in 0..16 {
        let a = k as f64 * std::f64::consts::TAU / 16.0;
        // Circle circumscribed by a 16-gon of this radius.
        let rr = r / (std::f64::consts::PI / 16.0).cos();
        for z in [0.0, top] {
            let w = Vec3::new(obj.pose.x + rr * a.cos(), obj.pose.y + rr * a.sin(), table_height + z);
            match camera.intrinsics.project(&camera.world_to_camera(&w)?) {
                Some((u, v)) => {
                    b[0] = b[0].min(u);
                    b[1] = b[1].min(v);
                    b[2] = b[2].max(u);
                    b[3] = b[3].max(v);
                }
                None => return Ok(None),
            }
        }
    }
    Ok(Some(b))
}

fn box_gap(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let gx = (b[0] - a[2]).max(a[0] - b[2]);
    let gy = (b[1] - a[3]).max(a[1] - b[3]);
    gx.max(gy)
}

/// Draws a random non-overlapping scene, fully visible, with separated image boxes.
pub fn sample_scene(config: &RandomizerConfig, seed: u64) -> Result<SceneSpec> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = config.camera();
    let table = config.table;
    let (w, h) = (config.intrinsics.width as f64, config.intrinsics.height as f64);

    let mut classes = Vec::new();
    for class in ObjectClass::KNOWN {
        for _ in 0..*config.counts.get(class).expect("known class") {
            classes.push(class);
        }
    }

    let elevation = rng.random_range(50f64..80.0).to_radians();
    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let toward = Vec3::new(elevation.cos() * azimuth.cos(), elevation.cos() * azimuth.sin(), elevation.sin());
    let lighting = Lighting {
        position: Vec3::new(0.0, 0.0, config.table.height) + toward * LAMP_DISTANCE,
        gain: rng.random_range(config.light_gain_range[0]..=config.light_gain_range[1]),
        ..Lighting::default()
    };

    let mut placed: Vec<(ObjectSpec, [f64; 4])> = Vec::new();
    let mut attempts = 0usize;
    for (i, &class) in classes.iter().enumerate() {
        let shape = Shape::default_for(class)?
            .scaled(rng.random_range(config.scale_range[0]..=config.scale_range[1]));
        // Distinct colours while the palette lasts.
        let used: Vec<&str> = placed.iter().filter_map(|(o, _)| o.color_name.as_deref()).collect();
        let free: Vec<&PaletteColor> = config.palette.iter().filter(|p| !used.contains(&p.name.as_str())).collect();
        let color = if free.is_empty() {
            &config.palette[rng.random_range(0..config.palette.len())]
        } else {
            free[rng.random_range(0..free.len())]
        };
        let r = shape.footprint_radius();
        let mut ok = None;
        while attempts < config.max_retries {
            attempts += 1;
            let pose = Pose2 {
                x: rng.random_range(config.x_range[0]..=config.x_range[1]),
                y: rng.random_range(config.y_range[0]..=config.y_range[1]),
                yaw: rng.random_range(0.0..std::f64::consts::PI),
            };
            if pose.x.abs() + r > table.extent[0] / 2.0 || pose.y.abs() + r > table.extent[1] / 2.0 {
                continue;
            }
            let obj = ObjectSpec {
                id: (i + 1) as u16,
                shape,
                pose,
                color: color.rgb,
                color_name: Some(color.name.clone()),
            };
            let Some(bounds) = projected_bounds(&obj, &camera, table.height)? else {
                continue;
            };
            if bounds[0] < 2.0 || bounds[1] < 2.0 || bounds[2] > w - 3.0 || bounds[3] > h - 3.0 {
                continue;
            }
            let clear = placed.iter().all(|(p, pb)| {
                let d = (p.pose.x - pose.x).hypot(p.pose.y - pose.y);
                d >= p.shape.footprint_radius() + r + config.min_gap && box_gap(pb, &bounds) >= config.min_pixel_gap
            });
            if clear {
                ok = Some((obj, bounds));
                break;
            }
        }
        match ok {
            Some(p) => placed.push(p),
            None => {
                return Err(Error::Placement {
                    object: format!("{class} #{}", i + 1),
                    attempts,
                })
            }
        }
    }

    Ok(SceneSpec {
        table,
        objects: placed.into_iter().map(|(o, _)| o).collect(),
        camera,
        lighting,
        noise: config.noise,
        seed: derive_seed(seed, u64::MAX),
    })
}
