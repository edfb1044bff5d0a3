//! Camera model, RGB-D frames, point clouds and the table-plane frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen3, Vec3};

/// Pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid camera intrinsics {self:?}")))
        }
    }

    /// Projects a camera-frame point to pixel coordinates; `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        Vec3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }
}

/// Registered colour and depth images. Depth is in meters, `0.0` marks a dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
    depth: Vec<f64>,
}

impl RgbdFrame {
    pub fn new(width: usize, height: usize, rgb: Vec<[u8; 3]>, depth: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if rgb.len() != n || depth.len() != n {
            return Err(Error::invalid(format!(
                "frame buffers ({} rgb, {} depth) do not match {width}x{height}",
                rgb.len(),
                depth.len()
            )));
        }
        if let Some(bad) = depth.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::invalid(format!("depth value {bad} is not a finite range")));
        }
        Ok(Self {
            width,
            height,
            rgb,
            depth,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[[u8; 3]] {
        &self.rgb
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn check_camera(&self, camera: &CameraModel) -> Result<()> {
        if camera.width != self.width || camera.height != self.height {
            return Err(Error::invalid(format!(
                "frame is {}x{} but camera expects {}x{}",
                self.width, self.height, camera.width, camera.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub colors: Option<Vec<[u8; 3]>>,
    /// Row-major source pixel index (`v * width + u`).
    pub pixels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self {
            points,
            colors: None,
            pixels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps every `stride`-th point (with its attributes).
    pub fn strided(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let pick = |i: usize| i % stride == 0;
        Self {
            points: self
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| pick(*i))
                .map(|(_, p)| *p)
                .collect(),
            colors: self.colors.as_ref().map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(i, _)| pick(*i))
                    .map(|(_, c)| *c)
                    .collect()
            }),
            pixels: self.pixels.as_ref().map(|px| {
                px.iter()
                    .enumerate()
                    .filter(|(i, _)| pick(*i))
                    .map(|(_, p)| *p)
                    .collect()
            }),
        }
    }
}

/// Back-projects every pixel with positive depth into the camera frame.
pub fn backproject(frame: &RgbdFrame, camera: &CameraModel) -> Result<PointCloud> {
    frame.check_camera(camera)?;
    backproject_pixels(frame, camera, 0..frame.width * frame.height)
}

/// Back-projects the given pixel indices, skipping invalid depth.
pub fn backproject_pixels(
    frame: &RgbdFrame,
    camera: &CameraModel,
    pixels: impl IntoIterator<Item = usize>,
) -> Result<PointCloud> {
    frame.check_camera(camera)?;
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut indices = Vec::new();
    for idx in pixels {
        let z = frame.depth[idx];
        if z > 0.0 {
            let u = (idx % frame.width) as f64;
            let v = (idx / frame.width) as f64;
            points.push(camera.unproject(u, v, z));
            colors.push(frame.rgb[idx]);
            indices.push(idx);
        }
    }
    Ok(PointCloud {
        points,
        colors: Some(colors),
        pixels: Some(indices),
    })
}

/// Dominant plane `normal · p = offset` with an orthonormal frame anchored on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TablePlane {
    pub normal: Vec3,
    pub offset: f64,
    pub ex: Vec3,
    pub ey: Vec3,
    pub origin: Vec3,
}

impl TablePlane {
    /// Builds the frame for a plane expressed in camera coordinates.
    ///
    /// The origin is the foot of the camera center on the plane and `ex` is the
    /// camera x-axis projected onto the plane.
    pub fn from_normal(normal: Vec3, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0 && offset.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "plane normal {normal:?} is not usable"
            )));
        }
        let n = normal / norm;
        let offset = offset / norm;
        let mut ex = Vec3::x() - n * n.x;
        if ex.norm() < 1e-6 {
            ex = Vec3::y() - n * n.y;
        }
        let ex = ex.normalize();
        let ey = n.cross(&ex);
        Ok(Self {
            normal: n,
            offset,
            ex,
            ey,
            origin: n * offset,
        })
    }

    pub fn ez(&self) -> Vec3 {
        self.normal
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn to_plane(&self, p: &Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(self.ex.dot(&d), self.ey.dot(&d), self.normal.dot(&d))
    }

    pub fn from_plane(&self, q: &Vec3) -> Vec3 {
        self.origin + self.ex * q.x + self.ey * q.y + self.normal * q.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    pub iterations: usize,
    /// Inlier distance threshold in meters.
    pub inlier_tol: f64,
    /// Pixel stride used when the pipeline subsamples the cloud before fitting.
    pub stride: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_tol: 0.008,
            stride: 4,
        }
    }
}

/// RANSAC plane search followed by a least-squares refit on the inliers.
///
/// The normal is oriented so that the camera center lies on its positive side.
pub fn fit_table_plane(
    cloud: &PointCloud,
    seed: u64,
    iterations: usize,
    inlier_tol: f64,
) -> Result<TablePlane> {
    let pts = &cloud.points;
    if pts.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "plane fit needs 3 points, got {}",
            pts.len()
        )));
    }
    let scale = pts
        .iter()
        .map(|p| p.norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec3, f64)> = None;
    let n = pts.len();
    let count_inliers = |normal: &Vec3, d: f64| {
        pts.iter()
            .filter(|p| (normal.dot(p) - d).abs() <= inlier_tol)
            .count()
    };

    let try_triple = |i: usize, j: usize, k: usize, best: &mut Option<(usize, Vec3, f64)>| {
        let cross = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
        if cross.norm() <= 1e-12 * scale * scale {
            return;
        }
        let normal = cross.normalize();
        let d = normal.dot(&pts[i]);
        let count = count_inliers(&normal, d);
        if best.map_or(true, |(c, _, _)| count > c) {
            *best = Some((count, normal, d));
        }
    };

    if n == 3 {
        try_triple(0, 1, 2, &mut best);
    } else {
        for _ in 0..iterations.max(1) {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut k = rng.random_range(0..n - 2);
            for taken in [i.min(j), i.max(j)] {
                if k >= taken {
                    k += 1;
                }
            }
            try_triple(i, j, k, &mut best);
        }
    }

    let (_, mut normal, mut d) = best.ok_or_else(|| {
        Error::DegenerateGeometry("every sampled point triple was collinear".into())
    })?;

    let inliers: Vec<Vec3> = pts
        .iter()
        .filter(|p| (normal.dot(p) - d).abs() <= inlier_tol)
        .copied()
        .collect();
    if inliers.len() >= 3 {
        let (mean, cov) = covariance(&inliers);
        let eig = symmetric_eigen3(&cov);
        // A refit is only meaningful when the inliers span two directions.
        if eig.values[1] > 1e-12 * eig.values[0].max(f64::MIN_POSITIVE) && eig.values[1] > 0.0 {
            let mut refit = eig.vectors[2];
            if refit.dot(&normal) < 0.0 {
                refit = -refit;
            }
            normal = refit;
            d = normal.dot(&mean);
        }
    }

    // Camera center (the origin) on the positive side: normal · 0 - d > 0.
    if d > 0.0 || (d == 0.0 && normal.z > 0.0) {
        normal = -normal;
        d = -d;
    }
    TablePlane::from_normal(normal, d)
}

/// Expresses points in the table-plane frame (x, y on the plane, z along the normal).
pub fn to_plane_frame(cloud: &PointCloud, plane: &TablePlane) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| plane.to_plane(p)).collect(),
        colors: cloud.colors.clone(),
        pixels: cloud.pixels.clone(),
    }
}

pub fn from_plane_frame(cloud: &PointCloud, plane: &TablePlane) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| plane.from_plane(p)).collect(),
        colors: cloud.colors.clone(),
        pixels: cloud.pixels.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn frame_4x4() -> (RgbdFrame, CameraModel) {
        let cam = CameraModel {
            fx: 100.0,
            fy: 100.0,
            cx: 2.0,
            cy: 2.0,
            width: 4,
            height: 4,
        };
        let mut depth = vec![0.0; 16];
        depth[0] = 1.0; // (0,0)
        depth[5] = 2.0; // (1,1)
        depth[10] = 0.5; // (2,2)
        depth[7] = 1.5; // (3,1)
        depth[12] = 0.8; // (0,3)
        let rgb = (0..16u8).map(|i| [i, 2 * i, 3 * i]).collect();
        (RgbdFrame::new(4, 4, rgb, depth).unwrap(), cam)
    }

    #[test]
    fn principal_point_ray() {
        let cam = CameraModel {
            fx: 100.0,
            fy: 100.0,
            cx: 2.0,
            cy: 1.0,
            width: 4,
            height: 3,
        };
        let mut depth = vec![0.0; 12];
        depth[4 + 2] = 1.0;
        let frame = RgbdFrame::new(4, 3, vec![[0; 3]; 12], depth).unwrap();
        let cloud = backproject(&frame, &cam).unwrap();
        assert_eq!(cloud.points, vec![Vec3::new(0.0, 0.0, 1.0)]);
        assert_eq!(cloud.pixels, Some(vec![6]));
    }

    #[test]
    fn all_zero_depth_is_empty() {
        let cam = CameraModel {
            fx: 10.0,
            fy: 10.0,
            cx: 1.0,
            cy: 1.0,
            width: 3,
            height: 3,
        };
        let frame = RgbdFrame::new(3, 3, vec![[9; 3]; 9], vec![0.0; 9]).unwrap();
        assert!(backproject(&frame, &cam).unwrap().is_empty());
    }

    #[test]
    fn pinhole_table_4x4() {
        // (u, v, z) -> ((u-2) z / 100, (v-2) z / 100, z), computed by hand.
        let expected = [
            (0usize, Vec3::new(-0.02, -0.02, 1.0)),
            (5, Vec3::new(-0.02, -0.02, 2.0)),
            (7, Vec3::new(0.015, -0.015, 1.5)),
            (10, Vec3::new(0.0, 0.0, 0.5)),
            (12, Vec3::new(-0.016, 0.008, 0.8)),
        ];
        let (frame, cam) = frame_4x4();
        let cloud = backproject(&frame, &cam).unwrap();
        assert_eq!(cloud.len(), 5);
        let pixels = cloud.pixels.as_ref().unwrap();
        let colors = cloud.colors.as_ref().unwrap();
        for (k, (idx, p)) in expected.iter().enumerate() {
            assert_eq!(pixels[k], *idx);
            assert_abs_diff_eq!(cloud.points[k], *p, epsilon = 1e-15);
            let i = *idx as u8;
            assert_eq!(colors[k], [i, 2 * i, 3 * i]);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (frame, mut cam) = frame_4x4();
        cam.width = 5;
        assert!(matches!(
            backproject(&frame, &cam),
            Err(Error::InvalidInput(_))
        ));
        assert!(RgbdFrame::new(2, 2, vec![[0; 3]; 4], vec![0.0; 3]).is_err());
        assert!(RgbdFrame::new(1, 1, vec![[0; 3]], vec![f64::NAN]).is_err());
        assert!(RgbdFrame::new(1, 1, vec![[0; 3]], vec![-1.0]).is_err());
    }

    #[test]
    fn exact_three_point_plane() {
        let cloud = PointCloud::from_points(vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]);
        let plane = fit_table_plane(&cloud, 1, 10, 1e-6).unwrap();
        assert_abs_diff_eq!(plane.normal.z.abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plane.offset, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_and_tiny_clouds_are_degenerate() {
        let two = PointCloud::from_points(vec![Vec3::zeros(), Vec3::x()]);
        assert!(matches!(
            fit_table_plane(&two, 0, 10, 0.01),
            Err(Error::DegenerateGeometry(_))
        ));
        let line = PointCloud::from_points((0..20).map(|i| Vec3::x() * i as f64).collect());
        assert!(matches!(
            fit_table_plane(&line, 0, 50, 0.01),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    fn table_with_outliers(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<Vec3> = (0..1000)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.8))
            .collect();
        pts.extend((0..50).map(|_| {
            Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..0.7),
            )
        }));
        PointCloud::from_points(pts)
    }

    #[test]
    fn recovers_plane_with_outliers() {
        let plane = fit_table_plane(&table_with_outliers(3), 11, 200, 0.005).unwrap();
        assert_abs_diff_eq!(plane.normal.z.abs(), 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(plane.offset.abs(), 0.8, epsilon = 1e-3);
        // Camera at the origin is on the positive side.
        assert!(plane.signed_distance(&Vec3::zeros()) > 0.0);
        assert!(plane.normal.z < 0.0);
    }

    #[test]
    fn fit_is_deterministic() {
        let cloud = table_with_outliers(9);
        let a = fit_table_plane(&cloud, 42, 100, 0.005).unwrap();
        let b = fit_table_plane(&cloud, 42, 100, 0.005).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.normal.x.to_bits(), b.normal.x.to_bits());
    }

    #[test]
    fn plane_frame_invariants() {
        let plane = TablePlane::from_normal(Vec3::new(0.1, -0.7, -0.6), -0.9).unwrap();
        let (ex, ey, ez) = (plane.ex, plane.ey, plane.ez());
        assert_abs_diff_eq!(ez.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.dot(&ey), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.dot(&ez), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ey.dot(&ez), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.cross(&ey), ez, epsilon = 1e-12);
        assert_abs_diff_eq!(ez.dot(&plane.origin), plane.offset, epsilon = 1e-12);
    }

    #[test]
    fn identity_frame_and_on_plane_points() {
        let plane = TablePlane::from_normal(Vec3::z(), 0.0).unwrap();
        let out = to_plane_frame(&PointCloud::from_points(vec![Vec3::new(1.0, 2.0, 3.0)]), &plane);
        assert_abs_diff_eq!(out.points[0], Vec3::new(1.0, 2.0, 3.0), epsilon = 1e-15);

        let tilted = TablePlane::from_normal(Vec3::new(0.3, -0.5, -0.8), -0.7).unwrap();
        let on = tilted.origin + tilted.ex * 0.4 - tilted.ey * 1.3;
        assert_abs_diff_eq!(tilted.to_plane(&on).z, 0.0, epsilon = 1e-12);
    }
}
