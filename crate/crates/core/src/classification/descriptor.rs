use serde::{Deserialize, Serialize};

use super::pca::compute_pca;
use super::ObjectClass;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scene::{backproject_pixels, CameraModel, RgbdFrame, TablePlane};
use crate::segmentation::{BBox, Detection};

/// Per-object record handed to the planner. Geometry is in the table-plane frame,
/// whose origin (the foot of the camera on the table) is the robot origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDescriptor {
    pub id: usize,
    pub class: ObjectClass,
    /// Colour-matched pixel area rescaled to the reference depth.
    pub area_norm: f64,
    pub point_count: usize,
    /// Point count rescaled to the reference depth.
    pub point_count_norm: f64,
    pub centroid: Vec3,
    pub nearest_point: Vec3,
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Vec3; 3],
    /// Extent along the table normal.
    pub height: f64,
    pub mean_depth: f64,
    pub bbox: BBox,
    pub mean_color: [f64; 3],
    #[serde(default)]
    pub color_label: Option<String>,
    pub priority: u8,
    #[serde(default)]
    pub roll: Option<f64>,
    #[serde(default)]
    pub pitch: Option<f64>,
    #[serde(default)]
    pub yaw: Option<f64>,
    /// Object points in the table-plane frame.
    #[serde(skip)]
    pub points: Vec<Vec3>,
}

/// `pixel_area · (mean_depth / reference_depth)²`.
pub fn normalize_area(pixel_area: f64, mean_depth: f64, reference_depth: f64) -> Result<f64> {
    if !(mean_depth > 0.0 && reference_depth > 0.0) {
        return Err(Error::invalid(format!(
            "depths must be positive (mean {mean_depth}, reference {reference_depth})"
        )));
    }
    let s = mean_depth / reference_depth;
    Ok(pixel_area * s * s)
}

impl ObjectDescriptor {
    /// A minimal descriptor at `centroid` with identity axes, for tests and tools.
    pub fn synthetic(class: ObjectClass, centroid: Vec3) -> Self {
        Self {
            id: 0,
            class,
            area_norm: 0.0,
            point_count: 1,
            point_count_norm: 1.0,
            centroid,
            nearest_point: centroid,
            eigenvalues: [0.0; 3],
            eigenvectors: [Vec3::x(), Vec3::y(), Vec3::z()],
            height: 0.0,
            mean_depth: 1.0,
            bbox: BBox {
                u: 0,
                v: 0,
                width: 1,
                height: 1,
            },
            mean_color: [0.0; 3],
            color_label: None,
            priority: 0,
            roll: None,
            pitch: None,
            yaw: None,
            points: Vec::new(),
        }
    }

    /// Ratio of the shorter to the longer in-plane axis, using the two
    /// eigenpairs whose eigenvectors are closest to the table plane.
    pub fn xy_axis_ratio(&self) -> f64 {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| {
            self.eigenvectors[a]
                .z
                .abs()
                .total_cmp(&self.eigenvectors[b].z.abs())
        });
        let a = self.eigenvalues[idx[0]].max(0.0).sqrt();
        let b = self.eigenvalues[idx[1]].max(0.0).sqrt();
        let (long, short) = if a >= b { (a, b) } else { (b, a) };
        if long > 0.0 {
            short / long
        } else {
            1.0
        }
    }
}

/// Back-projects the detection's pixels, moves them into the table frame and
/// measures them. The class is left `Unknown`.
pub fn build_descriptor(
    det: &Detection,
    frame: &RgbdFrame,
    camera: &CameraModel,
    plane: &TablePlane,
    reference_depth: f64,
) -> Result<ObjectDescriptor> {
    let cloud = backproject_pixels(frame, camera, det.mask.indices())?;
    if cloud.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: cloud.len(),
        });
    }
    let n = cloud.len();
    let mean_depth = cloud.points.iter().map(|p| p.z).sum::<f64>() / n as f64;
    let points: Vec<Vec3> = cloud.points.iter().map(|p| plane.to_plane(p)).collect();
    let pca = compute_pca(&points)?;

    let (zmin, zmax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let z = p.z.max(0.0);
        (lo.min(z), hi.max(z))
    });
    let nearest_point = *points
        .iter()
        .min_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
        .expect("non-empty cloud");

    // The refined mask carries a dilation ring of constant pixel width, which
    // does not scale with depth; the colour-matched pixels do.
    let area_norm = normalize_area(det.color_pixel_count as f64, mean_depth, reference_depth)?;
    let point_count_norm = normalize_area(n as f64, mean_depth, reference_depth)?;

    Ok(ObjectDescriptor {
        id: 0,
        class: ObjectClass::Unknown,
        area_norm,
        point_count: n,
        point_count_norm,
        centroid: pca.centroid,
        nearest_point,
        eigenvalues: pca.eigenvalues,
        eigenvectors: pca.eigenvectors,
        height: (zmax - zmin).max(0.0),
        mean_depth,
        bbox: det.bbox,
        mean_color: det.mean_color,
        color_label: det.color_label.clone(),
        priority: 0,
        roll: None,
        pitch: None,
        yaw: None,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::Mask;

    #[test]
    fn area_normalization() {
        assert_eq!(normalize_area(1000.0, 1.0, 1.0).unwrap(), 1000.0);
        assert_eq!(normalize_area(1000.0, 2.0, 1.0).unwrap(), 4000.0);
        assert!(normalize_area(1000.0, 0.0, 1.0).is_err());
        assert!(normalize_area(1000.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn all_invalid_depth_is_insufficient() {
        let cam = CameraModel {
            fx: 100.0,
            fy: 100.0,
            cx: 4.0,
            cy: 4.0,
            width: 8,
            height: 8,
        };
        let frame = RgbdFrame::new(8, 8, vec![[1, 2, 3]; 64], vec![0.0; 64]).unwrap();
        let mask = Mask::from_fn(8, 8, |x, y| x < 4 && y < 4);
        let det = Detection {
            mask,
            bbox: BBox {
                u: 0,
                v: 0,
                width: 4,
                height: 4,
            },
            pixel_count: 16,
            color_pixel_count: 16,
            mean_color: [1.0, 2.0, 3.0],
            color_label: None,
        };
        let plane = TablePlane::from_normal(Vec3::new(0.0, 0.0, -1.0), -1.0).unwrap();
        assert!(matches!(
            build_descriptor(&det, &frame, &cam, &plane, 1.0),
            Err(Error::InsufficientData { got: 0, .. })
        ));
    }

    #[test]
    fn axis_ratio_uses_in_plane_axes() {
        let mut d = ObjectDescriptor::synthetic(ObjectClass::Unknown, Vec3::zeros());
        // Largest variance is vertical; in-plane axes have std 0.04 and 0.01.
        d.eigenvalues = [0.09, 0.0016, 0.0001];
        d.eigenvectors = [Vec3::z(), Vec3::x(), Vec3::y()];
        assert!((d.xy_axis_ratio() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn descriptor_json_field_names() {
        let d = ObjectDescriptor::synthetic(ObjectClass::Glass, Vec3::new(1.0, 2.0, 3.0));
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        for key in [
            "class",
            "area_norm",
            "point_count",
            "centroid",
            "nearest_point",
            "eigenvalues",
            "eigenvectors",
            "height",
            "bbox",
            "mean_color",
            "priority",
            "roll",
            "pitch",
            "yaw",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["class"], "glass");
        assert_eq!(v["centroid"], serde_json::json!([1.0, 2.0, 3.0]));
        let back: ObjectDescriptor = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }
}
