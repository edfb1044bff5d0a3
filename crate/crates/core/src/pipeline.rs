//! Frame-to-descriptors composition and the configuration shared by the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classification::{build_descriptor, classify, ClassModel, ObjectClass, ObjectDescriptor};
use crate::error::{Error, Result};
use crate::feedback::FeedbackParams;
use crate::grasp::{compute_grasp_orientation, GraspParams, PriorityTable};
use crate::io;
use crate::scene::{backproject_pixels, fit_table_plane, CameraModel, RansacParams, RgbdFrame, TablePlane};
use crate::segmentation::{detect_objects, ColorRangeModel, Detection, SegmentationParams};

/// Every tunable of the pipeline. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub color_model: Option<PathBuf>,
    pub class_model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub ransac: RansacParams,
    pub plane_seed: u64,
    pub segmentation: SegmentationParams,
    pub reference_depth: f64,
    pub priorities: PriorityTable,
    pub grasp: GraspParams,
    pub feedback: FeedbackParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            color_model: None,
            class_model: None,
            output_dir: None,
            ransac: RansacParams::default(),
            plane_seed: 0,
            segmentation: SegmentationParams::default(),
            reference_depth: 1.0,
            priorities: PriorityTable::default(),
            grasp: GraspParams::default(),
            feedback: FeedbackParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config; relative model paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: PipelineConfig = io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.color_model, &mut cfg.class_model] {
            if let Some(rel) = p.as_mut().filter(|p| p.is_relative()) {
                *rel = base.join(&*rel);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_depth > 0.0) {
            return Err(Error::invalid("reference_depth must be positive"));
        }
        if self.ransac.iterations == 0 || !(self.ransac.inlier_tol > 0.0) {
            return Err(Error::invalid("RANSAC needs iterations > 0 and a positive inlier tolerance"));
        }
        PriorityTable::new(self.priorities.0)?;
        self.feedback.validate()?;
        let g = &self.grasp;
        if !(g.safe_height > 0.0 && g.standoff > 0.0 && g.descent_step > 0.0 && g.clearance >= 0.0) {
            return Err(Error::invalid("grasp heights and steps must be positive"));
        }
        for p in [&self.color_model, &self.class_model].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::invalid(format!("model file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// One processed frame.
#[derive(Debug, Clone)]
pub struct SceneObservation {
    pub plane: TablePlane,
    pub detections: Vec<Detection>,
    /// One per detection with enough valid depth; `id` is the detection index.
    pub descriptors: Vec<ObjectDescriptor>,
}

impl SceneObservation {
    /// Class of the descriptor built from detection `index`, if any.
    pub fn class_of(&self, index: usize) -> Option<ObjectClass> {
        self.descriptors.iter().find(|d| d.id == index).map(|d| d.class)
    }
}

/// Trained models plus configuration.
#[derive(Debug, Clone)]
pub struct Perception {
    pub colors: ColorRangeModel,
    pub classes: Option<ClassModel>,
    pub config: PipelineConfig,
}

impl Perception {
    pub fn new(colors: ColorRangeModel, classes: Option<ClassModel>, config: PipelineConfig) -> Result<Self> {
        colors.validate()?;
        if let Some(c) = &classes {
            c.validate()?;
        }
        Ok(Self { colors, classes, config })
    }

    pub fn fit_plane(&self, frame: &RgbdFrame, camera: &CameraModel) -> Result<TablePlane> {
        let n = frame.width() * frame.height();
        let cloud = backproject_pixels(frame, camera, (0..n).step_by(self.config.ransac.stride.max(1)))?;
        fit_table_plane(
            &cloud,
            self.config.plane_seed,
            self.config.ransac.iterations,
            self.config.ransac.inlier_tol,
        )
    }

    pub fn detect(&self, frame: &RgbdFrame) -> Vec<Detection> {
        detect_objects(frame, &self.colors, &self.config.segmentation)
    }

    /// Plane fit, detection, descriptors and (with a class model) classes,
    /// priorities and grasp angles.
    pub fn observe(&self, frame: &RgbdFrame, camera: &CameraModel) -> Result<SceneObservation> {
        let plane = self.fit_plane(frame, camera)?;
        let detections = self.detect(frame);
        let mut descriptors = Vec::new();
        for (i, det) in detections.iter().enumerate() {
            let mut d = match build_descriptor(det, frame, camera, &plane, self.config.reference_depth) {
                Ok(d) => d,
                Err(Error::InsufficientData { .. }) => continue,
                Err(e) => return Err(e),
            };
            d.id = i;
            if let Some(model) = &self.classes {
                d.class = classify(&d, model);
                d.priority = self.config.priorities.rank(d.class);
                if let Ok(o) = compute_grasp_orientation(&d) {
                    d.roll = Some(o.roll);
                    d.pitch = Some(o.pitch);
                    d.yaw = Some(o.yaw);
                }
            }
            descriptors.push(d);
        }
        Ok(SceneObservation {
            plane,
            detections,
            descriptors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_fill_missing_fields() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"reference_depth": 0.9, "grasp": {"standoff": 0.2}}"#).unwrap();
        assert_eq!(cfg.reference_depth, 0.9);
        assert_eq!(cfg.grasp.standoff, 0.2);
        assert_eq!(cfg.grasp.safe_height, 0.25);
        assert_eq!(cfg.segmentation, SegmentationParams::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_missing_model_file() {
        let cfg = PipelineConfig {
            color_model: Some(PathBuf::from("/nonexistent/colors.json")),
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let bad = PipelineConfig {
            reference_depth: 0.0,
            ..PipelineConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
