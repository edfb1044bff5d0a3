//! On-disk frame directories and the annotated detection image.
//!
//! A frame directory holds `rgb.png`, `depth.png` (16-bit millimeters) and
//! `camera.json`. Rendered frames add `labels.png` and `scene.json`, which is
//! what training from a directory needs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tableware::evaluation::LabelledScene;
use tableware::io;
use tableware::synthscene::{GroundTruth, Rendering};
use tableware::{CameraModel, Detection, ObjectDescriptor, RgbdFrame, SceneSpec, TablePlane};

pub const RGB: &str = "rgb.png";
pub const DEPTH: &str = "depth.png";
pub const CAMERA: &str = "camera.json";
pub const LABELS: &str = "labels.png";
pub const SCENE: &str = "scene.json";

/// Output of `classify`, input of `plan` and `verify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationFile {
    pub plane: TablePlane,
    pub objects: Vec<ObjectDescriptor>,
}

#[derive(Serialize)]
pub struct DetectionRecord<'a> {
    pub id: usize,
    #[serde(flatten)]
    pub detection: &'a Detection,
}

pub fn load_frame(dir: &Path) -> Result<(RgbdFrame, CameraModel)> {
    let frame = io::load_frame(dir.join(RGB), dir.join(DEPTH))?;
    let camera: CameraModel = io::read_json(dir.join(CAMERA))?;
    camera.validate()?;
    frame.check_camera(&camera)?;
    Ok((frame, camera))
}

pub fn save_rendering(dir: &Path, spec: &SceneSpec, rendering: &Rendering) -> Result<()> {
    let f = &rendering.frame;
    io::save_frame(dir, f)?;
    io::save_label_png(dir.join(LABELS), f.width(), f.height(), &rendering.truth.labels)?;
    io::write_json(dir.join(CAMERA), &spec.camera.intrinsics)?;
    io::write_json(dir.join(SCENE), spec)?;
    Ok(())
}

fn load_labelled(dir: &Path) -> Result<LabelledScene> {
    let spec: SceneSpec = io::read_json(dir.join(SCENE))?;
    let (frame, _) = load_frame(dir)?;
    let (width, height, labels) = io::load_label_png(dir.join(LABELS))?;
    if (width, height) != (frame.width(), frame.height()) {
        bail!("{}: label image size differs from the frame", dir.join(LABELS).display());
    }
    Ok(LabelledScene {
        spec,
        rendering: Rendering {
            frame,
            truth: GroundTruth { width, height, labels },
        },
    })
}

/// Every subdirectory of `root` that contains a `scene.json`, in name order.
pub fn load_labelled_dir(root: &Path) -> Result<Vec<LabelledScene>> {
    let entries = fs::read_dir(root).with_context(|| format!("cannot read {}", root.display()))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SCENE).is_file())
        .collect();
    dirs.sort();
    dirs.iter()
        .map(|d| load_labelled(d).with_context(|| format!("scene {}", d.display())))
        .collect()
}

const OVERLAY: [[u8; 3]; 6] = [
    [0, 255, 0],
    [255, 0, 255],
    [0, 255, 255],
    [255, 128, 0],
    [255, 255, 255],
    [128, 128, 255],
];

/// Masks blended at half intensity, bounding boxes drawn opaque.
pub fn annotate(frame: &RgbdFrame, detections: &[Detection]) -> Vec<[u8; 3]> {
    let w = frame.width();
    let mut rgb = frame.rgb().to_vec();
    for (i, det) in detections.iter().enumerate() {
        let tint = OVERLAY[i % OVERLAY.len()];
        for p in det.mask.indices() {
            for k in 0..3 {
                rgb[p][k] = ((rgb[p][k] as u16 + tint[k] as u16) / 2) as u8;
            }
        }
        let b = det.bbox;
        if b.width == 0 || b.height == 0 {
            continue;
        }
        let (u1, v1) = (b.u + b.width - 1, b.v + b.height - 1);
        for u in b.u..=u1 {
            rgb[b.v * w + u] = tint;
            rgb[v1 * w + u] = tint;
        }
        for v in b.v..=v1 {
            rgb[v * w + b.u] = tint;
            rgb[v * w + u1] = tint;
        }
    }
    rgb
}
