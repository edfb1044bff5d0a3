//! Colour-range detection: raw masks from per-channel ranges over RGB, HSV and
//! HLS, refined by closing + dilation and a per-component convex hull.

mod color;
mod components;
mod hull;
mod mask;
mod ranges;

pub use color::{rgb_to_hls, rgb_to_hsv, Channels};
pub use components::{connected_components, extract_detections, BBox, Component, Detection};
pub use hull::convex_hull_mask;
pub use mask::{disk_offsets, Mask};
pub use ranges::{
    learn_color_ranges, segment_raw, ChannelRange, CombineRule, ColorRangeModel, LabelMap,
    LabelRanges, TrainingSample,
};

use serde::{Deserialize, Serialize};

use crate::scene::RgbdFrame;

/// Dilation of a mask closed with disk structuring elements: `dilate(close(mask))`.
pub fn refine_mask(mask: &Mask, close_radius: usize, dilate_radius: usize) -> Mask {
    mask.close(close_radius).dilate(dilate_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    pub close_radius: usize,
    pub dilate_radius: usize,
    pub min_pixels: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            close_radius: 3,
            dilate_radius: 2,
            min_pixels: 150,
        }
    }
}

/// Raw segmentation, refinement, hull and component extraction in one call.
pub fn detect_objects(
    frame: &RgbdFrame,
    model: &ColorRangeModel,
    params: &SegmentationParams,
) -> Vec<Detection> {
    let (raw, labels) = segment_raw(frame, model);
    let refined = refine_mask(&raw, params.close_radius, params.dilate_radius);
    let hull = convex_hull_mask(&refined);
    extract_detections(&hull, &labels, frame, params.min_pixels)
}
