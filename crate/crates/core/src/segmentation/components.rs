use serde::{Deserialize, Serialize};

use super::mask::Mask;
use super::ranges::LabelMap;
use crate::scene::RgbdFrame;

/// Axis-aligned pixel box: top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub u: usize,
    pub v: usize,
    pub width: usize,
    pub height: usize,
}

impl BBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.u && y >= self.v && x < self.u + self.width && y < self.v + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let x0 = self.u.max(other.u);
        let y0 = self.v.max(other.v);
        let x1 = (self.u + self.width).min(other.u + other.width);
        let y1 = (self.v + self.height).min(other.v + other.height);
        let inter = x1.saturating_sub(x0) * y1.saturating_sub(y0);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// One 8-connected component: pixel indices in raster order and its tight box.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<usize>,
    pub bbox: BBox,
}

/// 8-connected components, ordered by their first pixel in raster order.
pub fn connected_components(mask: &Mask) -> Vec<Component> {
    let w = mask.width();
    let mut label = vec![u32::MAX; w * mask.height()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in mask.indices() {
        if label[start] != u32::MAX {
            continue;
        }
        let id = out.len() as u32;
        label[start] = id;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(idx) = stack.pop() {
            pixels.push(idx);
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if mask.get_signed(nx, ny) {
                        let n = ny as usize * w + nx as usize;
                        if label[n] == u32::MAX {
                            label[n] = id;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        pixels.sort_unstable();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for &p in &pixels {
            let (x, y) = (p % w, p / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        out.push(Component {
            pixels,
            bbox: BBox {
                u: x0,
                v: y0,
                width: x1 - x0 + 1,
                height: y1 - y0 + 1,
            },
        });
    }
    out
}

/// One object candidate from colour segmentation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    #[serde(skip)]
    pub mask: Mask,
    pub bbox: BBox,
    pub pixel_count: usize,
    /// Pixels inside the detection that passed the raw colour test.
    pub color_pixel_count: usize,
    pub mean_color: [f64; 3],
    pub color_label: Option<String>,
}

/// One detection per 8-connected component with at least `min_pixels` pixels.
pub fn extract_detections(
    mask: &Mask,
    labels: &LabelMap,
    frame: &RgbdFrame,
    min_pixels: usize,
) -> Vec<Detection> {
    connected_components(mask)
        .into_iter()
        .filter(|c| !c.pixels.is_empty() && c.pixels.len() >= min_pixels)
        .map(|c| {
            let mut m = Mask::new(mask.width(), mask.height());
            let mut sum = [0u64; 3];
            let mut votes = vec![0usize; labels.names.len() + 1];
            for &p in &c.pixels {
                m.set_index(p, true);
                let rgb = frame.rgb()[p];
                for k in 0..3 {
                    sum[k] += rgb[k] as u64;
                }
                if let Some(v) = votes.get_mut(labels.labels[p] as usize) {
                    *v += 1;
                }
            }
            let n = c.pixels.len() as f64;
            let color_pixel_count = votes[1..].iter().sum();
            // Majority label; ties resolve to the earliest label in model order.
            let best = votes
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &v)| v > 0)
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i as u16);
            Detection {
                mask: m,
                bbox: c.bbox,
                pixel_count: c.pixels.len(),
                color_pixel_count,
                mean_color: sum.map(|s| s as f64 / n),
                color_label: best.and_then(|l| labels.name(l)).map(str::to_string),
            }
        })
        .collect()
}
