use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::color::Channels;
use super::mask::Mask;
use crate::error::{Error, Result};
use crate::scene::RgbdFrame;

pub type ChannelRange = [f64; 2];

/// Per-channel ranges for one colour label, all channels on a 0–255 scale.
///
/// Hue ranges (`hsv[0]`, `hls[0]`) may wrap around zero: when the matching
/// `hue_wrap` flag is set the accepted set is `[lo, 255] ∪ [0, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRanges {
    pub rgb: [ChannelRange; 3],
    pub hsv: [ChannelRange; 3],
    pub hls: [ChannelRange; 3],
    pub hue_wrap: [bool; 2],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    /// All nine channels must match.
    #[default]
    All,
    /// Every channel of at least one colour space must match.
    AnySpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRangeModel {
    /// Labels in model order (sorted by name).
    pub labels: BTreeMap<String, LabelRanges>,
    pub margin: f64,
    #[serde(default)]
    pub rule: CombineRule,
}

/// Per-pixel label indices: `0` is unlabelled, `k` is the `k`-th model label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub names: Vec<String>,
    pub labels: Vec<u16>,
}

impl LabelMap {
    pub fn name(&self, label: u16) -> Option<&str> {
        (label as usize)
            .checked_sub(1)
            .and_then(|i| self.names.get(i))
            .map(String::as_str)
    }
}

fn in_range(r: &ChannelRange, x: u8) -> bool {
    let x = x as f64;
    r[0] <= x && x <= r[1]
}

fn in_hue(r: &ChannelRange, wrap: bool, x: u8) -> bool {
    let x = x as f64;
    if wrap {
        x >= r[0] || x <= r[1]
    } else {
        r[0] <= x && x <= r[1]
    }
}

impl LabelRanges {
    fn space_matches(&self, space: usize, c: &Channels) -> bool {
        let v = &c.0[space * 3..space * 3 + 3];
        match space {
            0 => (0..3).all(|k| in_range(&self.rgb[k], v[k])),
            1 => {
                in_hue(&self.hsv[0], self.hue_wrap[0], v[0])
                    && in_range(&self.hsv[1], v[1])
                    && in_range(&self.hsv[2], v[2])
            }
            _ => {
                in_hue(&self.hls[0], self.hue_wrap[1], v[0])
                    && in_range(&self.hls[1], v[1])
                    && in_range(&self.hls[2], v[2])
            }
        }
    }

    pub fn matches(&self, c: &Channels, rule: CombineRule) -> bool {
        match rule {
            CombineRule::All => (0..3).all(|s| self.space_matches(s, c)),
            CombineRule::AnySpace => (0..3).any(|s| self.space_matches(s, c)),
        }
    }
}

impl ColorRangeModel {
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::invalid("colour model has no labels"));
        }
        for (name, r) in &self.labels {
            let plain = r
                .rgb
                .iter()
                .chain(&r.hsv[1..])
                .chain(&r.hls[1..])
                .all(|c| c[0] <= c[1]);
            let hue_ok = [(r.hsv[0], r.hue_wrap[0]), (r.hls[0], r.hue_wrap[1])]
                .iter()
                .all(|(c, wrap)| *wrap || c[0] <= c[1]);
            if !(plain && hue_ok) {
                return Err(Error::invalid(format!("label {name:?} has an inverted range")));
            }
        }
        Ok(())
    }

    /// Index (1-based) of the first label whose ranges accept `rgb`.
    pub fn classify_pixel(&self, rgb: [u8; 3]) -> u16 {
        if self.rule == CombineRule::All
            && !self.labels.values().any(|r| (0..3).all(|k| in_range(&r.rgb[k], rgb[k])))
        {
            // RGB alone already rejects every label; skip the conversions.
            return 0;
        }
        let c = Channels::from_rgb(rgb);
        self.labels
            .values()
            .position(|r| r.matches(&c, self.rule))
            .map_or(0, |i| i as u16 + 1)
    }
}

pub struct TrainingSample<'a> {
    pub frame: &'a RgbdFrame,
    pub mask: &'a crate::segmentation::Mask,
    pub label: &'a str,
}

/// Linear-interpolated percentile of a 256-bin histogram holding `n` values.
fn hist_percentile(hist: &[u64; 256], n: u64, q: f64) -> f64 {
    let pos = q * (n - 1) as f64;
    let lo_rank = pos.floor() as u64;
    let hi_rank = pos.ceil() as u64;
    let frac = pos - lo_rank as f64;
    let mut cumulative = [0u64; 256];
    let mut seen = 0;
    for (c, &h) in cumulative.iter_mut().zip(hist) {
        seen += h;
        *c = seen;
    }
    let value_at = |rank: u64| cumulative.partition_point(|&c| c <= rank).min(255) as f64;
    let a = value_at(lo_rank);
    let b = value_at(hi_rank);
    a + (b - a) * frac
}

const P_LO: f64 = 0.05;
const P_HI: f64 = 0.95;

fn linear_range(hist: &[u64; 256], n: u64, margin: f64) -> ChannelRange {
    let lo = hist_percentile(hist, n, P_LO);
    let hi = hist_percentile(hist, n, P_HI);
    let span = hi - lo;
    [
        (lo - margin * span).clamp(0.0, 255.0),
        (hi + margin * span).clamp(0.0, 255.0),
    ]
}

/// Hue range computed in the rotation of the circle that minimizes the p5–p95 span.
fn circular_range(hist: &[u64; 256], n: u64, margin: f64) -> (ChannelRange, bool) {
    let mut best: Option<(f64, usize)> = None;
    let mut rotated = [0u64; 256];
    for r in 0..256 {
        for k in 0..256 {
            rotated[k] = hist[(k + r) % 256];
        }
        let span = hist_percentile(&rotated, n, P_HI) - hist_percentile(&rotated, n, P_LO);
        if best.map_or(true, |(s, _)| span < s) {
            best = Some((span, r));
        }
    }
    let (_, r) = best.expect("256 rotations evaluated");
    for k in 0..256 {
        rotated[k] = hist[(k + r) % 256];
    }
    let [lo, hi] = linear_range(&rotated, n, margin);
    let lo = (lo + r as f64).rem_euclid(256.0);
    let hi = (hi + r as f64).rem_euclid(256.0);
    ([lo, hi], lo > hi)
}

/// Learns per-label channel ranges as `[p5 − margin·span, p95 + margin·span]`.
pub fn learn_color_ranges(samples: &[TrainingSample<'_>], margin: f64) -> Result<ColorRangeModel> {
    if samples.is_empty() {
        return Err(Error::invalid("no colour training samples"));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::invalid(format!("margin {margin} must be >= 0")));
    }
    let mut hists: BTreeMap<&str, (Box<[[u64; 256]; 9]>, u64)> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if (s.mask.width(), s.mask.height()) != (s.frame.width(), s.frame.height()) {
            return Err(Error::invalid(format!("sample {i}: mask size differs from frame")));
        }
        if s.mask.is_empty() {
            return Err(Error::invalid(format!(
                "sample {i} ({}) has an empty mask",
                s.label
            )));
        }
        let entry = hists
            .entry(s.label)
            .or_insert_with(|| (Box::new([[0u64; 256]; 9]), 0));
        for idx in s.mask.indices() {
            let c = Channels::from_rgb(s.frame.rgb()[idx]);
            for (ch, &v) in c.0.iter().enumerate() {
                entry.0[ch][v as usize] += 1;
            }
            entry.1 += 1;
        }
    }

    let labels = hists
        .into_iter()
        .map(|(name, (h, n))| {
            let lin = |ch: usize| linear_range(&h[ch], n, margin);
            let (hsv_h, wrap_hsv) = circular_range(&h[3], n, margin);
            let (hls_h, wrap_hls) = circular_range(&h[6], n, margin);
            (
                name.to_string(),
                LabelRanges {
                    rgb: [lin(0), lin(1), lin(2)],
                    hsv: [hsv_h, lin(4), lin(5)],
                    hls: [hls_h, lin(7), lin(8)],
                    hue_wrap: [wrap_hsv, wrap_hls],
                },
            )
        })
        .collect();
    Ok(ColorRangeModel {
        labels,
        margin,
        rule: CombineRule::All,
    })
}

/// Pixel-wise range test. Returns the raw mask and the first matching label per pixel.
pub fn segment_raw(frame: &RgbdFrame, model: &ColorRangeModel) -> (Mask, LabelMap) {
    let labels: Vec<u16> = frame
        .rgb()
        .iter()
        .map(|&rgb| model.classify_pixel(rgb))
        .collect();
    let mask = Mask::from_vec(
        frame.width(),
        frame.height(),
        labels.iter().map(|&l| l != 0).collect(),
    );
    (
        mask,
        LabelMap {
            names: model.labels.keys().cloned().collect(),
            labels,
        },
    )
}
