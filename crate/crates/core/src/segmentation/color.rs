//! 8-bit colour-space conversions. Hue maps 360° onto 256 steps; every other
//! channel spans 0–255.

/// The nine channel values used by range matching: RGB, HSV, HLS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channels(pub [u8; 9]);

impl Channels {
    pub fn from_rgb(rgb: [u8; 3]) -> Self {
        let [h, s, v] = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
        let [h2, l, s2] = rgb_to_hls(rgb[0], rgb[1], rgb[2]);
        Channels([rgb[0], rgb[1], rgb[2], h, s, v, h2, l, s2])
    }
}

fn hue_of(r: f64, g: f64, b: f64, max: f64, delta: f64) -> u8 {
    if delta <= 0.0 {
        return 0;
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    // sector in [0, 6) spans 360 degrees -> 256 steps
    ((sector * 256.0 / 6.0).round() as u32 % 256) as u8
}

pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (rf, gf, bf) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    [
        hue_of(rf, gf, bf, max, delta),
        (s * 255.0).round() as u8,
        r.max(g).max(b),
    ]
}

pub fn rgb_to_hls(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (rf, gf, bf) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let l = (max + min) / 2.0;
    let s = if delta <= 0.0 {
        0.0
    } else if l <= 0.5 {
        delta / (max + min)
    } else {
        delta / (2.0 - max - min)
    };
    [
        hue_of(rf, gf, bf, max, delta),
        (l * 255.0).round() as u8,
        (s * 255.0).round() as u8,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Closed-form inverses (hexcone) used as an independent check.
    fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
        let c = v * s;
        let hp = h * 6.0;
        let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
        let (r, g, b) = match hp as u32 % 6 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        [r + m, g + m, b + m]
    }

    fn hls_to_rgb(h: f64, l: f64, s: f64) -> [f64; 3] {
        let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
        let v = l + c / 2.0;
        let sv = if v > 0.0 { c / v } else { 0.0 };
        hsv_to_rgb(h, sv, v)
    }

    #[test]
    fn pure_red() {
        assert_eq!(rgb_to_hsv(255, 0, 0), [0, 255, 255]);
        assert_eq!(rgb_to_hls(255, 0, 0), [0, 128, 255]);
    }

    #[test]
    fn grey_has_no_saturation() {
        assert_eq!(rgb_to_hsv(128, 128, 128), [0, 0, 128]);
        let [_, l, s] = rgb_to_hls(128, 128, 128);
        assert_eq!((l, s), (128, 0));
    }

    #[test]
    fn primaries_hue_steps() {
        // green = 120 deg -> 85.33 -> 85; blue = 240 deg -> 170.67 -> 171
        assert_eq!(rgb_to_hsv(0, 255, 0)[0], 85);
        assert_eq!(rgb_to_hsv(0, 0, 255)[0], 171);
        // magenta = 300 deg -> 213.33 -> 213
        assert_eq!(rgb_to_hsv(255, 0, 255)[0], 213);
    }

    /// Half a hue step moves the middle channel by up to `3 · chroma / 256`; the
    /// remaining budget covers rounding of the other channels.
    fn inverse_bound(rgb: [u8; 3]) -> f64 {
        let chroma = (*rgb.iter().max().unwrap() - *rgb.iter().min().unwrap()) as f64;
        2.0 + 3.0 * chroma / 256.0
    }

    fn max_inverse_error(rgb: [u8; 3]) -> (f64, f64) {
        let hsv = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
        let hls = rgb_to_hls(rgb[0], rgb[1], rgb[2]);
        let back_hsv = hsv_to_rgb(hsv[0] as f64 / 256.0, hsv[1] as f64 / 255.0, hsv[2] as f64 / 255.0);
        let back_hls = hls_to_rgb(hls[0] as f64 / 256.0, hls[1] as f64 / 255.0, hls[2] as f64 / 255.0);
        let err = |back: [f64; 3]| (0..3).map(|k| (back[k] * 255.0 - rgb[k] as f64).abs()).fold(0.0, f64::max);
        (err(back_hsv), err(back_hls))
    }

    #[test]
    fn inverse_recovers_rgb() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..256 {
            let rgb: [u8; 3] = [rng.random(), rng.random(), rng.random()];
            let (e_hsv, e_hls) = max_inverse_error(rgb);
            let bound = inverse_bound(rgb);
            assert!(e_hsv <= bound, "{rgb:?} hsv error {e_hsv}");
            assert!(e_hls <= bound, "{rgb:?} hls error {e_hls}");
        }
    }

    #[test]
    fn low_chroma_inverse_within_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..256 {
            let base: u8 = rng.random_range(0..=215);
            let rgb: [u8; 3] = std::array::from_fn(|_| base + rng.random_range(0..=40));
            let (e_hsv, e_hls) = max_inverse_error(rgb);
            assert!(e_hsv <= 2.0 && e_hls <= 2.0, "{rgb:?}");
        }
    }
}
