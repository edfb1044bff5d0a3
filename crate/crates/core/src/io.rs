//! File formats: PNG colour/depth/mask images, ASCII point clouds and atomic writes.
//!
//! Depth PNGs are 16-bit single channel in millimeters (`0` = invalid) and are
//! converted to meters on load. Point clouds are `x y z r g b` per line; lines
//! starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scene::{PointCloud, RgbdFrame};
use crate::segmentation::Mask;

/// Writes `bytes` to a sibling temp file and renames it into place, so readers
/// never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = temp_sibling(path);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn encode_png<P, C>(path: &Path, img: &ImageBuffer<P, C>) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.display().to_string(),
            source,
        })?;
    write_atomic(path, buf.get_ref())
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| {
        Error::Image {
            path: path.display().to_string(),
            source,
        }
    })
}

pub fn save_rgb_png(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    let img: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, rgb.iter().flatten().copied().collect())
            .ok_or_else(|| Error::invalid("rgb buffer does not match image size"))?;
    encode_png(path.as_ref(), &img)
}

pub fn load_rgb_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let img = decode(path.as_ref())?.to_rgb8();
    let (w, h) = img.dimensions();
    let rgb = img.pixels().map(|p| p.0).collect();
    Ok((w as usize, h as usize, rgb))
}

/// Saves depth in millimeters, rounding to the nearest millimeter and clamping to `u16`.
pub fn save_depth_png(path: impl AsRef<Path>, width: usize, height: usize, depth: &[f64]) -> Result<()> {
    let mm: Vec<u16> = depth
        .iter()
        .map(|d| (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(width as u32, height as u32, mm)
        .ok_or_else(|| Error::invalid("depth buffer does not match image size"))?;
    encode_png(path.as_ref(), &img)
}

pub fn load_depth_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let img = decode(path)?;
    if !matches!(img.color(), image::ColorType::L16) {
        return Err(Error::invalid(format!(
            "{}: depth must be a 16-bit single-channel PNG, got {:?}",
            path.display(),
            img.color()
        )));
    }
    let img = img.to_luma16();
    let (w, h) = img.dimensions();
    Ok((
        w as usize,
        h as usize,
        img.pixels().map(|p| p.0[0] as f64 / 1000.0).collect(),
    ))
}

pub fn save_frame(dir: impl AsRef<Path>, frame: &RgbdFrame) -> Result<()> {
    let dir = dir.as_ref();
    save_rgb_png(dir.join("rgb.png"), frame.width(), frame.height(), frame.rgb())?;
    save_depth_png(dir.join("depth.png"), frame.width(), frame.height(), frame.depth())
}

pub fn load_frame(rgb_path: impl AsRef<Path>, depth_path: impl AsRef<Path>) -> Result<RgbdFrame> {
    let (w, h, rgb) = load_rgb_png(rgb_path.as_ref())?;
    let (dw, dh, depth) = load_depth_png(depth_path.as_ref())?;
    if (w, h) != (dw, dh) {
        return Err(Error::invalid(format!(
            "colour image is {w}x{h} but depth image is {dw}x{dh}"
        )));
    }
    RgbdFrame::new(w, h, rgb, depth)
}

/// Saves a binary mask as 8-bit PNG with values 0/255.
pub fn save_mask_png(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let data = mask.data().iter().map(|&b| if b { 255u8 } else { 0 }).collect();
    let img: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, data)
            .ok_or_else(|| Error::invalid("mask buffer does not match image size"))?;
    encode_png(path.as_ref(), &img)
}

pub fn load_mask_png(path: impl AsRef<Path>) -> Result<Mask> {
    let img = decode(path.as_ref())?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Mask::from_vec(
        w as usize,
        h as usize,
        img.pixels().map(|p| p.0[0] > 127).collect(),
    ))
}

/// Indexed label image: pixel value `k` is the `k`-th object, `0` is background.
pub fn save_label_png(path: impl AsRef<Path>, width: usize, height: usize, labels: &[u16]) -> Result<()> {
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, labels.to_vec())
            .ok_or_else(|| Error::invalid("label buffer does not match image size"))?;
    encode_png(path.as_ref(), &img)
}

pub fn load_label_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let img = decode(path.as_ref())?.to_luma16();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.pixels().map(|p| p.0[0]).collect()))
}

pub fn format_cloud(cloud: &PointCloud) -> String {
    let mut out = String::from("# x y z r g b\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let c = cloud
            .colors
            .as_ref()
            .and_then(|c| c.get(i))
            .copied()
            .unwrap_or([0, 0, 0]);
        let _ = writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, c[0], c[1], c[2]);
    }
    out
}

pub fn parse_cloud(text: &str, origin: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let mut xyz = [0.0; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            xyz[k] = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad coordinate {f:?}")))?;
        }
        let mut rgb = [0u8; 3];
        for (k, f) in fields[3..].iter().enumerate() {
            rgb[k] = f
                .parse::<u8>()
                .map_err(|_| err(format!("bad colour value {f:?}")))?;
        }
        points.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
        colors.push(rgb);
    }
    Ok(PointCloud {
        points,
        colors: Some(colors),
        pixels: None,
    })
}

pub fn save_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    write_atomic(path, format_cloud(cloud).as_bytes())
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_text_roundtrip_and_comments() {
        let text = "# header\n0.5 -1 2.25 10 20 30\n\n# mid\n1e-3 0 0 255 0 1\n";
        let cloud = parse_cloud(text, "mem").unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.colors.as_ref().unwrap()[1], [255, 0, 1]);
        let again = parse_cloud(&format_cloud(&cloud), "mem").unwrap();
        assert_eq!(again.points, cloud.points);
        assert_eq!(again.colors, cloud.colors);
    }

    #[test]
    fn cloud_parse_errors_name_the_line() {
        let err = parse_cloud("0 0 0 1 2 3\n0 0 x 1 2 3\n", "c.txt").unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, "c.txt");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_cloud("0 0 0 1 2 300\n", "c").is_err());
        assert!(parse_cloud("0 0 0 1 2\n", "c").is_err());
    }

    #[test]
    fn depth_png_is_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        save_depth_png(&path, 3, 1, &[0.0, 1.2344, 0.8]).unwrap();
        let (w, h, d) = load_depth_png(&path).unwrap();
        assert_eq!((w, h), (3, 1));
        assert_eq!(d, vec![0.0, 1.234, 0.8]);
        // An 8-bit image is not accepted as depth.
        let rgb = dir.path().join("c.png");
        save_rgb_png(&rgb, 1, 1, &[[1, 2, 3]]).unwrap();
        assert!(load_depth_png(&rgb).is_err());
    }

    #[test]
    fn truncated_png_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        save_rgb_png(&path, 4, 4, &[[7, 7, 7]; 16]).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_rgb_png(&path).unwrap_err();
        assert!(err.to_string().contains("rgb.png"));
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path().join("sub/a.txt"), b"hello").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path().join("sub"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.txt")]);
    }
}
