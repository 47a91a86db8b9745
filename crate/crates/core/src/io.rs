//! Raster file formats.
//!
//! Label maps are 16-bit grayscale PNGs (pixel value = region id) or CSV
//! files with `x,y,label` rows. Fields use PNG for 8/16-bit scalar images
//! and a raw little-endian float format: the magic `GRF1`, then width,
//! height and channel count as `u32`, then `f32` samples in row-major
//! order, channel-interleaved.

use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};
use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::field::{QuatField, ScalarField};
use crate::segmentation::{build_regions, RegionId, Segmentation};

const GRF_MAGIC: &[u8; 4] = b"GRF1";

pub fn write_label_png(seg: &Segmentation, path: &Path) -> Result<()> {
    let values = seg.label_values();
    if let Some(&big) = values.iter().find(|&&v| v > u32::from(u16::MAX)) {
        return Err(Error::format(path, format!("region id {big} does not fit 16 bits")));
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        seg.width() as u32,
        seg.height() as u32,
        values.into_iter().map(|v| v as u16).collect(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| Error::format(path, e.to_string()))
}

fn read_label_png(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let gray = img.to_luma16();
    let (w, h) = gray.dimensions();
    Ok((w as usize, h as usize, gray.into_raw().into_iter().map(u32::from).collect()))
}

pub fn write_label_csv(seg: &Segmentation, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    writer
        .write_record(["x", "y", "label"])
        .map_err(|e| Error::format(path, e.to_string()))?;
    for (p, id) in seg.labels().iter().enumerate() {
        let (x, y) = (p % seg.width(), p / seg.width());
        writer
            .write_record([x.to_string(), y.to_string(), id.0.to_string()])
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_label_csv(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<(usize, usize, u32)>() {
        rows.push(record.map_err(|e| Error::format(path, e.to_string()))?);
    }
    let w = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let h = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    if w == 0 || h == 0 || rows.len() != w * h {
        return Err(Error::format(path, format!("{} rows do not cover a {w}x{h} raster", rows.len())));
    }
    let mut labels = vec![None; w * h];
    for (x, y, l) in rows {
        if labels[y * w + x].replace(l).is_some() {
            return Err(Error::format(path, format!("pixel ({x}, {y}) listed twice")));
        }
    }
    Ok((w, h, labels.into_iter().map(|l| l.expect("all pixels covered")).collect()))
}

/// Reads a label map (`.png` or `.csv`). Pixel values are kept as region
/// ids when every value labels one 4-connected component; otherwise the
/// components are renumbered.
pub fn read_label_map(path: &Path) -> Result<Segmentation> {
    let (w, h, labels) = match extension(path).as_str() {
        "png" => read_label_png(path)?,
        "csv" => read_label_csv(path)?,
        other => return Err(Error::format(path, format!("unsupported label map extension '{other}'"))),
    };
    Segmentation::from_ids(w, h, labels.iter().map(|&l| RegionId(l)).collect())
        .or_else(|_| build_regions(w, h, &labels))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn write_grf(path: &Path, width: usize, height: usize, channels: u32, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + width * height * channels as usize * 4);
    bytes.extend_from_slice(GRF_MAGIC);
    bytes.extend_from_slice(&(width as u32).to_le_bytes());
    bytes.extend_from_slice(&(height as u32).to_le_bytes());
    bytes.extend_from_slice(&channels.to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_grf(path: &Path) -> Result<(usize, usize, u32, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[0..4] != GRF_MAGIC {
        return Err(Error::format(path, "missing GRF1 header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (w, h, c) = (word(4) as usize, word(8) as usize, word(12));
    let expected = 16 + w * h * c as usize * 4;
    if bytes.len() != expected {
        return Err(Error::format(path, format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes"))))
        .collect();
    Ok((w, h, c, values))
}

pub fn write_scalar_grf(field: &ScalarField, path: &Path) -> Result<()> {
    write_grf(path, field.width(), field.height(), 1, field.values().iter().copied())
}

pub fn write_quat_grf(field: &QuatField, path: &Path) -> Result<()> {
    write_grf(path, field.width(), field.height(), 4, field.values().iter().flatten().copied())
}

/// Scalar field from a GRF1 file (1 channel) or an 8/16-bit grayscale PNG.
pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    match extension(path).as_str() {
        "png" => {
            let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
            let gray = img.to_luma16();
            let (w, h) = gray.dimensions();
            let scale = if matches!(img.color(), image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16) {
                1.0
            } else {
                1.0 / 257.0
            };
            ScalarField::new(
                w as usize,
                h as usize,
                gray.into_raw().into_iter().map(|v| f64::from(v) * scale).collect(),
            )
        }
        _ => {
            let (w, h, c, values) = read_grf(path)?;
            if c != 1 {
                return Err(Error::format(path, format!("scalar field with {c} channels")));
            }
            ScalarField::new(w, h, values)
        }
    }
}

/// Quaternion field from a 4-channel GRF1 file. Samples are renormalised to
/// undo the single-precision storage.
pub fn read_quat_field(path: &Path) -> Result<QuatField> {
    let (w, h, c, values) = read_grf(path)?;
    if c != 4 {
        return Err(Error::format(path, format!("quaternion field with {c} channels")));
    }
    let quats = values
        .chunks_exact(4)
        .map(|q| {
            let q = [q[0], q[1], q[2], q[3]];
            crate::field::normalize(&q).ok_or_else(|| Error::format(path, "zero quaternion"))
        })
        .collect::<Result<Vec<_>>>()?;
    QuatField::new(w, h, quats)
}

/// 8-bit grayscale rendering of a scalar field, stretched to its range.
pub fn write_scalar_png(field: &ScalarField, path: &Path) -> Result<()> {
    let (lo, hi) = field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(
        field.width() as u32,
        field.height() as u32,
        field
            .values()
            .iter()
            .map(|&v| ((v - lo) / span * 255.0).round() as u8)
            .collect(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_rgb_png(width: usize, height: usize, pixels: &[[u8; 3]], path: &Path) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, pixels.iter().flatten().copied().collect())
            .ok_or_else(|| Error::Dimension("pixel count does not match the raster".into()))?;
    buf.save(path).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg() -> Segmentation {
        build_regions(5, 3, &[0, 0, 1, 1, 1, 0, 2, 2, 1, 1, 0, 2, 2, 2, 1]).unwrap()
    }

    #[test]
    fn label_png_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = seg();
        for name in ["l.png", "l.csv"] {
            let p = dir.path().join(name);
            if name.ends_with("png") {
                write_label_png(&s, &p).unwrap();
            } else {
                write_label_csv(&s, &p).unwrap();
            }
            assert_eq!(read_label_map(&p).unwrap().labels(), s.labels());
        }
        let split = build_regions(3, 1, &[0, 1, 0]).unwrap();
        let renumbered = Segmentation::from_ids(3, 1, vec![RegionId(4), RegionId(7), RegionId(4)]);
        assert!(renumbered.is_err());
        let p = dir.path().join("frag.csv");
        std::fs::write(&p, "x,y,label\n0,0,4\n1,0,7\n2,0,4\n").unwrap();
        assert_eq!(read_label_map(&p).unwrap().labels(), split.labels());
    }

    #[test]
    fn grf_round_trip_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let f = ScalarField::new(3, 2, vec![0.5, 1.0, -2.0, 3.25, 4.0, 5.0]).unwrap();
        let p = dir.path().join("s.grf");
        write_scalar_grf(&f, &p).unwrap();
        assert_eq!(read_scalar_field(&p).unwrap(), f);
        let q = QuatField::new(1, 1, vec![[0.5, 0.5, 0.5, 0.5]]).unwrap();
        let pq = dir.path().join("q.grf");
        write_quat_grf(&q, &pq).unwrap();
        assert_eq!(read_quat_field(&pq).unwrap(), q);
        assert!(read_quat_field(&p).is_err());
        fs::write(&p, b"nope").unwrap();
        assert!(read_scalar_field(&p).is_err());
    }
}
