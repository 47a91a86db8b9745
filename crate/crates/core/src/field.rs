//! Pixel rasters for the two modalities.
//!
//! A [`ScalarField`] holds one real intensity per pixel (BSE-like data), a
//! [`QuatField`] one unit quaternion per pixel (EBSD-like orientation data).
//! Both are stored row-major.

use crate::error::{Error, Result};

/// Unit quaternion stored as `[w, x, y, z]`.
pub type Quat = [f64; 4];

const QUAT_NORM_TOL: f64 = 1e-6;

pub fn dot(a: &Quat, b: &Quat) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm(a: &Quat) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Quat) -> Option<Quat> {
    let n = norm(a);
    if n > 1e-300 && n.is_finite() {
        Some([a[0] / n, a[1] / n, a[2] / n, a[3] / n])
    } else {
        None
    }
}

/// Hamilton product `a ⊗ b`.
pub fn mul(a: &Quat, b: &Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn add_assign(acc: &mut Quat, v: &Quat) {
    for k in 0..4 {
        acc[k] += v[k];
    }
}

/// Angle in degrees between two unit quaternions, ignoring sign.
pub fn angle_deg(a: &Quat, b: &Quat) -> f64 {
    dot(a, b).abs().min(1.0).acos().to_degrees()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite scalar at pixel {i}")));
        }
        Ok(ScalarField {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuatField {
    width: usize,
    height: usize,
    values: Vec<Quat>,
}

impl QuatField {
    pub fn new(width: usize, height: usize, values: Vec<Quat>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        for (i, q) in values.iter().enumerate() {
            let n = norm(q);
            if !n.is_finite() || (n - 1.0).abs() > QUAT_NORM_TOL {
                return Err(Error::Domain(format!(
                    "quaternion at pixel {i} has norm {n}"
                )));
            }
        }
        Ok(QuatField {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Quat] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Quat {
        self.values[index]
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("{width}x{height} raster")));
    }
    if width * height != len {
        return Err(Error::Dimension(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Mask::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// An image of either modality.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageData {
    Scalar(ScalarField),
    Quat(QuatField),
}

impl ImageData {
    pub fn width(&self) -> usize {
        match self {
            ImageData::Scalar(f) => f.width(),
            ImageData::Quat(f) => f.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            ImageData::Scalar(f) => f.height(),
            ImageData::Quat(f) => f.height(),
        }
    }
}

impl From<ScalarField> for ImageData {
    fn from(f: ScalarField) -> Self {
        ImageData::Scalar(f)
    }
}

impl From<QuatField> for ImageData {
    fn from(f: QuatField) -> Self {
        ImageData::Quat(f)
    }
}
