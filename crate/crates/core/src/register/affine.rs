//! Global affine pre-alignment from the sample outline.
//!
//! The transform maps first-modality pixel coordinates to second-modality
//! coordinates. It is estimated from binary sample masks by matching
//! centroids and second moments along principal axes, followed by an integer
//! translation search that maximises mask overlap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Mask;

const MIN_DET: f64 = 1e-9;
const SEARCH_RADIUS: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    /// Row-major 2×2 linear part.
    pub linear: [[f64; 2]; 2],
    /// Translation in pixels.
    pub translation: [f64; 2],
}

impl Default for AffineTransform {
    fn default() -> Self {
        AffineTransform::identity()
    }
}

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        AffineTransform {
            translation: [dx, dy],
            ..AffineTransform::identity()
        }
    }

    pub fn new(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Result<Self> {
        let t = AffineTransform {
            linear,
            translation,
        };
        t.check()?;
        Ok(t)
    }

    pub fn det(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn check(&self) -> Result<()> {
        let det = self.det();
        if !det.is_finite() || det.abs() <= MIN_DET {
            return Err(Error::DegenerateTransform(det));
        }
        Ok(())
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let [[a, b], [c, d]] = self.linear;
        (
            a * x + b * y + self.translation[0],
            c * x + d * y + self.translation[1],
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        self.check()?;
        let det = self.det();
        let [[a, b], [c, d]] = self.linear;
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let [tx, ty] = self.translation;
        Ok(AffineTransform {
            linear: inv,
            translation: [
                -(inv[0][0] * tx + inv[0][1] * ty),
                -(inv[1][0] * tx + inv[1][1] * ty),
            ],
        })
    }

    /// Maps an integer pixel and rounds to the nearest target pixel.
    pub fn apply_rounded(&self, x: usize, y: usize) -> (i64, i64) {
        let (u, v) = self.apply(x as f64, y as f64);
        (u.round() as i64, v.round() as i64)
    }
}

struct Moments {
    centroid: [f64; 2],
    cov: [[f64; 2]; 2],
}

fn moments(mask: &Mask) -> Result<Moments> {
    let n = mask.count();
    if n == 0 {
        return Err(Error::Domain("mask has no foreground pixels".into()));
    }
    let w = mask.width();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b) {
        sx += (i % w) as f64;
        sy += (i / w) as f64;
    }
    let nf = n as f64;
    let (cx, cy) = (sx / nf, sy / nf);
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b) {
        let dx = (i % w) as f64 - cx;
        let dy = (i / w) as f64 - cy;
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    Ok(Moments {
        centroid: [cx, cy],
        cov: [[xx / nf, xy / nf], [xy / nf, yy / nf]],
    })
}

/// Eigen-decomposition of a symmetric 2×2 matrix: eigenvalues (descending)
/// and the matching unit eigenvectors as columns.
fn sym_eigen(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    let v1 = if b.abs() > 1e-12 {
        let v = [l1 - d, b];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    } else if a >= d {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [[v1[0], v2[0]], [v1[1], v2[1]]])
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Intersection-over-union of `transform(mask1)` with `mask2`, evaluated on
/// the grid of `mask2`.
fn overlap(mask1: &Mask, mask2: &Mask, inverse: &AffineTransform) -> f64 {
    let w2 = mask2.width();
    let (mut inter, mut union) = (0usize, 0usize);
    for (i, &in2) in mask2.bits().iter().enumerate() {
        let (u, v) = inverse.apply((i % w2) as f64, (i / w2) as f64);
        let in1 = mask1.get(u.round() as i64, v.round() as i64);
        inter += usize::from(in1 && in2);
        union += usize::from(in1 || in2);
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn distance_from_identity(t: &AffineTransform) -> f64 {
    let s = t.det().abs().sqrt();
    let l = t.linear;
    (l[0][0] / s - 1.0).powi(2) + (l[0][1] / s).powi(2) + (l[1][0] / s).powi(2) + (l[1][1] / s - 1.0).powi(2)
}

/// Estimates the transform taking `mask1` onto `mask2`.
pub fn estimate_affine(mask1: &Mask, mask2: &Mask) -> Result<AffineTransform> {
    let m1 = moments(mask1)?;
    let m2 = moments(mask2)?;
    let (l1, u1) = sym_eigen(m1.cov);
    let (l2, u2) = sym_eigen(m2.cov);

    let axis_scale = |k: usize| -> f64 {
        if l1[k] > 1e-12 && l2[k] > 1e-12 {
            (l2[k] / l1[k]).sqrt()
        } else {
            1.0
        }
    };
    let tr1 = l1[0] + l1[1];
    let tr2 = l2[0] + l2[1];
    let iso = if tr1 > 1e-12 && tr2 > 1e-12 {
        (tr2 / tr1).sqrt()
    } else {
        1.0
    };

    let mut candidates = vec![[[iso, 0.0], [0.0, iso]]];
    let scale = [[axis_scale(0), 0.0], [0.0, axis_scale(1)]];
    for s0 in [1.0, -1.0] {
        for s1 in [1.0, -1.0] {
            let flipped = [[u2[0][0] * s0, u2[0][1] * s1], [u2[1][0] * s0, u2[1][1] * s1]];
            candidates.push(matmul(matmul(flipped, scale), transpose(u1)));
        }
    }

    let mut best: Option<(f64, f64, AffineTransform)> = None;
    for linear in candidates {
        let base = AffineTransform {
            linear,
            translation: [0.0, 0.0],
        };
        if base.check().is_err() {
            continue;
        }
        let (mx, my) = base.apply(m1.centroid[0], m1.centroid[1]);
        let t0 = [m2.centroid[0] - mx, m2.centroid[1] - my];
        for dy in -SEARCH_RADIUS..=SEARCH_RADIUS {
            for dx in -SEARCH_RADIUS..=SEARCH_RADIUS {
                let t = AffineTransform {
                    linear,
                    translation: [t0[0] + dx as f64, t0[1] + dy as f64],
                };
                let score = overlap(mask1, mask2, &t.inverse()?);
                // Prefer higher overlap, then transforms closer to a pure
                // similarity of the identity with the smallest refinement.
                let penalty = distance_from_identity(&t) + 1e-3 * ((dx * dx + dy * dy) as f64);
                let better = match &best {
                    None => true,
                    Some((s, p, _)) => score > s + 1e-12 || ((score - s).abs() <= 1e-12 && penalty < *p),
                };
                if better {
                    best = Some((score, penalty, t));
                }
            }
        }
    }
    best.map(|(_, _, t)| t)
        .ok_or(Error::DegenerateTransform(0.0))
}
