//! Boundary overlap between a segmentation and the ground truth, and the
//! detection bookkeeping for planted boundaries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correspondence::{CorrespondenceMap, Modality};
use crate::error::{Error, Result};
use crate::grid::{inner_boundary, neighbors4};
use crate::segmentation::Segmentation;

/// Boundary pixels dilated by a disc of radius `w / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMask {
    pub width: usize,
    pub height: usize,
    /// Boundary width the mask was dilated to.
    pub w: u32,
    pub bits: Vec<bool>,
}

/// Offsets `(i, j)` with `i² + j² ≤ (w/2)²`.
fn disc(w: u32) -> Vec<(i64, i64)> {
    let w2 = i64::from(w) * i64::from(w);
    let reach = i64::from(w) / 2 + 1;
    let mut out = Vec::new();
    for j in -reach..=reach {
        for i in -reach..=reach {
            if 4 * (i * i + j * j) <= w2 {
                out.push((i, j));
            }
        }
    }
    out
}

impl BoundaryMask {
    pub fn of(seg: &Segmentation, w: u32) -> Self {
        Self::from_pixels(seg.width(), seg.height(), &inner_boundary(seg.labels(), seg.width(), seg.height()), w)
    }

    pub fn from_pixels(width: usize, height: usize, boundary: &[bool], w: u32) -> Self {
        let offsets = disc(w);
        let mut bits = vec![false; width * height];
        for (p, _) in boundary.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = ((p % width) as i64, (p / width) as i64);
            for &(i, j) in &offsets {
                let (u, v) = (x + i, y + j);
                if u >= 0 && v >= 0 && (u as usize) < width && (v as usize) < height {
                    bits[v as usize * width + u as usize] = true;
                }
            }
        }
        BoundaryMask { width, height, w, bits }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// `|B_T(w) ∩ B̂(w)| / |B_T(w) ∪ B̂(w)|`; two boundary-free segmentations
/// agree perfectly.
pub fn overlapping_rate(truth: &Segmentation, est: &Segmentation, w: u32) -> Result<f64> {
    if truth.width() != est.width() || truth.height() != est.height() {
        return Err(Error::Dimension(format!(
            "truth {}x{} vs estimate {}x{}",
            truth.width(),
            truth.height(),
            est.width(),
            est.height()
        )));
    }
    if w == 0 {
        return Err(Error::Domain("boundary width must be at least 1".into()));
    }
    let a = BoundaryMask::of(truth, w);
    let b = BoundaryMask::of(est, w);
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.bits.iter().zip(&b.bits) {
        inter += usize::from(*x && *y);
        union += usize::from(*x || *y);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub instance_id: String,
    pub method: String,
    pub w: u32,
    pub overlap_rate: f64,
}

pub fn write_eval_csv(rows: &[EvalRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

/// Mean overlap per method and width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub instances: usize,
    /// method → w → mean overlap rate.
    pub mean_overlap: BTreeMap<String, BTreeMap<u32, f64>>,
}

pub fn summarize(rows: &[EvalRow]) -> EvalSummary {
    let mut sums: BTreeMap<String, BTreeMap<u32, (f64, usize)>> = BTreeMap::new();
    let mut instances = std::collections::BTreeSet::new();
    for r in rows {
        instances.insert(r.instance_id.clone());
        let e = sums.entry(r.method.clone()).or_default().entry(r.w).or_insert((0.0, 0));
        e.0 += r.overlap_rate;
        e.1 += 1;
    }
    EvalSummary {
        instances: instances.len(),
        mean_overlap: sums
            .into_iter()
            .map(|(m, by_w)| (m, by_w.into_iter().map(|(w, (s, n))| (w, s / n as f64)).collect()))
            .collect(),
    }
}

/// Fraction of `pixels` lying within `tolerance` (Euclidean, pixels) of a
/// boundary pixel of `seg`.
pub fn boundary_coverage(seg: &Segmentation, pixels: &[usize], tolerance: f64) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    let (w, h) = (seg.width(), seg.height());
    let boundary = inner_boundary(seg.labels(), w, h);
    let reach = tolerance.floor() as i64;
    let t2 = tolerance * tolerance;
    let hit = pixels
        .iter()
        .filter(|&&p| {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            (-reach..=reach).any(|j| {
                (-reach..=reach).any(|i| {
                    let (u, v) = (x + i, y + j);
                    ((i * i + j * j) as f64) <= t2
                        && u >= 0
                        && v >= 0
                        && (u as usize) < w
                        && (v as usize) < h
                        && boundary[v as usize * w + u as usize]
                })
            })
        })
        .count();
    hit as f64 / pixels.len() as f64
}

/// Pixels along the boundary a split created, in the split modality's
/// frame: child pixels with a 4-neighbour in the other child.
pub fn split_boundaries(corr: &CorrespondenceMap, modality: Modality) -> Vec<Vec<usize>> {
    let frames = corr.frames();
    let (w, h) = match modality {
        Modality::First => frames[0],
        Modality::Second => frames[1],
    };
    corr.split_log()
        .iter()
        .filter(|r| r.modality == modality)
        .map(|r| {
            let mut side = vec![0u8; w * h];
            for &p in &r.child_pixels[0] {
                side[p] = 1;
            }
            for &p in &r.child_pixels[1] {
                side[p] = 2;
            }
            let mut out: Vec<usize> = r.child_pixels[0]
                .iter()
                .chain(&r.child_pixels[1])
                .copied()
                .filter(|&p| neighbors4(p, w, h).any(|q| side[q] != 0 && side[q] != side[p]))
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

/// Planted-boundary detection summary for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub planted: usize,
    pub detected: usize,
    pub splits: usize,
    pub spurious_splits: usize,
}

/// A planted boundary counts as detected when at least half of its pixels
/// lie within `tolerance` of a boundary of `est`. A split is spurious when
/// less than half of its new boundary lies within `tolerance` of a planted
/// boundary.
pub fn detection_report(
    est: &Segmentation,
    planted: &[Vec<usize>],
    split_boundaries: &[Vec<usize>],
    tolerance: f64,
) -> DetectionReport {
    let detected = planted
        .iter()
        .filter(|pixels| boundary_coverage(est, pixels, tolerance) >= 0.5)
        .count();
    let (w, h) = (est.width(), est.height());
    let mut planted_mask = vec![false; w * h];
    for &p in planted.iter().flatten() {
        planted_mask[p] = true;
    }
    let near_planted = |p: usize| {
        let (x, y) = ((p % w) as i64, (p / w) as i64);
        let reach = tolerance.floor() as i64;
        (-reach..=reach).any(|j| {
            (-reach..=reach).any(|i| {
                let (u, v) = (x + i, y + j);
                ((i * i + j * j) as f64) <= tolerance * tolerance
                    && u >= 0
                    && v >= 0
                    && (u as usize) < w
                    && (v as usize) < h
                    && planted_mask[v as usize * w + u as usize]
            })
        })
    };
    let spurious = split_boundaries
        .iter()
        .filter(|b| {
            let near = b.iter().filter(|&&p| near_planted(p)).count();
            b.is_empty() || (near as f64) < 0.5 * b.len() as f64
        })
        .count();
    DetectionReport {
        planted: planted.len(),
        detected,
        splits: split_boundaries.len(),
        spurious_splits: spurious,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::build_regions;

    fn vertical(w: usize, h: usize, edge: usize) -> Segmentation {
        let labels: Vec<u32> = (0..w * h).map(|p| u32::from(p % w >= edge)).collect();
        build_regions(w, h, &labels).unwrap()
    }

    #[test]
    fn identical_segmentations_overlap_fully() {
        let s = vertical(20, 10, 7);
        for w in 1..=5 {
            assert_eq!(overlapping_rate(&s, &s, w).unwrap(), 1.0);
        }
    }

    #[test]
    fn distant_boundaries_do_not_overlap() {
        let a = vertical(40, 10, 5);
        let b = vertical(40, 10, 30);
        assert_eq!(overlapping_rate(&a, &b, 3).unwrap(), 0.0);
    }

    #[test]
    fn disc_shapes() {
        assert_eq!(disc(1).len(), 1);
        assert_eq!(disc(2).len(), 5);
        assert_eq!(disc(3).len(), 9);
        assert_eq!(disc(4).len(), 13);
    }

    #[test]
    fn symmetric_and_checked() {
        let a = vertical(20, 10, 7);
        let b = vertical(20, 10, 9);
        assert_eq!(overlapping_rate(&a, &b, 3).unwrap(), overlapping_rate(&b, &a, 3).unwrap());
        assert!(overlapping_rate(&a, &vertical(10, 10, 3), 1).is_err());
    }

    #[test]
    fn coverage_of_a_shifted_edge() {
        let s = vertical(20, 10, 10);
        let planted: Vec<usize> = (0..10).map(|y| y * 20 + 12).collect();
        assert_eq!(boundary_coverage(&s, &planted, 1.0), 0.0);
        assert_eq!(boundary_coverage(&s, &planted, 2.0), 1.0);
    }
}
