//! Boundary overlays: initial boundaries in red, final boundaries in blue,
//! boundaries between the descendants of split siblings in green, drawn over
//! a grayscale background.

use std::collections::{BTreeMap, BTreeSet};

use crate::correspondence::{CorrespondenceMap, Modality};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{inner_boundary, neighbors4};
use crate::segmentation::{RegionId, Segmentation};

pub const RED: [u8; 3] = [230, 30, 30];
pub const BLUE: [u8; 3] = [40, 90, 255];
pub const GREEN: [u8; 3] = [20, 210, 60];

/// Regions descended from `root` through later splits in the same modality.
fn descendants(corr: &CorrespondenceMap, modality: Modality, root: RegionId) -> BTreeSet<RegionId> {
    let children: BTreeMap<RegionId, [RegionId; 2]> = corr
        .split_log()
        .iter()
        .filter(|r| r.modality == modality)
        .map(|r| (r.parent, r.children))
        .collect();
    let mut out = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        match children.get(&id) {
            Some(c) if id != c[0] && id != c[1] => stack.extend(c),
            _ => {
                out.insert(id);
            }
        }
    }
    out
}

/// Final boundary pixels separating the two sides of some split.
pub fn split_boundary_mask(seg: &Segmentation, corr: &CorrespondenceMap, modality: Modality) -> Vec<bool> {
    let (w, h) = (seg.width(), seg.height());
    let mut mask = vec![false; w * h];
    for record in corr.split_log().iter().filter(|r| r.modality == modality) {
        let a = descendants(corr, modality, record.children[0]);
        let b = descendants(corr, modality, record.children[1]);
        for p in 0..w * h {
            let l = seg.label(p);
            let other = if a.contains(&l) {
                &b
            } else if b.contains(&l) {
                &a
            } else {
                continue;
            };
            if neighbors4(p, w, h).any(|q| other.contains(&seg.label(q))) {
                mask[p] = true;
            }
        }
    }
    mask
}

/// RGB pixels of the overlay. Later layers win: red, then blue, then green.
pub fn overlay(
    background: Option<&ScalarField>,
    initial: &Segmentation,
    final_seg: &Segmentation,
    corr: &CorrespondenceMap,
    modality: Modality,
) -> Result<Vec<[u8; 3]>> {
    let (w, h) = (final_seg.width(), final_seg.height());
    if initial.width() != w || initial.height() != h {
        return Err(Error::Dimension("initial and final segmentations differ in size".into()));
    }
    let mut pixels = match background {
        Some(f) => {
            if f.width() != w || f.height() != h {
                return Err(Error::Dimension("background differs from the segmentation".into()));
            }
            let (lo, hi) = f
                .values()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let span = if hi > lo { hi - lo } else { 1.0 };
            f.values()
                .iter()
                .map(|&v| {
                    let g = (40.0 + 160.0 * (v - lo) / span).round() as u8;
                    [g, g, g]
                })
                .collect()
        }
        None => vec![[128, 128, 128]; w * h],
    };
    let layers = [
        (inner_boundary(initial.labels(), w, h), RED),
        (inner_boundary(final_seg.labels(), w, h), BLUE),
        (split_boundary_mask(final_seg, corr, modality), GREEN),
    ];
    for (mask, colour) in &layers {
        for (px, _) in pixels.iter_mut().zip(mask).filter(|(_, &m)| m) {
            *px = *colour;
        }
    }
    Ok(pixels)
}
