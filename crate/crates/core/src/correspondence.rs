//! Cross-modal region lineage and the inter-modal energy.
//!
//! Links pair a first-modality region with a second-modality region. Every
//! split appends a [`SplitRecord`] carrying the two child pixel sets and the
//! other-modality regions linked to the parent at split time, which is
//! enough to decide later whether the two modalities agree on a boundary.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::register::AffineTransform;
use crate::segmentation::{Partition, RegionId, Segmentation};

/// Minimum per-child Jaccard overlap for two splits to count as the same
/// boundary.
pub const MATCH_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    First,
    Second,
}

impl Modality {
    pub fn other(self) -> Modality {
        match self {
            Modality::First => Modality::Second,
            Modality::Second => Modality::First,
        }
    }

    fn index(self) -> usize {
        match self {
            Modality::First => 0,
            Modality::Second => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub modality: Modality,
    pub parent: RegionId,
    pub children: [RegionId; 2],
    /// Pixel indices of each child in its own modality's frame.
    pub child_pixels: [Vec<usize>; 2],
    /// Other-modality regions linked to the parent when it was split.
    pub partners: Vec<RegionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    /// `(first-modality region, second-modality region)` pairs.
    links: BTreeSet<(RegionId, RegionId)>,
    split_log: Vec<SplitRecord>,
    /// First-modality frame to second-modality frame.
    transform: AffineTransform,
    /// `(width, height)` of each modality's raster.
    frames: [(usize, usize); 2],
}

impl CorrespondenceMap {
    pub fn new(
        links: impl IntoIterator<Item = (RegionId, RegionId)>,
        transform: AffineTransform,
        frames: [(usize, usize); 2],
    ) -> Self {
        CorrespondenceMap {
            links: links.into_iter().collect(),
            split_log: Vec::new(),
            transform,
            frames,
        }
    }

    /// Identity links between two segmentations on the same grid that share
    /// region ids.
    pub fn identity(s1: &Segmentation, s2: &Segmentation) -> Self {
        let links = s1.region_ids().filter(|&id| s2.contains(id)).map(|id| (id, id));
        CorrespondenceMap::new(
            links,
            AffineTransform::identity(),
            [(s1.width(), s1.height()), (s2.width(), s2.height())],
        )
    }

    pub fn links(&self) -> &BTreeSet<(RegionId, RegionId)> {
        &self.links
    }

    pub fn split_log(&self) -> &[SplitRecord] {
        &self.split_log
    }

    pub fn transform(&self) -> &AffineTransform {
        &self.transform
    }

    pub fn frames(&self) -> [(usize, usize); 2] {
        self.frames
    }

    /// Regions of the other modality linked to `id`.
    pub fn partners(&self, modality: Modality, id: RegionId) -> Vec<RegionId> {
        self.links
            .iter()
            .filter_map(|&(a, b)| match modality {
                Modality::First if a == id => Some(b),
                Modality::Second if b == id => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Records that `parent` in `modality` was split into `children`, and
    /// re-points the parent's links at both children.
    pub fn record_split(
        &mut self,
        modality: Modality,
        parent: RegionId,
        children: [RegionId; 2],
        psi: &Partition,
    ) {
        let partners = self.partners(modality, parent);
        self.links.retain(|&(a, b)| match modality {
            Modality::First => a != parent,
            Modality::Second => b != parent,
        });
        for &p in &partners {
            for &c in &children {
                self.links.insert(match modality {
                    Modality::First => (c, p),
                    Modality::Second => (p, c),
                });
            }
        }
        self.split_log.push(SplitRecord {
            modality,
            parent,
            children,
            child_pixels: [psi.plus.clone(), psi.minus.clone()],
            partners,
        });
    }

    /// The same correspondence with the roles of the two modalities swapped.
    pub fn swapped(&self) -> Result<Self> {
        Ok(CorrespondenceMap {
            links: self.links.iter().map(|&(a, b)| (b, a)).collect(),
            split_log: self
                .split_log
                .iter()
                .map(|r| SplitRecord {
                    modality: r.modality.other(),
                    ..r.clone()
                })
                .collect(),
            transform: self.transform.inverse()?,
            frames: [self.frames[1], self.frames[0]],
        })
    }

    /// Checks that every linked id exists in its segmentation.
    pub fn validate(&self, s1: &Segmentation, s2: &Segmentation) -> Result<()> {
        for &(a, b) in &self.links {
            if !s1.contains(a) {
                return Err(Error::UnknownRegion(a));
            }
            if !s2.contains(b) {
                return Err(Error::UnknownRegion(b));
            }
        }
        Ok(())
    }

    fn lineage_compatible(a: &SplitRecord, b: &SplitRecord) -> bool {
        let sees = |x: &SplitRecord, y: &SplitRecord| {
            x.partners.contains(&y.parent) || y.children.iter().any(|c| x.partners.contains(c))
        };
        sees(a, b) || sees(b, a)
    }

    /// Maps a record's child pixel sets into the common comparison frame:
    /// the frame of the lower-resolution modality, so that mapping never
    /// leaves holes.
    fn comparable_sets(&self, record: &SplitRecord) -> [BTreeSet<(i64, i64)>; 2] {
        let compare_in_first = self.transform.det().abs() >= 1.0;
        let own = record.modality;
        let target = if compare_in_first {
            Modality::First
        } else {
            Modality::Second
        };
        let width = self.frames[own.index()].0;
        let map: Option<AffineTransform> = if own == target {
            None
        } else if own == Modality::First {
            Some(self.transform)
        } else {
            self.transform.inverse().ok()
        };
        let convert = |pixels: &Vec<usize>| -> BTreeSet<(i64, i64)> {
            pixels
                .iter()
                .map(|&p| {
                    let (x, y) = (p % width, p / width);
                    match &map {
                        None => (x as i64, y as i64),
                        Some(t) => t.apply_rounded(x, y),
                    }
                })
                .collect()
        };
        [convert(&record.child_pixels[0]), convert(&record.child_pixels[1])]
    }

    fn partitions_agree(&self, a: &SplitRecord, b: &SplitRecord) -> bool {
        let sa = self.comparable_sets(a);
        let sb = self.comparable_sets(b);
        let straight = jaccard(&sa[0], &sb[0]).min(jaccard(&sa[1], &sb[1]));
        let crossed = jaccard(&sa[0], &sb[1]).min(jaccard(&sa[1], &sb[0]));
        straight.max(crossed) >= MATCH_JACCARD
    }

    /// Whether two splits from different modalities describe the same new
    /// boundary.
    pub fn splits_match(&self, a: &SplitRecord, b: &SplitRecord) -> bool {
        a.modality != b.modality && Self::lineage_compatible(a, b) && self.partitions_agree(a, b)
    }

    /// Greedy pairing of split records in log order; returns matched index
    /// pairs.
    pub fn matched_splits(&self) -> Vec<(usize, usize)> {
        let n = self.split_log.len();
        let mut used = vec![false; n];
        let mut pairs = Vec::new();
        for i in 0..n {
            if used[i] {
                continue;
            }
            for j in 0..n {
                if j == i || used[j] {
                    continue;
                }
                if self.splits_match(&self.split_log[i], &self.split_log[j]) {
                    used[i] = true;
                    used[j] = true;
                    pairs.push((i.min(j), i.max(j)));
                    break;
                }
            }
        }
        pairs
    }
}

fn jaccard(a: &BTreeSet<(i64, i64)>, b: &BTreeSet<(i64, i64)>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Number of boundaries present in one modality but not the other: split
/// records left without a matching split in the other modality.
pub fn inter_modal_energy(corr: &CorrespondenceMap) -> usize {
    corr.split_log.len() - 2 * corr.matched_splits().len()
}

/// Splits `region` of the `modality` segmentation along `psi` and records the
/// split in the correspondence.
pub fn split_region(
    seg: &Segmentation,
    corr: &CorrespondenceMap,
    modality: Modality,
    region: RegionId,
    psi: &Partition,
) -> Result<(Segmentation, CorrespondenceMap)> {
    let mut seg = seg.clone();
    let mut corr = corr.clone();
    let children = seg.split(region, psi)?;
    corr.record_split(modality, region, children, psi);
    Ok((seg, corr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::build_regions;

    fn pair() -> (Segmentation, Segmentation, CorrespondenceMap) {
        // 4x2 grid, one region each
        let s = build_regions(4, 2, &[0; 8]).unwrap();
        let corr = CorrespondenceMap::identity(&s, &s);
        (s.clone(), s, corr)
    }

    fn halves() -> Partition {
        Partition::new(vec![0, 1, 4, 5], vec![2, 3, 6, 7])
    }

    #[test]
    fn fresh_correspondence_has_zero_energy() {
        let (_, _, corr) = pair();
        assert_eq!(inter_modal_energy(&corr), 0);
    }

    #[test]
    fn one_sided_split_costs_one() {
        let (_, s2, corr) = pair();
        let (s2, corr) = split_region(&s2, &corr, Modality::Second, RegionId(0), &halves()).unwrap();
        assert_eq!(s2.region_count(), 2);
        assert_eq!(inter_modal_energy(&corr), 1);
        assert_eq!(corr.links().len(), 2);
    }

    #[test]
    fn matched_splits_cost_nothing() {
        let (s1, s2, corr) = pair();
        let (s2, corr) = split_region(&s2, &corr, Modality::Second, RegionId(0), &halves()).unwrap();
        let (s1, corr) = split_region(&s1, &corr, Modality::First, RegionId(0), &halves()).unwrap();
        assert_eq!(inter_modal_energy(&corr), 0);
        corr.validate(&s1, &s2).unwrap();
        assert_eq!(inter_modal_energy(&corr.swapped().unwrap()), 0);
    }

    #[test]
    fn disagreeing_splits_do_not_match() {
        let (s1, s2, corr) = pair();
        let (_, corr) = split_region(&s2, &corr, Modality::Second, RegionId(0), &halves()).unwrap();
        let rows = Partition::new(vec![0, 1, 2, 3], vec![4, 5, 6, 7]);
        let (_, corr) = split_region(&s1, &corr, Modality::First, RegionId(0), &rows).unwrap();
        assert_eq!(inter_modal_energy(&corr), 2);
    }
}
