//! Label-map segmentations.
//!
//! A [`Segmentation`] owns the per-pixel region ids together with the derived
//! region table (pixel lists, boundary pixels, boundary lengths) and the
//! region adjacency graph. Regions are 4-connected. The boundary of a region
//! is the set of its pixels with at least one exposed side, where a side is
//! exposed if it faces another region or the raster border; the boundary
//! length counts exposed sides, so a lone pixel has length 4.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, neighbors4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub u32);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: RegionId,
    /// Pixel indices, ascending.
    pub pixels: Vec<usize>,
    /// Pixels with an exposed side, ascending.
    pub boundary: Vec<usize>,
    /// Number of exposed pixel sides.
    pub boundary_length: usize,
}

/// Size summary of a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub pixel_count: usize,
    /// Radius of the disc with the same area, `sqrt(n / π)`.
    pub equivalent_radius: f64,
}

/// Two-way split of a region's pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

impl Partition {
    pub fn new(mut plus: Vec<usize>, mut minus: Vec<usize>) -> Self {
        plus.sort_unstable();
        minus.sort_unstable();
        Partition { plus, minus }
    }

    pub fn len(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `min(|R+|, |R-|) / |R|`.
    pub fn size_ratio(&self) -> f64 {
        self.plus.len().min(self.minus.len()) as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<RegionId>,
    regions: BTreeMap<RegionId, Region>,
    /// Shared 4-edge count for every adjacent pair `(a, b)` with `a < b`.
    adjacency: BTreeMap<(RegionId, RegionId), usize>,
    next_id: u32,
}

/// Labels 4-connected components of equal raster values. Region ids are
/// assigned in row-major order of each component's first pixel, so the
/// result does not depend on the input label values.
pub fn build_regions(width: usize, height: usize, labels: &[u32]) -> Result<Segmentation> {
    if width == 0 || height == 0 || labels.len() != width * height {
        return Err(Error::Dimension(format!(
            "{width}x{height} label raster with {} values",
            labels.len()
        )));
    }
    const UNSET: u32 = u32::MAX;
    let mut ids = vec![UNSET; labels.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if ids[start] != UNSET {
            continue;
        }
        let value = labels[start];
        ids[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for q in neighbors4(p, width, height) {
                if ids[q] == UNSET && labels[q] == value {
                    ids[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    Ok(Segmentation::assemble(
        width,
        height,
        ids.into_iter().map(RegionId).collect(),
    ))
}

impl Segmentation {
    /// Builds a segmentation that keeps the given region ids. Every id must
    /// label a single 4-connected component.
    pub fn from_ids(width: usize, height: usize, ids: Vec<RegionId>) -> Result<Self> {
        if width == 0 || height == 0 || ids.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} id raster with {} values",
                ids.len()
            )));
        }
        let seg = Segmentation::assemble(width, height, ids);
        for region in seg.regions.values() {
            if !grid::is_connected4(&region.pixels, width) {
                return Err(Error::InvalidPartition(format!(
                    "region {} is not 4-connected",
                    region.id
                )));
            }
        }
        Ok(seg)
    }

    fn assemble(width: usize, height: usize, labels: Vec<RegionId>) -> Self {
        let mut pixel_lists: BTreeMap<RegionId, Vec<usize>> = BTreeMap::new();
        for (p, &id) in labels.iter().enumerate() {
            pixel_lists.entry(id).or_default().push(p);
        }
        let regions = pixel_lists
            .into_iter()
            .map(|(id, pixels)| (id, describe_region(width, height, &labels, id, pixels)))
            .collect();
        let adjacency = compute_adjacency(width, height, &labels);
        let next_id = labels.iter().map(|id| id.0 + 1).max().unwrap_or(0);
        Segmentation {
            width,
            height,
            labels,
            regions,
            adjacency,
            next_id,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[RegionId] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> RegionId {
        self.labels[index]
    }

    /// Region ids as plain integers, row-major.
    pub fn label_values(&self) -> Vec<u32> {
        self.labels.iter().map(|id| id.0).collect()
    }

    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.regions.values()
    }

    pub fn region_ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.regions.keys().copied()
    }

    pub fn region(&self, id: RegionId) -> Result<&Region> {
        self.regions.get(&id).ok_or(Error::UnknownRegion(id))
    }

    pub fn contains(&self, id: RegionId) -> bool {
        self.regions.contains_key(&id)
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Shared-edge counts for adjacent pairs `(a, b)`, `a < b`.
    pub fn adjacency(&self) -> &BTreeMap<(RegionId, RegionId), usize> {
        &self.adjacency
    }

    pub fn are_adjacent(&self, a: RegionId, b: RegionId) -> bool {
        self.adjacency.contains_key(&ordered(a, b))
    }

    pub fn neighbors_of(&self, id: RegionId) -> Vec<RegionId> {
        self.adjacency
            .keys()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn total_boundary_length(&self) -> usize {
        self.regions.values().map(|r| r.boundary_length).sum()
    }

    pub fn region_statistics(&self, id: RegionId) -> Result<RegionStats> {
        let n = self.region(id)?.pixels.len();
        Ok(RegionStats {
            pixel_count: n,
            equivalent_radius: equivalent_radius(n),
        })
    }

    /// Pixels of `a` that have a 4-neighbour in `b`.
    pub fn pixels_facing(&self, a: RegionId, b: RegionId) -> Vec<usize> {
        let Some(region) = self.regions.get(&a) else {
            return Vec::new();
        };
        region
            .boundary
            .iter()
            .copied()
            .filter(|&p| neighbors4(p, self.width, self.height).any(|q| self.labels[q] == b))
            .collect()
    }

    /// Replaces `region` by the two sides of `psi`, updating the region table
    /// and adjacency in place. Returns the ids of the new `(plus, minus)`
    /// regions; all other regions keep their ids and contents.
    pub fn split(&mut self, region: RegionId, psi: &Partition) -> Result<[RegionId; 2]> {
        let parent = self.region(region)?;
        validate_partition(parent, psi, self.width)?;

        let plus_id = RegionId(self.next_id);
        let minus_id = RegionId(self.next_id + 1);
        self.next_id += 2;
        for &p in &psi.plus {
            self.labels[p] = plus_id;
        }
        for &p in &psi.minus {
            self.labels[p] = minus_id;
        }
        self.regions.remove(&region);
        self.adjacency.retain(|&(a, b), _| a != region && b != region);
        for (id, pixels) in [(plus_id, &psi.plus), (minus_id, &psi.minus)] {
            let described = describe_region(self.width, self.height, &self.labels, id, pixels.clone());
            self.regions.insert(id, described);
            for &p in pixels.iter() {
                for q in neighbors4(p, self.width, self.height) {
                    let other = self.labels[q];
                    if other == id {
                        continue;
                    }
                    // The plus/minus edge is seen from both sides; count it once.
                    if id == minus_id && other == plus_id {
                        continue;
                    }
                    *self.adjacency.entry(ordered(id, other)).or_insert(0) += 1;
                }
            }
        }
        Ok([plus_id, minus_id])
    }

    /// Copy with region ids renumbered in row-major first-pixel order. The
    /// region data is carried over, not recomputed.
    pub fn relabeled_canonical(&self) -> Segmentation {
        let mut mapping: BTreeMap<RegionId, RegionId> = BTreeMap::new();
        for &id in &self.labels {
            let next = RegionId(mapping.len() as u32);
            mapping.entry(id).or_insert(next);
        }
        let labels = self.labels.iter().map(|id| mapping[id]).collect();
        let regions = self
            .regions
            .values()
            .map(|r| {
                let id = mapping[&r.id];
                (
                    id,
                    Region {
                        id,
                        ..r.clone()
                    },
                )
            })
            .collect();
        let adjacency = self
            .adjacency
            .iter()
            .map(|(&(a, b), &n)| (ordered(mapping[&a], mapping[&b]), n))
            .collect();
        Segmentation {
            width: self.width,
            height: self.height,
            labels,
            regions,
            adjacency,
            next_id: mapping.len() as u32,
        }
    }

    /// Recomputes the region table for the given regions after their pixels
    /// were relabelled elsewhere (used by boundary competition, which never
    /// changes the set of ids).
    pub(crate) fn with_labels(&self, labels: Vec<RegionId>) -> Segmentation {
        let mut seg = Segmentation::assemble(self.width, self.height, labels);
        seg.next_id = seg.next_id.max(self.next_id);
        seg
    }

    pub(crate) fn next_id(&self) -> u32 {
        self.next_id
    }
}

/// `sqrt(n / π)`.
pub fn equivalent_radius(n: usize) -> f64 {
    (n as f64 / std::f64::consts::PI).sqrt()
}

pub(crate) fn ordered(a: RegionId, b: RegionId) -> (RegionId, RegionId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn describe_region(
    width: usize,
    height: usize,
    labels: &[RegionId],
    id: RegionId,
    pixels: Vec<usize>,
) -> Region {
    let mut boundary = Vec::new();
    let mut boundary_length = 0;
    for &p in &pixels {
        let exposed = grid::border_sides(p, width, height)
            + neighbors4(p, width, height)
                .filter(|&q| labels[q] != id)
                .count();
        if exposed > 0 {
            boundary.push(p);
            boundary_length += exposed;
        }
    }
    Region {
        id,
        pixels,
        boundary,
        boundary_length,
    }
}

fn compute_adjacency(
    width: usize,
    height: usize,
    labels: &[RegionId],
) -> BTreeMap<(RegionId, RegionId), usize> {
    let mut adjacency = BTreeMap::new();
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            if x + 1 < width && labels[p] != labels[p + 1] {
                *adjacency.entry(ordered(labels[p], labels[p + 1])).or_insert(0) += 1;
            }
            if y + 1 < height && labels[p] != labels[p + width] {
                *adjacency
                    .entry(ordered(labels[p], labels[p + width]))
                    .or_insert(0) += 1;
            }
        }
    }
    adjacency
}

fn validate_partition(region: &Region, psi: &Partition, width: usize) -> Result<()> {
    if psi.plus.is_empty() || psi.minus.is_empty() {
        return Err(Error::InvalidPartition("empty side".into()));
    }
    let mut all: Vec<usize> = psi.plus.iter().chain(&psi.minus).copied().collect();
    all.sort_unstable();
    if all != region.pixels {
        return Err(Error::InvalidPartition(format!(
            "sides do not partition the pixels of region {}",
            region.id
        )));
    }
    for (name, side) in [("plus", &psi.plus), ("minus", &psi.minus)] {
        if !grid::is_connected4(side, width) {
            return Err(Error::InvalidPartition(format!("{name} side is disconnected")));
        }
    }
    Ok(())
}
