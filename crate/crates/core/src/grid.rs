//! Small pixel-grid helpers shared by the segmentation, competition and
//! evaluation code.

use std::collections::VecDeque;

/// 4-neighbours of `index` inside a `width`×`height` raster.
#[inline]
pub fn neighbors4(index: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let x = index % width;
    let y = index / width;
    let up = (y > 0).then(|| index - width);
    let left = (x > 0).then(|| index - 1);
    let right = (x + 1 < width).then(|| index + 1);
    let down = (y + 1 < height).then(|| index + width);
    [up, left, right, down].into_iter().flatten()
}

/// Number of the four sides of `index` that lie on the raster border.
#[inline]
pub fn border_sides(index: usize, width: usize, height: usize) -> usize {
    let x = index % width;
    let y = index / width;
    usize::from(x == 0) + usize::from(y == 0) + usize::from(x + 1 == width) + usize::from(y + 1 == height)
}

/// Tight bounding box over a set of pixel indices, used to run local
/// flood fills without touching the whole raster.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn of(pixels: &[usize], width: usize) -> Option<Self> {
        let mut it = pixels.iter();
        let &first = it.next()?;
        let (mut x0, mut y0) = (first % width, first / width);
        let (mut x1, mut y1) = (x0, y0);
        for &p in it {
            let (x, y) = (p % width, p / width);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        Some(BoundingBox {
            x0,
            y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        })
    }

    #[inline]
    pub fn local(&self, p: usize, width: usize) -> usize {
        (p / width - self.y0) * self.w + (p % width - self.x0)
    }

    #[inline]
    pub fn global(&self, l: usize, width: usize) -> usize {
        (l / self.w + self.y0) * width + (l % self.w + self.x0)
    }

    pub fn len(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Whether `pixels` (indices into a raster of the given width) form a single
/// 4-connected component. The empty set counts as not connected.
pub fn is_connected4(pixels: &[usize], width: usize) -> bool {
    let Some(bb) = BoundingBox::of(pixels, width) else {
        return false;
    };
    let mut inside = vec![false; bb.len()];
    for &p in pixels {
        inside[bb.local(p, width)] = true;
    }
    let start = bb.local(pixels[0], width);
    count_reached(&mut inside, start, bb.w, bb.h) == pixels.len()
}

/// Flood fills from `start` over cells marked `true`, clearing them, and
/// returns the number of cells reached.
pub(crate) fn count_reached(inside: &mut [bool], start: usize, w: usize, h: usize) -> usize {
    if !inside[start] {
        return 0;
    }
    let mut queue = VecDeque::from([start]);
    inside[start] = false;
    let mut reached = 0;
    while let Some(c) = queue.pop_front() {
        reached += 1;
        for n in neighbors4(c, w, h) {
            if inside[n] {
                inside[n] = false;
                queue.push_back(n);
            }
        }
    }
    reached
}

/// Pixels of a label raster that have a 4-neighbour carrying a different
/// label.
pub fn inner_boundary<L: PartialEq>(labels: &[L], width: usize, height: usize) -> Vec<bool> {
    (0..labels.len())
        .map(|p| neighbors4(p, width, height).any(|q| labels[q] != labels[p]))
        .collect()
}

/// 4-connected components of equal labels: per-pixel component index and
/// per-component `(label, size)`, components numbered in row-major order of
/// their first pixel.
pub(crate) fn components(labels: &[u32], width: usize, height: usize) -> (Vec<u32>, Vec<(u32, usize)>) {
    const UNSET: u32 = u32::MAX;
    let mut comp = vec![UNSET; labels.len()];
    let mut info = Vec::new();
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if comp[start] != UNSET {
            continue;
        }
        let c = info.len() as u32;
        let value = labels[start];
        comp[start] = c;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            for q in neighbors4(p, width, height) {
                if comp[q] == UNSET && labels[q] == value {
                    comp[q] = c;
                    stack.push(q);
                }
            }
        }
        info.push((value, size));
    }
    (comp, info)
}

/// Makes every label 4-connected: each label keeps its largest component
/// and the other components join the neighbouring label they share the most
/// edges with.
pub(crate) fn absorb_fragments(labels: &mut [u32], width: usize, height: usize) {
    for _round in 0..64 {
        let (comp, info) = components(labels, width, height);
        let mut keeper: std::collections::BTreeMap<u32, (usize, u32)> = Default::default();
        for (c, &(label, size)) in info.iter().enumerate() {
            let e = keeper.entry(label).or_insert((size, c as u32));
            if size > e.0 {
                *e = (size, c as u32);
            }
        }
        let fragment = |c: u32| keeper[&info[c as usize].0].1 != c;
        if !(0..info.len() as u32).any(fragment) {
            return;
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); info.len()];
        for (p, &c) in comp.iter().enumerate() {
            if fragment(c) {
                members[c as usize].push(p);
            }
        }
        for (c, pixels) in members.iter().enumerate() {
            if pixels.is_empty() {
                continue;
            }
            let own = labels[pixels[0]];
            let mut votes: std::collections::BTreeMap<u32, usize> = Default::default();
            for &p in pixels {
                for q in neighbors4(p, width, height) {
                    if comp[q] != c as u32 && labels[q] != own {
                        *votes.entry(labels[q]).or_insert(0) += 1;
                    }
                }
            }
            let target = votes
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&l, _)| l);
            if let Some(t) = target {
                for &p in pixels {
                    labels[p] = t;
                }
            }
        }
    }
    // Pathological leftovers become labels of their own.
    let (comp, info) = components(labels, width, height);
    let mut seen = std::collections::BTreeSet::new();
    let mut fresh = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut renamed: std::collections::BTreeMap<u32, u32> = Default::default();
    for p in 0..labels.len() {
        let c = comp[p];
        let label = info[c as usize].0;
        if seen.insert(label) {
            renamed.insert(c, label);
        }
        let l = *renamed.entry(c).or_insert_with(|| {
            fresh += 1;
            fresh - 1
        });
        labels[p] = l;
    }
}
