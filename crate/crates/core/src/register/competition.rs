//! Discrete region competition.
//!
//! Boundary pixels change hands between adjacent regions when that lowers
//! `J` under the current region parameters. Moves never disconnect a region,
//! never delete one, and never create or remove an adjacency, so the region
//! graph (and with it the inter-modal term) is left alone. A sweep tries
//! single pixels in raster order, then whole runs of interface pixels, which
//! lets straight boundaries shift even when a lone pixel would have to pay
//! for a bump. Parameters are re-estimated after each sweep.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field::ImageData;
use crate::grid::neighbors4;
use crate::segmentation::{ordered, RegionId, Segmentation};
use crate::stats::{EnergyCache, ModelConfig, RegionFit, SymmetryGroup};

/// Moves below this energy change are not worth taking.
const MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignReport {
    pub sweeps: usize,
    pub pixel_moves: usize,
    pub run_moves: usize,
}

struct Board<'a> {
    w: usize,
    h: usize,
    labels: Vec<RegionId>,
    sizes: BTreeMap<RegionId, usize>,
    adjacency: BTreeMap<(RegionId, RegionId), usize>,
    fits: BTreeMap<RegionId, RegionFit>,
    image: &'a ImageData,
    group: &'a SymmetryGroup,
    epsilon: f64,
    stamp: Vec<u32>,
    epoch: u32,
    moved: BTreeSet<RegionId>,
}

impl Board<'_> {
    fn nll(&self, p: usize, region: RegionId) -> f64 {
        self.fits[&region].pixel_nll(self.image, p, self.group)
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Energy change and adjacency change of relabelling `set` (all
    /// currently `from`) to `to`. `inside` tells membership in `set`.
    fn evaluate(
        &self,
        set: &[usize],
        inside: &dyn Fn(usize) -> bool,
        from: RegionId,
        to: RegionId,
    ) -> (f64, BTreeMap<(RegionId, RegionId), i64>) {
        let mut nll = 0.0;
        let mut exposed = 0i64;
        let mut pairs: BTreeMap<(RegionId, RegionId), i64> = BTreeMap::new();
        for &p in set {
            nll += self.nll(p, to) - self.nll(p, from);
            for q in neighbors4(p, self.w, self.h) {
                if inside(q) {
                    continue;
                }
                let other = self.labels[q];
                exposed += i64::from(other != to) - i64::from(other != from);
                if other != from {
                    *pairs.entry(ordered(from, other)).or_insert(0) -= 1;
                }
                if other != to {
                    *pairs.entry(ordered(to, other)).or_insert(0) += 1;
                }
            }
        }
        (nll + self.epsilon * 2.0 * exposed as f64, pairs)
    }

    fn topology_kept(&self, pairs: &BTreeMap<(RegionId, RegionId), i64>) -> bool {
        pairs.iter().all(|(key, &delta)| {
            let before = self.adjacency.get(key).copied().unwrap_or(0) as i64;
            let after = before + delta;
            (before == 0) == (after == 0)
        })
    }

    fn apply(&mut self, set: &[usize], from: RegionId, to: RegionId, pairs: BTreeMap<(RegionId, RegionId), i64>) {
        for &p in set {
            self.labels[p] = to;
        }
        *self.sizes.get_mut(&from).expect("known region") -= set.len();
        *self.sizes.get_mut(&to).expect("known region") += set.len();
        for (key, delta) in pairs {
            let entry = self.adjacency.entry(key).or_insert(0);
            *entry = (*entry as i64 + delta) as usize;
            if *entry == 0 {
                self.adjacency.remove(&key);
            }
        }
        self.moved.insert(from);
        self.moved.insert(to);
    }

    /// Whether removing `p` keeps its region connected, judged on the 3×3
    /// neighbourhood: the region's 4-neighbours of `p` must be linked
    /// through the region's pixels on the surrounding ring.
    fn is_simple(&self, p: usize) -> bool {
        let region = self.labels[p];
        let (x, y) = ((p % self.w) as i64, (p / self.w) as i64);
        // ring in cyclic order starting north-west
        const RING: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];
        let member = |dx: i64, dy: i64| {
            let (u, v) = (x + dx, y + dy);
            u >= 0
                && v >= 0
                && (u as usize) < self.w
                && (v as usize) < self.h
                && self.labels[v as usize * self.w + u as usize] == region
        };
        let inside: Vec<bool> = RING.iter().map(|&(dx, dy)| member(dx, dy)).collect();
        // 4-neighbours sit at odd ring positions. Runs of consecutive ring
        // members are connected; a run joins orthogonal neighbours only if
        // it contains one. Diagonal members touch only adjacent positions,
        // which on the ring are consecutive, so runs capture connectivity.
        let orth = [1, 3, 5, 7];
        let count = orth.iter().filter(|&&i| inside[i]).count();
        if count <= 1 {
            return count == 1;
        }
        let mut runs_with_orth = 0;
        let start = (0..8).find(|&i| !inside[i]);
        let Some(start) = start else {
            return true;
        };
        let mut i = (start + 1) % 8;
        let mut in_run = false;
        let mut run_has_orth = false;
        for _ in 0..8 {
            if inside[i] {
                if !in_run {
                    in_run = true;
                    run_has_orth = false;
                }
                if i % 2 == 1 {
                    run_has_orth = true;
                }
            } else if in_run {
                in_run = false;
                runs_with_orth += usize::from(run_has_orth);
            }
            i = (i + 1) % 8;
        }
        if in_run {
            runs_with_orth += usize::from(run_has_orth);
        }
        runs_with_orth == 1
    }

    fn pixel_phase(&mut self) -> usize {
        let mut moves = 0;
        for p in 0..self.labels.len() {
            let from = self.labels[p];
            if self.sizes[&from] <= 1 {
                continue;
            }
            let mut targets: Vec<RegionId> = neighbors4(p, self.w, self.h)
                .map(|q| self.labels[q])
                .filter(|&l| l != from)
                .collect();
            if targets.is_empty() {
                continue;
            }
            targets.sort_unstable();
            targets.dedup();
            if !self.is_simple(p) {
                continue;
            }
            let mut options: Vec<(f64, RegionId, BTreeMap<_, _>)> = targets
                .into_iter()
                .map(|to| {
                    let (dj, pairs) = self.evaluate(&[p], &|q| q == p, from, to);
                    (dj, to, pairs)
                })
                .filter(|(dj, _, _)| *dj < -MIN_GAIN)
                .collect();
            options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, to, pairs)) = options.into_iter().find(|(_, _, pairs)| self.topology_kept(pairs)) {
                self.apply(&[p], from, to, pairs);
                moves += 1;
            }
        }
        moves
    }

    /// 8-connected components of a pixel set, each sorted.
    fn components8(&mut self, pixels: &[usize]) -> Vec<Vec<usize>> {
        let set: BTreeSet<usize> = pixels.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &s in &set {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(p) = stack.pop() {
                let (x, y) = ((p % self.w) as i64, (p / self.w) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (u, v) = (x + dx, y + dy);
                        if u < 0 || v < 0 || u as usize >= self.w || v as usize >= self.h {
                            continue;
                        }
                        let q = v as usize * self.w + u as usize;
                        if set.contains(&q) && seen.insert(q) {
                            comp.push(q);
                            stack.push(q);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Whether `region` minus `removed` is still 4-connected.
    fn remains_connected(&mut self, region: RegionId, removed: &[usize]) -> bool {
        let remaining = self.sizes[&region] - removed.len();
        if remaining == 0 {
            return false;
        }
        let epoch = self.next_epoch();
        for &p in removed {
            self.stamp[p] = epoch;
        }
        let start = removed
            .iter()
            .flat_map(|&p| neighbors4(p, self.w, self.h))
            .find(|&q| self.labels[q] == region && self.stamp[q] != epoch);
        let Some(start) = start else {
            return false;
        };
        let visit = self.next_epoch();
        // removed pixels keep the old epoch, distinct from `visit`
        let mut stack = vec![start];
        self.stamp[start] = visit;
        let mut reached = 0;
        while let Some(p) = stack.pop() {
            reached += 1;
            for q in neighbors4(p, self.w, self.h) {
                if self.labels[q] == region && self.stamp[q] != visit && self.stamp[q] != epoch {
                    self.stamp[q] = visit;
                    stack.push(q);
                }
            }
        }
        reached == remaining
    }

    fn try_run(&mut self, run: Vec<usize>, from: RegionId, to: RegionId) -> bool {
        let run: Vec<usize> = run
            .into_iter()
            .filter(|&p| {
                self.labels[p] == from && neighbors4(p, self.w, self.h).any(|q| self.labels[q] == to)
            })
            .collect();
        if run.is_empty() || run.len() >= self.sizes[&from] {
            return false;
        }
        let members: BTreeSet<usize> = run.iter().copied().collect();
        let (dj, pairs) = self.evaluate(&run, &|q| members.contains(&q), from, to);
        if dj >= -MIN_GAIN || !self.topology_kept(&pairs) {
            return false;
        }
        if !self.remains_connected(from, &run) {
            return false;
        }
        self.apply(&run, from, to, pairs);
        true
    }

    fn run_phase(&mut self) -> usize {
        let mut interfaces: BTreeMap<(RegionId, RegionId), Vec<usize>> = BTreeMap::new();
        for p in 0..self.labels.len() {
            let from = self.labels[p];
            let mut seen: Vec<RegionId> = Vec::with_capacity(4);
            for q in neighbors4(p, self.w, self.h) {
                let to = self.labels[q];
                if to != from && !seen.contains(&to) {
                    seen.push(to);
                    interfaces.entry((from, to)).or_default().push(p);
                }
            }
        }
        let mut moves = 0;
        for ((from, to), pixels) in interfaces {
            let favoured: Vec<usize> = pixels
                .iter()
                .copied()
                .filter(|&p| self.labels[p] == from && self.nll(p, to) < self.nll(p, from))
                .collect();
            for run in self.components8(&favoured) {
                moves += usize::from(self.try_run(run, from, to));
            }
            let layer: Vec<usize> = pixels.into_iter().filter(|&p| self.labels[p] == from).collect();
            for run in self.components8(&layer) {
                moves += usize::from(self.try_run(run, from, to));
            }
        }
        moves
    }
}

/// Competition driven by an existing cache, which is kept in sync (fits are
/// re-estimated for every region that changed).
pub fn align_with_cache(
    seg: &Segmentation,
    image: &ImageData,
    config: &ModelConfig,
    group: &SymmetryGroup,
    cache: &mut EnergyCache,
) -> Result<(Segmentation, AlignReport)> {
    if seg.width() != image.width() || seg.height() != image.height() {
        return Err(Error::Dimension("segmentation and image differ in size".into()));
    }
    let mut fits = BTreeMap::new();
    for id in seg.region_ids() {
        let entry = cache.get(id).ok_or(Error::UnknownRegion(id))?;
        fits.insert(id, entry.fit);
    }
    let mut board = Board {
        w: seg.width(),
        h: seg.height(),
        labels: seg.labels().to_vec(),
        sizes: seg.regions().map(|r| (r.id, r.pixels.len())).collect(),
        adjacency: seg.adjacency().clone(),
        fits,
        image,
        group,
        epsilon: config.epsilon,
        stamp: vec![0; seg.labels().len()],
        epoch: 0,
        moved: BTreeSet::new(),
    };
    let mut report = AlignReport::default();
    let mut current = seg.clone();
    for _ in 0..config.max_sweeps {
        report.sweeps += 1;
        let pixel_moves = board.pixel_phase();
        let run_moves = board.run_phase();
        report.pixel_moves += pixel_moves;
        report.run_moves += run_moves;
        if pixel_moves + run_moves == 0 {
            break;
        }
        current = current.with_labels(board.labels.clone());
        let changed: Vec<RegionId> = std::mem::take(&mut board.moved).into_iter().collect();
        cache.refresh(&current, image, group, changed.clone())?;
        for id in changed {
            board.fits.insert(id, cache.get(id).expect("refreshed").fit);
        }
    }
    Ok((current, report))
}

/// Runs region competition on `seg` with freshly estimated parameters.
pub fn align_boundaries(
    seg: &Segmentation,
    image: &ImageData,
    config: &ModelConfig,
    group: &SymmetryGroup,
) -> Result<Segmentation> {
    let mut cache = EnergyCache::build(seg, image, group)?;
    align_with_cache(seg, image, config, group, &mut cache).map(|(s, _)| s)
}
