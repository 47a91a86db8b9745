//! Synthetic microstructures and the corruption protocol.
//!
//! Ground truth is a Lloyd-relaxed Voronoi tessellation. The initial
//! segmentation handed to the registration is the truth with some grains
//! displaced by Gaussian offsets and some adjacent pairs merged, which
//! plants boundaries that only the images can reveal. Pixel values are
//! drawn per grain: Gaussian intensities and symmetric-VMF orientations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Quat, QuatField, ScalarField};
use crate::grid;
use crate::rng::{self, Rng};
use crate::segmentation::{build_regions, RegionId, Segmentation};
use crate::stats::{sample_uniform_quat, sample_vmf, SymmetryGroup, VmfParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub n_grains: usize,
    pub lloyd_steps: usize,
    /// Fraction of grains (outside merged pairs) that are displaced.
    pub displaced_fraction: f64,
    /// Per-axis standard deviation of grain displacements, pixels.
    pub sigma_d: f64,
    /// Number of adjacent grain pairs merged in the initial segmentation.
    pub merge_pairs: usize,
    /// Merged grains get intensity means at least this many (larger)
    /// standard deviations apart.
    pub min_merge_separation: f64,
    pub mean_range: [f64; 2],
    /// Range of the per-grain intensity standard deviation.
    pub sigma_range: [f64; 2],
    pub kappa_range: [f64; 2],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 256,
            height: 256,
            n_grains: 100,
            lloyd_steps: 2,
            displaced_fraction: 0.25,
            sigma_d: 3.0,
            merge_pairs: 3,
            min_merge_separation: 4.0,
            mean_range: [0.0, 255.0],
            sigma_range: [2.0, 10.0],
            kappa_range: [20.0, 100.0],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if self.n_grains < 2 || self.n_grains > self.width * self.height {
            return Err(Error::Config(format!("n_grains = {} out of range", self.n_grains)));
        }
        if self.merge_pairs >= self.n_grains {
            return Err(Error::Config("merge_pairs must be below n_grains".into()));
        }
        if !(0.0..=1.0).contains(&self.displaced_fraction) {
            return Err(Error::Config("displaced_fraction must lie in [0, 1]".into()));
        }
        if !(self.sigma_d >= 0.0) || !self.sigma_d.is_finite() {
            return Err(Error::Config("sigma_d must be >= 0".into()));
        }
        if !range_ok(self.mean_range) || !range_ok(self.sigma_range) || !range_ok(self.kappa_range) {
            return Err(Error::Config("ranges must be finite with low <= high".into()));
        }
        if self.sigma_range[0] < 0.0 || self.kappa_range[0] < 0.0 {
            return Err(Error::Config("spread ranges must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn nearest_seed(x: f64, y: f64, seeds: &[[f64; 2]]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, s) in seeds.iter().enumerate() {
        let d = (x - s[0]).powi(2) + (y - s[1]).powi(2);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn voronoi(width: usize, height: usize, seeds: &[[f64; 2]]) -> Vec<u32> {
    (0..width * height)
        .map(|p| nearest_seed((p % width) as f64, (p / width) as f64, seeds) as u32)
        .collect()
}

/// Lloyd-relaxed Voronoi tessellation with ids in row-major first-pixel
/// order.
pub fn generate_ground_truth(config: &SynthConfig, rng: &mut Rng) -> Result<Segmentation> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let mut seeds: Vec<[f64; 2]> = (0..config.n_grains)
        .map(|_| [rng.random::<f64>() * w as f64, rng.random::<f64>() * h as f64])
        .collect();
    for _ in 0..config.lloyd_steps {
        let labels = voronoi(w, h, &seeds);
        let mut sums = vec![[0.0f64; 3]; seeds.len()];
        for (p, &l) in labels.iter().enumerate() {
            let s = &mut sums[l as usize];
            s[0] += (p % w) as f64;
            s[1] += (p / w) as f64;
            s[2] += 1.0;
        }
        for (seed, s) in seeds.iter_mut().zip(&sums) {
            if s[2] > 0.0 {
                *seed = [s[0] / s[2], s[1] / s[2]];
            }
        }
    }
    let mut labels = voronoi(w, h, &seeds);
    grid::absorb_fragments(&mut labels, w, h);
    build_regions(w, h, &labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub grain: RegionId,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBoundary {
    pub grains: [RegionId; 2],
    /// Truth pixels of either grain that touch the other one.
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Corruption {
    pub segmentation: Segmentation,
    pub displaced: Vec<Displacement>,
    pub planted: Vec<PlantedBoundary>,
}

/// Disjoint adjacent pairs with the longest shared boundaries.
fn choose_merge_pairs(truth: &Segmentation, count: usize) -> Vec<[RegionId; 2]> {
    let mut pairs: Vec<(usize, RegionId, RegionId)> = truth
        .adjacency()
        .iter()
        .map(|(&(a, b), &n)| (n, a, b))
        .collect();
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = BTreeSet::new();
    let mut chosen = Vec::new();
    for (_, a, b) in pairs {
        if chosen.len() == count {
            break;
        }
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a);
        used.insert(b);
        chosen.push([a, b]);
    }
    chosen
}

const VACANT: u32 = u32::MAX;

/// Fills vacant pixels with the label of the nearest labelled pixel
/// (Euclidean; ties go to the lowest pixel index).
fn fill_nearest(labels: &mut [u32], width: usize, height: usize) {
    let vacant: Vec<usize> = (0..labels.len()).filter(|&p| labels[p] == VACANT).collect();
    if vacant.len() == labels.len() {
        return;
    }
    let source = labels.to_vec();
    for p in vacant {
        let (x, y) = ((p % width) as i64, (p / width) as i64);
        let mut best: Option<(i64, usize)> = None;
        let mut radius = 1i64;
        loop {
            for v in (y - radius).max(0)..=(y + radius).min(height as i64 - 1) {
                for u in (x - radius).max(0)..=(x + radius).min(width as i64 - 1) {
                    let q = v as usize * width + u as usize;
                    if source[q] == VACANT {
                        continue;
                    }
                    let d = (u - x).pow(2) + (v - y).pow(2);
                    if best.is_none_or(|(bd, bq)| d < bd || (d == bd && q < bq)) {
                        best = Some((d, q));
                    }
                }
            }
            // Once found at distance² d, anything closer lies within sqrt(d).
            if let Some((d, _)) = best {
                if radius * radius >= d {
                    break;
                }
            }
            radius += 1;
        }
        labels[p] = source[best.expect("some pixel is labelled").1];
    }
}

/// Applies displacement and merging to the truth. The returned
/// segmentation keeps truth ids; a merged pair keeps the smaller id.
pub fn corrupt_segmentation(truth: &Segmentation, config: &SynthConfig, rng: &mut Rng) -> Result<Corruption> {
    config.validate()?;
    let (w, h) = (truth.width(), truth.height());
    let merged = choose_merge_pairs(truth, config.merge_pairs);
    let in_pair: BTreeSet<RegionId> = merged.iter().flatten().copied().collect();
    let eligible: Vec<RegionId> = truth.region_ids().filter(|id| !in_pair.contains(id)).collect();
    let count = ((config.displaced_fraction * truth.region_count() as f64).round() as usize).min(eligible.len());
    let mut picked: Vec<usize> = index::sample(rng, eligible.len(), count).into_vec();
    picked.sort_unstable();
    let normal = Normal::new(0.0, config.sigma_d).map_err(|e| Error::Config(e.to_string()))?;
    let displaced: Vec<Displacement> = picked
        .into_iter()
        .map(|i| Displacement {
            grain: eligible[i],
            dx: normal.sample(rng),
            dy: normal.sample(rng),
        })
        .collect();

    let mut labels: Vec<u32> = truth.label_values();
    for d in &displaced {
        for &p in &truth.region(d.grain)?.pixels {
            labels[p] = VACANT;
        }
    }
    for d in &displaced {
        let (ox, oy) = (d.dx.round() as i64, d.dy.round() as i64);
        for &p in &truth.region(d.grain)?.pixels {
            let (x, y) = ((p % w) as i64 + ox, (p / w) as i64 + oy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                labels[y as usize * w + x as usize] = d.grain.0;
            }
        }
    }
    // Keep each label's largest piece, then fill the holes.
    let (comp, info) = grid::components(&labels, w, h);
    let mut keep: BTreeMap<u32, (usize, u32)> = BTreeMap::new();
    for (c, &(label, size)) in info.iter().enumerate() {
        if label == VACANT {
            continue;
        }
        let e = keep.entry(label).or_insert((size, c as u32));
        if size > e.0 {
            *e = (size, c as u32);
        }
    }
    for p in 0..labels.len() {
        let label = labels[p];
        if label != VACANT && keep[&label].1 != comp[p] {
            labels[p] = VACANT;
        }
    }
    fill_nearest(&mut labels, w, h);
    grid::absorb_fragments(&mut labels, w, h);

    for &[a, b] in &merged {
        for l in labels.iter_mut() {
            if *l == b.0 {
                *l = a.0;
            }
        }
    }
    grid::absorb_fragments(&mut labels, w, h);
    let segmentation = Segmentation::from_ids(w, h, labels.into_iter().map(RegionId).collect())?;

    let planted = merged
        .iter()
        .map(|&[a, b]| {
            let mut pixels = truth.pixels_facing(a, b);
            pixels.extend(truth.pixels_facing(b, a));
            pixels.sort_unstable();
            PlantedBoundary { grains: [a, b], pixels }
        })
        .collect();
    Ok(Corruption {
        segmentation,
        displaced,
        planted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrainParams {
    pub grain: RegionId,
    pub mean: f64,
    pub sigma: f64,
    pub orientation: Quat,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct SampledImages {
    pub scalar: ScalarField,
    pub quat: QuatField,
    pub grains: Vec<GrainParams>,
}

fn uniform(rng: &mut Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// Draws per-grain parameters and fills both images. Grain pairs listed in
/// `separated` get intensity means at least
/// `min_merge_separation × max(σ_a, σ_b)` apart.
pub fn sample_images(
    truth: &Segmentation,
    config: &SynthConfig,
    group: &SymmetryGroup,
    separated: &[[RegionId; 2]],
    rng: &mut Rng,
) -> Result<SampledImages> {
    config.validate()?;
    let mut params: BTreeMap<RegionId, GrainParams> = BTreeMap::new();
    for id in truth.region_ids() {
        let mean = uniform(rng, config.mean_range);
        let sigma = uniform(rng, config.sigma_range);
        let orientation = sample_uniform_quat(rng);
        let kappa = uniform(rng, config.kappa_range);
        params.insert(
            id,
            GrainParams {
                grain: id,
                mean,
                sigma,
                orientation,
                kappa,
            },
        );
    }
    for &[a, b] in separated {
        let (pa, pb) = (params[&a], params[&b]);
        let need = config.min_merge_separation * pa.sigma.max(pb.sigma);
        let mut mean = pb.mean;
        let mut tries = 0;
        while (mean - pa.mean).abs() < need {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Config(format!(
                    "mean range too narrow to separate grains {a} and {b} by {need}"
                )));
            }
            mean = uniform(rng, config.mean_range);
        }
        params.get_mut(&b).expect("known grain").mean = mean;
    }

    let n = truth.width() * truth.height();
    let mut scalar = vec![0.0; n];
    let mut quat = vec![[1.0, 0.0, 0.0, 0.0]; n];
    for region in truth.regions() {
        let g = params[&region.id];
        let normal = Normal::new(g.mean, g.sigma).map_err(|e| Error::Config(e.to_string()))?;
        let vmf = VmfParams::new(g.orientation, g.kappa)?;
        let mut grain_rng = rng::stream(rng.random(), &[u64::from(region.id.0)]);
        for &p in &region.pixels {
            scalar[p] = normal.sample(&mut grain_rng);
            let x = sample_vmf(&vmf, &mut grain_rng);
            let m = grain_rng.random_range(0..group.len());
            let y = group.apply(m, &x);
            quat[p] = if grain_rng.random::<bool>() { y } else { [-y[0], -y[1], -y[2], -y[3]] };
        }
    }
    Ok(SampledImages {
        scalar: ScalarField::new(truth.width(), truth.height(), scalar)?,
        quat: QuatField::new(truth.width(), truth.height(), quat)?,
        grains: params.into_values().collect(),
    })
}

/// Ground-truth record written next to a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: SynthConfig,
    pub grains: Vec<GrainParams>,
    pub displaced: Vec<Displacement>,
    pub planted: Vec<PlantedBoundary>,
}

#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub truth: Segmentation,
    /// Initial segmentation of the orientation image.
    pub initial: Segmentation,
    pub images: SampledImages,
    pub sidecar: Sidecar,
}

/// Truth, corruption and images from independent streams of one seed.
pub fn generate_instance(config: &SynthConfig, group: &SymmetryGroup) -> Result<SynthInstance> {
    let truth = generate_ground_truth(config, &mut rng::stream(config.seed, &[1]))?;
    let corruption = corrupt_segmentation(&truth, config, &mut rng::stream(config.seed, &[2]))?;
    let pairs: Vec<[RegionId; 2]> = corruption.planted.iter().map(|p| p.grains).collect();
    let images = sample_images(&truth, config, group, &pairs, &mut rng::stream(config.seed, &[3]))?;
    let sidecar = Sidecar {
        config: config.clone(),
        grains: images.grains.clone(),
        displaced: corruption.displaced,
        planted: corruption.planted,
    };
    Ok(SynthInstance {
        truth,
        initial: corruption.segmentation,
        images,
        sidecar,
    })
}

/// Pixels of `seg` on the boundary between `a` and `b`.
pub fn boundary_between(seg: &Segmentation, a: RegionId, b: RegionId) -> Vec<usize> {
    let mut pixels: Vec<usize> = seg
        .pixels_facing(a, b)
        .into_iter()
        .chain(seg.pixels_facing(b, a))
        .collect();
    pixels.sort_unstable();
    pixels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::neighbors4;

    fn touches(seg: &Segmentation, p: usize, other: RegionId) -> bool {
        neighbors4(p, seg.width(), seg.height()).any(|q| seg.label(q) == other)
    }

    fn small(n: usize) -> SynthConfig {
        SynthConfig {
            width: 48,
            height: 48,
            n_grains: n,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn two_seeds_give_two_regions() {
        let cfg = SynthConfig {
            width: 8,
            height: 8,
            n_grains: 2,
            merge_pairs: 0,
            ..SynthConfig::default()
        };
        let truth = generate_ground_truth(&cfg, &mut rng::stream(3, &[])).unwrap();
        assert_eq!(truth.region_count(), 2);
        assert_eq!(truth.regions().map(|r| r.pixels.len()).sum::<usize>(), 64);
    }

    #[test]
    fn identity_corruption() {
        let cfg = SynthConfig {
            displaced_fraction: 0.0,
            merge_pairs: 0,
            ..small(12)
        };
        let truth = generate_ground_truth(&cfg, &mut rng::stream(1, &[])).unwrap();
        let c = corrupt_segmentation(&truth, &cfg, &mut rng::stream(2, &[])).unwrap();
        assert_eq!(c.segmentation.labels(), truth.labels());
        assert!(c.planted.is_empty() && c.displaced.is_empty());
    }

    #[test]
    fn one_merge_removes_one_region_and_plants_a_boundary() {
        let cfg = SynthConfig {
            displaced_fraction: 0.0,
            merge_pairs: 1,
            ..small(12)
        };
        let truth = generate_ground_truth(&cfg, &mut rng::stream(1, &[])).unwrap();
        let c = corrupt_segmentation(&truth, &cfg, &mut rng::stream(2, &[])).unwrap();
        assert_eq!(c.segmentation.region_count(), truth.region_count() - 1);
        assert_eq!(c.planted.len(), 1);
        assert!(!c.planted[0].pixels.is_empty());
        let [a, b] = c.planted[0].grains;
        assert_eq!(c.planted[0].pixels, boundary_between(&truth, a, b));
        assert!(c.planted[0].pixels.iter().all(|&p| touches(&truth, p, a) || touches(&truth, p, b)));
    }

    #[test]
    fn zero_spread_gives_constant_grains() {
        let cfg = SynthConfig {
            sigma_range: [0.0, 0.0],
            ..small(6)
        };
        let truth = generate_ground_truth(&cfg, &mut rng::stream(1, &[])).unwrap();
        let imgs = sample_images(&truth, &cfg, &SymmetryGroup::cubic(), &[], &mut rng::stream(5, &[])).unwrap();
        for r in truth.regions() {
            let v0 = imgs.scalar.get(r.pixels[0]);
            assert!(r.pixels.iter().all(|&p| imgs.scalar.get(p) == v0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small(10);
        let a = generate_instance(&cfg, &SymmetryGroup::cubic()).unwrap();
        let b = generate_instance(&cfg, &SymmetryGroup::cubic()).unwrap();
        assert_eq!(a.truth.labels(), b.truth.labels());
        assert_eq!(a.initial.labels(), b.initial.labels());
        assert_eq!(a.images.scalar, b.images.scalar);
        assert_eq!(a.sidecar, b.sidecar);
    }
}
