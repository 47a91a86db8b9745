//! Greedy two-seed region growing to propose a split boundary.
//!
//! Both sides start from a seed pixel and repeatedly absorb the frontier
//! pixel whose assignment changes the side's objective least (Gaussian:
//! within-side sum of squares) or most (VMF: resultant length). Sides only
//! grow through 4-neighbours, so each stays connected.

use std::collections::BTreeSet;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::field::{self, Quat};
use crate::grid::{neighbors4, BoundingBox};
use crate::rng::Rng;
use crate::segmentation::Partition;

/// Pixel values of a region, in the order of its pixel list.
#[derive(Debug, Clone, Copy)]
pub enum GrowValues<'a> {
    Scalar(&'a [f64]),
    /// Symmetry-reduced orientations.
    Quat(&'a [Quat]),
}

impl GrowValues<'_> {
    fn len(&self) -> usize {
        match self {
            GrowValues::Scalar(v) => v.len(),
            GrowValues::Quat(v) => v.len(),
        }
    }

    /// Dissimilarity of two samples, used only for seeding.
    fn distance(&self, i: usize, j: usize) -> f64 {
        match self {
            GrowValues::Scalar(v) => (v[i] - v[j]).abs(),
            GrowValues::Quat(v) => 1.0 - field::dot(&v[i], &v[j]),
        }
    }

    fn distance_to_mean(&self, i: usize) -> f64 {
        match self {
            GrowValues::Scalar(v) => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (v[i] - mean).abs()
            }
            GrowValues::Quat(v) => {
                let mut r = [0.0; 4];
                v.iter().for_each(|x| field::add_assign(&mut r, x));
                let mu = field::normalize(&r).unwrap_or([1.0, 0.0, 0.0, 0.0]);
                1.0 - field::dot(&mu, &v[i])
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SideStats {
    Gaussian { n: f64, mean: f64, sse: f64 },
    Vmf { r: Quat, len: f64 },
}

impl SideStats {
    fn empty(values: &GrowValues) -> Self {
        match values {
            GrowValues::Scalar(_) => SideStats::Gaussian {
                n: 0.0,
                mean: 0.0,
                sse: 0.0,
            },
            GrowValues::Quat(_) => SideStats::Vmf { r: [0.0; 4], len: 0.0 },
        }
    }

    /// Cost of adding sample `i`; lower is better.
    fn cost(&self, values: &GrowValues, i: usize) -> f64 {
        match (self, values) {
            (SideStats::Gaussian { n, mean, .. }, GrowValues::Scalar(v)) => {
                let d = v[i] - mean;
                n / (n + 1.0) * d * d
            }
            (SideStats::Vmf { r, len }, GrowValues::Quat(v)) => {
                let mut next = *r;
                field::add_assign(&mut next, &v[i]);
                len - field::norm(&next)
            }
            _ => unreachable!("side statistics match the value kind"),
        }
    }

    fn push(&mut self, values: &GrowValues, i: usize) {
        match (self, values) {
            (SideStats::Gaussian { n, mean, sse }, GrowValues::Scalar(v)) => {
                let d = v[i] - *mean;
                *sse += *n / (*n + 1.0) * d * d;
                *n += 1.0;
                *mean += d / *n;
            }
            (SideStats::Vmf { r, len }, GrowValues::Quat(v)) => {
                field::add_assign(r, &v[i]);
                *len = field::norm(r);
            }
            _ => unreachable!("side statistics match the value kind"),
        }
    }
}

/// Objective of a two-way assignment, oriented so that lower is better:
/// total within-side sum of squares, or minus the summed resultant lengths.
pub fn partition_objective(values: GrowValues, in_plus: &[bool]) -> f64 {
    let mut sides = [SideStats::empty(&values), SideStats::empty(&values)];
    for (i, &plus) in in_plus.iter().enumerate() {
        sides[usize::from(!plus)].push(&values, i);
    }
    sides
        .iter()
        .map(|s| match s {
            SideStats::Gaussian { sse, .. } => *sse,
            SideStats::Vmf { len, .. } => -len,
        })
        .sum()
}

/// Grows both sides from the given seeds (positions in `pixels`). Returns
/// the plus-side membership per pixel.
pub fn grow_from_seeds(
    pixels: &[usize],
    width: usize,
    height: usize,
    values: GrowValues,
    seeds: (usize, usize),
) -> Vec<bool> {
    debug_assert!(pixels.windows(2).all(|w| w[0] < w[1]));
    let bb = BoundingBox::of(pixels, width).expect("non-empty region");
    let mut slot = vec![usize::MAX; bb.len()];
    for (i, &p) in pixels.iter().enumerate() {
        slot[bb.local(p, width)] = i;
    }
    const FREE: u8 = 0;
    let mut state = vec![FREE; pixels.len()];
    let mut sides = [SideStats::empty(&values), SideStats::empty(&values)];
    let mut frontier: [BTreeSet<usize>; 2] = [BTreeSet::new(), BTreeSet::new()];

    let assign = |i: usize,
                  side: usize,
                  state: &mut Vec<u8>,
                  sides: &mut [SideStats; 2],
                  frontier: &mut [BTreeSet<usize>; 2]| {
        state[i] = side as u8 + 1;
        sides[side].push(&values, i);
        frontier[0].remove(&i);
        frontier[1].remove(&i);
        let local = bb.local(pixels[i], width);
        for q in neighbors4(local, bb.w, bb.h) {
            let j = slot[q];
            if j != usize::MAX && state[j] == FREE {
                frontier[side].insert(j);
            }
        }
    };

    assign(seeds.0, 0, &mut state, &mut sides, &mut frontier);
    assign(seeds.1, 1, &mut state, &mut sides, &mut frontier);
    let _ = height;
    for _ in 2..pixels.len() {
        let mut best: Option<(f64, usize, usize)> = None;
        for side in 0..2 {
            for &i in &frontier[side] {
                let c = sides[side].cost(&values, i);
                let better = match best {
                    None => true,
                    Some((bc, bi, _)) => c < bc || (c == bc && i < bi),
                };
                if better {
                    best = Some((c, i, side));
                }
            }
        }
        let Some((_, i, side)) = best else { break };
        assign(i, side, &mut state, &mut sides, &mut frontier);
    }
    state.iter().map(|&s| s == 1).collect()
}

fn farthest_from(values: &GrowValues, a: usize) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for j in 0..values.len() {
        let d = if j == a { f64::NEG_INFINITY } else { values.distance(a, j) };
        if d > best.0 {
            best = (d, j);
        }
    }
    best.1
}

fn spatially_farthest(pixels: &[usize], width: usize, a: usize) -> usize {
    let (ax, ay) = ((pixels[a] % width) as i64, (pixels[a] / width) as i64);
    let mut best = (-1i64, 0);
    for (j, &p) in pixels.iter().enumerate() {
        let (x, y) = ((p % width) as i64, (p / width) as i64);
        let d = (x - ax).pow(2) + (y - ay).pow(2);
        if d > best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Seed pairs: the two most dissimilar samples first, then random pixels
/// paired with the pixel spatially farthest from them.
fn seed_pairs(pixels: &[usize], width: usize, values: &GrowValues, restarts: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let n = pixels.len();
    let mut a = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let d = values.distance_to_mean(i);
        if d > worst {
            worst = d;
            a = i;
        }
    }
    let mut pairs = vec![(a, farthest_from(values, a))];
    for _ in 1..restarts.max(1) {
        let a = rng.random_range(0..n);
        pairs.push((a, spatially_farthest(pixels, width, a)));
    }
    pairs
        .into_iter()
        .filter(|(a, b)| a != b)
        .collect()
}

/// Best greedy partition over `restarts` seed pairs.
pub fn region_growing_psi(
    pixels: &[usize],
    width: usize,
    height: usize,
    values: GrowValues,
    restarts: usize,
    rng: &mut Rng,
) -> Result<Partition> {
    if pixels.len() < 2 {
        return Err(Error::NoSplit(format!("region of {} pixel(s)", pixels.len())));
    }
    if values.len() != pixels.len() {
        return Err(Error::Dimension(format!(
            "{} values for {} pixels",
            values.len(),
            pixels.len()
        )));
    }
    let mut best: Option<(f64, Vec<bool>)> = None;
    for seeds in seed_pairs(pixels, width, &values, restarts, rng) {
        let in_plus = grow_from_seeds(pixels, width, height, values, seeds);
        let obj = partition_objective(values, &in_plus);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, in_plus));
        }
    }
    let (_, in_plus) = best.ok_or_else(|| Error::NoSplit("no seed pair".into()))?;
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for (i, &p) in pixels.iter().enumerate() {
        if in_plus[i] {
            plus.push(p);
        } else {
            minus.push(p);
        }
    }
    Ok(Partition::new(plus, minus))
}
