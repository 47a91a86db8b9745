//! Two-stage test for missing boundaries: a likelihood-ratio test on the
//! best split found by region growing, followed by a size-ratio test that
//! tells a real missing boundary from a misaligned one.

mod glr;
mod growing;
mod misalign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ImageData, Quat};
use crate::rng::Rng;
use crate::segmentation::{equivalent_radius, Partition, RegionId, Segmentation};
use crate::stats::{symmetry_reduce, vmf_mixture_em, EmOptions, ModelConfig, SymmetryGroup};

pub use glr::{glr_gaussian, glr_vmf};
pub use growing::{grow_from_seeds, partition_objective, region_growing_psi, GrowValues};
pub use misalign::{f_r, f_r_inv, misalignment_threshold, DisplacementModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// No evidence for two populations.
    Keep,
    /// Two populations, but the smaller one is a sliver explained by
    /// boundary misalignment.
    Realign,
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitVerdict {
    pub region: RegionId,
    pub log_glr: f64,
    pub psi: Partition,
    /// `min(|R₊|, |R₋|) / |R|`.
    pub size_ratio: f64,
    pub threshold_eta: f64,
    /// Value `log_glr` had to exceed.
    pub glr_threshold: f64,
    pub decision: Decision,
}

/// Number of 4-adjacent pixel pairs with one pixel on each side of `psi`.
pub fn cut_length(psi: &Partition, width: usize, height: usize) -> usize {
    let plus: std::collections::HashSet<usize> = psi.plus.iter().copied().collect();
    psi.minus
        .iter()
        .map(|&p| crate::grid::neighbors4(p, width, height).filter(|q| plus.contains(q)).count())
        .sum()
}

/// Runs region growing and both tests on one region.
///
/// For orientation images the samples are first reduced around the
/// symmetric-mixture mean of the whole region. With
/// `glrt_boundary_penalty` set, the likelihood ratio must additionally pay
/// for the boundary the split would add, `ε` per exposed side.
pub fn test_region_split(
    seg: &Segmentation,
    region: RegionId,
    image: &ImageData,
    config: &ModelConfig,
    group: &SymmetryGroup,
    rng: &mut Rng,
) -> Result<SplitVerdict> {
    if seg.width() != image.width() || seg.height() != image.height() {
        return Err(Error::Dimension("segmentation and image differ in size".into()));
    }
    let r = seg.region(region)?;
    let (w, h) = (seg.width(), seg.height());
    let (psi, log_glr) = match image {
        ImageData::Scalar(f) => {
            let values: Vec<f64> = r.pixels.iter().map(|&p| f.get(p)).collect();
            let psi = region_growing_psi(&r.pixels, w, h, GrowValues::Scalar(&values), config.growing_restarts, rng)?;
            let plus: Vec<f64> = psi.plus.iter().map(|&p| f.get(p)).collect();
            let minus: Vec<f64> = psi.minus.iter().map(|&p| f.get(p)).collect();
            let g = glr_gaussian(&plus, &minus)?;
            (psi, g)
        }
        ImageData::Quat(f) => {
            let samples: Vec<Quat> = r.pixels.iter().map(|&p| f.get(p)).collect();
            if samples.len() < 2 {
                return Err(Error::NoSplit(format!("region {region} has one pixel")));
            }
            let mean = vmf_mixture_em(&samples, group, &EmOptions::default())?.params.mu;
            let reduced = symmetry_reduce(&samples, &mean, group);
            let psi = region_growing_psi(&r.pixels, w, h, GrowValues::Quat(&reduced), config.growing_restarts, rng)?;
            let lookup = |side: &[usize]| -> Vec<Quat> {
                side.iter()
                    .map(|p| reduced[r.pixels.binary_search(p).expect("pixel of region")])
                    .collect()
            };
            let g = glr_vmf(&lookup(&psi.plus), &lookup(&psi.minus))?;
            (psi, g)
        }
    };
    let mut glr_threshold = config.lambda;
    if config.glrt_boundary_penalty {
        glr_threshold += config.epsilon * 2.0 * cut_length(&psi, w, h) as f64;
    }
    let size_ratio = psi.size_ratio();
    let eta = misalignment_threshold(
        equivalent_radius(r.pixels.len()),
        &DisplacementModel::new(config.sigma_d)?,
        config.alpha,
    )?;
    let decision = if log_glr <= glr_threshold {
        Decision::Keep
    } else if size_ratio <= eta {
        Decision::Realign
    } else {
        Decision::Split
    };
    Ok(SplitVerdict {
        region,
        log_glr,
        psi,
        size_ratio,
        threshold_eta: eta,
        glr_threshold,
        decision,
    })
}
