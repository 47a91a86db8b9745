//! Intra-modal energy: per-region negative log-likelihood at the fitted
//! parameters plus `ε` times the boundary length.
//!
//! Scalar regions use the Gaussian ML fit. Orientation regions use the
//! symmetry-reduced single-VMF likelihood around a mean found by mixture EM
//! and refined by alternating reduction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{gaussian_mle, GaussianParams};
use super::symmetry::SymmetryGroup;
use super::vmf::{
    kappa_from_rbar, log_cp, reduce_one, refine_reduced_mean, vmf_mixture_em, EmOptions,
    VmfParams, KAPPA_MAX, QUAT_DIM,
};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::field::{self, ImageData, Quat};
use crate::segmentation::{RegionId, Segmentation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RegionFit {
    Gaussian(GaussianParams),
    Vmf { params: VmfParams, log_c: f64 },
}

impl RegionFit {
    fn vmf(params: VmfParams) -> Self {
        let log_c = log_cp(params.kappa, QUAT_DIM).expect("valid kappa");
        RegionFit::Vmf { params, log_c }
    }

    /// Negative log-likelihood of pixel `p` under this fit.
    pub fn pixel_nll(&self, image: &ImageData, p: usize, group: &SymmetryGroup) -> f64 {
        match (self, image) {
            (RegionFit::Gaussian(g), ImageData::Scalar(f)) => g.nll(f.get(p)),
            (RegionFit::Vmf { params, log_c }, ImageData::Quat(f)) => {
                let x = f.get(p);
                let y = reduce_one(&x, &params.mu, group);
                -(log_c + params.kappa * field::dot(&params.mu, &y))
            }
            _ => panic!("region fit does not match the image modality"),
        }
    }

    pub fn vmf_mean(&self) -> Option<Quat> {
        match self {
            RegionFit::Vmf { params, .. } => Some(params.mu),
            _ => None,
        }
    }
}

/// Fits one region. A previous VMF fit passed as `hint` seeds the mean
/// search, which then can only improve on it.
pub fn fit_region(
    image: &ImageData,
    pixels: &[usize],
    group: &SymmetryGroup,
    hint: Option<&RegionFit>,
) -> Result<RegionFit> {
    if pixels.is_empty() {
        return Err(Error::Estimation("empty region".into()));
    }
    match image {
        ImageData::Scalar(f) => {
            let values: Vec<f64> = pixels.iter().map(|&p| f.get(p)).collect();
            Ok(RegionFit::Gaussian(gaussian_mle(&values)?))
        }
        ImageData::Quat(f) => {
            let samples: Vec<Quat> = pixels.iter().map(|&p| f.get(p)).collect();
            if samples.len() == 1 {
                return Ok(RegionFit::vmf(VmfParams {
                    mu: samples[0],
                    kappa: KAPPA_MAX,
                }));
            }
            let start = match hint.and_then(RegionFit::vmf_mean) {
                Some(mu) => mu,
                None => vmf_mixture_em(&samples, group, &EmOptions::default())
                    .map(|fit| fit.params.mu)
                    .unwrap_or(samples[0]),
            };
            let (mu, alignment) = refine_reduced_mean(&samples, &start, group);
            let rbar = (alignment / samples.len() as f64).min(1.0);
            Ok(RegionFit::vmf(VmfParams {
                mu,
                kappa: kappa_from_rbar(rbar, QUAT_DIM),
            }))
        }
    }
}

pub fn region_nll(image: &ImageData, pixels: &[usize], fit: &RegionFit, group: &SymmetryGroup) -> f64 {
    pixels.iter().map(|&p| fit.pixel_nll(image, p, group)).sum()
}

fn check_dims(seg: &Segmentation, image: &ImageData) -> Result<()> {
    if seg.width() != image.width() || seg.height() != image.height() {
        return Err(Error::Dimension(format!(
            "segmentation {}x{} vs image {}x{}",
            seg.width(),
            seg.height(),
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// `J(S, I)` with freshly fitted parameters for every region.
pub fn intra_modal_energy(
    seg: &Segmentation,
    image: &ImageData,
    config: &ModelConfig,
    group: &SymmetryGroup,
) -> Result<f64> {
    check_dims(seg, image)?;
    let terms: Vec<f64> = seg
        .regions()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|r| {
            let fit = fit_region(image, &r.pixels, group, None)?;
            Ok(region_nll(image, &r.pixels, &fit, group) + config.epsilon * r.boundary_length as f64)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedRegion {
    pub fit: RegionFit,
    pub nll: f64,
}

/// Per-region fits and likelihood terms for one modality, kept in sync with
/// a segmentation as it is edited.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyCache {
    entries: BTreeMap<RegionId, CachedRegion>,
}

impl EnergyCache {
    pub fn build(seg: &Segmentation, image: &ImageData, group: &SymmetryGroup) -> Result<Self> {
        check_dims(seg, image)?;
        let mut cache = EnergyCache::default();
        cache.refresh(seg, image, group, seg.region_ids().collect())?;
        Ok(cache)
    }

    /// Refits the listed regions, warm-starting from any cached fit under the
    /// same id, and drops entries for ids no longer present.
    pub fn refresh(
        &mut self,
        seg: &Segmentation,
        image: &ImageData,
        group: &SymmetryGroup,
        ids: Vec<RegionId>,
    ) -> Result<()> {
        let updated: Vec<(RegionId, CachedRegion)> = ids
            .par_iter()
            .map(|&id| {
                let region = seg.region(id)?;
                let hint = self.entries.get(&id).map(|c| c.fit);
                let fit = fit_region(image, &region.pixels, group, hint.as_ref())?;
                let nll = region_nll(image, &region.pixels, &fit, group);
                Ok((id, CachedRegion { fit, nll }))
            })
            .collect::<Result<_>>()?;
        for (id, entry) in updated {
            self.entries.insert(id, entry);
        }
        self.entries.retain(|id, _| seg.contains(*id));
        Ok(())
    }

    pub fn insert(&mut self, id: RegionId, entry: CachedRegion) {
        self.entries.insert(id, entry);
    }

    pub fn remove(&mut self, id: RegionId) -> Option<CachedRegion> {
        self.entries.remove(&id)
    }

    pub fn get(&self, id: RegionId) -> Option<&CachedRegion> {
        self.entries.get(&id)
    }

    pub fn nll_total(&self) -> f64 {
        self.entries.values().map(|e| e.nll).sum()
    }

    /// `J` from the cached likelihood terms and the segmentation's current
    /// boundary lengths.
    pub fn intra_energy(&self, seg: &Segmentation, epsilon: f64) -> f64 {
        self.nll_total() + epsilon * seg.total_boundary_length() as f64
    }
}
