//! Pixel-value models and the intra-modal energy.

mod bessel;
mod config;
mod energy;
mod gaussian;
mod symmetry;
mod vmf;

pub use bessel::{bessel_ratio, log_bessel_i};
pub use config::ModelConfig;
pub use energy::{fit_region, intra_modal_energy, region_nll, CachedRegion, EnergyCache, RegionFit};
pub use gaussian::{gaussian_mle, gaussian_nll_at_mle, GaussianParams, VARIANCE_FLOOR};
pub use symmetry::{Mat4, SymmetryGroup};
pub use vmf::{
    a_p, ap_inv, kappa_from_rbar, log_cp, mixture_log_likelihood, reduce_one, reduced_alignment,
    refine_reduced_mean, sample_uniform_quat, sample_vmf, symmetry_reduce, vmf_logpdf,
    vmf_mixture_em, vmf_mixture_logpdf, EmFit, EmOptions, VmfParams, KAPPA_MAX, QUAT_DIM,
};
