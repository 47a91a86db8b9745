//! Registration: affine pre-alignment, label mapping, region competition and
//! the alternating minimisation driver.

mod affine;
mod alternate;
mod competition;
mod mapping;

pub use affine::{estimate_affine, AffineTransform};
pub use alternate::{alternate_minimize, Coregistration, EnergyRecord, EnergyTrace, SplitEvent};
pub use competition::{align_boundaries, align_with_cache, AlignReport};
pub use mapping::{map_segmentation, map_with_correspondence};
