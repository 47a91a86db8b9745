//! Joint segmentation and registration of two images of the same sample
//! taken with different modalities: a scalar intensity image and a
//! crystal-orientation (unit quaternion) image.

pub mod correspondence;
pub mod error;
pub mod eval;
pub mod field;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod register;
pub mod render;
pub mod rng;
pub mod segmentation;
pub mod split;
pub mod stats;
pub mod synth;

pub use correspondence::{inter_modal_energy, split_region, CorrespondenceMap, Modality, SplitRecord};
pub use error::{Error, Result};
pub use field::{ImageData, Mask, QuatField, ScalarField};
pub use segmentation::{build_regions, Partition, Region, RegionId, Segmentation};
