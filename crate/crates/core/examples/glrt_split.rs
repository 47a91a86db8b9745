//! Likelihood-ratio split test on a region hiding two intensity populations.

use coreg::field::{ImageData, ScalarField};
use coreg::rng;
use coreg::split::{test_region_split, Decision};
use coreg::stats::{ModelConfig, SymmetryGroup};
use coreg::{build_regions, RegionId};
use rand_distr::{Distribution, Normal};

fn main() -> coreg::Result<()> {
    let (w, h) = (40, 40);
    let mut r = rng::stream(7, &[]);
    let noise = Normal::new(0.0, 4.0).expect("valid");
    for step in [0.0, 3.0, 30.0] {
        let values = (0..w * h)
            .map(|p| if p % w < 22 { 100.0 } else { 100.0 + step } + noise.sample(&mut r))
            .collect();
        let image = ImageData::Scalar(ScalarField::new(w, h, values)?);
        let seg = build_regions(w, h, &vec![0; w * h])?;
        let v = test_region_split(&seg, RegionId(0), &image, &ModelConfig::default(), &SymmetryGroup::trivial(), &mut r)?;
        println!(
            "step {step:>4}: log GLR {:>9.1} (threshold {:>7.1}), size ratio {:.3} (eta {:.3}) -> {:?}",
            v.log_glr, v.glr_threshold, v.size_ratio, v.threshold_eta, v.decision
        );
        if v.decision == Decision::Split {
            println!("            split sizes {} / {}", v.psi.plus.len(), v.psi.minus.len());
        }
    }
    Ok(())
}
