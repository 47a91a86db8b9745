//! Pull a misplaced boundary back onto a noisy step edge.

use coreg::field::{ImageData, ScalarField};
use coreg::register::align_boundaries;
use coreg::rng;
use coreg::stats::{ModelConfig, SymmetryGroup};
use coreg::build_regions;
use rand_distr::{Distribution, Normal};

fn edge_column(seg: &coreg::Segmentation, y: usize) -> usize {
    (1..seg.width()).find(|&x| seg.label(y * seg.width() + x) != seg.label(y * seg.width())).unwrap_or(0)
}

fn main() -> coreg::Result<()> {
    let (w, h, true_edge) = (64, 32, 32);
    let mut r = rng::stream(3, &[]);
    let noise = Normal::new(0.0, 2.0).expect("valid");
    let values = (0..w * h)
        .map(|p| if p % w < true_edge { 50.0 } else { 60.0 } + noise.sample(&mut r))
        .collect();
    let image = ImageData::Scalar(ScalarField::new(w, h, values)?);
    let labels: Vec<u32> = (0..w * h).map(|p| u32::from(p % w >= true_edge + 3)).collect();
    let seg = build_regions(w, h, &labels)?;
    let aligned = align_boundaries(&seg, &image, &ModelConfig::default(), &SymmetryGroup::trivial())?;
    println!("true edge at x = {true_edge}");
    println!("initial edge at x = {}", edge_column(&seg, 0));
    let cols: Vec<usize> = (0..h).map(|y| edge_column(&aligned, y)).collect();
    println!("aligned edge per row: {cols:?}");
    Ok(())
}
