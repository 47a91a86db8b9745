//! Build a segmentation from a label raster, inspect regions and adjacency,
//! then split one region.

use coreg::{build_regions, split_region, CorrespondenceMap, Modality, Partition};

fn main() -> coreg::Result<()> {
    #[rustfmt::skip]
    let labels = [
        1, 1, 1, 2, 2, 2,
        1, 1, 1, 2, 2, 2,
        3, 3, 3, 3, 2, 2,
        3, 3, 3, 3, 2, 2,
    ];
    let seg = build_regions(6, 4, &labels)?;
    for r in seg.regions() {
        println!("region {}: {} px, boundary length {}", r.id, r.pixels.len(), r.boundary_length);
    }
    for ((a, b), len) in seg.adjacency() {
        println!("{a} | {b}: shared edge {len}");
    }

    let corr = CorrespondenceMap::identity(&seg, &seg);
    let big = seg.regions().max_by_key(|r| r.pixels.len()).expect("non-empty").id;
    let (plus, minus): (Vec<usize>, Vec<usize>) = seg.region(big)?.pixels.iter().partition(|&&p| p % 6 < 5);
    let (split, corr) = split_region(&seg, &corr, Modality::Second, big, &Partition::new(plus, minus))?;
    println!("after splitting {big}: {} regions, D = {}", split.region_count(), coreg::inter_modal_energy(&corr));
    Ok(())
}
