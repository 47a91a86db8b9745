use crate::correspondence::CorrespondenceMap;
use crate::error::{Error, Result};
use crate::grid;
use crate::register::AffineTransform;
use crate::segmentation::{RegionId, Segmentation};

/// Carries a segmentation into another raster through `transform` (source
/// frame to target frame). Each target pixel takes the label of the source
/// pixel nearest to its pre-image; pre-images outside the source raster are
/// clamped onto its edge. Pieces a region breaks into are absorbed by their
/// neighbours so that region ids survive one-to-one.
pub fn map_segmentation(
    seg: &Segmentation,
    transform: &AffineTransform,
    target: (usize, usize),
) -> Result<Segmentation> {
    let (tw, th) = target;
    if tw == 0 || th == 0 {
        return Err(Error::Dimension(format!("target raster {tw}x{th}")));
    }
    let inverse = transform.inverse()?;
    let (sw, sh) = (seg.width() as f64, seg.height() as f64);
    let mut labels: Vec<u32> = Vec::with_capacity(tw * th);
    for y in 0..th {
        for x in 0..tw {
            let (u, v) = inverse.apply(x as f64, y as f64);
            let u = u.round().clamp(0.0, sw - 1.0) as usize;
            let v = v.round().clamp(0.0, sh - 1.0) as usize;
            labels.push(seg.label(v * seg.width() + u).0);
        }
    }
    grid::absorb_fragments(&mut labels, tw, th);
    Segmentation::from_ids(tw, th, labels.into_iter().map(RegionId).collect())
}

/// Maps `s1` into the second frame and links every region to its image.
pub fn map_with_correspondence(
    s1: &Segmentation,
    transform: &AffineTransform,
    target: (usize, usize),
) -> Result<(Segmentation, CorrespondenceMap)> {
    let s2 = map_segmentation(s1, transform, target)?;
    let links: Vec<(RegionId, RegionId)> = s1
        .region_ids()
        .filter(|&id| s2.contains(id))
        .map(|id| (id, id))
        .collect();
    let corr = CorrespondenceMap::new(
        links,
        *transform,
        [(s1.width(), s1.height()), target],
    );
    Ok((s2, corr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::build_regions;

    fn quadrants(w: usize, h: usize) -> Segmentation {
        let labels: Vec<u32> = (0..w * h)
            .map(|p| u32::from(p % w >= w / 2) + 2 * u32::from(p / w >= h / 2))
            .collect();
        build_regions(w, h, &labels).unwrap()
    }

    #[test]
    fn identity_keeps_labels() {
        let s = quadrants(10, 8);
        let m = map_segmentation(&s, &AffineTransform::identity(), (10, 8)).unwrap();
        assert_eq!(m.labels(), s.labels());
    }

    #[test]
    fn integer_shift_matches_on_the_overlap() {
        let s = quadrants(12, 12);
        let m = map_segmentation(&s, &AffineTransform::translation(2.0, 1.0), (12, 12)).unwrap();
        for y in 1..12 {
            for x in 2..12 {
                assert_eq!(m.label(y * 12 + x), s.label((y - 1) * 12 + x - 2));
            }
        }
    }

    #[test]
    fn links_are_one_to_one() {
        let s = quadrants(16, 16);
        let t = AffineTransform::new([[2.0, 0.0], [0.0, 2.0]], [0.0, 0.0]).unwrap();
        let (m, corr) = map_with_correspondence(&s, &t, (32, 32)).unwrap();
        assert_eq!(m.region_count(), 4);
        assert_eq!(corr.links().len(), 4);
        corr.validate(&s, &m).unwrap();
    }

    #[test]
    fn degenerate_transform_is_rejected() {
        let s = quadrants(4, 4);
        let t = AffineTransform {
            linear: [[1.0, 2.0], [2.0, 4.0]],
            translation: [0.0, 0.0],
        };
        assert!(map_segmentation(&s, &t, (4, 4)).is_err());
    }
}
