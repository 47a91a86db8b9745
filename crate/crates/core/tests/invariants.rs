use coreg::correspondence::{inter_modal_energy, split_region, CorrespondenceMap, Modality};
use coreg::eval::overlapping_rate;
use coreg::field::{norm, ImageData, Quat, ScalarField};
use coreg::register::align_boundaries;
use coreg::rng;
use coreg::split::{f_r, f_r_inv, glr_gaussian, glr_vmf, region_growing_psi, GrowValues};
use coreg::stats::{a_p, ap_inv, sample_uniform_quat, vmf_mixture_logpdf, ModelConfig, SymmetryGroup, VmfParams};
use coreg::synth::{generate_instance, SynthConfig};
use coreg::{build_regions, Partition, RegionId, Segmentation};
use proptest::prelude::*;

/// Label raster of nearest seeds (Manhattan distance), `k` seeds.
fn seeded_labels(w: usize, h: usize, seeds: &[(usize, usize)]) -> Vec<u32> {
    (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            seeds
                .iter()
                .enumerate()
                .min_by_key(|(_, &(sx, sy))| x.abs_diff(sx) + y.abs_diff(sy))
                .map(|(i, _)| i as u32)
                .unwrap()
        })
        .collect()
}

fn segmentation_strategy() -> impl Strategy<Value = Segmentation> {
    (4usize..24, 4usize..24, prop::collection::vec((0usize..64, 0usize..64), 1..8)).prop_map(|(w, h, raw)| {
        let seeds: Vec<(usize, usize)> = raw.into_iter().map(|(x, y)| (x % w, y % h)).collect();
        build_regions(w, h, &seeded_labels(w, h, &seeds)).unwrap()
    })
}

/// Random connected two-way partition of the largest region.
fn random_split(seg: &Segmentation, seed: u64) -> Option<(RegionId, Partition)> {
    let region = seg.regions().max_by_key(|r| r.pixels.len())?;
    if region.pixels.len() < 2 {
        return None;
    }
    let mut r = rng::stream(seed, &[]);
    let values: Vec<f64> = region.pixels.iter().map(|&p| ((p * 7919 + seed as usize) % 13) as f64).collect();
    let psi = region_growing_psi(&region.pixels, seg.width(), seg.height(), GrowValues::Scalar(&values), 2, &mut r).ok()?;
    Some((region.id, psi))
}

fn is_connected(pixels: &[usize], w: usize, h: usize) -> bool {
    let set: std::collections::HashSet<usize> = pixels.iter().copied().collect();
    let mut seen = std::collections::HashSet::from([pixels[0]]);
    let mut stack = vec![pixels[0]];
    while let Some(p) = stack.pop() {
        let (x, y) = (p % w, p / w);
        let mut nb = Vec::new();
        if x > 0 { nb.push(p - 1); }
        if x + 1 < w { nb.push(p + 1); }
        if y > 0 { nb.push(p - w); }
        if y + 1 < h { nb.push(p + w); }
        for q in nb {
            if set.contains(&q) && seen.insert(q) {
                stack.push(q);
            }
        }
    }
    seen.len() == pixels.len()
}

fn unit_quat() -> impl Strategy<Value = Quat> {
    any::<u64>().prop_map(|s| sample_uniform_quat(&mut rng::stream(s, &[])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regions_partition_the_raster(seg in segmentation_strategy()) {
        let total: usize = seg.regions().map(|r| r.pixels.len()).sum();
        prop_assert_eq!(total, seg.width() * seg.height());
        for r in seg.regions() {
            prop_assert!(is_connected(&r.pixels, seg.width(), seg.height()));
            prop_assert!(r.boundary_length >= 4);
            prop_assert!(r.boundary.iter().all(|p| r.pixels.binary_search(p).is_ok()));
        }
    }

    #[test]
    fn incremental_split_equals_rebuild(seg in segmentation_strategy(), seed in any::<u64>()) {
        let mut current = seg;
        for k in 0..3 {
            let Some((id, psi)) = random_split(&current, seed.wrapping_add(k)) else { break };
            prop_assert!(is_connected(&psi.plus, current.width(), current.height()));
            prop_assert!(is_connected(&psi.minus, current.width(), current.height()));
            let before = current.region_count();
            let mut next = current.clone();
            next.split(id, &psi).unwrap();
            prop_assert_eq!(next.region_count(), before + 1);
            let rebuilt = build_regions(next.width(), next.height(), &next.label_values()).unwrap();
            prop_assert_eq!(next.relabeled_canonical(), rebuilt);
            current = next;
        }
    }

    #[test]
    fn inter_modal_energy_is_symmetric_and_counts_unmatched_splits(seg in segmentation_strategy(), seed in any::<u64>()) {
        let corr = CorrespondenceMap::identity(&seg, &seg);
        prop_assert_eq!(inter_modal_energy(&corr), 0);
        let Some((id, psi)) = random_split(&seg, seed) else { return Ok(()) };
        let (s2, corr) = split_region(&seg, &corr, Modality::Second, id, &psi).unwrap();
        prop_assert_eq!(inter_modal_energy(&corr), 1);
        prop_assert_eq!(inter_modal_energy(&corr.swapped().unwrap()), 1);
        let (s1, corr) = split_region(&seg, &corr, Modality::First, id, &psi).unwrap();
        prop_assert_eq!(inter_modal_energy(&corr), 0);
        prop_assert_eq!(inter_modal_energy(&corr.swapped().unwrap()), 0);
        corr.validate(&s1, &s2).unwrap();
    }

    #[test]
    fn overlap_rate_is_a_symmetric_fraction(a in segmentation_strategy(), seed in any::<u64>(), w in 1u32..6) {
        let seeds: Vec<(usize, usize)> = (0..4)
            .map(|k| ((seed >> (8 * k)) as usize % a.width(), (seed >> (8 * k + 4)) as usize % a.height()))
            .collect();
        let b = build_regions(a.width(), a.height(), &seeded_labels(a.width(), a.height(), &seeds)).unwrap();
        let o = overlapping_rate(&a, &b, w).unwrap();
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert_eq!(o, overlapping_rate(&b, &a, w).unwrap());
    }

    #[test]
    fn overlap_grows_with_width_for_an_offset_edge(offset in 0usize..6, edge in 8usize..20) {
        let (w, h) = (32, 16);
        let truth = build_regions(w, h, &(0..w * h).map(|p| u32::from(p % w >= edge)).collect::<Vec<_>>()).unwrap();
        let est = build_regions(w, h, &(0..w * h).map(|p| u32::from(p % w >= edge + offset)).collect::<Vec<_>>()).unwrap();
        let rates: Vec<f64> = (1..=8).map(|bw| overlapping_rate(&truth, &est, bw).unwrap()).collect();
        for pair in rates.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-12, "{:?}", rates);
        }
    }

    #[test]
    fn lens_fraction_is_monotone_and_invertible(r in 0.5f64..100.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = (a.min(b) * 2.0 * r, a.max(b) * 2.0 * r);
        prop_assert!(f_r(lo, r).unwrap() <= f_r(hi, r).unwrap() + 1e-15);
        prop_assert_eq!(f_r(0.0, r).unwrap(), 0.0);
        prop_assert_eq!(f_r(2.0 * r, r).unwrap(), 1.0);
        let d = a * 2.0 * r;
        prop_assert!((f_r_inv(f_r(d, r).unwrap(), r).unwrap() - d).abs() <= 1e-8 * r.max(1.0));
    }

    #[test]
    fn glr_is_non_negative(
        plus in prop::collection::vec(-50.0f64..50.0, 1..40),
        minus in prop::collection::vec(-50.0f64..50.0, 1..40),
        qp in prop::collection::vec(unit_quat(), 1..20),
        qm in prop::collection::vec(unit_quat(), 1..20),
    ) {
        prop_assert!(glr_gaussian(&plus, &minus).unwrap() >= -1e-9);
        if let Ok(g) = glr_vmf(&qp, &qm) {
            prop_assert!(g >= -1e-9);
        }
    }

    #[test]
    fn mixture_density_is_symmetric(x in unit_quat(), mu in unit_quat(), kappa in 0.0f64..200.0, m in 0usize..24) {
        let group = SymmetryGroup::cubic();
        let p = VmfParams::new(mu, kappa).unwrap();
        let a = vmf_mixture_logpdf(&x, &p, &group);
        let b = vmf_mixture_logpdf(&group.apply(m, &x), &p, &group);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn ap_inv_round_trips(rbar in 1e-6f64..=0.95) {
        prop_assert!((a_p(ap_inv(rbar, 4).unwrap(), 4) - rbar).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn synthetic_quaternions_are_unit(seed in any::<u64>()) {
        let cfg = SynthConfig { width: 32, height: 32, n_grains: 6, merge_pairs: 1, seed, ..SynthConfig::default() };
        let inst = generate_instance(&cfg, &SymmetryGroup::cubic()).unwrap();
        prop_assert!(inst.images.quat.values().iter().all(|q| (norm(q) - 1.0).abs() < 1e-6));
        prop_assert_eq!(inst.truth.region_count(), 6);
        prop_assert_eq!(inst.initial.region_count(), 5);
    }

    #[test]
    fn competition_keeps_region_count_and_topology(seg in segmentation_strategy(), seed in any::<u64>()) {
        let mut r = rng::stream(seed, &[]);
        use rand::Rng as _;
        let values = (0..seg.width() * seg.height())
            .map(|p| seg.label(p).0 as f64 * 4.0 + r.random_range(-3.0..3.0))
            .collect();
        let image = ImageData::Scalar(ScalarField::new(seg.width(), seg.height(), values).unwrap());
        let out = align_boundaries(&seg, &image, &ModelConfig { epsilon: 1.0, ..ModelConfig::default() }, &SymmetryGroup::trivial()).unwrap();
        prop_assert_eq!(out.region_count(), seg.region_count());
        let keys = |s: &Segmentation| s.adjacency().keys().copied().collect::<Vec<_>>();
        prop_assert_eq!(keys(&out), keys(&seg));
        for reg in out.regions() {
            prop_assert!(is_connected(&reg.pixels, out.width(), out.height()));
        }
    }
}
