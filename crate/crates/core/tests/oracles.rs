//! Independent numerical oracles for the closed forms used by the library.

mod common;

use common::*;

use coreg::field::{dot, ImageData, Quat, ScalarField};
use coreg::rng;
use coreg::split::{f_r, glr_gaussian, glr_vmf, partition_objective, test_region_split, Decision, GrowValues};
use coreg::stats::{
    a_p, ap_inv, gaussian_mle, intra_modal_energy, log_cp, region_nll, sample_uniform_quat, sample_vmf,
    symmetry_reduce, vmf_mixture_em, vmf_mixture_logpdf, fit_region, EmOptions, ModelConfig,
    SymmetryGroup, VmfParams,
};
use coreg::synth::{generate_ground_truth, SynthConfig};
use coreg::build_regions;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

#[test]
fn log_cp_matches_the_series() {
    for kappa in [0.1, 1.0, 10.0, 100.0] {
        let got = log_cp(kappa, 4).unwrap();
        let want = log_c4_oracle(kappa);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "kappa {kappa}: {got} vs {want}");
    }
}

#[test]
fn ap_inv_matches_bisection_and_round_trips() {
    let k = ap_inv(0.5, 4).unwrap();
    let oracle = bisect(a4_oracle, 0.5, 1e-9, 1e3);
    assert!((k - oracle).abs() < 1e-8 * oracle, "{k} vs {oracle}");
    assert!((a4_oracle(k) - 0.5).abs() < 1e-8);
    for r in [0.01, 0.3, 0.9, 0.95] {
        let k = ap_inv(r, 4).unwrap();
        assert!((a_p(k, 4) - r).abs() <= 1e-8, "rbar {r}");
        assert!((a4_oracle(k) - r).abs() <= 1e-8, "rbar {r} against the series");
    }
    assert_eq!(ap_inv(0.0, 4).unwrap(), 0.0);
}

#[test]
fn gaussian_glr_equals_likelihood_difference() {
    let mut r = rng::stream(100, &[]);
    for _ in 0..300 {
        let (np, nm) = (r.random_range(1..60), r.random_range(1..60));
        let shift = r.random_range(-5.0..5.0);
        let s = r.random_range(0.1..4.0);
        let plus: Vec<f64> = (0..np).map(|_| r.random_range(-1.0..1.0) * s).collect();
        let minus: Vec<f64> = (0..nm).map(|_| shift + r.random_range(-1.0..1.0) * s).collect();
        let got = glr_gaussian(&plus, &minus).unwrap();
        let want = glr_gaussian_oracle(&plus, &minus);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
    let mut r = rng::stream(101, &[]);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let plus: Vec<f64> = (0..200).map(|_| n01.sample(&mut r)).collect();
    let minus: Vec<f64> = (0..200).map(|_| 5.0 + n01.sample(&mut r)).collect();
    assert!(glr_gaussian(&plus, &minus).unwrap() > 100.0);
}

#[test]
fn vmf_glr_equals_likelihood_difference() {
    let mut r = rng::stream(102, &[]);
    for _ in 0..200 {
        let (np, nm) = (r.random_range(2..40), r.random_range(2..40));
        let ka = r.random_range(1.0..60.0);
        let a = VmfParams::new(sample_uniform_quat(&mut r), ka).unwrap();
        let b = VmfParams::new(sample_uniform_quat(&mut r), ka).unwrap();
        let plus: Vec<Quat> = (0..np).map(|_| sample_vmf(&a, &mut r)).collect();
        let minus: Vec<Quat> = (0..nm).map(|_| sample_vmf(&b, &mut r)).collect();
        let got = glr_vmf(&plus, &minus).unwrap();
        let want = glr_vmf_oracle(&plus, &minus);
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
    let mu = sample_uniform_quat(&mut r);
    let plus: Vec<Quat> = (0..200).map(|_| sample_vmf(&VmfParams::new(mu, 50.0).unwrap(), &mut r)).collect();
    let minus: Vec<Quat> = (0..200)
        .map(|_| sample_vmf(&VmfParams::new(mu.map(|v| -v), 50.0).unwrap(), &mut r))
        .collect();
    assert!(glr_vmf(&plus, &minus).unwrap() > 100.0);
}

/// Full H₁ objective of a partition, n·(log c(κ̂) + κ̂·A(κ̂)).
fn vmf_full_objective(samples: &[Quat], in_plus: &[bool]) -> f64 {
    let plus: Vec<Quat> = samples.iter().zip(in_plus).filter(|(_, &p)| p).map(|(q, _)| *q).collect();
    let minus: Vec<Quat> = samples.iter().zip(in_plus).filter(|(_, &p)| !p).map(|(q, _)| *q).collect();
    let n = samples.len() as f64;
    let rbar = (norm(&resultant(&plus)) + norm(&resultant(&minus))) / n;
    let k = bisect(a4_oracle, rbar, 1e-12, 2e3);
    n * (log_c4_oracle(k) + k * rbar)
}

#[test]
fn resultant_surrogate_ranks_partitions_like_the_likelihood() {
    let mut r = rng::stream(103, &[]);
    for _ in 0..20 {
        let a = VmfParams::new(sample_uniform_quat(&mut r), 5.0).unwrap();
        let samples: Vec<Quat> = (0..6).map(|_| sample_vmf(&a, &mut r)).collect();
        let mut scored: Vec<(f64, f64)> = (1..(1u32 << 6) - 1)
            .map(|mask| {
                let in_plus: Vec<bool> = (0..6).map(|i| mask >> i & 1 == 1).collect();
                (partition_objective(GrowValues::Quat(&samples), &in_plus), vmf_full_objective(&samples, &in_plus))
            })
            .collect();
        scored.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        // lower surrogate must mean higher likelihood
        for pair in scored.windows(2) {
            if pair[1].0 - pair[0].0 > 1e-9 {
                assert!(pair[0].1 >= pair[1].1 - 1e-7, "{pair:?}");
            }
        }
    }
}

#[test]
fn reduction_maximises_alignment_over_each_orbit() {
    let group = SymmetryGroup::cubic();
    let mut r = rng::stream(104, &[]);
    for _ in 0..50 {
        let mu = sample_uniform_quat(&mut r);
        let xs: Vec<Quat> = (0..10).map(|_| sample_uniform_quat(&mut r)).collect();
        let reduced = symmetry_reduce(&xs, &mu, &group);
        for (x, y) in xs.iter().zip(&reduced) {
            let best = (0..group.len())
                .flat_map(|m| {
                    let q = group.apply(m, x);
                    [dot(&mu, &q), -dot(&mu, &q)]
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((dot(&mu, y) - best).abs() < 1e-12);
            assert!((norm(y) - 1.0).abs() < 1e-12);
        }
    }
    let trivial = SymmetryGroup::trivial();
    let mu = sample_uniform_quat(&mut r);
    let x = [mu, mu.map(|v| -v)];
    let y = symmetry_reduce(&x, &mu, &trivial);
    assert_eq!(y[0], mu);
}

#[test]
fn mixture_density_is_constant_on_orbits() {
    let group = SymmetryGroup::cubic();
    let mut r = rng::stream(105, &[]);
    let p = VmfParams::new(sample_uniform_quat(&mut r), 50.0).unwrap();
    let base = vmf_mixture_logpdf(&p.mu, &p, &group);
    for m in 0..group.len() {
        let v = vmf_mixture_logpdf(&group.apply(m, &p.mu), &p, &group);
        assert!((v - base).abs() < 1e-9, "operator {m}");
    }
    let uniform = VmfParams::new(p.mu, 0.0).unwrap();
    let want = -(2.0 * std::f64::consts::PI.powi(2)).ln();
    assert!((vmf_mixture_logpdf(&sample_uniform_quat(&mut r), &uniform, &group) - want).abs() < 1e-12);
}

#[test]
fn em_likelihood_never_decreases() {
    let group = SymmetryGroup::cubic();
    let mut r = rng::stream(106, &[]);
    for kappa in [2.0, 20.0, 200.0] {
        let p = VmfParams::new(sample_uniform_quat(&mut r), kappa).unwrap();
        let xs: Vec<Quat> = (0..150)
            .map(|_| {
                let m = r.random_range(0..group.len());
                group.apply(m, &sample_vmf(&p, &mut r))
            })
            .collect();
        let fit = vmf_mixture_em(&xs, &group, &EmOptions::default()).unwrap();
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "kappa {kappa}: {w:?}");
        }
    }
}

#[test]
fn gaussian_mle_matches_two_pass() {
    let mut r = rng::stream(107, &[]);
    let xs: Vec<f64> = (0..1000).map(|_| r.random_range(-3.0..9.0)).collect();
    let m = mean(&xs);
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    let g = gaussian_mle(&xs).unwrap();
    assert!((g.mu - m).abs() < 1e-12);
    assert!((g.sigma2 - v).abs() < 1e-12);
}

#[test]
fn energy_is_the_sum_of_region_terms() {
    let (w, h) = (24, 16);
    let mut r = rng::stream(108, &[]);
    let labels: Vec<u32> = (0..w * h).map(|p| u32::from(p % w >= 10) + 2 * u32::from(p / w >= 9)).collect();
    let seg = build_regions(w, h, &labels).unwrap();
    let values = (0..w * h).map(|p| labels[p] as f64 * 3.0 + r.random_range(0.0..1.0)).collect();
    let image = ImageData::Scalar(ScalarField::new(w, h, values).unwrap());
    let group = SymmetryGroup::trivial();
    let cfg = ModelConfig::default();
    let total = intra_modal_energy(&seg, &image, &cfg, &group).unwrap();
    let parts: f64 = seg
        .regions()
        .map(|reg| {
            let fit = fit_region(&image, &reg.pixels, &group, None).unwrap();
            region_nll(&image, &reg.pixels, &fit, &group) + cfg.epsilon * reg.boundary_length as f64
        })
        .sum();
    assert!((total - parts).abs() < 1e-9 * total.abs());
}

/// Flood fill written independently of the library.
fn count_components(labels: &[u32], w: usize, h: usize) -> (usize, usize) {
    let mut seen = vec![false; w * h];
    let (mut count, mut covered) = (0, 0);
    for s in 0..w * h {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut queue = std::collections::VecDeque::from([s]);
        seen[s] = true;
        while let Some(p) = queue.pop_front() {
            covered += 1;
            let (x, y) = (p % w, p / w);
            let mut next = Vec::new();
            if x > 0 { next.push(p - 1); }
            if x + 1 < w { next.push(p + 1); }
            if y > 0 { next.push(p - w); }
            if y + 1 < h { next.push(p + w); }
            for q in next {
                if !seen[q] && labels[q] == labels[p] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    (count, covered)
}

#[test]
fn voronoi_regions_match_a_flood_fill() {
    let cfg = SynthConfig {
        width: 64,
        height: 64,
        n_grains: 10,
        merge_pairs: 0,
        ..SynthConfig::default()
    };
    let seg = generate_ground_truth(&cfg, &mut rng::stream(9, &[1])).unwrap();
    let (count, covered) = count_components(&seg.label_values(), 64, 64);
    assert_eq!(seg.region_count(), 10);
    assert_eq!(count, 10);
    assert_eq!(covered, 4096);
    assert_eq!(seg.regions().map(|r| r.pixels.len()).sum::<usize>(), 4096);
}

#[test]
fn lens_fraction_matches_monte_carlo() {
    let (d, rad) = (5.0, 20.0);
    let mut r = rng::stream(109, &[]);
    let n = 400_000;
    let mut inside = 0usize;
    let mut lens = 0usize;
    for _ in 0..n {
        let (x, y) = (r.random_range(-rad..rad), r.random_range(-rad..rad));
        if x * x + y * y <= rad * rad {
            inside += 1;
            if (x - d) * (x - d) + y * y <= rad * rad {
                lens += 1;
            }
        }
    }
    let mc = 1.0 - lens as f64 / inside as f64;
    assert!((f_r(d, rad).unwrap() - mc).abs() < 0.005, "{} vs {mc}", f_r(d, rad).unwrap());
}

fn disc_region(w: usize, h: usize, rad: f64) -> (Vec<u32>, Vec<usize>) {
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let labels: Vec<u32> = (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as f64 + 0.5 - cx, (p / w) as f64 + 0.5 - cy);
            u32::from(x * x + y * y > rad * rad)
        })
        .collect();
    let pixels = (0..w * h).filter(|&p| labels[p] == 0).collect();
    (labels, pixels)
}

fn square_region(w: usize, side: usize) -> (Vec<u32>, usize) {
    let off = (w - side) / 2;
    let labels = (0..w * w)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            u32::from(!(off..off + side).contains(&x) || !(off..off + side).contains(&y))
        })
        .collect();
    (labels, off * w + off)
}

#[test]
fn homogeneous_region_is_kept() {
    let w = 30;
    let (labels, inside) = square_region(w, 20);
    let seg = build_regions(w, w, &labels).unwrap();
    let id = seg.label(inside);
    assert_eq!(seg.region(id).unwrap().pixels.len(), 400);
    let noise = Normal::new(5.0, 1.0).unwrap();
    let cfg = ModelConfig::default();
    let mut keeps = 0;
    for seed in 0..50 {
        let mut r = rng::stream(200 + seed, &[]);
        let values = (0..w * w).map(|_| noise.sample(&mut r)).collect();
        let image = ImageData::Scalar(ScalarField::new(w, w, values).unwrap());
        let v = test_region_split(&seg, id, &image, &cfg, &SymmetryGroup::trivial(), &mut r).unwrap();
        keeps += usize::from(v.decision == Decision::Keep);
    }
    assert!(keeps >= 45, "{keeps}/50 kept");
}

#[test]
fn bimodal_region_is_split() {
    let w = 90;
    let (labels, inside) = square_region(w, 80);
    let seg = build_regions(w, w, &labels).unwrap();
    let id = seg.label(inside);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut r = rng::stream(300, &[]);
    let values = (0..w * w).map(|p| if p % w < w / 2 { 5.0 } else { 10.0 } + noise.sample(&mut r)).collect();
    let image = ImageData::Scalar(ScalarField::new(w, w, values).unwrap());
    let v = test_region_split(&seg, id, &image, &ModelConfig::default(), &SymmetryGroup::trivial(), &mut r).unwrap();
    assert_eq!(v.decision, Decision::Split);
    assert!((v.size_ratio - 0.5).abs() < 0.05, "{}", v.size_ratio);
}

#[test]
fn thin_sliver_is_a_misalignment() {
    let (w, h) = (48, 48);
    let (labels, disc) = disc_region(w, h, 20.0);
    let seg = build_regions(w, h, &labels).unwrap();
    let id = seg.label(disc[0]);
    let sliver_x = {
        let mut xs: Vec<usize> = disc.iter().map(|p| p % w).collect();
        xs.sort_unstable();
        xs[(0.92 * xs.len() as f64) as usize]
    };
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut r = rng::stream(301, &[]);
    let values = (0..w * h)
        .map(|p| if p % w > sliver_x { 25.0 } else { 5.0 } + noise.sample(&mut r))
        .collect();
    let image = ImageData::Scalar(ScalarField::new(w, h, values).unwrap());
    for penalty in [true, false] {
        let cfg = ModelConfig {
            glrt_boundary_penalty: penalty,
            ..ModelConfig::default()
        };
        let v = test_region_split(&seg, id, &image, &cfg, &SymmetryGroup::trivial(), &mut r).unwrap();
        assert!(v.size_ratio > 0.05 && v.size_ratio < 0.11, "{}", v.size_ratio);
        assert!((v.threshold_eta - 0.2324).abs() < 0.01);
        assert_eq!(v.decision, Decision::Realign, "penalty {penalty}: log GLR {}", v.log_glr);
    }
}

#[test]
fn em_recovers_concentration_of_a_large_grain() {
    let group = SymmetryGroup::cubic();
    let mut r = rng::stream(110, &[]);
    let p = VmfParams::new(sample_uniform_quat(&mut r), 50.0).unwrap();
    let xs: Vec<Quat> = (0..2000)
        .map(|_| {
            let m = r.random_range(0..group.len());
            group.apply(m, &sample_vmf(&p, &mut r))
        })
        .collect();
    let fit = vmf_mixture_em(&xs, &group, &EmOptions::default()).unwrap();
    assert!((fit.params.kappa - 50.0).abs() < 0.15 * 50.0, "{}", fit.params.kappa);
}
