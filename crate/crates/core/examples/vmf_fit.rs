//! Fit a von Mises-Fisher distribution to orientations scattered under cubic
//! symmetry, where each sample is reported as an arbitrary symmetric
//! equivalent.

use coreg::field::angle_deg;
use coreg::rng;
use coreg::stats::{sample_uniform_quat, sample_vmf, vmf_mixture_em, EmOptions, SymmetryGroup, VmfParams};
use rand::Rng as _;

fn main() -> coreg::Result<()> {
    let group = SymmetryGroup::cubic();
    let mut r = rng::stream(42, &[]);
    let truth = VmfParams::new(sample_uniform_quat(&mut r), 50.0)?;
    let samples: Vec<_> = (0..500)
        .map(|_| {
            let x = sample_vmf(&truth, &mut r);
            let m = r.random_range(0..group.len());
            group.apply(m, &x)
        })
        .collect();

    let fit = vmf_mixture_em(&samples, &group, &EmOptions::default())?;
    let misorientation = (0..group.len())
        .map(|m| {
            let e = group.apply(m, &truth.mu);
            angle_deg(&e, &fit.params.mu).min(angle_deg(&e.map(|v| -v), &fit.params.mu))
        })
        .fold(f64::INFINITY, f64::min);
    println!("kappa: true {:.1}, fitted {:.1}", truth.kappa, fit.params.kappa);
    println!("mean direction error (up to symmetry): {misorientation:.3} deg");
    println!("EM iterations: {}", fit.log_likelihood.len() - 1);
    Ok(())
}
