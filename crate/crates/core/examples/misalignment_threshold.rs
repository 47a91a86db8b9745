//! Size-ratio threshold separating misaligned slivers from real missing
//! boundaries, as a function of region radius.

use coreg::split::{f_r, misalignment_threshold, DisplacementModel};

fn main() -> coreg::Result<()> {
    let model = DisplacementModel::new(3.0)?;
    println!("displacement quantile at alpha = 0.05: {:.3} px", model.rayleigh_quantile(0.05)?);
    println!("{:>6} {:>8}", "radius", "eta");
    for r in [2.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
        println!("{r:>6} {:>8.4}", misalignment_threshold(r, &model, 0.05)?);
    }
    println!("lens fraction f_r(d) for r = 20:");
    for d in [0.0, 5.0, 10.0, 20.0, 40.0] {
        println!("  d = {d:>4}: {:.4}", f_r(d, 20.0)?);
    }
    Ok(())
}
