//! Boundary overlap rate between two segmentations for a range of widths.

use coreg::build_regions;
use coreg::eval::overlapping_rate;

fn main() -> coreg::Result<()> {
    let (w, h) = (64, 64);
    let truth = build_regions(w, h, &(0..w * h).map(|p| u32::from(p % w >= 32)).collect::<Vec<_>>())?;
    for shift in [0, 1, 2, 4] {
        let est = build_regions(w, h, &(0..w * h).map(|p| u32::from(p % w >= 32 + shift)).collect::<Vec<_>>())?;
        let rates: Vec<String> = (1..=5)
            .map(|bw| overlapping_rate(&truth, &est, bw).map(|o| format!("{o:.3}")))
            .collect::<coreg::Result<_>>()?;
        println!("shift {shift}: O(1..5) = {}", rates.join(" "));
    }
    Ok(())
}
