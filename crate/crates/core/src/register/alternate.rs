use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{inter_modal_energy, CorrespondenceMap, Modality};
use crate::error::{Error, Result};
use crate::field::ImageData;
use crate::register::{align_with_cache, map_with_correspondence, AffineTransform};
use crate::rng;
use crate::segmentation::{RegionId, Segmentation};
use crate::split::{cut_length, test_region_split, Decision, SplitVerdict};
use crate::stats::{fit_region, region_nll, CachedRegion, EnergyCache, ModelConfig, SymmetryGroup};

/// Energy terms after one step of the alternation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub iteration: usize,
    /// Modality updated in this step; `None` for the initial state.
    pub updated: Option<Modality>,
    pub j1: f64,
    pub j2: f64,
    pub d: usize,
    pub u: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub lambda: f64,
    pub records: Vec<EnergyRecord>,
}

impl EnergyTrace {
    fn push(&mut self, iteration: usize, updated: Option<Modality>, j1: f64, j2: f64, d: usize) {
        self.records.push(EnergyRecord {
            iteration,
            updated,
            j1,
            j2,
            d,
            u: j1 + j2 + self.lambda * d as f64,
        });
    }

    /// Largest increase of `U` between consecutive records, relative to the
    /// earlier value; zero or negative for a descending trace.
    pub fn worst_relative_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].u - w[0].u) / w[0].u.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,updated,j1,j2,d,u\n");
        for r in &self.records {
            let updated = match r.updated {
                None => "init",
                Some(Modality::First) => "first",
                Some(Modality::Second) => "second",
            };
            out.push_str(&format!(
                "{},{},{:.9},{:.9},{},{:.9}\n",
                r.iteration, updated, r.j1, r.j2, r.d, r.u
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of one split test during the alternation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub iteration: usize,
    pub modality: Modality,
    pub region: RegionId,
    pub decision: Decision,
    pub log_glr: f64,
    pub size_ratio: f64,
    pub threshold_eta: f64,
    /// Whether the split was applied (a `Split` verdict is still refused
    /// when it would not lower the total energy).
    pub applied: bool,
}

#[derive(Debug, Clone)]
pub struct Coregistration {
    pub s1: Segmentation,
    pub s2: Segmentation,
    pub corr: CorrespondenceMap,
    pub trace: EnergyTrace,
    pub events: Vec<SplitEvent>,
}

struct Side<'a> {
    seg: Segmentation,
    image: &'a ImageData,
    cache: EnergyCache,
}

fn stream_id(m: Modality) -> u64 {
    match m {
        Modality::First => 1,
        Modality::Second => 2,
    }
}

/// Step 1 of a half-iteration: test every region of the active modality,
/// largest first, and apply the splits that lower `U`.
fn split_step(
    side: &mut Side,
    corr: &mut CorrespondenceMap,
    modality: Modality,
    iteration: usize,
    config: &ModelConfig,
    group: &SymmetryGroup,
    events: &mut Vec<SplitEvent>,
) -> Result<()> {
    let mut order: Vec<(usize, RegionId)> = side
        .seg
        .regions()
        .filter(|r| r.pixels.len() >= 2)
        .map(|r| (r.pixels.len(), r.id))
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let snapshot = &side.seg;
    let image = side.image;
    let verdicts: Vec<SplitVerdict> = order
        .par_iter()
        .map(|&(_, id)| {
            let mut r = rng::stream(config.seed, &[iteration as u64, stream_id(modality), u64::from(id.0)]);
            test_region_split(snapshot, id, image, config, group, &mut r)
        })
        .collect::<Result<_>>()?;

    let (w, h) = (side.seg.width(), side.seg.height());
    for v in verdicts {
        let mut applied = false;
        if v.decision == Decision::Split {
            let parent_nll = side.cache.get(v.region).ok_or(Error::UnknownRegion(v.region))?.nll;
            let fit_plus = fit_region(image, &v.psi.plus, group, None)?;
            let fit_minus = fit_region(image, &v.psi.minus, group, None)?;
            let nll_plus = region_nll(image, &v.psi.plus, &fit_plus, group);
            let nll_minus = region_nll(image, &v.psi.minus, &fit_minus, group);
            let delta_j = nll_plus + nll_minus - parent_nll + config.epsilon * 2.0 * cut_length(&v.psi, w, h) as f64;
            let next = side.seg.next_id();
            let children = [RegionId(next), RegionId(next + 1)];
            let mut trial = corr.clone();
            trial.record_split(modality, v.region, children, &v.psi);
            let delta_d = inter_modal_energy(&trial) as f64 - inter_modal_energy(corr) as f64;
            if delta_j + config.lambda * delta_d < 0.0 {
                let made = side.seg.split(v.region, &v.psi)?;
                debug_assert_eq!(made, children);
                *corr = trial;
                side.cache.remove(v.region);
                side.cache.insert(children[0], CachedRegion { fit: fit_plus, nll: nll_plus });
                side.cache.insert(children[1], CachedRegion { fit: fit_minus, nll: nll_minus });
                applied = true;
            }
        }
        events.push(SplitEvent {
            iteration,
            modality,
            region: v.region,
            decision: v.decision,
            log_glr: v.log_glr,
            size_ratio: v.size_ratio,
            threshold_eta: v.threshold_eta,
            applied,
        });
    }
    Ok(())
}

/// Alternating minimisation of `U = J₁ + J₂ + λD`.
///
/// `s1_init` segments `i1`; it is mapped into the frame of `i2` through
/// `transform` to start the second modality. Each iteration updates the
/// second modality, then the first; each update runs the split tests and
/// then region competition. The trace holds the initial energies and one
/// record per update.
pub fn alternate_minimize(
    i1: &ImageData,
    i2: &ImageData,
    s1_init: &Segmentation,
    transform: &AffineTransform,
    config: &ModelConfig,
    group: &SymmetryGroup,
    iters: usize,
) -> Result<Coregistration> {
    config.validate()?;
    if s1_init.width() != i1.width() || s1_init.height() != i1.height() {
        return Err(Error::Dimension("initial segmentation does not cover the first image".into()));
    }
    let (s2, mut corr) = map_with_correspondence(s1_init, transform, (i2.width(), i2.height()))?;
    let mut first = Side {
        cache: EnergyCache::build(s1_init, i1, group)?,
        seg: s1_init.clone(),
        image: i1,
    };
    let mut second = Side {
        cache: EnergyCache::build(&s2, i2, group)?,
        seg: s2,
        image: i2,
    };
    let mut trace = EnergyTrace {
        lambda: config.lambda,
        records: Vec::new(),
    };
    let energy = |s: &Side| s.cache.intra_energy(&s.seg, config.epsilon);
    trace.push(0, None, energy(&first), energy(&second), inter_modal_energy(&corr));
    let mut events = Vec::new();
    for iteration in 1..=iters {
        for modality in [Modality::Second, Modality::First] {
            let side = match modality {
                Modality::First => &mut first,
                Modality::Second => &mut second,
            };
            split_step(side, &mut corr, modality, iteration, config, group, &mut events)?;
            let (aligned, _) = align_with_cache(&side.seg, side.image, config, group, &mut side.cache)?;
            side.seg = aligned;
            trace.push(iteration, Some(modality), energy(&first), energy(&second), inter_modal_energy(&corr));
        }
    }
    Ok(Coregistration {
        s1: first.seg,
        s2: second.seg,
        corr,
        trace,
        events,
    })
}
