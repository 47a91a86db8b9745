//! Generate a synthetic instance and write it to disk in the layout the
//! command-line tool reads.
//!
//!     cargo run --example synthetic_benchmark -- /tmp/instance 5

use std::path::PathBuf;

use coreg::pipeline::{run_synth, PipelineConfig};

fn main() -> coreg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_instance".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&out).map_err(|e| coreg::Error::Config(e.to_string()))?;
    let config = PipelineConfig::default().with_seed(seed);
    for f in run_synth(&config, &out)? {
        println!("{}", out.join(f).display());
    }
    let sidecar: coreg::synth::Sidecar = coreg::io::read_json(&out.join("sidecar.json"))?;
    println!("{} displaced grains, {} planted boundaries", sidecar.displaced.len(), sidecar.planted.len());
    Ok(())
}
