//! Runs a recipe config and prints the result CSV.
//!
//! `cargo run --release --example run_experiment -- recipes/fig10.json [out-dir]`

use std::path::PathBuf;

use mac_codebook::experiment::{self, ExperimentConfig};

fn main() -> mac_codebook::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes/fig10.json"));
    let config = ExperimentConfig::load(&config)?;
    let table = experiment::run(&config)?;
    print!("{}", table.to_csv());
    if let Some(dir) = args.next() {
        for path in table.write(&PathBuf::from(dir))? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}
