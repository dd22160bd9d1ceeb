//! The books (S, phi, psi, V) for the first seed in the event, with the
//! inequality checks. Writes `ledger.csv` to the directory given as the
//! first argument, if any.
//!
//! cargo run --release --example figure1_ledger -- /tmp/fig

use std::sync::Arc;

use nsarb::ledger::{build_ledger, verify_theorem, Tolerances};
use nsarb::model::{ModelSpec, SeedSpec, TimeGrid};
use nsarb::pipeline::{construct, ConstructionParams};

fn main() -> nsarb::Result<()> {
    let grid = Arc::new(TimeGrid::uniform(1.0, 1 << 14)?);
    let spec = ModelSpec::default_brownian();
    let params = ConstructionParams::default();
    let (seed, c) = (0u64..)
        .map(|s| (s, construct(&spec, &grid, SeedSpec::from(s), &params)))
        .find(|(_, c)| c.as_ref().map_or(true, |c| c.flags.in_ac))
        .unwrap();
    let c = c?;
    let ledger = build_ledger(&c.path, &c.phi)?;
    let report = verify_theorem(&ledger, &c.phi, &c.ladder, &c.flags, &c.h, &Tolerances::default());
    println!("seed {seed}");
    println!("{}", serde_json::to_string_pretty(&report)?);
    for k in (0..grid.len()).step_by(grid.steps() / 16) {
        println!(
            "t={:.4} S={:.4} phi={:.4} psi={:+.4} V={:+.4}",
            grid.points()[k],
            ledger.s[k],
            ledger.phi[k],
            ledger.psi[k],
            ledger.v[k]
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        let f = std::fs::File::create(std::path::Path::new(&dir).join("ledger.csv"))?;
        ledger.write_csv(std::io::BufWriter::new(f))?;
    }
    Ok(())
}
