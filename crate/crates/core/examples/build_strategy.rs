//! Build the holding process phi for one seed and print its pieces.
//!
//! cargo run --example build_strategy -- [seed]

use std::sync::Arc;

use nsarb::model::{ModelSpec, SeedSpec, TimeGrid};
use nsarb::pipeline::{construct, ConstructionParams};
use nsarb::strategy::total_variation;

fn main() -> nsarb::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let grid = Arc::new(TimeGrid::uniform(1.0, 1 << 14)?);
    let params = ConstructionParams { depth: 12, ..ConstructionParams::default() };
    let c = construct(&ModelSpec::default_brownian(), &grid, SeedSpec::from(seed), &params)?;
    println!(
        "seed {seed}: in A_c = {}, sup S = {:.4}, qv_T = {:.4}, c = {:.4}",
        c.flags.in_ac, c.flags.sup_s, c.flags.qv_t, c.flags.c
    );
    println!("{:>3} {:>10} {:>10} {:>10} {:>10} {:>10}", "n", "start", "end", "Z_n", "H_n", "phi");
    for p in c.phi.pieces() {
        println!(
            "{:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            p.n,
            p.start,
            p.end,
            c.z.z[p.n - 1],
            c.h.h[p.n - 1],
            p.holding
        );
    }
    println!("total variation {:.6}, epsilon_N {:.6}", total_variation(&c.phi), c.epsilon);
    Ok(())
}
