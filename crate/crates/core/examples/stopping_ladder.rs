//! The stopping ladder rho_n on a Brownian QV curve.
//!
//! cargo run --example stopping_ladder

use std::sync::Arc;

use nsarb::model::{simulate, ModelSpec, SeedSpec, TimeGrid};
use nsarb::quadvar::{analytic_qv, stopping_ladder};

fn main() -> nsarb::Result<()> {
    let spec = ModelSpec::default_brownian();
    let grid = Arc::new(TimeGrid::uniform(1.0, 1 << 14)?);
    let path = simulate(&spec, &grid, SeedSpec::from(3))?;
    let qv = analytic_qv(&spec, &path)?;
    let c = qv.terminal() / 2.0;
    let ladder = stopping_ladder(&qv, c, 0.5, 16)?;
    println!("qv_T = {:.4}, c = {c:.4}, rho = {}", qv.terminal(), ladder.rho);
    for n in 1..=ladder.depth + 1 {
        println!(
            "rho_{n:<3} = {:.6}   level c n^-gamma = {:.6}",
            ladder.time(n),
            ladder.level(n)
        );
    }
    Ok(())
}
