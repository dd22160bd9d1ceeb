//! Riemann sums of a random step integrand against a Brownian path, with
//! and without the jump times in the partition.
//!
//! cargo run --example riemann_refinement

use std::sync::Arc;

use nsarb::model::{simulate, ModelSpec, SeedSpec, TimeGrid};
use nsarb::stieltjes::{integration_by_parts_residual, random_nonnegative_step, rs_integral_riemann};

fn main() -> nsarb::Result<()> {
    let grid = Arc::new(TimeGrid::uniform(1.0, 1 << 12)?);
    let path = simulate(&ModelSpec::default_brownian(), &grid, SeedSpec::from(11))?;
    let phi = random_nonnegative_step(&grid, &mut SeedSpec::new(11, 1).rng(), 5, 1.0);
    for include_jumps in [false, true] {
        let rep = rs_integral_riemann(&phi, &path, 10, include_jumps)?;
        println!("include jump times: {include_jumps}; closed form {:.12}", rep.closed_form);
        for (m, d) in rep.partition_sizes.iter().zip(rep.deviations()) {
            println!("  {m:>6} intervals  |error| = {d:.3e}");
        }
    }
    println!(
        "integration-by-parts residual at T: {:.3e}",
        integration_by_parts_residual(&phi, &path, 1.0)?
    );
    Ok(())
}
