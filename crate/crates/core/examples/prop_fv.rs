//! On a finite-variation path every non-negative step strategy is caught
//! with wealth below position value at some time.
//!
//! cargo run --release --example prop_fv

use std::sync::Arc;

use nsarb::ledger::verify_prop_finite;
use nsarb::model::{simulate, FvKind, ModelSpec, SeedSpec, TimeGrid};
use nsarb::stieltjes::random_nonnegative_step;

fn main() -> nsarb::Result<()> {
    let grid = Arc::new(TimeGrid::uniform(1.0, 4096)?);
    let kinds = [
        FvKind::Linear { slope: 1.0 },
        FvKind::Sinusoid { amplitude: 0.25, frequency: 3.0 },
        FvKind::MonotoneRandom { scale: 0.8 },
    ];
    for (i, kind) in kinds.into_iter().enumerate() {
        let path = simulate(&ModelSpec::FiniteVariation(kind), &grid, SeedSpec::from(1))?;
        let mut rng = SeedSpec::new(1, 2 + i as u64).rng();
        let mut witnesses = Vec::new();
        for _ in 0..200 {
            let phi = random_nonnegative_step(&grid, &mut rng, 6, 2.0);
            let r = verify_prop_finite(&path, &phi)?;
            assert!(r.found);
            witnesses.push(r.witness.unwrap());
        }
        let mean = witnesses.iter().sum::<f64>() / witnesses.len() as f64;
        println!("{kind:?}: 200/200 strategies have a witness, mean witness time {mean:.4}");
    }
    Ok(())
}
