//! Simulate one path from each model and print its range and realized QV.
//!
//! cargo run --example simulate_paths -- [seed]

use std::sync::Arc;

use nsarb::model::{simulate, Boundary, FvKind, ModelSpec, SeedSpec, TimeGrid};
use nsarb::quadvar::{analytic_qv, realized_qv};

fn main() -> nsarb::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let grid = Arc::new(TimeGrid::uniform(1.0, 1 << 14)?);
    let models = [
        ("brownian/absorb", ModelSpec::default_brownian()),
        (
            "brownian/reflect",
            ModelSpec::BrownianMotion { s0: 1.0, sigma: 1.0, boundary: Boundary::Reflect(0.01) },
        ),
        ("gbm", ModelSpec::GeometricBm { s0: 1.0, sigma: 0.8 }),
        ("fv/linear", ModelSpec::FiniteVariation(FvKind::Linear { slope: 0.5 })),
        (
            "fv/sinusoid",
            ModelSpec::FiniteVariation(FvKind::Sinusoid { amplitude: 0.3, frequency: 2.0 }),
        ),
        ("fv/monotone", ModelSpec::FiniteVariation(FvKind::MonotoneRandom { scale: 0.5 })),
    ];
    println!("{:<18} {:>8} {:>8} {:>8} {:>12} {:>12}", "model", "S_T", "inf", "sup", "realized", "analytic");
    for (name, spec) in models {
        let path = simulate(&spec, &grid, SeedSpec::from(seed))?;
        let rq = realized_qv(&path).terminal();
        let aq = analytic_qv(&spec, &path)?.terminal();
        let s = path.values();
        println!(
            "{name:<18} {:>8.4} {:>8.4} {:>8.4} {rq:>12.6} {aq:>12.6}",
            s[s.len() - 1],
            path.inf(),
            path.sup()
        );
    }
    Ok(())
}
