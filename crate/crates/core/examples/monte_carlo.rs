//! Monte Carlo sweep over seeds with the default construction.
//!
//! cargo run --release --example monte_carlo -- [seeds]

use nsarb::config::RunConfig;
use nsarb::ledger::monte_carlo;

fn main() -> nsarb::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed_count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let (summary, outcomes) = monte_carlo(&cfg.mc_config())?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    let worst = outcomes
        .iter()
        .filter(|o| o.in_ac)
        .min_by(|a, b| a.v_t.total_cmp(&b.v_t));
    if let Some(o) = worst {
        println!("smallest V_T on A_c: seed {} V_T {:.6}", o.seed, o.v_t);
    }
    Ok(())
}
