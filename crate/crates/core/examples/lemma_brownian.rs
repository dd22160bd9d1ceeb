//! Brownian increment lemma: deterministic bounds on u_n and the Monte
//! Carlo ladder of E sum exp(-alpha sum xi).
//!
//! cargo run --release --example lemma_brownian

use nsarb::cli::bound_sweep;
use nsarb::lemmas::{mc_increment_ladder, BmIncrementSpec};

fn main() -> nsarb::Result<()> {
    for b in bound_sweep(100_000) {
        println!("gamma {:.2} sigma {:.1}: {} failures up to n = {}", b.gamma, b.sigma, b.failures, b.checked_up_to);
    }
    let spec = BmIncrementSpec { sigma: 1.0, gamma: 0.5, alpha: 0.5, depth: 10_000, samples: 4000 };
    let rep = mc_increment_ladder(&spec, &[10, 100, 1000, 10_000], 0, 1.0)?;
    for l in &rep.ladder {
        println!("N = {:>6}: {:>9.3} +- {:.3}", l.n, l.mean, l.stderr);
    }
    for t in &rep.decrease_tests {
        println!(
            "increment {:?} minus {:?}: {:+.3} (se {:.3}) significant: {}",
            t.earlier, t.later, t.difference, t.stderr, t.significant
        );
    }
    println!("{}", rep.note);
    Ok(())
}
