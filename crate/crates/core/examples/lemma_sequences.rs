//! The deterministic sequence lemma: x_n = prod 1/(1 + beta y_k), the
//! telescoping identity and the truncated inequality.
//!
//! cargo run --release --example lemma_sequences

use nsarb::lemmas::{
    build_x, check_assumption, telescoping_residual, verify_xn_inequality, SequenceSpec, YSequence,
};

fn main() -> nsarb::Result<()> {
    for (a, q, alpha) in [(1.0, 0.5, 0.5), (0.5, 0.8, 0.3), (1.0, 1.0, 0.5)] {
        let spec = SequenceSpec::new(YSequence::Power { a, q }, alpha, 10_000)?;
        let x = build_x(&spec);
        let assumption = check_assumption(&spec);
        let ineq = verify_xn_inequality(&x);
        println!(
            "y = {a} n^-{q}, alpha = {alpha}: beta = {:.4}, x_N = {:.3e}, sum exp = {:.3} \
             (plateau {}), eligible n {:?}, violations {}, residual(0, N) = {:.1e}",
            x.beta,
            x.at(x.depth()),
            assumption.total,
            assumption.plateau,
            ineq.eligible_range,
            ineq.violations.len(),
            telescoping_residual(&x, 0, x.depth())?
        );
    }
    let anchor = SequenceSpec::new(YSequence::Explicit { values: vec![1.0] }, 0.5, 1)?;
    println!("x_1 for y_1 = 1, beta = 2/3: {}", build_x(&anchor).at(1));
    Ok(())
}
