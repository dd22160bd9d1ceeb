//! Foresight arbitrage without borrowing or short selling.
//!
//! A trader who knows in advance that the price path stays below 1 and has
//! non-trivial quadratic variation can hold a non-negative, bounded position
//! `phi` whose wealth `V_t = int_0^t phi dS` dominates the position value
//! `phi_t S_t` at every time, so the money account `psi = V - phi S` never
//! goes negative. On paths of finite variation no such strategy exists.
//!
//! Module map:
//!
//! - [`model`]: time grids, paths and the price models.
//! - [`quadvar`]: quadratic variation curves and the stopping ladder `rho_n`.
//! - [`stieltjes`]: step functions and Riemann-Stieltjes integrals against paths.
//! - [`strategy`]: the event, the increments `Z_n`, weights `H_n` and `phi`.
//! - [`pipeline`]: one-path construction from a model and a seed.
//! - [`ledger`]: the books `(phi, psi, V)`, verification and Monte Carlo.
//! - [`lemmas`]: numerical checks of the two summability lemmas.
//! - [`config`], [`cli`]: the `nsarb` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod ledger;
pub mod lemmas;
pub mod model;
pub mod pipeline;
pub mod quadvar;
pub mod stieltjes;
pub mod strategy;

pub use error::{Error, Result};
pub use ledger::{build_ledger, monte_carlo, verify_theorem, Ledger, VerificationReport};
pub use model::{simulate, ModelSpec, Path, SeedSpec, TimeGrid};
pub use pipeline::{construct, Construction, ConstructionParams};
pub use quadvar::{stopping_ladder, QVCurve, StoppingLadder};
pub use stieltjes::{StepFunction, StepPiece};
pub use strategy::StrategyPath;
