//! Computes competitive equilibria of exchange and production economies.
//!
//! An economy is stated as a [nonlinear complementarity
//! problem](ncp::NcpProblem) — find `x ≥ 0` with `f(x) ≥ 0` and
//! `xᵀf(x) = 0` — and solved by embedding that system in a homotopy whose
//! start point is trivial and whose endpoint is the equilibrium. The
//! [tracer] follows the zero path with an Euler predictor and a
//! minimum-norm Newton corrector, keeping every iterate strictly positive,
//! and restarts from fresh seeded points when a path fails or ends
//! somewhere that does not certify as an equilibrium.
//!
//! # Entry points
//!
//! * [`compute_equilibrium`] — solve an [`EconomyModel`] and get an
//!   [`EquilibriumReport`] with simplex-normalized prices.
//! * [`solve_ncp`] / [`trace`] — the solver on raw complementarity
//!   problems, with full path logs.
//! * [`builtins`] — four bundled economies (`ex1`–`ex4`) with their known
//!   equilibria, used throughout the tests and examples.
//! * [`model_file`] — load and save economies as JSON.
//! * [`cli`] — the `walras` command-line front end (`solve`, `trace-dump`,
//!   `validate`).
//! * [`oracle`] — small independent solvers (LCP support enumeration,
//!   dense Newton) used to cross-check the homotopy results.
//!
//! # Examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! * `solve_builtin` — multiple equilibria of a two-good economy, found
//!   from different start points.
//! * `custom_exchange` — build an exchange economy from the three demand
//!   families and inspect its excess demand before solving.
//! * `production_economy` — activity-analysis production, price
//!   normalization schemes, and the spurious corners they can admit.
//! * `trace_csv` — record a homotopy path step by step and render it as
//!   CSV.
//! * `custom_ncp` — solve a hand-written complementarity system and check
//!   it against the enumeration oracle.
//! * `model_file_roundtrip` — write a model as JSON, reload it, and solve.
#![forbid(unsafe_code)]
// Positivity guards are written `!(v > 0.0)` rather than `v <= 0.0` so that
// NaN fails them; the two forms differ exactly on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtins;
pub mod cli;
pub mod economy;
pub mod error;
pub mod model_file;
pub mod ncp;
pub mod oracle;
pub mod tracer;

pub use economy::{
    compile, compute_equilibrium, normalize_prices, Consumer, DemandFamily, Economy, EconomyModel,
    EquilibriumReport, ExchangeEconomy, KnownEquilibrium, Normalization, ProductionEconomy,
};
pub use error::{Error, Result};
pub use ncp::{DomainGuard, HomotopyPoint, NcpProblem};
pub use tracer::{
    solve_ncp, solve_ncp_with, trace, NcpSolution, PathRecord, TraceConfig, TraceResult,
    TraceStatus,
};
