//! Equilibrium toolkit for weighted congestion games with polynomial latency
//! functions.
//!
//! The crate models games with exact rational arithmetic, prices states both
//! with the plain weighted cost `c_u` and with the Ψ-priced cost `ĉ_u` whose
//! game admits an exact potential function, runs the phased best-response
//! solvers that compute approximate pure Nash equilibria in either pricing,
//! and ships a brute-force oracle that enumerates small instances to verify
//! the structural guarantees the solver relies on.
//!
//! Evaluation functions expect instances whose [`game::Game::validate`]
//! report is empty; the CLI rejects anything else up front.

pub mod dynamics;
pub mod format;
pub mod game;
pub mod generate;
pub mod oracle;
pub mod potential;
pub mod psi;
pub mod scalar;
pub mod solver;

pub use dynamics::{
    apply_move, best_response, deviation_cost, solo_best_response, verify_approx_equilibrium,
    CostRatio, EquilibriumReport, Mode, StateEval,
};
pub use game::{Choice, Game, Player, PlayerStrategies, Resource, State, StrategySpace, Violation};
pub use potential::{
    cost_psi, cost_weighted, partial_potential, partial_potential_full, potential,
    potential_subgame, theta, xi, PlayerSet,
};
pub use psi::{psi_vector, PsiAggregate};
pub use scalar::Scalar;
pub use solver::{audit_log, derive_params, solve, MoveLog, SolveOutcome, SolverParams};
