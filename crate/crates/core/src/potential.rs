//! Player costs in both cost models, the exact potential function of the
//! Ψ-priced game, subgame and partial potentials, and the analytic stretch
//! constants θ_d(ρ) and ξ_ε.
//!
//! Everything here is computed from scratch out of weight multisets; the
//! incrementally maintained evaluator in [`crate::dynamics`] is checked
//! against these routes by the test suite.

use crate::game::{Game, GameError, State};
use crate::psi::psi_vector;
use crate::scalar::{factorial, pow_scalar, scalar_int, sqrt5_upper, Scalar};
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Set of player indices.
pub type PlayerSet = BTreeSet<usize>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PotentialError {
    #[error("B must be a subset of A")]
    NotSubset,
    #[error("degree must be at least 1")]
    DegreeOutOfRange,
    #[error("rho {rho} outside admissible range [1, {max}] for degree 1")]
    RhoOutOfRange { rho: String, max: String },
    #[error("rho must be at least 1")]
    RhoBelowOne,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
}

/// Σ_k a_k · Ψ_k over one resource, given the Ψ vector of its load multiset.
pub(crate) fn latency_price_psi(coeffs: &[Scalar], psi: &[Scalar]) -> Scalar {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(k, a)| a * &psi[k])
        .sum()
}

/// Σ_k a_k · load^k over one resource.
pub(crate) fn latency_price_weighted(coeffs: &[Scalar], load: &Scalar) -> Scalar {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(k, a)| a * pow_scalar(load, k as u32))
        .sum()
}

/// Σ_k a_k/(k+1) · Ψ_{k+1}: one resource's contribution to the potential.
pub(crate) fn potential_contribution(coeffs: &[Scalar], psi: &[Scalar]) -> Scalar {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(k, a)| a / scalar_int(k as i64 + 1) * &psi[k + 1])
        .sum()
}

/// Weighted-game cost `c_u(S) = w_u Σ_{e∈s_u} Σ_k a_{e,k} L(N_e(S))^k`.
pub fn cost_weighted(game: &Game, state: &State, player: usize) -> Result<Scalar, GameError> {
    cost_in(game, state, player, CostModel::Weighted)
}

/// Ψ-priced cost `ĉ_u(S) = w_u Σ_{e∈s_u} Σ_k a_{e,k} Ψ_k(N_e(S))`.
pub fn cost_psi(game: &Game, state: &State, player: usize) -> Result<Scalar, GameError> {
    cost_in(game, state, player, CostModel::Psi)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CostModel {
    Psi,
    Weighted,
}

fn cost_in(
    game: &Game,
    state: &State,
    player: usize,
    model: CostModel,
) -> Result<Scalar, GameError> {
    if player >= game.player_count() {
        return Err(GameError::UnknownPlayer(format!("#{player}")));
    }
    game.check_state(state)?;
    let loads = game.loads_for(state, None);
    let d = game.degree as usize;
    let mut total = Scalar::zero();
    for r in game.choice_resources(player, &state.choices[player]) {
        let coeffs = &game.resources[r].coeffs;
        total += match model {
            CostModel::Psi => {
                let psi = psi_vector(&loads[r], d).expect("validated non-negative weights");
                latency_price_psi(coeffs, &psi)
            }
            CostModel::Weighted => {
                let load: Scalar = loads[r].iter().sum();
                latency_price_weighted(coeffs, &load)
            }
        };
    }
    Ok(&game.players[player].weight * total)
}

/// The exact potential `Φ(S) = Σ_e Σ_k a_{e,k}/(k+1) · Ψ_{k+1}(N_e(S))`.
pub fn potential(game: &Game, state: &State) -> Scalar {
    potential_of_loads(game, &game.loads_for(state, None))
}

/// Potential `Φ^A(S)` of the subgame among the players of `subset`, computed
/// from the restricted multisets `N_e^A(S)`. The empty subset prices the
/// pseudo-state in which nobody participates, so `Φ^∅ = 0`.
pub fn potential_subgame(game: &Game, state: &State, subset: &PlayerSet) -> Scalar {
    potential_of_loads(game, &game.loads_for(state, Some(subset)))
}

fn potential_of_loads(game: &Game, loads: &[Vec<Scalar>]) -> Scalar {
    let kmax = game.degree as usize + 1;
    let mut total = Scalar::zero();
    for (r, multiset) in loads.iter().enumerate() {
        if multiset.is_empty() {
            continue;
        }
        let psi = psi_vector(multiset, kmax).expect("validated non-negative weights");
        total += potential_contribution(&game.resources[r].coeffs, &psi);
    }
    total
}

/// B-partial potential of the subgame on A: `Φ_B^A(S) = Φ^A(S) - Φ^{A∖B}(S)`.
pub fn partial_potential(
    game: &Game,
    state: &State,
    a: &PlayerSet,
    b: &PlayerSet,
) -> Result<Scalar, PotentialError> {
    if !b.is_subset(a) {
        return Err(PotentialError::NotSubset);
    }
    let rest: PlayerSet = a.difference(b).copied().collect();
    Ok(potential_subgame(game, state, a) - potential_subgame(game, state, &rest))
}

/// `Φ_B(S)`: the B-partial potential of the full game.
pub fn partial_potential_full(game: &Game, state: &State, b: &PlayerSet) -> Scalar {
    let all: PlayerSet = (0..game.player_count()).collect();
    partial_potential(game, state, &all, b).expect("B is a set of player indices")
}

/// Rational upper bound on the ρ-stretch constant θ_d(ρ).
///
/// Degree 1 uses `(3+√5)/2 + 6(ρ-1)`, valid for ρ ∈ [1, 11/10] only, with √5
/// replaced by a rational over-approximation tight to 10^-31; rounding θ up
/// keeps every guarantee that consumes it valid. Degree d ≥ 2 uses the exact
/// rational `ρ(ρ+1)^d (d+1)^(d+1)`.
pub fn theta(d: u32, rho: &Scalar) -> Result<Scalar, PotentialError> {
    if d < 1 {
        return Err(PotentialError::DegreeOutOfRange);
    }
    if *rho < Scalar::one() {
        return Err(PotentialError::RhoBelowOne);
    }
    if d == 1 {
        let max = Scalar::new(11.into(), 10.into());
        if *rho > max {
            return Err(PotentialError::RhoOutOfRange {
                rho: crate::scalar::rational_string(rho),
                max: crate::scalar::rational_string(&max),
            });
        }
        let half = Scalar::new(1.into(), 2.into());
        Ok((scalar_int(3) + sqrt5_upper()) * half + scalar_int(6) * (rho - Scalar::one()))
    } else {
        let dp1 = scalar_int(d as i64 + 1);
        Ok(rho * pow_scalar(&(rho + Scalar::one()), d) * pow_scalar(&dp1, d + 1))
    }
}

/// `ξ_ε = (1 + 1/ε)^d · d^d - 1`, exact.
pub fn xi(eps: &Scalar, d: u32) -> Result<Scalar, PotentialError> {
    if d < 1 {
        return Err(PotentialError::DegreeOutOfRange);
    }
    if *eps <= Scalar::zero() {
        return Err(PotentialError::NonPositiveEpsilon);
    }
    let base = Scalar::one() + eps.recip();
    Ok(pow_scalar(&base, d) * pow_scalar(&scalar_int(d as i64), d) - Scalar::one())
}

/// `d!` as a scalar, the cost-model gap of degree-d games.
pub fn degree_factorial(d: u32) -> Scalar {
    factorial(d)
}
