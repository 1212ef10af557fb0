//! Deviation pricing, best responses, move application and ρ-approximate
//! equilibrium verification.
//!
//! [`StateEval`] keeps one Ψ-aggregate per resource and the exact potential of
//! the current state, updated in O(d) rational operations per touched
//! resource, so a best-response move costs O(|strategy space| · d) instead of
//! a full recomputation. Network strategy spaces are priced by a label-setting
//! shortest-path run; prices are non-negative because all latency
//! coefficients are.

use crate::game::{Choice, Game, GameError, State, StrategySpace};
use crate::potential::{
    latency_price_psi, latency_price_weighted, potential_contribution, PlayerSet,
};
use crate::psi::PsiAggregate;
use crate::scalar::{factorial, pow_scalar, Scalar};
use num_traits::{One, Zero};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use thiserror::Error;

/// Which cost a player optimizes: the Ψ-priced cost `ĉ_u` or the plain
/// weighted-game cost `c_u`. The two coincide on degree-1 games.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Psi,
    Weighted,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Psi => "psi",
            Mode::Weighted => "weighted",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("player `{0}` has no valid strategy (unreachable target)")]
    NoValidStrategy(String),
}

/// Best-deviation ratio of one player: `Finite(1)` when the best response
/// does not improve, `Unbounded` when a zero-cost deviation beats a positive
/// current cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostRatio {
    Finite(Scalar),
    Unbounded,
}

impl CostRatio {
    pub fn at_most(&self, rho: &Scalar) -> bool {
        match self {
            CostRatio::Finite(r) => r <= rho,
            CostRatio::Unbounded => false,
        }
    }

    pub fn as_finite(&self) -> Option<&Scalar> {
        match self {
            CostRatio::Finite(r) => Some(r),
            CostRatio::Unbounded => None,
        }
    }
}

impl PartialOrd for CostRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CostRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (CostRatio::Unbounded, CostRatio::Unbounded) => Ordering::Equal,
            (CostRatio::Unbounded, _) => Ordering::Greater,
            (_, CostRatio::Unbounded) => Ordering::Less,
            (CostRatio::Finite(a), CostRatio::Finite(b)) => a.cmp(b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlayerVerdict {
    pub player: usize,
    pub current_cost: Scalar,
    pub best_response: Choice,
    pub best_cost: Scalar,
    pub ratio: CostRatio,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub verdicts: Vec<PlayerVerdict>,
    pub rho_achieved: CostRatio,
}

impl EquilibriumReport {
    /// Whether the verified players sit at a ρ-approximate equilibrium.
    pub fn is_rho_equilibrium(&self, rho: &Scalar) -> bool {
        self.rho_achieved.at_most(rho)
    }
}

/// Incremental evaluator of one mutable state: per-resource Ψ-aggregates up
/// to order d+1 plus the exact running potential.
#[derive(Debug, Clone)]
pub struct StateEval<'g> {
    game: &'g Game,
    state: State,
    player_resources: Vec<Vec<usize>>,
    aggs: Vec<PsiAggregate>,
    potential: Scalar,
}

impl<'g> StateEval<'g> {
    pub fn new(game: &'g Game, state: State) -> Result<Self, GameError> {
        game.check_state(&state)?;
        let kmax = game.degree as usize + 1;
        let mut aggs = vec![PsiAggregate::new(kmax); game.resource_count()];
        let mut player_resources = Vec::with_capacity(game.player_count());
        for (u, choice) in state.choices.iter().enumerate() {
            let rs = game.choice_resources(u, choice);
            for &r in &rs {
                aggs[r]
                    .insert(&game.players[u].weight)
                    .expect("negative weight in state evaluator");
            }
            player_resources.push(rs);
        }
        let potential = aggs
            .iter()
            .enumerate()
            .map(|(r, agg)| potential_contribution(&game.resources[r].coeffs, agg.values()))
            .sum();
        Ok(StateEval {
            game,
            state,
            player_resources,
            aggs,
            potential,
        })
    }

    pub fn game(&self) -> &Game {
        self.game
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    /// Exact Ψ-potential of the current state.
    pub fn potential(&self) -> &Scalar {
        &self.potential
    }

    pub fn aggregate(&self, resource: usize) -> &PsiAggregate {
        &self.aggs[resource]
    }

    /// Current cost of `player` under `mode`.
    pub fn cost(&self, player: usize, mode: Mode) -> Scalar {
        let mut total = Scalar::zero();
        for &r in &self.player_resources[player] {
            let coeffs = &self.game.resources[r].coeffs;
            total += match mode {
                Mode::Psi => latency_price_psi(coeffs, self.aggs[r].values()),
                Mode::Weighted => latency_price_weighted(coeffs, self.aggs[r].total()),
            };
        }
        &self.game.players[player].weight * total
    }

    /// Per-resource deviation price for `player`: her weight times the
    /// latency of `resource` in the state where she uses it (and keeps the
    /// rest of the players fixed). Resources she already occupies are priced
    /// as-is; others get her weight inserted on the fly.
    pub fn deviation_price(&self, player: usize, resource: usize, mode: Mode) -> Scalar {
        let w = &self.game.players[player].weight;
        let coeffs = &self.game.resources[resource].coeffs;
        let occupies = self.player_resources[player].binary_search(&resource).is_ok();
        let latency = match (mode, occupies) {
            (Mode::Psi, true) => latency_price_psi(coeffs, self.aggs[resource].values()),
            (Mode::Psi, false) => {
                latency_price_psi(coeffs, &self.aggs[resource].inserted_values(w))
            }
            (Mode::Weighted, true) => latency_price_weighted(coeffs, self.aggs[resource].total()),
            (Mode::Weighted, false) => {
                latency_price_weighted(coeffs, &(self.aggs[resource].total() + w))
            }
        };
        w * latency
    }

    /// Cost of `player` in the state `(S_-u, choice)`.
    pub fn deviation_cost(
        &self,
        player: usize,
        choice: &Choice,
        mode: Mode,
    ) -> Result<Scalar, GameError> {
        self.game.check_choice(player, choice)?;
        let rs = self.game.choice_resources(player, choice);
        Ok(rs
            .iter()
            .map(|&r| self.deviation_price(player, r, mode))
            .sum())
    }

    /// Moves `player` onto `choice`, updating aggregates and the potential
    /// incrementally on the symmetric difference of the two strategies.
    pub fn apply(&mut self, player: usize, choice: Choice) -> Result<(), GameError> {
        self.game.check_choice(player, &choice)?;
        let new_rs = self.game.choice_resources(player, &choice);
        let old_rs = std::mem::take(&mut self.player_resources[player]);
        let w = self.game.players[player].weight.clone();
        let game = self.game;
        for &r in &old_rs {
            if new_rs.binary_search(&r).is_ok() {
                continue;
            }
            let coeffs = &game.resources[r].coeffs;
            self.potential -= potential_contribution(coeffs, self.aggs[r].values());
            self.aggs[r].remove(&w).expect("weight tracked by evaluator");
            self.potential += potential_contribution(coeffs, self.aggs[r].values());
        }
        for &r in &new_rs {
            if old_rs.binary_search(&r).is_ok() {
                continue;
            }
            let coeffs = &game.resources[r].coeffs;
            self.potential -= potential_contribution(coeffs, self.aggs[r].values());
            self.aggs[r].insert(&w).expect("validated non-negative weight");
            self.potential += potential_contribution(coeffs, self.aggs[r].values());
        }
        self.player_resources[player] = new_rs;
        self.state.choices[player] = choice;
        Ok(())
    }

    /// Cost-minimizing deviation of `player`. Ties prefer the current
    /// strategy, then the lexicographically smallest candidate.
    pub fn best_response(&self, player: usize, mode: Mode) -> Result<(Choice, Scalar), DynamicsError> {
        let price = |r: usize| self.deviation_price(player, r, mode);
        select_best(self.game, player, &price, Some(&self.state.choices[player]))
    }
}

/// Best response of `player` against an empty game, pricing each resource as
/// if she were alone on it. Feeds the minimum-cost parameter of the solvers.
pub fn solo_best_response(
    game: &Game,
    player: usize,
    mode: Mode,
) -> Result<(Choice, Scalar), DynamicsError> {
    let w = &game.players[player].weight;
    let solo_psi: Vec<Scalar> = (0..=game.degree)
        .map(|k| factorial(k) * pow_scalar(w, k))
        .collect();
    let price = |r: usize| {
        let coeffs = &game.resources[r].coeffs;
        let latency = match mode {
            Mode::Psi => latency_price_psi(coeffs, &solo_psi),
            Mode::Weighted => latency_price_weighted(coeffs, w),
        };
        w * latency
    };
    select_best(game, player, &price, None)
}

/// `c` or `ĉ` of `player` in `(S_-u, choice)`, computed from scratch. The
/// incremental route is [`StateEval::deviation_cost`]; the two are checked
/// against each other in the test suite.
pub fn deviation_cost(
    game: &Game,
    state: &State,
    player: usize,
    choice: &Choice,
    mode: Mode,
) -> Result<Scalar, GameError> {
    game.check_choice(player, choice)?;
    let deviated = state.with_choice(player, choice.clone());
    match mode {
        Mode::Psi => crate::potential::cost_psi(game, &deviated, player),
        Mode::Weighted => crate::potential::cost_weighted(game, &deviated, player),
    }
}

/// Best response in the given state; convenience wrapper over [`StateEval`].
pub fn best_response(
    game: &Game,
    state: &State,
    player: usize,
    mode: Mode,
) -> Result<(Choice, Scalar), DynamicsError> {
    let eval = StateEval::new(game, state.clone()).map_err(DynamicsError::Game)?;
    eval.best_response(player, mode)
}

/// The state `(S_-u, choice)` after validating the deviation.
pub fn apply_move(
    game: &Game,
    state: &State,
    player: usize,
    choice: Choice,
) -> Result<State, GameError> {
    game.check_choice(player, &choice)?;
    Ok(state.with_choice(player, choice))
}

/// Best-deviation ratios for the players of `subset` (all players when
/// `None`): `ratio_u = cost_u(S) / cost_u(S_-u, BR_u(S))`, 1 when the best
/// response does not improve, unbounded when the denominator is zero.
pub fn verify_approx_equilibrium(
    game: &Game,
    state: &State,
    mode: Mode,
    subset: Option<&PlayerSet>,
) -> Result<EquilibriumReport, DynamicsError> {
    let eval = StateEval::new(game, state.clone()).map_err(DynamicsError::Game)?;
    let players: Vec<usize> = match subset {
        Some(set) => set.iter().copied().collect(),
        None => (0..game.player_count()).collect(),
    };
    let mut verdicts = Vec::with_capacity(players.len());
    let mut rho = CostRatio::Finite(Scalar::one());
    for u in players {
        let current = eval.cost(u, mode);
        let (choice, best) = eval.best_response(u, mode)?;
        let ratio = if best < current {
            if best.is_zero() {
                CostRatio::Unbounded
            } else {
                CostRatio::Finite(&current / &best)
            }
        } else {
            CostRatio::Finite(Scalar::one())
        };
        if ratio > rho {
            rho = ratio.clone();
        }
        verdicts.push(PlayerVerdict {
            player: u,
            current_cost: current,
            best_response: choice,
            best_cost: best,
            ratio,
        });
    }
    Ok(EquilibriumReport {
        verdicts,
        rho_achieved: rho,
    })
}

/// Minimum-cost strategy under a per-resource price function: exhaustive over
/// explicit strategy lists, label-setting shortest path over networks. The
/// shortest-path distance is the pair (cost, hops) ordered lexicographically,
/// so the tight-edge walk below strictly shrinks the hop count and always
/// produces a simple path even across zero-price edges.
fn select_best(
    game: &Game,
    player: usize,
    price: &dyn Fn(usize) -> Scalar,
    current: Option<&Choice>,
) -> Result<(Choice, Scalar), DynamicsError> {
    match &game.players[player].strategies {
        StrategySpace::Explicit(lists) => {
            let mut best: Option<(Choice, Scalar)> = None;
            for (i, rs) in lists.iter().enumerate() {
                let cost: Scalar = rs.iter().map(|&r| price(r)).sum();
                let candidate = Choice::Strategy(i);
                best = Some(match best {
                    None => (candidate, cost),
                    Some((bc, bcost)) => {
                        if cost < bcost
                            || (cost == bcost
                                && beats_tie(game, player, &candidate, &bc, current))
                        {
                            (candidate, cost)
                        } else {
                            (bc, bcost)
                        }
                    }
                });
            }
            best.ok_or_else(|| DynamicsError::NoValidStrategy(game.players[player].id.clone()))
        }
        StrategySpace::Network { source, target } => {
            network_best_response(game, player, *source, *target, price, current)
        }
    }
}

/// True when `candidate` should replace `incumbent` at equal cost: the
/// current strategy wins, then the lexicographically smaller key.
fn beats_tie(
    game: &Game,
    player: usize,
    candidate: &Choice,
    incumbent: &Choice,
    current: Option<&Choice>,
) -> bool {
    if let Some(cur) = current {
        if incumbent == cur {
            return false;
        }
        if candidate == cur {
            return true;
        }
    }
    game.choice_lex_key(player, candidate) < game.choice_lex_key(player, incumbent)
}

fn network_best_response(
    game: &Game,
    player: usize,
    source: usize,
    target: usize,
    price: &dyn Fn(usize) -> Scalar,
    current: Option<&Choice>,
) -> Result<(Choice, Scalar), DynamicsError> {
    let net = game
        .network
        .as_ref()
        .expect("network strategy space without network");
    let edge_price: Vec<Scalar> = net.edges.iter().map(|e| price(e.resource)).collect();
    // Distances to the target over reversed edges.
    let mut rev_in: Vec<Vec<usize>> = vec![Vec::new(); net.node_ids.len()];
    for (i, e) in net.edges.iter().enumerate() {
        rev_in[e.to].push(i);
    }
    let mut dist: Vec<Option<(Scalar, usize)>> = vec![None; net.node_ids.len()];
    let mut heap = BinaryHeap::new();
    dist[target] = Some((Scalar::zero(), 0));
    heap.push(Reverse((Scalar::zero(), 0usize, target)));
    while let Some(Reverse((cost, hops, v))) = heap.pop() {
        match &dist[v] {
            Some((dc, dh)) if (dc, dh) < (&cost, &hops) => continue,
            _ => {}
        }
        for &ei in &rev_in[v] {
            let e = &net.edges[ei];
            let cand = (&cost + &edge_price[ei], hops + 1);
            let better = match &dist[e.from] {
                None => true,
                Some(existing) => (&cand.0, &cand.1) < (&existing.0, &existing.1),
            };
            if better {
                dist[e.from] = Some(cand.clone());
                heap.push(Reverse((cand.0, cand.1, e.from)));
            }
        }
    }
    let (best_cost, best_hops) = dist[source]
        .clone()
        .ok_or_else(|| DynamicsError::NoValidStrategy(game.players[player].id.clone()))?;
    if let Some(cur @ Choice::Path(_)) = current {
        let cur_cost: Scalar = game
            .choice_resources(player, cur)
            .iter()
            .map(|&r| price(r))
            .sum();
        if cur_cost == best_cost {
            return Ok((cur.clone(), best_cost));
        }
    }
    // Walk tight edges from the source, smallest edge id first.
    let mut path = Vec::with_capacity(best_hops);
    let mut v = source;
    let (mut need_cost, mut need_hops) = (best_cost.clone(), best_hops);
    while v != target {
        let mut chosen: Option<usize> = None;
        for &ei in &net.out[v] {
            let e = &net.edges[ei];
            let tail = match &dist[e.to] {
                Some(t) => t,
                None => continue,
            };
            if tail.1 + 1 == need_hops && &edge_price[ei] + &tail.0 == need_cost {
                let better = match chosen {
                    None => true,
                    Some(c) => net.edges[ei].id < net.edges[c].id,
                };
                if better {
                    chosen = Some(ei);
                }
            }
        }
        let ei = chosen.expect("tight edge exists along a shortest path");
        let e = &net.edges[ei];
        need_cost -= &edge_price[ei];
        need_hops -= 1;
        path.push(ei);
        v = e.to;
    }
    Ok((Choice::Path(path), best_cost))
}
