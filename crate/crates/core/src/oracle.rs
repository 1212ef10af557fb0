//! Brute-force ground truth on small explicit-strategy instances: full state
//! enumeration, exact and approximate equilibrium lists, the minimum-potential
//! state, the empirical stretch of the potential, the improvement-move graph
//! with cycle detection, and a sampler for the partial-stretch bound.
//!
//! Everything enumerates at most `cap` states and verifies them exactly;
//! verification sweeps may fan out over a bounded number of threads with a
//! deterministic in-order reduction.

use crate::dynamics::{verify_approx_equilibrium, CostRatio, DynamicsError, Mode, StateEval};
use crate::game::{Choice, Game, State};
use crate::potential::{partial_potential_full, potential, theta, PlayerSet, PotentialError};
use crate::scalar::Scalar;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Hard limit on the number of enumerated states.
    pub cap: usize,
    /// Worker threads for per-state verification sweeps.
    pub threads: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cap: 200_000,
            threads: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("state enumeration requires explicit strategy spaces")]
    NetworkStrategySpace,
    #[error("{states} states exceed the enumeration cap {cap}")]
    CapExceeded { states: u128, cap: usize },
    #[error("minimum potential is zero; stretch undefined for this game")]
    DegeneratePotential,
    #[error("no equilibrium found at the requested rho")]
    NoEquilibria,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Theta(#[from] PotentialError),
}

/// Number of states `Π_u |Σ_u|` of an explicit game.
pub fn state_count(game: &Game) -> Result<u128, OracleError> {
    let mut product: u128 = 1;
    for u in 0..game.player_count() {
        let lists = game
            .explicit_strategies(u)
            .ok_or(OracleError::NetworkStrategySpace)?;
        product = product.saturating_mul(lists.len() as u128);
    }
    Ok(product)
}

/// Every state of an explicit game exactly once, in odometer order (last
/// player cycles fastest).
pub fn enumerate_states(game: &Game, cap: usize) -> Result<Vec<State>, OracleError> {
    let total = state_count(game)?;
    if total > cap as u128 {
        return Err(OracleError::CapExceeded { states: total, cap });
    }
    let n = game.player_count();
    let sizes: Vec<usize> = (0..n)
        .map(|u| game.explicit_strategies(u).expect("explicit game").len())
        .collect();
    let mut states = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; n];
    loop {
        states.push(State::new(idx.iter().map(|&i| Choice::Strategy(i)).collect()));
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(states);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Maps `f` over the states on up to `threads` workers, preserving order.
fn par_map<T, F>(states: &[State], threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&State) -> T + Sync,
{
    let threads = threads.max(1).min(states.len().max(1));
    if threads == 1 {
        return states.iter().map(f).collect();
    }
    let chunk = states.len().div_ceil(threads);
    let mut out: Vec<Vec<T>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = states
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<T>>()))
            .collect();
        for h in handles {
            out.push(h.join().expect("verification worker panicked"));
        }
    });
    out.into_iter().flatten().collect()
}

/// All states whose verification reports `rho_achieved <= rho`.
/// `CostRatio::Unbounded` as the threshold accepts every state.
pub fn exact_equilibria(
    game: &Game,
    mode: Mode,
    rho: &CostRatio,
    opts: &OracleOptions,
) -> Result<Vec<State>, OracleError> {
    let states = enumerate_states(game, opts.cap)?;
    let flags = par_map(&states, opts.threads, |s| {
        verify_approx_equilibrium(game, s, mode, None)
            .map(|r| r.rho_achieved <= *rho)
            .unwrap_or(false)
    });
    Ok(states
        .into_iter()
        .zip(flags)
        .filter_map(|(s, keep)| keep.then_some(s))
        .collect())
}

/// Global minimizer of the potential, first in enumeration order on ties.
pub fn min_potential_state(
    game: &Game,
    opts: &OracleOptions,
) -> Result<(State, Scalar), OracleError> {
    let states = enumerate_states(game, opts.cap)?;
    let potentials = par_map(&states, opts.threads, |s| potential(game, s));
    let mut best: Option<usize> = None;
    for (i, value) in potentials.iter().enumerate() {
        best = Some(match best {
            None => i,
            Some(b) if value < &potentials[b] => i,
            Some(b) => b,
        });
    }
    let i = best.ok_or(OracleError::NoEquilibria)?;
    let value = potentials[i].clone();
    Ok((states.into_iter().nth(i).expect("index in range"), value))
}

/// Empirical ρ-stretch: the maximum of `Φ(S)/Φ(S*)` over all ρ-approximate
/// equilibria S of the Ψ-priced game, against the minimum potential Φ(S*).
pub fn measure_stretch(
    game: &Game,
    rho: &Scalar,
    opts: &OracleOptions,
) -> Result<Scalar, OracleError> {
    let states = enumerate_states(game, opts.cap)?;
    let potentials = par_map(&states, opts.threads, |s| potential(game, s));
    let min_phi = potentials
        .iter()
        .min()
        .ok_or(OracleError::NoEquilibria)?
        .clone();
    if min_phi.is_zero() {
        return Err(OracleError::DegeneratePotential);
    }
    let threshold = CostRatio::Finite(rho.clone());
    let flags = par_map(&states, opts.threads, |s| {
        verify_approx_equilibrium(game, s, Mode::Psi, None)
            .map(|r| r.rho_achieved <= threshold)
            .unwrap_or(false)
    });
    let mut worst: Option<Scalar> = None;
    for (is_eq, phi) in flags.into_iter().zip(&potentials) {
        if !is_eq {
            continue;
        }
        let ratio = phi / &min_phi;
        worst = Some(match worst {
            None => ratio,
            Some(w) if ratio > w => ratio,
            Some(w) => w,
        });
    }
    worst.ok_or(OracleError::NoEquilibria)
}

#[derive(Debug, Clone)]
pub struct DynEdge {
    pub from: usize,
    pub to: usize,
    pub player: usize,
}

/// Improvement-move graph over all states of an explicit game.
#[derive(Debug, Clone)]
pub struct DynamicsGraph {
    pub states: Vec<State>,
    pub edges: Vec<DynEdge>,
    /// Out-edge indices per state.
    pub out: Vec<Vec<usize>>,
    pub sinks: Vec<usize>,
    pub acyclic: bool,
    /// Edge indices of one improvement cycle, when the graph has one.
    pub cycle_witness: Option<Vec<usize>>,
}

/// Builds the full improvement-move graph under `mode` costs and detects
/// cycles.
pub fn dynamics_graph(
    game: &Game,
    mode: Mode,
    opts: &OracleOptions,
) -> Result<DynamicsGraph, OracleError> {
    let states = enumerate_states(game, opts.cap)?;
    let mut index = std::collections::HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
    }
    let mut edges = Vec::new();
    let mut out = vec![Vec::new(); states.len()];
    for (si, s) in states.iter().enumerate() {
        let eval = StateEval::new(game, s.clone()).map_err(DynamicsError::Game)?;
        for u in 0..game.player_count() {
            let current = eval.cost(u, mode);
            let lists = game
                .explicit_strategies(u)
                .ok_or(OracleError::NetworkStrategySpace)?;
            for alt in 0..lists.len() {
                let choice = Choice::Strategy(alt);
                if choice == s.choices[u] {
                    continue;
                }
                let dev = eval
                    .deviation_cost(u, &choice, mode)
                    .map_err(DynamicsError::Game)?;
                if dev < current {
                    let to = index[&s.with_choice(u, choice)];
                    out[si].push(edges.len());
                    edges.push(DynEdge {
                        from: si,
                        to,
                        player: u,
                    });
                }
            }
        }
    }
    let sinks: Vec<usize> = (0..states.len()).filter(|&i| out[i].is_empty()).collect();
    let cycle_witness = find_cycle(states.len(), &edges, &out);
    Ok(DynamicsGraph {
        acyclic: cycle_witness.is_none(),
        states,
        edges,
        out,
        sinks,
        cycle_witness,
    })
}

/// Iterative three-color depth-first search; returns the edge indices of the
/// first back-edge cycle found.
fn find_cycle(n: usize, edges: &[DynEdge], out: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; n];
    for root in 0..n {
        if color[root] != Color::White {
            continue;
        }
        // Stack of (node, incoming edge, next out-edge position).
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        color[root] = Color::Gray;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.2 < out[v].len() {
                let ei = out[v][top.2];
                top.2 += 1;
                let w = edges[ei].to;
                match color[w] {
                    Color::White => {
                        color[w] = Color::Gray;
                        stack.push((w, Some(ei), 0));
                    }
                    Color::Gray => {
                        let start = stack
                            .iter()
                            .position(|&(node, _, _)| node == w)
                            .expect("gray node on stack");
                        let mut cycle: Vec<usize> = stack[start + 1..]
                            .iter()
                            .map(|&(_, inc, _)| inc.expect("non-root stack entry"))
                            .collect();
                        cycle.push(ei);
                        return Some(cycle);
                    }
                    Color::Black => {}
                }
            } else {
                color[v] = Color::Black;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct PartialStretchReport {
    pub samples: usize,
    pub equilibria_checked: usize,
    pub comparisons: usize,
    pub violations: Vec<String>,
}

impl PartialStretchReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples player subsets R and checks, for every state S that is a
/// ρ-approximate equilibrium for R and every state S* agreeing with S outside
/// R, that `Φ_R(S) <= θ_d(ρ) · Φ_R(S*)`.
pub fn check_partial_stretch(
    game: &Game,
    rho: &Scalar,
    samples: usize,
    seed: u64,
    opts: &OracleOptions,
) -> Result<PartialStretchReport, OracleError> {
    let states = enumerate_states(game, opts.cap)?;
    let bound = theta(game.degree, rho)?;
    let threshold = CostRatio::Finite(rho.clone());
    let n = game.player_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PartialStretchReport {
        samples,
        equilibria_checked: 0,
        comparisons: 0,
        violations: Vec::new(),
    };
    for _ in 0..samples {
        let subset: PlayerSet = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if subset.is_empty() {
            continue;
        }
        for s in &states {
            let verdicts = verify_approx_equilibrium(game, s, Mode::Psi, Some(&subset))?;
            if !(verdicts.rho_achieved <= threshold) {
                continue;
            }
            report.equilibria_checked += 1;
            let phi_here = partial_potential_full(game, s, &subset);
            for alt in states_varying(game, s, &subset) {
                let phi_there = partial_potential_full(game, &alt, &subset);
                report.comparisons += 1;
                if phi_here > &bound * &phi_there {
                    report.violations.push(format!(
                        "subset {:?}: partial potential exceeds theta bound",
                        subset
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// All states that agree with `base` outside `vary`.
fn states_varying(game: &Game, base: &State, vary: &PlayerSet) -> Vec<State> {
    let players: Vec<usize> = vary.iter().copied().collect();
    let sizes: Vec<usize> = players
        .iter()
        .map(|&u| game.explicit_strategies(u).expect("explicit game").len())
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; players.len()];
    loop {
        let mut s = base.clone();
        for (slot, &u) in players.iter().enumerate() {
            s.choices[u] = Choice::Strategy(idx[slot]);
        }
        out.push(s);
        let mut pos = players.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}
