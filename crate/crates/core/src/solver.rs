//! Phased best-response solvers for approximate pure Nash equilibria.
//!
//! One algorithm runs on the Ψ-priced costs (mode `psi`), a second directly
//! on the weighted-game costs (mode `weighted`, degree >= 2). Both derive a
//! geometric boundary ladder `b_i = cost_max * g^-i` from the exact cost
//! envelope of the instance, run a phase-0 sweep in which players above `b_1`
//! exhaust their q-moves, and then m-1 phases in which a player may move if
//! she has a p-move at cost `b_i` or above, or a q-move inside
//! `[b_{i+1}, b_i)`. Players whose cost is at least the phase boundary when a
//! phase drains are frozen. Every admitted move strictly decreases the
//! Ψ-potential (in weighted mode because q >= d!), which is what the audit
//! re-verifies move by move.

use crate::dynamics::{solo_best_response, DynamicsError, Mode, StateEval};
use crate::game::{Choice, Game, GameError, State};
use crate::potential::{degree_factorial, partial_potential_full, theta, PotentialError};
use crate::scalar::{ceil_log2_ratio, pow_scalar, scalar_int, scalar_ratio, Scalar};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Which eligible player moves next. The algorithm only requires that *some*
/// eligible player moves; the rule here makes runs reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MoverPolicy {
    /// Highest current cost, ties by player id.
    #[default]
    MaxCost,
    /// Smallest player id.
    MinId,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Accept a gamma outside the admissible range; all certified bounds are
    /// dropped for such runs.
    pub force: bool,
    /// Diagnostic cap converting a non-terminating run into an error. The
    /// theoretical bound `m n g gamma^-2` is still asserted by the audit.
    pub move_cap: usize,
    pub policy: MoverPolicy,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            force: false,
            move_cap: 10_000_000,
            policy: MoverPolicy::MaxCost,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("stretch constant unavailable: {0}")]
    Theta(#[from] PotentialError),
    #[error("gamma {gamma} outside admissible range (0, {max}]")]
    GammaOutOfRange { gamma: String, max: String },
    #[error("gamma must be positive")]
    NonPositiveGamma,
    #[error("weighted mode requires latency degree at least 2")]
    WeightedNeedsSuperlinear,
    #[error("player `{0}` has zero solo best-response cost")]
    ZeroSoloCost(String),
    #[error("derived p is not positive; gamma too large for this degree")]
    PNotPositive,
    #[error("derived ladder ratio g is below 2")]
    LadderInvalid,
    #[error("game has no players")]
    EmptyGame,
    #[error("move cap {cap} exceeded after {moves} moves")]
    MoveCapExceeded { moves: usize, cap: usize },
}

/// Derived run parameters; `boundaries[i]` is `b_i` for `i = 0..=m`.
#[derive(Debug, Clone)]
pub struct SolverParams {
    pub mode: Mode,
    pub gamma: Scalar,
    pub cost_min: Scalar,
    pub cost_max: Scalar,
    pub m: u32,
    pub g: Scalar,
    pub q: Scalar,
    pub p: Scalar,
    pub boundaries: Vec<Scalar>,
    pub move_cap: usize,
    pub policy: MoverPolicy,
    /// Gamma-range check was bypassed; certified bounds are void.
    pub forced: bool,
}

impl SolverParams {
    /// Largest admissible gamma for the given degree and mode: 1/10 for
    /// psi-mode degree-1 games, `1/(8 θ_d(2))` for psi-mode degree d >= 2,
    /// and `1/(4 d! θ_d(2(d!)^2))` for weighted mode.
    pub fn admissible_gamma_max(degree: u32, mode: Mode) -> Result<Scalar, SolveError> {
        match mode {
            Mode::Psi => {
                if degree == 1 {
                    Ok(scalar_ratio(1, 10))
                } else {
                    let t = theta(degree, &scalar_int(2))?;
                    Ok((scalar_int(8) * t).recip())
                }
            }
            Mode::Weighted => {
                if degree < 2 {
                    return Err(SolveError::WeightedNeedsSuperlinear);
                }
                let f = degree_factorial(degree);
                let t = theta(degree, &(scalar_int(2) * pow_scalar(&f, 2)))?;
                Ok((scalar_int(4) * f * t).recip())
            }
        }
    }

    /// Certified approximation factor of the final state in the solver's own
    /// cost model: `(1+2γ)/(1-2γ) · p` in psi mode and `6 (d!)^2 θ_d(2(d!)^2)`
    /// in weighted mode. `None` for forced parameterizations.
    pub fn certified_rho_bound(&self, degree: u32) -> Option<Scalar> {
        if self.forced {
            return None;
        }
        match self.mode {
            Mode::Psi => {
                let two_gamma = scalar_int(2) * &self.gamma;
                Some((Scalar::one() + &two_gamma) / (Scalar::one() - &two_gamma) * &self.p)
            }
            Mode::Weighted => {
                let f = degree_factorial(degree);
                let t = theta(degree, &(scalar_int(2) * pow_scalar(&f, 2))).ok()?;
                Some(scalar_int(6) * pow_scalar(&f, 2) * t)
            }
        }
    }

    /// Theoretical move bound `m · n · g · γ^-2`.
    pub fn move_bound(&self, players: usize) -> Scalar {
        scalar_int(self.m as i64)
            * scalar_int(players as i64)
            * &self.g
            * pow_scalar(&self.gamma, 2).recip()
    }
}

/// Computes the run parameters from the exact cost envelope: `cost_min` is
/// the smallest solo best-response cost, `cost_max` the largest cost in the
/// initial state, `m = max(1, ceil(log2(cost_max/cost_min)))`, and q, p, g
/// follow the mode's formulas.
pub fn derive_params(
    game: &Game,
    initial: &State,
    gamma: &Scalar,
    mode: Mode,
    opts: &SolveOptions,
) -> Result<SolverParams, SolveError> {
    let n = game.player_count();
    if n == 0 {
        return Err(SolveError::EmptyGame);
    }
    let d = game.degree;
    if !gamma.is_positive() {
        return Err(SolveError::NonPositiveGamma);
    }
    let mut forced = false;
    match SolverParams::admissible_gamma_max(d, mode) {
        Ok(max) => {
            if *gamma > max {
                if opts.force {
                    forced = true;
                } else {
                    return Err(SolveError::GammaOutOfRange {
                        gamma: crate::scalar::rational_string(gamma),
                        max: crate::scalar::rational_string(&max),
                    });
                }
            }
        }
        Err(e) => {
            if opts.force {
                forced = true;
            } else {
                return Err(e);
            }
        }
    }

    let mut cost_min: Option<Scalar> = None;
    for u in 0..n {
        let (_, solo) = solo_best_response(game, u, mode)?;
        if solo.is_zero() {
            return Err(SolveError::ZeroSoloCost(game.players[u].id.clone()));
        }
        cost_min = Some(match cost_min {
            None => solo,
            Some(prev) => prev.min(solo),
        });
    }
    let cost_min = cost_min.expect("at least one player");
    let eval = StateEval::new(game, initial.clone())?;
    let cost_max = (0..n)
        .map(|u| eval.cost(u, mode))
        .max()
        .expect("at least one player");

    let m = ceil_log2_ratio(&(&cost_max / &cost_min)).max(1);

    let factorial_d = degree_factorial(d);
    let (q, p) = match mode {
        Mode::Psi => {
            let q = Scalar::one() + gamma;
            let t = theta(d, &q)?;
            let denom = t.recip() - scalar_int(2) * gamma;
            if !denom.is_positive() {
                return Err(SolveError::PNotPositive);
            }
            (q, denom.recip())
        }
        Mode::Weighted => {
            let q = &factorial_d * (Scalar::one() + gamma);
            let t = theta(d, &(&factorial_d * &q))?;
            let denom = (&factorial_d * t).recip() - scalar_int(2) * gamma;
            if !denom.is_positive() {
                return Err(SolveError::PNotPositive);
            }
            (q, denom.recip())
        }
    };

    let gamma_inv = gamma.recip();
    let g = scalar_int(2)
        * pow_scalar(
            &(Scalar::one() + scalar_int(m as i64) * (Scalar::one() + &gamma_inv)),
            d,
        )
        * pow_scalar(&scalar_int(d as i64), d)
        * scalar_int(n as i64)
        * pow_scalar(&gamma_inv, 3);
    if g < scalar_int(2) {
        return Err(SolveError::LadderInvalid);
    }
    let g_inv = g.recip();
    let mut boundaries = Vec::with_capacity(m as usize + 1);
    let mut b = cost_max.clone();
    boundaries.push(b.clone());
    for _ in 0..m {
        b *= &g_inv;
        boundaries.push(b.clone());
    }
    debug_assert!(boundaries[m as usize] <= cost_min);

    Ok(SolverParams {
        mode,
        gamma: gamma.clone(),
        cost_min,
        cost_max,
        m,
        g,
        q,
        p,
        boundaries,
        move_cap: opts.move_cap,
        policy: opts.policy,
        forced,
    })
}

/// Admission rule a recorded move satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Phase0,
    QMove,
    PMove,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Phase0 => "phase0",
            MoveKind::QMove => "q-move",
            MoveKind::PMove => "p-move",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MoveRecord {
    pub phase: usize,
    pub player: usize,
    pub from: Choice,
    pub to: Choice,
    /// Mode cost, i.e. what the admission rule compared.
    pub cost_before: Scalar,
    pub cost_after: Scalar,
    /// Ψ-cost, recorded in both modes for the potential bookkeeping.
    pub psi_cost_before: Scalar,
    pub psi_cost_after: Scalar,
    pub potential_before: Scalar,
    pub potential_after: Scalar,
    pub kind: MoveKind,
}

#[derive(Debug, Clone)]
pub struct FinalizeRecord {
    pub player: usize,
    pub mode_cost: Scalar,
    pub psi_cost: Scalar,
}

#[derive(Debug, Clone)]
pub struct PhaseSummary {
    pub phase: usize,
    /// Players that moved at least once during this phase.
    pub movers: BTreeSet<usize>,
    pub moves: usize,
    /// State when the phase drained.
    pub state_after: State,
    /// Movers-partial potential of the state the phase started from
    /// (phases >= 1 only).
    pub partial_potential_start: Option<Scalar>,
    /// Players frozen at the end of this phase, with their costs at that
    /// moment.
    pub finalized: Vec<FinalizeRecord>,
}

#[derive(Debug, Clone)]
pub struct MoveLog {
    pub initial_state: State,
    pub records: Vec<MoveRecord>,
    pub phases: Vec<PhaseSummary>,
    pub total_moves: usize,
}

impl MoveLog {
    pub fn final_state(&self) -> &State {
        &self.phases.last().expect("at least phase 0").state_after
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub final_state: State,
    pub log: MoveLog,
}

struct EligibleMove {
    player: usize,
    cost: Scalar,
    choice: Choice,
    best_cost: Scalar,
    kind: MoveKind,
}

/// Runs the phased algorithm from `initial` under `params` and returns the
/// final state together with the full move log.
pub fn solve(
    game: &Game,
    initial: &State,
    params: &SolverParams,
) -> Result<SolveOutcome, SolveError> {
    let n = game.player_count();
    if n == 0 {
        return Err(SolveError::EmptyGame);
    }
    let mut eval = StateEval::new(game, initial.clone())?;
    let mut records: Vec<MoveRecord> = Vec::new();
    let mut phases: Vec<PhaseSummary> = Vec::new();
    let mut total_moves = 0usize;
    let mut frozen: BTreeSet<usize> = BTreeSet::new();

    for phase in 0..params.m as usize {
        let pre_state = eval.state().clone();
        let mut movers: BTreeSet<usize> = BTreeSet::new();
        let mut moves_here = 0usize;
        while let Some(next) = pick_mover(game, &eval, params, phase, &frozen)? {
            if total_moves >= params.move_cap {
                return Err(SolveError::MoveCapExceeded {
                    moves: total_moves,
                    cap: params.move_cap,
                });
            }
            let u = next.player;
            let from = eval.state().choices[u].clone();
            let psi_before = eval.cost(u, Mode::Psi);
            let potential_before = eval.potential().clone();
            eval.apply(u, next.choice.clone())?;
            let cost_after = eval.cost(u, params.mode);
            debug_assert_eq!(cost_after, next.best_cost);
            records.push(MoveRecord {
                phase,
                player: u,
                from,
                to: next.choice,
                cost_before: next.cost,
                cost_after,
                psi_cost_before: psi_before,
                psi_cost_after: eval.cost(u, Mode::Psi),
                potential_before,
                potential_after: eval.potential().clone(),
                kind: next.kind,
            });
            movers.insert(u);
            total_moves += 1;
            moves_here += 1;
        }
        let partial_potential_start = if phase >= 1 {
            Some(partial_potential_full(game, &pre_state, &movers))
        } else {
            None
        };
        let mut finalized = Vec::new();
        if phase >= 1 {
            let b_i = &params.boundaries[phase];
            for u in 0..n {
                if frozen.contains(&u) {
                    continue;
                }
                let cost = eval.cost(u, params.mode);
                if &cost >= b_i {
                    frozen.insert(u);
                    finalized.push(FinalizeRecord {
                        player: u,
                        psi_cost: eval.cost(u, Mode::Psi),
                        mode_cost: cost,
                    });
                }
            }
        }
        phases.push(PhaseSummary {
            phase,
            movers,
            moves: moves_here,
            state_after: eval.state().clone(),
            partial_potential_start,
            finalized,
        });
    }

    Ok(SolveOutcome {
        final_state: eval.state().clone(),
        log: MoveLog {
            initial_state: initial.clone(),
            records,
            phases,
            total_moves,
        },
    })
}

/// Deterministic choice among the players the current phase admits, or `None`
/// when the phase has drained.
fn pick_mover(
    game: &Game,
    eval: &StateEval,
    params: &SolverParams,
    phase: usize,
    frozen: &BTreeSet<usize>,
) -> Result<Option<EligibleMove>, SolveError> {
    let n = game.player_count();
    let mut best: Option<EligibleMove> = None;
    for u in 0..n {
        if phase >= 1 && frozen.contains(&u) {
            continue;
        }
        let cost = eval.cost(u, params.mode);
        let admitted = if phase == 0 {
            if cost >= params.boundaries[1] {
                Some((&params.q, MoveKind::Phase0))
            } else {
                None
            }
        } else if cost >= params.boundaries[phase] {
            Some((&params.p, MoveKind::PMove))
        } else if cost >= params.boundaries[phase + 1] {
            Some((&params.q, MoveKind::QMove))
        } else {
            None
        };
        let (threshold, kind) = match admitted {
            Some(t) => t,
            None => continue,
        };
        let (choice, best_cost) = eval.best_response(u, params.mode)?;
        // Strict improvement by a factor greater than the threshold:
        // best_cost < cost / threshold.
        if &best_cost * threshold >= cost {
            continue;
        }
        let candidate = EligibleMove {
            player: u,
            cost,
            choice,
            best_cost,
            kind,
        };
        best = Some(match best {
            None => candidate,
            Some(incumbent) => match params.policy {
                MoverPolicy::MaxCost => {
                    if candidate.cost > incumbent.cost
                        || (candidate.cost == incumbent.cost
                            && game.players[candidate.player].id
                                < game.players[incumbent.player].id)
                    {
                        candidate
                    } else {
                        incumbent
                    }
                }
                MoverPolicy::MinId => {
                    if game.players[candidate.player].id < game.players[incumbent.player].id {
                        candidate
                    } else {
                        incumbent
                    }
                }
            },
        });
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct AuditFailure {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub passed: bool,
    pub checks_run: usize,
    pub failures: Vec<AuditFailure>,
}

/// Re-derives the solver's guarantees from the logged snapshots:
///
/// * every recorded move strictly improved its mode cost and strictly
///   decreased the Ψ-potential;
/// * after phase 0, no player with cost >= b_1 kept a q-move;
/// * for every phase i >= 1, the movers-partial potential of the phase's
///   start state is at most `γ^-1 · n · b_i`;
/// * a player frozen at phase j ends with `ĉ_u(final) <= (1+2γ) ĉ_u(S^j)`,
///   and on explicit-strategy games her deviation costs satisfy
///   `ĉ_u(final_-u, s') >= (1-2γ) ĉ_u(S^j_-u, s')` for every strategy s'
///   (network games are audited on the cost-increase side only);
/// * the total number of moves respects the theoretical bound.
pub fn audit_log(game: &Game, log: &MoveLog, params: &SolverParams) -> AuditReport {
    let mut failures: Vec<AuditFailure> = Vec::new();
    let mut checks = 0usize;
    let n = game.player_count();
    let fail = |failures: &mut Vec<AuditFailure>, check: &str, detail: String| {
        failures.push(AuditFailure {
            check: check.to_string(),
            detail,
        });
    };

    for (i, r) in log.records.iter().enumerate() {
        checks += 2;
        if r.potential_after >= r.potential_before {
            fail(
                &mut failures,
                "potential-decrease",
                format!(
                    "move {i} (phase {}, player {}) did not decrease the potential",
                    r.phase, r.player
                ),
            );
        }
        if r.cost_after >= r.cost_before {
            fail(
                &mut failures,
                "cost-improvement",
                format!(
                    "move {i} (phase {}, player {}) did not improve the mover's cost",
                    r.phase, r.player
                ),
            );
        }
    }

    // Phase 0 exit condition.
    if let Some(p0) = log.phases.first() {
        if let Ok(eval) = StateEval::new(game, p0.state_after.clone()) {
            for u in 0..n {
                let cost = eval.cost(u, params.mode);
                if cost < params.boundaries[1] {
                    continue;
                }
                checks += 1;
                match eval.best_response(u, params.mode) {
                    Ok((_, bc)) => {
                        if &bc * &params.q < cost {
                            fail(
                                &mut failures,
                                "phase0-exit",
                                format!("player {u} still has a q-move after phase 0"),
                            );
                        }
                    }
                    Err(e) => fail(
                        &mut failures,
                        "phase0-exit",
                        format!("best response failed: {e}"),
                    ),
                }
            }
        }
    }

    // Per-phase partial potential bound.
    let gamma_inv = params.gamma.recip();
    for i in 1..log.phases.len() {
        let summary = &log.phases[i];
        let pre_state = &log.phases[i - 1].state_after;
        let partial = partial_potential_full(game, pre_state, &summary.movers);
        checks += 1;
        if let Some(recorded) = &summary.partial_potential_start {
            if recorded != &partial {
                fail(
                    &mut failures,
                    "phase-potential-record",
                    format!("phase {i}: recorded partial potential disagrees with recomputation"),
                );
            }
        }
        let bound = &gamma_inv * scalar_int(n as i64) * &params.boundaries[i];
        if partial > bound {
            fail(
                &mut failures,
                "phase-potential-bound",
                format!("phase {i}: movers-partial potential exceeds gamma^-1 * n * b_i"),
            );
        }
    }

    // Drift of frozen players, in Ψ-costs for both modes.
    let final_eval = StateEval::new(game, log.final_state().clone()).ok();
    let two_gamma = scalar_int(2) * &params.gamma;
    let up = Scalar::one() + &two_gamma;
    let down = Scalar::one() - &two_gamma;
    let all_explicit = (0..n).all(|u| game.explicit_strategies(u).is_some());
    for summary in &log.phases {
        if summary.finalized.is_empty() {
            continue;
        }
        let snap_eval = match StateEval::new(game, summary.state_after.clone()) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let fin_eval = match final_eval.as_ref() {
            Some(e) => e,
            None => continue,
        };
        for rec in &summary.finalized {
            let u = rec.player;
            let at_snap = snap_eval.cost(u, Mode::Psi);
            let at_end = fin_eval.cost(u, Mode::Psi);
            checks += 1;
            if at_end > &up * &at_snap {
                fail(
                    &mut failures,
                    "cost-increase",
                    format!(
                        "player {u} frozen at phase {}: final psi-cost exceeds (1+2γ) times the snapshot",
                        summary.phase
                    ),
                );
            }
            if all_explicit {
                let strategies = game.explicit_strategies(u).expect("explicit game").len();
                for s in 0..strategies {
                    let choice = Choice::Strategy(s);
                    let dev_snap = snap_eval
                        .deviation_cost(u, &choice, Mode::Psi)
                        .expect("valid strategy index");
                    let dev_end = fin_eval
                        .deviation_cost(u, &choice, Mode::Psi)
                        .expect("valid strategy index");
                    checks += 1;
                    if dev_end < &down * &dev_snap {
                        fail(
                            &mut failures,
                            "deviation-decrease",
                            format!(
                                "player {u} frozen at phase {}: deviation {s} fell below (1-2γ) times the snapshot",
                                summary.phase
                            ),
                        );
                    }
                }
            }
        }
    }

    // Theoretical move bound.
    checks += 1;
    if scalar_int(log.total_moves as i64) > params.move_bound(n) {
        fail(
            &mut failures,
            "move-bound",
            format!("{} moves exceed the theoretical bound", log.total_moves),
        );
    }

    AuditReport {
        passed: failures.is_empty(),
        checks_run: checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::verify_approx_equilibrium;
    use crate::game::{PlayerStrategies, Resource};

    fn res(id: &str, coeffs: &[i64]) -> Resource {
        Resource {
            id: id.to_string(),
            coeffs: coeffs.iter().map(|&c| scalar_int(c)).collect(),
        }
    }

    fn crossing_game() -> Game {
        Game::new(
            1,
            vec![res("a", &[0, 1]), res("b", &[0, 3])],
            vec![
                (
                    "p1".into(),
                    scalar_int(1),
                    PlayerStrategies::Explicit(vec![
                        vec!["a".into()],
                        vec!["b".into()],
                        vec!["a".into(), "b".into()],
                    ]),
                ),
                (
                    "p2".into(),
                    scalar_int(2),
                    PlayerStrategies::Explicit(vec![vec!["a".into()], vec!["b".into()]]),
                ),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn params_example_envelope() {
        // Solo best response costs 1, initial cost 8: m = 3.
        let game = Game::new(
            1,
            vec![res("cheap", &[0, 1]), res("dear", &[8, 0])],
            vec![(
                "p1".into(),
                scalar_int(1),
                PlayerStrategies::Explicit(vec![vec!["cheap".into()], vec!["dear".into()]]),
            )],
            None,
        )
        .unwrap();
        let initial = State::new(vec![Choice::Strategy(1)]);
        let params = derive_params(
            &game,
            &initial,
            &scalar_ratio(1, 10),
            Mode::Psi,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(params.cost_min, scalar_int(1));
        assert_eq!(params.cost_max, scalar_int(8));
        assert_eq!(params.m, 3);
        assert_eq!(params.boundaries.len(), 4);
        assert!(params.boundaries[3] <= params.cost_min);
    }

    #[test]
    fn params_linear_q_and_p() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(0), Choice::Strategy(0)]);
        let params = derive_params(
            &game,
            &initial,
            &scalar_ratio(1, 10),
            Mode::Psi,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(params.q, scalar_ratio(11, 10));
        // p = (1/theta_1(11/10) - 1/5)^-1, about 9.0295.
        assert!(params.p > scalar_ratio(9029, 1000));
        assert!(params.p < scalar_ratio(9030, 1000));
        assert!(params.g >= scalar_int(2));
        // Certified bound about 13.54.
        let bound = params.certified_rho_bound(1).unwrap();
        assert!(bound > scalar_ratio(1354, 100));
        assert!(bound < scalar_ratio(1355, 100));
    }

    #[test]
    fn gamma_range_enforced() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(0), Choice::Strategy(0)]);
        let err = derive_params(
            &game,
            &initial,
            &scalar_ratio(1, 5),
            Mode::Psi,
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::GammaOutOfRange { .. }));
        // Weighted mode rejects degree-1 games outright.
        let err = derive_params(
            &game,
            &initial,
            &scalar_ratio(1, 100),
            Mode::Weighted,
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::WeightedNeedsSuperlinear));
    }

    #[test]
    fn single_player_solves_in_one_move() {
        let game = Game::new(
            1,
            vec![res("cheap", &[0, 1]), res("dear", &[8, 0])],
            vec![(
                "p1".into(),
                scalar_int(1),
                PlayerStrategies::Explicit(vec![vec!["cheap".into()], vec!["dear".into()]]),
            )],
            None,
        )
        .unwrap();
        let initial = State::new(vec![Choice::Strategy(1)]);
        let opts = SolveOptions::default();
        let params =
            derive_params(&game, &initial, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let outcome = solve(&game, &initial, &params).unwrap();
        assert_eq!(outcome.log.total_moves, 1);
        assert_eq!(outcome.final_state.choices[0], Choice::Strategy(0));
        let audit = audit_log(&game, &outcome.log, &params);
        assert!(audit.passed, "{:?}", audit.failures);
        // Already at the best response: zero moves.
        let settled = State::new(vec![Choice::Strategy(0)]);
        let params =
            derive_params(&game, &settled, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let outcome = solve(&game, &settled, &params).unwrap();
        assert_eq!(outcome.log.total_moves, 0);
    }

    #[test]
    fn crossing_game_reaches_certified_equilibrium() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(2), Choice::Strategy(1)]);
        let opts = SolveOptions::default();
        let params =
            derive_params(&game, &initial, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let outcome = solve(&game, &initial, &params).unwrap();
        let bound = params.certified_rho_bound(1).unwrap();
        let report =
            verify_approx_equilibrium(&game, &outcome.final_state, Mode::Psi, None).unwrap();
        assert!(report.rho_achieved.at_most(&bound));
        // Move count respects the theoretical bound and the audit passes.
        assert!(scalar_int(outcome.log.total_moves as i64) <= params.move_bound(2));
        let audit = audit_log(&game, &outcome.log, &params);
        assert!(audit.passed, "{:?}", audit.failures);
    }

    #[test]
    fn unit_weight_crossing_game_linear_bound() {
        // Two unit players over crossed linear links; the certified bound is
        // dominated by (3+sqrt5)/2 + 110*gamma.
        let game = Game::new(
            1,
            vec![res("a", &[0, 1]), res("b", &[0, 2])],
            vec![
                (
                    "p1".into(),
                    scalar_int(1),
                    PlayerStrategies::Explicit(vec![vec!["a".into()], vec!["b".into()]]),
                ),
                (
                    "p2".into(),
                    scalar_int(1),
                    PlayerStrategies::Explicit(vec![vec!["b".into()], vec!["a".into()]]),
                ),
            ],
            None,
        )
        .unwrap();
        let gamma = scalar_ratio(1, 10);
        let initial = State::new(vec![Choice::Strategy(1), Choice::Strategy(1)]);
        let opts = SolveOptions::default();
        let params = derive_params(&game, &initial, &gamma, Mode::Psi, &opts).unwrap();
        let outcome = solve(&game, &initial, &params).unwrap();
        let linear_form = (scalar_int(3) + crate::scalar::sqrt5_upper()) / scalar_int(2)
            + scalar_int(110) * &gamma;
        let bound = params.certified_rho_bound(1).unwrap();
        assert!(bound <= linear_form);
        let report =
            verify_approx_equilibrium(&game, &outcome.final_state, Mode::Psi, None).unwrap();
        assert!(report.rho_achieved.at_most(&linear_form));
        assert!(audit_log(&game, &outcome.log, &params).passed);
    }

    #[test]
    fn mover_policies_pick_differently() {
        // Both players want to leave the crowded link; max-cost picks the
        // heavier player, min-id the lexicographically first.
        let game = Game::new(
            1,
            vec![res("a", &[0, 1]), res("b", &[0, 1])],
            vec![
                (
                    "p1".into(),
                    scalar_int(1),
                    PlayerStrategies::Explicit(vec![vec!["a".into()], vec!["b".into()]]),
                ),
                (
                    "p2".into(),
                    scalar_int(3),
                    PlayerStrategies::Explicit(vec![vec!["a".into()], vec!["b".into()]]),
                ),
            ],
            None,
        )
        .unwrap();
        let initial = State::new(vec![Choice::Strategy(0), Choice::Strategy(0)]);
        let gamma = scalar_ratio(1, 10);
        for (policy, expected_first) in [(MoverPolicy::MaxCost, 1), (MoverPolicy::MinId, 0)] {
            let opts = SolveOptions {
                policy,
                ..SolveOptions::default()
            };
            let params = derive_params(&game, &initial, &gamma, Mode::Psi, &opts).unwrap();
            let outcome = solve(&game, &initial, &params).unwrap();
            assert_eq!(outcome.log.records[0].player, expected_first);
        }
    }

    #[test]
    fn identical_runs_identical_logs() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(2), Choice::Strategy(1)]);
        let opts = SolveOptions::default();
        let params =
            derive_params(&game, &initial, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let a = solve(&game, &initial, &params).unwrap();
        let b = solve(&game, &initial, &params).unwrap();
        assert_eq!(a.log.total_moves, b.log.total_moves);
        for (x, y) in a.log.records.iter().zip(&b.log.records) {
            assert_eq!(x.player, y.player);
            assert_eq!(x.to, y.to);
            assert_eq!(x.cost_after, y.cost_after);
        }
    }

    #[test]
    fn corrupted_log_fails_audit() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(2), Choice::Strategy(1)]);
        let opts = SolveOptions::default();
        let params =
            derive_params(&game, &initial, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let mut outcome = solve(&game, &initial, &params).unwrap();
        assert!(!outcome.log.records.is_empty());
        // Inject a potential increase.
        let r = &mut outcome.log.records[0];
        r.potential_after = &r.potential_before + scalar_int(1);
        let audit = audit_log(&game, &outcome.log, &params);
        assert!(!audit.passed);
        assert!(audit
            .failures
            .iter()
            .any(|f| f.check == "potential-decrease"));
    }

    #[test]
    fn move_cap_is_enforced() {
        let game = crossing_game();
        let initial = State::new(vec![Choice::Strategy(2), Choice::Strategy(1)]);
        let opts = SolveOptions {
            move_cap: 0,
            ..SolveOptions::default()
        };
        let params =
            derive_params(&game, &initial, &scalar_ratio(1, 10), Mode::Psi, &opts).unwrap();
        let err = solve(&game, &initial, &params).unwrap_err();
        assert!(matches!(err, SolveError::MoveCapExceeded { .. }));
    }
}
