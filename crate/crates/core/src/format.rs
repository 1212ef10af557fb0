//! Instance, state and report (de)serialization.
//!
//! Instances are UTF-8 JSON with rationals written as `INT` or `INT/INT`
//! strings. Reports embed every derived parameter so a run can be re-derived
//! and audited from its report alone; rationals are emitted both as exact
//! strings (authoritative) and as 30-significant-digit decimal approximations
//! for human reading.

use crate::dynamics::CostRatio;
use crate::game::{Choice, Game, GameError, PlayerStrategies, Resource, State, StrategySpace};
use crate::scalar::{decimal_string, parse_rational, rational_string, RationalParseError, Scalar};
use crate::solver::{AuditReport, MoveLog, SolverParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{entity}: {source}")]
    Rational {
        entity: String,
        source: RationalParseError,
    },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("player `{0}`: need either `strategies` or `source`+`target`, not both")]
    PlayerShape(String),
    #[error("state: player `{0}` has a malformed choice")]
    BadChoice(String),
    #[error("state: unknown player `{0}`")]
    UnknownStatePlayer(String),
    #[error("state: missing entry for player `{0}`")]
    MissingStatePlayer(String),
    #[error("state: unknown edge id `{0}`")]
    UnknownEdge(String),
}

fn json_err(e: serde_json::Error) -> FormatError {
    FormatError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawInstance {
    degree: u32,
    resources: Vec<RawResource>,
    players: Vec<RawPlayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    network: Option<RawNetwork>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawResource {
    id: String,
    coeffs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPlayer {
    id: String,
    weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strategies: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawNetwork {
    nodes: Vec<String>,
    edges: Vec<RawEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEdge {
    id: String,
    from: String,
    to: String,
    resource: String,
}

/// Parses and structurally resolves an instance file.
pub fn parse_instance(text: &str) -> Result<Game, FormatError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(json_err)?;
    let mut resources = Vec::with_capacity(raw.resources.len());
    for r in raw.resources {
        let mut coeffs = Vec::with_capacity(r.coeffs.len());
        for (k, c) in r.coeffs.iter().enumerate() {
            coeffs.push(parse_rational(c).map_err(|source| FormatError::Rational {
                entity: format!("resource {} coefficient {}", r.id, k),
                source,
            })?);
        }
        resources.push(Resource { id: r.id, coeffs });
    }
    let mut players = Vec::with_capacity(raw.players.len());
    for p in raw.players {
        let weight = parse_rational(&p.weight).map_err(|source| FormatError::Rational {
            entity: format!("player {} weight", p.id),
            source,
        })?;
        let strategies = match (p.strategies, p.source, p.target) {
            (Some(lists), None, None) => PlayerStrategies::Explicit(lists),
            (None, Some(source), Some(target)) => PlayerStrategies::Network { source, target },
            _ => return Err(FormatError::PlayerShape(p.id)),
        };
        players.push((p.id, weight, strategies));
    }
    let network = raw.network.map(|net| {
        let edges = net
            .edges
            .into_iter()
            .map(|e| (e.id, e.from, e.to, e.resource))
            .collect();
        (net.nodes, edges)
    });
    Ok(Game::new(raw.degree, resources, players, network)?)
}

/// Canonical instance rendering; rationals in reduced `p/q` form.
pub fn serialize_instance(game: &Game) -> String {
    let resources = game
        .resources
        .iter()
        .map(|r| RawResource {
            id: r.id.clone(),
            coeffs: r.coeffs.iter().map(rational_string).collect(),
        })
        .collect();
    let players = game
        .players
        .iter()
        .map(|p| {
            let (strategies, source, target) = match &p.strategies {
                StrategySpace::Explicit(lists) => {
                    let ids = lists
                        .iter()
                        .map(|s| {
                            s.iter()
                                .map(|&r| game.resources[r].id.clone())
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    (Some(ids), None, None)
                }
                StrategySpace::Network { source, target } => {
                    let net = game.network.as_ref().expect("network player");
                    (
                        None,
                        Some(net.node_ids[*source].clone()),
                        Some(net.node_ids[*target].clone()),
                    )
                }
            };
            RawPlayer {
                id: p.id.clone(),
                weight: rational_string(&p.weight),
                strategies,
                source,
                target,
            }
        })
        .collect();
    let network = game.network.as_ref().map(|net| RawNetwork {
        nodes: net.node_ids.clone(),
        edges: net
            .edges
            .iter()
            .map(|e| RawEdge {
                id: e.id.clone(),
                from: net.node_ids[e.from].clone(),
                to: net.node_ids[e.to].clone(),
                resource: game.resources[e.resource].id.clone(),
            })
            .collect(),
    });
    let raw = RawInstance {
        degree: game.degree,
        resources,
        players,
        network,
    };
    serde_json::to_string_pretty(&raw).expect("instance serialization")
}

#[derive(Debug, Serialize, Deserialize)]
struct RawState {
    choices: serde_json::Map<String, Value>,
}

/// Parses a state file `{ "choices": { player: {"strategy": i} | {"path": [edge, ...]} } }`
/// and validates it against the game.
pub fn parse_state(game: &Game, text: &str) -> Result<State, FormatError> {
    let raw: RawState = serde_json::from_str(text).map_err(json_err)?;
    for key in raw.choices.keys() {
        if game.player_index(key).is_none() {
            return Err(FormatError::UnknownStatePlayer(key.clone()));
        }
    }
    let mut choices = Vec::with_capacity(game.player_count());
    for p in &game.players {
        let entry = raw
            .choices
            .get(&p.id)
            .ok_or_else(|| FormatError::MissingStatePlayer(p.id.clone()))?;
        let choice = match (entry.get("strategy"), entry.get("path")) {
            (Some(Value::Number(nr)), None) => {
                let i = nr
                    .as_u64()
                    .ok_or_else(|| FormatError::BadChoice(p.id.clone()))?;
                Choice::Strategy(i as usize)
            }
            (None, Some(Value::Array(edges))) => {
                let net = game
                    .network
                    .as_ref()
                    .ok_or_else(|| FormatError::BadChoice(p.id.clone()))?;
                let mut path = Vec::with_capacity(edges.len());
                for e in edges {
                    let id = e.as_str().ok_or_else(|| FormatError::BadChoice(p.id.clone()))?;
                    let ix = net
                        .edges
                        .iter()
                        .position(|edge| edge.id == id)
                        .ok_or_else(|| FormatError::UnknownEdge(id.to_string()))?;
                    path.push(ix);
                }
                Choice::Path(path)
            }
            _ => return Err(FormatError::BadChoice(p.id.clone())),
        };
        choices.push(choice);
    }
    let state = State::new(choices);
    game.check_state(&state)?;
    Ok(state)
}

pub fn serialize_state(game: &Game, state: &State) -> String {
    let mut map = serde_json::Map::new();
    for (u, choice) in state.choices.iter().enumerate() {
        map.insert(game.players[u].id.clone(), choice_json(game, choice));
    }
    serde_json::to_string_pretty(&json!({ "choices": map })).expect("state serialization")
}

fn choice_json(game: &Game, choice: &Choice) -> Value {
    match choice {
        Choice::Strategy(i) => json!({ "strategy": i }),
        Choice::Path(edges) => {
            let net = game.network.as_ref().expect("path choice without network");
            let ids: Vec<&str> = edges.iter().map(|&e| net.edges[e].id.as_str()).collect();
            json!({ "path": ids })
        }
    }
}

/// `{ "exact": "p/q", "approx": "..." }`; the exact string is authoritative.
pub fn rational_json(x: &Scalar) -> Value {
    json!({
        "exact": rational_string(x),
        "approx": decimal_string(x, 30),
    })
}

pub fn cost_ratio_json(r: &CostRatio) -> Value {
    match r {
        CostRatio::Finite(x) => rational_json(x),
        CostRatio::Unbounded => Value::String("unbounded".to_string()),
    }
}

/// Solver report envelope. Embeds the full parameter set so the run is
/// independently re-derivable.
pub fn solve_report(
    game: &Game,
    params: &SolverParams,
    log: &MoveLog,
    rho_achieved: &CostRatio,
    audit: &AuditReport,
) -> Value {
    let phases: Vec<Value> = log
        .phases
        .iter()
        .map(|p| {
            json!({
                "phase": p.phase,
                "moves": p.moves,
                "movers": p.movers.iter().map(|&u| game.players[u].id.clone()).collect::<Vec<_>>(),
                "partial_potential_start": p.partial_potential_start.as_ref().map(rational_json),
                "finalized": p.finalized.iter().map(|f| json!({
                    "player": game.players[f.player].id.clone(),
                    "cost": rational_json(&f.mode_cost),
                    "psi_cost": rational_json(&f.psi_cost),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "mode": params.mode.as_str(),
        "gamma": rational_json(&params.gamma),
        "params": {
            "m": params.m,
            "g": rational_json(&params.g),
            "q": rational_json(&params.q),
            "p": rational_json(&params.p),
            "b": params.boundaries.iter().map(rational_json).collect::<Vec<_>>(),
            "cost_min": rational_json(&params.cost_min),
            "cost_max": rational_json(&params.cost_max),
        },
        "moves": log.total_moves,
        "phases": phases,
        "rho_achieved": cost_ratio_json(rho_achieved),
        "rho_bound": params.certified_rho_bound(game.degree).as_ref().map(rational_json),
        "guarantees_void": params.forced,
        "audit": {
            "passed": audit.passed,
            "checks": audit.checks_run,
            "failures": audit.failures.iter().map(|f| json!({
                "check": f.check,
                "detail": f.detail,
            })).collect::<Vec<_>>(),
        },
    })
}

/// One JSON object per recorded move, for line-oriented streaming.
pub fn move_log_lines(game: &Game, log: &MoveLog) -> Vec<String> {
    log.records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "move": i,
                "phase": r.phase,
                "player": game.players[r.player].id.clone(),
                "kind": r.kind.as_str(),
                "from": choice_json(game, &r.from),
                "to": choice_json(game, &r.to),
                "cost_before": rational_string(&r.cost_before),
                "cost_after": rational_string(&r.cost_after),
                "psi_cost_before": rational_string(&r.psi_cost_before),
                "psi_cost_after": rational_string(&r.psi_cost_after),
                "potential_before": rational_string(&r.potential_before),
                "potential_after": rational_string(&r.potential_after),
            })
            .to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::scalar_ratio;

    const MINIMAL: &str = r#"{
        "degree": 1,
        "resources": [{"id": "r0", "coeffs": ["0", "1"]}],
        "players": [{"id": "p0", "weight": "1", "strategies": [["r0"]]}]
    }"#;

    #[test]
    fn minimal_instance_parses() {
        let game = parse_instance(MINIMAL).unwrap();
        assert_eq!(game.degree, 1);
        assert_eq!(game.player_count(), 1);
        assert!(game.validate().is_empty());
    }

    #[test]
    fn fractional_weight_is_exact() {
        let text = r#"{
            "degree": 1,
            "resources": [{"id": "r0", "coeffs": ["0", "1"]}],
            "players": [{"id": "p0", "weight": "3/2", "strategies": [["r0"]]}]
        }"#;
        let game = parse_instance(text).unwrap();
        assert_eq!(game.players[0].weight, scalar_ratio(3, 2));
    }

    #[test]
    fn empty_strategy_rejected() {
        let text = r#"{
            "degree": 1,
            "resources": [{"id": "r0", "coeffs": ["0", "1"]}],
            "players": [{"id": "p0", "weight": "1", "strategies": [[]]}]
        }"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("non-empty set of resources"));
    }

    #[test]
    fn malformed_rational_names_entity() {
        let text = r#"{
            "degree": 1,
            "resources": [{"id": "r0", "coeffs": ["0", "1.5"]}],
            "players": [{"id": "p0", "weight": "1", "strategies": [["r0"]]}]
        }"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("resource r0 coefficient 1"));
    }

    #[test]
    fn json_error_carries_position() {
        let err = parse_instance("{ not json").unwrap_err();
        assert!(matches!(err, FormatError::Json { line: 1, .. }));
    }

    #[test]
    fn instance_round_trip() {
        let text = r#"{
            "degree": 2,
            "resources": [
                {"id": "r0", "coeffs": ["0", "1", "3/2"]},
                {"id": "r1", "coeffs": ["2", "0", "1"]}
            ],
            "players": [
                {"id": "p0", "weight": "3/2", "strategies": [["r0"], ["r0", "r1"]]},
                {"id": "p1", "weight": "2", "source": "s", "target": "t"}
            ],
            "network": {
                "nodes": ["s", "t"],
                "edges": [
                    {"id": "e0", "from": "s", "to": "t", "resource": "r0"},
                    {"id": "e1", "from": "s", "to": "t", "resource": "r1"}
                ]
            }
        }"#;
        let game = parse_instance(text).unwrap();
        let rendered = serialize_instance(&game);
        let reparsed = parse_instance(&rendered).unwrap();
        assert_eq!(game.degree, reparsed.degree);
        assert_eq!(game.resources, reparsed.resources);
        assert_eq!(game.players, reparsed.players);
        assert_eq!(game.network, reparsed.network);
    }

    #[test]
    fn state_round_trip() {
        let text = r#"{
            "degree": 1,
            "resources": [{"id": "r0", "coeffs": ["0", "1"]}, {"id": "r1", "coeffs": ["1", "1"]}],
            "players": [
                {"id": "p0", "weight": "1", "strategies": [["r0"], ["r1"]]},
                {"id": "p1", "weight": "2", "source": "s", "target": "t"}
            ],
            "network": {
                "nodes": ["s", "t"],
                "edges": [{"id": "e0", "from": "s", "to": "t", "resource": "r1"}]
            }
        }"#;
        let game = parse_instance(text).unwrap();
        let state_text = r#"{"choices": {"p0": {"strategy": 1}, "p1": {"path": ["e0"]}}}"#;
        let state = parse_state(&game, state_text).unwrap();
        assert_eq!(state.choices[0], Choice::Strategy(1));
        assert_eq!(state.choices[1], Choice::Path(vec![0]));
        let rendered = serialize_state(&game, &state);
        assert_eq!(parse_state(&game, &rendered).unwrap(), state);
        // Unknown player and missing player are reported.
        assert!(parse_state(&game, r#"{"choices": {"zz": {"strategy": 0}}}"#).is_err());
        assert!(parse_state(&game, r#"{"choices": {"p0": {"strategy": 0}}}"#).is_err());
    }
}
