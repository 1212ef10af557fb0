//! Seeded instance generator shared by the CLI and the test sweeps.
//!
//! All draws go through one ChaCha stream keyed by the seed, so a
//! (spec, seed) pair always produces the same game and initial state.
//! Weights and coefficients are uniform integers in configurable ranges;
//! every resource keeps at least one positive coefficient so that all
//! strategies have positive cost.

use crate::game::{Choice, Game, PlayerStrategies, Resource, State};
use crate::scalar::Scalar;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// Explicit strategy lists drawn as uniform non-empty resource subsets.
    RandomExplicit {
        resources: usize,
        strategies_per_player: usize,
    },
    /// Two nodes joined by `links` parallel edges; players route across.
    ParallelLinks { links: usize },
    /// Directed grid with right/down edges; players route corner to corner.
    Grid { rows: usize, cols: usize },
    /// Random series-parallel network with `edges` edges.
    SeriesParallel { edges: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub players: usize,
    pub degree: u32,
    /// Weight numerators are uniform in 1..=weight_max.
    pub weight_max: u64,
    /// Weight denominators are uniform in 1..=weight_den_max (1 keeps
    /// weights integral).
    pub weight_den_max: u64,
    /// Present coefficients are uniform in 1..=coeff_max.
    pub coeff_max: u64,
    /// Percent chance that each coefficient is present.
    pub coeff_density: u32,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            family: Family::RandomExplicit {
                resources: 4,
                strategies_per_player: 2,
            },
            players: 2,
            degree: 1,
            weight_max: 4,
            weight_den_max: 1,
            coeff_max: 3,
            coeff_density: 60,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
}

/// Deterministic game plus initial state for `(spec, seed)`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<(Game, State), GenerateError> {
    if spec.players == 0 {
        return Err(GenerateError::Infeasible("at least one player".into()));
    }
    if spec.degree == 0 {
        return Err(GenerateError::Infeasible("degree must be at least 1".into()));
    }
    if spec.weight_max == 0 || spec.coeff_max == 0 || spec.weight_den_max == 0 {
        return Err(GenerateError::Infeasible("ranges must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &spec.family {
        Family::RandomExplicit {
            resources,
            strategies_per_player,
        } => random_explicit(spec, *resources, *strategies_per_player, &mut rng),
        Family::ParallelLinks { links } => parallel_links(spec, *links, &mut rng),
        Family::Grid { rows, cols } => grid(spec, *rows, *cols, &mut rng),
        Family::SeriesParallel { edges } => series_parallel(spec, *edges, &mut rng),
    }
}

fn draw_scalar(rng: &mut ChaCha8Rng, max: u64) -> Scalar {
    Scalar::from_integer(BigInt::from(rng.gen_range(1..=max)))
}

fn draw_weight(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Scalar {
    let num = rng.gen_range(1..=spec.weight_max);
    let den = rng.gen_range(1..=spec.weight_den_max);
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

fn draw_coeffs(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    let len = spec.degree as usize + 1;
    let zero = Scalar::from_integer(0.into());
    let mut coeffs = vec![zero.clone(); len];
    for c in coeffs.iter_mut() {
        if rng.gen_range(0..100) < spec.coeff_density {
            *c = draw_scalar(rng, spec.coeff_max);
        }
    }
    if coeffs.iter().all(|c| c == &zero) {
        let k = rng.gen_range(0..len);
        coeffs[k] = draw_scalar(rng, spec.coeff_max);
    }
    coeffs
}

fn draw_resources(spec: &GeneratorSpec, count: usize, rng: &mut ChaCha8Rng) -> Vec<Resource> {
    (0..count)
        .map(|i| Resource {
            id: format!("r{i}"),
            coeffs: draw_coeffs(spec, rng),
        })
        .collect()
}

fn random_explicit(
    spec: &GeneratorSpec,
    resources: usize,
    strategies_per_player: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Game, State), GenerateError> {
    if resources == 0 || strategies_per_player == 0 {
        return Err(GenerateError::Infeasible(
            "need at least one resource and one strategy".into(),
        ));
    }
    let resource_list = draw_resources(spec, resources, rng);
    let mut players = Vec::with_capacity(spec.players);
    for i in 0..spec.players {
        let mut strategies: Vec<Vec<String>> = Vec::new();
        let mut attempts = 0;
        while strategies.len() < strategies_per_player && attempts < 200 {
            attempts += 1;
            let subset: Vec<String> = (0..resources)
                .filter(|_| rng.gen_bool(0.5))
                .map(|r| format!("r{r}"))
                .collect();
            if subset.is_empty() || strategies.contains(&subset) {
                continue;
            }
            strategies.push(subset);
        }
        if strategies.is_empty() {
            let r = rng.gen_range(0..resources);
            strategies.push(vec![format!("r{r}")]);
        }
        players.push((
            format!("p{i}"),
            draw_weight(spec, rng),
            PlayerStrategies::Explicit(strategies),
        ));
    }
    let game = Game::new(spec.degree, resource_list, players, None)
        .map_err(|e| GenerateError::Infeasible(e.to_string()))?;
    let initial = State::new(
        (0..spec.players)
            .map(|u| {
                let count = game.explicit_strategies(u).expect("explicit").len();
                Choice::Strategy(rng.gen_range(0..count))
            })
            .collect(),
    );
    Ok((game, initial))
}

fn network_game(
    spec: &GeneratorSpec,
    nodes: Vec<String>,
    edges: Vec<(String, String, String)>,
    source: &str,
    target: &str,
    rng: &mut ChaCha8Rng,
) -> Result<(Game, State), GenerateError> {
    let resources = draw_resources(spec, edges.len(), rng);
    let edge_specs: Vec<(String, String, String, String)> = edges
        .into_iter()
        .enumerate()
        .map(|(i, (id, from, to))| (id, from, to, format!("r{i}")))
        .collect();
    let players = (0..spec.players)
        .map(|i| {
            (
                format!("p{i}"),
                draw_weight(spec, rng),
                PlayerStrategies::Network {
                    source: source.to_string(),
                    target: target.to_string(),
                },
            )
        })
        .collect();
    let game = Game::new(spec.degree, resources, players, Some((nodes, edge_specs)))
        .map_err(|e| GenerateError::Infeasible(e.to_string()))?;
    let net = game.network.as_ref().expect("network game");
    let source_ix = net
        .node_ids
        .iter()
        .position(|n| n == source)
        .expect("source node exists");
    let target_ix = net
        .node_ids
        .iter()
        .position(|n| n == target)
        .expect("target node exists");
    let paths = net
        .simple_paths(source_ix, target_ix, 10_000)
        .map_err(|e| GenerateError::Infeasible(e.to_string()))?;
    if paths.is_empty() {
        return Err(GenerateError::Infeasible("no source-target path".into()));
    }
    let initial = State::new(
        (0..spec.players)
            .map(|_| Choice::Path(paths[rng.gen_range(0..paths.len())].clone()))
            .collect(),
    );
    Ok((game, initial))
}

fn parallel_links(
    spec: &GeneratorSpec,
    links: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Game, State), GenerateError> {
    if links == 0 {
        return Err(GenerateError::Infeasible("need at least one link".into()));
    }
    let nodes = vec!["s".to_string(), "t".to_string()];
    let edges = (0..links)
        .map(|i| (format!("e{i}"), "s".to_string(), "t".to_string()))
        .collect();
    network_game(spec, nodes, edges, "s", "t", rng)
}

fn grid(
    spec: &GeneratorSpec,
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Game, State), GenerateError> {
    if rows < 1 || cols < 1 || rows * cols < 2 {
        return Err(GenerateError::Infeasible("grid needs at least two nodes".into()));
    }
    let node = |r: usize, c: usize| format!("n{r}_{c}");
    let mut nodes = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(node(r, c));
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((format!("e{r}_{c}_right"), node(r, c), node(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((format!("e{r}_{c}_down"), node(r, c), node(r + 1, c)));
            }
        }
    }
    let source = node(0, 0);
    let target = node(rows - 1, cols - 1);
    network_game(spec, nodes, edges, &source, &target, rng)
}

fn series_parallel(
    spec: &GeneratorSpec,
    edges: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Game, State), GenerateError> {
    if edges == 0 {
        return Err(GenerateError::Infeasible("need at least one edge".into()));
    }
    // Budget 1 yields a single edge; a larger budget splits into a series or
    // parallel pair of sub-networks.
    struct Builder {
        nodes: Vec<String>,
        edges: Vec<(String, String, String)>,
    }
    impl Builder {
        fn fresh_node(&mut self) -> String {
            let id = format!("n{}", self.nodes.len());
            self.nodes.push(id.clone());
            id
        }
        fn add_edge(&mut self, from: &str, to: &str) {
            let id = format!("e{}", self.edges.len());
            self.edges.push((id, from.to_string(), to.to_string()));
        }
        fn build(&mut self, budget: usize, from: &str, to: &str, rng: &mut ChaCha8Rng) {
            if budget <= 1 {
                self.add_edge(from, to);
                return;
            }
            let left = rng.gen_range(1..budget);
            let right = budget - left;
            if rng.gen_bool(0.5) {
                let mid = self.fresh_node();
                self.build(left, from, &mid, rng);
                self.build(right, &mid, to, rng);
            } else {
                self.build(left, from, to, rng);
                self.build(right, from, to, rng);
            }
        }
    }
    let mut b = Builder {
        nodes: vec!["s".to_string(), "t".to_string()],
        edges: Vec::new(),
    };
    b.build(edges, "s", "t", rng);
    let Builder { nodes, edges } = b;
    network_game(spec, nodes, edges, "s", "t", rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_games() {
        let spec = GeneratorSpec {
            family: Family::ParallelLinks { links: 2 },
            players: 2,
            ..GeneratorSpec::default()
        };
        let (g1, s1) = generate(&spec, 7).unwrap();
        let (g2, s2) = generate(&spec, 7).unwrap();
        assert_eq!(g1.resources, g2.resources);
        assert_eq!(g1.players, g2.players);
        assert_eq!(s1, s2);
        let (g3, _) = generate(&spec, 8).unwrap();
        assert!(g1.resources != g3.resources || g1.players != g3.players);
    }

    #[test]
    fn generated_games_validate() {
        for seed in 0..20 {
            let spec = GeneratorSpec {
                family: Family::RandomExplicit {
                    resources: 5,
                    strategies_per_player: 3,
                },
                players: 4,
                degree: 2,
                ..GeneratorSpec::default()
            };
            let (game, state) = generate(&spec, seed).unwrap();
            assert!(game.validate().is_empty(), "seed {seed}");
            assert!(game.check_state(&state).is_ok());
        }
    }

    #[test]
    fn grid_players_have_paths() {
        let spec = GeneratorSpec {
            family: Family::Grid { rows: 3, cols: 3 },
            players: 3,
            ..GeneratorSpec::default()
        };
        let (game, state) = generate(&spec, 42).unwrap();
        assert!(game.validate().is_empty());
        assert!(game.check_state(&state).is_ok());
        // A 3x3 grid has 12 edges and 6 monotone corner-to-corner paths.
        assert_eq!(game.resource_count(), 12);
        let net = game.network.as_ref().unwrap();
        assert_eq!(net.simple_paths(0, 8, 100).unwrap().len(), 6);
    }

    #[test]
    fn degree_two_resources_have_three_coefficients() {
        let spec = GeneratorSpec {
            family: Family::SeriesParallel { edges: 5 },
            players: 2,
            degree: 2,
            ..GeneratorSpec::default()
        };
        let (game, _) = generate(&spec, 3).unwrap();
        for r in &game.resources {
            assert_eq!(r.coeffs.len(), 3);
        }
        assert!(game.validate().is_empty());
    }

    #[test]
    fn infeasible_specs_rejected() {
        let spec = GeneratorSpec {
            players: 0,
            ..GeneratorSpec::default()
        };
        assert!(generate(&spec, 1).is_err());
        let spec = GeneratorSpec {
            family: Family::ParallelLinks { links: 0 },
            ..GeneratorSpec::default()
        };
        assert!(generate(&spec, 1).is_err());
    }
}
