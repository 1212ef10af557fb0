//! Weighted congestion game model: resources with polynomial latency
//! coefficients, weighted players with explicit or network strategy spaces,
//! and immutable states.
//!
//! A game instance is structurally resolved at construction (ids become
//! indices, strategies become canonical sorted resource sets). Numeric and
//! semantic invariants are reported by [`Game::validate`] as data rather than
//! errors, so a caller can show every problem in one pass.

use crate::scalar::Scalar;
use num_traits::Zero;
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

/// A resource `e` with latency coefficients `coeffs[k]` multiplying the k-th
/// power of the load (weighted game) or Ψ_k of the weight multiset (potential
/// relaxation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub id: String,
    pub coeffs: Vec<Scalar>,
}

/// Strategy space of a player: an explicit list of resource sets, or all
/// source→target paths of the game's network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategySpace {
    /// Each strategy is a canonical (sorted, deduplicated at build time)
    /// non-empty list of resource indices.
    Explicit(Vec<Vec<usize>>),
    /// Node indices into the game network.
    Network { source: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Player {
    pub id: String,
    pub weight: Scalar,
    pub strategies: StrategySpace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkEdge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub resource: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub node_ids: Vec<String>,
    pub edges: Vec<NetworkEdge>,
    /// Outgoing edge indices per node, in input order.
    pub out: Vec<Vec<usize>>,
}

impl Network {
    fn new(node_ids: Vec<String>, edges: Vec<NetworkEdge>) -> Self {
        let mut out = vec![Vec::new(); node_ids.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
        }
        Network { node_ids, edges, out }
    }

    /// Breadth-first reachability over all edges.
    pub fn reachable(&self, source: usize, target: usize) -> bool {
        self.reachable_filtered(source, target, |_| true)
    }

    /// Reachability restricted to edges accepted by `keep`.
    pub fn reachable_filtered<F: Fn(&NetworkEdge) -> bool>(
        &self,
        source: usize,
        target: usize,
        keep: F,
    ) -> bool {
        let mut seen = vec![false; self.node_ids.len()];
        let mut queue = VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            if v == target {
                return true;
            }
            for &ei in &self.out[v] {
                let e = &self.edges[ei];
                if keep(e) && !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        false
    }

    /// A fewest-hops source→target path, ties broken by taking the earliest
    /// eligible edge in input order. `None` when the target is unreachable.
    pub fn shortest_hop_path(&self, source: usize, target: usize) -> Option<Vec<usize>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.node_ids.len()];
        let mut seen = vec![false; self.node_ids.len()];
        let mut queue = VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            if v == target {
                break;
            }
            for &ei in &self.out[v] {
                let to = self.edges[ei].to;
                if !seen[to] {
                    seen[to] = true;
                    parent[to] = Some(ei);
                    queue.push_back(to);
                }
            }
        }
        if !seen[target] {
            return None;
        }
        let mut path = Vec::new();
        let mut at = target;
        while at != source {
            let ei = parent[at].expect("visited node has a parent edge");
            path.push(ei);
            at = self.edges[ei].from;
        }
        path.reverse();
        Some(path)
    }

    /// All node-simple source→target paths as edge-index sequences, in
    /// depth-first input order. Errors out once more than `cap` paths exist.
    pub fn simple_paths(
        &self,
        source: usize,
        target: usize,
        cap: usize,
    ) -> Result<Vec<Vec<usize>>, GameError> {
        let mut paths = Vec::new();
        let mut stack = Vec::new();
        let mut on_path = vec![false; self.node_ids.len()];
        self.dfs_paths(source, target, cap, &mut stack, &mut on_path, &mut paths)?;
        Ok(paths)
    }

    fn dfs_paths(
        &self,
        v: usize,
        target: usize,
        cap: usize,
        stack: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        paths: &mut Vec<Vec<usize>>,
    ) -> Result<(), GameError> {
        if v == target {
            if paths.len() >= cap {
                return Err(GameError::EnumerationCapExceeded { cap });
            }
            paths.push(stack.clone());
            return Ok(());
        }
        on_path[v] = true;
        for &ei in &self.out[v] {
            let to = self.edges[ei].to;
            if on_path[to] {
                continue;
            }
            stack.push(ei);
            self.dfs_paths(to, target, cap, stack, on_path, paths)?;
            stack.pop();
        }
        on_path[v] = false;
        Ok(())
    }
}

/// One chosen strategy: an index into an explicit strategy list, or an edge
/// path through the network.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Strategy(usize),
    Path(Vec<usize>),
}

/// Immutable snapshot with one strategy per player, indexed like
/// `Game::players`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub choices: Vec<Choice>,
}

impl State {
    pub fn new(choices: Vec<Choice>) -> Self {
        State { choices }
    }

    /// The state obtained when `player` deviates to `choice`.
    pub fn with_choice(&self, player: usize, choice: Choice) -> State {
        let mut next = self.clone();
        next.choices[player] = choice;
        next
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("duplicate resource id `{0}`")]
    DuplicateResource(String),
    #[error("duplicate player id `{0}`")]
    DuplicatePlayer(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown resource id `{0}`")]
    UnknownResource(String),
    #[error("unknown player id `{0}`")]
    UnknownPlayer(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("player `{0}`: strategy must be a non-empty set of resources")]
    EmptyStrategy(String),
    #[error("player `{player}`: duplicate resource `{resource}` in one strategy")]
    DuplicateInStrategy { player: String, resource: String },
    #[error("player `{0}` declared as network player but the game has no network")]
    NoNetwork(String),
    #[error("player `{0}` has no strategies")]
    NoStrategies(String),
    #[error("state does not assign exactly one strategy per player")]
    StateArity,
    #[error("player `{0}`: strategy index out of range")]
    StrategyIndexOutOfRange(String),
    #[error("player `{0}`: path is not a simple source-target walk")]
    InvalidPath(String),
    #[error("enumeration cap {cap} exceeded")]
    EnumerationCapExceeded { cap: usize },
}

/// A semantic invariant breach, reported as data by [`Game::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// Edge description consumed by [`Game::new`]: (id, from, to, resource).
pub type EdgeSpec = (String, String, String, String);
/// Network description consumed by [`Game::new`]: node ids plus edges.
pub type NetworkSpec = (Vec<String>, Vec<EdgeSpec>);

#[derive(Debug, Clone)]
pub struct Game {
    pub degree: u32,
    pub resources: Vec<Resource>,
    pub players: Vec<Player>,
    pub network: Option<Network>,
    resource_index: HashMap<String, usize>,
    player_index: HashMap<String, usize>,
}

impl Game {
    /// Resolves an id-based description into an indexed game. Structural
    /// problems (unresolvable references, duplicate ids, empty strategies) are
    /// hard errors here; numeric invariants are left to [`Game::validate`].
    pub fn new(
        degree: u32,
        resources: Vec<Resource>,
        players: Vec<(String, Scalar, PlayerStrategies)>,
        network: Option<NetworkSpec>,
    ) -> Result<Game, GameError> {
        let mut resource_index = HashMap::new();
        for (i, r) in resources.iter().enumerate() {
            if resource_index.insert(r.id.clone(), i).is_some() {
                return Err(GameError::DuplicateResource(r.id.clone()));
            }
        }
        let network = match network {
            None => None,
            Some((node_ids, raw_edges)) => {
                let mut node_index = HashMap::new();
                for (i, n) in node_ids.iter().enumerate() {
                    if node_index.insert(n.clone(), i).is_some() {
                        return Err(GameError::DuplicateNode(n.clone()));
                    }
                }
                let mut edge_ids = BTreeSet::new();
                let mut edges = Vec::with_capacity(raw_edges.len());
                for (id, from, to, resource) in raw_edges {
                    if !edge_ids.insert(id.clone()) {
                        return Err(GameError::DuplicateEdge(id));
                    }
                    let from = *node_index
                        .get(&from)
                        .ok_or(GameError::UnknownNode(from.clone()))?;
                    let to = *node_index
                        .get(&to)
                        .ok_or(GameError::UnknownNode(to.clone()))?;
                    let resource = *resource_index
                        .get(&resource)
                        .ok_or(GameError::UnknownResource(resource.clone()))?;
                    edges.push(NetworkEdge { id, from, to, resource });
                }
                Some(Network::new(node_ids, edges))
            }
        };
        let mut player_index = HashMap::new();
        let mut built_players = Vec::with_capacity(players.len());
        for (id, weight, strategies) in players {
            if player_index.insert(id.clone(), built_players.len()).is_some() {
                return Err(GameError::DuplicatePlayer(id));
            }
            let strategies = match strategies {
                PlayerStrategies::Explicit(lists) => {
                    if lists.is_empty() {
                        return Err(GameError::NoStrategies(id));
                    }
                    let mut resolved = Vec::with_capacity(lists.len());
                    for list in lists {
                        if list.is_empty() {
                            return Err(GameError::EmptyStrategy(id));
                        }
                        let mut set = Vec::with_capacity(list.len());
                        for rid in list {
                            let idx = *resource_index
                                .get(&rid)
                                .ok_or_else(|| GameError::UnknownResource(rid.clone()))?;
                            if set.contains(&idx) {
                                return Err(GameError::DuplicateInStrategy {
                                    player: id,
                                    resource: rid,
                                });
                            }
                            set.push(idx);
                        }
                        set.sort_unstable();
                        resolved.push(set);
                    }
                    StrategySpace::Explicit(resolved)
                }
                PlayerStrategies::Network { source, target } => {
                    let net = network.as_ref().ok_or(GameError::NoNetwork(id.clone()))?;
                    let node = |name: &str| {
                        net.node_ids
                            .iter()
                            .position(|n| n == name)
                            .ok_or(GameError::UnknownNode(name.to_string()))
                    };
                    StrategySpace::Network {
                        source: node(&source)?,
                        target: node(&target)?,
                    }
                }
            };
            built_players.push(Player { id, weight, strategies });
        }
        Ok(Game {
            degree,
            resources,
            players: built_players,
            network,
            resource_index,
            player_index,
        })
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn resource_count(&self) -> usize {
        self.resources.len()
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resource_index.get(id).copied()
    }

    pub fn player_index(&self, id: &str) -> Option<usize> {
        self.player_index.get(id).copied()
    }

    /// Checks every semantic invariant and returns the breaches found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |entity: &str, message: String| {
            out.push(Violation {
                entity: entity.to_string(),
                message,
            });
        };
        if self.degree < 1 {
            push("game", "degree must be at least 1".into());
        }
        let want_len = self.degree as usize + 1;
        for r in &self.resources {
            if r.coeffs.len() != want_len {
                push(
                    &format!("resource {}", r.id),
                    format!("expected {} coefficients, found {}", want_len, r.coeffs.len()),
                );
            }
            for (k, a) in r.coeffs.iter().enumerate() {
                if *a < Scalar::zero() {
                    push(
                        &format!("resource {}", r.id),
                        format!("coefficient of degree {} must be non-negative", k),
                    );
                }
            }
        }
        if let Some(net) = &self.network {
            let mut carrier: HashMap<usize, &str> = HashMap::new();
            for e in &net.edges {
                if let Some(other) = carrier.insert(e.resource, &e.id) {
                    push(
                        &format!("edge {}", e.id),
                        format!(
                            "resource {} is already carried by edge {}",
                            self.resources[e.resource].id, other
                        ),
                    );
                }
            }
        }
        for p in &self.players {
            let entity = format!("player {}", p.id);
            if p.weight <= Scalar::zero() {
                push(&entity, "weight must be positive".into());
            }
            match &p.strategies {
                StrategySpace::Explicit(lists) => {
                    for (j, s) in lists.iter().enumerate() {
                        let all_zero = s
                            .iter()
                            .all(|&r| self.resources[r].coeffs.iter().all(Zero::is_zero));
                        if all_zero {
                            push(
                                &entity,
                                format!("strategy {} has zero cost (all-zero latencies)", j),
                            );
                        }
                    }
                }
                StrategySpace::Network { source, target } => {
                    let net = self.network.as_ref().expect("network player in network game");
                    if !net.reachable(*source, *target) {
                        push(&entity, "no source-target path".into());
                    } else {
                        let zero_path = net.reachable_filtered(*source, *target, |e| {
                            self.resources[e.resource].coeffs.iter().all(Zero::is_zero)
                        });
                        if zero_path {
                            push(&entity, "a zero-cost source-target path exists".into());
                        }
                    }
                }
            }
        }
        out
    }

    /// Verifies that `state` assigns each player a valid strategy of hers.
    pub fn check_state(&self, state: &State) -> Result<(), GameError> {
        if state.choices.len() != self.players.len() {
            return Err(GameError::StateArity);
        }
        for (u, choice) in state.choices.iter().enumerate() {
            self.check_choice(u, choice)?;
        }
        Ok(())
    }

    /// Verifies a single player's choice.
    pub fn check_choice(&self, player: usize, choice: &Choice) -> Result<(), GameError> {
        let p = &self.players[player];
        match (&p.strategies, choice) {
            (StrategySpace::Explicit(lists), Choice::Strategy(i)) => {
                if *i >= lists.len() {
                    return Err(GameError::StrategyIndexOutOfRange(p.id.clone()));
                }
                Ok(())
            }
            (StrategySpace::Network { source, target }, Choice::Path(edges)) => {
                let net = self.network.as_ref().ok_or(GameError::NoNetwork(p.id.clone()))?;
                if edges.is_empty() {
                    return Err(GameError::InvalidPath(p.id.clone()));
                }
                let mut at = *source;
                let mut visited = BTreeSet::new();
                visited.insert(at);
                for &ei in edges {
                    let e = net.edges.get(ei).ok_or(GameError::InvalidPath(p.id.clone()))?;
                    if e.from != at || !visited.insert(e.to) {
                        return Err(GameError::InvalidPath(p.id.clone()));
                    }
                    at = e.to;
                }
                if at != *target {
                    return Err(GameError::InvalidPath(p.id.clone()));
                }
                Ok(())
            }
            _ => Err(GameError::InvalidPath(p.id.clone())),
        }
    }

    /// Canonical sorted resource-index set of a player's choice.
    pub fn choice_resources(&self, player: usize, choice: &Choice) -> Vec<usize> {
        match choice {
            Choice::Strategy(i) => match &self.players[player].strategies {
                StrategySpace::Explicit(lists) => lists[*i].clone(),
                StrategySpace::Network { .. } => Vec::new(),
            },
            Choice::Path(edges) => {
                let net = self.network.as_ref().expect("path choice without network");
                let mut rs: Vec<usize> = edges.iter().map(|&e| net.edges[e].resource).collect();
                rs.sort_unstable();
                rs.dedup();
                rs
            }
        }
    }

    /// The multiset of weights of players whose chosen strategy contains the
    /// given resource, in player order.
    pub fn resource_load_multiset(
        &self,
        state: &State,
        resource_id: &str,
    ) -> Result<Vec<Scalar>, GameError> {
        let target = self
            .resource_index(resource_id)
            .ok_or_else(|| GameError::UnknownResource(resource_id.to_string()))?;
        let mut out = Vec::new();
        for (u, choice) in state.choices.iter().enumerate() {
            if self.choice_resources(u, choice).contains(&target) {
                out.push(self.players[u].weight.clone());
            }
        }
        Ok(out)
    }

    /// Weight multisets per resource index, restricted to the players in
    /// `subset` (`None` = all players). This is the from-scratch route used by
    /// subgame potentials and by tests against the incremental aggregates.
    pub fn loads_for(&self, state: &State, subset: Option<&BTreeSet<usize>>) -> Vec<Vec<Scalar>> {
        let mut loads: Vec<Vec<Scalar>> = vec![Vec::new(); self.resources.len()];
        for (u, choice) in state.choices.iter().enumerate() {
            if let Some(set) = subset {
                if !set.contains(&u) {
                    continue;
                }
            }
            for r in self.choice_resources(u, choice) {
                loads[r].push(self.players[u].weight.clone());
            }
        }
        loads
    }

    /// Number of explicit strategies of a player, if explicit.
    pub fn explicit_strategies(&self, player: usize) -> Option<&[Vec<usize>]> {
        match &self.players[player].strategies {
            StrategySpace::Explicit(lists) => Some(lists),
            StrategySpace::Network { .. } => None,
        }
    }

    /// Lexicographic key of a choice: the resource-id sequence for explicit
    /// strategies, the edge-id sequence for paths. Used only to break exact
    /// cost ties deterministically.
    pub fn choice_lex_key(&self, player: usize, choice: &Choice) -> Vec<String> {
        match choice {
            Choice::Strategy(i) => {
                let rs = match &self.players[player].strategies {
                    StrategySpace::Explicit(lists) => &lists[*i],
                    StrategySpace::Network { .. } => return Vec::new(),
                };
                let mut ids: Vec<String> =
                    rs.iter().map(|&r| self.resources[r].id.clone()).collect();
                ids.sort();
                ids
            }
            Choice::Path(edges) => {
                let net = self.network.as_ref().expect("path choice without network");
                edges.iter().map(|&e| net.edges[e].id.clone()).collect()
            }
        }
    }
}

/// Id-based strategy description consumed by [`Game::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlayerStrategies {
    Explicit(Vec<Vec<String>>),
    Network { source: String, target: String },
}
