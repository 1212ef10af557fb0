//! Property tests for the exact identities the solver relies on: the Ψ_k
//! function laws, the potential-difference identity, cost-model sandwiches,
//! partial-potential claims, move transfer between cost models, incremental
//! evaluator consistency, and serialization round trips.

use num_traits::{One, Zero};
use proptest::prelude::*;
use psieq_core::dynamics::{deviation_cost, Mode, StateEval};
use psieq_core::format::{parse_instance, parse_state, serialize_instance, serialize_state};
use psieq_core::game::{Choice, Game, State};
use psieq_core::generate::{generate, Family, GeneratorSpec};
use psieq_core::potential::{
    cost_psi, cost_weighted, degree_factorial, partial_potential, partial_potential_full,
    potential, potential_subgame, xi, PlayerSet,
};
use psieq_core::psi::{
    check_concavity_claim, check_minkowski, check_root_superadditivity, psi_vector, PsiAggregate,
};
use psieq_core::scalar::{binomial, factorial, pow_scalar, scalar_int, scalar_ratio, Scalar};

fn small_scalar() -> impl Strategy<Value = Scalar> {
    (0i64..=6, 1i64..=4).prop_map(|(n, d)| scalar_ratio(n, d))
}

fn positive_scalar() -> impl Strategy<Value = Scalar> {
    (1i64..=6, 1i64..=4).prop_map(|(n, d)| scalar_ratio(n, d))
}

fn multiset() -> impl Strategy<Value = Vec<Scalar>> {
    prop::collection::vec(small_scalar(), 0..=5)
}

fn game_spec() -> impl Strategy<Value = (GeneratorSpec, u64)> {
    (
        1usize..=4,
        1u32..=3,
        2usize..=4,
        1usize..=3,
        1u64..=3,
        any::<u64>(),
    )
        .prop_map(|(players, degree, resources, strategies, wden, seed)| {
            (
                GeneratorSpec {
                    family: Family::RandomExplicit {
                        resources,
                        strategies_per_player: strategies,
                    },
                    players,
                    degree,
                    weight_max: 4,
                    weight_den_max: wden,
                    coeff_max: 3,
                    coeff_density: 60,
                },
                seed,
            )
        })
}

fn sample_game(spec: &GeneratorSpec, seed: u64) -> (Game, State) {
    generate(spec, seed).expect("feasible generator spec")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn psi_function_laws(elems in multiset(), b in small_scalar(), kmax in 1usize..=4) {
        let psi = psi_vector(&elems, kmax + 1).unwrap();
        let total: Scalar = elems.iter().sum();
        let mut with_b = elems.clone();
        with_b.push(b.clone());
        let psi_b = psi_vector(&with_b, kmax + 1).unwrap();
        for k in 1..=kmax {
            // (a) L^k <= psi_k <= k! L^k.
            let lk = pow_scalar(&total, k as u32);
            prop_assert!(lk <= psi[k]);
            prop_assert!(psi[k] <= factorial(k as u32) * &lk);
            // (b) psi_{k-1}^k <= psi_k^{k-1}.
            prop_assert!(pow_scalar(&psi[k - 1], k as u32) <= pow_scalar(&psi[k], k as u32 - 1));
            // (c) expansion of psi_k(A ∪ {b}) over powers of b.
            let expansion: Scalar = (0..=k)
                .map(|t| {
                    factorial(k as u32) / factorial((k - t) as u32)
                        * pow_scalar(&b, t as u32)
                        * &psi[k - t]
                })
                .sum();
            prop_assert_eq!(&psi_b[k], &expansion);
            // (d) psi_k(A ∪ {b}) - psi_k(A) = k b psi_{k-1}(A ∪ {b}).
            prop_assert_eq!(
                &psi_b[k] - &psi[k],
                scalar_int(k as i64) * &b * &psi_b[k - 1]
            );
            // (e) psi_k <= k psi_1 psi_{k-1}.
            prop_assert!(psi[k] <= scalar_int(k as i64) * &psi[1] * &psi[k - 1]);
            // (f) root superadditivity.
            let single = psi_vector(std::slice::from_ref(&b), kmax).unwrap();
            prop_assert!(
                check_root_superadditivity(&psi_b[k], &single[k], &psi[k], k as u32).unwrap()
            );
        }
    }

    #[test]
    fn psi_convolution(a in multiset(), b in multiset(), k in 1usize..=4) {
        let mut both = a.clone();
        both.extend(b.iter().cloned());
        let pa = psi_vector(&a, k).unwrap();
        let pb = psi_vector(&b, k).unwrap();
        let pu = psi_vector(&both, k).unwrap();
        let convolution: Scalar = (0..=k)
            .map(|t| binomial(k as u32, t as u32) * &pa[k - t] * &pb[t])
            .sum();
        prop_assert_eq!(&pu[k], &convolution);
    }

    #[test]
    fn psi_order_independent(elems in multiset(), swap in any::<prop::sample::Index>()) {
        let mut shuffled = elems.clone();
        if shuffled.len() >= 2 {
            let i = swap.index(shuffled.len());
            shuffled.swap(0, i);
            shuffled.reverse();
        }
        prop_assert_eq!(
            psi_vector(&elems, 4).unwrap(),
            psi_vector(&shuffled, 4).unwrap()
        );
    }

    #[test]
    fn psi_insert_remove_inverse(elems in multiset(), w in small_scalar()) {
        let mut agg = PsiAggregate::new(4);
        for e in &elems {
            agg.insert(e).unwrap();
        }
        let before = agg.values().to_vec();
        agg.insert(&w).unwrap();
        agg.remove(&w).unwrap();
        prop_assert_eq!(agg.values(), &before[..]);
        // psi_1 tracks the sum of held elements.
        let total: Scalar = elems.iter().sum();
        prop_assert_eq!(agg.psi(1), &total);
    }

    #[test]
    fn minkowski_inequality(
        pairs in prop::collection::vec((small_scalar(), small_scalar()), 1..=4),
        k in 1u32..=4,
    ) {
        let alphas: Vec<Scalar> = pairs.iter().map(|(a, _)| a.clone()).collect();
        let betas: Vec<Scalar> = pairs.iter().map(|(_, b)| b.clone()).collect();
        prop_assert!(check_minkowski(&alphas, &betas, k).unwrap());
    }

    #[test]
    fn concavity_claim_holds(
        znum in 2i64..=400, zden in 1i64..=40, anum in 1i64..=9, aden in 2i64..=10,
    ) {
        let z = scalar_ratio(znum, zden);
        let alpha = scalar_ratio(anum, aden);
        prop_assume!(z > Scalar::one());
        prop_assume!(alpha < Scalar::one());
        prop_assert!(check_concavity_claim(&z, &alpha).unwrap());
    }

    #[test]
    fn split_power_bound(
        alpha in small_scalar(), beta in small_scalar(), eps in positive_scalar(), d in 1u32..=3,
    ) {
        // (α+β)^{d+1} <= (1+ε) α^{d+1} + (1+1/ε)^d d^d β^{d+1}.
        let lhs = pow_scalar(&(&alpha + &beta), d + 1);
        let rhs = (Scalar::one() + &eps) * pow_scalar(&alpha, d + 1)
            + pow_scalar(&(Scalar::one() + eps.recip()), d)
                * pow_scalar(&scalar_int(d as i64), d)
                * pow_scalar(&beta, d + 1);
        prop_assert!(lhs <= rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn potential_difference_is_cost_difference((spec, seed) in game_spec()) {
        let (game, state) = sample_game(&spec, seed);
        let phi = potential(&game, &state);
        for u in 0..game.player_count() {
            let count = game.explicit_strategies(u).unwrap().len();
            let chat = cost_psi(&game, &state, u).unwrap();
            for alt in 0..count {
                let deviated = state.with_choice(u, Choice::Strategy(alt));
                let phi2 = potential(&game, &deviated);
                let chat2 = cost_psi(&game, &deviated, u).unwrap();
                prop_assert_eq!(&phi - &phi2, chat.clone() - chat2);
            }
        }
    }

    #[test]
    fn cost_sandwich((spec, seed) in game_spec()) {
        let (game, state) = sample_game(&spec, seed);
        let gap = degree_factorial(game.degree);
        for u in 0..game.player_count() {
            let c = cost_weighted(&game, &state, u).unwrap();
            let chat = cost_psi(&game, &state, u).unwrap();
            prop_assert!(c <= chat);
            prop_assert!(chat <= &gap * &c);
            if game.degree == 1 {
                prop_assert_eq!(c, chat);
            }
        }
    }

    #[test]
    fn partial_potential_claims((spec, seed) in game_spec(), mask in any::<u32>()) {
        let (game, state) = sample_game(&spec, seed);
        let n = game.player_count();
        let a: PlayerSet = (0..n).filter(|u| mask & (1 << u) != 0).collect();
        let b: PlayerSet = (0..n)
            .filter(|u| a.contains(u) && mask & (1 << (u + 8)) != 0)
            .collect();
        // Φ_B^A <= Φ_B.
        let partial_ab = partial_potential(&game, &state, &a, &b).unwrap();
        prop_assert!(partial_ab <= partial_potential_full(&game, &state, &b));
        // Cost-revealing: Φ_A <= Σ_{u∈A} ĉ_u.
        let phi_a = partial_potential_full(&game, &state, &a);
        let cost_sum: Scalar = a.iter().map(|&u| cost_psi(&game, &state, u).unwrap()).sum();
        prop_assert!(phi_a <= cost_sum);
        // Φ_u = ĉ_u.
        for &u in a.iter().take(2) {
            let singleton: PlayerSet = [u].into_iter().collect();
            prop_assert_eq!(
                partial_potential_full(&game, &state, &singleton),
                cost_psi(&game, &state, u).unwrap()
            );
        }
        // Locality: deviations outside A leave Φ_B^A unchanged, and a single
        // deviation by u ∈ A moves Φ_A exactly by the deviator's cost change.
        for u in 0..n {
            let count = game.explicit_strategies(u).unwrap().len();
            let deviated = state.with_choice(u, Choice::Strategy(count - 1));
            let moved = partial_potential(&game, &deviated, &a, &b).unwrap();
            if !a.contains(&u) {
                prop_assert_eq!(&partial_ab, &moved);
            } else {
                let delta = partial_potential_full(&game, &state, &a)
                    - partial_potential_full(&game, &deviated, &a);
                let cost_delta = cost_psi(&game, &state, u).unwrap()
                    - cost_psi(&game, &deviated, u).unwrap();
                prop_assert_eq!(delta, cost_delta);
            }
        }
    }

    #[test]
    fn effect_lemma((spec, seed) in game_spec(), mask in any::<u32>(), eps in positive_scalar()) {
        let (game, state) = sample_game(&spec, seed);
        let n = game.player_count();
        let u = (mask as usize) % n;
        let r: PlayerSet = (0..n)
            .filter(|&v| v != u && mask & (1 << (v + 8)) != 0)
            .collect();
        let rest: PlayerSet = (0..n).filter(|v| !r.contains(v)).collect();
        let without_u: PlayerSet = (0..n).filter(|&v| v != u).collect();
        let u_set: PlayerSet = [u].into_iter().collect();
        let chat = cost_psi(&game, &state, u).unwrap();
        let phi_u_rest = partial_potential(&game, &state, &rest, &u_set).unwrap();
        let phi_r_wo_u = partial_potential(&game, &state, &without_u, &r).unwrap();
        let bound = (Scalar::one() + &eps) * phi_u_rest
            + xi(&eps, game.degree).unwrap() * phi_r_wo_u;
        prop_assert!(chat <= bound);
    }

    #[test]
    fn weighted_move_transfers_to_psi((spec, seed) in game_spec()) {
        // An improvement by factor ρ in weighted cost improves the Ψ-cost by
        // at least ρ/d!: exactly, d!·ĉ(S)·c(S') >= c(S)·ĉ(S').
        let (game, state) = sample_game(&spec, seed);
        let gap = degree_factorial(game.degree);
        for u in 0..game.player_count() {
            let count = game.explicit_strategies(u).unwrap().len();
            let c = cost_weighted(&game, &state, u).unwrap();
            let chat = cost_psi(&game, &state, u).unwrap();
            for alt in 0..count {
                let choice = Choice::Strategy(alt);
                let c2 = deviation_cost(&game, &state, u, &choice, Mode::Weighted).unwrap();
                let chat2 = deviation_cost(&game, &state, u, &choice, Mode::Psi).unwrap();
                if c2 < c {
                    prop_assert!(&gap * &chat * &c2 >= &c * &chat2);
                }
            }
        }
    }

    #[test]
    fn incremental_evaluator_consistent((spec, seed) in game_spec(), moves in prop::collection::vec((any::<u32>(), any::<u32>()), 0..8)) {
        let (game, state) = sample_game(&spec, seed);
        let mut eval = StateEval::new(&game, state).unwrap();
        for (pu, ps) in moves {
            let u = pu as usize % game.player_count();
            let count = game.explicit_strategies(u).unwrap().len();
            eval.apply(u, Choice::Strategy(ps as usize % count)).unwrap();
        }
        let fresh = StateEval::new(&game, eval.state().clone()).unwrap();
        for r in 0..game.resource_count() {
            prop_assert_eq!(eval.aggregate(r).values(), fresh.aggregate(r).values());
            prop_assert_eq!(eval.aggregate(r).count(), fresh.aggregate(r).count());
        }
        prop_assert_eq!(eval.potential(), &potential(&game, eval.state()));
        // Load multisets agree with a direct membership scan.
        for r in &game.resources {
            let multiset = game.resource_load_multiset(eval.state(), &r.id).unwrap();
            let expected: Scalar = multiset.iter().sum();
            let ri = game.resource_index(&r.id).unwrap();
            prop_assert_eq!(eval.aggregate(ri).total(), &expected);
        }
    }

    #[test]
    fn deviation_locality((spec, seed) in game_spec()) {
        let (game, state) = sample_game(&spec, seed);
        for u in 0..game.player_count() {
            let count = game.explicit_strategies(u).unwrap().len();
            let from: Vec<usize> = game.choice_resources(u, &state.choices[u]);
            for alt in 0..count {
                let choice = Choice::Strategy(alt);
                let to: Vec<usize> = game.choice_resources(u, &choice);
                let deviated = state.with_choice(u, choice);
                for r in &game.resources {
                    let ri = game.resource_index(&r.id).unwrap();
                    let in_diff = from.contains(&ri) != to.contains(&ri);
                    let before = game.resource_load_multiset(&state, &r.id).unwrap();
                    let after = game.resource_load_multiset(&deviated, &r.id).unwrap();
                    if !in_diff {
                        prop_assert_eq!(before, after);
                    }
                }
            }
        }
    }

    #[test]
    fn serialization_round_trip((spec, seed) in game_spec()) {
        let (game, state) = sample_game(&spec, seed);
        let reparsed = parse_instance(&serialize_instance(&game)).unwrap();
        prop_assert_eq!(&game.degree, &reparsed.degree);
        prop_assert_eq!(&game.resources, &reparsed.resources);
        prop_assert_eq!(&game.players, &reparsed.players);
        prop_assert_eq!(&game.network, &reparsed.network);
        let restate = parse_state(&reparsed, &serialize_state(&game, &state)).unwrap();
        prop_assert_eq!(state, restate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn network_round_trip_and_solo_positivity(seed in any::<u64>(), links in 2usize..=4) {
        let spec = GeneratorSpec {
            family: Family::ParallelLinks { links },
            players: 3,
            degree: 2,
            weight_max: 3,
            weight_den_max: 2,
            coeff_max: 3,
            coeff_density: 70,
        };
        let (game, state) = sample_game(&spec, seed);
        prop_assert!(game.validate().is_empty());
        let reparsed = parse_instance(&serialize_instance(&game)).unwrap();
        prop_assert_eq!(&game.network, &reparsed.network);
        let restate = parse_state(&reparsed, &serialize_state(&game, &state)).unwrap();
        prop_assert_eq!(&state, &restate);
        for u in 0..game.player_count() {
            let (_, cost) = psieq_core::dynamics::solo_best_response(&game, u, Mode::Psi).unwrap();
            prop_assert!(cost > Scalar::zero());
        }
    }

    #[test]
    fn subgame_potential_of_empty_set_is_zero((spec, seed) in game_spec()) {
        let (game, state) = sample_game(&spec, seed);
        prop_assert_eq!(
            potential_subgame(&game, &state, &PlayerSet::new()),
            Scalar::zero()
        );
    }
}
