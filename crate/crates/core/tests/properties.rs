use proptest::prelude::*;
use rand::seq::SliceRandom;

use spanlab::backbone::{clique_walk, k_equitable_targets, verify_clique_walk, LabelledClique};
use spanlab::bandwidth::{check_zero_free, exact_bandwidth, heuristic_labelling};
use spanlab::colouring::{chromatic_number, proper_colouring, Colouring};
use spanlab::embed::{greedy_embed, verify_total_embedding, GreedyConfig};
use spanlab::experiment::{min_degree_target, thin_to_min_degree};
use spanlab::graph::{count_cliques_in, count_cliques_in_neighbourhood, generate_gnp, has_clique_in};
use spanlab::io::{edge_list_string, parse_graph};
use spanlab::regularity::{below_lower_bound, p_density, test_lower_regular_exhaustive, PairParams, Witness};
use spanlab::{GnpParams, Graph, Labelling};

fn gnp(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0..=1.0f64, any::<u64>()).prop_map(|(n, p, seed)| generate_gnp(GnpParams { n, p, seed }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_simple_and_symmetric(g in gnp(40)) {
        let degree_sum: usize = g.degrees().iter().sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        for u in 0..g.n() {
            prop_assert!(!g.has_edge(u, u));
            for v in g.neighbours(u).ones() {
                prop_assert!(g.has_edge(v, u));
            }
        }
    }

    #[test]
    fn gnp_replays(n in 0..60usize, p in 0.0..=1.0f64, seed in any::<u64>()) {
        prop_assert_eq!(generate_gnp(GnpParams { n, p, seed }), generate_gnp(GnpParams { n, p, seed }));
    }

    #[test]
    fn edge_list_round_trips(g in gnp(30)) {
        prop_assert_eq!(parse_graph(&edge_list_string(&g)).unwrap(), g);
    }

    #[test]
    fn neighbourhood_edges_are_two_cliques(g in gnp(30), v in 0..30usize) {
        prop_assume!(v < g.n());
        let nb: Vec<usize> = g.neighbours(v).ones().collect();
        let by_hand = nb.iter().enumerate().map(|(i, &a)| nb[i + 1..].iter().filter(|&&b| g.has_edge(a, b)).count()).sum::<usize>();
        prop_assert_eq!(count_cliques_in_neighbourhood(&g, v, 2).unwrap(), by_hand as u64);
        for s in 1..4 {
            prop_assert_eq!(has_clique_in(&g, g.neighbours(v), s), count_cliques_in(&g, g.neighbours(v), s) > 0);
        }
    }

    #[test]
    fn bandwidth_labellings_are_consistent(g in gnp(10)) {
        let heur = heuristic_labelling(&g);
        prop_assert_eq!(heur.recompute_bandwidth(&g), heur.bandwidth());
        let (exact, lab) = exact_bandwidth(&g).unwrap();
        prop_assert_eq!(lab.recompute_bandwidth(&g), exact);
        prop_assert!(exact <= heur.bandwidth());
    }

    #[test]
    fn colourings_are_proper(g in gnp(20), k in 1..5usize) {
        match proper_colouring(&g, k, &heuristic_labelling(&g)) {
            Ok(col) => {
                prop_assert!(col.conflict(&g).is_none());
                prop_assert!(col.colours().iter().all(|&c| c <= k));
            }
            // a refusal must be genuine
            Err(e) => {
                let refused = matches!(e, spanlab::Error::ColouringNotFound { .. });
                prop_assert!(refused);
                prop_assert!(chromatic_number(&g).unwrap() > k + 1);
            }
        }
    }

    #[test]
    fn zero_free_is_monotone(colours in prop::collection::vec(0..3usize, 20..80), z in 1..6usize) {
        let n = colours.len();
        let g = Graph::empty(n);
        let col = Colouring::new(colours, 2);
        let lab = Labelling::identity(&g);
        let beta = 0.02;
        if !check_zero_free(&col, &lab, z, beta, 2).unwrap() {
            prop_assert!(!check_zero_free(&col, &lab, z + 1, beta, 2).unwrap());
        }
    }

    #[test]
    fn equitable_targets_stay_equitable(base in prop::collection::vec(5..40usize, 1..5), k in 1..4usize, extra in 0..30usize) {
        let sizes: Vec<Vec<usize>> = base.iter().map(|&b| vec![b; k]).collect();
        let t = k_equitable_targets(&sizes, extra).unwrap();
        prop_assert!(t.is_k_equitable());
        prop_assert_eq!(t.total(), base.iter().sum::<usize>() * k + extra);
    }

    #[test]
    fn clique_walks_verify(k in 2..4usize, seed in any::<u64>()) {
        // K_{3k+1} minus one edge, cliques drawn away from its endpoint n-1
        let n = 3 * k + 1;
        let mut b = spanlab::GraphBuilder::from_graph(&Graph::complete(n));
        b.remove_edge(0, n - 1);
        let r = b.build();
        let mut order: Vec<usize> = (0..n - 1).collect();
        order.shuffle(&mut spanlab::rng::stream(seed));
        let start = LabelledClique::new(order[..k].to_vec());
        let end = LabelledClique::new(order[k..2 * k].to_vec());
        let walk = clique_walk(&r, &start, &end, k).unwrap();
        prop_assert!(verify_clique_walk(&r, &walk, &start, &end));
        let same = clique_walk(&r, &start, &start, k).unwrap();
        prop_assert!(verify_clique_walk(&r, &same, &start, &start));
    }

    #[test]
    fn witnesses_recheck_below_bound(seed in any::<u64>(), q in 0.05..0.6f64, eps in 0.2..0.4f64, d in 0.2..0.6f64) {
        let g = generate_gnp(GnpParams { n: 16, p: q, seed });
        let x: Vec<usize> = (0..8).collect();
        let y: Vec<usize> = (8..16).collect();
        let pp = PairParams::new(eps, d, 0.5).unwrap();
        if let Some(Witness::Sparse(w)) = test_lower_regular_exhaustive(&g, &pp, &x, &y).unwrap().witness {
            prop_assert!(below_lower_bound(p_density(&g, 0.5, &w.x, &w.y).unwrap(), &pp));
        }
    }

    #[test]
    fn thinning_keeps_the_target(n in 5..40usize, alpha in 0.3..0.9f64, seed in any::<u64>()) {
        let gamma = Graph::complete(n);
        let target = min_degree_target(alpha, 1.0, n);
        match thin_to_min_degree(&gamma, alpha, 1.0, seed) {
            Ok(g) => {
                prop_assert!(g.min_degree() >= target);
                prop_assert!(g.is_subgraph_of(&gamma));
            }
            // only when K_n itself is too sparse
            Err(e) => {
                let infeasible = matches!(e, spanlab::Error::InfeasibleTarget { .. });
                prop_assert!(infeasible && target > n - 1);
            }
        }
    }

    #[test]
    fn greedy_successes_verify(n in 6..30usize, seed in any::<u64>()) {
        let g = thin_to_min_degree(&Graph::complete(n), 0.6, 1.0, seed).unwrap();
        let h = Graph::cycle(n);
        let res = greedy_embed(&h, &g, &heuristic_labelling(&h), None, &[], None, &GreedyConfig { backtrack_budget: 10_000, seed }).unwrap();
        if let Some(e) = res.embedding() {
            prop_assert!(verify_total_embedding(&h, &g, e));
        }
    }
}
