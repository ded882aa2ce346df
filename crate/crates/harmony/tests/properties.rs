//! Randomized invariants: shift invariance of quasilinear demand, mesh
//! partition/location consistency, matching cross-checks against brute
//! force, and exact-solver optimality against permutation enumeration.

use harmony::domain::PriceVector;
use harmony::matching::{
    hall_violation, max_matching, transportation_feasible, DemandGraph, MarginalPair, Side,
};
use harmony::mesh::{cell_barycentric_weights, cell_contains, cells, locate_point, PriceMap};
use harmony::preferences::DemandOracle;
use harmony::quasilinear::{envy_free_prices, max_weight_assignment, optimal_welfare};
use harmony::rational::{rat, rat_int, Rat};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rat_vec(len: usize, lo: i64, hi: i64) -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((lo..hi, 1i64..8), len)
        .prop_map(|v| v.into_iter().map(|(n, d)| rat(n, d)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // bestRooms(p + c*1) = bestRooms(p) for quasilinear oracles
    #[test]
    fn quasilinear_shift_invariance(
        values in rat_vec(4, 0, 100),
        prices in rat_vec(4, -50, 150),
        c in (-200i64..200, 1i64..8).prop_map(|(n, d)| rat(n, d)),
    ) {
        let oracle = DemandOracle::quasilinear(values);
        let p = PriceVector::finite(prices.clone());
        let shifted = PriceVector::finite(prices.iter().map(|x| x + &c).collect());
        prop_assert_eq!(oracle.best_rooms(&p).unwrap(), oracle.best_rooms(&shifted).unwrap());
    }

    // every interior point lies in at least one located cell, with convex
    // barycentric weights
    #[test]
    fn mesh_point_location(
        m in 2usize..5,
        k in 1u64..7,
        raw in prop::collection::vec(1i64..50, 4),
    ) {
        let total: i64 = raw.iter().take(m).sum();
        let x: Vec<Rat> = raw.iter().take(m).map(|&v| rat(v, total)).collect();
        let candidates = locate_point(m, k, &x).unwrap();
        prop_assert!(!candidates.is_empty());
        let hit = candidates.iter().find(|c| cell_contains(c, &x));
        prop_assert!(hit.is_some(), "no candidate contains the point");
        let weights = cell_barycentric_weights(hit.unwrap(), &x).unwrap();
        let sum: Rat = weights.iter().cloned().sum();
        prop_assert_eq!(sum, Rat::one());
        prop_assert!(weights.iter().all(|w| *w >= Rat::zero()));
    }

    // adding an edge never destroys transportation feasibility
    #[test]
    fn transportation_monotone_under_edge_addition(
        n in 1usize..5,
        m in 1usize..5,
        edge_bits in prop::collection::vec(any::<bool>(), 25),
        extra in (0usize..25),
    ) {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .enumerate()
            .filter(|(idx, _)| edge_bits[*idx])
            .map(|(_, e)| e)
            .collect();
        let marg = MarginalPair::new(
            vec![rat(1, n as i64); n],
            vec![rat(1, m as i64); m],
        ).unwrap();
        let g = DemandGraph::new(n, m, edges.clone()).unwrap();
        if transportation_feasible(&g, &marg).unwrap().is_some() {
            let (i, j) = (extra % n, (extra / n) % m.max(1));
            let mut more = edges;
            more.push((i, j % m));
            let g2 = DemandGraph::new(n, m, more).unwrap();
            prop_assert!(transportation_feasible(&g2, &marg).unwrap().is_some());
        }
    }

    // exact solver: welfare matches brute-force permutation enumeration and
    // prices are exactly envy-free with exact sum
    #[test]
    fn exact_solver_against_brute_force(
        flat in prop::collection::vec(0i64..100, 16),
        n in 2usize..5,
    ) {
        let values: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| rat_int(flat[i * 4 + j])).collect())
            .collect();
        let total_rent = rat_int(100);

        let sigma = max_weight_assignment(&values).unwrap();
        let welfare: Rat = sigma.iter().enumerate().map(|(i, &j)| values[i][j].clone()).sum();
        let best = permutations(n)
            .into_iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| values[i][j].clone()).sum::<Rat>())
            .max()
            .unwrap();
        prop_assert_eq!(&welfare, &best);
        prop_assert_eq!(welfare, optimal_welfare(&values));

        let prices = envy_free_prices(&values, &sigma, &total_rent).unwrap();
        let sum: Rat = prices.iter().cloned().sum();
        prop_assert_eq!(sum, total_rent);
        for i in 0..n {
            let own = &values[i][sigma[i]] - &prices[sigma[i]];
            for j in 0..n {
                prop_assert!(&values[i][j] - &prices[j] <= own, "agent {} envies room {}", i, j);
            }
        }
    }

    // hall_violation agrees with matching-size deficiency on random graphs
    #[test]
    fn hall_violation_matches_matching_deficiency(
        n in 1usize..7,
        m in 1usize..7,
        edge_bits in prop::collection::vec(any::<bool>(), 36),
    ) {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .enumerate()
            .filter(|(idx, _)| edge_bits[*idx])
            .map(|(_, e)| e)
            .collect();
        let g = DemandGraph::new(n, m, edges).unwrap();
        let deficient = max_matching(&g).len() < n;
        let violation = hall_violation(&g, &vec![1u64; m], Side::Agents);
        prop_assert_eq!(deficient, violation.is_some());
        if let Some(set) = violation {
            // the witness really violates Hall: |N(S)| < |S|
            let mut neighborhood: Vec<usize> = g
                .edges
                .iter()
                .filter(|(i, _)| set.contains(i))
                .map(|&(_, j)| j)
                .collect();
            neighborhood.sort_unstable();
            neighborhood.dedup();
            prop_assert!(neighborhood.len() < set.len());
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

// every point of a fine random sample lies in some cell that locate_point
// finds, across several (m, k) combinations
#[test]
fn mesh_partition_dense_sample() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for &(m, k) in &[(2usize, 5u64), (3, 4), (4, 3)] {
        for _ in 0..400 {
            let raw: Vec<i64> = (0..m).map(|_| rng.gen_range(1..1000)).collect();
            let total: i64 = raw.iter().sum();
            let x: Vec<Rat> = raw.iter().map(|&v| rat(v, total)).collect();
            let candidates = locate_point(m, k, &x).unwrap();
            assert!(
                candidates.iter().any(|c| cell_contains(c, &x)),
                "uncovered point {x:?} at m={m} k={k}"
            );
        }
        // and cells really partition: each sampled point is in candidates only
        let all: Vec<_> = cells(m, k).unwrap().collect();
        assert_eq!(all.len() as u64, k.pow(m as u32 - 1));
    }
}

// compensable map and transportation witness sanity on a fixed graph
#[test]
fn named_weight_vector_realizes_marginals() {
    // agents {1,2,3}, rooms {1,2}; w on (1,1),(2,1),(2,2),(3,2)
    let g = DemandGraph::new(3, 2, vec![(0, 0), (1, 0), (1, 1), (2, 1)]).unwrap();
    let w = [rat(1, 10), rat(2, 10), rat(3, 10), rat(4, 10)];
    let mut b = vec![Rat::zero(); 3];
    let mut a = vec![Rat::zero(); 2];
    for (&(i, j), wij) in g.edges.iter().zip(w.iter()) {
        b[i] += wij;
        a[j] += wij;
    }
    assert_eq!(b, vec![rat(1, 10), rat(5, 10), rat(4, 10)]);
    assert_eq!(a, vec![rat(3, 10), rat(7, 10)]);
    let marg = MarginalPair::new(b, a).unwrap();
    assert!(transportation_feasible(&g, &marg).unwrap().is_some());
}

// price maps: compensable sum identity at random barycentric points
#[test]
fn compensable_sum_identity_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let t = rat_int(400);
    let r = rat_int(300);
    for m in 2usize..=4 {
        let map = PriceMap::compensable(t.clone(), r.clone()).unwrap();
        for _ in 0..200 {
            let raw: Vec<i64> = (0..m).map(|_| rng.gen_range(0..100)).collect();
            let total: i64 = raw.iter().sum::<i64>().max(1);
            let x: Vec<Rat> = raw.iter().map(|&v| rat(v, total)).collect();
            let p = map.price(&x);
            let sum: Rat = p.finite_entries().unwrap().into_iter().sum();
            assert_eq!(sum, r);
        }
    }
}
