mod common;

use clustersync::coloring::coarsest_balanced_refinement;
use clustersync::irrtransform::{build_transform_from, ZERO_BLOCK_TOL};
use clustersync::{enumerate_balanced_partitions, is_balanced, minimal_balanced_coloring, parse_network, Partition};
use common::{brute_force_lattice, planted_network, random_network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn planted(seed: u64, max_n: usize) -> (clustersync::Network, Partition) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_n);
    let q = r.gen_range(1..=n);
    let layers = r.gen_range(1..=2);
    planted_network(&mut r, n, q, layers, 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let (mut net, _) = planted(seed, 12);
        let mut r = rng(seed ^ 1);
        for l in &mut net.layers {
            l.sigma = r.gen_range(-2.0..2.0);
            l.delay = r.gen_range(0.0..3.0);
        }
        let back = parse_network(&net.to_json_string()).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn planted_partition_is_balanced_and_refines_the_minimal_one(seed in any::<u64>()) {
        let (net, plant) = planted(seed, 12);
        prop_assert!(is_balanced(&net, &plant));
        let pmin = minimal_balanced_coloring(&net);
        prop_assert!(plant.refines(&pmin));
        prop_assert!(is_balanced(&net, &pmin));
        prop_assert_eq!(coarsest_balanced_refinement(&net, &pmin), pmin);
    }

    #[test]
    fn relabeling_nodes_relabels_the_lattice(seed in any::<u64>()) {
        let (net, _) = planted(seed, 8);
        let mut r = rng(seed ^ 2);
        let mut perm: Vec<usize> = (0..net.len()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let moved = net.permuted(&perm);
        let relabel = |p: &Partition| {
            let mut labels = vec![0; p.len()];
            for (i, &c) in p.assignment().iter().enumerate() {
                labels[perm[i]] = c;
            }
            Partition::from_labels(&labels)
        };
        let a = enumerate_balanced_partitions(&net).unwrap();
        let b = enumerate_balanced_partitions(&moved).unwrap();
        let mut mapped: Vec<Partition> = a.partitions().iter().map(relabel).collect();
        mapped.sort();
        prop_assert_eq!(mapped.as_slice(), b.partitions());
        prop_assert_eq!(relabel(a.minimal()), b.minimal().clone());
    }

    #[test]
    fn join_of_balanced_partitions_is_balanced(seed in any::<u64>()) {
        let (net, _) = planted(seed, 8);
        let lat = enumerate_balanced_partitions(&net).unwrap();
        let parts = lat.partitions();
        let mut r = rng(seed ^ 3);
        for _ in 0..20 {
            let a = &parts[r.gen_range(0..parts.len())];
            let b = &parts[r.gen_range(0..parts.len())];
            let j = a.join(b);
            prop_assert!(is_balanced(&net, &j));
            prop_assert!(lat.index_of(&j).is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    /// Orthonormal `T`; every transverse row lives on one cluster and sums to
    /// zero there; transverse rows never see parallel columns.
    #[test]
    fn transform_is_orthonormal_and_respects_the_clusters(seed in any::<u64>()) {
        let (net, plant) = planted(seed, 9);
        let lat = enumerate_balanced_partitions(&net).unwrap();
        let tr = build_transform_from(&net, &lat, &plant).unwrap();
        prop_assert!(tr.orthonormality_error() <= 1e-12);
        let q = tr.num_parallel();
        for r in q..tr.t.nrows() {
            let c = tr.row_cluster[r];
            let mut sum = 0.0;
            for i in 0..net.len() {
                if plant.cluster_of(i) == c {
                    sum += tr.t[(r, i)];
                } else {
                    prop_assert!(tr.t[(r, i)] == 0.0);
                }
            }
            prop_assert!(sum.abs() <= 1e-12);
        }
        for (b, layer) in tr.b.iter().zip(&net.layers) {
            let scale = layer.max_abs().max(f64::MIN_POSITIVE);
            for r in q..b.nrows() {
                for c in 0..q {
                    prop_assert!(b[(r, c)].abs() <= ZERO_BLOCK_TOL * scale, "B[{}][{}] = {}", r, c, b[(r, c)]);
                }
            }
        }
        // upper block-triangular across pieces
        let pieces = tr.pieces();
        let mut piece_of = vec![usize::MAX; tr.t.nrows()];
        for (k, p) in pieces.iter().enumerate() {
            for &r in p {
                piece_of[r] = k;
            }
        }
        let s = tr.transverse_support();
        for r in q..tr.t.nrows() {
            for c in q..tr.t.nrows() {
                if piece_of[c] < piece_of[r] {
                    prop_assert!(s[(r - q, c - q)] <= 1e-9);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lattice_equals_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=9);
        let net = if r.gen_bool(0.5) {
            let layers = r.gen_range(1..=2);
            random_network(&mut r, n, layers, 0.3)
        } else {
            let q = r.gen_range(1..=n);
            planted_network(&mut r, n, q, 1, 0.6).0
        };
        let lat = enumerate_balanced_partitions(&net).unwrap();
        let brute = brute_force_lattice(&net);
        prop_assert_eq!(lat.partitions(), brute.as_slice());
    }
}
