mod common;

use common::{brute_force_min, partition_objective, same_partition, separated_blobs, set_partitions};
use proptest::prelude::*;
use swsc::compressor::{kmeans_channels_with, KMeansOptions};
use swsc::metrics::synthetic_labels;
use swsc::{gen_synthetic, kmeans_channels, restore_from_clusters, WeightMatrix};

#[test]
fn partition_enumerator_counts_match_stirling_numbers() {
    // S(6,3) = 90, S(8,3) = 966, S(5,1) = 1, S(4,4) = 1
    assert_eq!(set_partitions(6, 3).len(), 90);
    assert_eq!(set_partitions(8, 3).len(), 966);
    assert_eq!(set_partitions(5, 1).len(), 1);
    assert_eq!(set_partitions(4, 4).len(), 1);
}

#[test]
fn six_columns_three_blobs_recover_generating_partition() {
    let truth = synthetic_labels(6, 3);
    for seed in 0..5 {
        let w = separated_blobs(3, 6, 3, 0.5, seed);
        let (best, best_labels) = brute_force_min(&w, 3);
        assert!(
            same_partition(&best_labels, &truth),
            "brute force disagrees with generator"
        );
        let c = kmeans_channels(&w, 3, seed, 100, 1e-9).unwrap();
        assert!(
            same_partition(c.labels(), &truth),
            "seed {seed}: {:?}",
            c.labels()
        );
        assert!((c.objective(&w).unwrap() - best).abs() <= 1e-9 * best.max(1.0));
    }
}

#[test]
fn synthetic_64x64_recovers_round_robin_partition() {
    let w = gen_synthetic(64, 64, 8, 0.01, 3).unwrap();
    let c = kmeans_channels(&w, 8, 3, 100, 1e-6).unwrap();
    assert!(same_partition(c.labels(), &synthetic_labels(64, 8)));
}

#[test]
fn objective_history_non_increasing() {
    for seed in 0..10 {
        let w = common::random_matrix(6, 40, seed);
        let mut opts = KMeansOptions::new(5, seed);
        opts.tol = 0.0;
        let out = kmeans_channels_with(&w, &opts).unwrap();
        for pair in out.history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{:?}", out.history);
        }
        assert_eq!(*out.history.last().unwrap(), out.objective);
    }
}

#[test]
fn restarts_never_worse_than_single_run() {
    let w = common::random_matrix(4, 30, 8);
    let single = kmeans_channels_with(&w, &KMeansOptions::new(4, 1)).unwrap();
    let mut opts = KMeansOptions::new(4, 1);
    opts.restarts = 8;
    let many = kmeans_channels_with(&w, &opts).unwrap();
    assert!(many.objective <= single.objective);
}

#[test]
fn parallel_assignment_is_bitwise_identical() {
    let w = gen_synthetic(16, 300, 12, 0.2, 5).unwrap();
    let mut opts = KMeansOptions::new(12, 5);
    opts.restarts = 3;
    let seq = kmeans_channels_with(&w, &opts).unwrap();
    opts.parallel = true;
    let par = kmeans_channels_with(&w, &opts).unwrap();
    assert_eq!(seq.clustering, par.clustering);
    assert_eq!(seq.history, par.history);
}

fn small_matrix() -> impl Strategy<Value = WeightMatrix> {
    (1usize..5, 2usize..9).prop_flat_map(|(m, n)| {
        prop::collection::vec(-4.0f64..4.0, m * n).prop_map(move |v| WeightMatrix::new(m, n, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn labels_valid_and_clusters_non_empty(w in small_matrix(), k_frac in 0.0f64..1.0, seed in 0u64..1000) {
        let k = 1 + ((w.cols() - 1) as f64 * k_frac) as usize;
        let c = kmeans_channels(&w, k, seed, 100, 1e-6).unwrap();
        let mut counts = vec![0; k];
        for &l in c.labels() {
            prop_assert!((l as usize) < k);
            counts[l as usize] += 1;
        }
        prop_assert!(counts.iter().all(|&n| n > 0));
    }

    #[test]
    fn centroids_are_member_means(w in small_matrix(), seed in 0u64..1000) {
        let k = (w.cols() / 2).max(1);
        let c = kmeans_channels(&w, k, seed, 100, 0.0).unwrap();
        for cluster in 0..k {
            let members: Vec<usize> = (0..w.cols()).filter(|&j| c.labels()[j] as usize == cluster).collect();
            for i in 0..w.rows() {
                let mean = members.iter().map(|&j| w.get(i, j)).sum::<f64>() / members.len() as f64;
                let got = c.centroid(cluster)[i];
                prop_assert!((got - mean).abs() <= 1e-6 * mean.abs().max(1.0));
            }
        }
        // already at the mean: recomputing it leaves the objective unchanged
        let obj = c.objective(&w).unwrap();
        let again = partition_objective(&w, c.labels(), k);
        prop_assert!((obj - again).abs() < 1e-9);
    }

    #[test]
    fn each_column_maps_to_nearest_centroid(w in small_matrix(), seed in 0u64..1000) {
        let k = (w.cols() / 2).max(1);
        let c = kmeans_channels(&w, k, seed, 1000, 0.0).unwrap();
        let restored = restore_from_clusters(&c, w.rows(), w.cols()).unwrap();
        for j in 0..w.cols() {
            let col = w.column(j);
            let d = |v: &[f64]| col.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let assigned = d(&restored.column(j));
            for cluster in 0..k {
                prop_assert!(assigned <= d(c.centroid(cluster)) + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed(w in small_matrix(), seed in 0u64..1000) {
        let k = (w.cols() / 3).max(1);
        prop_assert_eq!(
            kmeans_channels(&w, k, seed, 100, 1e-6).unwrap(),
            kmeans_channels(&w, k, seed, 100, 1e-6).unwrap()
        );
    }
}
