mod common;

use common::*;
use qir::clustering::*;

#[test]
fn kmeans_reaches_exhaustive_optimum() {
    for seed in 0..100 {
        let (pts, k) = blob_instance(seed);
        let (best, winners) = brute_optimum(&pts, k, brute_wcss, 1e-9);
        let fit = KMeans::new(k, seed).fit(&pts).unwrap();
        assert!((fit.objective - best).abs() < 1e-9, "seed {seed}: {} vs {best}", fit.objective);
        assert!(winners.contains(&canonical(&fit.assignment.labels)), "seed {seed}");
        assert!((wcss(&pts, &fit.assignment.labels, k) - brute_wcss(&pts, &fit.assignment.labels, k)).abs() < 1e-9);
    }
}

#[test]
fn spherical_reaches_exhaustive_optimum() {
    for seed in 0..100 {
        let (pts, k) = blob_instance(seed);
        let (best, winners) = brute_optimum(&pts, k, brute_cosine_objective, 1e-9);
        let fit = KMeans::new(k, seed).fit_spherical(&pts).unwrap();
        assert!((fit.objective - best).abs() < 1e-9, "seed {seed}: {} vs {best}", fit.objective);
        assert!(winners.contains(&canonical(&fit.assignment.labels)), "seed {seed}");
    }
}

#[test]
fn ward_matches_naive_merges() {
    for seed in 0..100 {
        let (pts, _) = small_instance(seed);
        let got = ward_merges(&pts, 1).unwrap();
        let want = naive_ward_merges(&pts, 1);
        assert_eq!(got.len(), want.len());
        for (g, (l, r, c)) in got.iter().zip(&want) {
            assert_eq!((g.left, g.right), (*l, *r), "seed {seed}");
            assert!((g.cost - c).abs() < 1e-9 * c.max(1.0), "seed {seed}");
        }
    }
}

#[test]
fn ward_cut_labels_follow_merges() {
    let (pts, _) = small_instance(7);
    let a = agglomerative_ward(&pts, 3).unwrap();
    let merges = naive_ward_merges(&pts, 3);
    for (l, r, _) in merges {
        assert_eq!(a.labels[l], a.labels[r]);
    }
    assert_eq!(a.sizes().iter().filter(|&&s| s > 0).count(), 3);
}

#[test]
fn gmm_log_likelihood_is_monotone() {
    for seed in 0..50 {
        let (mut pts, k) = small_instance(1000 + seed);
        let dim = pts[0].len();
        while pts.len() < 3 * (dim + 1) {
            let p: Vec<f64> = pts[pts.len() % 5].iter().enumerate().map(|(i, x)| x + 0.3 * ((i + pts.len()) as f64).sin()).collect();
            pts.push(p);
        }
        let fit = Gmm::new(k, seed).fit(&pts).unwrap();
        for w in fit.log_likelihood_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {} -> {}", w[0], w[1]);
        }
        for r in &fit.responsibilities {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn bcubed_reference_cases() {
    let perfect = bcubed_labels(&[0, 0, 1, 1], &["a", "a", "b", "b"]).unwrap();
    assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
    let merged = bcubed_labels(&[0, 0, 0, 0], &["a", "a", "b", "b"]).unwrap();
    assert!((merged.precision - 0.5).abs() < 1e-12);
    assert!((merged.recall - 1.0).abs() < 1e-12);
    assert!((merged.f1 - 2.0 / 3.0).abs() < 1e-12);
    let split = bcubed_labels(&[0, 1, 2, 3], &["a", "a", "b", "b"]).unwrap();
    assert_eq!((split.precision, split.recall), (1.0, 0.5));
    assert!(matches!(bcubed_labels(&[0], &["a", "b"]), Err(ClusterError::LengthMismatch { .. })));
}

#[test]
fn bakeoff_on_the_bundled_corpus() {
    let (points, labels) = bundled_points();
    let report = bakeoff(&points, &labels, 3, 0).unwrap();
    let km = report.score(Algorithm::KMeans).unwrap().f1;
    for alg in Algorithm::ALL {
        assert!(km >= report.score(alg).unwrap().f1 - 0.02, "{alg:?}");
    }
    let again = bakeoff(&points, &labels, 3, 0).unwrap();
    assert_eq!(report.to_json(), again.to_json());
    assert!(report.to_table().starts_with("Algorithm"));
}

#[test]
fn kmeans_on_uniform_points_is_bounded_and_monotone() {
    for seed in 0..100 {
        let (pts, k) = small_instance(seed);
        let fit = KMeans::new(k, seed).fit(&pts).unwrap();
        let (best, _) = brute_optimum(&pts, k, brute_wcss, 0.0);
        assert!(fit.objective >= best - 1e-9);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}
