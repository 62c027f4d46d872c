//! Property tests for the kernels, the pruner, and mask bookkeeping.

use nvx_core::{
    build, cosine_distance, distance, knn_search, l2_squared, BuildParams, Dataset, DistanceKind,
    Heuristic, NodeId, Predicate, Scored, SearchParams,
};

use proptest::prelude::*;

fn finite_vec(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    proptest::collection::vec(-100.0f32..100.0, dim)
}

proptest! {
    #[test]
    fn kernels_are_symmetric(a in finite_vec(16), b in finite_vec(16)) {
        let ab = l2_squared(&a, &b).unwrap();
        let ba = l2_squared(&b, &a).unwrap();
        let scale = ab.abs().max(1.0);
        prop_assert!((ab - ba).abs() / scale < 1e-6);
        // Cosine needs nonzero norms; the strategy rarely yields zeros but
        // guard anyway.
        if a.iter().any(|&x| x != 0.0) && b.iter().any(|&x| x != 0.0) {
            let cab = cosine_distance(&a, &b).unwrap();
            let cba = cosine_distance(&b, &a).unwrap();
            prop_assert!((cab - cba).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_distances(a in finite_vec(12)) {
        prop_assert_eq!(l2_squared(&a, &a).unwrap(), 0.0);
        if a.iter().any(|&x| x != 0.0) {
            prop_assert!(cosine_distance(&a, &a).unwrap().abs() <= 1e-6);
        }
    }

    #[test]
    fn sink_increments_once_per_call(calls in 1usize..50) {
        let mut count = 0u64;
        let a = vec![1.0f32, 2.0, 3.0];
        let b = vec![0.5f32, 0.0, -1.0];
        for _ in 0..calls {
            distance(DistanceKind::L2Squared, &a, &b, &mut count).unwrap();
        }
        prop_assert_eq!(count, calls as u64);
    }

    // The pruner: output is within cap, nearest-first, and every kept node
    // is strictly closer to the target than to all earlier-kept nodes.
    #[test]
    fn prune_output_satisfies_rng_rule(
        points in proptest::collection::vec(finite_vec(3), 2..40),
        cap in 1usize..12,
    ) {
        let dataset = Dataset::from_rows(&points).unwrap();
        let w = NodeId(0);
        let between = |a: NodeId, b: NodeId| dataset.distance_between(DistanceKind::L2Squared, a, b);
        let mut cands: Vec<Scored> = (1..points.len() as u32)
            .map(|i| Scored::new(between(NodeId(i), w), NodeId(i)))
            .collect();
        let kept = nvx_core::build::select_neighbors_prune(w, &mut cands, cap, between);
        prop_assert!(kept.len() <= cap);
        for (j, &u) in kept.iter().enumerate() {
            for &t in &kept[..j] {
                prop_assert!(between(u, w) < between(u, t));
            }
        }
        // Kept distances to w are nondecreasing (scan order is nearest-first).
        let ds: Vec<f64> = kept.iter().map(|&u| between(u, w)).collect();
        prop_assert!(ds.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn sample_exact_is_distinct_and_in_range(n in 1usize..200, seed in 0u64..500) {
        let count = n / 2 + 1;
        let s = nvx_core::sampling::sample_exact(n.max(count), count, seed);
        prop_assert_eq!(s.len(), count);
        let mut d = s.clone();
        d.dedup();
        prop_assert_eq!(d.len(), count);
        prop_assert!(s.iter().all(|&x| (x as usize) < n.max(count)));
    }
}

// Mask containment under every heuristic on a small built index: results
// never include an unselected node, and counters stay sane.
#[test]
fn results_always_pass_mask() {
    let mut rng_rows = rand::rngs::mock::StepRng::new(1, 0x9E3779B97F4A7C15);
    use rand::Rng;
    let rows: Vec<Vec<f32>> = (0..600)
        .map(|_| {
            (0..6)
                .map(|_| (rng_rows.gen::<u32>() % 1000) as f32 / 500.0 - 1.0)
                .collect()
        })
        .collect();
    let dataset = Dataset::from_rows(&rows).unwrap();
    let mut p = BuildParams::new(4, DistanceKind::L2Squared);
    p.ef_construction = 32;
    let g = build(&dataset, &p).unwrap();
    for sigma in [0.02_f64, 0.2, 0.6, 1.0] {
        let mask = nvx_core::evaluate(
            &Predicate::RandomSample {
                rate: sigma,
                seed: 17,
            },
            &dataset,
        )
        .unwrap();
        for h in [
            Heuristic::OnehopA,
            Heuristic::OnehopS,
            Heuristic::Blind,
            Heuristic::Directed,
            Heuristic::AdaptiveGlobal,
            Heuristic::AdaptiveLocal,
        ] {
            for qi in [3u32, 99, 471] {
                let q = dataset.row(NodeId(qi)).to_vec();
                let out =
                    knn_search(&g, &dataset, &q, &SearchParams::new(5, 20, h), &mask).unwrap();
                assert!(out.hits.iter().all(|s| mask.contains(s.node)));
                assert!(out.counters.s_dc <= out.counters.t_dc);
                let ds: Vec<f64> = out.hits.iter().map(|s| s.dist.0).collect();
                assert!(ds.windows(2).all(|w| w[0] <= w[1]), "hits not sorted");
            }
        }
    }
}

// The oracle must agree with an independently coded double-loop scan
// (repeated selection of the minimum) on 200 random filtered instances.
#[test]
fn oracle_agrees_with_selection_scan() {
    use nvx_core::{brute_force_knn, Dataset, MaskView, NodeId, Semimask};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let mut rng = StdRng::seed_from_u64(77);
    for case in 0..200 {
        let n = rng.gen_range(1..60);
        let dim = rng.gen_range(1..6);
        let k = rng.gen_range(1..8);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let dataset = Dataset::from_rows(&rows).unwrap();
        let keep: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        let mask = Semimask::from_fn(n, |i| keep[i]);
        let q: Vec<f32> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();

        let got = brute_force_knn(
            &dataset,
            DistanceKind::L2Squared,
            &q,
            MaskView::Bits(&mask),
            k,
        )
        .unwrap();

        // Independent path: repeatedly select the unpicked minimum by
        // (distance, id) using a plain double loop.
        let mut picked: Vec<(f64, u32)> = Vec::new();
        let mut used = vec![false; n];
        loop {
            if picked.len() == k {
                break;
            }
            let mut best: Option<(f64, u32)> = None;
            for i in 0..n {
                if used[i] || !keep[i] {
                    continue;
                }
                let mut d = 0.0f64;
                for (a, b) in q.iter().zip(&rows[i]) {
                    d += (*a as f64 - *b as f64) * (*a as f64 - *b as f64);
                }
                let cand = (d, i as u32);
                if best.is_none()
                    || cand.0 < best.unwrap().0
                    || (cand.0 == best.unwrap().0 && cand.1 < best.unwrap().1)
                {
                    best = Some(cand);
                }
            }
            match best {
                Some((d, i)) => {
                    used[i as usize] = true;
                    picked.push((d, i));
                }
                None => break,
            }
        }
        assert_eq!(got.len(), picked.len(), "case {case}");
        for (g, (d, i)) in got.iter().zip(&picked) {
            assert_eq!(g.node, NodeId(*i), "case {case}");
            assert!((g.dist.0 - d).abs() < 1e-9, "case {case}");
        }
    }
}

// The oracle treats "no mask" and "mask selecting everything" identically.
#[test]
fn oracle_full_mask_equals_unfiltered() {
    use nvx_core::{brute_force_knn, Dataset, MaskView, Semimask};
    let rows: Vec<Vec<f32>> = (0..200)
        .map(|i| vec![(i as f32 * 0.7).sin(), (i as f32 * 0.3).cos()])
        .collect();
    let dataset = Dataset::from_rows(&rows).unwrap();
    let all = Semimask::all(200);
    for q in [[0.1f32, 0.9], [-0.4, 0.2]] {
        let a = brute_force_knn(&dataset, DistanceKind::L2Squared, &q, MaskView::All, 7).unwrap();
        let b = brute_force_knn(
            &dataset,
            DistanceKind::L2Squared,
            &q,
            MaskView::Bits(&all),
            7,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
