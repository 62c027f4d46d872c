//! Statistical properties of the workload generators: sampling uniformity
//! and the correlation-ratio regimes.

use nvx::synth::{
    correlation_ce, gen_correlated_mask, gen_queries, gen_synthetic, Correlation, SynthSpec,
};
use nvx_core::{evaluate, DistanceKind, Predicate};

fn spec() -> SynthSpec {
    SynthSpec {
        n: 10_000,
        dim: 16,
        clusters: 8,
        spread: 0.05,
        seed: 99,
    }
}

// Chi-square over id-space deciles, 9 degrees of freedom; the p = 0.01
// critical value is 21.666.
#[test]
fn random_sample_is_uniform_over_deciles() {
    let dataset = gen_synthetic(&spec()).unwrap();
    let n = dataset.len();
    for seed in [1u64, 2, 3, 4, 5] {
        let mask = evaluate(&Predicate::RandomSample { rate: 0.1, seed }, &dataset).unwrap();
        assert_eq!(mask.selected_count(), 1000);
        let mut buckets = [0f64; 10];
        for i in 0..n {
            if mask.contains(nvx_core::NodeId(i as u32)) {
                buckets[i / (n / 10)] += 1.0;
            }
        }
        let expected = 100.0;
        let chi2: f64 = buckets.iter().map(|o| (o - expected).powi(2) / expected).sum();
        assert!(
            chi2 < 21.666,
            "seed {seed}: chi2 {chi2:.2} rejects uniformity at p=0.01"
        );
    }
}

#[test]
fn ce_regimes_order_positive_uncorrelated_negative() {
    let s = spec();
    let dataset = gen_synthetic(&s).unwrap();
    let queries = gen_queries(&dataset, &s, Correlation::Uncorrelated, 50, 7).unwrap();
    let k = 10;
    let sigma = 0.1;
    let mut means = std::collections::HashMap::new();
    for mode in [
        Correlation::Positive,
        Correlation::Uncorrelated,
        Correlation::Negative,
    ] {
        let mut total = 0.0;
        for (qi, q) in queries.iter().enumerate() {
            let mask = gen_correlated_mask(
                &dataset,
                DistanceKind::L2Squared,
                q,
                sigma,
                mode,
                1000 + qi as u64,
            )
            .unwrap();
            total += correlation_ce(&dataset, DistanceKind::L2Squared, &mask, q, k).unwrap();
        }
        means.insert(mode.as_str(), total / queries.len() as f64);
    }
    let (pos, un, neg) = (means["pos"], means["un"], means["neg"]);
    assert!(
        pos >= un && un >= neg,
        "regime order violated: pos {pos:.2}, un {un:.2}, neg {neg:.2}"
    );
    assert!((0.8..=1.2).contains(&un), "uncorrelated mean ce {un:.3}");
    assert!(pos >= 2.0, "positive mean ce {pos:.3}");
    assert!(neg <= 0.2, "negative mean ce {neg:.3}");
}

#[test]
fn correlated_mask_cardinality_is_floor_sigma_n() {
    let s = spec();
    let dataset = gen_synthetic(&s).unwrap();
    let q = dataset.row(nvx_core::NodeId(0)).to_vec();
    for sigma in [0.013, 0.2, 0.999] {
        let want = (sigma * dataset.len() as f64).floor() as usize;
        for mode in [
            Correlation::Uncorrelated,
            Correlation::Positive,
            Correlation::Negative,
        ] {
            let m = gen_correlated_mask(&dataset, DistanceKind::L2Squared, &q, sigma, mode, 0)
                .unwrap();
            assert_eq!(m.selected_count(), want, "{mode:?} at {sigma}");
        }
    }
}

#[test]
fn labels_partition_into_nonempty_clusters() {
    let s = SynthSpec {
        n: 2000,
        dim: 8,
        clusters: 16,
        spread: 0.02,
        seed: 5,
    };
    let d = gen_synthetic(&s).unwrap();
    let mut counts = vec![0usize; 16];
    for a in d.all_attrs() {
        counts[a.label as usize] += 1;
    }
    assert!(counts.iter().all(|&c| c > 0));
    assert_eq!(counts.iter().sum::<usize>(), 2000);
}
