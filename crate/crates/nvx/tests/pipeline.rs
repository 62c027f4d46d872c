//! End-to-end CLI pipeline on a small corpus: gen, build, mask, gt,
//! persist round-trip, query, and a one-point bench.

use nvx::cli::cli_main;

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("nvx").chain(args.iter().copied()))
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let data = d("data.fvecs");
    let idx = d("idx");
    let idx2 = d("idx2");
    let mask = d("sel.mask");
    let queries = d("queries.fvecs");
    let gt = d("gt.bin");
    let csv = d("out.csv");

    assert_eq!(
        run(&[
            "gen", "--out", &data, "--n", "3000", "--dim", "16", "--clusters", "8", "--spread",
            "0.05", "--seed", "3"
        ]),
        0
    );
    assert_eq!(
        run(&[
            "build",
            "--dataset",
            &data,
            "--index-dir",
            &idx,
            "--m",
            "8",
            "--efc",
            "48",
            "--sample-rate",
            "0.05",
            "--threads",
            "2",
            "--seed",
            "3"
        ]),
        0
    );
    // Re-persist (verifies checksums and round-trips the adjacency).
    assert_eq!(run(&["persist", "--index-dir", &idx, "--out", &idx2]), 0);
    for f in ["vectors.nvx", "lower.csr", "upper.gph"] {
        let a = std::fs::read(std::path::Path::new(&idx).join(f)).unwrap();
        let b = std::fs::read(std::path::Path::new(&idx2).join(f)).unwrap();
        assert_eq!(a, b, "{f} differs after re-persist");
    }

    assert_eq!(
        run(&["mask", "--dataset", &data, "--pred", "id<0.25", "--out", &mask]),
        0
    );

    // Queries: reuse the first dataset rows.
    let dataset = nvx::fvecs::load_fvecs(&data).unwrap();
    let qs: Vec<Vec<f32>> = (0..5)
        .map(|i| dataset.row(nvx_core::NodeId(i * 7)).to_vec())
        .collect();
    nvx::fvecs::write_query_fvecs(&queries, &qs).unwrap();

    assert_eq!(
        run(&[
            "gt", "--dataset", &data, "--queries", &queries, "--mask", &mask, "--k", "5",
            "--out", &gt
        ]),
        0
    );
    let (k, rows) = nvx::gt_file::read_gt(&gt).unwrap();
    assert_eq!(k, 5);
    assert_eq!(rows.len(), 5);

    assert_eq!(
        run(&[
            "query",
            "--index-dir",
            &idx,
            "--queries",
            &queries,
            "--qi",
            "0",
            "--mask",
            &mask,
            "--k",
            "5",
            "--efs",
            "50"
        ]),
        0
    );

    assert_eq!(
        run(&[
            "bench",
            "--index-dir",
            &idx,
            "--dataset",
            &data,
            "--queries",
            &queries,
            "--heuristics",
            "blind,adaptive-l",
            "--selectivities",
            "0.2",
            "--correlation",
            "un",
            "--k",
            "5",
            "--target-recall",
            "0.9",
            "--repeats",
            "2",
            "--seed",
            "1",
            "--out",
            &csv
        ]),
        0
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# index="));
    assert_eq!(lines.next().unwrap(), nvx::bench::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    // Blind rows satisfy t_dc == s_dc.
    let blind = rows.iter().find(|r| r.contains(",blind,")).unwrap();
    let cols: Vec<&str> = blind.split(',').collect();
    assert_eq!(cols[9], cols[10], "blind t_dc != s_dc in {blind}");
}

#[test]
fn help_exits_zero_and_bad_flags_exit_two() {
    assert_eq!(run(&["bench", "--help"]), 0);
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["bogus-subcommand"]), 2);
    assert_eq!(run(&["query", "--no-such-flag"]), 2);
    // Runtime failure (missing index) exits 1.
    assert_eq!(
        run(&["query", "--index-dir", "/nonexistent", "--query", "0.0"]),
        1
    );
}

#[test]
fn query_with_k_beyond_selection_prints_what_exists() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let data = d("data.fvecs");
    let idx = d("idx");
    assert_eq!(
        run(&["gen", "--out", &data, "--n", "400", "--dim", "8", "--clusters", "4", "--seed", "9"]),
        0
    );
    assert_eq!(
        run(&[
            "build", "--dataset", &data, "--index-dir", &idx, "--m", "4", "--efc", "16",
            "--sample-rate", "0.1", "--seed", "9"
        ]),
        0
    );
    // Only 4 nodes selected but k = 10: succeeds with a warning.
    assert_eq!(
        run(&[
            "query",
            "--index-dir",
            &idx,
            "--query",
            &vec!["0.5"; 8].join(","),
            "--pred",
            "rand:0.01:5",
            "--k",
            "10",
            "--efs",
            "64"
        ]),
        0
    );
}

#[test]
fn bench_against_fixed_mask_and_gt_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let (data, idx, mask, queries, gt, csv) = (
        d("data.fvecs"),
        d("idx"),
        d("sel.mask"),
        d("q.fvecs"),
        d("gt.bin"),
        d("out.csv"),
    );
    assert_eq!(
        run(&["gen", "--out", &data, "--n", "2000", "--dim", "12", "--clusters", "4", "--spread",
              "0.4", "--seed", "8"]),
        0
    );
    assert_eq!(
        run(&["build", "--dataset", &data, "--index-dir", &idx, "--m", "6", "--efc", "24",
              "--sample-rate", "0.05", "--seed", "8"]),
        0
    );
    assert_eq!(
        run(&["mask", "--dataset", &data, "--pred", "id<0.5", "--out", &mask]),
        0
    );
    let dataset = nvx::fvecs::load_fvecs(&data).unwrap();
    let qs: Vec<Vec<f32>> = (0..8)
        .map(|i| dataset.row(nvx_core::NodeId(i * 3)).to_vec())
        .collect();
    nvx::fvecs::write_query_fvecs(&queries, &qs).unwrap();
    assert_eq!(
        run(&["gt", "--dataset", &data, "--queries", &queries, "--mask", &mask, "--k", "5",
              "--out", &gt]),
        0
    );
    // gt without a fixed mask is a usage error (exit 2).
    assert_eq!(
        run(&["bench", "--index-dir", &idx, "--dataset", &data, "--queries", &queries,
              "--gt", &gt, "--k", "5", "--target-recall", "0.9"]),
        2
    );
    assert_eq!(
        run(&["bench", "--index-dir", &idx, "--dataset", &data, "--queries", &queries,
              "--mask", &mask, "--gt", &gt, "--heuristics", "adaptive-l", "--k", "5",
              "--target-recall", "0.9", "--repeats", "1", "--out", &csv]),
        0
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let row = text.lines().last().unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[2], "0.5"); // sigma column reports the mask's own selectivity
    let recall: f64 = cols[5].parse().unwrap();
    assert!(recall >= 0.9, "file-truth recall {recall} in {row}");
}
