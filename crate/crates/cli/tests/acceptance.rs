//! Acceptance suite: one test per release criterion, each printing a
//! single pass/fail line (visible with `--nocapture`). Tests share a lock
//! so wall-clock budgets are measured one criterion at a time.

use std::fs;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;

use groupies_core::groupie::{degree_profile, groupie_report, Convention};
use groupies_core::model::{sample, PartitionSpec};
use groupies_core::montecarlo::{self, ExperimentConfig, ThresholdRule};
use groupies_core::oracle::exact_groupie_distribution;
use groupies_core::rng::{self, Seed};
use groupies_core::theory::{
    self, heuristic_prediction, hoeffding_tail_bound, degree_laws, LimitFraction,
};

static GATE: Mutex<()> = Mutex::new(());

fn serialized() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn uniform(sizes: &[usize], p: f64) -> PartitionSpec {
    PartitionSpec::uniform(sizes.to_vec(), p).unwrap()
}

fn check_budget(name: &str, elapsed: Duration, budget: Duration) {
    assert!(
        elapsed <= budget,
        "{name}: took {elapsed:?}, budget {budget:?}"
    );
}

#[test]
fn criterion_01_oracle_equivalence() {
    let _g = serialized();
    let start = Instant::now();
    let mut details = Vec::new();
    for sizes in [vec![1, 2], vec![1, 1, 1]] {
        let spec = uniform(&sizes, 0.5);
        let dist = exact_groupie_distribution(&spec, Convention::Strict).unwrap();
        let exact_mean = dist.mean_n();
        let se = (dist.var_n() / 1e5).sqrt();
        let config = ExperimentConfig::new(spec, 100_000, Seed::new(2024));
        let result = montecarlo::run(&config);
        let dev = (result.n_summary.mean - exact_mean).abs();
        assert!(
            dev <= 4.0 * se,
            "parts {sizes:?}: mean {} vs exact {exact_mean}, |dev| {dev} > 4 SE {}",
            result.n_summary.mean,
            4.0 * se
        );
        details.push(format!(
            "parts {sizes:?} mean {:.5} (exact {exact_mean}, 4SE {:.5})",
            result.n_summary.mean,
            4.0 * se
        ));
    }
    let elapsed = start.elapsed();
    check_budget("criterion 1", elapsed, Duration::from_secs(10));
    println!(
        "criterion 01 oracle-equivalence: PASS ({}; {elapsed:?})",
        details.join("; ")
    );
}

#[test]
fn criterion_02_global_half_claim() {
    let _g = serialized();
    let start = Instant::now();
    let spec = uniform(&[300, 300, 300], 0.5);
    let config = ExperimentConfig::new(spec, 100, Seed::new(7));
    let result = montecarlo::run(&config);
    let frac = result.n_summary.mean / 900.0;
    assert!(
        (0.45..=0.55).contains(&frac),
        "mean N/n = {frac}, outside [0.45, 0.55]"
    );
    let elapsed = start.elapsed();
    check_budget("criterion 2", elapsed, Duration::from_secs(60));
    println!("criterion 02 global-half: PASS (mean N/n = {frac:.4}; {elapsed:?})");
}

#[test]
fn criterion_03_bipartite_regression() {
    let _g = serialized();
    let start = Instant::now();
    let spec = uniform(&[500, 500], 0.5);
    let config = ExperimentConfig::new(spec, 100, Seed::new(8));
    let result = montecarlo::run(&config);
    for (i, f) in result.fraction_means.iter().enumerate() {
        assert!(
            (0.45..=0.55).contains(f),
            "part {i} fraction {f} outside [0.45, 0.55]"
        );
    }
    let elapsed = start.elapsed();
    check_budget("criterion 3", elapsed, Duration::from_secs(60));
    println!(
        "criterion 03 bipartite: PASS (fractions {:.4}, {:.4}; {elapsed:?})",
        result.fraction_means[0], result.fraction_means[1]
    );
}

#[test]
fn criterion_04_unbalanced_separation() {
    let _g = serialized();
    let start = Instant::now();
    let spec = uniform(&[200, 300, 500], 0.5);
    let predictions: Vec<LimitFraction> = heuristic_prediction(&spec)
        .iter()
        .map(|p| p.prediction)
        .collect();
    assert_eq!(
        predictions,
        vec![LimitFraction::One, LimitFraction::One, LimitFraction::Zero]
    );
    let config = ExperimentConfig::new(spec, 50, Seed::new(9));
    let result = montecarlo::run(&config);
    let smallest = result.fraction_means[0];
    let largest = result.fraction_means[2];
    assert!(smallest >= 0.9, "smallest-part fraction {smallest} < 0.9");
    assert!(largest <= 0.1, "largest-part fraction {largest} > 0.1");
    let elapsed = start.elapsed();
    check_budget("criterion 4", elapsed, Duration::from_secs(60));
    println!(
        "criterion 04 unbalanced: PASS (fractions {smallest:.4}/{:.4}/{largest:.4}, heuristic 1,1,0; {elapsed:?})",
        result.fraction_means[1]
    );
}

#[test]
fn criterion_05_bound_dominance_exhaustive() {
    let _g = serialized();
    let start = Instant::now();
    let mut checked = 0u64;
    for m in 1..=200u64 {
        for t in 0..=m.div_ceil(2) {
            let exact = theory::two_sided_half_tail_rational(m, t as f64)
                .to_f64()
                .unwrap();
            let bound = hoeffding_tail_bound(m, t as f64);
            assert!(
                exact <= bound + 1e-12,
                "m={m} t={t}: exact tail {exact} exceeds bound {bound}"
            );
            checked += 1;
        }
    }
    println!(
        "criterion 05 bound-dominance: PASS ({checked} (m,t) pairs, zero failures; {:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_06_structural_identities() {
    let _g = serialized();
    let start = Instant::now();
    let specs = [
        uniform(&[1, 2], 1.0),
        uniform(&[2, 3], 0.5),
        uniform(&[3, 3, 3], 0.3),
        uniform(&[4, 2, 3, 1], 0.7),
        uniform(&[6, 10], 0.2),
    ];
    let mut graphs = 0u64;
    for (which, spec) in specs.iter().enumerate() {
        let stream = rng::stream_seed(1000 + which as u64, rng::TAG_TRIAL);
        for trial in 0..200u64 {
            let graph = sample(spec, Seed::new(rng::value_at(stream, trial)));
            let profile = degree_profile(&graph);
            let sum_s: u64 = profile.s.iter().sum();
            let sum_d_sq: u64 = profile.d.iter().map(|&d| (d as u64) * (d as u64)).sum();
            assert_eq!(sum_s, sum_d_sq, "sum S != sum d^2");
            let sum_d: u64 = profile.d.iter().map(|&d| d as u64).sum();
            assert_eq!(sum_d, 2 * graph.edge_count() as u64, "sum d != 2|E|");
            if graph.edge_count() > 0 {
                let nonstrict = groupie_report(&graph, &profile, Convention::NonStrict);
                assert!(nonstrict.total >= 1, "edge present but no non-strict groupie");
            }
            graphs += 1;
        }
    }
    assert_eq!(graphs, 1000);
    println!(
        "criterion 06 structural-identities: PASS (1000 graphs, 5 specs; {:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_07_variance_scaling() {
    let _g = serialized();
    let start = Instant::now();
    let specs = vec![
        uniform(&[100, 100, 100], 0.5),
        uniform(&[200, 200, 200], 0.5),
        uniform(&[400, 400, 400], 0.5),
    ];
    let table = montecarlo::scaling_sweep(
        &specs,
        200,
        Seed::new(11),
        Convention::Strict,
        ThresholdRule::ExpectedDegreeOffset { coeff: 50.0 },
    );
    let scaled: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.above_summaries[0].variance.unwrap() / r.n as f64)
        .collect();
    for (i, &a) in scaled.iter().enumerate() {
        for (j, &b) in scaled.iter().enumerate() {
            assert!(
                a <= 4.0 * b + 1e-9,
                "Var/n ratio out of range: n={} gives {a}, n={} gives {b}",
                table.rows[i].n,
                table.rows[j].n
            );
        }
    }
    let elapsed = start.elapsed();
    check_budget("criterion 7", elapsed, Duration::from_secs(300));
    println!(
        "criterion 07 variance-scaling: PASS (Var(N^+(B1))/n = {scaled:?}; {elapsed:?})"
    );
}

#[test]
fn criterion_08_cli_determinism_across_threads() {
    let _g = serialized();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut by_format = Vec::new();
    for format in ["csv", "json"] {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let path = dir.path().join(format!("t{threads}.{format}"));
            let status = Command::new(env!("CARGO_BIN_EXE_groupies"))
                .args([
                    "experiment", "--parts", "80,120,100", "--p", "0.5", "--trials",
                    "64", "--seed", "31", "--format", format, "--threads", threads,
                    "--out", path.to_str().unwrap(),
                ])
                .status()
                .expect("spawn groupies");
            assert!(status.success());
            outputs.push(fs::read(&path).unwrap());
        }
        assert_eq!(
            outputs[0], outputs[1],
            "{format} output differs between --threads 1 and --threads 8"
        );
        by_format.push(outputs[0].len());
    }
    println!(
        "criterion 08 cli-determinism: PASS (csv {} bytes, json {} bytes identical; {:?})",
        by_format[0],
        by_format[1],
        start.elapsed()
    );
}

#[test]
fn criterion_09_window_diagnostic_report() {
    let _g = serialized();
    let start = Instant::now();
    let mut lines = Vec::new();
    for sizes in [vec![300, 300, 300], vec![180, 270, 450]] {
        let spec = uniform(&sizes, 0.5);
        let config = ExperimentConfig::new(spec.clone(), 100, Seed::new(17));
        let result = montecarlo::run(&config);
        let json = montecarlo::summary_json(&result);

        let literal = &json["coverage"]["literal"];
        assert!(!literal.is_null(), "literal window coverage missing");
        let literal_cov: Vec<f64> = literal["per_part"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let empirical = json["coverage"]["empirical"].as_array().unwrap();
        assert_eq!(empirical.len(), 3);
        let empirical_cov: Vec<f64> = empirical
            .iter()
            .map(|e| e["coverage"].as_f64().unwrap())
            .collect();

        let laws = degree_laws(&spec).unwrap();
        assert_ne!(
            laws.literal, laws.model,
            "degree laws should disagree when the second part is nonempty"
        );
        lines.push(format!(
            "parts {sizes:?}: literal {literal_cov:?} vs empirical {empirical_cov:?}, laws {} vs {}",
            laws.literal, laws.model
        ));
    }
    println!(
        "criterion 09 window-diagnostic: PASS ({}; {:?})",
        lines.join(" | "),
        start.elapsed()
    );
}

#[test]
fn criterion_10_large_graph_performance() {
    let _g = serialized();
    let start = Instant::now();
    let spec = uniform(&[3334, 3333, 3333], 0.1);
    let graph = sample(&spec, Seed::new(1));
    let profile = degree_profile(&graph);
    let report = groupie_report(&graph, &profile, Convention::Strict);
    let elapsed = start.elapsed();

    let expected_edges = spec.expected_edges();
    let sd = (expected_edges * 0.9).sqrt();
    let dev = (graph.edge_count() as f64 - expected_edges).abs();
    assert!(dev <= 5.0 * sd, "edge count {} vs expected {expected_edges}", graph.edge_count());
    assert!(report.total <= 10_000);
    check_budget("criterion 10", elapsed, Duration::from_secs(5));
    println!(
        "criterion 10 performance: PASS (n=10^4 sample+analyze in {elapsed:?}, {} edges, {} groupies)",
        graph.edge_count(),
        report.total
    );
}
