//! Deterministic Monte Carlo campaigns over sampled graphs.
//!
//! Every trial draws its own root seed from a counter-indexed stream, so
//! trials are embarrassingly parallel and the full result is a pure
//! function of the configuration: worker count and scheduling cannot
//! change a single bit of output. Summaries are computed by sequential
//! folds over the trial records in trial order.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::groupie::{degree_profile, groupie_report, threshold_counts, Convention};
use crate::model::{sample, PartitionSpec};
use crate::oracle;
use crate::rng::{self, Seed};
use crate::theory::{
    self, concentration_window, expected_degree, heuristic_prediction, ConcentrationWindow,
};

/// How the degree thresholds for exceedance counts are derived from a
/// spec. `offset` terms scale with sqrt(ln n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// upper/lower = first part's expected degree ± coeff·sqrt(ln n).
    ExpectedDegreeOffset { coeff: f64 },
    /// upper/lower = n/4 ± coeff·sqrt(ln n), the literal threshold shape
    /// some derivations use regardless of part sizes.
    QuarterNOffset { coeff: f64 },
    /// Fixed thresholds independent of n.
    Absolute { upper: f64, lower: f64 },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::ExpectedDegreeOffset { coeff: 50.0 }
    }
}

impl ThresholdRule {
    /// Resolve to concrete (upper, lower) thresholds for a spec.
    pub fn resolve(&self, spec: &PartitionSpec) -> (f64, f64) {
        let n = spec.n() as f64;
        match *self {
            ThresholdRule::ExpectedDegreeOffset { coeff } => {
                let center = expected_degree(spec, 0);
                let off = coeff * n.ln().sqrt();
                (center + off, center - off)
            }
            ThresholdRule::QuarterNOffset { coeff } => {
                let center = n / 4.0;
                let off = coeff * n.ln().sqrt();
                (center + off, center - off)
            }
            ThresholdRule::Absolute { upper, lower } => (upper, lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: PartitionSpec,
    pub trials: u64,
    pub seed: Seed,
    pub convention: Convention,
    pub omega_value: f64,
    pub threshold_rule: ThresholdRule,
}

impl ExperimentConfig {
    pub fn new(spec: PartitionSpec, trials: u64, seed: Seed) -> Self {
        let omega_value = theory::default_omega(spec.n());
        ExperimentConfig {
            spec,
            trials,
            seed,
            convention: Convention::Strict,
            omega_value,
            threshold_rule: ThresholdRule::default(),
        }
    }
}

/// One trial's counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    /// Root seed the trial's graph was sampled from.
    pub trial_seed: u64,
    pub n: u64,
    pub per_part: Vec<u64>,
    pub above: Vec<u64>,
    pub below: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    /// Unbiased sample variance; absent for a single observation.
    pub variance: Option<f64>,
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Fixed-order summary of one column of per-trial values.
fn summarize(values: &[f64]) -> SummaryStats {
    assert!(!values.is_empty());
    let t = values.len() as f64;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in values {
        sum += x;
        min = min.min(x);
        max = max.max(x);
    }
    let mean = sum / t;
    let variance = if values.len() >= 2 {
        let ss: f64 = values.iter().map(|&x| (x - mean) * (x - mean)).sum();
        Some(ss / (t - 1.0))
    } else {
        None
    };
    SummaryStats {
        mean,
        variance,
        std: variance.map(f64::sqrt),
        min,
        max,
    }
}

fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] + v[mid]) as f64 / 2.0
    }
}

/// The literal window's coverage across all parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralWindowCoverage {
    pub window: ConcentrationWindow,
    pub per_part: Vec<f64>,
}

/// A per-part window centered on the empirical median.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalWindowCoverage {
    pub part: usize,
    pub window: ConcentrationWindow,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Resolved (upper, lower) degree thresholds.
    pub thresholds: (f64, f64),
    pub records: Vec<TrialRecord>,
    pub n_summary: SummaryStats,
    pub part_summaries: Vec<SummaryStats>,
    pub above_summaries: Vec<SummaryStats>,
    pub below_summaries: Vec<SummaryStats>,
    pub fraction_means: Vec<f64>,
    /// 95% normal-approximation intervals, clipped to [0,1]; absent for a
    /// single trial.
    pub fraction_ci: Vec<Option<(f64, f64)>>,
    /// Coverage of the literal window; only defined for tripartite specs.
    pub literal_coverage: Option<LiteralWindowCoverage>,
    pub empirical_coverage: Vec<EmpiricalWindowCoverage>,
}

/// Run all trials. Trial t samples a graph from a seed drawn at counter t
/// of the trial stream; records are collected in trial order and all
/// statistics are sequential folds over that order.
pub fn run(config: &ExperimentConfig) -> ExperimentResult {
    assert!(config.trials >= 1, "need at least one trial");
    let (upper, lower) = config.threshold_rule.resolve(&config.spec);
    let trial_stream = rng::stream_seed(config.seed.root, rng::TAG_TRIAL);
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = rng::value_at(trial_stream, t);
            let graph = sample(&config.spec, Seed::new(trial_seed));
            let profile = degree_profile(&graph);
            let report = groupie_report(&graph, &profile, config.convention);
            let counts = threshold_counts(&graph, &profile, upper, lower)
                .expect("resolved thresholds are ordered");
            TrialRecord {
                trial: t,
                trial_seed,
                n: report.total,
                per_part: report.per_part,
                above: counts.above,
                below: counts.below,
            }
        })
        .collect();

    let k = config.spec.k();
    let column = |f: &dyn Fn(&TrialRecord) -> f64| -> Vec<f64> {
        records.iter().map(|r| f(r)).collect()
    };
    let n_summary = summarize(&column(&|r| r.n as f64));
    let part_summaries: Vec<SummaryStats> = (0..k)
        .map(|i| summarize(&column(&move |r| r.per_part[i] as f64)))
        .collect();
    let above_summaries: Vec<SummaryStats> = (0..k)
        .map(|i| summarize(&column(&move |r| r.above[i] as f64)))
        .collect();
    let below_summaries: Vec<SummaryStats> = (0..k)
        .map(|i| summarize(&column(&move |r| r.below[i] as f64)))
        .collect();

    let trials_f = config.trials as f64;
    let mut fraction_means = Vec::with_capacity(k);
    let mut fraction_ci = Vec::with_capacity(k);
    for i in 0..k {
        let s = config.spec.part_size(i) as f64;
        let fracs: Vec<f64> = records.iter().map(|r| r.per_part[i] as f64 / s).collect();
        let stats = summarize(&fracs);
        fraction_means.push(stats.mean);
        fraction_ci.push(stats.std.map(|sd| {
            let half = 1.96 * sd / trials_f.sqrt();
            (
                (stats.mean - half).clamp(0.0, 1.0),
                (stats.mean + half).clamp(0.0, 1.0),
            )
        }));
    }

    let literal_coverage = concentration_window(&config.spec, config.omega_value)
        .ok()
        .map(|window| {
            let per_part = (0..k)
                .map(|i| coverage_of(&records, &window, i))
                .collect();
            LiteralWindowCoverage { window, per_part }
        });
    let empirical_coverage: Vec<EmpiricalWindowCoverage> = (0..k)
        .map(|i| {
            let counts: Vec<u64> = records.iter().map(|r| r.per_part[i]).collect();
            let window = ConcentrationWindow {
                center: median(&counts),
                half_width: config.omega_value * (config.spec.n() as f64).sqrt(),
            };
            let coverage = coverage_of(&records, &window, i);
            EmpiricalWindowCoverage {
                part: i,
                window,
                coverage,
            }
        })
        .collect();

    ExperimentResult {
        config: config.clone(),
        thresholds: (upper, lower),
        records,
        n_summary,
        part_summaries,
        above_summaries,
        below_summaries,
        fraction_means,
        fraction_ci,
        literal_coverage,
        empirical_coverage,
    }
}

fn coverage_of(records: &[TrialRecord], window: &ConcentrationWindow, part: usize) -> f64 {
    let hits = records
        .iter()
        .filter(|r| window.contains(r.per_part[part] as f64))
        .count();
    hits as f64 / records.len() as f64
}

/// Fraction of trials whose part-`i` groupie count falls inside `window`.
pub fn window_coverage(
    result: &ExperimentResult,
    window: &ConcentrationWindow,
    part: usize,
) -> f64 {
    coverage_of(&result.records, window, part)
}

/// Per-trial CSV: `trial,N,N_B1,...,N_Bk`.
pub fn trials_csv(result: &ExperimentResult) -> String {
    let k = result.config.spec.k();
    let mut out = String::from("trial,N");
    for i in 0..k {
        out.push_str(&format!(",N_B{}", i + 1));
    }
    out.push('\n');
    for r in &result.records {
        out.push_str(&format!("{},{}", r.trial, r.n));
        for i in 0..k {
            out.push_str(&format!(",{}", r.per_part[i]));
        }
        out.push('\n');
    }
    out
}

/// JSON echo of a spec: part sizes plus either the uniform probability or
/// the full matrix.
pub fn spec_json(spec: &PartitionSpec) -> Value {
    let parts: Vec<u64> = spec.part_sizes().iter().map(|&s| s as u64).collect();
    match spec.uniform_p() {
        Some(p) => json!({ "parts": parts, "p": p }),
        None => {
            let matrix: Vec<Vec<f64>> = (0..spec.k())
                .map(|i| (0..spec.k()).map(|j| spec.prob(i, j)).collect())
                .collect();
            json!({ "parts": parts, "matrix": matrix })
        }
    }
}

fn rule_json(rule: &ThresholdRule) -> Value {
    match *rule {
        ThresholdRule::ExpectedDegreeOffset { coeff } => {
            json!({ "rule": "expected-degree-offset", "coeff": coeff })
        }
        ThresholdRule::QuarterNOffset { coeff } => {
            json!({ "rule": "quarter-n-offset", "coeff": coeff })
        }
        ThresholdRule::Absolute { upper, lower } => {
            json!({ "rule": "absolute", "upper": upper, "lower": lower })
        }
    }
}

fn stats_json(s: &SummaryStats) -> Value {
    json!({
        "mean": s.mean,
        "variance": s.variance,
        "std": s.std,
        "min": s.min,
        "max": s.max,
    })
}

/// Summary JSON: resolved configuration, means/variances of every tracked
/// count, window coverage for the literal and empirically centered
/// windows, fraction confidence intervals, and the heuristic predictions.
pub fn summary_json(result: &ExperimentResult) -> Value {
    let cfg = &result.config;
    let k = cfg.spec.k();
    let window_json = |w: &ConcentrationWindow| {
        json!({
            "center": w.center,
            "half_width": w.half_width,
            "lower": w.lower(),
            "upper": w.upper(),
        })
    };
    let heuristic: Vec<Value> = heuristic_prediction(&cfg.spec)
        .iter()
        .map(|p| {
            json!({
                "part": p.part,
                "mu": p.mu,
                "nu": p.nu,
                "prediction": p.prediction.to_string(),
            })
        })
        .collect();
    let literal = result.literal_coverage.as_ref().map(|c| {
        let mut v = window_json(&c.window);
        v["per_part"] = json!(c.per_part);
        v
    });
    let empirical: Vec<Value> = result
        .empirical_coverage
        .iter()
        .map(|c| {
            let mut v = window_json(&c.window);
            v["part"] = json!(c.part);
            v["coverage"] = json!(c.coverage);
            v
        })
        .collect();
    json!({
        "config": {
            "spec": spec_json(&cfg.spec),
            "trials": cfg.trials,
            "seed": cfg.seed.root,
            "convention": cfg.convention.to_string(),
            "omega": cfg.omega_value,
            "threshold_rule": rule_json(&cfg.threshold_rule),
        },
        "omega": cfg.omega_value,
        "thresholds": { "upper": result.thresholds.0, "lower": result.thresholds.1 },
        "means": {
            "N": result.n_summary.mean,
            "per_part": result.part_summaries.iter().map(|s| s.mean).collect::<Vec<_>>(),
            "above": result.above_summaries.iter().map(|s| s.mean).collect::<Vec<_>>(),
            "below": result.below_summaries.iter().map(|s| s.mean).collect::<Vec<_>>(),
        },
        "variances": {
            "N": result.n_summary.variance,
            "per_part": result.part_summaries.iter().map(|s| s.variance).collect::<Vec<_>>(),
            "above": result.above_summaries.iter().map(|s| s.variance).collect::<Vec<_>>(),
            "below": result.below_summaries.iter().map(|s| s.variance).collect::<Vec<_>>(),
        },
        "summary": {
            "N": stats_json(&result.n_summary),
            "per_part": result.part_summaries.iter().map(stats_json).collect::<Vec<_>>(),
        },
        "fractions": {
            "mean": result.fraction_means,
            "ci95": result.fraction_ci.iter().map(|ci| {
                ci.map(|(lo, hi)| json!([lo, hi])).unwrap_or(Value::Null)
            }).collect::<Vec<_>>(),
        },
        "coverage": {
            "omega": cfg.omega_value,
            "literal": literal,
            "empirical": empirical,
        },
        "heuristic": heuristic,
        "parts": (0..k).collect::<Vec<usize>>(),
    })
}

/// One spec's row in a scaling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub trials: u64,
    pub thresholds: (f64, f64),
    pub part_summaries: Vec<SummaryStats>,
    pub fraction_means: Vec<f64>,
    /// Exceedance-count summaries per part at the resolved thresholds.
    pub above_summaries: Vec<SummaryStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of Var(N^+(B_1)) against n; absent when any
    /// variance is undefined.
    pub var_slope: Option<f64>,
}

/// Run one experiment per spec (each with its own derived seed and
/// omega = ln n) and fit the exceedance-variance growth.
pub fn scaling_sweep(
    specs: &[PartitionSpec],
    trials: u64,
    seed: Seed,
    convention: Convention,
    threshold_rule: ThresholdRule,
) -> SweepTable {
    assert!(specs.len() >= 2, "a sweep needs at least two sizes");
    let sweep_stream = rng::stream_seed(seed.root, rng::TAG_SWEEP);
    let rows: Vec<SweepRow> = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let config = ExperimentConfig {
                spec: spec.clone(),
                trials,
                seed: Seed::new(rng::value_at(sweep_stream, i as u64)),
                convention,
                omega_value: theory::default_omega(spec.n()),
                threshold_rule,
            };
            let result = run(&config);
            SweepRow {
                n: spec.n() as u64,
                trials,
                thresholds: result.thresholds,
                part_summaries: result.part_summaries,
                fraction_means: result.fraction_means,
                above_summaries: result.above_summaries,
            }
        })
        .collect();

    let points: Option<Vec<(f64, f64)>> = rows
        .iter()
        .map(|r| r.above_summaries[0].variance.map(|v| (r.n as f64, v)))
        .collect();
    let var_slope = points.map(|pts| {
        let t = pts.len() as f64;
        let mean_x: f64 = pts.iter().map(|p| p.0).sum::<f64>() / t;
        let mean_y: f64 = pts.iter().map(|p| p.1).sum::<f64>() / t;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
        sxy / sxx
    });
    SweepTable { rows, var_slope }
}

/// Long-format sweep CSV: one row per (size, part).
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out =
        String::from("n,part,mean,variance,std,fraction,above_mean,above_variance\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for row in &table.rows {
        for (i, stats) in row.part_summaries.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.6},{},{},{:.6},{:.6},{}\n",
                row.n,
                i,
                stats.mean,
                opt(stats.variance),
                opt(stats.std),
                row.fraction_means[i],
                row.above_summaries[i].mean,
                opt(row.above_summaries[i].variance),
            ));
        }
    }
    out
}

pub fn sweep_json(table: &SweepTable) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "trials": r.trials,
                "thresholds": { "upper": r.thresholds.0, "lower": r.thresholds.1 },
                "per_part": r.part_summaries.iter().map(stats_json).collect::<Vec<_>>(),
                "fractions": r.fraction_means,
                "above": r.above_summaries.iter().map(stats_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "rows": rows, "var_slope": table.var_slope })
}

/// Minimum bin size before a probe row is considered trustworthy.
pub const PROBE_MIN_BIN: u64 = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub d: u64,
    pub count: u64,
    pub mean_s: f64,
    /// Literal formula d((a+b)n + 1)/2 with (a+b) the combined fraction
    /// of the first two parts.
    pub formula_mean: f64,
    /// Exact conditional mean when the spec is small enough to enumerate.
    pub exact_mean: Option<f64>,
    pub low_confidence: bool,
}

impl ProbeRow {
    /// (empirical - formula) / formula, when the formula value is nonzero.
    pub fn rel_dev_formula(&self) -> Option<f64> {
        (self.formula_mean != 0.0).then(|| (self.mean_s - self.formula_mean) / self.formula_mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub part: usize,
    pub probe_vertex: usize,
    pub trials: u64,
    pub rows: Vec<ProbeRow>,
}

/// Sample (d_x, S_x) for the first vertex of a part and bin by degree.
/// Each bin's empirical mean is reported next to the literal formula and,
/// when enumeration is feasible, the exact conditional mean.
pub fn conditional_s_probe(
    spec: &PartitionSpec,
    part: usize,
    trials: u64,
    seed: Seed,
) -> ProbeTable {
    assert!(trials >= 1, "need at least one trial");
    assert!(part < spec.k(), "part index out of range");
    let probe = spec.part_offset(part);
    let trial_stream = rng::stream_seed(seed.root, rng::TAG_TRIAL);
    let samples: Vec<(u32, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let graph = sample(spec, Seed::new(rng::value_at(trial_stream, t)));
            let profile = degree_profile(&graph);
            (profile.d[probe], profile.s[probe])
        })
        .collect();

    let max_d = samples.iter().map(|&(d, _)| d).max().unwrap() as usize;
    let mut count = vec![0u64; max_d + 1];
    let mut sum_s = vec![0u64; max_d + 1];
    for &(d, s) in &samples {
        count[d as usize] += 1;
        sum_s[d as usize] += s;
    }

    let n = spec.n() as u64;
    let a_plus_b = (spec.part_size(0) + spec.part_size(1)) as f64 / n as f64;
    let enumerable = spec.cross_pair_count() <= oracle::MAX_CROSS_PAIRS as u64;
    let rows: Vec<ProbeRow> = (0..=max_d as u64)
        .filter(|&d| count[d as usize] > 0)
        .map(|d| {
            let c = count[d as usize];
            let mean_s = sum_s[d as usize] as f64 / c as f64;
            let exact_mean = if enumerable {
                oracle::exact_conditional_mean_s(spec, part, d)
                    .ok()
                    .map(|r| r.mean)
            } else {
                None
            };
            ProbeRow {
                d,
                count: c,
                mean_s,
                formula_mean: theory::approx_conditional_mean_s(d, a_plus_b, n),
                exact_mean,
                low_confidence: c < PROBE_MIN_BIN,
            }
        })
        .collect();
    ProbeTable {
        part,
        probe_vertex: probe,
        trials,
        rows,
    }
}

/// Probe CSV: `d,count,mean_S,formula_mean,exact_mean,rel_dev_formula,low_confidence`.
pub fn probe_csv(table: &ProbeTable) -> String {
    let mut out = String::from("d,count,mean_S,formula_mean,exact_mean,rel_dev_formula,low_confidence\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{},{},{}\n",
            r.d,
            r.count,
            r.mean_s,
            r.formula_mean,
            opt(r.exact_mean),
            opt(r.rel_dev_formula()),
            r.low_confidence,
        ));
    }
    out
}

pub fn probe_json(table: &ProbeTable) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "d": r.d,
                "count": r.count,
                "mean_S": r.mean_s,
                "formula_mean": r.formula_mean,
                "exact_mean": r.exact_mean,
                "rel_dev_formula": r.rel_dev_formula(),
                "low_confidence": r.low_confidence,
            })
        })
        .collect();
    json!({
        "part": table.part,
        "probe_vertex": table.probe_vertex,
        "trials": table.trials,
        "rows": rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(sizes: &[usize], p: f64) -> PartitionSpec {
        PartitionSpec::uniform(sizes.to_vec(), p).unwrap()
    }

    #[test]
    fn identical_configs_give_identical_results() {
        let config = ExperimentConfig::new(uniform(&[4, 5, 6], 0.4), 50, Seed::new(3));
        let a = run(&config);
        let b = run(&config);
        assert_eq!(a, b);
        assert_eq!(trials_csv(&a), trials_csv(&b));
        assert_eq!(
            summary_json(&a).to_string(),
            summary_json(&b).to_string()
        );
    }

    #[test]
    fn results_independent_of_thread_count() {
        let config = ExperimentConfig::new(uniform(&[5, 7, 3], 0.5), 64, Seed::new(11));
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&config));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| run(&config));
        assert_eq!(single, many);
        assert_eq!(trials_csv(&single), trials_csv(&many));
        assert_eq!(
            summary_json(&single).to_string(),
            summary_json(&many).to_string()
        );
    }

    #[test]
    fn mean_matches_oracle_star_spec() {
        // E[N] = 1/4, Var = 3/16 for the [1,2] spec at p = 1/2.
        let config = ExperimentConfig::new(uniform(&[1, 2], 0.5), 20_000, Seed::new(0));
        let result = run(&config);
        let se = (3.0f64 / 16.0 / 20_000.0).sqrt();
        assert!(
            (result.n_summary.mean - 0.25).abs() <= 4.0 * se,
            "mean = {}",
            result.n_summary.mean
        );
    }

    #[test]
    fn empirical_distribution_matches_oracle_support() {
        let spec = uniform(&[2, 2], 0.5);
        let dist =
            oracle::exact_groupie_distribution(&spec, Convention::Strict).unwrap();
        let trials = 100_000u64;
        let config = ExperimentConfig::new(spec, trials, Seed::new(5));
        let result = run(&config);
        let mut hist = vec![0u64; dist.n_dist.len()];
        for r in &result.records {
            hist[r.n as usize] += 1;
        }
        for (v, &p) in dist.n_dist.iter().enumerate() {
            let emp = hist[v] as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (emp - p).abs() <= 4.0 * se.max(1e-12),
                "value {v}: emp {emp} vs exact {p}"
            );
        }
    }

    #[test]
    fn coverage_trivial_windows() {
        let config = ExperimentConfig::new(uniform(&[2, 3, 4], 0.5), 40, Seed::new(9));
        let result = run(&config);
        for i in 0..3 {
            let full = ConcentrationWindow {
                center: result.config.spec.part_size(i) as f64 / 2.0,
                half_width: result.config.spec.part_size(i) as f64,
            };
            assert_eq!(window_coverage(&result, &full, i), 1.0);
        }
        // Degenerate window off the attained support.
        let off = ConcentrationWindow {
            center: 1000.5,
            half_width: 0.0,
        };
        assert_eq!(window_coverage(&result, &off, 0), 0.0);
    }

    #[test]
    fn run_populates_windows_and_fractions() {
        let config = ExperimentConfig::new(uniform(&[3, 3, 3], 0.5), 25, Seed::new(2));
        let result = run(&config);
        let literal = result.literal_coverage.as_ref().unwrap();
        assert_eq!(literal.window.center, 3.0);
        assert_eq!(literal.per_part.len(), 3);
        assert_eq!(result.empirical_coverage.len(), 3);
        for c in literal.per_part.iter().chain(
            result
                .empirical_coverage
                .iter()
                .map(|e| &e.coverage),
        ) {
            assert!((0.0..=1.0).contains(c));
        }
        for (f, ci) in result.fraction_means.iter().zip(&result.fraction_ci) {
            assert!((0.0..=1.0).contains(f));
            let (lo, hi) = ci.unwrap();
            assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
        }
        // Bipartite spec has no literal window.
        let config = ExperimentConfig::new(uniform(&[3, 3], 0.5), 10, Seed::new(2));
        assert!(run(&config).literal_coverage.is_none());
    }

    #[test]
    fn single_trial_has_no_variance() {
        let config = ExperimentConfig::new(uniform(&[2, 2], 0.5), 1, Seed::new(4));
        let result = run(&config);
        assert_eq!(result.n_summary.variance, None);
        assert_eq!(result.fraction_ci[0], None);
        let json = summary_json(&result);
        assert!(json["variances"]["N"].is_null());
    }

    #[test]
    fn trials_csv_shape() {
        let config = ExperimentConfig::new(uniform(&[1, 2], 1.0), 3, Seed::new(7));
        let result = run(&config);
        let csv = trials_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "trial,N,N_B1,N_B2");
        assert_eq!(lines.len(), 4);
        // p = 1 always yields the star: one groupie in part 0.
        assert_eq!(lines[1], "0,1,1,0");
        assert_eq!(lines[2], "1,1,1,0");
    }

    #[test]
    fn summary_json_has_contract_keys() {
        let config = ExperimentConfig::new(uniform(&[3, 3, 3], 0.5), 12, Seed::new(1));
        let result = run(&config);
        let json = summary_json(&result);
        for key in [
            "config",
            "omega",
            "means",
            "variances",
            "coverage",
            "heuristic",
            "fractions",
            "thresholds",
        ] {
            assert!(!json[key].is_null(), "missing key {key}");
        }
        assert_eq!(json["config"]["spec"]["parts"], json!([3, 3, 3]));
        assert_eq!(json["config"]["spec"]["p"], json!(0.5));
        assert!(!json["coverage"]["literal"].is_null());
        assert_eq!(json["coverage"]["empirical"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn threshold_rules_resolve() {
        let spec = uniform(&[300, 300, 300], 0.5);
        let (u, l) = ThresholdRule::default().resolve(&spec);
        let off = 50.0 * (900f64.ln()).sqrt();
        assert!((u - (300.0 + off)).abs() < 1e-9);
        assert!((l - (300.0 - off)).abs() < 1e-9);
        let (u, _) = ThresholdRule::QuarterNOffset { coeff: 50.0 }.resolve(&spec);
        assert!((u - (225.0 + off)).abs() < 1e-9);
        let (u, l) = ThresholdRule::Absolute {
            upper: 10.0,
            lower: 2.0,
        }
        .resolve(&spec);
        assert_eq!((u, l), (10.0, 2.0));
    }

    #[test]
    fn sweep_smallest_part_fraction_grows() {
        let specs = vec![
            uniform(&[12, 18, 30], 0.5),
            uniform(&[24, 36, 60], 0.5),
        ];
        let table = scaling_sweep(
            &specs,
            60,
            Seed::new(0),
            Convention::Strict,
            ThresholdRule::default(),
        );
        assert_eq!(table.rows.len(), 2);
        // Smallest part (index 0) trends toward all-groupies as n grows.
        assert!(
            table.rows[1].fraction_means[0] > table.rows[0].fraction_means[0],
            "{} vs {}",
            table.rows[1].fraction_means[0],
            table.rows[0].fraction_means[0]
        );
        assert!(table.var_slope.is_some());
        let csv = sweep_csv(&table);
        assert!(csv.starts_with("n,part,mean,variance,std,fraction,above_mean,above_variance\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn sweep_single_trial_reports_absent_variance() {
        let specs = vec![uniform(&[2, 2], 0.5), uniform(&[4, 4], 0.5)];
        let table = scaling_sweep(
            &specs,
            1,
            Seed::new(0),
            Convention::Strict,
            ThresholdRule::default(),
        );
        assert!(table.var_slope.is_none());
        assert!(table.rows[0].part_summaries[0].variance.is_none());
        let csv = sweep_csv(&table);
        // Empty variance cells, not zeros.
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
    }

    #[test]
    fn probe_tiny_spec_matches_exact_and_formula() {
        let table = conditional_s_probe(&uniform(&[1, 1, 1], 0.5), 0, 4000, Seed::new(8));
        assert_eq!(table.probe_vertex, 0);
        let d2 = table.rows.iter().find(|r| r.d == 2).unwrap();
        assert_eq!(d2.exact_mean, Some(3.0));
        assert_eq!(d2.formula_mean, 3.0);
        assert!(!d2.low_confidence);
        // S | d=2 is 2 or 4 with equal probability: variance 1.
        let se = 1.0 / (d2.count as f64).sqrt();
        assert!((d2.mean_s - 3.0).abs() <= 4.0 * se, "mean {}", d2.mean_s);
        let d0 = table.rows.iter().find(|r| r.d == 0).unwrap();
        assert_eq!(d0.mean_s, 0.0);
        assert_eq!(d0.rel_dev_formula(), None);
    }

    #[test]
    fn probe_flags_small_bins() {
        let table = conditional_s_probe(&uniform(&[2, 3], 0.5), 0, 10, Seed::new(3));
        assert!(table.rows.iter().all(|r| r.low_confidence));
        let csv = probe_csv(&table);
        assert!(csv.starts_with("d,count,mean_S,formula_mean,exact_mean,rel_dev_formula,low_confidence\n"));
        assert!(csv.contains("true"));
    }

    #[test]
    fn probe_is_deterministic() {
        let spec = uniform(&[2, 3, 2], 0.4);
        let a = conditional_s_probe(&spec, 1, 200, Seed::new(12));
        let b = conditional_s_probe(&spec, 1, 200, Seed::new(12));
        assert_eq!(a, b);
        assert_eq!(a.probe_vertex, 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn coverage_monotone_in_width(
            seed in any::<u64>(),
            half in 0.0f64..3.0,
            extra in 0.0f64..3.0,
            center in 0.0f64..5.0,
        ) {
            let config = ExperimentConfig::new(uniform(&[2, 3], 0.5), 30, Seed::new(seed));
            let result = run(&config);
            let small = ConcentrationWindow { center, half_width: half };
            let large = ConcentrationWindow { center, half_width: half + extra };
            for part in 0..2 {
                let a = window_coverage(&result, &small, part);
                let b = window_coverage(&result, &large, part);
                prop_assert!(b >= a);
            }
        }
    }
}
