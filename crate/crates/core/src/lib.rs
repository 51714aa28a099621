//! Random multipartite graphs and groupie-vertex statistics.
//!
//! A vertex is a groupie when its degree exceeds the average degree of its
//! neighbors. This crate samples k-partite random graphs with independent
//! cross-part edges, counts groupies exactly, and checks the observed
//! counts against closed-form tail bounds, an exact small-instance
//! distribution, and Monte Carlo experiments.
//!
//! Everything downstream of a root seed is deterministic: per-pair
//! randomness is counter-indexed, so results are reproducible bit for bit
//! regardless of iteration order or thread count.

pub mod groupie;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod theory;

pub use groupie::{
    degree_profile, groupie_report, threshold_counts, Convention, DegreeProfile, GroupieReport,
    ThresholdCounts,
};
pub use model::{
    graph_from_str, graph_to_string, read_graph, sample, validate, write_graph, GraphReadError,
    MultipartiteGraph, PartitionSpec, SpecError, Violation,
};
pub use montecarlo::{
    conditional_s_probe, run, scaling_sweep, window_coverage, ExperimentConfig, ExperimentResult,
    ProbeTable, SweepTable, ThresholdRule,
};
pub use oracle::{
    exact_conditional_mean_s, exact_groupie_distribution, ConditionalMeanS, ExactDistribution,
    OracleError, MAX_CROSS_PAIRS,
};
pub use rng::Seed;
pub use theory::{
    binomial_tail_exact, concentration_window, expected_degree, expected_nplus,
    heuristic_prediction, hoeffding_tail_bound, ConcentrationWindow, DegreeLaws,
    ExpectedExceedance, LimitFraction, PartPrediction, TheoryError,
};
