//! Degree profiles and the groupie predicate.
//!
//! A vertex x is a groupie when d_x exceeds the average degree of its
//! neighbors, i.e. d_x > S_x / d_x where S_x sums the neighbor degrees.
//! All comparisons are exact integer comparisons of d_x^2 against S_x;
//! whether ties count is a [`Convention`] flag. Isolated vertices are
//! never groupies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MultipartiteGraph;

/// Tie handling at d_x^2 = S_x. `Strict` requires d_x^2 > S_x and is the
/// default; `NonStrict` accepts equality (and guarantees every graph with
/// an edge has a groupie).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Strict,
    NonStrict,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Strict => write!(f, "strict"),
            Convention::NonStrict => write!(f, "nonstrict"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown convention `{0}`; expected `strict` or `nonstrict`")]
pub struct ConventionParseError(String);

impl FromStr for Convention {
    type Err = ConventionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Convention::Strict),
            "nonstrict" | "non-strict" => Ok(Convention::NonStrict),
            other => Err(ConventionParseError(other.to_string())),
        }
    }
}

/// Per-vertex degree d and neighbor-degree sum S.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub d: Vec<u32>,
    pub s: Vec<u64>,
}

/// Compute d and S for every vertex. Runs in O(n + Σ d_x) and asserts the
/// double-counting identity Σ_x S_x = Σ_y d_y^2.
pub fn degree_profile(graph: &MultipartiteGraph) -> DegreeProfile {
    let n = graph.n();
    let d = graph.degrees().to_vec();
    let mut s = vec![0u64; n];
    for x in 0..n {
        s[x] = graph
            .neighbors(x)
            .iter()
            .map(|&y| d[y as usize] as u64)
            .sum();
    }
    let sum_s: u64 = s.iter().sum();
    let sum_d_sq: u64 = d.iter().map(|&dx| (dx as u64) * (dx as u64)).sum();
    assert_eq!(
        sum_s, sum_d_sq,
        "neighbor-degree sums inconsistent with degrees"
    );
    DegreeProfile { d, s }
}

/// Exact integer groupie predicate: d_x^2 > S_x (strict) or >= (non-strict),
/// with isolated vertices excluded.
pub fn is_groupie(d: u32, s: u64, convention: Convention) -> bool {
    if d == 0 {
        return false;
    }
    let d_sq = (d as u64) * (d as u64);
    match convention {
        Convention::Strict => d_sq > s,
        Convention::NonStrict => d_sq >= s,
    }
}

/// Per-part and total groupie counts for one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupieReport {
    pub convention: Convention,
    pub part_sizes: Vec<usize>,
    /// Groupie count per part.
    pub per_part: Vec<u64>,
    pub total: u64,
}

impl GroupieReport {
    pub fn fraction(&self, i: usize) -> f64 {
        self.per_part[i] as f64 / self.part_sizes[i] as f64
    }

    pub fn total_fraction(&self) -> f64 {
        let n: usize = self.part_sizes.iter().sum();
        self.total as f64 / n as f64
    }
}

pub fn groupie_report(
    graph: &MultipartiteGraph,
    profile: &DegreeProfile,
    convention: Convention,
) -> GroupieReport {
    debug_assert_eq!(profile.d.len(), graph.n());
    let mut per_part = vec![0u64; graph.k()];
    for x in 0..graph.n() {
        if is_groupie(profile.d[x], profile.s[x], convention) {
            per_part[graph.part_of(x)] += 1;
        }
    }
    let total = per_part.iter().sum();
    GroupieReport {
        convention,
        part_sizes: graph.part_sizes().to_vec(),
        per_part,
        total,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("lower threshold {lower} exceeds upper threshold {upper}")]
    LowerAboveUpper { lower: f64, upper: f64 },
    #[error("thresholds must be finite numbers")]
    NotFinite,
}

/// Per-part counts of vertices with degree strictly above `upper` and
/// strictly below `lower`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCounts {
    pub upper: f64,
    pub lower: f64,
    pub above: Vec<u64>,
    pub below: Vec<u64>,
}

/// Count degrees above/below real thresholds. An integer degree d is above
/// `upper` exactly when d >= floor(upper) + 1, and below `lower` exactly
/// when d <= ceil(lower) - 1; both reduce the real comparison to integers.
pub fn threshold_counts(
    graph: &MultipartiteGraph,
    profile: &DegreeProfile,
    upper: f64,
    lower: f64,
) -> Result<ThresholdCounts, ThresholdError> {
    if !upper.is_finite() || !lower.is_finite() {
        return Err(ThresholdError::NotFinite);
    }
    if lower > upper {
        return Err(ThresholdError::LowerAboveUpper { lower, upper });
    }
    let above_min = upper.floor() as i64 + 1;
    let below_max = lower.ceil() as i64 - 1;
    let mut above = vec![0u64; graph.k()];
    let mut below = vec![0u64; graph.k()];
    for x in 0..graph.n() {
        let d = profile.d[x] as i64;
        let part = graph.part_of(x);
        if d >= above_min {
            above[part] += 1;
        }
        if d <= below_max {
            below[part] += 1;
        }
    }
    Ok(ThresholdCounts {
        upper,
        lower,
        above,
        below,
    })
}

/// Render the report as CSV: `part,size,groupies,fraction,above,below`
/// with a trailing `total` row. The threshold columns are left empty when
/// no threshold counts are supplied. Fractions use fixed 6 decimals.
pub fn report_csv(report: &GroupieReport, thresholds: Option<&ThresholdCounts>) -> String {
    let mut out = String::from("part,size,groupies,fraction,above,below\n");
    let k = report.part_sizes.len();
    let cell = |v: Option<u64>| v.map_or(String::new(), |c| c.to_string());
    for i in 0..k {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{}\n",
            i,
            report.part_sizes[i],
            report.per_part[i],
            report.fraction(i),
            cell(thresholds.map(|t| t.above[i])),
            cell(thresholds.map(|t| t.below[i])),
        ));
    }
    let n: usize = report.part_sizes.iter().sum();
    out.push_str(&format!(
        "total,{},{},{:.6},{},{}\n",
        n,
        report.total,
        report.total_fraction(),
        cell(thresholds.map(|t| t.above.iter().sum())),
        cell(thresholds.map(|t| t.below.iter().sum())),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample, MultipartiteGraph, PartitionSpec};
    use crate::rng::Seed;
    use proptest::prelude::*;

    fn star() -> MultipartiteGraph {
        MultipartiteGraph::from_edges(vec![1, 2], &[(0, 1), (0, 2)])
    }

    fn triangle() -> MultipartiteGraph {
        MultipartiteGraph::from_edges(vec![1, 1, 1], &[(0, 1), (0, 2), (1, 2)])
    }

    #[test]
    fn profile_star() {
        let p = degree_profile(&star());
        assert_eq!(p.d, vec![2, 1, 1]);
        assert_eq!(p.s, vec![2, 2, 2]);
    }

    #[test]
    fn profile_triangle() {
        let p = degree_profile(&triangle());
        assert_eq!(p.d, vec![2, 2, 2]);
        assert_eq!(p.s, vec![4, 4, 4]);
    }

    #[test]
    fn profile_empty() {
        let g = MultipartiteGraph::from_edges(vec![2, 3], &[]);
        let p = degree_profile(&g);
        assert_eq!(p.d, vec![0; 5]);
        assert_eq!(p.s, vec![0; 5]);
    }

    #[test]
    fn groupie_predicate_cases() {
        assert!(is_groupie(2, 2, Convention::Strict));
        assert!(!is_groupie(2, 4, Convention::Strict));
        assert!(is_groupie(2, 4, Convention::NonStrict));
        assert!(!is_groupie(0, 0, Convention::Strict));
        assert!(!is_groupie(0, 0, Convention::NonStrict));
    }

    #[test]
    fn star_report() {
        let g = star();
        let p = degree_profile(&g);
        let r = groupie_report(&g, &p, Convention::Strict);
        assert_eq!(r.per_part, vec![1, 0]);
        assert_eq!(r.total, 1);
        assert_eq!(r.fraction(0), 1.0);
        assert_eq!(r.fraction(1), 0.0);
    }

    #[test]
    fn complete_balanced_tripartite_has_no_strict_groupies() {
        let spec = PartitionSpec::uniform(vec![4, 4, 4], 1.0).unwrap();
        let g = sample(&spec, Seed::new(0));
        let p = degree_profile(&g);
        let strict = groupie_report(&g, &p, Convention::Strict);
        assert_eq!(strict.total, 0);
        // Every vertex ties: d = 8, S = 64.
        let loose = groupie_report(&g, &p, Convention::NonStrict);
        assert_eq!(loose.total, 12);
    }

    #[test]
    fn convention_parsing() {
        assert_eq!("strict".parse::<Convention>().unwrap(), Convention::Strict);
        assert_eq!(
            "nonstrict".parse::<Convention>().unwrap(),
            Convention::NonStrict
        );
        assert_eq!(
            "non-strict".parse::<Convention>().unwrap(),
            Convention::NonStrict
        );
        assert!("loose".parse::<Convention>().is_err());
        assert_eq!(Convention::Strict.to_string(), "strict");
        assert_eq!(Convention::NonStrict.to_string(), "nonstrict");
    }

    #[test]
    fn thresholds_on_empty_graph() {
        let g = MultipartiteGraph::from_edges(vec![3, 4], &[]);
        let p = degree_profile(&g);
        let t = threshold_counts(&g, &p, 0.5, 0.5).unwrap();
        assert_eq!(t.above, vec![0, 0]);
        assert_eq!(t.below, vec![3, 4]);
    }

    #[test]
    fn thresholds_on_star() {
        let g = star();
        let p = degree_profile(&g);
        let t = threshold_counts(&g, &p, 1.5, 0.5).unwrap();
        assert_eq!(t.above, vec![1, 0]);
        assert_eq!(t.below, vec![0, 0]);
    }

    #[test]
    fn threshold_comparison_is_strict_at_integers() {
        let g = star();
        let p = degree_profile(&g);
        // Center has d = 2: not above upper = 2.0, above upper = 1.5.
        let t = threshold_counts(&g, &p, 2.0, 0.0).unwrap();
        assert_eq!(t.above, vec![0, 0]);
        let t = threshold_counts(&g, &p, 1.5, 1.0).unwrap();
        assert_eq!(t.above, vec![1, 0]);
        // d = 1 is not below lower = 1.0 but is below 1.5.
        let t = threshold_counts(&g, &p, 5.0, 1.0).unwrap();
        assert_eq!(t.below, vec![0, 0]);
        let t = threshold_counts(&g, &p, 5.0, 1.5).unwrap();
        assert_eq!(t.below, vec![0, 2]);
    }

    #[test]
    fn thresholds_reject_inverted_bounds() {
        let g = star();
        let p = degree_profile(&g);
        assert_eq!(
            threshold_counts(&g, &p, 1.0, 2.0).unwrap_err(),
            ThresholdError::LowerAboveUpper {
                lower: 2.0,
                upper: 1.0
            }
        );
        assert!(threshold_counts(&g, &p, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn csv_rendering() {
        let g = star();
        let p = degree_profile(&g);
        let r = groupie_report(&g, &p, Convention::Strict);
        assert_eq!(
            report_csv(&r, None),
            "part,size,groupies,fraction,above,below\n\
             0,1,1,1.000000,,\n\
             1,2,0,0.000000,,\n\
             total,3,1,0.333333,,\n"
        );
        let t = threshold_counts(&g, &p, 1.5, 0.5).unwrap();
        assert_eq!(
            report_csv(&r, Some(&t)),
            "part,size,groupies,fraction,above,below\n\
             0,1,1,1.000000,1,0\n\
             1,2,0,0.000000,0,0\n\
             total,3,1,0.333333,1,0\n"
        );
    }

    #[test]
    fn handshake_identities_on_sampled_graphs() {
        let spec = PartitionSpec::uniform(vec![7, 9, 5], 0.4).unwrap();
        for seed in 0..50 {
            let g = sample(&spec, Seed::new(seed));
            let p = degree_profile(&g);
            let sum_d: u64 = p.d.iter().map(|&d| d as u64).sum();
            assert_eq!(sum_d, 2 * g.edge_count());
            let sum_s: u64 = p.s.iter().sum();
            let sum_d_sq: u64 = p.d.iter().map(|&d| (d as u64) * (d as u64)).sum();
            assert_eq!(sum_s, sum_d_sq);
        }
    }

    proptest! {
        // Relabeling within parts never changes per-part groupie counts.
        #[test]
        fn relabeling_invariance(
            edge_bits in proptest::collection::vec(any::<bool>(), 21),
            perm_seed in any::<u64>(),
            strict in any::<bool>(),
        ) {
            let part_sizes = vec![3usize, 3, 2];
            // Cross pairs of parts [3,3,2]: 3*3 + 3*2 + 3*2 = 21.
            let mut cross: Vec<(u32, u32)> = Vec::new();
            let offsets = [0u32, 3, 6, 8];
            for i in 0..3 {
                for j in (i + 1)..3 {
                    for u in offsets[i]..offsets[i + 1] {
                        for v in offsets[j]..offsets[j + 1] {
                            cross.push((u, v));
                        }
                    }
                }
            }
            let edges: Vec<(u32, u32)> = cross
                .iter()
                .zip(&edge_bits)
                .filter(|(_, &keep)| keep)
                .map(|(&e, _)| e)
                .collect();

            // Derive a within-part permutation from perm_seed.
            let mut perm: Vec<u32> = (0..8).collect();
            let mut state = perm_seed;
            for part in 0..3 {
                let (lo, hi) = (offsets[part] as usize, offsets[part + 1] as usize);
                for i in (lo + 1..hi).rev() {
                    state = crate::rng::mix(state.wrapping_add(1));
                    let j = lo + (state % (i - lo + 1) as u64) as usize;
                    perm.swap(i, j);
                }
            }
            let mapped: Vec<(u32, u32)> = edges
                .iter()
                .map(|&(u, v)| {
                    let (a, b) = (perm[u as usize], perm[v as usize]);
                    if a < b { (a, b) } else { (b, a) }
                })
                .collect();

            let conv = if strict { Convention::Strict } else { Convention::NonStrict };
            let g1 = MultipartiteGraph::from_edges(part_sizes.clone(), &edges);
            let g2 = MultipartiteGraph::from_edges(part_sizes, &mapped);
            let r1 = groupie_report(&g1, &degree_profile(&g1), conv);
            let r2 = groupie_report(&g2, &degree_profile(&g2), conv);
            prop_assert_eq!(r1.per_part, r2.per_part);
        }

        // Strict groupies are a subset of non-strict groupies, and any
        // graph with at least one edge has a non-strict groupie.
        #[test]
        fn strict_subset_and_existence(seed in any::<u64>(), p in 0.05f64..0.95) {
            let spec = PartitionSpec::uniform(vec![4, 5, 3], p).unwrap();
            let g = sample(&spec, Seed::new(seed));
            let profile = degree_profile(&g);
            for x in 0..g.n() {
                let strict = is_groupie(profile.d[x], profile.s[x], Convention::Strict);
                let loose = is_groupie(profile.d[x], profile.s[x], Convention::NonStrict);
                prop_assert!(!strict || loose);
            }
            let loose = groupie_report(&g, &profile, Convention::NonStrict);
            if g.edge_count() > 0 {
                prop_assert!(loose.total >= 1);
            } else {
                prop_assert_eq!(loose.total, 0);
            }
        }
    }
}
