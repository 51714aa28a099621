//! Exact ground truth for tiny specs by enumerating every cross-part edge
//! subset.
//!
//! A spec with M cross-part pairs has 2^M possible graphs. For M up to
//! [`MAX_CROSS_PAIRS`] this module walks all of them and accumulates the
//! exact distribution of the total groupie count N and of each per-part
//! count. Under a uniform p the weight of a configuration depends only on
//! its edge count, so the enumeration tallies integer counts per
//! (value, edge count) cell; when p is additionally a dyadic rational the
//! final probabilities are exact big-integer rationals with zero rounding
//! error. Non-uniform matrices fall back to compensated f64 accumulation.
//!
//! Enumeration is split into fixed-size chunks of configuration indices;
//! chunk results are merged in index order, so outputs do not depend on
//! the worker count.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::groupie::{is_groupie, Convention};
use crate::model::PartitionSpec;

/// Enumeration capacity: at most this many cross-part pairs (2^24 ≈ 16.7M
/// configurations).
pub const MAX_CROSS_PAIRS: u32 = 24;

/// Configurations per work chunk (2^14).
const CHUNK_BITS: u32 = 14;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(
        "spec has {pairs} cross-part pairs; exact enumeration is capped at \
         MAX_CROSS_PAIRS = {MAX_CROSS_PAIRS}"
    )]
    TooManyPairs { pairs: u64 },
    #[error("conditioning event has probability 0: the probe vertex never attains degree {d}")]
    UndefinedConditional { d: u64 },
}

/// Exact rational distributions, available when the spec has a uniform
/// dyadic edge probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRationals {
    pub n_dist: Vec<BigRational>,
    pub part_dists: Vec<Vec<BigRational>>,
}

impl ExactRationals {
    pub fn mean_n(&self) -> BigRational {
        mean_of(&self.n_dist)
    }

    pub fn mean_part(&self, i: usize) -> BigRational {
        mean_of(&self.part_dists[i])
    }

    pub fn var_n(&self) -> BigRational {
        let mean = self.mean_n();
        let second: BigRational = self
            .n_dist
            .iter()
            .enumerate()
            .map(|(v, p)| p * BigRational::from(BigInt::from(v as u64 * v as u64)))
            .sum();
        second - &mean * &mean
    }
}

fn mean_of(dist: &[BigRational]) -> BigRational {
    dist.iter()
        .enumerate()
        .map(|(v, p)| p * BigRational::from(BigInt::from(v as u64)))
        .sum()
}

/// Full distribution of groupie counts over all 2^M configurations.
/// `n_dist[v]` is P(N = v); `part_dists[i][v]` is P(N(B_i) = v).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub convention: Convention,
    pub part_sizes: Vec<usize>,
    pub pair_count: u32,
    pub total_configs: u64,
    pub n_dist: Vec<f64>,
    pub part_dists: Vec<Vec<f64>>,
    pub exact: Option<ExactRationals>,
}

impl ExactDistribution {
    pub fn mean_n(&self) -> f64 {
        moment(&self.n_dist, 1)
    }

    pub fn var_n(&self) -> f64 {
        let m = self.mean_n();
        moment(&self.n_dist, 2) - m * m
    }

    pub fn mean_part(&self, i: usize) -> f64 {
        moment(&self.part_dists[i], 1)
    }

    pub fn total_mass(&self) -> f64 {
        self.n_dist.iter().sum()
    }
}

fn moment(dist: &[f64], k: u32) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(v, p)| (v as f64).powi(k as i32) * p)
        .sum()
}

/// The cross-part pairs of a spec in canonical block order, with the part
/// index of each endpoint.
struct PairTable {
    u: Vec<u32>,
    v: Vec<u32>,
    prob: Vec<f64>,
    part_of: Vec<u32>,
    n: usize,
    k: usize,
}

fn pair_table(spec: &PartitionSpec) -> Result<PairTable, OracleError> {
    let pairs = spec.cross_pair_count();
    if pairs > MAX_CROSS_PAIRS as u64 {
        return Err(OracleError::TooManyPairs { pairs });
    }
    let mut t = PairTable {
        u: Vec::new(),
        v: Vec::new(),
        prob: Vec::new(),
        part_of: vec![0; spec.n()],
        n: spec.n(),
        k: spec.k(),
    };
    for i in 0..spec.k() {
        for x in spec.part_offset(i)..spec.part_offset(i + 1) {
            t.part_of[x] = i as u32;
        }
        for j in (i + 1)..spec.k() {
            for x in spec.part_offset(i)..spec.part_offset(i + 1) {
                for y in spec.part_offset(j)..spec.part_offset(j + 1) {
                    t.u.push(x as u32);
                    t.v.push(y as u32);
                    t.prob.push(spec.prob(i, j));
                }
            }
        }
    }
    Ok(t)
}

/// Per-vertex degree and neighbor-degree sums for one configuration.
struct Scratch {
    deg: Vec<u32>,
    s: Vec<u64>,
    per_part: Vec<u32>,
}

impl Scratch {
    fn new(n: usize, k: usize) -> Self {
        Scratch {
            deg: vec![0; n],
            s: vec![0; n],
            per_part: vec![0; k],
        }
    }

    fn load(&mut self, table: &PairTable, config: u32) {
        self.deg.fill(0);
        self.s.fill(0);
        let mut bits = config;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            self.deg[table.u[e] as usize] += 1;
            self.deg[table.v[e] as usize] += 1;
            bits &= bits - 1;
        }
        let mut bits = config;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            self.s[table.u[e] as usize] += self.deg[table.v[e] as usize] as u64;
            self.s[table.v[e] as usize] += self.deg[table.u[e] as usize] as u64;
            bits &= bits - 1;
        }
    }

    fn count_groupies(&mut self, table: &PairTable, convention: Convention) -> u32 {
        self.per_part.fill(0);
        let mut total = 0;
        for x in 0..table.n {
            if is_groupie(self.deg[x], self.s[x], convention) {
                self.per_part[table.part_of[x] as usize] += 1;
                total += 1;
            }
        }
        total
    }
}

/// Counts of configurations per (statistic value, edge count) cell, laid
/// out value-major with stride m+1.
#[derive(Clone)]
struct CountGrid {
    n_counts: Vec<u64>,
    part_counts: Vec<Vec<u64>>,
    stride: usize,
}

impl CountGrid {
    fn new(n: usize, part_sizes: &[usize], m: u32) -> Self {
        let stride = m as usize + 1;
        CountGrid {
            n_counts: vec![0; (n + 1) * stride],
            part_counts: part_sizes.iter().map(|&s| vec![0; (s + 1) * stride]).collect(),
            stride,
        }
    }

    fn merge(&mut self, other: &CountGrid) {
        for (a, b) in self.n_counts.iter_mut().zip(&other.n_counts) {
            *a += b;
        }
        for (pa, pb) in self.part_counts.iter_mut().zip(&other.part_counts) {
            for (a, b) in pa.iter_mut().zip(pb) {
                *a += b;
            }
        }
    }
}

fn chunk_ranges(total: u64) -> Vec<(u32, u32)> {
    let chunk = 1u64 << CHUNK_BITS;
    let mut ranges = Vec::new();
    let mut start = 0u64;
    while start < total {
        let end = (start + chunk).min(total);
        ranges.push((start as u32, end as u32));
        start = end;
    }
    ranges
}

/// Exact distribution of N and every N(B_i) by exhaustive enumeration.
pub fn exact_groupie_distribution(
    spec: &PartitionSpec,
    convention: Convention,
) -> Result<ExactDistribution, OracleError> {
    let table = pair_table(spec)?;
    let m = table.u.len() as u32;
    let total_configs = 1u64 << m;
    let uniform = spec.uniform_p();

    let (n_dist, part_dists, exact) = if let Some(p) = uniform {
        let grid = enumerate_counts(&table, spec, convention, m, total_configs);
        grids_to_dists(&grid, m, p)
    } else {
        let (n_dist, part_dists) =
            enumerate_weighted(&table, spec, convention, total_configs);
        (n_dist, part_dists, None)
    };

    Ok(ExactDistribution {
        convention,
        part_sizes: spec.part_sizes().to_vec(),
        pair_count: m,
        total_configs,
        n_dist,
        part_dists,
        exact,
    })
}

fn enumerate_counts(
    table: &PairTable,
    spec: &PartitionSpec,
    convention: Convention,
    m: u32,
    total: u64,
) -> CountGrid {
    let empty = CountGrid::new(table.n, spec.part_sizes(), m);
    let partials: Vec<CountGrid> = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, end)| {
            let mut grid = empty.clone();
            let mut scratch = Scratch::new(table.n, table.k);
            for config in start..end {
                scratch.load(table, config);
                let total_g = scratch.count_groupies(table, convention);
                let e = config.count_ones() as usize;
                grid.n_counts[total_g as usize * grid.stride + e] += 1;
                for i in 0..table.k {
                    grid.part_counts[i][scratch.per_part[i] as usize * grid.stride + e] += 1;
                }
            }
            grid
        })
        .collect();
    let mut grid = empty;
    for partial in &partials {
        grid.merge(partial);
    }
    grid
}

/// Numerator of p as a/2^20 when p is exactly representable that way.
fn dyadic_numerator(p: f64) -> Option<u64> {
    let scaled = p * (1u64 << 20) as f64;
    if scaled.fract() == 0.0 {
        Some(scaled as u64)
    } else {
        None
    }
}

fn grids_to_dists(
    grid: &CountGrid,
    m: u32,
    p: f64,
) -> (Vec<f64>, Vec<Vec<f64>>, Option<ExactRationals>) {
    if let Some(a) = dyadic_numerator(p) {
        let n_dist_r = counts_to_rationals(&grid.n_counts, grid.stride, m, a);
        let part_dists_r: Vec<Vec<BigRational>> = grid
            .part_counts
            .iter()
            .map(|c| counts_to_rationals(c, grid.stride, m, a))
            .collect();
        let n_dist = n_dist_r.iter().map(|r| r.to_f64().unwrap()).collect();
        let part_dists = part_dists_r
            .iter()
            .map(|d| d.iter().map(|r| r.to_f64().unwrap()).collect())
            .collect();
        (
            n_dist,
            part_dists,
            Some(ExactRationals {
                n_dist: n_dist_r,
                part_dists: part_dists_r,
            }),
        )
    } else {
        let n_dist = counts_to_f64(&grid.n_counts, grid.stride, m, p);
        let part_dists = grid
            .part_counts
            .iter()
            .map(|c| counts_to_f64(c, grid.stride, m, p))
            .collect();
        (n_dist, part_dists, None)
    }
}

fn counts_to_rationals(counts: &[u64], stride: usize, m: u32, a: u64) -> Vec<BigRational> {
    let base = 1u64 << 20;
    let c = base - a;
    let pow_a: Vec<BigUint> = (0..=m).map(|e| BigUint::from(a).pow(e)).collect();
    let pow_c: Vec<BigUint> = (0..=m).map(|e| BigUint::from(c).pow(e)).collect();
    let denom = BigInt::from(BigUint::from(base).pow(m));
    counts
        .chunks(stride)
        .map(|row| {
            let mut numer = BigUint::zero();
            for (e, &cnt) in row.iter().enumerate() {
                if cnt != 0 {
                    numer += &pow_a[e] * &pow_c[m as usize - e] * cnt;
                }
            }
            Ratio::new(BigInt::from(numer), denom.clone())
        })
        .collect()
}

fn counts_to_f64(counts: &[u64], stride: usize, m: u32, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let weights: Vec<f64> = (0..=m as i32)
        .map(|e| p.powi(e) * q.powi(m as i32 - e))
        .collect();
    counts
        .chunks(stride)
        .map(|row| {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for (e, &cnt) in row.iter().enumerate() {
                let x = cnt as f64 * weights[e];
                let y = x - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            sum
        })
        .collect()
}

fn config_weight(config: u32, base: f64, ratio: &[f64]) -> f64 {
    let mut w = base;
    let mut bits = config;
    while bits != 0 {
        let e = bits.trailing_zeros() as usize;
        w *= ratio[e];
        bits &= bits - 1;
    }
    w
}

fn enumerate_weighted(
    table: &PairTable,
    spec: &PartitionSpec,
    convention: Convention,
    total: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    // Weight = prod over absent pairs (1-p_e) * prod over present p_e,
    // factored as a shared base times per-present-pair ratios. Pairs with
    // p_e = 1 make the base zero; handle them by forcing their bit.
    let forced: u32 = table
        .prob
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= 1.0)
        .map(|(e, _)| 1u32 << e)
        .sum();
    let base: f64 = table.prob.iter().map(|&p| if p >= 1.0 { 1.0 } else { 1.0 - p }).product();
    let ratio: Vec<f64> = table
        .prob
        .iter()
        .map(|&p| if p >= 1.0 { 1.0 } else { p / (1.0 - p) })
        .collect();

    let n = table.n;
    let k = table.k;
    let partials: Vec<(Vec<f64>, Vec<Vec<f64>>)> = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, end)| {
            let mut n_dist = vec![0.0f64; n + 1];
            let mut part_dists: Vec<Vec<f64>> = spec
                .part_sizes()
                .iter()
                .map(|&s| vec![0.0f64; s + 1])
                .collect();
            let mut scratch = Scratch::new(n, k);
            for config in start..end {
                if config & forced != forced {
                    continue;
                }
                let w = config_weight(config & !forced, base, &ratio);
                if w == 0.0 {
                    continue;
                }
                scratch.load(table, config);
                let total_g = scratch.count_groupies(table, convention);
                n_dist[total_g as usize] += w;
                for i in 0..k {
                    part_dists[i][scratch.per_part[i] as usize] += w;
                }
            }
            (n_dist, part_dists)
        })
        .collect();

    let mut n_dist = vec![0.0f64; n + 1];
    let mut part_dists: Vec<Vec<f64>> = spec
        .part_sizes()
        .iter()
        .map(|&s| vec![0.0f64; s + 1])
        .collect();
    for (pn, pp) in &partials {
        for (a, b) in n_dist.iter_mut().zip(pn) {
            *a += b;
        }
        for (da, db) in part_dists.iter_mut().zip(pp) {
            for (a, b) in da.iter_mut().zip(db) {
                *a += b;
            }
        }
    }
    (n_dist, part_dists)
}

/// Exact conditional mean of the neighbor-degree sum of a probe vertex
/// (the first vertex of a part), given its degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMeanS {
    pub part: usize,
    pub d: u64,
    /// E[S_x | d_x = d].
    pub mean: f64,
    /// P(d_x = d).
    pub probability: f64,
    /// Exact value when the spec has a uniform dyadic p.
    pub exact_mean: Option<BigRational>,
}

pub fn exact_conditional_mean_s(
    spec: &PartitionSpec,
    part: usize,
    d: u64,
) -> Result<ConditionalMeanS, OracleError> {
    let table = pair_table(spec)?;
    let m = table.u.len() as u32;
    let total = 1u64 << m;
    let probe = spec.part_offset(part) as u32;
    let uniform = spec.uniform_p();

    if let Some(p) = uniform {
        // Bucket by edge count: num[e] accumulates S_x, den[e] counts.
        let stride = m as usize + 1;
        let partials: Vec<(Vec<u64>, Vec<u64>)> = chunk_ranges(total)
            .into_par_iter()
            .map(|(start, end)| {
                let mut num = vec![0u64; stride];
                let mut den = vec![0u64; stride];
                let mut scratch = Scratch::new(table.n, table.k);
                for config in start..end {
                    scratch.load(&table, config);
                    if scratch.deg[probe as usize] as u64 != d {
                        continue;
                    }
                    let e = config.count_ones() as usize;
                    num[e] += scratch.s[probe as usize];
                    den[e] += 1;
                }
                (num, den)
            })
            .collect();
        let mut num = vec![0u64; stride];
        let mut den = vec![0u64; stride];
        for (pn, pd) in &partials {
            for (a, b) in num.iter_mut().zip(pn) {
                *a += b;
            }
            for (a, b) in den.iter_mut().zip(pd) {
                *a += b;
            }
        }
        if den.iter().all(|&c| c == 0) {
            return Err(OracleError::UndefinedConditional { d });
        }
        if let Some(a) = dyadic_numerator(p) {
            let base = 1u64 << 20;
            let c = base - a;
            let pow_a: Vec<BigUint> = (0..=m).map(|e| BigUint::from(a).pow(e)).collect();
            let pow_c: Vec<BigUint> = (0..=m).map(|e| BigUint::from(c).pow(e)).collect();
            let weigh = |row: &[u64]| -> BigUint {
                let mut acc = BigUint::zero();
                for (e, &cnt) in row.iter().enumerate() {
                    if cnt != 0 {
                        acc += &pow_a[e] * &pow_c[m as usize - e] * cnt;
                    }
                }
                acc
            };
            let wn = weigh(&num);
            let wd = weigh(&den);
            if wd.is_zero() {
                return Err(OracleError::UndefinedConditional { d });
            }
            let mean_r = Ratio::new(BigInt::from(wn), BigInt::from(wd.clone()));
            let prob = Ratio::new(
                BigInt::from(wd),
                BigInt::from(BigUint::from(base).pow(m)),
            );
            Ok(ConditionalMeanS {
                part,
                d,
                mean: mean_r.to_f64().unwrap(),
                probability: prob.to_f64().unwrap(),
                exact_mean: Some(mean_r),
            })
        } else {
            let q = 1.0 - p;
            let w = |row: &[u64]| -> f64 {
                row.iter()
                    .enumerate()
                    .map(|(e, &cnt)| cnt as f64 * p.powi(e as i32) * q.powi(m as i32 - e as i32))
                    .sum()
            };
            let wn = w(&num);
            let wd = w(&den);
            if wd == 0.0 {
                return Err(OracleError::UndefinedConditional { d });
            }
            Ok(ConditionalMeanS {
                part,
                d,
                mean: wn / wd,
                probability: wd,
                exact_mean: None,
            })
        }
    } else {
        let forced: u32 = table
            .prob
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= 1.0)
            .map(|(e, _)| 1u32 << e)
            .sum();
        let base: f64 = table
            .prob
            .iter()
            .map(|&p| if p >= 1.0 { 1.0 } else { 1.0 - p })
            .product();
        let ratio: Vec<f64> = table
            .prob
            .iter()
            .map(|&p| if p >= 1.0 { 1.0 } else { p / (1.0 - p) })
            .collect();
        let partials: Vec<(f64, f64)> = chunk_ranges(total)
            .into_par_iter()
            .map(|(start, end)| {
                let mut wn = 0.0f64;
                let mut wd = 0.0f64;
                let mut scratch = Scratch::new(table.n, table.k);
                for config in start..end {
                    if config & forced != forced {
                        continue;
                    }
                    scratch.load(&table, config);
                    if scratch.deg[probe as usize] as u64 != d {
                        continue;
                    }
                    let w = config_weight(config & !forced, base, &ratio);
                    wn += w * scratch.s[probe as usize] as f64;
                    wd += w;
                }
                (wn, wd)
            })
            .collect();
        let wn: f64 = partials.iter().map(|p| p.0).sum();
        let wd: f64 = partials.iter().map(|p| p.1).sum();
        if wd == 0.0 {
            return Err(OracleError::UndefinedConditional { d });
        }
        Ok(ConditionalMeanS {
            part,
            d,
            mean: wn / wd,
            probability: wd,
            exact_mean: None,
        })
    }
}

fn quantity_name(i: usize) -> String {
    format!("N_B{}", i + 1)
}

/// CSV rows `quantity,value,probability` for the full support, then
/// expectation rows `E[...]` with the value column filled. Fixed 6-decimal
/// floats.
pub fn distribution_csv(dist: &ExactDistribution) -> String {
    let mut out = String::from("quantity,value,probability\n");
    let rows = |out: &mut String, name: &str, d: &[f64]| {
        for (v, p) in d.iter().enumerate() {
            out.push_str(&format!("{name},{v},{p:.6}\n"));
        }
    };
    rows(&mut out, "N", &dist.n_dist);
    for (i, d) in dist.part_dists.iter().enumerate() {
        rows(&mut out, &quantity_name(i), d);
    }
    out.push_str(&format!("E[N],{:.6},\n", dist.mean_n()));
    for i in 0..dist.part_dists.len() {
        out.push_str(&format!(
            "E[{}],{:.6},\n",
            quantity_name(i),
            dist.mean_part(i)
        ));
    }
    out
}

/// Text rendering with the same row shape as the CSV, but probabilities
/// and expectations printed as exact rationals when available and as
/// full-precision floats otherwise.
pub fn distribution_text(dist: &ExactDistribution) -> String {
    let mut out = format!(
        "configurations,{},pairs,{}\n",
        dist.total_configs, dist.pair_count
    );
    out.push_str("quantity,value,probability\n");
    let fmt_prob = |exact: Option<&BigRational>, approx: f64| -> String {
        match exact {
            Some(r) => r.to_string(),
            None => format!("{approx}"),
        }
    };
    for (v, p) in dist.n_dist.iter().enumerate() {
        let exact = dist.exact.as_ref().map(|e| &e.n_dist[v]);
        out.push_str(&format!("N,{v},{}\n", fmt_prob(exact, *p)));
    }
    for (i, d) in dist.part_dists.iter().enumerate() {
        for (v, p) in d.iter().enumerate() {
            let exact = dist.exact.as_ref().map(|e| &e.part_dists[i][v]);
            out.push_str(&format!("{},{v},{}\n", quantity_name(i), fmt_prob(exact, *p)));
        }
    }
    match &dist.exact {
        Some(e) => {
            out.push_str(&format!("E[N],{}\n", e.mean_n()));
            for i in 0..dist.part_dists.len() {
                out.push_str(&format!("E[{}],{}\n", quantity_name(i), e.mean_part(i)));
            }
        }
        None => {
            out.push_str(&format!("E[N],{}\n", dist.mean_n()));
            for i in 0..dist.part_dists.len() {
                out.push_str(&format!("E[{}],{}\n", quantity_name(i), dist.mean_part(i)));
            }
        }
    }
    out
}
