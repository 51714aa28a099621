//! Closed-form quantities: binomial tail probabilities, Hoeffding-style
//! deviation bounds, expected threshold exceedances, the concentration
//! window for per-part groupie counts, and a first-moment heuristic that
//! predicts each part's limiting groupie fraction.
//!
//! Two published formulas come in a "literal" and a "model-implied"
//! variant that disagree (the degree law for a first-part vertex, and the
//! multiplier in the expected exceedance count). Both variants are always
//! computed and reported side by side; nothing is merged or corrected
//! silently.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::model::PartitionSpec;

/// Largest m for which exact rational arithmetic is used for q = 1/2
/// tails; beyond this the log-space path takes over.
pub const EXACT_TAIL_MAX_M: u64 = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("operation requires exactly 3 parts, got {0}")]
    NotTripartite(usize),
    #[error("operation requires a uniform cross-part edge probability")]
    NonUniformProbability,
    #[error("omega must be finite and non-negative, got {0}")]
    BadOmega(f64),
}

/// Default window growth function: omega(n) = ln n.
pub fn default_omega(n: usize) -> f64 {
    (n as f64).ln()
}

/// Expected degree of a vertex in part `i`: sum over other parts of
/// size times edge probability; equals (n - s_i) p under a uniform p.
pub fn expected_degree(spec: &PartitionSpec, i: usize) -> f64 {
    (0..spec.k())
        .filter(|&j| j != i)
        .map(|j| spec.part_size(j) as f64 * spec.prob(i, j))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialLaw {
    pub trials: u64,
    pub q: f64,
}

impl std::fmt::Display for BinomialLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bin({}, {})", self.trials, self.q)
    }
}

/// The two candidate degree laws for a vertex of the first part of a
/// tripartite spec. The literal law counts only third-part vertices as
/// potential neighbors; the model-implied law counts everything outside
/// the first part. They disagree whenever the second part is nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeLaws {
    pub literal: BinomialLaw,
    pub model: BinomialLaw,
}

pub fn degree_laws(spec: &PartitionSpec) -> Result<DegreeLaws, TheoryError> {
    if spec.k() != 3 {
        return Err(TheoryError::NotTripartite(spec.k()));
    }
    let p = spec
        .uniform_p()
        .ok_or(TheoryError::NonUniformProbability)?;
    Ok(DegreeLaws {
        literal: BinomialLaw {
            trials: spec.part_size(2) as u64,
            q: p,
        },
        model: BinomialLaw {
            trials: (spec.n() - spec.part_size(0)) as u64,
            q: p,
        },
    })
}

/// Closed-form approximation of the conditional mean neighbor-degree sum
/// given degree d: d((a+b)n + 1)/2, where (a+b) is the combined fraction
/// of the first two parts. Treats each neighbor's remaining degree as a
/// symmetric binomial over (a+b)n potential partners; exact only in that
/// idealization.
pub fn approx_conditional_mean_s(d: u64, a_plus_b: f64, n: u64) -> f64 {
    d as f64 * (a_plus_b * n as f64 + 1.0) / 2.0
}

/// Two-sided deviation bound: P(|Bin(m,1/2) - m/2| >= t) <= min(1, 2 e^{-2t^2/m}).
pub fn hoeffding_tail_bound(m: u64, t: f64) -> f64 {
    assert!(m >= 1, "bound needs at least one trial");
    assert!(t >= 0.0, "deviation must be non-negative");
    (2.0 * (-2.0 * t * t / m as f64).exp()).min(1.0)
}

/// One-sided variant without the factor 2, matching derivations that drop
/// it: P(Bin(m,1/2) - m/2 >= t) <= min(1, e^{-2t^2/m}).
pub fn hoeffding_one_sided_bound(m: u64, t: f64) -> f64 {
    assert!(m >= 1, "bound needs at least one trial");
    assert!(t >= 0.0, "deviation must be non-negative");
    (-2.0 * t * t / m as f64).exp().min(1.0)
}

/// Exact upper tail P(Bin(m,q) >= k). Returns 1 for k <= 0 and 0 for
/// k > m. Uses exact rationals for q = 1/2 with m <= [`EXACT_TAIL_MAX_M`];
/// otherwise a self-normalizing compensated summation of the probability
/// mass function (absolute error around 1e-13 for m up to 1e6).
pub fn binomial_tail_exact(m: u64, q: f64, k: i64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "q must be a probability");
    if k <= 0 {
        return 1.0;
    }
    let k = k as u64;
    if k > m {
        return 0.0;
    }
    if q == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return 1.0;
    }
    if q == 0.5 && m <= EXACT_TAIL_MAX_M {
        return binomial_tail_half_rational(m, k).to_f64().unwrap();
    }
    binomial_tail_f64(m, q, k)
}

/// Exact P(Bin(m,1/2) >= k) as a rational with denominator 2^m.
/// Requires m <= [`EXACT_TAIL_MAX_M`].
pub fn binomial_tail_half_rational(m: u64, k: u64) -> BigRational {
    assert!(m <= EXACT_TAIL_MAX_M, "rational tail limited to m <= {EXACT_TAIL_MAX_M}");
    let mut c = BigUint::one();
    let mut sum = if k == 0 { BigUint::one() } else { BigUint::zero() };
    for j in 1..=m {
        c = c * (m - j + 1) / j;
        if j >= k {
            sum += &c;
        }
    }
    Ratio::new(BigInt::from(sum), BigInt::from(BigUint::one() << m as usize))
}

/// Exact two-sided tail P(|Bin(m,1/2) - m/2| >= t) as a rational.
/// Requires m <= [`EXACT_TAIL_MAX_M`]; t may be any non-negative real.
pub fn two_sided_half_tail_rational(m: u64, t: f64) -> BigRational {
    assert!(m <= EXACT_TAIL_MAX_M, "rational tail limited to m <= {EXACT_TAIL_MAX_M}");
    assert!(t >= 0.0 && t.is_finite(), "deviation must be non-negative");
    let mut c = BigUint::one();
    let mut sum = BigUint::zero();
    // |j - m/2| >= t, compared as integers via 2j - m against 2t.
    for j in 0..=m {
        if j > 0 {
            c = c * (m - j + 1) / j;
        }
        let dev = (2.0 * j as f64 - m as f64).abs();
        if dev >= 2.0 * t {
            sum += &c;
        }
    }
    Ratio::new(BigInt::from(sum), BigInt::from(BigUint::one() << m as usize))
}

/// f64 convenience wrapper over [`two_sided_half_tail_rational`].
pub fn two_sided_half_tail_exact(m: u64, t: f64) -> f64 {
    two_sided_half_tail_rational(m, t).to_f64().unwrap()
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Tail via pmf recurrence outward from the mode, with compensated sums
/// for both sides and a final normalization so the anchor's log-gamma
/// error cancels.
pub(crate) fn binomial_tail_f64(m: u64, q: f64, k: u64) -> f64 {
    debug_assert!(k >= 1 && k <= m && q > 0.0 && q < 1.0);
    let mf = m as f64;
    let mode = (((m + 1) as f64) * q).floor().min(mf) as u64;
    let ln_pmf_mode = ln_gamma(mf + 1.0) - ln_gamma(mode as f64 + 1.0)
        - ln_gamma((m - mode) as f64 + 1.0)
        + mode as f64 * q.ln()
        + (m - mode) as f64 * (1.0 - q).ln();
    let anchor = ln_pmf_mode.exp();
    let mut lo = Kahan::default();
    let mut hi = Kahan::default();
    let mut bucket = |j: u64, term: f64| {
        if j >= k {
            hi.add(term);
        } else {
            lo.add(term);
        }
    };
    bucket(mode, anchor);
    let ratio_down = (1.0 - q) / q;
    let mut term = anchor;
    let mut j = mode;
    while j > 0 && term > 0.0 {
        term *= (j as f64 / (mf - j as f64 + 1.0)) * ratio_down;
        j -= 1;
        bucket(j, term);
    }
    let ratio_up = q / (1.0 - q);
    term = anchor;
    j = mode;
    while j < m && term > 0.0 {
        term *= ((mf - j as f64) / (j as f64 + 1.0)) * ratio_up;
        j += 1;
        bucket(j, term);
    }
    hi.sum / (lo.sum + hi.sum)
}

/// Expected count of part-`i` vertices with degree strictly above
/// `threshold`, under the model degree law Bin(n - s_i, p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedExceedance {
    pub part: usize,
    pub threshold: f64,
    /// Smallest integer degree counted as above the threshold.
    pub min_degree: i64,
    /// P(degree >= min_degree) under the model law.
    pub tail: f64,
    /// s_i times the tail.
    pub model: f64,
    /// (n/2) times the tail, the literal multiplier some derivations use.
    pub half_n: f64,
}

pub fn expected_nplus(
    spec: &PartitionSpec,
    i: usize,
    threshold: f64,
) -> Result<ExpectedExceedance, TheoryError> {
    let p = spec
        .uniform_p()
        .ok_or(TheoryError::NonUniformProbability)?;
    let m = (spec.n() - spec.part_size(i)) as u64;
    let min_degree = threshold.floor() as i64 + 1;
    let tail = binomial_tail_exact(m, p, min_degree);
    Ok(ExpectedExceedance {
        part: i,
        threshold,
        min_degree,
        tail,
        model: spec.part_size(i) as f64 * tail,
        half_n: spec.n() as f64 / 2.0 * tail,
    })
}

/// Interval center ± half_width used by the concentration claim for
/// per-part groupie counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationWindow {
    pub center: f64,
    pub half_width: f64,
}

impl ConcentrationWindow {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// Literal window for a tripartite spec: center (s_1 + s_2)/2, half-width
/// omega sqrt(n). Purely diagnostic; coverage against it is measured, not
/// assumed.
pub fn concentration_window(
    spec: &PartitionSpec,
    omega_value: f64,
) -> Result<ConcentrationWindow, TheoryError> {
    if spec.k() != 3 {
        return Err(TheoryError::NotTripartite(spec.k()));
    }
    if !omega_value.is_finite() || omega_value < 0.0 {
        return Err(TheoryError::BadOmega(omega_value));
    }
    let center = (spec.part_size(0) + spec.part_size(1)) as f64 / 2.0;
    let half_width = omega_value * (spec.n() as f64).sqrt();
    Ok(ConcentrationWindow { center, half_width })
}

/// Predicted limiting groupie fraction of a part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitFraction {
    Zero,
    Half,
    One,
}

impl LimitFraction {
    pub fn value(&self) -> f64 {
        match self {
            LimitFraction::Zero => 0.0,
            LimitFraction::Half => 0.5,
            LimitFraction::One => 1.0,
        }
    }
}

impl std::fmt::Display for LimitFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LimitFraction::Zero => write!(f, "0"),
            LimitFraction::Half => write!(f, "1/2"),
            LimitFraction::One => write!(f, "1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartPrediction {
    pub part: usize,
    /// Expected degree of a part-i vertex.
    pub mu: f64,
    /// Expected degree of a random potential neighbor of a part-i vertex.
    pub nu: f64,
    pub prediction: LimitFraction,
}

/// First-moment heuristic: part i should be almost all groupies when
/// mu_i > nu_i, almost none when mu_i < nu_i, and balanced at equality.
/// Under a uniform positive p the comparison reduces to the exact integer
/// comparison (n - s_i)^2 vs sum_{j != i} s_j (n - s_j); otherwise an f64
/// comparison of the same cross-multiplied quantities is used.
pub fn heuristic_prediction(spec: &PartitionSpec) -> Vec<PartPrediction> {
    let k = spec.k();
    let n = spec.n();
    let uniform = spec.uniform_p();
    let mu: Vec<f64> = (0..k).map(|i| expected_degree(spec, i)).collect();
    (0..k)
        .map(|i| {
            let (nu, ordering) = match uniform {
                Some(p) if p > 0.0 => {
                    let lhs = {
                        let m = (n - spec.part_size(i)) as u128;
                        m * m
                    };
                    let rhs: u128 = (0..k)
                        .filter(|&j| j != i)
                        .map(|j| spec.part_size(j) as u128 * (n - spec.part_size(j)) as u128)
                        .sum();
                    let nu = p * rhs as f64 / (n - spec.part_size(i)) as f64;
                    (nu, lhs.cmp(&rhs))
                }
                Some(_) => (0.0, std::cmp::Ordering::Equal),
                None => {
                    // nu_i weights each potential neighbor by its edge
                    // probability: sum_j s_j p_ij mu_j / mu_i.
                    let weighted: f64 = (0..k)
                        .filter(|&j| j != i)
                        .map(|j| spec.part_size(j) as f64 * spec.prob(i, j) * mu[j])
                        .sum();
                    let nu = if mu[i] > 0.0 { weighted / mu[i] } else { 0.0 };
                    let lhs = mu[i] * mu[i];
                    (nu, lhs.partial_cmp(&weighted).unwrap())
                }
            };
            let prediction = match ordering {
                std::cmp::Ordering::Greater => LimitFraction::One,
                std::cmp::Ordering::Equal => LimitFraction::Half,
                std::cmp::Ordering::Less => LimitFraction::Zero,
            };
            PartPrediction {
                part: i,
                mu: mu[i],
                nu,
                prediction,
            }
        })
        .collect()
}
