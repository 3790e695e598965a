//! Fixed points of iterated permutations `pi^k`.
//!
//! A point is fixed by `pi^k` exactly when its cycle in `pi` has a length
//! dividing `k`. In the large-`n` limit the number of fixed points of `pi^k`
//! has generating function `exp(sum_{d|k} (y^d - 1)/d)`; its mean is `tau(k)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::joint_weight;
use crate::error::{domain, Error, Result};
use crate::exactnum::{divisor_profile, factorial, rat, HpReal};
use crate::{RationalBivariate, RationalSeries};

/// Largest `k` for which [`expected_fixed_points`] also rebuilds the answer
/// from the bivariate generating function.
pub const SERIES_CHECK_LIMIT: u64 = 64;

/// Whether every point of an `len`-cycle is fixed by the `k`-th power.
pub fn fixed_point_divisor_rule(len: u64, k: u64) -> bool {
    assert!(
        len >= 1 && k >= 1,
        "cycle length and exponent must be positive"
    );
    k.is_multiple_of(len)
}

/// `(1 - z) * d/dy [exp(sum_{i|k} (y^i - z^i)/i) / (1 - z)]` at `y = z`,
/// truncated to order `k`. The result should be `sum_{i|k} z^(i-1)`.
pub fn expected_value_series(k: u64) -> Result<RationalSeries> {
    let profile = divisor_profile(k)?;
    let order = k as usize + 1;
    let exponent = RationalBivariate::from_terms(
        order,
        profile.divisors.iter().flat_map(|&i| {
            let i = i as usize;
            [((i, 0), rat(1, i as i64)), ((0, i), rat(-1, i as i64))]
        }),
    );
    let a = exponent
        .exp()?
        .mul(&RationalBivariate::from_z(&RationalSeries::geometric(
            order,
        )));
    Ok(a.partial_y().diagonal().mul_one_minus_z())
}

/// Limiting expected number of fixed points of `pi^k`, which is `tau(k)`.
///
/// For `k <= SERIES_CHECK_LIMIT` the value is also recomputed from the
/// bivariate generating function; a disagreement is reported as an error.
pub fn expected_fixed_points(k: u64) -> Result<u64> {
    let profile = divisor_profile(k)?;
    if k <= SERIES_CHECK_LIMIT {
        let s = expected_value_series(k)?;
        let expected = RationalSeries::from_terms(
            s.order(),
            profile
                .divisors
                .iter()
                .map(|&d| (d as usize - 1, BigRational::one())),
        );
        if s != expected || s.sum_coeffs() != BigRational::from_integer(profile.tau.into()) {
            return Err(Error::Consistency(format!(
                "series reconstruction of the expected fixed points of pi^{k} disagrees with tau"
            )));
        }
    }
    Ok(profile.tau)
}

/// Limiting distribution of the number of fixed points of `pi^k`, for
/// `c = 0..=c_max`.
#[derive(Clone, Debug)]
pub struct FixpointDistribution {
    pub k: u64,
    pub c_max: usize,
    /// `[y^c] exp(sum_{d|k, d<=c_max} y^d/d)`; multiplying by
    /// `e^(-sigma(k)/k)` gives the probability.
    pub exact_coefficients: Vec<BigRational>,
    pub probabilities: Vec<HpReal>,
    /// Upper bound on `P(C > c_max)`, independent of the summed mass, plus
    /// rounding slack.
    pub tail_bound: HpReal,
}

impl FixpointDistribution {
    pub fn total(&self) -> HpReal {
        let p = self.probabilities[0].precision_bits();
        self.probabilities
            .iter()
            .fold(HpReal::zero(p), |a, x| &a + x)
    }

    /// `sum_c c p_c` over the stored range.
    pub fn truncated_mean(&self) -> HpReal {
        let p = self.probabilities[0].precision_bits();
        self.probabilities
            .iter()
            .enumerate()
            .fold(HpReal::zero(p), |a, (c, x)| &a + &x.mul_int(c as i64))
    }

    /// `sum_c p_c x^c` over the stored range.
    pub fn truncated_pgf(&self, x: &HpReal) -> HpReal {
        let p = self.probabilities[0].precision_bits();
        let mut acc = HpReal::zero(p);
        for pc in self.probabilities.iter().rev() {
            acc = &(&acc * x) + pc;
        }
        acc
    }
}

/// Coefficients `b_0..=b_{c_max}` of `exp(sum_{d in divisors} y^d/d)`.
///
/// With `B_n = c_max! b_n` (an integer) the recurrence
/// `n b_n = sum_{d|k, d<=n} b_{n-d}` stays in integer arithmetic with one
/// exact small division per coefficient.
fn divisor_exp_coefficients(divisors: &[u64], c_max: usize) -> Vec<BigRational> {
    let denom = factorial(c_max as u64);
    let mut scaled: Vec<BigInt> = Vec::with_capacity(c_max + 1);
    scaled.push(denom.clone());
    for n in 1..=c_max {
        let mut acc = BigInt::zero();
        for &d in divisors {
            let d = d as usize;
            if d > n {
                break;
            }
            acc += &scaled[n - d];
        }
        let (q, r) = acc.div_rem(&BigInt::from(n));
        debug_assert!(r.is_zero());
        scaled.push(q);
    }
    scaled
        .into_iter()
        .map(|b| BigRational::new(b, denom.clone()))
        .collect()
}

/// Probability that `pi^k` has exactly `c` fixed points, `c = 0..=c_max`.
///
/// Divisors above `c_max` cannot touch the coefficients of `y^0..y^c_max`,
/// so they are dropped from the exponent; the single transcendental factor
/// `e^(-sigma(k)/k)` is applied last.
pub fn fixpoint_distribution(
    k: u64,
    c_max: usize,
    precision_bits: u32,
) -> Result<FixpointDistribution> {
    let profile = divisor_profile(k)?;
    let small: Vec<u64> = profile.divisors_up_to(c_max as u64).collect();
    let coefficients = divisor_exp_coefficients(&small, c_max);
    let work = precision_bits + 16;
    let scale = HpReal::from_rational(&-profile.sigma_over_k(), work).exp();
    let probabilities: Vec<HpReal> = coefficients
        .par_iter()
        .map(|b| scale.mul_rational(b).with_precision(precision_bits))
        .collect();
    let slack = HpReal::one(precision_bits)
        .error_bound()
        .mul_int(c_max as i64 + 2);
    // C > c_max needs a cycle of some length d > c_max dividing k, or more
    // than c_max points from the short cycles alone.
    let large: BigRational = profile.reciprocal_sum()
        - small
            .iter()
            .fold(BigRational::zero(), |a, &d| a + rat(1, d as i64));
    let keep_short = HpReal::from_rational(&-large, work).exp();
    let short_tail = HpReal::from_f64(chernoff_tail(&small, c_max), work);
    let tail = &(&HpReal::one(work) - &keep_short) + &(&keep_short * &short_tail);
    Ok(FixpointDistribution {
        k,
        c_max,
        exact_coefficients: coefficients,
        probabilities,
        tail_bound: &tail.with_precision(precision_bits) + &slack,
    })
}

/// `min_x G(x) / x^(c_max+1)` over a grid of `x > 1`, where
/// `G(x) = exp(sum_d (x^d - 1)/d)`, bounding `P(C > c_max)` for the count
/// built from the given cycle lengths. Evaluated in log space with a small
/// upward margin for floating-point error.
fn chernoff_tail(divisors: &[u64], c_max: usize) -> f64 {
    let mut best = 0.0f64;
    // ln x on a geometric grid from 1e-6 to 1e2
    for i in 0..=800 {
        let lx = 10f64.powf(-6.0 + i as f64 / 100.0);
        let log_g: f64 = divisors
            .iter()
            .map(|&d| ((d as f64 * lx).exp() - 1.0) / d as f64)
            .sum();
        let log_bound = log_g - (c_max as f64 + 1.0) * lx;
        if log_bound.is_finite() {
            best = best.min(log_bound);
        }
    }
    (best * (1.0 - 1e-9) + 1e-12).exp().min(1.0)
}

/// `exp(sum_{d|k} (x^d - 1)/d)`, the probability generating function of the
/// fixed-point count of `pi^k`, at `0 <= x <= 1`.
pub fn pgf_eval(k: u64, x: &HpReal, precision_bits: u32) -> Result<HpReal> {
    if x.is_negative() || *x > HpReal::one(x.precision_bits()) {
        return domain("pgf_eval needs 0 <= x <= 1");
    }
    let profile = divisor_profile(k)?;
    let work = precision_bits + 32;
    let x = x.with_precision(work);
    let one = HpReal::one(work);
    let exponent = profile.divisors.iter().fold(HpReal::zero(work), |acc, &d| {
        &acc + &(&x.powi(d as u32) - &one).div_int(d as i64)
    });
    Ok(exponent.exp().with_precision(precision_bits))
}

/// A value obtained by summing a series directly, with a bound on the
/// neglected tail.
#[derive(Clone, Debug)]
pub struct SummedValue {
    pub value: HpReal,
    pub tail_bound: HpReal,
}

/// Rows of the `(c1, c2)` grid summed by [`joint_expectation`].
pub const JOINT_CUTOFF: u64 = 60;

/// `E[f(c1, c2)]` over the joint law of fixed points (`c1 ~ Poisson(1)`) and
/// 2/4/8-cycles (`c2 ~ Poisson(7/8)`), independent, by exact summation over
/// `c1, c2 <= JOINT_CUTOFF`.
///
/// `f` must satisfy `|f| <= c1^2 + 64 c2^2`. Poisson(λ ≤ 1) terms
/// `c^2 λ^c / c!` shrink by at least half from `c = 3` on, which bounds
/// the neglected mass by `200 (C+1)^2 / (C+1)!`.
pub fn joint_expectation(
    f: impl Fn(u64, u64) -> BigRational + Sync,
    precision_bits: u32,
) -> SummedValue {
    let c = JOINT_CUTOFF;
    let exact: BigRational = (0..=c)
        .into_par_iter()
        .map(|c1| {
            (0..=c).fold(BigRational::zero(), |acc, c2| {
                let v = f(c1, c2);
                if v.is_zero() {
                    acc
                } else {
                    acc + v * joint_weight(c1, c2)
                }
            })
        })
        .reduce(BigRational::zero, |a, b| a + b);
    let work = precision_bits + 16;
    let value = HpReal::from_rational(&rat(-15, 8), work)
        .exp()
        .mul_rational(&exact)
        .with_precision(precision_bits);
    let tail = BigRational::new(BigInt::from(200 * (c + 1) * (c + 1)), factorial(c + 1));
    SummedValue {
        tail_bound: &HpReal::from_rational(&tail, precision_bits) + &value.error_bound(),
        value,
    }
}

fn pairs(c1: u64, c2: u64) -> BigRational {
    let m = c1 + 8 * c2;
    BigRational::from_integer(BigInt::from(m * m.saturating_sub(1) / 2))
}

fn workload(c1: u64, c2: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(c1 + 8 * c2))
}

/// `E[m(m-1)/2 * 1{c1 >= threshold}]` with `m = c1 + 8 c2`: the expected
/// number of candidate pairs among the fixed points of `f^8`, counted only
/// when `f` itself has at least `threshold` fixed points.
pub fn restricted_pair_expectation(threshold: u64, precision_bits: u32) -> SummedValue {
    joint_expectation(
        |c1, c2| {
            if c1 >= threshold {
                pairs(c1, c2)
            } else {
                BigRational::zero()
            }
        },
        precision_bits,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkloadCandidate {
    pub name: &'static str,
    pub closed_form: &'static str,
    pub value: String,
    pub tail_bound: String,
    pub matches_target: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkloadReport {
    pub target_formula: &'static str,
    pub target: String,
    pub candidates: Vec<WorkloadCandidate>,
    pub any_match: bool,
}

/// Evaluates several readings of "expected repetitions given at least one
/// fixed point" and compares each with `113/2 - 46/e`.
pub fn restricted_workload_expectation(precision_bits: u32) -> WorkloadReport {
    let p = precision_bits;
    let e_inv = HpReal::from_int(-1, p + 16).exp();
    let target =
        (&HpReal::from_rational(&rat(113, 2), p + 16) - &e_inv.mul_int(46)).with_precision(p);
    let at_least_one = |f: fn(u64, u64) -> BigRational| {
        move |c1: u64, c2: u64| {
            if c1 >= 1 {
                f(c1, c2)
            } else {
                BigRational::zero()
            }
        }
    };
    let p_c1_pos = (&HpReal::one(p) - &e_inv.with_precision(p)).with_precision(p);

    let linear = joint_expectation(at_least_one(workload), p);
    let pair = joint_expectation(at_least_one(pairs), p);
    let unrestricted_pair = joint_expectation(pairs, p);
    let linear_all = joint_expectation(workload, p);
    let rows: Vec<(&'static str, &'static str, SummedValue)> = vec![
        ("restricted E[(c1+8c2) 1{c1>=1}]", "8 - 7/e", linear.clone()),
        (
            "conditional E[c1+8c2 | c1>=1]",
            "(8 - 7/e)/(1 - 1/e)",
            SummedValue {
                value: &linear.value / &p_c1_pos,
                tail_bound: linear.tail_bound.mul_int(2),
            },
        ),
        (
            "restricted E[m(m-1)/2 1{c1>=1}]",
            "113/2 - 49/e",
            pair.clone(),
        ),
        (
            "conditional E[m(m-1)/2 | c1>=1]",
            "(113/2 - 49/e)/(1 - 1/e)",
            SummedValue {
                value: &pair.value / &p_c1_pos,
                tail_bound: pair.tail_bound.mul_int(2),
            },
        ),
        ("unrestricted E[m(m-1)/2]", "113/2", unrestricted_pair),
        ("unrestricted E[c1+8c2]", "8", linear_all),
    ];
    let candidates: Vec<WorkloadCandidate> = rows
        .into_iter()
        .map(|(name, closed_form, v)| {
            let diff = (&v.value - &target).abs();
            WorkloadCandidate {
                name,
                closed_form,
                value: v.value.to_decimal_string(12),
                tail_bound: format!("{:e}", v.tail_bound.to_f64()),
                matches_target: diff.to_f64() < 1e-9,
            }
        })
        .collect();
    WorkloadReport {
        target_formula: "113/2 - 46/e",
        target: target.to_decimal_string(12),
        any_match: candidates.iter().any(|c| c.matches_target),
        candidates,
    }
}
