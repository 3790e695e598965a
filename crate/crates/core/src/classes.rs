//! Permutation classes restricted by cycle lengths and cycle count, their
//! exponential generating functions, and limiting probabilities.
//!
//! The class `P(A, B)` holds the permutations whose cycle lengths all lie in
//! `A` and whose number of cycles lies in `B`. Its EGF is `beta(alpha(z))`
//! with `alpha(z) = sum_{i in A} z^i / i` and `beta` the EGF of `B`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{const_zeta2, const_zeta3, divisor_profile, factorial, rat, HpReal};
use crate::RationalSeries;

/// Allowed cycle lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleLengthSet {
    Finite(BTreeSet<u64>),
    AllExcept(BTreeSet<u64>),
    All,
    DivisorsOf(u64),
    /// `{1, 2^e, 3^e, ...}`.
    PerfectPowers(u32),
}

impl CycleLengthSet {
    pub fn finite(items: impl IntoIterator<Item = u64>) -> Self {
        CycleLengthSet::Finite(items.into_iter().collect())
    }

    pub fn all_except(items: impl IntoIterator<Item = u64>) -> Self {
        CycleLengthSet::AllExcept(items.into_iter().collect())
    }

    pub fn contains(&self, len: u64) -> bool {
        if len == 0 {
            return false;
        }
        match self {
            CycleLengthSet::Finite(s) => s.contains(&len),
            CycleLengthSet::AllExcept(s) => !s.contains(&len),
            CycleLengthSet::All => true,
            CycleLengthSet::DivisorsOf(k) => *k > 0 && k % len == 0,
            CycleLengthSet::PerfectPowers(e) => {
                let root = (len as f64).powf(1.0 / *e as f64).round() as u64;
                (root.saturating_sub(1)..=root + 1).any(|r| r.checked_pow(*e) == Some(len))
            }
        }
    }

    /// Members in `1..=bound`, ascending.
    pub fn members_up_to(&self, bound: u64) -> Vec<u64> {
        match self {
            CycleLengthSet::Finite(s) => s
                .iter()
                .copied()
                .filter(|&i| i >= 1 && i <= bound)
                .collect(),
            CycleLengthSet::DivisorsOf(k) => match divisor_profile(*k) {
                Ok(p) => p.divisors_up_to(bound).collect(),
                Err(_) => Vec::new(),
            },
            _ => (1..=bound).filter(|&i| self.contains(i)).collect(),
        }
    }

    /// The set as an explicit finite list, if it is finite.
    pub fn finite_members(&self) -> Option<Vec<u64>> {
        match self {
            CycleLengthSet::Finite(s) => Some(s.iter().copied().filter(|&i| i >= 1).collect()),
            CycleLengthSet::DivisorsOf(k) => divisor_profile(*k).ok().map(|p| p.divisors),
            _ => None,
        }
    }
}

/// Allowed numbers of cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleCountSet {
    All,
    Exactly(u64),
    Finite(BTreeSet<u64>),
}

impl CycleCountSet {
    pub fn contains(&self, count: u64) -> bool {
        match self {
            CycleCountSet::All => true,
            CycleCountSet::Exactly(t) => *t == count,
            CycleCountSet::Finite(s) => s.contains(&count),
        }
    }

    /// EGF of the set, `sum_{b in B} z^b / b!`, to order `n`.
    pub fn beta_series(&self, n: usize) -> RationalSeries {
        let term = |b: u64| (b as usize, BigRational::new(BigInt::one(), factorial(b)));
        match self {
            CycleCountSet::All => {
                RationalSeries::from_fn(n, |i| BigRational::new(BigInt::one(), factorial(i as u64)))
            }
            CycleCountSet::Exactly(t) => RationalSeries::from_terms(n, [term(*t)]),
            CycleCountSet::Finite(s) => RationalSeries::from_terms(n, s.iter().map(|&b| term(b))),
        }
    }
}

/// `alpha(z) = sum_{i in A} z^i / i` to order `n`.
pub fn alpha_series(lengths: &CycleLengthSet, n: usize) -> RationalSeries {
    RationalSeries::from_terms(
        n,
        lengths
            .members_up_to(n as u64)
            .into_iter()
            .map(|i| (i as usize, rat(1, i as i64))),
    )
}

/// Exact EGF of `P(A, B)` to order `n`.
pub fn class_egf_series(
    lengths: &CycleLengthSet,
    counts: &CycleCountSet,
    n: usize,
) -> Result<RationalSeries> {
    let alpha = alpha_series(lengths, n);
    match counts {
        CycleCountSet::All => alpha.exp(),
        CycleCountSet::Exactly(t) => {
            let t = *t;
            if t as usize > n {
                return Ok(RationalSeries::zero(n));
            }
            let inv = BigRational::new(BigInt::one(), factorial(t));
            Ok(alpha.powi(t as u32).scale(&inv))
        }
        CycleCountSet::Finite(_) => RationalSeries::compose(&counts.beta_series(n), &alpha),
    }
}

/// Sparse polynomial with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparsePoly(BTreeMap<usize, BigRational>);

impl SparsePoly {
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, BigRational)>) -> Self {
        let mut m = BTreeMap::new();
        for (d, c) in terms {
            let slot = m.entry(d).or_insert_with(BigRational::zero);
            *slot += c;
        }
        m.retain(|_, c: &mut BigRational| !c.is_zero());
        SparsePoly(m)
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_terms([(0, c)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.0.iter().map(|(&d, c)| (d, c))
    }

    pub fn eval_at_one(&self) -> BigRational {
        self.0.values().fold(BigRational::zero(), |a, c| a + c)
    }

    pub fn to_series(&self, n: usize) -> RationalSeries {
        RationalSeries::from_terms(n, self.0.iter().map(|(&d, c)| (d, c.clone())))
    }
}

/// `q(z) exp(p(z)) / (1 - z)^m`, the shape of every EGF whose limiting
/// probability is computed here.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredEgf {
    pub pole_order: u32,
    pub exp_poly: SparsePoly,
    pub prefactor: SparsePoly,
}

impl StructuredEgf {
    /// Expand to order `n` exactly.
    pub fn expand(&self, n: usize) -> Result<RationalSeries> {
        let p = self.exp_poly.to_series(n);
        if !p.coeffs()[0].is_zero() {
            return Err(Error::Unsupported(
                "exponent polynomial with a constant term cannot be expanded exactly".into(),
            ));
        }
        let mut s = &self.prefactor.to_series(n) * &p.exp()?;
        for _ in 0..self.pole_order {
            s = s.div_one_minus_z();
        }
        Ok(s)
    }
}

/// Permutations avoiding every cycle length in a finite `prohibited` set,
/// optionally multiplied (labelled product) by `z^c / c!`, i.e. `c` extra
/// fixed points.
pub fn class_egf_structured(
    prohibited: &CycleLengthSet,
    extra_fixed_points: Option<u64>,
) -> Result<StructuredEgf> {
    let members = prohibited.finite_members().ok_or_else(|| {
        Error::Unsupported(
            "structured form needs a finite prohibited set; use prob_no_powerlength_cycles for powers".into(),
        )
    })?;
    let exp_poly = SparsePoly::from_terms(members.iter().map(|&i| (i as usize, rat(-1, i as i64))));
    let prefactor = match extra_fixed_points {
        Some(c) => {
            SparsePoly::from_terms([(c as usize, BigRational::new(BigInt::one(), factorial(c)))])
        }
        None => SparsePoly::constant(BigRational::one()),
    };
    Ok(StructuredEgf {
        pole_order: 1,
        exp_poly,
        prefactor,
    })
}

/// `lim_{z -> 1-} (1 - z) f(z)` for a structured EGF with a simple pole:
/// `q(1) exp(p(1))`, with `q(1)` and `p(1)` exact.
pub fn limit_probability(f: &StructuredEgf, precision_bits: u32) -> Result<HpReal> {
    match f.pole_order {
        0 => Err(Error::DegenerateLimit("0")),
        1 => {
            let p1 = HpReal::from_rational(&f.exp_poly.eval_at_one(), precision_bits);
            Ok(p1.exp().mul_rational(&f.prefactor.eval_at_one()))
        }
        _ if f.prefactor.eval_at_one().is_zero() => Err(Error::Unsupported(
            "higher-order pole with vanishing prefactor at z = 1".into(),
        )),
        _ => Err(Error::DegenerateLimit("infinity")),
    }
}

/// Limit probability of avoiding all cycle lengths in `lengths`:
/// `exp(-sum_{i in A} 1/i)` with the exponent summed exactly.
pub fn prob_no_cycles_in(lengths: &BTreeSet<u64>, precision_bits: u32) -> HpReal {
    let exponent = lengths
        .iter()
        .filter(|&&i| i > 0)
        .fold(BigRational::zero(), |a, &i| a + rat(1, i as i64));
    HpReal::from_rational(&-exponent, precision_bits).exp()
}

/// Limit probability of exactly `c1` fixed points and `c2` cycles with length
/// in `{2, 4, 8}`: `(7/8)^c2 e^(-15/8) / (c1! c2!)`.
pub fn joint_prob_c1_c2(c1: u64, c2: u64, precision_bits: u32) -> HpReal {
    HpReal::from_rational(&rat(-15, 8), precision_bits)
        .exp()
        .mul_rational(&joint_weight(c1, c2))
}

/// The rational factor `(7/8)^c2 / (c1! c2!)` of [`joint_prob_c1_c2`].
pub fn joint_weight(c1: u64, c2: u64) -> BigRational {
    let num = num_traits::pow(BigInt::from(7), c2 as usize);
    let den = num_traits::pow(BigInt::from(8), c2 as usize) * factorial(c1) * factorial(c2);
    BigRational::new(num, den)
}

/// Limit probability of having no cycle whose length is a perfect square
/// (`exponent = 2`, giving `e^(-zeta(2))`) or cube (`e^(-zeta(3))`).
pub fn prob_no_powerlength_cycles(exponent: u32, precision_bits: u32) -> Result<HpReal> {
    let p = precision_bits + 16;
    let z = match exponent {
        2 => const_zeta2(p),
        3 => const_zeta3(p),
        e => {
            return Err(Error::Unsupported(format!(
                "no closed form wired up for perfect powers with exponent {e}"
            )))
        }
    };
    Ok((-z).exp().with_precision(precision_bits))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `A_n / n!` as an exact fraction string.
    pub exact: String,
    pub distance: String,
    pub log2_distance: f64,
}

/// Exact finite-`n` probabilities `A_n/n!` and their distance to the limit.
pub fn convergence_report(
    f: &StructuredEgf,
    order: usize,
    precision_bits: u32,
) -> Result<Vec<(usize, BigRational, HpReal)>> {
    if f.pole_order != 1 {
        return limit_probability(f, precision_bits).map(|_| Vec::new());
    }
    let limit = limit_probability(f, precision_bits)?;
    let series = f.expand(order)?;
    Ok(series
        .into_coeffs()
        .into_iter()
        .enumerate()
        .map(|(n, c)| {
            let d = (&HpReal::from_rational(&c, precision_bits) - &limit).abs();
            (n, c, d)
        })
        .collect())
}

/// Serializable view of [`convergence_report`].
pub fn convergence_rows(
    report: &[(usize, BigRational, HpReal)],
    digits: usize,
) -> Vec<ConvergenceRow> {
    report
        .iter()
        .map(|(n, c, d)| ConvergenceRow {
            n: *n,
            exact: c.to_string(),
            distance: d.to_decimal_string(digits),
            log2_distance: d.log2().map(|v| v.to_f64()).unwrap_or(f64::NEG_INFINITY),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::const_e;
    use crate::permlab::enumerate_sn;
    use num_traits::ToPrimitive;

    const P: u32 = 128;

    fn set(items: &[u64]) -> BTreeSet<u64> {
        items.iter().copied().collect()
    }

    fn within(a: &HpReal, b: &HpReal, bits: i64) -> bool {
        (a - b).abs() <= HpReal::one(a.precision_bits()).ldexp(-bits)
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(
            alpha_series(&CycleLengthSet::finite([1]), 3),
            RationalSeries::monomial(rat(1, 1), 1, 3)
        );
        assert_eq!(
            alpha_series(&CycleLengthSet::All, 4),
            RationalSeries::log_inv_one_minus_z(4)
        );
        assert_eq!(
            alpha_series(&CycleLengthSet::DivisorsOf(8), 8),
            RationalSeries::from_terms(
                8,
                [
                    (1, rat(1, 1)),
                    (2, rat(1, 2)),
                    (4, rat(1, 4)),
                    (8, rat(1, 8))
                ]
            )
        );
    }

    #[test]
    fn class_examples() {
        let all = class_egf_series(&CycleLengthSet::All, &CycleCountSet::All, 6).unwrap();
        assert!(all.coeffs().iter().all(|c| c.is_one()));
        let c = 3;
        let fixed =
            class_egf_series(&CycleLengthSet::finite([1]), &CycleCountSet::Exactly(c), 6).unwrap();
        assert_eq!(fixed, RationalSeries::monomial(rat(1, 6), 3, 6));
        let inv =
            class_egf_series(&CycleLengthSet::finite([1, 2]), &CycleCountSet::All, 4).unwrap();
        assert_eq!(inv.coeff(4).unwrap() * rat(24, 1), rat(10, 1));
    }

    #[test]
    fn set_membership() {
        assert!(CycleLengthSet::PerfectPowers(2).contains(49));
        assert!(!CycleLengthSet::PerfectPowers(3).contains(9));
        assert!(CycleLengthSet::PerfectPowers(3).contains(1));
        assert!(CycleLengthSet::all_except([4]).contains(3));
        assert!(!CycleLengthSet::DivisorsOf(12).contains(5));
        assert_eq!(
            CycleLengthSet::DivisorsOf(12).members_up_to(5),
            vec![1, 2, 3, 4]
        );
    }

    /// Exhaustive cycle-type tally of S_n: (set of lengths present, cycle count).
    fn cycle_types(n: usize) -> Vec<(Vec<usize>, usize)> {
        enumerate_sn(n)
            .unwrap()
            .map(|p| {
                let l = p.cycle_lengths();
                let c = l.len();
                (l, c)
            })
            .collect()
    }

    #[test]
    fn oracle_equivalence_small() {
        for n in 1..=5usize {
            let types = cycle_types(n);
            for amask in 0u32..(1 << 5) {
                let a: BTreeSet<u64> = (1..=5).filter(|i| amask & (1 << (i - 1)) != 0).collect();
                for bmask in 0u32..(1 << 6) {
                    let b: BTreeSet<u64> = (0..=5).filter(|i| bmask & (1 << i) != 0).collect();
                    let count = types
                        .iter()
                        .filter(|(l, c)| {
                            l.iter().all(|x| a.contains(&(*x as u64))) && b.contains(&(*c as u64))
                        })
                        .count();
                    let s = class_egf_series(
                        &CycleLengthSet::Finite(a.clone()),
                        &CycleCountSet::Finite(b),
                        n,
                    )
                    .unwrap();
                    let got = s.coeff(n).unwrap() * BigRational::from_integer(factorial(n as u64));
                    assert_eq!(got, rat(count as i64, 1));
                }
            }
        }
    }

    #[test]
    fn structured_examples() {
        let der = class_egf_structured(&CycleLengthSet::finite([1]), None).unwrap();
        assert_eq!(der.exp_poly, SparsePoly::from_terms([(1, rat(-1, 1))]));
        let e = const_e(P);
        assert!(within(
            &limit_probability(&der, P).unwrap(),
            &(&HpReal::one(P) / &e),
            120
        ));

        let no4 = class_egf_structured(&CycleLengthSet::finite([4]), None).unwrap();
        assert_eq!(
            limit_probability(&no4, P).unwrap().to_decimal_string(8),
            "0.77880078"
        );

        let d8 = class_egf_structured(&CycleLengthSet::DivisorsOf(8), None).unwrap();
        assert_eq!(
            d8.exp_poly,
            SparsePoly::from_terms([
                (1, rat(-1, 1)),
                (2, rat(-1, 2)),
                (4, rat(-1, 4)),
                (8, rat(-1, 8))
            ])
        );

        let two_fixed = class_egf_structured(&CycleLengthSet::finite([1]), Some(2)).unwrap();
        let expected = (&HpReal::one(P) / &e).div_int(2);
        assert!(within(
            &limit_probability(&two_fixed, P).unwrap(),
            &expected,
            120
        ));

        assert!(class_egf_structured(&CycleLengthSet::PerfectPowers(2), None).is_err());
    }

    #[test]
    fn degenerate_poles() {
        let mut f = class_egf_structured(&CycleLengthSet::finite([1]), None).unwrap();
        f.pole_order = 0;
        assert_eq!(limit_probability(&f, 64), Err(Error::DegenerateLimit("0")));
        f.pole_order = 2;
        assert_eq!(
            limit_probability(&f, 64),
            Err(Error::DegenerateLimit("infinity"))
        );
    }

    #[test]
    fn empty_prohibited_set_is_all_permutations() {
        let f = class_egf_structured(&CycleLengthSet::Finite(BTreeSet::new()), None).unwrap();
        assert!(f.expand(10).unwrap().coeffs().iter().all(|c| c.is_one()));
        assert_eq!(limit_probability(&f, 64).unwrap(), HpReal::one(64));
    }

    #[test]
    fn structured_expansion_matches_direct_series() {
        let n = 40;
        for prohibited in [vec![], vec![1], vec![4], vec![1, 2, 4, 8], vec![3, 5, 7]] {
            let f = class_egf_structured(&CycleLengthSet::finite(prohibited.iter().copied()), None)
                .unwrap();
            let direct = class_egf_series(
                &CycleLengthSet::all_except(prohibited.iter().copied()),
                &CycleCountSet::All,
                n,
            )
            .unwrap();
            assert_eq!(f.expand(n).unwrap(), direct, "{prohibited:?}");
        }
        // c fixed points: labelled product of c 1-cycles with a derangement.
        for c in 0..4u64 {
            let f = class_egf_structured(&CycleLengthSet::finite([1]), Some(c)).unwrap();
            let a = class_egf_series(&CycleLengthSet::finite([1]), &CycleCountSet::Exactly(c), n)
                .unwrap();
            let b =
                class_egf_series(&CycleLengthSet::all_except([1]), &CycleCountSet::All, n).unwrap();
            assert_eq!(f.expand(n).unwrap(), &a * &b);
        }
    }

    #[test]
    fn structured_limit_equals_product_formula() {
        for prohibited in [
            set(&[1]),
            set(&[2, 3]),
            set(&[1, 2, 4, 8]),
            set(&[5, 10, 20]),
        ] {
            let f =
                class_egf_structured(&CycleLengthSet::Finite(prohibited.clone()), None).unwrap();
            assert!(within(
                &limit_probability(&f, P).unwrap(),
                &prob_no_cycles_in(&prohibited, P),
                126
            ));
        }
    }

    #[test]
    fn no_cycles_examples() {
        assert_eq!(prob_no_cycles_in(&set(&[]), P), HpReal::one(P));
        assert_eq!(
            prob_no_cycles_in(&set(&[1]), P).to_decimal_string(8),
            "0.36787944"
        );
        assert_eq!(
            prob_no_cycles_in(&set(&[1, 2, 4, 8]), P).to_decimal_string(8),
            "0.15335497"
        );
    }

    #[test]
    fn joint_law_examples_and_normalisation() {
        let base = joint_prob_c1_c2(0, 0, P);
        assert_eq!(base.to_decimal_string(8), "0.15335497");
        assert_eq!(joint_prob_c1_c2(1, 1, P).to_decimal_string(8), "0.13418560");
        assert!(within(&joint_prob_c1_c2(2, 0, P), &base.div_int(2), 126));
        let total = (0..=40u64)
            .flat_map(|a| (0..=40u64).map(move |b| (a, b)))
            .fold(HpReal::zero(P), |acc, (a, b)| {
                &acc + &joint_prob_c1_c2(a, b, P)
            });
        let gap = (&HpReal::one(P) - &total).to_f64();
        assert!((0.0..1e-12).contains(&gap), "gap {gap}");
    }

    #[test]
    fn power_length_constants() {
        assert_eq!(
            prob_no_powerlength_cycles(2, P)
                .unwrap()
                .to_decimal_string(8),
            "0.19302529"
        );
        assert_eq!(
            prob_no_powerlength_cycles(3, P)
                .unwrap()
                .to_decimal_string(8),
            "0.30057532"
        );
        assert!(prob_no_powerlength_cycles(4, P).is_err());
    }

    #[test]
    fn squares_partial_sum_cross_check() {
        let partial: f64 = (1..=1_000_000u64)
            .map(|i| 1.0 / (i as f64 * i as f64))
            .sum();
        let approx = (-partial).exp();
        let exact = prob_no_powerlength_cycles(2, 64).unwrap().to_f64();
        assert!((approx - exact).abs() < 5e-6);
    }

    #[test]
    fn convergence_examples() {
        let f = class_egf_structured(&CycleLengthSet::finite([4]), None).unwrap();
        let rep = convergence_report(&f, 8, 128).unwrap();
        let limit = limit_probability(&f, 128).unwrap();
        assert_eq!(rep[0].2, (&HpReal::one(128) - &limit).abs());

        let der = class_egf_structured(&CycleLengthSet::finite([1]), None).unwrap();
        let rep = convergence_report(&der, 20, 128).unwrap();
        let bound = |n: u64| 1.0 / factorial(n).to_f64().unwrap();
        assert!(rep[8].2.to_f64() < bound(9));
        for (n, _, d) in rep.iter().skip(1) {
            assert!(d.to_f64() <= bound(*n as u64 + 1));
        }
        for w in rep.windows(2).skip(1) {
            assert!(w[1].2 < w[0].2);
        }
    }
}
