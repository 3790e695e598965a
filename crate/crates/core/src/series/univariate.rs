use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;

use crate::error::{domain, Result};
use crate::exactnum::HpReal;
use crate::scalar::Scalar;

/// A power series known exactly up to and including `z^order`.
///
/// Binary operations on series of different orders truncate to the smaller
/// order; every stored coefficient is the true coefficient of the represented
/// series.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> TruncatedSeries<T> {
    /// Series with the given coefficients; `order = coeffs.len() - 1`.
    ///
    /// # Panics
    /// On an empty coefficient vector.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a truncated series needs at least one coefficient"
        );
        TruncatedSeries { coeffs }
    }

    pub fn from_fn(order: usize, f: impl FnMut(usize) -> T) -> Self {
        TruncatedSeries::new((0..=order).map(f).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self::from_fn(order, |_| T::zero())
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(T::one(), 0, order)
    }

    /// `c z^degree` truncated at `order` (zero if `degree > order`).
    pub fn monomial(c: T, degree: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if degree <= order {
            s.coeffs[degree] = c;
        }
        s
    }

    /// Polynomial from `(degree, coefficient)` terms; terms above `order` drop.
    pub fn from_terms(order: usize, terms: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut s = Self::zero(order);
        for (d, c) in terms {
            if d <= order {
                s.coeffs[d] = s.coeffs[d].clone() + c;
            }
        }
        s
    }

    /// `log(1/(1-z)) = sum_{i>=1} z^i / i`.
    pub fn log_inv_one_minus_z(order: usize) -> Self {
        Self::from_fn(order, |i| {
            if i == 0 {
                T::zero()
            } else {
                T::from_ratio(1, i as i64)
            }
        })
    }

    /// `1/(1-z) = sum z^i`.
    pub fn geometric(order: usize) -> Self {
        Self::from_fn(order, |_| T::one())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `z^i`; domain error beyond the truncation order.
    pub fn coeff(&self, i: usize) -> Result<T> {
        match self.coeffs.get(i) {
            Some(c) => Ok(c.clone()),
            None => domain(format!(
                "coefficient {i} requested from a series of order {}",
                self.order()
            )),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        TruncatedSeries::new(self.coeffs[..=order].to_vec())
    }

    pub fn scale(&self, r: &T) -> Self {
        TruncatedSeries::new(self.coeffs.iter().map(|c| c.clone() * r.clone()).collect())
    }

    fn nonzero_terms(&self) -> Vec<(usize, &T)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect()
    }

    /// Cauchy product; zero coefficients of either side are skipped.
    pub fn mul_series(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![T::zero(); n + 1];
        let rhs = other.nonzero_terms();
        for (i, a) in self.nonzero_terms() {
            if i > n {
                break;
            }
            for &(j, b) in &rhs {
                if i + j > n {
                    break;
                }
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        TruncatedSeries::new(out)
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one(self.order());
        for _ in 0..k {
            acc = acc.mul_series(self);
        }
        acc
    }

    /// `exp` of a series with zero constant term.
    ///
    /// Uses `(exp a)' = a' exp a`, i.e. `n b_n = sum_{i=1}^n i a_i b_{n-i}`,
    /// visiting only the nonzero `a_i`.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return domain("exp of a series requires a zero constant term");
        }
        let n = self.order();
        let weighted: Vec<(usize, T)> = self
            .nonzero_terms()
            .into_iter()
            .map(|(i, a)| (i, a.clone() * T::from_ratio(i as i64, 1)))
            .collect();
        let mut b = Vec::with_capacity(n + 1);
        b.push(T::one());
        for m in 1..=n {
            let mut acc = T::zero();
            for (i, ia) in &weighted {
                if *i > m {
                    break;
                }
                acc = acc + ia.clone() * b[m - i].clone();
            }
            b.push(acc * T::from_ratio(1, m as i64));
        }
        Ok(TruncatedSeries::new(b))
    }

    /// Formal derivative; exact to one order less than the input.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self::from_fn(self.order() - 1, |i| {
            self.coeffs[i + 1].clone() * T::from_ratio(i as i64 + 1, 1)
        })
    }

    /// `outer(inner(z))`; the inner series must have zero constant term.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return domain("composition requires the inner series to have a zero constant term");
        }
        let n = outer.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = Self::zero(n);
        for c in outer.coeffs[..=n].iter().rev() {
            acc = acc.mul_series(&inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + c.clone();
        }
        Ok(acc)
    }

    /// Multiply by `1 - z`.
    pub fn mul_one_minus_z(&self) -> Self {
        Self::from_fn(self.order(), |i| {
            if i == 0 {
                self.coeffs[0].clone()
            } else {
                self.coeffs[i].clone() - self.coeffs[i - 1].clone()
            }
        })
    }

    /// Divide by `1 - z` (prefix sums of the coefficients).
    pub fn div_one_minus_z(&self) -> Self {
        let mut acc = T::zero();
        Self::from_fn(self.order(), |i| {
            acc = acc.clone() + self.coeffs[i].clone();
            acc.clone()
        })
    }

    /// Sum of the stored coefficients (the truncated polynomial at `z = 1`).
    pub fn sum_coeffs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, c| a + c.clone())
    }
}

impl TruncatedSeries<BigRational> {
    /// Evaluate the truncated polynomial at a high-precision point (Horner).
    pub fn eval_hp(&self, point: &HpReal) -> HpReal {
        let p = point.precision_bits();
        let mut acc = HpReal::zero(p);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * point) + &HpReal::from_rational(c, p);
        }
        acc
    }
}

impl<T: Scalar> Add for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn add(self, rhs: Self) -> TruncatedSeries<T> {
        let n = self.order().min(rhs.order());
        TruncatedSeries::from_fn(n, |i| self.coeffs[i].clone() + rhs.coeffs[i].clone())
    }
}

impl<T: Scalar> Sub for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn sub(self, rhs: Self) -> TruncatedSeries<T> {
        let n = self.order().min(rhs.order());
        TruncatedSeries::from_fn(n, |i| self.coeffs[i].clone() - rhs.coeffs[i].clone())
    }
}

impl<T: Scalar> Mul for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn mul(self, rhs: Self) -> TruncatedSeries<T> {
        self.mul_series(rhs)
    }
}

impl<T: Scalar> Neg for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn neg(self) -> TruncatedSeries<T> {
        TruncatedSeries::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for TruncatedSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(z^{})", self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{factorial, rat};
    use crate::RationalSeries;
    use num_bigint::BigInt;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn poly(order: usize, terms: &[(usize, i64, i64)]) -> RationalSeries {
        RationalSeries::from_terms(order, terms.iter().map(|&(d, n, q)| (d, rat(n, q))))
    }

    #[test]
    fn square_of_one_plus_z() {
        let a = poly(2, &[(0, 1, 1), (1, 1, 1)]);
        assert_eq!(&a * &a, poly(2, &[(0, 1, 1), (1, 2, 1), (2, 1, 1)]));
    }

    #[test]
    fn one_is_multiplicative_identity() {
        let f = poly(5, &[(0, 3, 7), (2, -1, 2), (5, 9, 4)]);
        assert_eq!(&f * &RationalSeries::one(5), f);
    }

    #[test]
    fn exp_of_z() {
        let e = poly(6, &[(1, 1, 1)]).exp().unwrap();
        for i in 0..=6u64 {
            assert_eq!(
                e.coeff(i as usize).unwrap(),
                BigRational::new(BigInt::one(), factorial(i))
            );
        }
    }

    #[test]
    fn exp_rejects_constant_term() {
        assert!(poly(3, &[(0, 1, 1)]).exp().is_err());
    }

    #[test]
    fn log_series_and_its_exp() {
        let l = RationalSeries::log_inv_one_minus_z(4);
        assert_eq!(
            l.coeffs(),
            &[rat(0, 1), rat(1, 1), rat(1, 2), rat(1, 3), rat(1, 4)]
        );
        assert_eq!(
            RationalSeries::log_inv_one_minus_z(0).coeffs(),
            &[rat(0, 1)]
        );
        let e = RationalSeries::log_inv_one_minus_z(200).exp().unwrap();
        assert_eq!(e.order(), 200);
        assert!(e.coeffs().iter().all(|c| c.is_one()));
    }

    #[test]
    fn one_fixed_point_times_derangements() {
        // S_4 has exactly 8 permutations with a single fixed point.
        let der = (&RationalSeries::log_inv_one_minus_z(4) - &poly(4, &[(1, 1, 1)]))
            .exp()
            .unwrap();
        assert_eq!(der.coeff(4).unwrap() * rat(24, 1), rat(9, 1));
        let one_fixed = &poly(4, &[(1, 1, 1)]) * &der;
        assert_eq!(one_fixed.coeff(4).unwrap() * rat(24, 1), rat(8, 1));
    }

    #[test]
    fn compose_exp_with_z_squared() {
        let e = poly(8, &[(1, 1, 1)]).exp().unwrap();
        let sq = poly(8, &[(2, 1, 1)]);
        let c = RationalSeries::compose(&e, &sq).unwrap();
        assert_eq!(
            c,
            poly(8, &[(0, 1, 1), (2, 1, 1), (4, 1, 2), (6, 1, 6), (8, 1, 24)])
        );
        assert!(RationalSeries::compose(&e, &poly(8, &[(0, 1, 1)])).is_err());
    }

    #[test]
    fn derivative_and_coeff_bounds() {
        assert_eq!(poly(3, &[(3, 1, 3)]).derivative(), poly(2, &[(2, 1, 1)]));
        assert!(poly(3, &[]).coeff(4).is_err());
    }

    #[test]
    fn one_minus_z_roundtrip() {
        let f = poly(6, &[(0, 1, 2), (3, -4, 3), (6, 1, 1)]);
        assert_eq!(f.div_one_minus_z().mul_one_minus_z(), f);
    }

    #[test]
    fn eval_hp_of_polynomial() {
        let f = poly(2, &[(0, 1, 1), (1, 1, 2), (2, 1, 4)]);
        let v = f.eval_hp(&HpReal::from_rational(&rat(1, 2), 64));
        assert_eq!(v.to_rational(), rat(21, 16));
    }

    #[test]
    fn float_instantiation_tracks_rational() {
        let l = crate::F64Series::log_inv_one_minus_z(10);
        let e = (&l - &crate::F64Series::monomial(1.0, 1, 10))
            .exp()
            .unwrap();
        assert!((e.coeffs()[10] - 0.36787946428571).abs() < 1e-12);
    }

    fn arb_zero_const(order: usize) -> impl Strategy<Value = RationalSeries> {
        proptest::collection::vec((-6i64..=6, 1i64..=5), order).prop_map(move |v| {
            let mut c = vec![BigRational::zero()];
            c.extend(v.into_iter().map(|(n, d)| rat(n, d)));
            RationalSeries::new(c)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exp_turns_sums_into_products(a in arb_zero_const(16), b in arb_zero_const(16)) {
            let lhs = (&a + &b).exp().unwrap();
            let rhs = &a.exp().unwrap() * &b.exp().unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn exp_derivative_identity(a in arb_zero_const(16)) {
            let e = a.exp().unwrap();
            prop_assert_eq!(e.derivative(), &a.derivative() * &e);
        }

        #[test]
        fn composition_is_associative(
            f in arb_zero_const(10),
            g in arb_zero_const(10),
            h in arb_zero_const(10),
        ) {
            let fg = RationalSeries::compose(&f, &g).unwrap();
            let gh = RationalSeries::compose(&g, &h).unwrap();
            prop_assert_eq!(
                RationalSeries::compose(&fg, &h).unwrap(),
                RationalSeries::compose(&f, &gh).unwrap()
            );
        }
    }
}
