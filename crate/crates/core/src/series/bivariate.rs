use std::collections::BTreeMap;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

use super::TruncatedSeries;

/// Sparse series in `y` and `z`, exact for all monomials `y^s z^t` with
/// `s + t <= order`. Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateSeries<T> {
    terms: BTreeMap<(usize, usize), T>,
    order: usize,
}

impl<T: Scalar> BivariateSeries<T> {
    pub fn zero(order: usize) -> Self {
        BivariateSeries {
            terms: BTreeMap::new(),
            order,
        }
    }

    pub fn one(order: usize) -> Self {
        Self::from_terms(order, [((0, 0), T::one())])
    }

    pub fn from_terms(order: usize, terms: impl IntoIterator<Item = ((usize, usize), T)>) -> Self {
        let mut out = Self::zero(order);
        for ((s, t), c) in terms {
            out.add_term(s, t, c);
        }
        out
    }

    /// Embed a univariate series in `z`.
    pub fn from_z(series: &TruncatedSeries<T>) -> Self {
        let order = series.order();
        Self::from_terms(
            order,
            series
                .coeffs()
                .iter()
                .cloned()
                .enumerate()
                .map(|(t, c)| ((0, t), c)),
        )
    }

    /// Embed a univariate series in `y`.
    pub fn from_y(series: &TruncatedSeries<T>) -> Self {
        let order = series.order();
        Self::from_terms(
            order,
            series
                .coeffs()
                .iter()
                .cloned()
                .enumerate()
                .map(|(s, c)| ((s, 0), c)),
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_term(&mut self, s: usize, t: usize, c: T) {
        if s + t > self.order || c.is_zero() {
            return;
        }
        let slot = self.terms.entry((s, t)).or_insert_with(T::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.terms.remove(&(s, t));
        }
    }

    pub fn coeff(&self, s: usize, t: usize) -> Result<T> {
        if s + t > self.order {
            return domain(format!(
                "coefficient y^{s} z^{t} lies beyond total degree {}",
                self.order
            ));
        }
        Ok(self.terms.get(&(s, t)).cloned().unwrap_or_else(T::zero))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &T)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.order.min(other.order));
        for (&(s, t), c) in self.terms.iter().chain(other.terms.iter()) {
            out.add_term(s, t, c.clone());
        }
        out
    }

    pub fn scale(&self, r: &T) -> Self {
        Self::from_terms(
            self.order,
            self.terms.iter().map(|(&k, c)| (k, c.clone() * r.clone())),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.order.min(other.order));
        for (&(s1, t1), a) in &self.terms {
            for (&(s2, t2), b) in &other.terms {
                out.add_term(s1 + s2, t1 + t2, a.clone() * b.clone());
            }
        }
        out
    }

    fn homogeneous_parts(&self) -> Vec<Vec<((usize, usize), T)>> {
        let mut parts = vec![Vec::new(); self.order + 1];
        for (&(s, t), c) in &self.terms {
            parts[s + t].push(((s, t), c.clone()));
        }
        parts
    }

    /// `exp` of a series with zero constant term.
    ///
    /// With `D = y d/dy + z d/dz` (total degree operator), `D e^A = (D A) e^A`,
    /// so the degree-`n` part satisfies `n B_n = sum_j j A_j B_{n-j}`.
    pub fn exp(&self) -> Result<Self> {
        if self.terms.contains_key(&(0, 0)) {
            return domain("exp of a bivariate series requires a zero constant term");
        }
        let a = self.homogeneous_parts();
        let mut b: Vec<BTreeMap<(usize, usize), T>> = Vec::with_capacity(self.order + 1);
        b.push(BTreeMap::from([((0, 0), T::one())]));
        for n in 1..=self.order {
            let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
            for (j, part) in a.iter().enumerate().take(n + 1).skip(1) {
                if part.is_empty() {
                    continue;
                }
                let w = T::from_ratio(j as i64, n as i64);
                for ((s1, t1), x) in part {
                    let wx = x.clone() * w.clone();
                    for (&(s2, t2), y) in &b[n - j] {
                        let slot = acc.entry((s1 + s2, t1 + t2)).or_insert_with(T::zero);
                        *slot = slot.clone() + wx.clone() * y.clone();
                    }
                }
            }
            acc.retain(|_, c| !c.is_zero());
            b.push(acc);
        }
        Ok(BivariateSeries {
            terms: b.into_iter().flatten().collect(),
            order: self.order,
        })
    }

    /// Partial derivative in `y`; exact to total degree `order - 1`.
    pub fn partial_y(&self) -> Self {
        let order = self.order.saturating_sub(1);
        Self::from_terms(
            order,
            self.terms
                .iter()
                .filter(|(&(s, _), _)| s > 0)
                .map(|(&(s, t), c)| ((s - 1, t), c.clone() * T::from_ratio(s as i64, 1))),
        )
    }

    /// Substitute `y := z`.
    pub fn diagonal(&self) -> TruncatedSeries<T> {
        let mut out = vec![T::zero(); self.order + 1];
        for (&(s, t), c) in &self.terms {
            out[s + t] = out[s + t].clone() + c.clone();
        }
        TruncatedSeries::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use crate::RationalSeries;
    use num_rational::BigRational;
    use num_traits::One;

    type Bv = BivariateSeries<BigRational>;

    #[test]
    fn partial_y_of_y2z() {
        let a = Bv::from_terms(3, [((2, 1), rat(1, 1))]);
        assert_eq!(a.partial_y(), Bv::from_terms(2, [((1, 1), rat(2, 1))]));
    }

    #[test]
    fn diagonal_of_y_plus_z() {
        let a = Bv::from_terms(2, [((1, 0), rat(1, 1)), ((0, 1), rat(1, 1))]);
        assert_eq!(a.diagonal(), RationalSeries::monomial(rat(2, 1), 1, 2));
    }

    #[test]
    fn exponent_vanishing_on_diagonal() {
        // exp(sum_{i|2} (y^i - z^i)/i) is identically 1 once y = z.
        let a = Bv::from_terms(
            8,
            [
                ((1, 0), rat(1, 1)),
                ((0, 1), rat(-1, 1)),
                ((2, 0), rat(1, 2)),
                ((0, 2), rat(-1, 2)),
            ],
        );
        assert_eq!(a.exp().unwrap().diagonal(), RationalSeries::one(8));
    }

    #[test]
    fn exp_matches_univariate_in_each_variable() {
        let l = RationalSeries::log_inv_one_minus_z(7);
        let ey = Bv::from_y(&l).exp().unwrap();
        for s in 0..=7 {
            assert!(ey.coeff(s, 0).unwrap().is_one());
            assert_eq!(ey.coeff(0, s).unwrap(), rat(if s == 0 { 1 } else { 0 }, 1));
        }
    }

    #[test]
    fn exp_of_sum_is_product() {
        let y = Bv::from_terms(6, [((1, 0), rat(1, 1)), ((2, 0), rat(1, 3))]);
        let z = Bv::from_terms(6, [((0, 1), rat(-2, 1)), ((1, 1), rat(1, 5))]);
        assert_eq!(
            y.add(&z).exp().unwrap(),
            y.exp().unwrap().mul(&z.exp().unwrap())
        );
    }

    #[test]
    fn bounds_and_constant_term() {
        let a = Bv::one(2);
        assert!(a.exp().is_err());
        assert!(a.coeff(2, 1).is_err());
    }
}
