//! Exact rationals, fixed-point high-precision reals and divisor arithmetic.

mod constants;
mod divisors;
mod hp;

pub use constants::{const_e, const_ln2, const_pi, const_zeta2, const_zeta3};
pub use divisors::{divisor_profile, tau, DivisorProfile};
pub use hp::{HpReal, DEFAULT_GUARD_BITS};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// `num/den` as an exact rational.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `n!` for `n = 0..=max`.
pub fn factorials(max: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = BigInt::one();
    out.push(acc.clone());
    for i in 1..=max {
        acc *= i;
        out.push(acc.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn arb_rat() -> impl Strategy<Value = BigRational> {
        (-10_000i64..10_000, 1i64..10_000).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn add_sub_and_mul_div_are_exact(a in arb_rat(), b in arb_rat()) {
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            if !b.is_zero() {
                prop_assert_eq!(&(&a * &b) / &b, a);
            }
        }
    }

    #[test]
    fn rationals_stay_reduced() {
        let r = rat(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
    }

    #[test]
    fn factorial_table() {
        let f = factorials(10);
        assert_eq!(f[0], BigInt::one());
        assert_eq!(f[10], BigInt::from(3_628_800));
        assert_eq!(factorial(20), BigInt::from(2_432_902_008_176_640_000u64));
    }
}
