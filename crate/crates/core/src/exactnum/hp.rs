//! Binary fixed-point reals of arbitrary precision.
//!
//! A value is stored as `mantissa / 2^(precision_bits + guard_bits)`. Every
//! primitive operation rounds to nearest at the working scale, so each step
//! contributes at most one unit in the last place (`2^-(precision+guard)`).
//! With the default 32 guard bits a chain of up to 2^31 such steps on values
//! of magnitude below 2^16 stays within `2^-precision_bits` of the true value.
//! Transcendental functions run at an internally widened scale and round once
//! at the end, so they also contribute only a few ulps.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::constants::ln2_at_scale;
use crate::error::{domain, Result};

pub const DEFAULT_GUARD_BITS: u32 = 32;

#[derive(Clone)]
pub struct HpReal {
    mant: BigInt,
    precision_bits: u32,
}

/// Round-to-nearest `x / 2^shift` (ties away from zero).
pub(crate) fn shr_round(x: &BigInt, shift: u32) -> BigInt {
    if shift == 0 {
        return x.clone();
    }
    let half = BigInt::one() << (shift - 1);
    if x.is_negative() {
        -((-x + half) >> shift)
    } else {
        (x + half) >> shift
    }
}

/// Round-to-nearest `num / den` for `den > 0`.
pub(crate) fn div_round(num: &BigInt, den: &BigInt) -> BigInt {
    let (q, r) = num.div_mod_floor(den);
    if (r << 1u32) >= *den {
        q + 1
    } else {
        q
    }
}

impl HpReal {
    #[inline]
    fn frac_bits_for(precision_bits: u32) -> u32 {
        precision_bits + DEFAULT_GUARD_BITS
    }

    /// Raw constructor: `mant / 2^(precision_bits + guard)`.
    pub(crate) fn from_raw(mant: BigInt, precision_bits: u32) -> Self {
        HpReal {
            mant,
            precision_bits,
        }
    }

    /// Rescale a mantissa expressed with `from_frac` fractional bits.
    pub(crate) fn from_scaled(mant: &BigInt, from_frac: u32, precision_bits: u32) -> Self {
        let f = Self::frac_bits_for(precision_bits);
        let m = match from_frac.cmp(&f) {
            Ordering::Greater => shr_round(mant, from_frac - f),
            Ordering::Less => mant << (f - from_frac),
            Ordering::Equal => mant.clone(),
        };
        HpReal::from_raw(m, precision_bits)
    }

    pub fn zero(precision_bits: u32) -> Self {
        HpReal::from_raw(BigInt::zero(), precision_bits)
    }

    pub fn one(precision_bits: u32) -> Self {
        Self::from_int(1, precision_bits)
    }

    pub fn from_int(v: i64, precision_bits: u32) -> Self {
        Self::from_bigint(&BigInt::from(v), precision_bits)
    }

    pub fn from_bigint(v: &BigInt, precision_bits: u32) -> Self {
        HpReal::from_raw(v << Self::frac_bits_for(precision_bits), precision_bits)
    }

    /// Nearest representable value to an exact rational.
    pub fn from_rational(r: &BigRational, precision_bits: u32) -> Self {
        let scaled = r.numer() << Self::frac_bits_for(precision_bits);
        HpReal::from_raw(div_round(&scaled, r.denom()), precision_bits)
    }

    /// Exact conversion of a finite double (then rounded to the working scale).
    pub fn from_f64(v: f64, precision_bits: u32) -> Self {
        assert!(v.is_finite(), "HpReal::from_f64 on non-finite input");
        let r = BigRational::from_float(v).expect("finite f64");
        Self::from_rational(&r, precision_bits)
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn frac_bits(&self) -> u32 {
        Self::frac_bits_for(self.precision_bits)
    }

    /// Same value rounded or extended to another precision.
    pub fn with_precision(&self, precision_bits: u32) -> Self {
        Self::from_scaled(&self.mant, self.frac_bits(), precision_bits)
    }

    /// `2^-precision_bits`, the error bound claimed for this value.
    pub fn error_bound(&self) -> HpReal {
        HpReal::from_raw(BigInt::one() << DEFAULT_GUARD_BITS, self.precision_bits)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn abs(&self) -> Self {
        HpReal::from_raw(self.mant.abs(), self.precision_bits)
    }

    /// Exact rational value of the stored mantissa.
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mant.clone(), BigInt::one() << self.frac_bits())
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mant.bits();
        let (m, shift) = if bits > 60 {
            let s = (bits - 60) as u32;
            (shr_round(&self.mant, s), s as i64)
        } else {
            (self.mant.clone(), 0)
        };
        let m = m.to_f64().unwrap_or(0.0);
        let e = shift - self.frac_bits() as i64;
        m * 2f64.powi(e as i32)
    }

    /// Decimal expansion rounded to `digits` places after the point.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let ten_pow = num_traits::pow(BigInt::from(10u32), digits);
        let scaled = shr_round(&(&self.mant * ten_pow), self.frac_bits());
        let neg = scaled.is_negative();
        let s = scaled.abs().to_string();
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (int_part, frac_part) = s.split_at(s.len() - digits);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    fn align(&self, other: &HpReal) -> (BigInt, BigInt, u32) {
        let p = self.precision_bits.min(other.precision_bits);
        let a = if self.precision_bits == p {
            self.mant.clone()
        } else {
            self.with_precision(p).mant
        };
        let b = if other.precision_bits == p {
            other.mant.clone()
        } else {
            other.with_precision(p).mant
        };
        (a, b, p)
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        let num = &self.mant * r.numer();
        HpReal::from_raw(div_round(&num, r.denom()), self.precision_bits)
    }

    pub fn mul_int(&self, v: i64) -> Self {
        HpReal::from_raw(&self.mant * v, self.precision_bits)
    }

    pub fn div_int(&self, v: i64) -> Self {
        assert!(v != 0, "division by zero");
        let d = BigInt::from(v);
        let q = if d.is_negative() {
            div_round(&-&self.mant, &-d)
        } else {
            div_round(&self.mant, &d)
        };
        HpReal::from_raw(q, self.precision_bits)
    }

    /// Multiply by `2^e`.
    pub fn ldexp(&self, e: i64) -> Self {
        let m = if e >= 0 {
            &self.mant << (e as u64)
        } else {
            shr_round(&self.mant, (-e) as u32)
        };
        HpReal::from_raw(m, self.precision_bits)
    }

    pub fn exp(&self) -> HpReal {
        let f = self.frac_bits();
        let int_bits = (self.mant.abs() >> f).bits() as u32;
        // x / 2^s has magnitude below 2^-8.
        let s = int_bits + 8;
        // Positive arguments grow the result; keep the absolute error small.
        let growth = if self.is_positive() {
            (self.to_f64() * std::f64::consts::LOG2_E).ceil().max(0.0) as u32
        } else {
            0
        };
        let wf = f + s + growth + 24;
        let x = &self.mant << (wf - f);
        let r = shr_round(&x, s);
        let one = BigInt::one() << wf;
        let mut sum = one.clone();
        let mut term = one;
        let mut i: u64 = 1;
        loop {
            term = shr_round(&(&term * &r), wf);
            term = div_round_signed(&term, i);
            if term.is_zero() {
                break;
            }
            sum += &term;
            i += 1;
        }
        for _ in 0..s {
            sum = shr_round(&(&sum * &sum), wf);
        }
        HpReal::from_scaled(&sum, wf, self.precision_bits)
    }

    /// Natural logarithm; domain error for non-positive input.
    pub fn ln(&self) -> Result<HpReal> {
        if !self.is_positive() {
            return domain("logarithm of a non-positive number");
        }
        let f = self.frac_bits() as i64;
        let b = self.mant.bits() as i64;
        // x = m * 2^e with m in [1, 2)
        let e = b - 1 - f;
        let wf = (f as u32) + 32 + (64 - (e.unsigned_abs()).leading_zeros());
        let shift = wf as i64 - (b - 1);
        let m = if shift >= 0 {
            &self.mant << (shift as u64)
        } else {
            shr_round(&self.mant, (-shift) as u32)
        };
        let one = BigInt::one() << wf;
        let t_num = (&m - &one) << wf;
        let t = div_round(&t_num, &(&m + &one));
        let ln_m = atanh_scaled(&t, wf) << 1u32;
        let ln2 = ln2_at_scale(wf);
        let total = ln_m + ln2 * e;
        Ok(HpReal::from_scaled(&total, wf, self.precision_bits))
    }

    pub fn log2(&self) -> Result<HpReal> {
        let p = self.precision_bits + 16;
        let ln = self.with_precision(p).ln()?;
        let ln2 = HpReal::from_scaled(
            &ln2_at_scale(Self::frac_bits_for(p)),
            Self::frac_bits_for(p),
            p,
        );
        Ok((&ln / &ln2).with_precision(self.precision_bits))
    }

    /// `self^y` for positive `self` (or zero base with positive exponent).
    pub fn pow(&self, y: &HpReal) -> Result<HpReal> {
        if self.is_zero() {
            return if y.is_positive() {
                Ok(HpReal::zero(self.precision_bits))
            } else {
                domain("zero raised to a non-positive power")
            };
        }
        if self.is_negative() {
            return domain("negative base in real power");
        }
        let p = self.precision_bits.max(y.precision_bits) + 32;
        let l = self.with_precision(p).ln()?;
        Ok((&l * &y.with_precision(p))
            .exp()
            .with_precision(self.precision_bits.min(y.precision_bits)))
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, mut n: u32) -> HpReal {
        let mut base = self.clone();
        let mut acc = HpReal::one(self.precision_bits);
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }
}

fn div_round_signed(x: &BigInt, d: u64) -> BigInt {
    let d = BigInt::from(d);
    if x.is_negative() {
        -div_round(&-x, &d)
    } else {
        div_round(x, &d)
    }
}

/// `atanh(t)` for `|t| <= 1/3` with `t` given at scale `2^wf`.
pub(crate) fn atanh_scaled(t: &BigInt, wf: u32) -> BigInt {
    let t2 = shr_round(&(t * t), wf);
    let mut power = t.clone();
    let mut sum = t.clone();
    let mut j: u64 = 1;
    loop {
        power = shr_round(&(&power * &t2), wf);
        let term = div_round_signed(&power, 2 * j + 1);
        if term.is_zero() {
            break;
        }
        sum += term;
        j += 1;
    }
    sum
}

impl fmt::Debug for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HpReal({} @{}b)",
            self.to_decimal_string(20),
            self.precision_bits
        )
    }
}

impl fmt::Display for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f
            .precision()
            .unwrap_or(((self.precision_bits as f64) * std::f64::consts::LOG10_2) as usize);
        f.write_str(&self.to_decimal_string(digits))
    }
}

impl PartialEq for HpReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HpReal {}

impl PartialOrd for HpReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HpReal {
    /// Compares at the finer of the two scales, so no rounding is involved.
    fn cmp(&self, other: &Self) -> Ordering {
        let (fa, fb) = (self.frac_bits(), other.frac_bits());
        match fa.cmp(&fb) {
            Ordering::Equal => self.mant.cmp(&other.mant),
            Ordering::Less => (&self.mant << (fb - fa)).cmp(&other.mant),
            Ordering::Greater => self.mant.cmp(&(&other.mant << (fa - fb))),
        }
    }
}

impl Neg for HpReal {
    type Output = HpReal;
    fn neg(self) -> HpReal {
        HpReal::from_raw(-self.mant, self.precision_bits)
    }
}

impl Neg for &HpReal {
    type Output = HpReal;
    fn neg(self) -> HpReal {
        HpReal::from_raw(-&self.mant, self.precision_bits)
    }
}

impl Add for &HpReal {
    type Output = HpReal;
    fn add(self, rhs: &HpReal) -> HpReal {
        let (a, b, p) = self.align(rhs);
        HpReal::from_raw(a + b, p)
    }
}

impl Sub for &HpReal {
    type Output = HpReal;
    fn sub(self, rhs: &HpReal) -> HpReal {
        let (a, b, p) = self.align(rhs);
        HpReal::from_raw(a - b, p)
    }
}

impl Mul for &HpReal {
    type Output = HpReal;
    fn mul(self, rhs: &HpReal) -> HpReal {
        let (a, b, p) = self.align(rhs);
        HpReal::from_raw(shr_round(&(a * b), HpReal::frac_bits_for(p)), p)
    }
}

impl Div for &HpReal {
    type Output = HpReal;
    fn div(self, rhs: &HpReal) -> HpReal {
        assert!(!rhs.is_zero(), "HpReal division by zero");
        let (a, b, p) = self.align(rhs);
        let num = a << HpReal::frac_bits_for(p);
        let q = if b.sign() == Sign::Minus {
            div_round_signed_big(&-num, &-b)
        } else {
            div_round_signed_big(&num, &b)
        };
        HpReal::from_raw(q, p)
    }
}

fn div_round_signed_big(num: &BigInt, den: &BigInt) -> BigInt {
    if num.is_negative() {
        -div_round(&-num, den)
    } else {
        div_round(num, den)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for HpReal {
            type Output = HpReal;
            fn $m(self, rhs: HpReal) -> HpReal {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&HpReal> for HpReal {
            type Output = HpReal;
            fn $m(self, rhs: &HpReal) -> HpReal {
                (&self).$m(rhs)
            }
        }
        impl $tr<HpReal> for &HpReal {
            type Output = HpReal;
            fn $m(self, rhs: HpReal) -> HpReal {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    const P: u32 = 128;

    fn close(a: &HpReal, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(HpReal::zero(P).exp(), HpReal::one(P));
    }

    #[test]
    fn exp_examples() {
        let a = HpReal::from_rational(&rat(-15, 8), P).exp();
        assert_eq!(a.to_decimal_string(8), "0.15335497");
        let b = HpReal::from_rational(&rat(-1, 4), P).exp();
        assert_eq!(b.to_decimal_string(8), "0.77880078");
        let c = HpReal::from_int(10, P).exp();
        assert!(close(&c, 22026.465794806718, 1e-9));
    }

    #[test]
    fn exp_ln_roundtrip() {
        for v in [rat(1, 1000), rat(1, 3), rat(7, 2), rat(12345, 7)] {
            let x = HpReal::from_rational(&v, P);
            let back = x.ln().unwrap().exp();
            let err = (&back - &x).abs();
            let rel = (&err / &x).to_f64();
            assert!(rel < 1e-30, "{v}: rel err {rel}");
        }
    }

    #[test]
    fn log2_and_pow() {
        let eight = HpReal::from_int(8, P);
        assert!(close(&eight.log2().unwrap(), 3.0, 1e-30));
        let two = HpReal::from_int(2, P);
        let half = HpReal::from_rational(&rat(1, 2), P);
        assert!(close(
            &two.pow(&half).unwrap(),
            std::f64::consts::SQRT_2,
            1e-15
        ));
        assert!(HpReal::zero(P).log2().is_err());
        assert!(HpReal::from_int(-1, P).ln().is_err());
        assert_eq!(
            HpReal::from_rational(&rat(3, 2), P).powi(3).to_rational(),
            rat(27, 8)
        );
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(
            HpReal::from_rational(&rat(-1, 8), 64).to_decimal_string(3),
            "-0.125"
        );
        assert_eq!(
            HpReal::from_rational(&rat(2, 3), 64).to_decimal_string(4),
            "0.6667"
        );
        assert_eq!(HpReal::from_int(42, 64).to_decimal_string(0), "42");
    }

    #[test]
    fn ordering_across_precisions() {
        let a = HpReal::from_rational(&rat(1, 3), 64);
        let b = HpReal::from_rational(&rat(1, 3), 256);
        assert!((&a - &b).abs() <= a.error_bound());
        assert!(HpReal::from_int(1, 64) < HpReal::from_int(2, 256));
    }
}
