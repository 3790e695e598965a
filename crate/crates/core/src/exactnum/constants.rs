//! Mathematical constants from convergent series with explicit tail bounds.
//!
//! Each series is summed at a scale 24 bits finer than the requested one.
//! Summation stops at the first term that rounds to zero at that scale; the
//! tail bound for each series is stated next to it.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::hp::{atanh_scaled, div_round, shr_round, HpReal};

const EXTRA: u32 = 24;

fn work_scale(precision_bits: u32) -> u32 {
    precision_bits + super::DEFAULT_GUARD_BITS + EXTRA
}

/// `ln 2 = 2 atanh(1/3)` at scale `2^wf`.
///
/// Terms decrease by a factor of at least 9, so the tail after the last
/// nonzero term is below one ulp.
pub(crate) fn ln2_at_scale(wf: u32) -> BigInt {
    let w = wf + 8;
    let third = div_round(&(BigInt::one() << w), &BigInt::from(3));
    shr_round(&(atanh_scaled(&third, w) << 1u32), 8)
}

/// Euler's number from `sum 1/i!`. After stopping at term `i`, the tail is
/// below `2/(i+1)!`, i.e. under two ulps of the working scale.
pub fn const_e(precision_bits: u32) -> HpReal {
    let wf = work_scale(precision_bits);
    let mut term = BigInt::one() << wf;
    let mut sum = term.clone();
    let mut i: u32 = 1;
    while !term.is_zero() {
        term = div_round(&term, &BigInt::from(i));
        sum += &term;
        i += 1;
    }
    HpReal::from_scaled(&sum, wf, precision_bits)
}

pub fn const_ln2(precision_bits: u32) -> HpReal {
    let wf = work_scale(precision_bits);
    HpReal::from_scaled(&ln2_at_scale(wf), wf, precision_bits)
}

/// `atan(1/n)` at scale `2^wf`; alternating series with decreasing terms, so
/// the tail is bounded by the first omitted term.
fn atan_inv(n: u64, wf: u32) -> BigInt {
    let n = BigInt::from(n);
    let n2 = &n * &n;
    let mut power = div_round(&(BigInt::one() << wf), &n);
    let mut sum = power.clone();
    let mut j: u64 = 1;
    loop {
        power = div_round(&power, &n2);
        let term = div_round(&power, &BigInt::from(2 * j + 1));
        if term.is_zero() {
            break;
        }
        if j % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        j += 1;
    }
    sum
}

/// Machin's formula `pi = 16 atan(1/5) - 4 atan(1/239)`.
pub fn const_pi(precision_bits: u32) -> HpReal {
    let wf = work_scale(precision_bits);
    let pi = (atan_inv(5, wf) << 4u32) - (atan_inv(239, wf) << 2u32);
    HpReal::from_scaled(&pi, wf, precision_bits)
}

/// `zeta(2) = pi^2 / 6`.
pub fn const_zeta2(precision_bits: u32) -> HpReal {
    let p = precision_bits + EXTRA;
    let pi = const_pi(p);
    (&pi * &pi).div_int(6).with_precision(precision_bits)
}

/// Apery's constant via `zeta(3) = 5/2 sum_{n>=1} (-1)^(n+1) / (n^3 C(2n,n))`.
///
/// Consecutive terms shrink by a factor approaching 4 and alternate in sign,
/// so the tail is below the first omitted term (< 1 ulp at the stop point).
pub fn const_zeta3(precision_bits: u32) -> HpReal {
    let wf = work_scale(precision_bits);
    let one = BigInt::one() << wf;
    let mut central = BigInt::one(); // C(2n, n)
    let mut sum = BigInt::zero();
    let mut n: u64 = 1;
    loop {
        central = central * (2 * (2 * n - 1)) / n;
        let den = &central * BigInt::from(n * n * n);
        let term = div_round(&one, &den);
        if term.is_zero() {
            break;
        }
        if n % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        n += 1;
    }
    let z = shr_round(&(sum * 5), 1);
    HpReal::from_scaled(&z, wf, precision_bits)
}
