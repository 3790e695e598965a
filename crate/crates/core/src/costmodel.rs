//! Success probabilities and work estimates for fixed-point attacks.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::exactnum::{divisor_profile, factorial, rat, HpReal};
use crate::fixpoints::pgf_eval;

/// Smallest `m` with `m! > 2^bits`.
fn factorial_cutoff(bits: u32) -> u64 {
    let target = BigInt::one() << bits;
    let mut f = BigInt::one();
    let mut m = 1u64;
    while f <= target {
        m += 1;
        f *= m;
    }
    m
}

/// Probability that at least two fixed points of a random permutation land
/// in a known fraction `eta` of the domain, marginalized over the
/// `1/(c! e)` law of the fixed-point count.
pub fn bard_success(eta: &HpReal, precision_bits: u32) -> Result<HpReal> {
    let one = HpReal::one(eta.precision_bits());
    if eta.is_negative() || *eta > one {
        return domain("bard_success needs 0 <= eta <= 1");
    }
    let work = precision_bits + 32;
    let eta = eta.with_precision(work);
    let one = HpReal::one(work);
    let q = &one - &eta;
    let cut = factorial_cutoff(work + 2);
    let mut sum = HpReal::zero(work);
    // q^(c-1), starting at c = 2
    let mut q_prev = q.clone();
    for c in 2..=cut {
        let q_c = &q_prev * &q;
        let bracket = &(&one - &q_c) - &(&eta * &q_prev).mul_int(c as i64);
        sum = &sum + &bracket.mul_rational(&BigRational::new(BigInt::one(), factorial(c)));
        q_prev = q_c;
    }
    // the neglected terms total at most 2/(cut+1)! < 2^-(work+1)
    let e_inv = HpReal::from_int(-1, work).exp();
    Ok((&sum * &e_inv).with_precision(precision_bits))
}

/// Rows of the success table for `eta = 10%, 20%, ..., 100%`.
pub fn bard_table(precision_bits: u32) -> Vec<(u32, HpReal)> {
    (1..=10u32)
        .map(|i| {
            let eta = HpReal::from_rational(&rat(i as i64, 10), precision_bits + 8);
            (
                10 * i,
                bard_success(&eta, precision_bits).expect("eta in range"),
            )
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HalfSuccess {
    /// `eta` with `bard_success(eta) = bard_success(1) / 2`, the success
    /// probability conditional on at least two fixed points existing.
    pub conditional: HpReal,
    /// `eta` with `bard_success(eta) = 1/2`, if it exists in `[0, 1]`.
    pub unconditional: Option<HpReal>,
    pub max_success: HpReal,
}

fn bisect(target: &HpReal, precision_bits: u32) -> HpReal {
    let work = precision_bits + 8;
    let mut lo = HpReal::zero(work);
    let mut hi = HpReal::one(work);
    for _ in 0..precision_bits + 2 {
        let mid = (&lo + &hi).ldexp(-1);
        if bard_success(&mid, precision_bits + 16).expect("eta in range") < *target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (&lo + &hi).ldexp(-1).with_precision(precision_bits)
}

/// Solves for the codebook fraction at which the attack works half the time,
/// under both readings of "half".
pub fn bard_half_success_eta(precision_bits: u32) -> HalfSuccess {
    let p = precision_bits + 16;
    let max_success = bard_success(&HpReal::one(p), p).expect("eta in range");
    let half = HpReal::from_rational(&rat(1, 2), p);
    let conditional = bisect(&max_success.ldexp(-1), precision_bits);
    let unconditional = if max_success >= half {
        Some(bisect(&half, precision_bits))
    } else {
        None
    };
    HalfSuccess {
        conditional,
        unconditional,
        max_success: max_success.with_precision(precision_bits),
    }
}

/// `tau(k) * fraction`: fixed points of `pi^k` expected in a searched
/// fraction of the domain.
pub fn expected_fixpoints_in_fraction(k: u64, fraction: &BigRational) -> Result<BigRational> {
    if !(fraction.is_positive() && *fraction <= BigRational::one()) {
        return domain("search fraction must lie in (0, 1]");
    }
    Ok(BigRational::from_integer(divisor_profile(k)?.tau.into()) * fraction)
}

/// Correct-guess rate of the distinguisher when cipher and random
/// permutation are equally likely.
pub fn distinguisher_accuracy(p_found_cipher: f64, p_no_fix_random: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_found_cipher) || !(0.0..=1.0).contains(&p_no_fix_random) {
        return domain("probabilities must lie in [0, 1]");
    }
    Ok(0.5 * p_found_cipher + 0.5 * p_no_fix_random)
}

/// Inputs of the fixed-point distinguisher against `pi^k`.
#[derive(Clone, Debug, Serialize)]
pub struct DistinguisherSetting {
    pub k: u64,
    pub search_fraction: f64,
    pub p_no_fix_random: f64,
    pub p_no_fix_cipher: f64,
}

impl DistinguisherSetting {
    /// Probabilities of finding no fixed point from the limiting law: a
    /// search of fraction `s` misses each fixed point with probability
    /// about `e^(-s)`, so the miss probability is the generating function
    /// at `e^(-s)`.
    pub fn theoretical(k: u64, fraction: &BigRational, precision_bits: u32) -> Result<Self> {
        if !(fraction.is_positive() && *fraction <= BigRational::one()) {
            return domain("search fraction must lie in (0, 1]");
        }
        let x = HpReal::from_rational(&-fraction.clone(), precision_bits).exp();
        Ok(DistinguisherSetting {
            k,
            search_fraction: HpReal::from_rational(fraction, 64).to_f64(),
            p_no_fix_random: pgf_eval(1, &x, precision_bits)?.to_f64(),
            p_no_fix_cipher: pgf_eval(k, &x, precision_bits)?.to_f64(),
        })
    }

    pub fn accuracy(&self) -> f64 {
        distinguisher_accuracy(1.0 - self.p_no_fix_cipher, self.p_no_fix_random)
            .expect("probabilities in range")
    }
}

/// Per-run pass rates of the outer-key filter: a wrong key survives a run
/// with `p_wrong`, the right one with `p_right`.
#[derive(Clone, Debug, Serialize)]
pub struct KeyRecoveryModel {
    pub p_wrong: f64,
    pub p_right: f64,
    /// Iteration count of the inner cipher.
    pub iterations: u64,
    pub key_bits: u32,
    pub block_bits: u32,
    /// Fraction of the plaintext space searched per run.
    pub search_fraction: (i64, i64),
    /// Plaintexts checked per surviving key pair in the second stage.
    pub confirmations: u64,
}

impl KeyRecoveryModel {
    /// Pass rates measured by simulation for `k = 1` and `k = 1081080`.
    pub fn empirical() -> Self {
        KeyRecoveryModel {
            p_wrong: 0.014959,
            p_right: 0.581665,
            iterations: 1_081_080,
            key_bits: 256,
            block_bits: 128,
            search_fraction: (1, 64),
            confirmations: 6,
        }
    }

    /// Pass rates from the limiting fixed-point law instead.
    pub fn theoretical(precision_bits: u32) -> Result<Self> {
        let base = Self::empirical();
        let s = DistinguisherSetting::theoretical(base.iterations, &rat(1, 64), precision_bits)?;
        Ok(KeyRecoveryModel {
            p_wrong: 1.0 - s.p_no_fix_random,
            p_right: 1.0 - s.p_no_fix_cipher,
            ..base
        })
    }
}

/// Work and success of the two-stage key recovery after `runs` filter runs,
/// as base-2 logarithms.
#[derive(Clone, Debug, Serialize)]
pub struct KeyRecoveryCost {
    pub runs: u32,
    pub stage1_log2: f64,
    pub stage2_log2: f64,
    pub total_log2: f64,
    pub success_probability: f64,
    pub success_log2: f64,
    pub candidate_list_log2: f64,
    /// Brute force over both keys scaled to the same success probability.
    pub brute_force_equal_success_log2: f64,
    /// `brute_force_equal_success_log2 - total_log2`.
    pub speedup_log2: f64,
    /// With no runs nothing is filtered: every outer key stays a candidate.
    pub no_filtering: bool,
}

fn hp(v: f64, p: u32) -> HpReal {
    HpReal::from_f64(v, p)
}

fn log2_sum(a: &HpReal, b: &HpReal, p: u32) -> HpReal {
    // log2(2^a + 2^b)
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let two = HpReal::from_int(2, p);
    let rest = two.pow(&(lo - hi)).expect("positive base");
    hi + &(&HpReal::one(p) + &rest).log2().expect("positive")
}

/// Stage one runs the distinguisher for every outer key still on the list,
/// `(iterations + 4)` encryptions per searched plaintext; stage two tries
/// every inner key against each survivor, `confirmations * 2 *
/// (iterations + 2)` encryptions per pair.
pub fn key_recovery_cost(
    runs: u32,
    model: &KeyRecoveryModel,
    precision_bits: u32,
) -> Result<KeyRecoveryCost> {
    if !(model.p_wrong > 0.0 && model.p_wrong < 1.0 && model.p_right > 0.0 && model.p_right <= 1.0)
    {
        return domain("pass rates must lie in (0, 1)");
    }
    let p = precision_bits + 32;
    let n = runs as i64;
    let kb = model.key_bits as i64;
    let r = hp(model.p_wrong, p);
    let one = HpReal::one(p);
    let lr = r.log2()?;
    let (fn_, fd) = model.search_fraction;
    let searched = HpReal::from_rational(&rat(fn_, fd), p).log2()?
        + HpReal::from_int(model.block_bits as i64, p);
    let geometric = (&one - &r.powi(runs + 1)) / (&one - &r);
    let stage1 = HpReal::from_int(model.iterations as i64 + 4, p).log2()?
        + searched
        + HpReal::from_int(kb, p)
        + geometric.log2()?;
    let per_pair =
        HpReal::from_int((model.confirmations * 2 * (model.iterations + 2)) as i64, p).log2()?;
    let stage2 = &(&per_pair + &HpReal::from_int(2 * kb, p)) + &lr.mul_int(n);
    let total = log2_sum(&stage1, &stage2, p);
    let success_log2 = hp(model.p_right, p).log2()?.mul_int(n);
    // p_wrong^n (2^kb - 1) + p_right^n
    let wrong_keys = HpReal::from_bigint(&((BigInt::one() << kb as usize) - 1), p).log2()?;
    let candidate = log2_sum(&(&wrong_keys + &lr.mul_int(n)), &success_log2, p);
    let brute = &(&per_pair + &HpReal::from_int(2 * kb, p)) + &success_log2;
    let speedup = &brute - &total;
    Ok(KeyRecoveryCost {
        runs,
        stage1_log2: stage1.to_f64(),
        stage2_log2: stage2.to_f64(),
        total_log2: total.to_f64(),
        success_probability: model.p_right.powi(runs as i32),
        success_log2: success_log2.to_f64(),
        candidate_list_log2: candidate.to_f64(),
        brute_force_equal_success_log2: brute.to_f64(),
        speedup_log2: speedup.to_f64(),
        no_filtering: runs == 0,
    })
}

pub const FIGURE_OF_MERIT: &str =
    "maximize log2(brute-force encryptions at equal success probability) - log2(attack encryptions)";

/// Scans `runs = 0..=max_runs` for the largest speedup over brute force at
/// equal success probability.
pub fn key_recovery_optimize(
    model: &KeyRecoveryModel,
    max_runs: u32,
    precision_bits: u32,
) -> Result<(u32, KeyRecoveryCost)> {
    let mut best: Option<KeyRecoveryCost> = None;
    for n in 0..=max_runs {
        let c = key_recovery_cost(n, model, precision_bits)?;
        if best
            .as_ref()
            .is_none_or(|b| c.speedup_log2 > b.speedup_log2)
        {
            best = Some(c);
        }
    }
    let best = best.expect("at least one run count");
    Ok((best.runs, best))
}

/// Success of the attack from the fixed-point count alone: `P(c >= 1)` for
/// one fixed point, `P(c >= 2)` for two.
pub fn prob_at_least_fixed_points(m: u32, precision_bits: u32) -> HpReal {
    let p = precision_bits + 16;
    let mut below = BigRational::zero();
    for c in 0..m as u64 {
        below += BigRational::new(BigInt::one(), factorial(c));
    }
    let e_inv = HpReal::from_int(-1, p).exp();
    (&HpReal::one(p) - &e_inv.mul_rational(&below)).with_precision(precision_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: u32 = 128;

    fn closed_form(eta: f64) -> f64 {
        1.0 - (1.0 + eta) * (-eta).exp()
    }

    #[test]
    fn bard_success_examples() {
        let at = |num, den| bard_success(&HpReal::from_rational(&rat(num, den), P), P).unwrap();
        let full = at(1, 1);
        let two_over_e = HpReal::from_int(-1, P).exp().mul_int(2);
        assert!((&(&HpReal::one(P) - &two_over_e) - &full).abs().to_f64() < 1e-35);
        assert!((at(1, 2).to_f64() - 0.0902).abs() < 5e-5);
        assert!(at(0, 1).is_zero() || at(0, 1).abs().to_f64() < 1e-35);
        assert!(bard_success(&HpReal::from_int(2, P), P).is_err());
    }

    #[test]
    fn bard_table_matches_closed_form_and_printed_values() {
        let printed = [
            0.47, 1.75, 3.69, 6.16, 9.02, 12.19, 15.58, 19.12, 22.75, 26.42,
        ];
        for ((pct, v), want) in bard_table(P).into_iter().zip(printed) {
            let eta = pct as f64 / 100.0;
            assert!((v.to_f64() - closed_form(eta)).abs() < 1e-14);
            assert_eq!(
                format!("{:.2}", v.to_f64() * 100.0),
                format!("{want:.2}"),
                "eta {pct}%"
            );
        }
    }

    #[test]
    fn bard_success_is_increasing() {
        let mut prev = -1.0;
        for i in 0..=50 {
            let v = bard_success(&HpReal::from_rational(&rat(i, 50), 64), 64)
                .unwrap()
                .to_f64();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn bard_success_matches_poisson_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let eta = 0.6;
        let trials = 1_000_000;
        let mut hits = 0u64;
        let e_inv = (-1f64).exp();
        for _ in 0..trials {
            // Poisson(1) by inversion
            let u: f64 = rng.gen();
            let (mut c, mut pc, mut cdf) = (0u32, e_inv, e_inv);
            while u > cdf {
                c += 1;
                pc /= c as f64;
                cdf += pc;
            }
            let found = (0..c).filter(|_| rng.gen::<f64>() < eta).count();
            hits += (found >= 2) as u64;
        }
        let p = closed_form(eta);
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 5.0 * sd);
    }

    #[test]
    fn half_success_readings() {
        let h = bard_half_success_eta(64);
        let eta = h.conditional.to_f64();
        assert!((eta - 0.632).abs() < 0.002, "{eta}");
        assert!((closed_form(eta) - closed_form(1.0) / 2.0).abs() < 1e-12);
        assert!(h.unconditional.is_none());
        assert!((h.max_success.to_f64() - 0.26424).abs() < 1e-5);
    }

    #[test]
    fn expected_fixpoints_examples() {
        let f = rat(1, 64);
        assert_eq!(
            expected_fixpoints_in_fraction(1_000_000, &f).unwrap(),
            rat(49, 64)
        );
        assert_eq!(
            expected_fixpoints_in_fraction(1_081_080, &f).unwrap(),
            rat(4, 1)
        );
        assert_eq!(
            expected_fixpoints_in_fraction(1_081_079, &f).unwrap(),
            rat(1, 32)
        );
        assert_eq!(expected_fixpoints_in_fraction(1, &f).unwrap(), f);
        assert!(expected_fixpoints_in_fraction(1, &rat(0, 1)).is_err());
    }

    #[test]
    fn distinguisher_examples() {
        assert!((distinguisher_accuracy(0.202716, 0.985041).unwrap() - 0.59388).abs() < 1e-5);
        assert!((distinguisher_accuracy(0.015591, 0.985041).unwrap() - 0.50032).abs() < 1e-5);
        assert!((distinguisher_accuracy(0.581665, 0.985041).unwrap() - 0.78335).abs() < 1e-5);
        assert_eq!(distinguisher_accuracy(1.0, 1.0).unwrap(), 1.0);
        assert!(distinguisher_accuracy(1.5, 0.0).is_err());
    }

    #[test]
    fn theoretical_distinguisher_near_printed_rates() {
        for (k, printed) in [
            (1_000_000u64, 0.5939),
            (1_081_079, 0.5003),
            (1_081_080, 0.7834),
        ] {
            let s = DistinguisherSetting::theoretical(k, &rat(1, 64), P).unwrap();
            assert!(
                (s.accuracy() - printed).abs() < 0.02,
                "k {k}: {}",
                s.accuracy()
            );
        }
    }

    #[test]
    fn key_recovery_constants() {
        let m = KeyRecoveryModel::empirical();
        let c = key_recovery_cost(23, &m, P).unwrap();
        assert!((c.total_log2 - 398.41207).abs() < 1e-3, "{}", c.total_log2);
        assert!((c.success_log2 + 17.98001).abs() < 1e-3);
        assert!((c.candidate_list_log2 - 116.555).abs() < 1e-3);
        assert!((c.brute_force_equal_success_log2 - 517.649).abs() < 1e-3);
        assert!((c.speedup_log2 - 119.237).abs() < 1e-3);
        // stage-two line: 535.6290 - 6.062842 n
        for n in [0u32, 5, 23, 40] {
            let c = key_recovery_cost(n, &m, P).unwrap();
            assert!((c.stage2_log2 - (535.6290 - 6.062842 * n as f64)).abs() < 1e-3);
        }
        // stage one approaches its limit as n grows
        let far = key_recovery_cost(200, &m, P).unwrap();
        assert!(
            (far.stage1_log2 - 398.06579).abs() < 1e-3,
            "{}",
            far.stage1_log2
        );
    }

    #[test]
    fn zero_runs_flags_no_filtering() {
        let c = key_recovery_cost(0, &KeyRecoveryModel::empirical(), P).unwrap();
        assert!(c.no_filtering);
        assert_eq!(c.success_probability, 1.0);
        assert!((c.candidate_list_log2 - 256.0).abs() < 1e-6);
    }

    #[test]
    fn optimizer_selects_23() {
        let (n, c) = key_recovery_optimize(&KeyRecoveryModel::empirical(), 60, P).unwrap();
        assert_eq!(n, 23);
        assert!((c.total_log2 - 398.412).abs() < 1e-3);
    }

    #[test]
    fn at_least_fixed_points() {
        assert!((prob_at_least_fixed_points(1, P).to_f64() - 0.6321).abs() < 1e-4);
        assert!((prob_at_least_fixed_points(2, P).to_f64() - 0.2642).abs() < 1e-4);
    }
}
