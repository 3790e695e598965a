//! Fixed-point attacks on the reduced cipher.
//!
//! Both attacks end by solving for the key from one assumed fixed point of
//! `f`. Once the subkey and the next `w/2` key bits are fixed, the first `w`
//! rounds of `f(p)` are determined, and `f(p) = p` forces each of the last
//! `w` new bits, hence each remaining key bit. Enumerating the `2^(w/2)`
//! middle bits therefore lists exactly the keys with the given subkey that
//! fix `p`.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{Codebook, KeeloqKey, MiniParams};
use crate::error::{domain, Result};

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub recovered_key: Option<KeeloqKey>,
    /// Pairs of points (Bard) or tagged entries (CBW) handed to key solving.
    pub candidates_examined: u64,
    /// Bard: points fixed by `f^8` under every subkey guess tried.
    /// CBW: tagged entries sharing the recovered subkey.
    pub fixed_points_found: u64,
    pub matching_property_hits: u64,
    /// Keys that passed the fixed-point filter before probe verification.
    pub filter_survivors: u64,
    pub succeeded: bool,
    pub wall_time_ms: f64,
}

/// An entry passing the shift-overlap test, with the subkey it implies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MatchHit {
    pub index: usize,
    pub plaintext: u32,
    pub ciphertext: u32,
    pub implied_subkey: u64,
}

/// The unique key with low `w` bits `low` and `f(p) = p`.
fn complete_key(params: &MiniParams, p: u32, low: u64) -> u64 {
    let w = params.width();
    let mut key = low;
    let mut s = params.rounds(p, KeeloqKey(low), 0, w);
    for j in 0..w {
        let n = (p >> j) & 1;
        let k = params.key_bit_for(s, n);
        key |= (k as u64) << (w + j);
        s = (s >> 1) | (n << (w - 1));
    }
    debug_assert_eq!(s, p);
    key
}

/// All keys whose low `w/2` bits equal `subkey` and for which `f(p) = p`.
pub fn residual_keys(
    params: &MiniParams,
    p: u32,
    subkey: u64,
) -> impl Iterator<Item = KeeloqKey> + '_ {
    let half = params.g_rounds();
    let subkey = subkey & params.subkey_mask();
    (0..1u64 << half).map(move |mid| KeeloqKey(complete_key(params, p, subkey | (mid << half))))
}

/// Entries whose ciphertext's low `w/2` bits repeat the plaintext's high
/// `w/2` bits, as they must when `p` is fixed by `f^8` and only `g` moved
/// it. Each is tagged with the subkey `g` would need: every `g` round
/// inserts a known ciphertext bit, isolating one key bit.
pub fn matching_property_scan(codebook: &Codebook, params: &MiniParams) -> Vec<MatchHit> {
    let w = params.width();
    let half = params.g_rounds();
    let low = (1u32 << half) - 1;
    codebook
        .entries
        .par_iter()
        .enumerate()
        .filter(|(_, &(p, c))| c & low == p >> half)
        .map(|(index, &(p, c))| {
            let mut s = p;
            let mut subkey = 0u64;
            for j in 0..half {
                let n = (c >> (half + j)) & 1;
                subkey |= (params.key_bit_for(s, n) as u64) << j;
                s = (s >> 1) | (n << (w - 1));
            }
            debug_assert_eq!(s, c);
            MatchHit {
                index,
                plaintext: p,
                ciphertext: c,
                implied_subkey: subkey,
            }
        })
        .collect()
}

const PROBES: usize = 16;

fn probes(codebook: &Codebook) -> Vec<(u32, u32)> {
    let n = codebook.len();
    if n <= PROBES {
        return codebook.entries.clone();
    }
    (0..PROBES)
        .map(|i| codebook.entries[i * n / PROBES])
        .collect()
}

fn consistent(params: &MiniParams, key: KeeloqKey, probes: &[(u32, u32)]) -> bool {
    probes.iter().all(|&(p, c)| params.encrypt(p, key) == c)
}

fn check_width(codebook: &Codebook, params: &MiniParams) -> Result<()> {
    if codebook.width != params.width() {
        return domain(format!(
            "codebook width {} does not match cipher width {}",
            codebook.width,
            params.width()
        ));
    }
    if params.width() > 16 {
        return domain("attacks run at width 16 or below");
    }
    Ok(())
}

fn finish(
    codebook: &Codebook,
    recovered: Option<KeeloqKey>,
    start: Instant,
    mut report: AttackReport,
) -> AttackReport {
    report.succeeded = match (recovered, codebook.source_key) {
        (Some(k), Some(truth)) => k == truth,
        (Some(_), None) => true,
        (None, _) => false,
    };
    report.recovered_key = recovered;
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

#[derive(Default)]
struct GuessOutcome {
    points: u64,
    pairs: u64,
    survivors: u64,
    key: Option<KeeloqKey>,
}

/// Guess the `g` subkey, peel `g` off every entry, keep the points fixed by
/// `f^8`, and solve for the key from each pair of them assuming both are
/// fixed by `f`.
pub fn bard_attack(codebook: &Codebook, params: &MiniParams) -> Result<AttackReport> {
    if codebook.is_empty() {
        return domain("bard_attack needs a non-empty codebook");
    }
    check_width(codebook, params)?;
    let start = Instant::now();
    let probe = probes(codebook);
    let outcomes: Vec<GuessOutcome> = (0..=params.subkey_mask())
        .into_par_iter()
        .map(|sub| {
            let points: Vec<u32> = codebook
                .entries
                .iter()
                .filter(|&&(p, c)| params.g_invert(c, sub) == p)
                .map(|e| e.0)
                .collect();
            let mut out = GuessOutcome {
                points: points.len() as u64,
                ..Default::default()
            };
            'pairs: for (i, &a) in points.iter().enumerate() {
                for &b in &points[i + 1..] {
                    out.pairs += 1;
                    for key in residual_keys(params, a, sub) {
                        if params.f(b, key) != b {
                            continue;
                        }
                        out.survivors += 1;
                        if consistent(params, key, &probe) {
                            out.key = Some(key);
                            break 'pairs;
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut report = AttackReport {
        recovered_key: None,
        candidates_examined: 0,
        fixed_points_found: 0,
        matching_property_hits: 0,
        filter_survivors: 0,
        succeeded: false,
        wall_time_ms: 0.0,
    };
    let mut recovered = None;
    for o in outcomes {
        report.candidates_examined += o.pairs;
        report.fixed_points_found += o.points;
        report.filter_survivors += o.survivors;
        if o.key.is_some() {
            recovered = o.key;
            break;
        }
    }
    Ok(finish(codebook, recovered, start, report))
}

/// Scan for the matching property, rank hits by how many other hits share
/// their implied subkey, and solve for the key from each hit in turn
/// assuming it is a fixed point of `f`.
pub fn cbw_attack(codebook: &Codebook, params: &MiniParams) -> Result<AttackReport> {
    check_width(codebook, params)?;
    let start = Instant::now();
    let probe = probes(codebook);
    let mut hits = matching_property_scan(codebook, params);
    let mut freq: HashMap<u64, u64> = HashMap::new();
    for h in &hits {
        *freq.entry(h.implied_subkey).or_default() += 1;
    }
    hits.sort_by_key(|h| {
        (
            std::cmp::Reverse(freq[&h.implied_subkey]),
            h.implied_subkey,
            h.index,
        )
    });
    let mut report = AttackReport {
        recovered_key: None,
        candidates_examined: 0,
        fixed_points_found: 0,
        matching_property_hits: hits.len() as u64,
        filter_survivors: 0,
        succeeded: false,
        wall_time_ms: 0.0,
    };
    let mut recovered = None;
    'hits: for h in &hits {
        report.candidates_examined += 1;
        for key in residual_keys(params, h.plaintext, h.implied_subkey) {
            report.filter_survivors += 1;
            if consistent(params, key, &probe) {
                recovered = Some(key);
                report.fixed_points_found = freq[&h.implied_subkey];
                break 'hits;
            }
        }
    }
    Ok(finish(codebook, recovered, start, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keeloq::build_codebook;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f_fixed_points(m: &MiniParams, key: KeeloqKey) -> Vec<u32> {
        (0..=m.block_mask()).filter(|&x| m.f(x, key) == x).collect()
    }

    fn f8_fixed_points(m: &MiniParams, key: KeeloqKey) -> Vec<u32> {
        (0..=m.block_mask())
            .filter(|&x| (0..8).fold(x, |y, _| m.f(y, key)) == x)
            .collect()
    }

    fn key_with(m: &MiniParams, seed: u64, want: impl Fn(usize, usize) -> bool) -> KeeloqKey {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let key = KeeloqKey(rng.gen::<u64>() & m.key_mask());
            if want(f_fixed_points(m, key).len(), f8_fixed_points(m, key).len()) {
                return key;
            }
        }
    }

    #[test]
    fn deduction_matches_brute_force() {
        let m = MiniParams::scaled(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = rng.gen::<u32>() & m.block_mask();
            let sub = rng.gen::<u64>() & m.subkey_mask();
            let mut fast: Vec<u64> = residual_keys(&m, p, sub).map(|k| k.0).collect();
            fast.sort_unstable();
            let brute: Vec<u64> = (0..1u64 << 12)
                .map(|r| sub | (r << 4))
                .filter(|&k| m.f(p, KeeloqKey(k)) == p)
                .collect();
            assert_eq!(fast, brute);
        }
    }

    #[test]
    fn planted_fixed_points_are_always_hit() {
        let m = MiniParams::scaled(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let key = KeeloqKey(rng.gen::<u64>() & m.key_mask());
            let x = rng.gen::<u32>() & m.block_mask();
            // plant: a point fixed by f, so also by f^8
            let key = residual_keys(&m, x, key.0 & m.subkey_mask())
                .nth(rng.gen_range(0..256))
                .unwrap();
            let cb = Codebook {
                width: 16,
                entries: vec![(x, m.encrypt(x, key))],
                covered_fraction: 0.0,
                source_key: None,
            };
            let hits = matching_property_scan(&cb, &m);
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].implied_subkey, key.0 & m.subkey_mask());
        }
    }

    #[test]
    fn coincidental_hits_follow_binomial() {
        let m = MiniParams::scaled(16).unwrap();
        let key = key_with(&m, 3, |c1, c3| c1 == 0 && c3 == 0);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let hits = matching_property_scan(&cb, &m).len() as f64;
        let (n, p) = (65536.0f64, 1.0f64 / 256.0);
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((hits - 256.0).abs() < 5.0 * sd, "{hits}");
    }

    #[test]
    fn true_subkey_is_histogram_mode_with_many_fixed_points() {
        let m = MiniParams::scaled(16).unwrap();
        let key = key_with(&m, 4, |c1, c3| c1 >= 2 && c3 >= 10);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let mut freq: HashMap<u64, usize> = HashMap::new();
        for h in matching_property_scan(&cb, &m) {
            *freq.entry(h.implied_subkey).or_default() += 1;
        }
        let mode = freq
            .iter()
            .max_by_key(|(s, c)| (**c, std::cmp::Reverse(**s)))
            .unwrap()
            .0;
        assert_eq!(*mode, key.0 & m.subkey_mask());
    }

    #[test]
    fn bard_succeeds_with_two_fixed_points() {
        let m = MiniParams::scaled(12).unwrap();
        let key = key_with(&m, 5, |c1, _| c1 >= 2);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let r = bard_attack(&cb, &m).unwrap();
        assert!(r.succeeded);
        assert_eq!(r.recovered_key, Some(key));
        assert!(r.candidates_examined >= 1);
    }

    #[test]
    fn bard_fails_on_derangement() {
        let m = MiniParams::scaled(12).unwrap();
        let key = key_with(&m, 6, |c1, _| c1 == 0);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let r = bard_attack(&cb, &m).unwrap();
        assert!(!r.succeeded);
        assert!(r.recovered_key.is_none());
    }

    #[test]
    fn bard_rejects_empty_codebook() {
        let m = MiniParams::scaled(12).unwrap();
        let cb = Codebook {
            width: 12,
            entries: vec![],
            covered_fraction: 0.0,
            source_key: None,
        };
        assert!(bard_attack(&cb, &m).is_err());
    }

    #[test]
    fn cbw_finds_key_early() {
        let m = MiniParams::scaled(16).unwrap();
        let key = key_with(&m, 7, |c1, c3| c1 >= 1 && c3 >= 6);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let r = cbw_attack(&cb, &m).unwrap();
        assert!(r.succeeded);
        assert!(r.candidates_examined <= 8, "{}", r.candidates_examined);
        assert!(r.matching_property_hits > 100);
    }

    #[test]
    fn cbw_fails_on_derangement() {
        let m = MiniParams::scaled(12).unwrap();
        let key = key_with(&m, 8, |c1, _| c1 == 0);
        let cb = build_codebook(&m, key, 1.0, 0).unwrap();
        let r = cbw_attack(&cb, &m).unwrap();
        assert!(!r.succeeded);
        assert_eq!(r.candidates_examined, r.matching_property_hits);
    }

    #[test]
    fn width_mismatch_rejected() {
        let m = MiniParams::scaled(12).unwrap();
        let cb = build_codebook(&MiniParams::scaled(8).unwrap(), KeeloqKey(1), 1.0, 0).unwrap();
        assert!(cbw_attack(&cb, &m).is_err());
    }
}
