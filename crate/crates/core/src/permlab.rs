//! Permutation ground truth: sampling, cycle decomposition, powers,
//! exhaustive enumeration of small symmetric groups, and the Monte Carlo
//! experiment on fixed points of iterated permutations.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.3) seeded with
//! `seed_from_u64`; trial `i` of an experiment uses stream `i` of the seeded
//! generator, so results do not depend on how trials are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Largest size stored in one-line notation.
pub const MAX_N: usize = 1 << 24;
/// Largest `n` accepted by [`enumerate_sn`].
pub const MAX_ENUMERATION_N: usize = 8;

/// A bijection of `0..n` in one-line notation: `x -> mapping[x]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<u32>,
}

impl Permutation {
    pub fn new(mapping: Vec<u32>) -> Result<Self> {
        let n = mapping.len();
        if n == 0 || n > MAX_N {
            return domain(format!("permutation size {n} outside 1..={MAX_N}"));
        }
        let mut seen = vec![false; n];
        for &x in &mapping {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(Error::Domain("mapping is not a bijection".into()));
            }
            seen[x] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.mapping[x as usize]
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(
            self.len(),
            other.len(),
            "composing permutations of different sizes"
        );
        Permutation {
            mapping: other
                .mapping
                .iter()
                .map(|&x| self.mapping[x as usize])
                .collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.len()];
        for (i, &x) in self.mapping.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Permutation { mapping: inv }
    }

    /// `self^k` by walking each cycle: an `l`-cycle splits into `gcd(l, k)`
    /// cycles of length `l / gcd(l, k)`.
    pub fn power(&self, k: u64) -> Permutation {
        let mut out = vec![0u32; self.len()];
        for cycle in cycle_decomposition(self).cycles {
            let l = cycle.len();
            let step = (k % l as u64) as usize;
            for (i, &x) in cycle.iter().enumerate() {
                out[x as usize] = cycle[(i + step) % l];
            }
        }
        Permutation { mapping: out }
    }

    pub fn count_fixed_points(&self) -> usize {
        self.mapping
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i as u32 == x)
            .count()
    }

    /// Lengths of all cycles, in order of their minimal elements.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut lengths = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.mapping[x] as usize;
                len += 1;
            }
            lengths.push(len);
        }
        lengths
    }
}

/// Canonical disjoint-cycle form: each cycle starts at its minimal element and
/// cycles are ordered by that element. Fixed points appear as 1-cycles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleDecomposition {
    pub cycles: Vec<Vec<u32>>,
    pub cycle_count: usize,
    pub length_histogram: BTreeMap<usize, usize>,
}

impl CycleDecomposition {
    /// Rebuild the permutation the cycles describe.
    pub fn recompose(&self) -> Permutation {
        let n: usize = self.cycles.iter().map(Vec::len).sum();
        let mut mapping = vec![0u32; n];
        for c in &self.cycles {
            for (i, &x) in c.iter().enumerate() {
                mapping[x as usize] = c[(i + 1) % c.len()];
            }
        }
        Permutation { mapping }
    }
}

pub fn cycle_decomposition(p: &Permutation) -> CycleDecomposition {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    let mut hist = BTreeMap::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cycle.push(x as u32);
            x = p.mapping[x] as usize;
        }
        *hist.entry(cycle.len()).or_insert(0) += 1;
        cycles.push(cycle);
    }
    CycleDecomposition {
        cycle_count: cycles.len(),
        cycles,
        length_histogram: hist,
    }
}

/// Fixed points of `pi^k` read off the cycle lengths of `pi`: exactly the
/// points on cycles whose length divides `k`.
pub fn fixed_points_of_power(cycle_lengths: &[usize], k: u64) -> u64 {
    cycle_lengths
        .iter()
        .filter(|&&l| k.is_multiple_of(l as u64))
        .map(|&l| l as u64)
        .sum()
}

/// Uniform permutation from a Fisher–Yates shuffle driven by `rng`.
pub fn random_permutation_with<R: Rng>(n: usize, rng: &mut R) -> Result<Permutation> {
    if n == 0 || n > MAX_N {
        return domain(format!("cannot sample a permutation of size {n}"));
    }
    let mut mapping: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        mapping.swap(i, j);
    }
    Ok(Permutation { mapping })
}

pub fn random_permutation(n: usize, seed: u64) -> Result<Permutation> {
    random_permutation_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The generator used for trial `trial` of a seeded experiment.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Every permutation of `0..n` exactly once, in lexicographic order.
pub fn enumerate_sn(n: usize) -> Result<SymmetricGroupIter> {
    if n == 0 {
        return domain("enumerate_sn needs n >= 1");
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::Unsupported(format!(
            "refusing to enumerate S_{n}; the limit is n = {MAX_ENUMERATION_N}"
        )));
    }
    Ok(SymmetricGroupIter {
        next: Some((0..n as u32).collect()),
    })
}

pub struct SymmetricGroupIter {
    next: Option<Vec<u32>>,
}

impl Iterator for SymmetricGroupIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation { mapping: current })
    }
}

fn next_lexicographic(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n)
        .rev()
        .find(|&j| v[j] > v[i])
        .expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Probability that `n * fraction` uniform draws (with replacement) all miss
/// a set of `c` marked points out of `n`: `(1 - c/n)^(n * fraction)`.
pub fn miss_probability(c: u64, n: u64, fraction: f64) -> f64 {
    assert!(c <= n && n > 0, "need 0 <= c <= n");
    assert!(
        fraction > 0.0 && fraction <= 1.0,
        "fraction must lie in (0, 1]"
    );
    (1.0 - c as f64 / n as f64).powf(n as f64 * fraction)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub k: u64,
    pub mean_miss_probability: f64,
    pub miss_standard_error: f64,
    pub mean_found_probability: f64,
    pub mean_fixed_points: f64,
    pub fixed_points_standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub fraction: f64,
    pub rows: Vec<ExperimentRow>,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, count: u64) -> (f64, f64) {
    let c = count as f64;
    let mean = values.clone().sum::<f64>() / c;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (c - 1.0);
    (mean, (var / c).sqrt())
}

/// Sample `trials` uniform permutations of size `n`; for each `k` record the
/// number of fixed points of `pi^k` (via the divisor rule on the cycle
/// lengths) and the chance that a random `fraction` of the domain misses all
/// of them.
pub fn experiment_iterated_fixpoints(
    n: usize,
    trials: u64,
    ks: &[u64],
    fraction: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return domain("experiment needs at least one trial");
    }
    if ks.contains(&0) {
        return domain("iteration counts must be >= 1");
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return domain("fraction must lie in (0, 1]");
    }
    let per_trial: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = random_permutation_with(n, &mut trial_rng(seed, t))?;
            let lengths = p.cycle_lengths();
            Ok(ks
                .iter()
                .map(|&k| fixed_points_of_power(&lengths, k))
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let counts = per_trial.iter().map(move |r| r[i]);
            let (mean_fp, se_fp) = mean_and_se(counts.clone().map(|c| c as f64), trials);
            let misses = counts.map(|c| miss_probability(c, n as u64, fraction));
            let (mean_miss, se_miss) = mean_and_se(misses, trials);
            ExperimentRow {
                k,
                mean_miss_probability: mean_miss,
                miss_standard_error: se_miss,
                mean_found_probability: 1.0 - mean_miss,
                mean_fixed_points: mean_fp,
                fixed_points_standard_error: se_fp,
            }
        })
        .collect();
    Ok(ExperimentReport {
        n,
        trials,
        seed,
        fraction,
        rows,
    })
}
