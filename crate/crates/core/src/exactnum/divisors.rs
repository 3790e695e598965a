use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::rat;
use crate::error::{domain, Result};

/// All positive divisors of `k` together with `tau(k)` and `sigma(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivisorProfile {
    pub k: u64,
    pub divisors: Vec<u64>,
    pub tau: u64,
    pub sigma: u128,
}

impl DivisorProfile {
    /// `sigma(k)/k`, which equals `sum_{d|k} 1/d`.
    pub fn sigma_over_k(&self) -> BigRational {
        BigRational::new(self.sigma.into(), self.k.into())
    }

    /// `sum_{d|k} 1/d` summed term by term.
    pub fn reciprocal_sum(&self) -> BigRational {
        self.divisors
            .iter()
            .fold(BigRational::zero(), |acc, &d| acc + rat(1, d as i64))
    }

    pub fn divisors_up_to(&self, bound: u64) -> impl Iterator<Item = u64> + '_ {
        self.divisors
            .iter()
            .copied()
            .take_while(move |&d| d <= bound)
    }
}

/// Divisors by trial division up to `sqrt(k)`.
pub fn divisor_profile(k: u64) -> Result<DivisorProfile> {
    if k == 0 {
        return domain("divisor_profile requires k >= 1");
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d: u64 = 1;
    while d <= k / d {
        let (q, r) = k.div_rem(&d);
        if r == 0 {
            small.push(d);
            if q != d {
                large.push(q);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    let sigma = small.iter().map(|&d| d as u128).sum();
    Ok(DivisorProfile {
        k,
        tau: small.len() as u64,
        sigma,
        divisors: small,
    })
}

pub fn tau(k: u64) -> Result<u64> {
    divisor_profile(k).map(|p| p.tau)
}
