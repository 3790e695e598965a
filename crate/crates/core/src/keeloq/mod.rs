//! Keeloq and a width-parameterized reduced version.
//!
//! Bit conventions: a block is a `u32` whose bit `j` is `L_j` of the
//! register (bit 0 is the oldest bit, shifted out first); a key is a `u64`
//! whose bit `i` is `k_i`. Each round shifts the register right by one and
//! inserts the new bit at position `w - 1`.
//!
//! A tap offset `t` names `L_{i-t}` in the round that produces `L_i`, which
//! is register bit `w - t`.

mod attack;
mod codebook;

pub use attack::{
    bard_attack, cbw_attack, matching_property_scan, residual_keys, AttackReport, MatchHit,
};
pub use codebook::{
    build_codebook, Codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION, MAX_CODEBOOK_WIDTH,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// `NLF(a,b,c,d,e)` with the inputs packed as `16a + 8b + 4c + 2d + e`.
pub const NLF_TABLE: u32 = nlf_table();

/// Algebraic normal form of the non-linear function.
pub const fn nlf(a: u32, b: u32, c: u32, d: u32, e: u32) -> u32 {
    (d ^ e
        ^ (a & c)
        ^ (a & e)
        ^ (b & c)
        ^ (b & e)
        ^ (c & d)
        ^ (d & e)
        ^ (a & d & e)
        ^ (a & c & e)
        ^ (a & b & d)
        ^ (a & b & c))
        & 1
}

const fn nlf_table() -> u32 {
    let mut t = 0u32;
    let mut i = 0u32;
    while i < 32 {
        let v = nlf(
            (i >> 4) & 1,
            (i >> 3) & 1,
            (i >> 2) & 1,
            (i >> 1) & 1,
            i & 1,
        );
        t |= v << i;
        i += 1;
    }
    t
}

/// NLF tap offsets of the full cipher.
pub const FULL_NLF_TAPS: [u32; 5] = [1, 6, 12, 23, 30];

/// 64-bit Keeloq key, bit `i` = `k_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KeeloqKey(pub u64);

impl KeeloqKey {
    pub fn bit(self, i: u32) -> u32 {
        ((self.0 >> i) & 1) as u32
    }
}

/// Shape of a (possibly reduced) Keeloq-like cipher.
///
/// Width `w` gives `2w` key bits, `f` = `2w` rounds (one pass over the key),
/// `g` = `w/2` rounds, and `8 * 2w + w/2` rounds in total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MiniParams {
    width: u32,
    nlf_taps: [u32; 5],
    linear_taps: [u32; 2],
    #[serde(skip)]
    nlf_pos: [u32; 5],
    #[serde(skip)]
    linear_pos: u32,
}

impl MiniParams {
    pub fn new(width: u32, nlf_taps: [u32; 5], linear_taps: [u32; 2]) -> Result<Self> {
        if !width.is_multiple_of(2) || !(8..=32).contains(&width) {
            return Err(Error::Config(format!(
                "width {width} must be even and in 8..=32"
            )));
        }
        for (i, &t) in nlf_taps.iter().enumerate() {
            if t == 0 || t >= width {
                return Err(Error::Config(format!("NLF tap {t} outside 1..{width}")));
            }
            if nlf_taps[..i].contains(&t) {
                return Err(Error::Config(format!("NLF tap {t} repeated")));
            }
        }
        // The oldest register bit must enter linearly, once, for rounds to invert.
        let other = match linear_taps {
            [a, b] if a == width && b != width => b,
            [a, b] if b == width && a != width => a,
            _ => {
                return Err(Error::Config(format!(
                    "linear taps must contain {width} exactly once"
                )))
            }
        };
        if other == 0 {
            return Err(Error::Config("linear tap 0 is not a register bit".into()));
        }
        Ok(MiniParams {
            width,
            nlf_taps,
            linear_taps,
            nlf_pos: nlf_taps.map(|t| width - t),
            linear_pos: width - other,
        })
    }

    /// Default configuration at width `w`: linear taps `{w, w/2}` and the
    /// full-width NLF taps scaled by `w/32`, rounded down and nudged upwards
    /// to stay distinct and positive.
    pub fn scaled(width: u32) -> Result<Self> {
        let mut taps = [0u32; 5];
        let mut prev = 0;
        for (slot, &t) in taps.iter_mut().zip(FULL_NLF_TAPS.iter()) {
            let v = (t * width / 32).max(prev + 1);
            *slot = v;
            prev = v;
        }
        Self::new(width, taps, [width, width / 2])
    }

    /// The full cipher.
    pub fn full() -> Self {
        Self::new(32, FULL_NLF_TAPS, [32, 16]).expect("canonical parameters are valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn nlf_taps(&self) -> [u32; 5] {
        self.nlf_taps
    }

    pub fn linear_taps(&self) -> [u32; 2] {
        self.linear_taps
    }

    pub fn key_bits(&self) -> u32 {
        2 * self.width
    }

    pub fn f_rounds(&self) -> u32 {
        2 * self.width
    }

    pub fn g_rounds(&self) -> u32 {
        self.width / 2
    }

    pub fn total_rounds(&self) -> u32 {
        8 * self.f_rounds() + self.g_rounds()
    }

    pub fn block_mask(&self) -> u32 {
        if self.width == 32 {
            u32::MAX
        } else {
            (1u32 << self.width) - 1
        }
    }

    pub fn key_mask(&self) -> u64 {
        if self.width == 32 {
            u64::MAX
        } else {
            (1u64 << (2 * self.width)) - 1
        }
    }

    pub fn subkey_mask(&self) -> u64 {
        (1u64 << self.g_rounds()) - 1
    }

    #[inline]
    fn feedback(&self, s: u32) -> u32 {
        let p = &self.nlf_pos;
        let idx = (((s >> p[0]) & 1) << 4)
            | (((s >> p[1]) & 1) << 3)
            | (((s >> p[2]) & 1) << 2)
            | (((s >> p[3]) & 1) << 1)
            | ((s >> p[4]) & 1);
        (s & 1) ^ ((s >> self.linear_pos) & 1) ^ ((NLF_TABLE >> idx) & 1)
    }

    /// Bit inserted by one round from register `s` and key bit `k`.
    #[inline]
    pub fn new_bit(&self, s: u32, k: u32) -> u32 {
        k ^ self.feedback(s)
    }

    /// Key bit that makes the round from register `s` insert bit `n`.
    #[inline]
    pub fn key_bit_for(&self, s: u32, n: u32) -> u32 {
        n ^ self.feedback(s)
    }

    #[inline]
    pub fn round(&self, s: u32, k: u32) -> u32 {
        (s >> 1) | (self.new_bit(s, k) << (self.width - 1))
    }

    #[inline]
    pub fn unround(&self, t: u32, k: u32) -> u32 {
        let w = self.width;
        let n = t >> (w - 1);
        // every tap but the oldest bit is visible one position lower in `t`
        let upper = (t << 1) & self.block_mask();
        let oldest = n ^ k ^ self.feedback(upper);
        upper | oldest
    }

    /// Rounds `start..start+count` of the key schedule.
    pub fn rounds(&self, mut s: u32, key: KeeloqKey, start: u32, count: u32) -> u32 {
        let kb = self.key_bits();
        for r in start..start + count {
            s = self.round(s, key.bit(r % kb));
        }
        s
    }

    pub fn unrounds(&self, mut s: u32, key: KeeloqKey, start: u32, count: u32) -> u32 {
        let kb = self.key_bits();
        for r in (start..start + count).rev() {
            s = self.unround(s, key.bit(r % kb));
        }
        s
    }

    pub fn encrypt(&self, p: u32, key: KeeloqKey) -> u32 {
        self.rounds(p & self.block_mask(), key, 0, self.total_rounds())
    }

    pub fn decrypt(&self, c: u32, key: KeeloqKey) -> u32 {
        self.unrounds(c & self.block_mask(), key, 0, self.total_rounds())
    }

    /// One pass over the key.
    pub fn f(&self, x: u32, key: KeeloqKey) -> u32 {
        self.rounds(x, key, 0, self.f_rounds())
    }

    pub fn f_inverse(&self, x: u32, key: KeeloqKey) -> u32 {
        self.unrounds(x, key, 0, self.f_rounds())
    }

    /// The final `w/2` rounds, using key bits `k_0..k_{w/2-1}`.
    pub fn g(&self, x: u32, key: KeeloqKey) -> u32 {
        self.rounds(x, key, 0, self.g_rounds())
    }

    /// Undo `g` given only its subkey (the low `w/2` key bits).
    pub fn g_invert(&self, c: u32, subkey: u64) -> u32 {
        self.unrounds(
            c,
            KeeloqKey(subkey & self.subkey_mask()),
            0,
            self.g_rounds(),
        )
    }
}

/// Full-width encryption.
pub fn keeloq_encrypt(p: u32, key: KeeloqKey) -> u32 {
    full().encrypt(p, key)
}

pub fn keeloq_decrypt(c: u32, key: KeeloqKey) -> u32 {
    full().decrypt(c, key)
}

/// 64 rounds of the full cipher.
pub fn f_apply(x: u32, key: KeeloqKey) -> u32 {
    full().f(x, key)
}

/// Final 16 rounds of the full cipher.
pub fn g_apply(x: u32, key: KeeloqKey) -> u32 {
    full().g(x, key)
}

pub fn g_invert(c: u32, subkey16: u16) -> u32 {
    full().g_invert(c, subkey16 as u64)
}

fn full() -> &'static MiniParams {
    use std::sync::OnceLock;
    static FULL: OnceLock<MiniParams> = OnceLock::new();
    FULL.get_or_init(MiniParams::full)
}
