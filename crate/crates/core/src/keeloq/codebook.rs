use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{KeeloqKey, MiniParams};
use crate::error::{domain, Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"PCLB";
pub const CODEBOOK_VERSION: u16 = 1;
/// Widest block for which a codebook is materialized in memory.
pub const MAX_CODEBOOK_WIDTH: u32 = 24;

/// Known plaintext/ciphertext pairs for one key.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub width: u32,
    pub entries: Vec<(u32, u32)>,
    pub covered_fraction: f64,
    /// Key that produced the entries; only known for test fixtures.
    pub source_key: Option<KeeloqKey>,
}

/// Encrypts a uniformly sampled set of `round(eta * 2^w)` distinct plaintexts,
/// listed in increasing plaintext order.
pub fn build_codebook(
    params: &MiniParams,
    key: KeeloqKey,
    eta: f64,
    seed: u64,
) -> Result<Codebook> {
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("codebook fraction {eta} outside (0, 1]"));
    }
    let w = params.width();
    if w > MAX_CODEBOOK_WIDTH {
        return domain(format!(
            "refusing to materialize a codebook at width {w} > {MAX_CODEBOOK_WIDTH}"
        ));
    }
    let space = 1usize << w;
    let count = (eta * space as f64).round() as usize;
    let mut plaintexts: Vec<u32> = if count == space {
        (0..space as u32).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, space, count)
            .into_iter()
            .map(|i| i as u32)
            .collect()
    };
    plaintexts.sort_unstable();
    let key = KeeloqKey(key.0 & params.key_mask());
    let entries = plaintexts
        .into_par_iter()
        .map(|p| (p, params.encrypt(p, key)))
        .collect();
    Ok(Codebook {
        width: w,
        entries,
        covered_fraction: count as f64 / space as f64,
        source_key: Some(key),
    })
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn word_bytes(width: u32) -> usize {
        width.div_ceil(8) as usize
    }

    /// Binary form: magic, version u16, width u16, count u64, then each
    /// plaintext and ciphertext as a little-endian integer of `ceil(w/8)`
    /// bytes. The source key is not stored.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(CODEBOOK_MAGIC)?;
        out.write_all(&CODEBOOK_VERSION.to_le_bytes())?;
        out.write_all(&(self.width as u16).to_le_bytes())?;
        out.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        let nb = Self::word_bytes(self.width);
        let mut buf = Vec::with_capacity(self.entries.len() * 2 * nb);
        for &(p, c) in &self.entries {
            buf.extend_from_slice(&p.to_le_bytes()[..nb]);
            buf.extend_from_slice(&c.to_le_bytes()[..nb]);
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..4] != CODEBOOK_MAGIC {
            return Err(Error::Format("bad codebook magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != CODEBOOK_VERSION {
            return Err(Error::Format(format!(
                "unsupported codebook version {version}"
            )));
        }
        let width = u16::from_le_bytes([header[6], header[7]]) as u32;
        if width == 0 || width > 32 {
            return Err(Error::Format(format!(
                "codebook width {width} outside 1..=32"
            )));
        }
        let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
        if count > 1u64 << width {
            return Err(Error::Format(format!(
                "{count} entries exceed the 2^{width} plaintexts"
            )));
        }
        let nb = Self::word_bytes(width);
        let mut body = vec![0u8; count as usize * 2 * nb];
        input.read_exact(&mut body)?;
        let word = |b: &[u8]| {
            let mut w = [0u8; 4];
            w[..nb].copy_from_slice(b);
            u32::from_le_bytes(w)
        };
        let entries: Vec<(u32, u32)> = body
            .chunks_exact(2 * nb)
            .map(|ch| (word(&ch[..nb]), word(&ch[nb..])))
            .collect();
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        if !entries.iter().all(|&(p, _)| seen.insert(p)) {
            return Err(Error::Format("duplicate plaintext in codebook".into()));
        }
        Ok(Codebook {
            width,
            covered_fraction: count as f64 / (1u64 << width) as f64,
            entries,
            source_key: None,
        })
    }
}
