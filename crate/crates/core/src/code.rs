//! Polar code construction and encoding.
//!
//! The generator matrix is `G_m = F^{⊗m} P_m` with `F = [[1, 1], [0, 1]]` and
//! `P_m` the bit-reversal permutation, acting on column vectors: `x = G_m u`.
//! Encoding applies the bit reversal to `u` first and then runs the natural-order
//! butterflies of `F^{⊗m}`. The decoders and the density evolution use the
//! matching tree: the layer next to the channel splits on the most significant
//! bit of the synthetic-channel index, the root on the least significant one.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

/// Reverses the lowest `m` bits of `j`.
#[inline]
pub fn bit_reverse_index(j: usize, m: u32) -> usize {
    if m == 0 {
        0
    } else {
        j.reverse_bits() >> (usize::BITS - m)
    }
}

/// Returns the depth `m` with `len == 2^m`.
pub fn depth_of(len: usize) -> Result<u32> {
    if len.is_power_of_two() {
        Ok(len.trailing_zeros())
    } else {
        Err(Error::NotPowerOfTwo(len))
    }
}

fn check_len(len: usize, m: u32) -> Result<()> {
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    if len != 1usize << m {
        return Err(Error::LengthMismatch {
            expected: 1usize << m,
            actual: len,
        });
    }
    Ok(())
}

/// `output[j] = v[bitrev_m(j)]`. Self-inverse.
pub fn bit_reversal_permute<T: Copy>(v: &[T], m: u32) -> Result<Vec<T>> {
    check_len(v.len(), m)?;
    Ok((0..v.len()).map(|j| v[bit_reverse_index(j, m)]).collect())
}

/// In-place `F^{⊗m}` butterflies over GF(2), natural order.
pub(crate) fn butterflies_in_place(v: &mut [u8]) {
    let n = v.len();
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (top, bottom) = block.split_at_mut(half);
            for (t, b) in top.iter_mut().zip(bottom.iter()) {
                *t ^= *b;
            }
        }
        half *= 2;
    }
}

/// Computes `G_m u` over GF(2) in `O(n log n)`.
pub fn polar_transform(u: &[u8], m: u32) -> Result<Vec<u8>> {
    let mut v = bit_reversal_permute(u, m)?;
    butterflies_in_place(&mut v);
    Ok(v)
}

/// How the information set was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Ranked by density evolution; `model` names the channel/decoder pair
    /// the ranking was computed for.
    DensityEvolution { model: String },
    /// Reed-Muller code of the given order, viewed as a polar code.
    ReedMuller { order: u32 },
    /// Information set given explicitly.
    Custom,
}

/// A polar code: block length `2^m`, information set, provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCodeSpec", into = "RawCodeSpec")]
pub struct CodeSpec {
    m: u32,
    info_set: Vec<usize>,
    construction: Construction,
    design_snr_db: Option<f64>,
    // frozen[i] == true iff i is not in the information set
    frozen: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawCodeSpec {
    m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    k: usize,
    info_set: Vec<usize>,
    construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    design_snr_db: Option<f64>,
}

impl TryFrom<RawCodeSpec> for CodeSpec {
    type Error = Error;

    fn try_from(raw: RawCodeSpec) -> Result<Self> {
        if let Some(n) = raw.n {
            if raw.m >= usize::BITS || n != 1usize << raw.m {
                return Err(invalid("n", format!("{n} != 2^{}", raw.m)));
            }
        }
        if raw.k != raw.info_set.len() {
            return Err(invalid(
                "k",
                format!(
                    "k = {} but info_set has {} entries",
                    raw.k,
                    raw.info_set.len()
                ),
            ));
        }
        CodeSpec::new(raw.m, raw.info_set, raw.construction, raw.design_snr_db)
    }
}

impl From<CodeSpec> for RawCodeSpec {
    fn from(spec: CodeSpec) -> Self {
        RawCodeSpec {
            m: spec.m,
            n: Some(spec.n()),
            k: spec.k(),
            info_set: spec.info_set,
            construction: spec.construction,
            design_snr_db: spec.design_snr_db,
        }
    }
}

impl CodeSpec {
    /// Validates and builds a code. `info_set` must be strictly increasing and
    /// inside `[0, 2^m)`.
    pub fn new(
        m: u32,
        info_set: Vec<usize>,
        construction: Construction,
        design_snr_db: Option<f64>,
    ) -> Result<Self> {
        if m > 24 {
            return Err(invalid("m", format!("depth {m} is too large")));
        }
        let n = 1usize << m;
        if info_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("info_set", "must be strictly increasing"));
        }
        if let Some(&last) = info_set.last() {
            if last >= n {
                return Err(Error::OutOfRange {
                    index: last,
                    len: n,
                });
            }
        }
        let mut frozen = vec![true; n];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(Self {
            m,
            info_set,
            construction,
            design_snr_db,
            frozen,
        })
    }

    /// Convenience constructor for an explicitly given information set.
    pub fn custom(m: u32, mut info_set: Vec<usize>) -> Result<Self> {
        info_set.sort_unstable();
        info_set.dedup();
        Self::new(m, info_set, Construction::Custom, None)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        1usize << self.m
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn design_snr_db(&self) -> Option<f64> {
        self.design_snr_db
    }

    #[inline]
    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Places `msg` on the information positions; frozen positions are 0.
    pub fn scatter(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                actual: msg.len(),
            });
        }
        let mut u = vec![0u8; self.n()];
        for (&i, &b) in self.info_set.iter().zip(msg) {
            u[i] = b & 1;
        }
        Ok(u)
    }

    /// Reads the information positions of `u`.
    pub fn gather(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("CodeSpec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Encodes a length-`k` message into a length-`n` codeword.
pub fn encode(spec: &CodeSpec, msg: &[u8]) -> Result<Vec<u8>> {
    let u = spec.scatter(msg)?;
    polar_transform(&u, spec.m())
}

/// Reed-Muller code `RM(r, m)` as a polar code: `i` is an information index
/// iff `popcount(i) >= m - r`.
pub fn construct_rm(m: u32, r: u32) -> Result<CodeSpec> {
    if r > m {
        return Err(Error::InvalidOrder { depth: m, order: r });
    }
    let n = 1usize << m;
    let info_set = (0..n)
        .filter(|&i| i.count_ones() + r >= m)
        .collect::<Vec<_>>();
    CodeSpec::new(m, info_set, Construction::ReedMuller { order: r }, None)
}
