//! Successive-cancellation decoding over any [`LlrAlgebra`].
//!
//! The decoder works on the bit-reversed channel vector, so the layer next to
//! the channel combines positions `j` and `j + n/2` and the node at layer `ℓ`
//! for bit `i` applies `⊞` when bit `m − ℓ` of `i` is 0 and `⊎` otherwise.
//! Messages live in one flat buffer with layer `ℓ ∈ [1, m]` holding `2^{m−ℓ}`
//! values; partial sums of left children live in a second flat buffer of the
//! same shape. Only the layers whose node changes between bit `i − 1` and bit
//! `i` are recomputed, which gives the usual `O(n log n)` schedule.

use crate::code::{bit_reversal_permute, encode, polar_transform, CodeSpec};
use crate::error::{Error, Result};
use crate::llr::LlrAlgebra;
use crate::numeric::log_sum_exp;

/// Node operation at a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeOp {
    Check,
    Variable,
}

/// First layer that must be recomputed for bit `i`.
#[inline]
pub(crate) fn start_layer(i: usize, m: u32) -> u32 {
    if i == 0 {
        1
    } else {
        m - i.trailing_zeros()
    }
}

#[inline]
pub(crate) fn node_op(i: usize, m: u32, layer: u32) -> NodeOp {
    if (i >> (m - layer)) & 1 == 0 {
        NodeOp::Check
    } else {
        NodeOp::Variable
    }
}

/// Offset of layer `ℓ ≥ 1` inside a flat buffer of `n − 1` entries.
#[inline]
pub(crate) fn layer_offset(n: usize, layer: u32) -> usize {
    n - (n >> (layer - 1))
}

/// Computes one layer from its parent (`2·out.len()` values). `left` holds the
/// re-encoded bits of the left sibling and is only read for `⊎`.
#[inline]
pub(crate) fn compute_layer<A: LlrAlgebra>(
    algebra: &A,
    op: NodeOp,
    parent: &[A::Llr],
    left: &[u8],
    out: &mut [A::Llr],
) {
    let s = out.len();
    let (top, bottom) = parent.split_at(s);
    match op {
        NodeOp::Check => {
            for ((o, &a), &b) in out.iter_mut().zip(top).zip(bottom) {
                *o = algebra.cn(a, b);
            }
        }
        NodeOp::Variable => {
            for (((o, &a), &b), &bit) in out.iter_mut().zip(top).zip(bottom).zip(left) {
                *o = algebra.vn(b, algebra.flip(a, bit));
            }
        }
    }
}

/// Output of an SC run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScOutput<L> {
    /// Estimated `u`, frozen positions 0.
    pub u_hat: Vec<u8>,
    /// The `k` information bits of `u_hat`.
    pub info_bits: Vec<u8>,
    /// Decision LLR `λ_i` for every bit.
    pub llrs: Vec<L>,
}

/// Reusable SC decoder state for a fixed depth.
#[derive(Debug, Clone)]
pub struct ScDecoder<A: LlrAlgebra> {
    algebra: A,
    m: u32,
    channel: Vec<A::Llr>,
    messages: Vec<A::Llr>,
    left: Vec<u8>,
    scratch: [Vec<u8>; 2],
}

impl<A: LlrAlgebra> ScDecoder<A> {
    pub fn new(algebra: A, m: u32) -> Self {
        Self {
            algebra,
            m,
            channel: Vec::new(),
            messages: Vec::new(),
            left: Vec::new(),
            scratch: [Vec::new(), Vec::new()],
        }
    }

    pub fn algebra(&self) -> &A {
        &self.algebra
    }

    fn n(&self) -> usize {
        1usize << self.m
    }

    fn load(&mut self, channel_llrs: &[A::Llr]) -> Result<()> {
        let n = self.n();
        if channel_llrs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: channel_llrs.len(),
            });
        }
        self.channel = bit_reversal_permute(channel_llrs, self.m)?;
        let filler = channel_llrs[0];
        self.messages.clear();
        self.messages.resize(n.saturating_sub(1), filler);
        self.left.clear();
        self.left.resize(n.saturating_sub(1), 0);
        for s in &mut self.scratch {
            s.clear();
            s.resize(n, 0);
        }
        Ok(())
    }

    fn decision_llr(&mut self, i: usize) -> A::Llr {
        let (m, n) = (self.m, self.n());
        if m == 0 {
            return self.channel[0];
        }
        for layer in start_layer(i, m)..=m {
            let s = n >> layer;
            let op = node_op(i, m, layer);
            let out_off = layer_offset(n, layer);
            let left = &self.left[out_off..out_off + s];
            if layer == 1 {
                let out = &mut self.messages[..s];
                compute_layer(&self.algebra, op, &self.channel, left, out);
            } else {
                let parent_off = layer_offset(n, layer - 1);
                let (head, tail) = self.messages.split_at_mut(out_off);
                let parent = &head[parent_off..parent_off + 2 * s];
                compute_layer(&self.algebra, op, parent, left, &mut tail[..s]);
            }
        }
        self.messages[n - 2]
    }

    fn commit(&mut self, i: usize, bit: u8) {
        let (m, n) = (self.m, self.n());
        let [cur, next] = &mut self.scratch;
        cur[0] = bit;
        let mut layer = m;
        while layer > 0 {
            let s = n >> layer;
            let off = layer_offset(n, layer);
            if (i >> (m - layer)) & 1 == 0 {
                self.left[off..off + s].copy_from_slice(&cur[..s]);
                return;
            }
            let left = &self.left[off..off + s];
            for j in 0..s {
                next[j] = left[j] ^ cur[j];
                next[j + s] = cur[j];
            }
            std::mem::swap(cur, next);
            layer -= 1;
        }
    }

    /// Runs the SC schedule, asking `decide(i, λ_i)` for every bit.
    fn run(
        &mut self,
        channel_llrs: &[A::Llr],
        mut decide: impl FnMut(usize, A::Llr) -> u8,
    ) -> Result<(Vec<u8>, Vec<A::Llr>)> {
        self.load(channel_llrs)?;
        let n = self.n();
        let mut u_hat = Vec::with_capacity(n);
        let mut llrs = Vec::with_capacity(n);
        for i in 0..n {
            let llr = self.decision_llr(i);
            let bit = decide(i, llr);
            llrs.push(llr);
            u_hat.push(bit);
            self.commit(i, bit);
        }
        Ok((u_hat, llrs))
    }

    /// Decodes: frozen bits are 0, information bits follow the sign of `λ_i`.
    pub fn decode(&mut self, spec: &CodeSpec, channel_llrs: &[A::Llr]) -> Result<ScOutput<A::Llr>> {
        self.check_spec(spec)?;
        let algebra = self.algebra.clone();
        let (u_hat, llrs) = self.run(channel_llrs, |i, llr| {
            if spec.is_frozen(i) {
                0
            } else {
                algebra.decide(llr)
            }
        })?;
        Ok(ScOutput {
            info_bits: spec.gather(&u_hat),
            u_hat,
            llrs,
        })
    }

    /// Decision LLRs with the partial sums taken from the true `u`.
    pub fn genie_llrs(&mut self, channel_llrs: &[A::Llr], true_u: &[u8]) -> Result<Vec<A::Llr>> {
        if true_u.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: true_u.len(),
            });
        }
        let (_, llrs) = self.run(channel_llrs, |i, _| true_u[i])?;
        Ok(llrs)
    }

    fn check_spec(&self, spec: &CodeSpec) -> Result<()> {
        if spec.m() != self.m {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: spec.n(),
            });
        }
        Ok(())
    }
}

/// One-shot SC decoding.
pub fn sc_decode<A: LlrAlgebra>(
    spec: &CodeSpec,
    channel_llrs: &[A::Llr],
    algebra: A,
) -> Result<ScOutput<A::Llr>> {
    ScDecoder::new(algebra, spec.m()).decode(spec, channel_llrs)
}

/// Genie-aided decision LLRs for every synthetic channel.
pub fn sc_genie_llrs<A: LlrAlgebra>(
    spec: &CodeSpec,
    channel_llrs: &[A::Llr],
    true_u: &[u8],
    algebra: A,
) -> Result<Vec<A::Llr>> {
    ScDecoder::new(algebra, spec.m()).genie_llrs(channel_llrs, true_u)
}

/// Largest block length accepted by [`synthetic_llr_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 16;

/// `λ_i` of the `i`-th synthetic channel by exhaustive marginalization over
/// `u_{i+1}, …, u_{n−1}` (log domain). `u_prefix` supplies `u_0 … u_{i−1}`.
///
/// Channel likelihoods use `ln p(y_j | x_j) = const + (1 − 2x_j) λ_j / 2`.
pub fn synthetic_llr_bruteforce(
    spec: &CodeSpec,
    y_llrs: &[f64],
    u_prefix: &[u8],
    i: usize,
) -> Result<f64> {
    let n = spec.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge(n));
    }
    if y_llrs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y_llrs.len(),
        });
    }
    if i >= n {
        return Err(Error::OutOfRange { index: i, len: n });
    }
    if u_prefix.len() < i {
        return Err(Error::LengthMismatch {
            expected: i,
            actual: u_prefix.len(),
        });
    }
    let free = n - i - 1;
    let log_lik = |ui: u8| -> f64 {
        log_sum_exp((0..1usize << free).map(|rest| {
            let mut u = vec![0u8; n];
            u[..i].copy_from_slice(&u_prefix[..i]);
            u[i] = ui;
            for j in 0..free {
                u[i + 1 + j] = ((rest >> j) & 1) as u8;
            }
            let x = polar_transform(&u, spec.m()).expect("length checked");
            x.iter()
                .zip(y_llrs)
                .map(|(&c, &l)| if c == 0 { 0.5 * l } else { -0.5 * l })
                .sum::<f64>()
        }))
    };
    Ok(log_lik(0) - log_lik(1))
}

/// Re-encodes SC decisions; convenience for tests and the harness.
pub fn codeword_of(spec: &CodeSpec, info_bits: &[u8]) -> Result<Vec<u8>> {
    encode(spec, info_bits)
}
