//! BiAWGN channel, the symmetric 3-level LLR quantizer and the binary
//! error-and-erasure channel (BEEC) it induces.
//!
//! Capacities are in bits; LLRs are natural-log. Bit 0 maps to +1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::llr::Ternary;
use crate::numeric::{entropy_bits, softplus};

/// Reconstruction magnitude used when the BEEC LLR would be infinite.
pub const LLR_CAP: f64 = 40.0;

/// BiAWGN with noise variance `sigma2` per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiAwgn {
    pub sigma2: f64,
}

impl BiAwgn {
    pub fn new(sigma2: f64) -> Self {
        assert!(sigma2 > 0.0, "sigma2 must be positive");
        Self { sigma2 }
    }

    /// `Es/N0 = 1 / (2σ²)`, given in dB.
    pub fn from_esn0_db(esn0_db: f64) -> Self {
        Self::new(1.0 / (2.0 * db_to_lin(esn0_db)))
    }

    /// `Eb/N0 = Es/N0 / R`, given in dB.
    pub fn from_ebn0_db(ebn0_db: f64, rate: f64) -> Self {
        Self::from_esn0_db(ebn0_db + lin_to_db(rate))
    }

    pub fn esn0(&self) -> f64 {
        1.0 / (2.0 * self.sigma2)
    }

    pub fn ebn0(&self, rate: f64) -> f64 {
        self.esn0() / rate
    }

    /// Mean of the channel LLR given +1 was sent; its variance is `2μ`.
    pub fn mu(&self) -> f64 {
        2.0 / self.sigma2
    }

    /// `P(Λ ≤ t)` for `Λ ~ N(μ, 2μ)`.
    pub fn llr_cdf(&self, t: f64) -> f64 {
        let mu = self.mu();
        0.5 * erfc((mu - t) / (2.0 * mu.sqrt()))
    }

    /// `P(Λ ≥ t)` for `Λ ~ N(μ, 2μ)`.
    pub fn llr_ccdf(&self, t: f64) -> f64 {
        let mu = self.mu();
        0.5 * erfc((t - mu) / (2.0 * mu.sqrt()))
    }

    /// Density of `N(μ, 2μ)`.
    pub fn llr_pdf(&self, t: f64) -> f64 {
        let mu = self.mu();
        let var = 2.0 * mu;
        (-(t - mu) * (t - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Sends `codeword` over the BiAWGN and returns the channel LLRs `2y/σ²`.
pub fn transmit<R: Rng + ?Sized>(codeword: &[u8], channel: &BiAwgn, rng: &mut R) -> Vec<f64> {
    let sigma = channel.sigma2.sqrt();
    let scale = 2.0 / channel.sigma2;
    codeword
        .iter()
        .map(|&c| {
            let x = if c == 0 { 1.0 } else { -1.0 };
            let noise: f64 = rng.sample(StandardNormal);
            scale * (x + sigma * noise)
        })
        .collect()
}

/// Threshold and reconstruction values of the 3-level quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerParams {
    /// Dead-zone threshold `δ` on the channel LLR.
    pub delta: f64,
    /// Reconstruction magnitude when feeding an unquantized decoder.
    pub recon_unq: f64,
    /// Reconstruction magnitude when feeding a ternary decoder.
    pub recon_q: f64,
}

impl QuantizerParams {
    /// Capacity-optimal threshold with BEEC-matched reconstruction for
    /// unquantized decoders and `Δ = 1` for quantized ones.
    pub fn optimal(channel: &BiAwgn) -> Self {
        let (delta, _) = optimize_delta(channel);
        let recon_unq = beec_llr_reconstruction(&beec_from(channel, delta)).delta;
        Self {
            delta,
            recon_unq,
            recon_q: 1.0,
        }
    }
}

/// `−1` if `λ ≤ −δ`, `+1` if `λ ≥ δ`, `0` otherwise.
#[inline]
pub fn quantize(lambda: f64, delta: f64) -> Ternary {
    if lambda <= -delta {
        Ternary::Minus
    } else if lambda >= delta {
        Ternary::Plus
    } else {
        Ternary::Zero
    }
}

/// Transition probabilities of a binary error-and-erasure channel, given the
/// input `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeecParams {
    pub p_correct: f64,
    pub p_erase: f64,
    pub p_error: f64,
}

impl BeecParams {
    pub fn new(p_correct: f64, p_erase: f64, p_error: f64) -> Self {
        debug_assert!(p_correct >= 0.0 && p_erase >= 0.0 && p_error >= 0.0);
        debug_assert!((p_correct + p_erase + p_error - 1.0).abs() < 1e-9);
        Self {
            p_correct,
            p_erase,
            p_error,
        }
    }

    /// Probability of receiving `level` when bit `c` was sent.
    pub fn transition(&self, level: Ternary, c: u8) -> f64 {
        match (level, c) {
            (Ternary::Zero, _) => self.p_erase,
            (Ternary::Plus, 0) | (Ternary::Minus, 1) => self.p_correct,
            _ => self.p_error,
        }
    }
}

/// The BEEC seen through the quantizer with threshold `delta`.
pub fn beec_from(channel: &BiAwgn, delta: f64) -> BeecParams {
    let mu = channel.mu();
    let s = 2.0 * mu.sqrt();
    let p_correct = 0.5 * erfc((delta - mu) / s);
    let p_error = 0.5 * erfc((delta + mu) / s);
    // erf differences keep the erasure mass accurate when it is small
    let p_erase = 0.5 * (erf((delta - mu) / s) + erf((delta + mu) / s));
    BeecParams {
        p_correct,
        p_erase: p_erase.max(0.0),
        p_error,
    }
}

/// `I(X;Y) = H(Y) − H(Y|X)` in bits for uniform input.
pub fn beec_capacity(b: &BeecParams) -> f64 {
    let half = 0.5 * (b.p_correct + b.p_error);
    let h_y = entropy_bits(&[half, b.p_erase, half]);
    let h_y_given_x = entropy_bits(&[b.p_correct, b.p_erase, b.p_error]);
    (h_y - h_y_given_x).max(0.0)
}

/// Threshold maximizing the BEEC capacity, searched on `(0, 8·sqrt(2μ)]`:
/// coarse grid, then golden section around the best grid point.
pub fn optimize_delta(channel: &BiAwgn) -> (f64, f64) {
    const GRID: usize = 512;
    let upper = 8.0 * (2.0 * channel.mu()).sqrt();
    let cap = |d: f64| beec_capacity(&beec_from(channel, d));
    let step = upper / GRID as f64;
    let (best, _) = (1..=GRID).map(|j| (j, cap(j as f64 * step))).fold(
        (1, f64::NEG_INFINITY),
        |acc, (j, c)| if c > acc.1 { (j, c) } else { acc },
    );
    let mut lo = (best as f64 - 1.0) * step;
    let mut hi = ((best + 1) as f64 * step).min(upper);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (cap(x1), cap(x2));
    while hi - lo > 1e-10 * (1.0 + hi) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = cap(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = cap(x1);
        }
    }
    let delta = 0.5 * (lo + hi);
    (delta, cap(delta))
}

/// `C = 1 − E[log2(1 + e^{−Λ})]`, `Λ ~ N(μ, 2μ)`, by the trapezoidal rule over
/// ±16 standard deviations.
pub fn biawgn_capacity(channel: &BiAwgn) -> f64 {
    const POINTS: usize = 8192;
    let mu = channel.mu();
    let sd = (2.0 * mu).sqrt();
    let (lo, hi) = (mu - 16.0 * sd, mu + 16.0 * sd);
    let h = (hi - lo) / POINTS as f64;
    let mut acc = 0.0;
    for j in 0..=POINTS {
        let t = lo + j as f64 * h;
        let w = if j == 0 || j == POINTS { 0.5 } else { 1.0 };
        acc += w * channel.llr_pdf(t) * softplus(-t);
    }
    (1.0 - acc * h / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// Reconstruction magnitude matching the BEEC LLR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub delta: f64,
    /// Set when `p_error == 0` (or the ratio exceeds [`LLR_CAP`]) and the value
    /// was capped.
    pub capped: bool,
}

/// `Δ = ln(p_correct / p_error)`, capped at [`LLR_CAP`].
pub fn beec_llr_reconstruction(b: &BeecParams) -> Reconstruction {
    if b.p_error <= 0.0 {
        return Reconstruction {
            delta: LLR_CAP,
            capped: true,
        };
    }
    let delta = (b.p_correct / b.p_error).ln();
    if delta > LLR_CAP {
        Reconstruction {
            delta: LLR_CAP,
            capped: true,
        }
    } else {
        Reconstruction {
            delta,
            capped: false,
        }
    }
}
