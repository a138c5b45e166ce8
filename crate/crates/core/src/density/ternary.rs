//! Exact density evolution for the ternary algebra.

use serde::{Deserialize, Serialize};

use crate::channel::{beec_capacity, BeecParams};
use crate::llr::{ternary_cn, ternary_vn, Ternary};

use super::DensityOps;

/// Distribution of a ternary LLR, stored as `[P(−1), P(0), P(+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TernaryPmf(pub [f64; 3]);

impl TernaryPmf {
    pub fn new(p_minus: f64, p_zero: f64, p_plus: f64) -> Self {
        Self([p_minus, p_zero, p_plus])
    }

    /// Channel output distribution given that 0 was sent.
    pub fn from_beec(b: &BeecParams) -> Self {
        Self::new(b.p_error, b.p_erase, b.p_correct)
    }

    pub fn minus(&self) -> f64 {
        self.0[0]
    }

    pub fn zero(&self) -> f64 {
        self.0[1]
    }

    pub fn plus(&self) -> f64 {
        self.0[2]
    }

    pub fn get(&self, t: Ternary) -> f64 {
        self.0[t.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn negated(&self) -> Self {
        Self::new(self.plus(), self.zero(), self.minus())
    }

    pub fn as_beec(&self) -> BeecParams {
        BeecParams {
            p_correct: self.plus(),
            p_erase: self.zero(),
            p_error: self.minus(),
        }
    }

    /// `P(−1) + ½ P(0)`.
    pub fn error_prob(&self) -> f64 {
        self.minus() + 0.5 * self.zero()
    }

    /// Capacity of the BEEC with these transition probabilities.
    pub fn capacity(&self) -> f64 {
        beec_capacity(&self.as_beec())
    }

    fn push(a: &Self, b: &Self, op: fn(Ternary, Ternary) -> Ternary) -> Self {
        let mut out = [0.0; 3];
        for x in Ternary::ALL {
            for y in Ternary::ALL {
                out[op(x, y).index()] += a.get(x) * b.get(y);
            }
        }
        Self(out)
    }
}

/// Density evolution with the ternary check- and variable-node operations.
#[derive(Debug, Clone, Copy, Default)]
pub struct TernaryDe;

impl DensityOps for TernaryDe {
    type Pmf = TernaryPmf;

    fn cn(&self, a: &TernaryPmf, b: &TernaryPmf) -> TernaryPmf {
        TernaryPmf::push(a, b, ternary_cn)
    }

    fn vn(&self, a: &TernaryPmf, b: &TernaryPmf) -> TernaryPmf {
        TernaryPmf::push(a, b, ternary_vn)
    }

    fn error_prob(&self, p: &TernaryPmf) -> f64 {
        p.error_prob()
    }

    fn capacity(&self, p: &TernaryPmf) -> f64 {
        p.capacity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &TernaryPmf, b: &TernaryPmf) -> bool {
        a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn closed_forms() {
        let (p, e, c) = (0.1, 0.3, 0.6);
        let w = TernaryPmf::new(p, e, c);
        let cn = TernaryDe.cn(&w, &w);
        assert!(close(
            &cn,
            &TernaryPmf::new(2.0 * c * p, e * (2.0 - e), c * c + p * p)
        ));
        let vn = TernaryDe.vn(&w, &w);
        let plus = c * c + 2.0 * c * e;
        let minus = p * p + 2.0 * p * e;
        assert!(close(
            &vn,
            &TernaryPmf::new(minus, 1.0 - plus - minus, plus)
        ));
        let perfect = TernaryPmf::new(0.0, 0.0, 1.0);
        assert!(close(&TernaryDe.cn(&perfect, &perfect), &perfect));
        let erasure = TernaryPmf::new(0.0, 1.0, 0.0);
        assert!(close(&TernaryDe.vn(&erasure, &w), &w));
    }

    #[test]
    fn capacity_formulas_agree() {
        for w in [
            TernaryPmf::new(0.05, 0.25, 0.7),
            TernaryPmf::new(0.0, 0.5, 0.5),
            TernaryPmf::new(0.2, 0.0, 0.8),
        ] {
            // E[1 − log₂(1 + e^{−Λ})] with the consistent LLR of each output
            let l = if w.minus() > 0.0 {
                (w.plus() / w.minus()).ln()
            } else {
                f64::INFINITY
            };
            let f = |v: f64| 1.0 - crate::numeric::softplus(-v) / std::f64::consts::LN_2;
            let via_llr = w.plus() * f(l)
                + w.zero() * f(0.0)
                + if w.minus() > 0.0 {
                    w.minus() * f(-l)
                } else {
                    0.0
                };
            assert!((via_llr - w.capacity()).abs() < 1e-12);
        }
    }
}
