//! LLR algebras `(L, ⊞, ⊎, −)`.
//!
//! Decoders are generic over [`LlrAlgebra`], so the same SC/SCL schedule runs on
//! unquantized reals, on the ternary alphabet `{−1, 0, +1}` and on the coupled
//! pair algebra used to analyse a quantized decoder next to an unquantized one.

use std::fmt::Debug;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

/// Decision taken when a decision LLR is exactly zero.
pub const TIE_DECISION: u8 = 0;

/// A ternary LLR level.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[repr(i8)]
pub enum Ternary {
    Minus = -1,
    #[default]
    Zero = 0,
    Plus = 1,
}

impl Ternary {
    pub const ALL: [Ternary; 3] = [Ternary::Minus, Ternary::Zero, Ternary::Plus];

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    /// Clips an integer to the ternary alphabet.
    #[inline]
    pub fn clip(v: i32) -> Self {
        match v.signum() {
            -1 => Ternary::Minus,
            0 => Ternary::Zero,
            _ => Ternary::Plus,
        }
    }

    /// Index into `[Minus, Zero, Plus]`.
    #[inline]
    pub fn index(self) -> usize {
        (self as i8 + 1) as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl Neg for Ternary {
    type Output = Ternary;

    #[inline]
    fn neg(self) -> Ternary {
        Ternary::clip(-(self as i32))
    }
}

/// Check-node kernel for real LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnKernel {
    /// `sign(a) sign(b) min(|a|, |b|)`.
    #[default]
    MinSum,
    /// `2 atanh(tanh(a/2) tanh(b/2))`.
    Exact,
}

/// An LLR alphabet with check-node, variable-node and negation operations.
pub trait LlrAlgebra: Clone + Send + Sync {
    type Llr: Copy + PartialEq + Debug + Default + Send + Sync;

    /// Check-node operation `a ⊞ b`.
    fn cn(&self, a: Self::Llr, b: Self::Llr) -> Self::Llr;

    /// Variable-node operation `a ⊎ b`.
    fn vn(&self, a: Self::Llr, b: Self::Llr) -> Self::Llr;

    fn negate(&self, a: Self::Llr) -> Self::Llr;

    /// Hard decision: 0 for positive, 1 for negative, [`TIE_DECISION`] for zero.
    fn decide(&self, a: Self::Llr) -> u8;

    /// Real value fed to the path-metric rules (the reconstruction value for
    /// quantized alphabets).
    fn metric_llr(&self, a: Self::Llr) -> f64;

    /// Ternary level, when the alphabet has one.
    fn level(&self, _a: Self::Llr) -> Option<Ternary> {
        None
    }

    /// `(−1)^bit · a`.
    #[inline]
    fn flip(&self, a: Self::Llr, bit: u8) -> Self::Llr {
        if bit == 0 {
            a
        } else {
            self.negate(a)
        }
    }
}

#[inline]
fn decide_real(a: f64) -> u8 {
    if a > 0.0 {
        0
    } else if a < 0.0 {
        1
    } else {
        TIE_DECISION
    }
}

/// Min-sum check node for reals. Infinite magnitudes follow `min`.
#[inline]
pub fn cn_min_sum(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

/// Exact check node, `2 atanh(tanh(a/2) tanh(b/2))`, evaluated as
/// `min(|a|,|b|) + ln(1 + e^{−(|a|+|b|)}) − ln(1 + e^{−||a|−|b||})` with the
/// product sign. This form never overflows, so there is no switch-over to the
/// `tanh` expression at any magnitude.
#[inline]
pub fn cn_exact(a: f64, b: f64) -> f64 {
    let (x, y) = (a.abs(), b.abs());
    let min = x.min(y);
    let mag = if min.is_infinite() {
        f64::INFINITY
    } else {
        let mag = min + (-(x + y)).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p();
        mag.max(0.0)
    };
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

/// Unquantized algebra `L∞` over `f64`, natural-log LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Unquantized {
    pub kernel: CnKernel,
}

impl Unquantized {
    pub fn min_sum() -> Self {
        Self {
            kernel: CnKernel::MinSum,
        }
    }

    pub fn exact() -> Self {
        Self {
            kernel: CnKernel::Exact,
        }
    }
}

impl LlrAlgebra for Unquantized {
    type Llr = f64;

    #[inline]
    fn cn(&self, a: f64, b: f64) -> f64 {
        match self.kernel {
            CnKernel::MinSum => cn_min_sum(a, b),
            CnKernel::Exact => cn_exact(a, b),
        }
    }

    #[inline]
    fn vn(&self, a: f64, b: f64) -> f64 {
        debug_assert!(
            !(a.is_infinite() && b.is_infinite() && a.signum() != b.signum()),
            "opposing infinite LLRs"
        );
        a + b
    }

    #[inline]
    fn negate(&self, a: f64) -> f64 {
        -a
    }

    #[inline]
    fn decide(&self, a: f64) -> u8 {
        decide_real(a)
    }

    #[inline]
    fn metric_llr(&self, a: f64) -> f64 {
        a
    }
}

/// Ternary algebra `L3` (min-sum clipped to `{−1, 0, +1}`).
///
/// `recon` is the reconstruction value used when a level enters a path metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TernaryAlgebra {
    pub recon: f64,
}

impl Default for TernaryAlgebra {
    fn default() -> Self {
        Self { recon: 1.0 }
    }
}

/// Check node: sign product, zero absorbing.
#[inline]
pub fn ternary_cn(a: Ternary, b: Ternary) -> Ternary {
    Ternary::clip(a as i32 * b as i32)
}

/// Variable node: saturating sum.
#[inline]
pub fn ternary_vn(a: Ternary, b: Ternary) -> Ternary {
    Ternary::clip(a as i32 + b as i32)
}

impl LlrAlgebra for TernaryAlgebra {
    type Llr = Ternary;

    #[inline]
    fn cn(&self, a: Ternary, b: Ternary) -> Ternary {
        ternary_cn(a, b)
    }

    #[inline]
    fn vn(&self, a: Ternary, b: Ternary) -> Ternary {
        ternary_vn(a, b)
    }

    #[inline]
    fn negate(&self, a: Ternary) -> Ternary {
        -a
    }

    #[inline]
    fn decide(&self, a: Ternary) -> u8 {
        match a {
            Ternary::Plus => 0,
            Ternary::Minus => 1,
            Ternary::Zero => TIE_DECISION,
        }
    }

    #[inline]
    fn metric_llr(&self, a: Ternary) -> f64 {
        self.recon * a.value() as f64
    }

    #[inline]
    fn level(&self, a: Ternary) -> Option<Ternary> {
        Some(a)
    }
}

/// A coupled (quantized, unquantized) message.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointLlr {
    pub q: Ternary,
    pub unq: f64,
}

/// Product algebra `L(3,∞) = L3 × L∞` with componentwise operations.
///
/// Decisions and path-metric inputs follow the quantized component; the
/// unquantized side rides along for analysis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAlgebra {
    pub ternary: TernaryAlgebra,
    pub unquantized: Unquantized,
}

impl LlrAlgebra for JointAlgebra {
    type Llr = JointLlr;

    #[inline]
    fn cn(&self, a: JointLlr, b: JointLlr) -> JointLlr {
        JointLlr {
            q: ternary_cn(a.q, b.q),
            unq: self.unquantized.cn(a.unq, b.unq),
        }
    }

    #[inline]
    fn vn(&self, a: JointLlr, b: JointLlr) -> JointLlr {
        JointLlr {
            q: ternary_vn(a.q, b.q),
            unq: self.unquantized.vn(a.unq, b.unq),
        }
    }

    #[inline]
    fn negate(&self, a: JointLlr) -> JointLlr {
        JointLlr {
            q: -a.q,
            unq: -a.unq,
        }
    }

    #[inline]
    fn decide(&self, a: JointLlr) -> u8 {
        self.ternary.decide(a.q)
    }

    #[inline]
    fn metric_llr(&self, a: JointLlr) -> f64 {
        self.ternary.metric_llr(a.q)
    }

    #[inline]
    fn level(&self, a: JointLlr) -> Option<Ternary> {
        Some(a.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Ternary::*;

    #[test]
    fn ternary_tables_match_golden() {
        // rows/cols ordered −1, 0, +1
        let cn_table = [[Plus, Zero, Minus], [Zero, Zero, Zero], [Minus, Zero, Plus]];
        let vn_table = [
            [Minus, Minus, Zero],
            [Minus, Zero, Plus],
            [Zero, Plus, Plus],
        ];
        for (r, a) in Ternary::ALL.into_iter().enumerate() {
            for (c, b) in Ternary::ALL.into_iter().enumerate() {
                assert_eq!(ternary_cn(a, b), cn_table[r][c], "{a:?} ⊞ {b:?}");
                assert_eq!(ternary_vn(a, b), vn_table[r][c], "{a:?} ⊎ {b:?}");
            }
        }
        assert_eq!(ternary_vn(Plus, Minus), Zero);
        assert_eq!(ternary_vn(Plus, Plus), Plus);
        assert_eq!(ternary_cn(Minus, Minus), Plus);
        assert_eq!(-Plus, Minus);
        assert_eq!(-Zero, Zero);
    }

    #[test]
    fn ternary_ops_are_clipped_min_sum() {
        let clip = |v: f64| Ternary::clip(v.clamp(-1.0, 1.0) as i32);
        for a in Ternary::ALL {
            for b in Ternary::ALL {
                let (x, y) = (a.value() as f64, b.value() as f64);
                assert_eq!(ternary_cn(a, b), clip(cn_min_sum(x, y)));
                assert_eq!(ternary_vn(a, b), clip(x + y));
            }
        }
    }

    #[test]
    fn ternary_commutes_and_negation_distributes() {
        for a in Ternary::ALL {
            for b in Ternary::ALL {
                assert_eq!(ternary_cn(a, b), ternary_cn(b, a));
                assert_eq!(ternary_vn(a, b), ternary_vn(b, a));
                assert_eq!(-ternary_cn(a, b), ternary_cn(-a, b));
                assert_eq!(-ternary_vn(a, b), ternary_vn(-a, -b));
            }
            assert_eq!(-(-a), a);
        }
    }

    #[test]
    fn real_examples() {
        let alg = Unquantized::min_sum();
        assert_eq!(alg.vn(1.5, -0.5), 1.0);
        assert_eq!(alg.cn(3.0, -2.0), -2.0);
        for x in [-40.0, -3.0, 0.5, 12.0, 800.0] {
            assert_eq!(cn_exact(x, 0.0), 0.0);
        }
        assert_eq!(cn_min_sum(f64::INFINITY, -2.5), -2.5);
        assert_eq!(cn_min_sum(-f64::INFINITY, -2.5), 2.5);
        assert_eq!(cn_exact(f64::INFINITY, -2.5), -2.5);
        assert_eq!(cn_exact(f64::INFINITY, f64::INFINITY), f64::INFINITY);
        assert!(cn_exact(900.0, 1000.0).is_finite());
    }

    #[test]
    fn joint_negation_is_componentwise() {
        let alg = JointAlgebra::default();
        let a = JointLlr { q: Plus, unq: 2.5 };
        assert_eq!(
            alg.negate(a),
            JointLlr {
                q: Minus,
                unq: -2.5
            }
        );
    }

    proptest! {
        #[test]
        fn exact_kernel_matches_tanh_form(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let reference = 2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh();
            prop_assert!((cn_exact(a, b) - reference).abs() < 1e-9 * (1.0 + reference.abs()));
        }

        #[test]
        fn exact_kernel_matches_probability_form(a in -60.0f64..60.0, b in -60.0f64..60.0) {
            // ln((1 + e^{a+b}) / (e^a + e^b)) in log-sum-exp form
            let lse = |x: f64, y: f64| x.max(y) + (-(x - y).abs()).exp().ln_1p();
            let reference = lse(0.0, a + b) - lse(a, b);
            prop_assert!((cn_exact(a, b) - reference).abs() < 1e-9);
        }

        #[test]
        fn real_ops_commute(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            for alg in [Unquantized::min_sum(), Unquantized::exact()] {
                prop_assert_eq!(alg.cn(a, b), alg.cn(b, a));
                prop_assert_eq!(alg.vn(a, b), alg.vn(b, a));
                prop_assert_eq!(-alg.cn(a, b), alg.cn(-a, b));
            }
        }

        #[test]
        fn exact_magnitude_bounded_by_min(a in -80.0f64..80.0, b in -80.0f64..80.0) {
            prop_assert!(cn_exact(a, b).abs() <= a.abs().min(b.abs()) + 1e-12);
        }

        #[test]
        fn joint_ops_project(qa in 0usize..3, qb in 0usize..3, a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let alg = JointAlgebra::default();
            let x = JointLlr { q: Ternary::from_index(qa), unq: a };
            let y = JointLlr { q: Ternary::from_index(qb), unq: b };
            let c = alg.cn(x, y);
            let v = alg.vn(x, y);
            prop_assert_eq!(c.q, ternary_cn(x.q, y.q));
            prop_assert_eq!(c.unq, cn_min_sum(a, b));
            prop_assert_eq!(v.q, ternary_vn(x.q, y.q));
            prop_assert_eq!(v.unq, a + b);
        }
    }
}
