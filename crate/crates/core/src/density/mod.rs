//! Density evolution under the all-zero codeword and genie-aided decisions.
//!
//! The tree walk mirrors the SC decoder: the layer next to the channel uses
//! the most significant bit of `i`, a 0 bit selects `⊞` and a 1 bit `⊎`.
//! Leaves are visited in natural order.

pub mod grid;
pub mod rates;
pub mod ternary;

use crate::code::{CodeSpec, Construction};
use crate::error::{invalid, Result};

pub use grid::{Grid, GridDe, GridPmf};
pub use ternary::{TernaryDe, TernaryPmf};

/// Pushforward of independent message densities through the node operations.
pub trait DensityOps {
    type Pmf: Clone;

    fn cn(&self, a: &Self::Pmf, b: &Self::Pmf) -> Self::Pmf;
    fn vn(&self, a: &Self::Pmf, b: &Self::Pmf) -> Self::Pmf;
    /// `P(Λ < 0) + ½ P(Λ = 0)`.
    fn error_prob(&self, p: &Self::Pmf) -> f64;
    /// Mutual information of the synthetic channel in bits.
    fn capacity(&self, p: &Self::Pmf) -> f64;
}

/// Calls `visit(i, pmf)` for every synthetic channel, `i` ascending. Holds one
/// density per layer.
pub fn evolve_visit<D: DensityOps>(
    ops: &D,
    m: u32,
    channel: &D::Pmf,
    mut visit: impl FnMut(usize, &D::Pmf),
) {
    fn walk<D: DensityOps>(
        ops: &D,
        depth: u32,
        m: u32,
        prefix: usize,
        node: &D::Pmf,
        visit: &mut impl FnMut(usize, &D::Pmf),
    ) {
        if depth == m {
            visit(prefix, node);
            return;
        }
        let minus = ops.cn(node, node);
        walk(ops, depth + 1, m, prefix << 1, &minus, visit);
        drop(minus);
        let plus = ops.vn(node, node);
        walk(ops, depth + 1, m, (prefix << 1) | 1, &plus, visit);
    }
    walk(ops, 0, m, 0, channel, &mut visit);
}

/// Densities of all `2^m` synthetic channels.
pub fn evolve<D: DensityOps>(ops: &D, m: u32, channel: &D::Pmf) -> Vec<D::Pmf> {
    let mut out = Vec::with_capacity(1 << m);
    evolve_visit(ops, m, channel, |_, p| out.push(p.clone()));
    out
}

/// Per-channel error probabilities and capacities.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReliabilityReport {
    pub error_prob: Vec<f64>,
    pub capacity: Vec<f64>,
}

impl ReliabilityReport {
    /// `(1/n) Σ I(W_i)`.
    pub fn mean_capacity(&self) -> f64 {
        self.capacity.iter().sum::<f64>() / self.capacity.len() as f64
    }
}

pub fn reliabilities<D: DensityOps>(ops: &D, m: u32, channel: &D::Pmf) -> ReliabilityReport {
    let n = 1usize << m;
    let mut error_prob = vec![0.0; n];
    let mut capacity = vec![0.0; n];
    evolve_visit(ops, m, channel, |i, p| {
        error_prob[i] = ops.error_prob(p);
        capacity[i] = ops.capacity(p);
    });
    ReliabilityReport {
        error_prob,
        capacity,
    }
}

/// Indices sorted from most to least reliable; equal error probabilities
/// prefer the higher index.
pub fn reliability_order(error_prob: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..error_prob.len()).collect();
    order.sort_by(|&a, &b| error_prob[a].total_cmp(&error_prob[b]).then(b.cmp(&a)));
    order
}

/// Selects the `k` most reliable synthetic channels.
pub fn design_code<D: DensityOps>(
    m: u32,
    k: usize,
    channel: &D::Pmf,
    ops: &D,
    model: &str,
    design_snr_db: f64,
) -> Result<CodeSpec> {
    let n = 1usize << m;
    if k > n {
        return Err(invalid("k", format!("{k} exceeds n = {n}")));
    }
    let report = reliabilities(ops, m, channel);
    design_from_report(m, k, &report, model, design_snr_db)
}

pub fn design_from_report(
    m: u32,
    k: usize,
    report: &ReliabilityReport,
    model: &str,
    design_snr_db: f64,
) -> Result<CodeSpec> {
    let mut info_set: Vec<usize> = reliability_order(&report.error_prob)
        .into_iter()
        .take(k)
        .collect();
    info_set.sort_unstable();
    CodeSpec::new(
        m,
        info_set,
        Construction::DensityEvolution {
            model: model.to_string(),
        },
        Some(design_snr_db),
    )
}

/// Capacity of a synthetic channel from its density.
pub fn channel_capacity_of_pmf<D: DensityOps>(ops: &D, p: &D::Pmf) -> f64 {
    ops.capacity(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{beec_from, optimize_delta, BiAwgn};
    use crate::llr::CnKernel;

    #[test]
    fn single_layer() {
        let w = TernaryPmf::new(0.1, 0.2, 0.7);
        let out = evolve(&TernaryDe, 1, &w);
        assert_eq!(out, vec![TernaryDe.cn(&w, &w), TernaryDe.vn(&w, &w)]);
    }

    #[test]
    fn visiting_order_follows_index_bits() {
        // i = 1 = 01b at m = 2: ⊞ next to the channel, then ⊎
        let w = TernaryPmf::new(0.1, 0.2, 0.7);
        let out = evolve(&TernaryDe, 2, &w);
        let c = TernaryDe.cn(&w, &w);
        assert_eq!(out[1], TernaryDe.vn(&c, &c));
        let v = TernaryDe.vn(&w, &w);
        assert_eq!(out[2], TernaryDe.cn(&v, &v));
    }

    #[test]
    fn noiseless_fixed_point() {
        let w = TernaryPmf::new(0.0, 0.0, 1.0);
        assert!(evolve(&TernaryDe, 4, &w).iter().all(|p| *p == w));
    }

    #[test]
    fn last_channel_is_most_reliable_at_depth_two() {
        for w in [
            TernaryPmf::new(0.1, 0.2, 0.7),
            TernaryPmf::new(0.02, 0.5, 0.48),
        ] {
            let spec = design_code(2, 1, &w, &TernaryDe, "ternary", 0.0).unwrap();
            assert_eq!(spec.info_set(), &[3]);
            let r = reliabilities(&TernaryDe, 2, &w);
            assert!(r.error_prob[3] < r.error_prob[1] && r.error_prob[3] < r.error_prob[2]);
        }
        let full = design_code(
            3,
            8,
            &TernaryPmf::new(0.1, 0.2, 0.7),
            &TernaryDe,
            "ternary",
            0.0,
        )
        .unwrap();
        assert_eq!(full.info_set(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn designs_are_nested() {
        let ch = BiAwgn::from_ebn0_db(2.0, 0.5);
        let (delta, _) = optimize_delta(&ch);
        let w = TernaryPmf::from_beec(&beec_from(&ch, delta));
        let report = reliabilities(&TernaryDe, 6, &w);
        let mut prev: Vec<usize> = Vec::new();
        for k in 0..=64 {
            let spec = design_from_report(6, k, &report, "ternary", 2.0).unwrap();
            assert!(prev.iter().all(|i| spec.info_set().contains(i)));
            prev = spec.info_set().to_vec();
        }
    }

    #[test]
    fn ternary_conserves_capacity_only_at_the_channel() {
        let w = TernaryPmf::new(0.05, 0.3, 0.65);
        let c = w.capacity();
        let out = evolve(&TernaryDe, 1, &w);
        assert!(out[0].capacity() + out[1].capacity() <= 2.0 * c + 1e-12);
    }

    #[test]
    fn grid_and_ternary_agree_on_erasure_channels() {
        // a BEC is exactly representable on both, and min-sum is exact on it
        let grid = Grid::new(0.5, 30.0).unwrap();
        let bec = GridPmf::three_point(grid, 30.0, 0.0, 0.4, 0.6);
        let t = TernaryPmf::new(0.0, 0.4, 0.6);
        let de = GridDe::new(grid, CnKernel::MinSum);
        let g = reliabilities(&de, 4, &bec);
        let tr = reliabilities(&TernaryDe, 4, &t);
        for i in 0..16 {
            assert!((g.capacity[i] - tr.capacity[i]).abs() < 1e-12);
        }
    }
}
