//! Expected path metric updates.
//!
//! A ternary decoder and an unquantized decoder are run side by side on the
//! same channel output. Joint density evolution tracks the law of the pair
//! `(Λ^(q), Λ^(unq))` for each synthetic channel, and the table entry for a
//! level `q` and decision `u` is the conditional mean of the unquantized PM
//! increment given `Λ^(q) = q`.

use serde::{Deserialize, Serialize};

use crate::channel::{BiAwgn, QuantizerParams};
use crate::code::CodeSpec;
use crate::density::grid::{
    cn_min_sum, Convolver, ExactCnTable, Grid, GridPmf, DEFAULT_RANGE, DEFAULT_SPACING,
};
use crate::density::{evolve_visit, DensityOps, TernaryPmf};
use crate::error::{invalid, Error, Result};
use crate::llr::{ternary_cn, ternary_vn, CnKernel, Ternary};
use crate::numeric::softplus;
use crate::scl::refined_increment;

/// Per-bit PM increments indexed by `[i][level][u]`, levels ordered
/// `−1, 0, +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpmuTable {
    pub code_hash: String,
    pub ebn0_db: f64,
    pub entries: Vec<[[f64; 2]; 3]>,
}

impl EpmuTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize, level: Ternary, u: u8) -> Result<f64> {
        let row = self.entries.get(i).ok_or(Error::OutOfRange {
            index: i,
            len: self.entries.len(),
        })?;
        Ok(row[level.index()][u as usize])
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.entries {
            for v in row.iter().flatten() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(invalid(
                        "entries",
                        format!("increment {v} is not a finite nonnegative value"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks that the table was built for `spec`.
    pub fn check_code(&self, spec: &CodeSpec) -> Result<()> {
        if self.entries.len() != spec.n() {
            return Err(Error::LengthMismatch {
                expected: spec.n(),
                actual: self.entries.len(),
            });
        }
        if self.code_hash != spec.hash() {
            return Err(invalid("code_hash", "table was built for another code"));
        }
        Ok(())
    }
}

/// `pm + entry(i, level, u)`.
pub fn epmu_pm_update(table: &EpmuTable, i: usize, level: Ternary, u: u8, pm: f64) -> Result<f64> {
    Ok(pm + table.entry(i, level, u)?)
}

/// Joint law of a ternary and a real message: `comps[q]` holds the real
/// density restricted to ternary level `q` (unnormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    pub comps: [GridPmf; 3],
}

impl JointPmf {
    pub fn grid(&self) -> Grid {
        self.comps[0].grid
    }

    pub fn level(&self, q: Ternary) -> &GridPmf {
        &self.comps[q.index()]
    }

    pub fn total(&self) -> f64 {
        self.comps.iter().map(GridPmf::total).sum()
    }

    /// Law of the ternary component.
    pub fn ternary_marginal(&self) -> TernaryPmf {
        TernaryPmf(std::array::from_fn(|q| self.comps[q].total()))
    }

    /// Law of the real component.
    pub fn real_marginal(&self) -> GridPmf {
        let mut out = self.comps[0].clone();
        out.add_assign(&self.comps[1]);
        out.add_assign(&self.comps[2]);
        out
    }

    /// Law of `(−Λ^(q), −Λ^(unq))`.
    pub fn negated(&self) -> Self {
        Self {
            comps: std::array::from_fn(|q| self.comps[2 - q].negated()),
        }
    }
}

/// Channel LLR given that 0 was sent, together with its quantization at
/// threshold `δ`. The grid is fitted so that `±δ` fall on bin edges.
pub fn joint_channel_pmf(
    channel: &BiAwgn,
    delta: f64,
    spacing: f64,
    range: f64,
) -> Result<JointPmf> {
    let (grid, inner) = Grid::fitted_to_edge(delta, spacing, range)?;
    let real = GridPmf::from_biawgn(grid, channel);
    let j = grid.half_bins;
    if inner >= j {
        return Err(invalid(
            "range",
            format!("grid range {range} does not cover δ = {delta}"),
        ));
    }
    let mut comps = [
        GridPmf::zeros(grid),
        GridPmf::zeros(grid),
        GridPmf::zeros(grid),
    ];
    for (idx, &m) in real.mass.iter().enumerate() {
        let q = if idx + inner < j {
            Ternary::Minus
        } else if idx > j + inner {
            Ternary::Plus
        } else {
            Ternary::Zero
        };
        comps[q.index()].mass[idx] = m;
    }
    Ok(JointPmf { comps })
}

/// Density evolution of the coupled decoder pair: the ternary component
/// follows the ternary algebra, the real component follows `kernel` and addition.
#[derive(Debug, Clone)]
pub struct JointDe {
    kernel: CnKernel,
    conv: Convolver,
    exact: Option<ExactCnTable>,
}

impl JointDe {
    pub fn new(grid: Grid, kernel: CnKernel) -> Self {
        Self {
            kernel,
            conv: Convolver::new(grid),
            exact: matches!(kernel, CnKernel::Exact).then(|| ExactCnTable::new(grid)),
        }
    }

    pub fn kernel(&self) -> CnKernel {
        self.kernel
    }

    fn real_cn(&self, a: &GridPmf, b: &GridPmf) -> GridPmf {
        match &self.exact {
            Some(t) => t.cn(a, b),
            None => cn_min_sum(a, b),
        }
    }
}

impl DensityOps for JointDe {
    type Pmf = JointPmf;

    fn cn(&self, a: &JointPmf, b: &JointPmf) -> JointPmf {
        let grid = a.grid();
        let mut comps = [
            GridPmf::zeros(grid),
            GridPmf::zeros(grid),
            GridPmf::zeros(grid),
        ];
        for x in Ternary::ALL {
            for y in Ternary::ALL {
                let (ca, cb) = (a.level(x), b.level(y));
                if ca.total() == 0.0 || cb.total() == 0.0 {
                    continue;
                }
                comps[ternary_cn(x, y).index()].add_assign(&self.real_cn(ca, cb));
            }
        }
        JointPmf { comps }
    }

    fn vn(&self, a: &JointPmf, b: &JointPmf) -> JointPmf {
        let grid = a.grid();
        let spec = |p: &JointPmf| -> [Option<Vec<_>>; 3] {
            std::array::from_fn(|q| {
                (p.comps[q].total() != 0.0).then(|| self.conv.spectrum(&p.comps[q]))
            })
        };
        let (sa, sb) = (spec(a), spec(b));
        let mut acc: [Option<Vec<rustfft::num_complex::Complex<f64>>>; 3] = [None, None, None];
        for x in Ternary::ALL {
            for y in Ternary::ALL {
                let (Some(fa), Some(fb)) = (&sa[x.index()], &sb[y.index()]) else {
                    continue;
                };
                let slot = acc[ternary_vn(x, y).index()]
                    .get_or_insert_with(|| vec![Default::default(); fa.len()]);
                for ((s, p), r) in slot.iter_mut().zip(fa).zip(fb) {
                    *s += p * r;
                }
            }
        }
        JointPmf {
            comps: acc.map(|s| s.map_or_else(|| GridPmf::zeros(grid), |s| self.conv.to_grid(s))),
        }
    }

    /// Error probability of the ternary decision.
    fn error_prob(&self, p: &JointPmf) -> f64 {
        p.ternary_marginal().error_prob()
    }

    fn capacity(&self, p: &JointPmf) -> f64 {
        p.ternary_marginal().capacity()
    }
}

/// Conditional-on-all-zero joint laws of all `2^m` synthetic channels.
pub fn joint_evolve(ops: &JointDe, m: u32, channel: &JointPmf) -> Vec<JointPmf> {
    let mut out = Vec::with_capacity(1 << m);
    evolve_visit(ops, m, channel, |_, p| out.push(p.clone()));
    out
}

/// Unconditional law: `½P(λ) + ½P(−λ)` for information bits, unchanged for
/// frozen bits.
pub fn symmetrize(conditional: &JointPmf, info: bool) -> JointPmf {
    if !info {
        return conditional.clone();
    }
    let neg = conditional.negated();
    JointPmf {
        comps: std::array::from_fn(|q| {
            let mut c = conditional.comps[q].clone();
            c.add_assign(&neg.comps[q]);
            c.scale(0.5);
            c
        }),
    }
}

/// Increment that the table averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpmuIntegrand {
    #[default]
    Exact,
    Refined,
}

impl EpmuIntegrand {
    /// PM increment for LLR `lambda` and decision `u`.
    pub fn eval(self, lambda: f64, u: u8) -> f64 {
        let s = if u == 0 { -lambda } else { lambda };
        match self {
            Self::Exact => softplus(s),
            Self::Refined => refined_increment(s),
        }
    }
}

/// Below this level probability a conditional is treated as undefined.
pub const MARGINAL_FLOOR: f64 = 1e-12;

/// Diagnostics gathered while building a table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TableDiagnostics {
    /// Largest `|Σ_q P(q)·entry(q,u) − E[f(Λ^(unq),u)]|` over all cells.
    pub tower_residual: f64,
    /// Number of `(i, q)` cells filled by the fallback rule.
    pub filled_cells: usize,
}

/// Builds table rows from the unconditional joint laws. Cells whose level
/// probability is below [`MARGINAL_FLOOR`] get the refined increment at
/// `±recon`.
pub fn table_entries(
    joint: &[JointPmf],
    integrand: EpmuIntegrand,
    recon: f64,
) -> (Vec<[[f64; 2]; 3]>, TableDiagnostics) {
    let mut diag = TableDiagnostics::default();
    let entries = joint
        .iter()
        .map(|p| {
            let grid = p.grid();
            let mut row = [[0.0; 2]; 3];
            let mut tower = [0.0; 2];
            for q in Ternary::ALL {
                let c = p.level(q);
                let marginal = c.total();
                for u in 0..2u8 {
                    let weighted: f64 = c
                        .mass
                        .iter()
                        .enumerate()
                        .map(|(k, &mass)| mass * integrand.eval(grid.value(k), u))
                        .sum();
                    tower[u as usize] += weighted;
                    row[q.index()][u as usize] = if marginal < MARGINAL_FLOOR {
                        integrand_fallback(q, u, recon)
                    } else {
                        weighted / marginal
                    };
                }
                if marginal < MARGINAL_FLOOR {
                    diag.filled_cells += 1;
                }
            }
            let real = p.real_marginal();
            for u in 0..2u8 {
                let direct = real.expectation(|v| integrand.eval(v, u));
                let from_table: f64 = Ternary::ALL
                    .iter()
                    .map(|&q| p.level(q).total() * row[q.index()][u as usize])
                    .sum();
                diag.tower_residual = diag
                    .tower_residual
                    .max((from_table - direct).abs())
                    .max((tower[u as usize] - direct).abs());
            }
            row
        })
        .collect();
    (entries, diag)
}

fn integrand_fallback(q: Ternary, u: u8, recon: f64) -> f64 {
    EpmuIntegrand::Refined.eval(recon * q.value() as f64, u)
}

/// Parameters of a table build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpmuConfig {
    pub ebn0_db: f64,
    pub kernel: CnKernel,
    pub integrand: EpmuIntegrand,
    pub spacing: f64,
    pub range: f64,
}

impl EpmuConfig {
    pub fn new(ebn0_db: f64) -> Self {
        Self {
            ebn0_db,
            kernel: CnKernel::MinSum,
            integrand: EpmuIntegrand::Exact,
            spacing: DEFAULT_SPACING,
            range: DEFAULT_RANGE,
        }
    }
}

/// Runs joint DE for `spec` at the operating point of `cfg` and returns the
/// table with its diagnostics. The quantizer is the capacity-optimal one.
pub fn build_epmu_table(
    spec: &CodeSpec,
    cfg: &EpmuConfig,
) -> Result<(EpmuTable, TableDiagnostics)> {
    let channel = BiAwgn::from_ebn0_db(cfg.ebn0_db, spec.rate());
    let quant = QuantizerParams::optimal(&channel);
    let root = joint_channel_pmf(&channel, quant.delta, cfg.spacing, cfg.range)?;
    let ops = JointDe::new(root.grid(), cfg.kernel);
    let mut joint = Vec::with_capacity(spec.n());
    evolve_visit(&ops, spec.m(), &root, |i, p| {
        joint.push(symmetrize(p, !spec.is_frozen(i)))
    });
    let (entries, diag) = table_entries(&joint, cfg.integrand, quant.recon_unq);
    let table = EpmuTable {
        code_hash: spec.hash(),
        ebn0_db: cfg.ebn0_db,
        entries,
    };
    table.validate()?;
    Ok((table, diag))
}
