//! LLR densities on a uniform grid with saturation bins at both ends.
//!
//! Bin `k ∈ [−J, J]` stands for the value `k·s`; bins `±J` also absorb
//! everything beyond `±(J − ½)s`. All operations are bilinear, so they also
//! act on sub-probability measures (the per-level components of a joint pmf).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::BiAwgn;
use crate::error::{invalid, Error, Result};
use crate::llr::CnKernel;

use super::DensityOps;

/// Default bin width in nats.
pub const DEFAULT_SPACING: f64 = 1.0 / 32.0;
/// Default saturation magnitude in nats.
pub const DEFAULT_RANGE: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub spacing: f64,
    pub half_bins: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self::new(DEFAULT_SPACING, DEFAULT_RANGE).expect("valid defaults")
    }
}

impl Grid {
    pub fn new(spacing: f64, range: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(range >= spacing) {
            return Err(invalid(
                "grid",
                format!("spacing {spacing} and range {range}"),
            ));
        }
        Ok(Self {
            spacing,
            half_bins: (range / spacing).round() as usize,
        })
    }

    /// Grid near `nominal` spacing with `edge` exactly on a bin boundary:
    /// `edge = (j + ½)·s`. Returns the grid and `j`, the largest bin index
    /// strictly inside `(−edge, edge)`.
    pub fn fitted_to_edge(edge: f64, nominal: f64, range: f64) -> Result<(Self, usize)> {
        if !(edge > 0.0) {
            return Err(invalid("edge", format!("{edge} must be positive")));
        }
        let j = (edge / nominal - 0.5).round().max(0.0);
        let spacing = edge / (j + 0.5);
        if spacing > 2.0 * nominal {
            return Err(Error::GridTooCoarse {
                spacing,
                delta: edge,
            });
        }
        Ok((Self::new(spacing, range)?, j as usize))
    }

    /// Grid near `nominal` spacing with `point` exactly on a bin center.
    pub fn fitted_to_point(point: f64, nominal: f64, range: f64) -> Result<Self> {
        let bins = (point.abs() / nominal).round();
        if bins == 0.0 {
            return Self::new(nominal, range);
        }
        Self::new(point.abs() / bins, range)
    }

    pub fn len(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> f64 {
        self.half_bins as f64 * self.spacing
    }

    /// Value represented by storage index `idx`.
    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_bins as f64) * self.spacing
    }

    /// Storage index of the bin nearest to `v`, saturating.
    pub fn index_of(&self, v: f64) -> usize {
        let j = self.half_bins as f64;
        ((v / self.spacing).round().clamp(-j, j) + j) as usize
    }
}

/// Probability mass over the bins of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPmf {
    pub grid: Grid,
    pub mass: Vec<f64>,
}

impl GridPmf {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            mass: vec![0.0; grid.len()],
        }
    }

    pub fn point_mass(grid: Grid, v: f64) -> Self {
        let mut p = Self::zeros(grid);
        p.mass[grid.index_of(v)] = 1.0;
        p
    }

    /// `N(μ, 2μ)` binned, i.e. the channel LLR given that 0 was sent.
    pub fn from_biawgn(grid: Grid, channel: &BiAwgn) -> Self {
        let mu = channel.mu();
        let s = grid.spacing;
        let j = grid.half_bins as isize;
        let mass = (-j..=j)
            .map(|k| {
                let lo = (k as f64 - 0.5) * s;
                let hi = (k as f64 + 0.5) * s;
                match (k == -j, k == j) {
                    (true, _) => channel.llr_cdf(hi),
                    (_, true) => channel.llr_ccdf(lo),
                    _ if lo >= mu => channel.llr_ccdf(lo) - channel.llr_ccdf(hi),
                    _ => channel.llr_cdf(hi) - channel.llr_cdf(lo),
                }
            })
            .collect();
        Self { grid, mass }
    }

    /// Three-point density at `−Δ, 0, +Δ`.
    pub fn three_point(grid: Grid, delta: f64, p_minus: f64, p_zero: f64, p_plus: f64) -> Self {
        let mut p = Self::zeros(grid);
        p.mass[grid.index_of(-delta)] += p_minus;
        p.mass[grid.index_of(0.0)] += p_zero;
        p.mass[grid.index_of(delta)] += p_plus;
        p
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Density of `−Λ`.
    pub fn negated(&self) -> Self {
        let mut mass = self.mass.clone();
        mass.reverse();
        Self {
            grid: self.grid,
            mass,
        }
    }

    /// `P(Λ < 0) + ½ P(Λ = 0)`.
    pub fn error_prob(&self) -> f64 {
        let j = self.grid.half_bins;
        self.mass[..j].iter().sum::<f64>() + 0.5 * self.mass[j]
    }

    /// `E[1 − log₂(1 + e^{−Λ})]` in bits.
    pub fn capacity(&self) -> f64 {
        self.expectation(|v| 1.0 - crate::numeric::softplus(-v) / std::f64::consts::LN_2)
    }

    /// `Σ f(value) · mass`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| p * f(self.grid.value(i)))
            .sum()
    }

    pub fn add_assign(&mut self, other: &GridPmf) {
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.mass.iter_mut().for_each(|m| *m *= c);
    }

    /// Magnitude profile of one sign: entry `m` holds the mass at `±m·s`,
    /// `m ∈ 1..=J`; entry 0 is unused.
    fn side(&self, positive: bool) -> Vec<f64> {
        let j = self.grid.half_bins;
        let mut out = vec![0.0; j + 1];
        for m in 1..=j {
            out[m] = if positive {
                self.mass[j + m]
            } else {
                self.mass[j - m]
            };
        }
        out
    }
}

/// `t[m] = Σ_{i ≥ m} a[i]`, with one trailing zero.
fn tails(a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; a.len() + 1];
    for m in (0..a.len()).rev() {
        t[m] = t[m + 1] + a[m];
    }
    t
}

fn check_same(a: &GridPmf, b: &GridPmf) {
    assert_eq!(a.grid, b.grid, "densities live on different grids");
}

/// Min-sum `⊞` of two independent densities in `O(G)`.
pub fn cn_min_sum(a: &GridPmf, b: &GridPmf) -> GridPmf {
    check_same(a, b);
    let grid = a.grid;
    let j = grid.half_bins;
    let (ta, tb) = (a.total(), b.total());
    let (za, zb) = (a.mass[j], b.mass[j]);
    let mut out = GridPmf::zeros(grid);
    out.mass[j] = za * tb + zb * ta - za * zb;
    let (ap, an, bp, bn) = (a.side(true), a.side(false), b.side(true), b.side(false));
    let (tap, tan, tbp, tbn) = (tails(&ap), tails(&an), tails(&bp), tails(&bn));
    for m in 1..=j {
        // P(min = m) for one sign pair, without tail differences
        let both = |x: &[f64], tx: &[f64], y: &[f64], ty: &[f64]| {
            x[m] * ty[m + 1] + tx[m + 1] * y[m] + x[m] * y[m]
        };
        out.mass[j + m] = both(&ap, &tap, &bp, &tbp) + both(&an, &tan, &bn, &tbn);
        out.mass[j - m] = both(&ap, &tap, &bn, &tbn) + both(&an, &tan, &bp, &tbp);
    }
    out
}

/// Rounding table for the exact check node on one grid.
#[derive(Debug, Clone)]
pub struct ExactCnTable {
    grid: Grid,
    /// Beyond this magnitude gap the output is exactly the smaller magnitude.
    band: usize,
    /// `table[kmin·(band+1) + d]`: output magnitude bin for inputs
    /// `kmin` and `kmin + d`.
    table: Vec<u32>,
}

impl ExactCnTable {
    pub fn new(grid: Grid) -> Self {
        let s = grid.spacing;
        let j = grid.half_bins;
        let mut band = 0;
        while (-(band as f64) * s).exp().ln_1p() >= s / 2.0 {
            band += 1;
        }
        let band = band.min(j);
        let mut table = vec![0u32; (j + 1) * (band + 1)];
        for kmin in 1..=j {
            for d in 0..=band {
                let a = kmin as f64 * s;
                let b = (kmin + d) as f64 * s;
                let v = a + (-(a + b)).exp().ln_1p() - (-(b - a)).exp().ln_1p();
                table[kmin * (band + 1) + d] = ((v / s).round().clamp(0.0, j as f64)) as u32;
            }
        }
        Self { grid, band, table }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Magnitude distribution of `min`-with-correction for one sign pair.
    fn accumulate(&self, x: &[f64], y: &[f64], tx: &[f64], ty: &[f64], out: &mut [f64]) {
        let j = self.grid.half_bins;
        let w = self.band;
        let row = w + 1;
        for m1 in 1..=j {
            let a = x[m1];
            if a != 0.0 {
                let lo = m1.saturating_sub(w).max(1);
                let hi = (m1 + w).min(j);
                for (m2, &b) in y.iter().enumerate().take(hi + 1).skip(lo) {
                    if b == 0.0 {
                        continue;
                    }
                    let (kmin, d) = if m1 <= m2 {
                        (m1, m2 - m1)
                    } else {
                        (m2, m1 - m2)
                    };
                    out[self.table[kmin * row + d] as usize] += a * b;
                }
            }
            let far = (m1 + w + 1).min(j + 1);
            out[m1] += x[m1] * ty[far] + tx[far] * y[m1];
        }
    }

    /// Exact `⊞` of two independent densities, rounded to the grid.
    pub fn cn(&self, a: &GridPmf, b: &GridPmf) -> GridPmf {
        check_same(a, b);
        assert_eq!(a.grid, self.grid, "table built for another grid");
        let j = self.grid.half_bins;
        let (ta, tb) = (a.total(), b.total());
        let (za, zb) = (a.mass[j], b.mass[j]);
        let (ap, an, bp, bn) = (a.side(true), a.side(false), b.side(true), b.side(false));
        let (tap, tan, tbp, tbn) = (tails(&ap), tails(&an), tails(&bp), tails(&bn));
        let mut same = vec![0.0; j + 1];
        let mut diff = vec![0.0; j + 1];
        self.accumulate(&ap, &bp, &tap, &tbp, &mut same);
        self.accumulate(&an, &bn, &tan, &tbn, &mut same);
        self.accumulate(&ap, &bn, &tap, &tbn, &mut diff);
        self.accumulate(&an, &bp, &tan, &tbp, &mut diff);
        let mut out = GridPmf::zeros(self.grid);
        out.mass[j] = za * tb + zb * ta - za * zb + same[0] + diff[0];
        for m in 1..=j {
            out.mass[j + m] = same[m];
            out.mass[j - m] = diff[m];
        }
        out
    }
}

/// Saturating linear convolution on a fixed grid.
#[derive(Clone)]
pub struct Convolver {
    grid: Grid,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("grid", &self.grid)
            .field("size", &self.size)
            .finish()
    }
}

/// Below this many nonzero products the direct sum is used.
const DIRECT_LIMIT: usize = 1 << 17;

fn support(m: &[f64]) -> Option<(usize, usize)> {
    let lo = m.iter().position(|&x| x != 0.0)?;
    let hi = m.iter().rposition(|&x| x != 0.0)?;
    Some((lo, hi))
}

impl Convolver {
    pub fn new(grid: Grid) -> Self {
        let size = (2 * grid.len() - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            grid,
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    pub fn spectrum(&self, p: &GridPmf) -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.size];
        for (b, &m) in buf.iter_mut().zip(&p.mass) {
            b.re = m;
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform of a product spectrum, folded into the grid.
    pub fn to_grid(&self, mut spec: Vec<Complex<f64>>) -> GridPmf {
        self.inv.process(&mut spec);
        let scale = 1.0 / self.size as f64;
        let j = self.grid.half_bins;
        let mut out = GridPmf::zeros(self.grid);
        let last = self.grid.len() - 1;
        // linear index t holds the sum of storage indices, i.e. value index t − 2J
        for (t, c) in spec.iter().enumerate().take(4 * j + 1) {
            let v = (c.re * scale).max(0.0);
            let idx = t.saturating_sub(j).min(last);
            out.mass[idx] += v;
        }
        out
    }

    /// `⊎` of two independent densities.
    pub fn vn(&self, a: &GridPmf, b: &GridPmf) -> GridPmf {
        check_same(a, b);
        let (Some((la, ha)), Some((lb, hb))) = (support(&a.mass), support(&b.mass)) else {
            return GridPmf::zeros(self.grid);
        };
        if (ha - la + 1) * (hb - lb + 1) <= DIRECT_LIMIT {
            return self.vn_direct(a, b, (la, ha), (lb, hb));
        }
        let (sa, sb) = (self.spectrum(a), self.spectrum(b));
        self.to_grid(sa.iter().zip(&sb).map(|(x, y)| x * y).collect())
    }

    fn vn_direct(
        &self,
        a: &GridPmf,
        b: &GridPmf,
        ra: (usize, usize),
        rb: (usize, usize),
    ) -> GridPmf {
        let j = self.grid.half_bins;
        let last = self.grid.len() - 1;
        let mut out = GridPmf::zeros(self.grid);
        for i1 in ra.0..=ra.1 {
            let x = a.mass[i1];
            if x == 0.0 {
                continue;
            }
            for i2 in rb.0..=rb.1 {
                let idx = (i1 + i2).saturating_sub(j).min(last);
                out.mass[idx] += x * b.mass[i2];
            }
        }
        out
    }
}

/// Density evolution on a grid with a selectable check-node kernel.
#[derive(Debug, Clone)]
pub struct GridDe {
    kernel: CnKernel,
    conv: Convolver,
    exact: Option<Arc<ExactCnTable>>,
}

impl GridDe {
    pub fn new(grid: Grid, kernel: CnKernel) -> Self {
        let exact = matches!(kernel, CnKernel::Exact).then(|| Arc::new(ExactCnTable::new(grid)));
        Self {
            kernel,
            conv: Convolver::new(grid),
            exact,
        }
    }

    pub fn grid(&self) -> Grid {
        self.conv.grid
    }

    pub fn kernel(&self) -> CnKernel {
        self.kernel
    }

    pub fn convolver(&self) -> &Convolver {
        &self.conv
    }
}

impl DensityOps for GridDe {
    type Pmf = GridPmf;

    fn cn(&self, a: &GridPmf, b: &GridPmf) -> GridPmf {
        match &self.exact {
            Some(t) => t.cn(a, b),
            None => cn_min_sum(a, b),
        }
    }

    fn vn(&self, a: &GridPmf, b: &GridPmf) -> GridPmf {
        self.conv.vn(a, b)
    }

    fn error_prob(&self, p: &GridPmf) -> f64 {
        p.error_prob()
    }

    fn capacity(&self, p: &GridPmf) -> f64 {
        p.capacity()
    }
}
