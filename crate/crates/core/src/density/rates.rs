//! Achievable-rate curves `(1/n) Σ I(W_i)` for three channel/decoder pairs:
//! unquantized decoding of the BiAWGN, unquantized decoding of the 3Q channel
//! and ternary decoding of the 3Q channel.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    beec_from, beec_llr_reconstruction, biawgn_capacity, lin_to_db, optimize_delta, BiAwgn,
};
use crate::error::{Error, Result};
use crate::llr::CnKernel;

use super::grid::{Grid, GridDe, GridPmf, DEFAULT_RANGE, DEFAULT_SPACING};
use super::ternary::{TernaryDe, TernaryPmf};
use super::{reliabilities, DensityOps};

/// Default tree depth for rate curves.
pub const DEFAULT_M_EVAL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCurveConfig {
    pub m_eval: u32,
    pub spacing: f64,
    pub range: f64,
}

impl Default for RateCurveConfig {
    fn default() -> Self {
        Self {
            m_eval: DEFAULT_M_EVAL,
            spacing: DEFAULT_SPACING,
            range: DEFAULT_RANGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub esn0_db: f64,
    pub capacity_bits: f64,
    pub rate_unq_unq: f64,
    pub rate_unq_3q: f64,
    pub rate_3q_3q: f64,
    pub delta: f64,
}

/// Which of the three curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCurve {
    Capacity,
    UnqUnq,
    Unq3q,
    Q3q,
}

impl RatePoint {
    pub fn rate(&self, curve: RateCurve) -> f64 {
        match curve {
            RateCurve::Capacity => self.capacity_bits,
            RateCurve::UnqUnq => self.rate_unq_unq,
            RateCurve::Unq3q => self.rate_unq_3q,
            RateCurve::Q3q => self.rate_3q_3q,
        }
    }

    /// `Eb/N0` in dB when transmitting at the rate of `curve`.
    pub fn ebn0_db(&self, curve: RateCurve) -> f64 {
        self.esn0_db - lin_to_db(self.rate(curve))
    }
}

fn mean_capacity<D: DensityOps>(ops: &D, m: u32, channel: &D::Pmf) -> f64 {
    reliabilities(ops, m, channel).mean_capacity()
}

/// Evaluates all curves at one `Es/N0`.
pub fn rate_point(esn0_db: f64, cfg: &RateCurveConfig) -> Result<RatePoint> {
    let channel = BiAwgn::from_esn0_db(esn0_db);
    let (delta, _) = optimize_delta(&channel);
    let beec = beec_from(&channel, delta);

    let grid = Grid::new(cfg.spacing, cfg.range)?;
    let unq = GridDe::new(grid, CnKernel::Exact);
    let rate_unq_unq = mean_capacity(&unq, cfg.m_eval, &GridPmf::from_biawgn(grid, &channel));

    // the reconstruction sits exactly on a bin so the channel density is exact
    let recon = beec_llr_reconstruction(&beec).delta;
    let grid3 = Grid::fitted_to_point(recon, cfg.spacing, cfg.range)?;
    let unq3 = GridDe::new(grid3, CnKernel::Exact);
    let three = GridPmf::three_point(grid3, recon, beec.p_error, beec.p_erase, beec.p_correct);
    let rate_unq_3q = mean_capacity(&unq3, cfg.m_eval, &three);

    let rate_3q_3q = mean_capacity(&TernaryDe, cfg.m_eval, &TernaryPmf::from_beec(&beec));

    Ok(RatePoint {
        esn0_db,
        capacity_bits: biawgn_capacity(&channel),
        rate_unq_unq,
        rate_unq_3q,
        rate_3q_3q,
        delta,
    })
}

pub fn rate_curve(esn0_db: &[f64], cfg: &RateCurveConfig) -> Result<Vec<RatePoint>> {
    esn0_db.par_iter().map(|&s| rate_point(s, cfg)).collect()
}

/// `Es/N0` where `curve` reaches `target`, by linear interpolation between the
/// first bracketing pair of points (sorted by `Es/N0`).
pub fn crossing_esn0(points: &[RatePoint], curve: RateCurve, target: f64) -> Result<f64> {
    let mut pts: Vec<&RatePoint> = points.iter().collect();
    pts.sort_by(|a, b| a.esn0_db.total_cmp(&b.esn0_db));
    for w in pts.windows(2) {
        let (r0, r1) = (w[0].rate(curve), w[1].rate(curve));
        if (r0 - target) * (r1 - target) <= 0.0 && r0 != r1 {
            let t = (target - r0) / (r1 - r0);
            return Ok(w[0].esn0_db + t * (w[1].esn0_db - w[0].esn0_db));
        }
        if r0 == target {
            return Ok(w[0].esn0_db);
        }
    }
    Err(Error::NotBracketed(target))
}

/// Column order of the rates CSV.
pub const RATES_CSV_HEADER: [&str; 11] = [
    "ebn0_db",
    "capacity_bits",
    "rate_unq_unq",
    "rate_unq_3q",
    "rate_3q_3q",
    "esn0_db",
    "ebn0_unq_unq_db",
    "ebn0_unq_3q_db",
    "ebn0_3q_3q_db",
    "delta",
    "m_eval",
];

/// Writes one row per point. `ebn0_db` is the `Eb/N0` at which the BiAWGN
/// capacity equals the rate, i.e. `Es/N0 / C`; the per-curve columns use
/// each curve's own rate.
pub fn write_rates_csv<W: Write>(out: W, points: &[RatePoint], m_eval: u32) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATES_CSV_HEADER).map_err(csv_err)?;
    for p in points {
        let row = [
            p.ebn0_db(RateCurve::Capacity),
            p.capacity_bits,
            p.rate_unq_unq,
            p.rate_unq_3q,
            p.rate_3q_3q,
            p.esn0_db,
            p.ebn0_db(RateCurve::UnqUnq),
            p.ebn0_db(RateCurve::Unq3q),
            p.ebn0_db(RateCurve::Q3q),
            p.delta,
        ];
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
        rec.push(m_eval.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
