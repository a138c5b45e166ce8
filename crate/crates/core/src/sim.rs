//! Monte-Carlo frame error rate estimation.
//!
//! Every frame draws its message and noise from its own ChaCha8 stream keyed
//! by `(seed, frame index)`. Frames are decoded in parallel batches and folded
//! back in frame order, so the stopping point and every counter are
//! independent of the thread count.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{beec_from, quantize, transmit, BiAwgn, QuantizerParams};
use crate::code::{encode, polar_transform, CodeSpec};
use crate::density::grid::{DEFAULT_RANGE, DEFAULT_SPACING};
use crate::density::rates::csv_err;
use crate::epmu::{build_epmu_table, EpmuConfig, EpmuIntegrand, EpmuTable};
use crate::error::{invalid, Error, Result};
use crate::llr::{CnKernel, LlrAlgebra, Ternary, TernaryAlgebra, Unquantized};
use crate::sc::ScDecoder;
use crate::scl::{
    mllb_error, select_lowest_pm, select_ml, ChannelObservation, FinalList, ListEntry, PmRuleKind,
    PmUpdateRule, SclDecoder,
};
use crate::stats::ci95;

/// Channel seen by the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Real channel LLRs.
    Biawgn,
    /// Channel LLRs quantized to three levels at the capacity-optimal threshold.
    Q3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    Unquantized,
    Ternary,
}

/// Settings for building EPMU tables when the rule needs them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpmuSettings {
    pub kernel: CnKernel,
    pub integrand: EpmuIntegrand,
    pub spacing: f64,
    pub range: f64,
}

impl Default for EpmuSettings {
    fn default() -> Self {
        Self {
            kernel: CnKernel::MinSum,
            integrand: EpmuIntegrand::Exact,
            spacing: DEFAULT_SPACING,
            range: DEFAULT_RANGE,
        }
    }
}

impl EpmuSettings {
    pub fn at(&self, ebn0_db: f64) -> EpmuConfig {
        EpmuConfig {
            ebn0_db,
            kernel: self.kernel,
            integrand: self.integrand,
            spacing: self.spacing,
            range: self.range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Pm,
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub algebra: AlgebraKind,
    /// Check-node kernel of the unquantized algebra.
    #[serde(default)]
    pub kernel: CnKernel,
    pub list_size: usize,
    pub pm_rule: PmRuleKind,
    /// Selection reported as the decoder's own output; all metrics are
    /// scored regardless.
    #[serde(default = "default_selection")]
    pub selection: Selection,
    #[serde(default)]
    pub epmu: EpmuSettings,
}

fn default_selection() -> Selection {
    Selection::Pm
}

/// Error counter a stop rule watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Pm,
    Lml,
    List,
    Mllb,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Pm, Metric::Lml, Metric::List, Metric::Mllb];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Pm => "pm",
            Metric::Lml => "lml",
            Metric::List => "list",
            Metric::Mllb => "mllb",
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("metric", format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_frames: u64,
    pub metric: Metric,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_frames: 10_000_000,
            metric: Metric::Pm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub code: CodeSpec,
    pub channel: ChannelKind,
    pub decoder: DecoderConfig,
    /// `Eb/N0` points in dB.
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(invalid("sweep", "at least one Eb/N0 point is required"));
        }
        if let Some(x) = self.sweep.iter().find(|x| !x.is_finite()) {
            return Err(invalid("sweep", format!("{x} is not finite")));
        }
        self.validate_point_settings()
    }

    /// Everything but the sweep.
    pub fn validate_point_settings(&self) -> Result<()> {
        if self.stop.min_errors == 0 {
            return Err(invalid("stop.min_errors", "must be at least 1"));
        }
        if self.stop.max_frames == 0 {
            return Err(invalid("stop.max_frames", "frame budget is empty"));
        }
        if self.decoder.list_size == 0 {
            return Err(invalid("decoder.list_size", "must be at least 1"));
        }
        if self.code.k() == 0 {
            return Err(invalid("code", "needs at least one information bit"));
        }
        if self.code.m() > crate::scl::MAX_DEPTH {
            return Err(invalid(
                "code",
                format!("depth {} exceeds {}", self.code.m(), crate::scl::MAX_DEPTH),
            ));
        }
        if self.channel == ChannelKind::Biawgn && self.decoder.algebra == AlgebraKind::Ternary {
            return Err(invalid(
                "decoder.algebra",
                "the ternary algebra needs the q3 channel",
            ));
        }
        if self.decoder.pm_rule == PmRuleKind::Epmu && self.decoder.algebra != AlgebraKind::Ternary
        {
            return Err(invalid("decoder.pm_rule", "epmu needs the ternary algebra"));
        }
        Ok(())
    }
}

/// Error counts at one `Eb/N0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub frames: u64,
    pub errors_pm: u64,
    pub errors_lml: u64,
    pub errors_list: u64,
    pub errors_mllb: u64,
    /// Frames on which a list error did not imply PM and LML errors, or an
    /// ML-LB error did not imply an LML error.
    pub coherence_violations: u64,
}

impl Counts {
    const ZERO: Counts = Counts {
        frames: 0,
        errors_pm: 0,
        errors_lml: 0,
        errors_list: 0,
        errors_mllb: 0,
        coherence_violations: 0,
    };

    pub fn errors(&self, metric: Metric) -> u64 {
        match metric {
            Metric::Pm => self.errors_pm,
            Metric::Lml => self.errors_lml,
            Metric::List => self.errors_list,
            Metric::Mllb => self.errors_mllb,
        }
    }

    fn add(&mut self, outcome: u8) {
        let has = |m: Metric| outcome & m.bit() != 0;
        self.frames += 1;
        self.errors_pm += has(Metric::Pm) as u64;
        self.errors_lml += has(Metric::Lml) as u64;
        self.errors_list += has(Metric::List) as u64;
        self.errors_mllb += has(Metric::Mllb) as u64;
        let list_ok = !has(Metric::List) || (has(Metric::Pm) && has(Metric::Lml));
        let mllb_ok = !has(Metric::Mllb) || has(Metric::Lml);
        self.coherence_violations += (!(list_ok && mllb_ok)) as u64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub ebn0_db: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

impl FerRecord {
    pub fn frames(&self) -> u64 {
        self.counts.frames
    }

    pub fn errors(&self, metric: Metric) -> u64 {
        self.counts.errors(metric)
    }

    pub fn fer(&self, metric: Metric) -> f64 {
        self.errors(metric) as f64 / self.frames() as f64
    }

    pub fn ci95(&self, metric: Metric) -> (f64, f64) {
        ci95(self.errors(metric), self.frames()).expect("record has frames")
    }
}

/// Per-run execution options that do not affect results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

fn with_pool<T: Send>(opts: &RunOptions, f: impl FnOnce() -> T + Send) -> Result<T> {
    match opts.threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Immutable per-point data shared by all workers.
struct Point<'a> {
    cfg: &'a RunConfig,
    channel: BiAwgn,
    quant: QuantizerParams,
    rule: PmUpdateRule,
}

/// Decoder state owned by one worker.
enum Engine {
    Unq(ScDecoder<Unquantized>, Option<SclDecoder<Unquantized>>),
    Ter(
        ScDecoder<TernaryAlgebra>,
        Option<SclDecoder<TernaryAlgebra>>,
    ),
}

impl Engine {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let m = cfg.code.m();
        let l = cfg.decoder.list_size;
        Ok(match cfg.decoder.algebra {
            AlgebraKind::Unquantized => {
                let a = Unquantized {
                    kernel: cfg.decoder.kernel,
                };
                let scl = if l > 1 {
                    Some(SclDecoder::new(a, m, l)?)
                } else {
                    None
                };
                Engine::Unq(ScDecoder::new(a, m), scl)
            }
            AlgebraKind::Ternary => {
                let a = TernaryAlgebra::default();
                let scl = if l > 1 {
                    Some(SclDecoder::new(a, m, l)?)
                } else {
                    None
                };
                Engine::Ter(ScDecoder::new(a, m), scl)
            }
        })
    }
}

fn decode_list<A: LlrAlgebra>(
    spec: &CodeSpec,
    sc: &mut ScDecoder<A>,
    scl: &mut Option<SclDecoder<A>>,
    llrs: &[A::Llr],
    rule: &PmUpdateRule,
) -> Result<FinalList> {
    if let Some(d) = scl {
        return d.decode(spec, llrs, rule);
    }
    let out = sc.decode(spec, llrs)?;
    let codeword = polar_transform(&out.u_hat, spec.m())?;
    Ok(FinalList {
        entries: vec![ListEntry {
            path_id: 0,
            u: out.u_hat,
            codeword,
            pm: 0.0,
        }],
    })
}

/// Bit set of the metrics in error on one frame.
fn simulate_frame(point: &Point<'_>, engine: &mut Engine, frame: u64) -> Result<u8> {
    let cfg = point.cfg;
    let spec = &cfg.code;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(frame);
    let msg: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2u8)).collect();
    let codeword = encode(spec, &msg)?;
    let llrs = transmit(&codeword, &point.channel, &mut rng);

    let levels: Vec<Ternary>;
    let (list, obs) = match cfg.channel {
        ChannelKind::Biawgn => {
            let Engine::Unq(sc, scl) = engine else {
                unreachable!("validated configuration")
            };
            (
                decode_list(spec, sc, scl, &llrs, &point.rule)?,
                ChannelObservation::BiAwgn(&llrs),
            )
        }
        ChannelKind::Q3 => {
            levels = llrs
                .iter()
                .map(|&l| quantize(l, point.quant.delta))
                .collect();
            let list = match engine {
                Engine::Unq(sc, scl) => {
                    let r = point.quant.recon_unq;
                    let recon: Vec<f64> = levels.iter().map(|&q| r * q.value() as f64).collect();
                    decode_list(spec, sc, scl, &recon, &point.rule)?
                }
                Engine::Ter(sc, scl) => decode_list(spec, sc, scl, &levels, &point.rule)?,
            };
            (list, ChannelObservation::Beec(&levels))
        }
    };

    let mut outcome = 0u8;
    if select_lowest_pm(&list)?.codeword != codeword {
        outcome |= Metric::Pm.bit();
    }
    if select_ml(&list, obs)?.codeword != codeword {
        outcome |= Metric::Lml.bit();
    }
    if !list.contains(&codeword) {
        outcome |= Metric::List.bit();
    }
    if mllb_error(&list, &codeword, obs)? {
        outcome |= Metric::Mllb.bit();
    }
    Ok(outcome)
}

/// Frames decoded per parallel batch and worker.
const CHUNK: u64 = 1024;

fn rule_for(cfg: &RunConfig, table: Option<Arc<EpmuTable>>, ebn0_db: f64) -> Result<PmUpdateRule> {
    Ok(match cfg.decoder.pm_rule {
        PmRuleKind::Exact => PmUpdateRule::Exact,
        PmRuleKind::MaxApprox => PmUpdateRule::MaxApprox,
        PmRuleKind::Refined => PmUpdateRule::Refined,
        PmRuleKind::Epmu => {
            let table = table.ok_or(Error::MissingEpmuTable)?;
            table.check_code(&cfg.code)?;
            if (table.ebn0_db - ebn0_db).abs() > 1e-9 {
                return Err(invalid(
                    "epmu table",
                    format!("built for {} dB, used at {} dB", table.ebn0_db, ebn0_db),
                ));
            }
            PmUpdateRule::EpmuTable(table)
        }
    })
}

/// Simulates one `Eb/N0` point until the stop rule fires.
pub fn run_point(
    cfg: &RunConfig,
    ebn0_db: f64,
    table: Option<Arc<EpmuTable>>,
    opts: &RunOptions,
) -> Result<FerRecord> {
    run_point_from(cfg, ebn0_db, table, opts, None)
}

/// Like [`run_point`], but resumes after the frames counted in `prior`,
/// which must come from the same configuration and `Eb/N0`.
pub fn run_point_from(
    cfg: &RunConfig,
    ebn0_db: f64,
    table: Option<Arc<EpmuTable>>,
    opts: &RunOptions,
    prior: Option<&FerRecord>,
) -> Result<FerRecord> {
    cfg.validate_point_settings()?;
    if let Some(p) = prior {
        if p.ebn0_db != ebn0_db {
            return Err(invalid(
                "prior",
                format!("record is for {} dB, not {} dB", p.ebn0_db, ebn0_db),
            ));
        }
    }
    if !ebn0_db.is_finite() {
        return Err(invalid("ebn0_db", ebn0_db.to_string()));
    }
    let channel = BiAwgn::from_ebn0_db(ebn0_db, cfg.code.rate());
    let point = Point {
        cfg,
        channel,
        quant: QuantizerParams::optimal(&channel),
        rule: rule_for(cfg, table, ebn0_db)?,
    };
    let stop = cfg.stop;
    let counts = with_pool(opts, || -> Result<Counts> {
        let batch = CHUNK * rayon::current_num_threads() as u64;
        let mut counts = prior.map_or(Counts::ZERO, |p| p.counts);
        while counts.frames < stop.max_frames && counts.errors(stop.metric) < stop.min_errors {
            let start = counts.frames;
            let end = (start + batch).min(stop.max_frames);
            let outcomes: Vec<u8> = (start..end)
                .into_par_iter()
                .map_init(
                    || Engine::new(cfg),
                    |engine, frame| match engine {
                        Ok(e) => simulate_frame(&point, e, frame),
                        Err(e) => Err(invalid("decoder", e.to_string())),
                    },
                )
                .collect::<Result<_>>()?;
            for o in outcomes {
                counts.add(o);
                if counts.errors(stop.metric) >= stop.min_errors {
                    break;
                }
            }
        }
        Ok(counts)
    })??;
    Ok(FerRecord { ebn0_db, counts })
}

/// BEEC seen by the decoder at `ebn0_db` for this code rate.
pub fn q3_channel(spec: &CodeSpec, ebn0_db: f64) -> crate::channel::BeecParams {
    let ch = BiAwgn::from_ebn0_db(ebn0_db, spec.rate());
    beec_from(&ch, QuantizerParams::optimal(&ch).delta)
}

/// Output of [`run_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<FerRecord>,
    /// Tables built for the EPMU rule, one per point.
    pub tables: Vec<EpmuTable>,
}

/// Runs every point of the sweep, building EPMU tables on the way if the
/// rule needs them.
pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<SweepResult> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.sweep.len());
    let mut tables = Vec::new();
    for &ebn0 in &cfg.sweep {
        let table = if cfg.decoder.pm_rule == PmRuleKind::Epmu {
            let (t, _) = build_epmu_table(&cfg.code, &cfg.decoder.epmu.at(ebn0))?;
            tables.push(t.clone());
            Some(Arc::new(t))
        } else {
            None
        };
        records.push(run_point(cfg, ebn0, table, opts)?);
    }
    Ok(SweepResult { records, tables })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub errors_pm: u64,
    pub errors_lml: u64,
    pub errors_list: u64,
    pub errors_mllb: u64,
    pub pm_fer: f64,
    pub lml_fer: f64,
    pub list_fer: f64,
    pub mllb_fer: f64,
    pub pm_ci95_low: f64,
    pub pm_ci95_high: f64,
    pub lml_ci95_low: f64,
    pub lml_ci95_high: f64,
    pub list_ci95_low: f64,
    pub list_ci95_high: f64,
    pub mllb_ci95_low: f64,
    pub mllb_ci95_high: f64,
    pub coherence_violations: u64,
}

impl From<&FerRecord> for FerRow {
    fn from(r: &FerRecord) -> Self {
        let c = r.counts;
        let (pl, ph) = r.ci95(Metric::Pm);
        let (ll, lh) = r.ci95(Metric::Lml);
        let (sl, sh) = r.ci95(Metric::List);
        let (ml, mh) = r.ci95(Metric::Mllb);
        Self {
            ebn0_db: r.ebn0_db,
            frames: c.frames,
            errors_pm: c.errors_pm,
            errors_lml: c.errors_lml,
            errors_list: c.errors_list,
            errors_mllb: c.errors_mllb,
            pm_fer: r.fer(Metric::Pm),
            lml_fer: r.fer(Metric::Lml),
            list_fer: r.fer(Metric::List),
            mllb_fer: r.fer(Metric::Mllb),
            pm_ci95_low: pl,
            pm_ci95_high: ph,
            lml_ci95_low: ll,
            lml_ci95_high: lh,
            list_ci95_low: sl,
            list_ci95_high: sh,
            mllb_ci95_low: ml,
            mllb_ci95_high: mh,
            coherence_violations: c.coherence_violations,
        }
    }
}

impl FerRow {
    pub fn fer(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Pm => self.pm_fer,
            Metric::Lml => self.lml_fer,
            Metric::List => self.list_fer,
            Metric::Mllb => self.mllb_fer,
        }
    }
}

pub fn write_fer_csv<W: Write>(out: W, records: &[FerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(FerRow::from(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fer_csv<R: Read>(input: R) -> Result<Vec<FerRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

/// `(ebn0_db, fer)` pairs of one metric.
pub fn fer_curve(rows: &[FerRow], metric: Metric) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.ebn0_db, r.fer(metric))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::construct_rm;

    fn config(
        code: CodeSpec,
        channel: ChannelKind,
        algebra: AlgebraKind,
        l: usize,
        rule: PmRuleKind,
    ) -> RunConfig {
        RunConfig {
            code,
            channel,
            decoder: DecoderConfig {
                algebra,
                kernel: CnKernel::MinSum,
                list_size: l,
                pm_rule: rule,
                selection: Selection::Pm,
                epmu: EpmuSettings::default(),
            },
            sweep: vec![1.0],
            stop: StopRule {
                min_errors: 50,
                max_frames: 4000,
                metric: Metric::Pm,
            },
            seed: 7,
        }
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        let code = construct_rm(5, 2).unwrap();
        for (ch, alg, l) in [
            (ChannelKind::Biawgn, AlgebraKind::Unquantized, 1),
            (ChannelKind::Q3, AlgebraKind::Ternary, 4),
            (ChannelKind::Q3, AlgebraKind::Unquantized, 4),
        ] {
            let mut cfg = config(code.clone(), ch, alg, l, PmRuleKind::Exact);
            cfg.stop.max_frames = 500;
            let r = run_point(&cfg, 60.0, None, &RunOptions::default()).unwrap();
            assert_eq!(r.frames(), 500);
            for m in Metric::ALL {
                assert_eq!(r.errors(m), 0);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = config(
            construct_rm(6, 3).unwrap(),
            ChannelKind::Q3,
            AlgebraKind::Ternary,
            4,
            PmRuleKind::Refined,
        );
        let a = run_point(&cfg, 2.0, None, &RunOptions { threads: Some(1) }).unwrap();
        let b = run_point(&cfg, 2.0, None, &RunOptions { threads: Some(3) }).unwrap();
        assert_eq!(a, b);
        assert!(a.errors(Metric::Pm) == 50 || a.frames() == 4000);
        assert_eq!(a.counts.coherence_violations, 0);
    }

    #[test]
    fn resuming_equals_a_longer_run() {
        let mut cfg = config(
            construct_rm(5, 2).unwrap(),
            ChannelKind::Q3,
            AlgebraKind::Ternary,
            2,
            PmRuleKind::Refined,
        );
        cfg.stop.max_frames = 700;
        let full = run_point(&cfg, 1.0, None, &RunOptions::default()).unwrap();
        cfg.stop.max_frames = 300;
        let head = run_point(&cfg, 1.0, None, &RunOptions::default()).unwrap();
        cfg.stop.max_frames = 700;
        let resumed = run_point_from(&cfg, 1.0, None, &RunOptions::default(), Some(&head)).unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn list_of_one_matches_sc() {
        let code = construct_rm(6, 3).unwrap();
        let sc = config(
            code.clone(),
            ChannelKind::Biawgn,
            AlgebraKind::Unquantized,
            1,
            PmRuleKind::Exact,
        );
        let r = run_point(&sc, 1.5, None, &RunOptions::default()).unwrap();
        // with one path every metric but ML-LB coincides
        assert_eq!(r.errors(Metric::Pm), r.errors(Metric::Lml));
        assert_eq!(r.errors(Metric::Pm), r.errors(Metric::List));
        assert!(r.errors(Metric::Mllb) <= r.errors(Metric::Lml));
    }

    #[test]
    fn validation() {
        let code = construct_rm(4, 2).unwrap();
        let mut cfg = config(
            code.clone(),
            ChannelKind::Biawgn,
            AlgebraKind::Ternary,
            1,
            PmRuleKind::Exact,
        );
        assert!(cfg.validate().is_err());
        cfg.channel = ChannelKind::Q3;
        cfg.validate().unwrap();
        cfg.stop.max_frames = 0;
        assert!(cfg.validate().is_err());
        cfg.stop.max_frames = 1;
        cfg.sweep.clear();
        assert!(cfg.validate().is_err());
        let cfg = config(
            code,
            ChannelKind::Q3,
            AlgebraKind::Ternary,
            4,
            PmRuleKind::Epmu,
        );
        assert!(matches!(
            run_point(&cfg, 1.0, None, &RunOptions::default()),
            Err(Error::MissingEpmuTable)
        ));
    }

    #[test]
    fn coherence_counting() {
        let mut c = Counts::ZERO;
        c.add(Metric::List.bit() | Metric::Pm.bit() | Metric::Lml.bit());
        c.add(Metric::Mllb.bit() | Metric::Lml.bit());
        assert_eq!(c.coherence_violations, 0);
        c.add(Metric::List.bit() | Metric::Pm.bit());
        c.add(Metric::Mllb.bit());
        assert_eq!(c.coherence_violations, 2);
        assert_eq!(c.frames, 4);
    }

    #[test]
    fn csv_round_trip() {
        let code = construct_rm(4, 2).unwrap();
        let mut cfg = config(
            code,
            ChannelKind::Q3,
            AlgebraKind::Ternary,
            2,
            PmRuleKind::Refined,
        );
        cfg.sweep = vec![0.0, 2.0];
        cfg.stop.max_frames = 300;
        let res = run_sweep(&cfg, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_fer_csv(&mut buf, &res.records).unwrap();
        let rows = read_fer_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], FerRow::from(&res.records[0]));
        let header = String::from_utf8(buf)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert!(header.starts_with("ebn0_db,frames,errors_pm"));
        assert!(header.contains("pm_fer,lml_fer,list_fer,mllb_fer"));
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bler".parse::<Metric>().is_err());
    }
}
