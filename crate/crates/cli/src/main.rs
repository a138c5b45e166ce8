//! `polarq` command-line driver.
//!
//! Exit status: 0 on success, 1 when inputs or configuration are invalid,
//! 2 when a run fails.

mod artifacts;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use polarq::channel::{
    beec_capacity, beec_from, biawgn_capacity, lin_to_db, BiAwgn, QuantizerParams,
};
use polarq::density::grid::{Grid, GridPmf};
use polarq::density::rates::{rate_point, write_rates_csv, RateCurveConfig};
use polarq::density::{design_code, GridDe, TernaryDe, TernaryPmf};
use polarq::epmu::{build_epmu_table, EpmuConfig, EpmuIntegrand};
use polarq::llr::CnKernel;
use polarq::sim::{
    fer_curve, read_fer_csv, run_sweep, write_fer_csv, Metric, RunConfig, RunOptions,
};
use polarq::stats::gap_db;
use polarq::{construct_rm, CodeSpec};
use serde::Serialize;

use artifacts::{
    existing, manifest_path, unix_now, write_atomic, Artifact, Manifest, TableArtifact,
};

enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T = ()> = Result<T, Failure>;

impl From<polarq::Error> for Failure {
    fn from(e: polarq::Error) -> Self {
        use polarq::Error as E;
        match e {
            E::Io(_) | E::EmptyList | E::NotBracketed(_) | E::GridTooCoarse { .. } => {
                Failure::Runtime(e.into())
            }
            _ => Failure::Invalid(e.into()),
        }
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

#[derive(Parser)]
#[command(
    name = "polarq",
    version,
    about = "Polar/RM codes, quantized SC/SCL decoding, density evolution and EPMU"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code: Reed-Muller or designed by density evolution.
    Construct(ConstructArgs),
    /// Density-evolution analyses.
    De {
        #[command(subcommand)]
        command: DeCommand,
    },
    /// Expected path metric update tables.
    Epmu {
        #[command(subcommand)]
        command: EpmuCommand,
    },
    /// Monte-Carlo FER simulation.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Print BiAWGN and 3Q channel parameters at an operating point.
    ChannelInfo(ChannelInfoArgs),
    /// Gap in dB between two FER curves at a target FER.
    Gap(GapArgs),
}

#[derive(Subcommand)]
enum DeCommand {
    /// Achievable-rate curves over an Es/N0 sweep.
    Rates(RatesArgs),
}

#[derive(Subcommand)]
enum EpmuCommand {
    /// Build the table for a code at one Eb/N0.
    Build(EpmuBuildArgs),
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run the sweep of a JSON run configuration.
    Run(SimRunArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; a `<out>.manifest.json` is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignModel {
    /// Unquantized decoding of the BiAWGN, exact check-node kernel.
    BiawgnExact,
    /// Unquantized decoding of the BiAWGN, min-sum kernel.
    BiawgnMinSum,
    /// Ternary decoding of the 3Q channel.
    Q3Ternary,
}

impl DesignModel {
    fn name(self) -> &'static str {
        match self {
            Self::BiawgnExact => "biawgn_exact",
            Self::BiawgnMinSum => "biawgn_min_sum",
            Self::Q3Ternary => "q3_ternary",
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("method").required(true).args(["rm", "de"])))]
struct ConstructArgs {
    /// Reed-Muller code of depth M and order R.
    #[arg(long, num_args = 2, value_names = ["M", "R"])]
    rm: Option<Vec<u32>>,
    /// Design by density evolution (needs --m, --k, --design-ebn0).
    #[arg(long, requires_all = ["m", "k", "design_ebn0"])]
    de: bool,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
    /// Design Eb/N0 in dB at the code rate k/2^m.
    #[arg(long, allow_hyphen_values = true)]
    design_ebn0: Option<f64>,
    #[arg(long, value_enum, default_value_t = DesignModel::Q3Ternary)]
    model: DesignModel,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RatesArgs {
    /// First Es/N0 in dB.
    #[arg(long, allow_hyphen_values = true, default_value_t = -6.0)]
    from: f64,
    /// Last Es/N0 in dB (inclusive).
    #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
    to: f64,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Tree depth of the evaluated transform.
    #[arg(long, default_value_t = polarq::density::rates::DEFAULT_M_EVAL)]
    m_eval: u32,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandArg {
    Exact,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    MinSum,
    Exact,
}

#[derive(Args)]
struct EpmuBuildArgs {
    /// CodeSpec JSON.
    #[arg(long)]
    code: PathBuf,
    /// Operating Eb/N0 in dB.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: f64,
    #[arg(long, value_enum, default_value_t = IntegrandArg::Exact)]
    integrand: IntegrandArg,
    /// Check-node kernel of the unquantized side of the joint decoder.
    #[arg(long, value_enum, default_value_t = KernelArg::MinSum)]
    kernel: KernelArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SimRunArgs {
    /// RunConfig JSON.
    #[arg(long)]
    config: PathBuf,
    /// FER CSV.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "POLARQ_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("snr").required(true).args(["ebn0", "esn0"])))]
struct ChannelInfoArgs {
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    esn0: Option<f64>,
    /// Code rate used to convert Eb/N0.
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
}

#[derive(Args)]
struct GapArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    fer: f64,
    /// Metric read from both files (pm, lml, list, mllb).
    #[arg(long, default_value = "pm", value_parser = parse_metric)]
    metric: Metric,
    /// Metric read from the second file, if different.
    #[arg(long, value_parser = parse_metric)]
    metric_b: Option<Metric>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: polarq::Error| e.to_string())
}

fn read_input(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))
}

fn refuse_overwrite(paths: &[&Path], force: bool) -> Outcome {
    let taken = existing(paths.iter().copied());
    if force || taken.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = taken.iter().map(|p| p.display().to_string()).collect();
    Err(invalid(anyhow!(
        "refusing to overwrite {} (use --force)",
        list.join(", ")
    )))
}

fn json_bytes<T: Serialize>(v: &T) -> Outcome<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(runtime)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn construct(args: &ConstructArgs) -> Outcome {
    let started = unix_now();
    let manifest_out = args.output.out.as_deref().map(manifest_path);
    if let (Some(out), Some(man)) = (&args.output.out, &manifest_out) {
        refuse_overwrite(&[out, man], args.output.force)?;
    }
    let spec = match (&args.rm, args.de) {
        (Some(mr), _) => construct_rm(mr[0], mr[1])?,
        (None, true) => {
            let (m, k, design) = (
                args.m.unwrap_or(0),
                args.k.unwrap_or(0),
                args.design_ebn0.unwrap_or(0.0),
            );
            if m > polarq::scl::MAX_DEPTH || k == 0 || k > 1usize << m {
                return Err(invalid(anyhow!(
                    "need 1 ≤ k ≤ 2^m and m ≤ {}",
                    polarq::scl::MAX_DEPTH
                )));
            }
            design_by_de(m, k, design, args.model)?
        }
        (None, false) => unreachable!("clap enforces the method group"),
    };
    let bytes = json_bytes(&spec)?;
    match (&args.output.out, manifest_out) {
        (Some(out), Some(man)) => {
            write_atomic(out, &bytes).map_err(runtime)?;
            let mut manifest = Manifest::new("construct", started);
            manifest.outputs.push(Artifact::of_bytes(out, &bytes));
            manifest.code_hash = Some(spec.hash());
            manifest.write(&man).map_err(runtime)?;
        }
        _ => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    eprintln!(
        "n = {}, k = {}, code hash {}",
        spec.n(),
        spec.k(),
        spec.hash()
    );
    Ok(())
}

fn design_by_de(m: u32, k: usize, design_ebn0: f64, model: DesignModel) -> Outcome<CodeSpec> {
    let rate = k as f64 / (1usize << m) as f64;
    let channel = BiAwgn::from_ebn0_db(design_ebn0, rate);
    let spec = match model {
        DesignModel::BiawgnExact | DesignModel::BiawgnMinSum => {
            let kernel = match model {
                DesignModel::BiawgnExact => CnKernel::Exact,
                _ => CnKernel::MinSum,
            };
            let grid = Grid::default();
            let ops = GridDe::new(grid, kernel);
            design_code(
                m,
                k,
                &GridPmf::from_biawgn(grid, &channel),
                &ops,
                model.name(),
                design_ebn0,
            )?
        }
        DesignModel::Q3Ternary => {
            let q = QuantizerParams::optimal(&channel);
            let w = TernaryPmf::from_beec(&beec_from(&channel, q.delta));
            design_code(m, k, &w, &TernaryDe, model.name(), design_ebn0)?
        }
    };
    Ok(spec)
}

fn de_rates(args: &RatesArgs) -> Outcome {
    let started = unix_now();
    let man = manifest_path(&args.out);
    refuse_overwrite(&[&args.out, &man], args.force)?;
    if !(args.step > 0.0)
        || !(args.to >= args.from)
        || !args.from.is_finite()
        || !args.to.is_finite()
    {
        return Err(invalid(anyhow!("need step > 0 and from ≤ to")));
    }
    if args.m_eval == 0 || args.m_eval > polarq::scl::MAX_DEPTH {
        return Err(invalid(anyhow!(
            "m-eval must be in 1..={}",
            polarq::scl::MAX_DEPTH
        )));
    }
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize + 1;
    let cfg = RateCurveConfig {
        m_eval: args.m_eval,
        ..Default::default()
    };
    let mut points = Vec::with_capacity(count);
    for j in 0..count {
        let esn0 = args.from + j as f64 * args.step;
        let p = rate_point(esn0, &cfg)?;
        eprintln!(
            "Es/N0 {esn0:6.2} dB  C {:.4}  unq/unq {:.4}  unq/3q {:.4}  3q/3q {:.4}",
            p.capacity_bits, p.rate_unq_unq, p.rate_unq_3q, p.rate_3q_3q
        );
        points.push(p);
    }
    let mut bytes = Vec::new();
    write_rates_csv(&mut bytes, &points, cfg.m_eval)?;
    write_atomic(&args.out, &bytes).map_err(runtime)?;
    let mut manifest = Manifest::new("de rates", started);
    manifest.config = serde_json::to_value(cfg).ok();
    manifest.outputs.push(Artifact::of_bytes(&args.out, &bytes));
    manifest.write(&man).map_err(runtime)
}

fn epmu_build(args: &EpmuBuildArgs) -> Outcome {
    let started = unix_now();
    let man = manifest_path(&args.out);
    refuse_overwrite(&[&args.out, &man], args.force)?;
    let spec: CodeSpec = read_json(&args.code)?;
    if !args.ebn0.is_finite() {
        return Err(invalid(anyhow!("ebn0 must be finite")));
    }
    let mut cfg = EpmuConfig::new(args.ebn0);
    cfg.integrand = match args.integrand {
        IntegrandArg::Exact => EpmuIntegrand::Exact,
        IntegrandArg::Refined => EpmuIntegrand::Refined,
    };
    cfg.kernel = match args.kernel {
        KernelArg::MinSum => CnKernel::MinSum,
        KernelArg::Exact => CnKernel::Exact,
    };
    let (table, diag) = build_epmu_table(&spec, &cfg)?;
    eprintln!(
        "{} rows, tower residual {:.1e}, {} fallback cells",
        table.len(),
        diag.tower_residual,
        diag.filled_cells
    );
    let bytes = json_bytes(&table)?;
    write_atomic(&args.out, &bytes).map_err(runtime)?;
    let mut manifest = Manifest::new("epmu build", started);
    manifest
        .inputs
        .push(Artifact::of_file(&args.code).map_err(runtime)?);
    manifest.outputs.push(Artifact::of_bytes(&args.out, &bytes));
    manifest.config = serde_json::to_value(cfg).ok();
    manifest.code_hash = Some(spec.hash());
    manifest.write(&man).map_err(runtime)
}

/// `<out>.epmu<k>.json` for sweep point `k`.
fn table_path(out: &Path, k: usize) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(format!(".epmu{k}.json"));
    PathBuf::from(s)
}

fn sim_run(args: &SimRunArgs) -> Outcome {
    let started = unix_now();
    let cfg: RunConfig = read_json(&args.config)?;
    cfg.validate()?;
    if args.threads == Some(0) {
        return Err(invalid(anyhow!("threads must be at least 1")));
    }
    let man = manifest_path(&args.out);
    let tables: Vec<PathBuf> = if cfg.decoder.pm_rule == polarq::scl::PmRuleKind::Epmu {
        (0..cfg.sweep.len())
            .map(|k| table_path(&args.out, k))
            .collect()
    } else {
        Vec::new()
    };
    let mut outputs: Vec<&Path> = vec![&args.out, &man];
    outputs.extend(tables.iter().map(PathBuf::as_path));
    refuse_overwrite(&outputs, args.force)?;

    let opts = RunOptions {
        threads: args.threads,
    };
    let result = run_sweep(&cfg, &opts)?;
    for r in &result.records {
        eprintln!(
            "Eb/N0 {:5.2} dB  {:>9} frames  pm {:.3e}  lml {:.3e}  list {:.3e}  mllb {:.3e}",
            r.ebn0_db,
            r.frames(),
            r.fer(Metric::Pm),
            r.fer(Metric::Lml),
            r.fer(Metric::List),
            r.fer(Metric::Mllb)
        );
    }
    let mut csv = Vec::new();
    write_fer_csv(&mut csv, &result.records)?;

    let mut manifest = Manifest::new("sim run", started);
    manifest
        .inputs
        .push(Artifact::of_file(&args.config).map_err(runtime)?);
    manifest.config = serde_json::to_value(&cfg).ok();
    manifest.code_hash = Some(cfg.code.hash());
    for ((table, path), &ebn0_db) in result.tables.iter().zip(&tables).zip(&cfg.sweep) {
        let bytes = json_bytes(table)?;
        write_atomic(path, &bytes).map_err(runtime)?;
        manifest.epmu_tables.push(TableArtifact {
            ebn0_db,
            file: Artifact::of_bytes(path, &bytes),
        });
    }
    write_atomic(&args.out, &csv).map_err(runtime)?;
    manifest.outputs.push(Artifact::of_bytes(&args.out, &csv));
    manifest.write(&man).map_err(runtime)
}

#[derive(Serialize)]
struct ChannelInfo {
    esn0_db: f64,
    ebn0_db: f64,
    rate: f64,
    sigma2: f64,
    llr_mean: f64,
    biawgn_capacity_bits: f64,
    delta: f64,
    p_correct: f64,
    p_erase: f64,
    p_error: f64,
    q3_capacity_bits: f64,
    recon_unq: f64,
    recon_q: f64,
}

fn channel_info(args: &ChannelInfoArgs) -> Outcome {
    if !(args.rate > 0.0 && args.rate <= 1.0) {
        return Err(invalid(anyhow!("rate must be in (0, 1]")));
    }
    let channel = match (args.ebn0, args.esn0) {
        (Some(eb), _) => BiAwgn::from_ebn0_db(eb, args.rate),
        (None, Some(es)) => BiAwgn::from_esn0_db(es),
        (None, None) => unreachable!("clap enforces the snr group"),
    };
    let esn0_db = lin_to_db(channel.esn0());
    if !esn0_db.is_finite() {
        return Err(invalid(anyhow!("SNR must be finite")));
    }
    let q = QuantizerParams::optimal(&channel);
    let beec = beec_from(&channel, q.delta);
    let info = ChannelInfo {
        esn0_db,
        ebn0_db: esn0_db - lin_to_db(args.rate),
        rate: args.rate,
        sigma2: channel.sigma2,
        llr_mean: channel.mu(),
        biawgn_capacity_bits: biawgn_capacity(&channel),
        delta: q.delta,
        p_correct: beec.p_correct,
        p_erase: beec.p_erase,
        p_error: beec.p_error,
        q3_capacity_bits: beec_capacity(&beec),
        recon_unq: q.recon_unq,
        recon_q: q.recon_q,
    };
    print!("{}", String::from_utf8_lossy(&json_bytes(&info)?));
    Ok(())
}

fn gap(args: &GapArgs) -> Outcome {
    let read = |p: &Path| -> Outcome<_> {
        let text = read_input(p)?;
        read_fer_csv(text.as_bytes()).map_err(|e| invalid(anyhow!("{}: {e}", p.display())))
    };
    let (a, b) = (read(&args.a)?, read(&args.b)?);
    let ca = fer_curve(&a, args.metric);
    let cb = fer_curve(&b, args.metric_b.unwrap_or(args.metric));
    let g = gap_db(&ca, &cb, args.fer)?;
    println!("{g:.2} dB");
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Construct(a) => construct(a),
        Command::De {
            command: DeCommand::Rates(a),
        } => de_rates(a),
        Command::Epmu {
            command: EpmuCommand::Build(a),
        } => epmu_build(a),
        Command::Sim {
            command: SimCommand::Run(a),
        } => sim_run(a),
        Command::ChannelInfo(a) => channel_info(a),
        Command::Gap(a) => gap(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
