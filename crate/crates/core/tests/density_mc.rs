//! Density evolution against genie-aided Monte-Carlo decoding.

use polarq::channel::{beec_from, optimize_delta, quantize, transmit, BiAwgn};
use polarq::density::{
    design_code, evolve, reliabilities, Grid, GridDe, GridPmf, TernaryDe, TernaryPmf,
};
use polarq::llr::{CnKernel, Ternary, TernaryAlgebra, Unquantized};
use polarq::sc::ScDecoder;
use polarq::scl::PmRuleKind;
use polarq::sim::{
    run_point, AlgebraKind, ChannelKind, DecoderConfig, Metric, RunConfig, RunOptions, Selection,
    StopRule,
};
use polarq::CodeSpec;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FRAMES: usize = 200_000;

fn close(mc: f64, de: f64, extra: f64) -> bool {
    let sd = (de * (1.0 - de) / FRAMES as f64).sqrt();
    (mc - de).abs() <= 5.0 * sd + extra
}

#[test]
fn ternary_de_matches_genie_decoding() {
    let m = 4;
    let n = 1 << m;
    let ch = BiAwgn::from_esn0_db(1.0);
    let (delta, _) = optimize_delta(&ch);
    let de = evolve(
        &TernaryDe,
        m,
        &TernaryPmf::from_beec(&beec_from(&ch, delta)),
    );

    let mut dec = ScDecoder::new(TernaryAlgebra::default(), m);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let zeros = vec![0u8; n];
    let mut hits = vec![[0usize; 3]; n];
    for _ in 0..FRAMES {
        let q: Vec<Ternary> = transmit(&zeros, &ch, &mut rng)
            .iter()
            .map(|&l| quantize(l, delta))
            .collect();
        for (i, l) in dec.genie_llrs(&q, &zeros).unwrap().into_iter().enumerate() {
            hits[i][l.index()] += 1;
        }
    }
    for i in 0..n {
        for q in Ternary::ALL {
            let mc = hits[i][q.index()] as f64 / FRAMES as f64;
            assert!(
                close(mc, de[i].get(q), 0.0),
                "i={i} {q:?}: mc {mc} de {}",
                de[i].get(q)
            );
        }
    }
}

#[test]
fn grid_de_error_probabilities_match_genie_decoding() {
    let m = 4;
    let n = 1 << m;
    let ch = BiAwgn::from_esn0_db(0.0);
    let grid = Grid::default();
    for kernel in [CnKernel::MinSum, CnKernel::Exact] {
        let report = reliabilities(
            &GridDe::new(grid, kernel),
            m,
            &GridPmf::from_biawgn(grid, &ch),
        );
        let mut dec = ScDecoder::new(Unquantized { kernel }, m);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let zeros = vec![0u8; n];
        let mut errors = vec![0usize; n];
        for _ in 0..FRAMES {
            let y = transmit(&zeros, &ch, &mut rng);
            for (i, l) in dec.genie_llrs(&y, &zeros).unwrap().into_iter().enumerate() {
                if l < 0.0 {
                    errors[i] += 1;
                }
            }
        }
        for i in 0..n {
            let mc = errors[i] as f64 / FRAMES as f64;
            // the 1/32 grid shifts probabilities by a few 1e-4 at most
            let de = report.error_prob[i];
            assert!(
                close(mc, de, 5e-4 + 0.01 * de),
                "{kernel:?} i={i}: mc {mc} de {de}"
            );
        }
    }
}

fn sc_errors(code: &CodeSpec, ebn0: f64) -> u64 {
    let cfg = RunConfig {
        code: code.clone(),
        channel: ChannelKind::Q3,
        decoder: DecoderConfig {
            algebra: AlgebraKind::Ternary,
            kernel: CnKernel::MinSum,
            list_size: 1,
            pm_rule: PmRuleKind::Refined,
            selection: Selection::Pm,
            epmu: Default::default(),
        },
        sweep: vec![ebn0],
        stop: StopRule {
            min_errors: u64::MAX,
            max_frames: 4000,
            metric: Metric::Pm,
        },
        seed: 5,
    };
    run_point(&cfg, ebn0, None, &RunOptions::default())
        .unwrap()
        .errors(Metric::Pm)
}

#[test]
fn designed_code_beats_random_information_sets() {
    let (m, k, ebn0) = (6, 32, 4.0);
    let ch = BiAwgn::from_ebn0_db(ebn0, 0.5);
    let (delta, _) = optimize_delta(&ch);
    let designed = design_code(
        m,
        k,
        &TernaryPmf::from_beec(&beec_from(&ch, delta)),
        &TernaryDe,
        "q3_ternary",
        ebn0,
    )
    .unwrap();
    let good = sc_errors(&designed, ebn0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..3 {
        let mut info: Vec<usize> = sample(&mut rng, 1 << m, k).into_vec();
        info.sort_unstable();
        let random = CodeSpec::custom(m, info).unwrap();
        let bad = sc_errors(&random, ebn0);
        assert!(bad > 4 * good.max(1), "designed {good} vs random {bad}");
    }
}
