use std::sync::Arc;

use polarq::channel::{quantize, transmit, BiAwgn, QuantizerParams};
use polarq::epmu::{build_epmu_table, EpmuConfig};
use polarq::llr::{TernaryAlgebra, Unquantized};
use polarq::scl::{biawgn_correlation, scl_decode, select_ml, ChannelObservation, PmUpdateRule};
use polarq::stats::ci95;
use polarq::{construct_rm, encode, CodeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codebook(spec: &CodeSpec) -> Vec<Vec<u8>> {
    (0..1usize << spec.k())
        .map(|w| {
            let msg: Vec<u8> = (0..spec.k()).map(|j| ((w >> j) & 1) as u8).collect();
            encode(spec, &msg).unwrap()
        })
        .collect()
}

#[test]
fn in_list_ml_matches_exhaustive_ml() {
    let spec = CodeSpec::custom(3, vec![3, 5, 6, 7]).unwrap();
    let book = codebook(&spec);
    let ch = BiAwgn::from_ebn0_db(1.0, spec.rate());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let frames = 20_000u64;
    let (mut lml, mut ml) = (0u64, 0u64);
    for _ in 0..frames {
        let x = &book[rng.random_range(0..book.len())];
        let y = transmit(x, &ch, &mut rng);
        let list =
            scl_decode(&spec, &y, &Unquantized::min_sum(), 16, &PmUpdateRule::Exact).unwrap();
        let picked = &select_ml(&list, ChannelObservation::BiAwgn(&y))
            .unwrap()
            .codeword;
        let best = book
            .iter()
            .max_by(|a, b| biawgn_correlation(&y, a).total_cmp(&biawgn_correlation(&y, b)))
            .unwrap();
        lml += u64::from(picked != x);
        ml += u64::from(best != x);
    }
    let (a, b) = (ci95(lml, frames).unwrap(), ci95(ml, frames).unwrap());
    assert!(a.0 <= b.1 && b.0 <= a.1, "LML {lml} vs ML {ml} of {frames}");
    assert!(ml > 100);
}

#[test]
fn epmu_rule_changes_list_errors_at_fixed_seed() {
    let spec = construct_rm(6, 2).unwrap();
    let ebn0 = 2.5;
    let (table, _) = build_epmu_table(&spec, &EpmuConfig::new(ebn0)).unwrap();
    let epmu = PmUpdateRule::EpmuTable(Arc::new(table));
    let ch = BiAwgn::from_ebn0_db(ebn0, spec.rate());
    let delta = QuantizerParams::optimal(&ch).delta;
    let algebra = TernaryAlgebra::default();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let (mut refined_misses, mut epmu_misses, mut differing) = (0, 0, 0);
    for _ in 0..3000 {
        let msg: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2u8)).collect();
        let x = encode(&spec, &msg).unwrap();
        let q: Vec<_> = transmit(&x, &ch, &mut rng)
            .iter()
            .map(|&l| quantize(l, delta))
            .collect();
        let a = scl_decode(&spec, &q, &algebra, 4, &PmUpdateRule::Refined).unwrap();
        let b = scl_decode(&spec, &q, &algebra, 4, &epmu).unwrap();
        refined_misses += usize::from(!a.contains(&x));
        epmu_misses += usize::from(!b.contains(&x));
        differing += usize::from(a != b);
    }
    assert!(differing > 0);
    assert_ne!(refined_misses, epmu_misses);
    assert!(
        epmu_misses < refined_misses,
        "EPMU {epmu_misses} vs refined {refined_misses}"
    );
}
