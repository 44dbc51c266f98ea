use cauchy_mimo::chan_est::raw_ml_estimate;
use cauchy_mimo::coding::{LdpcCode, UplinkDemapper};
use cauchy_mimo::detect::detect_cauchy_ml;
use cauchy_mimo::rng::substream;
use cauchy_mimo::system_model::{
    make_pilots, received_data_uplink, received_pilots, Direction,
};
use cauchy_mimo::{
    BacktrackingOptions, ChannelRealization, Init, PilotKind, PowerProfile, RawMlOptions,
    StableNoiseSpec, SymbolAlphabet,
};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use std::hint::black_box;

const M: usize = 100;
const K: usize = 8;

fn setup() -> (ChannelRealization, PowerProfile, StableNoiseSpec) {
    let mut rng = substream(1, 0);
    let channel = ChannelRealization::draw(M, K, &mut rng);
    let powers = PowerProfile::swept_last(K, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 5.0, Direction::Uplink).unwrap();
    (channel, powers, StableNoiseSpec::complex_cauchy(1.0).unwrap())
}

fn raw_ml(c: &mut Criterion) {
    let (channel, powers, noise) = setup();
    let pilots = make_pilots(15, K, PilotKind::Dft).unwrap();
    let y = received_pilots(&channel, &pilots, &powers, Some(&noise), &mut substream(1, 1)).unwrap();
    let opts = RawMlOptions::default();
    c.bench_function("raw_ml_estimate M=100 K=8 tau=15", |b| {
        b.iter(|| raw_ml_estimate(black_box(&y), &pilots, &powers, 1.0, Init::Zero, &opts).unwrap())
    });
}

fn detection(c: &mut Criterion) {
    let (channel, powers, noise) = setup();
    let q = SymbolAlphabet::qpsk();
    let mut rng = substream(1, 2);
    let sent: Vec<_> = (0..K).map(|_| q.point(rng.random_range(0..4))).collect();
    let r = received_data_uplink(&channel, &powers, &sent, Some(&noise), &mut rng).unwrap();
    let opts = BacktrackingOptions::default();
    c.bench_function("detect_cauchy_ml M=100 K=8", |b| {
        b.iter(|| detect_cauchy_ml(black_box(&r), &channel.h, &powers.p, 1.0, &q, &opts).unwrap())
    });
    c.bench_function("uplink symbol LLRs M=100 K=8", |b| {
        b.iter(|| {
            let demapper = UplinkDemapper::new(black_box(&r), &channel.h, &powers.p, 1.0, &q, opts).unwrap();
            demapper.symbol_llrs(K - 1)
        })
    });
}

fn ldpc(c: &mut Criterion) {
    let code = LdpcCode::ieee80211n_648_r34();
    let mut rng = substream(1, 3);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let word = code.encode(&info).unwrap();
    let llrs: Vec<f64> = word
        .iter()
        .map(|&b| (if b == 0 { 1.0 } else { -1.0 }) * 1.5 + rng.random_range(-2.0..2.0))
        .collect();
    c.bench_function("ldpc decode 648 bits 50 iterations", |b| {
        b.iter(|| code.decode(black_box(&llrs), 50))
    });
}

criterion_group!(benches, raw_ml, detection, ldpc);
criterion_main!(benches);
