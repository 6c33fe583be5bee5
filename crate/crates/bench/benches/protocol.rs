use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use deauthguard::scenario::{preset, run_scenario};
use deauthguard::station::Mode;
use deauthguard::{decode_frame, generate_token, hash_token, ManagementFrame, ReasonCode, Token};
use deauthguard_bench::{associated, sample_frames, AP, STA};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::hint::black_box;

fn tokens(c: &mut Criterion) {
    let mut g = c.benchmark_group("tokens");
    g.bench_function("generate_os", |b| b.iter(Token::random));
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    g.bench_function("generate_seeded", |b| b.iter(|| generate_token(&mut rng)));
    let t = Token::random();
    g.bench_function("hash", |b| b.iter(|| hash_token(black_box(&t))));
    g.finish();
}

fn codec(c: &mut Criterion) {
    let mut g = c.benchmark_group("codec");
    for f in sample_frames() {
        let bytes = f.encode();
        g.bench_function(format!("encode_{}", bytes.len()), |b| b.iter(|| black_box(&f).encode()));
        g.bench_function(format!("decode_{}", bytes.len()), |b| b.iter(|| decode_frame(black_box(&bytes))));
    }
    g.finish();
}

fn verification(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    let (ap, sta) = associated(Mode::Protected, 9);
    let mut legit_sta = sta.clone();
    let legit = legit_sta.disconnect(AP, ReasonCode(3)).unwrap();
    g.bench_function("accept_legit", |b| {
        b.iter_batched(
            || ap.clone(),
            |mut ap| ap.handle_teardown(&legit).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let forged = ManagementFrame::deauth(STA, AP, ReasonCode(3), Some([0x5a; 16]));
    let mut ap_forged = ap.clone();
    g.bench_function("ignore_forged", |b| b.iter(|| ap_forged.handle_teardown(black_box(&forged)).unwrap()));
    g.finish();
}

fn scenarios(c: &mut Criterion) {
    let mut g = c.benchmark_group("scenario");
    for name in ["protected_legit_teardown", "protected_token_guess"] {
        let cfg = preset(name).unwrap();
        g.bench_function(name, |b| b.iter(|| run_scenario(&cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, tokens, codec, verification, scenarios);
criterion_main!(benches);
