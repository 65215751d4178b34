//! Hot-path timings: DSL round-trips, distribution construction, the
//! screening sweep over shielding surfaces, and end-to-end classification
//! of bundled models.

use criterion::{criterion_group, criterion_main, Criterion};
use qtax_core::checkers::screening::{
    check_continuity_of_action, check_local_causality, check_strong_continuity_of_action,
};
use qtax_core::{
    behavior, canonical_text, chsh, classify, global_joint, parse_model, sampler,
    ClassifyOptions, Ctx, Model,
};

fn corpus(name: &str) -> Model {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    let src = std::fs::read_to_string(format!("{dir}/{name}.qtx")).expect("corpus file");
    // rationals first, decimal literals as the fallback, same as the driver
    let parsed = parse_model(&src, name, name, false)
        .or_else(|_| parse_model(&src, name, name, true))
        .expect("corpus parses");
    parsed.0
}

fn dsl(c: &mut Criterion) {
    let src = {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
        std::fs::read_to_string(format!("{dir}/superdet.qtx")).unwrap()
    };
    c.bench_function("parse_superdet", |b| {
        b.iter(|| parse_model(&src, "superdet", "superdet.qtx", false).unwrap())
    });
    let m = corpus("superdet");
    c.bench_function("canonical_text_superdet", |b| b.iter(|| canonical_text(&m)));
}

fn distributions(c: &mut Criterion) {
    let m = corpus("superdet");
    c.bench_function("global_joint_superdet", |b| {
        b.iter(|| global_joint(&m).unwrap())
    });
    c.bench_function("behavior_superdet", |b| b.iter(|| behavior(&m).unwrap()));
    let lhv = behavior(&corpus("lhv")).unwrap();
    c.bench_function("chsh_lhv", |b| {
        b.iter(|| chsh(&lhv, "x", "y", ("0", "1"), ("0", "1")).unwrap())
    });
}

fn screening(c: &mut Criterion) {
    let m = corpus("superdet");
    let ctx = Ctx::new(&m).unwrap();
    c.bench_function("screening_sweep_superdet", |b| {
        b.iter(|| {
            (
                check_continuity_of_action(&ctx),
                check_strong_continuity_of_action(&ctx),
                check_local_causality(&ctx),
            )
        })
    });
}

fn classification(c: &mut Criterion) {
    let opts = ClassifyOptions::default();
    let lhv = corpus("lhv");
    let sqm = corpus("sqm-bell");
    c.bench_function("classify_lhv_vs_sqm", |b| {
        b.iter(|| classify(&lhv, Some(&sqm), &opts).unwrap())
    });
    let superdet = corpus("superdet");
    c.bench_function("classify_superdet_vs_sqm", |b| {
        b.iter(|| classify(&superdet, Some(&sqm), &opts).unwrap())
    });
    let random = sampler::any_structured(&mut sampler::rng(7), 0);
    c.bench_function("classify_random_structured", |b| {
        b.iter(|| classify(&random, None, &opts).unwrap())
    });
}

criterion_group!(benches, dsl, distributions, screening, classification);
criterion_main!(benches);
