//! Engine-level acceptance: one test per numbered criterion, each ending in
//! a single pass line. Criterion 8 (report byte-stability across thread
//! counts) lives with the command-line crate.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{load, oracle_joint, sweep, OracleOut, CORPUS};
use qtax_core::checkers::irreducible::{check_irreducible, reduce};
use qtax_core::checkers::si::check_superdeterministic;
use qtax_core::sampler;
use qtax_core::{
    behavior, canonical_text, chsh, classify, global_joint, p_equivalent, parse_model, q,
    relabel_domain, rename_variables, translate, ClassifyOptions, Ctx, Severity, Status,
    Tolerance,
};

fn status_of(sw: &common::Sweep, name: &str) -> Status {
    sw.statuses
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("unknown property {name}"))
        .1
}

const H: Status = Status::Holds;
const F: Status = Status::Fails;
const NA: Status = Status::NotApplicable;

#[test]
fn criterion_1_corpus_matrix() {
    let start = Instant::now();

    // rows: property; columns follow CORPUS order
    let expected: [(&str, [Status; 8]); 19] = [
        ("deterministic", [H, F, H, H, H, H, H, H]),
        ("predictable", [H, F, H, H, F, H, H, F]),
        ("alocal", [F, F, F, F, F, F, F, H]),
        ("atemporal", [F, F, F, F, F, F, F, H]),
        ("acausal", [F, F, F, F, F, F, F, H]),
        ("irreducible", [H, H, H, H, H, H, H, H]),
        ("all-at-once-input", [F, F, F, F, F, F, F, NA]),
        ("continuity-of-action", [H, F, F, F, F, F, F, NA]),
        ("strong-continuity-of-action", [H, F, F, H, H, H, H, NA]),
        ("local-causality", [H, F, F, H, H, H, H, NA]),
        ("temporal-determinism", [H, F, H, H, F, F, H, NA]),
        ("time-reversibility", [F, F, F, F, F, F, F, NA]),
        ("future-input-dependence", [F, F, F, F, H, H, F, NA]),
        ("future-input-requirement", [F, F, F, F, H, F, F, NA]),
        ("pseudo-retrocausality", [F, F, F, F, F, H, F, NA]),
        ("counter-causality", [F, H, H, F, F, F, F, NA]),
        ("superluminal-signalling", [F, F, F, F, F, F, F, NA]),
        ("retrocausal-signalling", [F, F, F, F, H, F, F, NA]),
        ("statistical-independence", [H, H, H, F, H, H, F, NA]),
    ];
    let expected_locality = [
        "locally-subluminal",
        "non-locally-superluminal",
        "non-locally-superluminal",
        "locally-subluminal",
        "locally-subluminal",
        "locally-subluminal",
        "locally-subluminal",
        "not-applicable",
    ];
    let expected_order = [
        "locally-causal",
        "non-locally-superluminal-temporal",
        "non-locally-superluminal-temporal",
        "locally-causal",
        "locally-retrocausal",
        "locally-causal",
        "locally-causal",
        "not-applicable",
    ];

    let models: Vec<_> = CORPUS.iter().map(|(n, d)| load(n, *d)).collect();
    for (col, m) in models.iter().enumerate() {
        let sw = sweep(m);
        for (prop, row) in &expected {
            assert_eq!(
                status_of(&sw, prop),
                row[col],
                "{}: property {prop}",
                m.name
            );
        }
        assert_eq!(sw.locality, expected_locality[col], "{}: locality", m.name);
        assert_eq!(
            sw.causal_order, expected_order[col],
            "{}: causal order",
            m.name
        );
    }

    // CHSH anchors, exact rationals; the singlet-like value within 1e-5 of
    // its six-decimal target
    let s_of = |m: &qtax_core::Model| {
        let ctx = Ctx::new(m).unwrap();
        chsh(&ctx.behavior, "x", "y", ("0", "1"), ("0", "1")).unwrap()
    };
    assert_eq!(s_of(&models[0]), q(2, 1), "lhv CHSH");
    let s_sqm = s_of(&models[1]);
    assert_eq!(s_sqm, q(707_107, 250_000), "sqm-bell CHSH");
    let target = q(2_828_427, 1_000_000);
    let gap = if s_sqm > target {
        s_sqm.clone() - &target
    } else {
        target.clone() - &s_sqm
    };
    assert!(gap <= q(1, 100_000), "sqm-bell CHSH off target by {gap}");
    assert_eq!(s_of(&models[2]), q(4, 1), "pr-completion CHSH");

    // superdeterminism versus the singlet-like reference: holds, with all
    // five conjuncts recorded on the witness
    let sqm = &models[1];
    let superdet = &models[3];
    let ctx = Ctx::new(superdet).unwrap();
    let v = check_superdeterministic(&ctx, sqm);
    assert!(v.is_holds(), "superdet conjunction: {v}");
    let w = v.witness.as_ref().expect("conjunct witness");
    for conjunct in [
        "deterministic",
        "locally-causal",
        "statistical-independence-violated",
        "additional-variables",
        "behavior-match",
    ] {
        assert!(w.fields.contains_key(conjunct), "missing {conjunct}");
    }
    assert_ne!(w.fields["additional-variables"], "(none)");

    // behavior identity column: only the correlated twin reproduces the
    // reference
    let tol = Tolerance(None);
    let ref_behavior = behavior(sqm).unwrap();
    for (col, m) in models.iter().enumerate() {
        let same = p_equivalent(&behavior(m).unwrap(), &ref_behavior, &tol).is_holds();
        assert_eq!(same, col == 1 || col == 3, "{}: behavior match", m.name);
    }

    // end-to-end classifications against the singlet-like reference
    let opts = ClassifyOptions::default();
    let rep = classify(superdet, Some(sqm), &opts).unwrap();
    assert_eq!(rep.classification, "interpretation-candidate");
    assert_eq!(rep.properties[19].1.status, Status::Holds);
    let rep = classify(&models[0], Some(sqm), &opts).unwrap();
    assert_eq!(rep.classification, "modification-candidate");
    let rep = classify(sqm, Some(sqm), &opts).unwrap();
    assert_eq!(rep.classification, "representation-candidate");

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "matrix took {secs:.1}s");
    println!("criterion 1 (corpus verdict matrix, 8 models, {secs:.1}s): pass");
}

#[test]
fn criterion_2_joint_oracle() {
    let mut checked = 0;
    for i in 0..200u64 {
        let mut r = sampler::rng(9000 + i);
        let m = sampler::factor_model(&mut r, &format!("factor-{i}"));
        let issues = m.validate();
        assert!(
            issues.iter().all(|i| i.severity != Severity::Error),
            "factor-{i} generated an invalid model: {issues:?}"
        );
        let engine = global_joint(&m);
        let oracle = oracle_joint(&m);
        match (engine, oracle) {
            (Ok(table), OracleOut::Table(expect)) => {
                assert_eq!(table.entries, expect, "factor-{i}: joint differs");
            }
            (Err(_), OracleOut::Impossible) => {}
            (Ok(_), OracleOut::Impossible) => panic!("factor-{i}: engine missed a zero group"),
            (Err(e), OracleOut::Table(_)) => panic!("factor-{i}: spurious {e}"),
        }
        checked += 1;
    }
    println!("criterion 2 (joint oracle, {checked} random models): pass");
}

#[test]
fn criterion_3_implication_suite() {
    // implication index: 0 predictable=>deterministic, 1 strong=>plain,
    // 2 FIR=>FID, 3 FIR=>no temporal determinism, 4 reversible=>temporally
    // deterministic, 5 superdeterministic=>its three core conjuncts
    let mut fired = [0usize; 6];
    fn check_core(m: &qtax_core::Model, fired: &mut [usize; 6]) -> common::Sweep {
        let sw = sweep(m);
        let s = |n: &str| status_of(&sw, n);
        if s("predictable") == H {
            fired[0] += 1;
            assert_eq!(s("deterministic"), H, "{}: predictable yet random", m.name);
        }
        if s("strong-continuity-of-action") == H {
            fired[1] += 1;
            assert_eq!(
                s("continuity-of-action"),
                H,
                "{}: strong screening without plain screening",
                m.name
            );
        }
        if s("future-input-requirement") == H {
            fired[2] += 1;
            assert_eq!(
                s("future-input-dependence"),
                H,
                "{}: required future input not even used",
                m.name
            );
            fired[3] += 1;
            assert_ne!(
                s("temporal-determinism"),
                H,
                "{}: future-dependent yet temporally deterministic",
                m.name
            );
        }
        if s("time-reversibility") == H {
            fired[4] += 1;
            assert_eq!(
                s("temporal-determinism"),
                H,
                "{}: reversible but not temporally deterministic",
                m.name
            );
        }
        sw
    }

    for i in 0..160u64 {
        let mut r = sampler::rng(1000 + i);
        let m = sampler::implication_model(&mut r, i as usize);
        check_core(&m, &mut fired);
    }
    for i in 0..40u64 {
        let mut r = sampler::rng(1200 + i);
        let (subject, reference) =
            sampler::wing_conspiracy_twin(&mut r, &format!("twin-{i}"), &format!("twin-ref-{i}"));
        let sw = check_core(&subject, &mut fired);
        let ctx = Ctx::new(&subject).unwrap();
        let sd = check_superdeterministic(&ctx, &reference);
        assert!(sd.is_holds(), "twin-{i}: not superdeterministic: {sd:?}");
        fired[5] += 1;
        assert_eq!(status_of(&sw, "deterministic"), H, "twin-{i}");
        assert_eq!(status_of(&sw, "statistical-independence"), F, "twin-{i}");
        assert_eq!(status_of(&sw, "local-causality"), H, "twin-{i}");
    }

    assert!(
        fired.iter().all(|&c| c > 0),
        "an implication never fired: {fired:?}"
    );
    println!(
        "criterion 3 (implications over 200 random models, firings {fired:?}): pass"
    );
}

#[test]
fn criterion_4_bell_bound() {
    for i in 0..100u64 {
        let mut r = sampler::rng(4000 + i);
        let m = sampler::masked_lhv(&mut r, &format!("masked-{i}"));
        let sw = sweep(&m);
        assert_eq!(
            status_of(&sw, "local-causality"),
            H,
            "masked-{i}: construction must screen"
        );
        assert_eq!(
            status_of(&sw, "statistical-independence"),
            H,
            "masked-{i}: construction must keep the prior independent"
        );
        let ctx = Ctx::new(&m).unwrap();
        let s = chsh(&ctx.behavior, "x", "y", ("0", "1"), ("0", "1")).unwrap();
        assert!(s <= q(2, 1), "masked-{i}: CHSH {s} beats the bound");
    }
    println!("criterion 4 (screened plus independent implies CHSH <= 2, 100 models): pass");
}

#[test]
fn criterion_5_invariance() {
    for i in 0..50u64 {
        let mut r = sampler::rng(5000 + i);
        let m = sampler::any_structured(&mut r, i as usize);
        let base = sweep(&m);

        let mapping: BTreeMap<String, String> = m
            .variables
            .iter()
            .map(|v| (v.name.clone(), format!("n_{}", v.name)))
            .collect();
        let renamed = rename_variables(&m, &mapping).expect("fresh names");
        let relabeled = {
            let v = m
                .variables
                .iter()
                .find(|v| v.domain.len() >= 2)
                .expect("some nontrivial domain");
            let perm: Vec<usize> = (0..v.domain.len()).rev().collect();
            relabel_domain(&m, &v.name, &perm).expect("valid permutation")
        };
        let shifted = translate(&m, 3, -2);

        for (tag, variant) in [
            ("rename", renamed),
            ("relabel", relabeled),
            ("translate", shifted),
        ] {
            let got = sweep(&variant);
            for ((name, a), (_, b)) in base.statuses.iter().zip(&got.statuses) {
                assert_eq!(a, b, "model {i}, {tag}: property {name} moved");
            }
            assert_eq!(base.locality, got.locality, "model {i}, {tag}: locality");
            assert_eq!(
                base.causal_order, got.causal_order,
                "model {i}, {tag}: causal order"
            );
        }
    }
    println!("criterion 5 (verdicts invariant under rename, relabel, translate; 50 x 3): pass");
}

#[test]
fn criterion_6_reduction() {
    let tol = Tolerance(None);

    let soundness = |m: &qtax_core::Model| -> bool {
        let Ok(before) = behavior(m) else {
            return false;
        };
        let (reduced, _log) = reduce(m);
        let after = behavior(&reduced).expect("reduction kept the model consistent");
        assert!(
            p_equivalent(&before, &after, &tol).is_holds(),
            "{}: reduction changed the behavior",
            m.name
        );
        let (again, log2) = reduce(&reduced);
        assert!(log2.is_empty(), "{}: reduce found more on a second pass", m.name);
        assert_eq!(again, reduced, "{}: reduce not idempotent", m.name);
        true
    };

    for (name, decimal) in CORPUS {
        let m = load(name, decimal);
        assert!(soundness(&m));
    }
    let mut random_checked = 0;
    for i in 0..30u64 {
        let mut r = sampler::rng(6000 + i);
        let m = sampler::any_structured(&mut r, i as usize);
        if soundness(&m) {
            random_checked += 1;
        }
    }
    for i in 0..12u64 {
        let mut r = sampler::rng(6500 + i);
        let m = sampler::factor_model(&mut r, &format!("factor-red-{i}"));
        if soundness(&m) {
            random_checked += 1;
        }
    }
    assert!(random_checked >= 30, "too few reducible-checkable samples");

    // planted inert input: flagged by the audit, removed by the reduction
    for i in 0..20u64 {
        let mut r = sampler::rng(6800 + i);
        let base = sampler::any_structured(&mut r, i as usize);
        let planted = sampler::with_dead_input(&mut r, &base);
        let ctx = Ctx::new(&planted).unwrap();
        let audit = check_irreducible(&ctx);
        assert!(
            audit.is_fails(),
            "{}: planted input not flagged",
            planted.name
        );
        let (reduced, log) = reduce(&planted);
        assert!(
            reduced.variables.iter().all(|v| v.name != "zz_spare"),
            "{}: planted input survived reduction ({log:?})",
            planted.name
        );
    }
    println!(
        "criterion 6 (reduction sound and idempotent, corpus plus {random_checked} random, 20 planted): pass"
    );
}

#[test]
fn criterion_7_dsl_robustness() {
    // parse -> serialize -> parse reaches a fixpoint on every corpus file
    for (name, decimal) in CORPUS {
        let m = load(name, decimal);
        let text1 = canonical_text(&m);
        let (m2, _) = parse_model(&text1, name, "canon.qtx", decimal)
            .unwrap_or_else(|d| panic!("{name}: canonical text failed to parse: {d:?}"));
        let text2 = canonical_text(&m2);
        assert_eq!(text1, text2, "{name}: serializer not a fixpoint");
    }

    // seeded mutation fuzz: mixed sources, no panics, positioned errors
    let sources: Vec<String> = CORPUS
        .iter()
        .map(|(n, _)| std::fs::read_to_string(format!("{}/{n}.qtx", common::corpus_dir())).unwrap())
        .collect();
    let mut r = sampler::rng(7000);
    let mut parsed_ok = 0usize;
    let mut rejected = 0usize;
    for i in 0..1000usize {
        use rand::Rng;
        let mut src = sources[i % sources.len()].clone();
        for _ in 0..r.gen_range(1..=3) {
            src = mutate(&mut r, &src);
        }
        let decimal = r.gen_bool(0.5);
        let result = catch_unwind(AssertUnwindSafe(|| {
            parse_model(&src, "fuzz", "fuzz.qtx", decimal)
        }));
        match result {
            Err(_) => panic!("fuzz case {i} panicked; source:\n{src}"),
            Ok(Ok(_)) => parsed_ok += 1,
            Ok(Err(diags)) => {
                assert!(!diags.is_empty(), "fuzz case {i}: empty rejection");
                for d in &diags {
                    assert!(d.line >= 1, "fuzz case {i}: diagnostic without a line");
                }
                rejected += 1;
            }
        }
    }
    assert!(rejected > 0, "mutations never produced an invalid file");
    println!(
        "criterion 7 (serializer fixpoint; 1000 fuzz cases, {parsed_ok} accepted / {rejected} rejected, no panics): pass"
    );
}

fn mutate(r: &mut sampler::SampleRng, src: &str) -> String {
    use rand::Rng;
    let bytes = src.as_bytes();
    match r.gen_range(0..6) {
        // drop a line
        0 => {
            let lines: Vec<&str> = src.lines().collect();
            if lines.is_empty() {
                return String::new();
            }
            let k = r.gen_range(0..lines.len());
            lines
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, l)| *l)
                .collect::<Vec<_>>()
                .join("\n")
        }
        // duplicate a line
        1 => {
            let lines: Vec<&str> = src.lines().collect();
            if lines.is_empty() {
                return src.to_string();
            }
            let k = r.gen_range(0..lines.len());
            let mut out: Vec<&str> = Vec::new();
            for (i, l) in lines.iter().enumerate() {
                out.push(l);
                if i == k {
                    out.push(l);
                }
            }
            out.join("\n")
        }
        // replace one character
        2 => {
            if src.is_empty() {
                return src.to_string();
            }
            let pool = ['}', '{', ':', '@', '#', '/', '0', 'q', '-', '\u{221e}'];
            let idx = r.gen_range(0..src.chars().count());
            src.chars()
                .enumerate()
                .map(|(i, c)| if i == idx { pool[r.gen_range(0..pool.len())] } else { c })
                .collect()
        }
        // truncate at a character boundary
        3 => {
            let mut cut = r.gen_range(0..=bytes.len());
            while cut < bytes.len() && !src.is_char_boundary(cut) {
                cut += 1;
            }
            src[..cut].to_string()
        }
        // splice a random token
        4 => {
            let tokens = [
                " variable", " }", " {", " 1/0", " -3/4", " 0.5", " prior", " nowhere",
                " @(9,9)", " direction",
            ];
            let lines: Vec<&str> = src.lines().collect();
            if lines.is_empty() {
                return tokens[r.gen_range(0..tokens.len())].to_string();
            }
            let k = r.gen_range(0..lines.len());
            let t = tokens[r.gen_range(0..tokens.len())];
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    if i == k {
                        format!("{l}{t}")
                    } else {
                        (*l).to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        // swap two lines
        _ => {
            let mut lines: Vec<&str> = src.lines().collect();
            if lines.len() >= 2 {
                let a = r.gen_range(0..lines.len());
                let b = r.gen_range(0..lines.len());
                lines.swap(a, b);
            }
            lines.join("\n")
        }
    }
}
