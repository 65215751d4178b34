//! Helpers shared by the integration suites: corpus loading, a flat-scan
//! joint oracle, and a full status sweep per model.

use std::collections::BTreeMap;

use num::Zero;
use qtax_core::checkers::irreducible::check_irreducible;
use qtax_core::checkers::screening::{
    check_continuity_of_action, check_local_causality, check_strong_continuity_of_action,
    classify_locality,
};
use qtax_core::checkers::si::check_statistical_independence;
use qtax_core::checkers::structure::{
    check_acausal, check_all_at_once, check_alocal, check_atemporal, check_deterministic,
    check_predictable,
};
use qtax_core::checkers::temporal::{
    check_counter_causal, check_future_input_dependence, check_future_input_requirement,
    check_pseudo_retrocausal, check_retrocausal_signalling, check_superluminal_signalling,
    check_temporal_determinism, check_time_reversible, classify_causal_order,
};
use qtax_core::{parse_model, Ctx, Model, Q, Status, VarKind};

pub fn corpus_dir() -> String {
    format!("{}/../../corpus", env!("CARGO_MANIFEST_DIR"))
}

/// Corpus file stems with the number mode each one is written in.
pub const CORPUS: [(&str, bool); 8] = [
    ("lhv", false),
    ("sqm-bell", true),
    ("pr-completion", false),
    ("superdet", false),
    ("retro", false),
    ("pseudo-retro", false),
    ("common-cause-sd", false),
    ("bohm-toy", false),
];

pub fn load(name: &str, decimal: bool) -> Model {
    let path = format!("{}/{name}.qtx", corpus_dir());
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    match parse_model(&src, name, &path, decimal) {
        Ok((m, _warnings)) => m,
        Err(diags) => {
            for d in &diags {
                eprintln!("{d}");
            }
            panic!("{name} failed to parse");
        }
    }
}

/// Statuses of all twenty properties (reference-free, so superdeterminism
/// is reported not-applicable) plus the two labels.
#[allow(dead_code)]
pub struct Sweep {
    pub statuses: Vec<(&'static str, Status)>,
    pub locality: String,
    pub causal_order: String,
}

#[allow(dead_code)]
pub fn sweep(m: &Model) -> Sweep {
    let ctx = Ctx::new(m).expect("sweep models must have no impossible scenarios");
    let coa = check_continuity_of_action(&ctx);
    let strong = check_strong_continuity_of_action(&ctx);
    let lc = check_local_causality(&ctx);
    let fir = check_future_input_requirement(&ctx);
    let fid = check_future_input_dependence(ctx.m);

    let statuses = vec![
        ("deterministic", check_deterministic(&ctx).status),
        ("predictable", check_predictable(&ctx).status),
        ("alocal", check_alocal(ctx.m).status),
        ("atemporal", check_atemporal(ctx.m).status),
        ("acausal", check_acausal(ctx.m).status),
        ("irreducible", check_irreducible(&ctx).status),
        ("all-at-once-input", check_all_at_once(ctx.m).status),
        ("continuity-of-action", coa.status),
        ("strong-continuity-of-action", strong.status),
        ("local-causality", lc.status),
        (
            "temporal-determinism",
            check_temporal_determinism(&ctx).status,
        ),
        ("time-reversibility", check_time_reversible(&ctx).status),
        ("future-input-dependence", fid.status),
        ("future-input-requirement", fir.status),
        (
            "pseudo-retrocausality",
            check_pseudo_retrocausal(&strong, &fid, &fir).status,
        ),
        ("counter-causality", check_counter_causal(&ctx).status),
        (
            "superluminal-signalling",
            check_superluminal_signalling(&ctx).status,
        ),
        (
            "retrocausal-signalling",
            check_retrocausal_signalling(&ctx, &fir).status,
        ),
        (
            "statistical-independence",
            check_statistical_independence(&ctx).status,
        ),
    ];

    let locality = classify_locality(&ctx, &coa, &strong);
    let (order, _notes) = classify_causal_order(locality.label, &fir, &lc);
    Sweep {
        statuses,
        locality: locality.label.to_string(),
        causal_order: order.to_string(),
    }
}

/// Outcome of the flat-scan oracle below.
#[derive(Debug, PartialEq)]
#[allow(dead_code)]
pub enum OracleOut {
    Table(BTreeMap<Vec<usize>, Q>),
    Impossible,
}

/// Joint distribution computed the slow way: score every full assignment
/// as prior times kernel entries times constraint weights in one flat pass,
/// then normalize within each input group. Declares a scenario impossible
/// when positive prior mass meets an all-zero group.
#[allow(dead_code)]
pub fn oracle_joint(m: &Model) -> OracleOut {
    let sizes: Vec<usize> = m.variables.iter().map(|v| v.domain.len()).collect();
    let input_pos: Vec<usize> = m
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Input)
        .map(|(i, _)| i)
        .collect();

    let pos_of = |name: &str| m.variables.iter().position(|v| v.name == name).unwrap();

    let all = qtax_core::table::tuples(&sizes);
    let mut factored: Vec<(Vec<usize>, Vec<usize>, Q)> = Vec::with_capacity(all.len());
    let mut group_total: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for row in all {
        let mut fp = Q::from_integer(1.into());
        for mech in &m.mechanisms {
            let key: Vec<usize> = mech.parents.iter().map(|p| row[pos_of(p)]).collect();
            let target_val = row[pos_of(&mech.target)];
            let p = mech
                .kernel
                .get(&key)
                .and_then(|dist| dist.iter().find(|(v, _)| *v == target_val))
                .map(|(_, p)| p.clone())
                .unwrap_or_else(Q::zero);
            fp *= p;
            if fp.is_zero() {
                break;
            }
        }
        if !fp.is_zero() {
            for c in &m.constraints {
                let key: Vec<usize> = c.scope.iter().map(|s| row[pos_of(s)]).collect();
                fp *= c.weights.get(&key).cloned().unwrap_or_else(Q::zero);
                if fp.is_zero() {
                    break;
                }
            }
        }
        let scenario: Vec<usize> = input_pos.iter().map(|&i| row[i]).collect();
        let slot = group_total.entry(scenario.clone()).or_insert_with(Q::zero);
        *slot = slot.clone() + &fp;
        factored.push((row, scenario, fp));
    }

    let prior_of = |scenario: &[usize]| -> Q {
        if input_pos.is_empty() {
            return Q::from_integer(1.into());
        }
        m.prior
            .entries
            .get(scenario)
            .cloned()
            .unwrap_or_else(Q::zero)
    };

    for (scenario, z) in &group_total {
        if z.is_zero() && !prior_of(scenario).is_zero() {
            return OracleOut::Impossible;
        }
    }

    let mut out = BTreeMap::new();
    for (row, scenario, fp) in factored {
        if fp.is_zero() {
            continue;
        }
        let prior = prior_of(&scenario);
        if prior.is_zero() {
            continue;
        }
        let z = group_total.get(&scenario).unwrap();
        let mass = prior * fp / z.clone();
        if !mass.is_zero() {
            out.insert(row, mass);
        }
    }
    OracleOut::Table(out)
}
