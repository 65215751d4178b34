//! Behavior-level comparison of two models, experiment-restricted
//! comparison, and the CHSH functional of a two-setting behavior.

use crate::model::parse_pm1;
use crate::rational::{format_q, Q, Tolerance};
use crate::table::Behavior;
use crate::verdict::{Status, Verdict, Witness};
use num::Zero;
use std::collections::BTreeMap;

/// A named, fully specified choice of settings: variable name to value
/// label.
pub type Experiment = BTreeMap<String, String>;

pub const REASON_SIGNATURE_MISMATCH: &str = "SIGNATURE_MISMATCH";

/// Positional signature check: setting domains and outcome domains must
/// match in declaration order. Names are allowed to differ.
fn signature_mismatch(a: &Behavior, b: &Behavior) -> Option<String> {
    if a.setting_domains.len() != b.setting_domains.len() {
        return Some(format!(
            "{} settings versus {}",
            a.setting_domains.len(),
            b.setting_domains.len()
        ));
    }
    for (i, (da, db)) in a.setting_domains.iter().zip(&b.setting_domains).enumerate() {
        if da != db {
            return Some(format!(
                "setting {} ({} / {}) differs in domain",
                i, a.setting_vars[i], b.setting_vars[i]
            ));
        }
    }
    if a.outcome_domains.len() != b.outcome_domains.len() {
        return Some(format!(
            "{} outcomes versus {}",
            a.outcome_domains.len(),
            b.outcome_domains.len()
        ));
    }
    for (i, (da, db)) in a.outcome_domains.iter().zip(&b.outcome_domains).enumerate() {
        if da != db {
            return Some(format!(
                "outcome {} ({} / {}) differs in domain",
                i, a.outcome_vars[i], b.outcome_vars[i]
            ));
        }
    }
    None
}

fn setting_string(b: &Behavior, setting: &[usize]) -> String {
    b.setting_vars
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}={}", n, b.setting_domains[i][setting[i]]))
        .collect::<Vec<_>>()
        .join(", ")
}

fn outcome_string(b: &Behavior, key: &[usize]) -> String {
    b.outcome_vars
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}={}", n, b.outcome_domains[i][key[i]]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Same scenario spaces and the same outcome distribution at every
/// realizable setting, within the tolerance.
pub fn p_equivalent(a: &Behavior, b: &Behavior, tol: &Tolerance) -> Verdict {
    if let Some(detail) = signature_mismatch(a, b) {
        return Verdict {
            status: Status::Fails,
            witness: Some(Witness::new().field("mismatch", detail)),
            reason: Some(REASON_SIGNATURE_MISMATCH.to_string()),
        };
    }
    let mut settings: Vec<&Vec<usize>> = a.table.keys().chain(b.table.keys()).collect();
    settings.sort();
    settings.dedup();
    for s in settings {
        match (a.table.get(s), b.table.get(s)) {
            (Some(da), Some(db)) => {
                let mut keys: Vec<&Vec<usize>> = da.keys().chain(db.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let pa = da.get(k).cloned().unwrap_or_else(Q::zero);
                    let pb = db.get(k).cloned().unwrap_or_else(Q::zero);
                    if !tol.eq(&pa, &pb) {
                        let w = Witness::new()
                            .field("setting", setting_string(a, s))
                            .field("outcome", outcome_string(a, k))
                            .field("P-a", format_q(&pa))
                            .field("P-b", format_q(&pb));
                        return Verdict::fails(w);
                    }
                }
            }
            (da, _) => {
                let which = if da.is_some() { "second" } else { "first" };
                let w = Witness::new()
                    .field("setting", setting_string(a, s))
                    .field(
                        "finding",
                        format!("setting has zero prior mass only in the {which} model"),
                    );
                return Verdict::fails(w);
            }
        }
    }
    Verdict::holds()
}

/// p-equivalence restricted to a list of named experiments, resolved against
/// the first behavior's setting names.
pub fn e_equivalent(
    a: &Behavior,
    b: &Behavior,
    experiments: &[Experiment],
    tol: &Tolerance,
) -> Verdict {
    if let Some(detail) = signature_mismatch(a, b) {
        return Verdict {
            status: Status::Fails,
            witness: Some(Witness::new().field("mismatch", detail)),
            reason: Some(REASON_SIGNATURE_MISMATCH.to_string()),
        };
    }
    for (ei, exp) in experiments.iter().enumerate() {
        let mut tuple = Vec::with_capacity(a.setting_vars.len());
        for (i, name) in a.setting_vars.iter().enumerate() {
            let Some(label) = exp.get(name) else {
                return Verdict::fails_because(format!(
                    "experiment #{ei} does not fix setting {name}"
                ));
            };
            let Some(idx) = a.setting_domains[i].iter().position(|v| v == label) else {
                return Verdict::fails_because(format!(
                    "experiment #{ei}: {name} has no value {label}"
                ));
            };
            tuple.push(idx);
        }
        for (name, _) in exp {
            if !a.setting_vars.contains(name) {
                return Verdict::fails_because(format!(
                    "experiment #{ei} names unknown setting {name}"
                ));
            }
        }
        let (Some(da), Some(db)) = (a.table.get(&tuple), b.table.get(&tuple)) else {
            return Verdict::fails_because(format!(
                "experiment #{ei} ({}) has zero prior mass",
                setting_string(a, &tuple)
            ));
        };
        let mut keys: Vec<&Vec<usize>> = da.keys().chain(db.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let pa = da.get(k).cloned().unwrap_or_else(Q::zero);
            let pb = db.get(k).cloned().unwrap_or_else(Q::zero);
            if !tol.eq(&pa, &pb) {
                let w = Witness::new()
                    .field("experiment", format!("#{ei}"))
                    .field("setting", setting_string(a, &tuple))
                    .field("outcome", outcome_string(a, k))
                    .field("P-a", format_q(&pa))
                    .field("P-b", format_q(&pb));
                return Verdict::fails(w);
            }
        }
    }
    Verdict::holds()
}

/// CHSH combination E(x0,y0) + E(x0,y1) + E(x1,y0) - E(x1,y1) of a behavior
/// with exactly two settings and two plus-minus-one valued outcomes.
pub fn chsh(
    b: &Behavior,
    x: &str,
    y: &str,
    x_vals: (&str, &str),
    y_vals: (&str, &str),
) -> Result<Q, String> {
    if b.setting_vars.len() != 2 {
        return Err(format!(
            "behavior has {} settings, need exactly 2",
            b.setting_vars.len()
        ));
    }
    if b.outcome_vars.len() != 2 {
        return Err(format!(
            "behavior has {} outcomes, need exactly 2",
            b.outcome_vars.len()
        ));
    }
    let xs = b
        .setting_vars
        .iter()
        .position(|n| n == x)
        .ok_or_else(|| format!("no setting named {x}"))?;
    let ys = b
        .setting_vars
        .iter()
        .position(|n| n == y)
        .ok_or_else(|| format!("no setting named {y}"))?;
    if xs == ys {
        return Err("the two settings must differ".to_string());
    }
    let signs: Vec<Vec<i64>> = b
        .outcome_domains
        .iter()
        .enumerate()
        .map(|(i, dom)| {
            dom.iter()
                .map(|label| {
                    parse_pm1(label).ok_or_else(|| {
                        format!(
                            "outcome {} value {label} is not a plus-minus-one label",
                            b.outcome_vars[i]
                        )
                    })
                })
                .collect::<Result<Vec<i64>, String>>()
        })
        .collect::<Result<_, _>>()?;
    let resolve = |slot: usize, label: &str| -> Result<usize, String> {
        b.setting_domains[slot]
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| {
                format!("setting {} has no value {label}", b.setting_vars[slot])
            })
    };
    let x_idx = (resolve(xs, x_vals.0)?, resolve(xs, x_vals.1)?);
    let y_idx = (resolve(ys, y_vals.0)?, resolve(ys, y_vals.1)?);

    let correlator = |xi: usize, yi: usize| -> Result<Q, String> {
        let mut setting = vec![0usize; 2];
        setting[xs] = xi;
        setting[ys] = yi;
        let dist = b.table.get(&setting).ok_or_else(|| {
            format!("setting {} has zero prior mass", setting_string(b, &setting))
        })?;
        let mut e = Q::zero();
        for (key, p) in dist {
            let sign = signs[0][key[0]] * signs[1][key[1]];
            e += Q::from_integer(sign.into()) * p.clone();
        }
        Ok(e)
    };
    Ok(correlator(x_idx.0, y_idx.0)? + correlator(x_idx.0, y_idx.1)?
        + correlator(x_idx.1, y_idx.0)?
        - correlator(x_idx.1, y_idx.1)?)
}
