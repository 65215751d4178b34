//! Statistical independence of hidden inputs from controllable settings, and
//! the superdeterminism test built on top of it.

use super::screening::check_local_causality;
use super::structure::check_deterministic;
use super::temporal::check_future_input_requirement;
use super::{Ctx, REASON_NO_CONTROLLABLE, REASON_NO_HIDDEN};
use crate::model::Model;
use crate::rational::{format_q, Q};
use crate::table::behavior;
use crate::verdict::{Probe, Status, Verdict, Witness};
use num::Zero;
use std::collections::BTreeMap;

/// P(lambda | settings) must equal P(lambda) under the prior, where lambda
/// collects every hidden input and the settings collect every controllable
/// input. Comparisons are exact; both probabilities come from the prior
/// alone.
pub fn check_statistical_independence(ctx: &Ctx) -> Verdict {
    let m = ctx.m;
    let inputs = m.inputs();
    let lambda_slots: Vec<usize> = ctx.input_slots(|v| v.hidden);
    let setting_slots: Vec<usize> = ctx.input_slots(|v| v.controllable);
    if lambda_slots.is_empty() {
        return Verdict::not_applicable(REASON_NO_HIDDEN);
    }
    if setting_slots.is_empty() {
        return Verdict::not_applicable(REASON_NO_CONTROLLABLE);
    }

    let mut lambda_marginal: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    let mut setting_marginal: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    let mut pair_mass: BTreeMap<(Vec<usize>, Vec<usize>), Q> = BTreeMap::new();
    for (tuple, p) in &m.prior.entries {
        if p.is_zero() {
            continue;
        }
        let lam: Vec<usize> = lambda_slots.iter().map(|&s| tuple[s]).collect();
        let set: Vec<usize> = setting_slots.iter().map(|&s| tuple[s]).collect();
        *lambda_marginal.entry(lam.clone()).or_insert_with(Q::zero) += p.clone();
        *setting_marginal.entry(set.clone()).or_insert_with(Q::zero) += p.clone();
        *pair_mass.entry((lam, set)).or_insert_with(Q::zero) += p.clone();
    }

    let label = |slots: &[usize], key: &[usize]| {
        slots
            .iter()
            .zip(key)
            .map(|(&s, &v)| format!("{}={}", inputs[s].name, inputs[s].domain[v]))
            .collect::<Vec<_>>()
            .join(", ")
    };

    for (set, set_mass) in &setting_marginal {
        for (lam, marginal) in &lambda_marginal {
            let joint = pair_mass
                .get(&(lam.clone(), set.clone()))
                .cloned()
                .unwrap_or_else(Q::zero);
            let conditional = joint / set_mass.clone();
            if conditional != *marginal {
                let w = Witness::new()
                    .field("lambda", label(&lambda_slots, lam))
                    .field("settings", label(&setting_slots, set))
                    .field("P(lambda|xy)", format_q(&conditional))
                    .field("P(lambda)", format_q(marginal))
                    .with_probe(Probe::PriorConditional {
                        lambda: lambda_slots
                            .iter()
                            .zip(lam)
                            .map(|(&s, &v)| (inputs[s].name.clone(), v))
                            .collect(),
                        settings: setting_slots
                            .iter()
                            .zip(set)
                            .map(|(&s, &v)| (inputs[s].name.clone(), v))
                            .collect(),
                        conditional,
                        marginal: marginal.clone(),
                    });
                return Verdict::fails(w);
            }
        }
    }
    Verdict::holds()
}

/// Inputs of `m` that have no counterpart in `reference`.
///
/// Non-hidden inputs are matched positionally in declaration order and must
/// carry identical domains. Hidden inputs are matched greedily, in
/// declaration order, to reference hidden inputs of the same domain size.
pub fn identify_additional_variables(m: &Model, reference: &Model) -> Vec<String> {
    let mut additional = Vec::new();

    let m_open: Vec<_> = m.inputs().into_iter().filter(|v| !v.hidden).collect();
    let r_open: Vec<_> = reference.inputs().into_iter().filter(|v| !v.hidden).collect();
    for (i, v) in m_open.iter().enumerate() {
        match r_open.get(i) {
            Some(r) if r.domain == v.domain => {}
            _ => additional.push(v.name.clone()),
        }
    }

    let m_hidden: Vec<_> = m.inputs().into_iter().filter(|v| v.hidden).collect();
    let r_hidden: Vec<_> = reference.inputs().into_iter().filter(|v| v.hidden).collect();
    let mut consumed = vec![false; r_hidden.len()];
    for v in m_hidden {
        let slot = r_hidden
            .iter()
            .enumerate()
            .position(|(k, r)| !consumed[k] && r.domain.len() == v.domain.len());
        match slot {
            Some(k) => consumed[k] = true,
            None => additional.push(v.name.clone()),
        }
    }
    additional
}

/// The five-part superdeterminism test against a reference model:
/// deterministic, locally causal (screening holds, no future input needed),
/// statistical independence violated, additional variables present, and the
/// reference behavior reproduced within tolerance. The one-world reading is
/// satisfied by construction in this formalism and is reported as such.
pub fn check_superdeterministic(ctx: &Ctx, reference: &Model) -> Verdict {
    let det = check_deterministic(ctx);
    let lc = check_local_causality(ctx);
    let fir = check_future_input_requirement(ctx);
    let si = check_statistical_independence(ctx);

    for (name, v) in [
        ("local causality", &lc),
        ("future-input requirement", &fir),
        ("statistical independence", &si),
    ] {
        if v.is_na() {
            return Verdict::not_applicable(format!(
                "{name} is not applicable ({})",
                v.reason.as_deref().unwrap_or("no reason")
            ));
        }
    }

    let locally_causal = lc.is_holds() && fir.is_fails();
    let additional = identify_additional_variables(ctx.m, reference);
    let behavior_match = match behavior(reference) {
        Ok(ref_behavior) => ctx.behavior.same_as(&ref_behavior, &ctx.tol),
        Err(_) => false,
    };

    let sub = |ok: bool| if ok { "holds" } else { "fails" };
    let w = Witness::new()
        .field("deterministic", sub(det.is_holds()))
        .field("locally-causal", sub(locally_causal))
        .field(
            "statistical-independence-violated",
            sub(si.is_fails()),
        )
        .field(
            "additional-variables",
            if additional.is_empty() {
                "(none)".to_string()
            } else {
                additional.join(", ")
            },
        )
        .field("behavior-match", sub(behavior_match))
        .field("one-world", "satisfied by construction");

    let all = det.is_holds()
        && locally_causal
        && si.is_fails()
        && !additional.is_empty()
        && behavior_match;
    if all {
        return Verdict {
            status: Status::Holds,
            witness: Some(w),
            reason: None,
        };
    }
    let reason = if !det.is_holds() {
        "model is not deterministic"
    } else if !locally_causal {
        "model is not locally causal"
    } else if !si.is_fails() {
        "statistical independence is not violated"
    } else if additional.is_empty() {
        "no additional variables beyond the reference"
    } else {
        "behavior does not reproduce the reference"
    };
    Verdict {
        status: Status::Fails,
        witness: Some(w),
        reason: Some(reason.to_string()),
    }
}
