//! Time-directed checkers: temporal determinism, time reversibility, the two
//! future-input properties, the causal-order classification, and the
//! signalling checks that ride on the behavior table.

use super::screening::{check_local_causality, first_difference, LocalityLabel};
use super::structure::{check_deterministic, point_value};
use super::{
    scenario_labels, Ctx, REASON_ALOCAL, REASON_NO_ARROW, REASON_NO_CONTROLLABLE,
};
use crate::lattice::{Arrow, ConePart};
use crate::model::{Model, VarKind, Variable};
use crate::rational::{format_q, Q};
use crate::table::{factors_by_groups, tuples, Behavior};
use crate::transform::reverse_time;
use crate::verdict::{Status, Verdict, Witness};
use num::Zero;
use std::collections::BTreeMap;

fn arrow_gate(m: &Model) -> Option<Verdict> {
    match &m.lattice {
        None => Some(Verdict::not_applicable(REASON_ALOCAL)),
        Some(l) if l.arrow == Arrow::None => Some(Verdict::not_applicable(REASON_NO_ARROW)),
        Some(_) => None,
    }
}

/// Latest time of a localized variable's region.
fn t_max(v: &Variable) -> i64 {
    v.region.as_ref().unwrap().t_max().unwrap()
}

/// Earliest time of a localized variable's region.
fn t_min(v: &Variable) -> i64 {
    v.region.as_ref().unwrap().t_min().unwrap()
}

/// Distinct, ascending time marks taken from localized variables.
fn time_marks(m: &Model, pick: impl Fn(&Variable) -> i64) -> Vec<i64> {
    let mut ts: Vec<i64> = m
        .variables
        .iter()
        .filter(|v| v.localized())
        .map(pick)
        .collect();
    ts.sort();
    ts.dedup();
    ts
}

/// Inputs whose value is available by time t: localized inputs with
/// t_max <= t, plus every non-localized input. Returns slot indices.
fn available_input_slots(m: &Model, t: i64) -> Vec<usize> {
    m.inputs()
        .iter()
        .enumerate()
        .filter(|(_, v)| match &v.region {
            Some(_) => t_max(v) <= t,
            None => true,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Per-scenario assignment of every input and every localized output, when
/// all localized outputs are point-valued. Err carries the failing verdict.
fn point_trajectories(ctx: &Ctx) -> Result<Vec<Vec<Option<usize>>>, Verdict> {
    let m = ctx.m;
    let input_slot_of: BTreeMap<usize, usize> = m
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Input)
        .enumerate()
        .map(|(slot, (pos, _))| (pos, slot))
        .collect();
    let mut out = Vec::with_capacity(ctx.scenarios.len());
    for (scenario, _, jt) in &ctx.scenarios {
        let mut traj: Vec<Option<usize>> = vec![None; m.variables.len()];
        for (pos, v) in m.variables.iter().enumerate() {
            match v.kind {
                VarKind::Input => traj[pos] = Some(scenario[input_slot_of[&pos]]),
                VarKind::Output => {
                    if !v.localized() {
                        continue;
                    }
                    match point_value(&jt.marginal(&[pos])) {
                        Some(val) => traj[pos] = Some(val),
                        None => {
                            let w = Witness::new()
                                .field("scenario", scenario_labels(m, scenario))
                                .field("output", v.name.clone())
                                .field(
                                    "finding",
                                    "localized output is not point-valued".to_string(),
                                );
                            return Err(Verdict::fails(w));
                        }
                    }
                }
            }
        }
        out.push(traj);
    }
    Ok(out)
}

/// The lattice contents up to each time must be a function of the inputs
/// available by that time.
pub fn check_temporal_determinism(ctx: &Ctx) -> Verdict {
    if let Some(v) = arrow_gate(ctx.m) {
        return v;
    }
    let det = check_deterministic(ctx);
    if det.is_fails() {
        return Verdict {
            status: Status::Fails,
            witness: det.witness,
            reason: Some("model is not deterministic".to_string()),
        };
    }
    let m = ctx.m;
    let trajs = match point_trajectories(ctx) {
        Ok(t) => t,
        Err(v) => return v,
    };
    for t in time_marks(m, t_max) {
        let avail = available_input_slots(m, t);
        let settled: Vec<usize> = ctx.positions(|v| v.localized() && t_max(v) <= t);
        let mut groups: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (i, (scenario, _, _)) in ctx.scenarios.iter().enumerate() {
            let key: Vec<usize> = avail.iter().map(|&s| scenario[s]).collect();
            match groups.get(&key) {
                None => {
                    groups.insert(key, i);
                }
                Some(&j) => {
                    for &pos in &settled {
                        if trajs[i][pos] != trajs[j][pos] {
                            let v = &m.variables[pos];
                            let w = Witness::new()
                                .field("time", t.to_string())
                                .field("variable", v.name.clone())
                                .field(
                                    "scenario-a",
                                    scenario_labels(m, &ctx.scenarios[j].0),
                                )
                                .field(
                                    "scenario-b",
                                    scenario_labels(m, &ctx.scenarios[i].0),
                                )
                                .field(
                                    "values",
                                    format!(
                                        "{}, {}",
                                        v.domain[trajs[j][pos].unwrap()],
                                        v.domain[trajs[i][pos].unwrap()]
                                    ),
                                );
                            return Verdict::fails(w);
                        }
                    }
                }
            }
        }
    }
    Verdict::holds()
}

/// Temporally deterministic, and the backward evolution never merges:
/// scenarios agreeing on every localized variable from some time onward must
/// agree on the whole lattice contents.
pub fn check_time_reversible(ctx: &Ctx) -> Verdict {
    if let Some(v) = arrow_gate(ctx.m) {
        return v;
    }
    let td = check_temporal_determinism(ctx);
    match td.status {
        Status::NotApplicable => return td,
        Status::Fails => {
            return Verdict {
                status: Status::Fails,
                witness: td.witness,
                reason: Some("model is not temporally deterministic".to_string()),
            }
        }
        Status::Holds => {}
    }
    let m = ctx.m;
    let trajs = match point_trajectories(ctx) {
        Ok(t) => t,
        Err(v) => return v,
    };
    let localized: Vec<usize> = ctx.positions(|v| v.localized());
    let marks = time_marks(m, t_min);
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            let full_agree = localized.iter().all(|&p| trajs[i][p] == trajs[j][p]);
            if full_agree {
                continue;
            }
            for &t in &marks {
                let tail: Vec<usize> = localized
                    .iter()
                    .copied()
                    .filter(|&p| t_min(&m.variables[p]) >= t)
                    .collect();
                if tail.is_empty() {
                    continue;
                }
                if tail.iter().all(|&p| trajs[i][p] == trajs[j][p]) {
                    let diff_pos = localized
                        .iter()
                        .copied()
                        .find(|&p| trajs[i][p] != trajs[j][p])
                        .unwrap();
                    let v = &m.variables[diff_pos];
                    let w = Witness::new()
                        .field("time", t.to_string())
                        .field(
                            "finding",
                            "trajectories merge when run backward".to_string(),
                        )
                        .field("scenario-a", scenario_labels(m, &ctx.scenarios[i].0))
                        .field("scenario-b", scenario_labels(m, &ctx.scenarios[j].0))
                        .field("earlier-difference", v.name.clone())
                        .field(
                            "values",
                            format!(
                                "{}, {}",
                                v.domain[trajs[i][diff_pos].unwrap()],
                                v.domain[trajs[j][diff_pos].unwrap()]
                            ),
                        );
                    return Verdict::fails(w);
                }
            }
        }
    }
    Verdict::holds()
}

/// A mechanism or constraint structurally refers to later times: a localized
/// mechanism target with a localized parent starting strictly later, or a
/// constraint coupling a localized output to a strictly later localized
/// variable non-factorizably.
pub fn check_future_input_dependence(m: &Model) -> Verdict {
    match &m.lattice {
        None => return Verdict::not_applicable(REASON_ALOCAL),
        Some(l) if l.arrow == Arrow::None => {
            return Verdict::not_applicable(REASON_NO_ARROW)
        }
        Some(_) => {}
    }
    for mech in &m.mechanisms {
        let target = m.var(&mech.target).unwrap();
        if !target.localized() {
            continue;
        }
        for pname in &mech.parents {
            let p = m.var(pname).unwrap();
            if p.localized() && t_min(p) > t_min(target) {
                let w = Witness::new()
                    .field("mechanism", mech.target.clone())
                    .field("later-parent", pname.clone())
                    .field("target-time", t_min(target).to_string())
                    .field("parent-time", t_min(p).to_string());
                return Verdict {
                    status: Status::Holds,
                    witness: Some(w),
                    reason: None,
                };
            }
        }
    }
    for (ci, c) in m.constraints.iter().enumerate() {
        let vars: Vec<&Variable> = c.scope.iter().map(|n| m.var(n).unwrap()).collect();
        let sizes: Vec<usize> = vars.iter().map(|v| v.domain.len()).collect();
        for (oi, o) in vars.iter().enumerate() {
            if o.kind != VarKind::Output || !o.localized() {
                continue;
            }
            for (vi, v) in vars.iter().enumerate() {
                if vi == oi || !v.localized() || t_min(v) <= t_min(o) {
                    continue;
                }
                if !constraint_separable(&c.weights, &sizes, oi, vi) {
                    let w = Witness::new()
                        .field("constraint", format!("#{ci} over ({})", c.scope.join(", ")))
                        .field("output", o.name.clone())
                        .field("later-variable", v.name.clone())
                        .field("output-time", t_min(o).to_string())
                        .field("variable-time", t_min(v).to_string());
                    return Verdict {
                        status: Status::Holds,
                        witness: Some(w),
                        reason: None,
                    };
                }
            }
        }
    }
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some("no mechanism or constraint refers to later times".to_string()),
    }
}

/// Can the weight table be factored with slots oi and vi on different sides,
/// for at least one assignment of the remaining slots to sides?
fn constraint_separable(
    weights: &BTreeMap<Vec<usize>, Q>,
    sizes: &[usize],
    oi: usize,
    vi: usize,
) -> bool {
    let free: Vec<usize> = (0..sizes.len()).filter(|&i| i != oi && i != vi).collect();
    for bits in tuples(&vec![2; free.len()]) {
        let mut group = vec![0usize; sizes.len()];
        group[oi] = 0;
        group[vi] = 1;
        for (j, &slot) in free.iter().enumerate() {
            group[slot] = bits[j];
        }
        if factors_by_groups(weights, sizes, &group) {
            return true;
        }
    }
    false
}

/// Observable statistics up to some time differ between scenarios that agree
/// on every input available by that time.
pub fn check_future_input_requirement(ctx: &Ctx) -> Verdict {
    if let Some(v) = arrow_gate(ctx.m) {
        return v;
    }
    let m = ctx.m;
    for t in time_marks(m, t_max) {
        let obs: Vec<usize> = ctx.positions(|v| {
            v.kind == VarKind::Output && v.observable && v.localized() && t_max(v) <= t
        });
        if obs.is_empty() {
            continue;
        }
        let avail = available_input_slots(m, t);
        let mut groups: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (i, (scenario, _, jt)) in ctx.scenarios.iter().enumerate() {
            let key: Vec<usize> = avail.iter().map(|&s| scenario[s]).collect();
            match groups.get(&key) {
                None => {
                    groups.insert(key, i);
                }
                Some(&j) => {
                    let da = ctx.scenarios[j].2.marginal(&obs);
                    let db = jt.marginal(&obs);
                    if let Some((event, pa, pb)) = first_difference(&da, &db) {
                        let w = Witness::new()
                            .field("time", t.to_string())
                            .field("scenario-a", scenario_labels(m, &ctx.scenarios[j].0))
                            .field("scenario-b", scenario_labels(m, scenario))
                            .field("event", super::event_labels(m, &obs, &event))
                            .rational("P-a", &pa)
                            .rational("P-b", &pb);
                        return Verdict {
                            status: Status::Holds,
                            witness: Some(w),
                            reason: None,
                        };
                    }
                }
            }
        }
    }
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some(
            "observable statistics up to each time depend only on inputs available by then"
                .to_string(),
        ),
    }
}

/// Causal-order classes over the locality quadrant crossed with the
/// future-input requirement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalOrderLabel {
    LocallyCausal,
    LocallyRetrocausal,
    LocallySuperluminalTemporal,
    LocallySuperluminalRetrotemporal,
    NonLocallyCausal,
    NonLocallyRetrocausal,
    NonLocallySuperluminalTemporal,
    NonLocallySuperluminalRetrotemporal,
    NotApplicable,
}

impl std::fmt::Display for CausalOrderLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CausalOrderLabel::LocallyCausal => "locally-causal",
            CausalOrderLabel::LocallyRetrocausal => "locally-retrocausal",
            CausalOrderLabel::LocallySuperluminalTemporal => "locally-superluminal-temporal",
            CausalOrderLabel::LocallySuperluminalRetrotemporal => {
                "locally-superluminal-retrotemporal"
            }
            CausalOrderLabel::NonLocallyCausal => "non-locally-causal",
            CausalOrderLabel::NonLocallyRetrocausal => "non-locally-retrocausal",
            CausalOrderLabel::NonLocallySuperluminalTemporal => {
                "non-locally-superluminal-temporal"
            }
            CausalOrderLabel::NonLocallySuperluminalRetrotemporal => {
                "non-locally-superluminal-retrotemporal"
            }
            CausalOrderLabel::NotApplicable => "not-applicable",
        };
        f.write_str(s)
    }
}

/// Cross the locality quadrant with the future-input requirement. The local
/// causality verdict is only consulted for consistency notes; the quadrant
/// itself is decided by the screening pair.
pub fn classify_causal_order(
    locality: LocalityLabel,
    fir: &Verdict,
    lc: &Verdict,
) -> (CausalOrderLabel, Vec<String>) {
    let mut notes = Vec::new();
    if locality == LocalityLabel::NotApplicable {
        return (CausalOrderLabel::NotApplicable, notes);
    }
    if fir.is_na() {
        notes.push(format!(
            "causal order undecided: future-input requirement is not applicable ({})",
            fir.reason.as_deref().unwrap_or("no reason")
        ));
        return (CausalOrderLabel::NotApplicable, notes);
    }
    let retro = fir.is_holds();
    let label = match locality {
        LocalityLabel::LocallySubluminal => {
            if retro {
                CausalOrderLabel::LocallyRetrocausal
            } else {
                match lc.status {
                    Status::Fails => notes.push(
                        "anomaly: strong continuity of action holds and no future input is \
                         required, yet local causality fails on a past-cone surface"
                            .to_string(),
                    ),
                    Status::NotApplicable => notes.push(format!(
                        "local causality not applicable ({})",
                        lc.reason.as_deref().unwrap_or("no reason")
                    )),
                    Status::Holds => {}
                }
                CausalOrderLabel::LocallyCausal
            }
        }
        LocalityLabel::LocallySuperluminal => {
            if retro {
                CausalOrderLabel::LocallySuperluminalRetrotemporal
            } else {
                CausalOrderLabel::LocallySuperluminalTemporal
            }
        }
        LocalityLabel::NonLocallySubluminal => {
            if retro {
                CausalOrderLabel::NonLocallyRetrocausal
            } else {
                CausalOrderLabel::NonLocallyCausal
            }
        }
        LocalityLabel::NonLocallySuperluminal => {
            if retro {
                CausalOrderLabel::NonLocallySuperluminalRetrotemporal
            } else {
                CausalOrderLabel::NonLocallySuperluminalTemporal
            }
        }
        LocalityLabel::NotApplicable => unreachable!(),
    };
    (label, notes)
}

/// Strong continuity of action and structural future reference, without any
/// behavioral future-input requirement.
pub fn check_pseudo_retrocausal(strong: &Verdict, fid: &Verdict, fir: &Verdict) -> Verdict {
    for (name, v) in [
        ("strong continuity of action", strong),
        ("future-input dependence", fid),
        ("future-input requirement", fir),
    ] {
        if v.is_na() {
            return Verdict::not_applicable(format!(
                "{name} is not applicable ({})",
                v.reason.as_deref().unwrap_or("no reason")
            ));
        }
    }
    if strong.is_holds() && fid.is_holds() && fir.is_fails() {
        return Verdict {
            status: Status::Holds,
            witness: fid.witness.clone(),
            reason: None,
        };
    }
    let reason = if !strong.is_holds() {
        "strong continuity of action fails"
    } else if !fid.is_holds() {
        "no structural reference to later times"
    } else {
        "future inputs are genuinely required, not merely referenced"
    };
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some(reason.to_string()),
    }
}

/// Local causality fails forward but holds when the arrow of time is
/// reversed.
pub fn check_counter_causal(ctx: &Ctx) -> Verdict {
    if let Some(v) = arrow_gate(ctx.m) {
        return v;
    }
    let forward = check_local_causality(ctx);
    let reversed = reverse_time(ctx.m);
    let rev_ctx = match Ctx::with_tolerance(&reversed, ctx.tol.clone()) {
        Ok(c) => c,
        Err(e) => return Verdict::not_applicable(format!("time reversal failed: {e}")),
    };
    let backward = check_local_causality(&rev_ctx);
    if forward.is_na() || backward.is_na() {
        let r = forward
            .reason
            .clone()
            .or(backward.reason.clone())
            .unwrap_or_else(|| "no reason".to_string());
        return Verdict::not_applicable(format!(
            "local causality not applicable in at least one time direction ({r})"
        ));
    }
    if backward.is_holds() && forward.is_fails() {
        let mut w = forward.witness.clone().unwrap_or_default();
        w = w.field(
            "reversed-model",
            "local causality holds with time reversed".to_string(),
        );
        return Verdict {
            status: Status::Holds,
            witness: Some(w),
            reason: None,
        };
    }
    let reason = if forward.is_holds() {
        "local causality already holds forward"
    } else {
        "local causality fails in both time directions"
    };
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some(reason.to_string()),
    }
}

/// Behavior marginal of one outcome variable under one setting.
fn outcome_marginal(b: &Behavior, setting: &[usize], slot: usize) -> BTreeMap<Vec<usize>, Q> {
    let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    if let Some(dist) = b.table.get(setting) {
        for (key, p) in dist {
            *out.entry(vec![key[slot]]).or_insert_with(Q::zero) += p.clone();
        }
    }
    out
}

/// First pair of settings differing only in `slot` whose marginal over
/// `out_slot` differs beyond the tolerance.
fn setting_variation(
    ctx: &Ctx,
    slot: usize,
    out_slot: usize,
) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>, Q, Q)> {
    let b = &ctx.behavior;
    let settings: Vec<&Vec<usize>> = b.table.keys().collect();
    for (i, s1) in settings.iter().enumerate() {
        for s2 in settings.iter().skip(i + 1) {
            let differs_only_there = s1
                .iter()
                .zip(s2.iter())
                .enumerate()
                .all(|(k, (a, b))| if k == slot { true } else { a == b })
                && s1[slot] != s2[slot];
            if !differs_only_there {
                continue;
            }
            let m1 = outcome_marginal(b, s1, out_slot);
            let m2 = outcome_marginal(b, s2, out_slot);
            let mut keys: Vec<&Vec<usize>> = m1.keys().chain(m2.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                let p1 = m1.get(k).cloned().unwrap_or_else(Q::zero);
                let p2 = m2.get(k).cloned().unwrap_or_else(Q::zero);
                if !ctx.tol.eq(&p1, &p2) {
                    return Some(((*s1).clone(), (*s2).clone(), k.clone(), p1, p2));
                }
            }
        }
    }
    None
}

fn setting_labels(b: &Behavior, setting: &[usize]) -> String {
    b.setting_vars
        .iter()
        .enumerate()
        .map(|(i, name)| format!("{}={}", name, b.setting_domains[i][setting[i]]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A controllable input steers an observable output wholly outside its full
/// light cone, at the behavior level.
pub fn check_superluminal_signalling(ctx: &Ctx) -> Verdict {
    let m = ctx.m;
    let Some(lat) = &m.lattice else {
        return Verdict::not_applicable(REASON_ALOCAL);
    };
    if m.controllable_inputs().is_empty() {
        return Verdict::not_applicable(REASON_NO_CONTROLLABLE);
    }
    let b = &ctx.behavior;
    for x in m.variables.iter() {
        if !(x.kind == VarKind::Input && x.controllable && x.localized()) {
            continue;
        }
        let Some(slot) = b.setting_vars.iter().position(|n| n == &x.name) else {
            continue;
        };
        let cone = lat
            .lightcone(x.region.as_ref().unwrap(), ConePart::Full)
            .unwrap();
        for o in m.variables.iter() {
            if !(o.kind == VarKind::Output && o.observable && o.localized()) {
                continue;
            }
            if !o.region.as_ref().unwrap().is_disjoint(&cone) {
                continue;
            }
            let Some(out_slot) = b.outcome_vars.iter().position(|n| n == &o.name) else {
                continue;
            };
            if let Some((s1, s2, event, p1, p2)) = setting_variation(ctx, slot, out_slot) {
                let w = Witness::new()
                    .field("input", x.name.clone())
                    .field("output", o.name.clone())
                    .field("setting-a", setting_labels(b, &s1))
                    .field("setting-b", setting_labels(b, &s2))
                    .field("outcome", o.domain[event[0]].clone())
                    .field("P-a", format_q(&p1))
                    .field("P-b", format_q(&p2));
                return Verdict {
                    status: Status::Holds,
                    witness: Some(w),
                    reason: None,
                };
            }
        }
    }
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some(
            "no controllable input steers any observable output outside its light cone"
                .to_string(),
        ),
    }
}

/// A controllable input steers an observable output that concludes strictly
/// before the input's earliest site, and future inputs are genuinely
/// required.
pub fn check_retrocausal_signalling(ctx: &Ctx, fir: &Verdict) -> Verdict {
    let m = ctx.m;
    if let Some(v) = arrow_gate(m) {
        return v;
    }
    if m.controllable_inputs().is_empty() {
        return Verdict::not_applicable(REASON_NO_CONTROLLABLE);
    }
    if fir.is_na() {
        return Verdict::not_applicable(format!(
            "future-input requirement is not applicable ({})",
            fir.reason.as_deref().unwrap_or("no reason")
        ));
    }
    if fir.is_fails() {
        return Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some("no future input is required".to_string()),
        };
    }
    let b = &ctx.behavior;
    for c in m.variables.iter() {
        if !(c.kind == VarKind::Input && c.controllable && c.localized()) {
            continue;
        }
        let Some(slot) = b.setting_vars.iter().position(|n| n == &c.name) else {
            continue;
        };
        for o in m.variables.iter() {
            if !(o.kind == VarKind::Output && o.observable && o.localized()) {
                continue;
            }
            if t_max(o) >= t_min(c) {
                continue;
            }
            let Some(out_slot) = b.outcome_vars.iter().position(|n| n == &o.name) else {
                continue;
            };
            if let Some((s1, s2, event, p1, p2)) = setting_variation(ctx, slot, out_slot) {
                let w = Witness::new()
                    .field("input", c.name.clone())
                    .field("output", o.name.clone())
                    .field("output-ends", t_max(o).to_string())
                    .field("input-starts", t_min(c).to_string())
                    .field("setting-a", setting_labels(b, &s1))
                    .field("setting-b", setting_labels(b, &s2))
                    .field("outcome", o.domain[event[0]].clone())
                    .field("P-a", format_q(&p1))
                    .field("P-b", format_q(&p2));
                return Verdict {
                    status: Status::Holds,
                    witness: Some(w),
                    reason: None,
                };
            }
        }
    }
    Verdict {
        status: Status::Fails,
        witness: None,
        reason: Some(
            "no controllable input steers any observable output at earlier times".to_string(),
        ),
    }
}
