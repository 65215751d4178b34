//! Structural checkers: determinism, predictability, the alocal/atemporal/
//! acausal flags, and detection of constraints that tie separated times
//! together all at once.

use super::{scenario_labels, Ctx, REASON_ALOCAL};
use crate::lattice::Arrow;
use crate::model::{Model, VarKind};
use crate::rational::Q;
use crate::table::{factors_by_groups, tuples};
use crate::verdict::{Probe, Status, Verdict, Witness};
use num::{One, Zero};

/// Every observable output must be point-valued in every positive-prior
/// scenario.
pub fn check_deterministic(ctx: &Ctx) -> Verdict {
    let m = ctx.m;
    for (scenario, _, jt) in &ctx.scenarios {
        for (pos, v) in m.variables.iter().enumerate() {
            if v.kind != VarKind::Output || !v.observable {
                continue;
            }
            for (key, p) in jt.marginal(&[pos]) {
                if !p.is_zero() && !p.is_one() {
                    let w = Witness::new()
                        .field("scenario", scenario_labels(m, scenario))
                        .field("output", v.name.clone())
                        .field("value", v.domain[key[0]].clone())
                        .rational("probability", &p)
                        .with_probe(Probe::ScenarioOutput {
                            scenario: scenario.clone(),
                            output: v.name.clone(),
                            value: key[0],
                            probability: p,
                        });
                    return Verdict::fails(w);
                }
            }
        }
    }
    Verdict::holds()
}

/// Deterministic, and every hidden input is a function of the observable
/// variables on the support of the global joint.
pub fn check_predictable(ctx: &Ctx) -> Verdict {
    let det = check_deterministic(ctx);
    if !det.is_holds() {
        return Verdict {
            status: Status::Fails,
            witness: det.witness,
            reason: Some("model is not deterministic".to_string()),
        };
    }
    let m = ctx.m;
    let observable: Vec<usize> = ctx.positions(|v| v.observable);
    for (h_pos, h) in m.variables.iter().enumerate() {
        if !(h.kind == VarKind::Input && h.hidden) {
            continue;
        }
        // Group support rows by observable values; h must be constant in
        // each group.
        let mut seen: std::collections::BTreeMap<Vec<usize>, usize> =
            std::collections::BTreeMap::new();
        for (row, p) in &ctx.joint.entries {
            if p.is_zero() {
                continue;
            }
            let obs_key: Vec<usize> = observable.iter().map(|&i| row[i]).collect();
            let hv = row[h_pos];
            match seen.get(&obs_key) {
                None => {
                    seen.insert(obs_key, hv);
                }
                Some(&prev) if prev != hv => {
                    let w = Witness::new()
                        .field("hidden-input", h.name.clone())
                        .field(
                            "observables",
                            super::event_labels(m, &observable, &obs_key),
                        )
                        .field(
                            "values",
                            format!("{}, {}", h.domain[prev], h.domain[hv]),
                        );
                    return Verdict::fails(w);
                }
                _ => {}
            }
        }
    }
    Verdict::holds()
}

/// Holds exactly when the model declares no lattice.
pub fn check_alocal(m: &Model) -> Verdict {
    if m.lattice.is_none() {
        Verdict::holds()
    } else {
        Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some("model declares a lattice".to_string()),
        }
    }
}

/// Holds when there is no lattice or the lattice has a single time slice.
pub fn check_atemporal(m: &Model) -> Verdict {
    match &m.lattice {
        None => Verdict::holds(),
        Some(l) if l.t_min == l.t_max => Verdict::holds(),
        Some(l) => Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some(format!(
                "lattice spans times {} through {}",
                l.t_min, l.t_max
            )),
        },
    }
}

/// Holds when atemporal holds or the lattice carries no arrow of time.
pub fn check_acausal(m: &Model) -> Verdict {
    if check_atemporal(m).is_holds() {
        return Verdict::holds();
    }
    match &m.lattice {
        Some(l) if l.arrow == Arrow::None => Verdict::holds(),
        _ => Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some("lattice carries a forward arrow of time".to_string()),
        },
    }
}

/// Indices of constraints whose weight table couples at least two disjoint
/// time groups of its localized scope non-factorizably.
///
/// Scope variables are grouped by overlapping [t_min, t_max] ranges;
/// non-localized scope variables may be assigned to either group, and the
/// constraint only counts when no assignment lets the table factor.
pub fn detect_all_at_once(m: &Model) -> Option<Vec<usize>> {
    m.lattice.as_ref()?;
    let mut found = Vec::new();
    for (ci, c) in m.constraints.iter().enumerate() {
        let scope_vars: Vec<&crate::model::Variable> = c
            .scope
            .iter()
            .map(|n| m.var(n).expect("validated scope"))
            .collect();
        let localized: Vec<usize> = (0..scope_vars.len())
            .filter(|&i| scope_vars[i].localized())
            .collect();
        if localized.len() < 2 {
            continue;
        }
        let groups = time_groups(&localized, &scope_vars);
        if groups.iter().max().copied().unwrap_or(0) == 0 {
            continue; // single time group
        }
        let sizes: Vec<usize> = scope_vars.iter().map(|v| v.domain.len()).collect();
        let free: Vec<usize> = (0..scope_vars.len())
            .filter(|i| !localized.contains(i))
            .collect();
        // Split only into two blocks: group 0 versus the rest. Any free
        // variable may side with either block.
        let mut base_group = vec![0usize; scope_vars.len()];
        for (k, &slot) in localized.iter().enumerate() {
            base_group[slot] = if groups[k] == 0 { 0 } else { 1 };
        }
        let mut factors_somehow = false;
        for bits in tuples(&vec![2; free.len()]) {
            let mut g = base_group.clone();
            for (j, &slot) in free.iter().enumerate() {
                g[slot] = bits[j];
            }
            if factors_by_groups(&c.weights, &sizes, &g) {
                factors_somehow = true;
                break;
            }
        }
        if !factors_somehow {
            found.push(ci);
        }
    }
    Some(found)
}

/// Union-find style grouping of localized scope slots by overlapping time
/// ranges. Returns a group id per entry of `localized`.
fn time_groups(localized: &[usize], scope_vars: &[&crate::model::Variable]) -> Vec<usize> {
    let ranges: Vec<(i64, i64)> = localized
        .iter()
        .map(|&i| {
            let r = scope_vars[i].region.as_ref().unwrap();
            (r.t_min().unwrap(), r.t_max().unwrap())
        })
        .collect();
    let n = ranges.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a_lo, a_hi) = ranges[i];
            let (b_lo, b_hi) = ranges[j];
            if a_lo <= b_hi && b_lo <= a_hi {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    // Renumber roots in first-appearance order.
    let mut ids = Vec::with_capacity(n);
    let mut order: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let id = match order.iter().position(|&x| x == r) {
            Some(p) => p,
            None => {
                order.push(r);
                order.len() - 1
            }
        };
        ids.push(id);
    }
    ids
}

/// Holds when at least one constraint couples separated time groups
/// non-factorizably.
pub fn check_all_at_once(m: &Model) -> Verdict {
    match detect_all_at_once(m) {
        None => Verdict::not_applicable(REASON_ALOCAL),
        Some(found) if found.is_empty() => Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some("no constraint couples separated time groups".to_string()),
        },
        Some(found) => {
            let m_desc = found
                .iter()
                .map(|&i| {
                    format!(
                        "constraint #{} over ({})",
                        i,
                        m.constraints[i].scope.join(", ")
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            Verdict {
                status: Status::Holds,
                witness: Some(Witness::new().field("constraints", m_desc)),
                reason: None,
            }
        }
    }
}

/// Shared helper: per-variable marginal of a distribution is a point mass.
pub(crate) fn point_value(
    marginal: &std::collections::BTreeMap<Vec<usize>, Q>,
) -> Option<usize> {
    let mut point = None;
    for (key, p) in marginal {
        if p.is_zero() {
            continue;
        }
        if !p.is_one() {
            return None;
        }
        if point.is_some() {
            return None;
        }
        point = Some(key[0]);
    }
    point
}
