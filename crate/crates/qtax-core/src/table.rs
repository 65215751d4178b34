//! Probability engine: per-scenario joints from the factor product,
//! the prior-weighted global joint, behaviors, and exact tensor
//! factorization tests.

use crate::model::{Model, Scenario, VarKind};
use crate::rational::{q1, Q};
use num::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

/// Engine-level semantic failures (distinct from structural validation).
#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    /// A positive-prior input assignment admits no joint value with
    /// positive weight, so its conditional distribution is undefined.
    #[error("scenario ({0}) has zero total weight under the model's assumptions")]
    ImpossibleScenario(String),
}

/// All value-index tuples over the given domain sizes, in odometer order
/// (last position fastest). The empty size list yields one empty tuple.
pub fn tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        let mut next = Vec::with_capacity(out.len() * n);
        for prefix in &out {
            for v in 0..n {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// A normalized distribution over full variable assignments. Only positive
/// entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    /// Variable names, in the model's declaration order.
    pub vars: Vec<String>,
    pub sizes: Vec<usize>,
    pub entries: BTreeMap<Vec<usize>, Q>,
}

impl JointTable {
    pub fn var_pos(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Marginal over the listed positions, in the order given.
    pub fn marginal(&self, positions: &[usize]) -> BTreeMap<Vec<usize>, Q> {
        let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (row, p) in &self.entries {
            let key: Vec<usize> = positions.iter().map(|&i| row[i]).collect();
            *out.entry(key).or_insert_with(Q::zero) += p;
        }
        out
    }

    /// Total mass of rows matching a partial assignment.
    pub fn mass_matching(&self, fixed: &[(usize, usize)]) -> Q {
        let mut total = Q::zero();
        for (row, p) in &self.entries {
            if fixed.iter().all(|&(pos, val)| row[pos] == val) {
                total += p;
            }
        }
        total
    }

    /// Distribution of the target positions conditioned on a partial
    /// assignment. `None` when the condition has zero mass.
    pub fn conditional(
        &self,
        targets: &[usize],
        fixed: &[(usize, usize)],
    ) -> Option<BTreeMap<Vec<usize>, Q>> {
        let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        let mut total = Q::zero();
        for (row, p) in &self.entries {
            if fixed.iter().all(|&(pos, val)| row[pos] == val) {
                let key: Vec<usize> = targets.iter().map(|&i| row[i]).collect();
                *out.entry(key).or_insert_with(Q::zero) += p;
                total += p;
            }
        }
        if total.is_zero() {
            return None;
        }
        for v in out.values_mut() {
            *v /= total.clone();
        }
        Some(out)
    }
}

struct MechEval<'a> {
    target_pos: usize,
    parent_pos: Vec<usize>,
    kernel: &'a BTreeMap<Vec<usize>, Vec<(usize, Q)>>,
}

struct ConstraintEval<'a> {
    scope_pos: Vec<usize>,
    weights: &'a BTreeMap<Vec<usize>, Q>,
}

/// The normalized joint over all variables for one input assignment:
/// product of mechanism kernels and constraint weights over output values,
/// renormalized. `None` when every output assignment has zero weight.
pub fn scenario_joint(m: &Model, scenario: &Scenario) -> Option<JointTable> {
    let n = m.variables.len();
    let input_pos: Vec<usize> = m
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Input)
        .map(|(i, _)| i)
        .collect();
    let output_pos: Vec<usize> = m
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Output)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(scenario.len(), input_pos.len(), "scenario arity mismatch");

    let mut base = vec![0usize; n];
    for (&pos, &val) in input_pos.iter().zip(scenario.iter()) {
        base[pos] = val;
    }

    let mechs: Vec<MechEval<'_>> = m
        .mechanisms
        .iter()
        .map(|mech| MechEval {
            target_pos: m.var_index(&mech.target).expect("validated"),
            parent_pos: mech
                .parents
                .iter()
                .map(|p| m.var_index(p).expect("validated"))
                .collect(),
            kernel: &mech.kernel,
        })
        .collect();
    let cons: Vec<ConstraintEval<'_>> = m
        .constraints
        .iter()
        .map(|c| ConstraintEval {
            scope_pos: c
                .scope
                .iter()
                .map(|s| m.var_index(s).expect("validated"))
                .collect(),
            weights: &c.weights,
        })
        .collect();

    let out_sizes: Vec<usize> = output_pos.iter().map(|&i| m.variables[i].domain.len()).collect();
    let mut entries = BTreeMap::new();
    let mut total = Q::zero();
    'rows: for combo in tuples(&out_sizes) {
        for (&pos, &val) in output_pos.iter().zip(combo.iter()) {
            base[pos] = val;
        }
        let mut w = q1();
        for me in &mechs {
            let row: Vec<usize> = me.parent_pos.iter().map(|&p| base[p]).collect();
            let p = me
                .kernel
                .get(&row)
                .and_then(|dist| {
                    dist.iter()
                        .find(|(v, _)| *v == base[me.target_pos])
                        .map(|(_, p)| p.clone())
                })
                .unwrap_or_else(Q::zero);
            if p.is_zero() {
                continue 'rows;
            }
            w *= p;
        }
        for ce in &cons {
            let key: Vec<usize> = ce.scope_pos.iter().map(|&p| base[p]).collect();
            let wt = ce.weights.get(&key).cloned().unwrap_or_else(Q::zero);
            if wt.is_zero() {
                continue 'rows;
            }
            w *= wt;
        }
        total += w.clone();
        entries.insert(base.clone(), w);
    }
    if total.is_zero() {
        return None;
    }
    for v in entries.values_mut() {
        *v /= total.clone();
    }
    Some(JointTable {
        vars: m.variables.iter().map(|v| v.name.clone()).collect(),
        sizes: m.variables.iter().map(|v| v.domain.len()).collect(),
        entries,
    })
}

fn scenario_labels(m: &Model, scenario: &Scenario) -> String {
    m.inputs()
        .iter()
        .zip(scenario.iter())
        .map(|(v, &i)| format!("{}={}", v.name, v.domain[i]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The prior-weighted mixture of all scenario joints.
pub fn global_joint(m: &Model) -> Result<JointTable, EngineError> {
    let mut entries: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for (scenario, mass) in m.prior_support() {
        let jt = scenario_joint(m, &scenario)
            .ok_or_else(|| EngineError::ImpossibleScenario(scenario_labels(m, &scenario)))?;
        for (row, p) in jt.entries {
            *entries.entry(row).or_insert_with(Q::zero) += mass.clone() * p;
        }
    }
    Ok(JointTable {
        vars: m.variables.iter().map(|v| v.name.clone()).collect(),
        sizes: m.variables.iter().map(|v| v.domain.len()).collect(),
        entries,
    })
}

/// The operational content of a model: for every input setting the outside
/// world can hold fixed (all non-hidden inputs), the distribution over
/// observable outputs, with hidden inputs averaged under the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    /// Non-hidden input names, declaration order.
    pub setting_vars: Vec<String>,
    pub setting_domains: Vec<Vec<String>>,
    /// Observable output names, declaration order.
    pub outcome_vars: Vec<String>,
    pub outcome_domains: Vec<Vec<String>>,
    /// Setting tuple to outcome distribution; only settings with positive
    /// prior mass appear.
    pub table: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, Q>>,
}

impl Behavior {
    /// Outcome distributions equal for every setting, under the tolerance.
    pub fn same_as(&self, other: &Behavior, tol: &crate::rational::Tolerance) -> bool {
        if self.table.len() != other.table.len() {
            return false;
        }
        for (setting, dist) in &self.table {
            let Some(odist) = other.table.get(setting) else {
                return false;
            };
            if !dists_equal(dist, odist, tol) {
                return false;
            }
        }
        true
    }
}

/// Compare two sparse distributions under a tolerance, treating missing
/// keys as zero.
pub fn dists_equal(
    a: &BTreeMap<Vec<usize>, Q>,
    b: &BTreeMap<Vec<usize>, Q>,
    tol: &crate::rational::Tolerance,
) -> bool {
    let zero = Q::zero();
    for key in a.keys().chain(b.keys()) {
        let va = a.get(key).unwrap_or(&zero);
        let vb = b.get(key).unwrap_or(&zero);
        if !tol.eq(va, vb) {
            return false;
        }
    }
    true
}

/// Compute a model's behavior. Fails when a positive-prior scenario is
/// impossible.
pub fn behavior(m: &Model) -> Result<Behavior, EngineError> {
    let inputs = m.inputs();
    let setting_slots: Vec<usize> = inputs
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.hidden)
        .map(|(i, _)| i)
        .collect();
    let outcome_pos: Vec<usize> = m
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Output && v.observable)
        .map(|(i, _)| i)
        .collect();

    let mut mass: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    let mut accum: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, Q>> = BTreeMap::new();
    for (scenario, p) in m.prior_support() {
        let setting: Vec<usize> = setting_slots.iter().map(|&i| scenario[i]).collect();
        let jt = scenario_joint(m, &scenario)
            .ok_or_else(|| EngineError::ImpossibleScenario(scenario_labels(m, &scenario)))?;
        let marg = jt.marginal(&outcome_pos);
        let slot = accum.entry(setting.clone()).or_default();
        for (key, v) in marg {
            *slot.entry(key).or_insert_with(Q::zero) += p.clone() * v;
        }
        *mass.entry(setting).or_insert_with(Q::zero) += p;
    }
    for (setting, dist) in accum.iter_mut() {
        let total = mass[setting].clone();
        for v in dist.values_mut() {
            *v /= total.clone();
        }
    }
    Ok(Behavior {
        setting_vars: setting_slots
            .iter()
            .map(|&i| inputs[i].name.clone())
            .collect(),
        setting_domains: setting_slots
            .iter()
            .map(|&i| inputs[i].domain.clone())
            .collect(),
        outcome_vars: outcome_pos
            .iter()
            .map(|&i| m.variables[i].name.clone())
            .collect(),
        outcome_domains: outcome_pos
            .iter()
            .map(|&i| m.variables[i].domain.clone())
            .collect(),
        table: accum,
    })
}

/// Exact test that a nonnegative tensor factors as a product of one factor
/// per group. `group_of[i]` assigns position `i` to a group id; missing
/// tuples are zero. Uses the vanishing of all 2x2 minors at each split,
/// which is exact and safe in the presence of zeros.
pub fn factors_by_groups(
    table: &BTreeMap<Vec<usize>, Q>,
    sizes: &[usize],
    group_of: &[usize],
) -> bool {
    assert_eq!(sizes.len(), group_of.len());
    let dense: Vec<(Vec<usize>, Q)> = tuples(sizes)
        .into_iter()
        .map(|row| {
            let v = table.get(&row).cloned().unwrap_or_else(Q::zero);
            (row, v)
        })
        .collect();
    factors_rec(&dense, group_of)
}

fn factors_rec(dense: &[(Vec<usize>, Q)], group_of: &[usize]) -> bool {
    let mut groups: Vec<usize> = group_of.to_vec();
    groups.sort_unstable();
    groups.dedup();
    if groups.len() <= 1 {
        return true;
    }
    let head = groups[0];
    let head_pos: Vec<usize> = (0..group_of.len()).filter(|&i| group_of[i] == head).collect();
    let rest_pos: Vec<usize> = (0..group_of.len()).filter(|&i| group_of[i] != head).collect();

    let mut matrix: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, Q>> = BTreeMap::new();
    for (row, v) in dense {
        let u: Vec<usize> = head_pos.iter().map(|&i| row[i]).collect();
        let w: Vec<usize> = rest_pos.iter().map(|&i| row[i]).collect();
        matrix.entry(u).or_default().insert(w, v.clone());
    }
    let rows: Vec<&BTreeMap<Vec<usize>, Q>> = matrix.values().collect();
    let cols: Vec<Vec<usize>> = rows
        .first()
        .map(|r| r.keys().cloned().collect())
        .unwrap_or_default();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            for a in 0..cols.len() {
                for b in (a + 1)..cols.len() {
                    let m_ia = &rows[i][&cols[a]];
                    let m_ib = &rows[i][&cols[b]];
                    let m_ja = &rows[j][&cols[a]];
                    let m_jb = &rows[j][&cols[b]];
                    if m_ia.clone() * m_jb.clone() != m_ib.clone() * m_ja.clone() {
                        return false;
                    }
                }
            }
        }
    }
    // Rank one confirmed; recurse into the remaining groups using any
    // nonzero row as the residual tensor.
    let pivot = match rows.iter().find(|r| r.values().any(|v| !v.is_zero())) {
        Some(r) => r,
        None => return true,
    };
    let sub: Vec<(Vec<usize>, Q)> = pivot.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let sub_groups: Vec<usize> = rest_pos.iter().map(|&i| group_of[i]).collect();
    factors_rec(&sub, &sub_groups)
}
