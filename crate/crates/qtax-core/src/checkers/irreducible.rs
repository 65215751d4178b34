//! Reducibility: inert parts that can be deleted without changing behavior,
//! and bipartitions of the assumption set whose independent recombination
//! already reproduces the behavior.

use super::Ctx;
use crate::model::{Model, VarKind};
use crate::rational::{Q, Tolerance};
use crate::table::{behavior, dists_equal, Behavior};
use crate::verdict::{Status, Verdict, Witness};
use num::Zero;
use std::collections::BTreeMap;

/// Exhaustive partition search is limited to this many assumptions plus
/// inputs.
pub const PARTITION_SEARCH_LIMIT: usize = 16;

/// One verified deletion opportunity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Removable {
    Input(String),
    Mechanism(String),
    Constraint(usize),
}

impl std::fmt::Display for Removable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Removable::Input(n) => write!(f, "input {n}"),
            Removable::Mechanism(t) => write!(f, "mechanism for {t}"),
            Removable::Constraint(i) => write!(f, "constraint #{i}"),
        }
    }
}

fn input_referenced(m: &Model, name: &str) -> bool {
    m.mechanisms
        .iter()
        .any(|mech| mech.parents.iter().any(|p| p == name))
        || m.constraints.iter().any(|c| c.scope.iter().any(|s| s == name))
}

fn output_referenced(m: &Model, name: &str) -> bool {
    m.mechanisms
        .iter()
        .any(|mech| mech.target != name && mech.parents.iter().any(|p| p == name))
        || m.constraints.iter().any(|c| c.scope.iter().any(|s| s == name))
}

/// Slot of a variable among the inputs, in declaration order.
fn input_slot(m: &Model, name: &str) -> usize {
    m.inputs().iter().position(|v| v.name == name).unwrap()
}

fn delete_input(m: &Model, name: &str) -> Model {
    let slot = input_slot(m, name);
    let mut out = m.clone();
    out.variables.retain(|v| v.name != name);
    let mut entries: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for (key, p) in &m.prior.entries {
        let mut k = key.clone();
        k.remove(slot);
        *entries.entry(k).or_insert_with(Q::zero) += p.clone();
    }
    out.prior.entries = entries;
    out
}

fn delete_mechanism(m: &Model, target: &str) -> Model {
    let mut out = m.clone();
    out.mechanisms.retain(|mech| mech.target != target);
    out.variables.retain(|v| v.name != target);
    out
}

fn delete_constraint(m: &Model, idx: usize) -> Model {
    let mut out = m.clone();
    out.constraints.remove(idx);
    out
}

/// Does the original behavior survive removing a non-hidden input? The
/// outcome distribution must already be constant across that input's values,
/// and the marginalized model must reproduce the common distribution.
/// Try one deletion and verify behavior preservation exactly. Deleting a
/// non-hidden input always shrinks the setting signature, so only hidden
/// inputs ever pass; the comparison stays bit-identical on purpose.
fn verify_removal(m: &Model, orig: &Behavior, candidate: &Removable) -> Option<Model> {
    let exact = Tolerance::exact();
    match candidate {
        Removable::Input(name) => {
            let reduced = delete_input(m, name);
            let rb = behavior(&reduced).ok()?;
            orig.same_as(&rb, &exact).then_some(reduced)
        }
        Removable::Mechanism(target) => {
            let reduced = delete_mechanism(m, target);
            let rb = behavior(&reduced).ok()?;
            orig.same_as(&rb, &exact).then_some(reduced)
        }
        Removable::Constraint(idx) => {
            let reduced = delete_constraint(m, *idx);
            let rb = behavior(&reduced).ok()?;
            orig.same_as(&rb, &exact).then_some(reduced)
        }
    }
}

/// All verified deletions available on the model as it stands.
pub fn removable_parts(m: &Model) -> Vec<Removable> {
    let Ok(orig) = behavior(m) else {
        return Vec::new();
    };
    let mut found = Vec::new();
    for v in m.inputs() {
        if v.hidden && !input_referenced(m, &v.name) {
            let c = Removable::Input(v.name.clone());
            if verify_removal(m, &orig, &c).is_some() {
                found.push(c);
            }
        }
    }
    for mech in &m.mechanisms {
        let target = m.var(&mech.target).unwrap();
        if !target.observable && !output_referenced(m, &mech.target) {
            let c = Removable::Mechanism(mech.target.clone());
            if verify_removal(m, &orig, &c).is_some() {
                found.push(c);
            }
        }
    }
    for idx in 0..m.constraints.len() {
        let c = Removable::Constraint(idx);
        if verify_removal(m, &orig, &c).is_some() {
            found.push(c);
        }
    }
    found
}

/// Greedy deletion to a fixpoint. Behavior is preserved exactly at every
/// step; the change log records each removal in order.
pub fn reduce(m: &Model) -> (Model, Vec<String>) {
    let mut current = m.clone();
    let mut log = Vec::new();
    loop {
        let Ok(orig) = behavior(&current) else {
            return (current, log);
        };
        let mut applied = false;
        for candidate in removable_parts(&current) {
            if let Some(next) = verify_removal(&current, &orig, &candidate) {
                log.push(format!("removed {candidate}"));
                current = next;
                applied = true;
                break;
            }
        }
        if !applied {
            return (current, log);
        }
    }
}

struct Block {
    mech_idx: Vec<usize>,
    cons_idx: Vec<usize>,
}

impl Block {
    fn describe(&self, m: &Model) -> String {
        let mut parts = Vec::new();
        if !self.mech_idx.is_empty() {
            parts.push(format!(
                "mechanisms for {}",
                self.mech_idx
                    .iter()
                    .map(|&i| m.mechanisms[i].target.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        if !self.cons_idx.is_empty() {
            parts.push(format!(
                "constraints {}",
                self.cons_idx
                    .iter()
                    .map(|&i| format!("#{i}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        parts.join("; ")
    }

    /// The block keeps every input and only its own mechanism targets. None
    /// when some reference cannot be resolved inside the block.
    fn model(&self, m: &Model) -> Option<Model> {
        let kept_outputs: Vec<&str> = self
            .mech_idx
            .iter()
            .map(|&i| m.mechanisms[i].target.as_str())
            .collect();
        let resolvable = |name: &str| {
            let v = m.var(name).unwrap();
            v.kind == VarKind::Input || kept_outputs.contains(&name)
        };
        for &i in &self.mech_idx {
            if !m.mechanisms[i].parents.iter().all(|p| resolvable(p)) {
                return None;
            }
        }
        for &i in &self.cons_idx {
            if !m.constraints[i].scope.iter().all(|s| resolvable(s)) {
                return None;
            }
        }
        let mut out = m.clone();
        out.variables
            .retain(|v| v.kind == VarKind::Input || kept_outputs.contains(&v.name.as_str()));
        out.mechanisms = self.mech_idx.iter().map(|&i| m.mechanisms[i].clone()).collect();
        out.constraints = self.cons_idx.iter().map(|&i| m.constraints[i].clone()).collect();
        Some(out)
    }
}

/// Search for a bipartition of the assumptions whose blocks, combined as
/// independent modules over the shared inputs, already reproduce the
/// behavior. Returns block descriptions on success.
pub fn partition_reducible(m: &Model, orig: &Behavior) -> Option<(String, String)> {
    let n_mech = m.mechanisms.len();
    let n_items = n_mech + m.constraints.len();
    if n_items < 2 {
        return None;
    }
    for mask in 0u32..(1u32 << (n_items - 1)) {
        // Item 0 always sits in block A; B must be nonempty.
        if mask == (1u32 << (n_items - 1)) - 1 {
            continue;
        }
        let mut a = Block { mech_idx: vec![], cons_idx: vec![] };
        let mut b = Block { mech_idx: vec![], cons_idx: vec![] };
        for item in 0..n_items {
            let in_a = item == 0 || (mask >> (item - 1)) & 1 == 1;
            let block = if in_a { &mut a } else { &mut b };
            if item < n_mech {
                block.mech_idx.push(item);
            } else {
                block.cons_idx.push(item - n_mech);
            }
        }
        let (Some(ma), Some(mb)) = (a.model(m), b.model(m)) else {
            continue;
        };
        let (Ok(ba), Ok(bb)) = (behavior(&ma), behavior(&mb)) else {
            continue;
        };
        if combined_matches(orig, &ba, &bb) {
            return Some((a.describe(m), b.describe(m)));
        }
    }
    None
}

/// Does the per-setting product of two block behaviors equal the original?
fn combined_matches(orig: &Behavior, a: &Behavior, b: &Behavior) -> bool {
    let slot_of = |name: &String| -> (bool, usize) {
        if let Some(i) = a.outcome_vars.iter().position(|n| n == name) {
            (true, i)
        } else {
            (false, b.outcome_vars.iter().position(|n| n == name).unwrap())
        }
    };
    let mapping: Vec<(bool, usize)> = orig.outcome_vars.iter().map(slot_of).collect();
    let exact = Tolerance::exact();
    for (setting, dist) in &orig.table {
        let (Some(da), Some(db)) = (a.table.get(setting), b.table.get(setting)) else {
            return false;
        };
        let mut product: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (ka, pa) in da {
            for (kb, pb) in db {
                let key: Vec<usize> = mapping
                    .iter()
                    .map(|&(in_a, slot)| if in_a { ka[slot] } else { kb[slot] })
                    .collect();
                *product.entry(key).or_insert_with(Q::zero) += pa.clone() * pb.clone();
            }
        }
        if !dists_equal(dist, &product, &exact) {
            return false;
        }
    }
    true
}

/// No deletion changes nothing, and no assumption bipartition recombines to
/// the same behavior. The partition search is skipped, with notice, past
/// [`PARTITION_SEARCH_LIMIT`].
pub fn check_irreducible(ctx: &Ctx) -> Verdict {
    let m = ctx.m;
    let removable = removable_parts(m);
    if !removable.is_empty() {
        let w = Witness::new().field("kind", "deletion").field(
            "removable",
            removable
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        );
        return Verdict {
            status: Status::Fails,
            witness: Some(w),
            reason: Some("inert parts can be deleted without changing behavior".to_string()),
        };
    }
    let size = m.mechanisms.len() + m.constraints.len() + m.inputs().len();
    if size > PARTITION_SEARCH_LIMIT {
        return Verdict {
            status: Status::Holds,
            witness: None,
            reason: Some(format!(
                "partition search skipped: {size} assumptions and inputs exceed the \
                 exhaustive bound of {PARTITION_SEARCH_LIMIT}"
            )),
        };
    }
    if let Some((da, db)) = partition_reducible(m, &ctx.behavior) {
        let w = Witness::new()
            .field("kind", "partition")
            .field("block-a", da)
            .field("block-b", db);
        return Verdict {
            status: Status::Fails,
            witness: Some(w),
            reason: Some(
                "two independent assumption blocks already reproduce the behavior".to_string(),
            ),
        };
    }
    Verdict::holds()
}
