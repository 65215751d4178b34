//! The universal checker result: Holds, Fails with a re-checkable witness,
//! or NotApplicable with a reason.

use crate::model::Model;
use crate::rational::{format_q, Q};
use crate::table::{global_joint, JointTable};
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Holds => write!(f, "holds"),
            Status::Fails => write!(f, "fails"),
            Status::NotApplicable => write!(f, "not-applicable"),
        }
    }
}

/// Machine-checkable recipe to re-derive a witness's probabilities from the
/// model. Variable values are indices into the named variables' domains.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    /// Conditioning on `given` plus `extra` changes the distribution of
    /// `targets` compared to conditioning on `given` alone, at `event`.
    Conditional {
        targets: Vec<String>,
        event: Vec<usize>,
        given: Vec<(String, usize)>,
        extra: Vec<(String, usize)>,
        with_extra: Q,
        without_extra: Q,
    },
    /// An observable output has a probability strictly between 0 and 1 in
    /// one scenario's joint.
    ScenarioOutput {
        scenario: Vec<usize>,
        output: String,
        value: usize,
        probability: Q,
    },
    /// A hidden-input conditional under the prior differs from its
    /// marginal.
    PriorConditional {
        lambda: Vec<(String, usize)>,
        settings: Vec<(String, usize)>,
        conditional: Q,
        marginal: Q,
    },
}

/// Re-evaluate a probe against a model; `true` when every claimed
/// probability reproduces exactly.
pub fn verify_probe(m: &Model, probe: &Probe) -> bool {
    match probe {
        Probe::Conditional {
            targets,
            event,
            given,
            extra,
            with_extra,
            without_extra,
        } => {
            let Ok(jt) = global_joint(m) else {
                return false;
            };
            let target_pos: Option<Vec<usize>> =
                targets.iter().map(|n| jt.var_pos(n)).collect();
            let Some(target_pos) = target_pos else {
                return false;
            };
            let fix = |pairs: &[(String, usize)]| -> Option<Vec<(usize, usize)>> {
                pairs
                    .iter()
                    .map(|(n, v)| jt.var_pos(n).map(|p| (p, *v)))
                    .collect()
            };
            let (Some(given_fix), Some(extra_fix)) = (fix(given), fix(extra)) else {
                return false;
            };
            let both: Vec<(usize, usize)> =
                given_fix.iter().chain(extra_fix.iter()).copied().collect();
            let p_with = conditional_prob(&jt, &target_pos, event, &both);
            let p_without = conditional_prob(&jt, &target_pos, event, &given_fix);
            p_with.as_ref() == Some(with_extra) && p_without.as_ref() == Some(without_extra)
        }
        Probe::ScenarioOutput {
            scenario,
            output,
            value,
            probability,
        } => {
            let Some(jt) = crate::table::scenario_joint(m, scenario) else {
                return false;
            };
            let Some(pos) = jt.var_pos(output) else {
                return false;
            };
            let marg = jt.marginal(&[pos]);
            marg.get(&vec![*value]) == Some(probability)
        }
        Probe::PriorConditional {
            lambda,
            settings,
            conditional,
            marginal,
        } => {
            let inputs = m.inputs();
            let slot = |name: &str| inputs.iter().position(|v| v.name == name);
            let mut lam_fix = Vec::new();
            for (n, v) in lambda {
                let Some(p) = slot(n) else { return false };
                lam_fix.push((p, *v));
            }
            let mut set_fix = Vec::new();
            for (n, v) in settings {
                let Some(p) = slot(n) else { return false };
                set_fix.push((p, *v));
            }
            let mass = |fixed: &[(usize, usize)]| -> Q {
                let mut total = Q::zero();
                for (row, p) in &m.prior.entries {
                    if fixed.iter().all(|&(pos, val)| row[pos] == val) {
                        total += p;
                    }
                }
                total
            };
            let total = mass(&[]);
            if total == Q::zero() {
                return false;
            }
            let set_mass = mass(&set_fix);
            if set_mass == Q::zero() {
                return false;
            }
            let both: Vec<(usize, usize)> =
                lam_fix.iter().chain(set_fix.iter()).copied().collect();
            let cond = mass(&both) / set_mass;
            let marg = mass(&lam_fix) / total;
            cond == *conditional && marg == *marginal
        }
    }
}

fn conditional_prob(
    jt: &JointTable,
    targets: &[usize],
    event: &[usize],
    fixed: &[(usize, usize)],
) -> Option<Q> {
    let dist = jt.conditional(targets, fixed)?;
    Some(
        dist.get(&event.to_vec())
            .cloned()
            .unwrap_or_else(|| Q::zero()),
    )
}

/// A failure witness: human-readable fields (rationals already formatted as
/// `p/q`) plus an optional machine-checkable probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub fields: BTreeMap<String, String>,
    pub probe: Option<Probe>,
}

impl Witness {
    pub fn new() -> Self {
        Witness {
            fields: BTreeMap::new(),
            probe: None,
        }
    }

    pub fn field(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn rational(mut self, key: &str, value: &Q) -> Self {
        self.fields.insert(key.to_string(), format_q(value));
        self
    }

    pub fn with_probe(mut self, probe: Probe) -> Self {
        self.probe = Some(probe);
        self
    }
}

impl Default for Witness {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Witness>,
    pub reason: Option<String>,
}

impl Verdict {
    pub fn holds() -> Self {
        Verdict {
            status: Status::Holds,
            witness: None,
            reason: None,
        }
    }

    pub fn fails(witness: Witness) -> Self {
        Verdict {
            status: Status::Fails,
            witness: Some(witness),
            reason: None,
        }
    }

    pub fn fails_because(reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::Fails,
            witness: None,
            reason: Some(reason.into()),
        }
    }

    pub fn not_applicable(reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::NotApplicable,
            witness: None,
            reason: Some(reason.into()),
        }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn is_na(&self) -> bool {
        self.status == Status::NotApplicable
    }

    /// JSON form used by reports: {"status", "witness"?, "reason"?}.
    pub fn json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert(
            "status".to_string(),
            serde_json::Value::String(self.status.to_string()),
        );
        if let Some(w) = &self.witness {
            let mut wobj = serde_json::Map::new();
            for (k, v) in &w.fields {
                wobj.insert(k.clone(), serde_json::Value::String(v.clone()));
            }
            obj.insert("witness".to_string(), serde_json::Value::Object(wobj));
        }
        if let Some(r) = &self.reason {
            obj.insert(
                "reason".to_string(),
                serde_json::Value::String(r.clone()),
            );
        }
        serde_json::Value::Object(obj)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.status)?;
        if let Some(r) = &self.reason {
            write!(f, " ({r})")?;
        }
        Ok(())
    }
}
