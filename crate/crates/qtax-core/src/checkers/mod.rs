//! Property checkers. Every checker reads a prepared [`Ctx`] so the joint
//! tables and behavior are computed once per model.

pub mod irreducible;
pub mod screening;
pub mod si;
pub mod structure;
pub mod temporal;

use crate::model::{Model, Scenario, VarKind};
use crate::rational::{q, Q, Tolerance};
use crate::table::{behavior, scenario_joint, Behavior, EngineError, JointTable};
use num::Zero;
use std::collections::BTreeMap;

/// Default absolute tolerance for behavior comparisons on decimal-mode
/// models: 1e-9.
pub fn default_epsilon() -> Q {
    q(1, 1_000_000_000)
}

/// Shared evaluation state: the model plus its per-scenario joints, global
/// joint, behavior, and the comparison tolerance for behavior-level checks.
///
/// Screening, determinism, and prior-level checks always compare exactly;
/// the tolerance only affects behavior-table comparisons.
pub struct Ctx<'m> {
    pub m: &'m Model,
    /// Positive-prior scenarios with their masses and joint tables.
    pub scenarios: Vec<(Scenario, Q, JointTable)>,
    pub joint: JointTable,
    pub behavior: Behavior,
    pub tol: Tolerance,
}

impl<'m> Ctx<'m> {
    pub fn new(m: &'m Model) -> Result<Self, EngineError> {
        let tol = if m.decimal {
            Tolerance::absolute(default_epsilon())
        } else {
            Tolerance::exact()
        };
        Self::with_tolerance(m, tol)
    }

    pub fn with_tolerance(m: &'m Model, tol: Tolerance) -> Result<Self, EngineError> {
        let mut scenarios = Vec::new();
        let mut entries: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (scenario, mass) in m.prior_support() {
            let jt = scenario_joint(m, &scenario).ok_or_else(|| {
                EngineError::ImpossibleScenario(scenario_labels(m, &scenario))
            })?;
            for (row, p) in &jt.entries {
                *entries.entry(row.clone()).or_insert_with(Q::zero) +=
                    mass.clone() * p.clone();
            }
            scenarios.push((scenario, mass, jt));
        }
        let joint = JointTable {
            vars: m.variables.iter().map(|v| v.name.clone()).collect(),
            sizes: m.variables.iter().map(|v| v.domain.len()).collect(),
            entries,
        };
        let behavior = behavior(m)?;
        Ok(Ctx {
            m,
            scenarios,
            joint,
            behavior,
            tol,
        })
    }

    /// Positions (in model variable order) of variables matching a filter.
    pub fn positions(&self, pred: impl Fn(&crate::model::Variable) -> bool) -> Vec<usize> {
        self.m
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| pred(v))
            .map(|(i, _)| i)
            .collect()
    }

    /// Slots (in input declaration order) of inputs matching a filter.
    pub fn input_slots(&self, pred: impl Fn(&crate::model::Variable) -> bool) -> Vec<usize> {
        self.m
            .inputs()
            .iter()
            .enumerate()
            .filter(|(_, v)| pred(v))
            .map(|(i, _)| i)
            .collect()
    }
}

/// "name=label, name=label" rendering of a scenario, for witnesses.
pub fn scenario_labels(m: &Model, scenario: &Scenario) -> String {
    let inputs = m.inputs();
    scenario
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{}={}", inputs[i].name, inputs[i].domain[v]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// "name=label" rendering of an assignment over model positions.
pub fn assignment_labels(m: &Model, pairs: &[(usize, usize)]) -> String {
    if pairs.is_empty() {
        return "(none)".to_string();
    }
    pairs
        .iter()
        .map(|&(pos, val)| {
            let v = &m.variables[pos];
            format!("{}={}", v.name, v.domain[val])
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Event rendering for a tuple over named positions.
pub fn event_labels(m: &Model, positions: &[usize], key: &[usize]) -> String {
    positions
        .iter()
        .zip(key)
        .map(|(&pos, &val)| {
            let v = &m.variables[pos];
            format!("{}={}", v.name, v.domain[val])
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) const REASON_ALOCAL: &str = "ALOCAL_MODEL";
pub(crate) const REASON_NO_ARROW: &str = "NO_ARROW_OF_TIME";
pub(crate) const REASON_NO_SURFACES: &str = "NO_SHIELDING_SURFACES";
pub(crate) const REASON_CONES_OVERLAP: &str = "LIGHTCONES_ALWAYS_OVERLAP";
pub(crate) const REASON_NO_HIDDEN: &str = "NO_HIDDEN_INPUTS";
pub(crate) const REASON_NO_CONTROLLABLE: &str = "NO_CONTROLLABLE_INPUTS";

/// Is the variable a localized output?
pub(crate) fn is_localized_output(v: &crate::model::Variable) -> bool {
    v.kind == VarKind::Output && v.localized()
}

/// Is the variable a localized input?
pub(crate) fn is_localized_input(v: &crate::model::Variable) -> bool {
    v.kind == VarKind::Input && v.localized()
}
