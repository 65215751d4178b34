//! Model structure: variables over lattice regions, mechanism kernels,
//! constraint weights and the prior over inputs, plus structural validation.

use crate::lattice::{Lattice, Region};
use crate::rational::{format_q, Q};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Whether a variable is chosen from outside (input) or produced by the
/// model's assumptions (output).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Input,
    Output,
}

/// One model variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    /// Value labels; positions are the value indices used everywhere else.
    pub domain: Vec<String>,
    pub kind: VarKind,
    /// `None` means the variable has no spacetime location.
    pub region: Option<Region>,
    pub hidden: bool,
    pub controllable: bool,
    pub observable: bool,
}

impl Variable {
    pub fn localized(&self) -> bool {
        self.region.as_ref().map(|r| !r.is_empty()).unwrap_or(false)
    }

    /// Index of a value label in this variable's domain.
    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// Conditional kernel for one output: for every combination of parent
/// values, a distribution over the target's values.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub target: String,
    pub parents: Vec<String>,
    /// Parent value-index tuple (in `parents` order) to rows of
    /// (target value index, probability).
    pub kernel: BTreeMap<Vec<usize>, Vec<(usize, Q)>>,
}

/// Nonnegative weight over joint values of a variable scope. Tuples not
/// listed carry weight zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub scope: Vec<String>,
    pub weights: BTreeMap<Vec<usize>, Q>,
}

/// Distribution over joint values of all input variables, in declaration
/// order. Tuples not listed carry mass zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prior {
    pub entries: BTreeMap<Vec<usize>, Q>,
}

/// A complete model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub lattice: Option<Lattice>,
    pub variables: Vec<Variable>,
    pub mechanisms: Vec<Mechanism>,
    pub constraints: Vec<Constraint>,
    pub prior: Prior,
    /// `true` when the source used decimal literals; enables tolerance in
    /// behavior comparisons downstream.
    pub decimal: bool,
}

/// An assignment of value indices to all input variables, in declaration
/// order.
pub type Scenario = Vec<usize>;

/// How bad a diagnostic is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// A structural problem found during parsing or validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub code: String,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "file": self.file,
            "line": self.line,
            "col": self.col,
            "code": self.code,
            "message": self.message,
            "severity": self.severity.to_string(),
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {} {}",
            self.file, self.line, self.col, self.code, self.message
        )
    }
}

/// Validation finding, positionless; the parser attaches source locations.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub code: &'static str,
    pub message: String,
    /// Name of the declaration the issue is about, when one exists.
    pub subject: Option<String>,
    pub severity: Severity,
}

impl Issue {
    fn error(code: &'static str, subject: Option<&str>, message: String) -> Self {
        Issue {
            code,
            message,
            subject: subject.map(str::to_string),
            severity: Severity::Error,
        }
    }

    fn warning(code: &'static str, subject: Option<&str>, message: String) -> Self {
        Issue {
            code,
            message,
            subject: subject.map(str::to_string),
            severity: Severity::Warning,
        }
    }
}

impl Model {
    pub fn var(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Input variables in declaration order.
    pub fn inputs(&self) -> Vec<&Variable> {
        self.variables.iter().filter(|v| v.kind == VarKind::Input).collect()
    }

    pub fn outputs(&self) -> Vec<&Variable> {
        self.variables.iter().filter(|v| v.kind == VarKind::Output).collect()
    }

    pub fn hidden_inputs(&self) -> Vec<&Variable> {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Input && v.hidden)
            .collect()
    }

    pub fn controllable_inputs(&self) -> Vec<&Variable> {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Input && v.controllable)
            .collect()
    }

    /// `true` when every variable has a nonempty region on a lattice.
    pub fn fully_localized(&self) -> bool {
        self.lattice.is_some() && self.variables.iter().all(|v| v.localized())
    }

    /// Mechanism whose target is `name`, if any.
    pub fn mechanism_for(&self, name: &str) -> Option<&Mechanism> {
        self.mechanisms.iter().find(|m| m.target == name)
    }

    /// Positive-mass prior entries in tuple order. A model with no inputs
    /// has the single empty scenario with mass one.
    pub fn prior_support(&self) -> Vec<(Scenario, Q)> {
        if self.inputs().is_empty() {
            return vec![(Vec::new(), Q::one())];
        }
        self.prior
            .entries
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| (k.clone(), p.clone()))
            .collect()
    }

    /// Structural validation. Errors make the model unusable; warnings are
    /// advisory.
    pub fn validate(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.clone()) {
                out.push(Issue::error(
                    "E_DUPLICATE_VARIABLE",
                    Some(&v.name),
                    format!("variable `{}` is declared more than once", v.name),
                ));
            }
            if v.domain.is_empty() {
                out.push(Issue::error(
                    "E_EMPTY_DOMAIN",
                    Some(&v.name),
                    format!("variable `{}` has an empty domain", v.name),
                ));
            }
            let mut vals = BTreeSet::new();
            for d in &v.domain {
                if !vals.insert(d) {
                    out.push(Issue::error(
                        "E_DUPLICATE_VALUE",
                        Some(&v.name),
                        format!("variable `{}` lists value `{}` twice", v.name, d),
                    ));
                }
            }
            if v.kind == VarKind::Output && v.hidden {
                out.push(Issue::error(
                    "E_HIDDEN_OUTPUT",
                    Some(&v.name),
                    format!("output `{}` cannot be marked hidden", v.name),
                ));
            }
            if v.kind == VarKind::Output && v.controllable {
                out.push(Issue::error(
                    "E_CONTROLLABLE_OUTPUT",
                    Some(&v.name),
                    format!("output `{}` cannot be marked controllable", v.name),
                ));
            }
            if v.hidden && v.observable {
                out.push(Issue::error(
                    "E_CONTRADICTORY_FLAGS",
                    Some(&v.name),
                    format!("variable `{}` cannot be both hidden and observable", v.name),
                ));
            }
            if v.hidden && v.controllable {
                out.push(Issue::error(
                    "E_CONTRADICTORY_FLAGS",
                    Some(&v.name),
                    format!("variable `{}` cannot be both hidden and controllable", v.name),
                ));
            }
            match (&self.lattice, &v.region) {
                (None, Some(_)) => out.push(Issue::error(
                    "E_REGION_WITHOUT_LATTICE",
                    Some(&v.name),
                    format!("variable `{}` has a region but the model has no lattice", v.name),
                )),
                (Some(lat), Some(region)) => {
                    if region.is_empty() {
                        out.push(Issue::error(
                            "E_EMPTY_REGION",
                            Some(&v.name),
                            format!("variable `{}` has an empty region", v.name),
                        ));
                    }
                    for s in region.iter() {
                        if !lat.contains(s) {
                            out.push(Issue::error(
                                "E_SITE_OUT_OF_BOUNDS",
                                Some(&v.name),
                                format!("variable `{}` uses site {} outside the lattice", v.name, s),
                            ));
                        }
                    }
                }
                _ => {}
            }
        }

        let mut mech_targets = BTreeSet::new();
        for m in &self.mechanisms {
            match self.var(&m.target) {
                None => {
                    out.push(Issue::error(
                        "E_UNKNOWN_VARIABLE",
                        Some(&m.target),
                        format!("mechanism targets unknown variable `{}`", m.target),
                    ));
                    continue;
                }
                Some(v) if v.kind != VarKind::Output => {
                    out.push(Issue::error(
                        "E_MECHANISM_TARGET_NOT_OUTPUT",
                        Some(&m.target),
                        format!("mechanism target `{}` is not an output", m.target),
                    ));
                    continue;
                }
                Some(_) => {}
            }
            if !mech_targets.insert(m.target.clone()) {
                out.push(Issue::error(
                    "E_DUPLICATE_MECHANISM",
                    Some(&m.target),
                    format!("output `{}` has more than one mechanism", m.target),
                ));
                continue;
            }
            let mut parent_domains = Vec::new();
            let mut parents_ok = true;
            for p in &m.parents {
                match self.var(p) {
                    Some(v) => parent_domains.push(v.domain.len()),
                    None => {
                        out.push(Issue::error(
                            "E_UNKNOWN_VARIABLE",
                            Some(&m.target),
                            format!("mechanism for `{}` references unknown parent `{}`", m.target, p),
                        ));
                        parents_ok = false;
                    }
                }
            }
            if !parents_ok {
                continue;
            }
            let target_size = self.var(&m.target).unwrap().domain.len();
            let expected_rows: usize = parent_domains.iter().product();
            if m.kernel.len() != expected_rows {
                out.push(Issue::error(
                    "E_INCOMPLETE_KERNEL",
                    Some(&m.target),
                    format!(
                        "mechanism for `{}` lists {} parent rows, expected {}",
                        m.target,
                        m.kernel.len(),
                        expected_rows
                    ),
                ));
            }
            for (row, dist) in &m.kernel {
                if row.len() != m.parents.len()
                    || row.iter().zip(&parent_domains).any(|(i, n)| i >= n)
                {
                    out.push(Issue::error(
                        "E_BAD_TUPLE",
                        Some(&m.target),
                        format!("mechanism for `{}` has an invalid parent tuple", m.target),
                    ));
                    continue;
                }
                let mut total = Q::zero();
                let mut seen_vals = BTreeSet::new();
                for (val, p) in dist {
                    if *val >= target_size {
                        out.push(Issue::error(
                            "E_BAD_TUPLE",
                            Some(&m.target),
                            format!("mechanism for `{}` assigns an out-of-domain value", m.target),
                        ));
                    }
                    if !seen_vals.insert(*val) {
                        out.push(Issue::error(
                            "E_DUPLICATE_VALUE",
                            Some(&m.target),
                            format!("mechanism for `{}` lists a target value twice in one row", m.target),
                        ));
                    }
                    if p.is_negative() {
                        out.push(Issue::error(
                            "E_NEGATIVE_PROBABILITY",
                            Some(&m.target),
                            format!("mechanism for `{}` has a negative probability", m.target),
                        ));
                    }
                    if p.is_zero() {
                        out.push(Issue::warning(
                            "W_ZERO_PROBABILITY_ROW",
                            Some(&m.target),
                            format!("mechanism for `{}` lists an explicit zero probability", m.target),
                        ));
                    }
                    total += p;
                }
                if !total.is_one() {
                    out.push(Issue::error(
                        "E_KERNEL_ROW_NOT_NORMALIZED",
                        Some(&m.target),
                        format!(
                            "mechanism row for `{}` sums to {}, expected 1",
                            m.target,
                            format_q(&total)
                        ),
                    ));
                }
            }
        }
        for v in self.outputs() {
            if !mech_targets.contains(&v.name) && self.var(&v.name).is_some() {
                out.push(Issue::error(
                    "E_MISSING_MECHANISM",
                    Some(&v.name),
                    format!("output `{}` has no mechanism", v.name),
                ));
            }
        }

        for (ci, c) in self.constraints.iter().enumerate() {
            let subject = format!("constraint#{ci}");
            let mut sizes = Vec::new();
            let mut ok = true;
            for s in &c.scope {
                match self.var(s) {
                    Some(v) => sizes.push(v.domain.len()),
                    None => {
                        out.push(Issue::error(
                            "E_UNKNOWN_VARIABLE",
                            Some(&subject),
                            format!("constraint references unknown variable `{s}`"),
                        ));
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            for (row, w) in &c.weights {
                if row.len() != c.scope.len() || row.iter().zip(&sizes).any(|(i, n)| i >= n) {
                    out.push(Issue::error(
                        "E_BAD_TUPLE",
                        Some(&subject),
                        "constraint has an invalid value tuple".to_string(),
                    ));
                }
                if w.is_negative() {
                    out.push(Issue::error(
                        "E_NEGATIVE_WEIGHT",
                        Some(&subject),
                        "constraint weights must be nonnegative".to_string(),
                    ));
                }
                if w.is_zero() {
                    out.push(Issue::warning(
                        "W_ZERO_WEIGHT_ROW",
                        Some(&subject),
                        "explicit zero weight row is redundant; unlisted tuples already have weight 0"
                            .to_string(),
                    ));
                }
            }
        }

        let input_sizes: Vec<usize> = self.inputs().iter().map(|v| v.domain.len()).collect();
        let mut total = Q::zero();
        for (row, p) in &self.prior.entries {
            if row.len() != input_sizes.len() || row.iter().zip(&input_sizes).any(|(i, n)| i >= n) {
                out.push(Issue::error(
                    "E_BAD_TUPLE",
                    None,
                    "prior has a value tuple that does not match the input variables".to_string(),
                ));
                continue;
            }
            if p.is_negative() {
                out.push(Issue::error(
                    "E_NEGATIVE_PROBABILITY",
                    None,
                    "prior masses must be nonnegative".to_string(),
                ));
            }
            total += p;
        }
        if !input_sizes.is_empty() && !total.is_one() {
            out.push(Issue::error(
                "E_PRIOR_NOT_NORMALIZED",
                None,
                format!("prior masses sum to {}, expected 1", format_q(&total)),
            ));
        }
        out
    }
}

/// Interpret a value label as one of the two CHSH outcomes.
pub fn parse_pm1(label: &str) -> Option<i64> {
    match label {
        "1" | "+1" => Some(1),
        "-1" => Some(-1),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Arrow, Lattice};
    use crate::rational::{q, q1};

    fn tiny() -> Model {
        Model {
            name: "tiny".into(),
            lattice: Some(Lattice {
                x_min: 0,
                x_max: 1,
                t_min: 0,
                t_max: 1,
                c: 1,
                arrow: Arrow::Forward,
            }),
            variables: vec![
                Variable {
                    name: "u".into(),
                    domain: vec!["0".into(), "1".into()],
                    kind: VarKind::Input,
                    region: Some(Region::single(0, 0)),
                    hidden: false,
                    controllable: true,
                    observable: true,
                },
                Variable {
                    name: "o".into(),
                    domain: vec!["0".into(), "1".into()],
                    kind: VarKind::Output,
                    region: Some(Region::single(0, 1)),
                    hidden: false,
                    controllable: false,
                    observable: true,
                },
            ],
            mechanisms: vec![Mechanism {
                target: "o".into(),
                parents: vec!["u".into()],
                kernel: BTreeMap::from([
                    (vec![0], vec![(0, q1())]),
                    (vec![1], vec![(1, q1())]),
                ]),
            }],
            constraints: vec![],
            prior: Prior {
                entries: BTreeMap::from([(vec![0], q(1, 2)), (vec![1], q(1, 2))]),
            },
            decimal: false,
        }
    }

    #[test]
    fn valid_model_passes() {
        assert!(tiny().validate().is_empty());
    }

    #[test]
    fn missing_kernel_row_is_an_error() {
        let mut m = tiny();
        m.mechanisms[0].kernel.remove(&vec![1]);
        let issues = m.validate();
        assert!(issues.iter().any(|i| i.code == "E_INCOMPLETE_KERNEL"));
    }

    #[test]
    fn unnormalized_row_is_an_error() {
        let mut m = tiny();
        m.mechanisms[0]
            .kernel
            .insert(vec![0], vec![(0, q(1, 3))]);
        let issues = m.validate();
        assert!(issues.iter().any(|i| i.code == "E_KERNEL_ROW_NOT_NORMALIZED"));
    }

    #[test]
    fn prior_must_sum_to_one() {
        let mut m = tiny();
        m.prior.entries.insert(vec![1], q(1, 3));
        let issues = m.validate();
        assert!(issues.iter().any(|i| i.code == "E_PRIOR_NOT_NORMALIZED"));
    }

    #[test]
    fn hidden_output_rejected() {
        let mut m = tiny();
        m.variables[1].hidden = true;
        let issues = m.validate();
        assert!(issues.iter().any(|i| i.code == "E_HIDDEN_OUTPUT"));
    }

    #[test]
    fn out_of_bounds_site_rejected() {
        let mut m = tiny();
        m.variables[0].region = Some(Region::single(5, 5));
        let issues = m.validate();
        assert!(issues.iter().any(|i| i.code == "E_SITE_OUT_OF_BOUNDS"));
    }

    #[test]
    fn zero_weight_constraint_warns() {
        let mut m = tiny();
        m.constraints.push(Constraint {
            scope: vec!["u".into()],
            weights: BTreeMap::from([(vec![0], q1()), (vec![1], q(0, 1))]),
        });
        let issues = m.validate();
        assert!(issues
            .iter()
            .any(|i| i.code == "W_ZERO_WEIGHT_ROW" && i.severity == Severity::Warning));
        assert!(issues.iter().all(|i| i.severity != Severity::Error));
    }

    #[test]
    fn pm1_labels() {
        assert_eq!(parse_pm1("1"), Some(1));
        assert_eq!(parse_pm1("+1"), Some(1));
        assert_eq!(parse_pm1("-1"), Some(-1));
        assert_eq!(parse_pm1("up"), None);
    }
}
