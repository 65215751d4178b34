//! Classification engine for finite models on discrete 1+1 dimensional
//! lattices: exact joint distributions from mechanism kernels and
//! constraint weights, screening and signalling checkers, locality and
//! causal-order labels, equivalence tests and a small text format.

pub mod checkers;
pub mod dsl;
pub mod equivalence;
pub mod lattice;
pub mod model;
pub mod rational;
pub mod report;
pub mod sampler;
pub mod table;
pub mod transform;
pub mod verdict;

pub use checkers::Ctx;
pub use dsl::{canonical_equal, canonical_text, parse_experiments, parse_model};
pub use equivalence::{chsh, e_equivalent, p_equivalent, Experiment};
pub use report::{check_one, classify, ClassifyError, ClassifyOptions, TaxonomyReport, PROPERTY_NAMES};
pub use lattice::{Arrow, ConePart, Lattice, Region, Shell, Site};
pub use model::{
    Constraint, Diagnostic, Issue, Mechanism, Model, Prior, Scenario, Severity, VarKind, Variable,
};
pub use rational::{format_q, parse_decimal, parse_rational, q, Q, Tolerance};
pub use table::{behavior, global_joint, scenario_joint, Behavior, EngineError, JointTable};
pub use transform::{relabel_domain, rename_variables, reverse_time, translate};
pub use verdict::{verify_probe, Probe, Status, Verdict, Witness};
