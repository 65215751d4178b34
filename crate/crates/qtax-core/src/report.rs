//! Full-model classification: the four-step procedure (setup audit, behavior
//! comparison, representation comparison, property survey) and the report it
//! produces.

use std::time::Instant;

use rayon::prelude::*;

use crate::checkers::irreducible::{check_irreducible, reduce};
use crate::checkers::screening::{
    check_continuity_of_action, check_local_causality, check_strong_continuity_of_action,
    classify_locality,
};
use crate::checkers::si::{check_statistical_independence, check_superdeterministic};
use crate::checkers::structure::{
    check_acausal, check_all_at_once, check_alocal, check_atemporal, check_deterministic,
    check_predictable,
};
use crate::checkers::temporal::{
    check_counter_causal, check_future_input_dependence, check_future_input_requirement,
    check_pseudo_retrocausal, check_retrocausal_signalling, check_superluminal_signalling,
    check_temporal_determinism, check_time_reversible, classify_causal_order,
};
use crate::checkers::Ctx;
use crate::dsl::canonical_equal;
use crate::equivalence::{chsh, e_equivalent, p_equivalent, Experiment, REASON_SIGNATURE_MISMATCH};
use crate::model::Model;
use crate::rational::{format_q, Tolerance};
use crate::table::EngineError;
use crate::verdict::Verdict;

/// Property names in survey order. The emitted map is keyed by these.
pub const PROPERTY_NAMES: [&str; 20] = [
    "deterministic",
    "predictable",
    "alocal",
    "atemporal",
    "acausal",
    "irreducible",
    "all-at-once-input",
    "continuity-of-action",
    "strong-continuity-of-action",
    "local-causality",
    "temporal-determinism",
    "time-reversibility",
    "future-input-dependence",
    "future-input-requirement",
    "pseudo-retrocausality",
    "counter-causality",
    "superluminal-signalling",
    "retrocausal-signalling",
    "statistical-independence",
    "superdeterminism",
];

#[derive(Debug, Clone)]
pub struct TaxonomyReport {
    pub model: String,
    pub reference: Option<String>,
    /// (name, verdict) in PROPERTY_NAMES order.
    pub properties: Vec<(String, Verdict)>,
    pub locality: String,
    pub causal_order: String,
    pub classification: String,
    pub notes: Vec<String>,
    /// Wall-clock per property, milliseconds. Never part of the text or JSON
    /// payload; the CLI prints it on stderr.
    pub timings: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ClassifyOptions {
    /// Delete inert parts and continue instead of aborting on a reducible
    /// setup. A model reducible by partition still aborts.
    pub auto_reduce: bool,
    /// Experiments for an e-equivalence side note in step 2.
    pub experiments: Option<Vec<Experiment>>,
    /// Overrides the tolerance implied by the model's number mode.
    pub tolerance: Option<Tolerance>,
}

#[derive(Debug)]
pub enum ClassifyError {
    /// Step 1 rejected the setup. The verdict carries the removable parts or
    /// the behavior-preserving partition.
    Reducible(Verdict),
    Engine(EngineError),
}

impl std::fmt::Display for ClassifyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifyError::Reducible(v) => {
                write!(f, "setup is reducible")?;
                if let Some(r) = &v.reason {
                    write!(f, ": {r}")?;
                }
                if let Some(w) = &v.witness {
                    for (k, val) in &w.fields {
                        write!(f, "\n  {k}: {val}")?;
                    }
                }
                Ok(())
            }
            ClassifyError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ClassifyError {}

impl From<EngineError> for ClassifyError {
    fn from(e: EngineError) -> Self {
        ClassifyError::Engine(e)
    }
}

fn build_ctx<'m>(m: &'m Model, opts: &ClassifyOptions) -> Result<Ctx<'m>, EngineError> {
    match &opts.tolerance {
        Some(t) => Ctx::with_tolerance(m, t.clone()),
        None => Ctx::new(m),
    }
}

/// One hidden input whose value pins down every other input on the prior
/// support, if any: the common-cause layout.
fn common_cause_input(m: &Model) -> Option<String> {
    let support = m.prior_support();
    let inputs = m.inputs();
    'candidates: for (slot, v) in inputs.iter().enumerate() {
        if !v.hidden || inputs.len() < 2 {
            continue;
        }
        let mut seen: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (key, _) in &support {
            let mut others = key.clone();
            let val = others.remove(slot);
            match seen.get(&val) {
                None => {
                    seen.insert(val, others);
                }
                Some(prev) if *prev == others => {}
                Some(_) => continue 'candidates,
            }
        }
        if !seen.is_empty() {
            return Some(v.name.clone());
        }
    }
    None
}

/// CHSH side note when the behavior has the canonical two-setting,
/// two-outcome plus-minus-one shape; uses the first two values of each
/// setting domain.
fn chsh_note(ctx: &Ctx) -> Option<String> {
    let b = &ctx.behavior;
    if b.setting_vars.len() != 2 || b.outcome_vars.len() != 2 {
        return None;
    }
    let dx = &ctx.m.var(&b.setting_vars[0])?.domain;
    let dy = &ctx.m.var(&b.setting_vars[1])?.domain;
    if dx.len() < 2 || dy.len() < 2 {
        return None;
    }
    for o in &b.outcome_vars {
        let d = &ctx.m.var(o)?.domain;
        if d.len() != 2 || !d.iter().all(|l| l == "1" || l == "-1") {
            return None;
        }
    }
    let s = chsh(
        b,
        &b.setting_vars[0],
        &b.setting_vars[1],
        (&dx[0], &dx[1]),
        (&dy[0], &dy[1]),
    )
    .ok()?;
    Some(format!(
        "CHSH over settings {} in {{{}, {}}} and {} in {{{}, {}}}: S = {}",
        b.setting_vars[0],
        dx[0],
        dx[1],
        b.setting_vars[1],
        dy[0],
        dy[1],
        format_q(&s)
    ))
}

/// Steps 1-4 for one model against an optional reference.
pub fn classify(
    m: &Model,
    reference: Option<&Model>,
    opts: &ClassifyOptions,
) -> Result<TaxonomyReport, ClassifyError> {
    let mut notes: Vec<String> = Vec::new();

    // Step 1: the setup must not contain removable parts.
    let reduced_store;
    let subject: &Model = {
        let ctx = build_ctx(m, opts)?;
        let irr = check_irreducible(&ctx);
        if irr.is_fails() {
            let partition = irr
                .witness
                .as_ref()
                .map(|w| w.fields.get("kind").map(String::as_str) == Some("partition"))
                .unwrap_or(false);
            if partition || !opts.auto_reduce {
                return Err(ClassifyError::Reducible(irr));
            }
            let (reduced, log) = reduce(m);
            for entry in &log {
                notes.push(format!("auto-reduce: {entry}"));
            }
            let rctx = build_ctx(&reduced, opts)?;
            let again = check_irreducible(&rctx);
            if again.is_fails() {
                return Err(ClassifyError::Reducible(again));
            }
            reduced_store = reduced;
            &reduced_store
        } else {
            m
        }
    };

    let ctx = build_ctx(subject, opts)?;

    // Step 2: physical equivalence against the reference; step 3 (canonical
    // comparison) only runs when step 2 matched.
    let classification = match reference {
        None => "not-applicable".to_string(),
        Some(r) => {
            let rctx = build_ctx(r, opts)?;
            if let Some(exps) = &opts.experiments {
                let ev = e_equivalent(&ctx.behavior, &rctx.behavior, exps, &ctx.tol);
                notes.push(format!(
                    "restricted to {} listed experiment(s) the behaviors are {}",
                    exps.len(),
                    if ev.is_holds() {
                        "indistinguishable"
                    } else {
                        "already distinguishable"
                    }
                ));
            }
            let pv = p_equivalent(&ctx.behavior, &rctx.behavior, &ctx.tol);
            if pv.is_holds() {
                notes.push(
                    "representation comparison searches variable renamings only; \
                     rewrites beyond renaming are not explored"
                        .to_string(),
                );
                if canonical_equal(subject, r) {
                    "representation-candidate".to_string()
                } else {
                    "interpretation-candidate".to_string()
                }
            } else {
                if pv.reason.as_deref() == Some(REASON_SIGNATURE_MISMATCH) {
                    let detail = pv
                        .witness
                        .as_ref()
                        .and_then(|w| w.fields.get("mismatch").cloned())
                        .unwrap_or_else(|| "shape differs".to_string());
                    notes.push(format!(
                        "behavior signatures differ ({detail}); treated as a behavioral departure"
                    ));
                }
                "modification-candidate".to_string()
            }
        }
    };

    // Step 4: the property survey. Closures run under whatever rayon pool is
    // installed; collect preserves order, so reports are thread-count
    // independent.
    type Job<'a> = Box<dyn Fn() -> Verdict + Sync + Send + 'a>;
    let coa = check_continuity_of_action(&ctx);
    let strong = check_strong_continuity_of_action(&ctx);
    let lc = check_local_causality(&ctx);
    let fir = check_future_input_requirement(&ctx);
    let fid = check_future_input_dependence(ctx.m);

    let jobs: Vec<(&str, Job)> = vec![
        ("deterministic", Box::new(|| check_deterministic(&ctx))),
        ("predictable", Box::new(|| check_predictable(&ctx))),
        ("alocal", Box::new(|| check_alocal(ctx.m))),
        ("atemporal", Box::new(|| check_atemporal(ctx.m))),
        ("acausal", Box::new(|| check_acausal(ctx.m))),
        ("irreducible", Box::new(|| check_irreducible(&ctx))),
        ("all-at-once-input", Box::new(|| check_all_at_once(ctx.m))),
        ("continuity-of-action", Box::new(|| coa.clone())),
        ("strong-continuity-of-action", Box::new(|| strong.clone())),
        ("local-causality", Box::new(|| lc.clone())),
        (
            "temporal-determinism",
            Box::new(|| check_temporal_determinism(&ctx)),
        ),
        ("time-reversibility", Box::new(|| check_time_reversible(&ctx))),
        ("future-input-dependence", Box::new(|| fid.clone())),
        ("future-input-requirement", Box::new(|| fir.clone())),
        (
            "pseudo-retrocausality",
            Box::new(|| check_pseudo_retrocausal(&strong, &fid, &fir)),
        ),
        ("counter-causality", Box::new(|| check_counter_causal(&ctx))),
        (
            "superluminal-signalling",
            Box::new(|| check_superluminal_signalling(&ctx)),
        ),
        (
            "retrocausal-signalling",
            Box::new(|| check_retrocausal_signalling(&ctx, &fir)),
        ),
        (
            "statistical-independence",
            Box::new(|| check_statistical_independence(&ctx)),
        ),
        (
            "superdeterminism",
            Box::new(|| match reference {
                Some(r) => check_superdeterministic(&ctx, r),
                None => Verdict::not_applicable("NO_REFERENCE"),
            }),
        ),
    ];

    let results: Vec<(String, Verdict, f64)> = jobs
        .par_iter()
        .map(|(name, job)| {
            let start = Instant::now();
            let v = job();
            let ms = start.elapsed().as_secs_f64() * 1e3;
            (name.to_string(), v, ms)
        })
        .collect();

    let locality = classify_locality(&ctx, &coa, &strong);
    let (order, order_notes) = classify_causal_order(locality.label, &fir, &lc);
    if let Some(n) = &locality.note {
        notes.push(n.clone());
    }
    notes.extend(order_notes);

    notes.push(
        "screening surfaces are axis-aligned rectangle boundaries on the lattice".to_string(),
    );
    notes.push(
        "statistical independence conditions all hidden inputs on all controllable inputs"
            .to_string(),
    );
    if subject.decimal {
        let eps = match &ctx.tol {
            Tolerance(Some(eps)) => format_q(eps),
            Tolerance(None) => "0 (exact)".to_string(),
        };
        notes.push(format!(
            "decimal mode: behavior comparisons use absolute tolerance {eps}"
        ));
    }
    if let Some(h) = common_cause_input(subject) {
        notes.push(format!(
            "hidden input {h} fixes every other input on the prior support (common-cause layout)"
        ));
    }
    if let Some(n) = chsh_note(&ctx) {
        notes.push(n);
    }

    let mut properties = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    for (name, v, ms) in results {
        timings.push((name.clone(), ms));
        properties.push((name, v));
    }

    Ok(TaxonomyReport {
        model: subject.name.clone(),
        reference: reference.map(|r| r.name.clone()),
        properties,
        locality: locality.label.to_string(),
        causal_order: order.to_string(),
        classification,
        notes,
        timings,
    })
}

impl TaxonomyReport {
    pub fn json(&self) -> serde_json::Value {
        let mut props = serde_json::Map::new();
        for (name, v) in &self.properties {
            props.insert(name.clone(), v.json());
        }
        let mut labels = serde_json::Map::new();
        labels.insert(
            "causal-order".to_string(),
            serde_json::Value::String(self.causal_order.clone()),
        );
        labels.insert(
            "classification".to_string(),
            serde_json::Value::String(self.classification.clone()),
        );
        labels.insert(
            "locality".to_string(),
            serde_json::Value::String(self.locality.clone()),
        );
        let mut obj = serde_json::Map::new();
        obj.insert(
            "model".to_string(),
            serde_json::Value::String(self.model.clone()),
        );
        obj.insert(
            "reference".to_string(),
            match &self.reference {
                Some(r) => serde_json::Value::String(r.clone()),
                None => serde_json::Value::Null,
            },
        );
        obj.insert("properties".to_string(), serde_json::Value::Object(props));
        obj.insert("labels".to_string(), serde_json::Value::Object(labels));
        obj.insert(
            "notes".to_string(),
            serde_json::Value::Array(
                self.notes
                    .iter()
                    .map(|n| serde_json::Value::String(n.clone()))
                    .collect(),
            ),
        );
        serde_json::Value::Object(obj)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model:          {}\n", self.model));
        out.push_str(&format!(
            "reference:      {}\n",
            self.reference.as_deref().unwrap_or("(none)")
        ));
        out.push_str(&format!("classification: {}\n", self.classification));
        out.push_str(&format!("locality:       {}\n", self.locality));
        out.push_str(&format!("causal-order:   {}\n", self.causal_order));
        out.push('\n');
        out.push_str(&format!("{:<30} {:<16} detail\n", "property", "status"));
        out.push_str(&format!("{:-<30} {:-<16} {:-<24}\n", "", "", ""));
        for (name, v) in &self.properties {
            let detail = v.reason.as_deref().unwrap_or("");
            out.push_str(&format!(
                "{:<30} {:<16} {}\n",
                name,
                v.status.to_string(),
                detail
            ));
        }
        if !self.notes.is_empty() {
            out.push('\n');
            out.push_str("notes:\n");
            for n in &self.notes {
                out.push_str(&format!("  - {n}\n"));
            }
        }
        out
    }
}

/// Single-property entry point backing `check PROPERTY`. `Ok(None)` means
/// the name is not a known property.
pub fn check_one(
    name: &str,
    m: &Model,
    reference: Option<&Model>,
    opts: &ClassifyOptions,
) -> Result<Option<Verdict>, ClassifyError> {
    let ctx = build_ctx(m, opts)?;
    let v = match name {
        "deterministic" => check_deterministic(&ctx),
        "predictable" => check_predictable(&ctx),
        "alocal" => check_alocal(ctx.m),
        "atemporal" => check_atemporal(ctx.m),
        "acausal" => check_acausal(ctx.m),
        "irreducible" => check_irreducible(&ctx),
        "all-at-once-input" => check_all_at_once(ctx.m),
        "continuity-of-action" => check_continuity_of_action(&ctx),
        "strong-continuity-of-action" => check_strong_continuity_of_action(&ctx),
        "local-causality" => check_local_causality(&ctx),
        "temporal-determinism" => check_temporal_determinism(&ctx),
        "time-reversibility" => check_time_reversible(&ctx),
        "future-input-dependence" => check_future_input_dependence(ctx.m),
        "future-input-requirement" => check_future_input_requirement(&ctx),
        "pseudo-retrocausality" => {
            let strong = check_strong_continuity_of_action(&ctx);
            let fid = check_future_input_dependence(ctx.m);
            let fir = check_future_input_requirement(&ctx);
            check_pseudo_retrocausal(&strong, &fid, &fir)
        }
        "counter-causality" => check_counter_causal(&ctx),
        "superluminal-signalling" => check_superluminal_signalling(&ctx),
        "retrocausal-signalling" => {
            let fir = check_future_input_requirement(&ctx);
            check_retrocausal_signalling(&ctx, &fir)
        }
        "statistical-independence" => check_statistical_independence(&ctx),
        "superdeterminism" => match reference {
            Some(r) => check_superdeterministic(&ctx, r),
            None => Verdict::not_applicable("NO_REFERENCE"),
        },
        _ => return Ok(None),
    };
    Ok(Some(v))
}
