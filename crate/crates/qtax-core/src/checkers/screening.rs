//! Screening-surface checkers: continuity of action, its strong variant, and
//! local causality differ only in how each surface is clipped before the
//! conditioning set is read off it. The locality quadrant builds on them.

use super::{
    assignment_labels, event_labels, is_localized_input, is_localized_output, Ctx,
    REASON_ALOCAL, REASON_CONES_OVERLAP, REASON_NO_ARROW, REASON_NO_SURFACES,
};
use crate::lattice::{Arrow, ConePart, Region};
use crate::rational::Q;
use crate::verdict::{Probe, Status, Verdict, Witness};
use num::Zero;
use std::collections::BTreeMap;

/// How a raw shielding surface is restricted before inputs are collected
/// from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    /// Whole boundary ring (continuity of action).
    Full,
    /// Ring clipped to the full light cone of the output region; rings that
    /// meet the input's cone are discarded (strong continuity of action).
    ConeClipped,
    /// Ring must avoid the input's full cone entirely; the conditioning set
    /// is read from the ring clipped to the output's past cone (local
    /// causality).
    PastClipped,
}

pub fn check_continuity_of_action(ctx: &Ctx) -> Verdict {
    screening_check(ctx, Surface::Full)
}

pub fn check_strong_continuity_of_action(ctx: &Ctx) -> Verdict {
    screening_check(ctx, Surface::ConeClipped)
}

pub fn check_local_causality(ctx: &Ctx) -> Verdict {
    screening_check(ctx, Surface::PastClipped)
}

/// Core screening loop. For each localized output region A, localized input
/// region B, and admissible surface between them: conditioning on the inputs
/// sitting on the surface must render the joint distribution over the outputs
/// meeting A independent of the inputs inside B. Comparisons are exact.
pub fn screening_check(ctx: &Ctx, surface: Surface) -> Verdict {
    let m = ctx.m;
    let Some(lat) = &m.lattice else {
        return Verdict::not_applicable(REASON_ALOCAL);
    };
    if surface == Surface::PastClipped && lat.arrow == Arrow::None {
        return Verdict::not_applicable(REASON_NO_ARROW);
    }

    let mut raw_surfaces = 0usize;
    let mut checked = 0usize;

    for (a_pos, a_var) in m.variables.iter().enumerate() {
        if !is_localized_output(a_var) {
            continue;
        }
        let a_region = a_var.region.clone().unwrap();
        // O(A): every output whose region meets A, as a joint event.
        let o_a: Vec<usize> = ctx.positions(|v| {
            is_localized_output(v)
                && v.region
                    .as_ref()
                    .map(|r| !r.is_disjoint(&a_region))
                    .unwrap_or(false)
        });
        debug_assert!(o_a.contains(&a_pos));
        let cone_a = match surface {
            Surface::Full => None,
            Surface::ConeClipped => lat.lightcone(&a_region, ConePart::Full),
            Surface::PastClipped => lat.lightcone(&a_region, ConePart::Past),
        };

        for b_var in m.variables.iter() {
            if !is_localized_input(b_var) {
                continue;
            }
            let b_region = b_var.region.clone().unwrap();
            let i_b: Vec<usize> = ctx.positions(|v| {
                v.kind == crate::model::VarKind::Input
                    && v.region
                        .as_ref()
                        .map(|r| r.is_subset(&b_region))
                        .unwrap_or(false)
            });
            let cone_b = if surface == Surface::Full {
                None
            } else {
                lat.lightcone(&b_region, ConePart::Full)
            };

            for shell in lat.shielding_surfaces(&a_region, &b_region) {
                raw_surfaces += 1;
                let sites: Region = match surface {
                    Surface::Full => shell.sites.clone(),
                    Surface::ConeClipped => {
                        let clipped = shell.sites.intersect(cone_a.as_ref().unwrap());
                        if !clipped.is_disjoint(cone_b.as_ref().unwrap()) {
                            continue;
                        }
                        clipped
                    }
                    Surface::PastClipped => {
                        if !shell.sites.is_disjoint(cone_b.as_ref().unwrap()) {
                            continue;
                        }
                        shell.sites.intersect(cone_a.as_ref().unwrap())
                    }
                };
                checked += 1;

                let i_s: Vec<usize> = ctx.positions(|v| {
                    v.kind == crate::model::VarKind::Input
                        && v.region
                            .as_ref()
                            .map(|r| r.is_subset(&sites))
                            .unwrap_or(false)
                });

                if let Some(w) = surface_failure(ctx, &o_a, &i_s, &i_b, a_var, b_var, &shell)
                {
                    return Verdict {
                        status: Status::Fails,
                        witness: Some(w),
                        reason: None,
                    };
                }
            }
        }
    }

    if checked == 0 {
        let reason = if raw_surfaces == 0 {
            REASON_NO_SURFACES
        } else {
            REASON_CONES_OVERLAP
        };
        return Verdict::not_applicable(reason);
    }
    Verdict::holds()
}

/// Scan one admitted surface for a screening violation. Returns the first
/// witness in canonical order (conditioning assignments ascending, events
/// ascending) or None when the surface screens.
fn surface_failure(
    ctx: &Ctx,
    o_a: &[usize],
    i_s: &[usize],
    i_b: &[usize],
    a_var: &crate::model::Variable,
    b_var: &crate::model::Variable,
    shell: &crate::lattice::Shell,
) -> Option<Witness> {
    let m = ctx.m;
    let jt = &ctx.joint;
    // Inputs inside B that already sit on the surface would condition on
    // both sides at once; surfaces exclude B by construction, so the two
    // position lists are disjoint.
    let mut cond_positions: Vec<usize> = i_s.to_vec();
    cond_positions.extend_from_slice(i_b);

    for (assign, mass) in jt.marginal(&cond_positions) {
        if mass.is_zero() {
            continue;
        }
        let fixed_both: Vec<(usize, usize)> = cond_positions
            .iter()
            .copied()
            .zip(assign.iter().copied())
            .collect();
        let fixed_s = &fixed_both[..i_s.len()];
        let with_b = jt.conditional(o_a, &fixed_both)?;
        let without_b = jt.conditional(o_a, fixed_s)?;
        if let Some((event, p_with, p_without)) = first_difference(&with_b, &without_b) {
            let mut w = Witness::new()
                .field("output-region", format!("{} (output {})", region_str(a_var), a_var.name))
                .field("input-region", format!("{} (input {})", region_str(b_var), b_var.name))
                .field("surface", shell.to_string())
                .field("outputs", names(m, o_a))
                .field(
                    "surface-conditioning",
                    assignment_labels(m, fixed_s),
                )
                .field(
                    "input-assignment",
                    assignment_labels(m, &fixed_both[i_s.len()..]),
                )
                .field("event", event_labels(m, o_a, &event))
                .rational("P(outputs|surface,input)", &p_with)
                .rational("P(outputs|surface)", &p_without);
            w = w.with_probe(Probe::Conditional {
                targets: o_a.iter().map(|&p| m.variables[p].name.clone()).collect(),
                event: event.clone(),
                given: fixed_s
                    .iter()
                    .map(|&(p, v)| (m.variables[p].name.clone(), v))
                    .collect(),
                extra: fixed_both[i_s.len()..]
                    .iter()
                    .map(|&(p, v)| (m.variables[p].name.clone(), v))
                    .collect(),
                with_extra: p_with,
                without_extra: p_without,
            });
            return Some(w);
        }
    }
    None
}

/// First event (ascending key order) on which two distributions differ,
/// treating missing keys as zero.
pub(crate) fn first_difference(
    a: &BTreeMap<Vec<usize>, Q>,
    b: &BTreeMap<Vec<usize>, Q>,
) -> Option<(Vec<usize>, Q, Q)> {
    let mut keys: Vec<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let pa = a.get(k).cloned().unwrap_or_else(Q::zero);
        let pb = b.get(k).cloned().unwrap_or_else(Q::zero);
        if pa != pb {
            return Some((k.clone(), pa, pb));
        }
    }
    None
}

fn names(m: &crate::model::Model, positions: &[usize]) -> String {
    positions
        .iter()
        .map(|&p| m.variables[p].name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn region_str(v: &crate::model::Variable) -> String {
    match &v.region {
        Some(r) => r
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(""),
        None => "nowhere".to_string(),
    }
}

/// Locality quadrant labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalityLabel {
    LocallySubluminal,
    LocallySuperluminal,
    NonLocallySubluminal,
    NonLocallySuperluminal,
    NotApplicable,
}

impl std::fmt::Display for LocalityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LocalityLabel::LocallySubluminal => "locally-subluminal",
            LocalityLabel::LocallySuperluminal => "locally-superluminal",
            LocalityLabel::NonLocallySubluminal => "non-locally-subluminal",
            LocalityLabel::NonLocallySuperluminal => "non-locally-superluminal",
            LocalityLabel::NotApplicable => "not-applicable",
        };
        f.write_str(s)
    }
}

pub struct LocalityAssessment {
    pub label: LocalityLabel,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

/// Place the model in the locality quadrant from its two screening verdicts.
///
/// A holding strong variant settles the local-subluminal corner outright,
/// even when the plain check fails on wider surfaces. When both screening
/// checks fail, cone-level signalling decides between the non-local corners.
pub fn classify_locality(ctx: &Ctx, coa: &Verdict, strong: &Verdict) -> LocalityAssessment {
    if ctx.m.lattice.is_none() {
        return LocalityAssessment {
            label: LocalityLabel::NotApplicable,
            witness: None,
            note: None,
        };
    }
    if strong.is_holds() {
        return LocalityAssessment {
            label: LocalityLabel::LocallySubluminal,
            witness: None,
            note: None,
        };
    }
    match coa.status {
        Status::Holds => {
            if strong.is_fails() {
                LocalityAssessment {
                    label: LocalityLabel::LocallySuperluminal,
                    witness: strong.witness.clone(),
                    note: None,
                }
            } else {
                LocalityAssessment {
                    label: LocalityLabel::NotApplicable,
                    witness: None,
                    note: Some(format!(
                        "locality undecided: continuity of action holds but its strong variant is not applicable ({})",
                        strong.reason.as_deref().unwrap_or("no reason")
                    )),
                }
            }
        }
        Status::NotApplicable => LocalityAssessment {
            label: LocalityLabel::NotApplicable,
            witness: None,
            note: None,
        },
        Status::Fails => {
            let (superluminal, witness) = cone_level_signalling(ctx);
            LocalityAssessment {
                label: if superluminal {
                    LocalityLabel::NonLocallySuperluminal
                } else {
                    LocalityLabel::NonLocallySubluminal
                },
                witness,
                note: None,
            }
        }
    }
}

/// Does conditioning on inputs confined to some input's full cone, beyond
/// those in an output's own full cone, shift that output's distribution?
fn cone_level_signalling(ctx: &Ctx) -> (bool, Option<Witness>) {
    let m = ctx.m;
    let lat = m.lattice.as_ref().unwrap();
    let jt = &ctx.joint;

    for a_var in m.variables.iter().filter(|v| is_localized_output(v)) {
        let a_region = a_var.region.clone().unwrap();
        let o_a: Vec<usize> = ctx.positions(|v| {
            is_localized_output(v)
                && v.region
                    .as_ref()
                    .map(|r| !r.is_disjoint(&a_region))
                    .unwrap_or(false)
        });
        let cone_a = lat.lightcone(&a_region, ConePart::Full).unwrap();
        let i_la: Vec<usize> = ctx.positions(|v| {
            v.kind == crate::model::VarKind::Input
                && v.region
                    .as_ref()
                    .map(|r| r.is_subset(&cone_a))
                    .unwrap_or(false)
        });

        for b_var in m.variables.iter().filter(|v| is_localized_input(v)) {
            let b_region = b_var.region.clone().unwrap();
            let cone_b = lat.lightcone(&b_region, ConePart::Full).unwrap();
            let i_lb: Vec<usize> = ctx.positions(|v| {
                v.kind == crate::model::VarKind::Input
                    && v.region
                        .as_ref()
                        .map(|r| r.is_subset(&cone_b))
                        .unwrap_or(false)
            });
            let extra: Vec<usize> = i_lb
                .iter()
                .copied()
                .filter(|p| !i_la.contains(p))
                .collect();
            if extra.is_empty() {
                continue;
            }
            let mut cond_positions = i_la.clone();
            cond_positions.extend_from_slice(&extra);

            for (assign, mass) in jt.marginal(&cond_positions) {
                if mass.is_zero() {
                    continue;
                }
                let fixed_all: Vec<(usize, usize)> = cond_positions
                    .iter()
                    .copied()
                    .zip(assign.iter().copied())
                    .collect();
                let fixed_own = &fixed_all[..i_la.len()];
                let with_extra = jt.conditional(&o_a, &fixed_all);
                let without_extra = jt.conditional(&o_a, fixed_own);
                let (Some(with_extra), Some(without_extra)) = (with_extra, without_extra)
                else {
                    continue;
                };
                if let Some((event, p_with, p_without)) =
                    first_difference(&with_extra, &without_extra)
                {
                    let w = Witness::new()
                        .field("output", a_var.name.clone())
                        .field("distant-input", b_var.name.clone())
                        .field("own-cone-conditioning", assignment_labels(m, fixed_own))
                        .field(
                            "beyond-cone-conditioning",
                            assignment_labels(m, &fixed_all[i_la.len()..]),
                        )
                        .field("event", event_labels(m, &o_a, &event))
                        .rational("P(with)", &p_with)
                        .rational("P(without)", &p_without)
                        .with_probe(Probe::Conditional {
                            targets: o_a
                                .iter()
                                .map(|&p| m.variables[p].name.clone())
                                .collect(),
                            event,
                            given: fixed_own
                                .iter()
                                .map(|&(p, v)| (m.variables[p].name.clone(), v))
                                .collect(),
                            extra: fixed_all[i_la.len()..]
                                .iter()
                                .map(|&(p, v)| (m.variables[p].name.clone(), v))
                                .collect(),
                            with_extra: p_with,
                            without_extra: p_without,
                        });
                    return (true, Some(w));
                }
            }
        }
    }
    (false, None)
}
