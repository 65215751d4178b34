//! Structure-preserving model rewrites: variable renaming, domain-value
//! relabeling, lattice translation, and time reversal.
//!
//! Every transform returns a fresh model; verdict invariance under the first
//! three is a tested engine property.

use crate::lattice::{Lattice, Region, Site};
use crate::model::Model;
use std::collections::BTreeMap;

/// Rename variables according to `mapping` (old name -> new name). Names not
/// in the mapping are kept. Returns None if the mapping would collide.
pub fn rename_variables(m: &Model, mapping: &BTreeMap<String, String>) -> Option<Model> {
    let new_name =
        |old: &str| -> String { mapping.get(old).cloned().unwrap_or_else(|| old.to_string()) };
    let mut seen = std::collections::BTreeSet::new();
    for v in &m.variables {
        if !seen.insert(new_name(&v.name)) {
            return None;
        }
    }
    let mut out = m.clone();
    for v in &mut out.variables {
        v.name = new_name(&v.name);
    }
    for mech in &mut out.mechanisms {
        mech.target = new_name(&mech.target);
        for p in &mut mech.parents {
            *p = new_name(p);
        }
    }
    for c in &mut out.constraints {
        for s in &mut c.scope {
            *s = new_name(s);
        }
    }
    Some(out)
}

/// Apply a permutation of one variable's domain values. `perm[i]` is the new
/// index of the value previously at index i; the domain label list is
/// permuted to match, so the model is observationally identical up to label
/// order. Returns None if the variable is unknown or perm is malformed.
pub fn relabel_domain(m: &Model, var: &str, perm: &[usize]) -> Option<Model> {
    let vi = m.var_index(var)?;
    let n = m.variables[vi].domain.len();
    if perm.len() != n {
        return None;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return None;
        }
        seen[p] = true;
    }
    let mut out = m.clone();
    // new_domain[perm[i]] = old_domain[i]
    let mut new_domain = vec![String::new(); n];
    for (i, lbl) in m.variables[vi].domain.iter().enumerate() {
        new_domain[perm[i]] = lbl.clone();
    }
    out.variables[vi].domain = new_domain;

    for mech in &mut out.mechanisms {
        let parent_slots: Vec<usize> = mech
            .parents
            .iter()
            .enumerate()
            .filter(|(_, p)| p.as_str() == var)
            .map(|(i, _)| i)
            .collect();
        let remap_target = mech.target == var;
        if parent_slots.is_empty() && !remap_target {
            continue;
        }
        let old = std::mem::take(&mut mech.kernel);
        for (mut key, mut dist) in old {
            for &slot in &parent_slots {
                key[slot] = perm[key[slot]];
            }
            if remap_target {
                for (val, _) in dist.iter_mut() {
                    *val = perm[*val];
                }
                dist.sort_by(|a, b| a.0.cmp(&b.0));
            }
            mech.kernel.insert(key, dist);
        }
    }
    for c in &mut out.constraints {
        let slots: Vec<usize> = c
            .scope
            .iter()
            .enumerate()
            .filter(|(_, s)| s.as_str() == var)
            .map(|(i, _)| i)
            .collect();
        if slots.is_empty() {
            continue;
        }
        let old = std::mem::take(&mut c.weights);
        for (mut key, w) in old {
            for &slot in &slots {
                key[slot] = perm[key[slot]];
            }
            c.weights.insert(key, w);
        }
    }
    if let Some(slot) = m.inputs().iter().position(|v| v.name == var) {
        let old = std::mem::take(&mut out.prior.entries);
        for (mut key, p) in old {
            key[slot] = perm[key[slot]];
            out.prior.entries.insert(key, p);
        }
    }
    Some(out)
}

/// Shift every localization and the lattice bounds by (dx, dt). A model
/// without a lattice is returned unchanged.
pub fn translate(m: &Model, dx: i64, dt: i64) -> Model {
    let mut out = m.clone();
    let Some(lat) = &mut out.lattice else {
        return out;
    };
    lat.x_min += dx;
    lat.x_max += dx;
    lat.t_min += dt;
    lat.t_max += dt;
    for v in &mut out.variables {
        if let Some(region) = &v.region {
            let shifted = Region::from_sites(region.iter().map(|s| Site {
                x: s.x + dx,
                t: s.t + dt,
            }));
            v.region = Some(shifted);
        }
    }
    out
}

/// Reflect every localization in time: t -> t_max + t_min - t. The lattice
/// bounds are unchanged (the reflection maps them onto themselves) and the
/// arrow keeps its declared direction, so the transformed model reads its
/// old future as its past. Involution: reverse(reverse(m)) == m.
pub fn reverse_time(m: &Model) -> Model {
    let mut out = m.clone();
    let Some(Lattice { t_min, t_max, .. }) = out.lattice else {
        return out;
    };
    let flip = t_max + t_min;
    for v in &mut out.variables {
        if let Some(region) = &v.region {
            let reflected = Region::from_sites(region.iter().map(|s| Site {
                x: s.x,
                t: flip - s.t,
            }));
            v.region = Some(reflected);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Arrow;
    use crate::model::{Mechanism, Prior, VarKind, Variable};
    use crate::rational::q;

    fn toy() -> Model {
        Model {
            name: "toy".into(),
            lattice: Some(Lattice {
                x_min: -1,
                x_max: 1,
                t_min: 0,
                t_max: 3,
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
                    domain: vec!["a".into(), "b".into(), "c".into()],
                    kind: VarKind::Output,
                    region: Some(Region::single(0, 2)),
                    hidden: false,
                    controllable: false,
                    observable: true,
                },
            ],
            mechanisms: vec![Mechanism {
                target: "o".into(),
                parents: vec!["u".into()],
                kernel: BTreeMap::from([
                    (vec![0], vec![(0, q(1, 2)), (2, q(1, 2))]),
                    (vec![1], vec![(1, q(1, 1))]),
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
    fn rename_rewires_references() {
        let m = toy();
        let mapping = BTreeMap::from([("u".to_string(), "w".to_string())]);
        let r = rename_variables(&m, &mapping).unwrap();
        assert_eq!(r.variables[0].name, "w");
        assert_eq!(r.mechanisms[0].parents, vec!["w".to_string()]);
        let clash = BTreeMap::from([("u".to_string(), "o".to_string())]);
        assert!(rename_variables(&m, &clash).is_none());
    }

    #[test]
    fn relabel_output_domain_permutes_kernel_and_labels() {
        let m = toy();
        // send index 0 -> 2 and 2 -> 0 in o's domain
        let r = relabel_domain(&m, "o", &[2, 1, 0]).unwrap();
        assert_eq!(r.variables[1].domain, vec!["c", "b", "a"]);
        let row0 = &r.mechanisms[0].kernel[&vec![0]];
        assert_eq!(row0, &vec![(0, q(1, 2)), (2, q(1, 2))]);
        // the label "a" now sits at index 2 and keeps its probability
        let jt = crate::table::scenario_joint(&r, &vec![0]).unwrap();
        let pos = jt.var_pos("o").unwrap();
        let marg = jt.marginal(&[pos]);
        assert_eq!(marg[&vec![2]], q(1, 2));
    }

    #[test]
    fn relabel_input_domain_permutes_prior_and_kernel_keys() {
        let m = toy();
        let r = relabel_domain(&m, "u", &[1, 0]).unwrap();
        assert_eq!(r.variables[0].domain, vec!["1", "0"]);
        // old u=1 row (point mass on o index 1) is now keyed by 0
        assert_eq!(r.mechanisms[0].kernel[&vec![0]], vec![(1, q(1, 1))]);
        assert_eq!(r.prior.entries.len(), 2);
    }

    #[test]
    fn translate_shifts_regions_and_bounds() {
        let m = toy();
        let r = translate(&m, 2, -1);
        let lat = r.lattice.unwrap();
        assert_eq!((lat.x_min, lat.x_max, lat.t_min, lat.t_max), (1, 3, -1, 2));
        let reg = r.variables[1].region.clone().unwrap();
        assert!(reg.contains(&Site { x: 2, t: 1 }));
    }

    #[test]
    fn reverse_is_involution() {
        let m = toy();
        let r = reverse_time(&m);
        let reg = r.variables[0].region.clone().unwrap();
        assert!(reg.contains(&Site { x: 0, t: 3 })); // 0 -> 3+0-0
        let rr = reverse_time(&r);
        assert_eq!(rr.variables[0].region, m.variables[0].region);
        assert_eq!(rr.variables[1].region, m.variables[1].region);
    }
}
