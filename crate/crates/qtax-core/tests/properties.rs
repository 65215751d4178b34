//! Cross-cutting properties: surface separation on the lattice, cone
//! algebra, transform round-trips, serialization fixpoints, witness probes
//! re-deriving their own numbers, and distribution normalization.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::{One, Zero};
use proptest::prelude::*;
use qtax_core::{
    behavior, canonical_text, chsh, global_joint, parse_model, q, relabel_domain,
    rename_variables, reverse_time, sampler, translate, verify_probe, Arrow, check_one,
    ClassifyOptions, ConePart, Lattice, Model, Region, Site, Q, PROPERTY_NAMES,
};

fn small_lattice() -> impl Strategy<Value = Lattice> {
    (
        -4i64..=-1,
        1i64..=4,
        -2i64..=0,
        1i64..=4,
        1i64..=2,
        prop::bool::ANY,
    )
        .prop_map(|(x_min, x_max, t_min, t_max, c, fwd)| Lattice {
            x_min,
            x_max,
            t_min,
            t_max,
            c,
            arrow: if fwd { Arrow::Forward } else { Arrow::None },
        })
}

/// A nonempty region of up to `k` sites inside the lattice.
fn region_in(l: &Lattice, k: usize, picks: &[usize]) -> Region {
    let sites = l.sites();
    let mut out = BTreeSet::new();
    for &p in picks.iter().take(k) {
        out.insert(sites[p % sites.len()].clone());
    }
    Region::from_sites(out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Every shielding surface's ring really cuts the lattice: no walk from
    /// the shielded region to the other region can avoid the ring, even
    /// stepping diagonally.
    #[test]
    fn shielding_surfaces_separate(
        l in small_lattice(),
        pa in prop::collection::vec(0usize..400, 1..3),
        pb in prop::collection::vec(0usize..400, 1..3),
    ) {
        let a = region_in(&l, 2, &pa);
        let b = region_in(&l, 2, &pb).difference(&a);
        prop_assume!(!b.is_empty());
        for shell in l.shielding_surfaces(&a, &b) {
            let blocked: BTreeSet<Site> = shell.sites.iter().cloned().collect();
            let mut seen: BTreeSet<Site> = BTreeSet::new();
            let mut queue: VecDeque<Site> = VecDeque::new();
            for s in a.iter() {
                prop_assert!(!blocked.contains(s), "region sits on its own surface");
                seen.insert(s.clone());
                queue.push_back(s.clone());
            }
            while let Some(s) = queue.pop_front() {
                prop_assert!(
                    !b.contains(&s),
                    "walked from one region to the other around {shell}"
                );
                for dx in -1i64..=1 {
                    for dt in -1i64..=1 {
                        let n = Site::new(s.x + dx, s.t + dt);
                        if l.contains(&n) && !blocked.contains(&n) && seen.insert(n.clone()) {
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
    }

    /// Past and future cones partition the full cone and contain the apex
    /// region; the full cone is monotone in its region.
    #[test]
    fn cone_algebra(
        l in small_lattice(),
        pa in prop::collection::vec(0usize..400, 1..3),
        extra in 0usize..400,
    ) {
        let a = region_in(&l, 2, &pa);
        let full = l.lightcone(&a, ConePart::Full).unwrap();
        prop_assert!(a.is_subset(&full));
        if l.arrow == Arrow::Forward {
            let past = l.lightcone(&a, ConePart::Past).unwrap();
            let future = l.lightcone(&a, ConePart::Future).unwrap();
            prop_assert!(a.is_subset(&past));
            prop_assert!(a.is_subset(&future));
            prop_assert!(past.is_subset(&full));
            prop_assert!(future.is_subset(&full));
            prop_assert_eq!(past.union(&future), full.clone());
        } else {
            prop_assert!(l.lightcone(&a, ConePart::Past).is_none());
            prop_assert!(l.lightcone(&a, ConePart::Future).is_none());
        }
        let wider = a.union(&region_in(&l, 1, &[extra]));
        let wider_cone = l.lightcone(&wider, ConePart::Full).unwrap();
        prop_assert!(full.is_subset(&wider_cone));
    }

    /// Spacelike separation agrees with cone membership and is symmetric.
    #[test]
    fn spacelike_matches_cones(
        l in small_lattice(),
        pa in prop::collection::vec(0usize..400, 1..3),
        pb in prop::collection::vec(0usize..400, 1..3),
    ) {
        let a = region_in(&l, 2, &pa);
        let b = region_in(&l, 2, &pb);
        let by_cone = l.lightcone(&a, ConePart::Full).unwrap().intersect(&b).is_empty();
        prop_assert_eq!(l.spacelike_separated(&a, &b), by_cone);
        prop_assert_eq!(
            l.spacelike_separated(&a, &b),
            l.spacelike_separated(&b, &a)
        );
    }
}

fn random_models(tag: &str, seed_base: u64, n: u64) -> Vec<Model> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut r = sampler::rng(seed_base + i);
        let m = match tag {
            "structured" => sampler::any_structured(&mut r, i as usize),
            "factor" => sampler::factor_model(&mut r, &format!("pfac-{i}")),
            _ => unreachable!(),
        };
        out.push(m);
    }
    out
}

#[test]
fn transform_round_trips() {
    for m in random_models("structured", 7000, 25) {
        let there = translate(&m, 5, -3);
        let back = translate(&there, -5, 3);
        assert_eq!(canonical_text(&m), canonical_text(&back), "{}", m.name);

        let twice = reverse_time(&reverse_time(&m));
        assert_eq!(canonical_text(&m), canonical_text(&twice), "{}", m.name);

        let var = m.variables[0].name.clone();
        let n = m.variables[0].domain.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let rolled = relabel_domain(&m, &var, &perm).unwrap();
        let mut inverse = vec![0usize; n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let unrolled = relabel_domain(&rolled, &var, &inverse).unwrap();
        assert_eq!(canonical_text(&m), canonical_text(&unrolled), "{}", m.name);

        let fwd: BTreeMap<String, String> = m
            .variables
            .iter()
            .map(|v| (v.name.clone(), format!("p_{}", v.name)))
            .collect();
        let rev: BTreeMap<String, String> =
            fwd.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        let renamed = rename_variables(&m, &fwd).unwrap();
        let restored = rename_variables(&renamed, &rev).unwrap();
        assert_eq!(canonical_text(&m), canonical_text(&restored), "{}", m.name);
    }
}

#[test]
fn serialization_fixpoint_on_random_models() {
    let mut models = random_models("structured", 7100, 30);
    models.extend(random_models("factor", 7200, 20));
    for m in models {
        let text = canonical_text(&m);
        let (parsed, diags) =
            parse_model(&text, &m.name, "memory.qtx", m.decimal).unwrap_or_else(|errs| {
                panic!("{}: canonical text failed to parse: {errs:?}", m.name)
            });
        assert!(
            diags.is_empty(),
            "{}: canonical text drew diagnostics: {diags:?}",
            m.name
        );
        assert_eq!(text, canonical_text(&parsed), "{}", m.name);
    }
}

/// Every witness probe handed out by any checker must reproduce its claimed
/// probabilities when re-evaluated against the model it came from.
#[test]
fn witness_probes_reverify() {
    let opts = ClassifyOptions::default();
    let mut models: Vec<Model> = common::CORPUS
        .iter()
        .map(|(name, decimal)| common::load(name, *decimal))
        .collect();
    models.extend(random_models("structured", 7300, 40));

    let mut probes_checked = 0usize;
    for m in &models {
        for name in PROPERTY_NAMES {
            if name == "superdeterminism" {
                continue;
            }
            let Ok(Some(v)) = check_one(name, m, None, &opts) else {
                continue;
            };
            if let Some(w) = &v.witness {
                if let Some(p) = &w.probe {
                    assert!(
                        verify_probe(m, p),
                        "{}: {name} probe does not re-verify: {p:?}",
                        m.name
                    );
                    probes_checked += 1;
                }
            }
        }
    }
    assert!(probes_checked >= 10, "only {probes_checked} probes seen");
}

#[test]
fn distributions_normalize() {
    let mut models = random_models("structured", 7400, 25);
    models.extend(random_models("factor", 7500, 25));
    let one = Q::one();
    for m in &models {
        let Ok(b) = behavior(m) else { continue };
        for (setting, dist) in &b.table {
            let total: Q = dist.values().fold(Q::zero(), |acc, p| acc + p.clone());
            assert_eq!(total, one, "{}: setting {setting:?}", m.name);
        }
        let jt = global_joint(m).unwrap();
        let total: Q = jt.entries.values().fold(Q::zero(), |acc, p| acc + p.clone());
        assert_eq!(total, one, "{}: joint mass", m.name);
    }
}

#[test]
fn chsh_stays_within_algebraic_range() {
    let four = q(4, 1);
    for i in 0..30u64 {
        let mut r = sampler::rng(7600 + i);
        let m = sampler::masked_lhv(&mut r, &format!("pch-{i}"));
        let b = behavior(&m).unwrap();
        let s = chsh(&b, "x", "y", ("0", "1"), ("0", "1")).unwrap();
        let abs = if s < Q::zero() { -s.clone() } else { s.clone() };
        assert!(abs <= four, "pch-{i}: CHSH {s} out of range");
    }
}
