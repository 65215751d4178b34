//! Seeded random model generators backing the randomized test suites and
//! the benches. Every generator is a pure function of the passed RNG, so a
//! fixed seed reproduces the exact model.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::{Arrow, Lattice, Region};
use crate::model::{Constraint, Mechanism, Model, Prior, VarKind, Variable};
use crate::rational::{q, Q};
use crate::table::tuples;

/// The RNG used everywhere; tests build it through [`rng`].
pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn hidden_input(name: &str, domain: Vec<String>, region: Option<Region>) -> Variable {
    Variable {
        name: name.to_string(),
        domain,
        kind: VarKind::Input,
        region,
        hidden: true,
        controllable: false,
        observable: false,
    }
}

fn setting_input(name: &str, domain: Vec<String>, region: Option<Region>) -> Variable {
    Variable {
        name: name.to_string(),
        domain,
        kind: VarKind::Input,
        region,
        hidden: false,
        controllable: true,
        observable: true,
    }
}

fn output(name: &str, domain: Vec<String>, region: Option<Region>, observable: bool) -> Variable {
    Variable {
        name: name.to_string(),
        domain,
        kind: VarKind::Output,
        region,
        hidden: false,
        controllable: false,
        observable,
    }
}

/// `n` positive rationals summing to one.
fn simplex(rng: &mut SampleRng, n: usize) -> Vec<Q> {
    let parts: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=12)).collect();
    let total: i64 = parts.iter().sum();
    parts.into_iter().map(|p| q(p, total)).collect()
}

/// A probability k/7, never one half; used where an exact half would make a
/// dependence vanish.
fn biased_prob(rng: &mut SampleRng) -> Q {
    q(rng.gen_range(1..=6), 7)
}

/// Point kernel row.
fn point(idx: usize) -> Vec<(usize, Q)> {
    vec![(idx, q(1, 1))]
}

/// Two-value row with P(first) = p.
fn coin(first: usize, second: usize, p: &Q) -> Vec<(usize, Q)> {
    use num::{One, Zero};
    if p.is_one() {
        return point(first);
    }
    if p.is_zero() {
        return point(second);
    }
    vec![(first, p.clone()), (second, Q::one() - p)]
}

/// A probability that is 0 or 1 half the time and a proper fraction
/// otherwise.
fn mixed_prob(rng: &mut SampleRng) -> Q {
    if rng.gen_bool(0.5) {
        if rng.gen_bool(0.5) {
            q(1, 1)
        } else {
            q(0, 1)
        }
    } else {
        q(rng.gen_range(1..=19), 20)
    }
}

fn bell_lattice() -> Lattice {
    Lattice {
        x_min: -3,
        x_max: 3,
        t_min: -1,
        t_max: 3,
        c: 1,
        arrow: Arrow::Forward,
    }
}

/// Two-wing layout with a shared-coin prior whose kernels keep every
/// admitted screening surface uninformative: the response to each side's
/// setting enters only through the parity with the local coin, and the
/// non-binary setting acts through a balanced branch map. Holds local
/// causality and statistical independence by construction.
pub fn masked_lhv(rng: &mut SampleRng, name: &str) -> Model {
    let y_size = if rng.gen_bool(0.5) { 2 } else { 4 };
    // balanced branch map: half the y values to each parity class
    let mut branch: Vec<usize> = (0..y_size).map(|i| i % 2).collect();
    branch.shuffle(rng);

    let h_a = [mixed_prob(rng), mixed_prob(rng)];
    let h_b = [mixed_prob(rng), mixed_prob(rng)];
    let diag = simplex(rng, 2);

    let out_domain = vec!["1".to_string(), "-1".to_string()];
    let variables = vec![
        setting_input("x", labels(2), Some(Region::single(-2, 1))),
        setting_input("y", labels(y_size), Some(Region::single(2, 1))),
        hidden_input("lam_l", labels(2), Some(Region::single(-1, 1))),
        hidden_input("lam_r", labels(2), Some(Region::single(1, 1))),
        output("a", out_domain.clone(), Some(Region::single(-2, 2)), true),
        output("b", out_domain, Some(Region::single(2, 2)), true),
    ];

    let mut a_kernel = std::collections::BTreeMap::new();
    for l in 0..2usize {
        for xi in 0..2usize {
            a_kernel.insert(vec![l, xi], coin(0, 1, &h_a[l ^ xi]));
        }
    }
    let mut b_kernel = std::collections::BTreeMap::new();
    for r in 0..2usize {
        for yi in 0..y_size {
            b_kernel.insert(vec![r, yi], coin(0, 1, &h_b[r ^ branch[yi]]));
        }
    }

    let mut prior = Prior::default();
    for xi in 0..2usize {
        for yi in 0..y_size {
            for v in 0..2usize {
                let mass = q(1, 2) * q(1, y_size as i64) * diag[v].clone();
                prior.entries.insert(vec![xi, yi, v, v], mass);
            }
        }
    }

    Model {
        name: name.to_string(),
        lattice: Some(bell_lattice()),
        variables,
        mechanisms: vec![
            Mechanism {
                target: "a".to_string(),
                parents: vec!["lam_l".to_string(), "x".to_string()],
                kernel: a_kernel,
            },
            Mechanism {
                target: "b".to_string(),
                parents: vec!["lam_r".to_string(), "y".to_string()],
                kernel: b_kernel,
            },
        ],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// Two-wing layout with an arbitrary joint coin prior (independent of the
/// settings) and unrestricted local response kernels. Statistical
/// independence holds by construction; the screening checks may go either
/// way.
pub fn local_response(rng: &mut SampleRng, name: &str) -> Model {
    let correlated = rng.gen_bool(0.5);
    local_response_with(rng, name, correlated)
}

/// local_response restricted to independent wings. With a product coin
/// prior every comparison against a distant input reduces to a marginal,
/// so plain and strong screening stand or fall together.
pub fn local_response_product(rng: &mut SampleRng, name: &str) -> Model {
    local_response_with(rng, name, false)
}

fn local_response_with(rng: &mut SampleRng, name: &str, correlated: bool) -> Model {
    let out_domain = vec!["1".to_string(), "-1".to_string()];
    let variables = vec![
        setting_input("x", labels(2), Some(Region::single(-2, 1))),
        setting_input("y", labels(2), Some(Region::single(2, 1))),
        hidden_input("lam_l", labels(2), Some(Region::single(-1, 1))),
        hidden_input("lam_r", labels(2), Some(Region::single(1, 1))),
        output("a", out_domain.clone(), Some(Region::single(-2, 2)), true),
        output("b", out_domain, Some(Region::single(2, 2)), true),
    ];

    let mut a_kernel = std::collections::BTreeMap::new();
    let mut b_kernel = std::collections::BTreeMap::new();
    for l in 0..2usize {
        for s in 0..2usize {
            a_kernel.insert(vec![l, s], coin(0, 1, &mixed_prob(rng)));
            b_kernel.insert(vec![l, s], coin(0, 1, &mixed_prob(rng)));
        }
    }

    let joint: Vec<Q> = if correlated {
        simplex(rng, 4)
    } else {
        let wl = simplex(rng, 2);
        let wr = simplex(rng, 2);
        let mut out = Vec::new();
        for l in 0..2 {
            for r in 0..2 {
                out.push(wl[l].clone() * wr[r].clone());
            }
        }
        out
    };
    let mut prior = Prior::default();
    for xi in 0..2usize {
        for yi in 0..2usize {
            for l in 0..2usize {
                for r in 0..2usize {
                    let mass = q(1, 4) * joint[2 * l + r].clone();
                    prior.entries.insert(vec![xi, yi, l, r], mass);
                }
            }
        }
    }

    Model {
        name: name.to_string(),
        lattice: Some(bell_lattice()),
        variables,
        mechanisms: vec![
            Mechanism {
                target: "a".to_string(),
                parents: vec!["lam_l".to_string(), "x".to_string()],
                kernel: a_kernel,
            },
            Mechanism {
                target: "b".to_string(),
                parents: vec!["lam_r".to_string(), "y".to_string()],
                kernel: b_kernel,
            },
        ],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// Two-wing layout where the right output reads the distant setting
/// directly through a random kernel, so cone-level signalling and broken
/// screening are both on the table.
pub fn distant_reader(rng: &mut SampleRng, name: &str) -> Model {
    let out_domain = vec!["1".to_string(), "-1".to_string()];
    let variables = vec![
        setting_input("x", labels(2), Some(Region::single(-2, 1))),
        setting_input("y", labels(2), Some(Region::single(2, 1))),
        hidden_input("u", labels(2), Some(Region::single(1, 0))),
        output("a", out_domain.clone(), Some(Region::single(-2, 2)), true),
        output("b", out_domain, Some(Region::single(2, 2)), true),
    ];

    let mut a_kernel = std::collections::BTreeMap::new();
    for u in 0..2usize {
        a_kernel.insert(vec![u], point(u));
    }
    let mut b_kernel = std::collections::BTreeMap::new();
    for u in 0..2usize {
        for xi in 0..2usize {
            for yi in 0..2usize {
                b_kernel.insert(vec![u, xi, yi], coin(0, 1, &mixed_prob(rng)));
            }
        }
    }
    // at yi = 0 the right wing echoes the distant setting outright, so the
    // dependence survives any averaging over u
    for u in 0..2usize {
        b_kernel.insert(vec![u, 0, 0], point(0));
        b_kernel.insert(vec![u, 1, 0], point(1));
    }

    let mut prior = Prior::default();
    let w = simplex(rng, 2);
    for xi in 0..2usize {
        for yi in 0..2usize {
            for u in 0..2usize {
                prior
                    .entries
                    .insert(vec![xi, yi, u], q(1, 4) * w[u].clone());
            }
        }
    }

    Model {
        name: name.to_string(),
        lattice: Some(bell_lattice()),
        variables,
        mechanisms: vec![
            Mechanism {
                target: "a".to_string(),
                parents: vec!["u".to_string()],
                kernel: a_kernel,
            },
            Mechanism {
                target: "b".to_string(),
                parents: vec!["u".to_string(), "x".to_string(), "y".to_string()],
                kernel: b_kernel,
            },
        ],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// Settings arrive after the outputs they steer, with a biased coin so the
/// dependence shows up in the statistics and cannot be marginalized away.
pub fn late_settings(rng: &mut SampleRng, name: &str) -> Model {
    let correlated = rng.gen_bool(0.5);
    late_settings_with(rng, name, correlated)
}

/// late_settings with independent hidden coins only. The future dependence
/// still shows in the statistics (biased coins under xor), but nothing ties
/// one wing's coin to the other wing or to a setting.
pub fn late_settings_independent(rng: &mut SampleRng, name: &str) -> Model {
    late_settings_with(rng, name, false)
}

fn late_settings_with(rng: &mut SampleRng, name: &str, correlated: bool) -> Model {
    let lattice = Lattice {
        x_min: -3,
        x_max: 3,
        t_min: 0,
        t_max: 3,
        c: 1,
        arrow: Arrow::Forward,
    };
    let variables = vec![
        setting_input("sx", labels(2), Some(Region::single(-2, 3))),
        setting_input("sy", labels(2), Some(Region::single(2, 3))),
        hidden_input("lam_l", labels(2), Some(Region::single(-1, 1))),
        hidden_input("lam_r", labels(2), Some(Region::single(1, 1))),
        output("a", labels(2), Some(Region::single(-2, 2)), true),
        output("b", labels(2), Some(Region::single(2, 2)), true),
    ];

    let xor_side = |rng: &mut SampleRng| {
        let mut k = std::collections::BTreeMap::new();
        for l in 0..2usize {
            for s in 0..2usize {
                k.insert(vec![l, s], point(l ^ s));
            }
        }
        let _ = rng;
        k
    };
    let and_side = || {
        let mut k = std::collections::BTreeMap::new();
        for l in 0..2usize {
            for s in 0..2usize {
                k.insert(vec![l, s], point(l & s));
            }
        }
        k
    };

    let (a_kernel, b_kernel) = if correlated {
        (and_side(), and_side())
    } else {
        (xor_side(rng), xor_side(rng))
    };

    let mut prior = Prior::default();
    if correlated {
        let diag = simplex(rng, 2);
        for xi in 0..2usize {
            for yi in 0..2usize {
                for v in 0..2usize {
                    prior
                        .entries
                        .insert(vec![xi, yi, v, v], q(1, 4) * diag[v].clone());
                }
            }
        }
    } else {
        use num::One;
        let wl = biased_prob(rng);
        let wr = biased_prob(rng);
        for xi in 0..2usize {
            for yi in 0..2usize {
                for l in 0..2usize {
                    for r in 0..2usize {
                        let pl = if l == 0 { wl.clone() } else { Q::one() - &wl };
                        let pr = if r == 0 { wr.clone() } else { Q::one() - &wr };
                        prior.entries.insert(vec![xi, yi, l, r], q(1, 4) * pl * pr);
                    }
                }
            }
        }
    }

    Model {
        name: name.to_string(),
        lattice: Some(lattice),
        variables,
        mechanisms: vec![
            Mechanism {
                target: "a".to_string(),
                parents: vec!["lam_l".to_string(), "sx".to_string()],
                kernel: a_kernel,
            },
            Mechanism {
                target: "b".to_string(),
                parents: vec!["lam_r".to_string(), "sy".to_string()],
                kernel: b_kernel,
            },
        ],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// No lattice at all, or a lattice without an arrow: exercises the
/// not-applicable paths of every located check.
pub fn structureless(rng: &mut SampleRng, name: &str) -> Model {
    let no_lattice = rng.gen_bool(0.5);
    let q_size = rng.gen_range(2..=4);
    let region = |x: i64, t: i64| {
        if no_lattice {
            None
        } else {
            Some(Region::single(x, t))
        }
    };
    let lattice = if no_lattice {
        None
    } else {
        Some(Lattice {
            x_min: -2,
            x_max: 2,
            t_min: 0,
            t_max: 2,
            c: 1,
            arrow: Arrow::None,
        })
    };

    let variables = vec![
        hidden_input("q", labels(q_size), region(0, 0)),
        Variable {
            name: "m".to_string(),
            domain: labels(2),
            kind: VarKind::Input,
            region: region(-1, 1),
            hidden: false,
            controllable: false,
            observable: true,
        },
        output("d", labels(2), region(1, 1), true),
    ];

    let mut kernel = std::collections::BTreeMap::new();
    for qi in 0..q_size {
        for mi in 0..2usize {
            let v = if rng.gen_bool(0.5) {
                (qi + mi) % 2
            } else {
                (qi / 2 + mi) % 2
            };
            kernel.insert(vec![qi, mi], point(v));
        }
    }

    let mut prior = Prior::default();
    let w = simplex(rng, q_size * 2);
    for qi in 0..q_size {
        for mi in 0..2usize {
            prior
                .entries
                .insert(vec![qi, mi], w[qi * 2 + mi].clone());
        }
    }

    Model {
        name: name.to_string(),
        lattice,
        variables,
        mechanisms: vec![Mechanism {
            target: "d".to_string(),
            parents: vec!["q".to_string(), "m".to_string()],
            kernel,
        }],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// One-column dynamics: a chain of single-parent deterministic steps,
/// bijective half the time (reversible) and merging otherwise.
pub fn chain(rng: &mut SampleRng, name: &str) -> Model {
    let n = rng.gen_range(2..=3);
    let bijective = rng.gen_bool(0.5);
    let lattice = Lattice {
        x_min: -1,
        x_max: 1,
        t_min: 0,
        t_max: 2,
        c: 1,
        arrow: Arrow::Forward,
    };
    let step = |rng: &mut SampleRng| -> Vec<usize> {
        if bijective {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            perm
        } else {
            // guaranteed merge: two domain values map to the same image
            let mut map: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            map[1] = map[0];
            map
        }
    };
    let s1 = step(rng);
    let s2 = step(rng);

    let variables = vec![
        if rng.gen_bool(0.5) {
            hidden_input("u", labels(n), Some(Region::single(0, 0)))
        } else {
            setting_input("u", labels(n), Some(Region::single(0, 0)))
        },
        output("o1", labels(n), Some(Region::single(0, 1)), true),
        output("o2", labels(n), Some(Region::single(0, 2)), true),
    ];

    let kernel_of = |map: &[usize]| {
        let mut k = std::collections::BTreeMap::new();
        for (i, &v) in map.iter().enumerate() {
            k.insert(vec![i], point(v));
        }
        k
    };

    let mut prior = Prior::default();
    let w = simplex(rng, n);
    for (i, wi) in w.iter().enumerate() {
        prior.entries.insert(vec![i], wi.clone());
    }

    Model {
        name: name.to_string(),
        lattice: Some(lattice),
        variables,
        mechanisms: vec![
            Mechanism {
                target: "o1".to_string(),
                parents: vec!["u".to_string()],
                kernel: kernel_of(&s1),
            },
            Mechanism {
                target: "o2".to_string(),
                parents: vec!["o1".to_string()],
                kernel: kernel_of(&s2),
            },
        ],
        constraints: Vec::new(),
        prior,
        decimal: false,
    }
}

/// A deterministic one-world account of a stochastic two-wing reference.
/// Each wing's coin is biased by its own setting through the prior, the two
/// wings stay independent of each other, and the outputs read their coin
/// off deterministically. Behavior matches the reference exactly while the
/// coins and the settings are statistically dependent.
pub fn wing_conspiracy_twin(rng: &mut SampleRng, name: &str, ref_name: &str) -> (Model, Model) {
    let coin_size = rng.gen_range(2..=3);
    // per-setting coin tables, forced to differ across the two setting values
    let wing_table = |rng: &mut SampleRng| -> Vec<Vec<Q>> {
        loop {
            let t: Vec<Vec<Q>> = (0..2).map(|_| simplex(rng, coin_size)).collect();
            if t[0] != t[1] {
                return t;
            }
        }
    };
    let cl = wing_table(rng);
    let cr = wing_table(rng);
    // deterministic readouts that hit both outcome values
    let readout = |rng: &mut SampleRng| -> Vec<usize> {
        loop {
            let f: Vec<usize> = (0..coin_size).map(|_| rng.gen_range(0..2usize)).collect();
            if f.iter().any(|&v| v != f[0]) {
                return f;
            }
        }
    };
    let fa = readout(rng);
    let fb = readout(rng);

    let out_domain = vec!["1".to_string(), "-1".to_string()];

    let subject = {
        let variables = vec![
            setting_input("x", labels(2), Some(Region::single(-2, 1))),
            setting_input("y", labels(2), Some(Region::single(2, 1))),
            hidden_input("lam_l", labels(coin_size), Some(Region::single(-1, 1))),
            hidden_input("lam_r", labels(coin_size), Some(Region::single(1, 1))),
            output("a", out_domain.clone(), Some(Region::single(-2, 2)), true),
            output("b", out_domain.clone(), Some(Region::single(2, 2)), true),
        ];
        let mut a_kernel = std::collections::BTreeMap::new();
        let mut b_kernel = std::collections::BTreeMap::new();
        for v in 0..coin_size {
            a_kernel.insert(vec![v], point(fa[v]));
            b_kernel.insert(vec![v], point(fb[v]));
        }
        let mut prior = Prior::default();
        for xi in 0..2usize {
            for yi in 0..2usize {
                for l in 0..coin_size {
                    for r in 0..coin_size {
                        let mass = q(1, 4) * cl[xi][l].clone() * cr[yi][r].clone();
                        prior.entries.insert(vec![xi, yi, l, r], mass);
                    }
                }
            }
        }
        Model {
            name: name.to_string(),
            lattice: Some(bell_lattice()),
            variables,
            mechanisms: vec![
                Mechanism {
                    target: "a".to_string(),
                    parents: vec!["lam_l".to_string()],
                    kernel: a_kernel,
                },
                Mechanism {
                    target: "b".to_string(),
                    parents: vec!["lam_r".to_string()],
                    kernel: b_kernel,
                },
            ],
            constraints: Vec::new(),
            prior,
            decimal: false,
        }
    };

    // reference: no coins at all, each wing answers its own setting with the
    // subject's readout marginal
    let reference = {
        use num::Zero;
        let marg = |table: &[Vec<Q>], f: &[usize], s: usize| -> Q {
            table[s]
                .iter()
                .zip(f)
                .filter(|(_, &fv)| fv == 0)
                .fold(Q::zero(), |acc, (w, _)| acc + w.clone())
        };
        let variables = vec![
            setting_input("x", labels(2), Some(Region::single(-2, 1))),
            setting_input("y", labels(2), Some(Region::single(2, 1))),
            output("a", out_domain.clone(), Some(Region::single(-2, 2)), true),
            output("b", out_domain, Some(Region::single(2, 2)), true),
        ];
        let mut a_kernel = std::collections::BTreeMap::new();
        let mut b_kernel = std::collections::BTreeMap::new();
        for s in 0..2usize {
            a_kernel.insert(vec![s], coin(0, 1, &marg(&cl, &fa, s)));
            b_kernel.insert(vec![s], coin(0, 1, &marg(&cr, &fb, s)));
        }
        let mut prior = Prior::default();
        for xi in 0..2usize {
            for yi in 0..2usize {
                prior.entries.insert(vec![xi, yi], q(1, 4));
            }
        }
        Model {
            name: ref_name.to_string(),
            lattice: Some(bell_lattice()),
            variables,
            mechanisms: vec![
                Mechanism {
                    target: "a".to_string(),
                    parents: vec!["x".to_string()],
                    kernel: a_kernel,
                },
                Mechanism {
                    target: "b".to_string(),
                    parents: vec!["y".to_string()],
                    kernel: b_kernel,
                },
            ],
            constraints: Vec::new(),
            prior,
            decimal: false,
        }
    };

    (subject, reference)
}

/// Copy of `base` with one extra hidden input nothing reads, its marginal
/// folded into the prior as an independent factor.
pub fn with_dead_input(rng: &mut SampleRng, base: &Model) -> Model {
    let mut m = base.clone();
    let size = rng.gen_range(2..=3);
    let region = m.lattice.as_ref().map(|lat| {
        let x = rng.gen_range(lat.x_min..=lat.x_max);
        let t = rng.gen_range(lat.t_min..=lat.t_max);
        Region::single(x, t)
    });
    m.variables
        .push(hidden_input("zz_spare", labels(size), region));
    let w = simplex(rng, size);
    let mut entries = std::collections::BTreeMap::new();
    if base.inputs().is_empty() {
        for (d, wd) in w.iter().enumerate() {
            entries.insert(vec![d], wd.clone());
        }
    } else {
        for (k, mass) in &m.prior.entries {
            for (d, wd) in w.iter().enumerate() {
                let mut key = k.clone();
                key.push(d);
                entries.insert(key, mass.clone() * wd.clone());
            }
        }
    }
    m.prior.entries = entries;
    m.name = format!("{}-spare", base.name);
    m
}

/// Unstructured small model: random kinds, random kernels over arbitrary
/// parents (cycles included), random constraints with partial weight
/// tables, random partial prior. The exercise target is the probability
/// engine itself, not any particular physics.
pub fn factor_model(rng: &mut SampleRng, name: &str) -> Model {
    let n_vars = rng.gen_range(2..=5);
    let with_lattice = rng.gen_bool(0.5);
    let lattice = if with_lattice {
        Some(Lattice {
            x_min: -2,
            x_max: 2,
            t_min: 0,
            t_max: 2,
            c: 1,
            arrow: if rng.gen_bool(0.8) {
                Arrow::Forward
            } else {
                Arrow::None
            },
        })
    } else {
        None
    };

    let mut variables = Vec::new();
    for i in 0..n_vars {
        let domain = labels(rng.gen_range(2..=3));
        let vname = format!("v{i}");
        let region = if with_lattice && rng.gen_bool(0.8) {
            Some(Region::single(rng.gen_range(-2..=2), rng.gen_range(0..=2)))
        } else {
            None
        };
        let is_input = i == 0 || rng.gen_bool(0.5);
        if is_input {
            let style = rng.gen_range(0..3);
            variables.push(Variable {
                name: vname,
                domain,
                kind: VarKind::Input,
                region,
                hidden: style == 0,
                controllable: style == 1,
                observable: style != 0,
            });
        } else {
            variables.push(output(&vname, domain, region, rng.gen_bool(0.8)));
        }
    }

    let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
    let sizes: Vec<usize> = variables.iter().map(|v| v.domain.len()).collect();

    let mut mechanisms = Vec::new();
    for (i, v) in variables.iter().enumerate() {
        if v.kind != VarKind::Output {
            continue;
        }
        let mut pool: Vec<usize> = (0..n_vars).filter(|&j| j != i).collect();
        pool.shuffle(rng);
        let n_parents = rng.gen_range(0..=2.min(pool.len()));
        let parents: Vec<usize> = pool[..n_parents].to_vec();
        let parent_sizes: Vec<usize> = parents.iter().map(|&j| sizes[j]).collect();
        let mut kernel = std::collections::BTreeMap::new();
        for row in tuples(&parent_sizes) {
            let dist = if rng.gen_bool(0.5) {
                point(rng.gen_range(0..sizes[i]))
            } else {
                simplex(rng, sizes[i])
                    .into_iter()
                    .enumerate()
                    .collect()
            };
            kernel.insert(row, dist);
        }
        mechanisms.push(Mechanism {
            target: names[i].clone(),
            parents: parents.iter().map(|&j| names[j].clone()).collect(),
            kernel,
        });
    }

    let mut constraints = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let mut pool: Vec<usize> = (0..n_vars).collect();
        pool.shuffle(rng);
        let scope_n = rng.gen_range(1..=2.min(n_vars));
        let scope: Vec<usize> = pool[..scope_n].to_vec();
        let scope_sizes: Vec<usize> = scope.iter().map(|&j| sizes[j]).collect();
        let mut weights = std::collections::BTreeMap::new();
        for row in tuples(&scope_sizes) {
            // leave some rows out: unlisted tuples weigh zero
            if rng.gen_bool(0.8) {
                weights.insert(row, q(rng.gen_range(1..=4), rng.gen_range(1..=4)));
            }
        }
        constraints.push(Constraint {
            scope: scope.iter().map(|&j| names[j].clone()).collect(),
            weights,
        });
    }

    let input_sizes: Vec<usize> = variables
        .iter()
        .filter(|v| v.kind == VarKind::Input)
        .map(|v| v.domain.len())
        .collect();
    let mut prior = Prior::default();
    if !input_sizes.is_empty() {
        let all = tuples(&input_sizes);
        let keep: Vec<Vec<usize>> = all
            .into_iter()
            .filter(|_| rng.gen_bool(0.7))
            .collect();
        let keep = if keep.is_empty() {
            vec![vec![0; input_sizes.len()]]
        } else {
            keep
        };
        let w = simplex(rng, keep.len());
        for (k, mass) in keep.into_iter().zip(w) {
            prior.entries.insert(k, mass);
        }
    }

    Model {
        name: name.to_string(),
        lattice,
        variables,
        mechanisms,
        constraints,
        prior,
        decimal: false,
    }
}

/// A model drawn from across the structured families, for suites that want
/// broad coverage rather than one regime.
pub fn any_structured(rng: &mut SampleRng, index: usize) -> Model {
    let name = format!("rand-{index}");
    let base = match rng.gen_range(0..6) {
        0 => masked_lhv(rng, &name),
        1 => local_response(rng, &name),
        2 => distant_reader(rng, &name),
        3 => late_settings(rng, &name),
        4 => structureless(rng, &name),
        _ => chain(rng, &name),
    };
    base
}

/// The rotation used by the property-implication suite. Hidden wings stay
/// independent (or are masked by uniform settings) in every family here:
/// a cross-wing correlated coin pair makes plain screening fail on shells
/// whose surface carries no inputs, while the overlap rule exempts strong
/// screening from those same comparisons, and the implication between the
/// two is deliberately exercised only where it holds by construction. The
/// corpus keeps the correlated layouts that separate the two checks.
pub fn implication_model(rng: &mut SampleRng, index: usize) -> Model {
    let name = format!("imp-{index}");
    match index % 6 {
        0 => masked_lhv(rng, &name),
        1 => local_response_product(rng, &name),
        2 => distant_reader(rng, &name),
        3 => late_settings_independent(rng, &name),
        4 => structureless(rng, &name),
        _ => chain(rng, &name),
    }
}
