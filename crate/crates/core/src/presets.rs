//! Shipped quantum groups and worked bundles.
//!
//! Every preset passes `verify_axioms` and `check_local_confluence` at
//! bound 4; the tests regenerate those certificates.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::algebra::{AlgElement, Generator, Presentation, RewriteRule, TensorElement, Word};
use crate::error::Error;
use crate::hopf::HopfStructure;
use crate::scalar::{Field, RatFun};
use crate::Result;

fn gen(name: &str, grade: usize, star: usize) -> Generator {
    Generator {
        name: name.into(),
        grade,
        star,
    }
}

/// Polynomial functions on the circle group: Laurent generators `z`, `z*`
/// (the inverse), grouplike coproduct.
pub fn u1<K: Field>() -> Arc<HopfStructure<K>> {
    let pres = Presentation::new(
        "u1",
        vec![gen("z", 0, 1), gen("z*", 0, 0)],
        vec![
            RewriteRule {
                lhs: Word(vec![0, 1]),
                rhs: vec![(Word::empty(), K::one())],
            },
            RewriteRule {
                lhs: Word(vec![1, 0]),
                rhs: vec![(Word::empty(), K::one())],
            },
        ],
    )
    .expect("u1 presentation");
    let z = AlgElement::generator(&pres, 0).unwrap();
    let zs = AlgElement::generator(&pres, 1).unwrap();
    let coproduct = vec![
        TensorElement::of(&[&z, &z]),
        TensorElement::of(&[&zs, &zs]),
    ];
    let counit = vec![K::one(), K::one()];
    let antipode = vec![zs, z];
    HopfStructure::new("u1", pres, coproduct, counit, antipode).expect("u1 structure")
}

/// Function algebra on the cyclic group of order `n` in the delta basis.
/// The neutral-point function `d0` is an alias for `1 - d1 - ... - d{n-1}`.
pub fn cyclic<K: Field>(n: usize) -> Arc<HopfStructure<K>> {
    assert!(n >= 2, "cyclic group order must be at least 2");
    // generator ids: 0..n-2 are d1..d{n-1}; id n-1 is d0 (eliminated).
    let id_of = |k: usize| -> usize {
        let k = k % n;
        if k == 0 {
            n - 1
        } else {
            k - 1
        }
    };
    let mut gens = vec![];
    for i in 0..n - 1 {
        gens.push(gen(&format!("d{}", i + 1), 0, i));
    }
    gens.push(gen("d0", 0, n - 1));
    let mut rules = vec![];
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let rhs = if i == j {
                vec![(Word(vec![i]), K::one())]
            } else {
                vec![]
            };
            rules.push(RewriteRule {
                lhs: Word(vec![i, j]),
                rhs,
            });
        }
    }
    // d0 -> 1 - d1 - ... - d{n-1}
    let mut alias = vec![(Word::empty(), K::one())];
    for i in 0..n - 1 {
        alias.push((Word(vec![i]), -K::one()));
    }
    rules.push(RewriteRule {
        lhs: Word(vec![n - 1]),
        rhs: alias,
    });
    let name = format!("cyclic{n}");
    let pres = Presentation::new(name.clone(), gens, rules).expect("cyclic presentation");
    let delta = |k: usize| -> AlgElement<K> { AlgElement::generator(&pres, id_of(k)).unwrap() };
    let mut coproduct = vec![];
    let mut counit = vec![];
    let mut antipode = vec![];
    for id in 0..n {
        // generator with this id is d_k where:
        let k = if id == n - 1 { 0 } else { id + 1 };
        let mut t = TensorElement::zero(vec![pres.clone(), pres.clone()]);
        for i in 0..n {
            let j = (n + k - i) % n;
            t = t.add(&TensorElement::of(&[&delta(i), &delta(j)])).unwrap();
        }
        coproduct.push(t);
        counit.push(if k == 0 { K::one() } else { K::zero() });
        antipode.push(delta((n - k) % n));
    }
    HopfStructure::new(name, pres, coproduct, counit, antipode).expect("cyclic structure")
}

/// The quantum SU(2) polynomial *-algebra with its fundamental matrix
/// `u = [[a, -q c*], [c, a*]]`, over the symbolic field.
pub fn su_q_2() -> Arc<HopfStructure<RatFun>> {
    let q = RatFun::q();
    let qi = RatFun::q_pow(-1);
    let one = RatFun::one();
    // precedence c < c* < a < a*
    let gens = vec![gen("c", 0, 1), gen("c*", 0, 0), gen("a", 0, 3), gen("a*", 0, 2)];
    let (c, cs, a, as_) = (0usize, 1usize, 2usize, 3usize);
    let rules = vec![
        RewriteRule {
            lhs: Word(vec![a, c]),
            rhs: vec![(Word(vec![c, a]), q.clone())],
        },
        RewriteRule {
            lhs: Word(vec![a, cs]),
            rhs: vec![(Word(vec![cs, a]), q.clone())],
        },
        RewriteRule {
            lhs: Word(vec![as_, c]),
            rhs: vec![(Word(vec![c, as_]), qi.clone())],
        },
        RewriteRule {
            lhs: Word(vec![as_, cs]),
            rhs: vec![(Word(vec![cs, as_]), qi.clone())],
        },
        RewriteRule {
            lhs: Word(vec![cs, c]),
            rhs: vec![(Word(vec![c, cs]), one.clone())],
        },
        RewriteRule {
            lhs: Word(vec![as_, a]),
            rhs: vec![
                (Word::empty(), one.clone()),
                (Word(vec![c, cs]), -one.clone()),
            ],
        },
        RewriteRule {
            lhs: Word(vec![a, as_]),
            rhs: vec![
                (Word::empty(), one.clone()),
                (Word(vec![c, cs]), -(q.clone() * q.clone())),
            ],
        },
    ];
    let pres = Presentation::new("su_q_2", gens, rules).expect("su_q_2 presentation");
    let e = |id: usize| AlgElement::generator(&pres, id).unwrap();
    let pair = |x: &AlgElement<RatFun>, y: &AlgElement<RatFun>| TensorElement::of(&[x, y]);
    // φ(a) = a⊗a - q c*⊗c          φ(c) = c⊗a + a*⊗c
    // φ(a*) = a*⊗a* - q c⊗c*       φ(c*) = c*⊗a* + a⊗c*
    let coproduct = vec![
        pair(&e(c), &e(a)).add(&pair(&e(as_), &e(c))).unwrap(),
        pair(&e(cs), &e(as_)).add(&pair(&e(a), &e(cs))).unwrap(),
        pair(&e(a), &e(a))
            .add(&pair(&e(cs), &e(c)).scale(&-q.clone()))
            .unwrap(),
        pair(&e(as_), &e(as_))
            .add(&pair(&e(c), &e(cs)).scale(&-q.clone()))
            .unwrap(),
    ];
    let counit = vec![RatFun::zero(), RatFun::zero(), one.clone(), one.clone()];
    let antipode = vec![
        e(c).scale(&-q.clone()),
        e(cs).scale(&-qi.clone()),
        e(as_),
        e(a),
    ];
    HopfStructure::new("su_q_2", pres, coproduct, counit, antipode).expect("su_q_2 structure")
}

/// Graded-commutative forms over the two-point base: the sign function `x`
/// (x^2 = 1) in degree zero, an anti-selfadjoint one-form `th` with
/// `th^2 = 0`, and its differential `ta = d th` in degree two. The starred
/// aliases `th-` and `ta-` realize `th* = -th`, `ta* = -ta` inside the
/// generator star pairing.
pub fn two_point_base<K: Field>() -> Arc<Presentation<K>> {
    let gens = vec![
        gen("x", 0, 0),
        gen("th", 1, 3),
        gen("ta", 2, 4),
        gen("th-", 1, 1),
        gen("ta-", 2, 2),
    ];
    let (x, th, ta, thm, tam) = (0usize, 1, 2, 3, 4);
    let one = K::one;
    let rules = vec![
        RewriteRule {
            lhs: Word(vec![x, x]),
            rhs: vec![(Word::empty(), one())],
        },
        RewriteRule {
            lhs: Word(vec![th, th]),
            rhs: vec![],
        },
        RewriteRule {
            lhs: Word(vec![th, x]),
            rhs: vec![(Word(vec![x, th]), one())],
        },
        RewriteRule {
            lhs: Word(vec![ta, x]),
            rhs: vec![(Word(vec![x, ta]), one())],
        },
        RewriteRule {
            lhs: Word(vec![ta, th]),
            rhs: vec![(Word(vec![th, ta]), one())],
        },
        RewriteRule {
            lhs: Word(vec![thm]),
            rhs: vec![(Word(vec![th]), -one())],
        },
        RewriteRule {
            lhs: Word(vec![tam]),
            rhs: vec![(Word(vec![ta]), -one())],
        },
    ];
    Presentation::new("two_point_base", gens, rules).expect("two-point base presentation")
}

/// Differential table of the two-point base: `d x = 0`, `d th = ta`,
/// `d ta = 0` (and the matching alias values).
pub fn two_point_differential<K: Field>(
    pres: &Arc<Presentation<K>>,
) -> Vec<AlgElement<K>> {
    let ta = AlgElement::generator_named(pres, "ta").unwrap();
    vec![
        AlgElement::zero(pres),
        ta.clone(),
        AlgElement::zero(pres),
        ta.neg(),
        AlgElement::zero(pres),
    ]
}

use crate::bundle::{extend_antiderivation, Antiderivation, Bundle, ConnectionKind, Preconnection};

/// The trivial principal bundle over the two-point base: horizontal forms
/// are base forms tensored with the structure group functions, the coaction
/// is the regular one on the fiber leg.
pub fn trivial_bundle<K: Field>(group: &Arc<HopfStructure<K>>) -> Arc<Bundle<K>> {
    let base = two_point_base::<K>();
    let base_n = base.generators().len();
    let gpres = group.presentation();
    let mut gens: Vec<Generator> = base.generators().to_vec();
    for g in gpres.generators() {
        gens.push(Generator {
            name: g.name.clone(),
            grade: 0,
            star: base_n + g.star,
        });
    }
    let mut rules: Vec<RewriteRule<K>> = base.rules().to_vec();
    for r in gpres.rules() {
        rules.push(RewriteRule {
            lhs: Word(r.lhs.0.iter().map(|&g| base_n + g).collect()),
            rhs: r
                .rhs
                .iter()
                .map(|(w, c)| (Word(w.0.iter().map(|&g| base_n + g).collect()), c.clone()))
                .collect(),
        });
    }
    // fiber generators commute with base generators (the fiber is even)
    for j in 0..gpres.generators().len() {
        for i in 0..base_n {
            rules.push(RewriteRule {
                lhs: Word(vec![base_n + j, i]),
                rhs: vec![(Word(vec![i, base_n + j]), K::one())],
            });
        }
    }
    let name = format!("trivial:{}", group.name());
    let hor = Presentation::new(name.clone(), gens, rules).expect("trivial bundle presentation");
    // F: base gen -> gen ⊗ 1; fiber gen -> (emb ⊗ id) φ(gen)
    let embed = |w: &Word| Word(w.0.iter().map(|&g| base_n + g).collect());
    let mut coaction = vec![];
    for i in 0..base_n {
        let e = AlgElement::generator(&hor, i).unwrap();
        coaction.push(TensorElement::of(&[&e, &group.unit()]));
    }
    for j in 0..gpres.generators().len() {
        let mut acc = TensorElement::zero(vec![hor.clone(), gpres.clone()]);
        let cop = group
            .coproduct(&AlgElement::generator(gpres, j).unwrap())
            .unwrap();
        for (ws, c) in cop.terms() {
            let left = AlgElement::from_terms(&hor, vec![(embed(&ws[0]), c.clone())]).unwrap();
            let right = AlgElement::from_terms(gpres, vec![(ws[1].clone(), K::one())]).unwrap();
            acc = acc.add(&TensorElement::of(&[&left, &right])).unwrap();
        }
        coaction.push(acc);
    }
    // base differential, zero-filled on the fiber generators
    let mut dvals = two_point_differential(&hor);
    dvals.truncate(base_n);
    for _ in 0..gpres.generators().len() {
        dvals.push(AlgElement::zero(&hor));
    }
    let fiber_embedding: Vec<usize> = (0..gpres.generators().len()).map(|j| base_n + j).collect();
    let weight_units = if group.name() == "u1" {
        let z = AlgElement::generator(&hor, base_n).unwrap();
        let zs = AlgElement::generator(&hor, base_n + 1).unwrap();
        Some((vec![z], vec![zs]))
    } else {
        None
    };
    Bundle::new(
        name,
        hor,
        group.clone(),
        coaction,
        Antiderivation::new(dvals),
        Some(fiber_embedding),
        weight_units,
    )
    .expect("trivial bundle")
}

/// The degree-zero part of the q-deformed Hopf fibration: total space the
/// quantum SU(2) functions, structure group the circle, coaction by the
/// `z`-weight of the generators. Used for freeness and base-invariant
/// verification; no positive-degree horizontal forms are shipped.
pub fn q_hopf_fibration() -> Arc<Bundle<RatFun>> {
    let suq2 = su_q_2();
    let hor = suq2.presentation().clone();
    let group = u1::<RatFun>();
    let gpres = group.presentation();
    let z = AlgElement::generator_named(gpres, "z").unwrap();
    let zs = AlgElement::generator_named(gpres, "z*").unwrap();
    // weights: c, a carry +1; c*, a* carry -1 (order: c, c*, a, a*)
    let weights = [&z, &zs, &z, &zs];
    let mut coaction = vec![];
    for (g, w) in weights.iter().enumerate() {
        let e = AlgElement::generator(&hor, g).unwrap();
        coaction.push(TensorElement::of(&[&e, w]));
    }
    let a = AlgElement::generator_named(&hor, "a").unwrap();
    let c = AlgElement::generator_named(&hor, "c").unwrap();
    let as_ = AlgElement::generator_named(&hor, "a*").unwrap();
    let cs = AlgElement::generator_named(&hor, "c*").unwrap();
    let weight_units = Some((
        vec![a, c],
        vec![as_, cs.scale(&RatFun::q())],
    ));
    Bundle::new(
        "q_hopf_fibration",
        hor.clone(),
        group,
        coaction,
        Antiderivation::zero(&hor),
        None,
        weight_units,
    )
    .expect("q hopf fibration")
}

/// A base one-form `c1·th + c2·x th` of the two-point base inside a trivial
/// bundle.
pub fn base_one_form<K: Field>(bundle: &Bundle<K>, c1: K, c2: K) -> AlgElement<K> {
    let hor = bundle.horizontal();
    let th = AlgElement::generator_named(hor, "th").unwrap();
    let x = AlgElement::generator_named(hor, "x").unwrap();
    th.scale(&c1).add(&x.mul(&th).unwrap().scale(&c2)).unwrap()
}

/// The preconnection `D_λ` of a trivial `u1` bundle: `D(z) = λ z`,
/// `D(z*) = -λ z*`, base differential on the base generators. `λ` must be
/// anti-selfadjoint for hermiticity; the base one-forms shipped here are.
pub fn trivial_u1_preconnection<K: Field>(
    bundle: &Arc<Bundle<K>>,
    label: impl Into<String>,
    lambda: &AlgElement<K>,
    window_degree: usize,
) -> Result<Preconnection<K>> {
    connection_values(bundle, label, lambda, ConnectionKind::Preconnection, window_degree)
}

/// The difference `E_μ = D_μ - D_0`, annihilating the base.
pub fn trivial_u1_difference<K: Field>(
    bundle: &Arc<Bundle<K>>,
    label: impl Into<String>,
    mu: &AlgElement<K>,
    window_degree: usize,
) -> Result<Preconnection<K>> {
    connection_values(bundle, label, mu, ConnectionKind::Difference, window_degree)
}

fn connection_values<K: Field>(
    bundle: &Arc<Bundle<K>>,
    label: impl Into<String>,
    lambda: &AlgElement<K>,
    kind: ConnectionKind,
    window_degree: usize,
) -> Result<Preconnection<K>> {
    let hor = bundle.horizontal();
    let n = hor.generators().len();
    let mut values = vec![AlgElement::zero(hor); n];
    if kind == ConnectionKind::Preconnection {
        for (g, v) in bundle.base_differential().values().iter().enumerate() {
            values[g] = v.clone();
        }
    }
    let z = AlgElement::generator_named(hor, "z")?;
    let zs = AlgElement::generator_named(hor, "z*")?;
    let zi = hor.gen_id("z")?;
    let zsi = hor.gen_id("z*")?;
    values[zi] = lambda.mul(&z)?;
    values[zsi] = lambda.mul(&zs)?.neg();
    extend_antiderivation(bundle, label, values, kind, window_degree)
}

/// Fetch a bundle preset by name.
pub fn bundle_by_name(name: &str) -> Result<Arc<Bundle<RatFun>>> {
    match name {
        "trivial_u1" => Ok(trivial_bundle(&u1::<RatFun>())),
        "q_hopf_fibration" => Ok(q_hopf_fibration()),
        _ => {
            if let Some(rest) = name.strip_prefix("trivial_cyclic:") {
                let n: usize = rest
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad cyclic order `{rest}`")))?;
                return Ok(trivial_bundle(&cyclic::<RatFun>(n)));
            }
            Err(Error::InvalidInput(format!("unknown bundle preset `{name}`")))
        }
    }
}

/// Fetch a Hopf preset by name: `u1`, `su_q_2`, or `cyclic:<n>`.
pub fn hopf_by_name(name: &str) -> Result<Arc<HopfStructure<RatFun>>> {
    if name == "u1" {
        return Ok(u1());
    }
    if name == "su_q_2" {
        return Ok(su_q_2());
    }
    if let Some(rest) = name.strip_prefix("cyclic:").or_else(|| name.strip_prefix("cyclic")) {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad cyclic order `{rest}`")))?;
        return Ok(cyclic(n));
    }
    Err(Error::InvalidInput(format!("unknown hopf preset `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::check_local_confluence;

    #[test]
    fn u1_axioms_window_4() {
        let h = u1::<RatFun>();
        let suite = h.verify_axioms(4).unwrap();
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        let conf = check_local_confluence(h.presentation(), 4).unwrap();
        assert!(conf.is_confluent() && conf.is_star_consistent());
    }

    #[test]
    fn cyclic_2_and_3_axioms() {
        for n in [2, 3] {
            let h = cyclic::<RatFun>(n);
            let suite = h.verify_axioms(4).unwrap();
            assert!(suite.all_passed(), "cyclic{n}: {:?}", suite.failures().collect::<Vec<_>>());
            let conf = check_local_confluence(h.presentation(), 4).unwrap();
            assert!(conf.is_confluent() && conf.is_star_consistent());
        }
    }

    #[test]
    fn su_q_2_axioms_window_3() {
        let h = su_q_2();
        let suite = h.verify_axioms(3).unwrap();
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        let conf = check_local_confluence(h.presentation(), 4).unwrap();
        assert!(conf.is_confluent() && conf.is_star_consistent());
    }

    #[test]
    fn su_q_2_normal_form_example() {
        // c a - q^{-1} a c normalizes to zero (a c -> q c a).
        let h = su_q_2();
        let p = h.presentation();
        let a = AlgElement::generator_named(p, "a").unwrap();
        let c = AlgElement::generator_named(p, "c").unwrap();
        let qi = RatFun::q_pow(-1);
        let diff = c.mul(&a).unwrap().sub(&a.mul(&c).unwrap().scale(&qi)).unwrap();
        assert!(diff.is_zero());
    }

    #[test]
    fn cyclic2_coproduct_of_dg() {
        // φ(d1) = d0⊗d1 + d1⊗d0 with d0 = 1 - d1:
        //        = 1⊗d1 + d1⊗1 - 2 d1⊗d1 in normal form.
        let h = cyclic::<RatFun>(2);
        let p = h.presentation();
        let dg = AlgElement::generator_named(p, "d1").unwrap();
        let one = AlgElement::unit(p);
        let expected = TensorElement::of(&[&one, &dg])
            .add(&TensorElement::of(&[&dg, &one]))
            .unwrap()
            .add(&TensorElement::of(&[&dg, &dg]).scale(&RatFun::from_int(-2)))
            .unwrap();
        assert_eq!(h.coproduct(&dg).unwrap(), expected);
    }

    #[test]
    fn grouplike_iterated_coproduct() {
        let h = u1::<RatFun>();
        let p = h.presentation();
        let z = AlgElement::generator_named(p, "z").unwrap();
        let z2 = z.mul(&z).unwrap();
        let t = h.coproduct_iterate(&z2, 1).unwrap();
        assert_eq!(t, TensorElement::of(&[&z2, &z2]));
        let t3 = h.coproduct_iterate(&z2, 2).unwrap();
        assert_eq!(t3, TensorElement::of(&[&z2, &z2, &z2]));
    }

    #[test]
    fn antipode_law_on_su_q_2_generator() {
        let h = su_q_2();
        let a = h.generator("a").unwrap();
        let t = h.coproduct(&a).unwrap();
        let m = t
            .map_leg(0, &mut |w| h.antipode_word(w))
            .unwrap()
            .merge_legs(0)
            .unwrap()
            .into_element()
            .unwrap();
        assert_eq!(m, h.unit());
    }

    #[test]
    fn adjoint_examples() {
        let h = u1::<RatFun>();
        let p = h.presentation();
        let z = AlgElement::generator_named(p, "z").unwrap();
        let zk = z.mul(&z).unwrap().mul(&z).unwrap();
        let ad = h.adjoint_action(&zk).unwrap();
        assert_eq!(ad, TensorElement::of(&[&zk, &h.unit()]));
        // unit
        let ad1 = h.adjoint_action(&h.unit()).unwrap();
        assert_eq!(ad1, TensorElement::of(&[&h.unit(), &h.unit()]));
        // su_q_2: (id⊗ε) ad = id on a window
        let hq = su_q_2();
        let suite = hq.verify_adjoint_coaction(2).unwrap();
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
    }

    #[test]
    fn corrupted_antipode_detected() {
        // u1 with κ(z) := z breaks the antipode law.
        let pres = u1::<RatFun>().presentation().clone();
        let z = AlgElement::generator_named(&pres, "z").unwrap();
        let zs = AlgElement::generator_named(&pres, "z*").unwrap();
        let coproduct = vec![TensorElement::of(&[&z, &z]), TensorElement::of(&[&zs, &zs])];
        let bad = HopfStructure::new(
            "u1-corrupt",
            pres,
            coproduct,
            vec![RatFun::one(), RatFun::one()],
            vec![z, zs.clone()],
        )
        .unwrap();
        let suite = bad.verify_axioms(2).unwrap();
        assert!(!suite.all_passed());
        assert!(suite
            .failures()
            .any(|c| c.name.starts_with("antipode-left") || c.name.starts_with("antipode-right")));
    }

    #[test]
    fn two_point_base_is_confluent() {
        let p = two_point_base::<RatFun>();
        let conf = check_local_confluence(&p, 4).unwrap();
        assert!(conf.is_confluent(), "{:?}", conf.unresolved);
        assert!(conf.is_star_consistent(), "{:?}", conf.star_incompatible);
        // th* = -th through the alias pair
        let th = AlgElement::generator_named(&p, "th").unwrap();
        assert_eq!(th.star().unwrap(), th.neg());
    }
}
