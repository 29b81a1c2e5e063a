//! Hopf *-algebra structure maps on presented algebras.
//!
//! A [`HopfStructure`] stores the coproduct, counit and antipode on
//! generators and extends them: the coproduct and counit multiplicatively,
//! the antipode antimultiplicatively. Nothing is assumed — the axioms are
//! validated by [`HopfStructure::verify_axioms`] over a degree window, and
//! the preset constructors run that gate in their tests.

use std::sync::Arc;

use crate::algebra::{AlgElement, Presentation, TensorElement, Word};
use crate::error::Error;
use crate::report::Suite;
use crate::scalar::Field;
use crate::Result;

/// A presented algebra together with Hopf structure tables.
#[derive(Debug, Clone)]
pub struct HopfStructure<K> {
    name: String,
    pres: Arc<Presentation<K>>,
    coproduct: Vec<TensorElement<K>>,
    counit: Vec<K>,
    antipode: Vec<AlgElement<K>>,
}

impl<K: Field> HopfStructure<K> {
    pub fn new(
        name: impl Into<String>,
        pres: Arc<Presentation<K>>,
        coproduct: Vec<TensorElement<K>>,
        counit: Vec<K>,
        antipode: Vec<AlgElement<K>>,
    ) -> Result<Arc<Self>> {
        let n = pres.generators().len();
        if coproduct.len() != n || counit.len() != n || antipode.len() != n {
            return Err(Error::InvalidInput(
                "structure tables must cover every generator".into(),
            ));
        }
        for t in &coproduct {
            if t.degree() != 2 {
                return Err(Error::DegreeMismatch(t.degree(), 2));
            }
        }
        Ok(Arc::new(HopfStructure {
            name: name.into(),
            pres,
            coproduct,
            counit,
            antipode,
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn presentation(&self) -> &Arc<Presentation<K>> {
        &self.pres
    }

    pub fn unit(&self) -> AlgElement<K> {
        AlgElement::unit(&self.pres)
    }

    pub fn generator(&self, name: &str) -> Result<AlgElement<K>> {
        AlgElement::generator_named(&self.pres, name)
    }

    /// Coproduct of a single word: the pointwise product of the generator
    /// tables in `A ⊗ A`.
    pub fn coproduct_word(&self, w: &Word) -> Result<TensorElement<K>> {
        let mut acc = TensorElement::unit(vec![self.pres.clone(), self.pres.clone()]);
        for &g in &w.0 {
            acc = acc.mul_pointwise(&self.coproduct[g])?;
        }
        Ok(acc)
    }

    pub fn coproduct(&self, e: &AlgElement<K>) -> Result<TensorElement<K>> {
        let mut acc = TensorElement::zero(vec![self.pres.clone(), self.pres.clone()]);
        for (w, c) in e.terms() {
            acc = acc.add(&self.coproduct_word(w)?.scale(c))?;
        }
        Ok(acc)
    }

    /// The `n`-fold iterated coproduct, a degree-`n+1` tensor. Coassociativity
    /// makes the expansion order irrelevant; the rightmost leg is expanded
    /// each time.
    pub fn coproduct_iterate(&self, e: &AlgElement<K>, n: usize) -> Result<TensorElement<K>> {
        assert!(n >= 1, "iteration count must be at least 1");
        let mut t = self.coproduct(e)?;
        for k in 2..=n {
            t = t.expand_leg(k - 1, &mut |w| self.coproduct_word(w))?;
        }
        Ok(t)
    }

    pub fn counit_word(&self, w: &Word) -> K {
        let mut acc = K::one();
        for &g in &w.0 {
            acc = acc * self.counit[g].clone();
        }
        acc
    }

    pub fn counit(&self, e: &AlgElement<K>) -> K {
        let mut acc = K::zero();
        for (w, c) in e.terms() {
            acc = acc + c.clone() * self.counit_word(w);
        }
        acc
    }

    /// Antipode on a word: antimultiplicative extension of the table.
    pub fn antipode_word(&self, w: &Word) -> Result<AlgElement<K>> {
        let mut acc = AlgElement::unit(&self.pres);
        for &g in w.0.iter().rev() {
            acc = acc.mul(&self.antipode[g])?;
        }
        Ok(acc)
    }

    pub fn antipode(&self, e: &AlgElement<K>) -> Result<AlgElement<K>> {
        let mut acc = AlgElement::zero(&self.pres);
        for (w, c) in e.terms() {
            acc = acc.add(&self.antipode_word(w)?.scale(c))?;
        }
        Ok(acc)
    }

    /// The adjoint action `ad(a) = a^(2) ⊗ κ(a^(1)) a^(3)`, a right coaction
    /// of the algebra on itself.
    pub fn adjoint_action(&self, e: &AlgElement<K>) -> Result<TensorElement<K>> {
        let t3 = self.coproduct_iterate(e, 2)?;
        let t3 = t3.map_leg(0, &mut |w| self.antipode_word(w))?;
        // legs now (κ(a1), a2, a3); reorder to (a2, κ(a1), a3) and merge.
        let t3 = t3.permute_legs(&[1, 0, 2])?;
        t3.merge_legs(1)
    }

    /// `ker ε` representative `a - ε(a)·1`.
    pub fn kernel_part(&self, e: &AlgElement<K>) -> Result<AlgElement<K>> {
        let eps = self.counit(e);
        e.sub(&self.unit().scale(&eps))
    }

    /// Exhaustive window verification of the Hopf *-algebra axioms:
    /// coassociativity, both counit laws, both antipode laws, and the
    /// star compatibilities of coproduct and antipode.
    pub fn verify_axioms(&self, window_degree: usize) -> Result<Suite> {
        let mut suite = Suite::new(format!("hopf-axioms:{}", self.name));
        // Structure maps must be well-defined on the relations first.
        for rule in self.pres.rules() {
            let lhs = AlgElement::from_terms(&self.pres, vec![(rule.lhs.clone(), K::one())])?;
            let rhs = AlgElement::from_terms(&self.pres, rule.rhs.clone())?;
            let label = self.pres.display_word(&rule.lhs);
            // Coproduct respects the relation: tables applied to the raw lhs
            // word agree with the coproduct of its normal form.
            let direct = self.coproduct_word(&rule.lhs)?;
            let via_nf = self.coproduct(&rhs)?;
            suite.check(
                format!("coproduct-respects-relation[{label}]"),
                direct == via_nf,
                || format!("{} vs {}", direct, via_nf),
            );
            let eps_l = self.counit_word(&rule.lhs);
            let eps_r = self.counit(&rhs);
            suite.check(
                format!("counit-respects-relation[{label}]"),
                eps_l == eps_r,
                || format!("{eps_l} vs {eps_r}"),
            );
            let kap_l = self.antipode_word(&rule.lhs)?;
            let kap_r = self.antipode(&rhs)?;
            suite.check(
                format!("antipode-respects-relation[{label}]"),
                kap_l == kap_r,
                || format!("{kap_l} vs {kap_r}"),
            );
            let _ = lhs;
        }
        let words = self.pres.normal_words(window_degree);
        for w in &words {
            let label = self.pres.display_word(w);
            let e = AlgElement::from_terms(&self.pres, vec![(w.clone(), K::one())])?;
            let t = self.coproduct(&e)?;
            // (φ ⊗ id)φ = (id ⊗ φ)φ
            let left = t.expand_leg(0, &mut |w| self.coproduct_word(w))?;
            let right = t.expand_leg(1, &mut |w| self.coproduct_word(w))?;
            suite.check(
                format!("coassociativity[{label}]"),
                left == right,
                || format!("{left} vs {right}"),
            );
            // (ε ⊗ id)φ = id = (id ⊗ ε)φ
            let l = t.contract_leg(0, &mut |w| Ok(self.counit_word(w)))?.into_element()?;
            let r = t.contract_leg(1, &mut |w| Ok(self.counit_word(w)))?.into_element()?;
            suite.check(format!("counit-left[{label}]"), l == e, || format!("{l}"));
            suite.check(format!("counit-right[{label}]"), r == e, || format!("{r}"));
            // m(κ ⊗ id)φ = ε(·)1 = m(id ⊗ κ)φ
            let target = self.unit().scale(&self.counit(&e));
            let ka = t
                .map_leg(0, &mut |w| self.antipode_word(w))?
                .merge_legs(0)?
                .into_element()?;
            let kb = t
                .map_leg(1, &mut |w| self.antipode_word(w))?
                .merge_legs(0)?
                .into_element()?;
            suite.check(format!("antipode-left[{label}]"), ka == target, || format!("{ka}"));
            suite.check(format!("antipode-right[{label}]"), kb == target, || format!("{kb}"));
            // φ(a*) = φ(a)^{* ⊗ *}
            let fs = self.coproduct(&e.star()?)?;
            let sf = t.star_pointwise()?;
            suite.check(
                format!("coproduct-star[{label}]"),
                fs == sf,
                || format!("{fs} vs {sf}"),
            );
            // κ(κ(a)*)* = a
            let roundtrip = self.antipode(&self.antipode(&e)?.star()?)?.star()?;
            suite.check(
                format!("antipode-star-involution[{label}]"),
                roundtrip == e,
                || format!("{roundtrip}"),
            );
        }
        Ok(suite)
    }

    /// Coaction laws of the adjoint action, checked exhaustively on the
    /// window: `(id ⊗ ε) ad = id` and `(ad ⊗ id) ad = (id ⊗ φ) ad`.
    pub fn verify_adjoint_coaction(&self, window_degree: usize) -> Result<Suite> {
        let mut suite = Suite::new(format!("adjoint-coaction:{}", self.name));
        for w in self.pres.normal_words(window_degree) {
            let label = self.pres.display_word(&w);
            let e = AlgElement::from_terms(&self.pres, vec![(w.clone(), K::one())])?;
            let ad = self.adjoint_action(&e)?;
            let counit_leg = ad
                .contract_leg(1, &mut |w| Ok(self.counit_word(w)))?
                .into_element()?;
            suite.check(
                format!("adjoint-counit-leg[{label}]"),
                counit_leg == e,
                || format!("{counit_leg}"),
            );
            let left = ad.expand_leg(0, &mut |w| {
                let el = AlgElement::from_terms(&self.pres, vec![(w.clone(), K::one())])?;
                self.adjoint_action(&el)
            })?;
            let right = ad.expand_leg(1, &mut |w| self.coproduct_word(w))?;
            suite.check(
                format!("adjoint-coassociativity[{label}]"),
                left == right,
                || format!("{left} vs {right}"),
            );
        }
        Ok(suite)
    }

    pub fn map_scalars<K2: Field>(
        &self,
        f: &dyn Fn(&K) -> Result<K2>,
    ) -> Result<Arc<HopfStructure<K2>>> {
        let pres = self.pres.map_scalars(f)?;
        let coproduct = self
            .coproduct
            .iter()
            .map(|t| {
                let raw = t
                    .terms()
                    .map(|(ws, c)| Ok((ws.clone(), f(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                TensorElement::from_terms(vec![pres.clone(), pres.clone()], raw)
            })
            .collect::<Result<Vec<_>>>()?;
        let counit = self.counit.iter().map(f).collect::<Result<Vec<_>>>()?;
        let antipode = self
            .antipode
            .iter()
            .map(|e| e.map_scalars(&pres, f))
            .collect::<Result<Vec<_>>>()?;
        HopfStructure::new(self.name.clone(), pres, coproduct, counit, antipode)
    }

    /// Load a structure from the extended presentation JSON produced by
    /// [`Self::to_wire_json`].
    pub fn from_wire_json(v: &serde_json::Value) -> Result<Arc<Self>> {
        let name = v
            .get("hopf")
            .and_then(|n| n.as_str())
            .ok_or_else(|| Error::InvalidInput("missing `hopf` name".into()))?
            .to_string();
        let pres = Presentation::from_wire_json(
            v.get("presentation")
                .ok_or_else(|| Error::InvalidInput("missing presentation".into()))?,
        )?;
        let ngen = pres.generators().len();
        let by_gen = |section: &str| -> Result<Vec<serde_json::Value>> {
            let arr = v
                .get(section)
                .and_then(|a| a.as_array())
                .ok_or_else(|| Error::InvalidInput(format!("missing `{section}` table")))?;
            let mut out = vec![serde_json::Value::Null; ngen];
            for entry in arr {
                let g = entry
                    .get("generator")
                    .and_then(|n| n.as_str())
                    .ok_or_else(|| Error::InvalidInput("table entry needs a generator".into()))?;
                out[pres.gen_id(g)?] = entry
                    .get("value")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("table entry needs a value".into()))?;
            }
            Ok(out)
        };
        let parse_word = |names: &serde_json::Value| -> Result<Word> {
            let arr = names
                .as_array()
                .ok_or_else(|| Error::InvalidInput("word must be an array".into()))?;
            let mut w = vec![];
            for n in arr {
                w.push(pres.gen_id(n.as_str().ok_or_else(|| {
                    Error::InvalidInput("word entries are names".into())
                })?)?);
            }
            Ok(Word(w))
        };
        let mut coproduct = vec![];
        for val in by_gen("coproduct")? {
            let terms = val
                .as_array()
                .ok_or_else(|| Error::InvalidInput("coproduct value must be a list".into()))?;
            let mut raw = vec![];
            for t in terms {
                let left = parse_word(t.get("left").unwrap_or(&serde_json::Value::Null))?;
                let right = parse_word(t.get("right").unwrap_or(&serde_json::Value::Null))?;
                let wire: crate::scalar::ScalarWire = serde_json::from_value(
                    t.get("coeff")
                        .cloned()
                        .ok_or_else(|| Error::InvalidInput("term needs a coeff".into()))?,
                )?;
                raw.push((vec![left, right], K::from_wire(&wire)?));
            }
            coproduct.push(TensorElement::from_terms(
                vec![pres.clone(), pres.clone()],
                raw,
            )?);
        }
        let mut counit = vec![];
        for val in by_gen("counit")? {
            let wire: crate::scalar::ScalarWire = serde_json::from_value(val)?;
            counit.push(K::from_wire(&wire)?);
        }
        let mut antipode = vec![];
        for val in by_gen("antipode")? {
            antipode.push(AlgElement::from_wire_json(&pres, &val)?);
        }
        HopfStructure::new(name, pres, coproduct, counit, antipode)
    }

    /// Export the preset as presentation JSON extended with the structure
    /// tables.
    pub fn to_wire_json(&self) -> serde_json::Value {
        let gens = self.pres.generators();
        let coproduct: Vec<serde_json::Value> = self
            .coproduct
            .iter()
            .enumerate()
            .map(|(g, t)| {
                let terms: Vec<serde_json::Value> = t
                    .terms()
                    .map(|(ws, c)| {
                        serde_json::json!({
                            "left": ws[0].0.iter().map(|&i| gens[i].name.clone()).collect::<Vec<_>>(),
                            "right": ws[1].0.iter().map(|&i| gens[i].name.clone()).collect::<Vec<_>>(),
                            "coeff": c.to_wire(),
                        })
                    })
                    .collect();
                serde_json::json!({ "generator": gens[g].name, "value": terms })
            })
            .collect();
        let counit: Vec<serde_json::Value> = self
            .counit
            .iter()
            .enumerate()
            .map(|(g, c)| serde_json::json!({ "generator": gens[g].name, "value": c.to_wire() }))
            .collect();
        let antipode: Vec<serde_json::Value> = self
            .antipode
            .iter()
            .enumerate()
            .map(|(g, e)| {
                let terms: Vec<serde_json::Value> = e
                    .terms()
                    .map(|(w, c)| {
                        serde_json::json!({
                            "word": w.0.iter().map(|&i| gens[i].name.clone()).collect::<Vec<_>>(),
                            "coeff": c.to_wire(),
                        })
                    })
                    .collect();
                serde_json::json!({ "generator": gens[g].name, "value": terms })
            })
            .collect();
        serde_json::json!({
            "hopf": self.name,
            "presentation": self.pres.to_wire_json(),
            "coproduct": coproduct,
            "counit": counit,
            "antipode": antipode,
        })
    }
}
