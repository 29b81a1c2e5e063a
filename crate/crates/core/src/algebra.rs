//! Finitely presented *-algebras with rewriting normal forms.
//!
//! A [`Presentation`] lists generators (with grades and star partners) and
//! rewrite rules ordered by the degree-lexicographic word order: every rule
//! strictly decreases the order, so rewriting terminates and — once
//! [`check_local_confluence`] certifies the rule set — normal forms are
//! unique. [`AlgElement`] and [`TensorElement`] are sparse linear
//! combinations of normal-form words, the universal value types of the
//! engine.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::{Field, ScalarWire};
use crate::Result;

pub type GenId = usize;

/// Default number of rewrite steps allowed per normalization call.
pub const REWRITE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub grade: usize,
    /// Index of the star partner (may be the generator itself).
    pub star: GenId,
}

/// A word in the generators. Ordered degree-lexicographically: first by
/// length, then left-to-right by generator precedence (= index order).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<GenId>);

impl Word {
    pub fn empty() -> Self {
        Word(vec![])
    }

    pub fn single(g: GenId) -> Self {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// First position at which `pat` occurs as a factor, if any.
    pub fn find(&self, pat: &Word) -> Option<usize> {
        if pat.0.is_empty() || pat.0.len() > self.0.len() {
            return None;
        }
        self.0.windows(pat.0.len()).position(|w| w == pat.0)
    }

    fn ends_with_overlap(&self, pat: &Word) -> bool {
        // Does some occurrence of `pat` end exactly at the last letter?
        if pat.0.is_empty() || pat.0.len() > self.0.len() {
            return false;
        }
        self.0[self.0.len() - pat.0.len()..] == pat.0[..]
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Debug, Clone)]
pub struct RewriteRule<K> {
    pub lhs: Word,
    pub rhs: Vec<(Word, K)>,
}

/// A presented *-algebra. Immutable once built; share via [`Arc`].
#[derive(Debug, Clone)]
pub struct Presentation<K> {
    name: String,
    gens: Vec<Generator>,
    rules: Vec<RewriteRule<K>>,
}

impl<K: Field> PartialEq for Presentation<K> {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.gens == other.gens
            && self.rules.len() == other.rules.len()
            && self
                .rules
                .iter()
                .zip(&other.rules)
                .all(|(a, b)| a.lhs == b.lhs && a.rhs == b.rhs)
    }
}

impl<K: Field> Presentation<K> {
    /// Build and validate a presentation. Generator order is the rewrite
    /// precedence. Every rule must strictly decrease the word order and star
    /// must be an involution on generators.
    pub fn new(
        name: impl Into<String>,
        gens: Vec<Generator>,
        rules: Vec<RewriteRule<K>>,
    ) -> Result<Arc<Self>> {
        let name = name.into();
        for (i, g) in gens.iter().enumerate() {
            if gens.iter().skip(i + 1).any(|h| h.name == g.name) {
                return Err(Error::InvalidInput(format!("duplicate generator `{}`", g.name)));
            }
            if g.star >= gens.len() || gens[g.star].star != i {
                return Err(Error::InvalidInput(format!(
                    "star pairing broken at `{}`",
                    g.name
                )));
            }
            if gens[g.star].grade != g.grade {
                return Err(Error::InvalidInput(format!(
                    "star partner of `{}` has a different grade",
                    g.name
                )));
            }
        }
        for r in &rules {
            if r.lhs.is_empty() {
                return Err(Error::InvalidInput("empty rule left-hand side".into()));
            }
            for g in &r.lhs.0 {
                if *g >= gens.len() {
                    return Err(Error::UnknownGenerator(format!("#{g}")));
                }
            }
            for (w, _) in &r.rhs {
                for g in &w.0 {
                    if *g >= gens.len() {
                        return Err(Error::UnknownGenerator(format!("#{g}")));
                    }
                }
                if *w >= r.lhs {
                    return Err(Error::InvalidInput(format!(
                        "rule does not decrease the word order: lhs {:?} rhs {:?}",
                        r.lhs, w
                    )));
                }
            }
        }
        Ok(Arc::new(Presentation { name, gens, rules }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn rules(&self) -> &[RewriteRule<K>] {
        &self.rules
    }

    pub fn gen_id(&self, name: &str) -> Result<GenId> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::UnknownGenerator(name.into()))
    }

    pub fn gen_name(&self, id: GenId) -> &str {
        &self.gens[id].name
    }

    pub fn word_grade(&self, w: &Word) -> usize {
        w.0.iter().map(|&g| self.gens[g].grade).sum()
    }

    pub fn star_word(&self, w: &Word) -> Word {
        Word(w.0.iter().rev().map(|&g| self.gens[g].star).collect())
    }

    pub fn display_word(&self, w: &Word) -> String {
        if w.is_empty() {
            "1".into()
        } else {
            w.0.iter()
                .map(|&g| self.gens[g].name.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        }
    }

    /// All normal-form words of length at most `max_len`, in word order.
    /// This is the window basis used by every exhaustive check.
    pub fn normal_words(&self, max_len: usize) -> Vec<Word> {
        let mut layer = vec![Word::empty()];
        let mut out = vec![Word::empty()];
        for _ in 0..max_len {
            let mut next = vec![];
            for w in &layer {
                for g in 0..self.gens.len() {
                    let mut cand = w.clone();
                    cand.0.push(g);
                    // Any new reducible factor must end at the new letter.
                    if self.rules.iter().all(|r| !cand.ends_with_overlap(&r.lhs)) {
                        next.push(cand);
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out.sort();
        out
    }

    /// Map coefficients through a field morphism, e.g. to specialize `q`.
    pub fn map_scalars<K2: Field>(
        &self,
        f: &dyn Fn(&K) -> Result<K2>,
    ) -> Result<Arc<Presentation<K2>>> {
        let rules = self
            .rules
            .iter()
            .map(|r| {
                Ok(RewriteRule {
                    lhs: r.lhs.clone(),
                    rhs: r
                        .rhs
                        .iter()
                        .map(|(w, c)| Ok((w.clone(), f(c)?)))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(self.name.clone(), self.gens.clone(), rules)
    }
}

fn same_presentation<K: Field>(a: &Arc<Presentation<K>>, b: &Arc<Presentation<K>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::PresentationMismatch(
            a.name().into(),
            b.name().into(),
        ))
    }
}

/// Element of a presented algebra: a sparse combination of normal-form
/// words. The invariant (always normal, no zero coefficients) is maintained
/// by every constructor.
#[derive(Debug, Clone)]
pub struct AlgElement<K> {
    pres: Arc<Presentation<K>>,
    terms: BTreeMap<Word, K>,
}

impl<K: Field> PartialEq for AlgElement<K> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && same_presentation(&self.pres, &other.pres).is_ok()
    }
}

impl<K: Field> AlgElement<K> {
    pub fn zero(pres: &Arc<Presentation<K>>) -> Self {
        AlgElement {
            pres: pres.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(pres: &Arc<Presentation<K>>) -> Self {
        Self::from_terms(pres, vec![(Word::empty(), K::one())]).expect("unit is normal")
    }

    pub fn generator(pres: &Arc<Presentation<K>>, id: GenId) -> Result<Self> {
        if id >= pres.generators().len() {
            return Err(Error::UnknownGenerator(format!("#{id}")));
        }
        Self::from_terms(pres, vec![(Word::single(id), K::one())])
    }

    pub fn generator_named(pres: &Arc<Presentation<K>>, name: &str) -> Result<Self> {
        let id = pres.gen_id(name)?;
        Self::generator(pres, id)
    }

    /// Normalizing constructor: rewrites every word to normal form.
    pub fn from_terms(pres: &Arc<Presentation<K>>, raw: Vec<(Word, K)>) -> Result<Self> {
        let mut budget = REWRITE_BUDGET;
        let mut terms: BTreeMap<Word, K> = BTreeMap::new();
        let mut stack = raw;
        while let Some((word, coeff)) = stack.pop() {
            if coeff.is_zero() {
                continue;
            }
            for g in &word.0 {
                if *g >= pres.generators().len() {
                    return Err(Error::UnknownGenerator(format!("#{g}")));
                }
            }
            // Leftmost-first rewriting: pick the earliest position at which
            // any rule applies, trying rules in declaration order there.
            let mut matched = None;
            'scan: for pos in 0..word.0.len() {
                for rule in pres.rules() {
                    let l = rule.lhs.0.len();
                    if pos + l <= word.0.len() && word.0[pos..pos + l] == rule.lhs.0[..] {
                        matched = Some((pos, rule));
                        break 'scan;
                    }
                }
            }
            match matched {
                None => {
                    let entry = terms.entry(word).or_insert_with(K::zero);
                    *entry = entry.clone() + coeff;
                }
                Some((pos, rule)) => {
                    if budget == 0 {
                        return Err(Error::RewriteBudgetExceeded(REWRITE_BUDGET));
                    }
                    budget -= 1;
                    let l = rule.lhs.0.len();
                    for (rw, rc) in &rule.rhs {
                        let mut new_word = Vec::with_capacity(word.0.len() - l + rw.0.len());
                        new_word.extend_from_slice(&word.0[..pos]);
                        new_word.extend_from_slice(&rw.0);
                        new_word.extend_from_slice(&word.0[pos + l..]);
                        stack.push((Word(new_word), coeff.clone() * rc.clone()));
                    }
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(AlgElement {
            pres: pres.clone(),
            terms,
        })
    }

    pub fn presentation(&self) -> &Arc<Presentation<K>> {
        &self.pres
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &K)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &Word) -> K {
        self.terms.get(w).cloned().unwrap_or_else(K::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Uniform grade of the element; `None` when inhomogeneous or zero.
    pub fn grade(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|w| self.pres.word_grade(w));
        let first = it.next()?;
        it.all(|g| g == first).then_some(first)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_presentation(&self.pres, &other.pres)?;
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            let entry = terms.entry(w.clone()).or_insert_with(K::zero);
            *entry = entry.clone() + c.clone();
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(AlgElement {
            pres: self.pres.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&(-K::one())))
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return Self::zero(&self.pres);
        }
        AlgElement {
            pres: self.pres.clone(),
            terms: self
                .terms
                .iter()
                .map(|(w, x)| (w.clone(), x.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&(-K::one()))
    }

    /// Bilinear product followed by normalization.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_presentation(&self.pres, &other.pres)?;
        let mut raw = vec![];
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                raw.push((w1.concat(w2), c1.clone() * c2.clone()));
            }
        }
        Self::from_terms(&self.pres, raw)
    }

    /// Antilinear involution: reverses words, swaps star partners,
    /// conjugates coefficients, then renormalizes.
    pub fn star(&self) -> Result<Self> {
        let raw = self
            .terms
            .iter()
            .map(|(w, c)| (self.pres.star_word(w), c.conjugate()))
            .collect();
        Self::from_terms(&self.pres, raw)
    }

    pub fn map_scalars<K2: Field>(
        &self,
        target: &Arc<Presentation<K2>>,
        f: &dyn Fn(&K) -> Result<K2>,
    ) -> Result<AlgElement<K2>> {
        let raw = self
            .terms
            .iter()
            .map(|(w, c)| Ok((w.clone(), f(c)?)))
            .collect::<Result<Vec<_>>>()?;
        AlgElement::from_terms(target, raw)
    }
}

impl<K: Field> AlgElement<K> {
    /// Element wire form: a list of `{word, coeff}` records.
    pub fn to_wire_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(w, c)| {
                serde_json::json!({
                    "word": w.0.iter().map(|&g| self.pres.gen_name(g)).collect::<Vec<_>>(),
                    "coeff": c.to_wire(),
                })
            })
            .collect();
        serde_json::Value::Array(terms)
    }

    pub fn from_wire_json(pres: &Arc<Presentation<K>>, v: &serde_json::Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::InvalidInput("element wire must be an array".into()))?;
        let mut raw = vec![];
        for t in arr {
            let names = t
                .get("word")
                .and_then(|w| w.as_array())
                .ok_or_else(|| Error::InvalidInput("term needs a word".into()))?;
            let mut word = vec![];
            for n in names {
                let n = n
                    .as_str()
                    .ok_or_else(|| Error::InvalidInput("word entries are names".into()))?;
                word.push(pres.gen_id(n)?);
            }
            let wire: ScalarWire = serde_json::from_value(
                t.get("coeff")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("term needs a coeff".into()))?,
            )?;
            raw.push((Word(word), K::from_wire(&wire)?));
        }
        Self::from_terms(pres, raw)
    }
}

impl<K: Field> fmt::Display for AlgElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if first {
                first = false;
            } else {
                write!(f, " + ")?;
            }
            let ws = self.pres.display_word(w);
            if c.is_one() && !w.is_empty() {
                write!(f, "{ws}")?;
            } else if w.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c}) {ws}")?;
            }
        }
        Ok(())
    }
}

/// Element of a tensor power with, per leg, its own presentation. Legwise
/// normal forms, plain (unsigned) legwise products: all pointwise products
/// used by the engine have an even factor on every crossing.
#[derive(Debug, Clone)]
pub struct TensorElement<K> {
    legs: Vec<Arc<Presentation<K>>>,
    terms: BTreeMap<Vec<Word>, K>,
}

impl<K: Field> PartialEq for TensorElement<K> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.legs.len() == other.legs.len()
            && self
                .legs
                .iter()
                .zip(&other.legs)
                .all(|(a, b)| same_presentation(a, b).is_ok())
    }
}

impl<K: Field> TensorElement<K> {
    pub fn zero(legs: Vec<Arc<Presentation<K>>>) -> Self {
        TensorElement {
            legs,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(legs: Vec<Arc<Presentation<K>>>) -> Self {
        let n = legs.len();
        let mut t = TensorElement::zero(legs);
        t.terms.insert(vec![Word::empty(); n], K::one());
        t
    }

    pub fn from_terms(
        legs: Vec<Arc<Presentation<K>>>,
        raw: Vec<(Vec<Word>, K)>,
    ) -> Result<Self> {
        let mut out = TensorElement::zero(legs);
        for (words, coeff) in raw {
            if words.len() != out.legs.len() {
                return Err(Error::DegreeMismatch(words.len(), out.legs.len()));
            }
            // Normalize each leg separately, then distribute the product of
            // the normalized terms.
            let mut expanded: Vec<(Vec<Word>, K)> = vec![(vec![], coeff)];
            for (leg, w) in out.legs.iter().zip(words) {
                let e = AlgElement::from_terms(leg, vec![(w, K::one())])?;
                let mut next = vec![];
                for (prefix, c) in &expanded {
                    for (nw, nc) in e.terms() {
                        let mut p = prefix.clone();
                        p.push(nw.clone());
                        next.push((p, c.clone() * nc.clone()));
                    }
                }
                expanded = next;
            }
            for (words, c) in expanded {
                let entry = out.terms.entry(words).or_insert_with(K::zero);
                *entry = entry.clone() + c;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Tensor product of algebra elements, one per leg.
    pub fn of(factors: &[&AlgElement<K>]) -> Self {
        let legs: Vec<_> = factors.iter().map(|e| e.pres.clone()).collect();
        let mut out = TensorElement::zero(legs);
        let mut expanded: Vec<(Vec<Word>, K)> = vec![(vec![], K::one())];
        for e in factors {
            let mut next = vec![];
            for (prefix, c) in &expanded {
                for (w, nc) in e.terms() {
                    let mut p = prefix.clone();
                    p.push(w.clone());
                    next.push((p, c.clone() * nc.clone()));
                }
            }
            expanded = next;
        }
        for (words, c) in expanded {
            if !c.is_zero() {
                out.terms.insert(words, c);
            }
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.legs.len()
    }

    pub fn legs(&self) -> &[Arc<Presentation<K>>] {
        &self.legs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Word>, &K)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.legs.len() != other.legs.len() {
            return Err(Error::DegreeMismatch(self.legs.len(), other.legs.len()));
        }
        for (a, b) in self.legs.iter().zip(&other.legs) {
            same_presentation(a, b)?;
        }
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            let entry = terms.entry(w.clone()).or_insert_with(K::zero);
            *entry = entry.clone() + c.clone();
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(TensorElement {
            legs: self.legs.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&(-K::one())))
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return TensorElement::zero(self.legs.clone());
        }
        TensorElement {
            legs: self.legs.clone(),
            terms: self
                .terms
                .iter()
                .map(|(w, x)| (w.clone(), x.clone() * c.clone()))
                .collect(),
        }
    }

    /// Legwise product of tensors of equal shape (no Koszul signs; see the
    /// type-level note).
    pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
        if self.legs.len() != other.legs.len() {
            return Err(Error::DegreeMismatch(self.legs.len(), other.legs.len()));
        }
        for (a, b) in self.legs.iter().zip(&other.legs) {
            same_presentation(a, b)?;
        }
        let mut raw = vec![];
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let words = w1.iter().zip(w2).map(|(a, b)| a.concat(b)).collect();
                raw.push((words, c1.clone() * c2.clone()));
            }
        }
        Self::from_terms(self.legs.clone(), raw)
    }

    /// Juxtaposition `self ⊗ other` (degrees add).
    pub fn concat(&self, other: &Self) -> Self {
        let legs: Vec<_> = self.legs.iter().chain(&other.legs).cloned().collect();
        let mut out = TensorElement::zero(legs);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut words = w1.clone();
                words.extend(w2.iter().cloned());
                let c = c1.clone() * c2.clone();
                if !c.is_zero() {
                    out.terms.insert(words, c);
                }
            }
        }
        out
    }

    /// Legwise star (no leg reversal): the coaction-compatible involution
    /// on tensor products with grade-zero legs.
    pub fn star_pointwise(&self) -> Result<Self> {
        let raw = self
            .terms
            .iter()
            .map(|(ws, c)| {
                let words = ws
                    .iter()
                    .zip(&self.legs)
                    .map(|(w, leg)| leg.star_word(w))
                    .collect();
                (words, c.conjugate())
            })
            .collect();
        Self::from_terms(self.legs.clone(), raw)
    }

    /// Apply a linear word-level map to one leg. The image may live in a
    /// different presentation (e.g. a Hopf algebra quotient); `f` must be
    /// consistent about it.
    pub fn map_leg(
        &self,
        leg: usize,
        f: &mut dyn FnMut(&Word) -> Result<AlgElement<K>>,
    ) -> Result<Self> {
        let mut raw = vec![];
        let mut image_pres: Option<Arc<Presentation<K>>> = None;
        for (ws, c) in &self.terms {
            let img = f(&ws[leg])?;
            image_pres.get_or_insert_with(|| img.presentation().clone());
            for (w, fc) in img.terms() {
                let mut words = ws.clone();
                words[leg] = w.clone();
                raw.push((words, c.clone() * fc.clone()));
            }
        }
        let mut legs = self.legs.clone();
        legs[leg] = match image_pres {
            Some(p) => p,
            None => f(&Word::empty())?.presentation().clone(),
        };
        Self::from_terms(legs, raw)
    }

    /// Replace one leg by a tensor-valued image (degree grows by the image
    /// degree minus one).
    pub fn expand_leg(
        &self,
        leg: usize,
        f: &mut dyn FnMut(&Word) -> Result<TensorElement<K>>,
    ) -> Result<Self> {
        let mut out: Option<TensorElement<K>> = None;
        for (ws, c) in &self.terms {
            let img = f(&ws[leg])?;
            let mut legs = self.legs[..leg].to_vec();
            legs.extend(img.legs.iter().cloned());
            legs.extend(self.legs[leg + 1..].iter().cloned());
            let mut raw = vec![];
            for (iw, ic) in img.terms() {
                let mut words = ws[..leg].to_vec();
                words.extend(iw.iter().cloned());
                words.extend(ws[leg + 1..].iter().cloned());
                raw.push((words, c.clone() * ic.clone()));
            }
            let piece = TensorElement::from_terms(legs, raw)?;
            out = Some(match out {
                None => piece,
                Some(acc) => acc.add(&piece)?,
            });
        }
        match out {
            Some(t) => Ok(t),
            None => {
                // Zero input: probe the unit once to learn the image shape.
                let img = f(&Word::empty())?;
                let mut legs = self.legs[..leg].to_vec();
                legs.extend(img.legs.iter().cloned());
                legs.extend(self.legs[leg + 1..].iter().cloned());
                Ok(TensorElement::zero(legs))
            }
        }
    }

    /// Contract one leg with a scalar-valued functional.
    pub fn contract_leg(
        &self,
        leg: usize,
        f: &mut dyn FnMut(&Word) -> Result<K>,
    ) -> Result<Self> {
        let mut legs = self.legs.clone();
        legs.remove(leg);
        let mut raw = vec![];
        for (ws, c) in &self.terms {
            let s = f(&ws[leg])?;
            let mut words = ws.clone();
            words.remove(leg);
            raw.push((words, c.clone() * s));
        }
        Self::from_terms(legs, raw)
    }

    /// Multiply adjacent legs `leg` and `leg + 1` (they must share a
    /// presentation; both must be grade zero for the unsigned product).
    pub fn merge_legs(&self, leg: usize) -> Result<Self> {
        same_presentation(&self.legs[leg], &self.legs[leg + 1])?;
        let mut legs = self.legs.clone();
        legs.remove(leg + 1);
        let mut raw = vec![];
        for (ws, c) in &self.terms {
            let mut words = ws.clone();
            let merged = words[leg].concat(&words[leg + 1]);
            words[leg] = merged;
            words.remove(leg + 1);
            raw.push((words, c.clone()));
        }
        Self::from_terms(legs, raw)
    }

    /// Reorder legs: new leg `i` is old leg `perm[i]`. Valid for grade-zero
    /// legs where transposition carries no sign.
    pub fn permute_legs(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.legs.len() {
            return Err(Error::DegreeMismatch(perm.len(), self.legs.len()));
        }
        let legs = perm.iter().map(|&i| self.legs[i].clone()).collect();
        let mut out = TensorElement::zero(legs);
        for (ws, c) in &self.terms {
            let words: Vec<Word> = perm.iter().map(|&i| ws[i].clone()).collect();
            out.terms.insert(words, c.clone());
        }
        Ok(out)
    }

    /// Extract, for each distinct word in the `leg` position, the remaining
    /// tensor factor. Useful for membership tests like `ad(R) ⊆ R ⊗ A`.
    pub fn collect_by_leg(&self, leg: usize) -> Vec<(Word, TensorElement<K>)> {
        let mut buckets: BTreeMap<Word, Vec<(Vec<Word>, K)>> = BTreeMap::new();
        for (ws, c) in &self.terms {
            let key = ws[leg].clone();
            let mut rest = ws.clone();
            rest.remove(leg);
            buckets.entry(key).or_default().push((rest, c.clone()));
        }
        let mut legs = self.legs.clone();
        legs.remove(leg);
        buckets
            .into_iter()
            .map(|(w, raw)| {
                let t = TensorElement::from_terms(legs.clone(), raw)
                    .expect("already normal");
                (w, t)
            })
            .collect()
    }

    /// View a degree-1 tensor as an algebra element.
    pub fn into_element(&self) -> Result<AlgElement<K>> {
        if self.legs.len() != 1 {
            return Err(Error::DegreeMismatch(self.legs.len(), 1));
        }
        let raw = self
            .terms
            .iter()
            .map(|(ws, c)| (ws[0].clone(), c.clone()))
            .collect();
        AlgElement::from_terms(&self.legs[0], raw)
    }
}

impl<K: Field> fmt::Display for TensorElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (ws, c) in &self.terms {
            if first {
                first = false;
            } else {
                write!(f, " + ")?;
            }
            let body = ws
                .iter()
                .zip(&self.legs)
                .map(|(w, leg)| leg.display_word(w))
                .collect::<Vec<_>>()
                .join(" (x) ");
            if c.is_one() {
                write!(f, "{body}")?;
            } else {
                write!(f, "({c}) {body}")?;
            }
        }
        Ok(())
    }
}

/// Report from the critical-pair analysis of a rule set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfluenceReport {
    pub pairs_checked: usize,
    pub unresolved: Vec<String>,
    /// Rules whose star image is not itself a consequence of the rules.
    pub star_incompatible: Vec<String>,
}

impl ConfluenceReport {
    pub fn is_confluent(&self) -> bool {
        self.unresolved.is_empty()
    }

    pub fn is_star_consistent(&self) -> bool {
        self.star_incompatible.is_empty()
    }
}

/// Resolve all critical pairs among the rules whose overlap word has length
/// at most `degree_bound`. Both reducts of every overlap are fully
/// normalized; a nonzero difference is reported with a witness.
pub fn check_local_confluence<K: Field>(
    pres: &Arc<Presentation<K>>,
    degree_bound: usize,
) -> Result<ConfluenceReport> {
    let rules = pres.rules();
    let mut checked = 0;
    let mut unresolved = vec![];
    let mut star_incompatible = vec![];
    let mut check_pair = |overlap: &Word,
                          left: Vec<(Word, K)>,
                          right: Vec<(Word, K)>,
                          checked: &mut usize|
     -> Result<()> {
        *checked += 1;
        let a = AlgElement::from_terms(pres, left)?;
        let b = AlgElement::from_terms(pres, right)?;
        let diff = a.sub(&b)?;
        if !diff.is_zero() {
            unresolved.push(format!(
                "overlap `{}` resolves ambiguously: difference {}",
                pres.display_word(overlap),
                diff
            ));
        }
        Ok(())
    };
    for (i, r1) in rules.iter().enumerate() {
        for r2 in rules.iter() {
            let l1 = &r1.lhs.0;
            let l2 = &r2.lhs.0;
            // Proper overlaps: a nonempty proper suffix of l1 equals a prefix of l2.
            for k in 1..l1.len().min(l2.len()) {
                if l1[l1.len() - k..] == l2[..k] {
                    let mut w = l1.clone();
                    w.extend_from_slice(&l2[k..]);
                    let overlap = Word(w);
                    if overlap.len() > degree_bound {
                        continue;
                    }
                    // reduce via r1 at position 0
                    let left: Vec<(Word, K)> = r1
                        .rhs
                        .iter()
                        .map(|(rw, rc)| {
                            let mut v = rw.0.clone();
                            v.extend_from_slice(&l2[k..]);
                            (Word(v), rc.clone())
                        })
                        .collect();
                    // reduce via r2 at position |l1| - k
                    let right: Vec<(Word, K)> = r2
                        .rhs
                        .iter()
                        .map(|(rw, rc)| {
                            let mut v = l1[..l1.len() - k].to_vec();
                            v.extend_from_slice(&rw.0);
                            (Word(v), rc.clone())
                        })
                        .collect();
                    check_pair(&overlap, left, right, &mut checked)?;
                }
            }
            // Containments: l2 a proper factor of l1.
            if l2.len() < l1.len() {
                for pos in 0..=l1.len() - l2.len() {
                    if l1[pos..pos + l2.len()] == l2[..] {
                        let overlap = r1.lhs.clone();
                        if overlap.len() > degree_bound {
                            continue;
                        }
                        let left: Vec<(Word, K)> = r1.rhs.clone();
                        let right: Vec<(Word, K)> = r2
                            .rhs
                            .iter()
                            .map(|(rw, rc)| {
                                let mut v = l1[..pos].to_vec();
                                v.extend_from_slice(&rw.0);
                                v.extend_from_slice(&l1[pos + l2.len()..]);
                                (Word(v), rc.clone())
                            })
                            .collect();
                        check_pair(&overlap, left, right, &mut checked)?;
                    }
                }
            }
            // Identical rules: also catch duplicate rules with distinct
            // right-hand sides (l1 == l2 but different rule index).
            if l1 == l2 && !std::ptr::eq(r1, r2) && rules.iter().take(i).all(|r| r.lhs.0 != *l1)
            {
                let overlap = r1.lhs.clone();
                if overlap.len() <= degree_bound {
                    check_pair(&overlap, r1.rhs.clone(), r2.rhs.clone(), &mut checked)?;
                }
            }
        }
    }
    // Star compatibility: the involution must map every rule to a relation
    // that already rewrites to zero.
    for r in rules {
        let starred_lhs = pres.star_word(&r.lhs);
        let mut raw = vec![(starred_lhs, K::one())];
        for (w, c) in &r.rhs {
            raw.push((pres.star_word(w), -c.conjugate()));
        }
        checked += 1;
        let diff = AlgElement::from_terms(pres, raw)?;
        if !diff.is_zero() {
            star_incompatible.push(format!(
                "star of rule `{}` is not a consequence of the rules: {}",
                pres.display_word(&r.lhs),
                diff
            ));
        }
    }
    Ok(ConfluenceReport {
        pairs_checked: checked,
        unresolved,
        star_incompatible,
    })
}

/// Specialize a symbolic element at a rational `q`-value.
pub fn specialize(
    e: &AlgElement<crate::QScalar>,
    target: &Arc<Presentation<crate::Rat>>,
    q: &crate::Rat,
) -> Result<AlgElement<crate::Rat>> {
    e.map_scalars(target, &|c| c.eval(q))
}

/// Specialize a whole presentation at a rational `q`-value.
pub fn specialize_presentation(
    p: &Presentation<crate::QScalar>,
    q: &crate::Rat,
) -> Result<Arc<Presentation<crate::Rat>>> {
    p.map_scalars(&|c| c.eval(q))
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GeneratorWire {
    name: String,
    grade: usize,
    star_partner: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleTermWire {
    word: Vec<String>,
    coeff: ScalarWire,
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleWire {
    lhs: Vec<String>,
    rhs: Vec<RuleTermWire>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PresentationWire {
    name: String,
    generators: Vec<GeneratorWire>,
    rules: Vec<RuleWire>,
    /// Generator names in rewrite precedence; must list every generator.
    order: Vec<String>,
}

impl<K: Field> Presentation<K> {
    pub fn to_wire_json(&self) -> serde_json::Value {
        let wire = PresentationWire {
            name: self.name.clone(),
            generators: self
                .gens
                .iter()
                .map(|g| GeneratorWire {
                    name: g.name.clone(),
                    grade: g.grade,
                    star_partner: self.gens[g.star].name.clone(),
                })
                .collect(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleWire {
                    lhs: r.lhs.0.iter().map(|&g| self.gens[g].name.clone()).collect(),
                    rhs: r
                        .rhs
                        .iter()
                        .map(|(w, c)| RuleTermWire {
                            word: w.0.iter().map(|&g| self.gens[g].name.clone()).collect(),
                            coeff: c.to_wire(),
                        })
                        .collect(),
                })
                .collect(),
            order: self.gens.iter().map(|g| g.name.clone()).collect(),
        };
        serde_json::to_value(wire).expect("presentation wire serializes")
    }

    pub fn from_wire_json(v: &serde_json::Value) -> Result<Arc<Self>> {
        let wire: PresentationWire = serde_json::from_value(v.clone())?;
        if wire.order.len() != wire.generators.len() {
            return Err(Error::InvalidInput(
                "order must list every generator exactly once".into(),
            ));
        }
        // Reorder generators according to `order` (precedence sequence).
        let mut gens_sorted = vec![];
        for name in &wire.order {
            let g = wire
                .generators
                .iter()
                .find(|g| &g.name == name)
                .ok_or_else(|| Error::UnknownGenerator(name.clone()))?;
            gens_sorted.push(g);
        }
        let id_of = |name: &str| -> Result<GenId> {
            gens_sorted
                .iter()
                .position(|g| g.name == name)
                .ok_or_else(|| Error::UnknownGenerator(name.into()))
        };
        let gens = gens_sorted
            .iter()
            .map(|g| {
                Ok(Generator {
                    name: g.name.clone(),
                    grade: g.grade,
                    star: id_of(&g.star_partner)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let parse_word = |names: &[String]| -> Result<Word> {
            Ok(Word(
                names.iter().map(|n| id_of(n)).collect::<Result<Vec<_>>>()?,
            ))
        };
        let rules = wire
            .rules
            .iter()
            .map(|r| {
                Ok(RewriteRule {
                    lhs: parse_word(&r.lhs)?,
                    rhs: r
                        .rhs
                        .iter()
                        .map(|t| Ok((parse_word(&t.word)?, K::from_wire(&t.coeff)?)))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(wire.name, gens, rules)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::QScalar;
    use num_traits::One;

    /// Two commuting generators x, y with x y -> y x (precedence y < x).
    fn commuting() -> Arc<Presentation<QScalar>> {
        Presentation::new(
            "comm",
            vec![
                Generator {
                    name: "y".into(),
                    grade: 0,
                    star: 0,
                },
                Generator {
                    name: "x".into(),
                    grade: 0,
                    star: 1,
                },
            ],
            vec![RewriteRule {
                lhs: Word(vec![1, 0]),
                rhs: vec![(Word(vec![0, 1]), QScalar::one())],
            }],
        )
        .unwrap()
    }

    #[test]
    fn additive_cancellation() {
        let p = commuting();
        let x = AlgElement::generator_named(&p, "x").unwrap();
        let z = x.sub(&x).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn unit_and_normal_form() {
        let p = commuting();
        let one = AlgElement::unit(&p);
        assert_eq!(one.coeff(&Word::empty()), QScalar::one());
        let x = AlgElement::generator_named(&p, "x").unwrap();
        let y = AlgElement::generator_named(&p, "y").unwrap();
        let xy = x.mul(&y).unwrap();
        let yx = y.mul(&x).unwrap();
        assert_eq!(xy, yx);
        assert_eq!(one.mul(&x).unwrap(), x);
    }

    #[test]
    fn window_enumeration() {
        let p = commuting();
        // normal words of length <= 2 over commuting x,y: 1, y, x, yy, yx, xx
        let words = p.normal_words(2);
        assert_eq!(words.len(), 6);
        assert!(words.iter().all(|w| p.rules().iter().all(|r| w.find(&r.lhs).is_none())));
    }

    #[test]
    fn confluence_detects_broken_rules() {
        // {xy -> 1, xy -> x}: duplicate lhs with different rhs.
        let p = Presentation::new(
            "broken",
            vec![
                Generator {
                    name: "x".into(),
                    grade: 0,
                    star: 0,
                },
                Generator {
                    name: "y".into(),
                    grade: 0,
                    star: 1,
                },
            ],
            vec![
                RewriteRule {
                    lhs: Word(vec![0, 1]),
                    rhs: vec![(Word::empty(), QScalar::one())],
                },
                RewriteRule {
                    lhs: Word(vec![0, 1]),
                    rhs: vec![(Word(vec![0]), QScalar::one())],
                },
            ],
        )
        .unwrap();
        let report = check_local_confluence(&p, 4).unwrap();
        assert!(!report.is_confluent());
        assert_eq!(report.unresolved.len(), 1);
    }

    #[test]
    fn wire_round_trip() {
        let p = commuting();
        let json = p.to_wire_json();
        let p2: Arc<Presentation<QScalar>> = Presentation::from_wire_json(&json).unwrap();
        assert_eq!(*p, *p2);
    }
}
