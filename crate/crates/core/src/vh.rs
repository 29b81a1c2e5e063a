//! The vertical-horizontal algebra, its differentials, gauge isomorphisms,
//! chart gluing and the pull-back homomorphism.
//!
//! In a fixed chart (a preconnection `D`), forms on the bundle are sums of
//! `horizontal ⊗ invariant-envelope` terms with the twisted product
//! `(ψ⊗η)(φ⊗ϑ) = (-1)^{∂η ∂φ} Σ ψφ_k ⊗ (η∘c_k)ϑ`. Each chart carries a
//! differential built from the preconnection, its curvature and the
//! envelope differential; the gauge isomorphisms `h_E` glue the charts into
//! a single calculus, with all verdicts chart-independent.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{AlgElement, Presentation, Word};
use crate::braided::{BraidOperator, EnvelopeSpace, EnvelopeVariant};
use crate::bundle::{
    natural_map, weight_multiplets, Bundle, ConnectionKind, MultipletTable, NaturalMap,
    Preconnection,
};
use crate::error::Error;
use crate::fodc::{quotient_build, IdealSpec, InvariantFormSpace};
use crate::linalg::SparseVec;
use crate::report::Suite;
use crate::scalar::Field;
use crate::Result;

/// One chart: a preconnection with its curvature descended to the
/// invariant-form basis.
#[derive(Debug, Clone)]
pub struct Chart<K> {
    pub conn: Preconnection<K>,
    /// ρ_D(ϑ_i) per quotient basis class.
    pub curvature: Vec<AlgElement<K>>,
}

/// Shared immutable data for vertical-horizontal computations over one
/// bundle, calculus and envelope variant.
#[derive(Debug, Clone)]
pub struct VhContext<K> {
    bundle: Arc<Bundle<K>>,
    space: Arc<InvariantFormSpace<K>>,
    braid: Arc<BraidOperator<K>>,
    envelope: Arc<EnvelopeSpace<K>>,
    multiplets: MultipletTable<K>,
    charts: Vec<Chart<K>>,
    a_window_degree: usize,
    hor_degree: usize,
}

/// Element of the vertical-horizontal algebra in a chart: sparse sum over
/// `(horizontal word, envelope degree, envelope basis index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VhElement<K> {
    pub chart: String,
    terms: BTreeMap<(Word, usize, usize), K>,
}

impl<K: Field> VhElement<K> {
    pub fn zero(chart: impl Into<String>) -> Self {
        VhElement {
            chart: chart.into(),
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, usize, usize), &K)> {
        self.terms.iter()
    }

    fn insert(&mut self, key: (Word, usize, usize), c: K) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(K::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch(self.chart.clone(), other.chart.clone()));
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let entry = out.terms.entry(k.clone()).or_insert_with(K::zero);
            *entry = entry.clone() + c.clone();
        }
        out.terms.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-K::one()))
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return VhElement::zero(self.chart.clone());
        }
        VhElement {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    /// Total grade (horizontal grade + envelope degree) when homogeneous.
    pub fn grade(&self, hor: &Presentation<K>) -> Option<usize> {
        let mut it = self
            .terms
            .keys()
            .map(|(w, n, _)| hor.word_grade(w) + n);
        let first = it.next()?;
        it.all(|g| g == first).then_some(first)
    }

    /// The horizontal part (envelope degree zero) as an algebra element.
    pub fn horizontal_part(&self, pres: &Arc<Presentation<K>>) -> AlgElement<K> {
        let raw = self
            .terms
            .iter()
            .filter(|((_, n, _), _)| *n == 0)
            .map(|((w, _, _), c)| (w.clone(), c.clone()))
            .collect();
        AlgElement::from_terms(pres, raw).expect("normal words")
    }

    /// Does the element lie in the horizontal subalgebra?
    pub fn is_horizontal(&self) -> bool {
        self.terms.keys().all(|(_, n, _)| *n == 0)
    }
}

/// Auto-generate a multiplet table for the supported structure groups.
pub fn auto_multiplets<K: Field>(
    bundle: &Arc<Bundle<K>>,
    degree: usize,
) -> Result<MultipletTable<K>> {
    if bundle.weight_units().is_some() {
        return weight_multiplets(bundle, degree);
    }
    let name = bundle.hopf().name().to_string();
    if let Some(rest) = name.strip_prefix("cyclic") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad cyclic preset name `{name}`")))?;
        return crate::bundle::delta_multiplets(bundle, n);
    }
    Err(Error::InvalidInput(format!(
        "no automatic multiplets for structure group `{name}`"
    )))
}

/// Assemble the shared context: build the calculus from the ideal, the
/// braid operator, the envelope, the multiplets and the chart curvatures.
pub fn vh_context<K: Field>(
    bundle: &Arc<Bundle<K>>,
    ideal: IdealSpec<K>,
    charts: Vec<Preconnection<K>>,
    variant: EnvelopeVariant,
    a_window_degree: usize,
    hor_degree: usize,
    n_max: usize,
) -> Result<VhContext<K>> {
    let space = Arc::new(quotient_build(
        bundle.hopf(),
        ideal,
        a_window_degree,
        Some(2 * a_window_degree),
    )?);
    let braid = Arc::new(BraidOperator::new(space.clone())?);
    let envelope = Arc::new(EnvelopeSpace::build(&braid, variant, n_max)?);
    let multiplets = auto_multiplets(bundle, 2 * a_window_degree)?;
    let mut chart_data = vec![];
    for conn in charts {
        if conn.kind() != ConnectionKind::Preconnection {
            return Err(Error::InvalidInput("charts must be preconnections".into()));
        }
        let rho = natural_map(&conn, &multiplets, 2 * a_window_degree, hor_degree)?;
        // ρ descends to the quotient only when the ideal sits inside its
        // kernel; verify on the ideal window basis.
        for g in space.ideal_window_basis()? {
            let img = rho.eval(&g)?;
            if !img.is_zero() {
                return Err(Error::Internal(format!(
                    "curvature of `{}` does not vanish on the calculus ideal: ρ({g}) = {img}",
                    conn.label
                )));
            }
        }
        let curvature = (0..space.dim())
            .map(|i| rho.eval(space.rep(i)))
            .collect::<Result<Vec<_>>>()?;
        chart_data.push(Chart { conn, curvature });
    }
    Ok(VhContext {
        bundle: bundle.clone(),
        space,
        braid,
        envelope,
        multiplets,
        charts: chart_data,
        a_window_degree,
        hor_degree,
    })
}

impl<K: Field> VhContext<K> {
    pub fn bundle(&self) -> &Arc<Bundle<K>> {
        &self.bundle
    }

    pub fn space(&self) -> &Arc<InvariantFormSpace<K>> {
        &self.space
    }

    pub fn braid(&self) -> &Arc<BraidOperator<K>> {
        &self.braid
    }

    pub fn envelope(&self) -> &Arc<EnvelopeSpace<K>> {
        &self.envelope
    }

    pub fn multiplets(&self) -> &MultipletTable<K> {
        &self.multiplets
    }

    pub fn charts(&self) -> &[Chart<K>] {
        &self.charts
    }

    pub fn hor_degree(&self) -> usize {
        self.hor_degree
    }

    pub fn a_window_degree(&self) -> usize {
        self.a_window_degree
    }

    pub fn chart(&self, label: &str) -> Result<&Chart<K>> {
        self.charts
            .iter()
            .find(|c| c.conn.label == label)
            .ok_or_else(|| Error::ChartOutsideFamily(label.into()))
    }

    /// χ_E on the quotient basis for a difference `E` of family members.
    pub fn gauge_table(&self, e: &Preconnection<K>) -> Result<Vec<AlgElement<K>>> {
        let chi = natural_map(e, &self.multiplets, 2 * self.a_window_degree, self.hor_degree)?;
        (0..self.space.dim())
            .map(|i| chi.eval(self.space.rep(i)))
            .collect()
    }

    /// The difference natural map itself (for suites needing `χ♮`).
    pub fn difference_map(&self, e: &Preconnection<K>) -> Result<NaturalMap<K>> {
        natural_map(e, &self.multiplets, 2 * self.a_window_degree, self.hor_degree)
    }

    // -- constructors ------------------------------------------------------

    pub fn horizontal(&self, chart: &str, e: &AlgElement<K>) -> VhElement<K> {
        let mut out = VhElement::zero(chart);
        for (w, c) in e.terms() {
            out.insert((w.clone(), 0, 0), c.clone());
        }
        out
    }

    pub fn unit(&self, chart: &str) -> VhElement<K> {
        self.horizontal(chart, &AlgElement::unit(self.bundle.horizontal()))
    }

    /// `1 ⊗ ϑ` for an envelope class of the given degree.
    pub fn vertical(&self, chart: &str, degree: usize, v: &SparseVec<K>) -> VhElement<K> {
        let mut out = VhElement::zero(chart);
        for (i, c) in v.iter() {
            out.insert((Word::empty(), degree, *i), c.clone());
        }
        out
    }

    pub fn one_form(&self, chart: &str, basis: usize) -> VhElement<K> {
        self.vertical(chart, 1, &SparseVec::unit(basis))
    }

    // -- algebra -----------------------------------------------------------

    /// The twisted product.
    pub fn multiply(&self, a: &VhElement<K>, b: &VhElement<K>) -> Result<VhElement<K>> {
        if a.chart != b.chart {
            return Err(Error::ChartMismatch(a.chart.clone(), b.chart.clone()));
        }
        let pres = self.bundle.horizontal();
        let mut out = VhElement::zero(a.chart.clone());
        for ((wa, na, ia), ca) in &a.terms {
            for ((wb, nb, ib), cb) in &b.terms {
                // (ψ ⊗ η)(φ ⊗ ϑ) = (-1)^{∂η ∂φ} Σ ψ φ_k ⊗ (η ∘ c_k) ϑ
                let sign = if (na * pres.word_grade(wb)) % 2 == 1 {
                    -K::one()
                } else {
                    K::one()
                };
                let coeff = ca.clone() * cb.clone() * sign;
                let f = self.bundle.coact_word(wb)?;
                for (ws, cf) in f.terms() {
                    let hor = AlgElement::from_terms(pres, vec![(wa.concat(&ws[0]), K::one())])?;
                    let ck = AlgElement::from_terms(
                        self.bundle.hopf().presentation(),
                        vec![(ws[1].clone(), K::one())],
                    )?;
                    let eta_ck = self
                        .envelope
                        .circ(*na, &SparseVec::unit(*ia), &ck)?;
                    let env = self
                        .envelope
                        .multiply(*na, &eta_ck, *nb, &SparseVec::unit(*ib))?;
                    for (hw, hc) in hor.terms() {
                        for (ei, ec) in env.iter() {
                            out.insert(
                                (hw.clone(), na + nb, *ei),
                                coeff.clone() * cf.clone() * hc.clone() * ec.clone(),
                            );
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The star `(φ ⊗ ϑ)* = Σ φ_k* ⊗ (ϑ* ∘ c_k*)`.
    pub fn star(&self, a: &VhElement<K>) -> Result<VhElement<K>> {
        let pres = self.bundle.horizontal();
        let mut out = VhElement::zero(a.chart.clone());
        for ((w, n, i), c) in &a.terms {
            let f = self.bundle.coact_word(w)?;
            let theta_star = self.envelope.star(*n, &SparseVec::unit(*i))?;
            for (ws, cf) in f.terms() {
                let hor_star = AlgElement::from_terms(pres, vec![(ws[0].clone(), K::one())])?
                    .star()?;
                let ck_star = AlgElement::from_terms(
                    self.bundle.hopf().presentation(),
                    vec![(ws[1].clone(), K::one())],
                )?
                .star()?;
                let env = self.envelope.circ(*n, &theta_star, &ck_star)?;
                for (hw, hc) in hor_star.terms() {
                    for (ei, ec) in env.iter() {
                        out.insert(
                            (hw.clone(), *n, *ei),
                            c.conjugate() * cf.conjugate() * hc.clone() * ec.clone(),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    // -- differential ------------------------------------------------------

    /// `∂_D(φ ⊗ 1) = D(φ) ⊗ 1 + (-1)^{∂φ} Σ φ_k ⊗ π(c_k)`.
    fn partial_horizontal(&self, chart: &Chart<K>, w: &Word) -> Result<VhElement<K>> {
        let pres = self.bundle.horizontal();
        let label = &chart.conn.label;
        let mut out = VhElement::zero(label.clone());
        let e = AlgElement::from_terms(pres, vec![(w.clone(), K::one())])?;
        let de = chart.conn.apply(&e)?;
        for (dw, dc) in de.terms() {
            out.insert((dw.clone(), 0, 0), dc.clone());
        }
        let sign = if pres.word_grade(w) % 2 == 1 {
            -K::one()
        } else {
            K::one()
        };
        let f = self.bundle.coact_word(w)?;
        for (ws, cf) in f.terms() {
            let ck = AlgElement::from_terms(
                self.bundle.hopf().presentation(),
                vec![(ws[1].clone(), K::one())],
            )?;
            let pi = self.space.project(&ck)?;
            let pi_env = self.envelope.project(1, &pi);
            for (ei, ec) in pi_env.iter() {
                out.insert(
                    (ws[0].clone(), 1, *ei),
                    sign.clone() * cf.clone() * ec.clone(),
                );
            }
        }
        Ok(out)
    }

    /// `∂_D(1 ⊗ ϑ) = ρ_D(ϑ) ⊗ 1 + 1 ⊗ dϑ` on a degree-one basis class.
    fn partial_one_form(&self, chart: &Chart<K>, basis: usize) -> Result<VhElement<K>> {
        let label = &chart.conn.label;
        let mut out = VhElement::zero(label.clone());
        for (w, c) in chart.curvature[basis].terms() {
            out.insert((w.clone(), 0, 0), c.clone());
        }
        let d = self.envelope.differential(1, &SparseVec::unit(basis))?;
        for (ei, ec) in d.iter() {
            out.insert((Word::empty(), 2, *ei), ec.clone());
        }
        Ok(out)
    }

    /// The chart differential, extended by the graded Leibniz rule.
    pub fn differential(&self, x: &VhElement<K>) -> Result<VhElement<K>> {
        let chart = self.chart(&x.chart)?;
        let pres = self.bundle.horizontal();
        let m = self.space.dim();
        let mut out = VhElement::zero(x.chart.clone());
        for ((w, n, i), c) in &x.terms {
            // term = (w ⊗ 1) · (1 ⊗ ϑ_{l1}) ⋯ (1 ⊗ ϑ_{ln})
            let mut legs = vec![0usize; *n];
            let mut rest = self.envelope.quotient(*n).rep_index(*i);
            for slot in (0..*n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            // ∂(w ⊗ 1) · (1 ⊗ class)
            let dh = self.partial_horizontal(chart, w)?;
            let tail = self.vertical(&x.chart, *n, &SparseVec::unit(*i));
            let mut acc = self.multiply(&dh, &tail)?;
            // Σ_j ± (w ⊗ prefix) ∂(1⊗ϑ_j) (1 ⊗ suffix)
            let base_sign = pres.word_grade(w);
            for (j, &leg) in legs.iter().enumerate() {
                let sign = if (base_sign + j) % 2 == 1 {
                    -K::one()
                } else {
                    K::one()
                };
                let prefix_idx = tensor_index(&legs[..j], m);
                let prefix = self.envelope.project(j, &SparseVec::unit(prefix_idx));
                let front = self.multiply(
                    &self.horizontal(
                        &x.chart,
                        &AlgElement::from_terms(pres, vec![(w.clone(), sign)])?,
                    ),
                    &self.vertical(&x.chart, j, &prefix),
                )?;
                let mid = self.partial_one_form(chart, leg)?;
                let suffix_idx = tensor_index(&legs[j + 1..], m);
                let suffix = self
                    .envelope
                    .project(*n - j - 1, &SparseVec::unit(suffix_idx));
                let back = self.vertical(&x.chart, *n - j - 1, &suffix);
                acc = acc.add(&self.multiply(&self.multiply(&front, &mid)?, &back)?)?;
            }
            out = out.add(&acc.scale(c))?;
        }
        Ok(out)
    }

    // -- gauge -------------------------------------------------------------

    /// Apply the gauge isomorphism for difference `E`: identity on the
    /// horizontal part, `ϑ ↦ ϑ - χ_E(ϑ)` on one-forms, multiplicatively.
    pub fn gauge_apply(
        &self,
        x: &VhElement<K>,
        chi: &[AlgElement<K>],
        target_chart: &str,
    ) -> Result<VhElement<K>> {
        let pres = self.bundle.horizontal();
        let m = self.space.dim();
        let mut out = VhElement::zero(target_chart.to_string());
        for ((w, n, i), c) in &x.terms {
            let mut legs = vec![0usize; *n];
            let mut rest = self.envelope.quotient(*n).rep_index(*i);
            for slot in (0..*n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            let mut acc = self.horizontal(
                target_chart,
                &AlgElement::from_terms(pres, vec![(w.clone(), K::one())])?,
            );
            for &leg in &legs {
                let factor = self
                    .one_form(target_chart, leg)
                    .sub(&self.horizontal(target_chart, &chi[leg]))?;
                acc = self.multiply(&acc, &factor)?;
            }
            out = out.add(&acc.scale(c))?;
        }
        Ok(out)
    }

    /// Difference `D_target - D_source` of two charts.
    pub fn chart_difference(&self, source: &str, target: &str) -> Result<Preconnection<K>> {
        let s = self.chart(source)?;
        let t = self.chart(target)?;
        t.conn
            .difference(&s.conn, format!("{}-{}", target, source))
    }
}

fn tensor_index(legs: &[usize], m: usize) -> usize {
    let mut acc = 0;
    for &l in legs {
        acc = acc * m + l;
    }
    acc
}

/// A glued form: a chart label plus its representation there; equality of
/// glued forms means equality after transport.
#[derive(Debug, Clone)]
pub struct GluedForm<K> {
    pub value: VhElement<K>,
}

impl<K: Field> GluedForm<K> {
    pub fn new(value: VhElement<K>) -> Self {
        GluedForm { value }
    }

    pub fn chart(&self) -> &str {
        &self.value.chart
    }

    /// Transport to another chart of the family via `h_{D_t - D_s}`.
    pub fn transport(&self, ctx: &VhContext<K>, target: &str) -> Result<GluedForm<K>> {
        if self.chart() == target {
            return Ok(self.clone());
        }
        ctx.chart(target)?;
        let e = ctx.chart_difference(self.chart(), target)?;
        let chi = ctx.gauge_table(&e)?;
        Ok(GluedForm {
            value: ctx.gauge_apply(&self.value, &chi, target)?,
        })
    }

    /// The intrinsic differential: apply the chart differential in the
    /// current chart (chart independence is verified by the suites).
    pub fn differential(&self, ctx: &VhContext<K>) -> Result<GluedForm<K>> {
        Ok(GluedForm {
            value: ctx.differential(&self.value)?,
        })
    }

    pub fn multiply(&self, ctx: &VhContext<K>, other: &GluedForm<K>) -> Result<GluedForm<K>> {
        let other = other.transport(ctx, self.chart())?;
        Ok(GluedForm {
            value: ctx.multiply(&self.value, &other.value)?,
        })
    }

    pub fn equals(&self, ctx: &VhContext<K>, other: &GluedForm<K>) -> Result<bool> {
        let other = other.transport(ctx, self.chart())?;
        Ok(self.value == other.value)
    }
}

/// The connection form of a chart: `ω(ϑ) = π_D^{-1}(1 ⊗ ϑ)` as glued
/// forms, one per invariant-form basis class.
pub fn connection_of<K: Field>(ctx: &VhContext<K>, chart: &str) -> Result<Vec<GluedForm<K>>> {
    ctx.chart(chart)?;
    Ok((0..ctx.space().dim())
        .map(|i| GluedForm::new(ctx.one_form(chart, i)))
        .collect())
}

// ---------------------------------------------------------------------------
// the pull-back homomorphism
// ---------------------------------------------------------------------------

/// Chart representation of an element of `Ω_P ⊗̂ Ψ^∧`: sparse sum over
/// `(hor word, env1, A word, env2)` with the full calculus trivialized as
/// `A ⊗ Ψ_inv^∧`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackElement<K> {
    pub chart: String,
    terms: BTreeMap<(Word, usize, usize, Word, usize, usize), K>,
}

impl<K: Field> PullbackElement<K> {
    fn zero(chart: impl Into<String>) -> Self {
        PullbackElement {
            chart: chart.into(),
            terms: BTreeMap::new(),
        }
    }

    fn insert(&mut self, key: (Word, usize, usize, Word, usize, usize), c: K) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(K::zero);
        *entry = entry.clone() + c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let entry = out.terms.entry(k.clone()).or_insert_with(K::zero);
            *entry = entry.clone() + c.clone();
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    fn scale(&self, c: &K) -> Self {
        PullbackElement {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Membership in `Ω_P ⊗ A`: no vertical legs on the calculus side.
    pub fn in_omega_tensor_a(&self) -> bool {
        self.terms.keys().all(|(_, _, _, _, n2, _)| *n2 == 0)
    }
}

impl<K: Field> VhContext<K> {
    fn vh_into_pullback(&self, x: &VhElement<K>) -> PullbackElement<K> {
        let mut out = PullbackElement::zero(x.chart.clone());
        for ((w, n, i), c) in &x.terms {
            out.insert((w.clone(), *n, *i, Word::empty(), 0, 0), c.clone());
        }
        out
    }

    /// Product on `Ω_P ⊗̂ Ψ^∧` in a chart: `(X ⊗ Y)(X' ⊗ Y') =
    /// (-1)^{∂Y ∂X'} X X' ⊗ Y Y'` with the calculus product
    /// `(a ⊗ ϑ)(b ⊗ η) = Σ a b^(1) ⊗ (ϑ ∘ b^(2)) η`.
    fn pullback_multiply(
        &self,
        a: &PullbackElement<K>,
        b: &PullbackElement<K>,
    ) -> Result<PullbackElement<K>> {
        let pres = self.bundle.horizontal();
        let apres = self.bundle.hopf().presentation();
        let mut out = PullbackElement::zero(a.chart.clone());
        for ((wa, na, ia, aw, n2a, i2a), ca) in &a.terms {
            for ((wb, nb, ib, bw, n2b, i2b), cb) in &b.terms {
                let deg_y = *n2a;
                let deg_xp = pres.word_grade(wb) + nb;
                let sign = if (deg_y * deg_xp) % 2 == 1 {
                    -K::one()
                } else {
                    K::one()
                };
                // X part: vh product of single terms
                let mut xa = VhElement::zero(a.chart.clone());
                xa.insert((wa.clone(), *na, *ia), K::one());
                let mut xb = VhElement::zero(a.chart.clone());
                xb.insert((wb.clone(), *nb, *ib), K::one());
                let x = self.multiply(&xa, &xb)?;
                // Y part: (aw ⊗ ϑ_{i2a})(bw ⊗ ϑ_{i2b})
                let cop = self.bundle.hopf().coproduct_word(bw)?;
                let mut ys: BTreeMap<(Word, usize, usize), K> = BTreeMap::new();
                for (ws, cc) in cop.terms() {
                    let b2 = AlgElement::from_terms(apres, vec![(ws[1].clone(), K::one())])?;
                    let circ = self.envelope.circ(*n2a, &SparseVec::unit(*i2a), &b2)?;
                    let prod_aw = AlgElement::from_terms(
                        apres,
                        vec![(aw.concat(&ws[0]), K::one())],
                    )?;
                    for (ei, ec) in circ.iter() {
                        let env = self.envelope.multiply(
                            *n2a,
                            &SparseVec::unit(*ei),
                            *n2b,
                            &SparseVec::unit(*i2b),
                        )?;
                        for (fi, fc) in env.iter() {
                            for (pw, pc) in prod_aw.terms() {
                                let key = (pw.clone(), n2a + n2b, *fi);
                                let add = cc.clone() * ec.clone() * fc.clone() * pc.clone();
                                let entry = ys.entry(key).or_insert_with(K::zero);
                                *entry = entry.clone() + add;
                            }
                        }
                    }
                }
                for ((xw, xn, xi), xc) in x.terms() {
                    for ((yw, yn, yi), yc) in &ys {
                        out.insert(
                            (xw.clone(), *xn, *xi, yw.clone(), *yn, *yi),
                            sign.clone() * ca.clone() * cb.clone() * xc.clone() * yc.clone(),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// `ϖ̂` on a degree-one class: `ϖ(ϑ) + 1 ⊗ ϑ` inside `Ψ_inv^∧ ⊗̂ Ψ^∧`.
    fn coact_one_form(&self, chart: &str, basis: usize) -> Result<PullbackElement<K>> {
        let mut out = PullbackElement::zero(chart.to_string());
        let varpi = &self.braid.coadjoint_table()[basis];
        for (l, c_el) in varpi.iter().enumerate() {
            for (w, c) in c_el.terms() {
                out.insert((Word::empty(), 1, l, w.clone(), 0, 0), c.clone());
            }
        }
        out.insert((Word::empty(), 0, 0, Word::empty(), 1, basis), K::one());
        Ok(out)
    }

    /// The pull-back `F̂` in a chart: `F̂(φ ⊗ ϑ) = F⋆(φ) ϖ̂(ϑ)`.
    pub fn pullback(&self, x: &VhElement<K>) -> Result<PullbackElement<K>> {
        let m = self.space.dim();
        let mut out = PullbackElement::zero(x.chart.clone());
        for ((w, n, i), c) in &x.terms {
            // F⋆(w) as a pullback element
            let f = self.bundle.coact_word(w)?;
            let mut acc = PullbackElement::zero(x.chart.clone());
            for (ws, cf) in f.terms() {
                acc.insert(
                    (ws[0].clone(), 0, 0, ws[1].clone(), 0, 0),
                    cf.clone(),
                );
            }
            // times ϖ̂ of each tensor leg of the class representative
            let mut legs = vec![0usize; *n];
            let mut rest = self.envelope.quotient(*n).rep_index(*i);
            for slot in (0..*n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            for &leg in &legs {
                let v = self.coact_one_form(&x.chart, leg)?;
                acc = self.pullback_multiply(&acc, &v)?;
            }
            out = out.add(&acc.scale(c));
        }
        Ok(out)
    }

    /// Differential on `Ω_P ⊗̂ Ψ^∧` in a chart: `∂_D ⊗ id ± id ⊗ d`.
    pub fn pullback_differential(&self, x: &PullbackElement<K>) -> Result<PullbackElement<K>> {
        let _ = self.chart(&x.chart)?;
        let pres = self.bundle.horizontal();
        let apres = self.bundle.hopf().presentation();
        let mut out = PullbackElement::zero(x.chart.clone());
        for ((w, n, i, aw, n2, i2), c) in &x.terms {
            // ∂_D on the X part
            let mut xa = VhElement::zero(x.chart.clone());
            xa.insert((w.clone(), *n, *i), K::one());
            let dx = self.differential(&xa)?;
            for ((dw, dn, di), dc) in dx.terms() {
                out.insert(
                    (dw.clone(), *dn, *di, aw.clone(), *n2, *i2),
                    c.clone() * dc.clone(),
                );
            }
            // ± id ⊗ d on the Y part: d(a ⊗ ϑ) = Σ a^(1) π(a^(2)) ϑ + a dϑ
            let sign = if (pres.word_grade(w) + n) % 2 == 1 {
                -K::one()
            } else {
                K::one()
            };
            let cop = self.bundle.hopf().coproduct_word(aw)?;
            for (ws, cc) in cop.terms() {
                let a2 = AlgElement::from_terms(apres, vec![(ws[1].clone(), K::one())])?;
                let pi = self.space.project(&a2)?;
                let pi_env = self.envelope.project(1, &pi);
                let env = self.envelope.multiply(1, &pi_env, *n2, &SparseVec::unit(*i2))?;
                for (fi, fc) in env.iter() {
                    out.insert(
                        (w.clone(), *n, *i, ws[0].clone(), n2 + 1, *fi),
                        sign.clone() * c.clone() * cc.clone() * fc.clone(),
                    );
                }
            }
            if *n2 > 0 {
                let d = self.envelope.differential(*n2, &SparseVec::unit(*i2))?;
                for (fi, fc) in d.iter() {
                    out.insert(
                        (w.clone(), *n, *i, aw.clone(), n2 + 1, *fi),
                        sign.clone() * c.clone() * fc.clone(),
                    );
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// verification suites
// ---------------------------------------------------------------------------

impl<K: Field> VhContext<K> {
    /// A sibling context sharing the calculus, braid, multiplets and charts
    /// but living over a different envelope variant.
    pub fn with_envelope(&self, variant: EnvelopeVariant, n_max: usize) -> Result<VhContext<K>> {
        let envelope = Arc::new(EnvelopeSpace::build(&self.braid, variant, n_max)?);
        let mut out = self.clone();
        out.envelope = envelope;
        Ok(out)
    }

    /// Window generators of the vertical-horizontal algebra in a chart:
    /// horizontal window words and the invariant one-form classes.
    pub fn window_generators(&self, chart: &str, hor_degree: usize) -> Result<Vec<VhElement<K>>> {
        let pres = self.bundle.horizontal();
        let mut out = vec![];
        for w in pres.normal_words(hor_degree) {
            let e = AlgElement::from_terms(pres, vec![(w, K::one())])?;
            out.push(self.horizontal(chart, &e));
        }
        for i in 0..self.space.dim() {
            out.push(self.one_form(chart, i));
        }
        Ok(out)
    }

    /// Gauge transport of a pull-back representation: the gauge acts on the
    /// bundle-form part and leaves the calculus part alone.
    pub fn pullback_gauge(
        &self,
        p: &PullbackElement<K>,
        chi: &[AlgElement<K>],
        target: &str,
    ) -> Result<PullbackElement<K>> {
        let mut out = PullbackElement::zero(target.to_string());
        for ((w, n, i, aw, n2, i2), c) in &p.terms {
            let mut x = VhElement::zero(p.chart.clone());
            x.insert((w.clone(), *n, *i), K::one());
            let gx = self.gauge_apply(&x, chi, target)?;
            for ((xw, xn, xi), xc) in gx.terms() {
                out.insert(
                    (xw.clone(), *xn, *xi, aw.clone(), *n2, *i2),
                    c.clone() * xc.clone(),
                );
            }
        }
        Ok(out)
    }
}

/// Gauge-isomorphism laws (the chart-change machinery): identity at zero,
/// composition, hermiticity, multiplicativity, well-definedness on the
/// quadratic relations, and the differential intertwining between two
/// charts of the family.
pub fn verify_gauge_suite<K: Field>(
    ctx: &VhContext<K>,
    source_chart: &str,
    target_chart: &str,
    second_difference: Option<&Preconnection<K>>,
) -> Result<Suite> {
    let mut suite = Suite::new(format!(
        "gauge:{}:{}->{}",
        ctx.bundle().name(),
        source_chart,
        target_chart
    ));
    let hor_deg = ctx.hor_degree().min(2);
    let gens = ctx.window_generators(source_chart, hor_deg)?;
    let m = ctx.space().dim();
    let zero_chi = vec![AlgElement::zero(ctx.bundle().horizontal()); m];
    // h_0 = id
    let mut h0_ok = true;
    let mut witness = String::new();
    for x in &gens {
        let hx = ctx.gauge_apply(x, &zero_chi, source_chart)?;
        if hx != *x {
            h0_ok = false;
            witness = format!("{x:?}");
            break;
        }
    }
    suite.check("gauge-zero-is-identity", h0_ok, || witness.clone());
    let e = ctx.chart_difference(source_chart, target_chart)?;
    let chi_e = ctx.gauge_table(&e)?;
    // composition h_E h_W = h_{E+W}
    let w_diff = match second_difference {
        Some(w) => w.clone(),
        None => e.negate(format!("-({})", e.label)),
    };
    let chi_w = ctx.gauge_table(&w_diff)?;
    let ew = e.offset(&w_diff, "E+W")?;
    let chi_ew = ctx.gauge_table(&ew)?;
    let mut comp_ok = true;
    for x in &gens {
        let via_two = ctx.gauge_apply(&ctx.gauge_apply(x, &chi_w, source_chart)?, &chi_e, target_chart)?;
        let direct = ctx.gauge_apply(x, &chi_ew, target_chart)?;
        if via_two != direct {
            comp_ok = false;
            witness = format!("{x:?}");
            break;
        }
    }
    suite.check("gauge-composition", comp_ok, || witness.clone());
    // hermiticity h(x*) = h(x)*
    let mut herm_ok = true;
    for x in &gens {
        let lhs = ctx.gauge_apply(&ctx.star(x)?, &chi_e, target_chart)?;
        let rhs = ctx.star(&ctx.gauge_apply(x, &chi_e, target_chart)?)?;
        if lhs != rhs {
            herm_ok = false;
            witness = format!("{x:?}");
            break;
        }
    }
    suite.check("gauge-hermitian", herm_ok, || witness.clone());
    // multiplicativity h(xy) = h(x) h(y)
    let mut mult_ok = true;
    'mult: for x in &gens {
        for y in &gens {
            let lhs = ctx.gauge_apply(&ctx.multiply(x, y)?, &chi_e, target_chart)?;
            let rhs = ctx.multiply(
                &ctx.gauge_apply(x, &chi_e, target_chart)?,
                &ctx.gauge_apply(y, &chi_e, target_chart)?,
            )?;
            if lhs != rhs {
                mult_ok = false;
                witness = format!("{x:?} * {y:?}");
                break 'mult;
            }
        }
    }
    suite.check("gauge-multiplicative", mult_ok, || witness.clone());
    // well-definedness on the quadratic relations: images vanish
    let mut rel_ok = true;
    for rel in ctx.envelope().quotient(2.min(ctx.envelope().max_degree())).relations().basis() {
        let mut acc = VhElement::zero(target_chart.to_string());
        for (idx, c) in rel.iter() {
            let (i, j) = (idx / m, idx % m);
            let fi = ctx
                .one_form(target_chart, i)
                .sub(&ctx.horizontal(target_chart, &chi_e[i]))?;
            let fj = ctx
                .one_form(target_chart, j)
                .sub(&ctx.horizontal(target_chart, &chi_e[j]))?;
            acc = acc.add(&ctx.multiply(&fi, &fj)?.scale(c))?;
        }
        if !acc.is_zero() {
            rel_ok = false;
            witness = format!("{acc:?}");
            break;
        }
    }
    suite.check("gauge-respects-quadratic-relations", rel_ok, || witness.clone());
    // differential intertwining h_E ∂_D = ∂_{D+E} h_E
    let mut twine_ok = true;
    for x in &gens {
        let lhs = ctx.gauge_apply(&ctx.differential(x)?, &chi_e, target_chart)?;
        let rhs = ctx.differential(&ctx.gauge_apply(x, &chi_e, target_chart)?)?;
        if lhs != rhs {
            twine_ok = false;
            witness = format!("{x:?}");
            break;
        }
    }
    suite.check("gauge-intertwines-differentials", twine_ok, || witness.clone());
    Ok(suite)
}

/// Differential-structure laws inside one chart: associativity and graded
/// star antimultiplicativity of the product, Leibniz rule, hermiticity and
/// square-zero of the differential.
pub fn verify_chart_suite<K: Field>(ctx: &VhContext<K>, chart: &str) -> Result<Suite> {
    let mut suite = Suite::new(format!("chart:{}:{}", ctx.bundle().name(), chart));
    let pres = ctx.bundle().horizontal();
    let gens = ctx.window_generators(chart, ctx.hor_degree().min(2))?;
    let small: Vec<&VhElement<K>> = gens.iter().take(10).collect();
    let mut assoc_ok = true;
    let mut witness = String::new();
    'assoc: for x in &small {
        for y in &small {
            for z in &small {
                let lhs = ctx.multiply(&ctx.multiply(x, y)?, z)?;
                let rhs = ctx.multiply(x, &ctx.multiply(y, z)?)?;
                if lhs != rhs {
                    assoc_ok = false;
                    witness = format!("{x:?} {y:?} {z:?}");
                    break 'assoc;
                }
            }
        }
    }
    suite.check("product-associative", assoc_ok, || witness.clone());
    // star: antilinear involution, graded antimultiplicative
    let mut star_ok = true;
    let mut star_mult_ok = true;
    for x in &gens {
        if ctx.star(&ctx.star(x)?)? != *x {
            star_ok = false;
            witness = format!("{x:?}");
        }
    }
    'star: for x in &gens {
        for y in &gens {
            let (gx, gy) = match (x.grade(pres), y.grade(pres)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let sign = if (gx * gy) % 2 == 1 { -K::one() } else { K::one() };
            let lhs = ctx.star(&ctx.multiply(x, y)?)?;
            let rhs = ctx
                .multiply(&ctx.star(y)?, &ctx.star(x)?)?
                .scale(&sign);
            if lhs != rhs {
                star_mult_ok = false;
                witness = format!("{x:?} {y:?}");
                break 'star;
            }
        }
    }
    suite.check("star-involutive", star_ok, || witness.clone());
    suite.check("star-antimultiplicative", star_mult_ok, || witness.clone());
    // graded Leibniz
    let mut leibniz_ok = true;
    'leib: for x in &gens {
        for y in &gens {
            let lhs = ctx.differential(&ctx.multiply(x, y)?)?;
            let grade = match x.grade(pres) {
                Some(g) => g,
                None => continue,
            };
            let sign = if grade % 2 == 1 { -K::one() } else { K::one() };
            let rhs = ctx
                .multiply(&ctx.differential(x)?, y)?
                .add(&ctx.multiply(&x.scale(&sign), &ctx.differential(y)?)?)?;
            if lhs != rhs {
                leibniz_ok = false;
                witness = format!("{x:?} {y:?}");
                break 'leib;
            }
        }
    }
    suite.check("differential-leibniz", leibniz_ok, || witness.clone());
    // hermitian differential
    let mut herm_ok = true;
    for x in &gens {
        let lhs = ctx.differential(&ctx.star(x)?)?;
        let rhs = ctx.star(&ctx.differential(x)?)?;
        if lhs != rhs {
            herm_ok = false;
            witness = format!("{x:?}");
            break;
        }
    }
    suite.check("differential-hermitian", herm_ok, || witness.clone());
    // square zero on generators
    let mut sq_ok = true;
    for x in &gens {
        let dd = ctx.differential(&ctx.differential(x)?)?;
        if !dd.is_zero() {
            sq_ok = false;
            witness = format!("{x:?} -> {dd:?}");
            break;
        }
    }
    suite.check("differential-square-zero", sq_ok, || witness.clone());
    Ok(suite)
}

/// Gluing and connection-correspondence laws: chart independence of the
/// differential, products, pull-back and horizontality; the horizontality
/// equality; and the connection-form verifications per chart.
pub fn verify_gluing_suite<K: Field>(ctx: &VhContext<K>) -> Result<Suite> {
    let mut suite = Suite::new(format!("gluing:{}", ctx.bundle().name()));
    let labels: Vec<String> = ctx.charts().iter().map(|c| c.conn.label.clone()).collect();
    let hor_deg = ctx.hor_degree().min(2);
    let m = ctx.space().dim();
    for l1 in &labels {
        let gens = ctx.window_generators(l1, hor_deg)?;
        for l2 in &labels {
            if l1 == l2 {
                // transport to the same chart is the identity
                let mut ok = true;
                for x in &gens {
                    let g = GluedForm::new(x.clone());
                    if !g.transport(ctx, l1)?.value.eq(x) {
                        ok = false;
                    }
                }
                suite.check(format!("transport-identity[{l1}]"), ok, || String::new());
                continue;
            }
            // d_P chart-independence
            let mut d_ok = true;
            let mut witness = String::new();
            for x in &gens {
                let g = GluedForm::new(x.clone());
                let route1 = g.differential(ctx)?.transport(ctx, l2)?;
                let route2 = g.transport(ctx, l2)?.differential(ctx)?;
                if route1.value != route2.value {
                    d_ok = false;
                    witness = format!("{x:?}");
                    break;
                }
            }
            suite.check(format!("dP-chart-independent[{l1}->{l2}]"), d_ok, || {
                witness.clone()
            });
            // product chart-independence
            let mut p_ok = true;
            'prod: for x in gens.iter().take(8) {
                for y in gens.iter().take(8) {
                    let route1 = GluedForm::new(ctx.multiply(x, y)?).transport(ctx, l2)?;
                    let gx = GluedForm::new(x.clone()).transport(ctx, l2)?;
                    let gy = GluedForm::new(y.clone()).transport(ctx, l2)?;
                    let route2 = GluedForm::new(ctx.multiply(&gx.value, &gy.value)?);
                    if route1.value != route2.value {
                        p_ok = false;
                        witness = format!("{x:?} {y:?}");
                        break 'prod;
                    }
                }
            }
            suite.check(format!("product-chart-independent[{l1}->{l2}]"), p_ok, || {
                witness.clone()
            });
            // pull-back chart-independence
            let e = ctx.chart_difference(l1, l2)?;
            let chi = ctx.gauge_table(&e)?;
            let mut f_ok = true;
            for x in &gens {
                let route1 = ctx.pullback_gauge(&ctx.pullback(x)?, &chi, l2)?;
                let route2 = ctx.pullback(&ctx.gauge_apply(x, &chi, l2)?)?;
                if route1 != route2 {
                    f_ok = false;
                    witness = format!("{x:?}");
                    break;
                }
            }
            suite.check(format!("pullback-chart-independent[{l1}->{l2}]"), f_ok, || {
                witness.clone()
            });
        }
        // horizontality equality on the window: x horizontal ⟺ F̂(x) ∈ Ω ⊗ A
        let mut horiz_ok = true;
        let mut witness = String::new();
        for x in &gens {
            let p = ctx.pullback(x)?;
            if p.in_omega_tensor_a() != x.is_horizontal() {
                horiz_ok = false;
                witness = format!("{x:?}");
                break;
            }
        }
        // mixed elements with a vertical leg must fail the test
        for i in 0..m {
            let x = ctx.one_form(l1, i);
            if ctx.pullback(&x)?.in_omega_tensor_a() {
                horiz_ok = false;
                witness = format!("one-form {i} looks horizontal");
            }
        }
        suite.check(format!("horizontality-equality[{l1}]"), horiz_ok, || {
            witness.clone()
        });
        // pull-back is a differential homomorphism: F̂ ∂_D = (∂_D ⊗̂ d) F̂
        let mut fd_ok = true;
        for x in &gens {
            let lhs = ctx.pullback(&ctx.differential(x)?)?;
            let rhs = ctx.pullback_differential(&ctx.pullback(x)?)?;
            if lhs != rhs {
                fd_ok = false;
                witness = format!("{x:?}");
                break;
            }
        }
        suite.check(format!("pullback-differential[{l1}]"), fd_ok, || {
            witness.clone()
        });
        // connection form of the chart
        let omega = connection_of(ctx, l1)?;
        // regularity: ω(ϑ) φ = (-1)^{∂φ} Σ φ_k ω(ϑ ∘ c_k)
        let pres = ctx.bundle().horizontal();
        let mut reg_ok = true;
        for i in 0..m {
            for w in pres.normal_words(hor_deg) {
                let phi = AlgElement::from_terms(pres, vec![(w.clone(), K::one())])?;
                let lhs = ctx.multiply(&omega[i].value, &ctx.horizontal(l1, &phi))?;
                let sign = if pres.word_grade(&w) % 2 == 1 {
                    -K::one()
                } else {
                    K::one()
                };
                let f = ctx.bundle().coact_word(&w)?;
                let mut rhs = VhElement::zero(l1.clone());
                for (ws, cf) in f.terms() {
                    let ck = AlgElement::from_terms(
                        ctx.bundle().hopf().presentation(),
                        vec![(ws[1].clone(), K::one())],
                    )?;
                    let circ = ctx.space().circ(&SparseVec::unit(i), &ck)?;
                    let phi_k = AlgElement::from_terms(pres, vec![(ws[0].clone(), cf.clone())])?;
                    let term = ctx.multiply(
                        &ctx.horizontal(l1, &phi_k),
                        &ctx.vertical(l1, 1, &circ),
                    )?;
                    rhs = rhs.add(&term)?;
                }
                if lhs != rhs.scale(&sign) {
                    reg_ok = false;
                    witness = format!("ϑ_{i}, {}", pres.display_word(&w));
                }
            }
        }
        suite.check(format!("connection-regular[{l1}]"), reg_ok, || witness.clone());
        // multiplicativity: quadratic relation images vanish
        let mut mult_ok = true;
        for rel in ctx
            .envelope()
            .quotient(2.min(ctx.envelope().max_degree()))
            .relations()
            .basis()
        {
            let mut acc = VhElement::zero(l1.clone());
            for (idx, c) in rel.iter() {
                let (i, j) = (idx / m, idx % m);
                acc = acc.add(&ctx.multiply(&omega[i].value, &omega[j].value)?.scale(c))?;
            }
            if !acc.is_zero() {
                mult_ok = false;
                witness = format!("{acc:?}");
            }
        }
        suite.check(format!("connection-multiplicative[{l1}]"), mult_ok, || {
            witness.clone()
        });
        // covariant-derivative round trip: hor-projection of d_P on
        // horizontal elements recovers D
        let chart = ctx.chart(l1)?;
        let mut round_ok = true;
        for w in pres.normal_words(hor_deg) {
            let phi = AlgElement::from_terms(pres, vec![(w.clone(), K::one())])?;
            let dphi = ctx.differential(&ctx.horizontal(l1, &phi))?;
            let hproj = dphi.horizontal_part(pres);
            if hproj != chart.conn.apply(&phi)? {
                round_ok = false;
                witness = pres.display_word(&w);
                break;
            }
        }
        suite.check(format!("covariant-derivative-roundtrip[{l1}]"), round_ok, || {
            witness.clone()
        });
    }
    // connection difference across charts: ω_{D+E}(ϑ) - ω_D(ϑ) = χ_E(ϑ)
    if labels.len() >= 2 {
        let (l1, l2) = (&labels[0], &labels[1]);
        let e = ctx.chart_difference(l1, l2)?;
        let chi = ctx.gauge_table(&e)?;
        let om1 = connection_of(ctx, l1)?;
        let om2 = connection_of(ctx, l2)?;
        let mut ok = true;
        let mut witness = String::new();
        for i in 0..m {
            let lhs = GluedForm::new(
                om2[i]
                    .transport(ctx, l1)?
                    .value
                    .sub(&om1[i].value)?,
            );
            let rhs = GluedForm::new(ctx.horizontal(l1, &chi[i]));
            if !lhs.equals(ctx, &rhs)? {
                ok = false;
                witness = format!("class {i}");
                break;
            }
        }
        suite.check("connection-difference-law", ok, || witness.clone());
    }
    Ok(suite)
}

/// Appendix-style exterior machinery: the two closed forms of the gauge
/// truncation formula, stability of the antisymmetrizer kernel, the
/// exterior-variant intertwining, and the factor-ideal checks.
pub fn exterior_variant_suite<K: Field>(
    ctx: &VhContext<K>,
    source_chart: &str,
    target_chart: &str,
    n_max: usize,
) -> Result<Suite> {
    let mut suite = Suite::new(format!("exterior:{}", ctx.bundle().name()));
    let tensor = ctx.with_envelope(EnvelopeVariant::Tensor, n_max)?;
    let vee = ctx.with_envelope(EnvelopeVariant::Exterior, n_max)?;
    let braid = ctx.braid();
    let m = ctx.space().dim();
    let e = ctx.chart_difference(source_chart, target_chart)?;
    let chi = ctx.gauge_table(&e)?;
    let chi_neg: Vec<AlgElement<K>> = chi.iter().map(|c| c.neg()).collect();
    // χ^{⊗k} of the first k legs of a tensor index, as a horizontal element
    let chi_power = |legs: &[usize]| -> Result<AlgElement<K>> {
        let mut acc = AlgElement::unit(ctx.bundle().horizontal());
        for &l in legs {
            acc = acc.mul(&chi[l])?;
        }
        Ok(acc)
    };
    // Both closed forms of h⋆_{-E} on tensor degrees 2..=3.
    for n in 2..=n_max.min(3) {
        let dim = braid.tensor_dim(n);
        let mut ok_shuffle = true;
        let mut ok_factorial = true;
        let mut witness = String::new();
        for idx in 0..dim {
            // direct: h⋆_{-E}(basis) via the multiplicative gauge
            let mut x = VhElement::zero(source_chart.to_string());
            x.insert((Word::empty(), n, idx), K::one());
            let direct = tensor.gauge_apply(&x, &chi_neg, source_chart)?;
            // shuffle form: Σ_{k+l=n} (χ^{⊗k} ⊗ id^l) A_{kl}
            let mut shuffle_form = VhElement::zero(source_chart.to_string());
            let mut factorial_form = VhElement::zero(source_chart.to_string());
            for k in 0..=n {
                let l = n - k;
                let akl = braid.shuffle_antisymmetrizer(k, l)?;
                let dim_l = braid.tensor_dim(l);
                let img = akl.apply(&SparseVec::unit(idx));
                for (t, c) in img.iter() {
                    let mut legs = vec![0usize; n];
                    let mut rest = *t;
                    for slot in (0..n).rev() {
                        legs[slot] = rest % m;
                        rest /= m;
                    }
                    let hor = chi_power(&legs[..k])?.scale(c);
                    let tail = tensor_index(&legs[k..], m);
                    for (hw, hc) in hor.terms() {
                        shuffle_form.insert((hw.clone(), l, tail), hc.clone());
                    }
                }
                // factorial form: (1/k!) (χ^{⊗k} A_k ⊗ id^l) A_{kl}
                let ak = braid.antisymmetrizer(k)?;
                let akl_then_ak = ak
                    .kron(&crate::linalg::SparseMat::identity(dim_l))
                    .matmul(&akl);
                let mut kfact = K::one();
                for f in 1..=k {
                    kfact = kfact * K::from_int(f as i64);
                }
                let inv = kfact.inverse().expect("factorial invertible");
                let img2 = akl_then_ak.apply(&SparseVec::unit(idx));
                for (t, c) in img2.iter() {
                    let mut legs = vec![0usize; n];
                    let mut rest = *t;
                    for slot in (0..n).rev() {
                        legs[slot] = rest % m;
                        rest /= m;
                    }
                    let hor = chi_power(&legs[..k])?.scale(&(c.clone() * inv.clone()));
                    let tail = tensor_index(&legs[k..], m);
                    for (hw, hc) in hor.terms() {
                        factorial_form.insert((hw.clone(), l, tail), hc.clone());
                    }
                }
            }
            if direct != shuffle_form {
                ok_shuffle = false;
                witness = format!("degree {n} index {idx}");
            }
            if direct != factorial_form {
                ok_factorial = false;
                witness = format!("degree {n} index {idx}");
            }
        }
        suite.check(format!("truncation-shuffle-form[{n}]"), ok_shuffle, || {
            witness.clone()
        });
        suite.check(format!("truncation-factorial-form[{n}]"), ok_factorial, || {
            witness.clone()
        });
    }
    // h⋆_E stabilizes hor ⊗ ker A degreewise.
    let mut stab_ok = true;
    let mut witness = String::new();
    for n in 2..=n_max {
        let ker = braid.antisymmetrizer(n)?.kernel();
        for s in &ker {
            let mut x = VhElement::zero(source_chart.to_string());
            for (t, c) in s.iter() {
                x.insert((Word::empty(), n, *t), c.clone());
            }
            let hx = tensor.gauge_apply(&x, &chi, target_chart)?;
            // group by (hor word, degree): each vertical component must lie
            // in ker A of its degree
            let mut buckets: BTreeMap<(Word, usize), Vec<(usize, K)>> = BTreeMap::new();
            for ((w, l, t), c) in hx.terms() {
                buckets
                    .entry((w.clone(), *l))
                    .or_default()
                    .push((*t, c.clone()));
            }
            for ((w, l), entries) in buckets {
                if l == 0 {
                    // ker A_0 is trivial: a scalar component breaks stability
                    stab_ok = false;
                    witness = format!("degree-0 component at {}", ctx.bundle().horizontal().display_word(&w));
                    continue;
                }
                let v = SparseVec::from_entries(entries);
                let al = braid.antisymmetrizer(l)?;
                if !al.apply(&v).is_zero() {
                    stab_ok = false;
                    witness = format!("degree-{l} component escapes ker A");
                }
            }
        }
    }
    suite.check("gauge-stabilizes-kernel-ideal", stab_ok, || witness.clone());
    // exterior-variant intertwining h_E ∂_D = ∂_{D+E} h_E
    let mut twine_ok = true;
    if vee.envelope().d_stability().is_ok() {
        for x in vee.window_generators(source_chart, ctx.hor_degree().min(2))? {
            let lhs = vee.gauge_apply(&vee.differential(&x)?, &chi, target_chart)?;
            let rhs = vee.differential(&vee.gauge_apply(&x, &chi, target_chart)?)?;
            if lhs != rhs {
                twine_ok = false;
                witness = format!("{x:?}");
                break;
            }
        }
        suite.check("exterior-intertwining", twine_ok, || witness.clone());
    } else {
        suite.skip(
            "exterior-intertwining",
            "kernel ideal not d-stable in this window",
        );
    }
    // factor ideal: [ker A] image spans inside the base envelope, h_E- and
    // d⋆-stability, and the degreewise factorization dimension count.
    let base = ctx.envelope();
    let mut upsilon: Vec<crate::linalg::Subspace<K>> = vec![];
    for n in 0..=n_max {
        let mut span = crate::linalg::Subspace::empty(base.dim(n));
        if n >= 2 {
            for s in braid.antisymmetrizer(n)?.kernel() {
                span.insert(base.project(n, &s));
            }
        }
        upsilon.push(span);
    }
    let mut dims_ok = true;
    for n in 0..=n_max {
        if base.dim(n) - upsilon[n].dim() != vee.envelope().dim(n) {
            dims_ok = false;
            witness = format!(
                "degree {n}: {} - {} != {}",
                base.dim(n),
                upsilon[n].dim(),
                vee.envelope().dim(n)
            );
        }
    }
    suite.check("factor-dimension-count", dims_ok, || witness.clone());
    // h_E stability of hor ⊗ [ker A]^∧ in the base variant
    let mut ups_ok = true;
    for n in 2..=n_max {
        for row in upsilon[n].basis() {
            let mut x = VhElement::zero(source_chart.to_string());
            for (t, c) in row.iter() {
                x.insert((Word::empty(), n, *t), c.clone());
            }
            let hx = ctx.gauge_apply(&x, &chi, target_chart)?;
            let mut buckets: BTreeMap<(Word, usize), Vec<(usize, K)>> = BTreeMap::new();
            for ((w, l, t), c) in hx.terms() {
                buckets
                    .entry((w.clone(), *l))
                    .or_default()
                    .push((*t, c.clone()));
            }
            for ((_, l), entries) in buckets {
                let v = SparseVec::from_entries(entries);
                if l == 0 || !upsilon[l].contains(&v) {
                    ups_ok = false;
                    witness = format!("factor-ideal component at degree {l}");
                }
            }
        }
    }
    suite.check("factor-ideal-gauge-stable", ups_ok, || witness.clone());
    // d⋆-stability: the span of Υ and ∂Υ is closed under ∂ in the window.
    let mut dstar_ok = true;
    'dstar: for n in 2..n_max {
        for row in upsilon[n].basis() {
            let mut x = VhElement::zero(source_chart.to_string());
            for (t, c) in row.iter() {
                x.insert((Word::empty(), n, *t), c.clone());
            }
            let dx = ctx.differential(&x)?;
            if n + 2 <= n_max {
                let ddx = ctx.differential(&dx)?;
                if !ddx.is_zero() {
                    dstar_ok = false;
                    witness = "∂² nonzero on factor ideal".into();
                    break 'dstar;
                }
            }
            // each vertical component of ∂(Υ) of full vertical degree must
            // stay inside the factor ideal spans or carry a horizontal leg
            for ((w, l, t), c) in dx.terms() {
                if w.is_empty() && *l == n + 1 {
                    let v = SparseVec::from_entries(vec![(*t, c.clone())]);
                    if !upsilon[n + 1].contains(&v) {
                        // a purely vertical image must remain in the ideal
                        dstar_ok = false;
                        witness = format!("vertical image at degree {}", n + 1);
                        break 'dstar;
                    }
                }
            }
        }
    }
    suite.check("factor-ideal-differential-stable", dstar_ok, || witness.clone());
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fodc::{classical_ideal, EpsDerivation};
    use crate::presets::{
        base_one_form, cyclic, trivial_bundle, trivial_u1_preconnection, u1,
    };
    use crate::QScalar;
    use num_traits::{One, Zero};

    /// Trivial u1 bundle with the canonical (classical) calculus and a
    /// three-chart family.
    fn u1_ctx(variant: EnvelopeVariant) -> VhContext<QScalar> {
        let b = trivial_bundle(&u1::<QScalar>());
        let h = b.hopf().clone();
        let x = EpsDerivation::from_table(&h, &[("z", QScalar::one()), ("z*", -QScalar::one())])
            .unwrap();
        let ideal = classical_ideal(&h, &[x], 2).unwrap();
        let zero = base_one_form(&b, QScalar::zero(), QScalar::zero());
        let th = base_one_form(&b, QScalar::one(), QScalar::zero());
        let xth = base_one_form(&b, QScalar::zero(), QScalar::one());
        let charts = vec![
            trivial_u1_preconnection(&b, "D00", &zero, 2).unwrap(),
            trivial_u1_preconnection(&b, "D10", &th, 2).unwrap(),
            trivial_u1_preconnection(&b, "D01", &xth, 2).unwrap(),
        ];
        vh_context(&b, ideal, charts, variant, 2, 2, 3).unwrap()
    }

    /// Trivial cyclic(3) bundle with the universal calculus (2-dim fiber
    /// space) and the flat chart.
    fn cyclic3_ctx(variant: EnvelopeVariant) -> VhContext<QScalar> {
        let b = trivial_bundle(&cyclic::<QScalar>(3));
        let hor = b.horizontal();
        let mut values = vec![AlgElement::zero(hor); hor.generators().len()];
        for (g, v) in b.base_differential().values().iter().enumerate() {
            values[g] = v.clone();
        }
        let d0 = crate::bundle::extend_antiderivation(
            &b,
            "D0",
            values,
            crate::bundle::ConnectionKind::Preconnection,
            2,
        )
        .unwrap();
        vh_context(&b, IdealSpec::universal(), vec![d0], variant, 2, 2, 3).unwrap()
    }

    #[test]
    fn product_embeds_subalgebras() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let pres = ctx.bundle().horizontal();
        let z = AlgElement::generator_named(pres, "z").unwrap();
        let th = AlgElement::generator_named(pres, "th").unwrap();
        // (φ⊗1)(ψ⊗1) = φψ⊗1
        let a = ctx.horizontal("D00", &z);
        let bb = ctx.horizontal("D00", &th);
        let prod = ctx.multiply(&a, &bb).unwrap();
        assert_eq!(prod, ctx.horizontal("D00", &z.mul(&th).unwrap()));
        // (1⊗ϑ)(1⊗ϑ) = 0 in both variants (single anticommuting generator)
        let v = ctx.one_form("D00", 0);
        assert!(ctx.multiply(&v, &v).unwrap().is_zero());
    }

    #[test]
    fn twisted_commutation_matches_paper_formula() {
        // (1⊗ϑ)(φ⊗1) = (-1)^{∂φ} Σ φ_k ⊗ (ϑ ∘ c_k)
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let pres = ctx.bundle().horizontal();
        for name in ["z", "z*", "x", "th"] {
            let phi = AlgElement::generator_named(pres, name).unwrap();
            let v = ctx.one_form("D00", 0);
            let lhs = ctx
                .multiply(&v, &ctx.horizontal("D00", &phi))
                .unwrap();
            // hand-built right side
            let sign = if pres.word_grade(&crate::algebra::Word::single(pres.gen_id(name).unwrap())) % 2
                == 1
            {
                -QScalar::one()
            } else {
                QScalar::one()
            };
            let f = ctx.bundle().coact(&phi).unwrap();
            let mut rhs = VhElement::zero("D00");
            for (ws, cf) in f.terms() {
                let ck = AlgElement::from_terms(
                    ctx.bundle().hopf().presentation(),
                    vec![(ws[1].clone(), QScalar::one())],
                )
                .unwrap();
                let circ = ctx.space().circ(&SparseVec::unit(0), &ck).unwrap();
                let phik = AlgElement::from_terms(pres, vec![(ws[0].clone(), cf.clone())]).unwrap();
                rhs = rhs
                    .add(
                        &ctx.multiply(
                            &ctx.horizontal("D00", &phik),
                            &ctx.vertical("D00", 1, &circ),
                        )
                        .unwrap(),
                    )
                    .unwrap();
            }
            assert_eq!(lhs, rhs.scale(&sign), "twist against {name}");
        }
    }

    #[test]
    fn chart_suite_passes_on_both_presets() {
        for variant in [EnvelopeVariant::Quadratic, EnvelopeVariant::Exterior] {
            let ctx = u1_ctx(variant);
            for chart in ["D00", "D10", "D01"] {
                let suite = verify_chart_suite(&ctx, chart).unwrap();
                assert!(
                    suite.all_passed(),
                    "u1 {variant:?} {chart}: {:?}",
                    suite.failures().collect::<Vec<_>>()
                );
            }
            let ctx2 = cyclic3_ctx(variant);
            let suite = verify_chart_suite(&ctx2, "D0").unwrap();
            assert!(
                suite.all_passed(),
                "cyclic3 {variant:?}: {:?}",
                suite.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn star_of_vertical_leg_with_trivial_coaction() {
        // trivial bundle, u1: (1⊗ϑ)* = 1⊗ϑ* since F⋆(1)=1⊗1 and ϖ trivial
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let v = ctx.one_form("D00", 0);
        let starred = ctx.star(&v).unwrap();
        let sv = ctx.space().star(&SparseVec::unit(0)).unwrap();
        assert_eq!(starred, ctx.vertical("D00", 1, &sv));
    }

    #[test]
    fn differential_on_base_and_fiber_forms() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let pres = ctx.bundle().horizontal();
        // base form: ∂(θ⊗1) = d_M θ ⊗ 1 = τ⊗1 (coaction-invariant, π(1)=0)
        let th = AlgElement::generator_named(pres, "th").unwrap();
        let ta = AlgElement::generator_named(pres, "ta").unwrap();
        let d = ctx.differential(&ctx.horizontal("D10", &th)).unwrap();
        assert_eq!(d, ctx.horizontal("D10", &ta));
        // vertical form in the wedge variant: ∂(1⊗ϑ) = ρ_D(ϑ)⊗1 (dϑ dies)
        let v = ctx.one_form("D10", 0);
        let dv = ctx.differential(&v).unwrap();
        let chart = ctx.chart("D10").unwrap();
        assert_eq!(dv, ctx.horizontal("D10", &chart.curvature[0]));
        // the flat chart has zero curvature
        let flat = ctx.chart("D00").unwrap();
        assert!(flat.curvature[0].is_zero());
        // ∂² = 0 on every degree-zero generator
        for name in ["x", "z", "z*"] {
            let e = AlgElement::generator_named(pres, name).unwrap();
            let dd = ctx
                .differential(&ctx.differential(&ctx.horizontal("D10", &e)).unwrap())
                .unwrap();
            assert!(dd.is_zero(), "∂² on {name}");
        }
    }

    #[test]
    fn gauge_suite_passes_both_variants() {
        for variant in [EnvelopeVariant::Quadratic, EnvelopeVariant::Exterior] {
            let ctx = u1_ctx(variant);
            let w = ctx.chart_difference("D00", "D01").unwrap();
            let suite = verify_gauge_suite(&ctx, "D00", "D10", Some(&w)).unwrap();
            assert!(
                suite.all_passed(),
                "{variant:?}: {:?}",
                suite.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn gauge_roundtrip_is_identity() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let e = ctx.chart_difference("D00", "D10").unwrap();
        let chi = ctx.gauge_table(&e).unwrap();
        let eneg = e.negate("-E");
        let chineg = ctx.gauge_table(&eneg).unwrap();
        for x in ctx.window_generators("D00", 2).unwrap() {
            let there = ctx.gauge_apply(&x, &chi, "D10").unwrap();
            let back = ctx.gauge_apply(&there, &chineg, "D00").unwrap();
            assert_eq!(back, x);
        }
        // h_E(ϑ) = ϑ - χ_E(ϑ)
        let v = ctx.one_form("D00", 0);
        let hv = ctx.gauge_apply(&v, &chi, "D10").unwrap();
        let expected = ctx
            .one_form("D10", 0)
            .sub(&ctx.horizontal("D10", &chi[0]))
            .unwrap();
        assert_eq!(hv, expected);
    }

    #[test]
    fn gluing_suite_passes() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let suite = verify_gluing_suite(&ctx).unwrap();
        assert!(
            suite.all_passed(),
            "{:?}",
            suite.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn gluing_suite_passes_exterior_variant() {
        let ctx = u1_ctx(EnvelopeVariant::Exterior);
        let suite = verify_gluing_suite(&ctx).unwrap();
        assert!(
            suite.all_passed(),
            "{:?}",
            suite.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn horizontality_via_pullback() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let pres = ctx.bundle().horizontal();
        let z = AlgElement::generator_named(pres, "z").unwrap();
        let h = ctx.horizontal("D00", &z);
        assert!(ctx.pullback(&h).unwrap().in_omega_tensor_a());
        let v = ctx.one_form("D00", 0);
        assert!(!ctx.pullback(&v).unwrap().in_omega_tensor_a());
    }

    #[test]
    fn exterior_suite_passes() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let suite = exterior_variant_suite(&ctx, "D00", "D10", 3).unwrap();
        assert!(
            suite.all_passed(),
            "{:?}",
            suite.failures().collect::<Vec<_>>()
        );
        // and on the 2-dimensional cyclic fiber with the flat chart (E = 0)
        let ctx2 = cyclic3_ctx(EnvelopeVariant::Quadratic);
        let suite2 = exterior_variant_suite(&ctx2, "D0", "D0", 3).unwrap();
        assert!(
            suite2.all_passed(),
            "{:?}",
            suite2.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn chart_outside_family_is_rejected() {
        let ctx = u1_ctx(EnvelopeVariant::Quadratic);
        let g = GluedForm::new(ctx.unit("D00"));
        assert!(matches!(
            g.transport(&ctx, "nope"),
            Err(Error::ChartOutsideFamily(_))
        ));
    }
}
