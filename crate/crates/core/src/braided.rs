//! The canonical flip, braided antisymmetrizers and the left-invariant
//! envelope algebras.
//!
//! The flip `σ(η ⊗ ϑ) = Σ_k ϑ_k ⊗ (η ∘ c_k)` (with `ϖ(ϑ) = Σ_k ϑ_k ⊗ c_k`)
//! generates braid-group representations `σ_π` through minimal
//! decompositions; alternating sums give the total antisymmetrizers `A_n`
//! and the shuffle factors `A_{kl}`. Degree-wise quotients of the tensor
//! powers by the quadratic ideal (from the calculus ideal) or by `ker A`
//! realize the universal envelope and the braided exterior algebra, each
//! with its differential.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::AlgElement;
use crate::error::Error;
use crate::fodc::InvariantFormSpace;
use crate::linalg::{QuotientSpace, SparseMat, SparseVec, Subspace};
use crate::report::Suite;
use crate::scalar::Field;
use crate::Result;

/// Default bound on the antisymmetrizer degree (`n!` terms); override with
/// the `QPB_BUDGET` environment variable.
pub const DEFAULT_BUDGET: usize = 5;

pub fn antisym_budget() -> usize {
    std::env::var("QPB_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

// ---------------------------------------------------------------------------
// permutations
// ---------------------------------------------------------------------------

/// All permutations of `n` letters in one-line notation.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for k in 0..n {
        let mut next = vec![];
        for p in &out {
            for pos in 0..=k {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

pub fn inversions(p: &[usize]) -> usize {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv
}

pub fn sign_of(p: &[usize]) -> i32 {
    if inversions(p) % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        q[v] = i;
    }
    q
}

/// Reduced word by bubble sort: positions `a_1, ..., a_k` such that
/// `p = s_{a_k} ∘ ... ∘ s_{a_1}` with exactly `inv(p)` factors.
pub fn reduced_word_bubble(p: &[usize]) -> Vec<usize> {
    let mut l = p.to_vec();
    let mut word = vec![];
    loop {
        let mut swapped = false;
        for i in 0..l.len().saturating_sub(1) {
            if l[i] > l[i + 1] {
                l.swap(i, i + 1);
                word.push(i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    word
}

/// Alternative reduced word: repeatedly carry the largest misplaced value to
/// its slot. Also of length `inv(p)` but generally a different word.
pub fn reduced_word_selection(p: &[usize]) -> Vec<usize> {
    let mut l = p.to_vec();
    let mut word = vec![];
    for target in (0..l.len()).rev() {
        let mut pos = l.iter().position(|&v| v == target).expect("value present");
        while pos < target {
            l.swap(pos, pos + 1);
            word.push(pos);
            pos += 1;
        }
    }
    word
}

/// All `(k, l)`-shuffles: permutations order-preserving on `{0..k}` and
/// `{k..k+l}`.
pub fn shuffles(k: usize, l: usize) -> Vec<Vec<usize>> {
    // Choose the positions of the first block among k + l slots.
    fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = choose(n - 1, k); // n-1 not chosen
        for mut c in choose(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }
    let n = k + l;
    let mut out = vec![];
    for positions in choose(n, k) {
        // The shuffle sends block value i (< k) to positions[i] and block
        // value k + j to the j-th remaining slot.
        let mut p = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for (i, &pos) in positions.iter().enumerate() {
            p[i] = pos;
            used[pos] = true;
        }
        let mut rest = (0..n).filter(|&s| !used[s]);
        for v in p.iter_mut().skip(k) {
            *v = rest.next().expect("slot available");
        }
        out.push(p);
    }
    out
}

// ---------------------------------------------------------------------------
// the flip and its braid-group representation
// ---------------------------------------------------------------------------

/// The flip operator of an invariant-form space together with the machinery
/// it generates. Immutable once built.
#[derive(Debug, Clone)]
pub struct BraidOperator<K> {
    space: Arc<InvariantFormSpace<K>>,
    sigma: SparseMat<K>,
    sigma_inv: SparseMat<K>,
    /// Coadjoint table ϖ(ϑ_i) = Σ_j ϑ_j ⊗ varpi[i][j].
    varpi: Vec<Vec<AlgElement<K>>>,
    budget: usize,
}

impl<K: Field> BraidOperator<K> {
    /// Build `σ` from the `ϖ` and `∘` tables of the space.
    pub fn new(space: Arc<InvariantFormSpace<K>>) -> Result<Self> {
        let m = space.dim();
        let mut varpi = vec![];
        for i in 0..m {
            varpi.push(space.coadjoint(i)?);
        }
        let mut rows: Vec<Vec<(usize, K)>> = vec![vec![]; m * m];
        for i in 0..m {
            for j in 0..m {
                // σ(ϑ_i ⊗ ϑ_j) = Σ_l ϑ_l ⊗ (ϑ_i ∘ c_{jl})
                for (l, c) in varpi[j].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let acted = space.circ(&SparseVec::unit(i), c)?;
                    for (k, coeff) in acted.iter() {
                        rows[l * m + k].push((i * m + j, coeff.clone()));
                    }
                }
            }
        }
        let sigma = SparseMat::from_rows(
            m * m,
            m * m,
            rows.into_iter().map(SparseVec::from_entries).collect(),
        );
        let sigma_inv = sigma
            .inverse()
            .ok_or_else(|| Error::Internal("flip operator is singular".into()))?;
        Ok(BraidOperator {
            space,
            sigma,
            sigma_inv,
            varpi,
            budget: antisym_budget(),
        })
    }

    pub fn space(&self) -> &Arc<InvariantFormSpace<K>> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &SparseMat<K> {
        &self.sigma
    }

    pub fn inverse_matrix(&self) -> &SparseMat<K> {
        &self.sigma_inv
    }

    pub fn coadjoint_table(&self) -> &[Vec<AlgElement<K>>] {
        &self.varpi
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn tensor_dim(&self, n: usize) -> usize {
        self.dim().pow(n as u32)
    }

    /// `id^{⊗pos} ⊗ σ ⊗ id^{⊗(n-pos-2)}` on the degree-`n` tensor power.
    pub fn sigma_at(&self, n: usize, pos: usize) -> SparseMat<K> {
        assert!(pos + 2 <= n);
        let m = self.dim();
        let left = SparseMat::identity(m.pow(pos as u32));
        let right = SparseMat::identity(m.pow((n - pos - 2) as u32));
        left.kron(&self.sigma).kron(&right)
    }

    fn word_matrix(&self, n: usize, word: &[usize]) -> SparseMat<K> {
        // p = s_{a_k} ∘ ... ∘ s_{a_1}: matrices compose the same way,
        // rightmost factor applied first.
        let mut acc = SparseMat::identity(self.tensor_dim(n));
        for &a in word {
            acc = self.sigma_at(n, a).matmul(&acc);
        }
        acc
    }

    /// The braid-group image `σ_π` via a minimal decomposition of `π`.
    pub fn sigma_word(&self, perm: &[usize]) -> Result<SparseMat<K>> {
        let n = perm.len();
        self.check_budget(n)?;
        Ok(self.word_matrix(n, &reduced_word_bubble(perm)))
    }

    /// `σ_π` via an independently produced minimal decomposition; equal to
    /// [`Self::sigma_word`] whenever the braid relation holds.
    pub fn sigma_word_alt(&self, perm: &[usize]) -> Result<SparseMat<K>> {
        let n = perm.len();
        self.check_budget(n)?;
        Ok(self.word_matrix(n, &reduced_word_selection(perm)))
    }

    fn check_budget(&self, n: usize) -> Result<()> {
        if n > self.budget {
            return Err(Error::BudgetExceeded(n, self.budget));
        }
        Ok(())
    }

    /// Does the braid relation hold on the degree-3 tensor power?
    pub fn braid_relation_holds(&self) -> bool {
        let s01 = self.sigma_at(3, 0);
        let s12 = self.sigma_at(3, 1);
        s01.matmul(&s12).matmul(&s01) == s12.matmul(&s01).matmul(&s12)
    }

    /// Total antisymmetrizer `A_n = Σ_{π ∈ S_n} (-1)^π σ_π`.
    pub fn antisymmetrizer(&self, n: usize) -> Result<SparseMat<K>> {
        self.check_budget(n)?;
        if !self.braid_relation_holds() {
            return Err(Error::BraidRelationFails(self.dim(), 3));
        }
        let dim = self.tensor_dim(n);
        let mut acc = SparseMat::zero(dim, dim);
        for p in permutations(n) {
            let m = self.word_matrix(n, &reduced_word_bubble(&p));
            let signed = if sign_of(&p) == 1 { m } else { m.scale(&(-K::one())) };
            acc = acc.add(&signed);
        }
        Ok(acc)
    }

    /// Shuffle antisymmetrizer `A_{kl} = Σ_{π ∈ S_{kl}} (-1)^π σ_{π^{-1}}`.
    pub fn shuffle_antisymmetrizer(&self, k: usize, l: usize) -> Result<SparseMat<K>> {
        let n = k + l;
        self.check_budget(n)?;
        if !self.braid_relation_holds() {
            return Err(Error::BraidRelationFails(self.dim(), 3));
        }
        let dim = self.tensor_dim(n);
        let mut acc = SparseMat::zero(dim, dim);
        for p in shuffles(k, l) {
            let m = self.word_matrix(n, &reduced_word_bubble(&invert_perm(&p)));
            let signed = if sign_of(&p) == 1 { m } else { m.scale(&(-K::one())) };
            acc = acc.add(&signed);
        }
        Ok(acc)
    }

    /// Dimension of the degree-`n` part of the braided exterior algebra:
    /// the rank of `A_n`.
    pub fn exterior_dim(&self, n: usize) -> Result<usize> {
        Ok(self.antisymmetrizer(n)?.rank())
    }

    /// The two-leg coadjoint coaction as element tables, for equivariance
    /// checks: `ϖ₂(ϑ_i ⊗ ϑ_j) = Σ ϑ_k ⊗ ϑ_l ⊗ c_{ik} c_{jl}`.
    fn coact2(&self, v: &SparseVec<K>) -> Result<BTreeMap<usize, AlgElement<K>>> {
        let m = self.dim();
        let pres = self.space.hopf().presentation();
        let mut out: BTreeMap<usize, AlgElement<K>> = BTreeMap::new();
        for (idx, c0) in v.iter() {
            let (i, j) = (idx / m, idx % m);
            for (k, cik) in self.varpi[i].iter().enumerate() {
                if cik.is_zero() {
                    continue;
                }
                for (l, cjl) in self.varpi[j].iter().enumerate() {
                    if cjl.is_zero() {
                        continue;
                    }
                    let prod = cik.mul(cjl)?.scale(c0);
                    let entry = out
                        .entry(k * m + l)
                        .or_insert_with(|| AlgElement::zero(pres));
                    *entry = entry.add(&prod)?;
                }
            }
        }
        out.retain(|_, e| !e.is_zero());
        Ok(out)
    }

    /// Star on the tensor square: `(η ⊗ ϑ)* = ϑ* ⊗ η*` (leg reversal plus
    /// the quotient star).
    fn star2_matrix(&self) -> Result<SparseMat<K>> {
        let m = self.dim();
        let mut star_cols = vec![];
        for i in 0..m {
            star_cols.push(self.space.star(&SparseVec::unit(i))?);
        }
        let mut rows: Vec<Vec<(usize, K)>> = vec![vec![]; m * m];
        for i in 0..m {
            for j in 0..m {
                for (l, cl) in star_cols[j].iter() {
                    for (k, ck) in star_cols[i].iter() {
                        rows[l * m + k].push((i * m + j, cl.clone() * ck.clone()));
                    }
                }
            }
        }
        Ok(SparseMat::from_rows(
            m * m,
            m * m,
            rows.into_iter().map(SparseVec::from_entries).collect(),
        ))
    }

    /// Exhaustive identity suite: braid relation, shuffle factorization up
    /// to `n_max`, legwise coaction equivariance, star compatibility,
    /// minimal-decomposition independence, invertibility.
    pub fn verify_braid_identities(&self, n_max: usize) -> Result<Suite> {
        let mut suite = Suite::new(format!("braid-identities:{}", self.space.hopf().name()));
        suite.check("sigma-invertible", {
            self.sigma.matmul(&self.sigma_inv) == SparseMat::identity(self.dim() * self.dim())
        }, || "σ σ^{-1} differs from the identity".into());
        let braid_holds = self.braid_relation_holds();
        suite.check("braid-relation-degree-3", braid_holds, || {
            "(σ⊗id)(id⊗σ)(σ⊗id) != (id⊗σ)(σ⊗id)(id⊗σ)".into()
        });
        // A_{k+l} = (A_k ⊗ A_l) A_{kl}; meaningless without the braid
        // relation, so skipped then.
        for total in 2..=n_max.min(self.budget) {
            for k in 1..total {
                let l = total - k;
                let name = format!("shuffle-factorization[{k}+{l}]");
                if !braid_holds {
                    suite.skip(name, "braid relation fails");
                    continue;
                }
                let lhs = self.antisymmetrizer(total)?;
                let rhs = self
                    .antisymmetrizer(k)?
                    .kron(&self.antisymmetrizer(l)?)
                    .matmul(&self.shuffle_antisymmetrizer(k, l)?);
                suite.check(name, lhs == rhs, || {
                    format!("A_{total} != (A_{k} x A_{l}) A_{{{k},{l}}}")
                });
            }
        }
        // Legwise coaction equivariance: ϖ₂ ∘ σ = (σ ⊗ id) ∘ ϖ₂.
        let m = self.dim();
        let mut equivariant = true;
        let mut witness = String::new();
        'outer: for idx in 0..m * m {
            let basis = SparseVec::unit(idx);
            let lhs = self.coact2(&self.sigma.apply(&basis))?;
            // (σ ⊗ id) ϖ₂(basis): apply σ to the tensor slots of each bucket
            let raw = self.coact2(&basis)?;
            let mut rhs: BTreeMap<usize, AlgElement<K>> = BTreeMap::new();
            for (slot, coeff_el) in &raw {
                let image = self.sigma.apply(&SparseVec::unit(*slot));
                for (tgt, c) in image.iter() {
                    let entry = rhs
                        .entry(*tgt)
                        .or_insert_with(|| AlgElement::zero(self.space.hopf().presentation()));
                    *entry = entry.add(&coeff_el.scale(c))?;
                }
            }
            rhs.retain(|_, e| !e.is_zero());
            if lhs != rhs {
                equivariant = false;
                witness = format!("basis index {idx}");
                break 'outer;
            }
        }
        suite.check("sigma-coaction-equivariant", equivariant, || witness.clone());
        // Star compatibility: (∗₂ σ)² = id, i.e. ∗₂ σ ∗₂ = σ^{-1}.
        match self.star2_matrix() {
            Ok(t) => {
                let comp = t.matmul(&self.sigma).matmul(&t).matmul(&self.sigma);
                suite.check(
                    "sigma-star-compatible",
                    comp == SparseMat::identity(m * m),
                    || "∗₂ σ ∗₂ σ differs from the identity".into(),
                );
            }
            Err(e) => suite.skip("sigma-star-compatible", format!("star unavailable: {e}")),
        }
        // Minimal-decomposition independence on all of S_3 (and S_4 when
        // the budget allows). Two different reduced words per permutation.
        for n in [3usize, 4] {
            if n > n_max.min(self.budget) {
                continue;
            }
            let name = format!("sigma-word-well-defined[S{n}]");
            if !braid_holds {
                suite.skip(name, "braid relation fails");
                continue;
            }
            let mut ok = true;
            let mut w = String::new();
            for p in permutations(n) {
                if self.sigma_word(&p)? != self.sigma_word_alt(&p)? {
                    ok = false;
                    w = format!("{p:?}");
                    break;
                }
            }
            suite.check(name, ok, || w.clone());
        }
        Ok(suite)
    }
}

// ---------------------------------------------------------------------------
// envelopes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeVariant {
    /// Full tensor algebra (no relations).
    Tensor,
    /// Universal envelope: quadratic relations from the calculus ideal.
    Quadratic,
    /// Braided exterior algebra: relations `ker A_n` per degree.
    Exterior,
}

/// Degree-wise quotient of the tensor powers of the invariant-form space,
/// with product, star, right action and the differential.
#[derive(Debug, Clone)]
pub struct EnvelopeSpace<K> {
    braid: Arc<BraidOperator<K>>,
    variant: EnvelopeVariant,
    max_degree: usize,
    degrees: Vec<QuotientSpace<K>>,
    /// d(ϑ_i) = -(π ⊗ π) φ(rep_i) at the tensor level.
    d1: Vec<SparseVec<K>>,
    /// Witness when the relation ideal is not stable under the
    /// differential (the ∨ variant may refuse `d`).
    d_stable: std::result::Result<(), String>,
}

impl<K: Field> EnvelopeSpace<K> {
    pub fn build(
        braid: &Arc<BraidOperator<K>>,
        variant: EnvelopeVariant,
        max_degree: usize,
    ) -> Result<Self> {
        let space = braid.space();
        let m = space.dim();
        // Degree-2 generating relations.
        let quad: Vec<SparseVec<K>> = match variant {
            EnvelopeVariant::Tensor => vec![],
            EnvelopeVariant::Quadratic => {
                let mut rels = vec![];
                for r in space.ideal_window_basis()? {
                    let t = space.hopf().coproduct(&r)?;
                    let mut vec2 = SparseVec::new();
                    for (ws, c) in t.terms() {
                        let p1 = space.project(&AlgElement::from_terms(
                            space.hopf().presentation(),
                            vec![(ws[0].clone(), K::one())],
                        )?)?;
                        let p2 = space.project(&AlgElement::from_terms(
                            space.hopf().presentation(),
                            vec![(ws[1].clone(), K::one())],
                        )?)?;
                        for (i, ci) in p1.iter() {
                            for (j, cj) in p2.iter() {
                                vec2 = vec2.add(&SparseVec::from_entries(vec![(
                                    i * m + j,
                                    c.clone() * ci.clone() * cj.clone(),
                                )]));
                            }
                        }
                    }
                    rels.push(vec2);
                }
                rels
            }
            EnvelopeVariant::Exterior => braid.antisymmetrizer(2)?.kernel(),
        };
        let mut degrees = vec![];
        for n in 0..=max_degree {
            let dim = braid.tensor_dim(n);
            let rel_rows: Vec<SparseVec<K>> = match (n, variant) {
                (_, EnvelopeVariant::Tensor) | (0, _) | (1, _) => vec![],
                (_, EnvelopeVariant::Exterior) => braid.antisymmetrizer(n)?.kernel(),
                (_, EnvelopeVariant::Quadratic) => {
                    // Σ_{i+2+j=n} id^i ⊗ Q ⊗ id^j
                    let mut rows = vec![];
                    for i in 0..=n - 2 {
                        let j = n - 2 - i;
                        let (di, dj) = (braid.tensor_dim(i), braid.tensor_dim(j));
                        for q in &quad {
                            for u in 0..di {
                                for v in 0..dj {
                                    rows.push(q.map_indices(|mid| {
                                        (u * m * m + mid) * dj + v
                                    }));
                                }
                            }
                        }
                    }
                    rows
                }
            };
            degrees.push(QuotientSpace::new(dim, Subspace::from_rows(dim, rel_rows)));
        }
        // Differential on degree-1 classes.
        let mut d1 = vec![];
        for i in 0..m {
            let t = space.hopf().coproduct(space.rep(i))?;
            let mut vec2 = SparseVec::new();
            for (ws, c) in t.terms() {
                let p1 = space.project(&AlgElement::from_terms(
                    space.hopf().presentation(),
                    vec![(ws[0].clone(), K::one())],
                )?)?;
                let p2 = space.project(&AlgElement::from_terms(
                    space.hopf().presentation(),
                    vec![(ws[1].clone(), K::one())],
                )?)?;
                for (a, ca) in p1.iter() {
                    for (b, cb) in p2.iter() {
                        vec2 = vec2.add(&SparseVec::from_entries(vec![(
                            a * m + b,
                            -(c.clone() * ca.clone() * cb.clone()),
                        )]));
                    }
                }
            }
            d1.push(vec2);
        }
        let mut out = EnvelopeSpace {
            braid: braid.clone(),
            variant,
            max_degree,
            degrees,
            d1,
            d_stable: Ok(()),
        };
        out.d_stable = out.check_d_stability();
        Ok(out)
    }

    fn check_d_stability(&self) -> std::result::Result<(), String> {
        for n in 2..self.max_degree.max(1) {
            for rel in self.degrees[n].relations().basis() {
                let img = self.d_tensor(n, rel);
                if !self.degrees[n + 1].relations().contains(&img) {
                    return Err(format!(
                        "degree-{n} relation has non-relation differential image"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> EnvelopeVariant {
        self.variant
    }

    pub fn braid(&self) -> &Arc<BraidOperator<K>> {
        &self.braid
    }

    pub fn space(&self) -> &Arc<InvariantFormSpace<K>> {
        self.braid.space()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn dim(&self, n: usize) -> usize {
        self.degrees[n].dim()
    }

    pub fn quotient(&self, n: usize) -> &QuotientSpace<K> {
        &self.degrees[n]
    }

    /// Quotient coordinates of a degree-`n` tensor.
    pub fn project(&self, n: usize, t: &SparseVec<K>) -> SparseVec<K> {
        self.degrees[n].project(t)
    }

    /// Canonical tensor representative of a quotient vector.
    pub fn lift(&self, n: usize, v: &SparseVec<K>) -> SparseVec<K> {
        self.degrees[n].lift(v)
    }

    /// Product of quotient classes: concatenate representatives, project.
    pub fn multiply(&self, na: usize, a: &SparseVec<K>, nb: usize, b: &SparseVec<K>) -> Result<SparseVec<K>> {
        let n = na + nb;
        if n > self.max_degree {
            return Err(Error::BudgetExceeded(n, self.max_degree));
        }
        let (ta, tb) = (self.lift(na, a), self.lift(nb, b));
        let dimb = self.braid.tensor_dim(nb);
        let mut t = SparseVec::new();
        for (i, ci) in ta.iter() {
            for (j, cj) in tb.iter() {
                t = t.add(&SparseVec::from_entries(vec![(
                    i * dimb + j,
                    ci.clone() * cj.clone(),
                )]));
            }
        }
        Ok(self.project(n, &t))
    }

    /// Differential at the tensor level: antiderivation extension of `d1`.
    pub fn d_tensor(&self, n: usize, t: &SparseVec<K>) -> SparseVec<K> {
        let m = self.braid.dim();
        let mut out = SparseVec::new();
        for (idx, c) in t.iter() {
            // decompose idx into legs
            let mut legs = vec![0usize; n];
            let mut rest = *idx;
            for slot in (0..n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            for (j, &leg) in legs.iter().enumerate() {
                let sign = if j % 2 == 0 { K::one() } else { -K::one() };
                for (pair, cp) in self.d1[leg].iter() {
                    // new index: legs[..j], pair (two legs), legs[j+1..]
                    let mut val = 0usize;
                    for &l in &legs[..j] {
                        val = val * m + l;
                    }
                    val = val * m + pair / m;
                    val = val * m + pair % m;
                    for &l in &legs[j + 1..] {
                        val = val * m + l;
                    }
                    out = out.add(&SparseVec::from_entries(vec![(
                        val,
                        c.clone() * sign.clone() * cp.clone(),
                    )]));
                }
            }
        }
        out
    }

    /// The envelope differential on quotient classes. Refuses (with the
    /// stored witness) when the relation ideal is not `d`-stable.
    pub fn differential(&self, n: usize, v: &SparseVec<K>) -> Result<SparseVec<K>> {
        if n + 1 > self.max_degree {
            return Err(Error::BudgetExceeded(n + 1, self.max_degree));
        }
        if let Err(w) = &self.d_stable {
            return Err(Error::DifferentialNotStable(w.clone()));
        }
        let t = self.lift(n, v);
        Ok(self.project(n + 1, &self.d_tensor(n, &t)))
    }

    pub fn d_stability(&self) -> std::result::Result<(), String> {
        self.d_stable.clone()
    }

    /// Right action of the structure algebra, legwise through the iterated
    /// coproduct.
    pub fn circ(&self, n: usize, v: &SparseVec<K>, a: &AlgElement<K>) -> Result<SparseVec<K>> {
        let space = self.space();
        if n == 0 {
            return Ok(v.scale(&space.hopf().counit(a)));
        }
        let m = self.braid.dim();
        let t = self.lift(n, v);
        let mut out = SparseVec::new();
        let cop = if n == 1 {
            None
        } else {
            Some(space.hopf().coproduct_iterate(a, n - 1)?)
        };
        for (idx, c) in t.iter() {
            let mut legs = vec![0usize; n];
            let mut rest = *idx;
            for slot in (0..n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            match &cop {
                None => {
                    let acted = space.circ(&SparseVec::unit(legs[0]), a)?;
                    for (k, ck) in acted.iter() {
                        out = out.add(&SparseVec::from_entries(vec![(
                            *k,
                            c.clone() * ck.clone(),
                        )]));
                    }
                }
                Some(cop) => {
                    for (ws, cw) in cop.terms() {
                        // (ϑ_{l1} ∘ a^(1)) ⊗ ... ⊗ (ϑ_{ln} ∘ a^(n))
                        let mut partial: Vec<(usize, K)> = vec![(0, c.clone() * cw.clone())];
                        for (slot, &leg) in legs.iter().enumerate() {
                            let aw = AlgElement::from_terms(
                                space.hopf().presentation(),
                                vec![(ws[slot].clone(), K::one())],
                            )?;
                            let acted = space.circ(&SparseVec::unit(leg), &aw)?;
                            let mut next = vec![];
                            for (acc_idx, acc_c) in &partial {
                                for (k, ck) in acted.iter() {
                                    next.push((acc_idx * m + k, acc_c.clone() * ck.clone()));
                                }
                            }
                            partial = next;
                        }
                        out = out.add(&SparseVec::from_entries(partial));
                    }
                }
            }
        }
        Ok(self.project(n, &out))
    }

    /// Star on quotient classes: reverse legs, star each, project. The
    /// reversal of `n` odd legs carries the graded sign `(-1)^{n(n-1)/2}`,
    /// matching the vertical-horizontal star formula.
    pub fn star(&self, n: usize, v: &SparseVec<K>) -> Result<SparseVec<K>> {
        let space = self.space();
        let m = self.braid.dim();
        let t = self.lift(n, v);
        let mut star1 = vec![];
        for i in 0..m {
            star1.push(space.star(&SparseVec::unit(i))?);
        }
        let reversal_sign = if (n * n.saturating_sub(1) / 2) % 2 == 1 {
            -K::one()
        } else {
            K::one()
        };
        let mut out = SparseVec::new();
        for (idx, c) in t.iter() {
            let mut legs = vec![0usize; n];
            let mut rest = *idx;
            for slot in (0..n).rev() {
                legs[slot] = rest % m;
                rest /= m;
            }
            let mut partial: Vec<(usize, K)> = vec![(0, c.conjugate() * reversal_sign.clone())];
            for &leg in legs.iter().rev() {
                let mut next = vec![];
                for (acc_idx, acc_c) in &partial {
                    for (k, ck) in star1[leg].iter() {
                        next.push((acc_idx * m + k, acc_c.clone() * ck.clone()));
                    }
                }
                partial = next;
            }
            out = out.add(&SparseVec::from_entries(partial));
        }
        Ok(self.project(n, &out))
    }

    /// The degreewise quotient map onto another (smaller) envelope of the
    /// same braid operator, e.g. universal → exterior. Returns the matrix
    /// and whether it is well-defined and surjective.
    pub fn surjection_to(&self, other: &EnvelopeSpace<K>, n: usize) -> Result<(SparseMat<K>, bool, bool)> {
        let rows_needed = other.dim(n);
        let cols = self.dim(n);
        let mut rows: Vec<Vec<(usize, K)>> = vec![vec![]; rows_needed];
        for j in 0..cols {
            let rep = self.lift(n, &SparseVec::unit(j));
            let img = other.project(n, &rep);
            for (i, c) in img.iter() {
                rows[*i].push((j, c.clone()));
            }
        }
        let mat = SparseMat::from_rows(
            rows_needed,
            cols,
            rows.into_iter().map(SparseVec::from_entries).collect(),
        );
        // well-defined: source relations map into target relations
        let mut well_defined = true;
        for rel in self.degrees[n].relations().basis() {
            if !other.project(n, rel).is_zero() {
                well_defined = false;
                break;
            }
        }
        let surjective = mat.rank() == rows_needed;
        Ok((mat, well_defined, surjective))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fodc::{classical_ideal, quotient_build, EpsDerivation, IdealSpec};
    use crate::presets::{cyclic, u1};
    use crate::QScalar;
    use num_traits::One;

    fn u1_classical_braid() -> Arc<BraidOperator<QScalar>> {
        let h = u1::<QScalar>();
        let x = EpsDerivation::from_table(&h, &[("z", QScalar::one()), ("z*", -QScalar::one())])
            .unwrap();
        let ideal = classical_ideal(&h, &[x], 2).unwrap();
        let s = Arc::new(quotient_build(&h, ideal, 2, Some(6)).unwrap());
        Arc::new(BraidOperator::new(s).unwrap())
    }

    fn cyclic_universal_braid(n: usize) -> Arc<BraidOperator<QScalar>> {
        let h = cyclic::<QScalar>(n);
        let s = Arc::new(quotient_build(&h, IdealSpec::universal(), 2, Some(6)).unwrap());
        Arc::new(BraidOperator::new(s).unwrap())
    }

    #[test]
    fn permutation_helpers() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(shuffles(1, 2).len(), 3);
        assert_eq!(shuffles(2, 2).len(), 6);
        let p = vec![2, 0, 1];
        assert_eq!(inversions(&p), 2);
        assert_eq!(sign_of(&p), 1);
        assert_eq!(reduced_word_bubble(&p).len(), 2);
        assert_eq!(reduced_word_selection(&p).len(), 2);
        let q = invert_perm(&p);
        assert_eq!(q, vec![1, 2, 0]);
    }

    #[test]
    fn trivial_braiding_is_plain_flip() {
        let b = u1_classical_braid();
        assert_eq!(b.dim(), 1);
        // one-dimensional: σ is the 1x1 identity
        assert_eq!(*b.matrix(), SparseMat::identity(1));
        let b2 = cyclic_universal_braid(3);
        assert_eq!(b2.dim(), 2);
        // flip on a 2-dim space: e_{ij} -> e_{ji}
        let flip = b2.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let img = flip.apply(&SparseVec::unit(i * 2 + j));
                assert_eq!(img, SparseVec::unit(j * 2 + i));
            }
        }
    }

    #[test]
    fn antisymmetrizer_small_cases() {
        let b = cyclic_universal_braid(3);
        // A_0 = (1), A_1 = id
        assert_eq!(b.antisymmetrizer(0).unwrap(), SparseMat::identity(1));
        assert_eq!(b.antisymmetrizer(1).unwrap(), SparseMat::identity(2));
        // A_2 = id - σ
        let a2 = b.antisymmetrizer(2).unwrap();
        let expected = SparseMat::identity(4).sub(b.matrix());
        assert_eq!(a2, expected);
    }

    #[test]
    fn classical_ranks_match_binomials() {
        fn binom(d: usize, n: usize) -> usize {
            if n > d {
                return 0;
            }
            let mut num = 1usize;
            let mut den = 1usize;
            for k in 0..n {
                num *= d - k;
                den *= k + 1;
            }
            num / den
        }
        for d in [1usize, 2, 3] {
            let b = cyclic_universal_braid(d + 1);
            assert_eq!(b.dim(), d);
            for n in 0..=4usize {
                assert_eq!(
                    b.exterior_dim(n).unwrap(),
                    binom(d, n),
                    "rank A_{n} over dim {d}"
                );
            }
        }
    }

    #[test]
    fn braid_identity_suite_passes() {
        for b in [u1_classical_braid(), cyclic_universal_braid(2), cyclic_universal_braid(3)] {
            let suite = b.verify_braid_identities(4).unwrap();
            assert!(
                suite.all_passed(),
                "{:?}",
                suite.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn corrupted_sigma_fails_braid_relation() {
        // Adding a cross term to the flip breaks the braid relation (a
        // plain sign flip of a flip stays a valid super-flip braiding).
        let b = cyclic_universal_braid(3);
        let mut bad = (*b).clone();
        let mut m = bad.sigma.clone();
        let v = m.get(1, 1);
        m.set(1, 1, v + QScalar::one());
        bad.sigma = m;
        let suite = bad.verify_braid_identities(3).unwrap();
        assert!(!suite.all_passed());
        assert!(suite
            .failures()
            .any(|c| c.name.contains("braid-relation")));
    }

    #[test]
    fn u1_classical_envelope_dims() {
        let b = u1_classical_braid();
        let wedge = EnvelopeSpace::build(&b, EnvelopeVariant::Quadratic, 3).unwrap();
        let vee = EnvelopeSpace::build(&b, EnvelopeVariant::Exterior, 3).unwrap();
        // single anticommuting generator: degrees (1, 1, 0, 0)
        for (n, expect) in [(0usize, 1usize), (1, 1), (2, 0), (3, 0)] {
            assert_eq!(wedge.dim(n), expect, "wedge degree {n}");
            assert_eq!(vee.dim(n), expect, "vee degree {n}");
        }
    }

    #[test]
    fn cyclic2_universal_envelope_and_differential() {
        let b = cyclic_universal_braid(2);
        let t = EnvelopeSpace::build(&b, EnvelopeVariant::Quadratic, 3).unwrap();
        // universal calculus: no quadratic relations, full tensor algebra
        assert_eq!(t.dim(2), 1);
        assert_eq!(t.dim(3), 1);
        // d(π(δ_g)) = -(π⊗π)φ(δ_g) = 2 ϑ⊗ϑ
        let d = t.differential(1, &SparseVec::unit(0)).unwrap();
        assert_eq!(d, SparseVec::unit(0).scale(&QScalar::from_int(2)));
        // d² = 0
        let dd = t.differential(2, &d).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn envelope_surjection_universal_to_exterior() {
        let b = cyclic_universal_braid(3);
        let wedge = EnvelopeSpace::build(&b, EnvelopeVariant::Quadratic, 3).unwrap();
        let vee = EnvelopeSpace::build(&b, EnvelopeVariant::Exterior, 3).unwrap();
        for n in 0..=3 {
            assert!(wedge.dim(n) >= vee.dim(n));
            let (_, well_defined, surjective) = wedge.surjection_to(&vee, n).unwrap();
            assert!(well_defined, "degree {n}");
            assert!(surjective, "degree {n}");
        }
        // σ = flip, dim 2: exterior dims 1, 2, 1, 0
        assert_eq!(vee.dim(0), 1);
        assert_eq!(vee.dim(1), 2);
        assert_eq!(vee.dim(2), 1);
        assert_eq!(vee.dim(3), 0);
        // universal: 1, 2, 4, 8
        assert_eq!(wedge.dim(2), 4);
        assert_eq!(wedge.dim(3), 8);
    }

    #[test]
    fn exterior_differential_when_stable() {
        let b = cyclic_universal_braid(3);
        let vee = EnvelopeSpace::build(&b, EnvelopeVariant::Exterior, 3).unwrap();
        assert!(vee.d_stability().is_ok());
        for i in 0..vee.dim(1) {
            let d = vee.differential(1, &SparseVec::unit(i)).unwrap();
            let dd = vee.differential(2, &d).unwrap();
            assert!(dd.is_zero(), "d² on basis {i}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let b = u1_classical_braid();
        let err = b.antisymmetrizer(b.budget() + 1);
        assert!(matches!(err, Err(Error::BudgetExceeded(_, _))));
    }
}
