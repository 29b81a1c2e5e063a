//! Exact sparse linear algebra over a [`Field`].
//!
//! Everything is built on a maintained reduced row-echelon form. Row
//! combinations are done in cross-multiplied (fraction-free) style with a
//! final monic rescale per row, which keeps rational-function pivots reduced
//! and makes the echelon rows a canonical basis — two subspaces are equal iff
//! their echelon rows are equal.


use crate::error::Error;
use crate::scalar::Field;

/// Sparse vector: sorted `(index, coefficient)` pairs, no zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<K> {
    entries: Vec<(usize, K)>,
}

impl<K: Field> Default for SparseVec<K> {
    fn default() -> Self {
        SparseVec::new()
    }
}

impl<K: Field> SparseVec<K> {
    pub fn new() -> Self {
        SparseVec { entries: vec![] }
    }

    pub fn unit(index: usize) -> Self {
        SparseVec {
            entries: vec![(index, K::one())],
        }
    }

    pub fn from_entries(mut entries: Vec<(usize, K)>) -> Self {
        entries.retain(|(_, c)| !c.is_zero());
        entries.sort_by_key(|(i, _)| *i);
        let mut out: Vec<(usize, K)> = Vec::with_capacity(entries.len());
        for (i, c) in entries {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc = acc.clone() + c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        SparseVec { entries: out }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, K)> {
        self.entries.iter()
    }

    pub fn leading(&self) -> Option<(usize, &K)> {
        self.entries.first().map(|(i, c)| (*i, c))
    }

    pub fn get(&self, index: usize) -> Option<&K> {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .ok()
            .map(|p| &self.entries[p].1)
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self
                .entries
                .iter()
                .map(|(i, x)| (*i, x.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) => {
                    if i < j {
                        out.push((*i, x.clone()));
                        a.next();
                    } else if j < i {
                        out.push((*j, y.clone()));
                        b.next();
                    } else {
                        let s = x.clone() + y.clone();
                        if !s.is_zero() {
                            out.push((*i, s));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some(_), None) => {
                    out.extend(a.by_ref().cloned());
                    break;
                }
                (None, Some(_)) => {
                    out.extend(b.by_ref().cloned());
                    break;
                }
                (None, None) => break,
            }
        }
        SparseVec { entries: out }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(-K::one())))
    }

    /// `self * a + other * b` without intermediate clones of the result.
    pub fn combine(&self, a: &K, other: &Self, b: &K) -> Self {
        self.scale(a).add(&other.scale(b))
    }

    /// Remap indices; `f` must be injective on the support.
    pub fn map_indices(&self, f: impl Fn(usize) -> usize) -> Self {
        SparseVec::from_entries(self.entries.iter().map(|(i, c)| (f(*i), c.clone())).collect())
    }

    /// Make the leading coefficient one; no-op on zero.
    fn monic(mut self) -> Self {
        if let Some((_, lead)) = self.entries.first() {
            let inv = lead.inverse().expect("nonzero leading coefficient");
            if !inv.is_one() {
                for (_, c) in &mut self.entries {
                    *c = c.clone() * inv.clone();
                }
            }
        }
        self
    }
}

/// A maintained reduced row-echelon form with optional coordinate tracking.
///
/// Rows are kept monic, sorted by pivot column, and fully back-substituted.
/// When constructed with [`Echelon::with_tracking`], each inserted row also
/// records its expression over the sequence of successfully inserted rows,
/// which [`Echelon::express`] uses to write arbitrary vectors in that basis.
#[derive(Debug, Clone)]
pub struct Echelon<K> {
    rows: Vec<SparseVec<K>>,
    tails: Option<Vec<SparseVec<K>>>,
    inserted: usize,
}

impl<K: Field> Default for Echelon<K> {
    fn default() -> Self {
        Echelon::new()
    }
}

impl<K: Field> Echelon<K> {
    pub fn new() -> Self {
        Echelon {
            rows: vec![],
            tails: None,
            inserted: 0,
        }
    }

    pub fn with_tracking() -> Self {
        Echelon {
            rows: vec![],
            tails: Some(vec![]),
            inserted: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Number of insertion attempts so far (the tracking index the next
    /// insertion will receive).
    pub fn insertions(&self) -> usize {
        self.inserted
    }

    pub fn rows(&self) -> &[SparseVec<K>] {
        &self.rows
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.leading().expect("nonempty row").0)
    }

    fn reduce_tracked(&self, mut v: SparseVec<K>, mut tail: SparseVec<K>) -> (SparseVec<K>, SparseVec<K>) {
        // Cross-multiplied reduction against each pivot row (rows are monic,
        // so the multiplier on v is one and no division is needed).
        for (idx, row) in self.rows.iter().enumerate() {
            let pivot = row.leading().expect("nonempty row").0;
            if let Some(c) = v.get(pivot) {
                let c = c.clone();
                let neg = -c;
                v = v.add(&row.scale(&neg));
                if let Some(tails) = &self.tails {
                    tail = tail.add(&tails[idx].scale(&neg));
                }
            }
        }
        (v, tail)
    }

    /// Reduce `v` against the current rows; the residual is zero iff `v`
    /// lies in the row space.
    pub fn reduce(&self, v: SparseVec<K>) -> SparseVec<K> {
        self.reduce_tracked(v, SparseVec::new()).0
    }

    pub fn contains(&self, v: &SparseVec<K>) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    /// Insert a row; returns `true` when the rank grew. The insertion index
    /// (used by tracking) advances regardless, counting every call.
    pub fn insert(&mut self, v: SparseVec<K>) -> bool {
        let mut tail = SparseVec::unit(self.inserted);
        self.inserted += 1;
        // Clear denominators up front; the tracking tail is scaled alongside
        // so that each row stays an exact combination of the inserted rows.
        let v = {
            let entries: Vec<K> = v.iter().map(|(_, c)| c.clone()).collect();
            match K::clearing_factor(&entries) {
                Some(f) if !f.is_zero() && !f.is_one() => {
                    tail = tail.scale(&f);
                    v.scale(&f)
                }
                _ => v,
            }
        };
        let (res, tail) = self.reduce_tracked(v, tail);
        if res.is_zero() {
            return false;
        }
        let lead = res.leading().expect("nonzero").1.clone();
        let res = res.monic();
        let tail = tail.scale(&lead.inverse().expect("nonzero lead"));
        let pivot = res.leading().expect("nonzero").0;
        // Back-substitute into existing rows to keep the form reduced.
        for (idx, row) in self.rows.iter_mut().enumerate() {
            if let Some(c) = row.get(pivot) {
                let neg = -c.clone();
                *row = row.add(&res.scale(&neg));
                if let Some(tails) = &self.tails {
                    let updated = tails[idx].add(&tail.scale(&neg));
                    self.tails.as_mut().unwrap()[idx] = updated;
                }
            }
        }
        let pos = self
            .rows
            .iter()
            .position(|r| r.leading().expect("row").0 > pivot)
            .unwrap_or(self.rows.len());
        self.rows.insert(pos, res);
        if let Some(tails) = &mut self.tails {
            tails.insert(pos, tail);
        }
        true
    }

    /// Express `v` over the sequence of inserted vectors (indices follow the
    /// insertion count). `None` when `v` is outside the span. Requires
    /// tracking.
    pub fn express(&self, v: &SparseVec<K>) -> Option<SparseVec<K>> {
        assert!(self.tails.is_some(), "echelon built without tracking");
        let (res, tail) = self.reduce_tracked(v.clone(), SparseVec::new());
        if res.is_zero() {
            Some(tail.scale(&(-K::one())))
        } else {
            None
        }
    }
}

/// A subspace of `K^ambient` held in canonical reduced echelon form.
#[derive(Debug, Clone)]
pub struct Subspace<K> {
    ambient: usize,
    ech: Echelon<K>,
}

impl<K: Field> PartialEq for Subspace<K> {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.ech.rows() == other.ech.rows()
    }
}

impl<K: Field> Subspace<K> {
    pub fn empty(ambient: usize) -> Self {
        Subspace {
            ambient,
            ech: Echelon::new(),
        }
    }

    pub fn from_rows(ambient: usize, rows: impl IntoIterator<Item = SparseVec<K>>) -> Self {
        let mut s = Subspace::empty(ambient);
        for r in rows {
            s.insert(r);
        }
        s
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ech.rank()
    }

    pub fn insert(&mut self, v: SparseVec<K>) -> bool {
        self.ech.insert(v)
    }

    pub fn contains(&self, v: &SparseVec<K>) -> bool {
        self.ech.contains(v)
    }

    pub fn reduce(&self, v: SparseVec<K>) -> SparseVec<K> {
        self.ech.reduce(v)
    }

    pub fn basis(&self) -> &[SparseVec<K>] {
        self.ech.rows()
    }

    pub fn is_subspace_of(&self, other: &Self) -> bool {
        self.basis().iter().all(|r| other.contains(r))
    }

    /// Intersection of two subspaces via the kernel of the stacked basis.
    pub fn intersect(&self, other: &Self) -> Subspace<K> {
        assert_eq!(self.ambient, other.ambient);
        let a = self.basis();
        let b = other.basis();
        // Solve x·A = y·B: kernel of the (k+m)-column map (x,y) -> x·A - y·B.
        let rows: Vec<SparseVec<K>> = a
            .iter()
            .cloned()
            .chain(b.iter().map(|r| r.scale(&(-K::one()))))
            .collect();
        let combos = kernel_of_rowspan_relations(&rows);
        let mut out = Subspace::empty(self.ambient);
        for combo in combos {
            let mut v = SparseVec::new();
            for (i, c) in combo.iter() {
                if *i < a.len() {
                    v = v.add(&a[*i].scale(c));
                }
            }
            out.insert(v);
        }
        out
    }
}

/// All linear relations among the given rows: the kernel of the map
/// `c -> sum c_i rows_i`, one sparse combination per basis element.
pub fn kernel_of_rowspan_relations<K: Field>(rows: &[SparseVec<K>]) -> Vec<SparseVec<K>> {
    let mut ech = Echelon::with_tracking();
    let mut relations = vec![];
    for (i, r) in rows.iter().enumerate() {
        if !ech.insert(r.clone()) {
            // r is dependent on the previously inserted rows.
            let expr = ech.express(r).expect("dependent row must be expressible");
            let mut rel = expr.scale(&(-K::one()));
            rel = rel.add(&SparseVec::unit(i));
            relations.push(rel);
        }
    }
    relations
}

/// Rank of the matrix with the given rows.
pub fn rank<K: Field>(rows: &[SparseVec<K>]) -> usize {
    let mut ech = Echelon::new();
    for r in rows {
        ech.insert(r.clone());
    }
    ech.rank()
}

/// Basis of the null space `{x : A x = 0}` of the matrix with the given
/// rows over `ncols` columns.
pub fn kernel<K: Field>(rows: &[SparseVec<K>], ncols: usize) -> Vec<SparseVec<K>> {
    let mut ech = Echelon::new();
    for r in rows {
        ech.insert(r.clone());
    }
    let pivots: Vec<usize> = ech.pivots().collect();
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = vec![];
    for f in 0..ncols {
        if is_pivot[f] {
            continue;
        }
        let mut entries = vec![(f, K::one())];
        for (ri, row) in ech.rows().iter().enumerate() {
            if let Some(c) = row.get(f) {
                entries.push((pivots[ri], -c.clone()));
            }
        }
        basis.push(SparseVec::from_entries(entries));
    }
    basis
}

/// One solution of `A x = b` (free variables set to zero), or `None` when
/// inconsistent. Column order determines which solution is preferred: the
/// reduction pivots on the earliest usable columns.
pub fn solve<K: Field>(
    rows: &[SparseVec<K>],
    ncols: usize,
    b: &SparseVec<K>,
) -> Option<SparseVec<K>> {
    // Augment each row i with -b_i in an extra column and row-reduce; a
    // pivot landing in the augmented column means the system is inconsistent.
    let mut ech = Echelon::new();
    for (i, r) in rows.iter().enumerate() {
        let mut aug = r.clone();
        if let Some(c) = b.get(i) {
            aug = aug.add(&SparseVec::from_entries(vec![(ncols, -c.clone())]));
        }
        ech.insert(aug);
    }
    let mut x = vec![];
    for row in ech.rows() {
        let (p, _) = row.leading().expect("row");
        if p == ncols {
            return None;
        }
        if let Some(c) = row.get(ncols) {
            x.push((p, -c.clone()));
        }
    }
    Some(SparseVec::from_entries(x))
}

/// Sparse matrix as a linear map `K^ncols -> K^nrows` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat<K> {
    nrows: usize,
    ncols: usize,
    rows: Vec<SparseVec<K>>,
}

impl<K: Field> SparseMat<K> {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            rows: vec![SparseVec::new(); nrows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(SparseVec::unit).collect();
        SparseMat {
            nrows: n,
            ncols: n,
            rows,
        }
    }

    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<SparseVec<K>>) -> Self {
        assert_eq!(rows.len(), nrows);
        SparseMat { nrows, ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[SparseVec<K>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVec<K> {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> K {
        self.rows[i].get(j).cloned().unwrap_or_else(K::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, c: K) {
        let mut entries: Vec<(usize, K)> =
            self.rows[i].iter().filter(|(k, _)| *k != j).cloned().collect();
        if !c.is_zero() {
            entries.push((j, c));
        }
        self.rows[i] = SparseVec::from_entries(entries);
    }

    pub fn apply(&self, v: &SparseVec<K>) -> SparseVec<K> {
        let mut out = vec![];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = K::zero();
            for (j, c) in row.iter() {
                if let Some(x) = v.get(*j) {
                    acc = acc + c.clone() * x.clone();
                }
            }
            if !acc.is_zero() {
                out.push((i, acc));
            }
        }
        SparseVec::from_entries(out)
    }

    pub fn matmul(&self, other: &SparseMat<K>) -> SparseMat<K> {
        assert_eq!(self.ncols, other.nrows, "shape mismatch");
        let mut rows = Vec::with_capacity(self.nrows);
        for row in &self.rows {
            let mut acc = SparseVec::new();
            for (k, c) in row.iter() {
                acc = acc.add(&other.rows[*k].scale(c));
            }
            rows.push(acc);
        }
        SparseMat {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    pub fn add(&self, other: &SparseMat<K>) -> SparseMat<K> {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.add(b))
            .collect();
        SparseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            rows,
        }
    }

    pub fn sub(&self, other: &SparseMat<K>) -> SparseMat<K> {
        self.add(&other.scale(&(-K::one())))
    }

    pub fn scale(&self, c: &K) -> SparseMat<K> {
        SparseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self.rows.iter().map(|r| r.scale(c)).collect(),
        }
    }

    /// Kronecker product with row-major tensor index `(i, j) -> i * n2 + j`.
    pub fn kron(&self, other: &SparseMat<K>) -> SparseMat<K> {
        let mut rows = Vec::with_capacity(self.nrows * other.nrows);
        for ra in &self.rows {
            for rb in &other.rows {
                let mut entries = vec![];
                for (ja, ca) in ra.iter() {
                    for (jb, cb) in rb.iter() {
                        entries.push((ja * other.ncols + jb, ca.clone() * cb.clone()));
                    }
                }
                rows.push(SparseVec::from_entries(entries));
            }
        }
        SparseMat {
            nrows: self.nrows * other.nrows,
            ncols: self.ncols * other.ncols,
            rows,
        }
    }

    pub fn rank(&self) -> usize {
        rank(&self.rows)
    }

    pub fn kernel(&self) -> Vec<SparseVec<K>> {
        kernel(&self.rows, self.ncols)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(SparseVec::is_zero)
    }

    /// Inverse via augmented reduction; `None` for singular matrices.
    pub fn inverse(&self) -> Option<SparseMat<K>> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut ech = Echelon::with_tracking();
        for r in &self.rows {
            if !ech.insert(r.clone()) {
                return None;
            }
        }
        // express each unit vector over the rows, assembling rows of A^{-1}
        // from the tracked coordinates: if e_i = sum c_j row_j then the i-th
        // row of A^{-1} is (c_j)_j.
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let coords = ech.express(&SparseVec::unit(i))?;
            rows.push(coords);
        }
        Some(SparseMat {
            nrows: n,
            ncols: n,
            rows,
        })
    }
}

/// A quotient of `K^ambient` by a relation subspace, with the classes of the
/// free coordinates as canonical basis.
#[derive(Debug, Clone)]
pub struct QuotientSpace<K> {
    ambient: usize,
    relations: Subspace<K>,
    free_cols: Vec<usize>,
}

impl<K: Field> QuotientSpace<K> {
    pub fn new(ambient: usize, relations: Subspace<K>) -> Self {
        assert_eq!(relations.ambient(), ambient);
        let mut is_pivot = vec![false; ambient];
        for p in relations.ech.pivots() {
            is_pivot[p] = true;
        }
        let free_cols = (0..ambient).filter(|&i| !is_pivot[i]).collect();
        QuotientSpace {
            ambient,
            relations,
            free_cols,
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.free_cols.len()
    }

    pub fn relations(&self) -> &Subspace<K> {
        &self.relations
    }

    /// Quotient coordinates of an ambient vector.
    pub fn project(&self, v: &SparseVec<K>) -> SparseVec<K> {
        let reduced = self.relations.reduce(v.clone());
        let mut entries = vec![];
        for (slot, &col) in self.free_cols.iter().enumerate() {
            if let Some(c) = reduced.get(col) {
                entries.push((slot, c.clone()));
            }
        }
        SparseVec::from_entries(entries)
    }

    /// Canonical ambient representative of the `j`-th basis class.
    pub fn rep(&self, j: usize) -> SparseVec<K> {
        SparseVec::unit(self.free_cols[j])
    }

    /// Ambient coordinate index of the `j`-th basis class representative.
    pub fn rep_index(&self, j: usize) -> usize {
        self.free_cols[j]
    }

    /// Ambient representative of a quotient vector.
    pub fn lift(&self, v: &SparseVec<K>) -> SparseVec<K> {
        v.map_indices(|i| self.free_cols[i])
    }

    pub fn error_if_nonmember(&self, v: &SparseVec<K>) -> Result<(), Error> {
        if self.relations.contains(v) {
            Ok(())
        } else {
            Err(Error::Internal("vector not in relation span".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::RatFun;
    use num_traits::{One, Zero};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        BigRational::from_integer(BigInt::from(n))
    }

    fn v(entries: &[(usize, i64)]) -> SparseVec<Q> {
        SparseVec::from_entries(entries.iter().map(|&(i, c)| (i, q(c))).collect())
    }

    #[test]
    fn echelon_rank_and_membership() {
        let mut s = Subspace::empty(3);
        assert!(s.insert(v(&[(0, 1), (1, 2)])));
        assert!(s.insert(v(&[(1, 1), (2, 1)])));
        assert!(!s.insert(v(&[(0, 1), (1, 3), (2, 1)])));
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&v(&[(0, 2), (1, 5), (2, 1)])));
        assert!(!s.contains(&v(&[(2, 1)])));
    }

    #[test]
    fn canonical_equality() {
        let a = Subspace::from_rows(3, vec![v(&[(0, 1), (2, 1)]), v(&[(1, 1)])]);
        let b = Subspace::from_rows(3, vec![v(&[(0, 2), (1, 2), (2, 2)]), v(&[(1, 5)])]);
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_matches_rank() {
        let rows = vec![v(&[(0, 1), (1, 1), (2, 1)]), v(&[(0, 1), (1, 2), (2, 3)])];
        let ker = kernel(&rows, 3);
        assert_eq!(ker.len(), 1);
        let k = &ker[0];
        // check A k = 0
        for r in &rows {
            let mut acc = q(0);
            for (i, c) in r.iter() {
                if let Some(x) = k.get(*i) {
                    acc += c * x;
                }
            }
            assert!(acc.is_zero());
        }
    }

    #[test]
    fn solve_prefers_early_columns() {
        // x0 + x1 = 1 with two columns: solution should sit on column 0.
        let rows = vec![v(&[(0, 1), (1, 1)])];
        let sol = solve(&rows, 2, &v(&[(0, 1)])).unwrap();
        assert_eq!(sol, v(&[(0, 1)]));
        assert!(solve(&vec![v(&[])], 1, &v(&[(0, 1)])).is_none());
    }

    #[test]
    fn intersection() {
        // span{e0, e1} ∩ span{e1, e2} = span{e1}
        let a = Subspace::from_rows(3, vec![v(&[(0, 1)]), v(&[(1, 1)])]);
        let b = Subspace::from_rows(3, vec![v(&[(1, 1)]), v(&[(2, 1)])]);
        let c = a.intersect(&b);
        assert_eq!(c.dim(), 1);
        assert!(c.contains(&v(&[(1, 7)])));
    }

    #[test]
    fn matrix_inverse_and_kron() {
        let m = SparseMat::from_rows(2, 2, vec![v(&[(0, 1), (1, 1)]), v(&[(1, 1)])]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), SparseMat::identity(2));
        let id2 = SparseMat::<Q>::identity(2);
        assert_eq!(id2.kron(&id2), SparseMat::identity(4));
    }

    #[test]
    fn quotient_projection() {
        // K^3 / span{e0 - e1}: classes of e1, e2 are free.
        let rel = Subspace::from_rows(3, vec![v(&[(0, 1), (1, -1)])]);
        let qs = QuotientSpace::new(3, rel);
        assert_eq!(qs.dim(), 2);
        let p = qs.project(&v(&[(0, 1)]));
        assert_eq!(p, v(&[(0, 1)]));
        assert_eq!(qs.project(&v(&[(0, 1), (1, -1)])), SparseVec::new());
    }

    #[test]
    fn ratfun_elimination_stays_reduced() {
        let qq = RatFun::q();
        let one = RatFun::one();
        let row1 = SparseVec::from_entries(vec![(0, qq.clone()), (1, one.clone())]);
        let row2 = SparseVec::from_entries(vec![
            (0, qq.clone() * qq.clone()),
            (1, qq.clone()),
        ]);
        let mut s = Subspace::empty(2);
        s.insert(row1);
        assert!(!s.insert(row2), "q-multiple of the same line");
        assert_eq!(s.dim(), 1);
    }
}
