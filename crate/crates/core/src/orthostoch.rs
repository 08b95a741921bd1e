//! The stochastic orthogonal group O_1(T), its stabilizers and quotient
//! actions, and exact character tables of the small finite groups that
//! appear along the way.
//!
//! Groups are explicit element lists with an index, enumerated by
//! backtracking over images of the standard basis under q- and
//! polar-matching constraints. Character tables come from class-sum
//! diagonalization over a suitable prime field with lifting to cyclotomic
//! integers; recognized symmetric groups take a border-strip recursion
//! instead. Both paths are cross-checked by the exact orthogonality
//! relations.

use crate::forms::{GenQuadForm, SymBilForm};
use crate::gflinear::{all_ones, index_to_vec, GFMatrix, Subspace};
use crate::isotropic::IsoSubspace;
use crate::par;
use crate::scalars::{CycScalar, Rat};
use std::collections::{BTreeMap, HashMap};

fn matrix_key(m: &GFMatrix) -> Vec<u8> {
    let mut key = Vec::with_capacity(m.rows * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            key.push(m.at(i, j) as u8);
        }
    }
    key
}

/// Finite group of invertible matrices over Z_d with an element index,
/// inverses, and conjugacy classes computed on demand.
#[derive(Clone, Debug)]
pub struct FiniteMatrixGroup {
    pub d: u32,
    pub t: usize,
    pub elements: Vec<GFMatrix>,
    index: HashMap<Vec<u8>, usize>,
    pub identity: usize,
    inverse: Vec<usize>,
}

impl FiniteMatrixGroup {
    pub fn from_elements(d: u32, t: usize, mut elements: Vec<GFMatrix>) -> Self {
        elements.sort_by_key(matrix_key);
        elements.dedup_by_key(|m| matrix_key(m));
        let index: HashMap<Vec<u8>, usize> =
            elements.iter().enumerate().map(|(i, m)| (matrix_key(m), i)).collect();
        let identity = *index
            .get(&matrix_key(&GFMatrix::identity(d, t)))
            .expect("group must contain the identity");
        let inverse: Vec<usize> = elements
            .iter()
            .map(|m| {
                let inv = m.inverse().expect("group elements are invertible");
                *index.get(&matrix_key(&inv)).expect("group must contain inverses")
            })
            .collect();
        FiniteMatrixGroup { d, t, elements, index, identity, inverse }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, m: &GFMatrix) -> Option<usize> {
        self.index.get(&matrix_key(m)).copied()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let prod = self.elements[a].mul(&self.elements[b]);
        *self.index.get(&matrix_key(&prod)).expect("group not closed under product")
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn element_order(&self, a: usize) -> u32 {
        let mut cur = a;
        let mut ord = 1u32;
        while cur != self.identity {
            cur = self.mul(cur, a);
            ord += 1;
        }
        ord
    }

    /// Spot-check closure: full product table for small groups, a sampled
    /// grid beyond 300 elements.
    pub fn check_closure(&self) -> bool {
        let n = self.len();
        let step = if n <= 300 { 1 } else { n / 97 + 1 };
        for a in (0..n).step_by(step) {
            for b in (0..n).step_by(step) {
                let prod = self.elements[a].mul(&self.elements[b]);
                if self.index_of(&prod).is_none() {
                    return false;
                }
            }
        }
        true
    }

    pub fn conjugacy_classes(&self) -> Vec<ConjClass> {
        let n = self.len();
        let mut assigned = vec![usize::MAX; n];
        let mut classes: Vec<ConjClass> = Vec::new();
        for x in 0..n {
            if assigned[x] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let mut members = Vec::new();
            for g in 0..n {
                let y = self.mul(self.mul(g, x), self.inv(g));
                if assigned[y] == usize::MAX {
                    assigned[y] = id;
                    members.push(y);
                }
            }
            members.sort_unstable();
            classes.push(ConjClass {
                rep: x,
                size: members.len(),
                order: self.element_order(x),
                members,
            });
        }
        // Identity class first, then by (size, order) for determinism.
        classes.sort_by_key(|c| (c.size != 1 || c.order != 1, c.size, c.order, c.rep));
        classes
    }

    pub fn exponent(&self, classes: &[ConjClass]) -> u32 {
        classes.iter().fold(1u64, |acc, c| num_integer::lcm(acc, c.order as u64)) as u32
    }
}

#[derive(Clone, Debug)]
pub struct ConjClass {
    pub rep: usize,
    pub size: usize,
    pub order: u32,
    pub members: Vec<usize>,
}

/// All invertible matrices whose columns reproduce the Gram matrix of beta
/// on the standard basis, optionally constrained to fix a vector.
pub fn enumerate_bilinear_isometries(beta: &SymBilForm, fix: Option<&[u32]>) -> Vec<GFMatrix> {
    let t = beta.t;
    let d = beta.d;
    isometry_guard(d, t);
    let total = (d as u64).pow(t as u32);
    let all: Vec<Vec<u32>> = (1..total).map(|i| index_to_vec(d, t, i)).collect();
    let first: Vec<Vec<GFMatrix>> = par::map_items(
        all.iter()
            .filter(|v| beta.eval(v.as_slice(), v.as_slice()) == beta.at(0, 0))
            .cloned()
            .collect::<Vec<_>>(),
        |v: Vec<u32>| {
            let mut cols = vec![v];
            let mut out = Vec::new();
            extend_isometry(d, &mut cols, &all, &mut out, &|cols: &[Vec<u32>], w: &[u32]| {
                let k = cols.len();
                beta.eval(w, w) == beta.at(k, k)
                    && (0..k).all(|j| beta.eval(&cols[j], w) == beta.at(j, k))
            });
            out
        },
    );
    let mut result: Vec<GFMatrix> = first.into_iter().flatten().collect();
    if let Some(f) = fix {
        result.retain(|m| m.mul_vec(f) == f.to_vec());
    }
    result
}

/// Isometries of a generalized quadratic form (columns match both the
/// diagonal q-values and the polar Gram matrix), optionally fixing a vector.
pub fn enumerate_form_isometries(q: &GenQuadForm, fix: Option<&[u32]>) -> Vec<GFMatrix> {
    let t = q.t();
    let d = q.d;
    isometry_guard(d, t);
    if t == 0 {
        return vec![GFMatrix::identity(d, 0)];
    }
    let total = (d as u64).pow(t as u32);
    let all: Vec<Vec<u32>> = (1..total).map(|i| index_to_vec(d, t, i)).collect();
    let first: Vec<Vec<GFMatrix>> = par::map_items(
        all.iter()
            .filter(|v| q.eval(v.as_slice()) == q.diag[0])
            .cloned()
            .collect::<Vec<_>>(),
        |v: Vec<u32>| {
            let mut cols = vec![v];
            let mut out = Vec::new();
            extend_isometry(d, &mut cols, &all, &mut out, &|cols: &[Vec<u32>], w: &[u32]| {
                let k = cols.len();
                q.eval(w) == q.diag[k]
                    && (0..k).all(|j| q.polar().eval(&cols[j], w) == q.polar().at(j, k))
            });
            out
        },
    );
    let mut result: Vec<GFMatrix> = first.into_iter().flatten().collect();
    if let Some(f) = fix {
        result.retain(|m| m.mul_vec(f) == f.to_vec());
    }
    result
}

fn isometry_guard(d: u32, t: usize) {
    let ok = match d {
        2 => t <= 7,
        3 | 5 => t <= 4,
        _ => t <= 3,
    };
    assert!(ok, "isometry enumeration guard exceeded: d={d}, t={t}");
}

fn extend_isometry(
    d: u32,
    cols: &mut Vec<Vec<u32>>,
    all: &[Vec<u32>],
    out: &mut Vec<GFMatrix>,
    admissible: &dyn Fn(&[Vec<u32>], &[u32]) -> bool,
) {
    let t = cols[0].len();
    if cols.len() == t {
        let m = GFMatrix::from_fn(d, t, t, |i, j| cols[j][i]);
        debug_assert_eq!(m.rank(), t);
        out.push(m);
        return;
    }
    let span = Subspace::span(d, t, cols);
    for w in all {
        if !admissible(cols, w) || span.contains(w) {
            continue;
        }
        cols.push(w.clone());
        extend_isometry(d, cols, all, out, admissible);
        cols.pop();
    }
}

/// First invertible g with target(g e_i) matching source's diagonal,
/// polar(g e_i, g e_j) matching source's polar, and g 1_t = 1_t. Pulls the
/// target form back to the source form while preserving stochasticity.
/// The last column is forced by the row-sum constraint, which prunes the
/// search by a factor of the candidate count.
pub fn stochastic_transporter(
    source: &GenQuadForm,
    target: &GenQuadForm,
) -> Option<GFMatrix> {
    assert_eq!(source.d, target.d);
    assert_eq!(source.t(), target.t());
    let t = source.t();
    let d = source.d;
    isometry_guard(d, t.saturating_sub(1));
    let total = (d as u64).pow(t as u32);
    let all: Vec<Vec<u32>> = (1..total).map(|i| index_to_vec(d, t, i)).collect();
    let one = all_ones(t);

    fn admissible(
        source: &GenQuadForm,
        target: &GenQuadForm,
        cols: &[Vec<u32>],
        w: &[u32],
    ) -> bool {
        let k = cols.len();
        target.eval(w) == source.diag[k]
            && (0..k).all(|j| target.polar().eval(&cols[j], w) == source.polar().at(j, k))
    }

    fn rec(
        source: &GenQuadForm,
        target: &GenQuadForm,
        all: &[Vec<u32>],
        one: &[u32],
        cols: &mut Vec<Vec<u32>>,
    ) -> Option<GFMatrix> {
        let t = one.len();
        let d = source.d;
        if cols.len() == t - 1 {
            // Forced: last column = 1_t - sum of the others.
            let mut last = one.to_vec();
            for c in cols.iter() {
                last = crate::gflinear::vec_sub(d, &last, c);
            }
            if last.iter().all(|&x| x == 0) || !admissible(source, target, cols, &last) {
                return None;
            }
            cols.push(last);
            let g = GFMatrix::from_fn(d, t, t, |i, j| cols[j][i]);
            cols.pop();
            if g.rank() == t {
                return Some(g);
            }
            return None;
        }
        let span = Subspace::span(d, t, cols);
        for w in all {
            if !admissible(source, target, cols, w) || span.contains(w) {
                continue;
            }
            cols.push(w.clone());
            if let Some(g) = rec(source, target, all, one, cols) {
                return Some(g);
            }
            cols.pop();
        }
        None
    }

    if t == 0 {
        return Some(GFMatrix::identity(d, 0));
    }
    rec(source, target, &all, &one, &mut Vec::new())
}

/// The stochastic orthogonal group of q_{r,s}: isometries fixing 1_t. For
/// d = 2 the fixing is a theorem, so it is asserted rather than filtered.
pub fn enumerate_o1(r: usize, s: usize, d: u32) -> FiniteMatrixGroup {
    let t = r + s;
    let q = GenQuadForm::model(d, r, s);
    let one = all_ones(t);
    if d == 2 {
        let elems = enumerate_form_isometries(&q, None);
        for m in &elems {
            assert_eq!(m.mul_vec(&one), one, "a d=2 isometry failed to fix 1_t");
        }
        FiniteMatrixGroup::from_elements(d, t, elems)
    } else {
        FiniteMatrixGroup::from_elements(d, t, enumerate_form_isometries(&q, Some(&one)))
    }
}

/// {O in G : O N = N}.
pub fn stabilizer(g: &FiniteMatrixGroup, n: &Subspace) -> FiniteMatrixGroup {
    let elems: Vec<GFMatrix> = g
        .elements
        .iter()
        .filter(|m| {
            let rows: Vec<Vec<u32>> = n.basis().iter().map(|v| m.mul_vec(v)).collect();
            Subspace::span(n.d, n.t, &rows) == *n
        })
        .cloned()
        .collect();
    FiniteMatrixGroup::from_elements(g.d, g.t, elems)
}

/// The descended action of the N-stabilizer on T_N = N^perp / N.
pub struct QuotientAction {
    /// Image matrix on T_N coordinates per stabilizer element.
    pub images: Vec<GFMatrix>,
    /// Stabilizer indices acting trivially on T_N.
    pub kernel: Vec<usize>,
    /// Deduplicated image group.
    pub image: FiniteMatrixGroup,
}

pub fn quotient_action(stab: &FiniteMatrixGroup, iso: &IsoSubspace) -> QuotientAction {
    let k = iso.quotient.dim_t();
    let images: Vec<GFMatrix> = stab
        .elements
        .iter()
        .map(|o| {
            let cols: Vec<Vec<u32>> = iso
                .quotient
                .reps()
                .iter()
                .map(|rep| {
                    iso.quotient
                        .project(&o.mul_vec(rep))
                        .expect("stabilizer elements preserve N^perp")
                })
                .collect();
            GFMatrix::from_fn(stab.d, k, k, |i, j| cols[j][i])
        })
        .collect();
    let kernel: Vec<usize> =
        (0..stab.len()).filter(|&i| images[i].is_identity()).collect();
    let image = FiniteMatrixGroup::from_elements(stab.d, k, images.clone());
    QuotientAction { images, kernel, image }
}

/// O_1(T_N): isometries of the descended form fixing the coset of 1_t.
pub fn enumerate_o1_quotient(iso: &IsoSubspace) -> FiniteMatrixGroup {
    let qn = iso.quotient_form();
    let one_class = iso
        .quotient
        .project(&all_ones(iso.t()))
        .expect("1_t lies in N^perp for stochastic N");
    let fix = if one_class.iter().all(|&x| x == 0) { None } else { Some(one_class) };
    FiniteMatrixGroup::from_elements(
        iso.d,
        iso.quotient.dim_t(),
        enumerate_form_isometries(&qn, fix.as_deref()),
    )
}

/// G_N: stabilizer elements that fix the chosen complement K_N and N
/// pointwise, acting only on the T_N block.
pub fn subgroup_g_n(stab: &FiniteMatrixGroup, iso: &IsoSubspace) -> FiniteMatrixGroup {
    let k_n = crate::forms::complement_basis(&iso.perp);
    let fixed: Vec<Vec<u32>> =
        k_n.iter().chain(iso.n.basis().iter()).cloned().collect();
    let elems: Vec<GFMatrix> = stab
        .elements
        .iter()
        .filter(|m| fixed.iter().all(|v| m.mul_vec(v) == *v))
        .cloned()
        .collect();
    FiniteMatrixGroup::from_elements(stab.d, stab.t, elems)
}

// ---------------------------------------------------------------------------
// Character tables.

/// Exact character table: classes in the group's canonical class order,
/// values as cyclotomic integers with modulus = exponent(G).
pub struct CharacterTable {
    pub exponent: u32,
    pub classes: Vec<ConjClass>,
    /// chars[irrep][class].
    pub chars: Vec<Vec<CycScalar>>,
}

impl CharacterTable {
    pub fn dims(&self) -> Vec<u64> {
        self.chars
            .iter()
            .map(|row| {
                let r = row[0].as_rat().expect("character degree is an integer");
                assert!(r.is_integer());
                let (num, den) = (r.numer().clone(), r.denom().clone());
                assert_eq!(den, 1.into());
                let v: i64 = num.try_into().expect("degree fits i64");
                v as u64
            })
            .collect()
    }

    /// Both orthogonality relations, exactly.
    pub fn verify(&self, group_order: u64) -> bool {
        let m = self.exponent;
        let k = self.classes.len();
        for a in 0..k {
            for b in 0..k {
                let mut acc = CycScalar::zero(m);
                for (c, class) in self.classes.iter().enumerate() {
                    let term = self.chars[a][c]
                        .mul(&self.chars[b][c].conj())
                        .scale(&Rat::from_integer((class.size as i64).into()));
                    acc = acc.add(&term);
                }
                let want = if a == b {
                    CycScalar::from_int(m, group_order as i64)
                } else {
                    CycScalar::zero(m)
                };
                if acc != want {
                    return false;
                }
            }
        }
        for c1 in 0..k {
            for c2 in 0..k {
                let mut acc = CycScalar::zero(m);
                for a in 0..k {
                    acc = acc.add(&self.chars[a][c1].mul(&self.chars[a][c2].conj()));
                }
                let want = if c1 == c2 {
                    CycScalar::from_rat(
                        m,
                        Rat::new((group_order as i64).into(), (self.classes[c1].size as i64).into()),
                    )
                } else {
                    CycScalar::zero(m)
                };
                if acc != want {
                    return false;
                }
            }
        }
        true
    }
}

/// Exact character table, using the border-strip recursion when the group
/// matches a symmetric-group class profile and class-sum diagonalization
/// otherwise. The result always passes `verify`.
pub fn character_table(g: &FiniteMatrixGroup) -> CharacterTable {
    assert!(g.len() <= 10_000, "character table size guard");
    let classes = g.conjugacy_classes();
    let table = symmetric_group_table(g, &classes)
        .unwrap_or_else(|| dixon_table(g, &classes));
    assert!(table.verify(g.len() as u64), "character table failed orthogonality");
    table
}

// --- symmetric-group fast path ---

fn partitions(k: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(cap)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// Centralizer order z_mu = prod_j m_j! j^(m_j).
fn z_mu(mu: &[usize]) -> u64 {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &p in mu {
        *counts.entry(p).or_insert(0) += 1;
    }
    counts
        .iter()
        .map(|(&j, &m)| (1..=m).product::<u64>() * (j as u64).pow(m as u32))
        .product()
}

fn lcm_of(mu: &[usize]) -> u64 {
    mu.iter().fold(1u64, |acc, &p| num_integer::lcm(acc, p as u64))
}

/// Border-strip recursion on beta-sets: remove a strip of length r by
/// lowering one beta number, sign by the number of beta numbers jumped.
fn strip_char(beta: &[usize], mu: &[usize]) -> i64 {
    let Some((&r, rest)) = mu.split_first() else {
        return 1;
    };
    let mut total = 0i64;
    for (pos, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let mut nb: Vec<usize> = beta.to_vec();
        nb[pos] = b - r;
        let jumped = beta.iter().filter(|&&x| x < b && x > b - r).count();
        nb.sort_unstable();
        let sign = if jumped % 2 == 0 { 1 } else { -1 };
        total += sign * strip_char(&nb, rest);
    }
    total
}

fn beta_set(lambda: &[usize], k: usize) -> Vec<usize> {
    // Pad with zero parts to length k.
    let mut beta: Vec<usize> = (0..k)
        .map(|i| lambda.get(i).copied().unwrap_or(0) + (k - 1 - i))
        .collect();
    beta.sort_unstable();
    beta
}

/// Match the class profile against S_k and build the table by the strip
/// recursion; None when the group is not plainly an S_k.
fn symmetric_group_table(
    g: &FiniteMatrixGroup,
    classes: &[ConjClass],
) -> Option<CharacterTable> {
    let order = g.len() as u64;
    let k = (1..=8).find(|&k| factorial(k) == order)?;
    let parts = partitions(k);
    if parts.len() != classes.len() {
        return None;
    }
    // Assign each class the unique cycle type with its (size, order) pair.
    let mut assignment: Vec<usize> = Vec::with_capacity(classes.len());
    for class in classes {
        let matches: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|(_, mu)| {
                factorial(k) / z_mu(mu) == class.size as u64
                    && lcm_of(mu) == class.order as u64
            })
            .map(|(i, _)| i)
            .collect();
        match matches.as_slice() {
            [only] => assignment.push(*only),
            _ => return None,
        }
    }
    let exponent = g.exponent(classes).max(2);
    let chars: Vec<Vec<CycScalar>> = parts
        .iter()
        .map(|lambda| {
            let beta = beta_set(lambda, k);
            assignment
                .iter()
                .map(|&mi| CycScalar::from_int(exponent, strip_char(&beta, &parts[mi])))
                .collect()
        })
        .collect();
    Some(CharacterTable { exponent, classes: classes.to_vec(), chars })
}

// --- class-sum diagonalization over F_p ---

struct ModMat {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ModMat {
    fn zero(p: u64, rows: usize, cols: usize) -> Self {
        ModMat { p, rows, cols, data: vec![0; rows * cols] }
    }
    fn at(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }
    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.p;
    }
    fn mul(&self, o: &ModMat) -> ModMat {
        let mut out = ModMat::zero(self.p, self.rows, o.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.at(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let v = (out.at(i, j) + a * o.at(l, j)) % self.p;
                    out.set(i, j, v);
                }
            }
        }
        out
    }
    /// Returns pivot columns; reduces in place.
    fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.at(i, c) != 0) else {
                continue;
            };
            for j in 0..self.cols {
                let tmp = self.at(r, j);
                self.set(r, j, self.at(pr, j));
                self.set(pr, j, tmp);
            }
            let inv = mod_inv(self.at(r, c), self.p);
            for j in 0..self.cols {
                let v = self.at(r, j) * inv % self.p;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && self.at(i, c) != 0 {
                    let f = self.at(i, c);
                    for j in 0..self.cols {
                        let v = (self.at(i, j) + (self.p - f) * self.at(r, j)) % self.p;
                        self.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }
    fn kernel(&self) -> Vec<Vec<u64>> {
        let mut m = ModMat { p: self.p, rows: self.rows, cols: self.cols, data: self.data.clone() };
        let pivots = m.rref();
        let mut out = Vec::new();
        for free in 0..self.cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (self.p - m.at(r, free)) % self.p;
            }
            out.push(v);
        }
        out
    }
    /// One solution of self * x = b, if any.
    fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        let mut aug = ModMat::zero(self.p, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.at(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![0u64; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.at(r, self.cols);
        }
        Some(x)
    }
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn mod_inv(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

fn dixon_table(g: &FiniteMatrixGroup, classes: &[ConjClass]) -> CharacterTable {
    let order = g.len() as u64;
    let k = classes.len();
    let e = g.exponent(classes) as u64;
    // p = 1 mod e, large enough that degrees and multiplicities lift
    // uniquely from F_p.
    let p = (1..)
        .map(|j| j * e + 1)
        .find(|&p| p > 2 * order && is_prime(p))
        .unwrap();

    let class_of: Vec<usize> = {
        let mut v = vec![usize::MAX; g.len()];
        for (ci, c) in classes.iter().enumerate() {
            for &m in &c.members {
                v[m] = ci;
            }
        }
        v
    };

    // Structure constants: counts of products landing in each class.
    let mut a = vec![vec![vec![0u64; k]; k]; k];
    for (i, ci) in classes.iter().enumerate() {
        let mut cnt = vec![vec![0u64; k]; k];
        for &x in &ci.members {
            for y in 0..g.len() {
                let z = g.mul(x, y);
                cnt[class_of[y]][class_of[z]] += 1;
            }
        }
        for j in 0..k {
            for l in 0..k {
                debug_assert_eq!(cnt[j][l] % classes[l].size as u64, 0);
                a[i][j][l] = cnt[j][l] / classes[l].size as u64;
            }
        }
    }

    // Split the class-function space into common eigenlines of the class
    // matrices M_i with (M_i)[j][l] = a[i][j][l].
    let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..k)
        .map(|i| {
            let mut v = vec![0u64; k];
            v[i] = 1;
            v
        })
        .collect()];
    for i in 0..k {
        let mut mi = ModMat::zero(p, k, k);
        for j in 0..k {
            for l in 0..k {
                mi.set(j, l, a[i][j][l] % p);
            }
        }
        let mut next: Vec<Vec<Vec<u64>>> = Vec::new();
        for space in &spaces {
            if space.len() == 1 {
                next.push(space.clone());
                continue;
            }
            // Restriction R of M_i to the subspace: M_i * B = B * R.
            let m = space.len();
            let mut b = ModMat::zero(p, k, m);
            for (col, v) in space.iter().enumerate() {
                for row in 0..k {
                    b.set(row, col, v[row]);
                }
            }
            let mib = mi.mul(&b);
            let mut r = ModMat::zero(p, m, m);
            for col in 0..m {
                let rhs: Vec<u64> = (0..k).map(|row| mib.at(row, col)).collect();
                let x = b.solve(&rhs).expect("class matrices preserve the split");
                for row in 0..m {
                    r.set(row, col, x[row]);
                }
            }
            // Eigenvalues by scanning the field (p is small).
            let mut seen = 0usize;
            for lam in 0..p {
                let mut shifted = ModMat::zero(p, m, m);
                for x in 0..m {
                    for y in 0..m {
                        let v = if x == y { (r.at(x, y) + p - lam) % p } else { r.at(x, y) };
                        shifted.set(x, y, v);
                    }
                }
                let ker = shifted.kernel();
                if ker.is_empty() {
                    continue;
                }
                seen += ker.len();
                let lifted: Vec<Vec<u64>> = ker
                    .iter()
                    .map(|coef| {
                        let mut v = vec![0u64; k];
                        for (ci, c) in coef.iter().enumerate() {
                            for row in 0..k {
                                v[row] = (v[row] + c * space[ci][row]) % p;
                            }
                        }
                        v
                    })
                    .collect();
                next.push(lifted);
                if seen == m {
                    break;
                }
            }
            assert_eq!(seen, m, "class matrix failed to split the space");
        }
        spaces = next;
        if spaces.iter().all(|s| s.len() == 1) {
            break;
        }
    }
    assert!(spaces.iter().all(|s| s.len() == 1), "class matrices did not separate irreps");

    // Inverse-class permutation.
    let inv_class: Vec<usize> =
        classes.iter().map(|c| class_of[g.inv(c.rep)]).collect();

    // Normalize each eigenvector to omega values, recover the degree, then
    // the character values mod p.
    let id_class = classes
        .iter()
        .position(|c| c.size == 1 && c.order == 1)
        .expect("identity class present");
    let mut chars_p: Vec<Vec<u64>> = Vec::with_capacity(k);
    for space in &spaces {
        let w = &space[0];
        assert_ne!(w[id_class], 0, "omega vector vanishes at the identity");
        let scale = mod_inv(w[id_class], p);
        let omega: Vec<u64> = w.iter().map(|&x| x * scale % p).collect();
        let mut denom = 0u64;
        for c in 0..k {
            denom = (denom
                + omega[c] * omega[inv_class[c]] % p * mod_inv(classes[c].size as u64 % p, p))
                % p;
        }
        let deg_sq = order % p * mod_inv(denom, p) % p;
        let deg = (1..=order)
            .take_while(|d| d * d <= order)
            .find(|&d| d * d % p == deg_sq)
            .expect("degree must be a small square root");
        let row: Vec<u64> = (0..k)
            .map(|c| deg % p * omega[c] % p * mod_inv(classes[c].size as u64 % p, p) % p)
            .collect();
        chars_p.push(row);
    }
    // Sort rows by degree for determinism.
    chars_p.sort_by_key(|row| (row[id_class], row.clone()));

    // A fixed element of order e in F_p*, playing the role of zeta_e.
    let z = (2..p)
        .map(|a| mod_pow(a, (p - 1) / e, p))
        .find(|&z| {
            if z == 1 {
                return false;
            }
            prime_divisors(e).into_iter().all(|q| mod_pow(z, e / q, p) != 1)
        })
        .expect("primitive e-th root exists mod p");

    // class_power[c][j] = class of rep_c^j.
    let class_power: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| {
            let mut powers = Vec::with_capacity(e as usize);
            let mut cur = g.identity;
            for _ in 0..e {
                powers.push(class_of[cur]);
                cur = g.mul(cur, c.rep);
            }
            powers
        })
        .collect();

    // Modulus for the cyclotomic values; bumped to 2 so the degenerate
    // exponent-1 case still has a ring to live in.
    let me = e.max(2);
    let e_inv = mod_inv(e % p, p);
    let chars: Vec<Vec<CycScalar>> = chars_p
        .iter()
        .map(|row| {
            (0..k)
                .map(|c| {
                    let mut terms: Vec<(i64, Rat)> = Vec::new();
                    for l in 0..e {
                        // Multiplicity of zeta_e^l among the eigenvalues of
                        // the class representative; z^(-jl) = z^(e - jl mod e).
                        let mut m_l = 0u64;
                        for j in 0..e {
                            let val = row[class_power[c][j as usize]];
                            let zp = mod_pow(z, (e - (j * l) % e) % e, p);
                            m_l = (m_l + val * zp) % p;
                        }
                        m_l = m_l * e_inv % p;
                        assert!(m_l <= order, "eigenvalue multiplicity fails to lift: {m_l}");
                        if m_l > 0 {
                            terms.push((
                                (l * (me / e)) as i64,
                                Rat::from_integer((m_l as i64).into()),
                            ));
                        }
                    }
                    CycScalar::from_terms(me as u32, terms, 0)
                })
                .collect()
        })
        .collect();

    CharacterTable { exponent: me as u32, classes: classes.to_vec(), chars }
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotropic::{enumerate, Stratum};

    #[test]
    fn o1_small_orders() {
        assert_eq!(enumerate_o1(1, 0, 2).len(), 1);
        assert_eq!(enumerate_o1(1, 0, 3).len(), 1);
        assert_eq!(enumerate_o1(3, 0, 2).len(), 6);
        assert_eq!(enumerate_o1(5, 0, 2).len(), 120);
        // Odd d: permutation matrices are the whole group at (3,0), d=3.
        let g33 = enumerate_o1(3, 0, 3);
        assert_eq!(g33.len(), 6);
        for m in &g33.elements {
            for j in 0..3 {
                assert_eq!((0..3).map(|i| m.at(i, j)).sum::<u32>(), 1);
            }
        }
    }

    #[test]
    fn o1_preserves_form_exhaustively() {
        for (r, s, d) in [(3usize, 0usize, 2u32), (2, 1, 2), (2, 2, 2), (3, 0, 3)] {
            let g = enumerate_o1(r, s, d);
            assert!(g.check_closure());
            let q = GenQuadForm::model(d, r, s);
            let t = r + s;
            let one = all_ones(t);
            for m in &g.elements {
                assert!(&q.transform(m) == &q);
                assert_eq!(m.mul_vec(&one), one);
            }
        }
    }

    #[test]
    fn stabilizer_and_orbit_sizes_multiply() {
        let g = enumerate_o1(5, 0, 2);
        let gr1 = enumerate(5, 0, 2, 1, Stratum::Plain);
        assert_eq!(gr1.len(), 5);
        let stab = stabilizer(&g, &gr1[0].n);
        assert_eq!(stab.len() * gr1.len(), g.len());
        assert_eq!(stab.len(), 24);
    }

    #[test]
    fn quotient_action_reaches_the_whole_quotient_group() {
        let g = enumerate_o1(5, 0, 2);
        let iso = enumerate(5, 0, 2, 1, Stratum::Plain)
            .into_iter()
            .find(|i| i.n.basis()[0] == vec![0, 1, 1, 1, 1])
            .unwrap();
        let stab = stabilizer(&g, &iso.n);
        let qa = quotient_action(&stab, &iso);
        // Homomorphism spot check.
        for a in [0usize, 3, 7] {
            for b in [1usize, 5, 11] {
                let ab = stab.mul(a, b);
                assert_eq!(matrix_key(&qa.images[a].mul(&qa.images[b])), matrix_key(&qa.images[ab]));
            }
        }
        let o1_quot = enumerate_o1_quotient(&iso);
        assert_eq!(qa.image.len(), o1_quot.len());
        for m in &qa.image.elements {
            assert!(o1_quot.index_of(m).is_some());
        }
        assert_eq!(qa.image.len(), 6);
        assert_eq!(qa.kernel.len() * qa.image.len(), stab.len());
        // G_N is isomorphic to the image: same order here, and its
        // restriction to T_N coordinates is exactly the image group.
        let gn = subgroup_g_n(&stab, &iso);
        assert_eq!(gn.len(), qa.image.len());
        let restricted = quotient_action(&gn, &iso);
        assert_eq!(restricted.image.len(), gn.len());
        assert_eq!(restricted.kernel.len(), 1);
    }

    #[test]
    fn quotient_of_dimension_three_code_is_trivial() {
        let iso = enumerate(7, 0, 2, 3, Stratum::Plain)
            .into_iter()
            .find(|i| {
                i.n == Subspace::span(
                    2,
                    7,
                    &[
                        vec![1, 1, 1, 1, 0, 0, 0],
                        vec![0, 0, 1, 1, 1, 1, 0],
                        vec![1, 0, 1, 0, 1, 0, 1],
                    ],
                )
            })
            .unwrap();
        assert_eq!(iso.quotient.dim_t(), 1);
        let o1 = enumerate_o1_quotient(&iso);
        assert_eq!(o1.len(), 1);
    }

    #[test]
    fn orthonormal_defect_counts_are_multiples_of_four() {
        // Columns of dot-product isometries are exactly the orthonormal
        // bases; count basis vectors with q_{t,0} = 3 mod 4.
        for t in [4usize, 5] {
            let beta = SymBilForm::dot(2, t);
            let q = GenQuadForm::model(2, t, 0);
            let bases = enumerate_bilinear_isometries(&beta, None);
            let mut observed: std::collections::BTreeSet<usize> = Default::default();
            for m in &bases {
                let k = (0..t).filter(|&j| q.eval(&m.col(j)) == 3).count();
                assert_eq!(k % 4, 0, "defect count must be a multiple of 4");
                observed.insert(k);
            }
            let want: std::collections::BTreeSet<usize> = [0usize, 4].into_iter().collect();
            assert_eq!(observed, want, "observed defect counts at t={t}");
        }
    }

    #[test]
    fn character_tables_of_recognized_symmetric_groups() {
        let s3 = enumerate_o1(3, 0, 2);
        let t3 = character_table(&s3);
        let mut dims = t3.dims();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 1, 2]);

        let s5 = enumerate_o1(5, 0, 2);
        let t5 = character_table(&s5);
        let mut dims = t5.dims();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 1, 4, 4, 5, 5, 6]);
        assert_eq!(t5.classes.len(), 7);
    }

    #[test]
    fn dixon_agrees_with_strip_recursion_on_s3() {
        let s3 = enumerate_o1(3, 0, 2);
        let classes = s3.conjugacy_classes();
        let direct = dixon_table(&s3, &classes);
        assert!(direct.verify(6));
        let strip = symmetric_group_table(&s3, &classes).expect("S3 recognized");
        assert_eq!(direct.exponent, strip.exponent);
        // Same rows up to order: match each strip row to exactly one
        // unused dixon row, value by value.
        let mut used = vec![false; direct.chars.len()];
        for srow in &strip.chars {
            let found = direct.chars.iter().enumerate().position(|(i, drow)| {
                !used[i] && drow.iter().zip(srow).all(|(a, b)| a == b)
            });
            used[found.expect("strip row missing from dixon table")] = true;
        }
    }

    #[test]
    fn dixon_handles_nonsymmetric_groups() {
        // The kernel of the quotient action at (5,0), N1 is a 2-group of
        // order 4; table must come out exact.
        let g = enumerate_o1(5, 0, 2);
        let iso = enumerate(5, 0, 2, 1, Stratum::Plain).remove(0);
        let stab = stabilizer(&g, &iso.n);
        let qa = quotient_action(&stab, &iso);
        let kernel_elems: Vec<GFMatrix> =
            qa.kernel.iter().map(|&i| stab.elements[i].clone()).collect();
        let kg = FiniteMatrixGroup::from_elements(2, 5, kernel_elems);
        assert_eq!(kg.len(), 4);
        let table = character_table(&kg);
        assert_eq!(table.chars.len(), kg.conjugacy_classes().len());
        let mut dims = table.dims();
        dims.sort_unstable();
        assert!(dims.iter().all(|&d| d == 1), "abelian group has linear characters");
    }

    #[test]
    fn trivial_group_table() {
        let g = enumerate_o1(1, 0, 2);
        let table = character_table(&g);
        assert_eq!(table.chars.len(), 1);
        assert_eq!(table.dims(), vec![1]);
    }
}
