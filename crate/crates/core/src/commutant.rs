//! Tensor-power CSS code projectors, basis permutations, coset states, the
//! commutant semigroup, and its exact trace/Gram calculus.
//!
//! Every operator here is an n-th tensor power with respect to the column
//! grouping of H_{n,t}, so identities are established on the single-column
//! d^t-dimensional factor and raised to n by counting. Single-column
//! projectors and permutations have rational entries and live in RatMat;
//! cyclotomic scalars only enter for comparisons against gate matrices.
//!
//! Conventions for a subspace N of T = Z_d^t carrying the signature form:
//! the projector kernel is p[y, x] = d^(-dim N) [x in N-perp][y - x in N],
//! with N-perp taken against the polar form of q_{r,s}. For even d the sign
//! twist on the Z part is invisible and the kernel agrees with the plain
//! sum of X(u)Z(v) over u, v in N.

use crate::cliffordrep::{
    gate_matrix, label_index, weyl_op, word_matrix, CliffordWord, DenseOp, Gate, StateVector,
};
use crate::gflinear::{all_ones, index_to_vec, vec_add, vec_to_index, GFMatrix, Subspace};
use crate::isotropic::{enumerate, IsoSubspace, Stratum};
use crate::orthostoch::{enumerate_o1, FiniteMatrixGroup};
use crate::par;
use crate::ratlin::{Rat, RatMat};
use crate::scalars::{modulus_for, tau_order, CycScalar, Scalar};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

fn pw(d: u32, k: usize) -> usize {
    (d as usize).pow(k as u32)
}

fn rat_pow(base: &Rat, e: usize) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

/// 1 / d^k.
fn inv_d_pow(d: u32, k: usize) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(d).pow(k as u32))
}

// ---------------------------------------------------------------------------
// Projectors and permutations at the single-column level.

/// Single-column factor of the tensor-power CSS projector: a d^t x d^t
/// rational matrix with kernel d^(-m) [x in N-perp][y - x in N].
pub fn projector_p(sub: &IsoSubspace) -> RatMat {
    let d = sub.d;
    let t = sub.t();
    let m = sub.m();
    let dim = pw(d, t);
    assert!(dim <= 4096, "single-column space too large: d^t = {dim}");
    let coeff = inv_d_pow(d, m);
    let elems = sub.n.elements();
    let mut p = RatMat::zero(dim, dim);
    for x_idx in 0..dim {
        let x = index_to_vec(d, t, x_idx as u64);
        if !sub.perp.contains(&x) {
            continue;
        }
        for u in &elems {
            let y = vec_add(d, &x, u);
            p.set(vec_to_index(d, &y) as usize, x_idx, coeff.clone());
        }
    }
    p
}

/// The same projector assembled literally as d^(-2m) sum over u, v in N of
/// the shift X(u) paired with the signature-twisted clock part. Quadratic
/// in d^t and d^m, so guarded to small columns; used as an oracle against
/// the kernel form.
pub fn projector_weyl_sum(sub: &IsoSubspace) -> DenseOp<CycScalar> {
    let d = sub.d;
    let t = sub.t();
    let m = sub.m();
    let dim = pw(d, t);
    assert!(dim <= 256, "weyl-sum oracle restricted to small columns");
    let ml = modulus_for(d);
    let coeff = CycScalar::from_rat(ml, inv_d_pow(d, 2 * m));
    let elems = sub.n.elements();
    let mut out = DenseOp::<CycScalar>::zero(d, dim);
    for u in &elems {
        for v in &elems {
            for x_idx in 0..dim {
                let x = index_to_vec(d, t, x_idx as u64);
                let mut e = 0i64;
                for i in 0..t {
                    let sign = if i < sub.r { 1 } else { -1 };
                    e += sign * (v[i] as i64) * (x[i] as i64);
                }
                let y_idx = vec_to_index(d, &vec_add(d, &x, u)) as usize;
                let term = CycScalar::phase_omega(d, e).mul(&coeff);
                let cur = out.at(y_idx, x_idx).clone();
                out.set(y_idx, x_idx, cur.s_add(&term));
            }
        }
    }
    out
}

/// Index permutation x -> Ox on column configurations.
pub fn perm_of(o: &GFMatrix) -> Vec<usize> {
    let d = o.d;
    let t = o.rows;
    let dim = pw(d, t);
    (0..dim)
        .map(|idx| vec_to_index(d, &o.mul_vec(&index_to_vec(d, t, idx as u64))) as usize)
        .collect()
}

/// Single-column factor of R(O): the permutation matrix |Ox><x|.
pub fn r_op(o: &GFMatrix) -> RatMat {
    let perm = perm_of(o);
    let dim = perm.len();
    let mut r = RatMat::zero(dim, dim);
    for (x, &y) in perm.iter().enumerate() {
        r.set(y, x, Rat::one());
    }
    r
}

/// True when O preserves q_{r,s} entrywise and fixes the all-ones vector.
pub fn stochastic_isometry_check(o: &GFMatrix, r: usize, s: usize, d: u32) -> bool {
    use crate::forms::GenQuadForm;
    let t = r + s;
    if o.rows != t || o.cols != t || o.inverse().is_none() {
        return false;
    }
    let q = GenQuadForm::model(d, r, s);
    let cols: Vec<Vec<u32>> = (0..t).map(|j| o.col(j)).collect();
    for (j, c) in cols.iter().enumerate() {
        let ej: Vec<u32> = (0..t).map(|i| u32::from(i == j)).collect();
        if q.eval(c) != q.eval(&ej) {
            return false;
        }
    }
    for i in 0..t {
        for j in 0..t {
            if q.polar().eval(&cols[i], &cols[j]) != q.polar().at(i, j) {
                return false;
            }
        }
    }
    o.mul_vec(&all_ones(t)) == all_ones(t)
}

/// R(O) applied to a state: relabels every basis matrix F to OF.
pub fn r_apply<S: Scalar>(o: &GFMatrix, psi: &StateVector<S>) -> StateVector<S> {
    assert_eq!(o.rows, psi.t, "permutation acts on column vectors of length t");
    assert!(o.inverse().is_some(), "column map must be invertible");
    let mut out = StateVector::zeros(psi.n, psi.t, psi.d);
    for (idx, val) in psi.entries() {
        let f = psi.label_of(idx);
        out.set(label_index(&o.mul(&f)), val);
    }
    out
}

/// Exact state equality via a cancelling difference.
pub fn states_equal<S: Scalar>(a: &StateVector<S>, b: &StateVector<S>) -> bool {
    let mut diff = a.clone();
    diff.add_scaled(b, &S::s_one(a.d).s_neg());
    diff.is_zero()
}

/// The subspace ON with its induced structure.
pub fn conjugate_code(o: &GFMatrix, sub: &IsoSubspace) -> IsoSubspace {
    let gens: Vec<Vec<u32>> = sub.n.basis().iter().map(|b| o.mul_vec(b)).collect();
    IsoSubspace::new(sub.r, sub.s, sub.d, Subspace::span(sub.d, sub.t(), &gens))
}

// ---------------------------------------------------------------------------
// Coset states.

/// A coset basis state of the code C_N, stored by its T_N coordinates: one
/// (t - 2m)-vector per column. The full state has d^(n m) equal amplitudes.
#[derive(Clone, Debug)]
pub struct CosetState {
    pub sub: IsoSubspace,
    pub fbar: GFMatrix,
    pub n: usize,
}

impl CosetState {
    pub fn new(sub: IsoSubspace, fbar: GFMatrix) -> Self {
        assert_eq!(fbar.rows, sub.quotient.dim_t(), "coordinates live in T_N");
        assert_eq!(fbar.d, sub.d);
        let n = fbar.cols;
        CosetState { sub, fbar, n }
    }

    /// From a full t x n matrix whose columns lie in N-perp.
    pub fn from_full(sub: IsoSubspace, f: &GFMatrix) -> Self {
        assert_eq!(f.rows, sub.t());
        let cols: Vec<Vec<u32>> = (0..f.cols)
            .map(|j| {
                sub.quotient
                    .project(&f.col(j))
                    .expect("column outside N-perp")
            })
            .collect();
        let fbar = GFMatrix::from_fn(sub.d, sub.quotient.dim_t(), f.cols, |i, j| cols[j][i]);
        CosetState::new(sub, fbar)
    }

    /// Canonical lift: t x n matrix of quotient-section representatives.
    pub fn lift(&self) -> GFMatrix {
        let t = self.sub.t();
        let cols: Vec<Vec<u32>> = (0..self.n)
            .map(|j| self.sub.quotient.lift(&self.fbar.col(j)))
            .collect();
        GFMatrix::from_fn(self.sub.d, t, self.n, |i, j| cols[j][i])
    }

    /// Materialize the unit-norm state: amplitude d^(-n m / 2) on every
    /// label F_lift + F' with columns of F' ranging over N.
    pub fn state<S: Scalar>(&self) -> StateVector<S> {
        let d = self.sub.d;
        let t = self.sub.t();
        let m = self.sub.m();
        let support = pw(d, m * self.n);
        assert!(support <= 1 << 16, "coset support too large");
        let amp = S::s_one(d).s_div_sqrt_d(d, (self.n * m) as u32);
        let lift = self.lift();
        let elems = self.sub.n.elements();
        let mut psi = StateVector::zeros(self.n, t, d);
        let mut odo = vec![0usize; self.n];
        loop {
            let g = GFMatrix::from_fn(d, t, self.n, |i, j| {
                (lift.at(i, j) + elems[odo[j]][i]) % d
            });
            psi.set(label_index(&g), amp.clone());
            let mut k = 0;
            while k < self.n {
                odo[k] += 1;
                if odo[k] < elems.len() {
                    break;
                }
                odo[k] = 0;
                k += 1;
            }
            if k == self.n {
                break;
            }
        }
        psi
    }
}

/// Exact overlap of two coset states by direct sparse inner product.
pub fn overlap(a: &CosetState, b: &CosetState) -> CycScalar {
    assert_eq!(a.sub.d, b.sub.d);
    assert_eq!(a.n, b.n);
    a.state::<CycScalar>().inner(&b.state::<CycScalar>())
}

/// Closed-form overlap for the five one-dimensional codes of the qubit
/// t = 5 family, N_i = <1_5 + e_i>: within a code the cosets are
/// orthonormal, and across codes i != j the overlap is 2^(-n) exactly when
/// the transported coset (1 + ebar_i ebar_j^T) F_a lands on F_b.
pub fn overlap_t5_closed(a: &CosetState, b: &CosetState) -> CycScalar {
    let ml = modulus_for(2);
    assert_eq!(a.sub.d, 2);
    assert_eq!(a.sub.t(), 5);
    assert_eq!(a.sub.m(), 1);
    assert_eq!(b.sub.m(), 1);
    assert_eq!(a.n, b.n);
    let hole = |sub: &IsoSubspace| -> usize {
        let v = &sub.n.basis()[0];
        (0..5).find(|&i| v[i] == 0).expect("basis vector is 1_5 + e_i")
    };
    if a.sub.n.key() == b.sub.n.key() {
        return if a.fbar == b.fbar {
            CycScalar::one(ml)
        } else {
            CycScalar::zero(ml)
        };
    }
    let (i, j) = (hole(&a.sub), hole(&b.sub));
    let ebar = |k: usize| -> Vec<u32> {
        (0..5).map(|i2| u32::from(i2 != k)).collect()
    };
    let (ei, ej) = (ebar(i), ebar(j));
    let e_ij = GFMatrix::from_fn(2, 5, 5, |p, q| (u32::from(p == q) + ei[p] * ej[q]) % 2);
    let moved = e_ij.mul(&a.lift());
    let moved_coords: Vec<Vec<u32>> = (0..a.n)
        .map(|c| {
            b.sub
                .quotient
                .project(&moved.col(c))
                .expect("transported column stays in the target perp")
        })
        .collect();
    let matches = (0..a.n).all(|c| moved_coords[c] == b.fbar.col(c));
    if matches {
        CycScalar::from_rat(ml, inv_d_pow(2, a.n))
    } else {
        CycScalar::zero(ml)
    }
}

// ---------------------------------------------------------------------------
// Semigroup structure.

/// All stochastic isotropic subspaces for the signature, every dimension,
/// ordered by (dim, canonical basis key). The plain stratum tops out at
/// m(T), but the stratum containing 1_t can reach one dimension higher, so
/// this walks levels until one is empty rather than trusting a single cap.
pub fn stochastic_isotropic_all(r: usize, s: usize, d: u32) -> Vec<IsoSubspace> {
    let mut out = Vec::new();
    for m in 0.. {
        let level = enumerate(r, s, d, m, Stratum::Both);
        if level.is_empty() {
            break;
        }
        out.extend(level);
    }
    out
}

#[derive(Clone, Debug)]
pub struct SemigroupProduct {
    pub o: GFMatrix,
    pub i_sub: IsoSubspace,
    /// p(N1) p(N2) = d^(-scale_exp) r(O) p(I).
    pub scale_exp: usize,
}

/// Factor the product of two code projectors through the semigroup: find
/// the unique value class d^(-k) of the product kernel and pattern-match
/// permuted projector supports. First match wins under the documented
/// ordering (subspaces by (dim, key), group elements by entry bytes).
pub fn semigroup_product_with(
    group: &FiniteMatrixGroup,
    candidates: &[IsoSubspace],
    n1: &IsoSubspace,
    n2: &IsoSubspace,
) -> SemigroupProduct {
    assert_eq!((n1.r, n1.s, n1.d), (n2.r, n2.s, n2.d));
    let d = n1.d;
    let t = n1.t();
    let dim = pw(d, t);
    let prod = projector_p(n1).mul(&projector_p(n2));
    let mut support = vec![false; dim * dim];
    let mut nnz = 0usize;
    let mut value: Option<Rat> = None;
    for y in 0..dim {
        for x in 0..dim {
            let v = prod.at(y, x);
            if v.is_zero() {
                continue;
            }
            support[y * dim + x] = true;
            nnz += 1;
            match &value {
                None => value = Some(v.clone()),
                Some(w) => assert_eq!(v, w, "product kernel must be single-valued"),
            }
        }
    }
    let value = value.expect("projector product cannot vanish");
    let mut k = 0usize;
    let mut denom = value.denom().clone();
    let db = BigInt::from(d);
    while denom > BigInt::one() {
        denom /= &db;
        k += 1;
    }
    assert_eq!(value, inv_d_pow(d, k), "entries must be inverse powers of d");
    for i_sub in candidates {
        let mi = i_sub.m();
        if mi > k {
            continue;
        }
        let pi = projector_p(i_sub);
        let mut sup_i: Vec<(usize, usize)> = Vec::new();
        for y in 0..dim {
            for x in 0..dim {
                if !pi.at(y, x).is_zero() {
                    sup_i.push((y, x));
                }
            }
        }
        if sup_i.len() != nnz {
            continue;
        }
        for o in &group.elements {
            let perm = perm_of(o);
            if sup_i.iter().all(|&(y, x)| support[perm[y] * dim + x]) {
                let out = SemigroupProduct {
                    o: o.clone(),
                    i_sub: i_sub.clone(),
                    scale_exp: k - mi,
                };
                assert!(out.i_sub.m() >= n1.m().max(n2.m()), "dimension must not drop");
                if n1.contains_ones || n2.contains_ones {
                    assert!(
                        out.i_sub.contains_ones,
                        "all-ones membership must be inherited"
                    );
                }
                return out;
            }
        }
    }
    panic!(
        "no (O, I) factorization found for N1 = [{}] (dim {}), N2 = [{}] (dim {}), \
         value exponent {k}; this contradicts the semigroup law for projector products",
        n1.n.key(),
        n1.m(),
        n2.n.key(),
        n2.m()
    );
}

pub fn semigroup_product(n1: &IsoSubspace, n2: &IsoSubspace) -> SemigroupProduct {
    let group = enumerate_o1(n1.r, n1.s, n1.d);
    let candidates = stochastic_isotropic_all(n1.r, n1.s, n1.d);
    semigroup_product_with(&group, &candidates, n1, n2)
}

// ---------------------------------------------------------------------------
// The semigroup as a spanning set: exact Gram calculus.

/// One element R(O) P(N), stored as indices into a SemigroupBasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommutantElement {
    pub o_idx: usize,
    pub n_idx: usize,
}

pub struct SemigroupBasis {
    pub r: usize,
    pub s: usize,
    pub d: u32,
    pub group: FiniteMatrixGroup,
    pub subs: Vec<IsoSubspace>,
    pub elements: Vec<CommutantElement>,
}

impl SemigroupBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn o(&self, e: CommutantElement) -> &GFMatrix {
        &self.group.elements[e.o_idx]
    }

    pub fn n_sub(&self, e: CommutantElement) -> &IsoSubspace {
        &self.subs[e.n_idx]
    }

    /// Single-column matrix of the element.
    pub fn column_op(&self, e: CommutantElement) -> RatMat {
        r_op(self.o(e)).mul(&projector_p(self.n_sub(e)))
    }
}

pub fn semigroup_basis(r: usize, s: usize, d: u32) -> SemigroupBasis {
    let group = enumerate_o1(r, s, d);
    let subs = stochastic_isotropic_all(r, s, d);
    let mut elements = Vec::with_capacity(group.len() * subs.len());
    for o_idx in 0..group.len() {
        for n_idx in 0..subs.len() {
            elements.push(CommutantElement { o_idx, n_idx });
        }
    }
    SemigroupBasis { r, s, d, group, subs, elements }
}

/// tr( p(N1) r(Q) p(N2) ) on one column, by counting lattice points:
/// d^(-m1-m2) #\{(x, u) : x in N2-perp, u in N2, Q(x+u) in N1-perp,
/// x - Q(x+u) in N1\}.
pub fn single_column_trace(sub1: &IsoSubspace, q: &GFMatrix, sub2: &IsoSubspace) -> Rat {
    let d = sub1.d;
    let t = sub1.t();
    let elems2 = sub2.n.elements();
    let mut count = 0u64;
    for x_idx in 0..pw(d, t) {
        let x = index_to_vec(d, t, x_idx as u64);
        if !sub2.perp.contains(&x) {
            continue;
        }
        for u in &elems2 {
            let w = q.mul_vec(&vec_add(d, &x, u));
            if !sub1.perp.contains(&w) {
                continue;
            }
            let diff: Vec<u32> = (0..t).map(|i| (x[i] + d - w[i]) % d).collect();
            if sub1.n.contains(&diff) {
                count += 1;
            }
        }
    }
    Rat::new(BigInt::from(count), BigInt::from(d).pow((sub1.m() + sub2.m()) as u32))
}

/// Exact Gram matrix of S_{r,s} on H_{n,t}: entry (A, B) = tr(A^dagger B)
/// = (single-column trace)^n. Rows are computed independently in parallel.
pub fn gram_matrix_s(basis: &SemigroupBasis, n: usize) -> RatMat {
    let sz = basis.len();
    let rows: Vec<Vec<Rat>> = par::map_items((0..sz).collect::<Vec<_>>(), |i| {
        let a = basis.elements[i];
        (0..sz)
            .map(|j| {
                let b = basis.elements[j];
                let q_idx = basis.group.mul(basis.group.inv(a.o_idx), b.o_idx);
                let tr = single_column_trace(
                    basis.n_sub(a),
                    &basis.group.elements[q_idx],
                    basis.n_sub(b),
                );
                rat_pow(&tr, n)
            })
            .collect()
    });
    let mut g = RatMat::zero(sz, sz);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            g.set(i, j, v);
        }
    }
    g
}

/// Rank of the Gram matrix over the exact rationals: the number of
/// linearly independent semigroup elements as operators on H_{n,t}.
pub fn independence_rank(r: usize, s: usize, d: u32, n: usize) -> usize {
    let basis = semigroup_basis(r, s, d);
    gram_matrix_s(&basis, n).rank()
}

// ---------------------------------------------------------------------------
// Commutation with the tensor-power Clifford action, at column level.

fn rat_to_cyc(ml: u32, v: &Rat) -> CycScalar {
    CycScalar::from_rat(ml, v.clone())
}

fn ratmat_to_op(d: u32, m: &RatMat) -> DenseOp<CycScalar> {
    let ml = modulus_for(d);
    let mut out = DenseOp::<CycScalar>::zero(d, m.rows);
    for i in 0..m.rows {
        for j in 0..m.cols {
            if !m.at(i, j).is_zero() {
                out.set(i, j, rat_to_cyc(ml, m.at(i, j)));
            }
        }
    }
    out
}

/// The column factor of each single-qudit generator's (r, s) tensor power:
/// the t-fold power acts on one column of the grid, so these are the n = 1
/// word matrices.
pub fn column_generators(r: usize, s: usize, d: u32) -> Vec<(String, DenseOp<CycScalar>)> {
    let mut out = Vec::new();
    out.push((
        "H".to_string(),
        word_matrix(&CliffordWord::new(1, d).h(0), r, s),
    ));
    out.push((
        "P".to_string(),
        word_matrix(&CliffordWord::new(1, d).p(0), r, s),
    ));
    for vz in 0..d {
        for vx in 0..d {
            out.push((
                format!("W:{vz}{vx}"),
                word_matrix(&CliffordWord::new(1, d).weyl(vec![vz, vx]), r, s),
            ));
        }
    }
    out
}

/// Exact commutator check of a rational column operator against a
/// cyclotomic gate power.
pub fn commutes_with(a: &RatMat, g: &DenseOp<CycScalar>, d: u32) -> bool {
    let ac = ratmat_to_op(d, a);
    ac.mul(g) == g.mul(&ac)
}

/// Controlled addition between two columns sends the pair (z, w) of column
/// configurations to (z, z + w) in every copy. A column operator a commutes
/// with it exactly when a (x) a is invariant under that pair permutation;
/// checking all nonzero entries of a (x) a suffices because the map is a
/// bijection of index pairs.
pub fn cadd_pair_commutes(a: &RatMat, d: u32, t: usize) -> bool {
    let dim = pw(d, t);
    let mut nz: Vec<(usize, usize)> = Vec::new();
    for y in 0..dim {
        for x in 0..dim {
            if !a.at(y, x).is_zero() {
                nz.push((y, x));
            }
        }
    }
    let shift = |ctrl: usize, tgt: usize| -> usize {
        let c = index_to_vec(d, t, ctrl as u64);
        let w = index_to_vec(d, t, tgt as u64);
        vec_to_index(d, &vec_add(d, &c, &w)) as usize
    };
    for &(y1, x1) in &nz {
        for &(y2, x2) in &nz {
            let lhs = a.at(y1, x1).clone() * a.at(y2, x2).clone();
            let rhs = a.at(y1, x1).clone() * a.at(shift(y1, y2), shift(x1, x2)).clone();
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Runs the exact generator-commutation checks for every projector p(N)
/// and every permutation r(O) at the given signature. Panics with context
/// on the first failure; returns the number of (element, generator) pairs
/// verified.
pub fn commutation_suite(r: usize, s: usize, d: u32) -> usize {
    let t = r + s;
    let gens = column_generators(r, s, d);
    let group = enumerate_o1(r, s, d);
    let subs = stochastic_isotropic_all(r, s, d);
    let mut checked = 0usize;
    for sub in &subs {
        let p = projector_p(sub);
        for (name, g) in &gens {
            assert!(
                commutes_with(&p, g, d),
                "p(N) failed against {name} at ({r},{s}) d={d}, N key {}",
                sub.n.key()
            );
            checked += 1;
        }
        assert!(
            cadd_pair_commutes(&p, d, t),
            "p(N) failed the column-pair CADD check, N key {}",
            sub.n.key()
        );
        checked += 1;
    }
    let dim = pw(d, t);
    for o in &group.elements {
        let perm = perm_of(o);
        for (name, g) in &gens {
            for y in 0..dim {
                for x in 0..dim {
                    assert!(
                        g.at(perm[y], perm[x]) == g.at(y, x),
                        "r(O) failed against {name} at ({r},{s}) d={d}"
                    );
                }
            }
            checked += 1;
        }
        // Pair check for the permutation: O acts per column, controlled
        // addition mixes columns; the two index maps commute.
        for z in 0..dim {
            for w in 0..dim {
                let zv = index_to_vec(d, t, z as u64);
                let wv = index_to_vec(d, t, w as u64);
                let a = vec_to_index(d, &o.mul_vec(&vec_add(d, &zv, &wv))) as usize;
                let b = vec_to_index(
                    d,
                    &vec_add(d, &o.mul_vec(&zv), &o.mul_vec(&wv)),
                ) as usize;
                assert_eq!(a, b, "permutation does not respect column addition");
            }
        }
        checked += 1;
    }
    checked
}

// ---------------------------------------------------------------------------
// Exact commutant dimension in the Pauli basis.

/// Conjugation table of one gate on single-copy displacement labels:
/// g W(v) g^dagger = tau^exp[v] W(img[v]).
pub struct PauliConj {
    pub img: Vec<usize>,
    pub exp: Vec<i64>,
}

fn op_conj(g: &DenseOp<CycScalar>, d: u32) -> DenseOp<CycScalar> {
    let mut out = DenseOp::<CycScalar>::zero(d, g.dim);
    for i in 0..g.dim {
        for j in 0..g.dim {
            out.set(i, j, g.at(i, j).s_conj());
        }
    }
    out
}

/// Build the conjugation table by exhaustive monomial matching: the image
/// of a displacement operator under Clifford conjugation is another
/// displacement operator times a power of tau.
pub fn conj_table(g: &DenseOp<CycScalar>, n: usize, d: u32) -> PauliConj {
    let labels = pw(d, 2 * n);
    let ml = modulus_for(d);
    let gd = g.dagger();
    let weyls: Vec<DenseOp<CycScalar>> = (0..labels)
        .map(|i| weyl_op(n, d, &index_to_vec(d, 2 * n, i as u64)))
        .collect();
    let mut img = vec![0usize; labels];
    let mut exp = vec![0i64; labels];
    'outer: for v in 0..labels {
        let m = g.mul(&weyls[v]).mul(&gd);
        for (v2, w2) in weyls.iter().enumerate() {
            for e in 0..tau_order(d) as i64 {
                let mut cand = w2.clone();
                cand.scale(&CycScalar::one(ml).s_mul_tau(d, e));
                if cand == m {
                    img[v] = v2;
                    exp[v] = e;
                    continue 'outer;
                }
            }
        }
        panic!("conjugate of a displacement operator is not one: label {v}");
    }
    PauliConj { img, exp }
}

/// Verify that single-copy displacement operators are trace-orthogonal,
/// which makes the global operators W(M) a basis of End(H_{n,t}).
pub fn pauli_basis_is_orthogonal(n: usize, d: u32) -> bool {
    let labels = pw(d, 2 * n);
    let ml = modulus_for(d);
    for v in 0..labels {
        for u in 0..labels {
            let wv: DenseOp<CycScalar> = weyl_op(n, d, &index_to_vec(d, 2 * n, v as u64));
            let wu: DenseOp<CycScalar> = weyl_op(n, d, &index_to_vec(d, 2 * n, u as u64));
            let prod = wv.dagger().mul(&wu);
            let mut tr = CycScalar::zero(ml);
            for i in 0..prod.dim {
                tr = tr.add(prod.at(i, i));
            }
            let want = if v == u {
                CycScalar::from_int(ml, pw(d, n) as i64)
            } else {
                CycScalar::zero(ml)
            };
            if tr != want {
                return false;
            }
        }
    }
    true
}

/// Exact dimension of the commutant of the (r, s) tensor-power Clifford
/// action on H_{n,t}, computed as the null space of the stacked
/// generator-commutation system expressed in the displacement basis. Each
/// constraint row couples at most two coefficients, so the fraction-free
/// elimination stays sparse.
pub fn commutant_dimension(r: usize, s: usize, d: u32, n: usize) -> usize {
    let t = r + s;
    let copy_labels = pw(d, 2 * n);
    let total = copy_labels.pow(t as u32);
    assert!(total <= 1 << 14, "label space too large: {total}");
    let mut gates: Vec<Gate> = Vec::new();
    for i in 0..n {
        gates.push(Gate::H(i));
        gates.push(Gate::P(i));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                gates.push(Gate::Cadd(i, j));
            }
        }
    }
    let tables: Vec<(PauliConj, PauliConj)> = gates
        .iter()
        .map(|gate| {
            let g = gate_matrix::<CycScalar>(gate, n, d);
            (conj_table(&g, n, d), conj_table(&op_conj(&g, d), n, d))
        })
        .collect();
    let ml = modulus_for(d);
    // Constraint per (generator, label M): tau^e c_M - c_{gM} = 0 where
    // Delta(g) W(M) Delta(g)^dagger = tau^e W(gM).
    let mut rows: Vec<BTreeMap<usize, CycScalar>> = Vec::with_capacity(gates.len() * total);
    for (unconj, conj) in &tables {
        for m_label in 0..total {
            let mut rem = m_label;
            let mut dst = 0usize;
            let mut mult = 1usize;
            let mut e = 0i64;
            for c in 0..t {
                let v = rem % copy_labels;
                rem /= copy_labels;
                let tab = if c < r { unconj } else { conj };
                dst += tab.img[v] * mult;
                e += tab.exp[v];
                mult *= copy_labels;
            }
            let tau_e = CycScalar::one(ml).s_mul_tau(d, e);
            let mut row: BTreeMap<usize, CycScalar> = BTreeMap::new();
            if dst == m_label {
                let coeff = tau_e.sub(&CycScalar::one(ml));
                if !coeff.is_zero() {
                    row.insert(m_label, coeff);
                }
            } else {
                row.insert(m_label, tau_e);
                row.insert(dst, CycScalar::from_int(ml, -1));
            }
            if !row.is_empty() {
                rows.push(row);
            }
        }
    }
    // Fraction-free sparse elimination: pivots[col] is a row whose leading
    // column is col.
    let mut pivots: BTreeMap<usize, BTreeMap<usize, CycScalar>> = BTreeMap::new();
    for mut row in rows {
        loop {
            let Some((&col, coeff)) = row.iter().next() else {
                break;
            };
            let coeff = coeff.clone();
            let Some(piv) = pivots.get(&col) else {
                break;
            };
            let lead = piv[&col].clone();
            let mut next: BTreeMap<usize, CycScalar> = BTreeMap::new();
            for (&c2, v2) in row.iter() {
                next.insert(c2, v2.mul(&lead));
            }
            for (&c2, v2) in piv.iter() {
                let delta = v2.mul(&coeff).neg();
                let merged = match next.remove(&c2) {
                    Some(prev) => prev.add(&delta),
                    None => delta,
                };
                if merged.is_zero() {
                    continue;
                }
                next.insert(c2, merged);
            }
            next.retain(|_, v| !v.is_zero());
            row = next;
        }
        if let Some((&col, _)) = row.iter().next() {
            pivots.insert(col, row);
        }
    }
    total - pivots.len()
}
