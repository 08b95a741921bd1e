//! Symmetric bilinear and generalized quadratic forms over Z_d, their
//! classification invariants, and explicit equivalence witnesses.
//!
//! A generalized quadratic form takes values in Z_D with D = tau_order(d)
//! (D = d for odd d, D = 4 for d = 2) and satisfies
//! q(u + v) = q(u) + q(v) + 2 beta(u, v) mod D for a symmetric Z_d-valued
//! polar form beta with beta(u, u) = q(u) mod d. For odd d this is an
//! ordinary quadratic form and beta determines q; for d = 2 the diagonal
//! carries extra Z_4 data. Storage: diag[i] = q(e_i) mod D, plus the polar
//! matrix mod d. Evaluation uses the upper-triangular normal form
//! q(u) = sum_i u_i^2 diag_i + 2 sum_{i<j} u_i u_j beta_ij mod D.

use crate::gflinear::{index_to_vec, unit_vec, GFMatrix, Subspace};
use crate::scalars::legendre;
use num_complex::Complex64;

/// Symmetric bilinear form on Z_d^t.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymBilForm {
    pub d: u32,
    pub t: usize,
    mat: GFMatrix,
}

impl SymBilForm {
    pub fn new(mat: GFMatrix) -> Self {
        assert_eq!(mat.rows, mat.cols);
        for i in 0..mat.rows {
            for j in 0..i {
                assert_eq!(mat.at(i, j), mat.at(j, i), "bilinear form must be symmetric");
            }
        }
        SymBilForm { d: mat.d, t: mat.rows, mat }
    }

    pub fn zero(d: u32, t: usize) -> Self {
        SymBilForm { d, t, mat: GFMatrix::zero(d, t, t) }
    }

    /// Standard dot product.
    pub fn dot(d: u32, t: usize) -> Self {
        SymBilForm { d, t, mat: GFMatrix::identity(d, t) }
    }

    /// diag(1^r, -1^s) mod d.
    pub fn model(d: u32, r: usize, s: usize) -> Self {
        let t = r + s;
        let mat = GFMatrix::from_fn(d, t, t, |i, j| {
            if i != j {
                0
            } else if i < r {
                1
            } else {
                d - 1
            }
        });
        SymBilForm { d, t, mat }
    }

    pub fn at(&self, i: usize, j: usize) -> u32 {
        self.mat.at(i, j)
    }

    pub fn matrix(&self) -> &GFMatrix {
        &self.mat
    }

    pub fn eval(&self, u: &[u32], v: &[u32]) -> u32 {
        let mut acc = 0u64;
        for i in 0..self.t {
            if u[i] % self.d == 0 {
                continue;
            }
            for j in 0..self.t {
                acc += (u[i] % self.d) as u64 * self.mat.at(i, j) as u64 * (v[j] % self.d) as u64;
            }
        }
        (acc % self.d as u64) as u32
    }

    pub fn rank(&self) -> usize {
        self.mat.rank()
    }

    /// Radical {v : beta(v, .) = 0}.
    pub fn radical(&self) -> Subspace {
        Subspace::span(self.d, self.t, &self.mat.kernel())
    }

    /// Alternating means beta(v, v) = 0 for every v; over Z_2 that is a
    /// zero diagonal, over odd d it forces beta = 0.
    pub fn is_alternating(&self) -> bool {
        if self.d == 2 {
            (0..self.t).all(|i| self.mat.at(i, i) == 0)
        } else {
            (0..self.t).all(|i| (0..self.t).all(|j| self.mat.at(i, j) == 0))
        }
    }

    /// Gram matrix in the coordinates of the given vectors.
    pub fn gram_on(&self, basis: &[Vec<u32>]) -> GFMatrix {
        GFMatrix::from_fn(self.d, basis.len(), basis.len(), |i, j| {
            self.eval(&basis[i], &basis[j])
        })
    }

    /// Legendre class of det on a complement of the radical (odd d only):
    /// +1, -1, or +1 for rank zero.
    pub fn discriminant(&self) -> i32 {
        assert!(self.d % 2 == 1, "discriminant classification is for odd d");
        let rad = self.radical();
        let comp = complement_basis(&rad);
        if comp.is_empty() {
            return 1;
        }
        let det = self.gram_on(&comp).det();
        let l = legendre(det as i64, self.d);
        assert_ne!(l, 0, "gram on a radical complement must be nondegenerate");
        l
    }
}

/// Extend the given subspace by unit vectors to all of Z_d^t and return the
/// added vectors: a deterministic complement basis.
pub fn complement_basis(s: &Subspace) -> Vec<Vec<u32>> {
    let mut cur = s.clone();
    let mut out = Vec::new();
    for i in 0..s.t {
        if cur.dim() == s.t {
            break;
        }
        let e = unit_vec(s.t, i);
        if !cur.contains(&e) {
            cur = cur.add(&Subspace::span(s.d, s.t, std::slice::from_ref(&e)));
            out.push(e);
        }
    }
    out
}

/// Generalized quadratic form: q(e_i) mod D in diag, polar form mod d.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GenQuadForm {
    pub d: u32,
    pub big_d: u32,
    pub diag: Vec<u32>,
    polar: SymBilForm,
}

impl GenQuadForm {
    pub fn new(d: u32, diag: Vec<u32>, polar: SymBilForm) -> Self {
        let big_d = crate::scalars::tau_order(d);
        assert_eq!(polar.d, d);
        assert_eq!(polar.t, diag.len());
        for (i, &a) in diag.iter().enumerate() {
            assert!(a < big_d, "diagonal value out of Z_D range");
            assert_eq!(a % d, polar.at(i, i), "polar diagonal must match q(e_i) mod d");
        }
        GenQuadForm { d, big_d, diag, polar }
    }

    /// q_{r,s}: +1 on the first r unit vectors, -1 mod D on the last s.
    pub fn model(d: u32, r: usize, s: usize) -> Self {
        let big_d = crate::scalars::tau_order(d);
        let mut diag = vec![1u32; r];
        diag.extend(std::iter::repeat(big_d - 1).take(s));
        Self::new(d, diag, SymBilForm::model(d, r, s))
    }

    /// Canonical refinement of a bilinear form: lift each beta_ii to Z_D as
    /// itself (values 0..d-1).
    pub fn refine_bilinear(beta: &SymBilForm) -> Self {
        let diag = (0..beta.t).map(|i| beta.at(i, i)).collect();
        Self::new(beta.d, diag, beta.clone())
    }

    pub fn t(&self) -> usize {
        self.diag.len()
    }

    pub fn polar(&self) -> &SymBilForm {
        &self.polar
    }

    pub fn eval(&self, u: &[u32]) -> u32 {
        let d = self.d as u64;
        let big_d = self.big_d as u64;
        let mut acc = 0u64;
        for i in 0..self.t() {
            let ui = (u[i] % self.d) as u64;
            if ui == 0 {
                continue;
            }
            acc += ui * ui % big_d * self.diag[i] as u64;
            for j in (i + 1)..self.t() {
                let uj = (u[j] % self.d) as u64;
                acc += 2 * (ui * uj % d) * self.polar.at(i, j) as u64;
            }
        }
        (acc % big_d) as u32
    }

    /// Pullback q(g .): the form seen through the column substitution u -> g u.
    pub fn transform(&self, g: &GFMatrix) -> GenQuadForm {
        assert_eq!(g.rows, self.t());
        let cols: Vec<Vec<u32>> = (0..g.cols).map(|j| g.col(j)).collect();
        self.restrict(&cols)
    }

    /// The form in the coordinates of the given vectors.
    pub fn restrict(&self, basis: &[Vec<u32>]) -> GenQuadForm {
        let diag = basis.iter().map(|b| self.eval(b)).collect();
        let polar = SymBilForm::new(self.polar.gram_on(basis));
        GenQuadForm::new(self.d, diag, polar)
    }

    /// q vanishes identically on the subspace. Equivalent to a zero
    /// restricted diagonal plus zero restricted polar form, which is what
    /// gets checked; the equivalence is exercised against a full sweep in
    /// the tests.
    pub fn is_totally_isotropic(&self, n: &Subspace) -> bool {
        let r = self.restrict(n.basis());
        r.diag.iter().all(|&a| a == 0)
            && (0..r.t()).all(|i| (0..r.t()).all(|j| r.polar.at(i, j) == 0))
    }

    /// {v in ker(polar) : q(v) = 0}. On ker(polar), q is a homomorphism
    /// into {0, D/2 ...}: for odd d it vanishes outright, for d = 2 the map
    /// q/2 is linear and the radical is its kernel.
    pub fn radical_generalized(&self) -> Subspace {
        let rad = self.polar.radical();
        if self.d % 2 == 1 {
            for b in rad.basis() {
                debug_assert_eq!(self.eval(b), 0);
            }
            return rad;
        }
        let vals: Vec<u32> = rad.basis().iter().map(|b| self.eval(b)).collect();
        for &v in &vals {
            debug_assert!(v % 2 == 0, "q takes even values on ker(polar)");
        }
        let m = GFMatrix::from_fn(2, 1, rad.dim(), |_, j| vals[j] / 2);
        let gens: Vec<Vec<u32>> = m
            .kernel()
            .into_iter()
            .map(|coef| {
                let mut v = vec![0u32; self.t()];
                for (j, b) in rad.basis().iter().enumerate() {
                    if coef[j] != 0 {
                        v = crate::gflinear::vec_add(2, &v, b);
                    }
                }
                v
            })
            .collect();
        Subspace::span(self.d, self.t(), &gens)
    }

    /// Histogram of q over all d^t points, indexed by value in Z_D.
    pub fn gauss_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.big_d as usize];
        let total = (self.d as u64).pow(self.t() as u32);
        assert!(total <= 1 << 24, "gauss count sweep guard");
        for idx in 0..total {
            let u = index_to_vec(self.d, self.t(), idx);
            counts[self.eval(&u) as usize] += 1;
        }
        counts
    }

    /// Gauss sum sum_u tau^(2 q(u)) as a complex number (for cross-checks).
    pub fn gauss_sum_c64(&self) -> Complex64 {
        let counts = self.gauss_counts();
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, &c) in counts.iter().enumerate() {
            let angle = 2.0 * std::f64::consts::PI * v as f64 / self.big_d as f64;
            acc += Complex64::from_polar(c as f64, angle);
        }
        acc
    }

    /// d = 2 only: the octant of the Gauss sum sum_u i^(q(u)), i.e. the g
    /// with sum = |sum| zeta_8^g, or None when the sum vanishes.
    pub fn garf(&self) -> Option<u32> {
        assert_eq!(self.d, 2, "the octant invariant is a d = 2 notion");
        let counts = self.gauss_counts();
        let re = counts[0] as i64 - counts[2] as i64;
        let im = counts[1] as i64 - counts[3] as i64;
        octant(re, im)
    }

    pub fn invariants(&self) -> FormInvariants {
        if self.d == 2 {
            FormInvariants::Binary {
                t: self.t(),
                polar_rank: self.polar.rank(),
                alternating: self.polar.is_alternating(),
                garf: self.garf(),
            }
        } else {
            FormInvariants::OddPrime {
                t: self.t(),
                rank: self.polar.rank(),
                dis: self.polar.discriminant(),
            }
        }
    }

    pub fn equivalent_to(&self, other: &GenQuadForm) -> bool {
        self.d == other.d && self.t() == other.t() && self.invariants() == other.invariants()
    }

    /// Invertible g with other(g u) = self(u) for all u, found by
    /// backtracking over images of unit vectors; None when the forms are
    /// inequivalent. Deterministic: candidates scanned in index order.
    pub fn equivalence_witness(&self, other: &GenQuadForm) -> Option<GFMatrix> {
        if !self.equivalent_to(other) {
            return None;
        }
        let t = self.t();
        let d = self.d;
        let total = (d as u64).pow(t as u32);
        assert!(total <= 1 << 16, "witness search guard: d^t too large");
        let all: Vec<Vec<u32>> = (1..total).map(|i| index_to_vec(d, t, i)).collect();
        let mut cols: Vec<Vec<u32>> = Vec::with_capacity(t);
        if self.extend_witness(other, &all, &mut cols) {
            let g = GFMatrix::from_fn(d, t, t, |i, j| cols[j][i]);
            debug_assert!(&other.transform(&g) == self);
            Some(g)
        } else {
            None
        }
    }

    fn extend_witness(
        &self,
        other: &GenQuadForm,
        all: &[Vec<u32>],
        cols: &mut Vec<Vec<u32>>,
    ) -> bool {
        let k = cols.len();
        if k == self.t() {
            return true;
        }
        let span_so_far = Subspace::span(self.d, self.t(), cols);
        for w in all {
            if other.eval(w) != self.diag[k] {
                continue;
            }
            if !(0..k).all(|j| other.polar.eval(&cols[j], w) == self.polar.at(j, k)) {
                continue;
            }
            if span_so_far.contains(w) {
                continue;
            }
            cols.push(w.clone());
            if self.extend_witness(other, all, cols) {
                return true;
            }
            cols.pop();
        }
        false
    }
}

/// Octant of the nonzero Gaussian integer re + i*im when it lies on a ray
/// zeta_8^g, else None for 0 (panics off-ray, which cannot happen for the
/// Gauss sums this classifies).
fn octant(re: i64, im: i64) -> Option<u32> {
    match (re.signum(), im.signum()) {
        (0, 0) => None,
        (1, 0) => Some(0),
        (0, 1) => Some(2),
        (-1, 0) => Some(4),
        (0, -1) => Some(6),
        (sr, si) => {
            assert_eq!(re.abs(), im.abs(), "gauss sum off the eighth-root rays");
            Some(match (sr, si) {
                (1, 1) => 1,
                (-1, 1) => 3,
                (-1, -1) => 5,
                (1, -1) => 7,
                _ => unreachable!(),
            })
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FormInvariants {
    OddPrime { t: usize, rank: usize, dis: i32 },
    Binary { t: usize, polar_rank: usize, alternating: bool, garf: Option<u32> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gflinear::vec_add;

    #[test]
    fn evaluation_satisfies_polarization() {
        for d in [2u32, 3, 5] {
            let q = GenQuadForm::model(d, 2, 1);
            let big_d = q.big_d;
            let total = (d as u64).pow(3);
            for a in 0..total {
                let u = index_to_vec(d, 3, a);
                for b in 0..total {
                    let v = index_to_vec(d, 3, b);
                    let lhs = q.eval(&vec_add(d, &u, &v));
                    let rhs = (q.eval(&u) + q.eval(&v) + 2 * q.polar().eval(&u, &v)) % big_d;
                    assert_eq!(lhs, rhs, "polarization at d={d}, u={u:?}, v={v:?}");
                }
            }
        }
    }

    #[test]
    fn model_form_octants_step_by_signature() {
        // The Gauss sum of q_{r,s} at d = 2 sits on the ray zeta_8^(r-s).
        for r in 0..=4usize {
            for s in 0..=(4 - r) {
                if r + s == 0 {
                    continue;
                }
                let q = GenQuadForm::model(2, r, s);
                let want = ((r as i64 - s as i64).rem_euclid(8)) as u32;
                assert_eq!(q.garf(), Some(want), "octant of q_{{{r},{s}}}");
            }
        }
    }

    #[test]
    fn isotropic_check_matches_full_sweep() {
        let d = 2;
        let q = GenQuadForm::model(d, 3, 1);
        // N = <e1+e2, e3+e4> has q(e1+e2) = 2: not isotropic.
        let n1 = Subspace::span(d, 4, &[vec![1, 1, 0, 0], vec![0, 0, 1, 1]]);
        assert!(!q.is_totally_isotropic(&n1));
        // q(1,1,1,1) = 3*1 + 3 + 2*(3 choose 2 pairs with beta=0 off-diag) = 1+1+1+3 = 6 = 2.
        // Search all 1-dim subspaces instead and compare against brute force.
        for idx in 1..16u64 {
            let v = index_to_vec(d, 4, idx);
            let n = Subspace::span(d, 4, std::slice::from_ref(&v));
            let brute = n.elements().iter().all(|u| q.eval(u) == 0);
            assert_eq!(q.is_totally_isotropic(&n), brute, "v = {v:?}");
        }
    }

    #[test]
    fn generalized_radical_agrees_with_definition() {
        // diag (2,0,0), polar zero: ker polar is everything, q = 2 on e1.
        let q = GenQuadForm::new(2, vec![2, 0, 0], SymBilForm::zero(2, 3));
        let rad = q.radical_generalized();
        assert_eq!(rad.dim(), 2);
        for v in rad.elements() {
            assert_eq!(q.eval(&v), 0);
        }
        // Brute count: vectors with q = 0 in ker(polar) = 4 of 8.
        let count = (0..8u64)
            .map(|i| index_to_vec(2, 3, i))
            .filter(|v| q.eval(v) == 0)
            .count();
        assert_eq!(count, 4);
        // Odd d: radical of the polar form is already q-null.
        let q3 = GenQuadForm::refine_bilinear(&SymBilForm::new(GFMatrix::from_rows(
            3,
            3,
            &[vec![1, 0, 0], vec![0, 0, 0], vec![0, 0, 2]],
        )));
        assert_eq!(q3.radical_generalized().dim(), 1);
    }

    #[test]
    fn odd_discriminant_matches_small_cases() {
        // diag(1, 1) over F_3: det 1, square.
        let b = SymBilForm::dot(3, 2);
        assert_eq!(b.discriminant(), 1);
        // diag(1, -1) over F_3: det -1 = 2, non-square mod 3.
        let m = SymBilForm::model(3, 1, 1);
        assert_eq!(m.discriminant(), -1);
        // Degenerate: diag(1, 0): rank 1, disc of the 1x1 part.
        let g = SymBilForm::new(GFMatrix::from_rows(3, 2, &[vec![1, 0], vec![0, 0]]));
        assert_eq!(g.rank(), 1);
        assert_eq!(g.discriminant(), 1);
    }

    /// Brute-force oracle at d = 2, t = 3: enumerate all 512 generalized
    /// quadratic forms, compute GL(3, 2) orbits, and confirm the invariant
    /// tuple separates exactly the orbits. Also spot-check witnesses.
    #[test]
    fn binary_invariants_classify_orbits_t3() {
        let d = 2;
        let t = 3;
        let gl: Vec<GFMatrix> = all_invertible(d, t);
        assert_eq!(gl.len(), 168);
        let mut forms = Vec::new();
        for code in 0..(1u64 << 9) {
            // 2 bits per diagonal entry, 1 bit per off-diagonal pair.
            let diag: Vec<u32> = (0..3).map(|i| ((code >> (2 * i)) & 3) as u32).collect();
            let offs = [(code >> 6) & 1, (code >> 7) & 1, (code >> 8) & 1];
            let mut mat = GFMatrix::zero(d, t, t);
            for i in 0..3 {
                mat.set(i, i, diag[i] % 2);
            }
            let pairs = [(0, 1), (0, 2), (1, 2)];
            for (k, (i, j)) in pairs.iter().enumerate() {
                mat.set(*i, *j, offs[k] as u32);
                mat.set(*j, *i, offs[k] as u32);
            }
            forms.push(GenQuadForm::new(d, diag, SymBilForm::new(mat)));
        }
        assert_eq!(forms.len(), 512);
        // Orbit labels by union-find over the group action.
        let key = |q: &GenQuadForm| -> (Vec<u32>, Vec<u32>) {
            let pm = (0..t).flat_map(|i| (0..t).map(move |j| (i, j)))
                .map(|(i, j)| q.polar().at(i, j))
                .collect();
            (q.diag.clone(), pm)
        };
        use std::collections::BTreeMap;
        let index: BTreeMap<_, usize> =
            forms.iter().enumerate().map(|(i, q)| (key(q), i)).collect();
        let mut orbit: Vec<usize> = (0..forms.len()).collect();
        fn find(orbit: &mut [usize], i: usize) -> usize {
            let parent = orbit[i];
            if parent == i {
                i
            } else {
                let r = find(orbit, parent);
                orbit[i] = r;
                r
            }
        }
        for (i, q) in forms.iter().enumerate() {
            for g in &gl {
                let qt = q.transform(g);
                let j = index[&key(&qt)];
                let (ri, rj) = (find(&mut orbit, i), find(&mut orbit, j));
                if ri != rj {
                    orbit[ri] = rj;
                }
            }
        }
        // Same orbit iff same invariants.
        let invs: Vec<FormInvariants> = forms.iter().map(|q| q.invariants()).collect();
        for i in 0..forms.len() {
            for j in 0..forms.len() {
                let same_orbit = find(&mut orbit, i) == find(&mut orbit, j);
                let same_inv = invs[i] == invs[j];
                assert_eq!(
                    same_orbit, same_inv,
                    "orbit/invariant mismatch between {:?} and {:?}",
                    forms[i].diag, forms[j].diag
                );
            }
        }
        // Witness search agrees with orbit structure on a sample.
        for i in (0..forms.len()).step_by(37) {
            for j in (0..forms.len()).step_by(41) {
                let w = forms[i].equivalence_witness(&forms[j]);
                let same = find(&mut orbit, i) == find(&mut orbit, j);
                assert_eq!(w.is_some(), same);
                if let Some(g) = w {
                    assert!(forms[j].transform(&g) == forms[i]);
                }
            }
        }
    }

    /// Same oracle over F_3 at t = 2: symmetric matrices mod 3, invariants
    /// (rank, discriminant).
    #[test]
    fn odd_invariants_classify_orbits_t2_d3() {
        let d = 3;
        let t = 2;
        let gl = all_invertible(d, t);
        assert_eq!(gl.len(), 48);
        let mut forms = Vec::new();
        for a in 0..3u32 {
            for b in 0..3u32 {
                for c in 0..3u32 {
                    let mat = GFMatrix::from_rows(d, t, &[vec![a, b], vec![b, c]]);
                    forms.push(GenQuadForm::refine_bilinear(&SymBilForm::new(mat)));
                }
            }
        }
        let invs: Vec<FormInvariants> = forms.iter().map(|q| q.invariants()).collect();
        for (i, qi) in forms.iter().enumerate() {
            for (j, qj) in forms.iter().enumerate() {
                let related = gl.iter().any(|g| &qi.transform(g) == qj);
                assert_eq!(related, invs[i] == invs[j]);
                let w = qj.equivalence_witness(qi);
                assert_eq!(related, w.is_some());
                if let Some(g) = w {
                    assert!(qi.transform(&g) == *qj);
                }
            }
        }
    }

    fn all_invertible(d: u32, t: usize) -> Vec<GFMatrix> {
        let total = (d as u64).pow((t * t) as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let digits = index_to_vec(d, t * t, code);
            let m = GFMatrix::from_fn(d, t, t, |i, j| digits[i * t + j]);
            if m.det() != 0 {
                out.push(m);
            }
        }
        out
    }
}
