//! Linear algebra over the prime field Z_d and subspaces of Z_d^t.
//!
//! Matrices store one byte per entry except for d = 2 with at most 64
//! columns, where a row is a single machine word and row reduction is
//! XOR/AND. The supported dimensions never exceed t = 12 or n = 8, so the
//! packed path is a speed knob for the d = 2 enumeration loops, not a
//! capacity feature.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

fn inv_mod_u32(a: u32, p: u32) -> u32 {
    // Fermat: a^(p-2) mod p for prime p.
    assert!(a % p != 0, "inverse of 0 mod {p}");
    let mut base = (a % p) as u64;
    let mut exp = p as u64 - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Dense matrix over Z_d, d prime.
#[derive(Clone, PartialEq, Eq)]
pub struct GFMatrix {
    pub d: u32,
    pub rows: usize,
    pub cols: usize,
    data: MatData,
}

#[derive(Clone, PartialEq, Eq)]
enum MatData {
    Bits(Vec<u64>),
    Bytes(Vec<u8>),
}

impl GFMatrix {
    pub fn zero(d: u32, rows: usize, cols: usize) -> Self {
        let data = if d == 2 && cols <= 64 {
            MatData::Bits(vec![0; rows])
        } else {
            MatData::Bytes(vec![0; rows * cols])
        };
        GFMatrix { d, rows, cols, data }
    }

    pub fn identity(d: u32, n: usize) -> Self {
        let mut m = Self::zero(d, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_fn(d: u32, rows: usize, cols: usize, f: impl Fn(usize, usize) -> u32) -> Self {
        let mut m = Self::zero(d, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(d: u32, cols: usize, rows: &[Vec<u32>]) -> Self {
        Self::from_fn(d, rows.len(), cols, |i, j| rows[i][j])
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u32 {
        debug_assert!(i < self.rows && j < self.cols);
        match &self.data {
            MatData::Bits(w) => ((w[i] >> j) & 1) as u32,
            MatData::Bytes(b) => b[i * self.cols + j] as u32,
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        debug_assert!(i < self.rows && j < self.cols);
        let v = v % self.d;
        match &mut self.data {
            MatData::Bits(w) => {
                if v == 1 {
                    w[i] |= 1 << j;
                } else {
                    w[i] &= !(1 << j);
                }
            }
            MatData::Bytes(b) => b[i * self.cols + j] = v as u8,
        }
    }

    pub fn row(&self, i: usize) -> Vec<u32> {
        (0..self.cols).map(|j| self.at(i, j)).collect()
    }

    pub fn col(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn transpose(&self) -> GFMatrix {
        GFMatrix::from_fn(self.d, self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn mul(&self, other: &GFMatrix) -> GFMatrix {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.d, other.d);
        GFMatrix::from_fn(self.d, self.rows, other.cols, |i, j| {
            let mut acc = 0u64;
            for k in 0..self.cols {
                acc += (self.at(i, k) * other.at(k, j)) as u64;
            }
            (acc % self.d as u64) as u32
        })
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc += (self.at(i, k) * (v[k] % self.d)) as u64;
                }
                (acc % self.d as u64) as u32
            })
            .collect()
    }

    pub fn add(&self, other: &GFMatrix) -> GFMatrix {
        assert_eq!((self.rows, self.cols, self.d), (other.rows, other.cols, other.d));
        GFMatrix::from_fn(self.d, self.rows, self.cols, |i, j| {
            (self.at(i, j) + other.at(i, j)) % self.d
        })
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.at(i, j) == u32::from(i == j)))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        match &mut self.data {
            MatData::Bits(w) => w.swap(a, b),
            MatData::Bytes(bytes) => {
                for j in 0..self.cols {
                    bytes.swap(a * self.cols + j, b * self.cols + j);
                }
            }
        }
    }

    fn scale_row(&mut self, i: usize, c: u32) {
        if c == 1 {
            return;
        }
        for j in 0..self.cols {
            let v = self.at(i, j) * c % self.d;
            self.set(i, j, v);
        }
    }

    /// row[dst] += c * row[src].
    fn add_row(&mut self, dst: usize, src: usize, c: u32) {
        if c == 0 {
            return;
        }
        if let MatData::Bits(w) = &mut self.data {
            w[dst] ^= w[src];
            return;
        }
        for j in 0..self.cols {
            let v = (self.at(dst, j) + c * self.at(src, j)) % self.d;
            self.set(dst, j, v);
        }
    }

    /// Reduced row echelon form; returns the pivot column list.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.at(i, c) != 0) else {
                continue;
            };
            self.swap_rows(r, pr);
            let inv = inv_mod_u32(self.at(r, c), self.d);
            self.scale_row(r, inv);
            for i in 0..self.rows {
                if i != r && self.at(i, c) != 0 {
                    let coef = (self.d - self.at(i, c)) % self.d;
                    self.add_row(i, r, coef);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel {x : Mx = 0}, one RREF-style vector per
    /// free column.
    pub fn kernel(&self) -> Vec<Vec<u32>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
        let mut out = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![0u32; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                // pivot row r: x_pc + sum over free cols of m[r][f] x_f = 0.
                v[pc] = (self.d - m.at(r, free)) % self.d;
            }
            out.push(v);
        }
        out
    }

    /// One solution x of Mx = b, if consistent.
    pub fn solve(&self, b: &[u32]) -> Option<Vec<u32>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = GFMatrix::zero(self.d, self.rows, self.cols + 1);
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
        let mut x = vec![0u32; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.at(r, self.cols);
        }
        Some(x)
    }

    pub fn det(&self) -> u32 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1u64;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| m.at(i, c) != 0) else {
                return 0;
            };
            if pr != c {
                m.swap_rows(c, pr);
                det = det * (self.d as u64 - 1) % self.d as u64; // swap flips sign
            }
            det = det * m.at(c, c) as u64 % self.d as u64;
            let inv = inv_mod_u32(m.at(c, c), self.d);
            m.scale_row(c, inv);
            for i in (c + 1)..n {
                if m.at(i, c) != 0 {
                    let coef = (self.d - m.at(i, c)) % self.d;
                    m.add_row(i, c, coef);
                }
            }
        }
        det as u32
    }

    pub fn inverse(&self) -> Option<GFMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = GFMatrix::zero(self.d, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.at(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
            return None;
        }
        Some(GFMatrix::from_fn(self.d, n, n, |i, j| aug.at(i, n + j)))
    }
}

impl fmt::Debug for GFMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GFMatrix d={} {}x{}", self.d, self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{}", self.at(i, j))?;
                if self.d > 9 {
                    write!(f, " ")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn vec_add(d: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| (x + y) % d).collect()
}

pub fn vec_sub(d: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| (x + d - y % d) % d).collect()
}

pub fn vec_scale(d: u32, c: u32, a: &[u32]) -> Vec<u32> {
    a.iter().map(|x| x * c % d).collect()
}

pub fn dot(d: u32, a: &[u32], b: &[u32]) -> u32 {
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc += (x * y) as u64;
    }
    (acc % d as u64) as u32
}

/// Subspace of Z_d^t held as a reduced row echelon basis, so equal
/// subspaces have byte-equal bases and the basis doubles as a set key.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Subspace {
    pub d: u32,
    pub t: usize,
    basis: Vec<Vec<u32>>,
}

impl Subspace {
    pub fn zero(d: u32, t: usize) -> Self {
        Subspace { d, t, basis: Vec::new() }
    }

    pub fn full(d: u32, t: usize) -> Self {
        Self::span(d, t, &(0..t).map(|i| unit_vec(t, i)).collect::<Vec<_>>())
    }

    pub fn span(d: u32, t: usize, gens: &[Vec<u32>]) -> Self {
        for g in gens {
            assert_eq!(g.len(), t, "generator length mismatch");
        }
        if gens.is_empty() {
            return Self::zero(d, t);
        }
        let mut m = GFMatrix::from_rows(d, t, gens);
        let pivots = m.rref();
        let basis = (0..pivots.len()).map(|i| m.row(i)).collect();
        Subspace { d, t, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        assert_eq!(v.len(), self.t);
        let mut w: Vec<u32> = v.iter().map(|x| x % self.d).collect();
        for b in &self.basis {
            let lead = b.iter().position(|&x| x != 0).unwrap();
            if w[lead] != 0 {
                let c = w[lead]; // basis row is monic at its pivot
                w = vec_sub(self.d, &w, &vec_scale(self.d, c, b));
            }
        }
        w.iter().all(|&x| x == 0)
    }

    /// Coordinates of v in this basis, if v lies in the span.
    pub fn express(&self, v: &[u32]) -> Option<Vec<u32>> {
        let mut w: Vec<u32> = v.iter().map(|x| x % self.d).collect();
        let mut coords = vec![0u32; self.dim()];
        for (i, b) in self.basis.iter().enumerate() {
            let lead = b.iter().position(|&x| x != 0).unwrap();
            if w[lead] != 0 {
                coords[i] = w[lead];
                w = vec_sub(self.d, &w, &vec_scale(self.d, coords[i], b));
            }
        }
        if w.iter().all(|&x| x == 0) {
            Some(coords)
        } else {
            None
        }
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    pub fn add(&self, other: &Subspace) -> Subspace {
        assert_eq!((self.d, self.t), (other.d, other.t));
        let gens: Vec<Vec<u32>> =
            self.basis.iter().chain(&other.basis).cloned().collect();
        Subspace::span(self.d, self.t, &gens)
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!((self.d, self.t), (other.d, other.t));
        // Kernel method: x in both spans iff the stacked coordinate system
        // [A^T | -B^T] has a kernel element; read the A-part back.
        let (ka, kb) = (self.dim(), other.dim());
        if ka == 0 || kb == 0 {
            return Subspace::zero(self.d, self.t);
        }
        let m = GFMatrix::from_fn(self.d, self.t, ka + kb, |i, j| {
            if j < ka {
                self.basis[j][i]
            } else {
                (self.d - other.basis[j - ka][i] % self.d) % self.d
            }
        });
        let gens: Vec<Vec<u32>> = m
            .kernel()
            .into_iter()
            .map(|coef| {
                let mut v = vec![0u32; self.t];
                for (j, b) in self.basis.iter().enumerate() {
                    v = vec_add(self.d, &v, &vec_scale(self.d, coef[j], b));
                }
                v
            })
            .collect();
        Subspace::span(self.d, self.t, &gens)
    }

    /// All d^dim member vectors, coordinates enumerated odometer-style.
    pub fn elements(&self) -> Vec<Vec<u32>> {
        let k = self.dim();
        let mut out = Vec::with_capacity((self.d as usize).pow(k as u32));
        let mut coords = vec![0u32; k];
        loop {
            let mut v = vec![0u32; self.t];
            for (i, b) in self.basis.iter().enumerate() {
                v = vec_add(self.d, &v, &vec_scale(self.d, coords[i], b));
            }
            out.push(v);
            let mut i = 0;
            while i < k {
                coords[i] += 1;
                if coords[i] < self.d {
                    break;
                }
                coords[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
        out
    }

    /// Compact text key, rows joined by '|' (digits are single chars for
    /// the supported d <= 13 via base-14).
    pub fn key(&self) -> String {
        self.basis
            .iter()
            .map(|row| row.iter().map(|&x| char::from_digit(x, 14).unwrap()).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// {u : u^T B v = 0 for all v in N} for a symmetric matrix B over Z_d.
pub fn orthocomplement(n: &Subspace, beta: &GFMatrix) -> Subspace {
    assert_eq!(beta.rows, n.t);
    assert_eq!(beta.cols, n.t);
    if n.dim() == 0 {
        return Subspace::full(n.d, n.t);
    }
    let constraints = GFMatrix::from_fn(n.d, n.dim(), n.t, |i, j| {
        // row i = (basis_i)^T B, using symmetry of B.
        let b = &n.basis()[i];
        let mut acc = 0u64;
        for k in 0..n.t {
            acc += (b[k] * beta.at(k, j)) as u64;
        }
        (acc % n.d as u64) as u32
    });
    Subspace::span(n.d, n.t, &constraints.kernel())
}

/// Splitting N^perp = N + T_N with a deterministic complement: scan the
/// RREF rows of N^perp in pivot order and keep those independent of what
/// came before. Projection solves in the combined (N, reps) basis and
/// returns the reps coordinates.
#[derive(Clone, Debug)]
pub struct QuotientSection {
    pub n: Subspace,
    pub perp: Subspace,
    reps: Vec<Vec<u32>>,
    basis_mat: GFMatrix,
}

impl QuotientSection {
    pub fn new(n: Subspace, beta: &GFMatrix) -> Self {
        let perp = orthocomplement(&n, beta);
        assert!(
            n.is_subspace_of(&perp),
            "quotient section requires N inside its own orthocomplement"
        );
        let mut cur = n.clone();
        let mut reps = Vec::new();
        for row in perp.basis() {
            if !cur.contains(row) {
                cur = cur.add(&Subspace::span(n.d, n.t, std::slice::from_ref(row)));
                reps.push(row.clone());
            }
        }
        debug_assert_eq!(n.dim() + reps.len(), perp.dim());
        let cols: Vec<Vec<u32>> = n.basis().iter().chain(&reps).cloned().collect();
        let basis_mat = GFMatrix::from_fn(n.d, n.t, cols.len(), |i, j| cols[j][i]);
        QuotientSection { n, perp, reps, basis_mat }
    }

    pub fn dim_t(&self) -> usize {
        self.reps.len()
    }

    /// Coset representatives spanning the complement T_N.
    pub fn reps(&self) -> &[Vec<u32>] {
        &self.reps
    }

    /// Representative of the coset with the given T_N coordinates.
    pub fn lift(&self, coords: &[u32]) -> Vec<u32> {
        assert_eq!(coords.len(), self.reps.len());
        let mut v = vec![0u32; self.n.t];
        for (c, rep) in coords.iter().zip(&self.reps) {
            v = vec_add(self.n.d, &v, &vec_scale(self.n.d, *c, rep));
        }
        v
    }

    /// T_N coordinates of the coset of v, or None when v is outside N^perp.
    pub fn project(&self, v: &[u32]) -> Option<Vec<u32>> {
        let sol = self.basis_mat.solve(v)?;
        Some(sol[self.n.dim()..].to_vec())
    }
}

pub fn unit_vec(t: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0u32; t];
    v[i] = 1;
    v
}

/// Digits of idx base d, least significant digit first.
pub fn index_to_vec(d: u32, t: usize, idx: u64) -> Vec<u32> {
    let mut v = vec![0u32; t];
    let mut rest = idx;
    for x in v.iter_mut() {
        *x = (rest % d as u64) as u32;
        rest /= d as u64;
    }
    debug_assert_eq!(rest, 0);
    v
}

pub fn vec_to_index(d: u32, v: &[u32]) -> u64 {
    let mut idx = 0u64;
    for &x in v.iter().rev() {
        idx = idx * d as u64 + (x % d) as u64;
    }
    idx
}

pub fn all_ones(t: usize) -> Vec<u32> {
    vec![1u32; t]
}

/// Wire format for subspaces: row strings of digits.
#[derive(Serialize, Deserialize)]
pub struct SubspaceWire {
    pub d: u32,
    pub t: usize,
    pub rows: Vec<String>,
}

impl From<&Subspace> for SubspaceWire {
    fn from(s: &Subspace) -> Self {
        SubspaceWire {
            d: s.d,
            t: s.t,
            rows: s
                .basis
                .iter()
                .map(|row| row.iter().map(|&x| char::from_digit(x, 14).unwrap()).collect())
                .collect(),
        }
    }
}

impl TryFrom<&SubspaceWire> for Subspace {
    type Error = String;
    fn try_from(w: &SubspaceWire) -> Result<Subspace, String> {
        let mut gens = Vec::new();
        for row in &w.rows {
            let mut v = Vec::with_capacity(w.t);
            for ch in row.chars() {
                let digit = ch.to_digit(14).ok_or_else(|| format!("bad digit {ch}"))?;
                if digit >= w.d {
                    return Err(format!("digit {digit} out of range for d={}", w.d));
                }
                v.push(digit);
            }
            if v.len() != w.t {
                return Err(format!("row length {} != t={}", v.len(), w.t));
            }
            gens.push(v);
        }
        Ok(Subspace::span(w.d, w.t, &gens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_rank_kernel_agree() {
        for d in [2u32, 3, 5] {
            let m = GFMatrix::from_rows(
                d,
                4,
                &[
                    vec![1, 2 % d, 0, 1],
                    vec![0, 1, 1, 0],
                    vec![1, (2 % d + 1) % d, 1, 1],
                    vec![0, 0, 0, 0],
                ],
            );
            let r = m.rank();
            let k = m.kernel();
            assert_eq!(r + k.len(), 4, "rank-nullity at d={d}");
            for v in &k {
                assert!(m.mul_vec(v).iter().all(|&x| x == 0));
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = GFMatrix::from_rows(5, 3, &[vec![1, 2, 3], vec![0, 1, 4], vec![2, 0, 1]]);
        let inv = m.inverse().expect("invertible");
        assert!(m.mul(&inv).is_identity());
        assert!(inv.mul(&m).is_identity());
        // det of a 3x3 by cofactors: 1(1-0) - 2(0-8) + 3(0-2) = 11 = 1 mod 5.
        assert_eq!(m.det(), 1);
        assert_eq!(m.det() * inv.det() % 5, 1);
        let sing = GFMatrix::from_rows(5, 2, &[vec![1, 2], vec![2, 4]]);
        assert!(sing.inverse().is_none());
        assert_eq!(sing.det(), 0);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = GFMatrix::from_rows(3, 3, &[vec![1, 1, 0], vec![0, 1, 1], vec![1, 2, 1]]);
        // Row 3 = row 1 + row 2, so b must satisfy the same relation.
        let x = m.solve(&[1, 2, 0]).expect("consistent");
        assert_eq!(m.mul_vec(&x), vec![1, 2, 0]);
        assert!(m.solve(&[1, 2, 1]).is_none());
    }

    #[test]
    fn subspace_membership_and_intersection() {
        let d = 2;
        let a = Subspace::span(d, 4, &[vec![1, 1, 0, 0], vec![0, 0, 1, 1]]);
        let b = Subspace::span(d, 4, &[vec![1, 1, 1, 1], vec![1, 0, 1, 0]]);
        assert!(a.contains(&[1, 1, 1, 1]));
        assert!(!a.contains(&[1, 0, 0, 0]));
        let i = a.intersect(&b);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&[1, 1, 1, 1]));
        let s = a.add(&b);
        assert_eq!(s.dim(), 3);
        // Dimension formula.
        assert_eq!(a.dim() + b.dim(), i.dim() + s.dim());
    }

    #[test]
    fn subspace_canonical_key_is_representation_free() {
        let d = 3;
        let a = Subspace::span(d, 3, &[vec![1, 2, 0], vec![0, 1, 1]]);
        let b = Subspace::span(d, 3, &[vec![1, 0, 1], vec![0, 2, 2]]);
        assert_eq!(a, b);
        assert_eq!(a.key(), b.key());
        assert_eq!(a.elements().len(), 9);
    }

    #[test]
    fn express_inverts_span_combination() {
        let d = 5;
        let s = Subspace::span(d, 4, &[vec![1, 0, 2, 3], vec![0, 1, 4, 1]]);
        let v = vec_add(d, &vec_scale(d, 2, &s.basis()[0]), &vec_scale(d, 3, &s.basis()[1]));
        assert_eq!(s.express(&v), Some(vec![2, 3]));
        assert_eq!(s.express(&[1, 0, 0, 0]), None);
    }

    #[test]
    fn orthocomplement_and_quotient_section() {
        let d = 2;
        let t = 5;
        let beta = GFMatrix::identity(d, t);
        // N = <01111> under the dot product: N inside N-perp since weight 4.
        let n = Subspace::span(d, t, &[vec![0, 1, 1, 1, 1]]);
        let qs = QuotientSection::new(n.clone(), &beta);
        assert_eq!(qs.perp.dim(), 4);
        assert!(n.is_subspace_of(&qs.perp));
        assert_eq!(qs.dim_t(), 3);
        assert_eq!(
            qs.reps(),
            &[vec![1, 0, 0, 0, 0], vec![0, 1, 0, 0, 1], vec![0, 0, 1, 0, 1]]
        );
        // A published alternative complement is equally valid: check it
        // spans a complement of N inside N-perp.
        let alt = [vec![0, 0, 0, 1, 1], vec![0, 0, 1, 0, 1], vec![1, 0, 0, 0, 0]];
        let alt_span = Subspace::span(d, t, &alt);
        assert_eq!(alt_span.dim(), 3);
        assert!(alt_span.is_subspace_of(&qs.perp));
        assert_eq!(alt_span.intersect(&n).dim(), 0);
        // project/lift round trip on T_N coordinates.
        for idx in 0..8u64 {
            let coords = index_to_vec(d, 3, idx);
            let lifted = qs.lift(&coords);
            assert_eq!(qs.project(&lifted), Some(coords.clone()));
            // Shifting by N members leaves the coset unchanged.
            let shifted = vec_add(d, &lifted, &[0, 1, 1, 1, 1]);
            assert_eq!(qs.project(&shifted), Some(coords));
        }
        assert_eq!(qs.project(&[0, 1, 0, 0, 0]), None);
    }

    #[test]
    fn orthocomplement_degenerate_inputs() {
        let beta = GFMatrix::identity(2, 4);
        let zero = Subspace::zero(2, 4);
        assert_eq!(orthocomplement(&zero, &beta).dim(), 4);
        let ones = Subspace::span(2, 4, &[vec![1, 1, 1, 1]]);
        let perp = orthocomplement(&ones, &beta);
        assert_eq!(perp.dim(), 3);
        assert!(perp.elements().iter().all(|v| v.iter().sum::<u32>() % 2 == 0));
        // Involution for nondegenerate beta.
        assert_eq!(orthocomplement(&perp, &beta), ones);
    }

    #[test]
    fn wire_roundtrip() {
        let s = Subspace::span(2, 5, &[vec![1, 1, 0, 1, 0], vec![0, 1, 1, 1, 1]]);
        let w = SubspaceWire::from(&s);
        let back = Subspace::try_from(&w).unwrap();
        assert_eq!(s, back);
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.contains("rows"));
    }

    #[test]
    fn packed_and_byte_paths_agree() {
        // Same computation, d=2, forced through bytes by exceeding 64 cols
        // is out of scope; instead compare packed d=2 against d=2 logic done
        // via generic arithmetic on a GF(2) matrix built as bytes (d=3 with
        // 0/1 entries and mod-2 assertions would be fake, so just re-derive
        // rref by hand on a small case).
        let m = GFMatrix::from_rows(2, 3, &[vec![1, 1, 0], vec![1, 0, 1], vec![0, 1, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![1, 1, 1]);
    }
}
