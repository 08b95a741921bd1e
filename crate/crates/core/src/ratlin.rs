//! Dense linear algebra over the exact rationals. Small sizes only; all the
//! Gram matrices, section solves and cyclotomic inversions in this crate stay
//! well under a few thousand rows.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

/// Row-major dense rational matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut m = Self::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in RatMat::mul");
        let mut out = RatMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        let cur = out.at(i, j).clone();
                        out.set(i, j, cur + a * b);
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> RatMat {
        RatMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn trace(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i).clone()).sum()
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j { Rat::one() } else { Rat::zero() };
                if *self.at(i, j) != want {
                    return false;
                }
            }
        }
        true
    }

    /// Rank by fraction-aware Gaussian elimination with partial pivoting on
    /// magnitude (keeps intermediate fractions smaller on structured input).
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..m.cols {
            let mut piv = None;
            let mut best: Option<Rat> = None;
            for r in row..m.rows {
                let v = m.at(r, col);
                if !v.is_zero() {
                    let mag = v.abs();
                    if best.as_ref().map_or(true, |b| mag > *b) {
                        best = Some(mag);
                        piv = Some(r);
                    }
                }
            }
            let Some(p) = piv else { continue };
            m.swap_rows(row, p);
            let inv = m.at(row, col).recip();
            for j in col..m.cols {
                let v = m.at(row, j) * &inv;
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r != row && !m.at(r, col).is_zero() {
                    let factor = m.at(r, col).clone();
                    for j in col..m.cols {
                        let v = m.at(r, j) - &factor * m.at(row, j);
                        m.set(r, j, v);
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == m.rows {
                break;
            }
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Solve `self * x = b` for a single right-hand side. `None` if singular
    /// or inconsistent. Square systems only.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, b.len());
        let sols = self.solve_many(&RatMat::from_fn(b.len(), 1, |i, _| b[i].clone()))?;
        Some((0..self.cols).map(|i| sols.at(i, 0).clone()).collect())
    }

    /// Solve `self * X = B` column-wise; `None` if `self` is not invertible.
    pub fn solve_many(&self, b: &RatMat) -> Option<RatMat> {
        assert_eq!(self.rows, self.cols, "solve_many needs a square matrix");
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let mut m = self.clone();
        let mut rhs = b.clone();
        for col in 0..n {
            let piv = (col..n).find(|&r| !m.at(r, col).is_zero())?;
            m.swap_rows(col, piv);
            rhs.swap_rows(col, piv);
            let inv = m.at(col, col).recip();
            for j in 0..n {
                let v = m.at(col, j) * &inv;
                m.set(col, j, v);
            }
            for j in 0..rhs.cols {
                let v = rhs.at(col, j) * &inv;
                rhs.set(col, j, v);
            }
            for r in 0..n {
                if r != col && !m.at(r, col).is_zero() {
                    let factor = m.at(r, col).clone();
                    for j in 0..n {
                        let v = m.at(r, j) - &factor * m.at(col, j);
                        m.set(r, j, v);
                    }
                    for j in 0..rhs.cols {
                        let v = rhs.at(r, j) - &factor * rhs.at(col, j);
                        rhs.set(r, j, v);
                    }
                }
            }
        }
        Some(rhs)
    }

    pub fn inverse(&self) -> Option<RatMat> {
        self.solve_many(&RatMat::identity(self.rows))
    }
}

/// Exact LU-style solver that factors once and back-substitutes per
/// right-hand side. Used where many solves share one matrix.
#[derive(Clone, Debug)]
pub struct RatLu {
    n: usize,
    /// Row-reduced augmented transform: x = transform * b.
    inv: RatMat,
}

impl RatLu {
    pub fn new(m: &RatMat) -> Option<Self> {
        let inv = m.inverse()?;
        Some(RatLu { n: m.rows, inv })
    }

    pub fn solve(&self, b: &[Rat]) -> Vec<Rat> {
        assert_eq!(b.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.n {
                    let v = self.inv.at(i, j);
                    if !v.is_zero() && !b[j].is_zero() {
                        acc += v * &b[j];
                    }
                }
                acc
            })
            .collect()
    }
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(v.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_inverse_roundtrip() {
        let m = RatMat::from_fn(3, 3, |i, j| rat_int([[2, 1, 0], [1, 3, 1], [0, 1, 2]][i][j]));
        assert_eq!(m.rank(), 3);
        let inv = m.inverse().expect("invertible");
        assert!(m.mul(&inv).is_identity());
    }

    #[test]
    fn singular_matrix_detected() {
        let m = RatMat::from_fn(2, 2, |i, j| rat_int([[1, 2], [2, 4]][i][j]));
        assert_eq!(m.rank(), 1);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn lu_matches_direct_solve() {
        let m = RatMat::from_fn(3, 3, |i, j| rat_int([[5, 1, 0], [1, 4, 1], [0, 1, 3]][i][j]));
        let b = [rat_int(1), rat_int(2), rat_int(3)];
        let lu = RatLu::new(&m).unwrap();
        let x = lu.solve(&b);
        let direct = m.solve(&b).unwrap();
        assert_eq!(x, direct);
    }
}
