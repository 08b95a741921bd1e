//! Enumeration of stochastic isotropic subspaces of (Z_d^t, q_{r,s}) and
//! constructive transporters between them.
//!
//! N is isotropic when q_{r,s} vanishes on it and stochastic when
//! 1_t lies in N^perp. The enumerated strata split by whether 1_t lies in
//! N itself. Enumeration extends subspaces one vector at a time, keeping
//! RREF-canonical representatives, so each subspace is produced exactly
//! once no matter how many chains reach it.

use crate::forms::GenQuadForm;
use crate::gflinear::{
    all_ones, index_to_vec, orthocomplement, unit_vec, GFMatrix, QuotientSection, Subspace,
};
use crate::par;
use std::collections::BTreeSet;

/// Stochastic isotropic subspace with its cached orthocomplement and
/// quotient splitting.
#[derive(Clone, Debug)]
pub struct IsoSubspace {
    pub r: usize,
    pub s: usize,
    pub d: u32,
    pub n: Subspace,
    pub perp: Subspace,
    pub contains_ones: bool,
    pub quotient: QuotientSection,
}

impl IsoSubspace {
    pub fn new(r: usize, s: usize, d: u32, n: Subspace) -> Self {
        let t = r + s;
        assert_eq!(n.t, t);
        let q = GenQuadForm::model(d, r, s);
        assert!(q.is_totally_isotropic(&n), "subspace is not isotropic for q_{{r,s}}");
        let beta = q.polar().matrix().clone();
        let perp = orthocomplement(&n, &beta);
        let one = all_ones(t);
        assert!(perp.contains(&one), "subspace is not stochastic: 1_t outside N^perp");
        let contains_ones = n.contains(&one);
        let quotient = QuotientSection::new(n.clone(), &beta);
        IsoSubspace { r, s, d, n, perp, contains_ones, quotient }
    }

    pub fn t(&self) -> usize {
        self.r + self.s
    }

    pub fn m(&self) -> usize {
        self.n.dim()
    }

    /// The descended form q_N on T_N coordinates.
    pub fn quotient_form(&self) -> GenQuadForm {
        GenQuadForm::model(self.d, self.r, self.s).restrict(self.quotient.reps())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Stratum {
    /// 1_t outside N.
    Plain,
    /// 1_t inside N.
    Ones,
    Both,
}

fn guard(d: u32, t: usize) {
    let ok = match d {
        2 => t <= 12,
        3..=7 => t <= 6,
        _ => t <= 4,
    };
    assert!(ok, "enumeration guard exceeded: d={d}, t={t}");
}

/// All stochastic isotropic subspaces of dimension exactly m in the chosen
/// stratum, RREF-canonical and sorted.
pub fn enumerate(r: usize, s: usize, d: u32, m: usize, stratum: Stratum) -> Vec<IsoSubspace> {
    let by_dim = enumerate_up_to(r, s, d, m);
    if by_dim.len() <= m {
        return Vec::new();
    }
    by_dim[m]
        .iter()
        .filter(|n| match stratum {
            Stratum::Plain => !n.contains(&all_ones(r + s)),
            Stratum::Ones => n.contains(&all_ones(r + s)),
            Stratum::Both => true,
        })
        .map(|n| IsoSubspace::new(r, s, d, n.clone()))
        .collect()
}

/// Levels 0..=m of stochastic isotropic subspaces (both strata mixed),
/// each level sorted. Stops early when a level comes out empty.
fn enumerate_up_to(r: usize, s: usize, d: u32, m: usize) -> Vec<Vec<Subspace>> {
    let t = r + s;
    guard(d, t);
    let q = GenQuadForm::model(d, r, s);
    let one = all_ones(t);
    let total = (d as u64).pow(t as u32);
    // Stochastic isotropic vectors, the only extension candidates.
    let candidates: Vec<Vec<u32>> = (1..total)
        .map(|i| index_to_vec(d, t, i))
        .filter(|v| q.eval(v) == 0 && q.polar().eval(v, &one) == 0)
        .collect();
    let mut levels: Vec<Vec<Subspace>> = vec![vec![Subspace::zero(d, t)]];
    for _ in 0..m {
        let prev = levels.last().unwrap();
        let extended: Vec<BTreeSet<Subspace>> =
            par::map_items(prev.iter().collect::<Vec<&Subspace>>(), |n: &Subspace| {
            let mut out = BTreeSet::new();
            for v in &candidates {
                if n.contains(v) {
                    continue;
                }
                if !n.basis().iter().all(|b| q.polar().eval(b, v) == 0) {
                    continue;
                }
                let mut gens = n.basis().to_vec();
                gens.push(v.clone());
                let bigger = Subspace::span(d, t, &gens);
                debug_assert_eq!(bigger.dim(), n.dim() + 1);
                out.insert(bigger);
            }
            out
        });
        let merged: BTreeSet<Subspace> = extended.into_iter().flatten().collect();
        if merged.is_empty() {
            break;
        }
        levels.push(merged.into_iter().collect());
    }
    levels
}

/// Largest m with a nonempty Gr_m (1_t outside N) stratum. Isotropic
/// subspaces of dimension m+1 contain ones of dimension m, so the strata
/// are nonempty on an initial segment and the first gap is the answer.
pub fn max_isotropic_dim(r: usize, s: usize, d: u32) -> usize {
    let t = r + s;
    let levels = enumerate_up_to(r, s, d, t);
    let one = all_ones(t);
    levels
        .iter()
        .enumerate()
        .rev()
        .find(|(_, level)| level.iter().any(|n| !n.contains(&one)))
        .map(|(m, _)| m)
        .unwrap_or(0)
}

/// All ordered bases of a subspace, with the first element pinned when
/// `first` is given. Element order is the deterministic span order.
fn ordered_bases(n: &Subspace, first: Option<&[u32]>) -> Vec<Vec<Vec<u32>>> {
    let elements: Vec<Vec<u32>> =
        n.elements().into_iter().filter(|v| v.iter().any(|&x| x != 0)).collect();
    let mut out = Vec::new();
    let mut cur: Vec<Vec<u32>> = Vec::new();
    fn rec(
        n: &Subspace,
        elements: &[Vec<u32>],
        cur: &mut Vec<Vec<u32>>,
        out: &mut Vec<Vec<Vec<u32>>>,
    ) {
        if cur.len() == n.dim() {
            out.push(cur.clone());
            return;
        }
        let span = Subspace::span(n.d, n.t, cur);
        for v in elements {
            if !span.contains(v) {
                cur.push(v.clone());
                rec(n, elements, cur, out);
                cur.pop();
            }
        }
    }
    if let Some(f) = first {
        cur.push(f.to_vec());
    }
    rec(n, &elements, &mut cur, &mut out);
    out
}

/// O in O_1(T) with O N = N', by Witt-style extension: prescribe images of
/// a basis of N (and of 1_t), then backtrack over images of a completed
/// basis subject to q- and polar-matching. None when the two subspaces sit
/// in different strata, where no transporter exists.
pub fn witt_transporter(a: &IsoSubspace, b: &IsoSubspace) -> Option<GFMatrix> {
    if (a.r, a.s, a.d) != (b.r, b.s, b.d)
        || a.m() != b.m()
        || a.contains_ones != b.contains_ones
    {
        return None;
    }
    let t = a.t();
    let d = a.d;
    if a.n == b.n {
        return Some(GFMatrix::identity(d, t));
    }
    let q = GenQuadForm::model(d, a.r, a.s);
    let one = all_ones(t);

    // Source frame: basis of N (1_t first when inside), then 1_t when
    // outside, then unit vectors to complete.
    let mut src: Vec<Vec<u32>> = if a.contains_ones {
        ordered_bases(&a.n, Some(&one)).into_iter().next().expect("basis through 1_t")
    } else {
        a.n.basis().to_vec()
    };
    let seeds = src.len() + usize::from(!a.contains_ones);
    if !a.contains_ones {
        src.push(one.clone());
    }
    let mut span = Subspace::span(d, t, &src);
    for i in 0..t {
        if span.dim() == t {
            break;
        }
        let e = unit_vec(t, i);
        if !span.contains(&e) {
            span = span.add(&Subspace::span(d, t, std::slice::from_ref(&e)));
            src.push(e);
        }
    }
    assert_eq!(src.len(), t);

    let total = (d as u64).pow(t as u32);
    let all: Vec<Vec<u32>> = (1..total).map(|i| index_to_vec(d, t, i)).collect();
    let target_seeds = ordered_bases(&b.n, if b.contains_ones { Some(&one) } else { None });
    for tb in target_seeds {
        let mut img: Vec<Vec<u32>> = tb;
        if !a.contains_ones {
            img.push(one.clone());
        }
        debug_assert_eq!(img.len(), seeds);
        if extend_frame(&q, &src, &all, &mut img) {
            let src_mat = GFMatrix::from_fn(d, t, t, |i, j| src[j][i]);
            let img_mat = GFMatrix::from_fn(d, t, t, |i, j| img[j][i]);
            let o = img_mat.mul(&src_mat.inverse().expect("frame is a basis"));
            debug_assert!(check_transports(&o, a, b, &q));
            return Some(o);
        }
    }
    None
}

fn extend_frame(
    q: &GenQuadForm,
    src: &[Vec<u32>],
    all: &[Vec<u32>],
    img: &mut Vec<Vec<u32>>,
) -> bool {
    let k = img.len();
    if k == src.len() {
        return true;
    }
    let span = Subspace::span(q.d, src[0].len(), img);
    for w in all {
        if q.eval(w) != q.eval(&src[k]) {
            continue;
        }
        if !(0..k).all(|j| q.polar().eval(&img[j], w) == q.polar().eval(&src[j], &src[k])) {
            continue;
        }
        if span.contains(w) {
            continue;
        }
        img.push(w.clone());
        if extend_frame(q, src, all, img) {
            return true;
        }
        img.pop();
    }
    false
}

fn check_transports(o: &GFMatrix, a: &IsoSubspace, b: &IsoSubspace, q: &GenQuadForm) -> bool {
    let t = a.t();
    let mapped: Vec<Vec<u32>> = a.n.basis().iter().map(|v| o.mul_vec(v)).collect();
    let image = Subspace::span(a.d, t, &mapped);
    image == b.n
        && o.mul_vec(&all_ones(t)) == all_ones(t)
        && &q.transform(o) == q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(list: &[IsoSubspace]) -> Vec<String> {
        list.iter().map(|i| i.n.key()).collect()
    }

    #[test]
    fn five_zero_census() {
        // Weight-4 vectors are the only nonzero stochastic isotropic ones.
        let gr1 = enumerate(5, 0, 2, 1, Stratum::Plain);
        assert_eq!(gr1.len(), 5);
        let one = all_ones(5);
        for iso in &gr1 {
            assert_eq!(iso.m(), 1);
            assert!(!iso.contains_ones);
            let v = &iso.n.basis()[0];
            assert_eq!(v.iter().sum::<u32>(), 4);
            assert!(iso.perp.contains(&one));
        }
        assert!(enumerate(5, 0, 2, 1, Stratum::Ones).is_empty());
        assert!(enumerate(5, 0, 2, 2, Stratum::Both).is_empty());
        assert_eq!(max_isotropic_dim(5, 0, 2), 1);
    }

    #[test]
    fn three_zero_has_nothing() {
        assert!(enumerate(3, 0, 2, 1, Stratum::Both).is_empty());
        assert_eq!(max_isotropic_dim(3, 0, 2), 0);
    }

    #[test]
    fn seven_zero_reaches_dimension_three() {
        let gr3 = enumerate(7, 0, 2, 3, Stratum::Plain);
        let witness = Subspace::span(
            2,
            7,
            &[
                vec![1, 1, 1, 1, 0, 0, 0],
                vec![0, 0, 1, 1, 1, 1, 0],
                vec![1, 0, 1, 0, 1, 0, 1],
            ],
        );
        assert!(gr3.iter().any(|iso| iso.n == witness));
        assert_eq!(max_isotropic_dim(7, 0, 2), 3);
        assert!(enumerate(7, 0, 2, 4, Stratum::Both).is_empty());
    }

    #[test]
    fn balanced_signature_owns_a_maximal_ones_stratum() {
        // (r,s) = (2,2): the pairing subspace contains 1_4.
        let n = Subspace::span(2, 4, &[vec![1, 0, 1, 0], vec![0, 1, 0, 1]]);
        let gr20 = enumerate(2, 2, 2, 2, Stratum::Ones);
        assert!(gr20.iter().any(|iso| iso.n == n));
        // And at (4,0) the only nonzero subspace is <1_4>.
        let all1 = enumerate(4, 0, 2, 1, Stratum::Both);
        assert_eq!(keys(&all1), vec!["1111"]);
        assert!(all1[0].contains_ones);
        assert!(enumerate(4, 0, 2, 1, Stratum::Plain).is_empty());
    }

    #[test]
    fn quotient_form_descends() {
        let iso = enumerate(5, 0, 2, 1, Stratum::Plain)
            .into_iter()
            .find(|i| i.n.basis()[0] == vec![0, 1, 1, 1, 1])
            .unwrap();
        assert_eq!(iso.quotient.dim_t(), 3);
        let qn = iso.quotient_form();
        // q_N is well defined on cosets: same value at lift and shifted lift.
        let q = GenQuadForm::model(2, 5, 0);
        for idx in 0..8u64 {
            let coords = index_to_vec(2, 3, idx);
            let v = iso.quotient.lift(&coords);
            assert_eq!(qn.eval(&coords), q.eval(&v));
            let shifted = crate::gflinear::vec_add(2, &v, &iso.n.basis()[0]);
            assert_eq!(qn.eval(&coords), q.eval(&shifted));
        }
    }

    #[test]
    fn transporter_moves_weight_blocks() {
        let a = IsoSubspace::new(8, 0, 2, Subspace::span(2, 8, &[vec![1, 1, 1, 1, 0, 0, 0, 0]]));
        let b = IsoSubspace::new(8, 0, 2, Subspace::span(2, 8, &[vec![0, 0, 0, 0, 1, 1, 1, 1]]));
        let o = witt_transporter(&a, &b).expect("same stratum");
        let mapped = Subspace::span(2, 8, &[o.mul_vec(&a.n.basis()[0])]);
        assert_eq!(mapped, b.n);
        assert_eq!(o.mul_vec(&all_ones(8)), all_ones(8));
        let q = GenQuadForm::model(2, 8, 0);
        assert!(&q.transform(&o) == &q);
        // Different strata: <1111 0000> vs <1_8> rejected.
        let c = IsoSubspace::new(8, 0, 2, Subspace::span(2, 8, &[all_ones(8)]));
        assert!(witt_transporter(&a, &c).is_none());
        // Identity for equal inputs.
        assert!(witt_transporter(&a, &a).unwrap().is_identity());
    }

    #[test]
    fn strata_are_single_orbits_at_small_t() {
        for (r, s, d) in [(5usize, 0usize, 2u32), (4, 0, 2), (2, 2, 2), (3, 0, 3), (4, 0, 3)] {
            let t = r + s;
            for m in 1..=t {
                let list = enumerate(r, s, d, m, Stratum::Both);
                if list.is_empty() {
                    continue;
                }
                for stratum in [Stratum::Plain, Stratum::Ones] {
                    let sub: Vec<&IsoSubspace> = list
                        .iter()
                        .filter(|i| (stratum == Stratum::Ones) == i.contains_ones)
                        .collect();
                    for other in sub.iter().skip(1) {
                        let o = witt_transporter(sub[0], other);
                        assert!(
                            o.is_some(),
                            "no transporter inside stratum {stratum:?} at (r,s,d,m)=({r},{s},{d},{m})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn census_respects_block_permutations() {
        // Permuting the first r coordinates maps the census to itself.
        let list = enumerate(5, 0, 2, 1, Stratum::Both);
        let keys_before: BTreeSet<String> = list.iter().map(|i| i.n.key()).collect();
        let perm = GFMatrix::from_fn(2, 5, 5, |i, j| u32::from(j == (i + 1) % 5));
        let keys_after: BTreeSet<String> = list
            .iter()
            .map(|i| {
                let rows: Vec<Vec<u32>> =
                    i.n.basis().iter().map(|v| perm.mul_vec(v)).collect();
                Subspace::span(2, 5, &rows).key()
            })
            .collect();
        assert_eq!(keys_before, keys_after);
    }
}
