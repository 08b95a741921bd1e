//! Exact cyclotomic scalars with a tracked power of 1/sqrt(d), a fast
//! specialization for d = 2 hot loops, and a floating-point backend behind
//! the same trait.
//!
//! The exact scalar ring for qudit dimension d is Q(zeta_M) together with a
//! representational denominator d^(k/2), where M = lcm(2D, 8) and D is the
//! order of the phase tau (2d for even d, d for odd d). sqrt(d) itself lies
//! in Q(zeta_M) for every supported d (as a quadratic Gauss sum for odd d and
//! as zeta_8 - zeta_8^3 for d = 2), so the tracked exponent never creates new
//! numbers; it keeps Hadamard-type entries in the natural shape
//! (sum of roots)/d^(k/2) instead of multiplying Gauss sums through.
//!
//! Canonical form: coefficients live on the product basis cut out by the
//! prime-power factors of M. For each prime power p^a | M the exponent
//! residue is reduced below phi(p^a) using the p-th cyclotomic relation
//! zeta^((p-1)p^(a-1)) = -(1 + zeta^(p^(a-1)) + ... ), i.e. the sum over each
//! prime-indexed coset of roots vanishes. The reduced representation is a
//! Q-basis of Q(zeta_M), so a scalar is zero iff its reduced coefficient map
//! is empty. The sqrt exponent is reduced mod 2 by absorbing whole powers of
//! d into the rationals; equality aligns the remaining parity by multiplying
//! one side with the explicit cyclotomic sqrt(d).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

pub type Rat = BigRational;

/// Coefficient modulus attached to qudit dimension d: M = lcm(2D, 8).
pub fn modulus_for(d: u32) -> u32 {
    assert!(d == 2 || (d % 2 == 1 && d > 1), "supported qudit dimensions are 2 and odd primes");
    if d == 2 {
        8
    } else {
        8 * d
    }
}

/// Order of the phase tau = (-1)^d e^(i pi / d): 2d for even d, d for odd d.
pub fn tau_order(d: u32) -> u32 {
    if d % 2 == 0 {
        2 * d
    } else {
        d
    }
}

/// The d whose square root the modulus m can track: 2 for m = 8, m/8 when
/// 8 | m, otherwise none (bare cyclotomic moduli, e.g. character values).
pub fn sqrt_base(m: u32) -> Option<u32> {
    if m == 8 {
        Some(2)
    } else if m % 8 == 0 {
        Some(m / 8)
    } else {
        None
    }
}

/// Legendre symbol of a mod the odd prime p, with l(a) = 0 when p | a.
pub fn legendre(a: i64, p: u32) -> i32 {
    assert!(p % 2 == 1 && p > 1, "legendre symbol needs an odd prime");
    let p64 = p as i64;
    let mut base = a.rem_euclid(p64) as u64;
    if base == 0 {
        return 0;
    }
    let mut exp = (p as u64 - 1) / 2;
    let md = p as u64;
    let mut acc: u64 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % md;
        }
        base = base * base % md;
        exp >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

fn inv_mod(a: i64, m: i64) -> i64 {
    let (g, x, _) = egcd(a.rem_euclid(m), m);
    assert_eq!(g, 1, "inverse of non-unit mod {m}");
    x.rem_euclid(m)
}

#[derive(Clone, Debug)]
struct Factor {
    p: u32,
    q: u32,   // p^a
    phi: u32, // phi(p^a)
    crt: u64, // residue-replacement unit: 1 mod q, 0 mod m/q
}

fn factors_of(m: u32) -> Vec<Factor> {
    let mut out = Vec::new();
    let mut rest = m;
    let mut p = 2u32;
    while p * p <= rest || (rest > 1 && out.iter().all(|f: &Factor| rest % f.p != 0)) {
        if rest % p == 0 {
            let mut q = 1u32;
            while rest % p == 0 {
                rest /= p;
                q *= p;
            }
            out.push(Factor { p, q, phi: q / p * (p - 1), crt: 0 });
        }
        p += if p == 2 { 1 } else { 2 };
        if rest == 1 {
            break;
        }
    }
    if rest > 1 {
        out.push(Factor { p: rest, q: rest, phi: rest - 1, crt: 0 });
    }
    for f in &mut out {
        let rest_m = (m / f.q) as i64;
        let unit = rest_m * inv_mod(rest_m, f.q as i64) % m as i64;
        f.crt = unit as u64;
    }
    out
}

/// Reduce a raw exponent->coefficient map to the canonical product basis.
fn reduce_terms(m: u32, terms: impl IntoIterator<Item = (u32, Rat)>) -> BTreeMap<u32, Rat> {
    let factors = factors_of(m);
    let mut work: Vec<(u32, Rat)> = terms.into_iter().collect();
    let mut out: BTreeMap<u32, Rat> = BTreeMap::new();
    while let Some((e, c)) = work.pop() {
        if c.is_zero() {
            continue;
        }
        let offending = factors.iter().find(|f| e % f.q >= f.phi);
        match offending {
            None => {
                let entry = out.entry(e).or_insert_with(Rat::zero);
                *entry += c;
                if entry.is_zero() {
                    out.remove(&e);
                }
            }
            Some(f) => {
                let r = e % f.q;
                let pa1 = f.q / f.p;
                let v = r - f.phi; // r = (p-1) * p^(a-1) + v with v < p^(a-1)
                debug_assert!(v < pa1);
                for i in 0..(f.p - 1) {
                    let new_r = v + i * pa1;
                    let delta = (new_r + f.q - r) % f.q;
                    let e2 = ((e as u64 + delta as u64 * f.crt) % m as u64) as u32;
                    work.push((e2, -c.clone()));
                }
            }
        }
    }
    out
}

/// Exact element of Q(zeta_M) / d^(sqrtd/2).
///
/// Invariants: coefficient exponents are canonical-basis members, no zero
/// coefficients are stored, and sqrtd is 0 or 1 (whole powers of d are folded
/// into the rationals). Equality is value equality: representations with
/// different sqrt parities are compared by lifting one side with the explicit
/// cyclotomic sqrt(d).
#[derive(Clone, Debug)]
pub struct CycScalar {
    m: u32,
    sqrtd: u32,
    coeffs: BTreeMap<u32, Rat>,
}

impl CycScalar {
    pub fn zero(m: u32) -> Self {
        CycScalar { m, sqrtd: 0, coeffs: BTreeMap::new() }
    }

    pub fn one(m: u32) -> Self {
        Self::from_rat(m, Rat::one())
    }

    pub fn from_rat(m: u32, r: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !r.is_zero() {
            coeffs.insert(0, r);
        }
        CycScalar { m, sqrtd: 0, coeffs }
    }

    pub fn from_int(m: u32, v: i64) -> Self {
        Self::from_rat(m, Rat::from_integer(v.into()))
    }

    /// zeta_M^e.
    pub fn root(m: u32, e: i64) -> Self {
        let e = e.rem_euclid(m as i64) as u32;
        let coeffs = reduce_terms(m, [(e, Rat::one())]);
        CycScalar { m, sqrtd: 0, coeffs }
    }

    /// Build from raw terms (exponents arbitrary mod M) over d^(sqrtd/2).
    pub fn from_terms(m: u32, terms: impl IntoIterator<Item = (i64, Rat)>, sqrtd: u32) -> Self {
        let raw = terms.into_iter().map(|(e, c)| (e.rem_euclid(m as i64) as u32, c));
        let mut s = CycScalar { m, sqrtd, coeffs: reduce_terms(m, raw) };
        s.normalize();
        s
    }

    /// tau^e where tau = (-1)^d e^(i pi/d); tau = zeta_8^2 for d = 2 and
    /// zeta_(8d)^(4(d+1)) for odd d, of order tau_order(d).
    pub fn phase_tau(d: u32, e: i64) -> Self {
        let m = modulus_for(d);
        if d == 2 {
            Self::root(m, 2 * e)
        } else {
            Self::root(m, 4 * (d as i64 + 1) * e)
        }
    }

    /// omega^e = tau^(2e) = e^(2 pi i e / d).
    pub fn phase_omega(d: u32, e: i64) -> Self {
        Self::phase_tau(d, 2 * e)
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn sqrt_d_denom(&self) -> u32 {
        self.sqrtd
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, Rat> {
        &self.coeffs
    }

    fn normalize(&mut self) {
        if self.coeffs.is_empty() {
            self.sqrtd = 0;
            return;
        }
        if self.sqrtd >= 2 {
            let d = sqrt_base(self.m)
                .expect("sqrt(d) tracking requires a modulus of the form 8 or 8d");
            let dd = Rat::from_integer(BigInt::from(d));
            while self.sqrtd >= 2 {
                for c in self.coeffs.values_mut() {
                    *c /= &dd;
                }
                self.sqrtd -= 2;
            }
        }
    }

    /// Terms of the cyclotomic sqrt(d) for this modulus: zeta_8 - zeta_8^3
    /// for d = 2; the quadratic Gauss sum (rotated by -i when d = 3 mod 4)
    /// for odd d.
    fn sqrt_terms(m: u32) -> Vec<(u32, Rat)> {
        let d = sqrt_base(m).expect("modulus cannot track sqrt(d)");
        if d == 2 {
            vec![(1, Rat::one()), (3, -Rat::one())]
        } else {
            let shift = if d % 4 == 1 { 0u64 } else { 6 * d as u64 };
            (0..d as u64)
                .map(|x| ((((8 * x * x) + shift) % m as u64) as u32, Rat::one()))
                .collect()
        }
    }

    fn lift_parity(&self) -> CycScalar {
        // Multiply by sqrt(d)/sqrt(d): numerator gains cyclotomic sqrt(d).
        let sq = Self::sqrt_terms(self.m);
        let mut terms: Vec<(u32, Rat)> = Vec::with_capacity(self.coeffs.len() * sq.len());
        for (e, c) in &self.coeffs {
            for (se, sc) in &sq {
                terms.push((((*e as u64 + *se as u64) % self.m as u64) as u32, c * sc));
            }
        }
        let mut s = CycScalar { m: self.m, sqrtd: self.sqrtd + 1, coeffs: reduce_terms(self.m, terms) };
        s.normalize();
        s
    }

    pub fn add(&self, other: &CycScalar) -> CycScalar {
        assert_eq!(self.m, other.m, "mixed-modulus cyclotomic operands rejected");
        // Zero carries sqrtd 0 by normalization; lifting it would not move
        // its parity, so skip the alignment dance entirely.
        if self.coeffs.is_empty() {
            return other.clone();
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let (a, b);
        let (x, y) = if self.sqrtd == other.sqrtd {
            (self, other)
        } else if self.sqrtd < other.sqrtd {
            a = self.lift_parity();
            (&a, other)
        } else {
            b = other.lift_parity();
            (self, &b)
        };
        debug_assert_eq!(x.sqrtd, y.sqrtd);
        let mut coeffs = x.coeffs.clone();
        for (e, c) in &y.coeffs {
            let entry = coeffs.entry(*e).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                coeffs.remove(e);
            }
        }
        let mut s = CycScalar { m: x.m, sqrtd: x.sqrtd, coeffs };
        s.normalize();
        s
    }

    pub fn neg(&self) -> CycScalar {
        CycScalar {
            m: self.m,
            sqrtd: self.sqrtd,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &CycScalar) -> CycScalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CycScalar) -> CycScalar {
        assert_eq!(self.m, other.m, "mixed-modulus cyclotomic operands rejected");
        let mut terms: Vec<(u32, Rat)> = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                terms.push((((*e1 as u64 + *e2 as u64) % self.m as u64) as u32, c1 * c2));
            }
        }
        let mut s = CycScalar {
            m: self.m,
            sqrtd: self.sqrtd + other.sqrtd,
            coeffs: reduce_terms(self.m, terms),
        };
        s.normalize();
        s
    }

    pub fn conj(&self) -> CycScalar {
        let terms: Vec<(u32, Rat)> =
            self.coeffs.iter().map(|(e, c)| ((self.m - *e) % self.m, c.clone())).collect();
        let mut s =
            CycScalar { m: self.m, sqrtd: self.sqrtd, coeffs: reduce_terms(self.m, terms) };
        s.normalize();
        s
    }

    pub fn scale(&self, r: &Rat) -> CycScalar {
        if r.is_zero() {
            return CycScalar::zero(self.m);
        }
        CycScalar {
            m: self.m,
            sqrtd: self.sqrtd,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * r)).collect(),
        }
    }

    /// Divide by d^(k/2).
    pub fn div_sqrt_d(&self, k: u32) -> CycScalar {
        let mut s = self.clone();
        s.sqrtd += k;
        s.normalize();
        s
    }

    /// Multiply by zeta_M^e.
    pub fn mul_root(&self, e: i64) -> CycScalar {
        let shift = e.rem_euclid(self.m as i64) as u64;
        let terms: Vec<(u32, Rat)> = self
            .coeffs
            .iter()
            .map(|(ex, c)| (((*ex as u64 + shift) % self.m as u64) as u32, c.clone()))
            .collect();
        let mut s =
            CycScalar { m: self.m, sqrtd: self.sqrtd, coeffs: reduce_terms(self.m, terms) };
        s.normalize();
        s
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Exact rational value if the scalar is rational, else None.
    pub fn as_rat(&self) -> Option<Rat> {
        let lowered = if self.sqrtd == 0 { self.clone() } else { return None };
        match lowered.coeffs.len() {
            0 => Some(Rat::zero()),
            1 => lowered.coeffs.get(&0).cloned(),
            _ => None,
        }
    }

    /// Multiplicative inverse via a linear solve on the canonical basis.
    pub fn inv(&self) -> Option<CycScalar> {
        if self.is_zero() {
            return None;
        }
        let basis = canonical_basis(self.m);
        let index: BTreeMap<u32, usize> =
            basis.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let n = basis.len();
        let mut mat = crate::ratlin::RatMat::zero(n, n);
        for (col, be) in basis.iter().enumerate() {
            let prod = CycScalar {
                m: self.m,
                sqrtd: 0,
                coeffs: self.coeffs.clone(),
            }
            .mul(&CycScalar::root(self.m, *be as i64));
            for (e, c) in &prod.coeffs {
                mat.set(index[e], col, c.clone());
            }
        }
        let mut rhs = vec![Rat::zero(); n];
        rhs[index[&0]] = Rat::one();
        let sol = mat.solve(&rhs)?;
        let terms: Vec<(i64, Rat)> = basis
            .iter()
            .zip(sol)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (*e as i64, c))
            .collect();
        // (x / d^(k/2))^(-1) = x^(-1) d^k / d^(k/2).
        let mut out = CycScalar::from_terms(self.m, terms, self.sqrtd);
        if self.sqrtd > 0 {
            let d = sqrt_base(self.m).expect("sqrt parity on sqrt-less modulus");
            out = out.scale(&Rat::from_integer(BigInt::from(d).pow(self.sqrtd)));
        }
        debug_assert!(out.mul(self).eq(&CycScalar::one(self.m)));
        Some(out)
    }

    pub fn to_c64(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.coeffs {
            let angle = 2.0 * std::f64::consts::PI * (*e as f64) / (self.m as f64);
            let cf = c.to_f64().unwrap_or_else(|| {
                c.numer().to_f64().unwrap() / c.denom().to_f64().unwrap()
            });
            acc += Complex64::from_polar(cf, angle);
        }
        if self.sqrtd > 0 {
            let d = sqrt_base(self.m).expect("sqrt parity on sqrt-less modulus") as f64;
            acc /= d.powf(self.sqrtd as f64 / 2.0);
        }
        acc
    }
}

impl PartialEq for CycScalar {
    fn eq(&self, other: &Self) -> bool {
        assert_eq!(self.m, other.m, "mixed-modulus cyclotomic comparison rejected");
        self.sub(other).is_zero()
    }
}

/// Canonical basis exponents of Q(zeta_M): all residues reduced in every
/// prime-power factor. Size phi(M).
pub fn canonical_basis(m: u32) -> Vec<u32> {
    let factors = factors_of(m);
    (0..m).filter(|e| factors.iter().all(|f| e % f.q < f.phi)).collect()
}

impl fmt::Display for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *e == 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*z{}^{e}", self.m)?;
            }
        }
        if self.sqrtd > 0 {
            write!(f, " / sqrt(d)^{}", self.sqrtd)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CycWire {
    m: u32,
    coeffs: Vec<(u32, String)>,
    sqrtd: u32,
}

impl Serialize for CycScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = CycWire {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, c)| (*e, format!("{}/{}", c.numer(), c.denom())))
                .collect(),
            sqrtd: self.sqrtd,
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CycScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = CycWire::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(wire.coeffs.len());
        for (e, s) in wire.coeffs {
            let rat = parse_rat(&s).ok_or_else(|| D::Error::custom("bad rational"))?;
            terms.push((e as i64, rat));
        }
        Ok(CycScalar::from_terms(wire.m, terms, wire.sqrtd))
    }
}

fn parse_rat(s: &str) -> Option<Rat> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rat::new(n, d))
}

/// Fast exact amplitude for d = 2: (c0 + c1 z + c2 z^2 + c3 z^3)/sqrt(2)^k
/// with z = zeta_8 and integer coordinates. Canonical: k is minimal, so
/// derived equality is value equality. Arithmetic is overflow-checked; the
/// stabilizer-orbit states this backend is used on keep coordinates tiny
/// once k is reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Amp2 {
    pub c: [i64; 4],
    pub k: u32,
}

const OVERFLOW_MSG: &str = "Amp2 integer overflow: input exceeds the d=2 fast path envelope";

#[inline]
fn ck_add(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect(OVERFLOW_MSG)
}

#[inline]
fn ck_mul(a: i64, b: i64) -> i64 {
    a.checked_mul(b).expect(OVERFLOW_MSG)
}

impl Amp2 {
    pub const ZERO: Amp2 = Amp2 { c: [0; 4], k: 0 };

    pub fn new(c: [i64; 4], k: u32) -> Self {
        let mut a = Amp2 { c, k };
        a.normalize();
        a
    }

    pub fn one() -> Self {
        Amp2 { c: [1, 0, 0, 0], k: 0 }
    }

    pub fn from_int(v: i64) -> Self {
        Amp2 { c: [v, 0, 0, 0], k: 0 }
    }

    #[inline]
    fn mul_sqrt2_raw(c: [i64; 4]) -> [i64; 4] {
        // sqrt(2) = z - z^3 with z^4 = -1.
        [
            ck_add(c[1], -c[3]),
            ck_add(c[0], c[2]),
            ck_add(c[1], c[3]),
            ck_add(c[2], -c[0]),
        ]
    }

    fn div_sqrt2_exact(c: [i64; 4]) -> Option<[i64; 4]> {
        if (c[0] - c[2]) % 2 != 0 || (c[1] - c[3]) % 2 != 0 {
            return None;
        }
        Some([(c[1] - c[3]) / 2, (c[0] + c[2]) / 2, (c[1] + c[3]) / 2, (c[2] - c[0]) / 2])
    }

    fn normalize(&mut self) {
        if self.c == [0; 4] {
            self.k = 0;
            return;
        }
        while self.k > 0 {
            match Self::div_sqrt2_exact(self.c) {
                Some(c2) => {
                    self.c = c2;
                    self.k -= 1;
                }
                None => break,
            }
        }
    }

    pub fn add(&self, other: &Amp2) -> Amp2 {
        let (mut a, mut b) = (*self, *other);
        while a.k < b.k {
            a.c = Self::mul_sqrt2_raw(a.c);
            a.k += 1;
        }
        while b.k < a.k {
            b.c = Self::mul_sqrt2_raw(b.c);
            b.k += 1;
        }
        Amp2::new(
            [
                ck_add(a.c[0], b.c[0]),
                ck_add(a.c[1], b.c[1]),
                ck_add(a.c[2], b.c[2]),
                ck_add(a.c[3], b.c[3]),
            ],
            a.k,
        )
    }

    pub fn neg(&self) -> Amp2 {
        Amp2 { c: [-self.c[0], -self.c[1], -self.c[2], -self.c[3]], k: self.k }
    }

    pub fn mul(&self, other: &Amp2) -> Amp2 {
        let mut out = [0i64; 4];
        for i in 0..4 {
            if self.c[i] == 0 {
                continue;
            }
            for j in 0..4 {
                if other.c[j] == 0 {
                    continue;
                }
                let prod = ck_mul(self.c[i], other.c[j]);
                let idx = i + j;
                if idx < 4 {
                    out[idx] = ck_add(out[idx], prod);
                } else {
                    out[idx - 4] = ck_add(out[idx - 4], -prod);
                }
            }
        }
        Amp2::new(out, self.k + other.k)
    }

    pub fn conj(&self) -> Amp2 {
        Amp2 { c: [self.c[0], -self.c[3], -self.c[2], -self.c[1]], k: self.k }
    }

    /// Multiply by zeta_8^e.
    pub fn mul_root8(&self, e: i64) -> Amp2 {
        let e = e.rem_euclid(8) as usize;
        let mut c = self.c;
        for _ in 0..e {
            c = [-c[3], c[0], c[1], c[2]];
        }
        Amp2 { c, k: self.k }
    }

    pub fn div_sqrt2(&self, j: u32) -> Amp2 {
        Amp2::new(self.c, self.k + j)
    }

    pub fn is_zero(&self) -> bool {
        self.c == [0; 4]
    }

    pub fn to_cyc(&self) -> CycScalar {
        CycScalar::from_terms(
            8,
            self.c
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0)
                .map(|(e, v)| (e as i64, Rat::from_integer((*v).into()))),
            self.k,
        )
    }

    pub fn to_c64(&self) -> Complex64 {
        let z = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let mut acc = Complex64::new(self.c[0] as f64, 0.0);
        let mut zp = z;
        for i in 1..4 {
            acc += zp * self.c[i] as f64;
            zp *= z;
        }
        acc / 2f64.powf(self.k as f64 / 2.0)
    }
}

/// Scalar backend shared by exact and floating state vectors. The `d`
/// argument fixes the phase conventions; exact backends assert it matches
/// their modulus.
pub trait Scalar: Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    fn s_zero(d: u32) -> Self;
    fn s_one(d: u32) -> Self;
    fn s_from_int(d: u32, v: i64) -> Self;
    fn s_add(&self, other: &Self) -> Self;
    fn s_mul(&self, other: &Self) -> Self;
    fn s_neg(&self) -> Self;
    fn s_conj(&self) -> Self;
    /// Multiply by tau^e.
    fn s_mul_tau(&self, d: u32, e: i64) -> Self;
    /// Multiply by the center phase unit zeta_M^e (M = modulus_for(d)).
    fn s_mul_center(&self, d: u32, e: i64) -> Self;
    /// Divide by d^(k/2).
    fn s_div_sqrt_d(&self, d: u32, k: u32) -> Self;
    fn s_is_zero(&self) -> bool;
    fn s_to_c64(&self, d: u32) -> Complex64;
}

impl Scalar for CycScalar {
    fn s_zero(d: u32) -> Self {
        CycScalar::zero(modulus_for(d))
    }
    fn s_one(d: u32) -> Self {
        CycScalar::one(modulus_for(d))
    }
    fn s_from_int(d: u32, v: i64) -> Self {
        CycScalar::from_int(modulus_for(d), v)
    }
    fn s_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn s_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn s_neg(&self) -> Self {
        self.neg()
    }
    fn s_conj(&self) -> Self {
        self.conj()
    }
    fn s_mul_tau(&self, d: u32, e: i64) -> Self {
        debug_assert_eq!(self.m, modulus_for(d));
        if d == 2 {
            self.mul_root(2 * e)
        } else {
            self.mul_root(4 * (d as i64 + 1) * e)
        }
    }
    fn s_mul_center(&self, d: u32, e: i64) -> Self {
        debug_assert_eq!(self.m, modulus_for(d));
        self.mul_root(e)
    }
    fn s_div_sqrt_d(&self, d: u32, k: u32) -> Self {
        debug_assert_eq!(self.m, modulus_for(d));
        self.div_sqrt_d(k)
    }
    fn s_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn s_to_c64(&self, _d: u32) -> Complex64 {
        self.to_c64()
    }
}

impl Scalar for Amp2 {
    fn s_zero(d: u32) -> Self {
        assert_eq!(d, 2, "Amp2 backend is d = 2 only");
        Amp2::ZERO
    }
    fn s_one(d: u32) -> Self {
        assert_eq!(d, 2, "Amp2 backend is d = 2 only");
        Amp2::one()
    }
    fn s_from_int(d: u32, v: i64) -> Self {
        assert_eq!(d, 2, "Amp2 backend is d = 2 only");
        Amp2::from_int(v)
    }
    fn s_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn s_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn s_neg(&self) -> Self {
        self.neg()
    }
    fn s_conj(&self) -> Self {
        self.conj()
    }
    fn s_mul_tau(&self, _d: u32, e: i64) -> Self {
        self.mul_root8(2 * e)
    }
    fn s_mul_center(&self, _d: u32, e: i64) -> Self {
        self.mul_root8(e)
    }
    fn s_div_sqrt_d(&self, _d: u32, k: u32) -> Self {
        self.div_sqrt2(k)
    }
    fn s_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn s_to_c64(&self, _d: u32) -> Complex64 {
        self.to_c64()
    }
}

impl Scalar for Complex64 {
    fn s_zero(_d: u32) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn s_one(_d: u32) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn s_from_int(_d: u32, v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn s_add(&self, other: &Self) -> Self {
        self + other
    }
    fn s_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn s_neg(&self) -> Self {
        -self
    }
    fn s_conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn s_mul_tau(&self, d: u32, e: i64) -> Self {
        let dd = tau_order(d) as f64;
        let angle = 2.0 * std::f64::consts::PI * (e.rem_euclid(tau_order(d) as i64) as f64) / dd;
        self * Complex64::from_polar(1.0, angle)
    }
    fn s_mul_center(&self, d: u32, e: i64) -> Self {
        let m = modulus_for(d) as f64;
        let angle =
            2.0 * std::f64::consts::PI * (e.rem_euclid(modulus_for(d) as i64) as f64) / m;
        self * Complex64::from_polar(1.0, angle)
    }
    fn s_div_sqrt_d(&self, d: u32, k: u32) -> Self {
        self / (d as f64).powf(k as f64 / 2.0)
    }
    fn s_is_zero(&self) -> bool {
        self.norm_sqr() < 1e-24
    }
    fn s_to_c64(&self, _d: u32) -> Complex64 {
        *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn tau_conventions_match_definition() {
        // d = 2: tau = i; odd d: tau = -e^(i pi / d), order d.
        let t2 = CycScalar::phase_tau(2, 1);
        assert!(close(t2.to_c64(), Complex64::new(0.0, 1.0)));
        for d in [3u32, 5, 7, 11, 13] {
            let t = CycScalar::phase_tau(d, 1);
            let want = -Complex64::from_polar(1.0, std::f64::consts::PI / d as f64);
            assert!(close(t.to_c64(), want), "tau mismatch at d={d}");
            assert!(CycScalar::phase_tau(d, d as i64) == CycScalar::one(modulus_for(d)));
            assert!(CycScalar::phase_tau(d, 2) == CycScalar::phase_omega(d, 1));
        }
        // tau^2 = omega for d = 2 as well.
        assert!(CycScalar::phase_tau(2, 2) == CycScalar::phase_omega(2, 1));
        assert_eq!(tau_order(2), 4);
    }

    #[test]
    fn canonical_reduction_kills_vanishing_sums() {
        // Full sum of d-th roots vanishes.
        for d in [3u32, 5, 7] {
            let m = modulus_for(d);
            let sum = (0..d as i64)
                .map(|j| CycScalar::phase_omega(d, j))
                .fold(CycScalar::zero(m), |a, b| a.add(&b));
            assert!(sum.is_zero(), "root sum should vanish for d={d}");
        }
        let m = 8;
        let sum = CycScalar::root(m, 1).add(&CycScalar::root(m, 5));
        assert!(sum.is_zero(), "zeta_8 + zeta_8^5 = 0");
    }

    #[test]
    fn sqrt_d_terms_are_really_sqrt_d() {
        for d in [2u32, 3, 5, 7, 11, 13] {
            let m = modulus_for(d);
            let s = CycScalar::from_terms(m, CycScalar::sqrt_terms(m).into_iter().map(|(e, c)| (e as i64, c)), 0);
            assert!(
                close(s.to_c64(), Complex64::new((d as f64).sqrt(), 0.0)),
                "sqrt terms wrong for d={d}"
            );
        }
    }

    #[test]
    fn sqrt_denominator_equality_is_value_equality() {
        // (zeta_8 - zeta_8^3)/sqrt(2) equals 1.
        let m = 8;
        let lhs = CycScalar::from_terms(m, [(1, Rat::one()), (3, -Rat::one())], 1);
        assert!(lhs == CycScalar::one(m));
        // 2 / sqrt(2)^2 = 1.
        let two_over_two = CycScalar::from_terms(m, [(0, Rat::from_integer(2.into()))], 2);
        assert!(two_over_two == CycScalar::one(m));
        for d in [3u32, 5, 7] {
            let m = modulus_for(d);
            let sq = CycScalar::from_terms(
                m,
                CycScalar::sqrt_terms(m).into_iter().map(|(e, c)| (e as i64, c)),
                1,
            );
            assert!(sq == CycScalar::one(m), "sqrt(d)/sqrt(d) != 1 for d={d}");
        }
    }

    #[test]
    fn field_arithmetic_roundtrips() {
        let m = modulus_for(3);
        let a = CycScalar::root(m, 5).add(&CycScalar::from_int(m, 2)).div_sqrt_d(1);
        let b = CycScalar::root(m, 11).sub(&CycScalar::phase_tau(3, 2));
        let prod = a.mul(&b);
        assert!(close(prod.to_c64(), a.to_c64() * b.to_c64()));
        let inv = a.inv().expect("nonzero");
        assert!(a.mul(&inv) == CycScalar::one(m));
        assert!(close(a.conj().to_c64(), a.to_c64().conj()));
    }

    #[test]
    fn serde_roundtrip_matches_schema() {
        let m = modulus_for(2);
        let a = CycScalar::from_terms(m, [(1, Rat::one()), (7, Rat::new(3.into(), 2.into()))], 1);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"m\":8"));
        assert!(json.contains("\"sqrtd\":1"));
        let back: CycScalar = serde_json::from_str(&json).unwrap();
        assert!(a == back);
    }

    #[test]
    fn amp2_tracks_cyc_exactly() {
        let a = Amp2::new([1, 2, 0, -1], 3);
        let b = Amp2::new([0, 1, 1, 0], 1);
        let sum = a.add(&b);
        let prod = a.mul(&b);
        assert!(sum.to_cyc() == a.to_cyc().add(&b.to_cyc()));
        assert!(prod.to_cyc() == a.to_cyc().mul(&b.to_cyc()));
        assert!(a.conj().to_cyc() == a.to_cyc().conj());
        assert!(a.mul_root8(3).to_cyc() == a.to_cyc().mul_root(3));
        // k is always minimal, so equality is plain derive.
        let x = Amp2::new([2, 0, 2, 0], 2);
        let y = Amp2::new([1, 0, 1, 0], 0);
        assert_eq!(x, y);
        let s2 = Amp2::new([0, 1, 0, -1], 1); // sqrt(2)/sqrt(2)
        assert_eq!(s2, Amp2::one());
    }

    #[test]
    fn legendre_matches_square_table() {
        for p in [3u32, 5, 7, 11, 13] {
            let squares: std::collections::BTreeSet<i64> =
                (1..p as i64).map(|x| x * x % p as i64).collect();
            for a in 0..p as i64 {
                let want = if a == 0 {
                    0
                } else if squares.contains(&a) {
                    1
                } else {
                    -1
                };
                assert_eq!(legendre(a, p), want, "legendre({a}, {p})");
            }
        }
    }

    #[test]
    fn center_phase_unit_has_right_order() {
        // d = 2: unit is zeta_8; odd d: unit is zeta_(8d).
        let one2 = Amp2::one().s_mul_center(2, 8);
        assert_eq!(one2, Amp2::one());
        let c = CycScalar::one(modulus_for(3)).s_mul_center(3, 24);
        assert!(c == CycScalar::one(modulus_for(3)));
    }
}
