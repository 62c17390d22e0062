//! The exact coefficient ring `C(N, p) = Q(zeta_N)[u] / (u^2 - p)`.
//!
//! Character values, Gauss sums and Euler factors all live here: `u` is a
//! formal square root of `p` carrying the half-integer powers of `q^(1/2)`,
//! and `N` is always of the shape `d * p^B` with `d | p - 1`, which is exactly
//! what characters of `(Z/p^m)^*` and the additive character need. Orders are
//! raised to a common multiple automatically when two elements meet.
//!
//! Two embeddings are provided: a complex one (`zeta_N -> exp(2 pi i w / N)`,
//! `u -> +sqrt(p)`) and a fixed p-adic one (`zeta_d ->` Teichmueller lift of a
//! power of the smallest primitive root, `zeta_{p^B} -> 1 + pi`, `u` formal of
//! valuation `1/2`), realized at desk scale by truncated elements of
//! `Z_p[zeta_{p^B}]` in the uniformizer `pi = zeta_{p^B} - 1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{Integer, One, Zero};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cyc::{ctx, CycPoly};
use crate::error::Error;
use crate::padic::PAdicNum;
use crate::Result;

/// Half-integers `k/2`, used for the variable `s` of Euler factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt {
    /// Twice the value, so `twice = 1` is `s = 1/2`.
    pub twice: i64,
}

impl HalfInt {
    pub const HALF: HalfInt = HalfInt { twice: 1 };

    pub fn int(k: i64) -> Self {
        HalfInt { twice: 2 * k }
    }

    pub fn new(twice: i64) -> Self {
        HalfInt { twice }
    }

    pub fn is_integer(&self) -> bool {
        self.twice % 2 == 0
    }

    pub fn plus_half(&self) -> Self {
        HalfInt { twice: self.twice + 1 }
    }

    pub fn minus_half(&self) -> Self {
        HalfInt { twice: self.twice - 1 }
    }

    pub fn as_f64(&self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Valuation in `(1/2e) Z`, or `+infinity` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdVal {
    Finite(Ratio<i64>),
    Infinite,
}

impl OrdVal {
    pub fn finite(self) -> Option<Ratio<i64>> {
        match self {
            OrdVal::Finite(r) => Some(r),
            OrdVal::Infinite => None,
        }
    }

    pub fn from_int(v: i64) -> Self {
        OrdVal::Finite(Ratio::from_integer(v))
    }
}

impl std::fmt::Display for OrdVal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrdVal::Finite(r) => write!(f, "{r}"),
            OrdVal::Infinite => write!(f, "inf"),
        }
    }
}

/// Element of `Q(zeta_N)[u]/(u^2 - p)`, written `c0 + c1 * u`.
#[derive(Debug, Clone)]
pub struct CycScalar {
    p: u64,
    n: u64,
    c0: CycPoly,
    c1: CycPoly,
}

/// Check and split a root order `n = d * p^B` with `d | p - 1`.
fn split_order(p: u64, n: u64) -> Result<(u64, u32)> {
    let mut d = n;
    let mut b = 0u32;
    while d % p == 0 {
        d /= p;
        b += 1;
    }
    let tame = if p == 2 { 1 } else { p - 1 };
    if d == 0 || tame % d != 0 {
        return Err(Error::BadCycOrder { n, p });
    }
    Ok((d, b))
}

impl CycScalar {
    pub fn zero(p: u64) -> Self {
        CycScalar { p, n: 1, c0: CycPoly::zero(1), c1: CycPoly::zero(1) }
    }

    pub fn one(p: u64) -> Self {
        Self::from_i64(p, 1)
    }

    pub fn from_i64(p: u64, x: i64) -> Self {
        Self::from_rational(p, &BigRational::from(BigInt::from(x)))
    }

    pub fn from_ratio_i64(p: u64, num: i64, den: i64) -> Self {
        Self::from_rational(p, &BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(p: u64, q: &BigRational) -> Self {
        CycScalar { p, n: 1, c0: CycPoly::from_rational(1, q), c1: CycPoly::zero(1) }
    }

    /// The formal square root of `p`.
    pub fn sqrt_p(p: u64) -> Self {
        CycScalar {
            p,
            n: 1,
            c0: CycPoly::zero(1),
            c1: CycPoly::from_rational(1, &BigRational::one()),
        }
    }

    /// `zeta_order^power`; the order must be of the shape `d * p^B`, `d | p-1`.
    pub fn root_of_unity(p: u64, order: u64, power: i64) -> Result<Self> {
        split_order(p, order)?;
        let k = power.rem_euclid(order as i64) as u64;
        Ok(CycScalar {
            p,
            n: order,
            c0: CycPoly::monomial(order, k, BigRational::one()),
            c1: CycPoly::zero(order),
        })
    }

    /// `p^s` for a half-integer `s` (odd halves pick up a factor of `u`).
    pub fn p_to(p: u64, s: HalfInt) -> Self {
        let k = s.twice;
        let whole = k.div_euclid(2);
        let frac = k.rem_euclid(2);
        let base = BigRational::from(BigInt::from(p as i64));
        let q = base.pow(whole as i32);
        let mut out = Self::from_rational(p, &q);
        if frac == 1 {
            out = out.mul(&Self::sqrt_p(p));
        }
        out
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    fn aligned(&self, other: &Self) -> (CycScalar, CycScalar) {
        assert_eq!(self.p, other.p, "mixed primes in CycScalar arithmetic");
        if self.n == other.n {
            return (self.clone(), other.clone());
        }
        let m = self.n.lcm(&other.n);
        (self.raise_order(m), other.raise_order(m))
    }

    pub fn raise_order(&self, m: u64) -> Self {
        if m == self.n {
            return self.clone();
        }
        CycScalar {
            p: self.p,
            n: m,
            c0: self.c0.raise_order(m),
            c1: self.c1.raise_order(m),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        CycScalar { p: a.p, n: a.n, c0: a.c0.add(&b.c0), c1: a.c1.add(&b.c1) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        CycScalar { p: self.p, n: self.n, c0: self.c0.neg(), c1: self.c1.neg() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let p_rat = BigRational::from(BigInt::from(a.p as i64));
        // (a0 + a1 u)(b0 + b1 u) = a0 b0 + p a1 b1 + (a0 b1 + a1 b0) u
        let c0 = a.c0.mul(&b.c0).add(&a.c1.mul(&b.c1).mul_rational(&p_rat));
        let c1 = a.c0.mul(&b.c1).add(&a.c1.mul(&b.c0));
        CycScalar { p: a.p, n: a.n, c0, c1 }
    }

    pub fn mul_rational(&self, q: &BigRational) -> Self {
        CycScalar {
            p: self.p,
            n: self.n,
            c0: self.c0.mul_rational(q),
            c1: self.c1.mul_rational(q),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let cx = ctx(self.n);
        if self.c0.is_zero(&cx) && self.c1.is_zero(&cx) {
            return Err(Error::NotInvertible);
        }
        // (c0 + c1 u)^-1 = (c0 - c1 u) / (c0^2 - p c1^2)
        let p_rat = BigRational::from(BigInt::from(self.p as i64));
        let norm = self
            .c0
            .mul(&self.c0)
            .sub(&self.c1.mul(&self.c1).mul_rational(&p_rat));
        let inv = norm.invert(&cx).ok_or(Error::NotInvertible)?;
        Ok(CycScalar {
            p: self.p,
            n: self.n,
            c0: self.c0.mul(&inv),
            c1: self.c1.neg().mul(&inv),
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Ok(Self::one(self.p));
        }
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Self::one(self.p);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    pub fn is_zero(&self) -> bool {
        let cx = ctx(self.n);
        self.c0.is_zero(&cx) && self.c1.is_zero(&cx)
    }

    /// Exact equality: canonical representatives compared coefficient-wise.
    pub fn eq_exact(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Galois twist `zeta_N -> zeta_N^t` (`u` is fixed).
    pub fn galois(&self, t: u64) -> Result<Self> {
        if t.gcd(&self.n) != 1 {
            return Err(Error::Domain(format!("galois exponent {t} not coprime to {}", self.n)));
        }
        Ok(CycScalar {
            p: self.p,
            n: self.n,
            c0: self.c0.galois(t),
            c1: self.c1.galois(t),
        })
    }

    /// `Some(q)` when the element is the rational number `q`.
    pub fn try_rational(&self) -> Option<BigRational> {
        let cx = ctx(self.n);
        if !self.c1.is_zero(&cx) {
            return None;
        }
        self.c0.try_rational(&cx)
    }

    /// Complex embedding `zeta_N -> exp(2 pi i which_root / N)`, `u -> +sqrt p`.
    pub fn complex_embed(&self, which_root: u64) -> Complex64 {
        let sp = (self.p as f64).sqrt();
        self.c0.eval_complex(which_root) + self.c1.eval_complex(which_root) * sp
    }

    /// Valuation of the fixed p-adic embedding, in `(1/2e) Z`.
    ///
    /// The `u`-free and `u`-parts are measured separately and the minimum is
    /// returned, treating `u` as a formal element of valuation `1/2`; this is
    /// exact on `u`-monomials (every quantity this crate produces) and a lower
    /// bound in the degenerate mixed case where `sqrt p` already lies in the
    /// cyclotomic part.
    pub fn padic_ord(&self) -> Result<OrdVal> {
        let cx = ctx(self.n);
        let z0 = self.c0.is_zero(&cx);
        let z1 = self.c1.is_zero(&cx);
        if z0 && z1 {
            return Ok(OrdVal::Infinite);
        }
        let mut prec: u32 = 24;
        for _ in 0..5 {
            let mut best: Option<Ratio<i64>> = None;
            let mut ok = true;
            if !z0 {
                match part_ord(self.p, self.n, &self.c0, prec)? {
                    Some(v) => best = Some(v),
                    None => ok = false,
                }
            }
            if ok && !z1 {
                match part_ord(self.p, self.n, &self.c1, prec)? {
                    Some(v) => {
                        let v = v + Ratio::new(1, 2);
                        best = Some(match best {
                            Some(b) => b.min(v),
                            None => v,
                        });
                    }
                    None => ok = false,
                }
            }
            if ok {
                return Ok(OrdVal::Finite(best.expect("nonzero element")));
            }
            prec *= 2;
        }
        Err(Error::RaisePrecision(
            "p-adic valuation not resolved at maximal local precision".into(),
        ))
    }

    /// Like [`CycScalar::to_local`], but embedded into the ring of the given
    /// wild level `b` (which must dominate the element's own level).
    pub fn to_local_at(&self, b: u32, prec: u32) -> Result<LocalRingElem> {
        let (d, b0) = split_order(self.p, self.n)?;
        if b0 > b {
            return Err(Error::Domain(format!(
                "element needs wild level {b0}, target ring has {b}"
            )));
        }
        self.raise_order(d * self.p.pow(b)).to_local(prec)
    }

    /// The p-adic embedding of a `u`-monomial element (one of `c0`, `c1`
    /// vanishes), truncated to `prec` digits of `p`.
    pub fn to_local(&self, prec: u32) -> Result<LocalRingElem> {
        let cx = ctx(self.n);
        let z0 = self.c0.is_zero(&cx);
        let z1 = self.c1.is_zero(&cx);
        if !z0 && !z1 {
            return Err(Error::Domain(
                "p-adic embedding of mixed u-parity element".into(),
            ));
        }
        let (_, b) = split_order(self.p, self.n)?;
        let lc = local_ctx(self.p, b, prec);
        if z0 && z1 {
            return Ok(LocalRingElem::zero(&lc));
        }
        let (poly, u_pow) = if z0 { (&self.c1, 1) } else { (&self.c0, 0) };
        let mut elem = embed_poly(&lc, self.n, poly)?;
        elem.u_pow = u_pow;
        Ok(elem)
    }

    /// Canonical serialization payload: reduced coefficient lists.
    fn canonical_coeffs(&self) -> (Vec<BigRational>, Vec<BigRational>) {
        let cx = ctx(self.n);
        let trim = |v: Vec<BigRational>| {
            let mut v = v;
            while v.last().map_or(false, |c| c.is_zero()) {
                v.pop();
            }
            v
        };
        (
            trim(self.c0.reduced_coeffs(&cx)),
            trim(self.c1.reduced_coeffs(&cx)),
        )
    }

    /// Rebuild from reduced coefficients (inverse of `canonical_coeffs`).
    pub fn from_coeffs(
        p: u64,
        order: u64,
        c0: &[BigRational],
        c1: &[BigRational],
    ) -> Result<Self> {
        split_order(p, order)?;
        let build = |cs: &[BigRational]| {
            let mut acc = CycPoly::zero(order);
            for (k, c) in cs.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc.add(&CycPoly::monomial(order, k as u64, c.clone()));
                }
            }
            acc
        };
        Ok(CycScalar { p, n: order, c0: build(c0), c1: build(c1) })
    }
}

impl PartialEq for CycScalar {
    fn eq(&self, other: &Self) -> bool {
        self.eq_exact(other)
    }
}

impl std::fmt::Display for CycScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (c0, c1) = self.canonical_coeffs();
        let fmt_part = |f: &mut std::fmt::Formatter<'_>, cs: &[BigRational], u: bool| {
            let mut first = true;
            for (k, c) in cs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "({c})")?;
                if k > 0 {
                    write!(f, "*z{}^{}", self.n, k)?;
                }
                if u {
                    write!(f, "*u")?;
                }
            }
            Ok(first)
        };
        let e0 = fmt_part(f, &c0, false)?;
        if !c1.is_empty() {
            if !e0 {
                write!(f, " + ")?;
            }
            fmt_part(f, &c1, true)?;
        } else if e0 {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CycScalarRepr {
    p: u64,
    n: u64,
    c0: Vec<String>,
    c1: Vec<String>,
}

impl Serialize for CycScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (c0, c1) = self.canonical_coeffs();
        CycScalarRepr {
            p: self.p,
            n: self.n,
            c0: c0.iter().map(|c| c.to_string()).collect(),
            c1: c1.iter().map(|c| c.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CycScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = CycScalarRepr::deserialize(d)?;
        let parse = |v: &[String]| -> std::result::Result<Vec<BigRational>, D::Error> {
            v.iter()
                .map(|s| s.parse::<BigRational>().map_err(|e| D::Error::custom(e.to_string())))
                .collect()
        };
        CycScalar::from_coeffs(repr.p, repr.n, &parse(&repr.c0)?, &parse(&repr.c1)?)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

// --- the fixed p-adic embedding ---

/// Truncated element of `Z_p[zeta_{p^B}]` in the uniformizer basis
/// `1, pi, ..., pi^(e-1)` (`pi = zeta_{p^B} - 1`), together with a global
/// power of `p` and a half-integer `u`-exponent.
#[derive(Debug, Clone)]
pub struct LocalRingElem {
    p: u64,
    b: u32,
    prec: u32,
    /// Global shift: the element is `p^p_shift * sum c_i pi^i * u^u_pow`.
    p_shift: i64,
    u_pow: i64,
    coeffs: Vec<BigInt>,
}

struct LocalCtx {
    p: u64,
    b: u32,
    prec: u32,
    e: usize,
    modulus: BigInt,
    /// `(1 + pi)^j` for `j < p^b`.
    zeta_pows: Vec<Vec<BigInt>>,
    /// Teichmueller lift of the canonical primitive root mod `p` (1 if p = 2).
    teich_g: BigInt,
}

fn local_cache() -> &'static Mutex<HashMap<(u64, u32, u32), Arc<LocalCtx>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32, u32), Arc<LocalCtx>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn local_ctx(p: u64, b: u32, prec: u32) -> Arc<LocalCtx> {
    let mut cache = local_cache().lock().expect("local ctx cache poisoned");
    cache
        .entry((p, b, prec))
        .or_insert_with(|| Arc::new(LocalCtx::build(p, b, prec)))
        .clone()
}

/// Smallest positive primitive root modulo an odd prime.
pub fn primitive_root(p: u64) -> u64 {
    assert!(p > 2);
    let order = p - 1;
    let mut factors = vec![];
    let mut m = order;
    let mut q = 2;
    while q * q <= m {
        if m % q == 0 {
            factors.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    'next: for g in 2..p {
        for f in &factors {
            if mod_pow_u64(g, order / f, p) == 1 {
                continue 'next;
            }
        }
        return g;
    }
    unreachable!("no primitive root found");
}

fn mod_pow_u64(base: u64, exp: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b: u128 = base as u128 % m as u128;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        e >>= 1;
    }
    acc as u64
}

impl LocalCtx {
    fn build(p: u64, b: u32, prec: u32) -> Self {
        let modulus = BigInt::from(p).pow(prec);
        let e = if b == 0 {
            1
        } else if p == 2 {
            2usize.pow(b - 1)
        } else {
            p.pow(b - 1) as usize * (p as usize - 1)
        };

        // minpoly(X) = Phi_{p^b}(1 + X), monic of degree e.
        let minpoly = if b == 0 {
            vec![BigInt::zero(), BigInt::one()]
        } else {
            // Phi_{p^b}(y) = sum_{i<p} y^(i p^(b-1)); substitute y = 1 + X.
            let step = p.pow(b - 1) as usize;
            let mut acc = vec![BigInt::zero(); e + 1];
            // (1+X)^(i*step) accumulated iteratively
            let mut cur = vec![BigInt::one()]; // (1+X)^0
            let one_plus_x_step = binomial_pow(step, &modulus);
            for _ in 0..p {
                for (k, c) in cur.iter().enumerate() {
                    acc[k] = (&acc[k] + c).mod_floor(&modulus);
                }
                cur = poly_mul_mod(&cur, &one_plus_x_step, &modulus);
            }
            // The top coefficient is 1 exactly (monic); force it after mod.
            acc.truncate(e + 1);
            acc[e] = BigInt::one();
            acc
        };

        // rows: X^k mod (minpoly, p^prec) for k in e..2e-1
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        if e > 0 {
            let mut cur: Vec<BigInt> = (0..e)
                .map(|i| (-minpoly[i].clone()).mod_floor(&modulus))
                .collect();
            rows.push(cur.clone());
            for _ in (e + 1)..(2 * e) {
                let lead = cur[e - 1].clone();
                let mut next = vec![BigInt::zero(); e];
                for i in (1..e).rev() {
                    next[i] = cur[i - 1].clone();
                }
                if !lead.is_zero() {
                    for i in 0..e {
                        next[i] =
                            (&next[i] - &lead * &minpoly[i]).mod_floor(&modulus);
                    }
                }
                rows.push(next.clone());
                cur = next;
            }
        }

        // (1 + pi)^j for j < p^b
        let count = p.pow(b) as usize;
        let mut zeta_pows = Vec::with_capacity(count);
        let mut cur = vec![BigInt::zero(); e];
        cur[0] = BigInt::one();
        zeta_pows.push(cur.clone());
        let mut one_plus_pi = vec![BigInt::zero(); e];
        one_plus_pi[0] = BigInt::one();
        if e > 1 {
            one_plus_pi[1] = BigInt::one();
        } else if b > 0 {
            // e == 1 with b > 0 happens only for p = 2, b = 1: pi = -2.
            one_plus_pi[0] = (BigInt::from(-1)).mod_floor(&modulus);
        }
        for _ in 1..count {
            cur = ring_mul(&cur, &one_plus_pi, &rows, &modulus);
            zeta_pows.push(cur.clone());
        }

        let teich_g = if p == 2 {
            BigInt::one()
        } else {
            let g = primitive_root(p);
            let mut t = BigInt::from(g);
            for _ in 0..prec + 2 {
                t = t.modpow(&BigInt::from(p), &modulus);
            }
            t
        };

        LocalCtx { p, b, prec, e, modulus, zeta_pows, teich_g }
    }
}

/// `(1 + X)^k` with coefficients mod `m`.
fn binomial_pow(k: usize, m: &BigInt) -> Vec<BigInt> {
    let mut c = vec![BigInt::one()];
    for _ in 0..k {
        let mut next = vec![BigInt::zero(); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] = (&next[i] + v).mod_floor(m);
            next[i + 1] = (&next[i + 1] + v).mod_floor(m);
        }
        c = next;
    }
    c
}

fn poly_mul_mod(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            out[i + j] = (&out[i + j] + ca * cb).mod_floor(m);
        }
    }
    out
}

/// Multiplication in the pi-basis ring, folding degrees >= e via `rows`.
fn ring_mul(a: &[BigInt], b: &[BigInt], rows: &[Vec<BigInt>], m: &BigInt) -> Vec<BigInt> {
    let e = a.len();
    let full = poly_mul_mod(a, b, m);
    let mut out = vec![BigInt::zero(); e];
    for (k, c) in full.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if k < e {
            out[k] = (&out[k] + c).mod_floor(m);
        } else {
            for (i, r) in rows[k - e].iter().enumerate() {
                if !r.is_zero() {
                    out[i] = (&out[i] + c * r).mod_floor(m);
                }
            }
        }
    }
    out
}

/// Embed a cyclotomic polynomial part (order `n = d p^b`) into the pi-ring.
fn embed_poly(lc: &LocalCtx, n: u64, poly: &CycPoly) -> Result<LocalRingElem> {
    let p = lc.p;
    let (d, b) = split_order(p, n)?;
    debug_assert_eq!(b, lc.b);
    let pb = p.pow(b);

    // CRT exponents: zeta_n = zeta_d^s0 * zeta_{p^b}^t0.
    let (s0, t0) = if d == 1 {
        (0u64, if pb == 1 { 0 } else { 1 })
    } else if pb == 1 {
        (1u64, 0u64)
    } else {
        let s0 = mod_inverse_u64(pb % d, d)
            .expect("p^b invertible mod d");
        let t0 = mod_inverse_u64(d % pb, pb).expect("d invertible mod p^b");
        (s0, t0)
    };

    // Split the denominator into a p-part (valuation shift) and a unit.
    let mut den = poly.den.clone();
    let mut shift: i64 = 0;
    let pbig = BigInt::from(p);
    loop {
        let (q, r) = den.div_rem(&pbig);
        if r.is_zero() {
            den = q;
            shift -= 1;
        } else {
            break;
        }
    }
    let den_inv = den.extended_gcd(&lc.modulus).x.mod_floor(&lc.modulus);

    let tame = if p == 2 { 1 } else { p - 1 };
    let mut acc = vec![BigInt::zero(); lc.e];
    for (k, c) in poly.num.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let k = k as u64;
        let teich_exp = if d == 1 { 0 } else { (k % d * s0 % d) * (tame / d) % tame };
        let scalar = if teich_exp == 0 {
            BigInt::one()
        } else {
            lc.teich_g.modpow(&BigInt::from(teich_exp), &lc.modulus)
        };
        let scalar = (scalar * c * &den_inv).mod_floor(&lc.modulus);
        let zeta_idx = if pb == 1 { 0 } else { (k % pb * t0 % pb) as usize };
        for (i, z) in lc.zeta_pows[zeta_idx].iter().enumerate() {
            if !z.is_zero() {
                acc[i] = (&acc[i] + &scalar * z).mod_floor(&lc.modulus);
            }
        }
    }
    Ok(LocalRingElem {
        p,
        b: lc.b,
        prec: lc.prec,
        p_shift: shift,
        u_pow: 0,
        coeffs: acc,
    })
}

fn mod_inverse_u64(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
    if !e.gcd.is_one() {
        return None;
    }
    use num::ToPrimitive;
    e.x.mod_floor(&BigInt::from(m)).to_u64()
}

fn part_ord(p: u64, n: u64, poly: &CycPoly, prec: u32) -> Result<Option<Ratio<i64>>> {
    let (_, b) = split_order(p, n)?;
    let lc = local_ctx(p, b, prec);
    let elem = embed_poly(&lc, n, poly)?;
    Ok(elem.ord_unshifted().map(|v| v + Ratio::from_integer(elem.p_shift)))
}

impl LocalRingElem {
    fn zero(lc: &LocalCtx) -> Self {
        LocalRingElem {
            p: lc.p,
            b: lc.b,
            prec: lc.prec,
            p_shift: 0,
            u_pow: 0,
            coeffs: vec![BigInt::zero(); lc.e],
        }
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Valuation of the pi-part alone: `min_i (v_p(c_i) + i/e)`. The
    /// minimum is always certified because distinct `i` give distinct
    /// residues modulo `1/e`.
    fn ord_unshifted(&self) -> Option<Ratio<i64>> {
        let e = self.coeffs.len() as i64;
        let mut best: Option<Ratio<i64>> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut v = 0i64;
            let mut rest = c.clone();
            let pb = BigInt::from(self.p);
            loop {
                let (q, r) = rest.div_rem(&pb);
                if r.is_zero() && !rest.is_zero() {
                    v += 1;
                    rest = q;
                } else {
                    break;
                }
            }
            let cand = Ratio::new(v * e + i as i64, e);
            best = Some(match best {
                Some(b) => b.min(cand),
                None => cand,
            });
        }
        best
    }

    /// Valuation including the p-shift and the formal `u`-exponent, or an
    /// error when truncation hides it.
    pub fn ord(&self) -> Result<OrdVal> {
        match self.ord_unshifted() {
            Some(v) => Ok(OrdVal::Finite(
                v + Ratio::from_integer(self.p_shift) + Ratio::new(self.u_pow, 2),
            )),
            None => Err(Error::RaisePrecision(
                "local element is zero at working precision".into(),
            )),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.p, self.b, self.prec, self.u_pow) != (other.p, other.b, other.prec, other.u_pow) {
            return Err(Error::Domain(
                "local ring elements from different contexts".into(),
            ));
        }
        let lc = local_ctx(self.p, self.b, self.prec);
        // Align p-shifts at the smaller one.
        let base = self.p_shift.min(other.p_shift);
        let scale = |e: &LocalRingElem| -> Vec<BigInt> {
            let f = BigInt::from(e.p).pow((e.p_shift - base) as u32);
            e.coeffs
                .iter()
                .map(|c| (c * &f).mod_floor(&lc.modulus))
                .collect()
        };
        let a = scale(self);
        let b = scale(other);
        let coeffs = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x + y).mod_floor(&lc.modulus))
            .collect();
        Ok(LocalRingElem {
            p: self.p,
            b: self.b,
            prec: self.prec,
            p_shift: base,
            u_pow: self.u_pow,
            coeffs,
        })
    }

    pub fn neg(&self) -> Self {
        let lc = local_ctx(self.p, self.b, self.prec);
        LocalRingElem {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| (-c).mod_floor(&lc.modulus))
                .collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Multiply by a scalar from `Z_p` (or `Q_p`, via its valuation shift).
    pub fn scale_padic(&self, x: &PAdicNum) -> Result<Self> {
        if x.is_exact_zero() {
            let lc = local_ctx(self.p, self.b, self.prec);
            return Ok(LocalRingElem { u_pow: self.u_pow, ..LocalRingElem::zero(&lc) });
        }
        let lc = local_ctx(self.p, self.b, self.prec);
        let v = x
            .valuation()?
            .finite()
            .expect("nonzero scalar");
        let unit = BigInt::from(x.unit_residue(x.precision().min(self.prec))?);
        Ok(LocalRingElem {
            p_shift: self.p_shift + v,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| (c * &unit).mod_floor(&lc.modulus))
                .collect(),
            ..self.clone()
        })
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Context parameters `(p, wild level, precision, u-exponent)`.
    pub fn params(&self) -> (u64, u32, u32, i64) {
        (self.p, self.b, self.prec, self.u_pow)
    }
}

impl std::fmt::Display for LocalRingElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p^{} u^{} * [",
            self.p_shift, self.u_pow
        )?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] (pi-basis, {} digits)", self.prec)
    }
}
