//! Truncated p-adic arithmetic for `Q_p` and matrices over it.
//!
//! A nonzero element is stored as `p^val * unit` where `unit` is an integer
//! residue coprime to `p`, known modulo `p^prec`. Arithmetic never silently
//! loses precision: every operation propagates the minimum absolute precision
//! of its operands, adjusted by valuation shifts. A value that is congruent to
//! zero modulo everything we know about it is kept as an explicit
//! "zero at absolute precision `abs`" so that downstream code can tell an
//! exact zero from a precision casualty.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, Integer, One, Zero};

use crate::error::Error;
use crate::Result;

/// Default working precision (number of significant p-adic digits).
pub const DEFAULT_PRECISION: u32 = 12;

/// Valuation of a p-adic number: finite or `+infinity` (exact zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// Exactly zero.
    ExactZero,
    /// Indistinguishable from zero at absolute precision `abs`: the value is
    /// `O(p^abs)` but not known to vanish exactly.
    Zero { abs: i64 },
    /// `p^val * unit`, with `unit` invertible modulo `p^prec`; the value is
    /// known modulo `p^(val + prec)`.
    Unit { val: i64, unit: BigUint, prec: u32 },
}

/// A truncated element of `Q_p` with exact valuation tracking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicNum {
    p: u64,
    repr: Repr,
}

fn pow_p(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

impl PAdicNum {
    /// Exact zero.
    pub fn zero(p: u64) -> Self {
        PAdicNum { p, repr: Repr::ExactZero }
    }

    pub fn one(p: u64) -> Self {
        Self::from_i64(p, 1, DEFAULT_PRECISION)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Build from an integer; the valuation is computed exactly.
    pub fn from_i64(p: u64, x: i64, prec: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(x), prec)
    }

    pub fn from_bigint(p: u64, x: &BigInt, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let pb = BigInt::from(p);
        let mut val = 0i64;
        let mut rest = x.clone();
        loop {
            let (q, r) = rest.div_rem(&pb);
            if r.is_zero() {
                val += 1;
                rest = q;
            } else {
                break;
            }
        }
        let modulus = BigInt::from(pow_p(p, prec));
        let unit = rest.mod_floor(&modulus).to_biguint().expect("nonnegative");
        PAdicNum { p, repr: Repr::Unit { val, unit, prec } }
    }

    /// Build from an exact rational; denominators prime to `p` are inverted
    /// modulo `p^prec`, powers of `p` shift the valuation.
    pub fn from_rational(p: u64, x: &BigRational, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let num = Self::from_bigint(p, x.numer(), prec);
        let den = Self::from_bigint(p, x.denom(), prec);
        num.div(&den).expect("nonzero denominator")
    }

    pub fn from_ratio_i64(p: u64, num: i64, den: i64, prec: u32) -> Self {
        Self::from_rational(p, &BigRational::new(BigInt::from(num), BigInt::from(den)), prec)
    }

    /// `p^k` exactly.
    pub fn p_power(p: u64, k: i64, prec: u32) -> Self {
        PAdicNum { p, repr: Repr::Unit { val: k, unit: BigUint::one(), prec } }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::ExactZero)
    }

    /// True when the value cannot be distinguished from zero at its precision.
    pub fn is_zero_at_precision(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    /// Normalized additive valuation; `Infinite` for the exact zero.
    ///
    /// An inexact zero has unknown valuation and reports a precision error.
    pub fn valuation(&self) -> Result<Valuation> {
        match &self.repr {
            Repr::ExactZero => Ok(Valuation::Infinite),
            Repr::Zero { abs } => Err(Error::PrecisionExhausted(format!(
                "valuation of O(p^{abs}) is undetermined"
            ))),
            Repr::Unit { val, .. } => Ok(Valuation::Finite(*val)),
        }
    }

    /// Absolute precision: the value is known modulo `p^abs`. `None` for the
    /// exact zero, which is known to infinite precision.
    pub fn abs_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::ExactZero => None,
            Repr::Zero { abs } => Some(*abs),
            Repr::Unit { val, prec, .. } => Some(val + *prec as i64),
        }
    }

    /// Significant digits of the unit part (0 for zeros).
    pub fn precision(&self) -> u32 {
        match &self.repr {
            Repr::Unit { prec, .. } => *prec,
            _ => 0,
        }
    }

    fn make(p: u64, val: i64, unit: BigUint, prec_avail: i64, abs_bound: i64) -> Self {
        // Normalize `p^val * unit` where `unit` is known mod p^prec_avail and
        // may still be divisible by p; `abs_bound` caps the absolute precision.
        if prec_avail <= 0 {
            return PAdicNum { p, repr: Repr::Zero { abs: abs_bound } };
        }
        let mut unit = unit % pow_p(p, prec_avail as u32);
        if unit.is_zero() {
            return PAdicNum { p, repr: Repr::Zero { abs: abs_bound } };
        }
        let pb = BigUint::from(p);
        let mut val = val;
        let mut prec = prec_avail;
        while (&unit % &pb).is_zero() {
            unit /= &pb;
            val += 1;
            prec -= 1;
            if prec <= 0 {
                return PAdicNum { p, repr: Repr::Zero { abs: abs_bound } };
            }
        }
        PAdicNum { p, repr: Repr::Unit { val, unit, prec: prec as u32 } }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "mixed primes");
        let p = self.p;
        match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) => other.clone(),
            (_, Repr::ExactZero) => self.clone(),
            (Repr::Zero { abs: a }, Repr::Zero { abs: b }) => {
                PAdicNum { p, repr: Repr::Zero { abs: (*a).min(*b) } }
            }
            (Repr::Zero { abs }, Repr::Unit { val, unit, prec })
            | (Repr::Unit { val, unit, prec }, Repr::Zero { abs }) => {
                // x + O(p^abs): digits above abs are lost.
                let abs_new = (*abs).min(val + *prec as i64);
                if *val >= abs_new {
                    PAdicNum { p, repr: Repr::Zero { abs: abs_new } }
                } else {
                    PAdicNum {
                        p,
                        repr: Repr::Unit {
                            val: *val,
                            unit: unit.clone() % pow_p(p, (abs_new - val) as u32),
                            prec: (abs_new - val) as u32,
                        },
                    }
                }
            }
            (
                Repr::Unit { val: va, unit: ua, prec: pa },
                Repr::Unit { val: vb, unit: ub, prec: pb },
            ) => {
                let abs = (va + *pa as i64).min(vb + *pb as i64);
                let base = (*va).min(*vb);
                let avail = abs - base;
                if avail <= 0 {
                    return PAdicNum { p, repr: Repr::Zero { abs } };
                }
                let modulus = pow_p(p, avail as u32);
                let ta = ua * pow_p(p, (va - base) as u32) % &modulus;
                let tb = ub * pow_p(p, (vb - base) as u32) % &modulus;
                Self::make(p, base, (ta + tb) % &modulus, avail, abs)
            }
        }
    }

    pub fn neg(&self) -> Self {
        let p = self.p;
        match &self.repr {
            Repr::Unit { val, unit, prec } => {
                let m = pow_p(p, *prec);
                PAdicNum { p, repr: Repr::Unit { val: *val, unit: &m - unit, prec: *prec } }
            }
            _ => self.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "mixed primes");
        let p = self.p;
        match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) | (_, Repr::ExactZero) => Self::zero(p),
            (Repr::Zero { abs: a }, Repr::Zero { abs: b }) => {
                PAdicNum { p, repr: Repr::Zero { abs: a + b } }
            }
            (Repr::Zero { abs }, Repr::Unit { val, .. })
            | (Repr::Unit { val, .. }, Repr::Zero { abs }) => {
                PAdicNum { p, repr: Repr::Zero { abs: abs + val } }
            }
            (
                Repr::Unit { val: va, unit: ua, prec: pa },
                Repr::Unit { val: vb, unit: ub, prec: pb },
            ) => {
                let prec = (*pa).min(*pb);
                let m = pow_p(p, prec);
                PAdicNum {
                    p,
                    repr: Repr::Unit { val: va + vb, unit: ua * ub % m, prec },
                }
            }
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let p = self.p;
        match &self.repr {
            Repr::ExactZero => Err(Error::NotInvertible),
            Repr::Zero { abs } => Err(Error::PrecisionExhausted(format!(
                "cannot invert O(p^{abs})"
            ))),
            Repr::Unit { val, unit, prec } => {
                let m = pow_p(p, *prec);
                let inv = mod_inverse(unit, &m).ok_or(Error::NotInvertible)?;
                Ok(PAdicNum { p, repr: Repr::Unit { val: -val, unit: inv, prec: *prec } })
            }
        }
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

    /// Multiply by `p^k` (exact valuation shift).
    pub fn shift(&self, k: i64) -> Self {
        let p = self.p;
        match &self.repr {
            Repr::ExactZero => self.clone(),
            Repr::Zero { abs } => PAdicNum { p, repr: Repr::Zero { abs: abs + k } },
            Repr::Unit { val, unit, prec } => PAdicNum {
                p,
                repr: Repr::Unit { val: val + k, unit: unit.clone(), prec: *prec },
            },
        }
    }

    /// The unit part as a residue modulo `p^digits`.
    pub fn unit_residue(&self, digits: u32) -> Result<BigUint> {
        match &self.repr {
            Repr::Unit { unit, prec, .. } => {
                if *prec < digits {
                    Err(Error::PrecisionExhausted(format!(
                        "unit part known mod p^{prec}, need p^{digits}"
                    )))
                } else {
                    Ok(unit % pow_p(self.p, digits))
                }
            }
            _ => Err(Error::Domain("unit residue of zero".into())),
        }
    }

    /// The residue of the whole number modulo `p^digits`, assuming it is
    /// integral (valuation >= 0).
    pub fn residue(&self, digits: u32) -> Result<BigUint> {
        match &self.repr {
            Repr::ExactZero => Ok(BigUint::zero()),
            Repr::Zero { abs } => {
                if *abs >= digits as i64 {
                    Ok(BigUint::zero())
                } else {
                    Err(Error::PrecisionExhausted(format!(
                        "residue mod p^{digits} of O(p^{abs})"
                    )))
                }
            }
            Repr::Unit { val, unit, prec } => {
                if *val < 0 {
                    return Err(Error::Domain("residue of a non-integral number".into()));
                }
                if val + *prec as i64 >= digits as i64 {
                    Ok(unit * pow_p(self.p, *val as u32) % pow_p(self.p, digits))
                } else {
                    Err(Error::PrecisionExhausted(format!(
                        "residue mod p^{digits} needs more digits"
                    )))
                }
            }
        }
    }

    /// Fractional part: `(a, k)` with the number congruent to `a / p^k`
    /// modulo `Z_p`, `0 <= a < p^k`, `k` minimal. `(0, 0)` for integral input.
    pub fn fractional_part(&self) -> Result<(BigUint, u32)> {
        match &self.repr {
            Repr::ExactZero => Ok((BigUint::zero(), 0)),
            Repr::Zero { abs } => {
                if *abs >= 0 {
                    Ok((BigUint::zero(), 0))
                } else {
                    Err(Error::PrecisionExhausted(
                        "fractional part of an inexact zero below Z_p".into(),
                    ))
                }
            }
            Repr::Unit { val, unit, prec } => {
                if *val >= 0 {
                    return Ok((BigUint::zero(), 0));
                }
                let k = (-*val) as u32;
                if *prec < k {
                    return Err(Error::PrecisionExhausted(format!(
                        "fractional part needs {k} digits, have {prec}"
                    )));
                }
                Ok((unit % pow_p(self.p, k), k))
            }
        }
    }

    /// Teichmueller representative of the unit part: the root of unity in
    /// `Z_p` congruent to this unit modulo `p` (modulo 4 when `p = 2`, where
    /// the roots of unity are just `{1, -1}`). Requires a unit.
    pub fn teichmuller(&self) -> Result<Self> {
        match &self.repr {
            Repr::Unit { val: 0, unit, prec } => {
                if self.p == 2 {
                    let sign = if *prec >= 2 && (unit % BigUint::from(4u8)) == BigUint::from(3u8) {
                        -1
                    } else {
                        1
                    };
                    return Ok(PAdicNum::from_i64(2, sign, *prec));
                }
                let m = pow_p(self.p, *prec);
                let mut t = unit.clone();
                // x -> x^p converges to the Teichmueller lift.
                for _ in 0..*prec + 1 {
                    t = t.modpow(&BigUint::from(self.p), &m);
                }
                Ok(PAdicNum { p: self.p, repr: Repr::Unit { val: 0, unit: t, prec: *prec } })
            }
            _ => Err(Error::Domain("teichmuller of a non-unit".into())),
        }
    }

    /// Equality at the joint absolute precision of the two operands.
    pub fn eq_to_precision(&self, other: &Self) -> bool {
        self.sub(other).is_zero_at_precision() || self.sub(other).is_exact_zero()
    }

    /// Reduce to at most `prec` significant digits.
    pub fn truncate(&self, prec: u32) -> Self {
        match &self.repr {
            Repr::Unit { val, unit, prec: p0 } if *p0 > prec => PAdicNum {
                p: self.p,
                repr: Repr::Unit { val: *val, unit: unit % pow_p(self.p, prec), prec },
            },
            _ => self.clone(),
        }
    }
}

impl std::fmt::Display for PAdicNum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.repr {
            Repr::ExactZero => write!(f, "0"),
            Repr::Zero { abs } => write!(f, "O({}^{})", self.p, abs),
            Repr::Unit { val, unit, prec } => {
                write!(f, "{}^{} * ({} + O({}^{}))", self.p, val, unit, self.p, prec)
            }
        }
    }
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let e = a.extended_gcd(&m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(&m).to_biguint().expect("nonnegative"))
}

/// Square matrix over `Q_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicMatrix {
    n: usize,
    p: u64,
    entries: Vec<PAdicNum>,
}

impl PAdicMatrix {
    pub fn new(p: u64, n: usize, entries: Vec<PAdicNum>) -> Self {
        assert_eq!(entries.len(), n * n);
        assert!(entries.iter().all(|e| e.p() == p));
        PAdicMatrix { n, p, entries }
    }

    pub fn from_fn(p: u64, n: usize, mut f: impl FnMut(usize, usize) -> PAdicNum) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(p, n, entries)
    }

    pub fn identity(p: u64, n: usize) -> Self {
        Self::from_fn(p, n, |i, j| {
            if i == j {
                PAdicNum::one(p)
            } else {
                PAdicNum::zero(p)
            }
        })
    }

    pub fn diagonal(p: u64, diag: &[PAdicNum]) -> Self {
        let n = diag.len();
        Self::from_fn(p, n, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                PAdicNum::zero(p)
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn entry(&self, i: usize, j: usize) -> &PAdicNum {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: PAdicNum) {
        self.entries[i * self.n + j] = x;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.p, self.n, |i, j| self.entry(i, j).add(other.entry(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.p, self.n, |i, j| self.entry(i, j).sub(other.entry(i, j)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.p, self.n, |i, j| {
            let mut acc = PAdicNum::zero(self.p);
            for k in 0..self.n {
                acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
            }
            acc
        })
    }

    pub fn scalar_mul(&self, c: &PAdicNum) -> Self {
        Self::from_fn(self.p, self.n, |i, j| self.entry(i, j).mul(c))
    }

    /// Minimum of the entry valuations. Errors on the zero matrix, or when an
    /// inexact zero entry could hide the minimum.
    pub fn order(&self) -> Result<i64> {
        let mut min: Option<i64> = None;
        let mut min_unknown: Option<i64> = None;
        for e in &self.entries {
            match e.valuation() {
                Ok(Valuation::Finite(v)) => {
                    min = Some(min.map_or(v, |m: i64| m.min(v)));
                }
                Ok(Valuation::Infinite) => {}
                Err(_) => {
                    let abs = e.abs_precision().unwrap_or(i64::MAX);
                    min_unknown = Some(min_unknown.map_or(abs, |m: i64| m.min(abs)));
                }
            }
        }
        match (min, min_unknown) {
            (Some(v), None) => Ok(v),
            (Some(v), Some(abs)) if v < abs => Ok(v),
            (None, None) => Err(Error::UndefinedOrder),
            _ => Err(Error::PrecisionExhausted(
                "matrix order hidden by inexact zero entries".into(),
            )),
        }
    }

    /// Determinant by cofactor expansion (dimensions here are tiny).
    pub fn det(&self) -> PAdicNum {
        match self.n {
            0 => PAdicNum::one(self.p),
            1 => self.entry(0, 0).clone(),
            _ => {
                let mut acc = PAdicNum::zero(self.p);
                for j in 0..self.n {
                    let mut term = self.entry(0, j).mul(&self.minor(0, j).det());
                    if j % 2 == 1 {
                        term = term.neg();
                    }
                    acc = acc.add(&term);
                }
                acc
            }
        }
    }

    fn minor(&self, i0: usize, j0: usize) -> Self {
        let n = self.n - 1;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..self.n {
            if i == i0 {
                continue;
            }
            for j in 0..self.n {
                if j == j0 {
                    continue;
                }
                entries.push(self.entry(i, j).clone());
            }
        }
        PAdicMatrix { n, p: self.p, entries }
    }

    /// True when the determinant has finite valuation at working precision.
    pub fn is_invertible(&self) -> bool {
        matches!(self.det().valuation(), Ok(Valuation::Finite(_)))
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let det_inv = det.inverse()?;
        if self.n == 1 {
            return Ok(Self::new(self.p, 1, vec![det_inv]));
        }
        // Adjugate.
        Ok(Self::from_fn(self.p, self.n, |i, j| {
            let mut c = self.minor(j, i).det();
            if (i + j) % 2 == 1 {
                c = c.neg();
            }
            c.mul(&det_inv)
        }))
    }

    /// Entries in `Z_p` and unit determinant.
    pub fn is_in_gl_zp(&self) -> bool {
        let integral = self.entries.iter().all(|e| match e.valuation() {
            Ok(Valuation::Finite(v)) => v >= 0,
            Ok(Valuation::Infinite) => true,
            Err(_) => e.abs_precision().map_or(false, |a| a >= 0),
        });
        integral && matches!(self.det().valuation(), Ok(Valuation::Finite(0)))
    }

    /// Membership in the principal congruence subgroup of level `m`
    /// (`m = 0` means all of `GL_n(Z_p)`).
    pub fn in_congruence_subgroup(&self, m: u32) -> bool {
        if !self.is_in_gl_zp() {
            return false;
        }
        if m == 0 {
            return true;
        }
        let id = Self::identity(self.p, self.n);
        self.sub(&id).entries.iter().all(|e| match e.valuation() {
            Ok(Valuation::Finite(v)) => v >= m as i64,
            Ok(Valuation::Infinite) => true,
            Err(_) => e.abs_precision().map_or(false, |a| a >= m as i64),
        })
    }

    /// Iwasawa decomposition `g = b * k` with `b` upper triangular and
    /// `k` in `GL_n(Z_p)`.
    ///
    /// Bottom-up column elimination; the pivot in each row is the entry of
    /// minimal valuation, ties broken by the smallest column index, so the
    /// output is deterministic. The diagonal valuations of `b` are exact.
    pub fn iwasawa_decompose(&self) -> Result<(Self, Self)> {
        let n = self.n;
        let p = self.p;
        let mut m = self.clone();
        // k accumulates the inverses of the column operations applied to m.
        let mut k = Self::identity(p, n);

        for i in (0..n).rev() {
            // Pivot: minimal valuation among columns 0..=i in row i. Inexact
            // zeros are tolerated as long as their precision bound certifies
            // they cannot undercut the chosen pivot.
            let mut pivot: Option<(usize, i64)> = None;
            let mut unknown_floor: Option<i64> = None;
            for j in 0..=i {
                match m.entry(i, j).valuation() {
                    Ok(Valuation::Finite(v)) => {
                        if pivot.map_or(true, |(_, pv)| v < pv) {
                            pivot = Some((j, v));
                        }
                    }
                    Ok(Valuation::Infinite) => {}
                    Err(_) => {
                        let abs = m.entry(i, j).abs_precision().unwrap_or(i64::MAX);
                        unknown_floor =
                            Some(unknown_floor.map_or(abs, |f: i64| f.min(abs)));
                    }
                }
            }
            let (jp, pv) = pivot.ok_or_else(|| {
                Error::PrecisionExhausted(format!("row {i} is zero: matrix not invertible"))
            })?;
            if let Some(floor) = unknown_floor {
                if floor <= pv {
                    return Err(Error::PrecisionExhausted(format!(
                        "pivot in row {i} hidden by an inexact zero"
                    )));
                }
            }

            if jp != i {
                m.swap_columns(jp, i);
                k.swap_rows(jp, i);
            }
            let pivot_val = m.entry(i, i).clone();
            for j in 0..i {
                let c = m.entry(i, j).div(&pivot_val)?;
                if c.is_exact_zero() {
                    continue;
                }
                // column_j -= c * column_i ; row_i of k += c * row_j.
                for r in 0..n {
                    let upd = m.entry(r, j).sub(&m.entry(r, i).mul(&c));
                    m.set(r, j, upd);
                }
                for s in 0..n {
                    let upd = k.entry(i, s).add(&k.entry(j, s).mul(&c));
                    k.set(i, s, upd);
                }
            }
            // Entries left of the diagonal in row i are now (inexact) zero.
            for j in 0..i {
                let e = m.entry(i, j);
                if !e.is_zero_at_precision() && !e.is_exact_zero() {
                    return Err(Error::PrecisionExhausted(format!(
                        "elimination residue at ({i},{j})"
                    )));
                }
                m.set(i, j, PAdicNum::zero(p));
            }
        }
        Ok((m, k))
    }

    pub fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.n {
            self.entries.swap(i * self.n + a, i * self.n + b);
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.n {
            self.entries.swap(a * self.n + j, b * self.n + j);
        }
    }

    /// Block of a 2n x 2n matrix: `which = (0|1, 0|1)` selects row/column
    /// halves.
    pub fn block(&self, which: (usize, usize), half: usize) -> Self {
        assert_eq!(self.n, 2 * half);
        Self::from_fn(self.p, half, |i, j| {
            self.entry(which.0 * half + i, which.1 * half + j).clone()
        })
    }

    /// Assemble a 2n x 2n matrix from four n x n blocks (a, b; c, d).
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let half = a.n;
        assert!(b.n == half && c.n == half && d.n == half);
        Self::from_fn(a.p, 2 * half, |i, j| {
            match (i < half, j < half) {
                (true, true) => a.entry(i, j).clone(),
                (true, false) => b.entry(i, j - half).clone(),
                (false, true) => c.entry(i - half, j).clone(),
                (false, false) => d.entry(i - half, j - half).clone(),
            }
        })
    }

    pub fn trace(&self) -> PAdicNum {
        let mut acc = PAdicNum::zero(self.p);
        for i in 0..self.n {
            acc = acc.add(self.entry(i, i));
        }
        acc
    }

    /// Entrywise equality at joint precision.
    pub fn eq_to_precision(&self, other: &Self) -> bool {
        self.n == other.n
            && (0..self.n * self.n)
                .all(|t| self.entries[t].eq_to_precision(&other.entries[t]))
    }
}

impl std::fmt::Display for PAdicMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
