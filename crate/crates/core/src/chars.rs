//! Multiplicative characters of `Q_p^*`, the fixed additive character of
//! conductor `Z_p`, and Gauss sums.
//!
//! A multiplicative character is stored by its conductor exponent `m`, its
//! value `chi(p)`, and two generator exponents describing the restriction to
//! `(Z/p^m)^*`: a tame index on the Teichmueller part (the sign part for
//! `p = 2`) and a wild index on `1 + p` (on `5` for `p = 2`). The stored `m`
//! is always minimal. Unit arguments are resolved through a cached discrete
//! logarithm table per `(p, m)`; group orders at desk scale are tiny, so the
//! tables are built by brute force.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::padic::PAdicNum;
use crate::scalar::{primitive_root, CycScalar};
use crate::Result;

/// The fixed additive character `psi` of conductor `Z_p` (`sign = +1` sends
/// `a / p^k` to `zeta_{p^k}^a`) or its inverse (`sign = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddChar {
    pub p: u64,
    pub sign: i8,
}

impl AddChar {
    pub fn psi(p: u64) -> Self {
        AddChar { p, sign: 1 }
    }

    pub fn psi_inv(p: u64) -> Self {
        AddChar { p, sign: -1 }
    }

    pub fn inverse(&self) -> Self {
        AddChar { p: self.p, sign: -self.sign }
    }

    /// Value at `x`, which only depends on `x` modulo `Z_p`.
    pub fn value(&self, x: &PAdicNum) -> Result<CycScalar> {
        let (a, k) = x.fractional_part()?;
        let a = a.to_i64().expect("residue fits");
        self.value_at_fraction(a, k)
    }

    /// Value at `a / p^k` (an exact fraction).
    pub fn value_at_fraction(&self, a: i64, k: u32) -> Result<CycScalar> {
        if k == 0 {
            return Ok(CycScalar::one(self.p));
        }
        CycScalar::root_of_unity(self.p, self.p.pow(k), self.sign as i64 * a)
    }
}

/// Discrete-log data for `(Z/p^m)^*` with respect to the canonical
/// generator pair.
pub struct DlogTable {
    pub p: u64,
    pub m: u32,
    pub tame_order: u64,
    pub wild_order: u64,
    logs: HashMap<u64, (u64, u64)>,
}

impl DlogTable {
    /// `(i, j)`: tame and wild exponents of the unit `u`.
    pub fn log(&self, u: u64) -> Option<(u64, u64)> {
        self.logs.get(&(u % self.p.pow(self.m).max(1))).copied()
    }

    /// All units of `(Z/p^m)^*` in increasing order.
    pub fn units(&self) -> Vec<u64> {
        let mut us: Vec<u64> = self.logs.keys().copied().collect();
        us.sort_unstable();
        us
    }
}

fn dlog_cache() -> &'static Mutex<HashMap<(u64, u32), Arc<DlogTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Arc<DlogTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The cached table for `(p, m)`.
pub fn dlog_table(p: u64, m: u32) -> Arc<DlogTable> {
    let mut cache = dlog_cache().lock().expect("dlog cache poisoned");
    cache
        .entry((p, m))
        .or_insert_with(|| Arc::new(build_dlog_table(p, m)))
        .clone()
}

fn mod_pow(base: u64, exp: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b = base as u128 % m as u128;
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

fn build_dlog_table(p: u64, m: u32) -> DlogTable {
    let modulus = p.pow(m);
    let mut logs = HashMap::new();
    if m == 0 {
        logs.insert(0, (0, 0)); // the trivial group, represented by 1 ~ 0
        logs.insert(1 % modulus.max(1), (0, 0));
        return DlogTable { p, m, tame_order: 1, wild_order: 1, logs };
    }
    if p == 2 {
        let (tame_order, wild_order) = match m {
            1 => (1, 1),
            2 => (2, 1),
            _ => (2, 1u64 << (m - 2)),
        };
        // u = (-1)^i * 5^j
        let mut pow5 = HashMap::new();
        let mut cur = 1u64;
        for j in 0..wild_order {
            pow5.insert(cur, j);
            cur = cur * 5 % modulus;
        }
        for u in (1..modulus).step_by(2) {
            if let Some(&j) = pow5.get(&u) {
                logs.insert(u, (0, j));
            } else {
                let neg = modulus - u;
                let j = *pow5.get(&neg).expect("unit generated by -1 and 5");
                logs.insert(u, (1, j));
            }
        }
        return DlogTable { p, m, tame_order, wild_order, logs };
    }

    let tame_order = p - 1;
    let wild_order = p.pow(m - 1);
    let g = primitive_root(p);
    // Teichmueller representatives mod p^m, indexed by the power of g mod p.
    let mut teich_by_res = HashMap::new();
    for i in 0..tame_order {
        let mut t = mod_pow(g, i, modulus);
        for _ in 0..m {
            t = mod_pow(t, p, modulus);
        }
        teich_by_res.insert(t % p, (i, t));
    }
    // Powers of 1 + p.
    let mut wild_log = HashMap::new();
    let mut cur = 1u64;
    for j in 0..wild_order {
        wild_log.insert(cur, j);
        cur = (cur as u128 * (1 + p) as u128 % modulus as u128) as u64;
    }
    for u in 1..modulus {
        if u % p == 0 {
            continue;
        }
        let &(i, t) = teich_by_res.get(&(u % p)).expect("teichmuller rep");
        let t_inv = mod_pow(t, modulus / p * (p - 1) - 1, modulus);
        let h = (u as u128 * t_inv as u128 % modulus as u128) as u64;
        let j = *wild_log.get(&h).expect("1+p generates the wild part");
        logs.insert(u, (i, j));
    }
    DlogTable { p, m, tame_order, wild_order, logs }
}

/// A multiplicative character of `Q_p^*` of conductor `p^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultChar {
    p: u64,
    m: u32,
    teich_idx: u64,
    wild_idx: u64,
    at_p: CycScalar,
}

impl MultChar {
    /// The trivial character.
    pub fn trivial(p: u64) -> Self {
        MultChar { p, m: 0, teich_idx: 0, wild_idx: 0, at_p: CycScalar::one(p) }
    }

    /// Unramified character with the given value at `p`.
    pub fn unramified(p: u64, at_p: CycScalar) -> Result<Self> {
        if at_p.is_zero() {
            return Err(Error::Domain("chi(p) must be invertible".into()));
        }
        Ok(MultChar { p, m: 0, teich_idx: 0, wild_idx: 0, at_p })
    }

    /// Build from generator exponents at a given level; the stored conductor
    /// is reduced to its minimal value.
    pub fn from_indices(p: u64, level: u32, teich_idx: u64, wild_idx: u64, at_p: CycScalar) -> Result<Self> {
        if at_p.is_zero() {
            return Err(Error::Domain("chi(p) must be invertible".into()));
        }
        let (tame_order, wild_order) = orders(p, level);
        let t = teich_idx % tame_order;
        let mut w = wild_idx % wild_order;
        // Minimal conductor: strip trailing p-divisibility of the wild index.
        let mut level = level;
        if level >= wild_floor(p) {
            loop {
                let (_, wo) = orders(p, level);
                if level <= wild_floor(p) || wo <= 1 {
                    break;
                }
                if w % p == 0 {
                    w /= p;
                    level -= 1;
                } else {
                    break;
                }
            }
        }
        if w == 0 {
            // Tame only.
            let m = if t == 0 {
                0
            } else {
                wild_floor(p)
            };
            return Ok(MultChar { p, m, teich_idx: t, wild_idx: 0, at_p });
        }
        Ok(MultChar { p, m: level, teich_idx: t, wild_idx: w, at_p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Conductor exponent: the conductor is `p^m`.
    pub fn conductor_exp(&self) -> u32 {
        self.m
    }

    pub fn is_unramified(&self) -> bool {
        self.m == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.m == 0 && self.at_p.eq_exact(&CycScalar::one(self.p))
    }

    pub fn at_p(&self) -> &CycScalar {
        &self.at_p
    }

    pub fn teich_idx(&self) -> u64 {
        self.teich_idx
    }

    pub fn wild_idx(&self) -> u64 {
        self.wild_idx
    }

    /// Replace the value at `p` (the unit-part data is kept).
    pub fn with_at_p(&self, at_p: CycScalar) -> Self {
        MultChar { at_p, ..self.clone() }
    }

    /// Value on a unit residue mod `p^m` (an integer coprime to `p`).
    pub fn unit_value(&self, u: u64) -> Result<CycScalar> {
        if self.m == 0 {
            return Ok(CycScalar::one(self.p));
        }
        let table = dlog_table(self.p, self.m);
        let (i, j) = table
            .log(u)
            .ok_or_else(|| Error::Domain(format!("{u} is not a unit mod {}^{}", self.p, self.m)))?;
        let tame = CycScalar::root_of_unity(
            self.p,
            table.tame_order.max(1),
            (self.teich_idx * i % table.tame_order.max(1)) as i64,
        )?;
        if table.wild_order <= 1 {
            return Ok(tame);
        }
        let wild = CycScalar::root_of_unity(
            self.p,
            table.wild_order,
            (self.wild_idx as u128 * j as u128 % table.wild_order as u128) as i64,
        )?;
        Ok(tame.mul(&wild))
    }

    /// Full character value `chi(x) = chi(p)^v(x) * chi(unit part)`.
    ///
    /// Requires `x` to be known modulo `p^(v(x) + m)`.
    pub fn value(&self, x: &PAdicNum) -> Result<CycScalar> {
        let v = x
            .valuation()?
            .finite()
            .ok_or_else(|| Error::Domain("character value at zero".into()))?;
        let unit_part = if self.m == 0 {
            CycScalar::one(self.p)
        } else {
            let u = x
                .unit_residue(self.m)?
                .to_u64()
                .expect("desk-scale residue");
            self.unit_value(u)?
        };
        Ok(self.at_p.pow(v)?.mul(&unit_part))
    }

    /// Product character (conductors recomputed, values at `p` multiplied).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.p, other.p);
        let p = self.p;
        let level = self.m.max(other.m).max(if p == 2 { 2 } else { 1 });
        let (tame_order, wild_order) = orders(p, level);
        let lift = |c: &MultChar| -> u64 {
            if c.wild_idx == 0 {
                0
            } else {
                let (_, wo) = orders(p, c.m);
                c.wild_idx * (wild_order / wo)
            }
        };
        let t = (self.teich_idx + other.teich_idx) % tame_order;
        let w = (lift(self) + lift(other)) % wild_order.max(1);
        Self::from_indices(p, level, t, w, self.at_p.mul(&other.at_p))
    }

    /// The inverse (= complex conjugate on the unit part).
    pub fn inverse(&self) -> Result<Self> {
        let (tame_order, wild_order) = orders(self.p, self.m);
        MultChar::from_indices(
            self.p,
            self.m,
            (tame_order - self.teich_idx % tame_order) % tame_order,
            (wild_order - self.wild_idx % wild_order) % wild_order.max(1),
            self.at_p.inverse()?,
        )
    }

    /// `chi(-1)`, which is `+1` or `-1`.
    pub fn at_minus_one(&self) -> Result<CycScalar> {
        if self.m == 0 {
            return Ok(CycScalar::one(self.p));
        }
        self.unit_value(self.p.pow(self.m) - 1)
    }

    /// All characters of `(Z/p^m)^*` (each reduced to its conductor), with
    /// `chi(p) = 1`. The enumeration order is deterministic.
    pub fn all_of_level(p: u64, m: u32) -> Vec<MultChar> {
        let (tame_order, wild_order) = orders(p, m);
        let mut out = Vec::new();
        for t in 0..tame_order {
            for w in 0..wild_order.max(1) {
                out.push(
                    MultChar::from_indices(p, m, t, w, CycScalar::one(p))
                        .expect("valid indices"),
                );
            }
        }
        out
    }

    /// Primitive characters of conductor exactly `p^m`, with `chi(p) = 1`.
    pub fn primitive_of_conductor(p: u64, m: u32) -> Vec<MultChar> {
        MultChar::all_of_level(p, m)
            .into_iter()
            .filter(|c| c.conductor_exp() == m)
            .collect()
    }
}

/// Smallest conductor exponent a ramified character can have.
fn wild_floor(p: u64) -> u32 {
    if p == 2 {
        2
    } else {
        1
    }
}

/// `(tame order, wild order)` of `(Z/p^m)^*` in the canonical decomposition.
fn orders(p: u64, m: u32) -> (u64, u64) {
    if m == 0 {
        return (1, 1);
    }
    if p == 2 {
        match m {
            1 => (1, 1),
            2 => (2, 1),
            _ => (2, 1u64 << (m - 2)),
        }
    } else {
        (p - 1, p.pow(m - 1))
    }
}

/// Gauss sum `tau(chi, psi)`: the normalized character-sum pairing of `chi`
/// against the additive character at level `p^(-m)`; equals `1` for
/// unramified `chi`.
pub fn gauss_sum(chi: &MultChar, psi: &AddChar) -> Result<CycScalar> {
    let p = chi.p();
    let m = chi.conductor_exp();
    if m == 0 {
        return Ok(CycScalar::one(p));
    }
    let table = dlog_table(p, m);
    let mut acc = CycScalar::zero(p);
    for g in table.units() {
        let term = chi
            .unit_value(g)?
            .mul(&psi.value_at_fraction(g as i64, m)?);
        acc = acc.add(&term);
    }
    // chi(p^-m) from the level point a = p^-m.
    Ok(chi.at_p().pow(-(m as i64))?.mul(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn legendre_symbol_mod_three() {
        // quadratic character mod 3 with chi(3) = 1: chi(2) = -1.
        let chi = MultChar::from_indices(3, 1, 1, 0, CycScalar::one(3)).unwrap();
        assert_eq!(chi.conductor_exp(), 1);
        let x = PAdicNum::from_i64(3, 2, 12);
        assert!(chi.value(&x).unwrap().eq_exact(&CycScalar::from_i64(3, -1)));
    }

    #[test]
    fn unramified_value_is_power_of_at_p() {
        let at_p = CycScalar::from_i64(5, 2);
        let chi = MultChar::unramified(5, at_p.clone()).unwrap();
        let x = PAdicNum::from_i64(5, 125 * 7, 12); // p^3 * unit
        assert!(chi.value(&x).unwrap().eq_exact(&at_p.pow(3).unwrap()));
        let trivial = MultChar::trivial(5);
        assert!(trivial.value(&x).unwrap().eq_exact(&CycScalar::one(5)));
    }

    #[test]
    fn additive_character_basics() {
        let psi = AddChar::psi(5);
        let x = PAdicNum::from_i64(5, 7, 12);
        assert!(psi.value(&x).unwrap().eq_exact(&CycScalar::one(5)));
        let y = PAdicNum::from_ratio_i64(5, 1, 5, 12);
        let z5 = CycScalar::root_of_unity(5, 5, 1).unwrap();
        assert!(psi.value(&y).unwrap().eq_exact(&z5));
    }

    #[test]
    fn additive_character_additivity_on_samples() {
        let psi = AddChar::psi(3);
        for (a, ka, b, kb) in [(1i64, 1u32, 2i64, 2u32), (4, 2, 7, 3), (2, 1, 1, 1)] {
            let x = PAdicNum::from_ratio_i64(3, a, 3i64.pow(ka), 16);
            let y = PAdicNum::from_ratio_i64(3, b, 3i64.pow(kb), 16);
            let lhs = psi.value(&x.add(&y)).unwrap();
            let rhs = psi.value(&x).unwrap().mul(&psi.value(&y).unwrap());
            assert!(lhs.eq_exact(&rhs));
        }
    }

    #[test]
    fn gauss_sum_quadratic_mod_three() {
        let chi = MultChar::from_indices(3, 1, 1, 0, CycScalar::one(3)).unwrap();
        let tau = gauss_sum(&chi, &AddChar::psi(3)).unwrap();
        let z = CycScalar::root_of_unity(3, 3, 1).unwrap();
        let z2 = CycScalar::root_of_unity(3, 3, 2).unwrap();
        assert!(tau.eq_exact(&z.sub(&z2)));
    }

    #[test]
    fn gauss_sum_unramified_is_one() {
        let chi = MultChar::unramified(5, CycScalar::from_i64(5, 3)).unwrap();
        assert!(gauss_sum(&chi, &AddChar::psi(5))
            .unwrap()
            .eq_exact(&CycScalar::one(5)));
    }

    #[test]
    fn gauss_sum_modulus_squared() {
        for p in [3u64, 5] {
            for m in [1u32, 2] {
                for chi in MultChar::primitive_of_conductor(p, m) {
                    let tau = gauss_sum(&chi, &AddChar::psi(p)).unwrap();
                    let t = tau.complex_embed(1);
                    let expect = (p as f64).powi(m as i32);
                    assert!(
                        (t.norm_sqr() - expect).abs() < 1e-10,
                        "|tau|^2 != p^m for p={p} m={m}"
                    );
                    let _ = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    #[test]
    fn gauss_sum_conjugate_identity_exact() {
        // tau(chi) * tau(chi-bar) = chi(-1) * p^m for primitive chi.
        for p in [3u64, 5] {
            for m in [1u32, 2] {
                for chi in MultChar::primitive_of_conductor(p, m) {
                    let psi = AddChar::psi(p);
                    let tau = gauss_sum(&chi, &psi).unwrap();
                    let tau_bar = gauss_sum(&chi.inverse().unwrap(), &psi).unwrap();
                    let lhs = tau.mul(&tau_bar);
                    let rhs = chi
                        .at_minus_one()
                        .unwrap()
                        .mul(&CycScalar::from_i64(p, p.pow(m) as i64));
                    assert!(lhs.eq_exact(&rhs), "p={p} m={m}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_sums_vanish() {
        for p in [3u64, 5] {
            for m in [1u32, 2] {
                for chi in MultChar::all_of_level(p, m) {
                    if chi.conductor_exp() == 0 {
                        continue;
                    }
                    let table = dlog_table(p, m);
                    let mut acc = CycScalar::zero(p);
                    for g in table.units() {
                        acc = acc.add(&chi.unit_value(g).unwrap());
                    }
                    assert!(acc.is_zero(), "sum of nontrivial character p={p} m={m}");
                }
            }
        }
    }

    #[test]
    fn character_multiplicativity_on_samples() {
        let chi = MultChar::from_indices(5, 2, 1, 2, CycScalar::from_i64(5, 2)).unwrap();
        for (a, b) in [(7i64, 11i64), (2, 3), (13, 125 * 6 + 1), (50, 7)] {
            let x = PAdicNum::from_i64(5, a, 16);
            let y = PAdicNum::from_i64(5, b, 16);
            let lhs = chi.value(&x.mul(&y)).unwrap();
            let rhs = chi.value(&x).unwrap().mul(&chi.value(&y).unwrap());
            assert!(lhs.eq_exact(&rhs), "a={a} b={b}");
        }
    }

    #[test]
    fn product_character_conductor() {
        // chi * chi^{-1} is trivial.
        let chi = MultChar::from_indices(5, 2, 3, 1, CycScalar::one(5)).unwrap();
        let prod = chi.mul(&chi.inverse().unwrap()).unwrap();
        assert_eq!(prod.conductor_exp(), 0);
        // wild * wild can cancel the wild part, dropping to the tame level.
        let a = MultChar::from_indices(5, 2, 1, 1, CycScalar::one(5)).unwrap();
        let b = MultChar::from_indices(5, 2, 1, 4, CycScalar::one(5)).unwrap();
        assert_eq!(a.mul(&b).unwrap().conductor_exp(), 1);
        // and fully cancel to the trivial character.
        let c = MultChar::from_indices(5, 2, 0, 4, CycScalar::one(5)).unwrap();
        let d = MultChar::from_indices(5, 2, 0, 1, CycScalar::one(5)).unwrap();
        assert_eq!(c.mul(&d).unwrap().conductor_exp(), 0);
    }

    #[test]
    fn two_adic_characters() {
        // The quadratic character mod 4.
        let chi = MultChar::from_indices(2, 2, 1, 0, CycScalar::one(2)).unwrap();
        assert_eq!(chi.conductor_exp(), 2);
        assert!(chi
            .unit_value(3)
            .unwrap()
            .eq_exact(&CycScalar::from_i64(2, -1)));
        let tau = gauss_sum(&chi, &AddChar::psi(2)).unwrap();
        assert!((tau.complex_embed(1).norm_sqr() - 4.0).abs() < 1e-10);
        // Characters mod 8.
        let chis = MultChar::all_of_level(2, 3);
        assert_eq!(chis.len(), 4);
        assert_eq!(
            chis.iter().filter(|c| c.conductor_exp() == 3).count(),
            2
        );
    }

    #[test]
    fn gauss_sum_valuations_follow_the_tame_staircase() {
        // For the three primitive characters mod 5 the Gauss-sum valuations
        // are {1/4, 1/2, 3/4}: the quadratic one is sqrt(5) (valuation 1/2)
        // and the two quartic ones split the remaining steps. This exercises
        // characters, Gauss sums and the fixed p-adic embedding together.
        use num::rational::Ratio;
        let p = 5;
        let mut ords: Vec<Ratio<i64>> = MultChar::primitive_of_conductor(p, 1)
            .iter()
            .map(|chi| {
                gauss_sum(chi, &AddChar::psi_inv(p))
                    .unwrap()
                    .padic_ord()
                    .unwrap()
                    .finite()
                    .unwrap()
            })
            .collect();
        ords.sort();
        assert_eq!(
            ords,
            vec![Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(3, 4)]
        );
        // and the conjugate identity pins the sum of paired valuations to m
        for m in [1u32, 2] {
            for chi in MultChar::primitive_of_conductor(p, m) {
                let a = gauss_sum(&chi, &AddChar::psi_inv(p))
                    .unwrap()
                    .padic_ord()
                    .unwrap()
                    .finite()
                    .unwrap();
                let b = gauss_sum(&chi.inverse().unwrap(), &AddChar::psi_inv(p))
                    .unwrap()
                    .padic_ord()
                    .unwrap()
                    .finite()
                    .unwrap();
                assert_eq!(a + b, Ratio::from_integer(m as i64));
            }
        }
    }

    #[test]
    fn counts_of_primitive_characters() {
        assert_eq!(MultChar::primitive_of_conductor(5, 1).len(), 3);
        assert_eq!(MultChar::primitive_of_conductor(5, 2).len(), 16);
        assert_eq!(MultChar::primitive_of_conductor(3, 1).len(), 1);
        assert_eq!(MultChar::primitive_of_conductor(3, 2).len(), 4);
    }
}
