//! Internal exact arithmetic in `Q[x]/(Phi_N(x))`.
//!
//! Elements are kept as length-`N` integer coefficient vectors over a common
//! positive denominator, indexed by powers of `zeta_N`, i.e. working modulo
//! `x^N - 1`. Multiplication by a root of unity is then a cyclic rotation.
//! Reduction modulo the cyclotomic polynomial `Phi_N` happens lazily, when a
//! canonical form is needed (equality, serialization, valuations).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};
use num_complex::Complex64;

/// Precomputed data for one root-of-unity order.
pub(crate) struct CycCtx {
    pub phi: usize,
    /// `Phi_N`, monic with integer coefficients, length `phi + 1`.
    pub phi_poly: Vec<BigInt>,
    /// `x^k mod Phi_N` for `k` in `phi..n`, each of length `phi`.
    rows: Vec<Vec<BigInt>>,
}

fn ctx_cache() -> &'static Mutex<HashMap<u64, Arc<CycCtx>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CycCtx>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn ctx(n: u64) -> Arc<CycCtx> {
    let mut cache = ctx_cache().lock().expect("ctx cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| Arc::new(CycCtx::build(n)))
        .clone()
}

impl CycCtx {
    fn build(n: u64) -> Self {
        let phi_poly = cyclotomic_poly(n);
        let phi = phi_poly.len() - 1;
        // rows[k - phi] = x^k mod Phi_N, built by shift-and-reduce.
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n as usize - phi);
        let mut cur: Vec<BigInt> = (0..phi)
            .map(|i| -phi_poly[i].clone())
            .collect(); // x^phi = -(lower part), Phi monic
        rows.push(cur.clone());
        for _ in (phi + 1)..n as usize {
            // multiply cur by x modulo Phi_N
            let lead = cur[phi - 1].clone();
            let mut next = vec![BigInt::zero(); phi];
            for i in (1..phi).rev() {
                next[i] = cur[i - 1].clone();
            }
            if !lead.is_zero() {
                for i in 0..phi {
                    next[i] -= &lead * &phi_poly[i];
                }
            }
            rows.push(next.clone());
            cur = next;
        }
        CycCtx { phi, phi_poly, rows }
    }

    fn row(&self, k: usize) -> &[BigInt] {
        &self.rows[k - self.phi]
    }
}

/// `Phi_n` with integer coefficients: `(x^n - 1) / prod_{d | n, d < n} Phi_d`.
fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    let mut memo: HashMap<u64, Vec<BigInt>> = HashMap::new();
    cyclotomic_poly_memo(n, &mut memo)
}

fn cyclotomic_poly_memo(n: u64, memo: &mut HashMap<u64, Vec<BigInt>>) -> Vec<BigInt> {
    if let Some(p) = memo.get(&n) {
        return p.clone();
    }
    let result = if n == 1 {
        vec![BigInt::from(-1), BigInt::from(1)]
    } else {
        let mut num = vec![BigInt::zero(); n as usize + 1];
        num[0] = BigInt::from(-1);
        num[n as usize] = BigInt::from(1);
        let mut acc = num;
        for d in 1..n {
            if n % d == 0 {
                let phi_d = cyclotomic_poly_memo(d, memo);
                acc = exact_div(&acc, &phi_d);
            }
        }
        acc
    };
    memo.insert(n, result.clone());
    result
}

/// Exact division of integer polynomials with monic divisor.
fn exact_div(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dn = den.len() - 1;
    assert!(den[dn].is_one(), "divisor must be monic");
    let mut rem = num.to_vec();
    let qn = num.len() - 1 - dn;
    let mut q = vec![BigInt::zero(); qn + 1];
    for k in (0..=qn).rev() {
        let c = rem[k + dn].clone();
        if !c.is_zero() {
            q[k] = c.clone();
            for i in 0..=dn {
                rem[k + i] -= &c * &den[i];
            }
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact division");
    q
}

/// Element of `Q[x]/(Phi_N)`, possibly unreduced (slots up to `N - 1`).
#[derive(Debug, Clone)]
pub(crate) struct CycPoly {
    pub n: u64,
    pub num: Vec<BigInt>,
    pub den: BigInt,
}

impl CycPoly {
    pub fn zero(n: u64) -> Self {
        CycPoly { n, num: vec![BigInt::zero(); n as usize], den: BigInt::one() }
    }

    pub fn monomial(n: u64, k: u64, coeff: BigRational) -> Self {
        let mut num = vec![BigInt::zero(); n as usize];
        num[(k % n) as usize] = coeff.numer().clone();
        CycPoly { n, num, den: coeff.denom().clone() }
    }

    pub fn from_rational(n: u64, q: &BigRational) -> Self {
        Self::monomial(n, 0, q.clone())
    }

    pub fn is_zero_raw(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }

    /// Re-index into the order-`m` ring (`n | m`): `zeta_n = zeta_m^(m/n)`.
    pub fn raise_order(&self, m: u64) -> Self {
        assert!(m % self.n == 0);
        let f = (m / self.n) as usize;
        let mut num = vec![BigInt::zero(); m as usize];
        for (k, c) in self.num.iter().enumerate() {
            if !c.is_zero() {
                num[k * f] = c.clone();
            }
        }
        CycPoly { n: m, num, den: self.den.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut num: Vec<BigInt> = self.num.iter().map(|c| c * &other.den).collect();
        for (k, c) in other.num.iter().enumerate() {
            if !c.is_zero() {
                num[k] += c * &self.den;
            }
        }
        let mut out = CycPoly { n: self.n, num, den: &self.den * &other.den };
        out.normalize();
        out
    }

    pub fn neg(&self) -> Self {
        CycPoly {
            n: self.n,
            num: self.num.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Cyclic convolution modulo `x^N - 1`; outer loop over the sparser input.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n as usize;
        let (a, b) = {
            let na = self.num.iter().filter(|c| !c.is_zero()).count();
            let nb = other.num.iter().filter(|c| !c.is_zero()).count();
            if na <= nb {
                (self, other)
            } else {
                (other, self)
            }
        };
        let mut num = vec![BigInt::zero(); n];
        for (i, ca) in a.num.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.num.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let k = (i + j) % n;
                num[k] += ca * cb;
            }
        }
        let mut out = CycPoly { n: self.n, num, den: &self.den * &other.den };
        out.normalize();
        out
    }


    pub fn mul_rational(&self, q: &BigRational) -> Self {
        let mut out = CycPoly {
            n: self.n,
            num: self.num.iter().map(|c| c * q.numer()).collect(),
            den: &self.den * q.denom(),
        };
        out.normalize();
        out
    }

    /// Galois twist `zeta -> zeta^t`, `gcd(t, N) = 1`.
    pub fn galois(&self, t: u64) -> Self {
        let n = self.n as usize;
        let mut num = vec![BigInt::zero(); n];
        for (i, c) in self.num.iter().enumerate() {
            if !c.is_zero() {
                num[(i * t as usize) % n] = c.clone();
            }
        }
        CycPoly { n: self.n, num, den: self.den.clone() }
    }

    /// Canonical form: reduce modulo `Phi_N` and remove common content.
    pub fn reduce(&mut self, ctx: &CycCtx) {
        let phi = ctx.phi;
        for k in (phi..self.n as usize).rev() {
            if self.num[k].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut self.num[k], BigInt::zero());
            let row = ctx.row(k);
            for i in 0..phi {
                if !row[i].is_zero() {
                    self.num[i] += &c * &row[i];
                }
            }
        }
        self.normalize();
    }

    pub fn normalize(&mut self) {
        if self.num.iter().all(|c| c.is_zero()) {
            self.den = BigInt::one();
            return;
        }
        let mut g = self.den.clone();
        for c in &self.num {
            if !c.is_zero() {
                g = g.gcd(c);
            }
            if g.is_one() {
                break;
            }
        }
        if !g.is_one() {
            for c in &mut self.num {
                *c /= &g;
            }
            self.den /= &g;
        }
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for c in &mut self.num {
                *c = -c.clone();
            }
        }
    }

    pub fn reduced(&self, ctx: &CycCtx) -> Self {
        let mut r = self.clone();
        r.reduce(ctx);
        r
    }

    pub fn is_zero(&self, ctx: &CycCtx) -> bool {
        self.reduced(ctx).is_zero_raw()
    }


    /// Coefficients of the canonical representative, length `phi(N)`.
    pub fn reduced_coeffs(&self, ctx: &CycCtx) -> Vec<BigRational> {
        let r = self.reduced(ctx);
        (0..ctx.phi)
            .map(|i| BigRational::new(r.num[i].clone(), r.den.clone()))
            .collect()
    }

    /// `Some(q)` when the canonical representative is the constant `q`.
    pub fn try_rational(&self, ctx: &CycCtx) -> Option<BigRational> {
        let r = self.reduced(ctx);
        if r.num[1..ctx.phi].iter().all(|c| c.is_zero()) {
            Some(BigRational::new(r.num[0].clone(), r.den.clone()))
        } else {
            None
        }
    }

    /// Evaluate at `exp(2 pi i w / N)`.
    pub fn eval_complex(&self, w: u64) -> Complex64 {
        let n = self.n;
        let den: f64 = bigint_to_f64(&self.den);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = 2.0 * std::f64::consts::PI * ((k as u64 * w) % n) as f64 / n as f64;
            acc += Complex64::from_polar(bigint_to_f64(c), angle);
        }
        acc / den
    }

    /// Inverse in `Q[x]/(Phi_N)` via the extended Euclidean algorithm.
    pub fn invert(&self, ctx: &CycCtx) -> Option<Self> {
        let r = self.reduced(ctx);
        if r.is_zero_raw() {
            return None;
        }
        let a: Vec<BigRational> = (0..ctx.phi)
            .map(|i| BigRational::new(r.num[i].clone(), r.den.clone()))
            .collect();
        let m: Vec<BigRational> = ctx
            .phi_poly
            .iter()
            .map(|c| BigRational::from(c.clone()))
            .collect();
        let inv = poly_mod_inverse(&a, &m)?;
        // Common denominator.
        let mut den = BigInt::one();
        for c in &inv {
            den = den.lcm(c.denom());
        }
        let mut num = vec![BigInt::zero(); self.n as usize];
        for (i, c) in inv.iter().enumerate() {
            num[i] = c.numer() * (&den / c.denom());
        }
        let mut out = CycPoly { n: self.n, num, den };
        out.normalize();
        Some(out)
    }
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

// --- rational polynomial helpers for inversion ---

fn poly_trim(a: &mut Vec<BigRational>) {
    while a.last().map_or(false, |c| c.is_zero()) {
        a.pop();
    }
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (vec![], r);
    }
    let dq = r.len() - 1 - db;
    let mut q = vec![BigRational::zero(); dq + 1];
    for k in (0..=dq).rev() {
        if r.len() < k + db + 1 {
            continue;
        }
        let c = &r[k + db] / &b[db];
        if c.is_zero() {
            continue;
        }
        q[k] = c.clone();
        for i in 0..=db {
            let t = &c * &b[i];
            r[k + i] -= t;
        }
        poly_trim(&mut r);
    }
    (q, r)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = a.to_vec();
    out.resize(out.len().max(b.len()), BigRational::zero());
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    poly_trim(&mut out);
    out
}

/// Inverse of `a` modulo `m` in `Q[x]`, `None` when `gcd(a, m)` is not
/// constant (zero divisors in a non-field quotient).
fn poly_mod_inverse(a: &[BigRational], m: &[BigRational]) -> Option<Vec<BigRational>> {
    let mut r0 = m.to_vec();
    let mut r1 = a.to_vec();
    poly_trim(&mut r0);
    poly_trim(&mut r1);
    let mut s0: Vec<BigRational> = vec![];
    let mut s1: Vec<BigRational> = vec![BigRational::one()];
    while !r1.is_empty() {
        let (q, r) = poly_divmod(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    if r0.len() != 1 {
        return None; // nontrivial gcd
    }
    let c = r0[0].clone();
    let mut inv: Vec<BigRational> = s0.iter().map(|x| x / &c).collect();
    // Reduce once more mod m for a canonical representative.
    let (_, rem) = poly_divmod(&inv, m);
    inv = rem;
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn cyclotomic_polys_small() {
        assert_eq!(
            cyclotomic_poly(3),
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)]
        );
        assert_eq!(
            cyclotomic_poly(4),
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)]
        );
        // Phi_20 has degree 8.
        assert_eq!(cyclotomic_poly(20).len(), 9);
    }

    #[test]
    fn zeta3_product_is_three() {
        // (1 - zeta_3)(1 - zeta_3^2) = 3
        let c = ctx(3);
        let one = CycPoly::from_rational(3, &rat(1, 1));
        let z = CycPoly::monomial(3, 1, rat(1, 1));
        let z2 = CycPoly::monomial(3, 2, rat(1, 1));
        let prod = one.sub(&z).mul(&one.sub(&z2));
        assert_eq!(prod.try_rational(&c), Some(rat(3, 1)));
    }

    #[test]
    fn inversion_roundtrip() {
        let c = ctx(20);
        let mut x = CycPoly::monomial(20, 3, rat(2, 5));
        x = x.add(&CycPoly::from_rational(20, &rat(1, 1)));
        let inv = x.invert(&c).unwrap();
        let prod = x.mul(&inv);
        assert_eq!(prod.try_rational(&c), Some(rat(1, 1)));
    }

    #[test]
    fn galois_fixes_rationals() {
        let c = ctx(12);
        let x = CycPoly::monomial(12, 4, rat(1, 1)).add(&CycPoly::monomial(12, 8, rat(1, 1)));
        // zeta_3 + zeta_3^2 = -1 is rational, so any Galois twist fixes it.
        let y = x.galois(5);
        assert!(x.sub(&y).is_zero(&c));
        assert_eq!(x.try_rational(&c), Some(rat(-1, 1)));
    }
}
