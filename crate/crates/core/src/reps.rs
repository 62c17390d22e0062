//! Unramified principal-series data, stabilizations, the delta-map calculus,
//! and ordinarity/criticality tests.
//!
//! A rank-`2n` principal series is described by the values `alpha_i` of its
//! inducing characters at `p`. A stabilization is the choice of an ordered
//! `(n, n)`-splitting; its invariant `alpha_theta` is the product of the
//! second-block `alpha`s. The spherical vectors of the two halves are
//! evaluated through the Iwasawa decomposition, which is all the delta-map
//! needs on the unramified locus.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::padic::{PAdicMatrix, PAdicNum};
use crate::scalar::{CycScalar, OrdVal};
use crate::Result;

/// Unramified principal-series parameters: the values `alpha_i = chi_i(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSData {
    p: u64,
    alphas: Vec<CycScalar>,
}

impl PSData {
    pub fn new(p: u64, alphas: Vec<CycScalar>) -> Result<Self> {
        if alphas.iter().any(|a| a.is_zero()) {
            return Err(Error::Domain("all alpha_i must be nonzero".into()));
        }
        Ok(PSData { p, alphas })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha(&self, i: usize) -> &CycScalar {
        &self.alphas[i]
    }

    pub fn alphas(&self) -> &[CycScalar] {
        &self.alphas
    }

    /// Satake parameters `beta_i = alpha_i * p^(n - i) * u` (1-based `i`,
    /// rank `2n`).
    pub fn satake(&self) -> Vec<CycScalar> {
        let r = self.rank();
        assert!(r % 2 == 0, "satake parameters ask for even rank");
        let n = (r / 2) as i64;
        let u = CycScalar::sqrt_p(self.p);
        self.alphas
            .iter()
            .enumerate()
            .map(|(i0, a)| {
                let i = i0 as i64 + 1;
                let q_pow = CycScalar::from_rational(
                    self.p,
                    &num::BigRational::from(num::BigInt::from(self.p as i64)).pow((n - i) as i32),
                );
                a.mul(&q_pow).mul(&u)
            })
            .collect()
    }

    /// `alpha_i * alpha_{2n-i+1} = eta(p)` for all `i`.
    pub fn shalika_compatible(&self, eta_at_p: &CycScalar) -> bool {
        let r = self.rank();
        if r % 2 != 0 {
            return false;
        }
        (0..r / 2).all(|i| self.alphas[i].mul(&self.alphas[r - 1 - i]).eq_exact(eta_at_p))
    }

    /// `beta_i beta_j != eta(p)^{+-1}` for all `1 <= i < j <= n`.
    pub fn regularity_check(&self, eta_at_p: &CycScalar) -> Result<bool> {
        let betas = self.satake();
        let n = self.rank() / 2;
        let eta_inv = eta_at_p.inverse()?;
        for i in 0..n {
            for j in (i + 1)..n {
                let prod = betas[i].mul(&betas[j]);
                if prod.eq_exact(eta_at_p) || prod.eq_exact(&eta_inv) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// An unramified stabilization: a rank-`2n` principal series together with an
/// ordered `(n, n)`-splitting of its inducing characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    base: PSData,
    /// Indices (into `base.alphas`, ascending) forming the second block.
    second_block: Vec<usize>,
}

impl Stabilization {
    pub fn new(base: PSData, second_block: Vec<usize>) -> Result<Self> {
        let r = base.rank();
        if r % 2 != 0 || second_block.len() != r / 2 {
            return Err(Error::Domain("second block must have size n".into()));
        }
        let mut sb = second_block;
        sb.sort_unstable();
        sb.dedup();
        if sb.len() != r / 2 || sb.iter().any(|&i| i >= r) {
            return Err(Error::Domain("second block indices out of range".into()));
        }
        Ok(Stabilization { base, second_block: sb })
    }

    pub fn base(&self) -> &PSData {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.base.p
    }

    pub fn n(&self) -> usize {
        self.base.rank() / 2
    }

    pub fn second_block(&self) -> &[usize] {
        &self.second_block
    }

    pub fn first_block(&self) -> Vec<usize> {
        (0..self.base.rank())
            .filter(|i| !self.second_block.contains(i))
            .collect()
    }

    /// The half principal series carried by the first block.
    pub fn rho1(&self) -> PSData {
        PSData {
            p: self.base.p,
            alphas: self.first_block().iter().map(|&i| self.base.alphas[i].clone()).collect(),
        }
    }

    /// The half principal series carried by the second block.
    pub fn rho2(&self) -> PSData {
        PSData {
            p: self.base.p,
            alphas: self.second_block.iter().map(|&i| self.base.alphas[i].clone()).collect(),
        }
    }

    /// `alpha_theta`: the central-character value of the second block at `p`.
    pub fn alpha_theta(&self) -> CycScalar {
        let mut acc = CycScalar::one(self.base.p);
        for &i in &self.second_block {
            acc = acc.mul(&self.base.alphas[i]);
        }
        acc
    }

    /// Alphas in the stabilized ordering: first block, then second block.
    pub fn ordered_alphas(&self) -> Vec<CycScalar> {
        let mut out: Vec<CycScalar> = self
            .first_block()
            .iter()
            .map(|&i| self.base.alphas[i].clone())
            .collect();
        out.extend(self.second_block.iter().map(|&i| self.base.alphas[i].clone()));
        out
    }

    /// Satake parameters in the stabilized ordering.
    pub fn satake(&self) -> Vec<CycScalar> {
        PSData { p: self.base.p, alphas: self.ordered_alphas() }.satake()
    }

    /// `ord(alpha_theta) <= 0`, i.e. `alpha_theta^{-1}` is integral.
    pub fn integral_check(&self) -> Result<bool> {
        match self.alpha_theta().padic_ord()? {
            OrdVal::Finite(v) => Ok(v <= num::rational::Ratio::from_integer(0)),
            OrdVal::Infinite => Err(Error::Domain("alpha_theta is zero".into())),
        }
    }
}

/// All `binom(2n, n)` unramified stabilizations of a rank-`2n` series.
pub fn enumerate_stabilizations(ps: &PSData) -> Result<Vec<Stabilization>> {
    let r = ps.rank();
    if r % 2 != 0 {
        return Err(Error::Domain("rank must be even".into()));
    }
    let n = r / 2;
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        out.push(Stabilization::new(ps.clone(), subset.clone())?);
        // next n-subset of {0..r-1} in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if subset[i] != i + r - n {
                subset[i] += 1;
                for j in (i + 1)..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Value of the normalized spherical vector of an unramified half series at
/// `g`: with Iwasawa `g = b k`, the product of `alpha_i^(v(b_ii))`.
pub fn spherical_eval(half: &PSData, g: &PAdicMatrix) -> Result<CycScalar> {
    assert_eq!(half.rank(), g.n(), "rank must match the matrix dimension");
    let (b, _k) = g.iwasawa_decompose()?;
    let mut acc = CycScalar::one(half.p);
    for i in 0..g.n() {
        let v = b
            .entry(i, i)
            .valuation()?
            .finite()
            .ok_or_else(|| Error::Domain("singular Iwasawa diagonal".into()))?;
        acc = acc.mul(&half.alphas[i].pow(v)?);
    }
    Ok(acc)
}

/// Locally constant test function with finite coset support: a formal sum of
/// `(A * K_n^(m), coefficient)` pairs. `m = 0` means the full `GL_n(Z_p)`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    p: u64,
    n: usize,
    terms: Vec<(PAdicMatrix, u32, CycScalar)>,
}

impl TestFunction {
    pub fn new(p: u64, n: usize) -> Self {
        TestFunction { p, n, terms: Vec::new() }
    }

    /// Indicator of a single coset `A * K_n^(m)`.
    pub fn coset(a: PAdicMatrix, m: u32) -> Self {
        let p = a.p();
        let n = a.n();
        let coeff = CycScalar::one(p);
        TestFunction { p, n, terms: vec![(a, m, coeff)] }
    }

    /// Indicator of `K_n^(m)` itself.
    pub fn congruence_indicator(p: u64, n: usize, m: u32) -> Self {
        Self::coset(PAdicMatrix::identity(p, n), m)
    }

    pub fn push(&mut self, a: PAdicMatrix, m: u32, coeff: CycScalar) {
        self.terms.push((a, m, coeff));
    }

    pub fn terms(&self) -> &[(PAdicMatrix, u32, CycScalar)] {
        &self.terms
    }

    pub fn eval(&self, u: &PAdicMatrix) -> Result<CycScalar> {
        let mut acc = CycScalar::zero(self.p);
        for (a, m, c) in &self.terms {
            let rel = a.inverse()?.mul(u);
            if rel.in_congruence_subgroup(*m) {
                acc = acc.add(c);
            }
        }
        Ok(acc)
    }

    /// The `(h1, h2)`-translate `u -> f(h1^{-1} u h2)`; `h2` must lie in
    /// `GL_n(Z_p)` so that cosets map to cosets.
    pub fn translate(&self, h1: &PAdicMatrix, h2: &PAdicMatrix) -> Result<Self> {
        if !h2.is_in_gl_zp() {
            return Err(Error::Domain(
                "translation by h2 outside GL_n(Z_p) does not preserve cosets".into(),
            ));
        }
        let h2_inv = h2.inverse()?;
        let terms = self
            .terms
            .iter()
            .map(|(a, m, c)| (h1.mul(a).mul(&h2_inv), *m, c.clone()))
            .collect();
        Ok(TestFunction { p: self.p, n: self.n, terms })
    }

    /// The additive translate `u -> f(u + X)`, valid when every support coset
    /// is stable under adding `X` (i.e. `A^{-1} X` is in `p^max(m,1) M_n(Z_p)`),
    /// in which case the translate equals the function itself.
    pub fn star(&self, x: &PAdicMatrix) -> Result<Self> {
        for (a, m, _) in &self.terms {
            let rel = a.inverse()?.mul(x);
            let lvl = (*m).max(1) as i64;
            let stable = (0..self.n).all(|i| {
                (0..self.n).all(|j| match rel.entry(i, j).valuation() {
                    Ok(crate::padic::Valuation::Finite(v)) => v >= lvl,
                    Ok(crate::padic::Valuation::Infinite) => true,
                    Err(_) => rel.entry(i, j).abs_precision().map_or(false, |ab| ab >= lvl),
                })
            });
            if !stable {
                return Err(Error::Domain(
                    "support coset not stable under the additive translate".into(),
                ));
            }
        }
        Ok(self.clone())
    }
}

/// `delta(f)(g)` evaluated at the point `h = (h1, h2)` of the two induced
/// models: `f(u) * rho1(h1 g1) * rho2(h2 g2 u)` on the open cell, `0` outside.
///
/// The cell data `(g1, g2, u)` is uniquely determined by `g` (it is read off
/// the block decomposition), so values involve no representative choices.
pub fn delta_eval(
    f: &TestFunction,
    stab: &Stabilization,
    g: &PAdicMatrix,
    h: (&PAdicMatrix, &PAdicMatrix),
) -> Result<CycScalar> {
    let n = stab.n();
    assert_eq!(g.n(), 2 * n, "g must be 2n x 2n");
    let p = stab.p();
    let a = g.block((0, 0), n);
    let b = g.block((0, 1), n);
    let c = g.block((1, 0), n);
    let d = g.block((1, 1), n);

    // g = [[g1, *], [0, g2]] w [[1, u], [0, 1]] requires g2 = C invertible,
    // u = C^{-1} D invertible, g1 = B - A C^{-1} D invertible.
    if !is_invertible_or_zero(&c)? {
        return Ok(CycScalar::zero(p));
    }
    let c_inv = c.inverse()?;
    let u = c_inv.mul(&d);
    if !is_invertible_or_zero(&u)? {
        return Ok(CycScalar::zero(p));
    }
    let g1 = b.sub(&a.mul(&u));
    if !is_invertible_or_zero(&g1)? {
        return Ok(CycScalar::zero(p));
    }

    let fu = f.eval(&u)?;
    if fu.is_zero() {
        return Ok(CycScalar::zero(p));
    }
    let v1 = spherical_eval(&stab.rho1(), &h.0.mul(&g1))?;
    let v2 = spherical_eval(&stab.rho2(), &h.1.mul(&c).mul(&u))?;
    Ok(fu.mul(&v1).mul(&v2))
}

/// Distinguish "exactly singular" from "singular at precision": the former is
/// a structural zero of the delta map, the latter an error.
fn is_invertible_or_zero(m: &PAdicMatrix) -> Result<bool> {
    let det = m.det();
    if det.is_exact_zero() {
        return Ok(false);
    }
    match det.valuation() {
        Ok(_) => Ok(true),
        Err(_) => Err(Error::PrecisionExhausted(
            "cell membership undecidable at working precision".into(),
        )),
    }
}

/// `[[1, X], [0, 1]]` in `G_{2n}`.
pub fn unipotent_upper(x: &PAdicMatrix) -> PAdicMatrix {
    let n = x.n();
    let p = x.p();
    let id = PAdicMatrix::identity(p, n);
    let zero = PAdicMatrix::from_fn(p, n, |_, _| PAdicNum::zero(p));
    PAdicMatrix::from_blocks(&id, x, &zero, &id)
}

/// `diag(h1, h2)` in `G_{2n}`.
pub fn block_diag(h1: &PAdicMatrix, h2: &PAdicMatrix) -> PAdicMatrix {
    let n = h1.n();
    let p = h1.p();
    let zero = PAdicMatrix::from_fn(p, n, |_, _| PAdicNum::zero(p));
    PAdicMatrix::from_blocks(h1, &zero, &zero, h2)
}

/// The scaling matrix `[[p 1_n, (p-1) 1_n], [0, 1_n]]`.
pub fn alpha_scaling_matrix(p: u64, n: usize, prec: u32) -> PAdicMatrix {
    let id = PAdicMatrix::identity(p, n);
    let p_id = id.scalar_mul(&PAdicNum::p_power(p, 1, prec));
    let pm1 = id.scalar_mul(&PAdicNum::from_i64(p, p as i64 - 1, prec));
    let zero = PAdicMatrix::from_fn(p, n, |_, _| PAdicNum::zero(p));
    PAdicMatrix::from_blocks(&p_id, &pm1, &zero, &id)
}

/// One pointwise instance of the `G_n x GL_n(Z_p)`-equivariance of delta:
/// `delta((h1, h2) f)(g) = delta(f)(g diag(h1, h2))`, both evaluated at `pt`.
pub fn check_equivariance(
    f: &TestFunction,
    stab: &Stabilization,
    h1: &PAdicMatrix,
    h2: &PAdicMatrix,
    g: &PAdicMatrix,
    pt: (&PAdicMatrix, &PAdicMatrix),
) -> Result<bool> {
    let lhs = delta_eval(&f.translate(h1, h2)?, stab, g, pt)?;
    let rhs = delta_eval(f, stab, &g.mul(&block_diag(h1, h2)), pt)?;
    Ok(lhs.eq_exact(&rhs))
}

/// One pointwise instance of the additive equivariance: for `X` stabilizing
/// the support of `f`, `delta(X * f) = [[1, X], [0, 1]] delta(f)`.
pub fn check_additive_equivariance(
    f: &TestFunction,
    stab: &Stabilization,
    x: &PAdicMatrix,
    g: &PAdicMatrix,
    pt: (&PAdicMatrix, &PAdicMatrix),
) -> Result<bool> {
    let starred = f.star(x)?;
    let lhs = delta_eval(&starred, stab, g, pt)?;
    let rhs = delta_eval(f, stab, &g.mul(&unipotent_upper(x)), pt)?;
    Ok(lhs.eq_exact(&rhs))
}

/// One pointwise instance of the alpha-scaling identity
/// `A delta(1_{K^(r)}) = alpha_theta delta(1_{K^(r+1)})`, `r >= 1`.
pub fn check_alpha_scaling(
    stab: &Stabilization,
    r: u32,
    g: &PAdicMatrix,
    pt: (&PAdicMatrix, &PAdicMatrix),
    prec: u32,
) -> Result<bool> {
    assert!(r >= 1);
    let n = stab.n();
    let p = stab.p();
    let a = alpha_scaling_matrix(p, n, prec);
    let f_r = TestFunction::congruence_indicator(p, n, r);
    let f_r1 = TestFunction::congruence_indicator(p, n, r + 1);
    let lhs = delta_eval(&f_r, stab, &g.mul(&a), pt)?;
    let rhs = stab.alpha_theta().mul(&delta_eval(&f_r1, stab, g, pt)?);
    Ok(lhs.eq_exact(&rhs))
}

/// Highest-weight data for the algebraic coefficient representation: one
/// embedding, `mu_1 >= ... >= mu_2n`, with purity weight `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightData {
    n: usize,
    mu: Vec<i64>,
    w: i64,
}

impl WeightData {
    pub fn new(mu: Vec<i64>, w: i64) -> Result<Self> {
        if mu.len() % 2 != 0 || mu.is_empty() {
            return Err(Error::Domain("weight must have even length 2n".into()));
        }
        if mu.windows(2).any(|ab| ab[0] < ab[1]) {
            return Err(Error::Domain("weight must be dominant (weakly decreasing)".into()));
        }
        Ok(WeightData { n: mu.len() / 2, mu, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> &[i64] {
        &self.mu
    }

    pub fn w(&self) -> i64 {
        self.w
    }

    /// `e_al = mu_1 + ... + mu_n` (single embedding).
    pub fn e_al(&self) -> i64 {
        self.mu[..self.n].iter().sum()
    }

    /// `mu_i + mu_{2n-i+1} = w` for all `i`.
    pub fn purity_check(&self) -> bool {
        (0..self.n).all(|i| self.mu[i] + self.mu[2 * self.n - 1 - i] == self.w)
    }

    /// The integers `s` with `-mu_n <= s <= -mu_{n+1}`; critical points of
    /// the L-function are the half-integers `s + 1/2` for `s` in this range.
    pub fn critical_points(&self) -> std::ops::RangeInclusive<i64> {
        (-self.mu[self.n - 1])..=(-self.mu[self.n])
    }
}

/// Weak ordinarity: `ord(alpha_theta) + e_al <= 0`.
pub fn weakly_ordinary(stab: &Stabilization, w: &WeightData) -> Result<bool> {
    match stab.alpha_theta().padic_ord()? {
        OrdVal::Finite(v) => Ok(v + num::rational::Ratio::from_integer(w.e_al())
            <= num::rational::Ratio::from_integer(0)),
        OrdVal::Infinite => Err(Error::Domain("alpha_theta is zero".into())),
    }
}

/// Result of lifting a rank-2 datum to its symmetric cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymCubeLift {
    pub ps: PSData,
    pub weights: WeightData,
    /// Sanity flag: `ord(alpha * alpha') = k - 1` (classical Hecke-polynomial
    /// normalization). A mismatch is reported, not rejected.
    pub hecke_ord_ok: bool,
}

/// Symmetric-cube lift: from `(alpha', alpha) = (chi_1(p), chi_2(p))` of a
/// rank-2 series and the weight `k`, build the rank-4 datum
/// `(alpha'^3, alpha'^2 alpha, alpha' alpha^2, alpha^3)` with weights
/// `(0, -(k-2), -2(k-2), -3(k-2))`.
pub fn sym_cube_lift(
    alpha: &CycScalar,
    alpha_prime: &CycScalar,
    k: i64,
    p: u64,
) -> Result<SymCubeLift> {
    if k < 2 {
        return Err(Error::Domain("weight k must be >= 2".into()));
    }
    let a = alpha;
    let b = alpha_prime;
    let alphas = vec![
        b.pow(3)?,
        b.pow(2)?.mul(a),
        b.mul(&a.pow(2)?),
        a.pow(3)?,
    ];
    let ps = PSData::new(p, alphas)?;
    let d = k - 2;
    let weights = WeightData::new(vec![0, -d, -2 * d, -3 * d], -3 * d)?;
    let hecke_ord_ok = match a.mul(b).padic_ord()? {
        OrdVal::Finite(v) => v == num::rational::Ratio::from_integer(k - 1),
        OrdVal::Infinite => false,
    };
    Ok(SymCubeLift { ps, weights, hecke_ord_ok })
}
