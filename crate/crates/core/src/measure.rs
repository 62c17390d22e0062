//! Finite-level p-adic distributions on `(Z/p^m)^*`, built by Fourier
//! inversion from interpolation moments, with boundedness diagnostics and the
//! resulting one-variable p-adic L-function.
//!
//! Characters here are the finite-order characters of the Galois group of the
//! maximal abelian extension unramified outside `p` and infinity, restricted
//! to the `F = Q` desk-scale case: finite quotients are `(Z/p^m)^*`, and the
//! value at the uniformizer direction is pinned to `chi(p) = 1` (the
//! ideles-versus-Galois splitting every table producer and consumer must
//! agree on).

use num::rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::chars::{dlog_table, MultChar};
use crate::error::Error;
use crate::euler::{interpolation_rhs, LValueProvider, LocalDatum};
use crate::padic::{PAdicNum, Valuation};
use crate::reps::Stabilization;
use crate::scalar::{CycScalar, HalfInt, LocalRingElem, OrdVal};
use crate::Result;

/// Moments of a level-`m` distribution: one entry per character of
/// `(Z/p^m)^*` (each stored in its primitive form, with `chi(p) = 1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub p: u64,
    pub m: u32,
    pub moments: Vec<(MultChar, CycScalar)>,
}

impl MomentTable {
    /// The moment of a character, matched on its unit-part indices.
    pub fn moment(&self, chi: &MultChar) -> Option<&CycScalar> {
        self.moments
            .iter()
            .find(|(c, _)| {
                c.conductor_exp() == chi.conductor_exp()
                    && c.teich_idx() == chi.teich_idx()
                    && c.wild_idx() == chi.wild_idx()
            })
            .map(|(_, v)| v)
    }

    pub fn is_complete(&self) -> bool {
        let expected = MultChar::all_of_level(self.p, self.m);
        expected.len() == self.moments.len()
            && expected.iter().all(|c| self.moment(c).is_some())
    }
}

/// Masses of a level-`m` measure on `(Z/p^m)^*`, indexed by the unit
/// residues in increasing order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteLevelMeasure {
    pub p: u64,
    pub m: u32,
    pub masses: Vec<CycScalar>,
}

impl FiniteLevelMeasure {
    pub fn units(&self) -> Vec<u64> {
        dlog_table(self.p, self.m).units()
    }

    pub fn mass_at(&self, a: u64) -> Result<&CycScalar> {
        let units = self.units();
        let idx = units
            .iter()
            .position(|&u| u == a % self.p.pow(self.m))
            .ok_or_else(|| Error::Domain(format!("{a} is not a unit at level {}", self.m)))?;
        Ok(&self.masses[idx])
    }
}

/// Compatible masses at levels `1..=M`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureTower {
    pub p: u64,
    pub levels: Vec<FiniteLevelMeasure>,
}

/// Moments from the interpolation right-hand side: one entry for every
/// character of `(Z/p^m)^*` (with `chi(p) = 1`), each fed through the
/// assembled closed form with the supplied L-value provider.
pub fn moments_from_interpolation(
    stab: &Stabilization,
    chi_prime: &MultChar,
    s: HalfInt,
    m: u32,
    provider: &dyn LValueProvider,
) -> Result<MomentTable> {
    let p = stab.p();
    let mut moments = Vec::new();
    for chi in MultChar::all_of_level(p, m) {
        let datum = LocalDatum {
            stab: stab.clone(),
            chi_prime: chi_prime.clone(),
            chi: chi.clone(),
        };
        let value = interpolation_rhs(&[datum], s, provider)?;
        moments.push((chi, value));
    }
    Ok(MomentTable { p, m, moments })
}

/// Finite Fourier inversion: `mass(a) = phi(p^m)^{-1} sum_chi chi(a)^{-1}
/// moment(chi)`, exactly.
pub fn fourier_invert(table: &MomentTable) -> Result<FiniteLevelMeasure> {
    if !table.is_complete() {
        return Err(Error::Domain("moment table is not complete".into()));
    }
    let p = table.p;
    let m = table.m;
    let dlog = dlog_table(p, m);
    let units = dlog.units();
    let phi = units.len() as i64;
    let modulus = p.pow(m);
    let inv_phi = CycScalar::from_ratio_i64(p, 1, phi);
    let mut masses = Vec::with_capacity(units.len());
    for &a in &units {
        let a_inv = mod_inverse_u64(a, modulus);
        let mut acc = CycScalar::zero(p);
        for (chi, v) in &table.moments {
            // chi(a)^{-1} = chi(a^{-1})
            acc = acc.add(&chi.unit_value(a_inv)?.mul(v));
        }
        masses.push(acc.mul(&inv_phi));
    }
    Ok(FiniteLevelMeasure { p, m, masses })
}

/// Moments of a finite-level measure: `moment(chi) = sum_a chi(a) mass(a)`.
pub fn moments_of(measure: &FiniteLevelMeasure) -> Result<MomentTable> {
    let p = measure.p;
    let units = measure.units();
    let mut moments = Vec::new();
    for chi in MultChar::all_of_level(p, measure.m) {
        let mut acc = CycScalar::zero(p);
        for (idx, &a) in units.iter().enumerate() {
            acc = acc.add(&chi.unit_value(a)?.mul(&measure.masses[idx]));
        }
        moments.push((chi, acc));
    }
    Ok(MomentTable { p, m: measure.m, moments })
}

fn mod_inverse_u64(a: u64, m: u64) -> u64 {
    // m is a prime power at desk scale; brute force is fine.
    (1..m).find(|&x| a as u128 * x as u128 % m as u128 == 1).expect("unit")
}

/// Build a tower from interpolation moments at levels `1..=max_level`.
/// Moments are intrinsic to each character, so the tower is compatible by
/// construction; `compat_check` verifies exactly that.
pub fn tower_from_interpolation(
    stab: &Stabilization,
    chi_prime: &MultChar,
    s: HalfInt,
    max_level: u32,
    provider: &dyn LValueProvider,
) -> Result<MeasureTower> {
    let p = stab.p();
    let mut levels = Vec::new();
    for m in 1..=max_level {
        let table = moments_from_interpolation(stab, chi_prime, s, m, provider)?;
        levels.push(fourier_invert(&table)?);
    }
    Ok(MeasureTower { p, levels })
}

/// Distribution property: the level-`(m+1)` masses push forward to the
/// level-`m` masses, exactly, for every pair of consecutive levels.
pub fn compat_check(tower: &MeasureTower) -> Result<bool> {
    let p = tower.p;
    for w in tower.levels.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if hi.m != lo.m + 1 {
            return Err(Error::Tower(format!(
                "non-consecutive levels {} and {}",
                lo.m, hi.m
            )));
        }
        let lo_units = lo.units();
        let hi_units = hi.units();
        let modulus = p.pow(lo.m);
        for (i, &a) in lo_units.iter().enumerate() {
            let mut acc = CycScalar::zero(p);
            for (j, &b) in hi_units.iter().enumerate() {
                if b % modulus == a {
                    acc = acc.add(&hi.masses[j]);
                }
            }
            if !acc.eq_exact(&lo.masses[i]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per-level valuation floors of the masses and a least-squares slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundednessDiagnostic {
    /// `(m, o_m)` with `o_m = min_a ord(mass_m(a))`; `None` marks an exactly
    /// zero level.
    pub per_level: Vec<(u32, Option<(i64, i64)>)>,
    /// Minimum of the finite `o_m`.
    pub floor: Option<(i64, i64)>,
    /// Least-squares slope of `o_m` against `m` (numerator, denominator).
    pub slope: Option<(i64, i64)>,
}

impl BoundednessDiagnostic {
    pub fn floor_ratio(&self) -> Option<Ratio<i64>> {
        self.floor.map(|(n, d)| Ratio::new(n, d))
    }

    pub fn slope_ratio(&self) -> Option<Ratio<i64>> {
        self.slope.map(|(n, d)| Ratio::new(n, d))
    }
}

/// Compute `o_m = min_a ord(mass_m(a))` per level plus the least-squares
/// slope of the finite values.
pub fn boundedness_diagnostic(tower: &MeasureTower) -> Result<BoundednessDiagnostic> {
    if tower.levels.is_empty() {
        return Err(Error::Tower("empty tower".into()));
    }
    let mut per_level = Vec::new();
    let mut pts: Vec<(Ratio<i64>, Ratio<i64>)> = Vec::new();
    for lvl in &tower.levels {
        let mut level_min: Option<Ratio<i64>> = None;
        for mass in &lvl.masses {
            match mass.padic_ord()? {
                OrdVal::Finite(v) => {
                    level_min = Some(match level_min {
                        Some(b) => b.min(v),
                        None => v,
                    });
                }
                OrdVal::Infinite => {}
            }
        }
        per_level.push((lvl.m, level_min.map(|r| (*r.numer(), *r.denom()))));
        if let Some(v) = level_min {
            pts.push((Ratio::from_integer(lvl.m as i64), v));
        }
    }
    let floor = pts.iter().map(|(_, v)| *v).min();
    let slope = if pts.len() >= 2 {
        let k = Ratio::from_integer(pts.len() as i64);
        let mx: Ratio<i64> = pts.iter().map(|(x, _)| *x).sum::<Ratio<i64>>() / k;
        let my: Ratio<i64> = pts.iter().map(|(_, y)| *y).sum::<Ratio<i64>>() / k;
        let num: Ratio<i64> = pts.iter().map(|(x, y)| (*x - mx) * (*y - my)).sum();
        let den: Ratio<i64> = pts.iter().map(|(x, _)| (*x - mx) * (*x - mx)).sum();
        Some(num / den)
    } else {
        None
    };
    Ok(BoundednessDiagnostic {
        per_level,
        floor: floor.map(|r| (*r.numer(), *r.denom())),
        slope: slope.map(|r| (*r.numer(), *r.denom())),
    })
}

// ---------------------------------------------------------------------------
// p-adic analysis: log, exp, <gamma>^x, L_p
// ---------------------------------------------------------------------------

fn domain_val(p: u64) -> i64 {
    if p == 2 {
        2
    } else {
        1
    }
}

/// Truncated p-adic logarithm on `1 + pZ_p` (`1 + 4Z_2` for `p = 2`).
pub fn log_p(x: &PAdicNum) -> Result<PAdicNum> {
    let p = x.p();
    let one = PAdicNum::one(p);
    let y = x.sub(&one);
    if y.is_exact_zero() {
        return Ok(PAdicNum::zero(p));
    }
    let v = match y.valuation() {
        Ok(Valuation::Finite(v)) => v,
        Ok(Valuation::Infinite) => return Ok(PAdicNum::zero(p)),
        Err(_) => {
            // indistinguishable from 1 at working precision
            return Ok(PAdicNum::zero(p));
        }
    };
    if v < domain_val(p) {
        return Err(Error::Domain(format!(
            "log domain: need x = 1 mod p^{}, got valuation {v}",
            domain_val(p)
        )));
    }
    let target = y.precision() as i64 + v;
    let k_max = (2 * target + 10) as u64;
    let mut acc = PAdicNum::zero(p);
    let mut power = y.clone(); // y^k
    let mut k = 1u64;
    loop {
        let term = power.div(&PAdicNum::from_i64(p, k as i64, y.precision() + 8))?;
        acc = if k % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        k += 1;
        if k as i64 * v - (k as f64).log(p as f64).ceil() as i64 > target || k > k_max {
            break;
        }
        power = power.mul(&y);
    }
    Ok(acc)
}

/// Truncated p-adic exponential on `pZ_p` (`4Z_2` for `p = 2`).
pub fn exp_p(y: &PAdicNum) -> Result<PAdicNum> {
    let p = y.p();
    if y.is_exact_zero() {
        return Ok(PAdicNum::one(p));
    }
    let v = match y.valuation() {
        Ok(Valuation::Finite(v)) => v,
        Ok(Valuation::Infinite) => return Ok(PAdicNum::one(p)),
        Err(_) => return Ok(PAdicNum::one(p)),
    };
    if v < domain_val(p) {
        return Err(Error::Domain(format!(
            "exp domain: need valuation >= {}, got {v}",
            domain_val(p)
        )));
    }
    let target = y.precision() as i64 + v;
    let mut acc = PAdicNum::one(p);
    let mut term = PAdicNum::one(p); // y^k / k!
    let mut k = 1i64;
    loop {
        term = term.mul(y).div(&PAdicNum::from_i64(p, k, y.precision() + 8))?;
        acc = acc.add(&term);
        // ord(term) >= k v - (k - 1)/(p - 1) grows linearly
        let ord_floor = k * v - (k - 1) / (p as i64 - 1).max(1);
        k += 1;
        if ord_floor > target || k > 4 * target + 20 {
            break;
        }
    }
    Ok(acc)
}

/// `<a>^x = exp_p(x log_p(<a>))` where `<a>` is the projection of the unit
/// `a` to `1 + pZ_p` (to `1 + 4Z_2` for `p = 2`).
pub fn gamma_bracket(a: &PAdicNum, x: &PAdicNum) -> Result<PAdicNum> {
    let proj = a.div(&a.teichmuller()?)?;
    let lg = log_p(&proj)?;
    exp_p(&lg.mul(x))
}

/// An `L_p` sample: the value together with the guaranteed error ordinal
/// (the true integral differs by something of valuation at least `err_ord`).
#[derive(Debug, Clone)]
pub struct LpValue {
    pub value: LocalRingElem,
    pub err_ord: Ratio<i64>,
}

/// `L_p(x) = int <gamma>^x d mu`, evaluated as the Riemann sum at the
/// deepest tower level, with the error bound `p^{-(M - 1 - ceil(-o))}`
/// attached (`o` = boundedness floor).
///
/// Refuses towers that fail the compatibility check or whose diagnostic
/// slope indicates unboundedness (slope below `-1/4`).
pub fn lp_eval(tower: &MeasureTower, x: &PAdicNum, prec: u32) -> Result<LpValue> {
    lp_eval_at(tower, x, prec, None)
}

/// Like [`lp_eval`] but embedding into the ring of a prescribed wild level
/// (so that samples from towers of different depths can be compared).
pub fn lp_eval_at(
    tower: &MeasureTower,
    x: &PAdicNum,
    prec: u32,
    wild_level: Option<u32>,
) -> Result<LpValue> {
    if tower.levels.is_empty() {
        return Err(Error::Tower("empty tower".into()));
    }
    if !compat_check(tower)? {
        return Err(Error::Tower("tower fails the distribution property".into()));
    }
    let diag = boundedness_diagnostic(tower)?;
    if let Some(slope) = diag.slope_ratio() {
        if slope < Ratio::new(-1, 4) {
            return Err(Error::Tower(format!(
                "unbounded tower: slope {} below -1/4 (floor {:?})",
                slope, diag.floor
            )));
        }
    }
    let p = tower.p;
    let deepest = tower.levels.last().expect("nonempty");
    let m = deepest.m;
    let units = deepest.units();

    // Embed all masses into one ring: wild level large enough for every mass.
    let mut b_max = 0u32;
    for mass in &deepest.masses {
        let mut n = mass.order();
        let mut b = 0;
        while n % p == 0 {
            n /= p;
            b += 1;
        }
        b_max = b_max.max(b);
    }
    let b_target = wild_level.unwrap_or(b_max).max(b_max);
    let mut acc: Option<LocalRingElem> = None;
    for (idx, &a) in units.iter().enumerate() {
        let a_num = PAdicNum::from_i64(p, a as i64, prec + 8);
        let weight = gamma_bracket(&a_num, x)?;
        let local = deepest.masses[idx]
            .to_local_at(b_target, prec)?
            .scale_padic(&weight)?;
        acc = Some(match acc {
            Some(v) => v.add(&local)?,
            None => local,
        });
    }
    let floor = diag.floor_ratio().unwrap_or_else(|| Ratio::from_integer(0));
    let neg_floor = if floor < Ratio::from_integer(0) { -floor } else { Ratio::from_integer(0) };
    let ceil_neg = neg_floor.ceil().to_integer();
    let err_ord = Ratio::from_integer(m as i64 - 1 - ceil_neg);
    Ok(LpValue { value: acc.expect("nonempty units"), err_ord })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::{gauss_sum, AddChar};
    use crate::euler::UnitProvider;
    use crate::reps::PSData;
    use crate::zeta::infer_eta;

    fn c(p: u64, x: i64) -> CycScalar {
        CycScalar::from_i64(p, x)
    }

    fn cr(p: u64, a: i64, b: i64) -> CycScalar {
        CycScalar::from_ratio_i64(p, a, b)
    }

    fn stab_n1(p: u64, a1: CycScalar, a2: CycScalar) -> Stabilization {
        let ps = PSData::new(p, vec![a1, a2]).unwrap();
        Stabilization::new(ps, vec![1]).unwrap()
    }

    fn point_mass_table(p: u64, m: u32, b: u64) -> MomentTable {
        let moments = MultChar::all_of_level(p, m)
            .into_iter()
            .map(|chi| {
                let v = chi.unit_value(b).unwrap();
                (chi, v)
            })
            .collect();
        MomentTable { p, m, moments }
    }

    #[test]
    fn fourier_orthogonality_examples() {
        let p = 5;
        // moments = indicator of the trivial character -> uniform masses
        let m = 2;
        let moments = MultChar::all_of_level(p, m)
            .into_iter()
            .map(|chi| {
                let v = if chi.conductor_exp() == 0 { c(p, 1) } else { c(p, 0) };
                (chi, v)
            })
            .collect();
        let table = MomentTable { p, m, moments };
        let meas = fourier_invert(&table).unwrap();
        let phi = meas.masses.len() as i64;
        assert!(meas.masses.iter().all(|v| v.eq_exact(&cr(p, 1, phi))));

        // moments(chi) = chi(b) -> point mass at b
        let table = point_mass_table(p, 2, 7);
        let meas = fourier_invert(&table).unwrap();
        for (idx, &a) in meas.units().iter().enumerate() {
            let expect = if a == 7 { c(p, 1) } else { c(p, 0) };
            assert!(meas.masses[idx].eq_exact(&expect), "a = {a}");
        }
    }

    #[test]
    fn fourier_roundtrip_exact() {
        let p = 5;
        let stab = stab_n1(p, c(p, 2), cr(p, 1, 2));
        for m in 1..=3 {
            let table = moments_from_interpolation(
                &stab,
                &MultChar::trivial(p),
                HalfInt::int(0),
                m,
                &UnitProvider,
            )
            .unwrap();
            let meas = fourier_invert(&table).unwrap();
            let back = moments_of(&meas).unwrap();
            for (chi, v) in &table.moments {
                assert!(back.moment(chi).unwrap().eq_exact(v), "m = {m}");
            }
        }
    }

    #[test]
    fn compat_check_provider_towers_and_corruption() {
        let p = 5;
        let stab = stab_n1(p, c(p, 2), cr(p, 1, 2));
        let mut tower = tower_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            3,
            &UnitProvider,
        )
        .unwrap();
        assert!(compat_check(&tower).unwrap());
        // single-level tower: vacuously true
        let single = MeasureTower { p, levels: vec![tower.levels[0].clone()] };
        assert!(compat_check(&single).unwrap());
        // corruption is detected
        tower.levels[1].masses[0] = tower.levels[1].masses[0].add(&c(p, 1));
        assert!(!compat_check(&tower).unwrap());
    }

    /// Independent derivation of the expected masses for the provider-free
    /// pipeline at n = 1, s = 0: the moment of a primitive character of
    /// conductor p^c is tau(chi, psi^{-1}) alpha^{-c}, the trivial moment is
    /// (1 - alpha_1)(1 - alpha_2^{-1}); masses follow by explicit Fourier
    /// inversion. Assembled here from Gauss sums directly, not through the
    /// euler/measure modules.
    fn derived_masses(stab: &Stabilization, m: u32) -> Vec<CycScalar> {
        let p = stab.p();
        let alpha = stab.alpha_theta();
        let alpha1 = stab.rho1().alphas()[0].clone();
        let triv_moment = CycScalar::one(p)
            .sub(&alpha1)
            .mul(&CycScalar::one(p).sub(&alpha.inverse().unwrap()));
        let modulus = p.pow(m);
        // chi -> tau(chi, psi^{-1}) alpha^{-c}, hoisted out of the mass loop
        let weighted: Vec<(MultChar, CycScalar)> = MultChar::all_of_level(p, m)
            .into_iter()
            .filter(|chi| chi.conductor_exp() > 0)
            .map(|chi| {
                let cexp = chi.conductor_exp() as i64;
                let tau = gauss_sum(&chi, &AddChar::psi_inv(p)).unwrap();
                let w = tau.mul(&alpha.pow(-cexp).unwrap());
                (chi, w)
            })
            .collect();
        let phi = (modulus / p * (p - 1)) as i64;
        dlog_table(p, m)
            .units()
            .into_iter()
            .map(|a| {
                let a_inv = mod_inverse_u64(a, modulus);
                let mut acc = triv_moment.clone();
                for (chi, w) in &weighted {
                    acc = acc.add(&chi.unit_value(a_inv).unwrap().mul(w));
                }
                acc.mul(&cr(p, 1, phi))
            })
            .collect()
    }

    #[test]
    fn pipeline_masses_match_independent_derivation() {
        let p = 5;
        for (a1, a2) in [(c(p, 1), c(p, 1)), (c(p, 2), cr(p, 1, 2)), (cr(p, 1, 5), c(p, 5))] {
            let stab = stab_n1(p, a1, a2);
            let tower = tower_from_interpolation(
                &stab,
                &MultChar::trivial(p),
                HalfInt::int(0),
                3,
                &UnitProvider,
            )
            .unwrap();
            for lvl in &tower.levels {
                let expect = derived_masses(&stab, lvl.m);
                for (idx, e) in expect.iter().enumerate() {
                    assert!(lvl.masses[idx].eq_exact(e), "m = {}, idx = {idx}", lvl.m);
                }
            }
        }
    }

    #[test]
    fn boundedness_floors_match_derived_valuations() {
        let p = 5;
        // ord(alpha) = 0 run: the derived floor is 1/4 - (m - 1): the tame
        // level-one Gauss block 4 zeta_5^a + 1 has valuation 1/4, and the
        // uniform normalizer phi(p^m) contributes -(m-1).
        let stab = stab_n1(p, c(p, 1), c(p, 1));
        let tower = tower_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            3,
            &UnitProvider,
        )
        .unwrap();
        let diag = boundedness_diagnostic(&tower).unwrap();
        let expect: Vec<Ratio<i64>> = (1..=3)
            .map(|m| Ratio::new(1, 4) - Ratio::from_integer(m - 1))
            .collect();
        for ((_, got), want) in diag.per_level.iter().zip(&expect) {
            assert_eq!(got.map(|(n, d)| Ratio::new(n, d)), Some(*want));
        }
        assert_eq!(diag.floor_ratio(), Some(Ratio::new(1, 4) - Ratio::from_integer(2)));
        assert_eq!(diag.slope_ratio(), Some(Ratio::from_integer(-1)));

        // ord(alpha) = 1 run: the trivial moment (1 - alpha_1)(1 - alpha^{-1})
        // = (4/5)^2 has valuation -2 and dominates every level:
        // o_m = -2 - (m - 1) = -(m + 1).
        let stab = stab_n1(p, cr(p, 1, 5), c(p, 5));
        let tower = tower_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            3,
            &UnitProvider,
        )
        .unwrap();
        let diag = boundedness_diagnostic(&tower).unwrap();
        for (m, got) in &diag.per_level {
            assert_eq!(
                got.map(|(n, d)| Ratio::new(n, d)),
                Some(Ratio::from_integer(-(*m as i64) - 1)),
                "m = {m}"
            );
        }
        assert_eq!(diag.slope_ratio(), Some(Ratio::from_integer(-1)));
        assert!(diag.slope_ratio().unwrap() <= Ratio::new(-3, 4)); // -(n - 1/4), n = 1
    }

    #[test]
    fn log_exp_roundtrip() {
        let p = 5;
        let prec = 12;
        assert!(log_p(&PAdicNum::one(p)).unwrap().is_zero_at_precision()
            || log_p(&PAdicNum::one(p)).unwrap().is_exact_zero());
        let x = PAdicNum::from_i64(p, 1 + 5, prec);
        let lg = log_p(&x).unwrap();
        let back = exp_p(&lg).unwrap();
        assert!(back.eq_to_precision(&x));
        // homomorphism: log((1+p)^2) = 2 log(1+p)
        let x2 = x.mul(&x);
        let lg2 = log_p(&x2).unwrap();
        assert!(lg2.eq_to_precision(&lg.add(&lg)));
    }

    #[test]
    fn gamma_bracket_examples() {
        let p = 5;
        let prec = 12;
        let a = PAdicNum::from_i64(p, 7, prec);
        let zero = PAdicNum::zero(p);
        let one = PAdicNum::one(p);
        // x = 0 -> 1
        assert!(gamma_bracket(&a, &zero).unwrap().eq_to_precision(&one));
        // x = 1 -> <a>
        let proj = a.div(&a.teichmuller().unwrap()).unwrap();
        assert!(gamma_bracket(&a, &one).unwrap().eq_to_precision(&proj));
        // x = 2 -> <a>^2
        let two = PAdicNum::from_i64(p, 2, prec);
        assert!(gamma_bracket(&a, &two)
            .unwrap()
            .eq_to_precision(&proj.mul(&proj)));
        // additivity in x
        let x1 = PAdicNum::from_i64(p, 3, prec);
        let x2 = PAdicNum::from_i64(p, 11, prec);
        let lhs = gamma_bracket(&a, &x1.add(&x2)).unwrap();
        let rhs = gamma_bracket(&a, &x1)
            .unwrap()
            .mul(&gamma_bracket(&a, &x2).unwrap());
        assert!(lhs.eq_to_precision(&rhs));
    }

    fn point_mass_tower(p: u64, levels: u32, b: u64) -> MeasureTower {
        let mut out = Vec::new();
        for m in 1..=levels {
            out.push(fourier_invert(&point_mass_table(p, m, b)).unwrap());
        }
        MeasureTower { p, levels: out }
    }

    #[test]
    fn lp_eval_point_masses() {
        let p = 5;
        let prec = 16;
        // point mass at 1: integral of <gamma>^x is 1 for all x
        let tower = point_mass_tower(p, 3, 1);
        let x = PAdicNum::from_i64(p, 9, prec);
        let v = lp_eval(&tower, &x, prec).unwrap();
        let (_, b, vprec, _) = v.value.params();
        let one = CycScalar::one(p).to_local_at(b, vprec).unwrap();
        let diff = v.value.sub(&one).unwrap();
        assert!(diff.is_zero_at_precision() || diff.ord().unwrap().finite().unwrap() >= v.err_ord);

        // point mass at 1 + p: <1+p>^x, compared against the direct power
        let tower = point_mass_tower(p, 3, 1 + 5);
        let x = PAdicNum::from_i64(p, 2, prec);
        let v = lp_eval(&tower, &x, prec).unwrap();
        let direct = gamma_bracket(&PAdicNum::from_i64(p, 6, prec), &x).unwrap();
        let (_, b, vprec, _) = v.value.params();
        let direct_local = CycScalar::one(p)
            .to_local_at(b, vprec)
            .unwrap()
            .scale_padic(&direct)
            .unwrap();
        let diff = v.value.sub(&direct_local).unwrap();
        if !diff.is_zero_at_precision() {
            assert!(diff.ord().unwrap().finite().unwrap() >= v.err_ord);
        }
    }

    #[test]
    fn lp_eval_level_independence() {
        let p = 5;
        let prec = 16;
        let tower = point_mass_tower(p, 3, 1 + 5);
        let x = PAdicNum::from_i64(p, 3, prec);
        let full = lp_eval(&tower, &x, prec).unwrap();
        let (_, b, _, _) = full.value.params();
        let shallow = MeasureTower { p, levels: tower.levels[..2].to_vec() };
        let partial = lp_eval_at(&shallow, &x, prec, Some(b)).unwrap();
        let diff = full.value.sub(&partial.value).unwrap();
        if !diff.is_zero_at_precision() {
            assert!(
                diff.ord().unwrap().finite().unwrap() >= partial.err_ord,
                "difference below the attached error bound"
            );
        }
    }

    #[test]
    fn lp_eval_uniform_near_orthogonality() {
        let p = 5;
        let prec = 16;
        // uniform (counting) measure at one level m: the sum of <a>^x over
        // units nearly cancels, so for x != 0 the value has valuation
        // >= m - 1.
        for m in 2..=3u32 {
            let count = dlog_table(p, m).units().len();
            let meas =
                FiniteLevelMeasure { p, m, masses: vec![c(p, 1); count] };
            let tower = MeasureTower { p, levels: vec![meas] };
            let x = PAdicNum::from_i64(p, 1, prec);
            let v = lp_eval(&tower, &x, prec).unwrap();
            let ord = v.value.ord().unwrap();
            if let OrdVal::Finite(o) = ord {
                assert!(o >= Ratio::from_integer(m as i64 - 1), "m = {m}, ord = {o}");
            }
        }
    }

    #[test]
    fn lp_eval_refuses_unbounded_tower() {
        let p = 5;
        // ord(alpha) = 1 gives slope -1 < -1/4: refused with a diagnostic.
        let stab = stab_n1(p, cr(p, 1, 5), c(p, 5));
        let _ = infer_eta(&stab);
        let tower = tower_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            3,
            &UnitProvider,
        )
        .unwrap();
        let x = PAdicNum::from_i64(p, 1, 16);
        let err = lp_eval(&tower, &x, 16);
        assert!(matches!(err, Err(Error::Tower(_))));
    }

    #[test]
    fn serialization_roundtrip_bit_exact() {
        let p = 5;
        let stab = stab_n1(p, c(p, 2), cr(p, 1, 2));
        let tower = tower_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            2,
            &UnitProvider,
        )
        .unwrap();
        let json = serde_json::to_string(&tower).unwrap();
        let back: MeasureTower = serde_json::from_str(&json).unwrap();
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);
        for (a, b) in tower.levels.iter().zip(&back.levels) {
            for (x, y) in a.masses.iter().zip(&b.masses) {
                assert!(x.eq_exact(y));
            }
        }
        // moment tables round-trip bit-exactly as well
        let table = moments_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            2,
            &UnitProvider,
        )
        .unwrap();
        let tj = serde_json::to_string(&table).unwrap();
        let tback: MomentTable = serde_json::from_str(&tj).unwrap();
        assert_eq!(tj, serde_json::to_string(&tback).unwrap());
    }

    #[test]
    fn galois_conjugate_moments_are_conjugate() {
        // moments of chi and of its Galois conjugates are Galois-conjugate
        let p = 5;
        let stab = stab_n1(p, c(p, 2), cr(p, 1, 2));
        let table = moments_from_interpolation(
            &stab,
            &MultChar::trivial(p),
            HalfInt::int(0),
            1,
            &UnitProvider,
        )
        .unwrap();
        // sigma_t: zeta_N -> zeta_N^t with t = 1 mod p-part moves chi to
        // chi^t on the tame part; compare moment(chi^2) with sigma(moment(chi))
        let chis: Vec<&MultChar> = table
            .moments
            .iter()
            .map(|(c, _)| c)
            .filter(|c| c.conductor_exp() == 1)
            .collect();
        let quartic = chis.iter().find(|c| c.teich_idx() == 1).unwrap();
        let conj = quartic.inverse().unwrap();
        let m1 = table.moment(quartic).unwrap();
        let m2 = table.moment(&conj).unwrap();
        // sigma_11 on Q(zeta_20): fixes zeta_5 (11 = 1 mod 5) and sends
        // zeta_4 to zeta_4^3, carrying chi to its conjugate chi^3 = chi^{-1}.
        let sigma_m1 = m1.raise_order(20).galois(11).unwrap();
        assert!(sigma_m1.eq_exact(&m2.raise_order(20)));
    }
}
