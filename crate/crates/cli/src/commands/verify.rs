//! The `verify` subcommand: run the local-distribution verification suite
//! for one configuration and report pass/fail per check.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use shalika_core::chars::MultChar;
use shalika_core::padic::{PAdicMatrix, PAdicNum};
use shalika_core::reps::{
    check_additive_equivariance, check_alpha_scaling, check_equivariance, TestFunction,
};
use shalika_core::sample;
use shalika_core::scalar::{CycScalar, HalfInt};
use shalika_core::zeta::{
    check_density_n1, determine_constant, euler_bruteforce, verify_cond, verify_gauss_lemma,
    verify_twist, verify_vanish, verify_vanish2,
};
use shalika_core::Error;

use crate::config::Prepared;
use crate::report::ReportSink;

pub fn run(prep: &Prepared, seed: u64, stable: bool) -> Result<(serde_json::Value, bool)> {
    let mut sink = ReportSink::new(stable);
    let p = prep.config.p;
    let n = prep.config.n;
    let stab = &prep.stab;
    let trunc = &prep.trunc;
    let prec = prep.config.precision.max(16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // --- modified Euler factor against the closed form ---
    let constant = determine_constant(stab, trunc)?;
    sink.record("run-constant", format!("p={p} n={n}"), || {
        let rational = constant.try_rational().is_some();
        let nonzero = !constant.is_zero();
        Ok((
            "rational, nonzero".into(),
            format!("{constant}"),
            true,
            rational && nonzero,
        ))
    });

    for m in 1..=prep.config.m_max {
        for (idx, chi) in MultChar::primitive_of_conductor(p, m).iter().enumerate() {
            let params = format!("p={p} m={m} chi#{idx}");
            sink.record("euler-ramified", params, || {
                let oracle = euler_bruteforce(stab, chi, HalfInt::HALF, trunc)?;
                let closed = shalika_core::euler::euler_closed(stab, chi, HalfInt::HALF)?
                    .mul(&constant);
                let pass = oracle.exact && oracle.value.eq_exact(&closed);
                Ok((format!("{closed}"), format!("{}", oracle.value), oracle.exact, pass))
            });
        }
    }
    sink.record("euler-unramified", format!("p={p} chi trivial"), || {
        let chi = MultChar::trivial(p);
        let oracle = euler_bruteforce(stab, &chi, HalfInt::HALF, trunc)?;
        let closed = shalika_core::euler::euler_closed(stab, &chi, HalfInt::HALF)?
            .mul(&constant);
        let diff = (oracle.complex() - closed.complex_embed(1)).norm();
        let bound = trunc.tol.max(oracle.tail_bound);
        Ok((
            format!("within {bound:.3e}"),
            format!("difference {diff:.3e}"),
            false,
            diff <= bound,
        ))
    });

    // --- vanishing suite ---
    let conjugators: Vec<PAdicMatrix> = if n == 2 {
        (0..3).map(|_| sample::gl_zp_matrix(&mut rng, p, 2, prec)).collect()
    } else {
        vec![]
    };

    let units: Vec<i64> = vec![1, 1 + p as i64];
    for t in 2..=4i64 {
        for m in 1..t.min(4) {
            for &u in &units {
                let params = format!("ord(A)=-{t} m={m} unit={u}");
                let a = if n == 1 {
                    PAdicMatrix::new(p, 1, vec![PAdicNum::from_i64(p, u, prec).shift(-t)])
                } else {
                    PAdicMatrix::diagonal(
                        p,
                        &[
                            PAdicNum::from_i64(p, u, prec).shift(-t),
                            PAdicNum::from_i64(p, 1, prec),
                        ],
                    )
                };
                sink.record("lemma-vanish", params, || {
                    let ok = verify_vanish(stab, &a, m as u32, &conjugators, trunc)?;
                    Ok(("0".into(), if ok { "0".into() } else { "nonzero".into() }, true, ok))
                });
            }
        }
    }

    for m in 0..=prep.config.m_max {
        let chis = if m == 0 {
            vec![MultChar::trivial(p)]
        } else {
            MultChar::primitive_of_conductor(p, m)
        };
        for (idx, chi) in chis.iter().enumerate().take(3) {
            let floor = (m.max(1) as i64) + 1;
            for extra in 0..2i64 {
                let t = floor + extra;
                let params = format!("m={m} chi#{idx} ord(A)=-{t}");
                let a = if n == 1 {
                    PAdicMatrix::new(p, 1, vec![PAdicNum::from_i64(p, 1, prec).shift(-t)])
                } else {
                    PAdicMatrix::diagonal(
                        p,
                        &[PAdicNum::p_power(p, -t, prec), PAdicNum::p_power(p, 1, prec)],
                    )
                };
                sink.record("cor-vanish2", params, || {
                    let ok = verify_vanish2(stab, &a, chi, &conjugators, trunc)?;
                    Ok(("0".into(), if ok { "0".into() } else { "nonzero".into() }, true, ok))
                });
            }
        }
    }

    for m in 1..=prep.config.m_max.max(2) {
        let chis = MultChar::primitive_of_conductor(p, m);
        for (idx, chi) in chis.iter().enumerate().take(3) {
            for r in (-(m as i64) + 1)..=0 {
                let params = format!("m={m} chi#{idx} ord(A)={r}");
                let a = if n == 1 {
                    PAdicMatrix::new(p, 1, vec![PAdicNum::from_i64(p, 1, prec).shift(r)])
                } else {
                    PAdicMatrix::diagonal(
                        p,
                        &[PAdicNum::p_power(p, r, prec), PAdicNum::p_power(p, 0, prec)],
                    )
                };
                sink.record("lemma-gauss", params, || {
                    let ok = verify_gauss_lemma(stab, &a, chi, &conjugators, trunc)?;
                    Ok(("0".into(), if ok { "0".into() } else { "nonzero".into() }, true, ok))
                });
            }
        }
    }

    // --- conductor shells ---
    for m in 1..=prep.config.m_max {
        let chis = MultChar::primitive_of_conductor(p, m);
        if chis.is_empty() {
            continue;
        }
        // off-support shells vanish
        let offsets: Vec<Vec<i64>> = if n == 1 {
            vec![vec![-(m as i64) - 1], vec![-(m as i64) + 1], vec![0], vec![1]]
        } else {
            vec![
                vec![-(m as i64), 0],
                vec![0, -(m as i64)],
                vec![1, -(m as i64)],
                vec![0, 0],
            ]
        };
        for (idx, chi) in chis.iter().enumerate().take(2) {
            for r in &offsets {
                let params = format!("m={m} chi#{idx} r={r:?}");
                sink.record("lemma-cond-offdiag", params, || {
                    let rep = verify_cond(stab, r, chi, trunc)?;
                    let ok = rep.off_support && rep.value.is_zero();
                    Ok((
                        "0".into(),
                        if ok { "0".into() } else { format!("{}", rep.value) },
                        true,
                        ok,
                    ))
                });
            }
        }
        // on-support: value / formula must be chi-independent
        let diag = vec![-(m as i64); n];
        let mut ratios: Vec<CycScalar> = Vec::new();
        for chi in chis.iter() {
            let rep = verify_cond(stab, &diag, chi, trunc)?;
            if rep.value.is_zero() {
                ratios.clear();
                break;
            }
            ratios.push(rep.value.div(&rep.formula_chi_part).map_err(anyhow::Error::from)?);
        }
        sink.record(
            "lemma-cond-diagonal",
            format!("m={m} r={diag:?} over {} chars", chis.len()),
            || {
                if ratios.is_empty() {
                    return Ok(("nonzero shell".into(), "zero shell".into(), true, false));
                }
                let ok = ratios.iter().all(|r| r.eq_exact(&ratios[0]));
                Ok((
                    "chi-independent ratio".into(),
                    format!("{}", ratios[0]),
                    true,
                    ok,
                ))
            },
        );
    }

    // --- twisting identity ---
    let prims = MultChar::primitive_of_conductor(p, if p == 2 { 2 } else { 1 });
    let mut pairs: Vec<(MultChar, MultChar)> = Vec::new();
    pairs.push((MultChar::trivial(p), prims[0].clone()));
    for a in prims.iter().take(3) {
        for b in prims.iter().take(2) {
            pairs.push((a.clone(), b.clone()));
        }
    }
    for (i, (cp, c)) in pairs.iter().enumerate() {
        sink.record("lemma-dothetwist", format!("pair#{i}"), || {
            let ok = verify_twist(stab, cp, c, HalfInt::HALF, trunc)?;
            Ok(("equal".into(), if ok { "equal".into() } else { "differ".into() }, true, ok))
        });
    }

    // --- delta-map pointwise identities ---
    let delta_n = if n <= 2 { n } else { 2 };
    let delta_stab = stab.clone();
    let mut equi_ok = 0u32;
    let mut equi_total = 0u32;
    for _ in 0..40 {
        let a = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        let f = TestFunction::coset(a, 1);
        let h1 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        let h2 = sample::gl_zp_matrix(&mut rng, p, delta_n, prec + 8);
        let g = sample::invertible_matrix(&mut rng, p, 2 * delta_n, -1..2, prec + 8);
        let pt1 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        let pt2 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        match check_equivariance(&f, &delta_stab, &h1, &h2, &g, (&pt1, &pt2)) {
            Ok(ok) => {
                equi_total += 1;
                if ok {
                    equi_ok += 1;
                }
            }
            Err(Error::PrecisionExhausted(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    sink.record("delta-equivariance", format!("{equi_ok}/{equi_total} samples"), || {
        Ok((
            "all samples equal".into(),
            format!("{equi_ok} of {equi_total}"),
            true,
            equi_total > 10 && equi_ok == equi_total,
        ))
    });

    let mut add_ok = 0u32;
    let mut add_total = 0u32;
    for _ in 0..30 {
        let a = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        let m_lvl = 1 + (add_total % 2);
        let f = TestFunction::coset(a.clone(), m_lvl);
        // X with A^{-1} X in p^max(m,1) M(Z_p): X = A p^m Y
        let y = sample::gl_zp_matrix(&mut rng, p, delta_n, prec + 8);
        let x = a.mul(&y).scalar_mul(&PAdicNum::p_power(p, m_lvl as i64, prec + 8));
        let g = sample::invertible_matrix(&mut rng, p, 2 * delta_n, -1..2, prec + 8);
        let pt1 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        let pt2 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 8);
        match check_additive_equivariance(&f, &delta_stab, &x, &g, (&pt1, &pt2)) {
            Ok(ok) => {
                add_total += 1;
                if ok {
                    add_ok += 1;
                }
            }
            Err(Error::PrecisionExhausted(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    sink.record("delta-additive", format!("{add_ok}/{add_total} samples"), || {
        Ok((
            "all samples equal".into(),
            format!("{add_ok} of {add_total}"),
            true,
            add_total > 8 && add_ok == add_total,
        ))
    });

    let mut sc_ok = 0u32;
    let mut sc_total = 0u32;
    for r in 1..=3u32 {
        for _ in 0..12 {
            let g = sample::invertible_matrix(&mut rng, p, 2 * delta_n, -1..2, prec + 12);
            let pt1 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 12);
            let pt2 = sample::invertible_matrix(&mut rng, p, delta_n, -1..2, prec + 12);
            match check_alpha_scaling(&delta_stab, r, &g, (&pt1, &pt2), prec + 12) {
                Ok(ok) => {
                    sc_total += 1;
                    if ok {
                        sc_ok += 1;
                    }
                }
                Err(Error::PrecisionExhausted(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    sink.record("alpha-scaling", format!("{sc_ok}/{sc_total} samples, r=1..3"), || {
        Ok((
            "all samples equal".into(),
            format!("{sc_ok} of {sc_total}"),
            true,
            sc_total > 10 && sc_ok == sc_total,
        ))
    });

    if n == 1 {
        sink.record("lemma-density", "refined coset additivity".into(), || {
            let mut f = TestFunction::congruence_indicator(p, 1, 1);
            f.push(
                PAdicMatrix::new(p, 1, vec![PAdicNum::from_i64(p, 2, prec).shift(-1)]),
                2,
                CycScalar::from_ratio_i64(p, 7, 2),
            );
            let ok = check_density_n1(stab, &f, 3, trunc)?;
            Ok(("equal".into(), if ok { "equal".into() } else { "differ".into() }, true, ok))
        });
    }

    sink.print_table();
    let pass = sink.all_pass();
    let json = json!({
        "command": "verify",
        "p": p,
        "n": n,
        "reports": sink.rows,
        "passed": pass,
    });
    Ok((json, pass))
}
