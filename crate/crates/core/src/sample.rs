//! Seeded generators for sampled property checks.
//!
//! Verification commands and property tests draw their random matrices and
//! units from here so that a fixed seed reproduces a run exactly.

use std::ops::Range;

use num::BigInt;
use rand::Rng;

use crate::padic::{PAdicMatrix, PAdicNum};

/// A random unit of `Z_p^*` with the given precision.
pub fn unit(rng: &mut impl Rng, p: u64, prec: u32) -> PAdicNum {
    loop {
        let x = rng.gen_range(1..p.pow(3.min(prec)));
        if x % p != 0 {
            return PAdicNum::from_bigint(p, &BigInt::from(x), prec);
        }
    }
}

/// A random nonzero scalar `p^v * unit` with `v` drawn from `vals`.
pub fn scalar(rng: &mut impl Rng, p: u64, vals: Range<i64>, prec: u32) -> PAdicNum {
    let v = rng.gen_range(vals);
    unit(rng, p, prec).shift(v)
}

/// A random element of `GL_n(Z_p)`: unit diagonal dressed with integral
/// off-diagonal entries via elementary operations.
pub fn gl_zp_matrix(rng: &mut impl Rng, p: u64, n: usize, prec: u32) -> PAdicMatrix {
    let mut m = PAdicMatrix::diagonal(
        p,
        &(0..n).map(|_| unit(rng, p, prec)).collect::<Vec<_>>(),
    );
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let c = PAdicNum::from_bigint(p, &BigInt::from(rng.gen_range(0..p.pow(2))), prec);
        for r in 0..n {
            let upd = m.entry(r, j).add(&m.entry(r, i).mul(&c));
            m.set(r, j, upd);
        }
    }
    if rng.gen_bool(0.5) {
        m.swap_columns(rng.gen_range(0..n), rng.gen_range(0..n));
    }
    m
}

/// A random element of the principal congruence subgroup of level `m >= 1`.
pub fn congruence_matrix(rng: &mut impl Rng, p: u64, n: usize, m: u32, prec: u32) -> PAdicMatrix {
    PAdicMatrix::from_fn(p, n, |i, j| {
        let noise = PAdicNum::from_bigint(p, &BigInt::from(rng.gen_range(0..p.pow(2))), prec)
            .shift(m as i64);
        if i == j {
            PAdicNum::one(p).add(&noise)
        } else {
            noise
        }
    })
}

/// A random invertible matrix: `GL_n(Z_p)` element times a diagonal of
/// p-powers drawn from `vals`, times another `GL_n(Z_p)` element.
pub fn invertible_matrix(
    rng: &mut impl Rng,
    p: u64,
    n: usize,
    vals: Range<i64>,
    prec: u32,
) -> PAdicMatrix {
    let k1 = gl_zp_matrix(rng, p, n, prec);
    let k2 = gl_zp_matrix(rng, p, n, prec);
    let d = PAdicMatrix::diagonal(
        p,
        &(0..n)
            .map(|_| PAdicNum::p_power(p, rng.gen_range(vals.clone()), prec))
            .collect::<Vec<_>>(),
    );
    k1.mul(&d).mul(&k2)
}
