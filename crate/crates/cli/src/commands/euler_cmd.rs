//! The `euler` subcommand: emit Euler-factor tables.

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use shalika_core::chars::MultChar;
use shalika_core::euler::{eprime, euler_closed, interpolation_rhs, LocalDatum, UnitProvider};

use crate::config::{load_provider, Prepared};

#[derive(Serialize)]
struct EulerRow {
    p: u64,
    n: usize,
    m: u32,
    s: String,
    branch: String,
    value_serialized: shalika_core::CycScalar,
}

#[derive(Serialize)]
struct InterpolationRow {
    p: u64,
    n: usize,
    m: u32,
    s: String,
    eprime_serialized: shalika_core::CycScalar,
    rhs_serialized: shalika_core::CycScalar,
}

pub fn run(prep: &Prepared) -> Result<(serde_json::Value, bool)> {
    let p = prep.config.p;
    let n = prep.config.n;
    let stab = &prep.stab;

    let mut chars = vec![MultChar::trivial(p)];
    for m in 1..=prep.config.m_max {
        chars.extend(MultChar::primitive_of_conductor(p, m));
    }

    let provider: Box<dyn shalika_core::euler::LValueProvider> = match &prep.config.provider {
        Some(path) => Box::new(load_provider(std::path::Path::new(path), p)?),
        None => Box::new(UnitProvider),
    };

    let mut rows = Vec::new();
    let mut interp = Vec::new();
    for chi in &chars {
        let m = chi.conductor_exp();
        for (s_str, s) in prep.config.s_values.iter().zip(&prep.s_values) {
            let value = euler_closed(stab, chi, *s)?;
            rows.push(EulerRow {
                p,
                n,
                m,
                s: s_str.clone(),
                branch: if m >= 1 { "ramified".into() } else { "unramified".into() },
                value_serialized: value,
            });
            let ep = eprime(stab, &prep.chi_prime, chi, *s)?;
            let datum = LocalDatum {
                stab: stab.clone(),
                chi_prime: prep.chi_prime.clone(),
                chi: chi.clone(),
            };
            let rhs = interpolation_rhs(&[datum], *s, provider.as_ref())?;
            interp.push(InterpolationRow {
                p,
                n,
                m,
                s: s_str.clone(),
                eprime_serialized: ep,
                rhs_serialized: rhs,
            });
        }
    }

    println!(
        "{:<4} {:<3} {:<3} {:<6} {:<12} value",
        "p", "n", "m", "s", "branch"
    );
    println!("{}", "-".repeat(72));
    for r in &rows {
        println!(
            "{:<4} {:<3} {:<3} {:<6} {:<12} {}",
            r.p, r.n, r.m, r.s, r.branch, r.value_serialized
        );
    }

    let json = json!({
        "command": "euler",
        "rows": rows,
        "interpolation": interp,
    });
    Ok((json, true))
}
