//! The `measure` subcommand: build the finite-level measure tower, run the
//! diagnostics, optionally sample the p-adic L-function.

use anyhow::Result;
use serde_json::json;

use shalika_core::euler::UnitProvider;
use shalika_core::measure::{
    boundedness_diagnostic, compat_check, lp_eval, tower_from_interpolation,
};
use shalika_core::padic::PAdicNum;

use crate::config::{load_provider, Prepared};

pub fn run(prep: &Prepared) -> Result<(serde_json::Value, bool)> {
    let p = prep.config.p;
    let stab = &prep.stab;
    let s = prep.s_values[0];

    let provider: Box<dyn shalika_core::euler::LValueProvider> = match &prep.config.provider {
        Some(path) => Box::new(load_provider(std::path::Path::new(path), p)?),
        None => Box::new(UnitProvider),
    };

    let tower =
        tower_from_interpolation(stab, &prep.chi_prime, s, prep.config.levels, provider.as_ref())?;
    let compat = compat_check(&tower)?;
    let diag = boundedness_diagnostic(&tower)?;

    println!(
        "measure tower at p = {p}, levels 1..={}, s = {s}",
        prep.config.levels
    );
    println!("distribution compatibility: {}", if compat { "ok" } else { "FAIL" });
    for (m, o) in &diag.per_level {
        match o {
            Some((num, den)) => println!("  level {m}: min mass valuation {num}/{den}"),
            None => println!("  level {m}: all masses vanish"),
        }
    }
    if let Some((num, den)) = diag.slope {
        println!("valuation slope per level: {num}/{den}");
    }
    if let Some((num, den)) = diag.floor {
        println!("valuation floor: {num}/{den}");
    }

    let mut lp_rows = Vec::new();
    for &x in &prep.config.lp_samples {
        let xv = PAdicNum::from_i64(p, x, prep.config.precision.max(16) + 4);
        match lp_eval(&tower, &xv, prep.config.precision.max(16)) {
            Ok(v) => {
                println!("L_p(x = {x}) = {} (error ord >= {})", v.value, v.err_ord);
                lp_rows.push(json!({
                    "x": x,
                    "value": v.value.to_string(),
                    "err_ord": v.err_ord.to_string(),
                }));
            }
            Err(e) => {
                println!("L_p(x = {x}): refused: {e}");
                lp_rows.push(json!({ "x": x, "refused": e.to_string() }));
            }
        }
    }

    let json = json!({
        "command": "measure",
        "tower": tower,
        "compat": compat,
        "diagnostic": diag,
        "lp_samples": lp_rows,
    });
    Ok((json, compat))
}
