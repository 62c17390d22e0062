//! The `stab` subcommand: stabilization inventory with ordinarity and
//! criticality data.

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use shalika_core::reps::{enumerate_stabilizations, weakly_ordinary};
use shalika_core::scalar::OrdVal;

use crate::config::Prepared;

#[derive(Serialize)]
struct StabRow {
    second_block: Vec<usize>,
    alpha_theta: shalika_core::CycScalar,
    ord_alpha_theta: String,
    integral: bool,
    weakly_ordinary: bool,
}

pub fn run(prep: &Prepared) -> Result<(serde_json::Value, bool)> {
    let stabs = enumerate_stabilizations(prep.stab.base())?;
    let weights = &prep.weights;

    let mut rows = Vec::new();
    for st in &stabs {
        let alpha = st.alpha_theta();
        let ord = match alpha.padic_ord()? {
            OrdVal::Finite(r) => r.to_string(),
            OrdVal::Infinite => "inf".into(),
        };
        rows.push(StabRow {
            second_block: st.second_block().to_vec(),
            alpha_theta: alpha,
            ord_alpha_theta: ord,
            integral: st.integral_check()?,
            weakly_ordinary: weakly_ordinary(st, weights)?,
        });
    }

    let crit = weights.critical_points();
    let flagged = rows.iter().filter(|r| r.weakly_ordinary).count();

    println!(
        "stabilizations of rank-{} series: {} total, {} weakly ordinary",
        prep.stab.base().rank(),
        rows.len(),
        flagged
    );
    println!(
        "{:<14} {:>6} {:>9} {:>10}  alpha_theta",
        "second block", "ord", "integral", "weak ord"
    );
    println!("{}", "-".repeat(72));
    for r in &rows {
        println!(
            "{:<14} {:>6} {:>9} {:>10}  {}",
            format!("{:?}", r.second_block),
            r.ord_alpha_theta,
            r.integral,
            r.weakly_ordinary,
            r.alpha_theta
        );
    }
    println!(
        "weights mu = {:?}, w = {}, e_al = {}, purity: {}",
        weights.mu(),
        weights.w(),
        weights.e_al(),
        weights.purity_check()
    );
    println!(
        "critical range: s in [{}, {}] (critical points s + 1/2)",
        crit.start(),
        crit.end()
    );
    if let Some(ok) = prep.sym_cube_hecke_ok {
        println!("sym-cube Hecke sanity ord(alpha alpha') = k - 1: {ok}");
    }

    let json = json!({
        "command": "stab",
        "count": rows.len(),
        "weakly_ordinary_count": flagged,
        "rows": rows,
        "weights": { "mu": weights.mu(), "w": weights.w(), "e_al": weights.e_al(),
                     "purity": weights.purity_check() },
        "critical_range": [crit.start(), crit.end()],
        "sym_cube_hecke_ok": prep.sym_cube_hecke_ok,
    });
    Ok((json, true))
}
