//! Run configuration: a single JSON document, with CLI flags acting as
//! overrides. All rationals are strings (`"2"`, `"1/2"`); half-integers are
//! strings of the form `"1/2"`, `"0"`, `"-3/2"`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use shalika_core::chars::MultChar;
use shalika_core::reps::{sym_cube_lift, PSData, Stabilization, WeightData};
use shalika_core::scalar::{CycScalar, HalfInt};
use shalika_core::zeta::{infer_eta, Truncation};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub residue_level: u32,
    pub det_ceiling: i64,
    pub tol: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { residue_level: 6, det_ceiling: 14, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RepresentationConfig {
    /// Explicit inducing-character values at `p`, rank `2n`.
    Alphas { alphas: Vec<String> },
    /// Symmetric-cube lift of a rank-2 datum.
    SymCube { sym_cube: SymCubeConfig },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymCubeConfig {
    pub alpha: String,
    pub alpha_prime: String,
    pub k: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightConfig {
    pub mu: Vec<i64>,
    pub w: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharConfig {
    pub m: u32,
    pub teich_index: u64,
    pub wild_index: u64,
    #[serde(default)]
    pub at_p: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: u64,
    pub n: usize,
    #[serde(default = "default_precision")]
    pub precision: u32,
    #[serde(default)]
    pub truncation: TruncationConfig,
    pub representation: RepresentationConfig,
    #[serde(default = "default_one")]
    pub eta_at_p: String,
    /// Second-block indices of the stabilization; defaults to the last n.
    #[serde(default)]
    pub second_block: Option<Vec<usize>>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    #[serde(default = "default_s_values")]
    pub s_values: Vec<String>,
    #[serde(default)]
    pub weights: Option<WeightConfig>,
    #[serde(default)]
    pub chi_prime: Option<CharConfig>,
    #[serde(default)]
    pub provider: Option<String>,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default)]
    pub lp_samples: Vec<i64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_precision() -> u32 {
    12
}

fn default_one() -> String {
    "1".to_string()
}

fn default_m_max() -> u32 {
    2
}

fn default_s_values() -> Vec<String> {
    vec!["1/2".to_string()]
}

fn default_levels() -> u32 {
    3
}

fn default_seed() -> u64 {
    1
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|e| anyhow!("bad rational {s:?}: {e}"))
}

pub fn parse_half_int(s: &str) -> Result<HalfInt> {
    let t = s.trim();
    if let Some(num) = t.strip_suffix("/2") {
        let k: i64 = num.trim().parse().context("half-integer numerator")?;
        Ok(HalfInt::new(k))
    } else {
        let k: i64 = t.parse().context("integer s value")?;
        Ok(HalfInt::int(k))
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Everything a command needs, validated and materialized.
pub struct Prepared {
    pub config: RunConfig,
    pub stab: Stabilization,
    pub weights: WeightData,
    pub trunc: Truncation,
    pub s_values: Vec<HalfInt>,
    pub chi_prime: MultChar,
    /// Sanity flag from the symmetric-cube lift, when that path was taken.
    pub sym_cube_hecke_ok: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).context("parsing config JSON")?;
        Ok(cfg)
    }

    pub fn prepare(self) -> Result<Prepared> {
        if !is_prime(self.p) {
            bail!("p = {} is not prime", self.p);
        }
        let p = self.p;
        let eta = CycScalar::from_rational(p, &parse_rational(&self.eta_at_p)?);
        if eta.is_zero() {
            bail!("eta(p) must be nonzero");
        }

        let (ps, weights, sym_cube_hecke_ok) = match &self.representation {
            RepresentationConfig::Alphas { alphas } => {
                let vals: Result<Vec<CycScalar>> = alphas
                    .iter()
                    .map(|s| Ok(CycScalar::from_rational(p, &parse_rational(s)?)))
                    .collect();
                let ps = PSData::new(p, vals?).map_err(|e| anyhow!("{e}"))?;
                if ps.rank() != 2 * self.n {
                    bail!("representation has rank {}, expected 2n = {}", ps.rank(), 2 * self.n);
                }
                let weights = match &self.weights {
                    Some(w) => WeightData::new(w.mu.clone(), w.w).map_err(|e| anyhow!("{e}"))?,
                    None => WeightData::new(vec![0; 2 * self.n], 0).map_err(|e| anyhow!("{e}"))?,
                };
                (ps, weights, None)
            }
            RepresentationConfig::SymCube { sym_cube } => {
                if self.n != 2 {
                    bail!("sym_cube representation requires n = 2");
                }
                let a = CycScalar::from_rational(p, &parse_rational(&sym_cube.alpha)?);
                let b = CycScalar::from_rational(p, &parse_rational(&sym_cube.alpha_prime)?);
                let lift = sym_cube_lift(&a, &b, sym_cube.k, p).map_err(|e| anyhow!("{e}"))?;
                (lift.ps, lift.weights, Some(lift.hecke_ord_ok))
            }
        };

        if !ps.shalika_compatible(&eta) {
            bail!("alphas are not Shalika-compatible with eta(p): alpha_i alpha_(2n-i+1) must equal eta(p)");
        }
        let second_block = self
            .second_block
            .clone()
            .unwrap_or_else(|| (self.n..2 * self.n).collect());
        let stab = Stabilization::new(ps, second_block).map_err(|e| anyhow!("{e}"))?;
        debug_assert!(stab.base().shalika_compatible(&infer_eta(&stab)));

        let trunc = Truncation {
            residue_level: self.truncation.residue_level,
            det_ceiling: self.truncation.det_ceiling,
            tol: self.truncation.tol,
        };
        if trunc.residue_level < self.m_max + 1 {
            bail!(
                "residue_level {} too small for m_max {}",
                trunc.residue_level,
                self.m_max
            );
        }

        let s_values: Result<Vec<HalfInt>> =
            self.s_values.iter().map(|s| parse_half_int(s)).collect();
        let s_values = s_values?;
        if s_values.is_empty() {
            bail!("s_values must be nonempty");
        }

        let chi_prime = match &self.chi_prime {
            None => MultChar::trivial(p),
            Some(cc) => {
                let at_p = match &cc.at_p {
                    None => CycScalar::one(p),
                    Some(s) => CycScalar::from_rational(p, &parse_rational(s)?),
                };
                MultChar::from_indices(p, cc.m, cc.teich_index, cc.wild_index, at_p)
                    .map_err(|e| anyhow!("{e}"))?
            }
        };

        Ok(Prepared {
            config: self,
            stab,
            weights,
            trunc,
            s_values,
            chi_prime,
            sym_cube_hecke_ok,
        })
    }
}

/// One entry of an L-value provider file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderEntry {
    pub character: CharConfig,
    pub s: String,
    pub value: CycScalar,
}

/// Load a provider file: a JSON array of `{character, s, value}` entries.
pub fn load_provider(
    path: &Path,
    p: u64,
) -> Result<shalika_core::euler::TableProvider> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading provider {}", path.display()))?;
    let entries: Vec<ProviderEntry> = serde_json::from_str(&text).context("provider JSON")?;
    let mut table = shalika_core::euler::TableProvider::new();
    for e in entries {
        let at_p = match &e.character.at_p {
            None => CycScalar::one(p),
            Some(s) => CycScalar::from_rational(p, &parse_rational(s)?),
        };
        let chi = MultChar::from_indices(
            p,
            e.character.m,
            e.character.teich_index,
            e.character.wild_index,
            at_p,
        )
        .map_err(|er| anyhow!("{er}"))?;
        table.insert(&[chi], parse_half_int(&e.s)?, e.value);
    }
    Ok(table)
}
