//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Every key maps onto one model,
//! simulation or quadrature setting; unknown keys are rejected. Densities may be
//! given linearly (`lambda_b`, nodes/m²) or in dB (`lambda_b_db`, converted as
//! `10^(x/10)` per m²). If `lambda_u` is not given it follows `100 * lambda_b`.
//!
//! Recognised keys:
//!
//! ```text
//! alpha a0 a1 b0 b1 d_i r0 rtilde0 rtilde1 region_side
//! lambda_b lambda_u lambda_e   (or *_db)
//! n_order u_order clusters antennas pd pp sigma2 max_rate_bits alzer_constant
//! seed realizations interior_fraction threads rel_tol abs_tol
//! sweep_param sweep_values   (comma-separated values)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::montecarlo::McConfig;
use crate::params::{db_to_linear, AlzerConstant, SystemParams};
use crate::quadrature::QuadratureSpec;

/// A one-dimensional sweep over a numeric parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedConfig {
    pub params: SystemParams,
    pub mc: McConfig,
    pub quadrature: QuadratureSpec,
    pub sweep: Option<SweepSpec>,
}

/// Names accepted by [`set_param`] and therefore by `sweep_param`.
pub const SWEEPABLE: &[&str] = &[
    "alpha", "a0", "a1", "b0", "b1", "d_i", "r0", "rtilde0", "rtilde1", "region_side",
    "lambda_b", "lambda_u", "lambda_e", "lambda_b_db", "lambda_u_db", "lambda_e_db",
    "antennas", "pd", "pp", "sigma2", "max_rate_bits",
];

/// Assigns one numeric model parameter. Inside sweeps the power split stays
/// normalised (`a1` sets `a0 = 1 - a1` and vice versa) and changing `lambda_b`
/// keeps the `lambda_u / lambda_b` ratio.
pub fn set_param(p: &mut SystemParams, name: &str, v: f64, coupled: bool) -> Result<()> {
    let rescale_users = |p: &mut SystemParams, lb: f64| {
        if coupled && p.lambda_b > 0.0 {
            p.lambda_u *= lb / p.lambda_b;
        }
        p.lambda_b = lb;
    };
    match name {
        "alpha" => p.alpha = v,
        "a0" => {
            p.a0 = v;
            if coupled {
                p.a1 = 1.0 - v;
            }
        }
        "a1" => {
            p.a1 = v;
            if coupled {
                p.a0 = 1.0 - v;
            }
        }
        "b0" => p.b0 = v,
        "b1" => p.b1 = v,
        "d_i" => p.d_i = v,
        "r0" => p.r0 = v,
        "rtilde0" => p.rtilde0 = v,
        "rtilde1" => p.rtilde1 = v,
        "region_side" => p.region_side = v,
        "lambda_b" => rescale_users(p, v),
        "lambda_b_db" => rescale_users(p, db_to_linear(v)),
        "lambda_u" => p.lambda_u = v,
        "lambda_u_db" => p.lambda_u = db_to_linear(v),
        "lambda_e" => p.lambda_e = v,
        "lambda_e_db" => p.lambda_e = db_to_linear(v),
        "antennas" => p.antennas = v,
        "pd" => p.pd = v,
        "pp" => p.pp = v,
        "sigma2" => p.sigma2 = v,
        "max_rate_bits" => p.max_rate_bits = v,
        other => return Err(Error::Config(format!("`{other}` is not a numeric model parameter"))),
    }
    Ok(())
}

fn number(key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: `{raw}` is not a number")))
}

fn integer<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::Config(format!("`{key}`: `{raw}` is not a non-negative integer")))
}

pub fn parse_config_str(text: &str) -> Result<ParsedConfig> {
    let mut cfg = ParsedConfig::default();
    let mut unknown = Vec::new();
    let mut user_density_set = false;
    let mut sweep_param: Option<String> = None;
    let mut sweep_values: Option<Vec<f64>> = None;
    let mut seen = std::collections::HashSet::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let (key, raw) = (key.trim(), raw.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("`{key}` given twice")));
        }
        let p = &mut cfg.params;
        match key {
            "lambda_u" | "lambda_u_db" => {
                user_density_set = true;
                set_param(p, key, number(key, raw)?, false)?;
            }
            k if SWEEPABLE.contains(&k) => set_param(p, k, number(k, raw)?, false)?,
            "n_order" => p.n_order = integer(key, raw)?,
            "u_order" => p.u_order = integer(key, raw)?,
            "clusters" => p.clusters = integer(key, raw)?,
            "alzer_constant" => p.alzer = raw.parse::<AlzerConstant>()?,
            "seed" => cfg.mc.seed = integer(key, raw)?,
            "realizations" => cfg.mc.n_realizations = integer(key, raw)?,
            "interior_fraction" => cfg.mc.interior_fraction = number(key, raw)?,
            "threads" => cfg.mc.threads = Some(integer(key, raw)?),
            "rel_tol" => cfg.quadrature.rel_tol = number(key, raw)?,
            "abs_tol" => cfg.quadrature.abs_tol = number(key, raw)?,
            "sweep_param" => sweep_param = Some(raw.to_string()),
            "sweep_values" => {
                sweep_values = Some(
                    raw.split(',')
                        .map(|v| number(key, v.trim()))
                        .collect::<Result<Vec<f64>>>()?,
                )
            }
            other => unknown.push(other.to_string()),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    if !user_density_set {
        cfg.params.lambda_u = 100.0 * cfg.params.lambda_b;
    }
    cfg.sweep = match (sweep_param, sweep_values) {
        (None, None) => None,
        (Some(param), Some(values)) => {
            if !SWEEPABLE.contains(&param.as_str()) {
                return Err(Error::Config(format!(
                    "sweep_param `{param}` is not one of: {}",
                    SWEEPABLE.join(", ")
                )));
            }
            if values.is_empty() {
                return Err(Error::Config("sweep_values is empty".into()));
            }
            Some(SweepSpec { param, values })
        }
        _ => {
            return Err(Error::Config(
                "sweep_param and sweep_values must be given together".into(),
            ))
        }
    };
    cfg.params.validate()?;
    cfg.mc.validate()?;
    cfg.quadrature.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

impl ParsedConfig {
    /// Effective settings as `key = value` lines, densities in linear units.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut lines = vec![
            format!("alpha = {}", p.alpha),
            format!("a0 = {}", p.a0),
            format!("a1 = {}", p.a1),
            format!("b0 = {}", p.b0),
            format!("b1 = {}", p.b1),
            format!("d_i = {}", p.d_i),
            format!("lambda_b = {:e}", p.lambda_b),
            format!("lambda_u = {:e}", p.lambda_u),
            format!("lambda_e = {:e}", p.lambda_e),
            format!("r0 = {}", p.r0),
            format!("n_order = {}", p.n_order),
            format!("u_order = {}", p.u_order),
            format!("clusters = {}", p.clusters),
            format!("rtilde0 = {}", p.rtilde0),
            format!("rtilde1 = {}", p.rtilde1),
            format!("region_side = {}", p.region_side),
            format!("antennas = {}", p.antennas),
            format!("pd = {}", p.pd),
            format!("pp = {}", p.pp),
            format!("sigma2 = {:e}", p.sigma2),
            format!("max_rate_bits = {}", p.max_rate_bits),
            format!("alzer_constant = {}", p.alzer),
            format!("seed = {}", self.mc.seed),
            format!("realizations = {}", self.mc.n_realizations),
            format!("interior_fraction = {}", self.mc.interior_fraction),
        ];
        if let Some(s) = &self.sweep {
            lines.push(format!("sweep_param = {}", s.param));
            let vals: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
            lines.push(format!("sweep_values = {}", vals.join(", ")));
        }
        lines.join("\n") + "\n"
    }
}
