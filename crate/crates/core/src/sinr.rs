//! Asymptotic (M → ∞) SINR expressions for the two cluster users and the attacker,
//! plus the finite-M pre-limit for the central user.
//!
//! Every expression depends on the geometry only through ratios of `r^(-2 alpha)`
//! terms, so the helpers come in two flavours: distance-list entry points, and
//! `*_from_ratio` forms taking the precomputed interference ratio. The Monte-Carlo
//! engine uses the latter to avoid recomputing sums.

use crate::error::{Error, Result};
use crate::params::{Message, SystemParams};

/// Per-realization SINRs of the tagged cluster and the strongest attacker. All linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrReport {
    /// Central user decoding its own message after SIC.
    pub sinr_w0_central: f64,
    /// Central user decoding the second user's message (SIC step).
    pub sinr_w1_at_central: f64,
    /// Second user decoding its own message.
    pub sinr_w1_second: f64,
    /// Best attacker eavesdropping `w0`.
    pub sinr_attacker_w0: f64,
    /// Best attacker eavesdropping `w1`.
    pub sinr_attacker_w1: f64,
    /// Ordering statistic of the central user (also its OMA SINR).
    pub s_central: f64,
    /// Ordering statistic of the second user (also its OMA SINR).
    pub s_second: f64,
    /// Best attacker under the OMA substitution (full power to the served user).
    pub sinr_attacker_oma: f64,
}

fn check_distances(r_serve: f64, interferers: &[f64]) -> Result<()> {
    if !(r_serve > 0.0 && r_serve.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "serving distance must be positive and finite, got {r_serve}"
        )));
    }
    if let Some(d) = interferers.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "interferer distance must be positive, got {d}"
        )));
    }
    Ok(())
}

/// `sum_l (r / d_l)^beta`: aggregate interference normalised by the desired term.
fn interference_ratio(r: f64, others: &[f64], beta: f64) -> f64 {
    others.iter().map(|d| (r / d).powf(beta)).sum()
}

/// `S = r^(-2a) / sum_l d_l^(-2a)`; `+inf` when there is no interferer.
pub fn ordering_statistic(r_serve: f64, interferers: &[f64], alpha: f64) -> Result<f64> {
    check_distances(r_serve, interferers)?;
    if interferers.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / interference_ratio(r_serve, interferers, 2.0 * alpha))
}

pub fn central_own_from_ratio(s: f64, p: &SystemParams) -> f64 {
    let r = p.derived().r;
    p.a0 / (r * p.b0) * s
}

pub fn central_decoding_second_from_ratio(s: f64, p: &SystemParams) -> f64 {
    if s.is_infinite() {
        return p.a1 * p.b0 / (p.a0 * p.b1);
    }
    let r = p.derived().r;
    (p.b0 * p.a1 / p.b1) * s / (r * p.b0 + p.a0 * s)
}

pub fn second_own_from_ratio(s: f64, p: &SystemParams) -> f64 {
    if s.is_infinite() {
        return p.a1 * p.b0 / (p.a0 * p.b1);
    }
    let r = p.derived().r;
    p.a1 * s / (p.a0 * p.b1 * s / p.b0 + r * p.b1)
}

/// Attacker SINR given its power share `q = d a / b`, the power-ratio sum `r_sum`,
/// and `other = sum_l (r_k / r_l)^(2a)` over non-serving BSs.
pub fn attacker_from_ratio(q: f64, r_sum: f64, other: f64) -> f64 {
    q / ((r_sum - q) + r_sum * other)
}

pub fn sinr_central_own(r_serve: f64, interferers: &[f64], p: &SystemParams) -> Result<f64> {
    let s = ordering_statistic(r_serve, interferers, p.alpha)?;
    Ok(central_own_from_ratio(s, p))
}

pub fn sinr_central_decoding_second(
    r_serve: f64,
    interferers: &[f64],
    p: &SystemParams,
) -> Result<f64> {
    let s = ordering_statistic(r_serve, interferers, p.alpha)?;
    Ok(central_decoding_second_from_ratio(s, p))
}

pub fn sinr_second_own(r_serve: f64, interferers: &[f64], p: &SystemParams) -> Result<f64> {
    let s = ordering_statistic(r_serve, interferers, p.alpha)?;
    Ok(second_own_from_ratio(s, p))
}

/// SINR of an attacker at distance `r_serve_cell` from the tagged BS.
pub fn sinr_attacker(
    message: Message,
    r_serve_cell: f64,
    other_bs: &[f64],
    p: &SystemParams,
) -> Result<f64> {
    check_distances(r_serve_cell, other_bs)?;
    let q = p.attacker_share(message);
    let r = p.derived().r;
    if q >= r {
        return Err(Error::InvalidInput(format!(
            "attacker share d_i a/b = {q} must stay below R = {r}"
        )));
    }
    let other = interference_ratio(r_serve_cell, other_bs, p.beta());
    Ok(attacker_from_ratio(q, r, other))
}

/// Central-user SINR with `M` antennas and receiver noise, before the M → ∞ limit.
pub fn sinr_central_own_finite_m(
    r_serve: f64,
    interferers: &[f64],
    p: &SystemParams,
) -> Result<f64> {
    check_distances(r_serve, interferers)?;
    if p.antennas < 1.0 || p.pd <= 0.0 || p.sigma2 < 0.0 {
        return Err(Error::InvalidInput(
            "finite-M SINR needs M >= 1, Pd > 0, sigma2 >= 0".into(),
        ));
    }
    let beta = p.beta();
    let r = p.derived().r;
    let desired = p.antennas * p.pd * p.a0 * r_serve.powf(-beta) / 2.0;
    let pilot: f64 = interferers.iter().map(|d| d.powf(-beta)).sum();
    let denom = p.sigma2 + p.antennas * p.pd * p.b0 / 2.0 * r * pilot;
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(desired / denom)
}
