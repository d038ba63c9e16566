//! Time-division baseline: each cluster user gets the whole power budget for half
//! the slot. The served user's SINR becomes its interference-ratio statistic `S`;
//! the attacker sees `q = d_i` with power-ratio sum 1, giving
//! `d_i / ((1 - d_i) + sum_l (r_k / r_l)^(2 alpha))` (the NOMA attacker formula
//! with `a = b = 1`). Ordering into central/second users is kept so per-cluster
//! comparisons with NOMA line up.

use std::f64::consts::LN_2;

use crate::analytic::{compose_sop, AttackerModel, Coefficients, Evaluator};
use crate::error::Result;
use crate::params::{SystemParams, UserRole};
use crate::quadrature::{AnalyticResult, QuadratureSpec};

/// Share of the slot each user is served.
pub const TIME_SHARE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct OmaParams {
    eval: Evaluator,
}

impl OmaParams {
    pub fn new(params: SystemParams, spec: QuadratureSpec) -> Result<Self> {
        Ok(OmaParams {
            eval: Evaluator::new(params, spec)?,
        })
    }

    pub fn params(&self) -> &SystemParams {
        self.eval.params()
    }

    /// Full power to the served user of role `role`.
    pub fn coefficients(role: UserRole) -> Coefficients {
        match role {
            UserRole::Central => Coefficients { a0: 1.0, a1: 0.0, b0: 1.0, b1: 1.0, r: 1.0 },
            UserRole::Second => Coefficients { a0: 0.0, a1: 1.0, b0: 1.0, b1: 1.0, r: 1.0 },
        }
    }

    pub fn attacker(&self) -> AttackerModel {
        AttackerModel::oma(self.eval.params())
    }

    /// `int_0^inf (1 - F_{S_i}(2^t - 1)) dt`, without the time share.
    pub fn full_slot_rate(&self, role: UserRole) -> Result<AnalyticResult> {
        let e = &self.eval;
        if !(e.params().lambda_b > 0.0) {
            return Ok(AnalyticResult::exact(0.0));
        }
        let mut w = |t: f64| {
            let sv = e.survival_s((t * LN_2).exp_m1());
            match role {
                UserRole::Central => sv * (2.0 - sv),
                UserRole::Second => sv * sv,
            }
        };
        e.rate_integral(&mut w, "OMA ergodic rate")
    }

    pub fn ergodic_rate(&self, role: UserRole) -> Result<AnalyticResult> {
        let r = self.full_slot_rate(role)?;
        Ok(AnalyticResult::new(TIME_SHARE * r.value, TIME_SHARE * r.abs_error_estimate))
    }

    /// Leakage towards the attacker during the user's half slot. The same for both
    /// users since the attacker's share does not depend on which one is served.
    pub fn leakage(&self, _role: UserRole) -> Result<AnalyticResult> {
        let l = self.attacker().leakage(self.eval.spec())?;
        Ok(AnalyticResult::new(TIME_SHARE * l.value, TIME_SHARE * l.abs_error_estimate))
    }

    pub fn secrecy_rate(&self, role: UserRole) -> Result<AnalyticResult> {
        let r = self.ergodic_rate(role)?;
        let l = self.leakage(role)?;
        Ok(AnalyticResult::new(
            (r.value - l.value).max(0.0),
            r.abs_error_estimate + l.abs_error_estimate,
        ))
    }

    /// Outage of one user when the full-slot rate difference must reach
    /// `target_bits`.
    pub fn user_outage_at_threshold(&self, role: UserRole, target_bits: f64) -> Result<AnalyticResult> {
        self.eval
            .user_outage(role, target_bits, &Self::coefficients(role), &self.attacker())
    }

    /// Per-user outage at the system targets: halving the slot doubles the
    /// required full-slot rate difference.
    pub fn user_outage(&self, role: UserRole) -> Result<AnalyticResult> {
        let target = match role {
            UserRole::Central => self.params().rtilde0,
            UserRole::Second => self.params().rtilde1,
        };
        self.user_outage_at_threshold(role, target / TIME_SHARE)
    }

    pub fn sop(&self) -> Result<AnalyticResult> {
        let p0 = self.user_outage(UserRole::Central)?;
        let p1 = self.user_outage(UserRole::Second)?;
        Ok(AnalyticResult::new(
            compose_sop(p0.value, p1.value),
            p0.abs_error_estimate + p1.abs_error_estimate,
        ))
    }
}

pub fn oma_ergodic_rate(role: UserRole, params: &SystemParams) -> Result<AnalyticResult> {
    OmaParams::new(params.clone(), QuadratureSpec::default())?.ergodic_rate(role)
}

pub fn oma_leakage(role: UserRole, params: &SystemParams) -> Result<AnalyticResult> {
    OmaParams::new(params.clone(), QuadratureSpec::default())?.leakage(role)
}

pub fn oma_sop(params: &SystemParams) -> Result<AnalyticResult> {
    OmaParams::new(params.clone(), QuadratureSpec::default())?.sop()
}
