//! Model parameters and the constants derived from them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which downlink message an attacker is trying to recover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Message {
    /// Message of the central (strong) user.
    W0,
    /// Message of the second (weak) user.
    W1,
}

/// Role of a user inside a two-user cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserRole {
    Central,
    Second,
}

/// Convention for the rate constant of the Alzer bound on the Gamma CDF,
/// `P(g < y) ≈ (1 - exp(-eta * y))^N` for a unit-mean Gamma variable of shape `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlzerConstant {
    /// `eta = N * (N!)^(-1/N)`, the bound of Alzer's inequality.
    #[default]
    Standard,
    /// `eta = N * (N!)^(1/N)`, kept for reproducing the as-printed variant.
    Printed,
}

impl AlzerConstant {
    pub fn eta(self, order: u32) -> f64 {
        let n = order as f64;
        let log_fact: f64 = (1..=order).map(|k| (k as f64).ln()).sum();
        match self {
            AlzerConstant::Standard => n * (-log_fact / n).exp(),
            AlzerConstant::Printed => n * (log_fact / n).exp(),
        }
    }
}

impl FromStr for AlzerConstant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(AlzerConstant::Standard),
            "printed" => Ok(AlzerConstant::Printed),
            other => Err(Error::Config(format!(
                "alzer_constant must be `standard` or `printed`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for AlzerConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlzerConstant::Standard => f.write_str("standard"),
            AlzerConstant::Printed => f.write_str("printed"),
        }
    }
}

/// Converts a density quoted in dB to nodes per m².
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// All scalar parameters of the network model.
///
/// Fields are public so sweeps can tweak a copy; call [`SystemParams::validate`]
/// after editing. The analytic and Monte-Carlo engines assume a validated value.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Path-loss exponent. Distances enter every SINR as `r^(-2 alpha)`.
    pub alpha: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    /// Attacker pilot power share on the tagged cluster's pilot.
    pub d_i: f64,
    /// BS density (per m²).
    pub lambda_b: f64,
    /// User density (per m²).
    pub lambda_u: f64,
    /// Attacker density (per m²).
    pub lambda_e: f64,
    /// Eavesdropper-free radius around every BS (m).
    pub r0: f64,
    /// Gamma shape used for the interference-ratio CDF.
    pub n_order: u32,
    /// Gamma shape used for the attacker SINR CDF.
    pub u_order: u32,
    /// Clusters per cell.
    pub clusters: usize,
    /// Target secrecy rate of the central user (bits per channel use).
    pub rtilde0: f64,
    /// Target secrecy rate of the second user (bits per channel use).
    pub rtilde1: f64,
    /// Side of the square simulation region (m).
    pub region_side: f64,
    pub antennas: f64,
    pub pd: f64,
    pub pp: f64,
    pub sigma2: f64,
    pub alzer: AlzerConstant,
    /// Rate assigned to an infinite SINR (bits).
    pub max_rate_bits: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let lambda_b = db_to_linear(-35.0);
        SystemParams {
            alpha: 4.0,
            a0: 0.4,
            a1: 0.6,
            b0: 0.4,
            b1: 0.6,
            d_i: 0.2,
            lambda_b,
            lambda_u: 100.0 * lambda_b,
            lambda_e: db_to_linear(-45.0),
            r0: 6.0,
            n_order: 7,
            u_order: 7,
            clusters: 5,
            rtilde0: 1.5,
            rtilde1: 0.5,
            region_side: 3000.0,
            antennas: 256.0,
            pd: 1.0,
            pp: 1.0,
            sigma2: 1e-15,
            alzer: AlzerConstant::Standard,
            max_rate_bits: 60.0,
        }
    }
}

/// Constants shared by every closed-form expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// `a0/b0 + a1/b1`
    pub r: f64,
    /// Alzer rate constant for order `N`.
    pub eta: f64,
    /// Alzer rate constant for order `U`.
    pub eta_tilde: f64,
}

pub fn derived_constants(p: &SystemParams) -> DerivedConstants {
    DerivedConstants {
        r: p.a0 / p.b0 + p.a1 / p.b1,
        eta: p.alzer.eta(p.n_order),
        eta_tilde: p.alzer.eta(p.u_order),
    }
}

/// Largest Gamma order for which the alternating binomial sums stay exact in `f64`.
pub const MAX_ALZER_ORDER: u32 = 20;

fn check(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        })
    }
}

impl SystemParams {
    pub fn derived(&self) -> DerivedConstants {
        derived_constants(self)
    }

    /// Effective exponent applied to distances, `2 alpha`.
    pub fn beta(&self) -> f64 {
        2.0 * self.alpha
    }

    /// Power share `d_i a_m / b_m` an attacker steals from message `m`.
    pub fn attacker_share(&self, message: Message) -> f64 {
        match message {
            Message::W0 => self.d_i * self.a0 / self.b0,
            Message::W1 => self.d_i * self.a1 / self.b1,
        }
    }

    /// Single-cell supremum of the attacker SINR for `message`.
    pub fn attacker_sinr_supremum(&self, message: Message) -> f64 {
        let q = self.attacker_share(message);
        q / (self.derived().r - q)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("a0", self.a0),
            ("a1", self.a1),
            ("b0", self.b0),
            ("b1", self.b1),
            ("d_i", self.d_i),
            ("lambda_b", self.lambda_b),
            ("lambda_u", self.lambda_u),
            ("lambda_e", self.lambda_e),
            ("r0", self.r0),
            ("rtilde0", self.rtilde0),
            ("rtilde1", self.rtilde1),
            ("region_side", self.region_side),
        ];
        for (name, v) in finite {
            check(v.is_finite(), name, "must be finite")?;
        }
        check(self.alpha > 1.0, "alpha", "alpha > 1 required")?;
        check(
            (self.a0 + self.a1 - 1.0).abs() <= 1e-9,
            "a0",
            "a0 + a1 = 1 required",
        )?;
        check(self.a0 >= 0.0, "a0", "a0 >= 0 required")?;
        check(self.a0 < self.a1, "a0", "a0 < a1 required")?;
        check(self.b0 > 0.0, "b0", "b0 > 0 required")?;
        check(self.b1 > 0.0, "b1", "b1 > 0 required")?;
        check(self.d_i >= 0.0, "d_i", "d_i >= 0 required")?;
        let r = self.derived().r;
        check(
            self.attacker_share(Message::W0) < r,
            "d_i",
            "d_i * a0 / b0 < R required",
        )?;
        check(
            self.attacker_share(Message::W1) < r,
            "d_i",
            "d_i * a1 / b1 < R required",
        )?;
        check(self.lambda_b >= 0.0, "lambda_b", "lambda_b >= 0 required")?;
        check(self.lambda_e >= 0.0, "lambda_e", "lambda_e >= 0 required")?;
        check(
            self.lambda_u >= 10.0 * self.lambda_b,
            "lambda_u",
            "lambda_u >= 10 * lambda_b required (full-load assumption)",
        )?;
        if self.lambda_u < 50.0 * self.lambda_b {
            log::warn!(
                "lambda_u = {:.3e} is below 50 x lambda_b; cells may run short of users",
                self.lambda_u
            );
        }
        check(self.r0 >= 0.0, "r0", "r0 >= 0 required")?;
        check(self.region_side > 0.0, "region_side", "region_side > 0 required")?;
        check(
            (1..=MAX_ALZER_ORDER).contains(&self.n_order),
            "N",
            "1 <= N <= 20 required",
        )?;
        check(
            (1..=MAX_ALZER_ORDER).contains(&self.u_order),
            "U",
            "1 <= U <= 20 required",
        )?;
        check(self.clusters >= 1, "I", "I >= 1 required")?;
        check(self.rtilde0 >= 0.0, "rtilde0", "rtilde0 >= 0 required")?;
        check(self.rtilde1 >= 0.0, "rtilde1", "rtilde1 >= 0 required")?;
        check(self.antennas >= 1.0, "M", "M >= 1 required")?;
        check(self.pd > 0.0, "Pd", "Pd > 0 required")?;
        check(self.sigma2 >= 0.0, "sigma2", "sigma2 >= 0 required")?;
        check(self.max_rate_bits > 0.0, "max_rate_bits", "max_rate_bits > 0 required")?;
        Ok(())
    }

    /// Validates and returns `self`.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Sets the BS density and keeps the user density at 100x.
    pub fn with_lambda_b(mut self, lambda_b: f64) -> Self {
        self.lambda_b = lambda_b;
        self.lambda_u = 100.0 * lambda_b;
        self
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut c: u64 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c as f64
}
