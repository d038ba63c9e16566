//! Integral-form evaluation of the interference-ratio distribution, ergodic rates,
//! attacker leakage and secrecy outage.
//!
//! All radial integrals are taken in the normalised radius `rho = r sqrt(pi lambda_b)`
//! so that the quadrature sees an O(1) length scale whatever the density.
//!
//! Shell integral used throughout (`beta = 2 alpha`, `delta = 2 / beta`):
//!
//! ```text
//! G(c) = int_1^inf (1 - exp(-c t^-beta)) t dt
//!      = ( c^delta gamma_lower(1 - delta, c) - (1 - e^-c) ) / 2
//! ```

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::params::{binomial, DerivedConstants, Message, SystemParams, UserRole};
use crate::quadrature::{
    integrate_to_infinity, integrate_with_breaks, AnalyticResult, QuadratureSpec,
};

/// Rate integrands below this value for three consecutive unit panels end the
/// integration.
pub const RATE_INTEGRAND_FLOOR: f64 = 1e-8;
const RATE_QUIET_PANELS: usize = 3;
const RATE_MAX_BITS: f64 = 2000.0;
/// Attacker CDF mass treated as zero when bounding the SINR support.
const ATTACKER_TAIL: f64 = 1e-13;

/// Power-series/closed-form switch for [`shell_integral`].
const SERIES_LIMIT: f64 = 1.0;

/// `G(c)` above. Series for small `c` where the closed form cancels.
pub fn shell_integral(c: f64, beta: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let delta = 2.0 / beta;
    if c < SERIES_LIMIT {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= c / k as f64;
            let add = term / (k as f64 * beta - 2.0);
            sum += if k % 2 == 1 { add } else { -add };
            if add < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    0.5 * (c.powf(delta) * lower_gamma(1.0 - delta, c) + (-c).exp_m1())
}

/// `G'(c) = int_1^inf t^(1-beta) exp(-c t^-beta) dt = c^(delta-1) gamma_lower(1-delta, c) / beta`.
pub fn shell_integral_deriv(c: f64, beta: f64) -> f64 {
    let delta = 2.0 / beta;
    if c <= 0.0 {
        return 1.0 / (beta - 2.0);
    }
    if c < SERIES_LIMIT {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            if k > 1 {
                term *= c / (k - 1) as f64;
            }
            let add = term / (k as f64 * beta - 2.0);
            sum += if k % 2 == 1 { add } else { -add };
            if add < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    c.powf(delta - 1.0) * lower_gamma(1.0 - delta, c) / beta
}

fn lower_gamma(a: f64, x: f64) -> f64 {
    if x.is_infinite() {
        return gamma(a);
    }
    gamma_lr(a, x) * gamma(a)
}

/// `int_L^inf (1 - exp(-k s^-beta)) s ds`.
fn hole_integral(k: f64, lower: f64, beta: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    if lower > 0.0 {
        lower * lower * shell_integral(k * lower.powf(-beta), beta)
    } else {
        let delta = 2.0 / beta;
        0.5 * gamma(1.0 - delta) * k.powf(delta)
    }
}

/// Derivative of [`hole_integral`] in `k`.
fn hole_integral_deriv(k: f64, lower: f64, beta: f64) -> f64 {
    if lower > 0.0 {
        lower.powf(2.0 - beta) * shell_integral_deriv(k * lower.powf(-beta), beta)
    } else {
        let delta = 2.0 / beta;
        if k <= 0.0 {
            return f64::INFINITY;
        }
        0.5 * delta * gamma(1.0 - delta) * k.powf(delta - 1.0)
    }
}

/// Accepts a probability whose value strays outside `[0, 1]` by no more than its
/// error estimate (plus a roundoff floor); anything larger is an error.
pub fn clamp_probability(r: AnalyticResult, label: &str) -> Result<AnalyticResult> {
    let overshoot = (-r.value).max(r.value - 1.0);
    if overshoot <= 0.0 {
        return Ok(r);
    }
    if overshoot <= r.abs_error_estimate.max(1e-12) {
        return Ok(AnalyticResult::new(r.value.clamp(0.0, 1.0), r.abs_error_estimate));
    }
    Err(Error::Numerical {
        integral: label.to_string(),
        detail: format!(
            "probability {} outside [0, 1] beyond error estimate {:.3e}",
            r.value, r.abs_error_estimate
        ),
    })
}

/// `1 - (1 - p0)(1 - p1)`.
pub fn compose_sop(p0: f64, p1: f64) -> f64 {
    1.0 - (1.0 - p0) * (1.0 - p1)
}

/// Distribution of the strongest attacker's SINR under the Poisson approximation
/// of the hole process. Parameterised by the attacker's power share `q` and the
/// power-ratio sum `R`, so it covers both messages and the OMA substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerModel {
    pub share: f64,
    pub power_sum: f64,
    pub lambda_b: f64,
    pub lambda_e: f64,
    pub r0: f64,
    pub beta: f64,
    pub order: u32,
    pub eta_tilde: f64,
}

impl AttackerModel {
    pub fn for_message(p: &SystemParams, message: Message) -> Self {
        let d = p.derived();
        AttackerModel {
            share: p.attacker_share(message),
            power_sum: d.r,
            lambda_b: p.lambda_b,
            lambda_e: p.lambda_e,
            r0: p.r0,
            beta: p.beta(),
            order: p.u_order,
            eta_tilde: d.eta_tilde,
        }
    }

    /// Full power to the served user: `a = b = 1`, so `q = d_i` and `R = 1`.
    pub fn oma(p: &SystemParams) -> Self {
        AttackerModel {
            share: p.d_i,
            power_sum: 1.0,
            ..AttackerModel::for_message(p, Message::W0)
        }
    }

    /// Single-cell supremum `q / (R - q)`.
    pub fn supremum(&self) -> f64 {
        self.share / (self.power_sum - self.share)
    }

    /// No attacker ever gets information: SINR is identically zero.
    fn degenerate(&self) -> bool {
        !(self.lambda_e > 0.0) || !(self.share > 0.0)
    }

    fn rho_scale(&self) -> f64 {
        (PI * self.lambda_b).sqrt()
    }

    /// `V_u` at SINR `x`, attacker distance `r`.
    fn v(&self, x: f64, u: u32, r: f64) -> f64 {
        if u == 0 {
            return 1.0;
        }
        let a = x * u as f64 * self.eta_tilde;
        let k = a * (self.power_sum / self.share) * r.powf(self.beta);
        let hole = hole_integral(k, self.r0, self.beta);
        (-2.0 * PI * self.lambda_b * hole - a * (self.power_sum / self.share - 1.0)).exp()
    }

    /// `d V_u / d x`.
    fn v_dx(&self, x: f64, u: u32, r: f64) -> f64 {
        if u == 0 {
            return 0.0;
        }
        let un = u as f64 * self.eta_tilde;
        let ratio = self.power_sum / self.share;
        let k = x * un * ratio * r.powf(self.beta);
        let slope = un * (ratio - 1.0)
            + 2.0 * PI * self.lambda_b * hole_integral_deriv(k, self.r0, self.beta) * un * ratio
                * r.powf(self.beta);
        -self.v(x, u, r) * slope
    }

    /// `sum_{u>=1} (-1)^(u+1) C(U,u) f(u)`.
    fn alternating<F: Fn(u32) -> f64>(&self, f: F) -> f64 {
        (1..=self.order)
            .map(|u| {
                let t = binomial(self.order, u) * f(u);
                if u % 2 == 1 {
                    t
                } else {
                    -t
                }
            })
            .sum()
    }

    fn radial(&self, integrand: impl Fn(f64) -> f64, spec: &QuadratureSpec, label: &str) -> Result<AnalyticResult> {
        if !(self.lambda_b > 0.0) {
            return Err(Error::InvalidInput(
                "attacker SINR distribution needs lambda_b > 0".into(),
            ));
        }
        let scale = self.rho_scale();
        let rho0 = self.r0 * scale;
        let f = |rho: f64| integrand(rho / scale) * rho;
        let res = integrate_to_infinity(f, rho0, spec, label)?;
        // back to r: r dr = rho drho / (pi lambda_b)
        let jac = 1.0 / (scale * scale);
        Ok(AnalyticResult::new(res.value * jac, res.abs_error_estimate * jac))
    }

    /// `2 pi lambda_e J(x)`, so that `F(x) = exp(-exponent)`.
    fn exponent(&self, x: f64, spec: &QuadratureSpec) -> Result<AnalyticResult> {
        let j = self.radial(
            |r| self.alternating(|u| self.v(x, u, r)),
            spec,
            "attacker CDF radial integral",
        )?;
        let c = 2.0 * PI * self.lambda_e;
        Ok(AnalyticResult::new(c * j.value, c * j.abs_error_estimate))
    }

    pub fn cdf(&self, x: f64, spec: &QuadratureSpec) -> Result<AnalyticResult> {
        if self.degenerate() {
            return Ok(AnalyticResult::exact(if x >= 0.0 { 1.0 } else { 0.0 }));
        }
        if x <= 0.0 {
            return Ok(AnalyticResult::exact(0.0));
        }
        let e = self.exponent(x, spec)?;
        let v = (-e.value).exp();
        Ok(AnalyticResult::new(v, v * e.abs_error_estimate))
    }

    /// `1 - F(x)` without cancellation.
    pub fn survival(&self, x: f64, spec: &QuadratureSpec) -> Result<AnalyticResult> {
        if self.degenerate() {
            return Ok(AnalyticResult::exact(if x >= 0.0 { 0.0 } else { 1.0 }));
        }
        if x <= 0.0 {
            return Ok(AnalyticResult::exact(1.0));
        }
        let e = self.exponent(x, spec)?;
        Ok(AnalyticResult::new(-(-e.value).exp_m1(), e.abs_error_estimate))
    }

    pub fn pdf(&self, x: f64, spec: &QuadratureSpec) -> Result<AnalyticResult> {
        if x <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "attacker SINR density needs x > 0, got {x}"
            )));
        }
        if self.degenerate() {
            return Ok(AnalyticResult::exact(0.0));
        }
        let e = self.exponent(x, spec)?;
        let dj = self.radial(
            |r| self.alternating(|u| self.v_dx(x, u, r)),
            spec,
            "attacker density radial integral",
        )?;
        let c = 2.0 * PI * self.lambda_e;
        let f = (-e.value).exp();
        let value = -c * dj.value * f;
        let err = c * dj.abs_error_estimate * f + value.abs() * e.abs_error_estimate;
        Ok(AnalyticResult::new(value, err))
    }

    /// Smallest `x >= supremum` (on a geometric grid) with `1 - F(x)` below the
    /// tail threshold.
    fn upper_support(&self, spec: &QuadratureSpec) -> Result<f64> {
        let mut x = self.supremum();
        for _ in 0..200 {
            if self.survival(x, spec)?.value < ATTACKER_TAIL {
                return Ok(x);
            }
            x *= 1.5;
        }
        Err(Error::Numerical {
            integral: "attacker SINR support".into(),
            detail: "survival function did not decay".into(),
        })
    }

    /// Point below which `F` is below `floor`, searched downward by decades.
    fn lower_support(&self, floor: f64, spec: &QuadratureSpec) -> Result<f64> {
        let mut x = self.supremum();
        let target = -floor.ln();
        for _ in 0..320 {
            x *= 0.1;
            if x < 1e-300 {
                break;
            }
            if self.exponent(x, spec)?.value >= target {
                return Ok(x);
            }
        }
        Ok(x.max(1e-300))
    }

    /// `(1/ln 2) int_0^inf (1 - F(x)) / (1 + x) dx`.
    pub fn leakage(&self, spec: &QuadratureSpec) -> Result<AnalyticResult> {
        if self.degenerate() {
            return Ok(AnalyticResult::exact(0.0));
        }
        let hi = self.upper_support(spec)?;
        let sup = self.supremum();
        let mut fail = None;
        let mut f = |x: f64| match self.survival(x, &inner_spec(spec)) {
            Ok(s) => s.value / (1.0 + x),
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        };
        let mut breaks = vec![0.0, 0.01 * sup, 0.1 * sup, sup];
        if hi > sup {
            breaks.push(hi);
        }
        let r = integrate_with_breaks(&mut f, &breaks, spec, "ergodic leakage")?;
        if let Some(e) = fail {
            return Err(e);
        }
        Ok(AnalyticResult::new(r.value / LN_2, r.abs_error_estimate / LN_2))
    }

    /// `P = int g(z) dF(z)` for a conditional outage `g`. When `pole` is given,
    /// `g = 1` for `z >= pole` and the integral is cut there.
    pub fn outage<G: Fn(f64) -> f64>(
        &self,
        g: G,
        pole: Option<f64>,
        spec: &QuadratureSpec,
        label: &str,
    ) -> Result<AnalyticResult> {
        if let Some(zp) = pole {
            if zp <= 0.0 {
                return Ok(AnalyticResult::exact(1.0));
            }
        }
        if self.degenerate() {
            return Ok(AnalyticResult::exact(g(0.0)));
        }
        let inner = inner_spec(spec);
        let lo = self.lower_support(1e-12, &inner)?;
        let mut hi = self.upper_support(&inner)?;
        let mut tail = AnalyticResult::exact(0.0);
        if let Some(zp) = pole {
            if zp < hi {
                hi = zp;
                tail = self.survival(zp, &inner)?;
            }
        }
        let atom = g(lo) * self.cdf(lo, &inner)?.value;
        if hi <= lo {
            // all attacker mass sits below `lo`
            let s = self.survival(lo, &inner)?.value;
            return Ok(AnalyticResult::exact(g(lo) * (1.0 - s) + s));
        }
        let mut fail = None;
        let mut f = |u: f64| {
            let z = u.exp();
            match self.pdf(z, &inner) {
                Ok(d) => g(z) * d.value * z,
                Err(e) => {
                    fail.get_or_insert(e);
                    0.0
                }
            }
        };
        let (ulo, uhi) = (lo.ln(), hi.ln());
        let mut breaks = vec![ulo];
        let n = ((uhi - ulo) / 2.0).ceil().max(1.0) as usize;
        for i in 1..n {
            breaks.push(ulo + (uhi - ulo) * i as f64 / n as f64);
        }
        breaks.push(uhi);
        let body = integrate_with_breaks(&mut f, &breaks, spec, label)?;
        if let Some(e) = fail {
            return Err(e);
        }
        clamp_probability(
            AnalyticResult::new(
                body.value + atom + tail.value,
                body.abs_error_estimate + tail.abs_error_estimate + 1e-12,
            ),
            label,
        )
    }
}

fn inner_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: (spec.rel_tol * 1e-2).max(1e-12),
        abs_tol: (spec.abs_tol * 1e-3).max(1e-15),
        ..*spec
    }
}

/// Downlink coefficients entering the outage thresholds. NOMA uses the system's own
/// values; the OMA baseline substitutes full power for the served user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub r: f64,
}

impl Coefficients {
    pub fn of(p: &SystemParams) -> Self {
        Coefficients {
            a0: p.a0,
            a1: p.a1,
            b0: p.b0,
            b1: p.b1,
            r: p.derived().r,
        }
    }
}

/// Evaluates every analytic metric for one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluator {
    params: SystemParams,
    derived: DerivedConstants,
    spec: QuadratureSpec,
}

impl Evaluator {
    pub fn new(params: SystemParams, spec: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        Ok(Self::unchecked(params, spec))
    }

    /// Skips the parameter invariants; for probing degenerate limits.
    pub fn unchecked(params: SystemParams, spec: QuadratureSpec) -> Self {
        Evaluator {
            derived: params.derived(),
            params,
            spec,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `1 - F_S(s)` via the closed-form radial integrals:
    /// `sum_n (-1)^(n+1) C(N,n) / (1 + 2 G(s eta n))`.
    pub fn survival_s(&self, s: f64) -> f64 {
        if !(self.params.lambda_b > 0.0) {
            return 0.0;
        }
        if s <= 0.0 {
            return 1.0;
        }
        let n_ord = self.params.n_order;
        let beta = self.params.beta();
        (1..=n_ord)
            .map(|n| {
                let t = binomial(n_ord, n)
                    / (1.0 + 2.0 * shell_integral(s * self.derived.eta * n as f64, beta));
                if n % 2 == 1 {
                    t
                } else {
                    -t
                }
            })
            .sum()
    }

    /// CDF of the interference-ratio statistic of a uniformly chosen user.
    pub fn cdf_s(&self, s: f64) -> Result<AnalyticResult> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::InvalidInput(format!("cdf_s needs s >= 0, got {s}")));
        }
        clamp_probability(AnalyticResult::new(1.0 - self.survival_s(s), 1e-13), "cdf_s")
    }

    pub fn cdf_s_ordered(&self, s: f64, role: UserRole) -> Result<AnalyticResult> {
        let f = self.cdf_s(s)?;
        Ok(match role {
            UserRole::Central => AnalyticResult::new(f.value * f.value, 2.0 * f.abs_error_estimate),
            UserRole::Second => {
                AnalyticResult::new(f.value * (2.0 - f.value), 2.0 * f.abs_error_estimate)
            }
        })
    }

    /// The kernel `int_0^inf sum_n (-1)^(n+1) C(N,n) exp(-2 pi lambda_b int_r^inf
    /// (1 - exp(-f eta n R r^beta x^-beta)) x dx) 2 pi lambda_b r e^(-pi lambda_b r^2) dr`,
    /// evaluated by nested quadrature. Equals `1 - cdf_s(R f)`.
    pub fn f_tilde(&self, f: f64) -> Result<AnalyticResult> {
        if f < 0.0 || f.is_nan() {
            return Err(Error::InvalidInput(format!("f_tilde needs f >= 0, got {f}")));
        }
        if !(self.params.lambda_b > 0.0) {
            return Ok(AnalyticResult::exact(0.0));
        }
        if f == 0.0 {
            return Ok(AnalyticResult::exact(1.0));
        }
        let beta = self.params.beta();
        let spec = QuadratureSpec {
            rel_tol: self.spec.rel_tol.min(1e-11),
            abs_tol: self.spec.abs_tol.min(1e-14),
            ..self.spec
        };
        let n_ord = self.params.n_order;
        // The inner integral over x scales as r^2 times a constant per n
        // (substitute x = r t), so it is computed once per n.
        let mut shells = Vec::with_capacity(n_ord as usize);
        let mut err = 0.0;
        for n in 1..=n_ord {
            let c = f * self.derived.eta * n as f64 * self.derived.r;
            let g = integrate_to_infinity(
                |t| -(-c * t.powf(-beta)).exp_m1() * t,
                1.0,
                &spec,
                "f_tilde shell integral",
            )?;
            err += binomial(n_ord, n) * g.abs_error_estimate;
            shells.push(g.value);
        }
        let outer = integrate_to_infinity(
            |rho| {
                let mut s = 0.0;
                for (i, g) in shells.iter().enumerate() {
                    let n = i as u32 + 1;
                    let t = binomial(n_ord, n) * (-rho * rho * (1.0 + 2.0 * g)).exp();
                    s += if n % 2 == 1 { t } else { -t };
                }
                2.0 * rho * s
            },
            0.0,
            &spec,
            "f_tilde radial integral",
        )?;
        clamp_probability(
            AnalyticResult::new(outer.value, outer.abs_error_estimate + 2.0 * err),
            "f_tilde",
        )
    }

    /// `V(v, vtilde)` for binomial index `u` and attacker distance `r`.
    pub fn v_term(&self, v: f64, vtilde: f64, u: u32, r: f64) -> Result<f64> {
        if u == 0 || v == 0.0 {
            return Ok(1.0);
        }
        let p = &self.params;
        if r < p.r0 {
            return Err(Error::InvalidInput(format!(
                "attacker distance {r} inside the hole radius {}",
                p.r0
            )));
        }
        if p.d_i <= 0.0 {
            log::debug!("v_term with d_i = 0 and u = {u}: returning the limit 0");
            return Ok(0.0);
        }
        let beta = p.beta();
        let a = v * u as f64 * self.derived.eta_tilde;
        let ratio = self.derived.r * vtilde / p.d_i;
        let k = a * ratio * r.powf(beta);
        Ok((-2.0 * PI * p.lambda_b * hole_integral(k, p.r0, beta) - a * (ratio - 1.0)).exp())
    }

    /// `int_0^inf w(t) dt` over unit panels, stopping once the integrand has stayed
    /// below the floor at three consecutive panel ends.
    pub fn rate_integral<W: FnMut(f64) -> f64>(&self, mut w: W, label: &str) -> Result<AnalyticResult> {
        let (mut total, mut err) = (0.0, 0.0);
        let mut quiet = 0;
        let mut t = 0.0;
        while t < RATE_MAX_BITS {
            let r = integrate_with_breaks(&mut w, &[t, t + 1.0], &self.spec, label)?;
            total += r.value;
            err += r.abs_error_estimate;
            t += 1.0;
            if w(t).abs() < RATE_INTEGRAND_FLOOR {
                quiet += 1;
                if quiet >= RATE_QUIET_PANELS {
                    return Ok(AnalyticResult::new(total, err));
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::Numerical {
            integral: label.to_string(),
            detail: format!("integrand still above {RATE_INTEGRAND_FLOOR:e} at {RATE_MAX_BITS} bits"),
        })
    }

    /// `int_0^inf (1 - (1 - f_tilde((2^t - 1) b0 / a0))^2) dt`.
    pub fn ergodic_rate_central(&self) -> Result<AnalyticResult> {
        let p = &self.params;
        let scale = self.derived.r * p.b0 / p.a0;
        self.rate_integral(
            |t| {
                let sv = self.survival_s(scale * (t * LN_2).exp_m1());
                sv * (2.0 - sv)
            },
            "central-user ergodic rate",
        )
    }

    /// `int_0^{log2(1 + a1 b0 / (a0 b1))} f_tilde(...)^2 dt`.
    pub fn ergodic_rate_second(&self) -> Result<AnalyticResult> {
        let p = &self.params;
        if p.a1 <= 0.0 {
            return Ok(AnalyticResult::exact(0.0));
        }
        let upper = (p.a1 * p.b0 / (p.a0 * p.b1)).ln_1p() / LN_2;
        let r = self.derived.r;
        let mut w = |t: f64| {
            let g = (t * LN_2).exp_m1();
            let den = p.a1 - g * p.a0 * p.b1 / p.b0;
            if den <= 0.0 {
                return 0.0;
            }
            let sv = self.survival_s(r * g * p.b1 / den);
            sv * sv
        };
        if upper.is_infinite() {
            return self.rate_integral(w, "second-user ergodic rate");
        }
        integrate_with_breaks(&mut w, &[0.0, 0.5 * upper, upper], &self.spec, "second-user ergodic rate")
    }

    pub fn attacker(&self, message: Message) -> AttackerModel {
        AttackerModel::for_message(&self.params, message)
    }

    pub fn cdf_attacker_sinr(&self, x: f64, message: Message) -> Result<AnalyticResult> {
        clamp_probability(self.attacker(message).cdf(x, &self.spec)?, "attacker SINR CDF")
    }

    pub fn pdf_attacker_sinr(&self, x: f64, message: Message) -> Result<AnalyticResult> {
        self.attacker(message).pdf(x, &self.spec)
    }

    pub fn ergodic_leakage(&self, message: Message) -> Result<AnalyticResult> {
        self.attacker(message).leakage(&self.spec)
    }

    pub fn secrecy_rate(&self, role: UserRole) -> Result<AnalyticResult> {
        let (rate, leak) = match role {
            UserRole::Central => (self.ergodic_rate_central()?, self.ergodic_leakage(Message::W0)?),
            UserRole::Second => (self.ergodic_rate_second()?, self.ergodic_leakage(Message::W1)?),
        };
        Ok(AnalyticResult::new(
            (rate.value - leak.value).max(0.0),
            rate.abs_error_estimate + leak.abs_error_estimate,
        ))
    }

    /// Outage of user `role` at target `target_bits`, with thresholds built from
    /// `coeffs` and the attacker drawn from `attacker`.
    pub fn user_outage(
        &self,
        role: UserRole,
        target_bits: f64,
        coeffs: &Coefficients,
        attacker: &AttackerModel,
    ) -> Result<AnalyticResult> {
        let gain = target_bits.exp2();
        let c = *coeffs;
        match role {
            UserRole::Central => {
                let g = |z: f64| {
                    let t = gain * (1.0 + z) - 1.0;
                    let f = 1.0 - self.survival_s(c.r * c.b0 * t / c.a0);
                    f * f
                };
                attacker.outage(g, None, &self.spec, "central-user outage")
            }
            UserRole::Second => {
                let slope = c.a0 * c.b1 / c.b0;
                let pole = if slope > 0.0 {
                    Some((1.0 + c.a1 / slope) / gain - 1.0)
                } else {
                    None
                };
                let g = |z: f64| {
                    let t = gain * (1.0 + z) - 1.0;
                    let den = c.a1 - t * slope;
                    if den <= 0.0 {
                        return 1.0;
                    }
                    let sv = self.survival_s(c.r * c.b1 * t / den);
                    1.0 - sv * sv
                };
                attacker.outage(g, pole, &self.spec, "second-user outage")
            }
        }
    }

    pub fn sop_central(&self) -> Result<AnalyticResult> {
        self.user_outage(
            UserRole::Central,
            self.params.rtilde0,
            &Coefficients::of(&self.params),
            &self.attacker(Message::W0),
        )
    }

    pub fn sop_second(&self) -> Result<AnalyticResult> {
        self.user_outage(
            UserRole::Second,
            self.params.rtilde1,
            &Coefficients::of(&self.params),
            &self.attacker(Message::W1),
        )
    }

    pub fn sop_total(&self) -> Result<AnalyticResult> {
        let p0 = self.sop_central()?;
        let p1 = self.sop_second()?;
        clamp_probability(
            AnalyticResult::new(
                compose_sop(p0.value, p1.value),
                p0.abs_error_estimate + p1.abs_error_estimate,
            ),
            "total SOP",
        )
    }
}
