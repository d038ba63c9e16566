//! Monte-Carlo estimators over independent network realizations.
//!
//! The SINR expressions are fading-free limits, so a realization only randomizes
//! node locations. Realization `i` uses a seed derived from the master seed and
//! `i`; rejected realizations (no usable interior cell) are replaced by continuing
//! the index sequence, up to twice the requested count. Results are always
//! collected in index order, so estimates do not depend on the thread count.

use std::io::Write;

use rayon::prelude::*;

use crate::analytic::compose_sop;
use crate::error::{Error, Result};
use crate::geometry::{tagged_sample, TaggedGeometry};
use crate::params::SystemParams;
use crate::sinr::{
    attacker_from_ratio, central_decoding_second_from_ratio, central_own_from_ratio,
    second_own_from_ratio, SinrReport,
};

pub const DEFAULT_INTERIOR_FRACTION: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_realizations: usize,
    pub seed: u64,
    /// Side of the central measurement window as a fraction of the region side.
    pub interior_fraction: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_realizations: 1000,
            seed: 1,
            interior_fraction: DEFAULT_INTERIOR_FRACTION,
            threads: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "n_realizations",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.interior_fraction > 0.0 && self.interior_fraction <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "interior_fraction",
                reason: "must lie in (0, 1]".into(),
            });
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter {
                name: "threads",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_effective: usize,
}

impl McEstimate {
    /// Sample mean and its standard error (infinite for a single sample).
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return McEstimate {
                mean: f64::NAN,
                std_err: f64::INFINITY,
                n_effective: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean,
            std_err,
            n_effective: n,
        }
    }

    fn with_mean(self, mean: f64) -> Self {
        McEstimate { mean, ..self }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// SINRs of the tagged cluster and the best attacker.
pub fn report_from_geometry(p: &SystemParams, g: &TaggedGeometry) -> SinrReport {
    let r = p.derived().r;
    let attacker = |q: f64, r_sum: f64| match g.best_attacker_ratio {
        Some(other) if q > 0.0 => attacker_from_ratio(q, r_sum, other),
        _ => 0.0,
    };
    SinrReport {
        sinr_w0_central: central_own_from_ratio(g.s_central, p),
        sinr_w1_at_central: central_decoding_second_from_ratio(g.s_central, p),
        sinr_w1_second: second_own_from_ratio(g.s_second, p),
        sinr_attacker_w0: attacker(p.attacker_share(crate::params::Message::W0), r),
        sinr_attacker_w1: attacker(p.attacker_share(crate::params::Message::W1), r),
        s_central: g.s_central,
        s_second: g.s_second,
        sinr_attacker_oma: attacker(p.d_i, 1.0),
    }
}

pub fn run_realization_in(p: &SystemParams, seed: u64, interior_fraction: f64) -> Result<SinrReport> {
    let g = tagged_sample(p, seed, interior_fraction)?;
    Ok(report_from_geometry(p, &g))
}

/// One realization measured in the default central window.
pub fn run_realization(p: &SystemParams, seed: u64) -> Result<SinrReport> {
    run_realization_in(p, seed, DEFAULT_INTERIOR_FRACTION)
}

/// Reports of the accepted realizations, in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub reports: Vec<SinrReport>,
    pub seeds: Vec<u64>,
    pub requested: usize,
    pub draws: usize,
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Draws realizations `0, 1, ...` until `wanted` succeed or `2 * wanted` have been
/// tried; returns `(index, value)` of the successes in index order.
fn collect_accepted<T: Send>(
    wanted: usize,
    threads: Option<usize>,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<(Vec<(u64, T)>, usize)> {
    let budget = 2 * wanted;
    in_pool(threads, || {
        let mut accepted = Vec::with_capacity(wanted);
        let mut next = 0usize;
        while accepted.len() < wanted && next < budget {
            let batch = (wanted - accepted.len()).min(budget - next);
            let results: Vec<(u64, Result<T>)> = (next..next + batch)
                .into_par_iter()
                .map(|i| (i as u64, f(i as u64)))
                .collect();
            next += batch;
            for (i, r) in results {
                match r {
                    Ok(v) => accepted.push((i, v)),
                    Err(Error::RealizationRejected(why)) => {
                        log::debug!("realization {i} rejected: {why}");
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok((accepted, next))
    })?
}

pub fn simulate(p: &SystemParams, mc: &McConfig) -> Result<Simulation> {
    p.validate()?;
    mc.validate()?;
    let (accepted, draws) = collect_accepted(mc.n_realizations, mc.threads, |i| {
        let seed = realization_seed(mc.seed, i);
        run_realization_in(p, seed, mc.interior_fraction).map(|r| (seed, r))
    })?;
    let n = accepted.len();
    if 2 * n < mc.n_realizations {
        return Err(Error::InsufficientRealizations {
            effective: n,
            requested: mc.n_realizations,
            budget: 2 * mc.n_realizations,
        });
    }
    if n < mc.n_realizations {
        log::warn!(
            "only {n} of {} realizations accepted within the draw budget",
            mc.n_realizations
        );
    }
    let (seeds, reports) = accepted.into_iter().map(|(_, sr)| sr).unzip();
    Ok(Simulation {
        reports,
        seeds,
        requested: mc.n_realizations,
        draws,
    })
}

fn capped_log2(sinr: f64, cap: f64) -> f64 {
    (sinr.ln_1p() / std::f64::consts::LN_2).min(cap)
}

/// Estimates of every rate-type metric. `cs*` apply the positive part to the
/// difference of means; their standard errors come from the paired differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimates {
    pub r0: McEstimate,
    pub r1: McEstimate,
    pub re_w0: McEstimate,
    pub re_w1: McEstimate,
    pub cs0: McEstimate,
    pub cs1: McEstimate,
    pub cs_sum: McEstimate,
    pub oma_r0: McEstimate,
    pub oma_r1: McEstimate,
    pub oma_re: McEstimate,
    pub oma_cs0: McEstimate,
    pub oma_cs1: McEstimate,
    pub oma_cs_sum: McEstimate,
}

fn column(reports: &[SinrReport], f: impl Fn(&SinrReport) -> f64) -> Vec<f64> {
    reports.iter().map(f).collect()
}

fn paired(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + sign * y).collect()
}

fn secrecy(rate: &[f64], leak: &[f64]) -> McEstimate {
    let r = McEstimate::from_samples(rate).mean;
    let l = McEstimate::from_samples(leak).mean;
    McEstimate::from_samples(&paired(rate, leak, -1.0)).with_mean((r - l).max(0.0))
}

pub fn rate_estimates(p: &SystemParams, reports: &[SinrReport]) -> RateEstimates {
    let cap = p.max_rate_bits;
    let r0 = column(reports, |r| capped_log2(r.sinr_w0_central, cap));
    let r1 = column(reports, |r| capped_log2(r.sinr_w1_second, cap));
    let e0 = column(reports, |r| capped_log2(r.sinr_attacker_w0, cap));
    let e1 = column(reports, |r| capped_log2(r.sinr_attacker_w1, cap));
    let cs0 = secrecy(&r0, &e0);
    let cs1 = secrecy(&r1, &e1);
    let sum_diff: Vec<f64> = paired(&paired(&r0, &e0, -1.0), &paired(&r1, &e1, -1.0), 1.0);

    let or0 = column(reports, |r| 0.5 * capped_log2(r.s_central, cap));
    let or1 = column(reports, |r| 0.5 * capped_log2(r.s_second, cap));
    let oe = column(reports, |r| 0.5 * capped_log2(r.sinr_attacker_oma, cap));
    let ocs0 = secrecy(&or0, &oe);
    let ocs1 = secrecy(&or1, &oe);
    let osum: Vec<f64> = paired(&paired(&or0, &oe, -1.0), &paired(&or1, &oe, -1.0), 1.0);

    RateEstimates {
        r0: McEstimate::from_samples(&r0),
        r1: McEstimate::from_samples(&r1),
        re_w0: McEstimate::from_samples(&e0),
        re_w1: McEstimate::from_samples(&e1),
        cs0,
        cs1,
        cs_sum: McEstimate::from_samples(&sum_diff).with_mean(cs0.mean + cs1.mean),
        oma_r0: McEstimate::from_samples(&or0),
        oma_r1: McEstimate::from_samples(&or1),
        oma_re: McEstimate::from_samples(&oe),
        oma_cs0: ocs0,
        oma_cs1: ocs1,
        oma_cs_sum: McEstimate::from_samples(&osum).with_mean(ocs0.mean + ocs1.mean),
    }
}

pub fn estimate_rates(p: &SystemParams, mc: &McConfig) -> Result<RateEstimates> {
    Ok(rate_estimates(p, &simulate(p, mc)?.reports))
}

/// Per-realization secrecy events. `true` means the secrecy target is met.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecrecyEvents {
    /// Central user decodes its own message securely.
    pub central_own: bool,
    /// Central user's SIC step on the second message meets the second target.
    pub central_sic: bool,
    /// Second user decodes its own message securely.
    pub second_own: bool,
}

fn secrecy_gap(sinr: f64, attacker: f64) -> f64 {
    if sinr.is_infinite() {
        return f64::INFINITY;
    }
    (sinr.ln_1p() - attacker.ln_1p()) / std::f64::consts::LN_2
}

pub fn secrecy_events(p: &SystemParams, r: &SinrReport) -> SecrecyEvents {
    SecrecyEvents {
        central_own: secrecy_gap(r.sinr_w0_central, r.sinr_attacker_w0) >= p.rtilde0,
        central_sic: secrecy_gap(r.sinr_w1_at_central, r.sinr_attacker_w1) >= p.rtilde1,
        second_own: secrecy_gap(r.sinr_w1_second, r.sinr_attacker_w1) >= p.rtilde1,
    }
}

/// OMA events: half the time slot, full power, same attacker geometry.
pub fn oma_secrecy_events(p: &SystemParams, r: &SinrReport) -> (bool, bool) {
    (
        0.5 * secrecy_gap(r.s_central, r.sinr_attacker_oma) >= p.rtilde0,
        0.5 * secrecy_gap(r.s_second, r.sinr_attacker_oma) >= p.rtilde1,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopEstimates {
    pub p_w0: McEstimate,
    pub p_w1: McEstimate,
    /// Fraction of realizations where any of the three secrecy events fails.
    pub sop_direct: McEstimate,
    /// `1 - (1 - P_w0)(1 - P_w1)`, delta-method standard error.
    pub sop_product: McEstimate,
    pub oma_p0: McEstimate,
    pub oma_p1: McEstimate,
    pub oma_sop_direct: McEstimate,
    pub oma_sop_product: McEstimate,
}

fn indicator(xs: impl Iterator<Item = bool>) -> Vec<f64> {
    xs.map(|b| if b { 1.0 } else { 0.0 }).collect()
}

fn product_estimate(a: McEstimate, b: McEstimate) -> McEstimate {
    let se = ((1.0 - b.mean).powi(2) * a.std_err.powi(2) + (1.0 - a.mean).powi(2) * b.std_err.powi(2)).sqrt();
    McEstimate {
        mean: compose_sop(a.mean, b.mean),
        std_err: se,
        n_effective: a.n_effective,
    }
}

pub fn sop_estimates(p: &SystemParams, reports: &[SinrReport]) -> SopEstimates {
    let ev: Vec<SecrecyEvents> = reports.iter().map(|r| secrecy_events(p, r)).collect();
    let p0 = McEstimate::from_samples(&indicator(ev.iter().map(|e| !e.central_own)));
    let p1 = McEstimate::from_samples(&indicator(ev.iter().map(|e| !e.second_own)));
    let direct = McEstimate::from_samples(&indicator(
        ev.iter().map(|e| !(e.central_own && e.central_sic && e.second_own)),
    ));
    let oma: Vec<(bool, bool)> = reports.iter().map(|r| oma_secrecy_events(p, r)).collect();
    let o0 = McEstimate::from_samples(&indicator(oma.iter().map(|e| !e.0)));
    let o1 = McEstimate::from_samples(&indicator(oma.iter().map(|e| !e.1)));
    let odirect = McEstimate::from_samples(&indicator(oma.iter().map(|e| !(e.0 && e.1))));
    SopEstimates {
        p_w0: p0,
        p_w1: p1,
        sop_direct: direct,
        sop_product: product_estimate(p0, p1),
        oma_p0: o0,
        oma_p1: o1,
        oma_sop_direct: odirect,
        oma_sop_product: product_estimate(o0, o1),
    }
}

pub fn estimate_sop(p: &SystemParams, mc: &McConfig) -> Result<SopEstimates> {
    Ok(sop_estimates(p, &simulate(p, mc)?.reports))
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: xs }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Two-sided Kolmogorov distance to a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i + 1) as f64 / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }
}

const CDF_DRAW_SALT: u64 = 0x5EED_0F5A_u64;

/// Interference-ratio statistic of a uniformly chosen clustered user, one per
/// independent geometry draw.
pub fn empirical_cdf_s(p: &SystemParams, n_draws: usize, mc: &McConfig) -> Result<EmpiricalCdf> {
    if n_draws < 100 {
        return Err(Error::InvalidInput(format!(
            "empirical CDF needs at least 100 draws, got {n_draws}"
        )));
    }
    p.validate()?;
    let master = mc.seed ^ CDF_DRAW_SALT;
    let (accepted, _) = collect_accepted(n_draws, mc.threads, |i| {
        let seed = realization_seed(master, i);
        let g = tagged_sample(p, seed, mc.interior_fraction)?;
        // cluster members are exchangeable, so pick one with a seed bit
        Ok(if splitmix64(seed) >> 63 == 0 {
            g.s_central
        } else {
            g.s_second
        })
    })?;
    if 2 * accepted.len() < n_draws {
        return Err(Error::InsufficientRealizations {
            effective: accepted.len(),
            requested: n_draws,
            budget: 2 * n_draws,
        });
    }
    Ok(EmpiricalCdf::new(accepted.into_iter().map(|(_, s)| s).collect()))
}

/// One whitespace-separated line per realization.
pub fn write_records<W: Write>(sim: &Simulation, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "seed sinr_w0_central sinr_w1_at_central sinr_w1_second sinr_attacker_w0 sinr_attacker_w1 s_central s_second sinr_attacker_oma"
    )?;
    for (seed, r) in sim.seeds.iter().zip(&sim.reports) {
        writeln!(
            out,
            "{seed} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}",
            r.sinr_w0_central,
            r.sinr_w1_at_central,
            r.sinr_w1_second,
            r.sinr_attacker_w0,
            r.sinr_attacker_w1,
            r.s_central,
            r.s_second,
            r.sinr_attacker_oma
        )?;
    }
    Ok(())
}
