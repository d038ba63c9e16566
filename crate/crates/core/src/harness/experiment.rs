//! Sweep runner producing one CSV (and SVG plots) per experiment.
//!
//! Sweep points run one after another; the Monte-Carlo engine parallelizes inside
//! each point. Every point reuses the master seed, so points differ only through
//! their parameters.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::{compose_sop, Evaluator};
use crate::error::{Error, Result};
use crate::harness::config::{set_param, ParsedConfig};
use crate::harness::plot::{render_svg, PlotSpec, Series};
use crate::montecarlo::{rate_estimates, simulate, sop_estimates, McEstimate, Simulation};
use crate::oma::OmaParams;
use crate::params::{Message, SystemParams, UserRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    /// Sum secrecy rate against BS density for two attacker densities.
    Fig2,
    /// Sum secrecy rate against the second user's power share for three hole radii.
    Fig3,
    /// SOP against attacker density for two attacker pilot shares.
    Fig4,
    /// SOP against BS density for two target-rate pairs.
    Fig5,
    /// Sweep given by `sweep_param` / `sweep_values` in the config.
    Custom,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(ExperimentId::Fig2),
            "fig3" => Ok(ExperimentId::Fig3),
            "fig4" => Ok(ExperimentId::Fig4),
            "fig5" => Ok(ExperimentId::Fig5),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}` (fig2, fig3, fig4, fig5, custom)"
            ))),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    R0,
    R1,
    ReW0,
    ReW1,
    Cs0,
    Cs1,
    CsSum,
    PW0,
    PW1,
    /// Analytic: product composition. Monte-Carlo: direct event frequency.
    Sop,
    /// Product composition of the Monte-Carlo per-user outages.
    SopProduct,
    OmaR0,
    OmaR1,
    OmaRe,
    OmaCs0,
    OmaCs1,
    OmaCsSum,
    OmaP0,
    OmaP1,
    OmaSop,
    OmaSopProduct,
}

impl Metric {
    pub const ALL: [Metric; 21] = [
        Metric::R0,
        Metric::R1,
        Metric::ReW0,
        Metric::ReW1,
        Metric::Cs0,
        Metric::Cs1,
        Metric::CsSum,
        Metric::PW0,
        Metric::PW1,
        Metric::Sop,
        Metric::SopProduct,
        Metric::OmaR0,
        Metric::OmaR1,
        Metric::OmaRe,
        Metric::OmaCs0,
        Metric::OmaCs1,
        Metric::OmaCsSum,
        Metric::OmaP0,
        Metric::OmaP1,
        Metric::OmaSop,
        Metric::OmaSopProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::R0 => "R0",
            Metric::R1 => "R1",
            Metric::ReW0 => "Re_w0",
            Metric::ReW1 => "Re_w1",
            Metric::Cs0 => "Cs0",
            Metric::Cs1 => "Cs1",
            Metric::CsSum => "Cs_sum",
            Metric::PW0 => "P_w0",
            Metric::PW1 => "P_w1",
            Metric::Sop => "SOP",
            Metric::SopProduct => "SOP_product",
            Metric::OmaR0 => "OMA_R0",
            Metric::OmaR1 => "OMA_R1",
            Metric::OmaRe => "OMA_Re",
            Metric::OmaCs0 => "OMA_Cs0",
            Metric::OmaCs1 => "OMA_Cs1",
            Metric::OmaCsSum => "OMA_Cs_sum",
            Metric::OmaP0 => "OMA_P0",
            Metric::OmaP1 => "OMA_P1",
            Metric::OmaSop => "OMA_SOP",
            Metric::OmaSopProduct => "OMA_SOP_product",
        }
    }

    fn index(self) -> usize {
        Metric::ALL.iter().position(|m| *m == self).expect("listed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValue {
    pub analytic: Option<f64>,
    pub analytic_err: Option<f64>,
    pub mc: Option<f64>,
    pub mc_se: Option<f64>,
}

impl MetricValue {
    /// Analytic and MC disagree by more than 3 combined standard errors.
    pub fn disagrees(&self) -> bool {
        match (self.analytic, self.mc, self.mc_se) {
            (Some(a), Some(m), Some(se)) => {
                let combined = (se * se + self.analytic_err.unwrap_or(0.0).powi(2)).sqrt();
                combined.is_finite() && (a - m).abs() > 3.0 * combined + 1e-12
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub experiment: String,
    pub series: String,
    pub param: String,
    pub value: Option<f64>,
    pub seed: u64,
    /// Accepted realizations (0 when Monte-Carlo was skipped).
    pub n_realizations: usize,
    pub metrics: Vec<MetricValue>,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn get(&self, m: Metric) -> &MetricValue {
        &self.metrics[m.index()]
    }

    fn get_mut(&mut self, m: Metric) -> &mut MetricValue {
        &mut self.metrics[m.index()]
    }

    pub fn flagged(&self) -> Vec<Metric> {
        Metric::ALL
            .iter()
            .copied()
            .filter(|m| self.get(*m).disagrees())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub analytic: bool,
    pub mc: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            analytic: true,
            mc: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub series: String,
    pub param: String,
    pub value: Option<f64>,
    pub params: SystemParams,
}

const DENSITY_DB: [f64; 5] = [-40.0, -37.5, -35.0, -32.5, -30.0];

fn with(base: &SystemParams, settings: &[(&str, f64)]) -> Result<SystemParams> {
    let mut p = base.clone();
    for (k, v) in settings {
        set_param(&mut p, k, *v, true)?;
    }
    Ok(p)
}

/// Parameter points of an experiment, in output order.
pub fn sweep_points(id: ExperimentId, cfg: &ParsedConfig) -> Result<Vec<SweepPoint>> {
    let base = &cfg.params;
    if id == ExperimentId::Custom && cfg.sweep.is_none() {
        return Ok(vec![SweepPoint {
            series: String::new(),
            param: String::new(),
            value: None,
            params: base.clone(),
        }]);
    }
    let mut out = Vec::new();
    let mut push = |series: String, param: &str, value: f64, p: SystemParams| {
        out.push(SweepPoint {
            series,
            param: param.to_string(),
            value: Some(value),
            params: p,
        });
    };
    match id {
        ExperimentId::Fig2 => {
            for le in [-45.0, -40.0] {
                for lb in DENSITY_DB {
                    let p = with(base, &[("lambda_e_db", le), ("lambda_b_db", lb)])?;
                    push(format!("lambda_e_db={le}"), "lambda_b_db", lb, p);
                }
            }
        }
        ExperimentId::Fig3 => {
            let fixed = with(base, &[("lambda_b_db", -35.0), ("lambda_e_db", -10.0)])?;
            for r0 in [0.0, 6.0, 12.0] {
                for i in 0..9 {
                    let a1 = 0.55 + 0.05 * i as f64;
                    let a1 = (a1 * 100.0).round() / 100.0;
                    let p = with(&fixed, &[("r0", r0), ("a1", a1)])?;
                    push(format!("r0={r0}"), "a1", a1, p);
                }
            }
        }
        ExperimentId::Fig4 => {
            let fixed = with(base, &[("lambda_b_db", -40.0), ("rtilde0", 1.5), ("rtilde1", 0.5)])?;
            for d in [0.2, 0.4] {
                for le in [-50.0, -47.5, -45.0, -42.5, -40.0] {
                    let p = with(&fixed, &[("d_i", d), ("lambda_e_db", le)])?;
                    push(format!("d_i={d}"), "lambda_e_db", le, p);
                }
            }
        }
        ExperimentId::Fig5 => {
            let fixed = with(base, &[("lambda_e_db", -45.0)])?;
            for (t0, t1) in [(1.5, 0.5), (2.0, 0.75)] {
                for lb in DENSITY_DB {
                    let p = with(&fixed, &[("rtilde0", t0), ("rtilde1", t1), ("lambda_b_db", lb)])?;
                    push(format!("targets={t0}/{t1}"), "lambda_b_db", lb, p);
                }
            }
        }
        ExperimentId::Custom => {
            if let Some(s) = &cfg.sweep {
                for v in &s.values {
                    let p = with(base, &[(s.param.as_str(), *v)])?;
                    push(String::new(), &s.param, *v, p);
                }
            }
        }
    }
    Ok(out)
}

fn analytic_metrics(p: &SystemParams, cfg: &ParsedConfig) -> Result<Vec<(Metric, f64, f64)>> {
    let e = Evaluator::new(p.clone(), cfg.quadrature)?;
    let o = OmaParams::new(p.clone(), cfg.quadrature)?;
    let r0 = e.ergodic_rate_central()?;
    let r1 = e.ergodic_rate_second()?;
    let l0 = e.ergodic_leakage(Message::W0)?;
    let l1 = e.ergodic_leakage(Message::W1)?;
    let p0 = e.sop_central()?;
    let p1 = e.sop_second()?;
    let or0 = o.ergodic_rate(UserRole::Central)?;
    let or1 = o.ergodic_rate(UserRole::Second)?;
    let ol = o.leakage(UserRole::Central)?;
    let op0 = o.user_outage(UserRole::Central)?;
    let op1 = o.user_outage(UserRole::Second)?;
    let cs0 = (r0.value - l0.value).max(0.0);
    let cs1 = (r1.value - l1.value).max(0.0);
    let ocs0 = (or0.value - ol.value).max(0.0);
    let ocs1 = (or1.value - ol.value).max(0.0);
    let err = |a: f64, b: f64| a + b;
    Ok(vec![
        (Metric::R0, r0.value, r0.abs_error_estimate),
        (Metric::R1, r1.value, r1.abs_error_estimate),
        (Metric::ReW0, l0.value, l0.abs_error_estimate),
        (Metric::ReW1, l1.value, l1.abs_error_estimate),
        (Metric::Cs0, cs0, err(r0.abs_error_estimate, l0.abs_error_estimate)),
        (Metric::Cs1, cs1, err(r1.abs_error_estimate, l1.abs_error_estimate)),
        (Metric::CsSum, cs0 + cs1, r0.abs_error_estimate + r1.abs_error_estimate + l0.abs_error_estimate + l1.abs_error_estimate),
        (Metric::PW0, p0.value, p0.abs_error_estimate),
        (Metric::PW1, p1.value, p1.abs_error_estimate),
        (Metric::Sop, compose_sop(p0.value, p1.value), err(p0.abs_error_estimate, p1.abs_error_estimate)),
        (Metric::OmaR0, or0.value, or0.abs_error_estimate),
        (Metric::OmaR1, or1.value, or1.abs_error_estimate),
        (Metric::OmaRe, ol.value, ol.abs_error_estimate),
        (Metric::OmaCs0, ocs0, err(or0.abs_error_estimate, ol.abs_error_estimate)),
        (Metric::OmaCs1, ocs1, err(or1.abs_error_estimate, ol.abs_error_estimate)),
        (Metric::OmaCsSum, ocs0 + ocs1, or0.abs_error_estimate + or1.abs_error_estimate + 2.0 * ol.abs_error_estimate),
        (Metric::OmaP0, op0.value, op0.abs_error_estimate),
        (Metric::OmaP1, op1.value, op1.abs_error_estimate),
        (Metric::OmaSop, compose_sop(op0.value, op1.value), err(op0.abs_error_estimate, op1.abs_error_estimate)),
    ])
}

fn mc_metrics(
    p: &SystemParams,
    cfg: &ParsedConfig,
    observer: &mut dyn FnMut(&SystemParams, &Simulation),
) -> Result<(usize, Vec<(Metric, McEstimate)>)> {
    let sim = simulate(p, &cfg.mc)?;
    observer(p, &sim);
    let r = rate_estimates(p, &sim.reports);
    let s = sop_estimates(p, &sim.reports);
    Ok((
        sim.reports.len(),
        vec![
            (Metric::R0, r.r0),
            (Metric::R1, r.r1),
            (Metric::ReW0, r.re_w0),
            (Metric::ReW1, r.re_w1),
            (Metric::Cs0, r.cs0),
            (Metric::Cs1, r.cs1),
            (Metric::CsSum, r.cs_sum),
            (Metric::PW0, s.p_w0),
            (Metric::PW1, s.p_w1),
            (Metric::Sop, s.sop_direct),
            (Metric::SopProduct, s.sop_product),
            (Metric::OmaR0, r.oma_r0),
            (Metric::OmaR1, r.oma_r1),
            (Metric::OmaRe, r.oma_re),
            (Metric::OmaCs0, r.oma_cs0),
            (Metric::OmaCs1, r.oma_cs1),
            (Metric::OmaCsSum, r.oma_cs_sum),
            (Metric::OmaP0, s.oma_p0),
            (Metric::OmaP1, s.oma_p1),
            (Metric::OmaSop, s.oma_sop_direct),
            (Metric::OmaSopProduct, s.oma_sop_product),
        ],
    ))
}

/// Evaluates one sweep point. Failures end up in the record's error field.
pub fn evaluate_point(
    experiment: &str,
    pt: &SweepPoint,
    cfg: &ParsedConfig,
    opts: RunOptions,
) -> SweepRecord {
    evaluate_point_observed(experiment, pt, cfg, opts, &mut |_, _| {})
}

/// [`evaluate_point`], handing the raw simulation to `observer` before it is
/// reduced to estimates.
pub fn evaluate_point_observed(
    experiment: &str,
    pt: &SweepPoint,
    cfg: &ParsedConfig,
    opts: RunOptions,
    observer: &mut dyn FnMut(&SystemParams, &Simulation),
) -> SweepRecord {
    let mut rec = SweepRecord {
        experiment: experiment.to_string(),
        series: pt.series.clone(),
        param: pt.param.clone(),
        value: pt.value,
        seed: cfg.mc.seed,
        n_realizations: 0,
        metrics: vec![MetricValue::default(); Metric::ALL.len()],
        error: None,
    };
    let mut errors = Vec::new();
    if opts.analytic {
        match analytic_metrics(&pt.params, cfg) {
            Ok(vals) => {
                for (m, v, e) in vals {
                    let slot = rec.get_mut(m);
                    slot.analytic = Some(v);
                    slot.analytic_err = Some(e);
                }
            }
            Err(e) => errors.push(format!("analytic: {e}")),
        }
    }
    if opts.mc {
        match mc_metrics(&pt.params, cfg, observer) {
            Ok((n, vals)) => {
                rec.n_realizations = n;
                for (m, est) in vals {
                    let slot = rec.get_mut(m);
                    slot.mc = Some(est.mean);
                    slot.mc_se = Some(est.std_err);
                }
            }
            Err(e) => errors.push(format!("mc: {e}")),
        }
    }
    if !errors.is_empty() {
        rec.error = Some(errors.join("; "));
    }
    rec
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exp}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], " ")
}

pub fn csv_header() -> String {
    let mut cols = vec![
        "experiment".to_string(),
        "series".into(),
        "param".into(),
        "value".into(),
        "seed".into(),
        "n_realizations".into(),
    ];
    for m in Metric::ALL {
        cols.push(format!("{}_analytic", m.name()));
        cols.push(format!("{}_mc", m.name()));
        cols.push(format!("{}_mc_se", m.name()));
    }
    cols.push("flag".into());
    cols.push("flagged_metrics".into());
    cols.push("error".into());
    cols.join(",")
}

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut s = csv_header();
    s.push('\n');
    for r in records {
        let mut cols = vec![
            sanitize(&r.experiment),
            sanitize(&r.series),
            sanitize(&r.param),
            opt(r.value),
            r.seed.to_string(),
            r.n_realizations.to_string(),
        ];
        for m in Metric::ALL {
            let v = r.get(m);
            cols.push(opt(v.analytic));
            cols.push(opt(v.mc));
            cols.push(opt(v.mc_se));
        }
        let flagged = r.flagged();
        cols.push(if flagged.is_empty() { "0" } else { "1" }.into());
        cols.push(flagged.iter().map(|m| m.name()).collect::<Vec<_>>().join(";"));
        cols.push(r.error.as_deref().map(sanitize).unwrap_or_default());
        let _ = writeln!(s, "{}", cols.join(","));
    }
    s
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<SweepRecord>,
    pub csv: PathBuf,
    pub plots: Vec<PathBuf>,
}

fn plot_metric(
    id: ExperimentId,
    records: &[SweepRecord],
    noma_metric: Metric,
    oma_metric: Metric,
    y_label: &str,
) -> String {
    let mut series_names: Vec<&str> = Vec::new();
    for r in records {
        if !series_names.contains(&r.series.as_str()) {
            series_names.push(&r.series);
        }
    }
    let mut series = Vec::new();
    for name in &series_names {
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.series == *name).collect();
        let pts = |m: Metric, mc: bool| -> Vec<(f64, f64)> {
            rows.iter()
                .filter_map(|r| {
                    let v = r.get(m);
                    let y = if mc { v.mc } else { v.analytic };
                    Some((r.value?, y?))
                })
                .collect()
        };
        let label = if name.is_empty() { String::new() } else { format!(" {name}") };
        for (m, tag, dashed) in [(noma_metric, "NOMA", false), (oma_metric, "OMA", true)] {
            series.push(Series {
                label: format!("{tag}{label} analytic"),
                points: pts(m, false),
                dashed,
                markers: false,
            });
            series.push(Series {
                label: format!("{tag}{label} MC"),
                points: pts(m, true),
                dashed,
                markers: true,
            });
        }
    }
    let x_label = records.first().map(|r| r.param.clone()).unwrap_or_default();
    render_svg(
        &PlotSpec {
            title: format!("{id}: {y_label}"),
            x_label,
            y_label: y_label.to_string(),
        },
        &series,
    )
}

/// Runs all points of `id`, writing `<id>.csv` and the plots into `out_dir`.
pub fn run_experiment(
    id: ExperimentId,
    cfg: &ParsedConfig,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<ExperimentOutput> {
    run_experiment_observed(id, cfg, out_dir, opts, &mut |_, _| {})
}

/// [`run_experiment`] with access to every point's raw simulation.
pub fn run_experiment_observed(
    id: ExperimentId,
    cfg: &ParsedConfig,
    out_dir: &Path,
    opts: RunOptions,
    observer: &mut dyn FnMut(&SystemParams, &Simulation),
) -> Result<ExperimentOutput> {
    let points = sweep_points(id, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let mut records = Vec::with_capacity(points.len());
    for (i, pt) in points.iter().enumerate() {
        log::info!(
            "{id}: point {}/{} {} {}={}",
            i + 1,
            points.len(),
            pt.series,
            pt.param,
            pt.value.map(format_sig9).unwrap_or_default()
        );
        let rec = evaluate_point_observed(id.name(), pt, cfg, opts, observer);
        if let Some(e) = &rec.error {
            log::warn!("{id}: point {} failed: {e}", i + 1);
        }
        for m in rec.flagged() {
            log::warn!("{id}: point {} flags {}", i + 1, m.name());
        }
        records.push(rec);
    }
    let csv = out_dir.join(format!("{id}.csv"));
    std::fs::write(&csv, records_to_csv(&records))?;

    let panels: &[(Metric, Metric, &str)] = match id {
        ExperimentId::Fig2 | ExperimentId::Fig3 => &[(Metric::CsSum, Metric::OmaCsSum, "sum secrecy rate")],
        ExperimentId::Fig4 | ExperimentId::Fig5 => &[(Metric::Sop, Metric::OmaSop, "SOP")],
        ExperimentId::Custom => &[
            (Metric::CsSum, Metric::OmaCsSum, "sum secrecy rate"),
            (Metric::Sop, Metric::OmaSop, "SOP"),
        ],
    };
    let mut plots = Vec::new();
    if records.iter().any(|r| r.value.is_some()) {
        for (k, (m, om, label)) in panels.iter().enumerate() {
            let path = if panels.len() == 1 {
                out_dir.join(format!("{id}.svg"))
            } else {
                out_dir.join(format!("{id}_{k}.svg"))
            };
            std::fs::write(&path, plot_metric(id, &records, *m, *om, label))?;
            plots.push(path);
        }
    }
    Ok(ExperimentOutput {
        records,
        csv,
        plots,
    })
}
