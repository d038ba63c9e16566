//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Trend criteria use one-sided tests: the closed-form curve must show the
//! claimed ordering, and the Monte-Carlo estimates must not contradict it by
//! more than two (unpaired) standard errors.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use noma_secrecy::analytic::Evaluator;
use noma_secrecy::geometry::NetworkRealization;
use noma_secrecy::harness::experiment::{
    evaluate_point_observed, run_experiment_observed, sweep_points, SweepPoint,
};
use noma_secrecy::harness::{ExperimentId, Metric, ParsedConfig, RunOptions, SweepRecord};
use noma_secrecy::montecarlo::{
    empirical_cdf_s, rate_estimates, secrecy_events, simulate, sop_estimates, McConfig, Simulation,
};
use noma_secrecy::params::{db_to_linear, Message, SystemParams, UserRole};
use noma_secrecy::sinr::{sinr_central_own, sinr_central_own_finite_m};
use noma_secrecy::QuadratureSpec;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    let l = Line { id, pass, detail: detail.into() };
    println!("{} criterion {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.detail);
    l
}

fn baseline() -> SystemParams {
    SystemParams {
        lambda_b: 10f64.powf(-3.5),
        lambda_u: 100.0 * 10f64.powf(-3.5),
        lambda_e: 10f64.powf(-4.5),
        ..SystemParams::default()
    }
}

fn mc() -> McConfig {
    McConfig { n_realizations: 1000, seed: 1, ..McConfig::default() }
}

/// Per-realization structural checks, accumulated over every simulation run here.
#[derive(Default)]
struct Invariants {
    realizations: usize,
    param_sets: Vec<SystemParams>,
    violations: Vec<String>,
}

impl Invariants {
    fn observe(&mut self, p: &SystemParams, sim: &Simulation) {
        let sup0 = p.attacker_sinr_supremum(Message::W0);
        let sup1 = p.attacker_sinr_supremum(Message::W1);
        let sup_oma = p.d_i / (1.0 - p.d_i);
        let slack = |x: f64| x * (1.0 + 1e-12);
        for (seed, r) in sim.seeds.iter().zip(&sim.reports) {
            self.realizations += 1;
            let mut bad = |what: &str| {
                if self.violations.len() < 10 {
                    self.violations.push(format!("seed {seed}: {what}"));
                }
            };
            if r.s_central < r.s_second || r.sinr_w1_at_central < r.sinr_w1_second {
                bad("SIC ordering");
            }
            let ev = secrecy_events(p, r);
            if ev.second_own && !ev.central_sic {
                bad("second user secure but central SIC step not");
            }
            if r.sinr_attacker_w0 > slack(sup0) || r.sinr_attacker_w1 > slack(sup1) || r.sinr_attacker_oma > slack(sup_oma) {
                bad("attacker SINR above supremum");
            }
        }
        if !self.param_sets.contains(p) {
            self.param_sets.push(p.clone());
        }
    }
}

fn metric(r: &SweepRecord, m: Metric) -> (f64, f64, f64) {
    let v = r.get(m);
    (
        v.analytic.unwrap_or(f64::NAN),
        v.mc.unwrap_or(f64::NAN),
        v.mc_se.unwrap_or(f64::NAN),
    )
}

/// `b - a` for analytic and MC, with the unpaired MC standard error.
fn delta(a: &SweepRecord, b: &SweepRecord, m: Metric) -> (f64, f64, f64) {
    let (aa, am, ase) = metric(a, m);
    let (ba, bm, bse) = metric(b, m);
    (ba - aa, bm - am, (ase * ase + bse * bse).sqrt())
}

/// Strict analytic increase along the sweep and no MC decrease beyond 2 sigma.
fn increasing(rows: &[&SweepRecord], m: Metric, sign: f64) -> (bool, String) {
    let mut ok = true;
    let mut worst_z = f64::INFINITY;
    for w in rows.windows(2) {
        let (da, dm, se) = delta(w[0], w[1], m);
        ok &= sign * da > 0.0;
        let z = sign * dm / se;
        worst_z = worst_z.min(z);
        ok &= z >= -2.0;
    }
    let first = metric(rows[0], m).0;
    let last = metric(rows[rows.len() - 1], m).0;
    (ok, format!("{} {first:.4}->{last:.4}, worst MC z {worst_z:.2}", m.name()))
}

fn series(records: &[SweepRecord]) -> Vec<(String, Vec<&SweepRecord>)> {
    let mut out: Vec<(String, Vec<&SweepRecord>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(s, _)| *s == r.series) {
            Some((_, v)) => v.push(r),
            None => out.push((r.series.clone(), vec![r])),
        }
    }
    out
}

fn has_errors(records: &[SweepRecord]) -> Option<String> {
    records.iter().find_map(|r| r.error.clone())
}

fn criterion_1_and_3(inv: &mut Invariants) -> Vec<Line> {
    let p = baseline();
    let e = Evaluator::new(p.clone(), QuadratureSpec::default()).unwrap();
    let sim = simulate(&p, &mc()).unwrap();
    inv.observe(&p, &sim);
    let est = rate_estimates(&p, &sim.reports);
    let checks = [
        ("R0", e.ergodic_rate_central().unwrap().value, est.r0.mean, 0.05),
        ("R1", e.ergodic_rate_second().unwrap().value, est.r1.mean, 0.05),
        ("Re_w0", e.ergodic_leakage(Message::W0).unwrap().value, est.re_w0.mean, 0.10),
        ("Re_w1", e.ergodic_leakage(Message::W1).unwrap().value, est.re_w1.mean, 0.10),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ana, sim_v, tol) in checks {
        let rel = (ana - sim_v).abs() / sim_v.abs();
        pass &= rel <= tol;
        parts.push(format!("{name} {ana:.5} vs {sim_v:.5} ({:.1}% <= {:.0}%)", 100.0 * rel, 100.0 * tol));
    }
    let mut lines = vec![line("1", pass, parts.join(", "))];

    let sop = e.sop_total().unwrap().value;
    let freq = sop_estimates(&p, &sim.reports).sop_direct.mean;
    lines.push(line(
        "3",
        (sop - freq).abs() <= 0.03,
        format!("lambda_b=-35dB lambda_e=-45dB targets 1.5/0.5: SOP {sop:.4} vs event frequency {freq:.4} (|diff| {:.4} <= 0.03)", (sop - freq).abs()),
    ));

    // same targets at the sparser BS density of the fig4 sweep, for the record
    let q = SystemParams { lambda_b: 1e-4, lambda_u: 1e-2, ..p };
    let sim = simulate(&q, &mc()).unwrap();
    inv.observe(&q, &sim);
    let sop = Evaluator::new(q.clone(), QuadratureSpec::default()).unwrap().sop_total().unwrap().value;
    let freq = sop_estimates(&q, &sim.reports).sop_direct.mean;
    println!("info criterion 3 at lambda_b=-40dB: SOP {sop:.4} vs event frequency {freq:.4} (|diff| {:.4})", (sop - freq).abs());
    lines
}

fn criterion_2() -> Line {
    let p = baseline();
    let e = Evaluator::new(p.clone(), QuadratureSpec::default()).unwrap();
    let ecdf = empirical_cdf_s(&p, 10_000, &mc()).unwrap();
    let ks = ecdf.ks_distance(|s| e.cdf_s(s).unwrap().value);
    line("2", ks <= 0.02, format!("Kolmogorov distance {ks:.4} at {} draws (<= 0.02)", ecdf.len()))
}

fn criterion_4a(fig2: &[SweepRecord]) -> Line {
    if let Some(err) = has_errors(fig2) {
        return line("4a", false, format!("fig2 point failed: {err}"));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rows) in series(fig2) {
        let (ok, msg) = increasing(&rows, Metric::CsSum, 1.0);
        pass &= ok;
        let (noma_a, noma_m, noma_se) = delta(rows[0], rows[rows.len() - 1], Metric::CsSum);
        let (oma_a, oma_m, oma_se) = delta(rows[0], rows[rows.len() - 1], Metric::OmaCsSum);
        let z = ((noma_m - oma_m) / (noma_se * noma_se + oma_se * oma_se).sqrt()).max(-1e9);
        let slope_ok = noma_a >= oma_a && z >= -2.0;
        pass &= slope_ok;
        parts.push(format!(
            "[{name}] {msg}; rise NOMA {noma_a:.4} vs OMA {oma_a:.4} (MC z {z:.2}){}",
            if slope_ok { "" } else { " slope claim not met" }
        ));
    }
    line("4a", pass, parts.join("; "))
}

fn criterion_4b(fig3: &[SweepRecord]) -> Line {
    if let Some(err) = has_errors(fig3) {
        return line("4b", false, format!("fig3 point failed: {err}"));
    }
    let mut pass = true;
    let mut worst = String::new();
    let mut worst_z = f64::INFINITY;
    let values: Vec<f64> = {
        let mut v: Vec<f64> = fig3.iter().filter_map(|r| r.value).collect();
        v.dedup();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    for a1 in &values {
        let rows: Vec<&SweepRecord> = fig3.iter().filter(|r| r.value == Some(*a1)).collect();
        let (ok, msg) = increasing(&rows, Metric::CsSum, 1.0);
        pass &= ok;
        for w in rows.windows(2) {
            let (_, dm, se) = delta(w[0], w[1], Metric::CsSum);
            if dm / se < worst_z {
                worst_z = dm / se;
                worst = format!("a1={a1}: {msg}");
            }
        }
        let (a, m, se) = metric(rows[0], Metric::CsSum);
        pass &= a > 0.0 && m - 2.0 * se > 0.0;
    }
    let (a, m, _) = metric(fig3.iter().find(|r| r.value == Some(0.6)).unwrap(), Metric::CsSum);
    line(
        "4b",
        pass,
        format!("Cs_sum increasing over r0 {{0,6,12}} at all {} a1 values; positive at r0=0 (a1=0.6: analytic {a:.4}, MC {m:.4}); weakest {worst}", values.len()),
    )
}

fn criterion_4c(cfg: &ParsedConfig, inv: &mut Invariants) -> Line {
    let grid = [0.55, 0.65, 0.75, 0.85, 0.95, 0.99, 0.999, 0.9999];
    let mut base = cfg.params.clone();
    base.lambda_b = db_to_linear(-35.0);
    base.lambda_u = 100.0 * base.lambda_b;
    base.lambda_e = db_to_linear(-10.0);
    base.r0 = 0.0;
    let records: Vec<SweepRecord> = grid
        .iter()
        .map(|&a1| {
            let pt = SweepPoint {
                series: String::new(),
                param: "a1".into(),
                value: Some(a1),
                params: SystemParams { a1, a0: 1.0 - a1, ..base.clone() },
            };
            evaluate_point_observed("crossover", &pt, cfg, RunOptions::default(), &mut |p, s| inv.observe(p, s))
        })
        .collect();
    if let Some(err) = has_errors(&records) {
        return line("4c", false, format!("point failed: {err}"));
    }
    let gap: Vec<f64> = records
        .iter()
        .map(|r| metric(r, Metric::OmaCsSum).0 - metric(r, Metric::CsSum).0)
        .collect();
    let crossing = (0..gap.len() - 1).find(|&i| gap[i] < 0.0 && gap[i + 1] > 0.0);
    let Some(i) = crossing else {
        return line("4c", false, format!("OMA minus NOMA sum secrecy rate never turns positive on a1 grid {grid:?}: {gap:.3?}"));
    };
    // MC must resolve the sign at both ends of the grid
    let z = |r: &SweepRecord| {
        let (_, m0, s0) = metric(r, Metric::CsSum);
        let (_, m1, s1) = metric(r, Metric::OmaCsSum);
        (m1 - m0) / (s0 * s0 + s1 * s1).sqrt()
    };
    let (z_lo, z_hi) = (z(&records[0]), z(&records[records.len() - 1]));
    line(
        "4c",
        z_lo <= -2.0 && z_hi >= 2.0,
        format!(
            "OMA overtakes NOMA for a1* in ({}, {}) (analytic gaps {:.3} -> {:.3}); MC z at a1={} is {z_lo:.1}, at a1={} is {z_hi:.1}",
            grid[i], grid[i + 1], gap[i], gap[i + 1], grid[0], grid[grid.len() - 1]
        ),
    )
}

fn criterion_4d(fig4: &[SweepRecord]) -> Line {
    if let Some(err) = has_errors(fig4) {
        return line("4d", false, format!("fig4 point failed: {err}"));
    }
    let groups = series(fig4);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rows) in &groups {
        let (ok, msg) = increasing(rows, Metric::Sop, 1.0);
        pass &= ok;
        parts.push(format!("[{name}] {msg}"));
    }
    let (lo, hi) = (&groups[0].1, &groups[1].1);
    let (mut noma_a, mut oma_a, mut diff_m, mut var) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in lo.iter().zip(hi) {
        let (na, nm, nse) = delta(a, b, Metric::Sop);
        let (oa, om, ose) = delta(a, b, Metric::OmaSop);
        pass &= na > 0.0 && nm / nse >= -2.0;
        noma_a += na;
        oma_a += oa;
        diff_m += om - nm;
        var += nse * nse + ose * ose;
    }
    let n = lo.len() as f64;
    let z = diff_m / var.sqrt();
    let sens_ok = oma_a > noma_a && z >= -2.0;
    pass &= sens_ok;
    parts.push(format!(
        "mean SOP rise from d_i 0.2->0.4: NOMA {:.4}, OMA {:.4} (MC z of OMA-NOMA {z:.2}){}",
        noma_a / n,
        oma_a / n,
        if sens_ok { "" } else { " OMA-sensitivity claim not met" }
    ));
    line("4d", pass, parts.join("; "))
}

fn criterion_4e(fig5: &[SweepRecord]) -> Line {
    if let Some(err) = has_errors(fig5) {
        return line("4e", false, format!("fig5 point failed: {err}"));
    }
    let groups = series(fig5);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rows) in &groups {
        let (ok, msg) = increasing(rows, Metric::Sop, -1.0);
        pass &= ok;
        parts.push(format!("[{name}] {msg}"));
    }
    let (lo, hi) = (&groups[0].1, &groups[1].1);
    let (mut noma_a, mut oma_a, mut diff_m, mut var) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in lo.iter().zip(hi) {
        let (na, nm, nse) = delta(a, b, Metric::Sop);
        let (oa, om, ose) = delta(a, b, Metric::OmaSop);
        pass &= na > 0.0 && nm / nse >= -2.0;
        noma_a += na;
        oma_a += oa;
        diff_m += om - nm;
        var += nse * nse + ose * ose;
    }
    let n = lo.len() as f64;
    let z = diff_m / var.sqrt();
    let penalty_ok = oma_a > noma_a && z >= -2.0;
    pass &= penalty_ok;
    parts.push(format!(
        "mean SOP rise for higher targets: NOMA {:.4}, OMA {:.4} (MC z of OMA-NOMA {z:.2}){}",
        noma_a / n,
        oma_a / n,
        if penalty_ok { "" } else { " OMA-penalty claim not met" }
    ));
    line("4e", pass, parts.join("; "))
}

fn criterion_5(inv: &Invariants) -> Line {
    let mut violations = inv.violations.clone();
    // ordered-user CDFs bracket the raw one on a 50-point log grid
    let mut seen = HashSet::new();
    let mut grids = 0;
    for p in &inv.param_sets {
        let key = format!("{:?}", (p.a0, p.b0, p.b1, p.n_order, p.alpha));
        if !seen.insert(key) {
            continue;
        }
        grids += 1;
        let e = Evaluator::new(p.clone(), QuadratureSpec::default()).unwrap();
        for i in 0..50 {
            let s = 10f64.powf(-3.0 + 9.0 * i as f64 / 49.0);
            let raw = e.cdf_s(s).unwrap().value;
            let c = e.cdf_s_ordered(s, UserRole::Central).unwrap().value;
            let sec = e.cdf_s_ordered(s, UserRole::Second).unwrap().value;
            if !(c <= raw + 1e-15 && raw <= sec + 1e-15) {
                violations.push(format!("CDF ordering at s={s:.3e}"));
            }
        }
    }
    line(
        "5",
        violations.is_empty() && inv.realizations > 0,
        format!(
            "{} realizations over {} parameter sets, {grids} CDF grids: {}",
            inv.realizations,
            inv.param_sets.len(),
            if violations.is_empty() { "no violations".to_string() } else { violations.join("; ") }
        ),
    )
}

fn criterion_6() -> Vec<Line> {
    let p = baseline();
    let e = Evaluator::new(p.clone(), QuadratureSpec::default()).unwrap();
    let r = p.derived().r;
    let mut worst: f64 = 0.0;
    for i in 0..12 {
        let f = 10f64.powf(-3.0 + 6.0 * i as f64 / 11.0);
        let lhs = e.f_tilde(f).unwrap().value;
        let rhs = 1.0 - e.cdf_s(r * f).unwrap().value;
        worst = worst.max((lhs - rhs).abs());
    }
    let mut out = vec![line("6a", worst <= 1e-8, format!("f_tilde vs 1 - cdf_S: max |diff| {worst:.2e} over 12 points (<= 1e-8)"))];

    let tight = Evaluator::new(p.clone(), QuadratureSpec::with_tolerances(1e-12, 1e-15)).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for m in [Message::W0, Message::W1] {
        let sup = p.attacker_sinr_supremum(m);
        for i in 0..50 {
            let x = sup * (0.05 + 1.45 * i as f64 / 49.0);
            let fd = (tight.cdf_attacker_sinr(x + h, m).unwrap().value - tight.cdf_attacker_sinr(x - h, m).unwrap().value) / (2.0 * h);
            let pdf = tight.pdf_attacker_sinr(x, m).unwrap().value;
            worst = worst.max((pdf - fd).abs());
        }
    }
    out.push(line("6b", worst <= 1e-4, format!("attacker pdf vs central difference: max |diff| {worst:.2e} on [0.05, 1.5] x supremum (<= 1e-4)")));

    let e9 = Evaluator::new(SystemParams { n_order: 9, u_order: 9, ..p.clone() }, QuadratureSpec::default()).unwrap();
    type Probe = fn(&Evaluator) -> f64;
    let metrics: [(&str, Probe); 5] = [
        ("R0", |e| e.ergodic_rate_central().unwrap().value),
        ("R1", |e| e.ergodic_rate_second().unwrap().value),
        ("Re_w0", |e| e.ergodic_leakage(Message::W0).unwrap().value),
        ("P_w0", |e| e.sop_central().unwrap().value),
        ("P_w1", |e| e.sop_second().unwrap().value),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f) in metrics {
        let (a, b) = (f(&e), f(&e9));
        let rel = (a - b).abs() / a.abs();
        pass &= rel <= 0.01;
        parts.push(format!("{name} {a:.5}/{b:.5} ({:.2}%)", 100.0 * rel));
    }
    out.push(line("6c", pass, format!("N=U=7 vs 9 within 1%: {}", parts.join(", "))));

    let mut pass = true;
    let mut shown = String::new();
    for k in 0..20u64 {
        let net = NetworkRealization::sample(&p, 1000 + k);
        let Ok(g) = net.tagged_geometry(&p, 1.0 / 3.0) else { continue };
        let serve = net.bs_points[g.tagged.cell];
        let r_serve = g.central.dist(&serve);
        let others: Vec<f64> = net
            .bs_points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != g.tagged.cell)
            .map(|(_, b)| g.central.dist(b))
            .collect();
        let limit = sinr_central_own(r_serve, &others, &p).unwrap();
        let gaps: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&m| {
                let q = SystemParams { antennas: m, ..p.clone() };
                (sinr_central_own_finite_m(r_serve, &others, &q).unwrap() - limit).abs() / limit
            })
            .collect();
        pass &= gaps[0] > gaps[1] && gaps[1] > gaps[2];
        if shown.is_empty() {
            shown = format!("{:.2e} > {:.2e} > {:.2e}", gaps[0], gaps[1], gaps[2]);
        }
    }
    out.push(line("6d", pass, format!("finite-M relative gap decreases over M = 1e2, 1e4, 1e6 in 20 geometries (first: {shown})")));
    out
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut inv = Invariants::default();
    let mut lines = Vec::new();
    let cfg = ParsedConfig::default();

    lines.extend(criterion_1_and_3(&mut inv));
    lines.push(criterion_2());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let fig2 = run_experiment_observed(ExperimentId::Fig2, &cfg, dir_a.path(), RunOptions::default(), &mut |p, s| inv.observe(p, s)).unwrap();
    lines.push(criterion_4a(&fig2.records));
    let fig3 = run_experiment_observed(ExperimentId::Fig3, &cfg, dir_a.path(), RunOptions::default(), &mut |p, s| inv.observe(p, s)).unwrap();
    lines.push(criterion_4b(&fig3.records));
    lines.push(criterion_4c(&cfg, &mut inv));
    let fig4 = run_experiment_observed(ExperimentId::Fig4, &cfg, dir_a.path(), RunOptions::default(), &mut |p, s| inv.observe(p, s)).unwrap();
    lines.push(criterion_4d(&fig4.records));
    let fig5 = run_experiment_observed(ExperimentId::Fig5, &cfg, dir_a.path(), RunOptions::default(), &mut |p, s| inv.observe(p, s)).unwrap();
    lines.push(criterion_4e(&fig5.records));

    lines.extend(criterion_6());

    let again = run_experiment_observed(ExperimentId::Fig2, &cfg, dir_b.path(), RunOptions::default(), &mut |p, s| inv.observe(p, s)).unwrap();
    let first = std::fs::read(&fig2.csv).unwrap();
    let second = std::fs::read(&again.csv).unwrap();
    assert_eq!(sweep_points(ExperimentId::Fig2, &cfg).unwrap().len(), fig2.records.len());
    lines.push(line(
        "7",
        first == second,
        format!("two fig2 runs with seed {}: {} and {} bytes, identical = {}", cfg.mc.seed, first.len(), second.len(), first == second),
    ));
    lines.push(criterion_5(&inv));

    let failed: Vec<&str> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!(
        "acceptance: {} passed, {} failed{} ({:.0} s)",
        lines.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) },
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
