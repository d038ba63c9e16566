use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use noma_secrecy::harness::config::SWEEPABLE;
use noma_secrecy::harness::experiment::{evaluate_point, format_sig9, SweepPoint};
use noma_secrecy::harness::{
    parse_config, run_experiment, ExperimentId, Metric, ParsedConfig, RunOptions, SweepSpec,
};
use noma_secrecy::montecarlo::{simulate, write_records};

#[derive(Parser)]
#[command(name = "noma-secrecy", version, about = "Secrecy rate and SOP evaluation for multi-cell MIMO-NOMA under pilot attacks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form metrics at the configured point
    Analytic,
    /// Run the Monte-Carlo engine at the configured point
    Simulate {
        /// Write per-realization SINRs to this file
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Reproduce one of the figure sweeps (fig2..fig5)
    Figure {
        id: String,
        #[command(flatten)]
        out: Output,
    },
    /// One-dimensional sweep from the config or the command line
    Sweep {
        /// Parameter to sweep (overrides `sweep_param`)
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values (overrides `sweep_values`)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    no_mc: bool,
    #[arg(long)]
    no_analytic: bool,
}

impl Output {
    fn options(&self) -> anyhow::Result<RunOptions> {
        if self.no_mc && self.no_analytic {
            bail!("--no-mc and --no-analytic leave nothing to compute");
        }
        Ok(RunOptions { analytic: !self.no_analytic, mc: !self.no_mc })
    }
}

fn load(common: &Common) -> anyhow::Result<ParsedConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => ParsedConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = common.realizations {
        cfg.mc.n_realizations = n;
    }
    if common.threads.is_some() {
        cfg.mc.threads = common.threads;
    }
    cfg.mc.validate()?;
    Ok(cfg)
}

fn single_point(cfg: &ParsedConfig) -> SweepPoint {
    SweepPoint { series: String::new(), param: String::new(), value: None, params: cfg.params.clone() }
}

fn print_metrics(cfg: &ParsedConfig, opts: RunOptions) -> anyhow::Result<()> {
    let rec = evaluate_point("point", &single_point(cfg), cfg, opts);
    if let Some(e) = &rec.error {
        bail!("{e}");
    }
    let mut out = std::io::stdout().lock();
    if opts.mc {
        writeln!(out, "seed = {}", rec.seed)?;
        writeln!(out, "n_realizations = {}", rec.n_realizations)?;
    }
    for m in Metric::ALL {
        let v = rec.get(m);
        if let Some(a) = v.analytic {
            writeln!(out, "{} = {}", m.name(), format_sig9(a))?;
        }
        if let (Some(x), Some(se)) = (v.mc, v.mc_se) {
            writeln!(out, "{}_mc = {} +- {}", m.name(), format_sig9(x), format_sig9(se))?;
        }
    }
    for m in rec.flagged() {
        log::warn!("{} analytic and simulated values differ by more than 3 SE", m.name());
    }
    Ok(())
}

fn report(out: &noma_secrecy::harness::experiment::ExperimentOutput) {
    let failed = out.records.iter().filter(|r| r.error.is_some()).count();
    println!("wrote {}", out.csv.display());
    for p in &out.plots {
        println!("wrote {}", p.display());
    }
    if failed > 0 {
        println!("{failed} of {} points failed (see the error column)", out.records.len());
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = load(&cli.common)?;
    match cli.command {
        Command::Analytic => print_metrics(&cfg, RunOptions { analytic: true, mc: false })?,
        Command::Simulate { records } => {
            print_metrics(&cfg, RunOptions { analytic: false, mc: true })?;
            if let Some(path) = records {
                let sim = simulate(&cfg.params, &cfg.mc)?;
                let mut w = BufWriter::new(File::create(&path)?);
                write_records(&sim, &mut w)?;
                w.flush()?;
                println!("wrote {}", path.display());
            }
        }
        Command::Figure { id, out } => {
            let id: ExperimentId = id.parse()?;
            if id == ExperimentId::Custom {
                bail!("use the `sweep` subcommand for custom sweeps");
            }
            let res = run_experiment(id, &cfg, &out.out, out.options()?)?;
            report(&res);
        }
        Command::Sweep { param, values, out } => {
            match (param, values) {
                (Some(param), Some(values)) => {
                    if !SWEEPABLE.contains(&param.as_str()) {
                        bail!("`{param}` cannot be swept; choose one of {}", SWEEPABLE.join(", "));
                    }
                    cfg.sweep = Some(SweepSpec { param, values });
                }
                (None, None) => {}
                _ => bail!("--param and --values go together"),
            }
            if cfg.sweep.is_none() {
                bail!("no sweep given (set sweep_param/sweep_values or pass --param/--values)");
            }
            let res = run_experiment(ExperimentId::Custom, &cfg, &out.out, out.options()?)?;
            report(&res);
        }
    }
    Ok(())
}
