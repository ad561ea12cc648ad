use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use bipcp::combinatorics::{count_bound, enumerate_paths, DEFAULT_LENGTH_CAP};
use bipcp::contact::{
    run_star_with_rng, star_extinction_means, trial_rng, Rates, SimConfig, StarInit, SurvivalProxy,
};
use bipcp::harness::{
    emit_phase_diagram, fit_slope, load_kv, sweep_theta_with, verify_all, with_workers,
    DiagramFormat, DiagramSlice, ExperimentConfig, FitBand, FitPoint, KvConfig, VerifyCounts,
    SWEEP_CSV_HEADER,
};
use bipcp::hypergraph::{Hypergraph, RootSpec, Window};
use bipcp::phase::{classify, AxisRange, ModelParams};
use bipcp::stats::{mean_se, median};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "bipcp",
    version,
    about = "Two-rate contact process on the bipartite random connection hypergraph"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    gamma1: Option<f64>,
    #[arg(long, global = true)]
    gamma2: Option<f64>,
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Comma-separated list.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Window half-length (comma-separated list for `percolation`).
    #[arg(long = "L", global = true)]
    l: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    /// alive, target or either.
    #[arg(long, global = true)]
    proxy: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "BIPCP_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify one point, or emit a phase-diagram slice.
    Phase {
        /// Grid points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// `gammas` (fixed a) or `one-type` (γ1 = γ2, varying a).
        #[arg(long, default_value = "gammas")]
        slice: String,
        #[arg(long, default_value_t = 5.0)]
        a_max: f64,
    },
    /// Survival-probability sweep over λ.
    Simulate {
        /// Type-1 and type-2 target thresholds for the target proxies.
        #[arg(long, default_value_t = 0.01)]
        u1: f64,
        #[arg(long, default_value_t = 0.01)]
        u2: f64,
        #[arg(long)]
        max_events: Option<u64>,
        /// Slope band half-width around A⋆.
        #[arg(long, default_value_t = 0.5)]
        tol: f64,
    },
    /// Star extinction times: exact means and Monte Carlo.
    Star {
        #[arg(long)]
        leaves: usize,
    },
    /// Enumerate combinatorial paths of a given length.
    Paths {
        #[arg(long)]
        len: usize,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run every cross-check and write a JSON report.
    Verify {
        #[arg(long)]
        quick: bool,
    },
    /// Largest-component fraction against window size.
    Percolation,
}

/// Flag values with config-file fallback.
struct Settings {
    flags: Common,
    file: KvConfig,
}

impl Settings {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map_err(|e| anyhow!("config file: {e}")),
        }
    }

    fn req<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(flag, key)?
            .ok_or_else(|| anyhow!("missing --{}", key.replace('_', "-")))
    }

    fn list(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<f64>>> {
        let raw = match flag {
            Some(s) => Some(s.clone()),
            None => self.file.raw(key).map(str::to_string),
        };
        raw.map(|s| {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .with_context(|| format!("--{key}: bad number {t:?}"))
                })
                .collect()
        })
        .transpose()
    }

    fn f(&self, flag: Option<f64>, key: &str) -> Result<f64> {
        self.req(flag, key)
    }

    fn out(&self) -> Result<Box<dyn Write>> {
        let path = self.get(self.flags.out.clone(), "out")?;
        Ok(match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(&p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        })
    }

    fn format(&self, default: &str) -> Result<String> {
        Ok(self
            .get(self.flags.format.clone(), "format")?
            .unwrap_or_else(|| default.to_string()))
    }

    fn workers(&self) -> Result<Option<usize>> {
        self.get(self.flags.workers, "workers")
    }
}

fn write_json(w: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn cmd_phase(s: &Settings, grid: usize, slice: &str, a_max: f64) -> Result<i32> {
    let (g1, g2, a) = (
        s.get(s.flags.gamma1, "gamma1")?,
        s.get(s.flags.gamma2, "gamma2")?,
        s.get(s.flags.a, "a")?,
    );
    let mut w = s.out()?;
    if let (Some(g1), Some(g2), Some(a)) = (g1, g2, a) {
        let c = classify(g1, g2, a)?;
        write_json(&mut w, &serde_json::to_value(&c)?)?;
        return Ok(0);
    }
    let format: DiagramFormat = s.format("csv")?.parse()?;
    let axis = AxisRange::new(0.005, 0.995, grid);
    let slice = match slice {
        "gammas" => DiagramSlice::Gammas {
            gamma1: axis,
            gamma2: axis,
            a: a.unwrap_or(1.0),
        },
        "one-type" => DiagramSlice::OneType {
            gamma: AxisRange::new(0.505, 0.995, grid),
            a: AxisRange::new(a_max / grid.max(1) as f64, a_max, grid),
        },
        other => bail!("unknown slice {other:?}; expected gammas or one-type"),
    };
    emit_phase_diagram(&slice, format, &mut w)?;
    w.flush()?;
    Ok(0)
}

fn cmd_simulate(s: &Settings, u1: f64, u2: f64, max_events: Option<u64>, tol: f64) -> Result<i32> {
    let (g1, g2, a) = (
        s.f(s.flags.gamma1, "gamma1")?,
        s.f(s.flags.gamma2, "gamma2")?,
        s.f(s.flags.a, "a")?,
    );
    let lambdas = s
        .list(&s.flags.lambda, "lambda")?
        .ok_or_else(|| anyhow!("missing --lambda"))?;
    let mut cfg = ExperimentConfig::new(g1, g2, a, lambdas);
    if let Some(l) = s.list(&s.flags.l, "L")? {
        cfg.half_length = *l.first().ok_or_else(|| anyhow!("empty --L"))?;
    }
    cfg.trials = s.get(s.flags.trials, "trials")?.unwrap_or(cfg.trials);
    cfg.master_seed = s.get(s.flags.seed, "seed")?.unwrap_or(0);
    cfg.workers = s.workers()?;
    let proxy = s
        .get(s.flags.proxy.clone(), "proxy")?
        .unwrap_or_else(|| "alive".into());
    cfg.sim = SimConfig {
        t_max: s.get(s.flags.t_max, "t_max")?.unwrap_or(cfg.sim.t_max),
        max_events: max_events.unwrap_or(cfg.sim.max_events),
        survival_proxy: SurvivalProxy::parse(&proxy, u1, u2)
            .ok_or_else(|| anyhow!("unknown proxy {proxy:?}"))?,
        ..cfg.sim
    };
    cfg.validate()?;
    let format = s.format("json")?;
    let mut w = s.out()?;
    if format == "csv" {
        writeln!(w, "{SWEEP_CSV_HEADER}")?;
    }
    let rows = sweep_theta_with(&cfg, |row, recs| {
        let io = |e: io::Error| bipcp::Error::Io(e.to_string());
        match format.as_str() {
            "csv" => writeln!(w, "{}", row.csv_line()).map_err(io)?,
            "jsonl" => {
                for r in recs {
                    let line = json!({ "lambda": row.lambda, "trial": r.trial, "survived": r.survived,
                        "extinction_time": r.extinction_time, "peak": r.peak, "target_hit": r.target_hit });
                    writeln!(w, "{line}").map_err(io)?;
                }
            }
            _ => {}
        }
        w.flush().map_err(io)
    })?;
    match format.as_str() {
        "csv" | "jsonl" => {}
        "json" => {
            let pts: Vec<FitPoint> = rows.iter().map(FitPoint::from).collect();
            let band =
                FitBand::for_params(g1, g2, a, 0.0, 0.0).map(|b| FitBand::around(b.a_star, tol))?;
            let fit = match fit_slope(&pts, (0.0, 1.0), band) {
                Ok(f) => serde_json::to_value(f)?,
                Err(e) => json!({ "error": e.to_string() }),
            };
            write_json(&mut w, &json!({ "config": cfg, "rows": rows, "fit": fit }))?;
        }
        other => bail!("unsupported format {other:?}; expected json, jsonl or csv"),
    }
    w.flush()?;
    Ok(0)
}

fn cmd_star(s: &Settings, leaves: usize) -> Result<i32> {
    let lambdas = s
        .list(&s.flags.lambda, "lambda")?
        .ok_or_else(|| anyhow!("missing --lambda"))?;
    let a = s.get(s.flags.a, "a")?.unwrap_or(1.0);
    let trials = s.get(s.flags.trials, "trials")?.unwrap_or(1000);
    let seed = s.get(s.flags.seed, "seed")?.unwrap_or(0);
    let t_max = s.get(s.flags.t_max, "t_max")?.unwrap_or(1e6);
    if leaves == 0 || trials == 0 {
        bail!("--leaves and --trials must be positive");
    }
    let mut out = Vec::new();
    for &l in &lambdas {
        let rates = Rates::new(l, l.powf(a))?;
        let (exact_centre, exact_full) = star_extinction_means(leaves, rates);
        let cfg = SimConfig {
            t_max,
            ..Default::default()
        };
        let times: Vec<(f64, bool)> = with_workers(s.workers()?, || {
            (0..trials as u64)
                .into_par_iter()
                .map(|i| {
                    let o = run_star_with_rng(
                        leaves,
                        rates,
                        StarInit::CentreOnly,
                        &cfg,
                        &mut trial_rng(seed, i),
                    )
                    .expect("validated rates");
                    (o.extinction_time, o.alive_at_end)
                })
                .collect()
        })?;
        let xs: Vec<f64> = times.iter().map(|t| t.0).collect();
        let (m, se) = mean_se(&xs);
        out.push(json!({
            "lambda1": rates.lambda1, "lambda2": rates.lambda2, "leaves": leaves,
            "exact_mean_centre_only": exact_centre, "exact_mean_all_infected": exact_full,
            "mc_mean": m, "mc_se": se, "mc_median": median(&xs),
            "censored": times.iter().filter(|t| t.1).count(), "trials": trials,
        }));
    }
    write_json(&mut *s.out()?, &json!(out))?;
    Ok(0)
}

fn cmd_paths(s: &Settings, len: usize, k: Option<usize>) -> Result<i32> {
    let paths = enumerate_paths(len, k)?;
    let format = s.format("json")?;
    let mut w = s.out()?;
    match format.as_str() {
        "jsonl" => {
            for p in &paths {
                writeln!(w, "{}", json!({ "path": p.entries(), "k": p.distinct() }))?;
            }
        }
        "json" => {
            let per_k: Vec<_> = (1..=len + 1)
                .filter(|&kk| k.map_or(true, |k| k == kk))
                .map(|kk| {
                    let n = paths.iter().filter(|p| p.distinct() == kk).count();
                    json!({ "k": kk, "count": n, "bound": count_bound(len, kk).ok().map(|b| b.to_string()) })
                })
                .collect();
            write_json(
                &mut w,
                &json!({ "len": len, "cap": DEFAULT_LENGTH_CAP, "total": paths.len(), "by_k": per_k }),
            )?;
        }
        other => bail!("unsupported format {other:?}; expected json or jsonl"),
    }
    w.flush()?;
    Ok(0)
}

fn cmd_verify(s: &Settings, quick: bool) -> Result<i32> {
    let seed = s.get(s.flags.seed, "seed")?.unwrap_or(0);
    let counts = if quick {
        VerifyCounts::quick()
    } else {
        VerifyCounts::default()
    };
    let report = with_workers(s.workers()?, || verify_all(seed, counts))?;
    write_json(&mut *s.out()?, &serde_json::to_value(&report)?)?;
    for c in &report.checks {
        eprintln!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(if report.all_pass { 0 } else { 2 })
}

fn cmd_percolation(s: &Settings) -> Result<i32> {
    let (g1, g2) = (
        s.f(s.flags.gamma1, "gamma1")?,
        s.f(s.flags.gamma2, "gamma2")?,
    );
    let ls = s.list(&s.flags.l, "L")?.unwrap_or_else(|| vec![1e3]);
    let trials = s.get(s.flags.trials, "trials")?.unwrap_or(20);
    let seed = s.get(s.flags.seed, "seed")?.unwrap_or(0);
    for g in [g1, g2] {
        if !(g > 0.0 && g < 1.0) {
            bail!("gamma out of range (0,1): {g}");
        }
    }
    let params = ModelParams::new(g1, g2, 1.0, 0.5);
    let mut rows = Vec::new();
    for &l in &ls {
        let window = Window::new(l)?;
        let fracs: Vec<f64> = with_workers(s.workers()?, || {
            (0..trials as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(seed, i);
                    let g = Hypergraph::sample_with(
                        params.gamma1,
                        params.gamma2,
                        window,
                        i,
                        RootSpec::None,
                        &mut rng,
                    );
                    let c = g.connected_components();
                    c.first().map_or(0.0, |&m| m as f64 / g.len() as f64)
                })
                .collect()
        })?;
        let (m, se) = mean_se(&fracs);
        rows.push(json!({ "L": l, "largest_fraction_mean": m, "largest_fraction_se": se, "trials": trials }));
    }
    write_json(
        &mut *s.out()?,
        &json!({ "gamma1": g1, "gamma2": g2, "rows": rows }),
    )?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.common.config {
        Some(p) => load_kv(p).with_context(|| format!("reading {}", p.display()))?,
        None => KvConfig::default(),
    };
    let s = Settings {
        flags: cli.common,
        file,
    };
    match cli.cmd {
        Cmd::Phase { grid, slice, a_max } => cmd_phase(&s, grid, &slice, a_max),
        Cmd::Simulate {
            u1,
            u2,
            max_events,
            tol,
        } => cmd_simulate(&s, u1, u2, max_events, tol),
        Cmd::Star { leaves } => cmd_star(&s, leaves),
        Cmd::Paths { len, k } => cmd_paths(&s, len, k),
        Cmd::Verify { quick } => cmd_verify(&s, quick),
        Cmd::Percolation => cmd_percolation(&s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
