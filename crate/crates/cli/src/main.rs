mod wind;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use windopf::driver::{solve_wind_opf, InitMode, SocaSolution, SolveOptions, SolveStatus};
use windopf::netmodel::{parse_matpower_case, PowerNetwork, WindFarm};
use windopf::windcost::{cost_curve, fit_gmm_em, read_wind_csv, write_cost_curve_csv, EmOptions, GmmModel};

use crate::wind::WindSpec;

#[derive(Parser)]
#[command(name = "windopf", version, about = "Wind-integrated approximate AC OPF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write solution, error report and iteration trace.
    Solve {
        case: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Uniform multiplier on all loads.
        #[arg(long, default_value_t = 1.0)]
        load_scale: f64,
        /// Keep a text dump of every assembled program in the trace.
        #[arg(long)]
        dump_programs: bool,
    },
    /// Fit a Gaussian mixture to a CSV of MW samples.
    FitGmm {
        #[arg(long)]
        data: PathBuf,
        #[arg(short = 'K', long = "components", default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Upper end of the output support (MW); defaults to the sample maximum.
        #[arg(long)]
        support_max: Option<f64>,
        /// Write the model here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate shortage, surplus and total wind cost over schedules.
    Windcost {
        #[arg(long)]
        gmm: PathBuf,
        /// Shortage penalties ($/MWh); the grid is every (kl, kh) pair.
        #[arg(long, value_delimiter = ',')]
        kl: Vec<f64>,
        /// Surplus penalties ($/MWh).
        #[arg(long, value_delimiter = ',')]
        kh: Vec<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Schedule range (MW); defaults to [0, support maximum].
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve several cases, optionally over load scales, in parallel.
    Benchmark {
        cases: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        load_scales: Vec<f64>,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Flat,
    Dcopf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Wind farm attachment, repeatable.
    #[arg(long = "wind")]
    wind: Vec<WindSpec>,
    /// Relaxation-gap tolerance (p.u.).
    #[arg(long, default_value_t = 1e-4)]
    tol_gap: f64,
    /// Branch flow-error limit (p.u.).
    #[arg(long, default_value_t = 1e-3)]
    tol_gamma: f64,
    /// Outer iteration cap.
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    /// Tangent segments per flow limit.
    #[arg(long, default_value_t = 16)]
    segments: usize,
    #[arg(long, value_enum, default_value_t = Init::Flat)]
    init: Init,
    /// Seed for GMM fitting of `data=` wind attachments.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl RunArgs {
    fn options(&self, dump_programs: bool) -> SolveOptions {
        SolveOptions {
            init: match self.init {
                Init::Flat => InitMode::Flat,
                Init::Dcopf => InitMode::DcOpf,
            },
            tol_gap: self.tol_gap,
            tol_gamma: self.tol_gamma,
            max_outer_iterations: self.max_iter,
            segments: self.segments,
            dump_programs,
            ..SolveOptions::default()
        }
    }

    fn farms(&self) -> Result<Vec<WindFarm>> {
        self.wind.iter().map(|w| w.build(self.seed)).collect()
    }
}

/// A failure with its exit code: 2 for bad input, 3 for solver trouble.
struct Failure {
    code: u8,
    error: anyhow::Error,
    message: Option<String>,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let solver = error.chain().any(|c| {
            matches!(
                c.downcast_ref::<windopf::Error>(),
                Some(windopf::Error::Numerical(_) | windopf::Error::Assembly(_) | windopf::Error::CutGeneration { .. })
            )
        });
        Failure { code: if solver { 3 } else { 2 }, error, message: None }
    }
}

fn not_found(path: &Path) -> Failure {
    Failure {
        code: 2,
        error: anyhow::anyhow!("{}", path.display()),
        message: Some("case file not found".into()),
    }
}

fn load_case(path: &Path) -> Result<PowerNetwork, Failure> {
    if !path.is_file() {
        return Err(not_found(path));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let net = if path.extension().is_some_and(|e| e == "json") {
        PowerNetwork::from_json(&text)
    } else {
        parse_matpower_case(&text)
    }
    .with_context(|| format!("parsing {}", path.display()))?;
    Ok(net)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::NotConverged => "not_converged",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::SolverFailure => "solver_failure",
    }
}

fn print_summary(out: &mut impl Write, case: &Path, sol: &SocaSolution) -> io::Result<()> {
    let line = |out: &mut dyn Write, k: &str, v: String| writeln!(out, "{k:<22}{v}");
    line(out, "case", case.display().to_string())?;
    line(out, "status", format!("{} ({} iterations, {:.3} s)", status_name(sol.status), sol.iterations(), sol.solve_time))?;
    if let Some(msg) = &sol.message {
        line(out, "note", msg.clone())?;
    }
    if sol.report.is_none() {
        return Ok(());
    }
    let (fossil_pct, wind_pct) = sol.cost_split_pct();
    line(out, "total cost", format!("{:.2} $/h", sol.fossil_cost + sol.wind_cost))?;
    line(out, "  fossil", format!("{:.2} ({fossil_pct:.2}%)", sol.fossil_cost))?;
    line(out, "  wind", format!("{:.2} ({wind_pct:.2}%)", sol.wind_cost))?;
    let wind_mw: f64 = sol.wind.iter().fold(0.0, |a, w| a + w.p_mw);
    line(out, "scheduled wind", format!("{wind_mw:.3} MW"))?;
    let s = &sol.report.as_ref().unwrap().summary;
    line(out, "restored cost", format!("{:.2} $/h", s.objective_restored))?;
    line(out, "objective error", format!("{:.3e} %", s.objective_error_pct))?;
    line(out, "max voltage error", format!("{:.3e} p.u.", s.max_v_error))?;
    line(out, "max angle error", format!("{:.3e} rad", s.max_theta_error))?;
    line(out, "max P flow error", format!("{:.3e} p.u.", s.max_p_flow_error))?;
    line(out, "max Q flow error", format!("{:.3e} p.u.", s.max_q_flow_error))?;
    line(out, "max |Γ|", format!("{:.3e}", s.max_abs_gamma))
}

fn cmd_solve(case: &Path, run: &RunArgs, load_scale: f64, dump_programs: bool) -> Result<u8, Failure> {
    let mut net = load_case(case)?;
    if load_scale != 1.0 {
        net = net.with_load_scale(load_scale);
    }
    let farms = run.farms()?;
    if !farms.is_empty() {
        net = net.with_wind_farms(farms)?;
    }
    let sol = solve_wind_opf(&net, &run.options(dump_programs))?;
    let stable = sol.without_timings();
    write_file(&run.out.join("solution.json"), stable.to_json()?.as_bytes())?;
    write_file(&run.out.join("trace.json"), stable.trace.to_json()?.as_bytes())?;
    let timing = json!({
        "solve_time": sol.solve_time,
        "iterations": sol.trace.iterations.iter().map(|it| it.time).collect::<Vec<_>>(),
    });
    write_file(&run.out.join("timing.json"), serde_json::to_string_pretty(&timing)?.as_bytes())?;
    if let Some(report) = &sol.report {
        match run.format {
            Format::Csv => {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write_file(&run.out.join("errors.csv"), &buf)?;
            }
            Format::Json => write_file(&run.out.join("errors.json"), serde_json::to_string_pretty(report)?.as_bytes())?,
        }
        write_file(&run.out.join("summary.json"), report.summary_json()?.as_bytes())?;
    }
    if let Some(program) = &sol.failed_program {
        write_file(&run.out.join("failed_program.txt"), program.as_bytes())?;
    }
    print_summary(&mut io::stdout().lock(), case, &sol)?;
    Ok(sol.status.exit_code() as u8)
}

fn cmd_fit_gmm(data: &Path, k: usize, opts: EmOptions, out: Option<&Path>) -> Result<u8, Failure> {
    if !data.is_file() {
        return Err(Failure { message: Some("data file not found".into()), ..not_found(data) });
    }
    let samples = read_wind_csv(data)?;
    let fit = fit_gmm_em(&samples, k, &opts)?;
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "{} samples, {} iterations{}, log-likelihood {:.6}",
        samples.len(),
        fit.iterations,
        if fit.converged { "" } else { " (not converged)" },
        fit.log_likelihood.last().copied().unwrap_or(f64::NAN)
    )?;
    writeln!(err, "{:>4} {:>10} {:>12} {:>12}", "k", "weight", "mean", "stddev")?;
    let m = &fit.model;
    for i in 0..m.k() {
        writeln!(err, "{:>4} {:>10.6} {:>12.4} {:>12.4}", i, m.weights[i], m.means[i], m.stddevs[i])?;
    }
    let text = m.to_json()?;
    match out {
        Some(p) => write_file(p, text.as_bytes())?,
        None => println!("{text}"),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_windcost(gmm: &Path, kl: &[f64], kh: &[f64], points: usize, lo: Option<f64>, hi: Option<f64>, out: Option<&Path>) -> Result<u8, Failure> {
    if !gmm.is_file() {
        return Err(Failure { message: Some("GMM file not found".into()), ..not_found(gmm) });
    }
    let model = GmmModel::load(gmm)?;
    let (lo, hi) = (lo.unwrap_or(0.0), hi.unwrap_or(model.support_max));
    let curves: Vec<_> = kl
        .iter()
        .flat_map(|&l| kh.iter().map(move |&h| (l, h)))
        .map(|(l, h)| cost_curve(&model, l, h, lo, hi, points))
        .collect();
    let mut buf = Vec::new();
    write_cost_curve_csv(&mut buf, &curves)?;
    match out {
        Some(p) => write_file(p, &buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct BenchRow {
    case: String,
    load_scale: f64,
    status: String,
    objective: f64,
    objective_error_pct: f64,
    max_v_error: f64,
    max_theta_error: f64,
    max_p_flow_error: f64,
    time: f64,
    iterations: usize,
    error: String,
}

fn bench_one(case: &Path, scale: f64, run: &RunArgs, farms: &[WindFarm]) -> BenchRow {
    let mut row = BenchRow {
        case: case.display().to_string(),
        load_scale: scale,
        status: "error".into(),
        objective: f64::NAN,
        objective_error_pct: f64::NAN,
        max_v_error: f64::NAN,
        max_theta_error: f64::NAN,
        max_p_flow_error: f64::NAN,
        time: 0.0,
        iterations: 0,
        error: String::new(),
    };
    let started = Instant::now();
    let result = (|| -> Result<SocaSolution, Failure> {
        let mut net = load_case(case)?.with_load_scale(scale);
        if !farms.is_empty() {
            net = net.with_wind_farms(farms.to_vec())?;
        }
        Ok(solve_wind_opf(&net, &run.options(false))?)
    })();
    row.time = started.elapsed().as_secs_f64();
    match result {
        Ok(sol) => {
            row.status = status_name(sol.status).into();
            row.iterations = sol.iterations();
            row.objective = sol.objective;
            if let Some(r) = &sol.report {
                row.objective_error_pct = r.summary.objective_error_pct;
                row.max_v_error = r.summary.max_v_error;
                row.max_theta_error = r.summary.max_theta_error;
                row.max_p_flow_error = r.summary.max_p_flow_error;
            }
            row.error = sol.message.unwrap_or_default();
        }
        Err(f) => row.error = f.message.map_or_else(|| format!("{:#}", f.error), |m| format!("{m}: {}", f.error)),
    }
    row
}

fn cmd_benchmark(cases: &[PathBuf], run: &RunArgs, scales: &[f64], jobs: usize) -> Result<u8, Failure> {
    let farms = run.farms()?;
    let work: Vec<(&PathBuf, f64)> = cases.iter().flat_map(|c| scales.iter().map(move |&s| (c, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("starting worker pool")?;
    let rows: Vec<BenchRow> = pool.install(|| work.par_iter().map(|(c, s)| bench_one(c, *s, run, &farms)).collect());

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<28} {:>6} {:<14} {:>16} {:>11} {:>10} {:>10} {:>8} {:>5}",
        "case", "scale", "status", "objective", "obj err %", "max dV", "max dθ", "time s", "iter"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:<28} {:>6.2} {:<14} {:>16.4} {:>11.3e} {:>10.3e} {:>10.3e} {:>8.3} {:>5}{}",
            r.case,
            r.load_scale,
            r.status,
            r.objective,
            r.objective_error_pct,
            r.max_v_error,
            r.max_theta_error,
            r.time,
            r.iterations,
            if r.error.is_empty() { String::new() } else { format!("  {}", r.error) }
        )?;
    }
    let path = run.out.join(match run.format {
        Format::Csv => "benchmark.csv",
        Format::Json => "benchmark.json",
    });
    match run.format {
        Format::Json => write_file(&path, serde_json::to_string_pretty(&rows)?.as_bytes())?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            if rows.is_empty() {
                w.write_record([
                    "case",
                    "load_scale",
                    "status",
                    "objective",
                    "objective_error_pct",
                    "max_v_error",
                    "max_theta_error",
                    "max_p_flow_error",
                    "time",
                    "iterations",
                    "error",
                ])?;
            }
            write_file(&path, &w.into_inner().context("flushing benchmark CSV")?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { case, run, load_scale, dump_programs } => cmd_solve(case, run, *load_scale, *dump_programs),
        Command::FitGmm { data, k, seed, max_iter, support_max, out } => {
            let opts = EmOptions { max_iter: *max_iter, seed: *seed, support_max: *support_max, ..EmOptions::default() };
            cmd_fit_gmm(data, *k, opts, out.as_deref())
        }
        Command::Windcost { gmm, kl, kh, points, lo, hi, out } => {
            cmd_windcost(gmm, kl, kh, *points, *lo, *hi, out.as_deref())
        }
        Command::Benchmark { cases, run, load_scales, jobs } => cmd_benchmark(cases, run, load_scales, *jobs),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let body = match &f.message {
                Some(m) => json!({ "error": m, "detail": format!("{:#}", f.error), "exit_code": f.code }),
                None => json!({ "error": format!("{:#}", f.error), "exit_code": f.code }),
            };
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}
