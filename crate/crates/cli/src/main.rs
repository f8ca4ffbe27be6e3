//! Command-line front end for qlm-magic.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qlm_magic::basis::{format_bits, ConstrainedBasis};
use qlm_magic::eigensolver::{ChainSolver, SolverOptions};
use qlm_magic::gauge::{duality_check, QlmParams};
use qlm_magic::io::{
    emit_cut_files, emit_heatmaps, emit_rk_line, parse_config, read_json, sweep_rows, write_gs_text, write_json,
    write_sweep_csv, Checkpoint, ResultRecord, RkLinePoint, RunConfig,
};
use qlm_magic::rk::{m2_asymptotic, m2_finite, params_of_beta, RkPoint, RkState};
use qlm_magic::sampling::{estimate, estimate_table, SamplingPlan};
use qlm_magic::sre::{sre2_pauli_sum, sre2_quadruple_sum};
use qlm_magic::sweep::{grid_scan_with, powerlaw_fit, sliding_fits, PeakOptions, PointResult, SweepResult};
use qlm_magic::{CouplingParams, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

/// Couplings used by `gauge-verify` when none are given.
const DEFAULT_GAUGE_U: f64 = -1.3;
const DEFAULT_GAUGE_V: f64 = 0.7;

#[derive(Parser)]
#[command(name = "qlm-magic", version, about = "Stabilizer Renyi entropy of quantum link model ground states")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, or directory for `sweep` and `emit-plots`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Configuration file; command-line values take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ChainArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pauli,
    Quadruple,
}

#[derive(Subcommand)]
enum Command {
    /// Size of the constrained Hilbert space.
    Dim {
        #[arg(long)]
        length: usize,
    },
    /// List basis configurations, or orbit representatives of one momentum.
    Basis {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        momentum: Option<usize>,
    },
    /// Ground state of the chain.
    Gs {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Include amplitudes in the text output.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Gauss law and duality checks on the full gauge theory
    /// (defaults: L=4, U=-1.3, V=0.7).
    GaugeVerify {
        #[command(flatten)]
        chain: ChainArgs,
        /// Dictionary file with [chain] u, v and a [qlm] section.
        #[arg(long)]
        dict: Option<PathBuf>,
    },
    /// Exact SRE-2 of a ground state.
    SreExact {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value = "pauli")]
        method: Method,
    },
    /// Sampled SRE-2 density of a ground state, or of the solvable-line
    /// state with --beta.
    SreSample {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["u", "v"])]
        beta: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        quadruple_cap: Option<u64>,
        /// Per-run values as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Closed forms on the solvable line.
    RkLine {
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long)]
        length: Option<usize>,
        /// Add the exact finite-length value.
        #[arg(long)]
        finite: bool,
        /// `B0 B1 STEPS`: tabulate a range of beta as CSV.
        #[arg(long, num_args = 3, value_names = ["B0", "B1", "STEPS"], allow_hyphen_values = true)]
        scan: Option<Vec<String>>,
    },
    /// Scan a cut of the phase diagram from a configuration file.
    Sweep {
        /// Reuse points recorded in the checkpoint of a previous run.
        #[arg(long)]
        resume: bool,
    },
    /// Power-law fits of M2 against L from a CSV with columns L,M2.
    FitAlpha {
        #[arg(long = "in")]
        input: PathBuf,
        /// Sliding window width; all points when omitted.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Plot-ready CSVs from sweep results.
    EmitPlots {
        /// `sweep_result.json` files or sweep output directories.
        #[arg(long, num_args = 1..)]
        sweep: Vec<PathBuf>,
        /// Solvable-line comparison over `B0 B1 STEPS`.
        #[arg(long, num_args = 3, value_names = ["B0", "B1", "STEPS"], allow_hyphen_values = true)]
        rk_scan: Option<Vec<String>>,
        #[arg(long, default_value_t = 30)]
        rk_length: usize,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
}

enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::InvalidSize { .. }
                | Error::SizeCap { .. }
                | Error::NonUniformGrid(_)
                | Error::DimensionMismatch { .. }
                | Error::Overflow { .. } => EXIT_CONFIG,
                Error::NotConverged { .. } | Error::AllPointsFailed(_) | Error::NonPositiveMean { .. } => {
                    EXIT_CONVERGENCE
                }
                Error::Io { .. } | Error::Format { .. } => EXIT_IO,
                _ => EXIT_FAILURE,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Context {
    cfg: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Context {
    fn params(&self, chain: &ChainArgs) -> CliResult<(usize, CouplingParams)> {
        let length = chain
            .length
            .or_else(|| self.cfg.chain.lengths.first().copied())
            .ok_or_else(|| usage("--length is required"))?;
        let u = chain.u.or(self.cfg.chain.u).ok_or_else(|| usage("--u is required"))?;
        let v = chain.v.or(self.cfg.chain.v).ok_or_else(|| usage("--v is required"))?;
        let w = chain.w.unwrap_or(self.cfg.chain.w);
        let p = CouplingParams::with_w(w, u, v);
        p.validate()?;
        Ok((length, p))
    }

    fn solver(&self, length: usize) -> CliResult<ChainSolver> {
        let opts = SolverOptions {
            tol: self.cfg.chain.tol,
            ..SolverOptions::default()
        };
        Ok(ChainSolver::new(length, opts)?)
    }

    fn plan(&self, samples: Option<usize>, runs: Option<usize>, cap: Option<u64>) -> CliResult<SamplingPlan> {
        let plan = SamplingPlan {
            samples: samples.unwrap_or(self.cfg.sampling.samples),
            runs: runs.unwrap_or(self.cfg.sampling.runs),
            seed: self.seed,
            quadruple_cap: cap.or(self.cfg.sampling.quadruple_cap),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Print the record, and write it to `--out` when given.
    fn emit(&self, command: &str, inputs: Value, outputs: Value, start: Instant) -> CliResult<()> {
        let record = ResultRecord::new(command, inputs, outputs, start.elapsed().as_secs_f64());
        if let Some(path) = &self.out {
            write_json(&record, path)?;
        }
        println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
        Ok(())
    }
}

fn parse_scan(v: &[String]) -> CliResult<(f64, f64, usize)> {
    let num = |s: &String| s.parse::<f64>().map_err(|_| usage(format!("not a number: {s}")));
    let (b0, b1) = (num(&v[0])?, num(&v[1])?);
    let steps = v[2].parse::<usize>().map_err(|_| usage(format!("STEPS must be an integer: {}", v[2])))?;
    if steps < 1 {
        return Err(usage("STEPS must be >= 1"));
    }
    Ok((b0, b1, steps))
}

fn scan_points(b0: f64, b1: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| b0 + (b1 - b0) * i as f64 / steps as f64).collect()
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let ctx = Context {
        seed: cli.seed.unwrap_or(cfg.seed),
        cfg,
        out: cli.out.clone(),
    };
    let start = Instant::now();

    match cli.command {
        Command::Dim { length } => {
            let d = qlm_magic::dim(length)?;
            ctx.emit("dim", json!({ "length": length }), json!({ "dim": d }), start)
        }
        Command::Basis { length, momentum } => {
            let basis = ConstrainedBasis::new(length)?;
            let configs: Vec<String> = match momentum {
                None => basis.configs().iter().map(|&c| format_bits(c, length)).collect(),
                Some(k) => {
                    let sector = basis.momentum_sector(k)?;
                    sector.representatives().iter().map(|&c| format_bits(c, length)).collect()
                }
            };
            ctx.emit(
                "basis",
                json!({ "length": length, "momentum": momentum }),
                json!({ "count": configs.len(), "configs": configs }),
                start,
            )
        }
        Command::Gs { chain, tol, amplitudes } => {
            let (length, params) = ctx.params(&chain)?;
            let mut ctx = ctx;
            if let Some(t) = tol {
                ctx.cfg.chain.tol = t;
            }
            let gs = ctx.solver(length)?.ground_state(&params)?;
            let summary = json!({
                "energy": gs.energy,
                "momentum": gs.momentum,
                "gap": gs.gap,
                "degenerate": gs.degenerate,
                "residual": gs.residual,
                "dim": gs.amplitudes.len(),
            });
            let inputs = json!({ "length": length, "params": json!(params), "tol": ctx.cfg.chain.tol });
            if let Some(path) = &ctx.out {
                write_gs_text(&gs, amplitudes, path)?;
                let record = ResultRecord::new("gs", inputs, summary, start.elapsed().as_secs_f64());
                println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
                Ok(())
            } else {
                ctx.emit("gs", inputs, summary, start)
            }
        }
        Command::GaugeVerify { chain, dict } => {
            let dict_cfg = match &dict {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    Some(parse_config(&text)?)
                }
                None => None,
            };
            let merged = Context {
                cfg: dict_cfg.clone().unwrap_or_else(|| ctx.cfg.clone()),
                seed: ctx.seed,
                out: ctx.out.clone(),
            };
            let chain = ChainArgs {
                length: chain.length.or(merged.cfg.chain.lengths.first().copied()).or(Some(4)),
                u: chain.u.or(merged.cfg.chain.u).or(Some(DEFAULT_GAUGE_U)),
                v: chain.v.or(merged.cfg.chain.v).or(Some(DEFAULT_GAUGE_V)),
                w: chain.w,
            };
            let (length, dual) = merged.params(&chain)?;
            let qlm = dict_cfg
                .and_then(|c| c.qlm)
                .unwrap_or_else(|| QlmParams::from_dual(&dual));
            let report = duality_check(&qlm, &dual, length)?;
            ctx.emit(
                "gauge-verify",
                json!({ "length": length, "dual": json!(dual), "qlm": json!(qlm) }),
                json!(report),
                start,
            )
        }
        Command::SreExact { chain, method } => {
            let (length, params) = ctx.params(&chain)?;
            let gs = ctx.solver(length)?.ground_state(&params)?;
            let (name, value) = match method {
                Method::Pauli => ("pauli", sre2_pauli_sum(&gs)?),
                Method::Quadruple => ("quadruple", sre2_quadruple_sum(&gs)?),
            };
            ctx.emit(
                "sre-exact",
                json!({ "length": length, "params": json!(params), "method": name }),
                json!({ "M2": value.total, "m2": value.density, "energy": gs.energy, "degenerate": gs.degenerate }),
                start,
            )
        }
        Command::SreSample {
            chain,
            beta,
            samples,
            runs,
            quadruple_cap,
            csv,
        } => {
            let plan = ctx.plan(samples, runs, quadruple_cap)?;
            let (inputs, est) = match beta {
                Some(b) => {
                    let length = chain
                        .length
                        .or_else(|| ctx.cfg.chain.lengths.first().copied())
                        .ok_or_else(|| usage("--length is required"))?;
                    let state = RkState::new(b, length)?;
                    (json!({ "length": length, "beta": b, "plan": json!(plan) }), estimate(&state, &plan)?)
                }
                None => {
                    let (length, params) = ctx.params(&chain)?;
                    let gs = ctx.solver(length)?.ground_state(&params)?;
                    (
                        json!({ "length": length, "params": json!(params), "plan": json!(plan) }),
                        estimate_table(&gs, &plan)?,
                    )
                }
            };
            if let Some(path) = csv {
                write_per_run_csv(&est.per_run, &path)?;
            }
            ctx.emit("sre-sample", inputs, json!(est), start)
        }
        Command::RkLine {
            beta,
            length,
            finite,
            scan,
        } => {
            let length = length.or(ctx.cfg.rk.length);
            if let Some(scan) = scan {
                let (b0, b1, steps) = parse_scan(&scan)?;
                let path = ctx.out.clone().ok_or_else(|| usage("--scan needs --out FILE"))?;
                let mut rows = Vec::new();
                for b in scan_points(b0, b1, steps) {
                    let p = RkPoint::new(b)?;
                    let fin = match length {
                        Some(l) => Some(m2_finite(b, l)?),
                        None => None,
                    };
                    rows.push((p, fin));
                }
                write_rk_scan_csv(&rows, length, &path)?;
                println!("{}", path.display());
                return Ok(());
            }
            let b = beta.or(ctx.cfg.rk.beta).ok_or_else(|| usage("--beta or --scan is required"))?;
            let point = RkPoint::new(b)?;
            let mut out = json!(point);
            if finite {
                let l = length.ok_or_else(|| usage("--finite needs --length"))?;
                out["m2_finite"] = json!(m2_finite(b, l)?);
            }
            ctx.emit("rk-line", json!({ "beta": b, "length": length }), out, start)
        }
        Command::Sweep { resume } => {
            let dir = ctx.out.clone().ok_or_else(|| usage("sweep needs --out DIR"))?;
            let mut grid = ctx
                .cfg
                .sweep
                .clone()
                .ok_or_else(|| usage("sweep needs --config with a [sweep] section"))?;
            if let qlm_magic::sweep::Estimator::Sampled(plan) = &mut grid.estimator {
                plan.seed = ctx.seed;
            }
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            let ckpt_path = dir.join("checkpoint.jsonl");
            let mut done = HashMap::new();
            if resume {
                for p in Checkpoint::load(&ckpt_path)? {
                    if p.error.is_none() {
                        done.insert((p.length, p.index), p);
                    }
                }
            } else if ckpt_path.exists() {
                std::fs::remove_file(&ckpt_path).map_err(|e| Error::Io {
                    path: ckpt_path.clone(),
                    source: e,
                })?;
            }
            let ckpt = std::sync::Mutex::new(Checkpoint::open(&ckpt_path)?);
            let opts = SolverOptions {
                tol: ctx.cfg.chain.tol,
                ..SolverOptions::default()
            };
            let result = grid_scan_with(&grid, &opts, &done, |p: &PointResult| {
                let mut c = ckpt.lock().expect("checkpoint lock");
                if let Err(e) = c.append(p) {
                    eprintln!("warning: checkpoint write failed: {e}");
                }
            })?;
            let mut files = Vec::new();
            for curve in &result.curves {
                let path = dir.join(format!("sweep_L{}.csv", curve.length));
                write_sweep_csv(&sweep_rows(curve, &PeakOptions::default()), &path)?;
                files.push(path.display().to_string());
            }
            let result_path = dir.join("sweep_result.json");
            write_json(&result, &result_path)?;
            let failed: usize = result
                .curves
                .iter()
                .map(|c| c.points.iter().filter(|p| p.error.is_some()).count())
                .sum();
            let record = ResultRecord::new(
                "sweep",
                json!({ "grid": json!(grid), "seed": ctx.seed, "resumed_points": done.len() }),
                json!({ "files": files, "result": result_path.display().to_string(), "failed_points": failed }),
                start.elapsed().as_secs_f64(),
            );
            write_json(&record, &dir.join("manifest.json"))?;
            println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
            Ok(())
        }
        Command::FitAlpha { input, window } => {
            let points = read_lm2_csv(&input)?;
            let fits = match window {
                Some(w) => sliding_fits(&points, w)?,
                None => vec![powerlaw_fit(&points)?],
            };
            ctx.emit(
                "fit-alpha",
                json!({ "input": input.display().to_string(), "window": window }),
                json!({ "fits": json!(fits) }),
                start,
            )
        }
        Command::EmitPlots {
            sweep,
            rk_scan,
            rk_length,
            samples,
            runs,
        } => {
            let dir = ctx.out.clone().ok_or_else(|| usage("emit-plots needs --out DIR"))?;
            let mut results: Vec<SweepResult> = Vec::new();
            for p in &sweep {
                let file = if p.is_dir() { p.join("sweep_result.json") } else { p.clone() };
                results.push(read_json(&file)?);
            }
            let mut written = Vec::new();
            for r in &results {
                written.extend(emit_cut_files(r, &dir)?);
            }
            if results.len() > 1 {
                written.extend(emit_heatmaps(&results, &dir)?);
            }
            if let Some(scan) = rk_scan {
                let (b0, b1, steps) = parse_scan(&scan)?;
                let plan = ctx.plan(samples, runs, None)?;
                let mut points = Vec::new();
                for b in scan_points(b0, b1, steps) {
                    let p = params_of_beta(b);
                    let est = estimate(&RkState::new(b, rk_length)?, &plan)?;
                    points.push(RkLinePoint {
                        beta: b,
                        u: p.u,
                        v: p.v,
                        length: rk_length,
                        m2_asymptotic: m2_asymptotic(b)?,
                        m2_finite: Some(m2_finite(b, rk_length)?),
                        m2_sampled: Some(est.m2_mean),
                        sigma: Some(est.sigma),
                    });
                }
                written.push(emit_rk_line(&points, &dir)?);
            }
            let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            let record = ResultRecord::new(
                "emit-plots",
                json!({ "sweeps": sweep.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }),
                json!({ "files": files }),
                start.elapsed().as_secs_f64(),
            );
            println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
            Ok(())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_per_run_csv(values: &[f64], path: &Path) -> CliResult<()> {
    let mut text = String::from("run,m2\n");
    for (i, v) in values.iter().enumerate() {
        text += &format!("{i},{}\n", qlm_magic::io::fmt_f64(*v));
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_rk_scan_csv(rows: &[(RkPoint, Option<f64>)], length: Option<usize>, path: &Path) -> CliResult<()> {
    use qlm_magic::io::fmt_f64;
    let mut text = String::from("beta,U,V,lambda,m2_asymptotic");
    if let Some(l) = length {
        text += &format!(",m2_finite_L{l}");
    }
    text.push('\n');
    for (p, fin) in rows {
        text += &format!(
            "{},{},{},{},{}",
            fmt_f64(p.beta),
            fmt_f64(p.u),
            fmt_f64(p.v),
            fmt_f64(p.lambda),
            fmt_f64(p.m2_asymptotic)
        );
        if let Some(f) = fin {
            text += &format!(",{}", fmt_f64(*f));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Rows of a two-column `L,M2` CSV (header required).
fn read_lm2_csv(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |m: String| {
        CliError::Core(Error::Format {
            path: path.to_path_buf(),
            message: m,
        })
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let (il, im) = match (cols.iter().position(|c| c == "l"), cols.iter().position(|c| c == "m2")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(bad(format!("header needs L and M2 columns, got {header:?}"))),
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |i: usize| {
                f.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| bad(format!("bad row {line:?}")))
            };
            Ok((get(il)?, get(im)?))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
