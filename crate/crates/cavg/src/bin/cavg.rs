//! Command-line harness: simulate | frozen-stats | averaged | sweep |
//! audit | report.
//!
//! Exit codes: 0 success, 2 configuration/validation failure,
//! 3 numerical blow-up. `CAVG_OUT_DIR` overrides output directories,
//! `CAVG_THREADS` bounds the worker pool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cavg::averaged::{holder_diagnostics, holder_fitted_exponent, solve_averaged, BbarCache};
use cavg::checkpoint;
use cavg::config::SimConfig;
use cavg::error::{Error, Result};
use cavg::frozen::{assemble_frozen, lyapunov_covariance};
use cavg::harness::{
    plot_sweep_svg, run_path, run_sweep, ExperimentPlan, RunPathOpts, SweepResult, Variant,
};
use cavg::noise::{NoiseSpec, ProcessTag, RngStream};
use cavg::shear::{step_background, ShearState};
use cavg::spectral::SpectralField;

#[derive(Parser)]
#[command(name = "cavg", version, about = "stochastic Couette fast-slow averaging toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    FastSlow,
    PseudoLin,
    Auxiliary,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one path of a coupled system variant with JSONL
    /// diagnostics and state checkpoints.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "fast-slow")]
        variant: VariantArg,
        #[arg(long, default_value = "runs/simulate")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        path_index: usize,
    },
    /// Assemble the frozen operator at Couette, solve the Lyapunov
    /// covariance, and write it as a checkpoint.
    FrozenStats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/frozen")]
        out: PathBuf,
    },
    /// Solve the averaged slow equation on a fresh shear path.
    Averaged {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/averaged")]
        out: PathBuf,
    },
    /// Run a nu-sweep ensemble from a plan file.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        /// Override the number of paths per nu.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Inequality audits on random fields and a linear-decay fit.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/audit")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Re-emit the SVG plot and a text summary from a sweep directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn out_dir(requested: &Path) -> PathBuf {
    match std::env::var_os("CAVG_OUT_DIR") {
        Some(base) => PathBuf::from(base).join(requested.file_name().unwrap_or_default()),
        None => requested.to_path_buf(),
    }
}

fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = SimConfig::from_toml_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn copy_config(cfg: &SimConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn cmd_simulate(config: &Path, variant: VariantArg, out: &Path, path_index: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let dir = out_dir(out);
    copy_config(&cfg, &dir)?;
    let variants = match variant {
        VariantArg::FastSlow => vec![Variant::FastSlow],
        VariantArg::PseudoLin => vec![Variant::PseudoLin],
        VariantArg::Auxiliary => vec![Variant::PseudoLin, Variant::Auxiliary],
    };
    let opts = RunPathOpts {
        variants,
        collect_diagnostics: true,
        collect_snapshots: true,
    };
    let outp = run_path(&cfg, path_index, &opts)?;
    let mut jsonl = std::fs::File::create(dir.join("diagnostics.jsonl"))?;
    for (system, rec) in &outp.diagnostics {
        let mut line = serde_json::to_value(rec)?;
        line["system"] = serde_json::Value::String((*system).into());
        writeln!(jsonl, "{line}")?;
    }
    let ckpt_dir = dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    for (i, (t, x, y)) in outp.snapshots.iter().enumerate() {
        checkpoint::write_field(&ckpt_dir.join(format!("x_{i:05}_t{t:.6}.cavg")), x)?;
        checkpoint::write_field(&ckpt_dir.join(format!("y_{i:05}_t{t:.6}.cavg")), y)?;
    }
    std::fs::write(
        dir.join("results.json"),
        serde_json::to_vec_pretty(&outp.record)?,
    )?;
    if let Some(b) = &outp.record.blowup {
        return Err(Error::BlowUp {
            t: f64::NAN,
            what: b.clone(),
        });
    }
    println!("simulate: wrote {}", dir.display());
    Ok(())
}

fn cmd_frozen_stats(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let dir = out_dir(out);
    copy_config(&cfg, &dir)?;
    let spec = NoiseSpec::from_config(&cfg.noise, cfg.trunc(), cfg.energy.m, cfg.nu)?;
    let shear = ShearState::couette(cfg.ny);
    let x = SpectralField::zeros(cfg.trunc());
    let op = assemble_frozen(&shear, &x, &spec, &cfg)?;
    let g = lyapunov_covariance(&op)?;
    checkpoint::write_covariance(&dir.join("covariance.cavg"), cfg.trunc(), &g.q)?;
    let mut worst_rel = 0.0f64;
    for (i, a) in op.ops.iter().enumerate() {
        let ny = cfg.ny;
        let mut c = ndarray::Array2::<num_complex::Complex64>::zeros((ny, ny));
        for j in 0..ny {
            let p = op.noise[i][j];
            c[[j, j]] = num_complex::Complex64::new(p * p, 0.0);
        }
        let nrm = cavg::linalg::frobenius(&c);
        if nrm > 0.0 {
            worst_rel = worst_rel.max(cavg::linalg::lyapunov_residual(a, &g.q[i], &c) / nrm);
        }
    }
    let report = serde_json::json!({
        "worst_abscissa": op.worst_abscissa(),
        "decay_rate": op.decay_rate(),
        "lyapunov_relative_residual": worst_rel,
        "psi_trace_norm_sq": spec.trace_norms().0,
    });
    std::fs::write(dir.join("results.json"), serde_json::to_vec_pretty(&report)?)?;
    println!("frozen-stats: residual {worst_rel:.3e}, wrote {}", dir.display());
    Ok(())
}

fn cmd_averaged(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let dir = out_dir(out);
    copy_config(&cfg, &dir)?;
    let spec = NoiseSpec::from_config(&cfg.noise, cfg.trunc(), cfg.energy.m, cfg.nu)?;
    let dt = cfg.dt();
    let h = dt * cfg.macro_stride() as f64;
    let steps = (cfg.t_horizon / h).round() as usize;
    let mut rng = RngStream::new(cfg.seed, 0, ProcessTag::ZeroModeNoise);
    let mut shear_path = vec![ShearState::couette(cfg.ny)];
    for _ in 0..=steps {
        let next = step_background(shear_path.last().unwrap(), &spec, cfg.nu, cfg.gamma, h, &mut rng)?;
        shear_path.push(next);
    }
    let x0 = cavg::harness::default_initial_x(&cfg);
    let mut cache = BbarCache::new(&cfg, &spec);
    let run = solve_averaged(&x0, &shear_path, &cfg, &mut cache, 0)?;
    let ckpt_dir = dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    for (i, (t, x)) in run.times.iter().zip(&run.snapshots).enumerate() {
        if i % cfg.snapshot_stride == 0 {
            checkpoint::write_field(&ckpt_dir.join(format!("xbar_{i:05}_t{t:.6}.cavg")), x)?;
        }
    }
    let delta = cfg.delta();
    let mut reports = Vec::new();
    for d in [delta, delta / 2.0, delta / 4.0] {
        if d >= h {
            reports.push(holder_diagnostics(&run, d, &cfg)?);
        }
    }
    let fitted = holder_fitted_exponent(&reports);
    let summary = serde_json::json!({
        "sigma_time": run.sigma_time,
        "drift_evals": run.drift_evals,
        "cache_hits": run.cache_hits,
        "max_step_doubling_err": run.max_step_doubling_err,
        "holder": reports,
        "holder_fitted_exponent": fitted,
    });
    std::fs::write(dir.join("results.json"), serde_json::to_vec_pretty(&summary)?)?;
    std::fs::write(
        dir.join("bbar_cache.json"),
        serde_json::to_vec_pretty(&cache.to_entries())?,
    )?;
    println!("averaged: {} macro steps, wrote {}", run.times.len() - 1, dir.display());
    Ok(())
}

fn cmd_sweep(plan_path: &Path, paths: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(plan_path)?;
    let mut plan = ExperimentPlan::from_toml_str(&text)?;
    if let Some(p) = paths {
        plan.paths = p;
    }
    plan.out_dir = out_dir(&plan.out_dir);
    plan.validate()?;
    std::fs::create_dir_all(&plan.out_dir)?;
    std::fs::write(
        plan.out_dir.join("plan.toml"),
        toml::to_string_pretty(&plan).expect("plan serializes"),
    )?;
    let (summary, _) = run_sweep(&plan)?;
    for s in &summary.per_nu {
        println!(
            "nu = {:<9.3e} mean sup |X - Xbar|_(H^-theta) = {:.4e}  [{:.4e}, {:.4e}]  ({}/{} ok)",
            s.nu, s.mean_sup_h_mtheta, s.ci_lo, s.ci_hi, s.successful, s.paths
        );
    }
    if let Some(slope) = summary.slope {
        println!("fitted log-log slope: {slope:.3}");
    } else {
        println!("fitted log-log slope: null");
    }
    println!("sweep: wrote {}", plan.out_dir.display());
    Ok(())
}

fn cmd_audit(config: &Path, out: &Path, samples: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let dir = out_dir(out);
    copy_config(&cfg, &dir)?;
    let report = cavg::audit::run_audit(&cfg, samples, cfg.seed)?;
    std::fs::write(dir.join("audit.json"), serde_json::to_vec_pretty(&report)?)?;
    println!(
        "audit: fitted delta_* = {:.4}, pass = {}, wrote {}",
        report.linear_decay.delta_star_fitted,
        report.pass,
        dir.display()
    );
    if !report.pass {
        return Err(Error::Config(vec![
            "audit failed: a ratio grew without saturation".into(),
        ]));
    }
    Ok(())
}

fn cmd_report(run: &Path) -> Result<()> {
    let summary: SweepResult = serde_json::from_slice(&std::fs::read(run.join("results.json"))?)?;
    let svg = plot_sweep_svg(&summary);
    std::fs::write(run.join("plot.svg"), svg)?;
    println!("report: {} viscosities, slope {:?}", summary.per_nu.len(), summary.slope);
    println!("report: wrote {}", run.join("plot.svg").display());
    Ok(())
}

fn run() -> Result<()> {
    if let Ok(threads) = std::env::var("CAVG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Simulate {
            config,
            variant,
            out,
            path_index,
        } => cmd_simulate(&config, variant, &out, path_index),
        Cmd::FrozenStats { config, out } => cmd_frozen_stats(&config, &out),
        Cmd::Averaged { config, out } => cmd_averaged(&config, &out),
        Cmd::Sweep { plan, paths } => cmd_sweep(&plan, paths),
        Cmd::Audit {
            config,
            out,
            samples,
        } => cmd_audit(&config, &out, samples),
        Cmd::Report { run } => cmd_report(&run),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) | Err(e @ Error::Toml(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ Error::BlowUp { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
