//! Experiment orchestration: single coupled paths with all system
//! variants on shared noise, nu-sweeps over path ensembles with
//! crash-resume, and report emission (CSV / JSON / SVG).

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaged::{solve_averaged, AveragedRun, BbarCache};
use crate::config::SimConfig;
use crate::energy::energy_zero;
use crate::error::{Error, Result};
use crate::monitor::{composite_tau, Flags, Monitor, StepRecord};
use crate::noise::{sample_dw, NoiseSpec, ProcessTag, RngStream};
use crate::shear::{step_background, ShearState};
use crate::spectral::{frac_dy, sobolev_norm_zero, SpectralField};
use crate::stepper::{FrozenInputs, ShearProfiles, Stepper, System};

/// Which systems a path runs. The averaged solution is always produced
/// (it is the comparison target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FastSlow,
    PseudoLin,
    Auxiliary,
    Averaged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub nus: Vec<f64>,
    pub paths: usize,
    pub out_dir: PathBuf,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Template configuration; `nu`, `delta` and `dt` are re-derived per
    /// sweep entry.
    pub base: SimConfig,
}

fn default_variants() -> Vec<Variant> {
    vec![
        Variant::FastSlow,
        Variant::PseudoLin,
        Variant::Auxiliary,
        Variant::Averaged,
    ]
}

impl ExperimentPlan {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(s)?;
        Ok(plan)
    }

    pub fn config_for(&self, nu: f64) -> SimConfig {
        let mut cfg = self.base.clone();
        cfg.nu = nu;
        cfg.delta = None; // re-derive delta = nu^{q*}
        cfg.dt = None; // re-derive the CFL-bounded step
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.nus.is_empty() {
            bad.push("nus: at least one viscosity required".to_string());
        }
        if self.paths == 0 {
            bad.push("paths: must be positive".to_string());
        }
        for &nu in &self.nus {
            if let Err(Error::Config(msgs)) = self.config_for(nu).validate() {
                for m in msgs {
                    bad.push(format!("nu = {nu}: {m}"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// sup-over-time distances in the three comparison norms.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct NormTriple {
    /// H^{-theta} (sine-spectral).
    pub h_mtheta: f64,
    /// H_0 (the E_0^{1/2} norm).
    pub h0: f64,
    /// H_0^{-1/2}.
    pub h0_mhalf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRecord {
    pub nu: f64,
    pub path_index: usize,
    pub seed: u64,
    pub sup_x_vs_xbar: NormTriple,
    pub sup_x_vs_xtilde: NormTriple,
    pub sup_xtilde_vs_xhat: NormTriple,
    pub flags_fast: Flags,
    pub flags_pseudo: Flags,
    pub flags_aux: Flags,
    /// Composite tau over the three martingale families.
    pub tau: Option<f64>,
    pub averaged_sigma: Option<f64>,
    pub blowup: Option<String>,
    /// Wall-clock; excluded from the deterministic outputs.
    #[serde(default)]
    pub runtime_ms: u128,
}

/// Initial slow profile: a fixed low-mode packet.
pub fn default_initial_x(cfg: &SimConfig) -> SpectralField {
    let t = cfg.trunc();
    let mut x = SpectralField::basis_real(t, 0, 1).scaled(0.25);
    if t.ny >= 3 {
        x.add_scaled(&SpectralField::basis_real(t, 0, 3), 0.075);
    }
    x
}

struct Distances {
    x_vs_xbar: NormTriple,
    x_vs_xtilde: NormTriple,
    xtilde_vs_xhat: NormTriple,
}

fn triple(a: &SpectralField, b: &SpectralField, cfg: &SimConfig) -> Result<NormTriple> {
    let d = a.sub(b);
    let h_mtheta = sobolev_norm_zero(&d, -cfg.theta)?;
    let h0 = energy_zero(&d, &cfg.energy, cfg.nu)?.sqrt();
    let frac = frac_dy(&d, -0.5)?;
    let h0_mhalf = energy_zero(&frac, &cfg.energy, cfg.nu)?.sqrt();
    Ok(NormTriple {
        h_mtheta,
        h0,
        h0_mhalf,
    })
}

fn max_triple(acc: &mut NormTriple, t: NormTriple) {
    acc.h_mtheta = acc.h_mtheta.max(t.h_mtheta);
    acc.h0 = acc.h0.max(t.h0);
    acc.h0_mhalf = acc.h0_mhalf.max(t.h0_mhalf);
}

/// Everything a single coupled path produces.
pub struct PathOutput {
    pub record: PathRecord,
    /// (system tag, step record) stream when diagnostics are requested.
    pub diagnostics: Vec<(&'static str, StepRecord)>,
    /// Snapshots of the fast-system state (t, X, Y) at the stride, when
    /// requested.
    pub snapshots: Vec<(f64, SpectralField, SpectralField)>,
    pub averaged: Option<AveragedRun>,
}

pub struct RunPathOpts {
    pub variants: Vec<Variant>,
    pub collect_diagnostics: bool,
    pub collect_snapshots: bool,
}

impl Default for RunPathOpts {
    fn default() -> Self {
        Self {
            variants: default_variants(),
            collect_diagnostics: false,
            collect_snapshots: false,
        }
    }
}

/// Run one path: all requested variants share the same noise
/// realizations (the pathwise coupling), plus the averaged solution on
/// the same shear path. Numerical blow-up is recorded, not propagated.
pub fn run_path(cfg: &SimConfig, path_index: usize, opts: &RunPathOpts) -> Result<PathOutput> {
    let t0 = std::time::Instant::now();
    cfg.validate()?;
    let trunc = cfg.trunc();
    let spec = NoiseSpec::from_config(&cfg.noise, trunc, cfg.energy.m, cfg.nu)?;
    let mut stepper = Stepper::new(cfg)?;
    let dt = cfg.dt();
    let steps = (cfg.t_horizon / dt).round().max(1.0) as usize;
    let delta = cfg.delta();
    let snap_every = cfg.snapshot_stride.max(steps / 256);

    let want = |v: Variant| opts.variants.contains(&v);
    let run_fast = want(Variant::FastSlow);
    let run_pseudo = want(Variant::PseudoLin) || want(Variant::Auxiliary) || want(Variant::Averaged);
    let run_aux = want(Variant::Auxiliary);
    let run_avg = want(Variant::Averaged);

    // background shear path, simulated up front so the averaged solver
    // sees the same realization
    let mut shear_rng = RngStream::new(cfg.seed, path_index as u64, ProcessTag::ZeroModeNoise);
    let mut shear_path = Vec::with_capacity(steps + 1);
    shear_path.push(ShearState::couette(cfg.ny));
    for _ in 0..steps {
        let next = step_background(
            shear_path.last().unwrap(),
            &spec,
            cfg.nu,
            cfg.gamma,
            dt,
            &mut shear_rng,
        )?;
        shear_path.push(next);
    }

    let x0 = default_initial_x(cfg);
    let y0 = SpectralField::zeros(trunc);

    let mut fast = (x0.clone(), y0.clone());
    let mut pseudo = (x0.clone(), y0.clone());
    let mut aux = (x0.clone(), y0.clone());
    let mut frozen = FrozenInputs {
        profiles: ShearProfiles::of(&shear_path[0]),
        x_tilde: x0.clone(),
        t_block: 0.0,
    };
    let mut block_idx = 0usize;

    let mut mon_fast = Monitor::new(cfg, &spec, false);
    let mut mon_pseudo = Monitor::new(cfg, &spec, true);
    let mut mon_aux = Monitor::new(cfg, &spec, false);

    let mut noise_rng = RngStream::new(cfg.seed, path_index as u64, ProcessTag::FastNoise);
    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::new();
    // snapshot times for the sup-norm error functional
    let mut times = vec![0.0];
    let mut xs_fast = vec![fast.0.clone()];
    let mut xs_pseudo = vec![pseudo.0.clone()];
    let mut xs_aux = vec![aux.0.clone()];
    let mut blowup: Option<String> = None;

    for i in 0..steps {
        let t_now = i as f64 * dt;
        let prof = ShearProfiles::of(&shear_path[i]);
        // Khasminskii block freeze for the auxiliary process
        let blk = (t_now / delta + 1e-12).floor() as usize;
        if blk != block_idx || i == 0 {
            block_idx = blk;
            frozen = FrozenInputs {
                profiles: prof.clone(),
                x_tilde: pseudo.0.clone(),
                t_block: blk as f64 * delta,
            };
        }
        let dw = sample_dw(&spec, dt, &mut noise_rng)?;
        let mut failed: Option<String> = None;
        if run_fast {
            match stepper.step_pair_with(
                System::FastSlow,
                &fast.0,
                &fast.1,
                None,
                &prof,
                dt,
                &dw,
                t_now,
            ) {
                Ok((x, y)) => {
                    let rec = mon_fast.on_step(t_now + dt, dt, &x, &y, &fast.1, &shear_path[i + 1], &dw)?;
                    if opts.collect_diagnostics && (i + 1) % snap_every == 0 {
                        diagnostics.push(("fast_slow", rec));
                    }
                    fast = (x, y);
                }
                Err(Error::BlowUp { t, what }) => failed = Some(format!("fast_slow at t={t}: {what}")),
                Err(e) => return Err(e),
            }
        }
        if failed.is_none() && run_pseudo {
            match stepper.step_pair_with(
                System::PseudoLinearized,
                &pseudo.0,
                &pseudo.1,
                None,
                &prof,
                dt,
                &dw,
                t_now,
            ) {
                Ok((x, y)) => {
                    let rec =
                        mon_pseudo.on_step(t_now + dt, dt, &x, &y, &pseudo.1, &shear_path[i + 1], &dw)?;
                    if opts.collect_diagnostics && (i + 1) % snap_every == 0 {
                        diagnostics.push(("pseudo_lin", rec));
                    }
                    pseudo = (x, y);
                }
                Err(Error::BlowUp { t, what }) => failed = Some(format!("pseudo_lin at t={t}: {what}")),
                Err(e) => return Err(e),
            }
        }
        if failed.is_none() && run_aux {
            match stepper.step_auxiliary_with(&aux.0, &aux.1, &frozen, dt, &dw, t_now) {
                Ok((x, y)) => {
                    let rec = mon_aux.on_step(t_now + dt, dt, &x, &y, &aux.1, &shear_path[i + 1], &dw)?;
                    if opts.collect_diagnostics && (i + 1) % snap_every == 0 {
                        diagnostics.push(("auxiliary", rec));
                    }
                    aux = (x, y);
                }
                Err(Error::BlowUp { t, what }) => failed = Some(format!("auxiliary at t={t}: {what}")),
                Err(e) => return Err(e),
            }
        }
        if let Some(what) = failed {
            blowup = Some(what);
            break;
        }
        if (i + 1) % snap_every == 0 || i + 1 == steps {
            times.push(t_now + dt);
            xs_fast.push(fast.0.clone());
            xs_pseudo.push(pseudo.0.clone());
            xs_aux.push(aux.0.clone());
            if opts.collect_snapshots {
                snapshots.push((t_now + dt, fast.0.clone(), fast.1.clone()));
            }
        }
    }

    // averaged solution on the same shear path
    let averaged = if run_avg && blowup.is_none() {
        let macro_stride = cfg.macro_stride();
        let macro_nodes: Vec<ShearState> = shear_path
            .iter()
            .step_by(macro_stride)
            .cloned()
            .collect();
        let mut cache = BbarCache::new(cfg, &spec);
        Some(solve_averaged(
            &x0,
            &macro_nodes,
            cfg,
            &mut cache,
            path_index as u64,
        )?)
    } else {
        None
    };

    // sup distances over snapshot times
    let mut d = Distances {
        x_vs_xbar: NormTriple::default(),
        x_vs_xtilde: NormTriple::default(),
        xtilde_vs_xhat: NormTriple::default(),
    };
    for (idx, &t) in times.iter().enumerate() {
        if run_fast && run_pseudo {
            max_triple(&mut d.x_vs_xtilde, triple(&xs_fast[idx], &xs_pseudo[idx], cfg)?);
        }
        if run_pseudo && run_aux {
            max_triple(&mut d.xtilde_vs_xhat, triple(&xs_pseudo[idx], &xs_aux[idx], cfg)?);
        }
        if let Some(avg) = &averaged {
            if run_fast {
                max_triple(&mut d.x_vs_xbar, triple(&xs_fast[idx], avg.at_or_before(t), cfg)?);
            }
        }
    }

    let record = PathRecord {
        nu: cfg.nu,
        path_index,
        seed: cfg.seed,
        sup_x_vs_xbar: d.x_vs_xbar,
        sup_x_vs_xtilde: d.x_vs_xtilde,
        sup_xtilde_vs_xhat: d.xtilde_vs_xhat,
        flags_fast: mon_fast.flags,
        flags_pseudo: mon_pseudo.flags,
        flags_aux: mon_aux.flags,
        tau: composite_tau(&mon_fast.flags, &mon_pseudo.flags, &mon_aux.flags),
        averaged_sigma: averaged.as_ref().and_then(|a| a.sigma_time),
        blowup,
        runtime_ms: t0.elapsed().as_millis(),
    };
    Ok(PathOutput {
        record,
        diagnostics,
        snapshots,
        averaged,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuSummary {
    pub nu: f64,
    pub paths: usize,
    pub successful: usize,
    pub mean_sup_h_mtheta: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Fraction of paths on which the pseudo-linearized coupling error
    /// is below the averaging error, and likewise for the auxiliary one.
    pub frac_xtilde_smaller: f64,
    pub frac_xhat_smaller: f64,
    pub sigma_triggers: usize,
    pub tau_triggers: usize,
    pub blowups: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub per_nu: Vec<NuSummary>,
    /// Fitted log-log slope of the mean error versus nu; None when
    /// fewer than two viscosities.
    pub slope: Option<f64>,
    pub paths: usize,
    pub seed: u64,
}

fn bootstrap_ci(values: &[f64], seed: u64) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut rng = RngStream::new(seed, 0, ProcessTag::Bootstrap);
    let b = 400;
    let mut means: Vec<f64> = (0..b)
        .map(|_| {
            let mut s = 0.0;
            for _ in 0..values.len() {
                s += values[rng.gen_range_usize(values.len())];
            }
            s / values.len() as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (means[(b as f64 * 0.025) as usize], means[(b as f64 * 0.975) as usize])
}

pub fn summarize(plan: &ExperimentPlan, records: &[PathRecord]) -> SweepResult {
    let mut per_nu = Vec::new();
    for &nu in &plan.nus {
        let rows: Vec<&PathRecord> = records.iter().filter(|r| r.nu == nu).collect();
        let ok: Vec<&&PathRecord> = rows.iter().filter(|r| r.blowup.is_none()).collect();
        let sups: Vec<f64> = ok.iter().map(|r| r.sup_x_vs_xbar.h_mtheta).collect();
        let mean = if sups.is_empty() {
            f64::NAN
        } else {
            sups.iter().sum::<f64>() / sups.len() as f64
        };
        let (lo, hi) = bootstrap_ci(&sups, plan.base.seed ^ nu.to_bits());
        let smaller = |f: &dyn Fn(&PathRecord) -> f64| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter()
                    .filter(|r| f(r) < r.sup_x_vs_xbar.h_mtheta)
                    .count() as f64
                    / ok.len() as f64
            }
        };
        per_nu.push(NuSummary {
            nu,
            paths: rows.len(),
            successful: ok.len(),
            mean_sup_h_mtheta: mean,
            ci_lo: lo,
            ci_hi: hi,
            frac_xtilde_smaller: smaller(&|r: &PathRecord| r.sup_x_vs_xtilde.h_mtheta),
            frac_xhat_smaller: smaller(&|r: &PathRecord| r.sup_xtilde_vs_xhat.h_mtheta),
            sigma_triggers: rows.iter().filter(|r| r.flags_fast.sigma.is_some()).count(),
            tau_triggers: rows.iter().filter(|r| r.tau.is_some()).count(),
            blowups: rows.iter().filter(|r| r.blowup.is_some()).count(),
        });
    }
    let pts: Vec<(f64, f64)> = per_nu
        .iter()
        .filter(|s| s.mean_sup_h_mtheta.is_finite() && s.mean_sup_h_mtheta > 0.0)
        .map(|s| (s.nu.ln(), s.mean_sup_h_mtheta.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(num / den)
    } else {
        None
    };
    SweepResult {
        per_nu,
        slope,
        paths: plan.paths,
        seed: plan.base.seed,
    }
}

fn path_result_file(out_dir: &Path, nu_idx: usize, path: usize) -> PathBuf {
    out_dir.join(format!("path_nu{nu_idx:02}_p{path:04}.json"))
}

/// Run (or resume) the sweep. Completed per-path result files are
/// reloaded instead of re-simulated; fresh paths use the same
/// deterministic streams either way.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<(SweepResult, Vec<PathRecord>)> {
    plan.validate()?;
    std::fs::create_dir_all(plan.out_dir.join("paths"))?;
    let jobs: Vec<(usize, usize)> = (0..plan.nus.len())
        .flat_map(|ni| (0..plan.paths).map(move |p| (ni, p)))
        .collect();
    let records: Vec<Result<PathRecord>> = jobs
        .par_iter()
        .map(|&(ni, p)| {
            let file = path_result_file(&plan.out_dir.join("paths"), ni, p);
            if let Ok(bytes) = std::fs::read(&file) {
                if let Ok(rec) = serde_json::from_slice::<PathRecord>(&bytes) {
                    return Ok(rec);
                }
            }
            let cfg = plan.config_for(plan.nus[ni]);
            let opts = RunPathOpts {
                variants: plan.variants.clone(),
                ..Default::default()
            };
            let out = run_path(&cfg, p, &opts)?;
            std::fs::write(&file, serde_json::to_vec_pretty(&out.record)?)?;
            Ok(out.record)
        })
        .collect();
    let mut ok = Vec::with_capacity(records.len());
    for r in records {
        ok.push(r?);
    }
    // merge in (nu, path) order for deterministic output
    ok.sort_by(|a, b| {
        let ia = plan.nus.iter().position(|&n| n == a.nu).unwrap_or(0);
        let ib = plan.nus.iter().position(|&n| n == b.nu).unwrap_or(0);
        (ia, a.path_index).cmp(&(ib, b.path_index))
    });
    let summary = summarize(plan, &ok);
    write_results_csv(&plan.out_dir.join("results.csv"), &ok)?;
    std::fs::write(
        plan.out_dir.join("results.json"),
        serde_json::to_vec_pretty(&summary)?,
    )?;
    let svg = plot_sweep_svg(&summary);
    std::fs::write(plan.out_dir.join("plot.svg"), svg)?;
    Ok((summary, ok))
}

/// RFC-4180 CSV (CRLF records), one row per (nu, path); timing fields
/// are deliberately excluded so reruns are byte-identical.
pub fn write_results_csv(path: &Path, records: &[PathRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record([
        "nu",
        "path",
        "seed",
        "sup_x_xbar_hmtheta",
        "sup_x_xbar_h0",
        "sup_x_xbar_h0mhalf",
        "sup_x_xtilde_hmtheta",
        "sup_x_xtilde_h0",
        "sup_x_xtilde_h0mhalf",
        "sup_xtilde_xhat_hmtheta",
        "sup_xtilde_xhat_h0",
        "sup_xtilde_xhat_h0mhalf",
        "sigma",
        "tau",
        "blowup",
    ])
    .map_err(|e| Error::Checkpoint(format!("csv: {e}")))?;
    let fmt = |v: f64| format!("{v:?}");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in records {
        w.write_record([
            fmt(r.nu),
            r.path_index.to_string(),
            r.seed.to_string(),
            fmt(r.sup_x_vs_xbar.h_mtheta),
            fmt(r.sup_x_vs_xbar.h0),
            fmt(r.sup_x_vs_xbar.h0_mhalf),
            fmt(r.sup_x_vs_xtilde.h_mtheta),
            fmt(r.sup_x_vs_xtilde.h0),
            fmt(r.sup_x_vs_xtilde.h0_mhalf),
            fmt(r.sup_xtilde_vs_xhat.h_mtheta),
            fmt(r.sup_xtilde_vs_xhat.h0),
            fmt(r.sup_xtilde_vs_xhat.h0_mhalf),
            opt(r.flags_fast.sigma),
            opt(r.tau),
            r.blowup.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::Checkpoint(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Checkpoint(format!("csv: {e}")))?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Static log-log SVG of the mean sup error versus nu with bootstrap
/// whiskers.
pub fn plot_sweep_svg(summary: &SweepResult) -> String {
    let w = 640.0;
    let h = 440.0;
    let ml = 70.0;
    let mr = 20.0;
    let mt = 30.0;
    let mb = 60.0;
    let pts: Vec<(f64, f64, f64, f64)> = summary
        .per_nu
        .iter()
        .filter(|s| s.mean_sup_h_mtheta.is_finite() && s.mean_sup_h_mtheta > 0.0)
        .map(|s| {
            (
                s.nu.log10(),
                s.mean_sup_h_mtheta.log10(),
                s.ci_lo.max(1e-300).log10(),
                s.ci_hi.max(1e-300).log10(),
            )
        })
        .collect();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if pts.is_empty() {
        svg.push_str("<text x=\"40\" y=\"40\">no finite data</text>\n</svg>\n");
        return svg;
    }
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 0.2;
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 0.2;
    let ymin = pts.iter().map(|p| p.2.min(p.1)).fold(f64::INFINITY, f64::min) - 0.2;
    let ymax = pts.iter().map(|p| p.3.max(p.1)).fold(f64::NEG_INFINITY, f64::max) + 0.2;
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    let mut poly = String::new();
    for (x, y, lo, hi) in &pts {
        let (px, py) = (sx(*x), sy(*y));
        poly.push_str(&format!("{px:.2},{py:.2} "));
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"steelblue\"/>\n",
            sy(*lo),
            sy(*hi)
        ));
        svg.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"4\" fill=\"steelblue\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">1e{x:.2}</text>\n",
            h - mb + 18.0
        ));
    }
    svg.push_str(&format!(
        "<polyline points=\"{poly}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">log10 nu</text>\n",
        (ml + w - mr) / 2.0,
        h - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 18 {:.1})\" text-anchor=\"middle\">log10 mean sup |X - Xbar| (H^-theta)</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    if let Some(s) = summary.slope {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">fitted slope {s:.3}</text>\n",
            ml + 10.0,
            mt + 6.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
