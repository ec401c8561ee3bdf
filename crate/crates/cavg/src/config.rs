//! Run configuration: scaling parameters, truncation, energy constants,
//! thresholds, and noise. Parsed from TOML; validation collects every
//! violated constraint rather than stopping at the first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::spectral::Truncation;

pub const SCHEMA_VERSION: u32 = 1;

/// Small constants of the hypocoercive energy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConstants {
    /// Weight of the singular-integral terms. The operator they require
    /// is external to this artifact, so the only admissible value
    /// without a plug-in is 0.
    pub c_t: f64,
    pub c_a: f64,
    pub c_b: f64,
    /// Regularity exponent m in (2/3, 1).
    pub m: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self {
            c_t: 0.0,
            c_a: 0.01,
            c_b: 0.005,
            m: 0.75,
        }
    }
}

/// Stopping-time and estimate thresholds. The paper-side constants are
/// never numeric, so all of these are configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Background-shear bound: sigma triggers when ||W||_{H^3} >= 2 c0.
    pub c0: f64,
    /// Decay-rate constant delta_* of the linear estimates.
    pub delta_star: f64,
    /// Nonlinearity constant C_*.
    pub c_star_big: f64,
    /// Energy-threshold constant c_*; defaults to 4 delta_*^2 / C_*^2.
    pub c_star: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            c0: 0.5,
            delta_star: 0.25,
            c_star_big: 1.0,
            c_star: None,
        }
    }
}

impl Thresholds {
    pub fn c_star(&self) -> f64 {
        self.c_star
            .unwrap_or(4.0 * self.delta_star * self.delta_star / (self.c_star_big * self.c_star_big))
    }
}

/// Monte-Carlo policy for bbar_0 evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DriftEstimator {
    /// iid sampling from the Lyapunov stationary Gaussian.
    LyapunovSampling,
    /// Long-trajectory time averaging of the frozen process.
    TimeAverage,
    /// Deterministic contraction of the stationary covariance
    /// (the drift is quadratic, so its mean is exactly computable).
    Exact,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftMc {
    pub method: DriftEstimator,
    /// Relative standard-error target: stderr <= frac * ||bbar_0||.
    pub stderr_frac: f64,
    pub min_samples: usize,
    pub max_samples: usize,
    /// Burn-in for the time-average path, in units of 1/delta_star_measured.
    pub burn_in_factor: f64,
}

impl Default for DriftMc {
    fn default() -> Self {
        Self {
            method: DriftEstimator::LyapunovSampling,
            stderr_frac: 0.05,
            min_samples: 64,
            max_samples: 4096,
            burn_in_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Spatial Hoelder exponent a in (0,1).
    #[serde(default = "default_a")]
    pub a: f64,
    /// Negative-Sobolev comparison exponent theta in (0, 1/2].
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// alpha'; defaults to (1/36) min{(theta/6) a/(1+2a), beta, alpha}.
    #[serde(default)]
    pub alpha_prime: Option<f64>,
    /// Khasminskii block length; defaults to nu^{q*},
    /// q* = (2/3)(1+a)/(1+2a).
    #[serde(default)]
    pub delta: Option<f64>,
    /// Integrator step; defaults to the CFL bound.
    #[serde(default)]
    pub dt: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    /// Horizon in slow time.
    pub t_horizon: f64,
    #[serde(default)]
    pub energy: EnergyConstants,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub drift_mc: DriftMc,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Integrate the U = y part of the transport exactly per mode
    /// (precomputed matrix exponential) when the background shear is
    /// exactly Couette. Default off.
    #[serde(default)]
    pub exact_couette: bool,
    /// Keep integrating after a stopping flag fires (the flag is
    /// recorded either way).
    #[serde(default = "default_true")]
    pub continue_after_flags: bool,
    /// Steps between emitted snapshots / diagnostics records.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Macro-step for the averaged solver, in units of dt; by default
    /// it is sized so a horizon holds about 200 macro steps.
    #[serde(default)]
    pub macro_stride: Option<usize>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_a() -> f64 {
    0.5
}
fn default_theta() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    1
}
fn default_cfl() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    10
}

impl SimConfig {
    /// Desk-scale defaults at a given viscosity: gamma = 0,
    /// alpha = 0.2, beta = 2 alpha - 1/3.
    pub fn desk_scale(nu: f64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            nu,
            alpha: 0.2,
            beta: 2.0 * 0.2 - 1.0 / 3.0,
            gamma: 0.0,
            a: default_a(),
            theta: default_theta(),
            alpha_prime: None,
            delta: None,
            dt: None,
            nx: 8,
            ny: 32,
            t_horizon: 1.0,
            energy: EnergyConstants::default(),
            thresholds: Thresholds::default(),
            noise: NoiseConfig::default(),
            drift_mc: DriftMc::default(),
            seed: default_seed(),
            cfl: default_cfl(),
            exact_couette: false,
            continue_after_flags: true,
            snapshot_stride: default_stride(),
            macro_stride: None,
        }
    }

    pub fn trunc(&self) -> Truncation {
        Truncation::new(self.nx, self.ny)
    }

    /// q* = (2/3)(1+a)/(1+2a).
    pub fn q_star(&self) -> f64 {
        (2.0 / 3.0) * (1.0 + self.a) / (1.0 + 2.0 * self.a)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.nu.powf(self.q_star()))
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime.unwrap_or_else(|| {
            (1.0 / 36.0)
                * ((self.theta / 6.0) * self.a / (1.0 + 2.0 * self.a))
                    .min(self.beta)
                    .min(self.alpha)
        })
    }

    /// CFL bound for the explicit transport term: the advective
    /// frequency of mode k is nu^{gamma-1} |U| k, so
    /// dt <= cfl * nu^{1-gamma} / (max|U| * nx).
    pub fn dt_bound(&self, max_u: f64) -> f64 {
        self.cfl * self.nu.powf(1.0 - self.gamma) / (max_u.max(1e-12) * self.nx as f64)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.dt_bound(1.0 + 2.0 * self.thresholds.c0))
    }

    /// Steps per macro step of the averaged solver.
    pub fn macro_stride(&self) -> usize {
        self.macro_stride.unwrap_or_else(|| {
            ((self.t_horizon / 200.0 / self.dt()).ceil() as usize).max(1)
        })
    }

    /// Validate every invariant; returns the full list of violations.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.schema != SCHEMA_VERSION {
            bad.push(format!(
                "schema: version {} not supported (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        if !(self.nu > 0.0) {
            bad.push(format!("nu: must be positive, got {}", self.nu));
        }
        let constraint = 2.0 * self.alpha - self.beta + self.gamma / 2.0 - 1.0 / 3.0;
        if constraint.abs() > 1e-12 {
            bad.push(format!(
                "alpha/beta/gamma: 2 alpha - beta + gamma/2 = {} != 1/3",
                constraint + 1.0 / 3.0
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0 / 3.0) {
            bad.push(format!("gamma: must lie in [0, 1/3), got {}", self.gamma));
        }
        if !(self.alpha > 1.0 / 12.0) {
            bad.push(format!("alpha: must exceed 1/12, got {}", self.alpha));
        }
        if !(self.beta > 0.0) {
            bad.push(format!("beta: must be positive, got {}", self.beta));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            bad.push(format!("a: must lie in (0,1), got {}", self.a));
        }
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            bad.push(format!("theta: must lie in (0, 1/2], got {}", self.theta));
        }
        if !(self.energy.m > 2.0 / 3.0 && self.energy.m < 1.0) {
            bad.push(format!("energy.m: must lie in (2/3, 1), got {}", self.energy.m));
        }
        if self.energy.c_t != 0.0 {
            bad.push(format!(
                "energy.c_t: no singular-integral plug-in is configured, so c_t must be 0, got {}",
                self.energy.c_t
            ));
        }
        if !(self.energy.c_a > 0.0 && self.energy.c_b > 0.0) {
            bad.push(format!(
                "energy.c_a/c_b: must be positive, got {} / {}",
                self.energy.c_a, self.energy.c_b
            ));
        }
        // Positivity margin of the hypocoercive norm.
        let margin = 1.0 - 2.0 * self.energy.c_b / self.energy.c_a.sqrt();
        if margin <= 0.0 {
            bad.push(format!(
                "energy constants: 1 - 2 c_b / sqrt(c_a) = {margin} <= 0, E_neq may lose positivity"
            ));
        }
        if self.nx == 0 || self.ny == 0 {
            bad.push("nx/ny: truncation sizes must be positive".to_string());
        }
        if !(self.t_horizon > 0.0) {
            bad.push(format!("t_horizon: must be positive, got {}", self.t_horizon));
        }
        let delta = self.delta();
        let lo = self.nu.powf(2.0 / 3.0 - self.gamma);
        let hi = self.nu.powf(1.0 / 3.0 - self.gamma);
        if !(delta > lo && delta < hi) {
            bad.push(format!(
                "delta: {delta} outside (nu^(2/3-gamma), nu^(1/3-gamma)) = ({lo}, {hi})"
            ));
        }
        let dt = self.dt();
        if !(dt > 0.0) {
            bad.push(format!("dt: must be positive, got {dt}"));
        }
        let bound = self.dt_bound(1.0 + 2.0 * self.thresholds.c0);
        if dt > bound * (1.0 + 1e-12) {
            bad.push(format!("dt: {dt} exceeds the CFL bound {bound}"));
        }
        if dt >= delta {
            bad.push(format!("dt: {dt} must be smaller than the block length delta = {delta}"));
        }
        if self.snapshot_stride == 0 || self.macro_stride() == 0 {
            bad.push("snapshot_stride/macro_stride: must be positive".to_string());
        }
        if !(self.drift_mc.stderr_frac > 0.0) {
            bad.push("drift_mc.stderr_frac: must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s)?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_scale_validates() {
        let cfg = SimConfig::desk_scale(1e-3);
        cfg.validate().unwrap();
        assert!((2.0 * cfg.alpha - cfg.beta + cfg.gamma / 2.0 - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn default_delta_is_nu_qstar_and_in_window() {
        let cfg = SimConfig::desk_scale(1e-3);
        let q = cfg.q_star();
        assert!((q - 0.5).abs() < 1e-12);
        let d = cfg.delta();
        assert!(d > cfg.nu.powf(2.0 / 3.0) && d < cfg.nu.powf(1.0 / 3.0));
    }

    #[test]
    fn validation_lists_every_offence() {
        let mut cfg = SimConfig::desk_scale(1e-3);
        cfg.alpha = 0.05; // breaks the scaling constraint and the lower bound
        cfg.theta = 0.9;
        let err = cfg.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("alpha:"), "{text}");
        assert!(text.contains("theta:"), "{text}");
        assert!(text.contains("2 alpha - beta"), "{text}");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SimConfig::desk_scale(1e-2);
        let s = cfg.to_toml_string();
        let back = SimConfig::from_toml_str(&s).unwrap();
        back.validate().unwrap();
        assert_eq!(back.nu, cfg.nu);
        assert_eq!(back.seed, cfg.seed);
    }

    #[test]
    fn unknown_keys_rejected() {
        let s = "nu = 1e-3\nalpha = 0.2\nbeta = 0.0666\nnx = 4\nny = 8\nt_horizon = 1.0\nbogus = 3\n";
        assert!(SimConfig::from_toml_str(s).is_err());
    }
}
