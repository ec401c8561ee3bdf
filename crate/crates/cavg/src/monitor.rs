//! Per-path runtime monitors: energies, dissipations, the martingale
//! M_t = int <Psi dW_s, Y_s>_{H_neq} with its quadratic variation, and
//! the stopping-time flags sigma, tau_X, tau_Y, tau_M and the per-block
//! tau^{(k)}.
//!
//! Flags are first-hit times and stay set once triggered; integration
//! may continue past them (the records keep the flag state).

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::energy::{
    dissipation_neq, dissipation_zero, energy_neq, energy_zero, inner_hneq, metric_hneq,
    Dissipation,
};
use crate::error::Result;
use crate::noise::NoiseSpec;
use crate::shear::ShearState;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct Flags {
    pub sigma: Option<f64>,
    pub tau_x: Option<f64>,
    pub tau_y: Option<f64>,
    pub tau_m: Option<f64>,
    /// First triggered block stopping time min_k tau^{(k)}.
    pub tau_block: Option<f64>,
}

impl Flags {
    /// tau for one system's monitor: tau_M wedge min_k tau^{(k)}.
    pub fn tau_m_all(&self) -> Option<f64> {
        match (self.tau_m, self.tau_block) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        }
    }
}

/// One diagnostics record (a JSONL line).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub e_neq: f64,
    pub e_0: f64,
    #[serde(flatten)]
    pub d: Dissipation,
    pub d_0: f64,
    pub m_t: f64,
    pub qv_t: f64,
    pub flags: Flags,
}

pub struct Monitor {
    cfg: MonitorCfg,
    psi_sq: Vec<f64>,
    pub flags: Flags,
    m: f64,
    qv: f64,
    m_block: f64,
    qv_block: f64,
    block_idx: usize,
    track_blocks: bool,
    /// M is stopped at tau_Y per the stopping-time definitions.
    m_frozen: bool,
}

#[derive(Debug, Clone)]
struct MonitorCfg {
    ec: crate::config::EnergyConstants,
    nu: f64,
    gamma: f64,
    alpha_prime: f64,
    beta: f64,
    delta_star: f64,
    c_star: f64,
    c0: f64,
    delta: f64,
    psi_norm_sq: f64,
}

impl Monitor {
    pub fn new(cfg: &SimConfig, spec: &NoiseSpec, track_blocks: bool) -> Self {
        let (psi_norm_sq, _) = spec.trace_norms();
        Self {
            cfg: MonitorCfg {
                ec: cfg.energy,
                nu: cfg.nu,
                gamma: cfg.gamma,
                alpha_prime: cfg.alpha_prime(),
                beta: cfg.beta,
                delta_star: cfg.thresholds.delta_star,
                c_star: cfg.thresholds.c_star(),
                c0: cfg.thresholds.c0,
                delta: cfg.delta(),
                psi_norm_sq,
            },
            psi_sq: spec.psi.clone(),
            flags: Flags::default(),
            m: 0.0,
            qv: 0.0,
            m_block: 0.0,
            qv_block: 0.0,
            block_idx: 0,
            track_blocks,
            m_frozen: false,
        }
    }

    fn martingale_triggered(&self, m: f64, qv: f64) -> bool {
        if self.cfg.psi_norm_sq == 0.0 {
            return false;
        }
        let c = &self.cfg;
        let lhs = c.nu.powf(-1.0 / 3.0 + c.gamma / 2.0) * m
            - (c.delta_star / c.psi_norm_sq) * 0.5 * c.nu.powf(-2.0 / 3.0 + c.gamma) * qv;
        let rhs = (c.psi_norm_sq / c.delta_star) * c.nu.powf(-c.alpha_prime / 2.0);
        lhs >= rhs
    }

    /// Advance the monitor across one step [t, t+dt]. `y_prev` is the
    /// fast field at the start of the step (the integrand of M_t), `dw`
    /// the Psi dW increment actually used; `x`, `y`, `shear` are the
    /// post-step states.
    #[allow(clippy::too_many_arguments)]
    pub fn on_step(
        &mut self,
        t_new: f64,
        dt: f64,
        x: &SpectralField,
        y: &SpectralField,
        y_prev: &SpectralField,
        shear: &ShearState,
        dw: &SpectralField,
    ) -> Result<StepRecord> {
        let c = self.cfg.clone();
        // martingale increment and exact QV rate, frozen once tau_Y hit
        if !self.m_frozen {
            let dm = inner_hneq(dw, y_prev, &c.ec, c.nu);
            let g = metric_hneq(y_prev, &c.ec, c.nu);
            let rate: f64 = g
                .coeffs
                .iter()
                .zip(self.psi_sq.iter())
                .map(|(gc, psi)| psi * psi * gc.norm_sqr())
                .sum();
            self.m += dm;
            self.qv += rate * dt;
            if self.track_blocks {
                let blk = (t_new / c.delta).floor() as usize;
                if blk != self.block_idx {
                    self.block_idx = blk;
                    self.m_block = 0.0;
                    self.qv_block = 0.0;
                }
                self.m_block += dm;
                self.qv_block += rate * dt;
            }
        }
        let e_neq = energy_neq(y, &c.ec, c.nu)?;
        let e_0 = energy_zero(x, &c.ec, c.nu)?;
        let d = dissipation_neq(y, &c.ec, c.nu, c.gamma);
        let d_0 = dissipation_zero(x, c.nu, c.gamma)?;
        // stopping times (first hit only)
        if self.flags.sigma.is_none() && shear.h3_norm_w() >= 2.0 * c.c0 {
            self.flags.sigma = Some(t_new);
        }
        if self.flags.tau_y.is_none() && e_neq >= c.c_star * c.nu.powf(-2.0 * c.alpha_prime) {
            self.flags.tau_y = Some(t_new);
            self.m_frozen = true;
        }
        if self.flags.tau_x.is_none() && e_0 >= c.c_star * c.nu.powf(-2.0 * c.beta) {
            self.flags.tau_x = Some(t_new);
        }
        if self.flags.tau_m.is_none() && self.martingale_triggered(self.m, self.qv) {
            self.flags.tau_m = Some(t_new);
        }
        if self.track_blocks
            && self.flags.tau_block.is_none()
            && self.martingale_triggered(self.m_block, self.qv_block)
        {
            self.flags.tau_block = Some(t_new);
        }
        Ok(StepRecord {
            t: t_new,
            e_neq,
            e_0,
            d,
            d_0,
            m_t: self.m,
            qv_t: self.qv,
            flags: self.flags,
        })
    }

    pub fn martingale(&self) -> (f64, f64) {
        (self.m, self.qv)
    }
}

/// Composite tau over the three coupled systems, per the stopping-time
/// definition tau = tau_M ^ tau_Mtilde ^ tau_Mhat ^ min_k tau^{(k)}.
pub fn composite_tau(fast: &Flags, pseudo: &Flags, aux: &Flags) -> Option<f64> {
    [fast.tau_m, pseudo.tau_m, aux.tau_m, pseudo.tau_block]
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}
