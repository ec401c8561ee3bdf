//! Trace-class diagonal noise operators Psi (non-zero x-modes) and Phi
//! (zero mode), their norms, and Wiener increment sampling on
//! reproducible counter-based streams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{lambda_y, SpectralField, Truncation};

/// Diagonal noise amplitudes on the truncated basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub trunc_nx: usize,
    pub trunc_ny: usize,
    /// psi[(krow, j-1)] for k in -nx..=nx (k = 0 row all zero),
    /// symmetric in k <-> -k.
    pub psi: Vec<f64>,
    /// phi[j-1] for j = 1..=ny.
    pub phi: Vec<f64>,
    /// Regularity exponent m in (2/3, 1).
    pub m: f64,
    /// Viscosity entering the ||Psi|| weight.
    pub nu: f64,
}

/// How noise amplitudes are specified in the run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// psi_{k,j} = a_psi |k|^{-(m+1)} j^{-2}
    pub a_psi: f64,
    /// phi_j = a_phi j^{-9/2}
    pub a_phi: f64,
    /// Explicit (k, j, value) overrides; replaces the default spectrum
    /// entirely when non-empty (mirrored over k <-> -k automatically).
    #[serde(default)]
    pub psi_table: Vec<(i64, usize, f64)>,
    #[serde(default)]
    pub phi_table: Vec<(usize, f64)>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            a_psi: 0.05,
            a_phi: 0.05,
            psi_table: Vec::new(),
            phi_table: Vec::new(),
        }
    }
}

impl NoiseSpec {
    pub fn trunc(&self) -> Truncation {
        Truncation::new(self.trunc_nx, self.trunc_ny)
    }

    pub fn zero(trunc: Truncation, m: f64, nu: f64) -> Self {
        Self {
            trunc_nx: trunc.nx,
            trunc_ny: trunc.ny,
            psi: vec![0.0; trunc.krows() * trunc.ny],
            phi: vec![0.0; trunc.ny],
            m,
            nu,
        }
    }

    pub fn from_config(cfg: &NoiseConfig, trunc: Truncation, m: f64, nu: f64) -> Result<Self> {
        let mut spec = Self::zero(trunc, m, nu);
        if cfg.psi_table.is_empty() {
            for k in 1..=trunc.nx as i64 {
                for j in 1..=trunc.ny {
                    let v = cfg.a_psi * (k as f64).powf(-(m + 1.0)) * (j as f64).powi(-2);
                    spec.set_psi(k, j, v);
                }
            }
        } else {
            for &(k, j, v) in &cfg.psi_table {
                if k == 0 || k.unsigned_abs() as usize > trunc.nx || j == 0 || j > trunc.ny {
                    return Err(Error::Config(vec![format!(
                        "noise.psi_table entry (k={k}, j={j}) outside truncation"
                    )]));
                }
                spec.set_psi(k.abs(), j, v);
            }
        }
        if cfg.phi_table.is_empty() {
            for j in 1..=trunc.ny {
                spec.phi[j - 1] = cfg.a_phi * (j as f64).powf(-4.5);
            }
        } else {
            for &(j, v) in &cfg.phi_table {
                if j == 0 || j > trunc.ny {
                    return Err(Error::Config(vec![format!(
                        "noise.phi_table entry j={j} outside truncation"
                    )]));
                }
                spec.phi[j - 1] = v;
            }
        }
        Ok(spec)
    }

    pub fn psi(&self, k: i64, j: usize) -> f64 {
        let t = self.trunc();
        self.psi[t.krow(k) * t.ny + (j - 1)]
    }

    /// Set psi at +-k simultaneously (reality symmetry).
    pub fn set_psi(&mut self, k: i64, j: usize, v: f64) {
        assert!(k != 0, "psi acts on non-zero modes only");
        let t = self.trunc();
        self.psi[t.krow(k) * t.ny + (j - 1)] = v;
        self.psi[t.krow(-k) * t.ny + (j - 1)] = v;
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi[j - 1]
    }

    pub fn set_phi(&mut self, j: usize, v: f64) {
        self.phi[j - 1] = v;
    }

    pub fn is_psi_zero(&self) -> bool {
        self.psi.iter().all(|v| *v == 0.0)
    }

    /// (||Psi||^2, ||Phi||^2) over the truncated index set:
    /// ||Psi||^2 = sum |k|^{2m} psi^2 (1 + (pi^2/4) nu^{2/3} |k|^{-2/3} j^2),
    /// ||Phi||^2 = sum (j pi / 2)^6 phi^2.
    pub fn trace_norms(&self) -> (f64, f64) {
        let t = self.trunc();
        let mut psi2 = 0.0;
        for k in -(t.nx as i64)..=(t.nx as i64) {
            if k == 0 {
                continue;
            }
            let ka = (k.unsigned_abs()) as f64;
            for j in 1..=t.ny {
                let p = self.psi(k, j);
                if p != 0.0 {
                    let weight = ka.powf(2.0 * self.m)
                        * (1.0
                            + (std::f64::consts::PI * std::f64::consts::PI / 4.0)
                                * self.nu.powf(2.0 / 3.0)
                                * ka.powf(-2.0 / 3.0)
                                * (j * j) as f64);
                    psi2 += weight * p * p;
                }
            }
        }
        let mut phi2 = 0.0;
        for j in 1..=t.ny {
            phi2 += lambda_y(j).powi(3) * self.phi(j) * self.phi(j);
        }
        (psi2, phi2)
    }

    /// sum psi^2 over all modes (both signs of k); the L^2 trace that
    /// governs E ||Psi dW||^2.
    pub fn psi_l2_trace(&self) -> f64 {
        self.psi.iter().map(|v| v * v).sum()
    }
}

/// Logical sub-streams of one path's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessTag {
    FastNoise = 1,
    ZeroModeNoise = 2,
    FrozenNoise = 3,
    StationarySampling = 4,
    Bootstrap = 5,
    InitialData = 6,
}

/// Counter-based stream: (seed, stream id) fully determines the
/// sequence, independent of thread scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, path_index: u64, tag: ProcessTag) -> Self {
        let stream = path_index
            .wrapping_mul(64)
            .wrapping_add(tag as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Complex standard normal with E|xi|^2 = 1.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn gen_range_usize(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

/// Sample Psi dW over one step: coefficients psi_{k,j} xi sqrt(dt) with
/// xi complex standard normal obeying the reality symmetry; the k = 0
/// column is zero.
pub fn sample_dw(spec: &NoiseSpec, dt: f64, rng: &mut RngStream) -> Result<SpectralField> {
    if dt <= 0.0 {
        return Err(Error::Domain(format!("sample_dw: dt = {dt} <= 0")));
    }
    let t = spec.trunc();
    let mut f = SpectralField::zeros(t);
    let sdt = dt.sqrt();
    for k in 1..=t.nx as i64 {
        for j in 1..=t.ny {
            let p = spec.psi(k, j);
            // draw even when p = 0 so stream positions do not depend on
            // the amplitude table
            let xi = rng.complex_normal();
            if p != 0.0 {
                let v = xi * (p * sdt);
                f.set(k, j, v);
                f.set(-k, j, v.conj());
            }
        }
    }
    Ok(f)
}

/// Sample Phi dV over one step: zero-mode only, real coefficients
/// phi_j xi sqrt(dt).
pub fn sample_dv(spec: &NoiseSpec, dt: f64, rng: &mut RngStream) -> Result<SpectralField> {
    if dt <= 0.0 {
        return Err(Error::Domain(format!("sample_dv: dt = {dt} <= 0")));
    }
    let t = spec.trunc();
    let mut f = SpectralField::zeros(t);
    for j in 1..=t.ny {
        let xi: f64 = rng.standard_normal();
        let p = spec.phi(j);
        if p != 0.0 {
            f.set(0, j, Complex64::new(p * xi * dt.sqrt(), 0.0));
        }
    }
    Ok(f)
}
