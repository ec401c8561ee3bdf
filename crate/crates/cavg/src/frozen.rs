//! The fast process with frozen slow component: dense per-k operator
//! assembly, its Gaussian invariant measure via a Lyapunov solve, Monte
//! Carlo machinery on top of it, and the averaged drift bbar_0.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::energy::energy_neq;
use crate::error::{Error, Result};
use crate::linalg::{
    expm, frobenius, hermitian_sqrt_factor, lyapunov_residual, solve_lyapunov, spectral_abscissa,
};
use crate::noise::{NoiseSpec, RngStream};
use crate::nonlinear::nonlin_b0_full;
use crate::shear::ShearState;
use crate::spectral::{
    cos_profile_matrix, lambda_y, mu_y, mult_y_matrix, project_cos_to_sine, SpectralField,
    Truncation,
};
use crate::stepper::Scales;

/// Dense-assembly guard.
pub const MAX_DENSE_NY: usize = 256;

/// The frozen generator, block-diagonal over x-frequencies k = 1..=nx
/// (negative k act by conjugation).
pub struct FrozenOperator {
    pub trunc: Truncation,
    pub scales: Scales,
    /// A_k for k = 1..=nx.
    pub ops: Vec<Array2<Complex64>>,
    /// Noise diagonal psi_{k, j} per k = 1..=nx.
    pub noise: Vec<Vec<f64>>,
    /// Spectral abscissa per k.
    pub abscissas: Vec<f64>,
}

/// Assemble the dense per-k matrices of
/// L = nu^{2/3} Lap - nu^{-1/3} U d_x + nu^{-1/3} U'' d_x inv_lap
///     - nu^{beta+1/6} b_m(X, .).
pub fn assemble_frozen(
    shear: &ShearState,
    x: &SpectralField,
    spec: &NoiseSpec,
    cfg: &SimConfig,
) -> Result<FrozenOperator> {
    let trunc = cfg.trunc();
    if trunc.ny > MAX_DENSE_NY {
        return Err(Error::Domain(format!(
            "dense frozen assembly guarded at ny <= {MAX_DENSE_NY}, got {}",
            trunc.ny
        )));
    }
    x.require_zero_mode("assemble_frozen X")?;
    let ny = trunc.ny;
    let scales = Scales::frozen(cfg);
    let m_y = mult_y_matrix(ny);
    let c_umy = cos_profile_matrix(&shear.u_minus_y_cos(), ny);
    let c_upp = cos_profile_matrix(&shear.upp_cos(), ny);
    // b_m profiles of X: d_y inv_lap X and d_y X as cosine profiles.
    let z = trunc.krow(0);
    let mut p_dyinv = vec![0.0; ny + 1];
    let mut p_dy = vec![0.0; ny + 1];
    for j in 1..=ny {
        let xv = x.coeffs[[z, j - 1]].re;
        p_dyinv[j] = -xv * mu_y(j) / lambda_y(j);
        p_dy[j] = xv * mu_y(j);
    }
    let c_dyinv = cos_profile_matrix(&p_dyinv, ny);
    let c_dy = cos_profile_matrix(&p_dy, ny);

    let mut ops = Vec::with_capacity(trunc.nx);
    let mut noise = Vec::with_capacity(trunc.nx);
    let mut abscissas = Vec::with_capacity(trunc.nx);
    for k in 1..=trunc.nx as i64 {
        let kf = k as f64;
        let ik = Complex64::new(0.0, kf);
        let mut a = Array2::<Complex64>::zeros((ny, ny));
        for j in 1..=ny {
            a[[j - 1, j - 1]] = Complex64::new(-scales.diffusion * (kf * kf + lambda_y(j)), 0.0);
        }
        for jp in 0..ny {
            for j in 0..ny {
                let u_mult = m_y[[jp, j]] + c_umy[[jp, j]];
                let invd = -1.0 / (kf * kf + lambda_y(j + 1));
                let mut v = Complex64::new(0.0, 0.0);
                if u_mult != 0.0 {
                    v -= scales.transport * ik * u_mult;
                }
                if c_upp[[jp, j]] != 0.0 {
                    v += scales.transport * ik * c_upp[[jp, j]] * invd;
                }
                if scales.bm != 0.0 {
                    let bm = c_dyinv[[jp, j]] - c_dy[[jp, j]] * invd;
                    if bm != 0.0 {
                        v -= scales.bm * ik * bm;
                    }
                }
                a[[jp, j]] += v;
            }
        }
        abscissas.push(spectral_abscissa(&a));
        noise.push((1..=ny).map(|j| spec.psi(k, j)).collect());
        ops.push(a);
    }
    Ok(FrozenOperator {
        trunc,
        scales,
        ops,
        noise,
        abscissas,
    })
}

impl FrozenOperator {
    pub fn worst_abscissa(&self) -> f64 {
        self.abscissas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn require_stable(&self) -> Result<()> {
        for (i, &a) in self.abscissas.iter().enumerate() {
            if a >= 0.0 {
                return Err(Error::UnstableFrozen {
                    k: (i + 1) as i64,
                    abscissa: a,
                });
            }
        }
        Ok(())
    }

    /// Energy decay rate implied by the abscissa (the measured stand-in
    /// for delta_*); used for burn-in sizing.
    pub fn decay_rate(&self) -> f64 {
        (-2.0 * self.worst_abscissa()).max(1e-6)
    }

    /// Apply the full generator to a field (conjugate action on -k).
    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        let t = self.trunc;
        let mut out = SpectralField::zeros(t);
        for k in 1..=t.nx as i64 {
            let a = &self.ops[(k - 1) as usize];
            let rk = t.krow(k);
            let rmk = t.krow(-k);
            for jp in 0..t.ny {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut accm = Complex64::new(0.0, 0.0);
                for j in 0..t.ny {
                    acc += a[[jp, j]] * f.coeffs[[rk, j]];
                    accm += a[[jp, j]].conj() * f.coeffs[[rmk, j]];
                }
                out.coeffs[[rk, jp]] = acc;
                out.coeffs[[rmk, jp]] = accm;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Lyapunov,
    Empirical,
}

/// Per-k stationary covariance of the frozen process.
pub struct StationaryGaussian {
    pub trunc: Truncation,
    pub q: Vec<Array2<Complex64>>,
    pub provenance: Provenance,
    factors: Vec<Array2<Complex64>>,
}

impl StationaryGaussian {
    pub fn new(trunc: Truncation, q: Vec<Array2<Complex64>>, provenance: Provenance) -> Result<Self> {
        let mut factors = Vec::with_capacity(q.len());
        for qk in &q {
            // Hermitian and near-PSD invariants
            let n = qk.nrows();
            let mut herm_defect = 0.0f64;
            let mut tr = 0.0f64;
            for i in 0..n {
                tr += qk[[i, i]].re;
                for j in 0..n {
                    herm_defect = herm_defect.max((qk[[i, j]] - qk[[j, i]].conj()).norm());
                }
            }
            if herm_defect > 1e-12 * tr.max(1.0) {
                return Err(Error::Lyapunov(format!(
                    "covariance block not Hermitian: defect {herm_defect}"
                )));
            }
            factors.push(hermitian_sqrt_factor(qk)?);
        }
        Ok(Self {
            trunc,
            q,
            provenance,
            factors,
        })
    }

    /// Draw a real field from N(0, Q).
    pub fn sample(&self, rng: &mut RngStream) -> SpectralField {
        let t = self.trunc;
        let mut f = SpectralField::zeros(t);
        for k in 1..=t.nx as i64 {
            let l = &self.factors[(k - 1) as usize];
            let cols = l.ncols();
            let mut zk = vec![Complex64::new(0.0, 0.0); t.ny];
            for a in 0..cols {
                let eta = rng.standard_normal();
                if eta != 0.0 {
                    for j in 0..t.ny {
                        zk[j] += l[[j, a]] * eta;
                    }
                }
            }
            let rk = t.krow(k);
            let rmk = t.krow(-k);
            for j in 0..t.ny {
                f.coeffs[[rk, j]] = zk[j];
                f.coeffs[[rmk, j]] = zk[j].conj();
            }
        }
        f
    }
}

/// Stationary covariance by the per-k Lyapunov solve
/// A Q + Q A^H + Psi Psi^H = 0, with a residual guard.
pub fn lyapunov_covariance(op: &FrozenOperator) -> Result<StationaryGaussian> {
    op.require_stable()?;
    let ny = op.trunc.ny;
    let mut qs = Vec::with_capacity(op.ops.len());
    for (i, a) in op.ops.iter().enumerate() {
        let mut c = Array2::<Complex64>::zeros((ny, ny));
        for j in 0..ny {
            let p = op.noise[i][j];
            c[[j, j]] = Complex64::new(p * p, 0.0);
        }
        if frobenius(&c) == 0.0 {
            qs.push(c);
            continue;
        }
        let q = solve_lyapunov(a, &c)?;
        let res = lyapunov_residual(a, &q, &c);
        let tol = 1e-10 * frobenius(&c);
        if res > tol {
            return Err(Error::Lyapunov(format!(
                "k = {}: residual {res} exceeds {tol}",
                i + 1
            )));
        }
        qs.push(q);
    }
    StationaryGaussian::new(op.trunc, qs, Provenance::Lyapunov)
}

/// March the frozen process with the dense matrix exponential for the
/// drift and Euler-Maruyama noise; returns the state at `t_final`.
pub struct FrozenSimulator {
    props: Vec<Array2<Complex64>>,
    op_noise: Vec<Vec<f64>>,
    trunc: Truncation,
    pub dt: f64,
}

impl FrozenSimulator {
    pub fn new(op: &FrozenOperator, dt: f64) -> Self {
        let props = op.ops.iter().map(|a| expm(&a.mapv(|v| v * dt))).collect();
        Self {
            props,
            op_noise: op.noise.clone(),
            trunc: op.trunc,
            dt,
        }
    }

    pub fn step(&self, z: &mut SpectralField, rng: &mut RngStream) {
        let t = self.trunc;
        let sdt = self.dt.sqrt();
        for k in 1..=t.nx as i64 {
            let p = &self.props[(k - 1) as usize];
            let rk = t.krow(k);
            let rmk = t.krow(-k);
            let col: Vec<Complex64> = (0..t.ny).map(|j| z.coeffs[[rk, j]]).collect();
            for jp in 0..t.ny {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..t.ny {
                    acc += p[[jp, j]] * col[j];
                }
                let psi = self.op_noise[(k - 1) as usize][jp];
                if psi != 0.0 {
                    acc += rng.complex_normal() * (psi * sdt);
                }
                z.coeffs[[rk, jp]] = acc;
                z.coeffs[[rmk, jp]] = acc.conj();
            }
        }
    }
}

pub fn simulate_frozen(
    op: &FrozenOperator,
    y0: &SpectralField,
    t_final: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<SpectralField> {
    let sim = FrozenSimulator::new(op, dt);
    let mut z = y0.clone();
    let steps = (t_final / dt).round() as usize;
    for _ in 0..steps {
        sim.step(&mut z, rng);
    }
    if !z.is_finite() {
        return Err(Error::BlowUp {
            t: t_final,
            what: "frozen simulation diverged".into(),
        });
    }
    Ok(z)
}

/// Empirical stationary covariance from independent simulated paths.
pub fn empirical_covariance(
    op: &FrozenOperator,
    paths: usize,
    burn_in: f64,
    dt: f64,
    samples_per_path: usize,
    sample_spacing: f64,
    seed: u64,
) -> Result<StationaryGaussian> {
    op.require_stable()?;
    let t = op.trunc;
    let sim = FrozenSimulator::new(op, dt);
    let burn_steps = (burn_in / dt).ceil() as usize;
    let spacing_steps = (sample_spacing / dt).ceil().max(1.0) as usize;
    let mut acc: Vec<Array2<Complex64>> = (0..t.nx).map(|_| Array2::zeros((t.ny, t.ny))).collect();
    let mut count = 0usize;
    for path in 0..paths {
        let mut rng = RngStream::new(seed, path as u64, crate::noise::ProcessTag::FrozenNoise);
        let mut z = SpectralField::zeros(t);
        for _ in 0..burn_steps {
            sim.step(&mut z, &mut rng);
        }
        for _ in 0..samples_per_path {
            for _ in 0..spacing_steps {
                sim.step(&mut z, &mut rng);
            }
            for k in 1..=t.nx as i64 {
                let rk = t.krow(k);
                let a = &mut acc[(k - 1) as usize];
                for i in 0..t.ny {
                    for j in 0..t.ny {
                        a[[i, j]] += z.coeffs[[rk, i]] * z.coeffs[[rk, j]].conj();
                    }
                }
            }
            count += 1;
        }
    }
    let qs: Vec<Array2<Complex64>> = acc
        .into_iter()
        .map(|a| {
            let mut q = a.mapv(|v| v / count as f64);
            let n = q.nrows();
            for i in 0..n {
                for j in (i + 1)..n {
                    let m = 0.5 * (q[[i, j]] + q[[j, i]].conj());
                    q[[i, j]] = m;
                    q[[j, i]] = m.conj();
                }
                q[[i, i]] = Complex64::new(q[[i, i]].re, 0.0);
            }
            q
        })
        .collect();
    StationaryGaussian::new(t, qs, Provenance::Empirical)
}

/// Exact mean of B_0 under N(0, Q): the drift is quadratic in Y, so the
/// average contracts against the covariance;
/// E[B_0] = 2 Re sum_{k>0} sum_{j,j'} i k (-(k^2+lam_j)^{-1}) Q_k[j,j']
///           sin_j sin_j'.
pub fn bbar0_mean_exact(g: &StationaryGaussian) -> Bbar0Estimate {
    let t = g.trunc;
    let mut cosacc = vec![Complex64::new(0.0, 0.0); 2 * t.ny + 1];
    for k in 1..=t.nx as i64 {
        let q = &g.q[(k - 1) as usize];
        let kf = k as f64;
        for j in 1..=t.ny {
            let pref = Complex64::new(0.0, kf) * (-1.0 / (kf * kf + lambda_y(j)));
            for jp in 1..=t.ny {
                let w = pref * q[[j - 1, jp - 1]];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                let half = 0.5 * w;
                let d = (j as i64 - jp as i64).unsigned_abs() as usize;
                cosacc[d] += half;
                cosacc[j + jp] -= half;
            }
        }
    }
    // the minus-k half contributes the conjugate
    for c in cosacc.iter_mut() {
        *c = Complex64::new(2.0 * c.re, 0.0);
    }
    let mut b0 = SpectralField::zeros(t);
    for j in 1..=t.ny {
        b0.set(0, j, cosacc[j] * mu_y(j));
    }
    let proj = project_cos_to_sine(&cosacc, t.ny);
    let mut b0_int = SpectralField::zeros(t);
    for j in 1..=t.ny {
        b0_int.set(0, j, proj[j - 1]);
    }
    Bbar0Estimate {
        b0,
        b0_int,
        stderr: SpectralField::zeros(t),
        nsamples: 0,
        method: "exact".into(),
    }
}

/// Monte-Carlo estimate of bbar_0 with a block-jackknife standard error.
#[derive(Debug, Clone)]
pub struct Bbar0Estimate {
    /// Mean of b_0(Y).
    pub b0: SpectralField,
    /// Mean of B_0(Y) (sine projection).
    pub b0_int: SpectralField,
    /// Per-coefficient standard error of the b_0 mean.
    pub stderr: SpectralField,
    pub nsamples: usize,
    pub method: String,
}

impl Bbar0Estimate {
    pub fn stderr_norm(&self) -> f64 {
        self.stderr.norm_l2()
    }
}

/// Accumulates b_0 samples and produces mean plus jackknife error.
struct MeanAccumulator {
    trunc: Truncation,
    blocks: Vec<SpectralField>,
    block_counts: Vec<usize>,
    per_block: usize,
}

impl MeanAccumulator {
    fn new(trunc: Truncation, per_block: usize) -> Self {
        Self {
            trunc,
            blocks: Vec::new(),
            block_counts: Vec::new(),
            per_block: per_block.max(1),
        }
    }

    fn push(&mut self, f: &SpectralField) {
        if self
            .block_counts
            .last()
            .map(|c| *c >= self.per_block)
            .unwrap_or(true)
        {
            self.blocks.push(SpectralField::zeros(self.trunc));
            self.block_counts.push(0);
        }
        self.blocks.last_mut().unwrap().add_scaled(f, 1.0);
        *self.block_counts.last_mut().unwrap() += 1;
    }

    fn total(&self) -> usize {
        self.block_counts.iter().sum()
    }

    fn mean_and_stderr(&self) -> (SpectralField, SpectralField) {
        let n = self.total() as f64;
        let mut mean = SpectralField::zeros(self.trunc);
        for b in &self.blocks {
            mean.add_scaled(b, 1.0);
        }
        mean = mean.scaled(1.0 / n);
        let nb = self.blocks.len();
        let mut var = SpectralField::zeros(self.trunc);
        if nb >= 2 {
            // leave-one-block-out jackknife on the mean
            for (b, cnt) in self.blocks.iter().zip(&self.block_counts) {
                let rest = n - *cnt as f64;
                let mut loo = mean.scaled(n / rest);
                loo.add_scaled(b, -1.0 / rest);
                let dev = loo.sub(&mean);
                for (v, d) in var.coeffs.iter_mut().zip(dev.coeffs.iter()) {
                    *v += Complex64::new(d.norm_sqr(), 0.0);
                }
            }
            let scale = (nb - 1) as f64 / nb as f64;
            var = SpectralField {
                trunc: var.trunc,
                coeffs: var.coeffs.mapv(|v| Complex64::new((v.re * scale).sqrt(), 0.0)),
            };
        }
        (mean, var)
    }
}

/// Estimate bbar_0(U, X) by sampling the stationary Gaussian (iid) and
/// averaging b_0 over the draws.
pub fn estimate_bbar0_sampling(
    g: &StationaryGaussian,
    stderr_frac: f64,
    min_samples: usize,
    max_samples: usize,
    rng: &mut RngStream,
) -> Result<Bbar0Estimate> {
    let trunc = g.trunc;
    let per_block = (min_samples / 16).max(1);
    let mut acc = MeanAccumulator::new(trunc, per_block);
    let mut acc_int = MeanAccumulator::new(trunc, per_block);
    loop {
        let y = g.sample(rng);
        let nl = nonlin_b0_full(&y)?;
        acc.push(&nl.b0);
        acc_int.push(&nl.b0_int);
        let n = acc.total();
        if n >= min_samples.max(2 * per_block) && (n % 64 == 0 || n >= max_samples) {
            let (mean, err) = acc.mean_and_stderr();
            let m = mean.norm_l2();
            if err.norm_l2() <= stderr_frac * m.max(1e-300) || n >= max_samples {
                let (mean_int, _) = acc_int.mean_and_stderr();
                return Ok(Bbar0Estimate {
                    b0: mean,
                    b0_int: mean_int,
                    stderr: err,
                    nsamples: n,
                    method: "lyapunov_sampling".into(),
                });
            }
        }
    }
}

/// Estimate bbar_0 by time-averaging one long frozen trajectory.
pub fn estimate_bbar0_time_average(
    op: &FrozenOperator,
    nsamples: usize,
    dt: f64,
    rng: &mut RngStream,
) -> Result<Bbar0Estimate> {
    op.require_stable()?;
    let trunc = op.trunc;
    let rate = op.decay_rate();
    let burn = 10.0 / rate;
    let spacing = (1.0 / rate / 4.0).max(dt);
    let sim = FrozenSimulator::new(op, dt);
    let mut z = SpectralField::zeros(trunc);
    let burn_steps = (burn / dt).ceil() as usize;
    for _ in 0..burn_steps {
        sim.step(&mut z, rng);
    }
    let spacing_steps = (spacing / dt).ceil() as usize;
    let mut acc = MeanAccumulator::new(trunc, (nsamples / 20).max(1));
    let mut acc_int = MeanAccumulator::new(trunc, (nsamples / 20).max(1));
    for _ in 0..nsamples {
        for _ in 0..spacing_steps {
            sim.step(&mut z, rng);
        }
        let nl = nonlin_b0_full(&z)?;
        acc.push(&nl.b0);
        acc_int.push(&nl.b0_int);
    }
    let (mean, err) = acc.mean_and_stderr();
    let (mean_int, _) = acc_int.mean_and_stderr();
    Ok(Bbar0Estimate {
        b0: mean,
        b0_int: mean_int,
        stderr: err,
        nsamples,
        method: "time_average".into(),
    })
}

/// Mean of E_neq under the stationary Gaussian, by Monte Carlo.
pub fn mean_energy_neq(
    g: &StationaryGaussian,
    cfg: &SimConfig,
    nsamples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut s = 0.0;
    for _ in 0..nsamples {
        let y = g.sample(rng);
        s += energy_neq(&y, &cfg.energy, cfg.nu)?;
    }
    Ok(s / nsamples as f64)
}
