//! Hypocoercive energies E_neq / E_0, the dissipation components, the
//! anisotropic inner products, and fractional Sobolev norms.
//!
//! With the singular-integral weight c_t = 0 the non-zero-mode energy is
//!
//!   E_neq(f) = sum_{k != 0} |k|^{2m} ( ||f_k||^2
//!            + c_a nu^{2/3} |k|^{-2/3} ||d_y f_k||^2 )
//!            - 2 c_b nu^{1/3} sum |k|^{2m - 4/3} Re <i k f_k, d_y f_k>,
//!
//! where the cross pairing couples sine and cosine content through the
//! Gram pairing <sin_j, cos_c>.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::EnergyConstants;
use crate::error::{Error, Result};
use crate::spectral::{gram_sin_cos, lambda_y, mu_y, SpectralField};

/// Im(f^H B f) with B_{j j'} = mu_{j'} G(j, j'): the per-k ingredient of
/// the cross term, Re <i k f, d_y f> = k * Im(f^H B f).
fn cross_im(col: &[Complex64]) -> f64 {
    let ny = col.len();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 1..=ny {
        if col[j - 1].norm_sqr() == 0.0 {
            continue;
        }
        for jp in 1..=ny {
            let g = gram_sin_cos(j, jp);
            if g != 0.0 {
                s += col[j - 1].conj() * col[jp - 1] * (mu_y(jp) * g);
            }
        }
    }
    s.im
}

/// Cross pairing sum for two different columns:
/// <i k f, d_y g> + <d_y f, i k g> (divided by ik factors handled by the
/// caller). Returns (S, T) with S = f^H B g and T = f^H B^T g.
fn cross_bilinear(f: &[Complex64], g: &[Complex64]) -> (Complex64, Complex64) {
    let ny = f.len();
    let mut s = Complex64::new(0.0, 0.0);
    let mut t = Complex64::new(0.0, 0.0);
    for j in 1..=ny {
        for jp in 1..=ny {
            let gr = gram_sin_cos(j, jp);
            if gr != 0.0 {
                // B[j, jp] = mu_{jp} G(j, jp)
                s += f[j - 1].conj() * g[jp - 1] * (mu_y(jp) * gr);
                // B^T[j, jp] = mu_j G(jp, j)
            }
            let gr2 = gram_sin_cos(jp, j);
            if gr2 != 0.0 {
                t += f[j - 1].conj() * g[jp - 1] * (mu_y(j) * gr2);
            }
        }
    }
    (s, t)
}

/// E_neq(f); requires f to have no k = 0 content.
pub fn energy_neq(f: &SpectralField, ec: &EnergyConstants, nu: f64) -> Result<f64> {
    f.require_nonzero_mode("energy_neq")?;
    let t = f.trunc;
    let mut total = 0.0;
    for r in 0..t.krows() {
        let k = t.kof(r);
        if k == 0 {
            continue;
        }
        let ka = k.unsigned_abs() as f64;
        let col: Vec<Complex64> = (0..t.ny).map(|j| f.coeffs[[r, j]]).collect();
        let l2: f64 = col.iter().map(|c| c.norm_sqr()).sum();
        if l2 == 0.0 {
            continue;
        }
        let dy2: f64 = col
            .iter()
            .enumerate()
            .map(|(jm1, c)| lambda_y(jm1 + 1) * c.norm_sqr())
            .sum();
        total += ka.powf(2.0 * ec.m) * (l2 + ec.c_a * nu.powf(2.0 / 3.0) * ka.powf(-2.0 / 3.0) * dy2);
        total -= 2.0
            * ec.c_b
            * nu.powf(1.0 / 3.0)
            * ka.powf(2.0 * ec.m - 4.0 / 3.0)
            * (k as f64)
            * cross_im(&col);
    }
    Ok(total)
}

/// E_0(f) = ||f||^2 + c_a nu^{2/3} ||d_y f||^2; requires k = 0 only.
pub fn energy_zero(f: &SpectralField, ec: &EnergyConstants, nu: f64) -> Result<f64> {
    f.require_zero_mode("energy_zero")?;
    let t = f.trunc;
    let z = t.krow(0);
    let mut l2 = 0.0;
    let mut dy2 = 0.0;
    for j in 1..=t.ny {
        let c = f.coeffs[[z, j - 1]].norm_sqr();
        l2 += c;
        dy2 += lambda_y(j) * c;
    }
    Ok(l2 + ec.c_a * nu.powf(2.0 / 3.0) * dy2)
}

/// Real H_neq pairing Re <f, g>_{H_neq}; used by the martingale
/// monitors.
pub fn inner_hneq(f: &SpectralField, g: &SpectralField, ec: &EnergyConstants, nu: f64) -> f64 {
    let t = f.trunc;
    let mut total = Complex64::new(0.0, 0.0);
    for r in 0..t.krows() {
        let k = t.kof(r);
        if k == 0 {
            continue;
        }
        let ka = k.unsigned_abs() as f64;
        let fc: Vec<Complex64> = (0..t.ny).map(|j| f.coeffs[[r, j]]).collect();
        let gc: Vec<Complex64> = (0..t.ny).map(|j| g.coeffs[[r, j]]).collect();
        if fc.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        let mut diag = Complex64::new(0.0, 0.0);
        for j in 1..=t.ny {
            let w = 1.0 + ec.c_a * nu.powf(2.0 / 3.0) * ka.powf(-2.0 / 3.0) * lambda_y(j);
            diag += fc[j - 1].conj() * gc[j - 1] * w;
        }
        total += diag * ka.powf(2.0 * ec.m);
        // cross: - c_b nu^{1/3} |k|^{2m-4/3} ( <ik f, d_y g> + <d_y f, ik g> )
        let (s, tt) = cross_bilinear(&fc, &gc);
        let ik = Complex64::new(0.0, k as f64);
        let cross = (-ik) * s + ik * tt;
        total -= cross * (ec.c_b * nu.powf(1.0 / 3.0) * ka.powf(2.0 * ec.m - 4.0 / 3.0));
    }
    total.re
}

/// The metric operator of H_neq applied coefficient-wise: g = H f, so
/// that <f', f>_{H_neq} = sum conj(f'_{k,j}) g_{k,j}. Used for the exact
/// quadratic-variation rate of M_t.
pub fn metric_hneq(f: &SpectralField, ec: &EnergyConstants, nu: f64) -> SpectralField {
    let t = f.trunc;
    let mut out = SpectralField::zeros(t);
    for r in 0..t.krows() {
        let k = t.kof(r);
        if k == 0 {
            continue;
        }
        let ka = k.unsigned_abs() as f64;
        let w2m = ka.powf(2.0 * ec.m);
        let cb = ec.c_b * nu.powf(1.0 / 3.0) * ka.powf(2.0 * ec.m - 4.0 / 3.0) * (k as f64);
        for j in 1..=t.ny {
            let diag = w2m * (1.0 + ec.c_a * nu.powf(2.0 / 3.0) * ka.powf(-2.0 / 3.0) * lambda_y(j));
            let mut v = f.coeffs[[r, j - 1]] * diag;
            // K = i c_b w k (B - B^T), B[j,jp] = mu_{jp} G(j,jp)
            let mut kv = Complex64::new(0.0, 0.0);
            for jp in 1..=t.ny {
                let b = mu_y(jp) * gram_sin_cos(j, jp);
                let bt = mu_y(j) * gram_sin_cos(jp, j);
                let d = b - bt;
                if d != 0.0 {
                    kv += f.coeffs[[r, jp - 1]] * d;
                }
            }
            v += Complex64::new(0.0, cb) * kv;
            out.coeffs[[r, j - 1]] = v;
        }
    }
    out
}

/// Nonnegative dissipation pieces; the `*_w` fields carry the |k|^{2m}
/// weights but not the c_* prefactors.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Dissipation {
    pub d_g: f64,
    pub d_t: f64,
    pub d_a: f64,
    pub d_ta: f64,
    pub d_b: f64,
    /// D_neq = d_g + c_t d_t + c_a d_a + c_t c_a d_ta + c_b d_b.
    pub d_neq: f64,
}

/// Dissipation of the non-zero-mode sector.
pub fn dissipation_neq(
    f: &SpectralField,
    ec: &EnergyConstants,
    nu: f64,
    gamma: f64,
) -> Dissipation {
    let t = f.trunc;
    let mut d = Dissipation::default();
    for r in 0..t.krows() {
        let k = t.kof(r);
        if k == 0 {
            continue;
        }
        let ka = k.unsigned_abs() as f64;
        let w = ka.powf(2.0 * ec.m);
        let (mut l2, mut g, mut tt, mut a, mut ta) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 1..=t.ny {
            let c = f.coeffs[[r, j - 1]].norm_sqr();
            if c == 0.0 {
                continue;
            }
            let lam = lambda_y(j);
            l2 += c;
            g += (ka * ka + lam) * c;
            tt += ka * ka * c / (ka * ka + lam);
            a += (lam * ka * ka + lam * lam) * c;
            ta += ka * ka * lam * c / (ka * ka + lam);
        }
        d.d_g += w * nu.powf(gamma) * g;
        d.d_t += w * nu.powf(-1.0 + gamma) * tt;
        d.d_a += w * nu.powf(2.0 / 3.0 + gamma) * ka.powf(-2.0 / 3.0) * a;
        d.d_ta += w * nu.powf(-1.0 / 3.0 + gamma) * ka.powf(-2.0 / 3.0) * ta;
        d.d_b += w * nu.powf(-2.0 / 3.0 + gamma) * ka.powf(2.0 / 3.0) * l2;
    }
    d.d_neq = d.d_g + ec.c_t * d.d_t + ec.c_a * d.d_a + ec.c_t * ec.c_a * d.d_ta + ec.c_b * d.d_b;
    d
}

/// D_0(f) = nu^gamma ||d_y f||^2 + nu^{2/3+gamma} ||d_y^2 f||^2 on the
/// zero-mode sector.
pub fn dissipation_zero(f: &SpectralField, nu: f64, gamma: f64) -> Result<f64> {
    f.require_zero_mode("dissipation_zero")?;
    let t = f.trunc;
    let z = t.krow(0);
    let mut dy = 0.0;
    let mut dyy = 0.0;
    for j in 1..=t.ny {
        let c = f.coeffs[[z, j - 1]].norm_sqr();
        dy += lambda_y(j) * c;
        dyy += lambda_y(j) * lambda_y(j) * c;
    }
    Ok(nu.powf(gamma) * dy + nu.powf(2.0 / 3.0 + gamma) * dyy)
}

/// ||f||_{H_0^{1/2}} = || |d_y|^{1/2} f ||_{H_0} and the -1/2 variant.
pub fn h0_frac_norm(f: &SpectralField, s: f64, ec: &EnergyConstants, nu: f64) -> Result<f64> {
    let g = crate::spectral::frac_dy(f, s)?;
    Ok(energy_zero(&g, ec, nu)?.sqrt())
}

/// ||f||_{H_0} = E_0^{1/2}(f).
pub fn h0_norm(f: &SpectralField, ec: &EnergyConstants, nu: f64) -> Result<f64> {
    Ok(energy_zero(f, ec, nu)?.sqrt())
}

/// True anisotropic H norm squared,
/// sum_{i=0,1} || (nu^{1/3} d_y)^i <d_x>^{m - i/3} f ||^2,
/// used for the norm-equivalence report.
pub fn h_norm_sq(f: &SpectralField, ec: &EnergyConstants, nu: f64) -> f64 {
    let t = f.trunc;
    let mut acc = 0.0;
    for r in 0..t.krows() {
        let k = t.kof(r) as f64;
        let jap = 1.0 + k * k;
        for j in 1..=t.ny {
            let c = f.coeffs[[r, j - 1]].norm_sqr();
            acc += jap.powf(ec.m) * c + nu.powf(2.0 / 3.0) * jap.powf(ec.m - 1.0 / 3.0) * lambda_y(j) * c;
        }
    }
    acc
}

/// Startup validation of (c_a, c_b): for every retained k the quadratic
/// form of E_neq must dominate (1 - 2 c_b / sqrt(c_a)) times its
/// diagonal part. Returns the worst eigenvalue margin found.
pub fn validate_energy_constants(
    ec: &EnergyConstants,
    nu: f64,
    nx: usize,
    ny: usize,
) -> Result<f64> {
    let kappa = (1.0 - 2.0 * ec.c_b / ec.c_a.sqrt()).max(0.0);
    let mut worst = f64::INFINITY;
    for k in 1..=nx as i64 {
        let ka = k as f64;
        let w2m = ka.powf(2.0 * ec.m);
        let cb = ec.c_b * nu.powf(1.0 / 3.0) * ka.powf(2.0 * ec.m - 4.0 / 3.0) * ka;
        // H = diag + i cb (B - B^T); test H - kappa * diag >= 0 via the
        // real embedding [[Re, -Im], [Im, Re]].
        let n = ny;
        let mut re = Array2::<f64>::zeros((n, n));
        let mut im = Array2::<f64>::zeros((n, n));
        for j in 1..=n {
            let diag = w2m * (1.0 + ec.c_a * nu.powf(2.0 / 3.0) * ka.powf(-2.0 / 3.0) * lambda_y(j));
            re[[j - 1, j - 1]] = diag * (1.0 - kappa);
            for jp in 1..=n {
                let d = mu_y(jp) * gram_sin_cos(j, jp) - mu_y(j) * gram_sin_cos(jp, j);
                if d != 0.0 {
                    im[[j - 1, jp - 1]] += cb * d;
                }
            }
        }
        let mut emb = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                emb[(i, j)] = re[[i, j]];
                emb[(i + n, j + n)] = re[[i, j]];
                emb[(i, j + n)] = -im[[i, j]];
                emb[(i + n, j)] = im[[i, j]];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(emb);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.min(min);
    }
    if worst < -1e-12 {
        return Err(Error::Config(vec![format!(
            "energy constants (c_a={}, c_b={}): positivity sweep failed, margin {worst}",
            ec.c_a, ec.c_b
        )]));
    }
    Ok(worst)
}
