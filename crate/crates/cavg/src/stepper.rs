//! Time integration of the coupled systems: integrating-factor
//! treatment of the stiff diagonal diffusion, explicit (Heun-corrected)
//! transport and nonlinear terms, Euler-Maruyama noise.
//!
//! The shear transport U d_x and U'' d_x inv_lap act per x-frequency as
//! exact Galerkin matrices in y (multiplication by y plus a cosine
//! profile), so the semi-discrete linear part is exactly the operator
//! assembled by the frozen-operator module.

use ndarray::Array2;
use num_complex::Complex64;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::nonlinear::{advection, nonlin_b0, nonlin_bm, nonlin_bneq};
use crate::shear::ShearState;
use crate::spectral::{
    apply_cos_profile, lambda_y, mult_y_matrix, SpectralField, Transformer, Truncation,
};

/// Which coupled system a step advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    FastSlow,
    PseudoLinearized,
}

/// Slow-time scalings of the rescaled system.
#[derive(Debug, Clone, Copy)]
pub struct Scales {
    pub diffusion: f64,
    pub transport: f64,
    pub b0: f64,
    pub bm: f64,
    pub bneq: f64,
    pub noise: f64,
}

impl Scales {
    pub fn rescaled(cfg: &SimConfig) -> Self {
        let nu = cfg.nu;
        let g = cfg.gamma;
        Self {
            diffusion: nu.powf(g),
            transport: nu.powf(g - 1.0),
            b0: nu.powf(g / 2.0 - 1.0 / 6.0),
            bm: nu.powf(cfg.beta + g - 0.5),
            bneq: nu.powf(cfg.alpha + g - 0.5),
            noise: nu.powf(-1.0 / 3.0 + g / 2.0),
        }
    }

    /// Original (un-rescaled) perturbation system.
    pub fn unrescaled(cfg: &SimConfig) -> Self {
        let nu = cfg.nu;
        Self {
            diffusion: nu,
            transport: 1.0,
            b0: 1.0,
            bm: 1.0,
            bneq: 1.0,
            noise: nu.powf(2.0 / 3.0 + cfg.alpha),
        }
    }

    /// Frozen fast process (its own fast time).
    pub fn frozen(cfg: &SimConfig) -> Self {
        let nu = cfg.nu;
        Self {
            diffusion: nu.powf(2.0 / 3.0),
            transport: nu.powf(-1.0 / 3.0),
            b0: 0.0,
            bm: nu.powf(cfg.beta + 1.0 / 6.0),
            bneq: 0.0,
            noise: 1.0,
        }
    }
}

/// Shear coefficient profiles entering the transport term.
#[derive(Debug, Clone)]
pub struct ShearProfiles {
    /// cosine coefficients of U - y (index c = 0..=ny)
    pub u_minus_y: Vec<f64>,
    /// cosine coefficients of U''
    pub upp: Vec<f64>,
    pub is_couette: bool,
}

impl ShearProfiles {
    pub fn of(shear: &ShearState) -> Self {
        Self {
            u_minus_y: shear.u_minus_y_cos(),
            upp: shear.upp_cos(),
            is_couette: shear.is_couette(),
        }
    }
}

/// Inputs of the auxiliary process, frozen at a Khasminskii block
/// boundary.
#[derive(Debug, Clone)]
pub struct FrozenInputs {
    pub profiles: ShearProfiles,
    pub x_tilde: SpectralField,
    /// Block start time k delta.
    pub t_block: f64,
}

pub struct Stepper {
    pub trunc: Truncation,
    pub tr: Transformer,
    scales: Scales,
    m_y: Array2<f64>,
    /// Dense per-k propagators for the exact-Couette option, keyed by
    /// the dt they were built for.
    couette_prop: Option<(f64, Vec<Array2<Complex64>>)>,
    pub exact_couette: bool,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::with_scales(cfg.trunc(), Scales::rescaled(cfg), cfg.exact_couette))
    }

    pub fn with_scales(trunc: Truncation, scales: Scales, exact_couette: bool) -> Self {
        Self {
            trunc,
            tr: Transformer::new(trunc),
            scales,
            m_y: mult_y_matrix(trunc.ny),
            couette_prop: None,
            exact_couette,
        }
    }

    pub fn scales(&self) -> Scales {
        self.scales
    }

    /// exp(dt * diffusion * Delta) factors for the Y equation.
    fn heat_factors(&self, dt: f64) -> Array2<f64> {
        let t = self.trunc;
        let mut f = Array2::zeros((t.krows(), t.ny));
        for r in 0..t.krows() {
            let k = t.kof(r) as f64;
            for j in 1..=t.ny {
                f[[r, j - 1]] = (-dt * self.scales.diffusion * (k * k + lambda_y(j))).exp();
            }
        }
        f
    }

    fn apply_factors(f: &Array2<f64>, x: &SpectralField) -> SpectralField {
        let mut out = x.clone();
        out.coeffs.zip_mut_with(f, |c, e| *c *= *e);
        out
    }

    /// Shear transport: -s ik (y + (U - y)) f + s ik U'' inv_lap f,
    /// with s the transport scale; exact Galerkin in y.
    fn transport(&self, f: &SpectralField, prof: &ShearProfiles) -> SpectralField {
        let t = self.trunc;
        let s = self.scales.transport;
        let mut out = SpectralField::zeros(t);
        let ny = t.ny;
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for r in 0..t.krows() {
            let k = t.kof(r);
            if k == 0 {
                continue;
            }
            let ik = Complex64::new(0.0, k as f64);
            for j in 0..ny {
                col[j] = f.coeffs[[r, j]];
            }
            if col.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            // y * f via the Galerkin matrix
            let mut uy = vec![Complex64::new(0.0, 0.0); ny];
            for jp in 0..ny {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..ny {
                    let m = self.m_y[[jp, j]];
                    if m != 0.0 {
                        acc += col[j] * m;
                    }
                }
                uy[jp] = acc;
            }
            let ue = apply_cos_profile(&prof.u_minus_y, &col);
            let inv: Vec<Complex64> = (0..ny)
                .map(|j| col[j] / (-((k * k) as f64 + lambda_y(j + 1))))
                .collect();
            let upp = apply_cos_profile(&prof.upp, &inv);
            for j in 0..ny {
                out.coeffs[[r, j]] = -s * ik * (uy[j] + ue[j]) + s * ik * upp[j];
            }
        }
        out
    }

    /// Drift of the Y-type equation minus the diagonal diffusion (which
    /// the integrating factor handles) and minus anything inside a dense
    /// propagator.
    fn drift_y(
        &self,
        x_for_bm: &SpectralField,
        y: &SpectralField,
        prof: &ShearProfiles,
        sys: System,
        dense: bool,
    ) -> Result<SpectralField> {
        let mut d = if dense {
            SpectralField::zeros(self.trunc)
        } else {
            self.transport(y, prof)
        };
        if self.scales.bm != 0.0 {
            let bm = nonlin_bm(x_for_bm, y, &self.tr)?;
            d.add_scaled(&bm, -self.scales.bm);
        }
        if sys == System::FastSlow && self.scales.bneq != 0.0 {
            let bn = nonlin_bneq(y, &self.tr)?;
            d.add_scaled(&bn, -self.scales.bneq);
        }
        Ok(d)
    }

    fn drift_x(&self, y: &SpectralField) -> Result<SpectralField> {
        let b0 = nonlin_b0(y)?;
        Ok(b0.scaled(-self.scales.b0))
    }

    fn dense_propagators(&mut self, dt: f64) -> &Vec<Array2<Complex64>> {
        let rebuild = match &self.couette_prop {
            Some((d, _)) => *d != dt,
            None => true,
        };
        if rebuild {
            let t = self.trunc;
            let mut props = Vec::with_capacity(t.nx);
            for k in 1..=t.nx as i64 {
                let ny = t.ny;
                let mut a = Array2::<Complex64>::zeros((ny, ny));
                for j in 1..=ny {
                    a[[j - 1, j - 1]] =
                        Complex64::new(-self.scales.diffusion * ((k * k) as f64 + lambda_y(j)), 0.0);
                }
                let ik = Complex64::new(0.0, k as f64);
                for jp in 0..ny {
                    for j in 0..ny {
                        let m = self.m_y[[jp, j]];
                        if m != 0.0 {
                            a[[jp, j]] += -self.scales.transport * ik * m;
                        }
                    }
                }
                let a = a.mapv(|v| v * dt);
                props.push(crate::linalg::expm(&a));
            }
            self.couette_prop = Some((dt, props));
        }
        &self.couette_prop.as_ref().unwrap().1
    }

    fn use_dense(&self, prof: &ShearProfiles) -> bool {
        self.exact_couette && prof.is_couette
    }

    fn propagate(
        &mut self,
        f: &SpectralField,
        dt: f64,
        dense: bool,
        heat: &Array2<f64>,
    ) -> SpectralField {
        if !dense {
            return Self::apply_factors(heat, f);
        }
        let t = self.trunc;
        let props = self.dense_propagators(dt).clone();
        let mut out = SpectralField::zeros(t);
        for k in 1..=t.nx as i64 {
            let p = &props[(k - 1) as usize];
            let rk = t.krow(k);
            let rmk = t.krow(-k);
            for jp in 0..t.ny {
                let mut acc_p = Complex64::new(0.0, 0.0);
                for j in 0..t.ny {
                    acc_p += p[[jp, j]] * f.coeffs[[rk, j]];
                }
                out.coeffs[[rk, jp]] = acc_p;
            }
            // conjugate-symmetric action on -k
            for jp in 0..t.ny {
                let mut acc_m = Complex64::new(0.0, 0.0);
                for j in 0..t.ny {
                    acc_m += p[[jp, j]].conj() * f.coeffs[[rmk, j]];
                }
                out.coeffs[[rmk, jp]] = acc_m;
            }
        }
        // k = 0 column: diagonal heat
        let z = t.krow(0);
        for j in 1..=t.ny {
            out.coeffs[[z, j - 1]] =
                f.coeffs[[z, j - 1]] * (-dt * self.scales.diffusion * lambda_y(j)).exp();
        }
        out
    }

    /// One integrating-factor Heun step of the coupled pair, with the
    /// supplied noise increment (Psi dW over [t, t+dt], unscaled) added
    /// Euler-Maruyama style. `x_bm` selects the slow field entering b_m
    /// (the evolving X for the true systems, a frozen snapshot for the
    /// auxiliary process).
    #[allow(clippy::too_many_arguments)]
    pub fn step_pair_with(
        &mut self,
        sys: System,
        x: &SpectralField,
        y: &SpectralField,
        x_bm_frozen: Option<&SpectralField>,
        prof: &ShearProfiles,
        dt: f64,
        dw: &SpectralField,
        t_now: f64,
    ) -> Result<(SpectralField, SpectralField)> {
        let dense = self.use_dense(prof);
        let heat = self.heat_factors(dt);
        // the b_m coefficient is held at its start-of-step value, like
        // the shear profiles; the auxiliary process is then exactly the
        // same update law with (U, X) taken from the block start instead
        let x_for_bm = x_bm_frozen.unwrap_or(x);
        let fy1 = self.drift_y(x_for_bm, y, prof, sys, dense)?;
        let fx1 = self.drift_x(y)?;
        // predictor
        let mut ypred = y.clone();
        ypred.add_scaled(&fy1, dt);
        let ypred = self.propagate(&ypred, dt, dense, &heat);
        // corrector
        let fy2 = self.drift_y(x_for_bm, &ypred, prof, sys, dense)?;
        let fx2 = self.drift_x(&ypred)?;
        let mut ynew = y.clone();
        ynew.add_scaled(&fy1, dt / 2.0);
        let mut ynew = self.propagate(&ynew, dt, dense, &heat);
        ynew.add_scaled(&fy2, dt / 2.0);
        let mut xnew = x.clone();
        xnew.add_scaled(&fx1, dt / 2.0);
        let mut xnew = Self::apply_factors(&heat, &xnew);
        xnew.add_scaled(&fx2, dt / 2.0);
        // Euler-Maruyama noise on the fast component
        ynew.add_scaled(dw, self.scales.noise);
        if !ynew.is_finite() || !xnew.is_finite() {
            return Err(Error::BlowUp {
                t: t_now + dt,
                what: "non-finite coefficient after step".into(),
            });
        }
        Ok((xnew, ynew))
    }

    /// Auxiliary process step: coefficients frozen at the block start.
    pub fn step_auxiliary_with(
        &mut self,
        x_hat: &SpectralField,
        y_hat: &SpectralField,
        frozen: &FrozenInputs,
        dt: f64,
        dw: &SpectralField,
        t_now: f64,
    ) -> Result<(SpectralField, SpectralField)> {
        self.step_pair_with(
            System::PseudoLinearized,
            x_hat,
            y_hat,
            Some(&frozen.x_tilde),
            &frozen.profiles,
            dt,
            dw,
            t_now,
        )
    }

    /// One step of the un-rescaled perturbation equation for the full
    /// vorticity field (zero plus non-zero modes together):
    /// d w = nu Lap w - U d_x w + U'' d_x inv_lap w - u . grad w + noise.
    pub fn step_unrescaled_with(
        &mut self,
        w: &SpectralField,
        prof: &ShearProfiles,
        dt: f64,
        dw: Option<&SpectralField>,
        t_now: f64,
    ) -> Result<SpectralField> {
        let dense = self.use_dense(prof);
        let heat = self.heat_factors(dt);
        let drift = |s: &mut Self, f: &SpectralField| -> Result<SpectralField> {
            let mut d = if dense {
                SpectralField::zeros(s.trunc)
            } else {
                s.transport(f, prof)
            };
            let adv = advection(f, &s.tr)?;
            d.add_scaled(&adv, -1.0);
            Ok(d)
        };
        let f1 = drift(self, w)?;
        let mut wp = w.clone();
        wp.add_scaled(&f1, dt);
        let wp = self.propagate(&wp, dt, dense, &heat);
        let f2 = drift(self, &wp)?;
        let mut wn = w.clone();
        wn.add_scaled(&f1, dt / 2.0);
        let mut wn = self.propagate(&wn, dt, dense, &heat);
        wn.add_scaled(&f2, dt / 2.0);
        if let Some(noise) = dw {
            wn.add_scaled(noise, self.scales.noise);
        }
        if !wn.is_finite() {
            return Err(Error::BlowUp {
                t: t_now + dt,
                what: "non-finite coefficient after step".into(),
            });
        }
        Ok(wn)
    }

    /// Apply the frozen-system generator (transport with the given
    /// profiles, diffusion included, b_m with the given X) to a field;
    /// used to cross-check the dense operator assembly.
    pub fn frozen_generator_apply(
        &self,
        z: &SpectralField,
        prof: &ShearProfiles,
        x: &SpectralField,
    ) -> Result<SpectralField> {
        let mut out = self.transport(z, prof);
        // diffusion
        let t = self.trunc;
        for r in 0..t.krows() {
            let k = t.kof(r) as f64;
            for j in 1..=t.ny {
                out.coeffs[[r, j - 1]] +=
                    z.coeffs[[r, j - 1]] * (-self.scales.diffusion * (k * k + lambda_y(j)));
            }
        }
        if self.scales.bm != 0.0 {
            let bm = nonlin_bm(x, z, &self.tr)?;
            out.add_scaled(&bm, -self.scales.bm);
        }
        Ok(out)
    }
}
