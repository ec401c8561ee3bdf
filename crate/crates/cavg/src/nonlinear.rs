//! The projected nonlinearities of the vorticity equation.
//!
//! All quadratic products of band-limited sine fields have sine content
//! at most 2 ny and x content at most 2 nx, so the dealiased
//! pseudo-spectral product followed by truncation IS the Galerkin
//! projection, exactly (to rounding). b_0 is assembled coefficient-side:
//! the x-average of (d_x inv_lap Y) Y is a finite cosine series, whose
//! exact d_y is a finite sine series.

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{
    biot_savart, dx, dy_to_cosine, inv_laplacian, lambda_y, mu_y, project_cos_to_sine,
    SpectralField, Transformer,
};

/// Cosine coefficients (c = 0..=2ny) of
/// B_0(Y) = integral over x of (d_x inv_lap Y) Y.
pub fn b0_cosine(y: &SpectralField) -> Result<Vec<Complex64>> {
    y.require_nonzero_mode("b0")?;
    let t = y.trunc;
    let mut acc = vec![Complex64::new(0.0, 0.0); 2 * t.ny + 1];
    for k in -(t.nx as i64)..=(t.nx as i64) {
        if k == 0 {
            continue;
        }
        let rk = t.krow(k);
        let rmk = t.krow(-k);
        for j in 1..=t.ny {
            let g = y.coeffs[[rk, j - 1]] * Complex64::new(0.0, k as f64)
                / (-((k * k) as f64 + lambda_y(j)));
            if g.norm_sqr() == 0.0 {
                continue;
            }
            for jp in 1..=t.ny {
                let h = y.coeffs[[rmk, jp - 1]];
                if h.norm_sqr() == 0.0 {
                    continue;
                }
                let half = 0.5 * g * h;
                let d = (j as i64 - jp as i64).unsigned_abs() as usize;
                acc[d] += half;
                acc[j + jp] -= half;
            }
        }
    }
    Ok(acc)
}

/// b_0(Y) = -d_y B_0(Y), exact on the retained sine modes, and the L^2
/// projection of B_0 itself onto the sine basis.
pub struct ZeroModeNonlinearity {
    /// b_0 as a zero-mode sine field.
    pub b0: SpectralField,
    /// B_0 projected onto the truncated sine basis.
    pub b0_int: SpectralField,
    /// Exact cosine representation of B_0 (c = 0..=2ny).
    pub b0_int_cos: Vec<Complex64>,
}

pub fn nonlin_b0_full(y: &SpectralField) -> Result<ZeroModeNonlinearity> {
    let t = y.trunc;
    let cosrep = b0_cosine(y)?;
    let mut b0 = SpectralField::zeros(t);
    // -d_y cos_c = (c pi / 2) sin_c
    for j in 1..=t.ny {
        b0.set(0, j, cosrep[j] * mu_y(j));
    }
    let proj = project_cos_to_sine(&cosrep, t.ny);
    let mut b0_int = SpectralField::zeros(t);
    for j in 1..=t.ny {
        b0_int.set(0, j, proj[j - 1]);
    }
    Ok(ZeroModeNonlinearity {
        b0,
        b0_int,
        b0_int_cos: cosrep,
    })
}

/// b_0(Y) alone.
pub fn nonlin_b0(y: &SpectralField) -> Result<SpectralField> {
    Ok(nonlin_b0_full(y)?.b0)
}

/// B_0(Y) alone (sine projection).
pub fn nonlin_b0_int(y: &SpectralField) -> Result<SpectralField> {
    Ok(nonlin_b0_full(y)?.b0_int)
}

/// The full advection product P_trunc((grad^perp inv_lap w) . grad w),
/// all k retained (the k = 0 column is the x-average of the product).
pub fn advection(w: &SpectralField, tr: &Transformer) -> Result<SpectralField> {
    let (u1, u2) = biot_savart(w);
    let wx = dx(w);
    let wy = dy_to_cosine(w);
    let g = tr
        .cos_to_grid(&u1)
        .mul(&tr.to_grid(&wx))
        .add(&tr.to_grid(&u2).mul(&tr.cos_to_grid(&wy)));
    tr.to_spectral(&g)
}

/// b_neq(Y) = P_neq((grad^perp inv_lap Y) . grad Y).
pub fn nonlin_bneq(y: &SpectralField, tr: &Transformer) -> Result<SpectralField> {
    y.require_nonzero_mode("b_neq")?;
    let mut out = advection(y, tr)?;
    out.project_nonzero();
    Ok(out)
}

/// b_m(X, Y) = (d_y inv_lap X)(d_x Y) - (d_x inv_lap Y)(d_y X).
pub fn nonlin_bm(x: &SpectralField, y: &SpectralField, tr: &Transformer) -> Result<SpectralField> {
    x.require_zero_mode("b_m first argument")?;
    y.require_nonzero_mode("b_m second argument")?;
    let term1 = tr
        .cos_to_grid(&dy_to_cosine(&inv_laplacian(x)))
        .mul(&tr.to_grid(&dx(y)));
    let term2 = tr
        .to_grid(&dx(&inv_laplacian(y)))
        .mul(&tr.cos_to_grid(&dy_to_cosine(x)));
    let mut out = tr.to_spectral(&term1.sub(&term2))?;
    out.project_nonzero();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inner, SpectralField, Truncation};
    use num_complex::Complex64;

    #[test]
    fn b0_single_k_cancellation() {
        // Y = e_{1,1} + e_{-1,1}: the x-average of (d_x inv_lap Y) Y
        // vanishes (integral of sin cos over the torus).
        let t = Truncation::new(2, 6);
        let y = SpectralField::basis_real(t, 1, 1);
        let out = nonlin_b0_full(&y).unwrap();
        assert!(out.b0.norm_l2() < 1e-15);
        assert!(out.b0_int.norm_l2() < 1e-15);
    }

    #[test]
    fn b0_zero_input() {
        let t = Truncation::new(2, 6);
        let y = SpectralField::zeros(t);
        assert_eq!(nonlin_b0(&y).unwrap().norm_l2(), 0.0);
    }

    #[test]
    fn bm_zero_x_gives_zero() {
        let t = Truncation::new(2, 6);
        let tr = Transformer::new(t);
        let x = SpectralField::zeros(t);
        let y = SpectralField::basis_real(t, 1, 1);
        let out = nonlin_bm(&x, &y, &tr).unwrap();
        assert!(out.norm_l2() < 1e-14);
    }

    #[test]
    fn sector_violations_rejected() {
        let t = Truncation::new(2, 6);
        let tr = Transformer::new(t);
        let mixed = {
            let mut f = SpectralField::basis_real(t, 1, 1);
            f.set(0, 1, Complex64::new(1.0, 0.0));
            f
        };
        assert!(nonlin_b0(&mixed).is_err());
        assert!(nonlin_bneq(&mixed, &tr).is_err());
        let x = SpectralField::basis_real(t, 0, 1);
        assert!(nonlin_bm(&mixed, &mixed, &tr).is_err());
        assert!(nonlin_bm(&x, &mixed, &tr).is_err());
    }

    #[test]
    fn advection_energy_neutral() {
        // <(grad^perp inv_lap Y) . grad Y, Y> = 0 for the exact Galerkin
        // product of band-limited fields.
        let t = Truncation::new(3, 8);
        let tr = Transformer::new(t);
        let mut y = SpectralField::zeros(t);
        y.set(1, 1, Complex64::new(0.4, -0.2));
        y.set(1, 3, Complex64::new(-0.1, 0.7));
        y.set(2, 2, Complex64::new(0.3, 0.05));
        y.set(3, 5, Complex64::new(-0.25, 0.15));
        y.symmetrize_reality();
        let adv = advection(&y, &tr).unwrap();
        let pairing = inner(&adv, &y).re;
        assert!(pairing.abs() < 1e-12, "pairing = {pairing}");
    }

    #[test]
    fn bneq_x_average_matches_b0_route() {
        // The k = 0 column of the raw advection equals b_0 computed via
        // the -d_y B_0 cosine route.
        let t = Truncation::new(3, 8);
        let tr = Transformer::new(t);
        let mut y = SpectralField::zeros(t);
        y.set(1, 1, Complex64::new(0.8, 0.1));
        y.set(1, 2, Complex64::new(-0.3, 0.2));
        y.set(2, 4, Complex64::new(0.2, -0.4));
        y.symmetrize_reality();
        let adv = advection(&y, &tr).unwrap();
        let b0 = nonlin_b0(&y).unwrap();
        let diff = adv.project_zero().sub(&b0);
        assert!(diff.norm_l2() < 1e-10, "diff = {}", diff.norm_l2());
        // and the full b_neq is the advection minus exactly that column
        let bneq = nonlin_bneq(&y, &tr).unwrap();
        assert!(bneq.is_nonzero_mode(0.0));
    }

    #[test]
    fn reality_preserved() {
        let t = Truncation::new(3, 8);
        let tr = Transformer::new(t);
        let mut y = SpectralField::zeros(t);
        y.set(1, 1, Complex64::new(0.5, 0.3));
        y.set(2, 3, Complex64::new(-0.2, 0.6));
        y.symmetrize_reality();
        let x = SpectralField::basis_real(t, 0, 2);
        assert!(nonlin_bneq(&y, &tr).unwrap().reality_defect() < 1e-13);
        assert!(nonlin_bm(&x, &y, &tr).unwrap().reality_defect() < 1e-13);
        assert!(nonlin_b0(&y).unwrap().reality_defect() < 1e-13);
    }
}
