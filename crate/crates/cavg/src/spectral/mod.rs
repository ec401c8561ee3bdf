//! Basis, transforms, and linear operators on the periodic channel
//! `T x [-1,1]`: Fourier modes `e^{ikx}` in x, Dirichlet sine modes
//! `sin(j pi (y+1)/2)` in y.
//!
//! Coefficient conventions: a field is stored as a complex matrix over
//! `(k, j)` with `k in -nx..=nx` and `j in 1..=ny`, with each basis
//! function treated as unit-norm in the "sum over k of L^2([-1,1])"
//! pairing (the x-factor 2*pi is divided out everywhere). Real fields
//! satisfy `c(-k,j) = conj(c(k,j))`.

mod transform;
mod ymatrices;

pub use transform::Transformer;
pub use ymatrices::{apply_cos_profile, cos_profile_matrix, gram_sin_cos, mult_y_matrix, project_cos_to_sine};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Truncation sizes: modes k in -nx..=nx, j in 1..=ny.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub nx: usize,
    pub ny: usize,
}

impl Truncation {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny }
    }

    /// Number of k rows.
    pub fn krows(&self) -> usize {
        2 * self.nx + 1
    }

    /// Row index for wavenumber k.
    pub fn krow(&self, k: i64) -> usize {
        (k + self.nx as i64) as usize
    }

    /// Wavenumber for row index.
    pub fn kof(&self, row: usize) -> i64 {
        row as i64 - self.nx as i64
    }
}

/// y-eigenvalue of -d^2/dy^2 on sine mode j: (j pi / 2)^2.
#[inline]
pub fn lambda_y(j: usize) -> f64 {
    let a = j as f64 * std::f64::consts::PI / 2.0;
    a * a
}

/// sine frequency j as the factor j pi / 2.
#[inline]
pub fn mu_y(j: usize) -> f64 {
    j as f64 * std::f64::consts::PI / 2.0
}

/// Spectral field in the Fourier x sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub trunc: Truncation,
    /// Shape (2nx+1, ny); entry (krow, j-1).
    pub coeffs: Array2<Complex64>,
}

/// Companion representation in the Fourier x cosine basis, produced by
/// d/dy acting on sine fields. Kept as a distinct type so sine and
/// cosine content is never mixed silently.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineField {
    pub trunc: Truncation,
    /// Shape (2nx+1, ny+1); entry (krow, c) for cosine frequency c in 0..=ny.
    pub coeffs: Array2<Complex64>,
}

/// Real collocation values on the product grid (uniform in x, DST-I
/// nodes in y).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub mx: usize,
    pub my: usize,
    /// Shape (mx, my); entry (i, p) is the value at x_i = 2 pi i / mx,
    /// y_p = -1 + 2 (p+1) / (my + 1).
    pub values: Array2<f64>,
}

impl SpectralField {
    pub fn zeros(trunc: Truncation) -> Self {
        Self {
            trunc,
            coeffs: Array2::zeros((trunc.krows(), trunc.ny)),
        }
    }

    /// Single basis mode e_{k,j} as a real field: for k != 0 both
    /// (k,j) and (-k,j) are set to 1 (so the physical field is
    /// 2 cos(kx) sin(..)); for k = 0 the single coefficient is set.
    pub fn basis_real(trunc: Truncation, k: i64, j: usize) -> Self {
        let mut f = Self::zeros(trunc);
        f.coeffs[[trunc.krow(k), j - 1]] = Complex64::new(1.0, 0.0);
        if k != 0 {
            f.coeffs[[trunc.krow(-k), j - 1]] = Complex64::new(1.0, 0.0);
        }
        f
    }

    pub fn get(&self, k: i64, j: usize) -> Complex64 {
        self.coeffs[[self.trunc.krow(k), j - 1]]
    }

    pub fn set(&mut self, k: i64, j: usize, v: Complex64) {
        self.coeffs[[self.trunc.krow(k), j - 1]] = v;
    }

    /// True if only the k = 0 column is populated.
    pub fn is_zero_mode(&self, tol: f64) -> bool {
        let z = self.trunc.krow(0);
        self.coeffs
            .rows()
            .into_iter()
            .enumerate()
            .all(|(r, row)| r == z || row.iter().all(|c| c.norm() <= tol))
    }

    /// True if the k = 0 column vanishes.
    pub fn is_nonzero_mode(&self, tol: f64) -> bool {
        let z = self.trunc.krow(0);
        self.coeffs.row(z).iter().all(|c| c.norm() <= tol)
    }

    pub fn require_zero_mode(&self, what: &str) -> Result<()> {
        if self.is_zero_mode(0.0) {
            Ok(())
        } else {
            Err(Error::WrongSector(format!("{what}: expected k = 0 only")))
        }
    }

    pub fn require_nonzero_mode(&self, what: &str) -> Result<()> {
        if self.is_nonzero_mode(0.0) {
            Ok(())
        } else {
            Err(Error::WrongSector(format!("{what}: expected no k = 0 content")))
        }
    }

    /// Zero the k = 0 column (the projection P_neq).
    pub fn project_nonzero(&mut self) {
        let z = self.trunc.krow(0);
        for j in 0..self.trunc.ny {
            self.coeffs[[z, j]] = Complex64::new(0.0, 0.0);
        }
    }

    /// Keep only the k = 0 column.
    pub fn project_zero(&self) -> SpectralField {
        let mut out = SpectralField::zeros(self.trunc);
        let z = self.trunc.krow(0);
        for j in 0..self.trunc.ny {
            out.coeffs[[z, j]] = self.coeffs[[z, j]];
        }
        out
    }

    /// k = 0 column as a real vector; imaginary parts must be zero for
    /// real fields.
    pub fn zero_mode_real(&self) -> Array1<f64> {
        let z = self.trunc.krow(0);
        Array1::from_iter((0..self.trunc.ny).map(|j| self.coeffs[[z, j]].re))
    }

    /// Maximum deviation from the reality constraint
    /// c(-k,j) = conj(c(k,j)).
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.trunc.nx as i64 {
            for j in 1..=self.trunc.ny {
                let a = self.get(k, j);
                let b = self.get(-k, j);
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Enforce the reality constraint by averaging conjugate pairs.
    pub fn symmetrize_reality(&mut self) {
        for k in 1..=self.trunc.nx as i64 {
            for j in 1..=self.trunc.ny {
                let a = self.get(k, j);
                let b = self.get(-k, j).conj();
                let m = 0.5 * (a + b);
                self.set(k, j, m);
                self.set(-k, j, m.conj());
            }
        }
        for j in 1..=self.trunc.ny {
            let c = self.get(0, j);
            self.set(0, j, Complex64::new(c.re, 0.0));
        }
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField {
            trunc: self.trunc,
            coeffs: self.coeffs.mapv(|c| c * s),
        }
    }

    pub fn add_scaled(&mut self, other: &SpectralField, s: f64) {
        self.coeffs.zip_mut_with(&other.coeffs, |a, b| *a += b * s);
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        SpectralField {
            trunc: self.trunc,
            coeffs: &self.coeffs - &other.coeffs,
        }
    }
}

impl CosineField {
    pub fn zeros(trunc: Truncation) -> Self {
        Self {
            trunc,
            coeffs: Array2::zeros((trunc.krows(), trunc.ny + 1)),
        }
    }
}

/// Coefficient inner product sum conj(f) g (unit-norm basis pairing).
pub fn inner(f: &SpectralField, g: &SpectralField) -> Complex64 {
    f.coeffs
        .iter()
        .zip(g.coeffs.iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// d/dx: multiply row k by i k.
pub fn dx(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    for r in 0..f.trunc.krows() {
        let k = f.trunc.kof(r) as f64;
        for j in 0..f.trunc.ny {
            out.coeffs[[r, j]] *= Complex64::new(0.0, k);
        }
    }
    out
}

/// d/dy maps sine mode j to (j pi / 2) cos mode j.
pub fn dy_to_cosine(f: &SpectralField) -> CosineField {
    let mut out = CosineField::zeros(f.trunc);
    for r in 0..f.trunc.krows() {
        for j in 1..=f.trunc.ny {
            out.coeffs[[r, j]] = f.coeffs[[r, j - 1]] * mu_y(j);
        }
    }
    out
}

/// d/dy on a cosine field: cos mode c maps to -(c pi / 2) sin mode c.
/// The c = 0 column is annihilated; modes above ny cannot occur here.
pub fn dy_cosine_to_sine(f: &CosineField) -> SpectralField {
    let mut out = SpectralField::zeros(f.trunc);
    for r in 0..f.trunc.krows() {
        for c in 1..=f.trunc.ny {
            out.coeffs[[r, c - 1]] = -f.coeffs[[r, c]] * mu_y(c);
        }
    }
    out
}

/// Laplacian: multiply (k,j) by -(k^2 + (j pi/2)^2).
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    for r in 0..f.trunc.krows() {
        let k = f.trunc.kof(r) as f64;
        for j in 1..=f.trunc.ny {
            out.coeffs[[r, j - 1]] *= -(k * k + lambda_y(j));
        }
    }
    out
}

/// Inverse Laplacian with Dirichlet conditions; every mode is
/// invertible since k^2 + (j pi/2)^2 > 0 for j >= 1.
pub fn inv_laplacian(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    for r in 0..f.trunc.krows() {
        let k = f.trunc.kof(r) as f64;
        for j in 1..=f.trunc.ny {
            out.coeffs[[r, j - 1]] /= -(k * k + lambda_y(j));
        }
    }
    out
}

/// Which Laplacian enters the heat factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatKind {
    /// exp(-kappa t (k^2 + (j pi/2)^2))
    Full,
    /// exp(-kappa t (j pi/2)^2)
    YOnly,
}

/// Heat semigroup e^{kappa t Delta} (or the d_y^2-only variant).
pub fn heat_semigroup(f: &SpectralField, t: f64, kappa: f64, kind: HeatKind) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(Error::Domain(format!("heat_semigroup: t = {t} < 0")));
    }
    let mut out = f.clone();
    for r in 0..f.trunc.krows() {
        let k = f.trunc.kof(r) as f64;
        for j in 1..=f.trunc.ny {
            let lam = match kind {
                HeatKind::Full => k * k + lambda_y(j),
                HeatKind::YOnly => lambda_y(j),
            };
            out.coeffs[[r, j - 1]] *= (-kappa * t * lam).exp();
        }
    }
    Ok(out)
}

/// Spectral fractional derivative |d_y|^s on the zero-mode sector:
/// coefficient-wise multiplication by (j pi / 2)^s.
pub fn frac_dy(f: &SpectralField, s: f64) -> Result<SpectralField> {
    f.require_zero_mode("frac_dy")?;
    let mut out = f.clone();
    let z = f.trunc.krow(0);
    for j in 1..=f.trunc.ny {
        out.coeffs[[z, j - 1]] *= mu_y(j).powf(s);
    }
    Ok(out)
}

/// Biot-Savart: v = (d_y inv_laplacian f, -d_x inv_laplacian f).
/// The first component is cosine-type, the second sine-type.
pub fn biot_savart(f: &SpectralField) -> (CosineField, SpectralField) {
    let psi = inv_laplacian(f);
    let u1 = dy_to_cosine(&psi);
    let u2 = dx(&psi).scaled(-1.0);
    (u1, u2)
}

/// Isotropic Sobolev norm: sum (k^2 + (j pi/2)^2)^s |c|^2, square-rooted.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let mut acc = 0.0;
    for r in 0..f.trunc.krows() {
        let k = f.trunc.kof(r) as f64;
        for j in 1..=f.trunc.ny {
            acc += (k * k + lambda_y(j)).powf(s) * f.coeffs[[r, j - 1]].norm_sqr();
        }
    }
    acc.sqrt()
}

/// H^s norm of a zero-mode field via the sine spectrum:
/// sum (j pi/2)^{2s} |c_j|^2, square-rooted. Valid for any real s.
pub fn sobolev_norm_zero(f: &SpectralField, s: f64) -> Result<f64> {
    f.require_zero_mode("sobolev_norm_zero")?;
    let z = f.trunc.krow(0);
    let mut acc = 0.0;
    for j in 1..=f.trunc.ny {
        acc += mu_y(j).powf(2.0 * s) * f.coeffs[[z, j - 1]].norm_sqr();
    }
    Ok(acc.sqrt())
}
