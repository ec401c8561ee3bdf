//! Test-side oracles, independent of the library's transform and
//! product machinery: direct summation on a dense grid, Gauss-Legendre
//! quadrature in y, trapezoid in x, a Taylor matrix exponential, and a
//! step-doubling quadrature for stationary covariances.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;

use cavg::spectral::{SpectralField, Truncation};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Dense evaluation/projection oracle.
pub struct DenseOracle {
    pub trunc: Truncation,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
}

impl DenseOracle {
    /// 4x dense in x (trapezoid, exact for the retained band), GL in y.
    pub fn new(trunc: Truncation) -> Self {
        let mx = 4 * (2 * trunc.nx + 1);
        let xs = (0..mx)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / mx as f64)
            .collect();
        let (ys, wy) = gauss_legendre(4 * trunc.ny + 32);
        Self { trunc, xs, ys, wy }
    }

    /// Evaluate a sine-basis field at (x, y) by direct summation.
    pub fn eval(&self, f: &SpectralField, x: f64, y: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..f.trunc.krows() {
            let k = f.trunc.kof(r) as f64;
            let ph = Complex64::new(0.0, k * x).exp();
            for j in 1..=f.trunc.ny {
                let c = f.coeffs[[r, j - 1]];
                if c.norm_sqr() != 0.0 {
                    let s = (j as f64 * std::f64::consts::PI * (y + 1.0) / 2.0).sin();
                    acc += c * ph * s;
                }
            }
        }
        acc
    }

    /// Tabulate a field on the dense grid.
    pub fn table(&self, f: &SpectralField) -> Array2<Complex64> {
        let mut t = Array2::zeros((self.xs.len(), self.ys.len()));
        for (i, &x) in self.xs.iter().enumerate() {
            for (p, &y) in self.ys.iter().enumerate() {
                t[[i, p]] = self.eval(f, x, y);
            }
        }
        t
    }

    /// Project dense-grid values onto the truncated sine basis:
    /// c_{k,j} = (1/2pi) integral f e^{-ikx} sin_j dy dx.
    pub fn project(&self, values: &Array2<Complex64>) -> SpectralField {
        let t = self.trunc;
        let mut out = SpectralField::zeros(t);
        let mx = self.xs.len() as f64;
        for r in 0..t.krows() {
            let k = t.kof(r) as f64;
            for j in 1..=t.ny {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &x) in self.xs.iter().enumerate() {
                    let ph = Complex64::new(0.0, -k * x).exp();
                    let mut yint = Complex64::new(0.0, 0.0);
                    for (p, &y) in self.ys.iter().enumerate() {
                        let s = (j as f64 * std::f64::consts::PI * (y + 1.0) / 2.0).sin();
                        yint += values[[i, p]] * (s * self.wy[p]);
                    }
                    acc += yint * ph;
                }
                out.coeffs[[r, j - 1]] = acc / mx;
            }
        }
        out
    }

    /// Pointwise derivative tables by direct summation of the
    /// differentiated series.
    pub fn table_dx(&self, f: &SpectralField) -> Array2<Complex64> {
        let mut t = Array2::zeros((self.xs.len(), self.ys.len()));
        for (i, &x) in self.xs.iter().enumerate() {
            for (p, &y) in self.ys.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..f.trunc.krows() {
                    let k = f.trunc.kof(r) as f64;
                    let ph = Complex64::new(0.0, k * x).exp() * Complex64::new(0.0, k);
                    for j in 1..=f.trunc.ny {
                        let c = f.coeffs[[r, j - 1]];
                        if c.norm_sqr() != 0.0 {
                            let s = (j as f64 * std::f64::consts::PI * (y + 1.0) / 2.0).sin();
                            acc += c * ph * s;
                        }
                    }
                }
                t[[i, p]] = acc;
            }
        }
        t
    }

    pub fn table_dy(&self, f: &SpectralField) -> Array2<Complex64> {
        let mut t = Array2::zeros((self.xs.len(), self.ys.len()));
        for (i, &x) in self.xs.iter().enumerate() {
            for (p, &y) in self.ys.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..f.trunc.krows() {
                    let k = f.trunc.kof(r) as f64;
                    let ph = Complex64::new(0.0, k * x).exp();
                    for j in 1..=f.trunc.ny {
                        let c = f.coeffs[[r, j - 1]];
                        if c.norm_sqr() != 0.0 {
                            let mu = j as f64 * std::f64::consts::PI / 2.0;
                            let cs = (mu * (y + 1.0)).cos() * mu;
                            acc += c * ph * cs;
                        }
                    }
                }
                t[[i, p]] = acc;
            }
        }
        t
    }

    /// inv_laplacian then the requested derivative, tabulated densely.
    pub fn table_inv_lap(&self, f: &SpectralField) -> SpectralField {
        cavg::spectral::inv_laplacian(f)
    }

    /// Oracle for b_0 / B_0: B_0(y0) = (1/2pi) int_T (d_x invlap Y) Y dx
    /// evaluated densely in y, then projected on sines; b_0 = -d_y B_0
    /// projected on sines by quadrature of the derivative integrand.
    pub fn oracle_b0(&self, yfield: &SpectralField) -> (SpectralField, SpectralField) {
        let psi = cavg::spectral::inv_laplacian(yfield);
        let dxpsi = self.table_dx(&psi);
        let yv = self.table(yfield);
        // x-average of the product at each dense y node
        let mx = self.xs.len();
        let b0_int_vals: Vec<Complex64> = (0..self.ys.len())
            .map(|p| {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..mx {
                    s += dxpsi[[i, p]] * yv[[i, p]];
                }
                s / mx as f64
            })
            .collect();
        let t = self.trunc;
        let mut b0_int = SpectralField::zeros(t);
        let mut b0 = SpectralField::zeros(t);
        for j in 1..=t.ny {
            let mu = j as f64 * std::f64::consts::PI / 2.0;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut acc_der = Complex64::new(0.0, 0.0);
            for (p, &y) in self.ys.iter().enumerate() {
                let s = (mu * (y + 1.0)).sin();
                let cs = (mu * (y + 1.0)).cos();
                acc += b0_int_vals[p] * (s * self.wy[p]);
                // <-d_y B, sin_j> = <B, (sin_j)'> = mu <B, cos_j>
                acc_der += b0_int_vals[p] * (cs * self.wy[p]);
            }
            b0_int.set(0, j, acc);
            b0.set(0, j, acc_der * mu);
        }
        (b0, b0_int)
    }

    /// Oracle for b_m(X, Y) = (d_y invlap X)(d_x Y) - (d_x invlap Y)(d_y X).
    pub fn oracle_bm(&self, x: &SpectralField, y: &SpectralField) -> SpectralField {
        let u = cavg::spectral::inv_laplacian(x);
        let du = self.table_dy(&u);
        let dxy = self.table_dx(y);
        let psi = cavg::spectral::inv_laplacian(y);
        let dxpsi = self.table_dx(&psi);
        let dyx = self.table_dy(x);
        let mut vals = Array2::zeros((self.xs.len(), self.ys.len()));
        for i in 0..self.xs.len() {
            for p in 0..self.ys.len() {
                vals[[i, p]] = du[[i, p]] * dxy[[i, p]] - dxpsi[[i, p]] * dyx[[i, p]];
            }
        }
        let mut out = self.project(&vals);
        out.project_nonzero();
        out
    }

    /// Oracle for the advection (grad^perp invlap w) . grad w.
    pub fn oracle_advection(&self, w: &SpectralField) -> SpectralField {
        let psi = cavg::spectral::inv_laplacian(w);
        let u1 = self.table_dy(&psi);
        let u2m = self.table_dx(&psi);
        let wx = self.table_dx(w);
        let wy = self.table_dy(w);
        let mut vals = Array2::zeros((self.xs.len(), self.ys.len()));
        for i in 0..self.xs.len() {
            for p in 0..self.ys.len() {
                vals[[i, p]] = u1[[i, p]] * wx[[i, p]] - u2m[[i, p]] * wy[[i, p]];
            }
        }
        self.project(&vals)
    }

    pub fn oracle_bneq(&self, y: &SpectralField) -> SpectralField {
        let mut out = self.oracle_advection(y);
        out.project_nonzero();
        out
    }
}

/// Taylor-with-scaling matrix exponential, independent of the library.
pub fn expm_oracle(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|v| v.norm()).sum();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a.mapv(|v| v / 2.0f64.powi(s));
    let mut out = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=30 {
        term = term.dot(&b).mapv(|v| v / k as f64);
        out = &out + &term;
    }
    for _ in 0..s {
        out = out.dot(&out);
    }
    out
}

/// Quadrature oracle for int_0^T e^{As} C e^{A^H s} ds by interval
/// doubling from a fine trapezoid base.
pub fn lyapunov_quadrature_oracle(
    a: &Array2<Complex64>,
    c: &Array2<Complex64>,
    t_final: f64,
    base_steps: usize,
) -> Array2<Complex64> {
    let n = a.nrows();
    let mut doublings = 0;
    let mut h = t_final;
    while h > 1e-3 || doublings < 8 {
        h /= 2.0;
        doublings += 1;
        if doublings > 60 {
            break;
        }
    }
    // base integral on [0, h] by trapezoid with base_steps panels
    let dt = h / base_steps as f64;
    let ed = expm_oracle(&a.mapv(|v| v * dt));
    let mut q = Array2::<Complex64>::zeros((n, n));
    let mut phi = Array2::<Complex64>::eye(n);
    for step in 0..=base_steps {
        let w = if step == 0 || step == base_steps { 0.5 } else { 1.0 };
        let term = phi.dot(c).dot(&conj_t(&phi));
        q = &q + &term.mapv(|v| v * (w * dt));
        if step < base_steps {
            phi = ed.dot(&phi);
        }
    }
    // doubling: Q_{2T} = Q_T + e^{AT} Q_T e^{A^H T}
    let mut eh = expm_oracle(&a.mapv(|v| v * h));
    for _ in 0..doublings {
        let q2 = eh.dot(&q).dot(&conj_t(&eh));
        q = &q + &q2;
        eh = eh.dot(&eh);
    }
    q
}

pub fn conj_t(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.mapv(|v| v.conj()).reversed_axes().as_standard_layout().to_owned()
}

pub fn rel_err(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let num: f64 = (a - b).iter().map(|v| v.norm_sqr()).sum();
    let den: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

/// Deterministic low-mode random field for oracle tests.
pub fn random_low_mode(trunc: Truncation, seed: u64, zero_mode: bool) -> SpectralField {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(12345);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut f = SpectralField::zeros(trunc);
    let kmax = trunc.nx.min(3) as i64;
    let jmax = trunc.ny.min(6);
    if zero_mode {
        for j in 1..=jmax {
            f.set(0, j, Complex64::new(next(), 0.0));
        }
    } else {
        for k in 1..=kmax {
            for j in 1..=jmax {
                let v = Complex64::new(next(), next());
                f.set(k, j, v);
                f.set(-k, j, v.conj());
            }
        }
    }
    f
}
