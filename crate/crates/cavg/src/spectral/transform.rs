//! FFT in x, type-I discrete sine transform in y, with dealiasing pads.
//!
//! The product grid uses mx >= 3 nx + 1 points in x (so quadratic
//! products of retained modes never alias back onto |k| <= nx) and
//! my = 2 ny points in y (so sine content of quadratic products, which
//! is at most frequency 2 ny, is represented exactly on the grid).

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::{CosineField, GridField, SpectralField, Truncation};
use crate::error::{Error, Result};

pub struct Transformer {
    pub trunc: Truncation,
    pub mx: usize,
    pub my: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// FFT of length 2 (my + 1) used to realize the DST-I.
    fft_dst: Arc<dyn Fft<f64>>,
    /// cos(c pi (p+1) / (my+1)) table, shape (my, ny + 1).
    cos_table: Array2<f64>,
}

impl Transformer {
    pub fn new(trunc: Truncation) -> Self {
        let mx = 3 * trunc.nx + 2;
        let my = 2 * trunc.ny;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(mx);
        let fft_inv = planner.plan_fft_inverse(mx);
        let fft_dst = planner.plan_fft_forward(2 * (my + 1));
        let p = (my + 1) as f64;
        let mut cos_table = Array2::zeros((my, trunc.ny + 1));
        for row in 0..my {
            let theta = std::f64::consts::PI * (row + 1) as f64 / p;
            for c in 0..=trunc.ny {
                cos_table[[row, c]] = (c as f64 * theta).cos();
            }
        }
        Self {
            trunc,
            mx,
            my,
            fft_fwd,
            fft_inv,
            fft_dst,
            cos_table,
        }
    }

    /// y node coordinates y_p = -1 + 2 (p+1)/(my+1), p = 0..my.
    pub fn y_nodes(&self) -> Vec<f64> {
        let p = (self.my + 1) as f64;
        (0..self.my).map(|q| -1.0 + 2.0 * (q + 1) as f64 / p).collect()
    }

    /// x node coordinates x_i = 2 pi i / mx.
    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.mx)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / self.mx as f64)
            .collect()
    }

    /// Unnormalized DST-I: out[j-1] = sum_p in[p-1] sin(j pi p / (my+1)),
    /// j = 1..=my, via an odd extension and one complex FFT.
    fn dst1(&self, col: &[Complex64]) -> Vec<Complex64> {
        let p = self.my + 1;
        let l = 2 * p;
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for (q, v) in col.iter().enumerate() {
            buf[q + 1] = *v;
            buf[l - 1 - q] = -*v;
        }
        self.fft_dst.process(&mut buf);
        (1..=self.my)
            .map(|j| Complex64::new(0.0, 0.5) * buf[j])
            .collect()
    }

    /// Synthesize a sine field on the grid.
    pub fn to_grid(&self, f: &SpectralField) -> GridField {
        self.check_trunc(f.trunc);
        // x synthesis per j: rows of complex values on the padded grid.
        let mut xstage = Array2::<Complex64>::zeros((self.mx, self.trunc.ny));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mx];
        for j in 0..self.trunc.ny {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for r in 0..f.trunc.krows() {
                let k = f.trunc.kof(r);
                let bin = k.rem_euclid(self.mx as i64) as usize;
                buf[bin] += f.coeffs[[r, j]];
            }
            self.fft_inv.process(&mut buf);
            for i in 0..self.mx {
                xstage[[i, j]] = buf[i];
            }
        }
        // y synthesis per x: DST-I of the coefficient column.
        let mut values = Array2::zeros((self.mx, self.my));
        let mut col = vec![Complex64::new(0.0, 0.0); self.my];
        for i in 0..self.mx {
            for (j, c) in col.iter_mut().enumerate() {
                *c = if j < self.trunc.ny {
                    xstage[[i, j]]
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            let out = self.dst1(&col);
            for p in 0..self.my {
                values[[i, p]] = out[p].re;
            }
        }
        GridField {
            mx: self.mx,
            my: self.my,
            values,
        }
    }

    /// Synthesize a cosine field on the grid (table-based evaluation at
    /// the sine collocation nodes).
    pub fn cos_to_grid(&self, f: &CosineField) -> GridField {
        self.check_trunc(f.trunc);
        let mut xstage = Array2::<Complex64>::zeros((self.mx, self.trunc.ny + 1));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mx];
        for c in 0..=self.trunc.ny {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for r in 0..f.trunc.krows() {
                let k = f.trunc.kof(r);
                let bin = k.rem_euclid(self.mx as i64) as usize;
                buf[bin] += f.coeffs[[r, c]];
            }
            self.fft_inv.process(&mut buf);
            for i in 0..self.mx {
                xstage[[i, c]] = buf[i];
            }
        }
        let mut values = Array2::zeros((self.mx, self.my));
        for i in 0..self.mx {
            for p in 0..self.my {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..=self.trunc.ny {
                    acc += xstage[[i, c]] * self.cos_table[[p, c]];
                }
                values[[i, p]] = acc.re;
            }
        }
        GridField {
            mx: self.mx,
            my: self.my,
            values,
        }
    }

    /// Analyze grid values back to the truncated sine basis. Modes
    /// outside |k| <= nx, j <= ny are discarded (2/3-style rule in x,
    /// exact quadrature in y for band-limited products).
    pub fn to_spectral(&self, g: &GridField) -> Result<SpectralField> {
        if g.mx != self.mx || g.my != self.my {
            return Err(Error::DimensionMismatch(format!(
                "grid is {}x{}, transformer expects {}x{}",
                g.mx, g.my, self.mx, self.my
            )));
        }
        // forward FFT in x per y node, normalized by 1/mx.
        let mut xstage = Array2::<Complex64>::zeros((self.trunc.krows(), self.my));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mx];
        let scale = 1.0 / self.mx as f64;
        for p in 0..self.my {
            for i in 0..self.mx {
                buf[i] = Complex64::new(g.values[[i, p]], 0.0);
            }
            self.fft_fwd.process(&mut buf);
            for r in 0..self.trunc.krows() {
                let k = self.trunc.kof(r);
                let bin = k.rem_euclid(self.mx as i64) as usize;
                xstage[[r, p]] = buf[bin] * scale;
            }
        }
        // DST-I analysis per k column, weight 2/(my+1).
        let w = 2.0 / (self.my + 1) as f64;
        let mut out = SpectralField::zeros(self.trunc);
        let mut col = vec![Complex64::new(0.0, 0.0); self.my];
        for r in 0..self.trunc.krows() {
            for p in 0..self.my {
                col[p] = xstage[[r, p]];
            }
            let coeffs = self.dst1(&col);
            for j in 0..self.trunc.ny {
                out.coeffs[[r, j]] = coeffs[j] * w;
            }
        }
        Ok(out)
    }

    fn check_trunc(&self, t: Truncation) {
        assert_eq!(
            t, self.trunc,
            "field truncation {t:?} does not match transformer {:?}",
            self.trunc
        );
    }
}

impl GridField {
    /// Pointwise product.
    pub fn mul(&self, other: &GridField) -> GridField {
        GridField {
            mx: self.mx,
            my: self.my,
            values: &self.values * &other.values,
        }
    }

    pub fn add(&self, other: &GridField) -> GridField {
        GridField {
            mx: self.mx,
            my: self.my,
            values: &self.values + &other.values,
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        GridField {
            mx: self.mx,
            my: self.my,
            values: &self.values - &other.values,
        }
    }

    /// Quadrature-weighted L^2 norm matching the coefficient pairing:
    /// (1/mx) (2/(my+1)) sum of squares, square-rooted.
    pub fn norm_l2(&self) -> f64 {
        let w = (1.0 / self.mx as f64) * (2.0 / (self.my + 1) as f64);
        (self.values.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
