//! Exact Galerkin matrices for multiplication in y.
//!
//! Products of a cosine profile with a sine series are band-limited:
//! cos_c * sin_j = (sin_{j+c} + sgn(j-c) sin_{|j-c|}) / 2, so the
//! truncated product IS the L^2 projection. Multiplication by y itself
//! has an infinite sine tail; its truncated Galerkin matrix is used so
//! that the shear transport is exactly linear on the retained modes.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Galerkin matrix of f |-> y f on sine modes j = 1..=ny:
/// out_{j'} = sum_j M[j'-1, j-1] in_j. Entries are
/// (-4/pi^2) (1/(j-j')^2 - 1/(j+j')^2) for odd j - j', zero otherwise.
pub fn mult_y_matrix(ny: usize) -> Array2<f64> {
    let mut m = Array2::zeros((ny, ny));
    for jp in 1..=ny {
        for j in 1..=ny {
            let d = j as i64 - jp as i64;
            if d.rem_euclid(2) != 0 {
                let s = (j + jp) as f64;
                let d = d as f64;
                m[[jp - 1, j - 1]] = (-4.0 / (PI * PI)) * (1.0 / (d * d) - 1.0 / (s * s));
            }
        }
    }
    m
}

/// Multiply a sine coefficient column by a real cosine profile
/// (coefficients prof[c], c = 0..len-1), truncating to ny output modes.
pub fn apply_cos_profile(prof: &[f64], col: &[Complex64]) -> Vec<Complex64> {
    let ny = col.len();
    let mut out = vec![Complex64::new(0.0, 0.0); ny];
    for (c, &pc) in prof.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        for (jm1, &v) in col.iter().enumerate() {
            let j = jm1 + 1;
            let half = 0.5 * pc * v;
            let hi = j + c;
            if hi <= ny {
                out[hi - 1] += half;
            }
            let d = j as i64 - c as i64;
            if d > 0 {
                out[d as usize - 1] += half;
            } else if d < 0 {
                let idx = (-d) as usize;
                if idx <= ny {
                    out[idx - 1] -= half;
                }
            }
        }
    }
    out
}

/// Dense matrix form of `apply_cos_profile` (for operator assembly).
pub fn cos_profile_matrix(prof: &[f64], ny: usize) -> Array2<f64> {
    let mut m = Array2::zeros((ny, ny));
    for (c, &pc) in prof.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        for j in 1..=ny {
            let half = 0.5 * pc;
            let hi = j + c;
            if hi <= ny {
                m[[hi - 1, j - 1]] += half;
            }
            let d = j as i64 - c as i64;
            if d > 0 {
                m[[d as usize - 1, j - 1]] += half;
            } else if d < 0 {
                let idx = (-d) as usize;
                if idx <= ny {
                    m[[idx - 1, j - 1]] -= half;
                }
            }
        }
    }
    m
}

/// Gram pairing <sin_j, cos_c> on [-1,1]:
/// (4 j / pi) / (j^2 - c^2) when j + c is odd, zero otherwise.
pub fn gram_sin_cos(j: usize, c: usize) -> f64 {
    if (j + c) % 2 == 1 {
        let jf = j as f64;
        let cf = c as f64;
        (4.0 * jf / PI) / (jf * jf - cf * cf)
    } else {
        0.0
    }
}

/// L^2 projection of a cosine series (coefficients b[c], c = 0..len-1)
/// onto sine modes 1..=ny.
pub fn project_cos_to_sine(b: &[Complex64], ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); ny];
    for j in 1..=ny {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, &bc) in b.iter().enumerate() {
            let g = gram_sin_cos(j, c);
            if g != 0.0 {
                acc += bc * g;
            }
        }
        out[j - 1] = acc;
    }
    out
}
