//! Dense complex linear algebra for the frozen-operator machinery:
//! matrix exponential, spectral abscissa, and the continuous Lyapunov
//! equation A Q + Q A^H + C = 0 solved Bartels-Stewart style via a real
//! Schur decomposition of the real embedding.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// [[Re A, -Im A], [Im A, Re A]]: a ring homomorphism from complex n x n
/// to real 2n x 2n; A^H maps to the transpose of the embedding.
pub fn embed_real(a: &Array2<Complex64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = a[[i, j]];
            m[(i, j)] = v.re;
            m[(i + n, j + n)] = v.re;
            m[(i, j + n)] = -v.im;
            m[(i + n, j)] = v.im;
        }
    }
    m
}

pub fn unembed(m: &DMatrix<f64>) -> Array2<Complex64> {
    let n = m.nrows() / 2;
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = Complex64::new(m[(i, j)], m[(i + n, j)]);
        }
    }
    a
}

/// Largest real part of the eigenvalues of A.
pub fn spectral_abscissa(a: &Array2<Complex64>) -> f64 {
    let emb = embed_real(a);
    emb.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series on
/// the scaled matrix (series truncated at machine precision; the scaled
/// one-norm is kept below 1/2).
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 1.0 / (2.0f64.powi(s as i32));
    let b = a.mapv(|v| v * scale);
    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&b).mapv(|v| v / k as f64);
        result = &result + &term;
        let tnorm: f64 = term.iter().map(|v| v.norm()).sum();
        if tnorm < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Solve the complex continuous Lyapunov equation A Q + Q A^H = -C for
/// Hermitian PSD C, assuming A is Hurwitz. Returns Q (Hermitian).
pub fn solve_lyapunov(a: &Array2<Complex64>, c: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n || c.nrows() != n || c.ncols() != n {
        return Err(Error::Lyapunov("non-square or mismatched inputs".into()));
    }
    let ar = embed_real(a);
    let cr = embed_real(c);
    // Real Schur: ar = U T U^T with T quasi upper-triangular.
    let schur = nalgebra::Schur::new(ar.clone());
    let (u, t) = schur.unpack();
    // Transform: T W + W T^T = -U^T C U =: rhs
    let rhs = -(&u.transpose() * &cr * &u);
    let w = solve_lyap_quasi_triangular(&t, &rhs)?;
    let q = &u * w * u.transpose();
    let mut out = unembed(&q);
    // enforce Hermitian symmetry against rounding
    let n2 = out.nrows();
    for i in 0..n2 {
        for j in (i + 1)..n2 {
            let m = 0.5 * (out[[i, j]] + out[[j, i]].conj());
            out[[i, j]] = m;
            out[[j, i]] = m.conj();
        }
        out[[i, i]] = Complex64::new(out[[i, i]].re, 0.0);
    }
    Ok(out)
}

/// Diagonal block partition of a real quasi upper-triangular matrix.
fn block_partition(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-300 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solve T W + W T^T = RHS for quasi upper-triangular T by block back
/// substitution from the last block backwards.
fn solve_lyap_quasi_triangular(t: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let blocks = block_partition(t);
    let nb = blocks.len();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for bi in (0..nb).rev() {
        for bj in (0..nb).rev() {
            let (i0, ni) = blocks[bi];
            let (j0, nj) = blocks[bj];
            // residual: rhs_ij - sum_{k > bi} T_ik W_kj - sum_{l > bj} W_il (T_jl)^T
            let mut r = rhs.view((i0, j0), (ni, nj)).into_owned();
            for bk in (bi + 1)..nb {
                let (k0, nk) = blocks[bk];
                let tik = t.view((i0, k0), (ni, nk));
                let wkj = w.view((k0, j0), (nk, nj));
                r -= tik * wkj;
            }
            for bl in (bj + 1)..nb {
                let (l0, nl) = blocks[bl];
                let wil = w.view((i0, l0), (ni, nl));
                let tjl = t.view((j0, l0), (nj, nl));
                r -= wil * tjl.transpose();
            }
            // solve T_ii X + X T_jj^T = r via the Kronecker system
            let tii = t.view((i0, i0), (ni, ni)).into_owned();
            let tjj = t.view((j0, j0), (nj, nj)).into_owned();
            let m = ni * nj;
            let mut sys = DMatrix::<f64>::zeros(m, m);
            let mut vec = DMatrix::<f64>::zeros(m, 1);
            // unknown X as x[(i,j)] -> index i * nj + j
            for ii in 0..ni {
                for jj in 0..nj {
                    let row = ii * nj + jj;
                    vec[(row, 0)] = r[(ii, jj)];
                    for kk in 0..ni {
                        sys[(row, kk * nj + jj)] += tii[(ii, kk)];
                    }
                    for ll in 0..nj {
                        sys[(row, ii * nj + ll)] += tjj[(jj, ll)];
                    }
                }
            }
            let sol = sys
                .lu()
                .solve(&vec)
                .ok_or_else(|| Error::Lyapunov("singular block system (eigenvalue pairing)".into()))?;
            for ii in 0..ni {
                for jj in 0..nj {
                    w[(i0 + ii, j0 + jj)] = sol[(ii * nj + jj, 0)];
                }
            }
        }
    }
    Ok(w)
}

/// Residual ||A Q + Q A^H + C||_F.
pub fn lyapunov_residual(
    a: &Array2<Complex64>,
    q: &Array2<Complex64>,
    c: &Array2<Complex64>,
) -> f64 {
    let r = &a.dot(q) + &q.dot(&a.mapv(|v| v.conj()).reversed_axes().as_standard_layout().to_owned()) + c;
    r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian PSD matrix via the symmetric real
/// embedding; returns scaled eigenvectors L (columns) with Q = L L^H,
/// negative rounding eigenvalues clamped to zero.
pub fn hermitian_sqrt_factor(q: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = q.nrows();
    let emb = embed_real(q);
    let sym = nalgebra::SymmetricEigen::new(emb);
    // The embedding doubles each eigenvalue's multiplicity; each complex
    // eigenvector v appears as [Re v; Im v] and [-Im v; Re v]. Keep one
    // representative per pair by re-orthogonalizing: build the complex
    // factor from all 2n columns scaled by sqrt(lambda/2); then
    // Q = sum_a (lambda_a/2) (x_a + i y_a)(x_a + i y_a)^H holds because
    // paired columns contribute equal halves.
    let mut l = Array2::<Complex64>::zeros((n, 2 * n));
    for a in 0..2 * n {
        let lam = sym.eigenvalues[a].max(0.0);
        let s = (lam / 2.0).sqrt();
        for i in 0..n {
            let z = Complex64::new(sym.eigenvectors[(i, a)], sym.eigenvectors[(i + n, a)]);
            l[[i, a]] = z * s;
        }
    }
    Ok(l)
}
