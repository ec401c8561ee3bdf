//! Nonlinearities against the independent dense-quadrature oracle.

mod common;

use cavg::nonlinear::*;
use cavg::spectral::{inner, SpectralField, Transformer, Truncation};
use common::{random_low_mode, DenseOracle};
use num_complex::Complex64;

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).norm_l2() / b.norm_l2().max(1e-300)
}

#[test]
fn b0_two_pair_field_matches_oracle() {
    // Y = (e_{1,1} + e_{-1,1}) + (e_{1,2} + e_{-1,2}): all content sits
    // at |k| = 1 with real coefficients, so the x-average annihilates
    // the product; both routes must agree on (exactly) zero.
    let t = Truncation::new(3, 8);
    let mut y = SpectralField::basis_real(t, 1, 1);
    y.add_scaled(&SpectralField::basis_real(t, 1, 2), 1.0);
    let oracle = DenseOracle::new(t);
    let (ob0, ob0int) = oracle.oracle_b0(&y);
    let mine = nonlin_b0_full(&y).unwrap();
    assert!(mine.b0.sub(&ob0).norm_l2() <= 1e-10);
    assert!(mine.b0_int.sub(&ob0int).norm_l2() <= 1e-10);
    assert!(mine.b0.norm_l2() <= 1e-12);

    // a phase-shifted variant has a genuinely nonzero zero-mode drift
    let mut yp = SpectralField::basis_real(t, 1, 1);
    yp.set(1, 2, Complex64::new(0.0, 1.0));
    yp.set(-1, 2, Complex64::new(0.0, -1.0));
    let (ob0, ob0int) = oracle.oracle_b0(&yp);
    let mine = nonlin_b0_full(&yp).unwrap();
    assert!(mine.b0.norm_l2() > 1e-3, "phase-shifted field should be nontrivial");
    assert!(rel(&mine.b0, &ob0) <= 1e-8, "b0 err {}", rel(&mine.b0, &ob0));
    assert!(
        rel(&mine.b0_int, &ob0int) <= 1e-8,
        "B0 err {}",
        rel(&mine.b0_int, &ob0int)
    );
}

#[test]
fn nonlinearities_match_oracle_on_random_fields() {
    let t = Truncation::new(3, 8);
    let tr = Transformer::new(t);
    let oracle = DenseOracle::new(t);
    for seed in 0..20 {
        let y = random_low_mode(t, seed, false);
        let x = random_low_mode(t, seed + 1000, true);
        let (ob0, ob0int) = oracle.oracle_b0(&y);
        let mine = nonlin_b0_full(&y).unwrap();
        assert!(rel(&mine.b0, &ob0) <= 1e-8, "seed {seed} b0: {}", rel(&mine.b0, &ob0));
        assert!(rel(&mine.b0_int, &ob0int) <= 1e-8, "seed {seed} B0");
        let obm = oracle.oracle_bm(&x, &y);
        let bm = nonlin_bm(&x, &y, &tr).unwrap();
        assert!(rel(&bm, &obm) <= 1e-8, "seed {seed} bm: {}", rel(&bm, &obm));
        let obneq = oracle.oracle_bneq(&y);
        let bneq = nonlin_bneq(&y, &tr).unwrap();
        assert!(rel(&bneq, &obneq) <= 1e-8, "seed {seed} bneq: {}", rel(&bneq, &obneq));
    }
}

#[test]
fn bm_adjointness_grid_vs_spectral() {
    // <b_m(X,Y), Z> computed from coefficients and from dense-grid
    // quadrature agree.
    let t = Truncation::new(3, 8);
    let tr = Transformer::new(t);
    let oracle = DenseOracle::new(t);
    for seed in 0..5 {
        let x = random_low_mode(t, seed + 50, true);
        let y = random_low_mode(t, seed, false);
        let z = random_low_mode(t, seed + 99, false);
        let bm = nonlin_bm(&x, &y, &tr).unwrap();
        let spectral_pairing = inner(&bm, &z).re;
        // grid route: quadrature of conj(bm) z over the dense grid
        let bmv = oracle.table(&bm);
        let zv = oracle.table(&z);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..oracle.xs.len() {
            for p in 0..oracle.ys.len() {
                acc += bmv[[i, p]].conj() * zv[[i, p]] * oracle.wy[p];
            }
        }
        let grid_pairing = (acc / oracle.xs.len() as f64).re;
        assert!(
            (spectral_pairing - grid_pairing).abs() <= 1e-10 * spectral_pairing.abs().max(1.0),
            "seed {seed}: {spectral_pairing} vs {grid_pairing}"
        );
    }
}

#[test]
fn energy_neutrality_random_fields() {
    let t = Truncation::new(4, 10);
    let tr = Transformer::new(t);
    for seed in 0..20 {
        let y = random_low_mode(t, seed, false);
        let adv = advection(&y, &tr).unwrap();
        let pairing = inner(&adv, &y).re;
        assert!(
            pairing.abs() <= 1e-10 * y.norm_l2().powi(2).max(1.0),
            "seed {seed}: pairing {pairing}"
        );
    }
}

#[test]
fn single_mode_cancellation_exact() {
    let t = Truncation::new(4, 10);
    for j in 1..=4 {
        let y = SpectralField::basis_real(t, 1, j);
        let out = nonlin_b0_full(&y).unwrap();
        assert!(out.b0.norm_l2() <= 1e-12, "j = {j}");
        assert!(out.b0_int.norm_l2() <= 1e-12, "j = {j}");
    }
}
