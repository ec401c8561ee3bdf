//! Frozen-process checks: Lyapunov solve against the time-integral
//! quadrature oracle, semigroup energy decay, Gaussianity of the
//! stationary samples, and the bbar_0 estimators.

mod common;

use cavg::config::SimConfig;
use cavg::energy::energy_neq;
use cavg::frozen::*;
use cavg::noise::{NoiseSpec, ProcessTag, RngStream};
use cavg::shear::ShearState;
use cavg::spectral::SpectralField;
use common::{lyapunov_quadrature_oracle, rel_err};
use ndarray::Array2;
use num_complex::Complex64;

fn cfg_n8(nu: f64) -> SimConfig {
    let mut c = SimConfig::desk_scale(nu);
    c.nx = 2;
    c.ny = 8;
    c
}

fn single_psi_spec(c: &SimConfig) -> NoiseSpec {
    let mut s = NoiseSpec::zero(c.trunc(), c.energy.m, c.nu);
    s.set_psi(1, 1, 0.5);
    s
}

#[test]
fn lyapunov_matches_quadrature_oracle() {
    // U = y, X = 0, ny = 8, k = 1, nu = 1e-2, single psi entry.
    let c = cfg_n8(1e-2);
    let spec = single_psi_spec(&c);
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let g = lyapunov_covariance(&op).unwrap();
    let mut bbh = Array2::<Complex64>::zeros((c.ny, c.ny));
    bbh[[0, 0]] = Complex64::new(0.25, 0.0);
    let t_star = 40.0 / op.decay_rate();
    let q_quad = lyapunov_quadrature_oracle(&op.ops[0], &bbh, t_star, 4000);
    let err = rel_err(&g.q[0], &q_quad);
    assert!(err <= 1e-6, "Lyapunov vs quadrature relative error {err}");
}

#[test]
fn semigroup_energy_decay_positive_rate() {
    // Noise-off evolution of the frozen operator: E_neq non-increasing
    // after a transient, with a positive fitted rate (the measured
    // delta_*).
    let c = cfg_n8(1e-2);
    let spec = single_psi_spec(&c);
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let sim = FrozenSimulator::new(&op, 0.02);
    // noise-free marching: zero out the noise by a spec trick - use the
    // simulator's propagator only via simulate_frozen with zero spec
    let spec0 = NoiseSpec::zero(c.trunc(), c.energy.m, c.nu);
    let op0 = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec0, &c)
        .unwrap();
    let sim0 = FrozenSimulator::new(&op0, 0.02);
    let mut z = SpectralField::zeros(c.trunc());
    for j in 1..=4 {
        let v = Complex64::new(0.5 / j as f64, 0.1);
        z.set(1, j, v);
        z.set(-1, j, v.conj());
    }
    let mut rng = RngStream::new(1, 0, ProcessTag::FrozenNoise);
    let mut es = Vec::new();
    let steps = 400;
    for _ in 0..steps {
        sim0.step(&mut z, &mut rng);
        es.push(energy_neq(&z, &c.energy, c.nu).unwrap());
    }
    // monotone after transient
    let start = steps / 5;
    for w in es[start..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "not monotone: {} -> {}", w[0], w[1]);
    }
    // fitted exponential rate positive
    let t1 = start as f64 * 0.02;
    let t2 = (steps - 1) as f64 * 0.02;
    let rate = (es[start].ln() - es[steps - 1].ln()) / (t2 - t1);
    assert!(rate > 0.0, "fitted decay rate {rate}");
    let _ = sim;
}

#[test]
fn stationary_samples_gaussian_kurtosis() {
    let c = cfg_n8(1e-2);
    let spec = single_psi_spec(&c);
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let g = lyapunov_covariance(&op).unwrap();
    let mut rng = RngStream::new(21, 0, ProcessTag::StationarySampling);
    let n = 10_000;
    let (mut m2, mut m4) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let y = g.sample(&mut rng);
        let v = y.get(1, 1).re;
        m2 += v * v;
        m4 += v * v * v * v;
    }
    m2 /= n as f64;
    m4 /= n as f64;
    let kurt = m4 / (m2 * m2);
    assert!((2.7..=3.3).contains(&kurt), "kurtosis {kurt}");
}

#[test]
fn stationary_energy_moment_bounded_by_trace_norm() {
    let c = cfg_n8(1e-2);
    let spec = NoiseSpec::from_config(&c.noise, c.trunc(), c.energy.m, c.nu).unwrap();
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let g = lyapunov_covariance(&op).unwrap();
    let mut rng = RngStream::new(31, 0, ProcessTag::StationarySampling);
    let mean = mean_energy_neq(&g, &c, 10_000, &mut rng).unwrap();
    let (psi2, _) = spec.trace_norms();
    assert!(mean <= 1.1 * psi2, "E[E_neq] = {mean} vs ||Psi||^2 = {psi2}");
}

#[test]
fn bbar0_two_estimators_agree() {
    let mut c = cfg_n8(1e-2);
    c.nx = 3;
    let mut spec = NoiseSpec::zero(c.trunc(), c.energy.m, c.nu);
    spec.set_psi(1, 1, 0.4);
    spec.set_psi(1, 2, 0.3);
    spec.set_psi(2, 1, 0.2);
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let g = lyapunov_covariance(&op).unwrap();
    let exact = bbar0_mean_exact(&g);
    let mut rng = RngStream::new(41, 0, ProcessTag::StationarySampling);
    let mc = estimate_bbar0_sampling(&g, 0.05, 256, 8192, &mut rng).unwrap();
    let mut rng2 = RngStream::new(41, 1, ProcessTag::FrozenNoise);
    let ta = estimate_bbar0_time_average(&op, 3000, 0.05 / op.decay_rate(), &mut rng2).unwrap();
    let d = mc.b0.sub(&ta.b0).norm_l2();
    let budget = 2.0 * (mc.stderr_norm() + ta.stderr_norm());
    assert!(d <= budget, "estimators differ by {d} vs budget {budget}");
    // both near the exact contraction
    assert!(mc.b0.sub(&exact.b0).norm_l2() <= 3.0 * mc.stderr_norm().max(1e-12));
    assert!(ta.b0.sub(&exact.b0).norm_l2() <= 3.0 * ta.stderr_norm().max(1e-12));
}

#[test]
fn bbar0_bounded_and_stable_under_doubling() {
    // nu^{-1/6} ||Bbar_0||_{H_0} finite and stable when the sample
    // budget doubles.
    let c = cfg_n8(1e-2);
    let spec = NoiseSpec::from_config(&c.noise, c.trunc(), c.energy.m, c.nu).unwrap();
    let op = assemble_frozen(&ShearState::couette(c.ny), &SpectralField::zeros(c.trunc()), &spec, &c)
        .unwrap();
    let g = lyapunov_covariance(&op).unwrap();
    let run = |n: usize, seed: u64| {
        let mut rng = RngStream::new(seed, 0, ProcessTag::StationarySampling);
        let est = estimate_bbar0_sampling(&g, 1e-9, n, n, &mut rng).unwrap();
        let h0 = cavg::energy::h0_norm(&est.b0_int, &c.energy, c.nu).unwrap();
        c.nu.powf(-1.0 / 6.0) * h0
    };
    let a = run(1024, 7);
    let b = run(2048, 7);
    assert!(a.is_finite() && b.is_finite());
    assert!(
        (a - b).abs() <= 0.5 * a.max(b),
        "doubling moved the estimate too much: {a} vs {b}"
    );
}

#[test]
fn bbar0_lipschitz_trend_in_x() {
    // ||Bbar_0(U, X) - Bbar_0(U, X')|| grows monotonically with
    // ||X - X'||_{H_0} over three perturbation sizes.
    let c = cfg_n8(1e-2);
    let spec = NoiseSpec::from_config(&c.noise, c.trunc(), c.energy.m, c.nu).unwrap();
    let shear = ShearState::couette(c.ny);
    let base_x = SpectralField::zeros(c.trunc());
    let op0 = assemble_frozen(&shear, &base_x, &spec, &c).unwrap();
    let b0 = bbar0_mean_exact(&lyapunov_covariance(&op0).unwrap());
    let mut diffs = Vec::new();
    for eps in [0.05, 0.1, 0.2] {
        let x = SpectralField::basis_real(c.trunc(), 0, 1).scaled(eps);
        let op = assemble_frozen(&shear, &x, &spec, &c).unwrap();
        let b = bbar0_mean_exact(&lyapunov_covariance(&op).unwrap());
        diffs.push(b.b0_int.sub(&b0.b0_int).norm_l2());
    }
    assert!(
        diffs[0] < diffs[1] && diffs[1] < diffs[2],
        "not monotone: {diffs:?}"
    );
}

#[test]
fn unstable_operator_rejected_with_k() {
    // Large X makes the b_m block dominate and can destabilize; verify
    // the error carries the offending k when it happens, and that the
    // admissibility check is what estimate paths consult.
    let c = cfg_n8(1e-2);
    let spec = single_psi_spec(&c);
    let shear = ShearState::couette(c.ny);
    let x = SpectralField::basis_real(c.trunc(), 0, 1).scaled(500.0);
    let op = assemble_frozen(&shear, &x, &spec, &c).unwrap();
    if op.worst_abscissa() >= 0.0 {
        match op.require_stable() {
            Err(cavg::error::Error::UnstableFrozen { k, abscissa }) => {
                assert!(k >= 1);
                assert!(abscissa >= 0.0);
            }
            other => panic!("expected UnstableFrozen, got {other:?}"),
        }
    } else {
        // if still stable at this size, the guard passes trivially
        op.require_stable().unwrap();
    }
}
