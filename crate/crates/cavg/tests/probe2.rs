use cavg::config::SimConfig;
use cavg::energy::energy_neq;
use cavg::shear::ShearState;
use cavg::spectral::{SpectralField, Truncation};
use cavg::stepper::{Scales, ShearProfiles, Stepper, System};
use num_complex::Complex64;

fn decay_rate(nu: f64, ny: usize, dt: f64) -> f64 {
    let t = Truncation::new(1, ny);
    let scales = Scales { diffusion: nu, transport: 1.0, b0: 0.0, bm: 0.0, bneq: 0.0, noise: 0.0 };
    let mut st = Stepper::with_scales(t, scales, false);
    let prof = ShearProfiles::of(&ShearState::couette(ny));
    let cfg = SimConfig::desk_scale(1e-2);
    let mut y = SpectralField::zeros(t);
    for j in 1..=4 {
        let v = Complex64::new((-(j as f64 - 1.0)).exp(), 0.0);
        y.set(1, j, v);
        y.set(-1, j, v.conj());
    }
    let mut x = SpectralField::zeros(t);
    let dw = SpectralField::zeros(t);
    let e0 = energy_neq(&y, &cfg.energy, nu).unwrap();
    let target = e0 * (-4.0f64).exp();
    let mut tval = 0.0;
    for i in 0..4_000_000 {
        let (a, b) = st.step_pair_with(System::PseudoLinearized, &x, &y, None, &prof, dt, &dw, i as f64 * dt).unwrap();
        x = a; y = b;
        tval = (i + 1) as f64 * dt;
        let e = energy_neq(&y, &cfg.energy, nu).unwrap();
        if e <= target { break; }
        if tval > 3000.0 { break; }
    }
    2.0 / tval
}

#[test]
fn probe_enhanced_dissipation() {
    let t0 = std::time::Instant::now();
    let mut pts = Vec::new();
    for (nu, ny, dt) in [(1e-3, 64, 0.02), (1e-4, 96, 0.02), (1e-5, 128, 0.02)] {
        let lam = decay_rate(nu, ny, dt);
        println!("nu={nu:.0e} ny={ny}: lambda = {lam:.5}, lambda/nu^(1/3) = {:.3}", lam / nu.powf(1.0/3.0));
        pts.push(((nu as f64).ln(), lam.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    println!("fitted p = {:.4} in {:?}", num / den, t0.elapsed());
}
