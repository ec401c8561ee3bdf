use cavg::config::SimConfig;
use cavg::harness::*;

#[test]
fn probe_desk_sweep() {
    let t0 = std::time::Instant::now();
    let dir = std::path::PathBuf::from("/tmp/probe_sweep");
    let _ = std::fs::remove_dir_all(&dir);
    let base = SimConfig::desk_scale(1e-2);
    let plan = ExperimentPlan {
        nus: vec![1e-2, 3e-3, 1e-3],
        paths: 8,
        out_dir: dir,
        variants: vec![Variant::FastSlow, Variant::PseudoLin, Variant::Auxiliary, Variant::Averaged],
        base,
    };
    let (summary, recs) = run_sweep(&plan).unwrap();
    for s in &summary.per_nu {
        println!(
            "nu={:.0e}: mean={:.5e} ci=[{:.3e},{:.3e}] fracs=({:.2},{:.2}) ok={}/{}",
            s.nu, s.mean_sup_h_mtheta, s.ci_lo, s.ci_hi, s.frac_xtilde_smaller, s.frac_xhat_smaller,
            s.successful, s.paths
        );
    }
    let rt: Vec<u128> = recs.iter().map(|r| r.runtime_ms).collect();
    println!("slope={:?} total={:?} path_runtimes={rt:?}", summary.slope, t0.elapsed());
}
