//! Scratch probe for calibrating acceptance-test configurations.

use num_complex::Complex64;
use quapi_core::bath::{BathSpec, CouplingAxis, SpectralDensity};
use quapi_core::engine::{run_single_general, run_two_baths, EngineConfig, Mask};
use quapi_core::harness::fit_damped_oscillation;
use quapi_core::tls::{DensityMatrix, TwoLevelSystem};
use std::time::Instant;

fn bath(axis: CouplingAxis, gamma: f64) -> BathSpec {
    BathSpec::new(SpectralDensity::ohmic(gamma, 10.0).unwrap(), 5.0, axis).unwrap()
}

fn state() -> DensityMatrix {
    let mut m = DensityMatrix::zero();
    m.elements[0][0] = Complex64::new(1.0, 0.0);
    m
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    let t = TwoLevelSystem::new(1.0).unwrap();

    if which == "filter" {
        // single-Z filter sweep behavior at beta = 5
        let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
        let mut cfg = EngineConfig::new(0.3, 117).unwrap();
        cfg.t_mem_z = Some(1.8);
        cfg.mask_z = Mask::uniform(6).unwrap();
        cfg.initial_state = state();
        cfg.collect_final_amplitudes = true;
        let t0 = Instant::now();
        let reference = run_single_general(&cfg, &bz, &t).unwrap();
        println!("reference run: {:?}", t0.elapsed());
        let amps = &reference.stats.final_amplitudes;
        println!(
            "final ensemble: {} paths, min={:.3e} q01={:.3e} q25={:.3e} median={:.3e} max={:.3e}",
            amps.len(),
            amps[0],
            amps[amps.len() / 100],
            amps[amps.len() / 4],
            amps[amps.len() / 2],
            amps[amps.len() - 1]
        );
        for theta in [1e-7, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3] {
            let mut c = cfg.clone();
            c.theta = theta;
            let run = run_single_general(&c, &bz, &t).unwrap();
            println!(
                "theta={theta:.1e}  ratio={:.4}  final_norm={:.6}",
                run.stats.paths_ratio(&reference.stats),
                run.stats.final_norm
            );
        }
    }

    if which == "two" {
        // two-bath amplitude floor + 1% removal sensitivity
        let bx = bath(CouplingAxis::X, 1.0 / 16.0);
        let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
        let n = 40;
        let mut cfg = EngineConfig::new(0.3, n).unwrap();
        cfg.t_mem_x = Some(1.2);
        cfg.t_mem_z = Some(1.2);
        cfg.mask_x = Mask::uniform(4).unwrap();
        cfg.mask_z = Mask::uniform(4).unwrap();
        cfg.initial_state = state();
        cfg.collect_final_amplitudes = true;
        let t0 = Instant::now();
        let two = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
        println!("two-bath run ({n} steps): {:?}", t0.elapsed());
        let min_amp_overall = two
            .stats
            .min_amplitude
            .iter()
            .fold(f64::INFINITY, |a, b| a.min(*b));
        let amps = &two.stats.final_amplitudes;
        println!(
            "min amp across steps = {:.3e}; final: n={} min={:.3e} q1={:.3e} max={:.3e}",
            min_amp_overall,
            amps.len(),
            amps[0],
            amps[amps.len() / 100],
            amps[amps.len() - 1]
        );
        let sz0 = two.trajectory.last().unwrap().sigma_z_expectation();
        let theta2 = amps[amps.len() / 100];
        let mut c = cfg.clone();
        c.theta = theta2;
        let cut = run_two_baths(&c, &bx, &bz, &t).unwrap();
        let dsz2 = (cut.trajectory.last().unwrap().sigma_z_expectation() - sz0).abs();
        println!("two-bath: theta(1%)={theta2:.3e} -> |d sigma_z| = {dsz2:.3e}");

        // same procedure on the single general bath
        let mut sc = EngineConfig::new(0.3, n).unwrap();
        sc.t_mem_z = Some(1.2);
        sc.mask_z = Mask::uniform(4).unwrap();
        sc.initial_state = state();
        sc.collect_final_amplitudes = true;
        let single = run_single_general(&sc, &bz, &t).unwrap();
        let samps = &single.stats.final_amplitudes;
        let theta1 = samps[samps.len() / 100];
        let s0 = single.trajectory.last().unwrap().sigma_z_expectation();
        let mut scc = sc.clone();
        scc.theta = theta1;
        let scut = run_single_general(&scc, &bz, &t).unwrap();
        let dsz1 = (scut.trajectory.last().unwrap().sigma_z_expectation() - s0).abs();
        println!("single:   theta(1%)={theta1:.3e} -> |d sigma_z| = {dsz1:.3e}");
        println!("ratio = {:.2}", dsz2 / dsz1);
    }

    if which == "mem" {
        // memory-sweep trend probe
        let bx = bath(CouplingAxis::X, 1.0 / 16.0);
        let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
        let n = 60;
        for (label, tmx, tmz) in [
            ("base  ", 1.2, 1.2),
            ("cut x ", 0.6, 1.2),
            ("cut z ", 1.2, 0.6),
            ("tiny x", 0.3, 1.2),
            ("tiny z", 1.2, 0.3),
        ] {
            let mut cfg = EngineConfig::new(0.3, n).unwrap();
            cfg.t_mem_x = Some(tmx);
            cfg.t_mem_z = Some(tmz);
            cfg.mask_x = Mask::uniform(((tmx / 0.3) as usize).max(1)).unwrap();
            cfg.mask_z = Mask::uniform(((tmz / 0.3) as usize).max(1)).unwrap();
            cfg.initial_state = state();
            let t0 = Instant::now();
            let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
            let series: Vec<f64> = run
                .trajectory
                .iter()
                .map(|r| r.sigma_z_expectation())
                .collect();
            let (omega, kappa) = fit_damped_oscillation(&run.times, &series);
            println!(
                "{label} tmx={tmx} tmz={tmz}: omega={omega:.4} kappa={kappa:.4}  ({:?})",
                t0.elapsed()
            );
        }
    }

    if which == "timing" {
        // one mask-search candidate at budget-8 scale
        let bx = bath(CouplingAxis::X, 1.0 / 16.0);
        let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
        for n in [12usize, 18, 24] {
            let mut cfg = EngineConfig::new(0.3, n).unwrap();
            cfg.t_mem_x = Some(1.8);
            cfg.t_mem_z = Some(1.8);
            cfg.mask_x = Mask::uniform(5).unwrap();
            cfg.mask_z = Mask::uniform(3).unwrap();
            cfg.initial_state = state();
            let t0 = Instant::now();
            let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
            println!(
                "n={n}: {:?}  plateau={}",
                t0.elapsed(),
                run.stats.n_paths.iter().max().unwrap()
            );
        }
    }
}
