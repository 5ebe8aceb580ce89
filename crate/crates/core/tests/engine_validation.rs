//! Engine validation against brute-force path sums.
//!
//! The oracle here enumerates every path explicitly and evaluates the
//! influence exponent as the literal double sum over coefficient-table
//! entries, with no incremental accumulation, no merging and no hash keys.
//! Small grids only; the engine must reproduce it to near machine
//! precision when run without approximations.

use num_complex::Complex64;
use quapi_core::bath::{BathSpec, CouplingAxis, EtaTable, SpectralDensity};
use quapi_core::engine::{
    influence_weight, run_pure_dephasing, run_single_general, run_two_baths, EngineConfig,
    History, Mask,
};
use quapi_core::tls::{
    segment_propagator_general, segment_propagator_xz, DensityMatrix, Direction, Spin,
    TwoLevelSystem,
};

const DT: f64 = 0.3;

fn tls() -> TwoLevelSystem {
    TwoLevelSystem::new(1.0).unwrap()
}

fn bath(axis: CouplingAxis, gamma: f64) -> BathSpec {
    BathSpec::new(
        SpectralDensity::ohmic(gamma, 10.0).unwrap(),
        5.0,
        axis,
    )
    .unwrap()
}

fn full_rank_state() -> DensityMatrix {
    let mut m = DensityMatrix::zero();
    m.elements[0][0] = Complex64::new(0.6, 0.0);
    m.elements[1][1] = Complex64::new(0.4, 0.0);
    m.elements[0][1] = Complex64::new(0.15, 0.1);
    m.elements[1][0] = Complex64::new(0.15, -0.1);
    m
}

fn spins(code: u8) -> (Spin, Spin) {
    (
        Spin::from_bit((code as u64) >> 1),
        Spin::from_bit(code as u64),
    )
}

/// Influence functional over an explicit pair path (index 0 = earliest),
/// evaluated as the literal double sum over table entries.
fn influence_direct(table: &EtaTable, path: &[u8]) -> Complex64 {
    let rows = match table.axis {
        CouplingAxis::Z => path.len(),
        CouplingAxis::X => path.len(), // x tables carry one row per point
    };
    let mut exponent = Complex64::new(0.0, 0.0);
    for j in 0..rows {
        let (sp, sm) = spins(path[j]);
        let pref = sp.value() - sm.value();
        if pref == 0.0 {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for jp in 0..=j {
            let eta = table.value(j, jp).unwrap();
            let (tp, tm) = spins(path[jp]);
            acc += eta * tp.value() - eta.conj() * tm.value();
        }
        exponent += pref * acc;
    }
    (-exponent).exp()
}

/// Brute-force single-general-bath trajectory: a fresh path sum per output
/// time, with the boundary coefficients of that output time.
fn brute_force_single_z(
    bath: &BathSpec,
    tls: &TwoLevelSystem,
    rho0: &DensityMatrix,
    n_steps: usize,
    dt: f64,
) -> Vec<DensityMatrix> {
    let mut out = vec![*rho0];
    for n in 1..=n_steps {
        let table = EtaTable::build(bath, n, dt).unwrap();
        let mut rho = DensityMatrix::zero();
        let n_paths = 4usize.pow(n as u32 + 1);
        for idx in 0..n_paths {
            let path: Vec<u8> = (0..=n).map(|j| ((idx >> (2 * j)) & 3) as u8).collect();
            let (r0, c0) = spins(path[0]);
            let mut amp = rho0.get(r0, c0);
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            for j in 1..=n {
                let (tp, tm) = spins(path[j]);
                let (fp, fm) = spins(path[j - 1]);
                amp *= segment_propagator_general(tls, dt, tp, fp, Direction::Forward)
                    * segment_propagator_general(tls, dt, fm, tm, Direction::Backward);
            }
            amp *= influence_direct(&table, &path);
            let (rn, cn) = spins(path[n]);
            rho.elements[rn.idx()][cn.idx()] += amp;
        }
        out.push(rho);
    }
    out
}

/// Brute-force two-bath trajectory; x coordinates sit mid-segment, so a
/// path to time n has n+1 z pairs and n x pairs.
fn brute_force_two_baths(
    bath_x: &BathSpec,
    bath_z: &BathSpec,
    tls: &TwoLevelSystem,
    rho0: &DensityMatrix,
    n_steps: usize,
    dt: f64,
) -> Vec<DensityMatrix> {
    let mut out = vec![*rho0];
    for n in 1..=n_steps {
        let ztable = EtaTable::build(bath_z, n, dt).unwrap();
        let xtable = EtaTable::build(bath_x, n, dt).unwrap();
        let mut rho = DensityMatrix::zero();
        let n_paths = 4usize.pow(2 * n as u32 + 1);
        for idx in 0..n_paths {
            let zpath: Vec<u8> = (0..=n)
                .map(|j| ((idx >> (4 * j)) & 3) as u8)
                .collect();
            let xpath: Vec<u8> = (0..n)
                .map(|j| ((idx >> (4 * j + 2)) & 3) as u8)
                .collect();
            let (r0, c0) = spins(zpath[0]);
            let mut amp = rho0.get(r0, c0);
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            for j in 1..=n {
                amp *= segment_propagator_xz(
                    tls,
                    dt,
                    spins(zpath[j]),
                    spins(xpath[j - 1]),
                    spins(zpath[j - 1]),
                );
            }
            amp *= influence_direct(&ztable, &zpath);
            amp *= influence_direct(&xtable, &xpath);
            let (rn, cn) = spins(zpath[n]);
            rho.elements[rn.idx()][cn.idx()] += amp;
        }
        out.push(rho);
    }
    out
}

fn max_traj_diff(a: &[DensityMatrix], b: &[DensityMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

fn full_config(n: usize) -> EngineConfig {
    let mut cfg = EngineConfig::new(DT, n).unwrap();
    cfg.mask_z = Mask::uniform(n).unwrap();
    cfg.mask_x = Mask::uniform(n).unwrap();
    cfg.initial_state = full_rank_state();
    cfg
}

#[test]
fn single_general_matches_brute_force() {
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let cfg = full_config(3);
    let run = run_single_general(&cfg, &b, &t).unwrap();
    let oracle = brute_force_single_z(&b, &t, &cfg.initial_state, 3, DT);
    let diff = max_traj_diff(&run.trajectory, &oracle);
    assert!(diff < 1e-13, "engine vs brute force: {diff}");
}

#[test]
fn two_baths_match_brute_force() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let cfg = full_config(3);
    let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
    let oracle = brute_force_two_baths(&bx, &bz, &t, &cfg.initial_state, 3, DT);
    let diff = max_traj_diff(&run.trajectory, &oracle);
    assert!(diff < 1e-12, "engine vs brute force: {diff}");
}

#[test]
fn pure_dephasing_matches_brute_force_and_has_four_paths() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let t = tls();
    let n = 6;
    let mut cfg = full_config(n);
    cfg.mask_x = Mask::new(vec![0, 1]).unwrap();
    let run = run_pure_dephasing(&cfg, &bx, &t).unwrap();
    // oracle: constant paths only, exact 4-term sum in the x basis
    let table = EtaTable::build(&bx, n, DT).unwrap();
    let rho0x = cfg.initial_state.to_basis_x();
    for step in 0..=n {
        let mut rho = DensityMatrix::zero();
        for code in 0..4u8 {
            let (a, bb) = spins(code);
            let el = rho0x.get(a, bb);
            let path = vec![code; step + 1];
            let mut amp = el;
            for _ in 0..step {
                amp *= Complex64::new(0.0, -(t.energy(a) - t.energy(bb)) * DT).exp();
            }
            // rows 0..step-1 of the dephasing table
            if step > 0 {
                let sub = EtaTable::build(&bx, step, DT).unwrap();
                amp *= influence_direct(&sub, &path[..step].to_vec());
            }
            let _ = table;
            rho.elements[a.idx()][bb.idx()] += amp;
        }
        let rho_z = rho.to_basis_z_from_x();
        let diff = run.trajectory[step].max_abs_diff(&rho_z);
        assert!(diff < 1e-13, "step {step}: {diff}");
    }
    for (i, c) in run.stats.n_paths.iter().enumerate() {
        assert_eq!(*c, 4, "step {i}");
    }
}

#[test]
fn isolated_limit_is_exact_rabi() {
    let b = bath(CouplingAxis::Z, 0.0);
    let t = tls();
    let mut cfg = EngineConfig::new(DT, 100).unwrap();
    cfg.t_mem_z = Some(DT);
    cfg.mask_z = Mask::uniform(1).unwrap();
    let run = run_single_general(&cfg, &b, &t).unwrap();
    for (k, rho) in run.trajectory.iter().enumerate() {
        let expect = (k as f64 * DT).cos();
        assert!(
            (rho.sigma_z_expectation() - expect).abs() < 1e-12,
            "step {k}"
        );
    }
}

#[test]
fn mask_identity_reproduces_full_quapi() {
    // a full-window mask makes merging injective, so the trajectory must be
    // identical to the unmerged sum (here: vs the brute force)
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let n = 4;
    let mut cfg = full_config(n);
    cfg.t_mem_z = Some(n as f64 * DT);
    cfg.mask_z = Mask::uniform(n).unwrap();
    let run = run_single_general(&cfg, &b, &t).unwrap();
    let oracle = brute_force_single_z(&b, &t, &cfg.initial_state, n, DT);
    assert!(max_traj_diff(&run.trajectory, &oracle) < 1e-13);
}

#[test]
fn extended_memory_full_mask_equals_full_quapi() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let n = 4;
    let mut plain = full_config(n);
    plain.mask_z = Mask::uniform(n).unwrap();
    plain.mask_x = Mask::uniform(n).unwrap();
    let mut ext = plain.clone();
    ext.extended_memory = true;
    ext.t_mem_z = Some(n as f64 * DT);
    ext.t_mem_x = Some(n as f64 * DT);
    let a = run_two_baths(&plain, &bx, &bz, &t).unwrap();
    let b = run_two_baths(&ext, &bx, &bz, &t).unwrap();
    assert!(max_traj_diff(&a.trajectory, &b.trajectory) < 1e-12);
}

#[test]
fn trace_and_hermiticity_under_masks() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let mut cfg = EngineConfig::new(DT, 12).unwrap();
    cfg.initial_state = full_rank_state();
    cfg.t_mem_z = Some(4.0 * DT);
    cfg.t_mem_x = Some(3.0 * DT);
    cfg.mask_z = Mask::new(vec![0, 2]).unwrap();
    cfg.mask_x = Mask::new(vec![0, 1]).unwrap();
    let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
    for (k, rho) in run.trajectory.iter().enumerate() {
        assert!(
            (rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10,
            "trace at step {k}: {}",
            rho.trace()
        );
        assert!(
            rho.hermiticity_defect() < 1e-12,
            "hermiticity at step {k}: {}",
            rho.hermiticity_defect()
        );
    }
}

#[test]
fn degenerate_x_reduces_to_single_general() {
    let bx = bath(CouplingAxis::X, 0.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let n = 5;
    let mut two = full_config(n);
    two.mask_x = Mask::uniform(1).unwrap();
    two.mask_z = Mask::uniform(n).unwrap();
    let pair = run_two_baths(&two, &bx, &bz, &t).unwrap();
    let mut single = full_config(n);
    single.mask_z = Mask::uniform(n).unwrap();
    let alone = run_single_general(&single, &bz, &t).unwrap();
    let diff = max_traj_diff(&pair.trajectory, &alone.trajectory);
    assert!(diff < 1e-12, "reduction defect {diff}");
}

#[test]
fn degenerate_z_reduces_to_pure_dephasing() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 0.0);
    let t = tls();
    let n = 12;
    let mut two = EngineConfig::new(DT, n).unwrap();
    two.initial_state = full_rank_state();
    two.mask_z = Mask::uniform(1).unwrap();
    two.mask_x = Mask::new(vec![0, 1]).unwrap();
    let pair = run_two_baths(&two, &bx, &bz, &t).unwrap();
    let mut lone = two.clone();
    lone.mask_x = Mask::new(vec![0, 1]).unwrap();
    let alone = run_pure_dephasing(&lone, &bx, &t).unwrap();
    let diff = max_traj_diff(&pair.trajectory, &alone.trajectory);
    assert!(diff < 1e-10, "reduction defect {diff}");
}

#[test]
fn path_count_formulas() {
    // full sum: 4 initial pairs, 4 children per step -> 2^{2N+2} spawned at
    // the terminal step of an untruncated single-bath run
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    for n in [3usize, 4] {
        let cfg = full_config(n);
        let run = run_single_general(&cfg, &b, &t).unwrap();
        assert_eq!(
            run.stats.spawned[n],
            1u64 << (2 * n + 2),
            "spawned at terminal step, N={n}"
        );
    }
    // two-bath plateau: 4^{|mask_x| + |mask_z|}
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let mut cfg = EngineConfig::new(DT, 8).unwrap();
    cfg.initial_state = full_rank_state();
    cfg.t_mem_z = Some(4.0 * DT);
    cfg.t_mem_x = Some(4.0 * DT);
    cfg.mask_z = Mask::uniform(2).unwrap();
    cfg.mask_x = Mask::uniform(3).unwrap();
    let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
    let plateau = 4u64.pow(5);
    assert_eq!(run.stats.n_paths[6], plateau);
    assert_eq!(run.stats.n_paths[7], plateau);
    assert_eq!(run.stats.n_paths[8], plateau);
}

#[test]
fn filter_thresholds() {
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let n = 6;
    let base = {
        let mut c = full_config(n);
        c.t_mem_z = Some(3.0 * DT);
        c.mask_z = Mask::uniform(3).unwrap();
        c
    };
    let reference = run_single_general(&base, &b, &t).unwrap();

    // theta = 0 is a no-op
    let mut zero = base.clone();
    zero.theta = 0.0;
    let z = run_single_general(&zero, &b, &t).unwrap();
    assert!(max_traj_diff(&z.trajectory, &reference.trajectory) == 0.0);

    // theta beyond every amplitude empties the ensemble and the trajectory
    // collapses to zero afterwards
    let mut huge = base.clone();
    huge.theta = 1e3;
    let h = run_single_general(&huge, &b, &t).unwrap();
    assert_eq!(*h.stats.n_paths.last().unwrap(), 0);
    assert!(h.trajectory.last().unwrap().norm() < 1e-30);

    // per-step path counts are nonincreasing in theta
    let thetas = [1e-6, 1e-4, 1e-2, 1.0];
    let mut last_counts = reference.stats.n_paths.clone();
    for th in thetas {
        let mut c = base.clone();
        c.theta = th;
        let r = run_single_general(&c, &b, &t).unwrap();
        for (a, bb) in r.stats.n_paths.iter().zip(&last_counts) {
            assert!(a <= bb, "theta {th}");
        }
        last_counts = r.stats.n_paths.clone();
    }
    // dropping is a monotone predicate on a fixed ensemble: at the first
    // filtered step the drop count cannot shrink as theta grows
    let mut last_first_drop = 0u64;
    for th in thetas {
        let mut c = base.clone();
        c.theta = th;
        let r = run_single_general(&c, &b, &t).unwrap();
        let first = r
            .stats
            .dropped_by_filter
            .iter()
            .find(|d| **d > 0)
            .copied()
            .unwrap_or(0);
        // compare at step 1, where every run still sees the same ensemble
        let step1 = r.stats.dropped_by_filter[1];
        let _ = first;
        assert!(step1 >= last_first_drop, "theta {th}");
        last_first_drop = step1;
    }
}

#[test]
fn incremental_weights_match_whole_path_evaluation() {
    // product of per-step rows times the terminal correction must equal the
    // direct double-sum evaluation over the whole path
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let n = 5;
    let cfg = full_config(n);
    let run = run_single_general(&cfg, &b, &t).unwrap();
    let oracle = brute_force_single_z(&b, &t, &cfg.initial_state, n, DT);
    assert!(max_traj_diff(&run.trajectory, &oracle) < 1e-13);

    // and the public whole-path evaluator agrees with the literal sum
    let table = EtaTable::build(&b, n, DT).unwrap();
    let path = [1u8, 0, 3, 2, 1, 2];
    let mut hist = History::empty();
    for p in path {
        hist = hist.pushed(p);
    }
    let direct = influence_direct(&table, &path.to_vec());
    let weighted = influence_weight(&hist, &table, n, false);
    assert!((direct - weighted).norm() < 1e-13);
}

#[test]
fn diagonal_paths_carry_unit_weight() {
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let table = EtaTable::build(&b, 4, DT).unwrap();
    let mut hist = History::empty();
    for p in [0u8, 3, 0, 0, 3] {
        hist = hist.pushed(p);
    }
    let w = influence_weight(&hist, &table, 4, false);
    assert_eq!(w, Complex64::new(1.0, 0.0));
}

#[test]
fn worker_count_does_not_change_results() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let mut cfg = EngineConfig::new(DT, 8).unwrap();
    cfg.initial_state = full_rank_state();
    cfg.t_mem_z = Some(3.0 * DT);
    cfg.t_mem_x = Some(3.0 * DT);
    cfg.mask_z = Mask::new(vec![0, 2]).unwrap();
    cfg.mask_x = Mask::new(vec![0, 1]).unwrap();
    let mut results = Vec::new();
    for workers in [1usize, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let out = pool.install(|| run_two_baths(&cfg, &bx, &bz, &t).unwrap());
        results.push(out);
    }
    for r in &results[1..] {
        let d = max_traj_diff(&r.trajectory, &results[0].trajectory);
        assert_eq!(d, 0.0, "trajectories must be bit-identical across pools");
        assert_eq!(r.stats.n_paths, results[0].stats.n_paths);
    }
}

#[test]
fn spawn_arity_matches_branch_count() {
    let bx = bath(CouplingAxis::X, 1.0 / 16.0);
    let bz = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let mut cfg = EngineConfig::new(DT, 5).unwrap();
    cfg.initial_state = full_rank_state();
    cfg.t_mem_z = Some(2.0 * DT);
    cfg.t_mem_x = Some(2.0 * DT);
    cfg.mask_z = Mask::uniform(2).unwrap();
    cfg.mask_x = Mask::uniform(2).unwrap();
    let run = run_two_baths(&cfg, &bx, &bz, &t).unwrap();
    for step in 1..=5usize {
        assert_eq!(run.stats.spawned[step], 16 * run.stats.n_paths[step - 1]);
    }
}

#[test]
fn resource_cap_reports_offending_step() {
    let b = bath(CouplingAxis::Z, 1.0 / 16.0);
    let t = tls();
    let mut cfg = full_config(8);
    cfg.max_records = 1000;
    let err = run_single_general(&cfg, &b, &t).unwrap_err();
    match err {
        quapi_core::engine::EngineError::Resource { step, need, cap } => {
            assert!(step > 1 && need > cap);
        }
        other => panic!("expected resource error, got {other}"),
    }
}
