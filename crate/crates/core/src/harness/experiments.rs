//! The shipped experiments: plain dynamics, filter-threshold sweeps,
//! memory-cutoff sweeps with an extended-memory benchmark, and exhaustive
//! optimal-mask search with classification.

use super::analysis::{fit_damped_oscillation, rms_distance};
use super::output::{trajectory_csv, write_string};
use super::{ExperimentConfig, ExperimentKind, HarnessError, SweepAxis};
use crate::engine::{
    run_pure_dephasing, run_single_general, run_two_baths, EngineConfig, Mask, RunOutput,
};
use rayon::prelude::*;
use serde::Serialize;

/// Candidate cap for exhaustive searches.
const MAX_CANDIDATES: usize = 20_000;

fn dispatch(cfg: &ExperimentConfig, engine: &EngineConfig) -> Result<RunOutput, HarnessError> {
    match (&cfg.bath_x, &cfg.bath_z) {
        (Some(bx), Some(bz)) => Ok(run_two_baths(engine, bx, bz, &cfg.tls)?),
        (None, Some(bz)) => Ok(run_single_general(engine, bz, &cfg.tls)?),
        (Some(bx), None) => Ok(run_pure_dephasing(engine, bx, &cfg.tls)?),
        (None, None) => Err(HarnessError::Validation(vec![
            "baths: no bath configured".into(),
        ])),
    }
}

fn observable_series(cfg: &ExperimentConfig, run: &RunOutput) -> Vec<f64> {
    run.trajectory.iter().map(|r| cfg.observable.of(r)).collect()
}

#[derive(Debug)]
pub struct DynamicsResult {
    pub run: RunOutput,
    pub csv: String,
}

/// Run the configured dynamics and write `trajectory.csv`.
pub fn run_dynamics(cfg: &ExperimentConfig) -> Result<DynamicsResult, HarnessError> {
    let run = dispatch(cfg, &cfg.engine)?;
    let csv = trajectory_csv(&run);
    write_string(&cfg.directory, "trajectory.csv", &csv)?;
    Ok(DynamicsResult { run, csv })
}

#[derive(Debug, Serialize)]
pub struct FilterEntry {
    pub theta: f64,
    pub final_norm: f64,
    pub paths_ratio: f64,
    pub dropped_total: u64,
    pub min_amplitude_final: f64,
}

#[derive(Debug, Serialize)]
pub struct FilterSweepReport {
    pub entries: Vec<FilterEntry>,
}

/// One trajectory per threshold plus a summary against the unfiltered
/// reference.
pub fn filter_sweep(
    cfg: &ExperimentConfig,
    thetas: &[f64],
) -> Result<(FilterSweepReport, Vec<RunOutput>), HarnessError> {
    let mut reference_cfg = cfg.engine.clone();
    reference_cfg.theta = 0.0;
    let reference = dispatch(cfg, &reference_cfg)?;

    let mut entries = Vec::new();
    let mut runs = Vec::new();
    for (i, theta) in thetas.iter().enumerate() {
        let run = if *theta == 0.0 {
            reference.clone()
        } else {
            let mut e = cfg.engine.clone();
            e.theta = *theta;
            dispatch(cfg, &e)?
        };
        entries.push(FilterEntry {
            theta: *theta,
            final_norm: run.stats.final_norm,
            paths_ratio: run.stats.paths_ratio(&reference.stats),
            dropped_total: run.stats.dropped_by_filter.iter().sum(),
            min_amplitude_final: *run.stats.min_amplitude.last().unwrap(),
        });
        write_string(
            &cfg.directory,
            &format!("trajectory_theta_{i:03}.csv"),
            &trajectory_csv(&run),
        )?;
        runs.push(run);
    }
    let report = FilterSweepReport { entries };
    write_string(
        &cfg.directory,
        "filter_sweep.json",
        &serde_json::to_string_pretty(&report).expect("serialize"),
    )?;
    Ok((report, runs))
}

#[derive(Debug, Serialize)]
pub struct MemoryEntry {
    pub t_mem_x: Option<f64>,
    pub t_mem_z: Option<f64>,
    pub rms_to_benchmark: f64,
    pub fitted_frequency: f64,
    pub fitted_decay: f64,
}

#[derive(Debug, Serialize)]
pub struct MemorySweepReport {
    pub entries: Vec<MemoryEntry>,
    pub benchmark_frequency: f64,
    pub benchmark_decay: f64,
    /// Distance at which the largest cutoff is declared converged.
    pub convergence_tolerance: f64,
}

/// Sweep the memory cut-off of one or both baths. Every swept axis gets a
/// uniform mask covering its window; the benchmark keeps the configured
/// mask sizes and extends the memory to the whole propagation.
pub fn memory_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    t_mems: &[f64],
) -> Result<(MemorySweepReport, Vec<RunOutput>, RunOutput), HarnessError> {
    if matches!(axis, SweepAxis::X | SweepAxis::Both) && cfg.bath_x.is_none() {
        return Err(HarnessError::Validation(vec![
            "experiment.axis: x sweep needs baths.x".into(),
        ]));
    }
    if matches!(axis, SweepAxis::Z | SweepAxis::Both) && cfg.bath_z.is_none() {
        return Err(HarnessError::Validation(vec![
            "experiment.axis: z sweep needs baths.z".into(),
        ]));
    }

    // benchmark: extended memory at the configured mask sizes
    let mut bench_cfg = cfg.engine.clone();
    bench_cfg.extended_memory = true;
    bench_cfg.t_mem_x = None;
    bench_cfg.t_mem_z = None;
    bench_cfg.mask_x = Mask::uniform(cfg.engine.mask_x.len())?;
    bench_cfg.mask_z = Mask::uniform(cfg.engine.mask_z.len())?;
    let benchmark = dispatch(cfg, &bench_cfg)?;
    let bench_series = observable_series(cfg, &benchmark);
    let (bf, bd) = fit_damped_oscillation(&benchmark.times, &bench_series);
    write_string(&cfg.directory, "benchmark.csv", &trajectory_csv(&benchmark))?;

    let mut entries = Vec::new();
    let mut runs = Vec::new();
    for (i, tm) in t_mems.iter().enumerate() {
        let mut e = cfg.engine.clone();
        let window = ((tm / cfg.engine.dt).round() as usize).clamp(1, cfg.engine.n_steps);
        if matches!(axis, SweepAxis::X | SweepAxis::Both) {
            e.t_mem_x = Some(*tm);
            e.mask_x = Mask::uniform(window.min(32))?;
        }
        if matches!(axis, SweepAxis::Z | SweepAxis::Both) {
            e.t_mem_z = Some(*tm);
            e.mask_z = Mask::uniform(window.min(32))?;
        }
        let run = dispatch(cfg, &e)?;
        let series = observable_series(cfg, &run);
        let (f, d) = fit_damped_oscillation(&run.times, &series);
        entries.push(MemoryEntry {
            t_mem_x: e.t_mem_x.filter(|_| matches!(axis, SweepAxis::X | SweepAxis::Both)),
            t_mem_z: e.t_mem_z.filter(|_| matches!(axis, SweepAxis::Z | SweepAxis::Both)),
            rms_to_benchmark: rms_distance(&series, &bench_series),
            fitted_frequency: f,
            fitted_decay: d,
        });
        write_string(
            &cfg.directory,
            &format!("trajectory_mem_{i:03}.csv"),
            &trajectory_csv(&run),
        )?;
        runs.push(run);
    }
    let report = MemorySweepReport {
        entries,
        benchmark_frequency: bf,
        benchmark_decay: bd,
        convergence_tolerance: 1e-2,
    };
    write_string(
        &cfg.directory,
        "memory_sweep.json",
        &serde_json::to_string_pretty(&report).expect("serialize"),
    )?;
    Ok((report, runs, benchmark))
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskCandidate {
    pub mask_x: Vec<u32>,
    pub mask_z: Vec<u32>,
    pub rms: f64,
    pub n_paths: u64,
    pub label: String,
}

#[derive(Debug, Serialize)]
pub struct MaskSearchReport {
    pub candidates: Vec<MaskCandidate>,
    pub benchmark_n_paths: u64,
}

/// All masks of `size` lags over a window of `mem` steps, lag 0 forced.
fn enumerate_masks(mem: usize, size: usize) -> Vec<Vec<u32>> {
    assert!(size >= 1 && size <= mem);
    let mut out = Vec::new();
    let k = size - 1;
    let pool: Vec<u32> = (1..mem as u32).collect();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut mask = vec![0u32];
        mask.extend(idx.iter().map(|i| pool[*i]));
        out.push(mask);
        if k == 0 {
            break;
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + pool.len() - k {
                break;
            }
        }
        if idx[i] == i + pool.len() - k {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exhaustive search over masks of the requested sizes, ranked by RMS
/// distance of the observable to the full-mask benchmark.
pub fn mask_search(
    cfg: &ExperimentConfig,
    n_mask_x: Option<usize>,
    n_mask_z: Option<usize>,
) -> Result<MaskSearchReport, HarnessError> {
    let splits = vec![(n_mask_x, n_mask_z)];
    mask_search_splits(cfg, &splits)
}

/// Search over several (x, z) size splits at once, e.g. a fixed total
/// budget distributed between the two masks.
pub fn mask_search_splits(
    cfg: &ExperimentConfig,
    splits: &[(Option<usize>, Option<usize>)],
) -> Result<MaskSearchReport, HarnessError> {
    let two_bath = cfg.bath_x.is_some() && cfg.bath_z.is_some();
    let mem_x = window_steps(&cfg.engine, cfg.engine.t_mem_x);
    let mem_z = window_steps(&cfg.engine, cfg.engine.t_mem_z);

    // benchmark with full windows on the active axes
    let mut bench_cfg = cfg.engine.clone();
    if cfg.bath_x.is_some() {
        bench_cfg.mask_x = Mask::uniform(mem_x.min(32))?;
    }
    if cfg.bath_z.is_some() {
        bench_cfg.mask_z = Mask::uniform(mem_z.min(32))?;
    }
    let benchmark = dispatch(cfg, &bench_cfg)?;
    let bench_series = observable_series(cfg, &benchmark);
    let benchmark_n_paths = *benchmark.stats.n_paths.iter().max().unwrap();

    // candidate list
    let mut pairs: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    for (nx, nz) in splits {
        let xs: Vec<Vec<u32>> = match (cfg.bath_x.is_some(), nx) {
            (true, Some(n)) => {
                check_size(*n, mem_x, "n_mask_x")?;
                enumerate_masks(mem_x, *n)
            }
            (true, None) => vec![bench_cfg.mask_x.lags().to_vec()],
            (false, _) => vec![vec![0]],
        };
        let zs: Vec<Vec<u32>> = match (cfg.bath_z.is_some(), nz) {
            (true, Some(n)) => {
                check_size(*n, mem_z, "n_mask_z")?;
                enumerate_masks(mem_z, *n)
            }
            (true, None) => vec![bench_cfg.mask_z.lags().to_vec()],
            (false, _) => vec![vec![0]],
        };
        // cross-check the combinatorial count
        if let Some(n) = nx {
            debug_assert_eq!(xs.len(), binomial(mem_x - 1, n - 1));
        }
        if let Some(n) = nz {
            debug_assert_eq!(zs.len(), binomial(mem_z - 1, n - 1));
        }
        for x in &xs {
            for z in &zs {
                pairs.push((x.clone(), z.clone()));
            }
        }
    }
    if pairs.len() > MAX_CANDIDATES {
        return Err(HarnessError::Engine(
            crate::engine::EngineError::Resource {
                step: 0,
                need: pairs.len() as u64,
                cap: MAX_CANDIDATES as u64,
            },
        ));
    }

    let evaluated: Result<Vec<MaskCandidate>, HarnessError> = pairs
        .par_iter()
        .map(|(mx, mz)| {
            let mut e = cfg.engine.clone();
            if cfg.bath_x.is_some() {
                e.mask_x = Mask::new(mx.clone())?;
            }
            if two_bath || cfg.bath_z.is_some() {
                e.mask_z = Mask::new(mz.clone())?;
            }
            let run = dispatch(cfg, &e)?;
            let series = observable_series(cfg, &run);
            Ok(MaskCandidate {
                mask_x: mx.clone(),
                mask_z: mz.clone(),
                rms: rms_distance(&series, &bench_series),
                n_paths: *run.stats.n_paths.iter().max().unwrap(),
                label: String::new(),
            })
        })
        .collect();
    let mut candidates = evaluated?;

    // total deterministic ranking: distance, then lexicographic mask
    candidates.sort_by(|a, b| {
        a.rms
            .partial_cmp(&b.rms)
            .unwrap()
            .then_with(|| a.mask_x.cmp(&b.mask_x))
            .then_with(|| a.mask_z.cmp(&b.mask_z))
    });
    if let Some(min) = candidates.first().map(|c| c.rms) {
        let (good, bad) = classification_factors(&cfg.experiment);
        for c in candidates.iter_mut() {
            c.label = if c.rms <= min * (1.0 + 1e-12) {
                "optimal".into()
            } else if c.rms <= good * min {
                "good".into()
            } else if c.rms > bad * min {
                "unsatisfactory".into()
            } else {
                String::new()
            };
        }
    }

    let report = MaskSearchReport {
        candidates,
        benchmark_n_paths,
    };
    write_string(
        &cfg.directory,
        "mask_search.json",
        &serde_json::to_string_pretty(&report.candidates).expect("serialize"),
    )?;
    Ok(report)
}

fn classification_factors(kind: &ExperimentKind) -> (f64, f64) {
    match kind {
        ExperimentKind::MaskSearch {
            good_factor,
            bad_factor,
            ..
        } => (*good_factor, *bad_factor),
        _ => (2.0, 5.0),
    }
}

fn check_size(n: usize, mem: usize, what: &str) -> Result<(), HarnessError> {
    if n < 1 || n > mem {
        return Err(HarnessError::Validation(vec![format!(
            "experiment.{what}: size {n} outside 1..={mem}"
        )]));
    }
    Ok(())
}

fn window_steps(engine: &EngineConfig, t_mem: Option<f64>) -> usize {
    match t_mem {
        None => engine.n_steps,
        Some(tm) => ((tm / engine.dt).round() as usize).clamp(1, engine.n_steps),
    }
}

/// Run whatever experiment the config asks for, writing outputs into the
/// configured directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    match &cfg.experiment {
        ExperimentKind::Dynamics => {
            run_dynamics(cfg)?;
        }
        ExperimentKind::FilterSweep { thetas } => {
            filter_sweep(cfg, thetas)?;
        }
        ExperimentKind::MemorySweep { axis, t_mems } => {
            memory_sweep(cfg, *axis, t_mems)?;
        }
        ExperimentKind::MaskSearch {
            n_mask_x,
            n_mask_z,
            total_budget,
            ..
        } => {
            if let Some(budget) = total_budget {
                let mem_x = window_steps(&cfg.engine, cfg.engine.t_mem_x);
                let mem_z = window_steps(&cfg.engine, cfg.engine.t_mem_z);
                let mut splits = Vec::new();
                for nx in 1..*budget {
                    let nz = budget - nx;
                    if nx <= mem_x && nz <= mem_z {
                        splits.push((Some(nx), Some(nz)));
                    }
                }
                mask_search_splits(cfg, &splits)?;
            } else {
                mask_search(cfg, *n_mask_x, *n_mask_z)?;
            }
        }
    }
    Ok(())
}
