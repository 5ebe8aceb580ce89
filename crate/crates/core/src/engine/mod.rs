//! Hash-keyed path-ensemble propagation: full path sums, sharp memory
//! cut-off, amplitude filtering and mask-assisted coarse graining with
//! optional extended (full-history) memory, for one or two baths.
//!
//! # Path identity and merging
//!
//! After every spawn step, paths that agree on the coordinates selected by
//! the mask are merged: amplitudes are summed and the surviving history is
//! the member of largest magnitude (ties go to the smallest history
//! encoding). Merging is a keyed reduction performed by sorting the spawned
//! children on `(key, history)` and scanning groups in order, so the result
//! is independent of the worker count down to the last bit.
//!
//! # Conjugate closure
//!
//! For a hermitian initial state the exact path sum is closed under
//! swapping the forward and backward branches and conjugating the
//! amplitude. Mask merging with a "largest member" representative breaks
//! that symmetry, so the ensemble here stores only canonical keys (each
//! record stands for itself and its mirror) and self-paired parents spawn
//! with hermitised branch factors. Readout then yields an exactly hermitian
//! density matrix under any mask, memory cut-off or filter threshold.

mod history;
mod weights;

pub use history::{pair_code, pair_is_diagonal, swap_pair, History, Key};
pub use weights::influence_weight;

use crate::bath::{BathError, BathSpec, CouplingAxis, EtaTable};
use crate::tls::{DensityMatrix, Spin, TlsError, TwoLevelSystem};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;
use weights::{phase_table_x, seg_table_general, seg_table_xz, RowTables, PREF};

#[derive(Debug, Clone, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ensemble budget exceeded at step {step}: {need} records, cap {cap}")]
    Resource { step: usize, need: u64, cap: u64 },
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Tls(#[from] TlsError),
}

/// Sorted set of time lags defining path identity for one bath.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    lags: Vec<u32>,
}

impl Mask {
    /// Lags must be strictly increasing, start at 0 (the current point must
    /// stay resolved) and fit one key word.
    pub fn new(lags: Vec<u32>) -> Result<Self, EngineError> {
        if lags.is_empty() || lags[0] != 0 {
            return Err(EngineError::Config("mask must contain lag 0".to_string()));
        }
        if lags.len() > 32 {
            return Err(EngineError::Config("mask larger than 32 lags".into()));
        }
        if !lags.windows(2).all(|w| w[0] < w[1]) {
            return Err(EngineError::Config(
                "mask lags must be strictly increasing".into(),
            ));
        }
        Ok(Mask { lags })
    }

    /// The most-recent-lags mask {0, 1, .., n-1}.
    pub fn uniform(n: usize) -> Result<Self, EngineError> {
        if n == 0 {
            return Err(EngineError::Config("mask must be nonempty".into()));
        }
        Mask::new((0..n as u32).collect())
    }

    pub fn lags(&self) -> &[u32] {
        &self.lags
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn max_lag(&self) -> u32 {
        *self.lags.last().unwrap()
    }
}

/// Propagation parameters shared by all run modes.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Memory cut-off per bath; `None` keeps the full grid span.
    pub t_mem_x: Option<f64>,
    pub t_mem_z: Option<f64>,
    pub mask_x: Mask,
    pub mask_z: Mask,
    /// Amplitude filter threshold; 0 drops only exact zeros.
    pub theta: f64,
    /// Keep whole histories and run influence sums back to t = 0.
    pub extended_memory: bool,
    pub initial_state: DensityMatrix,
    /// Hard cap on spawned records per step.
    pub max_records: usize,
    /// Record the sorted |amplitude| distribution of the final ensemble.
    pub collect_final_amplitudes: bool,
}

impl EngineConfig {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self, EngineError> {
        if !(dt > 0.0) {
            return Err(EngineError::Config("dt must be > 0".into()));
        }
        if n_steps == 0 {
            return Err(EngineError::Config("n_steps must be >= 1".into()));
        }
        Ok(EngineConfig {
            dt,
            n_steps,
            t_mem_x: None,
            t_mem_z: None,
            mask_x: Mask::uniform(1)?,
            mask_z: Mask::uniform(1)?,
            theta: 0.0,
            extended_memory: false,
            initial_state: DensityMatrix::z_plus(),
            max_records: 1 << 26,
            collect_final_amplitudes: false,
        })
    }

    fn mem_steps(&self, t_mem: Option<f64>) -> Result<usize, EngineError> {
        match t_mem {
            None => Ok(self.n_steps),
            Some(tm) => {
                if !(tm > 0.0) {
                    return Err(EngineError::Config("t_mem must be > 0".into()));
                }
                let steps = tm / self.dt;
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                    return Err(EngineError::Config(format!(
                        "t_mem = {tm} is not a multiple of dt = {}",
                        self.dt
                    )));
                }
                Ok((steps.round() as usize).min(self.n_steps).max(1))
            }
        }
    }

    fn validate_mask(&self, mask: &Mask, mem: usize, axis: &str) -> Result<(), EngineError> {
        let bound = if self.extended_memory {
            self.n_steps
        } else {
            mem
        };
        if mask.max_lag() as usize >= bound {
            return Err(EngineError::Config(format!(
                "mask_{axis} lag {} not below the memory window of {bound} steps",
                mask.max_lag()
            )));
        }
        Ok(())
    }
}

/// Per-step bookkeeping of one run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    /// Stored paths after merge and filter (mirror pairs counted as two).
    pub n_paths: Vec<u64>,
    /// Nonzero children produced by the step.
    pub spawned: Vec<u64>,
    /// Estimated bytes: key + packed history + amplitude per path.
    pub mem_bytes: Vec<u64>,
    /// Smallest stored |amplitude| per step (infinity when empty).
    pub min_amplitude: Vec<f64>,
    pub dropped_by_filter: Vec<u64>,
    pub final_norm: f64,
    /// Sorted |amplitude| of the final stored ensemble (mirror pairs twice),
    /// filled only on request.
    pub final_amplitudes: Vec<f64>,
}

impl RunStats {
    /// Time-averaged path fraction relative to a reference run.
    pub fn paths_ratio(&self, reference: &RunStats) -> f64 {
        let own: u64 = self.n_paths.iter().sum();
        let base: u64 = reference.n_paths.iter().sum();
        own as f64 / base as f64
    }
}

/// A canonical path record: itself plus, unless self-paired, its mirror.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub key: Key,
    pub z_hist: History,
    pub x_hist: History,
    pub amp: Complex64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub times: Vec<f64>,
    pub trajectory: Vec<DensityMatrix>,
    pub stats: RunStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Setup {
    SingleZ,
    SingleX,
    TwoBath,
}

struct Propagation {
    setup: Setup,
    n_steps: usize,
    dt: f64,
    theta: f64,
    extended: bool,
    /// Window lengths kept per history after merging.
    keep_z: usize,
    keep_x: usize,
    mask_z: Vec<u32>,
    mask_x: Vec<u32>,
    z_rows: Option<RowTables>,
    x_rows: Option<RowTables>,
    seg_z: [[Complex64; 4]; 4],
    seg_xz: Vec<[[Complex64; 4]; 4]>,
    phase_x: [Complex64; 4],
    max_records: usize,
    collect_final_amplitudes: bool,
}

const CHUNK: usize = 2048;

impl Propagation {
    fn branches(&self) -> usize {
        match self.setup {
            Setup::TwoBath => 16,
            _ => 4,
        }
    }

    fn child_key(&self, z: &History, x: &History) -> Key {
        match self.setup {
            Setup::SingleZ => Key {
                z: z.key(&self.mask_z),
                x: 0,
            },
            Setup::SingleX => Key {
                z: 0,
                x: x.key(&self.mask_x),
            },
            Setup::TwoBath => Key {
                z: z.key(&self.mask_z),
                x: x.key(&self.mask_x),
            },
        }
    }

    /// Pair code that indexes the readout bin of a key.
    fn bin_pair(&self, key: Key) -> u8 {
        match self.setup {
            Setup::SingleX => (key.x & 0b11) as u8,
            _ => key.newest_z_pair(),
        }
    }

    /// Spawn the children of one parent into `out`; returns the number of
    /// nonzero children of the de-canonicalised pair this record stands for.
    fn spawn_parent(&self, parent: &PathRecord, step: usize, out: &mut Vec<PathRecord>) -> u64 {
        let self_paired = parent.key.is_self_paired();
        let mult: u64 = if self_paired { 1 } else { 2 };
        let mut spawned = 0u64;

        let mut factors = [Complex64::new(0.0, 0.0); 16];
        let nb = self.branches();
        match self.setup {
            Setup::SingleZ => {
                let rows = self.z_rows.as_ref().unwrap();
                let tail = rows.tail_sum(&parent.z_hist, step);
                let from = parent.z_hist.pair(0) as usize;
                for (p, f) in factors.iter_mut().enumerate().take(4) {
                    *f = self.seg_z[p][from] * rows.row_weight(p as u8, tail);
                }
            }
            Setup::SingleX => {
                let rows = self.x_rows.as_ref().unwrap();
                // row step-1 of the dephasing table over the parent's own
                // coordinates (the delta propagator keeps paths constant)
                let p0 = parent.x_hist.pair(0);
                let maxl = (step - 1).min(rows.max_lag);
                let mut acc = rows.int4[0][p0 as usize];
                for lag in 1..=maxl {
                    acc += rows.int4[lag][parent.x_hist.pair(lag) as usize];
                }
                let pref = PREF[p0 as usize];
                let row = if pref == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    (-acc * pref).exp()
                };
                factors[p0 as usize] = self.phase_x[p0 as usize] * row;
            }
            Setup::TwoBath => {
                let zrows = self.z_rows.as_ref().unwrap();
                let xrows = self.x_rows.as_ref().unwrap();
                let ztail = zrows.tail_sum(&parent.z_hist, step);
                let xtail = xrows.tail_sum(&parent.x_hist, step - 1);
                let zfrom = parent.z_hist.pair(0) as usize;
                let mut wz = [Complex64::new(0.0, 0.0); 4];
                let mut wx = [Complex64::new(0.0, 0.0); 4];
                for p in 0..4u8 {
                    wz[p as usize] = zrows.row_weight(p, ztail);
                    wx[p as usize] = xrows.row_weight(p, xtail);
                }
                for zp in 0..4usize {
                    for xp in 0..4usize {
                        factors[zp * 4 + xp] = self.seg_xz[zp][xp][zfrom] * wz[zp] * wx[xp];
                    }
                }
            }
        }

        // hermitised branch factors keep self-paired parents conjugate-closed
        let mut effective = factors;
        if self_paired {
            for b in 0..nb {
                let sb = self.swap_branch(b);
                effective[b] = 0.5 * (factors[b] + factors[sb].conj());
            }
        }

        // pushed histories and partial keys are shared across branches
        let mut z_next: [Option<History>; 4] = [None, None, None, None];
        let mut x_next: [Option<History>; 4] = [None, None, None, None];
        let mut z_keys = [0u64; 4];
        let mut x_keys = [0u64; 4];
        for p in 0..4usize {
            match self.setup {
                Setup::SingleZ | Setup::TwoBath => {
                    let h = parent.z_hist.pushed(p as u8);
                    z_keys[p] = h.key(&self.mask_z);
                    z_next[p] = Some(h);
                }
                Setup::SingleX => {}
            }
            match self.setup {
                Setup::SingleX | Setup::TwoBath => {
                    let h = parent.x_hist.pushed(p as u8);
                    x_keys[p] = h.key(&self.mask_x);
                    x_next[p] = Some(h);
                }
                Setup::SingleZ => {}
            }
        }

        for (b, f) in effective.iter().enumerate().take(nb) {
            let amp = parent.amp * f;
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            spawned += mult;
            let (zp, xp) = match self.setup {
                Setup::SingleZ => (b, 0),
                Setup::SingleX => (0, b),
                Setup::TwoBath => (b / 4, b % 4),
            };
            let (key, z_hist, x_hist) = match self.setup {
                Setup::SingleZ => (
                    Key {
                        z: z_keys[zp],
                        x: 0,
                    },
                    z_next[zp].clone().unwrap(),
                    History::empty(),
                ),
                Setup::SingleX => (
                    Key {
                        z: 0,
                        x: x_keys[xp],
                    },
                    History::empty(),
                    x_next[xp].clone().unwrap(),
                ),
                Setup::TwoBath => (
                    Key {
                        z: z_keys[zp],
                        x: x_keys[xp],
                    },
                    z_next[zp].clone().unwrap(),
                    x_next[xp].clone().unwrap(),
                ),
            };
            let swapped = key.swapped();
            let rec = PathRecord {
                key,
                z_hist,
                x_hist,
                amp,
            };
            use std::cmp::Ordering::*;
            match key.cmp(&swapped) {
                Less => out.push(rec),
                Greater => {
                    // the mirrored branch of the (implicit) partner lands here
                    if !self_paired {
                        out.push(mirror(&rec, swapped));
                    }
                }
                Equal => {
                    if self_paired {
                        out.push(rec);
                    } else {
                        let m = mirror(&rec, swapped);
                        out.push(rec);
                        out.push(m);
                    }
                }
            }
        }
        spawned
    }

    fn swap_branch(&self, b: usize) -> usize {
        match self.setup {
            Setup::TwoBath => {
                let (zp, xp) = (b / 4, b % 4);
                swap_pair(zp as u8) as usize * 4 + swap_pair(xp as u8) as usize
            }
            _ => swap_pair(b as u8) as usize,
        }
    }

    /// Deterministic merge of sorted children plus on-the-fly readout.
    fn merge_and_read(
        &self,
        children: Vec<PathRecord>,
        step: usize,
        stats: &mut RunStats,
    ) -> (Vec<PathRecord>, DensityMatrix) {
        let children = sort_children(children);

        let mut out: Vec<PathRecord> = Vec::new();
        let mut bins = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut n_paths = 0u64;
        let mut mem_bytes = 0u64;
        let mut dropped = 0u64;
        let mut min_amp = f64::INFINITY;

        let zrows = self.z_rows.as_ref();
        let mut i = 0;
        while i < children.len() {
            let key = children[i].key;
            let mult: u64 = if key.is_self_paired() { 1 } else { 2 };
            let mut sum = Complex64::new(0.0, 0.0);
            let mut group_t = Complex64::new(0.0, 0.0);
            let mut rep = i;
            let mut rep_mag = -1.0f64;
            let mut j = i;
            // consecutive children often share the z history, so the
            // correction from the previous child is reused when it applies
            let mut last_corr: Option<(u64, u32, Complex64)> = None;
            while j < children.len() && children[j].key == key {
                let c = &children[j];
                sum += c.amp;
                let mag = c.amp.norm();
                if mag > rep_mag {
                    rep_mag = mag;
                    rep = j;
                }
                let corr = match (self.setup, zrows) {
                    (Setup::SingleX, _) => Complex64::new(1.0, 0.0),
                    (_, Some(rows)) => {
                        // the one-word memo is only sound when the low word
                        // captures the whole history
                        if c.z_hist.len() <= 32 {
                            let tag = (c.z_hist.low_word(), c.z_hist.len() as u32);
                            match last_corr {
                                Some((w, l, corr)) if w == tag.0 && l == tag.1 => corr,
                                _ => {
                                    let corr = rows.terminal_correction(&c.z_hist, step);
                                    last_corr = Some((tag.0, tag.1, corr));
                                    corr
                                }
                            }
                        } else {
                            rows.terminal_correction(&c.z_hist, step)
                        }
                    }
                    _ => Complex64::new(1.0, 0.0),
                };
                group_t += c.amp * corr;
                j += 1;
            }

            // readout: the group and, if distinct, its conjugate mirror
            let pair = self.bin_pair(key) as usize;
            bins[pair >> 1][pair & 1] += group_t;
            if mult == 2 {
                let sp = swap_pair(pair as u8) as usize;
                bins[sp >> 1][sp & 1] += group_t.conj();
            }

            if sum.re != 0.0 || sum.im != 0.0 {
                let mag = sum.norm();
                if self.theta > 0.0 && mag < self.theta {
                    dropped += mult;
                } else {
                    let mut rec = children[rep].clone();
                    rec.amp = sum;
                    if !self.extended {
                        rec.z_hist.truncate(self.keep_z);
                        rec.x_hist.truncate(self.keep_x);
                    }
                    n_paths += mult;
                    mem_bytes += mult
                        * (16
                            + 8 * self.axes()
                            + (2 * (rec.z_hist.len() + rec.x_hist.len())).div_ceil(8) as u64);
                    min_amp = min_amp.min(mag);
                    out.push(rec);
                }
            }
            i = j;
        }

        stats.n_paths.push(n_paths);
        stats.mem_bytes.push(mem_bytes);
        stats.dropped_by_filter.push(dropped);
        stats.min_amplitude.push(min_amp);

        let rho = self.bins_to_rho(bins);
        (out, rho)
    }

    fn axes(&self) -> u64 {
        match self.setup {
            Setup::TwoBath => 2,
            _ => 1,
        }
    }

    fn bins_to_rho(&self, bins: [[Complex64; 2]; 2]) -> DensityMatrix {
        let rho = DensityMatrix::from_elements(bins);
        match self.setup {
            Setup::SingleX => rho.to_basis_z_from_x(),
            _ => rho,
        }
    }

    fn initial_ensemble(&self, rho0: &DensityMatrix, stats: &mut RunStats) -> Vec<PathRecord> {
        let rho = match self.setup {
            Setup::SingleX => rho0.to_basis_x(),
            _ => *rho0,
        };
        let mut out = Vec::new();
        let mut n_paths = 0u64;
        let mut mem_bytes = 0u64;
        let mut min_amp = f64::INFINITY;
        for r in Spin::BOTH {
            for c in Spin::BOTH {
                let el = rho.get(r, c);
                if el.re == 0.0 && el.im == 0.0 {
                    continue;
                }
                let pair = pair_code(r.bit(), c.bit());
                let amp = match (self.setup, self.z_rows.as_ref()) {
                    (Setup::SingleX, _) => el,
                    (_, Some(rows)) => el * rows.first_row_weight(pair),
                    _ => el,
                };
                let hist = History::single(pair);
                let (z_hist, x_hist) = match self.setup {
                    Setup::SingleX => (History::empty(), hist),
                    _ => (hist, History::empty()),
                };
                let key = self.child_key(&z_hist, &x_hist);
                if !key.is_canonical() {
                    continue; // mirror of the transposed element
                }
                let mult: u64 = if key.is_self_paired() { 1 } else { 2 };
                n_paths += mult;
                mem_bytes += mult * (16 + 8 * self.axes() + 1);
                min_amp = min_amp.min(amp.norm());
                out.push(PathRecord {
                    key,
                    z_hist,
                    x_hist,
                    amp,
                });
            }
        }
        stats.n_paths.push(n_paths);
        stats.spawned.push(n_paths);
        stats.mem_bytes.push(mem_bytes);
        stats.dropped_by_filter.push(0);
        stats.min_amplitude.push(min_amp);
        out
    }

    fn run(&self, rho0: &DensityMatrix) -> Result<RunOutput, EngineError> {
        let mut stats = RunStats::default();
        let mut trajectory = Vec::with_capacity(self.n_steps + 1);
        let mut times = Vec::with_capacity(self.n_steps + 1);
        trajectory.push(*rho0);
        times.push(0.0);

        let mut ensemble = self.initial_ensemble(rho0, &mut stats);
        for step in 1..=self.n_steps {
            let projected = ensemble.len() as u64 * self.branches() as u64;
            if projected > self.max_records as u64 {
                return Err(EngineError::Resource {
                    step,
                    need: projected,
                    cap: self.max_records as u64,
                });
            }
            let t0 = std::time::Instant::now();
            let results: Vec<(Vec<PathRecord>, u64)> = ensemble
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut local = Vec::with_capacity(chunk.len() * self.branches());
                    let mut spawned = 0u64;
                    for parent in chunk {
                        spawned += self.spawn_parent(parent, step, &mut local);
                    }
                    (local, spawned)
                })
                .collect();
            let mut children =
                Vec::with_capacity(results.iter().map(|(v, _)| v.len()).sum::<usize>());
            let mut spawned = 0u64;
            for (v, s) in results {
                children.extend(v);
                spawned += s;
            }
            stats.spawned.push(spawned);
            let t_spawn = t0.elapsed();

            let t1 = std::time::Instant::now();
            let (next, rho) = self.merge_and_read(children, step, &mut stats);
            if std::env::var_os("QUAPI_TIMING").is_some() {
                eprintln!(
                    "step {step}: spawn {:?} ({} children) merge+read {:?} ({} out)",
                    t_spawn,
                    stats.spawned.last().unwrap(),
                    t1.elapsed(),
                    next.len()
                );
            }
            ensemble = next;
            trajectory.push(rho);
            times.push(step as f64 * self.dt);
        }
        stats.final_norm = trajectory.last().unwrap().norm();
        if self.collect_final_amplitudes {
            let mut amps = Vec::with_capacity(2 * ensemble.len());
            for rec in &ensemble {
                let mag = rec.amp.norm();
                amps.push(mag);
                if !rec.key.is_self_paired() {
                    amps.push(mag);
                }
            }
            amps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            stats.final_amplitudes = amps;
        }
        Ok(RunOutput {
            times,
            trajectory,
            stats,
        })
    }
}

fn mirror(rec: &PathRecord, swapped_key: Key) -> PathRecord {
    PathRecord {
        key: swapped_key,
        z_hist: rec.z_hist.swapped(),
        x_hist: rec.x_hist.swapped(),
        amp: rec.amp.conj(),
    }
}

/// Sort children by `(key, z history, x history)`.
///
/// Short histories (one packed word, the common truncated case) sort
/// through a compact proxy array instead of moving whole records around;
/// both routes produce the same total order.
fn sort_children(mut children: Vec<PathRecord>) -> Vec<PathRecord> {
    let compact = children
        .iter()
        .all(|c| c.z_hist.len() <= 32 && c.x_hist.len() <= 32);
    if compact {
        let mut tags: Vec<([u64; 4], u32)> = children
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    [c.key.z, c.key.x, c.z_hist.low_word(), c.x_hist.low_word()],
                    i as u32,
                )
            })
            .collect();
        tags.par_sort_unstable();
        let mut out = Vec::with_capacity(children.len());
        for (_, i) in &tags {
            out.push(children[*i as usize].clone());
        }
        out
    } else {
        children.par_sort_unstable_by(|a, b| {
            a.key
                .cmp(&b.key)
                .then_with(|| a.z_hist.cmp(&b.z_hist))
                .then_with(|| a.x_hist.cmp(&b.x_hist))
        });
        children
    }
}

fn check_initial_state(rho0: &DensityMatrix) -> Result<(), EngineError> {
    if rho0.hermiticity_defect() > 1e-12 {
        return Err(EngineError::Config(
            "initial state must be hermitian".into(),
        ));
    }
    if (rho0.trace() - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(EngineError::Config(
            "initial state must have trace 1".into(),
        ));
    }
    Ok(())
}

fn expect_axis(bath: &BathSpec, axis: CouplingAxis, what: &str) -> Result<(), EngineError> {
    if bath.axis != axis {
        return Err(EngineError::Config(format!(
            "{what} must couple along {axis:?}"
        )));
    }
    Ok(())
}

fn build_axis_tables(
    cfg: &EngineConfig,
    bath: &BathSpec,
    mem: usize,
) -> Result<RowTables, EngineError> {
    let (table, max_lag) = if cfg.extended_memory {
        (EtaTable::build(bath, cfg.n_steps, cfg.dt)?, cfg.n_steps)
    } else {
        // entries beyond the window are zero; never evaluate them
        (
            EtaTable::build_truncated(bath, cfg.n_steps, cfg.dt, mem as f64 * cfg.dt)?,
            mem,
        )
    };
    Ok(RowTables::compile(&table, max_lag))
}

/// Propagate with a single general (σ_z) bath.
pub fn run_single_general(
    cfg: &EngineConfig,
    bath_z: &BathSpec,
    tls: &TwoLevelSystem,
) -> Result<RunOutput, EngineError> {
    expect_axis(bath_z, CouplingAxis::Z, "bath_z")?;
    check_initial_state(&cfg.initial_state)?;
    let mem_z = cfg.mem_steps(cfg.t_mem_z)?;
    cfg.validate_mask(&cfg.mask_z, mem_z, "z")?;
    let prop = Propagation {
        setup: Setup::SingleZ,
        n_steps: cfg.n_steps,
        dt: cfg.dt,
        theta: cfg.theta,
        extended: cfg.extended_memory,
        keep_z: mem_z,
        keep_x: 0,
        mask_z: cfg.mask_z.lags().to_vec(),
        mask_x: Vec::new(),
        z_rows: Some(build_axis_tables(cfg, bath_z, mem_z)?),
        x_rows: None,
        seg_z: seg_table_general(tls, cfg.dt),
        seg_xz: Vec::new(),
        phase_x: [Complex64::new(0.0, 0.0); 4],
        max_records: cfg.max_records,
        collect_final_amplitudes: cfg.collect_final_amplitudes,
    };
    prop.run(&cfg.initial_state)
}

/// Propagate with a single pure-dephasing (σ_x) bath; only the four
/// constant paths carry amplitude.
pub fn run_pure_dephasing(
    cfg: &EngineConfig,
    bath_x: &BathSpec,
    tls: &TwoLevelSystem,
) -> Result<RunOutput, EngineError> {
    expect_axis(bath_x, CouplingAxis::X, "bath_x")?;
    check_initial_state(&cfg.initial_state)?;
    let mem_x = cfg.mem_steps(cfg.t_mem_x)?;
    cfg.validate_mask(&cfg.mask_x, mem_x, "x")?;
    let prop = Propagation {
        setup: Setup::SingleX,
        n_steps: cfg.n_steps,
        dt: cfg.dt,
        theta: cfg.theta,
        extended: cfg.extended_memory,
        keep_z: 0,
        keep_x: mem_x + 1,
        mask_z: Vec::new(),
        mask_x: cfg.mask_x.lags().to_vec(),
        z_rows: None,
        x_rows: Some(build_axis_tables(cfg, bath_x, mem_x)?),
        seg_z: [[Complex64::new(0.0, 0.0); 4]; 4],
        seg_xz: Vec::new(),
        phase_x: phase_table_x(tls, cfg.dt),
        max_records: cfg.max_records,
        collect_final_amplitudes: cfg.collect_final_amplitudes,
    };
    prop.run(&cfg.initial_state)
}

/// Propagate with both baths; every step inserts an intermediate σ_x pair,
/// and the two influence functionals multiply.
pub fn run_two_baths(
    cfg: &EngineConfig,
    bath_x: &BathSpec,
    bath_z: &BathSpec,
    tls: &TwoLevelSystem,
) -> Result<RunOutput, EngineError> {
    expect_axis(bath_x, CouplingAxis::X, "bath_x")?;
    expect_axis(bath_z, CouplingAxis::Z, "bath_z")?;
    check_initial_state(&cfg.initial_state)?;
    let mem_z = cfg.mem_steps(cfg.t_mem_z)?;
    let mem_x = cfg.mem_steps(cfg.t_mem_x)?;
    cfg.validate_mask(&cfg.mask_z, mem_z, "z")?;
    cfg.validate_mask(&cfg.mask_x, mem_x, "x")?;
    let prop = Propagation {
        setup: Setup::TwoBath,
        n_steps: cfg.n_steps,
        dt: cfg.dt,
        theta: cfg.theta,
        extended: cfg.extended_memory,
        keep_z: mem_z,
        keep_x: mem_x,
        mask_z: cfg.mask_z.lags().to_vec(),
        mask_x: cfg.mask_x.lags().to_vec(),
        z_rows: Some(build_axis_tables(cfg, bath_z, mem_z)?),
        x_rows: Some(build_axis_tables(cfg, bath_x, mem_x)?),
        seg_z: [[Complex64::new(0.0, 0.0); 4]; 4],
        seg_xz: seg_table_xz(tls, cfg.dt),
        phase_x: [Complex64::new(0.0, 0.0); 4],
        max_records: cfg.max_records,
        collect_final_amplitudes: cfg.collect_final_amplitudes,
    };
    prop.run(&cfg.initial_state)
}
