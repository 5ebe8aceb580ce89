//! Influence-row tables and segment-propagator tables in the packed-pair
//! representation the engine iterates over.
//!
//! A row of the influence exponent for the point added at step `j` is
//! `(σ_j⁺ - σ_j⁻) Σ_{j'} (η_{jj'} σ_{j'}⁺ - η*_{jj'} σ_{j'}⁻)`. For ±1
//! eigenvalues the inner combination takes only four values per
//! coefficient, so each lag stores a 4-entry table indexed by pair code.
//! The general-bath table needs three extra variants: the start column
//! (j' = 0), and the differences (terminal - interior) applied as a readout
//! correction, because the last grid point of each readout time occupies a
//! half cell.

use super::history::History;
use crate::bath::{CouplingAxis, EtaCase, EtaTable};
use crate::tls::{
    segment_propagator_general, segment_propagator_xz, Direction, Spin, TwoLevelSystem,
};
use num_complex::Complex64;

pub(crate) const PREF: [f64; 4] = [0.0, 2.0, -2.0, 0.0];

#[inline]
fn spins_of(code: u8) -> (Spin, Spin) {
    (Spin::from_bit(code as u64 >> 1), Spin::from_bit(code as u64))
}

/// `η σ⁺ - η* σ⁻` for the four pair codes.
#[inline]
fn combos(eta: Complex64) -> [Complex64; 4] {
    let two_re = Complex64::new(2.0 * eta.re, 0.0);
    let two_im = Complex64::new(0.0, 2.0 * eta.im);
    [two_im, two_re, -two_re, -two_im]
}

/// Lag-indexed influence-row tables for one bath axis.
#[derive(Debug, Clone)]
pub(crate) struct RowTables {
    pub axis: CouplingAxis,
    /// `[0]` is the diagonal coefficient; lag >= 1 the interior column.
    pub int4: Vec<[Complex64; 4]>,
    /// Z only: column j' = 0 while the row is interior; indexed by lag = j.
    pub start4: Vec<[Complex64; 4]>,
    /// Z only: terminal-row minus interior, applied at readout.
    pub dterm4: Vec<[Complex64; 4]>,
    /// Z only: terminal start-column minus interior start-column.
    pub dstart4: Vec<[Complex64; 4]>,
    /// Z only: self-row of the initial point.
    pub first4: [Complex64; 4],
    /// Rows sum lags `0..=min(j, max_lag)`.
    pub max_lag: usize,
}

impl RowTables {
    pub fn compile(table: &EtaTable, max_lag: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut int4 = Vec::with_capacity(max_lag + 1);
        let mut start4 = Vec::with_capacity(max_lag + 1);
        let mut dterm4 = Vec::with_capacity(max_lag + 1);
        let mut dstart4 = Vec::with_capacity(max_lag + 1);
        for lag in 0..=max_lag {
            match table.axis {
                CouplingAxis::Z => {
                    if lag == 0 {
                        int4.push(combos(table.case_value(EtaCase::DiagInterior)));
                        start4.push(combos(zero));
                        dterm4.push(combos(
                            table.case_value(EtaCase::DiagLast)
                                - table.case_value(EtaCase::DiagInterior),
                        ));
                        dstart4.push(combos(zero));
                    } else {
                        let interior = table.case_value(EtaCase::Interior { lag });
                        let start = table.case_value(EtaCase::StartCol { j: lag });
                        int4.push(combos(interior));
                        start4.push(combos(start));
                        dterm4.push(combos(
                            table.case_value(EtaCase::TermRow { lag }) - interior,
                        ));
                        dstart4.push(combos(
                            table.case_value(EtaCase::TermStart { n: lag }) - start,
                        ));
                    }
                }
                CouplingAxis::X => {
                    let eta = if lag == 0 {
                        table.case_value(EtaCase::XDiag)
                    } else {
                        table.case_value(EtaCase::XOff { lag })
                    };
                    int4.push(combos(eta));
                }
            }
        }
        let first4 = match table.axis {
            CouplingAxis::Z => combos(table.case_value(EtaCase::DiagFirst)),
            CouplingAxis::X => combos(zero),
        };
        RowTables {
            axis: table.axis,
            int4,
            start4,
            dterm4,
            dstart4,
            first4,
            max_lag,
        }
    }

    /// Branch-independent part of the row at step `j`: the sum over lags
    /// >= 1 of the child history, i.e. lags >= 0 of the parent history.
    ///
    /// `row_step` is the table row index (`j` for the Z bath, `j - 1` for
    /// the X bath in a two-bath step): the start column applies when the
    /// lag reaches it.
    #[inline]
    pub fn tail_sum(&self, parent: &History, row_step: usize) -> Complex64 {
        let maxl = row_step.min(self.max_lag);
        let mut acc = Complex64::new(0.0, 0.0);
        for lag in 1..=maxl {
            let pair = parent.pair(lag - 1) as usize;
            let tbl = if lag == row_step && self.axis == CouplingAxis::Z {
                &self.start4[lag]
            } else {
                &self.int4[lag]
            };
            acc += tbl[pair];
        }
        acc
    }

    /// `exp(-(σ⁺-σ⁻)(diag(pair) + tail))` for a newly added pair.
    #[inline]
    pub fn row_weight(&self, pair: u8, tail: Complex64) -> Complex64 {
        let pref = PREF[pair as usize];
        if pref == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        (-(self.int4[0][pair as usize] + tail) * pref).exp()
    }

    /// Readout correction swapping the newest row from interior to terminal
    /// coefficients; `child` includes the step-`j` point at lag 0.
    #[inline]
    pub fn terminal_correction(&self, child: &History, j: usize) -> Complex64 {
        debug_assert_eq!(self.axis, CouplingAxis::Z);
        let pair0 = child.pair(0) as usize;
        let pref = PREF[pair0];
        if pref == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let maxl = j.min(self.max_lag);
        let mut acc = self.dterm4[0][pair0];
        for lag in 1..=maxl {
            let pair = child.pair(lag) as usize;
            let tbl = if lag == j {
                &self.dstart4[lag]
            } else {
                &self.dterm4[lag]
            };
            acc += tbl[pair];
        }
        (-acc * pref).exp()
    }

    /// Self-row of the initial point (Z bath only; the identity elsewhere).
    #[inline]
    pub fn first_row_weight(&self, pair: u8) -> Complex64 {
        let pref = PREF[pair as usize];
        if pref == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        (-self.first4[pair as usize] * pref).exp()
    }
}

/// Whole-path influence weight: direct evaluation of the double-sum
/// exponent over a complete coordinate record, newest point first.
///
/// `terminal` selects the boundary coefficients of the final row (Z bath);
/// `extended` lets lags run back to the start regardless of truncation.
pub fn influence_weight(
    history: &History,
    table: &EtaTable,
    current_step: usize,
    extended: bool,
) -> Complex64 {
    let n = history.len();
    let mut exponent = Complex64::new(0.0, 0.0);
    let reach = if extended {
        usize::MAX
    } else {
        table.mem_steps
    };
    match table.axis {
        CouplingAxis::Z => {
            debug_assert_eq!(n, current_step + 1);
            for j in 0..=current_step {
                let lag_j = current_step - j; // position of point j in the history
                let (sp, sm) = spins_of(history.pair(lag_j));
                let pref = sp.value() - sm.value();
                if pref == 0.0 {
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for jp in j.saturating_sub(reach)..=j {
                    let case = EtaCase::classify_general(j, jp, current_step).unwrap();
                    let eta = table.case_value(case);
                    let (tp, tm) = spins_of(history.pair(current_step - jp));
                    acc += eta * tp.value() - eta.conj() * tm.value();
                }
                exponent += pref * acc;
            }
        }
        CouplingAxis::X => {
            // rows 0..current_step-1 over the x coordinates
            for j in 0..current_step.min(n) {
                let lag_j = n - 1 - j;
                let (sp, sm) = spins_of(history.pair(lag_j));
                let pref = sp.value() - sm.value();
                if pref == 0.0 {
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for jp in j.saturating_sub(reach)..=j {
                    let case = EtaCase::classify_dephasing(j, jp).unwrap();
                    let eta = table.case_value(case);
                    let (tp, tm) = spins_of(history.pair(n - 1 - jp));
                    acc += eta * tp.value() - eta.conj() * tm.value();
                }
                exponent += pref * acc;
            }
        }
    }
    (-exponent).exp()
}

/// Segment factors for the single general bath: forward × backward matrix
/// elements for (new pair, old pair).
pub(crate) fn seg_table_general(tls: &TwoLevelSystem, dt: f64) -> [[Complex64; 4]; 4] {
    let mut t = [[Complex64::new(0.0, 0.0); 4]; 4];
    for to in 0..4u8 {
        let (top, tom) = spins_of(to);
        for from in 0..4u8 {
            let (frp, frm) = spins_of(from);
            t[to as usize][from as usize] =
                segment_propagator_general(tls, dt, top, frp, Direction::Forward)
                    * segment_propagator_general(tls, dt, frm, tom, Direction::Backward);
        }
    }
    t
}

/// Segment factors for the two-bath step: `[z_to][x_mid][z_from]`.
pub(crate) fn seg_table_xz(tls: &TwoLevelSystem, dt: f64) -> Vec<[[Complex64; 4]; 4]> {
    let mut t = vec![[[Complex64::new(0.0, 0.0); 4]; 4]; 4];
    for zt in 0..4u8 {
        for xm in 0..4u8 {
            for zf in 0..4u8 {
                t[zt as usize][xm as usize][zf as usize] = segment_propagator_xz(
                    tls,
                    dt,
                    spins_of(zt),
                    spins_of(xm),
                    spins_of(zf),
                );
            }
        }
    }
    t
}

/// Per-step phase of the pure-dephasing propagator for each constant pair.
pub(crate) fn phase_table_x(tls: &TwoLevelSystem, dt: f64) -> [Complex64; 4] {
    let mut t = [Complex64::new(0.0, 0.0); 4];
    for pair in 0..4u8 {
        let (sp, sm) = spins_of(pair);
        t[pair as usize] =
            Complex64::new(0.0, -(tls.energy(sp) - tls.energy(sm)) * dt).exp();
    }
    t
}
