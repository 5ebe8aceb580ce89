//! Discretised influence coefficients.
//!
//! Every coefficient is a double time integral of the bath correlation
//! function over a pair of grid cells, evaluated here as a single frequency
//! integral of the kernel times a cell form factor. The general-bath (Z)
//! table uses half cells at the first and last grid points, which produces
//! seven distinct index patterns; the dephasing (X) table uses uniform full
//! cells and has only two.
//!
//! Diagonal cells integrate `C(τ-s)` over a triangle. Written as a frequency
//! integral this is `(1 - e^{-iωT} - iωT)/ω²` per unit kernel; the `-iωT`
//! term is kept so that the table is exactly the time integral of `C` (it
//! contributes a purely imaginary constant that cancels for ±1 coupling
//! eigenvalues and is dropped in some printed forms of these coefficients).

use super::{BathError, BathSpec, CouplingAxis};
use crate::quad;
use num_complex::Complex64;

/// Index pattern of one influence coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaCase {
    /// `0 < j' < j < N`, depends on the lag only.
    Interior { lag: usize },
    /// `0 < j' = j < N`.
    DiagInterior,
    /// `j' = j = 0` (half cell at the start).
    DiagFirst,
    /// `j' = j = N` (half cell at the end).
    DiagLast,
    /// `0 = j' < j < N`; the first point occupies a half cell.
    StartCol { j: usize },
    /// `0 < j' < j = N`; the last point occupies a half cell.
    TermRow { lag: usize },
    /// `0 = j' < j = N`; half cells at both ends.
    TermStart { n: usize },
    /// Dephasing table, `j' = j`.
    XDiag,
    /// Dephasing table, `j' < j`; depends on the lag only.
    XOff { lag: usize },
}

impl EtaCase {
    /// The unique general-bath case matching `(j, j')` for a grid of `N`
    /// steps. Exactly one pattern applies to every `0 <= j' <= j <= N`.
    pub fn classify_general(j: usize, jp: usize, n: usize) -> Result<Self, BathError> {
        if jp > j || j > n {
            return Err(BathError::Domain(format!(
                "influence index out of range: j'={jp}, j={j}, N={n}"
            )));
        }
        Ok(match (jp, j) {
            (0, 0) => EtaCase::DiagFirst,
            _ if jp == j && j == n => EtaCase::DiagLast,
            _ if jp == j => EtaCase::DiagInterior,
            (0, _) if j == n => EtaCase::TermStart { n },
            (0, _) => EtaCase::StartCol { j },
            _ if j == n => EtaCase::TermRow { lag: j - jp },
            _ => EtaCase::Interior { lag: j - jp },
        })
    }

    pub fn classify_dephasing(j: usize, jp: usize) -> Result<Self, BathError> {
        if jp > j {
            return Err(BathError::Domain(format!(
                "influence index out of range: j'={jp}, j={j}"
            )));
        }
        Ok(if jp == j {
            EtaCase::XDiag
        } else {
            EtaCase::XOff { lag: j - jp }
        })
    }

    /// Largest oscillation scale `ω·dt·lag` of the form factor, used to seed
    /// the quadrature panel count.
    fn lag_scale(&self) -> usize {
        match *self {
            EtaCase::Interior { lag } | EtaCase::TermRow { lag } | EtaCase::XOff { lag } => lag,
            EtaCase::StartCol { j } => j,
            EtaCase::TermStart { n } => n,
            _ => 1,
        }
    }
}

/// sin(x)/x, stable at small arguments.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x * x * x * x / 120.0
    } else {
        x.sin() / x
    }
}

/// `(1 - e^{-ix} - ix)/x²`, the triangle-cell form factor, stable at small x.
fn triangle_factor(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        Complex64::new(0.5 - x * x / 24.0, -x / 6.0 + x * x * x / 120.0)
    } else {
        (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -x).exp() - Complex64::new(0.0, x))
            / (x * x)
    }
}

fn phase(x: f64) -> Complex64 {
    Complex64::new(0.0, -x).exp()
}

fn cell_factor(case: EtaCase, dt: f64, omega: f64) -> Complex64 {
    let full = dt * sinc(0.5 * omega * dt); // transform of a full cell
    let half = 0.5 * dt * sinc(0.25 * omega * dt); // transform of a half cell
    match case {
        EtaCase::Interior { lag } | EtaCase::XOff { lag } => {
            full * full * phase(omega * dt * lag as f64)
        }
        EtaCase::DiagInterior | EtaCase::XDiag => dt * dt * triangle_factor(omega * dt),
        EtaCase::DiagFirst | EtaCase::DiagLast => {
            0.25 * dt * dt * triangle_factor(0.5 * omega * dt)
        }
        EtaCase::StartCol { j } => full * half * phase(omega * dt * (j as f64 - 0.25)),
        EtaCase::TermRow { lag } => full * half * phase(omega * dt * (lag as f64 - 0.25)),
        EtaCase::TermStart { n } => half * half * phase(omega * dt * (n as f64 - 0.5)),
    }
}

/// Evaluate one influence coefficient by frequency quadrature.
pub fn eta_case_value(bath: &BathSpec, case: EtaCase, dt: f64) -> Result<Complex64, BathError> {
    if dt <= 0.0 {
        return Err(BathError::Domain("dt must be > 0".into()));
    }
    if bath.spectral.coupling == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = bath.omega_window();
    let f = |omega: f64| bath.kernel(omega) * cell_factor(case, dt, omega);
    let panels = (32.0 + w * dt * (case.lag_scale() + 1) as f64 / 3.0).ceil() as usize;
    let val = quad::integrate(&f, -w, w, panels, 1e-10)?;
    Ok(val / (2.0 * std::f64::consts::PI))
}

/// Influence coefficient `η_{jj'}` of a general (Z-axis) bath on a grid of
/// `N` steps of length `dt`.
pub fn eta_general(
    bath: &BathSpec,
    j: usize,
    jp: usize,
    n: usize,
    dt: f64,
) -> Result<Complex64, BathError> {
    if bath.axis != CouplingAxis::Z {
        return Err(BathError::Domain(
            "eta_general requires a Z-axis bath".into(),
        ));
    }
    eta_case_value(bath, EtaCase::classify_general(j, jp, n)?, dt)
}

/// Influence coefficient `η_{jj'}` of a pure-dephasing (X-axis) bath; cells
/// are `[jΔt, (j+1)Δt]` with no boundary specials.
pub fn eta_dephasing(
    bath: &BathSpec,
    j: usize,
    jp: usize,
    dt: f64,
) -> Result<Complex64, BathError> {
    if bath.axis != CouplingAxis::X {
        return Err(BathError::Domain(
            "eta_dephasing requires an X-axis bath".into(),
        ));
    }
    eta_case_value(bath, EtaCase::classify_dephasing(j, jp)?, dt)
}

/// Precomputed influence coefficients for one bath and grid.
///
/// Interior coefficients depend on `j - j'` only, so the storage is one
/// value per lag and case variant rather than a dense `(j, j')` matrix.
/// Entries at lags beyond `mem_steps` read as zero once truncated.
#[derive(Debug, Clone)]
pub struct EtaTable {
    pub axis: CouplingAxis,
    pub dt: f64,
    pub n_steps: usize,
    /// Largest lag with retained entries; `n_steps` when untruncated.
    pub mem_steps: usize,
    pub(crate) diag_interior: Complex64,
    pub(crate) diag_first: Complex64,
    pub(crate) diag_last: Complex64,
    /// Indexed by lag; entry 0 unused.
    pub(crate) interior: Vec<Complex64>,
    pub(crate) start_col: Vec<Complex64>,
    pub(crate) term_row: Vec<Complex64>,
    pub(crate) term_start: Vec<Complex64>,
}

impl EtaTable {
    /// Build the full (untruncated) table for `n_steps` grid steps.
    pub fn build(bath: &BathSpec, n_steps: usize, dt: f64) -> Result<Self, BathError> {
        Self::build_lags(bath, n_steps, dt, n_steps)
    }

    /// Build a table whose entries beyond `t_mem` are zero without ever
    /// evaluating them; equivalent to `truncate_eta(&build(..), t_mem)`.
    pub fn build_truncated(
        bath: &BathSpec,
        n_steps: usize,
        dt: f64,
        t_mem: f64,
    ) -> Result<Self, BathError> {
        if t_mem <= 0.0 {
            return Err(BathError::Domain("t_mem must be > 0".into()));
        }
        let mem = (((t_mem / dt) * (1.0 + 1e-9)).floor() as usize).min(n_steps);
        let mut table = Self::build_lags(bath, n_steps, dt, mem)?;
        table.mem_steps = mem;
        Ok(table)
    }

    fn build_lags(
        bath: &BathSpec,
        n_steps: usize,
        dt: f64,
        max_lag: usize,
    ) -> Result<Self, BathError> {
        use rayon::prelude::*;
        let zero = Complex64::new(0.0, 0.0);
        let lag_values = |mk: fn(usize) -> EtaCase| -> Result<Vec<Complex64>, BathError> {
            let mut v = (1..=max_lag)
                .into_par_iter()
                .map(|lag| eta_case_value(bath, mk(lag), dt))
                .collect::<Result<Vec<_>, _>>()?;
            v.insert(0, zero);
            Ok(v)
        };
        let (diag_interior, diag_first, diag_last, interior, start_col, term_row, term_start) =
            match bath.axis {
                CouplingAxis::Z => (
                    eta_case_value(bath, EtaCase::DiagInterior, dt)?,
                    eta_case_value(bath, EtaCase::DiagFirst, dt)?,
                    eta_case_value(bath, EtaCase::DiagLast, dt)?,
                    lag_values(|lag| EtaCase::Interior { lag })?,
                    lag_values(|j| EtaCase::StartCol { j })?,
                    lag_values(|lag| EtaCase::TermRow { lag })?,
                    lag_values(|n| EtaCase::TermStart { n })?,
                ),
                CouplingAxis::X => (
                    eta_case_value(bath, EtaCase::XDiag, dt)?,
                    zero,
                    zero,
                    lag_values(|lag| EtaCase::XOff { lag })?,
                    Vec::new(),
                    Vec::new(),
                    Vec::new(),
                ),
            };
        Ok(Self {
            axis: bath.axis,
            dt,
            n_steps,
            mem_steps: max_lag,
            diag_interior,
            diag_first,
            diag_last,
            interior,
            start_col,
            term_row,
            term_start,
        })
    }

    /// Coefficient for `(j, j')`, zero where truncation applies.
    pub fn value(&self, j: usize, jp: usize) -> Result<Complex64, BathError> {
        let case = match self.axis {
            CouplingAxis::Z => EtaCase::classify_general(j, jp, self.n_steps)?,
            CouplingAxis::X => {
                if j >= self.n_steps.max(1) {
                    return Err(BathError::Domain(format!(
                        "dephasing index j={j} out of range for N={}",
                        self.n_steps
                    )));
                }
                EtaCase::classify_dephasing(j, jp)?
            }
        };
        if j - jp > self.mem_steps {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.case_value(case))
    }

    pub(crate) fn case_value(&self, case: EtaCase) -> Complex64 {
        let pick = |v: &Vec<Complex64>, lag: usize| {
            if lag > self.mem_steps || lag >= v.len() {
                Complex64::new(0.0, 0.0)
            } else {
                v[lag]
            }
        };
        match case {
            EtaCase::DiagInterior | EtaCase::XDiag => self.diag_interior,
            EtaCase::DiagFirst => self.diag_first,
            EtaCase::DiagLast => self.diag_last,
            EtaCase::Interior { lag } | EtaCase::XOff { lag } => pick(&self.interior, lag),
            EtaCase::StartCol { j } => pick(&self.start_col, j),
            EtaCase::TermRow { lag } => pick(&self.term_row, lag),
            EtaCase::TermStart { n } => pick(&self.term_start, n),
        }
    }

    /// Sum of all retained coefficients for a grid of `n <= n_steps` steps —
    /// the discrete `L(nΔt)`.
    pub fn discrete_l(&self, n: usize) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        match self.axis {
            CouplingAxis::Z => {
                if n == 0 {
                    return total;
                }
                total += self.diag_first;
                for j in 1..n {
                    total += self.case_value(EtaCase::DiagInterior);
                    for lag in 1..j {
                        total += self.case_value(EtaCase::Interior { lag });
                    }
                    total += self.case_value(EtaCase::StartCol { j });
                }
                total += self.diag_last;
                for lag in 1..n {
                    total += self.case_value(EtaCase::TermRow { lag });
                }
                total += self.case_value(EtaCase::TermStart { n });
            }
            CouplingAxis::X => {
                for j in 0..n {
                    total += self.case_value(EtaCase::XDiag);
                    for lag in 1..=j {
                        total += self.case_value(EtaCase::XOff { lag });
                    }
                }
            }
        }
        total
    }
}

/// Copy of `table` with every entry at lag `(j-j')·Δt > t_mem` set to zero.
pub fn truncate_eta(table: &EtaTable, t_mem: f64) -> Result<EtaTable, BathError> {
    if t_mem <= 0.0 {
        return Err(BathError::Domain("t_mem must be > 0".into()));
    }
    let n_tot = table.n_steps as f64 * table.dt;
    if t_mem > n_tot * (1.0 + 1e-9) {
        return Err(BathError::Domain(format!(
            "t_mem = {t_mem} exceeds the grid span {n_tot}"
        )));
    }
    // lags with lag*dt <= t_mem survive (tolerant to roundoff on the grid)
    let mem_steps = ((t_mem / table.dt) * (1.0 + 1e-9)).floor() as usize;
    let mut out = table.clone();
    out.mem_steps = mem_steps.min(table.n_steps);
    let zero = Complex64::new(0.0, 0.0);
    for v in [
        &mut out.interior,
        &mut out.start_col,
        &mut out.term_row,
        &mut out.term_start,
    ] {
        for (lag, e) in v.iter_mut().enumerate() {
            if lag > out.mem_steps {
                *e = zero;
            }
        }
    }
    Ok(out)
}

/// How `L(t)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LMode {
    /// Double sum of table coefficients on a grid of step `dt`.
    DiscreteSum { dt: f64 },
    /// Double time quadrature of the correlation function.
    ContinuousQuadrature,
}

/// `L(t)` together with its derivative `L̇(t) = ∫_0^t C(τ)dτ`.
#[derive(Debug, Clone, Copy)]
pub struct LDiagnostic {
    pub t: f64,
    pub value: Complex64,
    pub derivative: Complex64,
}

/// The double time integral `L(t) = ∫_0^t dt' ∫_0^{t'} dt'' C(t'-t'')`,
/// either summed from influence coefficients or by quadrature.
pub fn l_of_t(bath: &BathSpec, t: f64, mode: LMode) -> Result<LDiagnostic, BathError> {
    if t < 0.0 {
        return Err(BathError::Domain("t must be >= 0".into()));
    }
    let value = match mode {
        LMode::DiscreteSum { dt } => {
            let steps = (t / dt).round();
            if (t - steps * dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(BathError::Domain(format!(
                    "t = {t} is not a multiple of dt = {dt}"
                )));
            }
            let n = steps as usize;
            EtaTable::build(bath, n.max(1), dt)?.discrete_l(n)
        }
        LMode::ContinuousQuadrature => l_quadrature(bath, t)?,
    };
    Ok(LDiagnostic {
        t,
        value,
        derivative: l_dot(bath, t)?,
    })
}

/// `(1 - e^{-ix})/(ix)`, stable at small x.
fn edge_factor(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        Complex64::new(1.0 - x * x / 6.0, -x / 2.0 + x * x * x / 24.0)
    } else {
        (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -x).exp()) / Complex64::new(0.0, x)
    }
}

/// `L̇(t) = ∫_0^t C(τ)dτ`; the time integral exchanges with the kernel
/// integral, leaving `(1/2π) ∫ dω K(ω) t (1 - e^{-iωt})/(iωt)`.
pub fn l_dot(bath: &BathSpec, t: f64) -> Result<Complex64, BathError> {
    if t == 0.0 || bath.spectral.coupling == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = bath.omega_window();
    let f = |omega: f64| bath.kernel(omega) * t * edge_factor(omega * t);
    let panels = (32.0 + w * t / 3.0).ceil() as usize;
    let val = quad::integrate(&f, -w, w, panels, 1e-10)?;
    Ok(val / (2.0 * std::f64::consts::PI))
}

/// `L(t) = ∫_0^t (t-u) C(u) du`, the collapsed double integral; in
/// frequency form this is the triangle-cell factor at width `t`.
fn l_quadrature(bath: &BathSpec, t: f64) -> Result<Complex64, BathError> {
    if t == 0.0 || bath.spectral.coupling == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = bath.omega_window();
    let f = |omega: f64| bath.kernel(omega) * t * t * triangle_factor(omega * t);
    let panels = (32.0 + w * t / 3.0).ceil() as usize;
    let val = quad::integrate(&f, -w, w, panels, 1e-10)?;
    Ok(val / (2.0 * std::f64::consts::PI))
}
