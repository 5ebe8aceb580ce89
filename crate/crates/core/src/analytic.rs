//! Closed-form pure-dephasing solutions.
//!
//! With the bath coupled through σ_x the coupling operator commutes with the
//! Hamiltonian, only the four constant paths survive, and the reduced density
//! matrix factorises per element in the σ_x eigenbasis:
//!
//! ```text
//! ρ_{ab}(t) = ρ_{ab}(0) · e^{-i(ε_a - ε_b) t}
//!                       · e^{-(a - b)² Re L(t)}
//!                       · e^{-i(a² - b²) Im L(t)}
//! ```
//!
//! with `a, b = ±1`. The decay exponent carries the squared eigenvalue
//! difference (the linear form would grow for `a = -1, b = +1`); the Im L
//! factor is identically 1 for Pauli eigenvalues, so there is no frequency
//! renormalisation. `L` may come from the discrete coefficient sums (then
//! the result reproduces the 4-path propagation arithmetic) or from
//! quadrature.

use crate::bath::{self, BathError, BathSpec, CouplingAxis, EtaTable, LMode};
use crate::tls::{DensityMatrix, Spin, TwoLevelSystem};
use num_complex::Complex64;

/// A pure-dephasing trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct DephasingSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

fn check_bath(bath: &BathSpec) -> Result<(), BathError> {
    if bath.axis != CouplingAxis::X {
        return Err(BathError::Domain(
            "analytic dephasing requires an X-axis bath".into(),
        ));
    }
    Ok(())
}

/// Apply the dephasing factors for a given `L` to `rho0` (σ_z basis in and
/// out; the factors act element-wise in the σ_x basis).
fn apply_l(tls: &TwoLevelSystem, rho0: &DensityMatrix, t: f64, l: Complex64) -> DensityMatrix {
    let mut rho_x = rho0.to_basis_x();
    for a in Spin::BOTH {
        for b in Spin::BOTH {
            let (av, bv) = (a.value(), b.value());
            let coherent = Complex64::new(0.0, -(tls.energy(a) - tls.energy(b)) * t).exp();
            let decay = (-(av - bv) * (av - bv) * l.re).exp();
            let renorm = Complex64::new(0.0, -(av * av - bv * bv) * l.im).exp();
            rho_x.elements[a.idx()][b.idx()] *= coherent * decay * renorm;
        }
    }
    rho_x.to_basis_z_from_x()
}

/// Exact dephasing solution at time `t`.
pub fn analytic_dephasing(
    bath: &BathSpec,
    tls: &TwoLevelSystem,
    rho0: &DensityMatrix,
    t: f64,
    l_mode: LMode,
) -> Result<DensityMatrix, BathError> {
    check_bath(bath)?;
    let l = bath::l_of_t(bath, t, l_mode)?.value;
    Ok(apply_l(tls, rho0, t, l))
}

/// Exact dephasing trajectory over `n_steps` grid steps, with `L` summed
/// incrementally from an influence-coefficient table (possibly truncated).
///
/// The table must be an X-axis table covering at least `n_steps` steps; the
/// sums are then identical to what the 4-path propagation accumulates.
pub fn dephasing_trajectory(
    table: &EtaTable,
    tls: &TwoLevelSystem,
    rho0: &DensityMatrix,
    n_steps: usize,
) -> Result<DephasingSolution, BathError> {
    if table.axis != CouplingAxis::X {
        return Err(BathError::Domain("dephasing table must be X-axis".into()));
    }
    if table.n_steps < n_steps {
        return Err(BathError::Domain(format!(
            "table covers {} steps, {} requested",
            table.n_steps, n_steps
        )));
    }
    let dt = table.dt;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(*rho0);
    let mut l = Complex64::new(0.0, 0.0);
    for step in 1..=n_steps {
        // row j = step-1 of the dephasing table: lags 0..=min(j, mem)
        let j = step - 1;
        l += table.value(j, j)?;
        for lag in 1..=j.min(table.mem_steps) {
            l += table.value(j, j - lag)?;
        }
        times.push(step as f64 * dt);
        states.push(apply_l(tls, rho0, step as f64 * dt, l));
    }
    Ok(DephasingSolution { times, states })
}

/// Long-time closed form under a sharp memory cut-off: beyond `t_mem` the
/// double integral grows linearly, `L(t) = L(t_mem) + L̇(t_mem)·(t - t_mem)`,
/// so coherences decay at the spurious constant rate `(a-b)² Re L̇(t_mem)`.
pub fn analytic_truncated_dephasing(
    bath: &BathSpec,
    tls: &TwoLevelSystem,
    rho0: &DensityMatrix,
    t: f64,
    t_mem: f64,
) -> Result<DensityMatrix, BathError> {
    check_bath(bath)?;
    if t_mem <= 0.0 {
        return Err(BathError::Domain("t_mem must be > 0".into()));
    }
    if t < t_mem {
        return Err(BathError::Domain(format!(
            "closed form valid past the memory horizon: t = {t} < t_mem = {t_mem}"
        )));
    }
    let at_mem = bath::l_of_t(bath, t_mem, LMode::ContinuousQuadrature)?;
    let l = at_mem.value + at_mem.derivative * (t - t_mem);
    Ok(apply_l(tls, rho0, t, l))
}
