//! Two-level-system algebra: σ_x/σ_z eigenbases, exact segment propagators
//! for all three bath configurations, and density-matrix utilities.
//!
//! The system Hamiltonian is `H = (Δ/2) σ_x`; Δ sets the global time unit.
//! All matrices live in the σ_z eigenbasis unless stated otherwise, with the
//! phase convention `|x±⟩ = (|z+⟩ ± |z-⟩)/√2` (real positive components), so
//! every amplitude below is reproducible bit for bit.

use crate::bath::CouplingAxis;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum TlsError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// ±1 eigenvalue of a Pauli coupling operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Plus, Spin::Minus];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    /// 0 for `+`, 1 for `-`; the packed-history bit.
    #[inline]
    pub fn bit(self) -> u64 {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    #[inline]
    pub fn from_bit(b: u64) -> Spin {
        if b & 1 == 0 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }

    /// Index into 2x2 matrices: `+` -> 0, `-` -> 1.
    #[inline]
    pub fn idx(self) -> usize {
        self.bit() as usize
    }
}

/// The symmetric two-level system `H = (Δ/2) σ_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSystem {
    /// Tunneling amplitude Δ > 0.
    pub tunneling: f64,
}

impl TwoLevelSystem {
    pub fn new(tunneling: f64) -> Result<Self, TlsError> {
        if !(tunneling > 0.0) {
            return Err(TlsError::Domain("tunneling amplitude must be > 0".into()));
        }
        Ok(Self { tunneling })
    }

    /// Energy of the σ_x eigenvector with eigenvalue `x`: `±Δ/2`.
    #[inline]
    pub fn energy(&self, x: Spin) -> f64 {
        0.5 * self.tunneling * x.value()
    }
}

/// Orthonormal eigenvectors of σ_x or σ_z, expressed in the σ_z basis.
#[derive(Debug, Clone, Copy)]
pub struct EigenBasis {
    pub axis: CouplingAxis,
    /// `vectors[s]` is the eigenvector with eigenvalue `s` (`+` then `-`).
    pub vectors: [[Complex64; 2]; 2],
}

impl EigenBasis {
    pub fn of(axis: CouplingAxis) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match axis {
            CouplingAxis::Z => EigenBasis {
                axis,
                vectors: [[one, 0.0.into()], [0.0.into(), one]],
            },
            CouplingAxis::X => EigenBasis {
                axis,
                vectors: [[r, r], [r, -r]],
            },
        }
    }
}

/// `⟨z_row | x_col⟩` under the fixed phase convention; always `±1/√2`.
#[inline]
pub fn overlap_zx(z: Spin, x: Spin) -> f64 {
    match (z, x) {
        (Spin::Minus, Spin::Minus) => -std::f64::consts::FRAC_1_SQRT_2,
        _ => std::f64::consts::FRAC_1_SQRT_2,
    }
}

/// Propagation direction of one path branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// `⟨σ_to | e^{∓i H Δt} | σ_from⟩` in the σ_z basis (minus sign forward).
///
/// `e^{-iHt} = cos(Δt/2)·1 - i sin(Δt/2)·σ_x` exactly, so isolated dynamics
/// carries no splitting error.
pub fn segment_propagator_general(
    tls: &TwoLevelSystem,
    dt: f64,
    s_to: Spin,
    s_from: Spin,
    direction: Direction,
) -> Complex64 {
    let half = 0.5 * tls.tunneling * dt;
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    if s_to == s_from {
        Complex64::new(half.cos(), 0.0)
    } else {
        Complex64::new(0.0, sign * half.sin())
    }
}

/// One forward/backward segment of the two-bath propagator: the z-basis
/// step is mediated by a pair of intermediate σ_x eigenvectors,
/// `|z_from⟩ -> |x_mid⟩ -> |z_to⟩` on both branches.
///
/// The magnitude is exactly 1/4 for every argument combination because all
/// z/x overlaps have magnitude `1/√2`.
pub fn segment_propagator_xz(
    tls: &TwoLevelSystem,
    dt: f64,
    z_to: (Spin, Spin),
    x_mid: (Spin, Spin),
    z_from: (Spin, Spin),
) -> Complex64 {
    let fwd = overlap_zx(z_to.0, x_mid.0)
        * overlap_zx(z_from.0, x_mid.0)
        * Complex64::new(0.0, -tls.energy(x_mid.0) * dt).exp();
    let bwd = overlap_zx(z_from.1, x_mid.1)
        * overlap_zx(z_to.1, x_mid.1)
        * Complex64::new(0.0, tls.energy(x_mid.1) * dt).exp();
    fwd * bwd
}

/// 2x2 reduced density matrix in the σ_z eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub elements: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    pub fn zero() -> Self {
        DensityMatrix {
            elements: [[Complex64::new(0.0, 0.0); 2]; 2],
        }
    }

    /// Pure σ_z = +1 state, the default preparation.
    pub fn z_plus() -> Self {
        let mut m = Self::zero();
        m.elements[0][0] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn from_elements(elements: [[Complex64; 2]; 2]) -> Self {
        DensityMatrix { elements }
    }

    #[inline]
    pub fn get(&self, row: Spin, col: Spin) -> Complex64 {
        self.elements[row.idx()][col.idx()]
    }

    pub fn trace(&self) -> Complex64 {
        self.elements[0][0] + self.elements[1][1]
    }

    /// `‖ρ‖ = |Tr ρ|`; under amplitude filtering the path sum leaks trace,
    /// which is what this norm tracks.
    pub fn norm(&self) -> f64 {
        self.trace().norm()
    }

    /// Max-abs deviation from hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let e = &self.elements;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((e[r][c] - e[c][r].conj()).norm());
            }
        }
        worst
    }

    /// `⟨σ_z⟩ = ρ_{++} - ρ_{--}`.
    pub fn sigma_z_expectation(&self) -> f64 {
        (self.elements[0][0] - self.elements[1][1]).re
    }

    /// Conjugate by the z/x basis change (its own inverse).
    pub fn to_basis_x(&self) -> DensityMatrix {
        hadamard_conjugate(self)
    }

    pub fn to_basis_z_from_x(&self) -> DensityMatrix {
        hadamard_conjugate(self)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.elements[r][c] - other.elements[r][c]).norm());
            }
        }
        worst
    }

    pub fn scale(&self, f: f64) -> DensityMatrix {
        let mut out = *self;
        for row in out.elements.iter_mut() {
            for e in row.iter_mut() {
                *e *= f;
            }
        }
        out
    }
}

/// `H ρ H` with the Hadamard-like z/x change of basis.
fn hadamard_conjugate(rho: &DensityMatrix) -> DensityMatrix {
    let e = &rho.elements;
    let mut out = DensityMatrix::zero();
    for (r, zr) in Spin::BOTH.iter().enumerate() {
        for (c, zc) in Spin::BOTH.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, xa) in Spin::BOTH.iter().enumerate() {
                for (b, xb) in Spin::BOTH.iter().enumerate() {
                    acc += overlap_zx(*zr, *xa) * e[a][b] * overlap_zx(*zc, *xb);
                }
            }
            out.elements[r][c] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tls() -> TwoLevelSystem {
        TwoLevelSystem::new(1.0).unwrap()
    }

    #[test]
    fn eigenbasis_orthonormal_and_mutually_unbiased() {
        for axis in [CouplingAxis::X, CouplingAxis::Z] {
            let b = EigenBasis::of(axis);
            for i in 0..2 {
                for j in 0..2 {
                    let dot: Complex64 = (0..2)
                        .map(|k| b.vectors[i][k].conj() * b.vectors[j][k])
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).norm() < 1e-15);
                }
            }
        }
        let x = EigenBasis::of(CouplingAxis::X);
        let z = EigenBasis::of(CouplingAxis::Z);
        for xv in &x.vectors {
            for zv in &z.vectors {
                let dot: Complex64 = (0..2).map(|k| zv[k].conj() * xv[k]).sum();
                assert!((dot.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn segment_limits() {
        let t = tls();
        // dt -> 0: identity
        let d = segment_propagator_general(&t, 1e-12, Spin::Plus, Spin::Plus, Direction::Forward);
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let o = segment_propagator_general(&t, 1e-12, Spin::Plus, Spin::Minus, Direction::Forward);
        assert!(o.norm() < 1e-12);
        // half Rabi period: Δ·dt = π
        let pi = std::f64::consts::PI;
        let d = segment_propagator_general(&t, pi, Spin::Plus, Spin::Plus, Direction::Forward);
        assert!(d.norm() < 1e-15);
        let o = segment_propagator_general(&t, pi, Spin::Minus, Spin::Plus, Direction::Forward);
        assert!((o.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn segment_unitarity() {
        let t = tls();
        for dt in [0.1, 0.3, 1.7] {
            let mut u = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (r, to) in Spin::BOTH.iter().enumerate() {
                for (c, from) in Spin::BOTH.iter().enumerate() {
                    u[r][c] = segment_propagator_general(&t, dt, *to, *from, Direction::Forward);
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    let dot: Complex64 = (0..2).map(|k| u[k][i].conj() * u[k][j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn backward_is_conjugate_of_forward() {
        let t = tls();
        for to in Spin::BOTH {
            for from in Spin::BOTH {
                let f = segment_propagator_general(&t, 0.4, to, from, Direction::Forward);
                let b = segment_propagator_general(&t, 0.4, from, to, Direction::Backward);
                assert!((b - f.conj()).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn xz_segment_magnitude_quarter() {
        let t = tls();
        for zt in Spin::BOTH {
            for zt2 in Spin::BOTH {
                for xm in Spin::BOTH {
                    for xm2 in Spin::BOTH {
                        for zf in Spin::BOTH {
                            for zf2 in Spin::BOTH {
                                let g = segment_propagator_xz(
                                    &t,
                                    0.3,
                                    (zt, zt2),
                                    (xm, xm2),
                                    (zf, zf2),
                                );
                                assert!((g.norm() - 0.25).abs() < 1e-15);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn xz_segment_resolves_to_general() {
        // summing the intermediate σ_x pair with no influence weights must
        // reproduce forward × backward of the exact segment
        let t = tls();
        let dt = 0.3;
        for zt in Spin::BOTH {
            for zt2 in Spin::BOTH {
                for zf in Spin::BOTH {
                    for zf2 in Spin::BOTH {
                        let mut sum = Complex64::new(0.0, 0.0);
                        for xm in Spin::BOTH {
                            for xm2 in Spin::BOTH {
                                sum +=
                                    segment_propagator_xz(&t, dt, (zt, zt2), (xm, xm2), (zf, zf2));
                            }
                        }
                        let direct =
                            segment_propagator_general(&t, dt, zt, zf, Direction::Forward)
                                * segment_propagator_general(
                                    &t,
                                    dt,
                                    zf2,
                                    zt2,
                                    Direction::Backward,
                                );
                        assert!((sum - direct).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn xz_fixed_endpoints_paths_equal_magnitude() {
        let t = tls();
        let z = (Spin::Plus, Spin::Minus);
        let mags: Vec<f64> = Spin::BOTH
            .iter()
            .flat_map(|a| {
                Spin::BOTH
                    .iter()
                    .map(|b| segment_propagator_xz(&t, 0.3, z, (*a, *b), z).norm())
                    .collect::<Vec<_>>()
            })
            .collect();
        for m in &mags {
            assert!((m - mags[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_dynamics_exact() {
        // N segment steps of the exact exponential give ⟨σ_z⟩ = cos(Δ t)
        let t = tls();
        let dt = 0.37;
        let n = 40;
        let mut rho = DensityMatrix::z_plus();
        for _ in 0..n {
            let mut next = DensityMatrix::zero();
            for to_r in Spin::BOTH {
                for to_c in Spin::BOTH {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for fr_r in Spin::BOTH {
                        for fr_c in Spin::BOTH {
                            acc += segment_propagator_general(
                                &t,
                                dt,
                                to_r,
                                fr_r,
                                Direction::Forward,
                            ) * rho.get(fr_r, fr_c)
                                * segment_propagator_general(
                                    &t,
                                    dt,
                                    fr_c,
                                    to_c,
                                    Direction::Backward,
                                );
                        }
                    }
                    next.elements[to_r.idx()][to_c.idx()] = acc;
                }
            }
            rho = next;
        }
        let expect = (t.tunneling * dt * n as f64).cos();
        assert!((rho.sigma_z_expectation() - expect).abs() < 1e-12);
        assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn norm_and_basis_roundtrip() {
        let rho = DensityMatrix::z_plus();
        assert!((rho.norm() - 1.0).abs() < 1e-15);
        assert!((rho.scale(0.94).norm() - 0.94).abs() < 1e-15);
        let mut mixed = DensityMatrix::zero();
        mixed.elements[0][0] = Complex64::new(0.6, 0.0);
        mixed.elements[1][1] = Complex64::new(0.4, 0.0);
        mixed.elements[0][1] = Complex64::new(0.2, 0.1);
        mixed.elements[1][0] = Complex64::new(0.2, -0.1);
        let round = mixed.to_basis_x().to_basis_z_from_x();
        assert!(mixed.max_abs_diff(&round) < 1e-15);
    }
}
