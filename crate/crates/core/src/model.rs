//! Two-coil Hamiltonians, the dissipation matrix, and the adiabatic basis.
//!
//! Amplitudes evolve as `db/dt = −jHb` in the rotating frame. Loss is never
//! written into `H`; it enters only through [`DissipationMatrix`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::DensityMatrix2;
use crate::error::{invalid, Result, WptError};
use crate::schedules::{cd_terms_at, mixing_angle, CdOptions, DriveSchedule};

/// Physical parameters of the source/drain pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoilPair {
    /// Source intrinsic loss rate (1/s).
    pub gamma_s: f64,
    /// Drain intrinsic loss rate (1/s).
    pub gamma_d: f64,
    /// Work-extraction rate from the drain (1/s).
    pub gamma_w: f64,
    /// Reference resonance of the source (rad/s); lab-frame oracle only.
    pub omega_s0: f64,
    /// Reference resonance of the drain (rad/s); lab-frame oracle only.
    pub omega_d0: f64,
    /// Source inductance (H).
    pub l_s: f64,
    /// Drain inductance (H).
    pub l_d: f64,
}

impl Default for CoilPair {
    fn default() -> Self {
        Self {
            gamma_s: 4e3,
            gamma_d: 4e3,
            gamma_w: 0.0,
            omega_s0: 1e6,
            omega_d0: 1.2e6,
            l_s: 1e-4,
            l_d: 1e-4,
        }
    }
}

impl CoilPair {
    pub fn lossless() -> Self {
        Self {
            gamma_s: 0.0,
            gamma_d: 0.0,
            gamma_w: 0.0,
            ..Self::default()
        }
    }

    pub fn with_losses(gamma_s: f64, gamma_d: f64, gamma_w: f64) -> Self {
        Self {
            gamma_s,
            gamma_d,
            gamma_w,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_s", self.gamma_s),
            ("gamma_d", self.gamma_d),
            ("gamma_w", self.gamma_w),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(
                    name,
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn validate_lab(&self) -> Result<()> {
        self.validate()?;
        if !(self.omega_s0 > 0.0) {
            return Err(invalid(
                "omega_s0",
                "must be positive for the lab-frame oracle",
            ));
        }
        if !(self.omega_d0 > 0.0) {
            return Err(invalid(
                "omega_d0",
                "must be positive for the lab-frame oracle",
            ));
        }
        Ok(())
    }
}

/// Frame a [`Hamiltonian2`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Rotating,
    Tqd,
    Lab,
}

/// Hermitian 2×2 Hamiltonian in rad/s, basis `[b_s, b_d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian2 {
    pub h11: Complex64,
    pub h12: Complex64,
    pub h21: Complex64,
    pub h22: Complex64,
    pub frame: Frame,
}

impl Hamiltonian2 {
    pub fn real_symmetric(diag: f64, off: f64, frame: Frame) -> Self {
        Self {
            h11: Complex64::new(diag, 0.0),
            h12: Complex64::new(off, 0.0),
            h21: Complex64::new(off, 0.0),
            h22: Complex64::new(-diag, 0.0),
            frame,
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.h11, self.h12], [self.h21, self.h22]]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.h11.im.abs() <= tol
            && self.h22.im.abs() <= tol
            && (self.h12 - self.h21.conj()).norm() <= tol
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.h11.re + self.h22.re);
        let half_gap = (0.25 * (self.h11.re - self.h22.re).powi(2) + self.h12.norm_sqr()).sqrt();
        (mean - half_gap, mean + half_gap)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.h11.norm_sqr() + self.h12.norm_sqr() + self.h21.norm_sqr() + self.h22.norm_sqr())
            .sqrt()
    }
}

/// Diagonal loss matrix `diag(Γs, Γd + Γw)` in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationMatrix {
    pub g11: f64,
    pub g22: f64,
}

pub fn dissipation_matrix(coils: &CoilPair) -> DissipationMatrix {
    DissipationMatrix {
        g11: coils.gamma_s,
        g22: coils.gamma_d + coils.gamma_w,
    }
}

/// `H = [[Δ/2, −κ], [−κ, −Δ/2]]`.
pub fn rotating_hamiltonian(schedule: &DriveSchedule, t: f64) -> Result<Hamiltonian2> {
    let s = schedule.sample(t)?;
    Ok(Hamiltonian2::real_symmetric(
        0.5 * s.delta,
        -s.kappa,
        Frame::Rotating,
    ))
}

/// `H = [[(Δ−φ̇)/2, −κ_eff], [−κ_eff, −(Δ−φ̇)/2]]`.
///
/// The off-diagonal carries the same sign as [`rotating_hamiltonian`], so a
/// static schedule gives identical matrices.
pub fn tqd_hamiltonian(schedule: &DriveSchedule, t: f64, opts: &CdOptions) -> Result<Hamiltonian2> {
    let s = schedule.sample(t)?;
    let cd = cd_terms_at(&s, schedule.window(), opts)?;
    Ok(Hamiltonian2::real_symmetric(
        0.5 * cd.delta_eff,
        -cd.kappa_eff,
        Frame::Tqd,
    ))
}

/// Real rotation whose columns are the adiabatic states
/// `B₊ = (cos Θ/2, −sin Θ/2)` and `B₋ = (sin Θ/2, cos Θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation2 {
    pub theta: f64,
    pub m: [[f64; 2]; 2],
}

impl Rotation2 {
    pub fn plus(&self) -> [f64; 2] {
        [self.m[0][0], self.m[1][0]]
    }

    pub fn minus(&self) -> [f64; 2] {
        [self.m[0][1], self.m[1][1]]
    }

    pub fn transpose(&self) -> [[f64; 2]; 2] {
        [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]]
    }
}

pub fn adiabatic_basis(kappa: f64, delta: f64) -> Result<Rotation2> {
    let theta = mixing_angle(kappa, delta)?;
    let (s, c) = (0.5 * theta).sin_cos();
    Ok(Rotation2 {
        theta,
        m: [[c, s], [-s, c]],
    })
}

fn population_along(rho: &DensityMatrix2, v: [Complex64; 2]) -> f64 {
    // ⟨v|ρ|v⟩
    let r = rho.as_matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += v[i].conj() * r[i][j] * v[j];
        }
    }
    acc.re
}

/// Populations `(p₊, p₋)` of `ρ` in the instantaneous adiabatic basis.
pub fn adiabatic_populations(rho: &DensityMatrix2, kappa: f64, delta: f64) -> Result<(f64, f64)> {
    adiabatic_populations_in_frame(rho, kappa, delta, 0.0)
}

/// Like [`adiabatic_populations`] for a state held in the counterdiabatic
/// frame, where diabatic amplitudes are `b = diag(e^{−jφ/2}, e^{jφ/2}) b'`.
pub fn adiabatic_populations_in_frame(
    rho: &DensityMatrix2,
    kappa: f64,
    delta: f64,
    frame_phase: f64,
) -> Result<(f64, f64)> {
    if !rho.is_hermitian(1e-9 * rho.trace().abs().max(1.0)) {
        return Err(WptError::InvalidState(
            "density matrix is not Hermitian".into(),
        ));
    }
    let u = adiabatic_basis(kappa, delta)?;
    let phase = Complex64::from_polar(1.0, 0.5 * frame_phase);
    // B expressed in the primed frame: b' = diag(e^{jφ/2}, e^{−jφ/2}) b
    let lift = |v: [f64; 2]| [phase * v[0], phase.conj() * v[1]];
    Ok((
        population_along(rho, lift(u.plus())),
        population_along(rho, lift(u.minus())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{make_lz_schedule, PhiDotMode};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rotating_hamiltonian_examples() {
        let s = make_lz_schedule(4e4, 0.0, 3e9, 1e-4).unwrap();
        let h = rotating_hamiltonian(&s, 1e-4).unwrap();
        assert_eq!(h.matrix(), [[c(0.0), c(-4e4)], [c(-4e4), c(0.0)]]);
        let (lo, hi) = h.eigenvalues();
        assert_relative_eq!(lo, -4e4);
        assert_relative_eq!(hi, 4e4);

        let fig2a = make_lz_schedule(4e4, 2e5, 3e9, 1e-4).unwrap();
        let h = rotating_hamiltonian(&fig2a, 0.0).unwrap();
        assert_relative_eq!(h.h11.re, -5e4, max_relative = 1e-12);
        assert_relative_eq!(h.h22.re, 5e4, max_relative = 1e-12);
        assert_eq!(h.h12, c(-4e4));
        assert_eq!(h.frame, Frame::Rotating);
    }

    #[test]
    fn decoupled_hamiltonian_is_diagonal() {
        let table = crate::schedules::SampledTable {
            t: vec![0.0, 1.0],
            delta: vec![3.0, 3.0],
            kappa: vec![0.0, 0.0],
        };
        let s = DriveSchedule::Sampled(crate::schedules::SampledSchedule::new(table).unwrap());
        let h = rotating_hamiltonian(&s, 0.5).unwrap();
        assert_eq!(h.h12, c(0.0));
        assert_relative_eq!(h.h11.re, 1.5);
        assert_relative_eq!(h.h22.re, -1.5);
    }

    #[test]
    fn tqd_reduces_to_rotating_without_sweep() {
        let s = make_lz_schedule(4e4, 1.5e5, 0.0, 1e-4).unwrap();
        for mode in [PhiDotMode::Exact, PhiDotMode::Verbatim, PhiDotMode::Off] {
            let opts = CdOptions {
                phi_dot_mode: mode,
                kappa_a_ramp: None,
            };
            for t in [0.0, 3e-5, 2e-4] {
                let a = tqd_hamiltonian(&s, t, &opts).unwrap();
                let b = rotating_hamiltonian(&s, t).unwrap();
                assert_eq!(a.matrix(), b.matrix());
            }
        }
    }

    #[test]
    fn tqd_off_diagonal_at_crossing_fig2d() {
        let s = make_lz_schedule(4e2, 2e5, 3e11, 1e-6).unwrap();
        let tc = 1e-6 - 2e5 / 3e11;
        let opts = CdOptions {
            phi_dot_mode: PhiDotMode::Verbatim,
            kappa_a_ramp: None,
        };
        let h = tqd_hamiltonian(&s, tc, &opts).unwrap();
        let want = (1.6e5_f64 + (3e11_f64 / 1.6e3).powi(2)).sqrt();
        assert_relative_eq!(-h.h12.re, want, max_relative = 1e-6);
        assert!((-h.h12.re - 1.875e8).abs() / 1.875e8 < 1e-3);
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn dissipation_matrix_examples() {
        let d = dissipation_matrix(&CoilPair::with_losses(4e3, 4e3, 1e4));
        assert_eq!((d.g11, d.g22), (4e3, 1.4e4));
        let d = dissipation_matrix(&CoilPair::lossless());
        assert_eq!((d.g11, d.g22), (0.0, 0.0));
        let d = dissipation_matrix(&CoilPair::with_losses(0.0, 0.0, 1e4));
        assert_eq!((d.g11, d.g22), (0.0, 1e4));
        // only the drain sum matters
        let a = dissipation_matrix(&CoilPair::with_losses(1.0, 3.0, 7.0));
        let b = dissipation_matrix(&CoilPair::with_losses(1.0, 7.0, 3.0));
        assert_eq!(a, b);
        assert!(CoilPair::with_losses(-1.0, 0.0, 0.0).validate().is_err());
    }

    #[test]
    fn adiabatic_basis_examples() {
        let u = adiabatic_basis(0.0, 1.0).unwrap();
        assert_eq!(u.m, [[1.0, 0.0], [0.0, 1.0]]);
        // Θ = π
        let u = adiabatic_basis(0.0, -1.0).unwrap();
        assert_relative_eq!(u.theta, PI);
        let p = u.plus();
        assert!(p[0].abs() < 1e-15);
        assert_relative_eq!(p[1], -1.0);
        let u = adiabatic_basis(1.0, 0.0).unwrap();
        assert_relative_eq!(u.plus()[0].powi(2), 0.5, max_relative = 1e-14);
        assert!(adiabatic_basis(0.0, 0.0).is_err());
    }

    #[test]
    fn adiabatic_population_examples() {
        let src = DensityMatrix2::source();
        let (p, m) = adiabatic_populations(&src, 0.0, 1.0).unwrap();
        assert_relative_eq!(p, 1.0);
        assert!(m.abs() < 1e-15);
        let (p, m) = adiabatic_populations(&src, 1.0, 0.0).unwrap();
        assert_relative_eq!(p, 0.5, max_relative = 1e-14);
        assert_relative_eq!(m, 0.5, max_relative = 1e-14);
        let mixed = DensityMatrix2::diagonal(0.5, 0.5);
        for (k, d) in [(1.0, 0.3), (2.0, -5.0), (0.1, 7.0)] {
            let (p, m) = adiabatic_populations(&mixed, k, d).unwrap();
            assert_relative_eq!(p, 0.5, max_relative = 1e-14);
            assert_relative_eq!(m, 0.5, max_relative = 1e-14);
        }
        let bad = DensityMatrix2 {
            ss: c(1.0),
            sd: Complex64::new(0.0, 0.3),
            ds: Complex64::new(0.0, 0.3),
            dd: c(0.0),
        };
        assert!(matches!(
            adiabatic_populations(&bad, 1.0, 1.0),
            Err(WptError::InvalidState(_))
        ));
    }

    proptest! {
        #[test]
        fn rotating_eigenvalues_closed_form(kappa in 0.0f64..1e6, delta in -1e6f64..1e6) {
            let table = crate::schedules::SampledTable { t: vec![0.0, 1.0], delta: vec![delta; 2], kappa: vec![kappa; 2] };
            let s = DriveSchedule::Sampled(crate::schedules::SampledSchedule::new(table).unwrap());
            let h = rotating_hamiltonian(&s, 0.5).unwrap();
            let want = 0.5 * (delta * delta + 4.0 * kappa * kappa).sqrt();
            let (lo, hi) = h.eigenvalues();
            prop_assert!((hi - want).abs() <= 1e-12 * want.max(1e-300));
            prop_assert!((lo + want).abs() <= 1e-12 * want.max(1e-300));
        }

        #[test]
        #[allow(clippy::needless_range_loop)]
        fn adiabatic_basis_orthogonal_and_diagonalizing(kappa in 1e-3f64..1e6, delta in -1e6f64..1e6) {
            let u = adiabatic_basis(kappa, delta).unwrap();
            let ut = u.transpose();
            for i in 0..2 {
                for j in 0..2 {
                    let dot: f64 = (0..2).map(|k| ut[i][k] * u.m[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-14);
                }
            }
            // Uᵀ H U
            let h = [[0.5 * delta, -kappa], [-kappa, -0.5 * delta]];
            let mut hu = [[0.0; 2]; 2];
            for i in 0..2 { for j in 0..2 { hu[i][j] = (0..2).map(|k| h[i][k] * u.m[k][j]).sum(); } }
            let off: f64 = (0..2).map(|k| ut[0][k] * hu[k][1]).sum();
            let norm = (0.5 * delta * delta + 2.0 * kappa * kappa).sqrt();
            prop_assert!(off.abs() < 1e-10 * norm);
            // B₊ carries the upper eigenvalue
            let top: f64 = (0..2).map(|k| ut[0][k] * hu[k][0]).sum();
            prop_assert!(top >= -1e-9 * norm);
        }
    }
}
