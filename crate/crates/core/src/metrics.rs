//! Figures of merit computed from trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Trajectory, TrajectoryKind};
use crate::error::{Result, WptError};
use crate::model::{dissipation_matrix, CoilPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub eta: f64,
    /// `∫ρ_ss dt` (s)
    pub integral_source: f64,
    /// `∫ρ_dd dt` (s)
    pub integral_drain: f64,
    pub window: f64,
    pub protocol: TrajectoryKind,
}

/// Composite trapezoid rule over paired abscissae and ordinates.
pub fn trapezoid(x: impl IntoIterator<Item = f64>, y: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (xi, yi) in x.into_iter().zip(y) {
        if let Some((xp, yp)) = prev {
            acc += 0.5 * (xi - xp) * (yi + yp);
        }
        prev = Some((xi, yi));
    }
    acc
}

/// Work efficiency
/// `η = Γw∫ρ_dd / (Γs∫ρ_ss + (Γd+Γw)∫ρ_dd)` over the trajectory window.
pub fn efficiency(traj: &Trajectory, coils: &CoilPair) -> Result<EfficiencyReport> {
    let integral_source = trapezoid(traj.times(), traj.samples.iter().map(|s| s.rho.ss.re));
    let integral_drain = trapezoid(traj.times(), traj.samples.iter().map(|s| s.rho.dd.re));
    let g = dissipation_matrix(coils);
    let denom = g.g11 * integral_source + g.g22 * integral_drain;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(WptError::UndefinedEfficiency);
    }
    Ok(EfficiencyReport {
        eta: coils.gamma_w * integral_drain / denom,
        integral_source,
        integral_drain,
        window: traj.window(),
        protocol: traj.meta.kind,
    })
}

/// Final fractional drain energy.
pub fn transfer_fidelity(traj: &Trajectory) -> f64 {
    traj.last().frac_d
}

/// Energy-balance residual
/// `|tr ρ(0) − tr ρ(T) − c∫(Γs ρ_ss + (Γd+Γw) ρ_dd) dt|`, where `c` is the
/// loss-convention factor the trajectory was integrated with (2 when rates
/// are amplitude rates, which gives the `2Γs ρ_ss + 2(Γd+Γw) ρ_dd` form).
pub fn doublecheck_integrals(traj: &Trajectory, coils: &CoilPair) -> f64 {
    let g = dissipation_matrix(coils);
    let c = traj.meta.options.losses.energy_factor();
    let lost = c * trapezoid(
        traj.times(),
        traj.samples
            .iter()
            .map(|s| g.g11 * s.rho.ss.re + g.g22 * s.rho.dd.re),
    );
    (traj.first().rho.trace() - traj.last().rho.trace() - lost).abs()
}
