//! Coupling strength versus coil separation, and the distance study built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_master, DensityMatrix2, Protocol, SolverOptions};
use crate::error::{invalid, Result, WptError};
use crate::metrics::{doublecheck_integrals, efficiency};
use crate::model::CoilPair;
use crate::schedules::{counterdiabatic_terms, make_lz_schedule, LandauZener};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceForm {
    /// `κ_ref (d_ref/d)ⁿ`
    PowerLaw,
    /// `κ_ref / (1 + (d/d_ref)ⁿ)`
    #[default]
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceModel {
    pub kappa_ref: f64,
    pub d_ref: f64,
    pub exponent: f64,
    pub form: DistanceForm,
}

impl Default for DistanceModel {
    /// Saturating cube law with `κ(0) = 4e4 rad/s` and `κ(2 m) = 4e3 rad/s`.
    fn default() -> Self {
        Self {
            kappa_ref: 4e4,
            d_ref: 2.0 / 9f64.cbrt(),
            exponent: 3.0,
            form: DistanceForm::Saturating,
        }
    }
}

impl DistanceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_ref > 0.0) {
            return Err(invalid("kappa_ref", "must be positive"));
        }
        if !(self.d_ref > 0.0) {
            return Err(invalid("d_ref", "must be positive"));
        }
        if !(self.exponent > 0.0) {
            return Err(invalid("exponent", "must be positive"));
        }
        Ok(())
    }
}

pub fn kappa_of_distance(model: &DistanceModel, d: f64) -> Result<f64> {
    model.validate()?;
    match model.form {
        DistanceForm::PowerLaw if d > 0.0 => {
            Ok(model.kappa_ref * (model.d_ref / d).powf(model.exponent))
        }
        DistanceForm::Saturating if d >= 0.0 => {
            Ok(model.kappa_ref / (1.0 + (d / model.d_ref).powf(model.exponent)))
        }
        _ => Err(WptError::Domain { d }),
    }
}

/// `κ = M√(ωsωd/(Ls Ld))`
pub fn kappa_from_inductance(
    mutual: f64,
    omega_s: f64,
    omega_d: f64,
    l_s: f64,
    l_d: f64,
) -> Result<f64> {
    if !(mutual >= 0.0) {
        return Err(invalid("mutual", "must be non-negative"));
    }
    for (name, v) in [
        ("omega_s", omega_s),
        ("omega_d", omega_d),
        ("l_s", l_s),
        ("l_d", l_d),
    ] {
        if !(v > 0.0) {
            return Err(invalid(name, "must be positive"));
        }
    }
    Ok(mutual * (omega_s * omega_d / (l_s * l_d)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub d: f64,
    pub kappa: f64,
    pub kappa_a_peak: f64,
    pub kappa_eff_peak: f64,
    pub eta_adiabatic: f64,
    pub eta_tqd: f64,
    /// Largest energy-balance residual of the two runs.
    pub audit: f64,
}

/// For each separation, run both protocols with `κ₀ = κ(d)` and report the
/// efficiencies together with `κ_a`, `κ_eff` at the resonance crossing.
pub fn distance_study(
    model: &DistanceModel,
    template: &LandauZener,
    coils: &CoilPair,
    d_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<DistanceRow>> {
    if d_grid.is_empty() {
        return Err(invalid("d_grid", "must not be empty"));
    }
    if d_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("d_grid", "must be strictly ascending"));
    }
    d_grid
        .par_iter()
        .map(|&d| {
            let kappa = kappa_of_distance(model, d)?;
            let schedule =
                make_lz_schedule(kappa, template.delta_offset, template.beta, template.t0)?;
            let window = schedule.window();
            let lz = LandauZener {
                kappa0: kappa,
                ..*template
            };
            // the LZ κ_a peaks where Δ = 0; clamp to the window otherwise
            let t_peak = lz.crossing_time().unwrap_or(template.t0).clamp(0.0, window);
            let cd = counterdiabatic_terms(&schedule, t_peak, &opts.cd)?;
            let run = |p: Protocol| -> Result<(f64, f64)> {
                let tr = evolve_master(p, &schedule, coils, DensityMatrix2::source(), opts)?;
                Ok((
                    efficiency(&tr, coils)?.eta,
                    doublecheck_integrals(&tr, coils),
                ))
            };
            let (eta_adiabatic, audit_a) = run(Protocol::Adiabatic)?;
            let (eta_tqd, audit_t) = run(Protocol::Tqd)?;
            Ok(DistanceRow {
                d,
                kappa,
                kappa_a_peak: cd.kappa_a,
                kappa_eff_peak: cd.kappa_eff,
                eta_adiabatic,
                eta_tqd,
                audit: audit_a.max(audit_t),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_forms() {
        let sat = DistanceModel {
            kappa_ref: 5.0,
            d_ref: 2.0,
            exponent: 3.0,
            form: DistanceForm::Saturating,
        };
        assert_relative_eq!(kappa_of_distance(&sat, 2.0).unwrap(), 2.5);
        assert_relative_eq!(kappa_of_distance(&sat, 0.0).unwrap(), 5.0);
        assert!(kappa_of_distance(&sat, -1.0).is_err());
        let pl = DistanceModel {
            form: DistanceForm::PowerLaw,
            ..sat
        };
        assert_relative_eq!(kappa_of_distance(&pl, 4.0).unwrap(), 5.0 / 8.0);
        assert!(matches!(
            kappa_of_distance(&pl, 0.0),
            Err(WptError::Domain { .. })
        ));
        let def = DistanceModel::default();
        assert_relative_eq!(
            kappa_of_distance(&def, 2.0).unwrap(),
            4e3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn distance_models_strictly_decrease() {
        for form in [DistanceForm::PowerLaw, DistanceForm::Saturating] {
            let m = DistanceModel {
                form,
                ..DistanceModel::default()
            };
            let ks: Vec<f64> = (1..50)
                .map(|i| kappa_of_distance(&m, i as f64 * 0.1).unwrap())
                .collect();
            assert!(ks.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn inductive_coupling() {
        assert_eq!(
            kappa_from_inductance(0.0, 1e6, 1e6, 1e-4, 1e-4).unwrap(),
            0.0
        );
        assert_relative_eq!(
            kappa_from_inductance(2e-6, 3e5, 3e5, 5e-5, 5e-5).unwrap(),
            2e-6 * 3e5 / 5e-5
        );
        assert_relative_eq!(
            kappa_from_inductance(1e-6, 1e6, 1e6, 1e-4, 1e-4).unwrap(),
            1e4,
            max_relative = 1e-12
        );
        assert!(kappa_from_inductance(1e-6, 0.0, 1e6, 1e-4, 1e-4).is_err());
        assert!(kappa_from_inductance(-1e-6, 1e6, 1e6, 1e-4, 1e-4).is_err());
    }

    #[test]
    fn study_rejects_bad_grids() {
        let t = LandauZener {
            kappa0: 1.0,
            delta_offset: 2e5,
            beta: 3e9,
            t0: 1e-4,
        };
        let m = DistanceModel::default();
        let c = CoilPair::default();
        let o = SolverOptions::default();
        assert!(distance_study(&m, &t, &c, &[], &o).is_err());
        assert!(distance_study(&m, &t, &c, &[1.0, 0.5], &o).is_err());
    }
}
