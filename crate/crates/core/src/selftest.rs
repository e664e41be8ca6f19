//! Quick analytic checks of the solver stack, each reported as pass/fail.

use num_complex::Complex64;

use crate::dynamics::{
    evolve_amplitudes_lab, evolve_amplitudes_rotating, evolve_master, max_trajectory_diff,
    DensityMatrix2, Protocol, SolverOptions,
};
use crate::metrics::doublecheck_integrals;
use crate::model::{adiabatic_populations_in_frame, CoilPair};
use crate::schedules::{
    counterdiabatic_terms, lz_probability, make_lz_schedule, mixing_angle, CdOptions,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Run every check with the given solver options.
pub fn run_selftest(opts: &SolverOptions) -> Vec<Check> {
    vec![
        check("lossless evolution conserves the trace", || {
            let s = make_lz_schedule(4e4, 2e5, 3e9, 1e-4)?;
            let mut worst: f64 = 0.0;
            for p in Protocol::ALL {
                let tr =
                    evolve_master(p, &s, &CoilPair::lossless(), DensityMatrix2::source(), opts)?;
                worst = tr
                    .samples
                    .iter()
                    .map(|x| (x.rho.trace() - 1.0).abs())
                    .fold(worst, f64::max);
            }
            Ok((worst < 1e-6, format!("max |tr - 1| = {worst:.2e}")))
        }),
        check("master equation matches amplitude equation", || {
            let s = make_lz_schedule(4e2, 2e5, 3e10, 1e-5)?;
            let coils = CoilPair::with_losses(4e3, 4e3, 1e4);
            let b0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            let a = evolve_master(Protocol::Tqd, &s, &coils, DensityMatrix2::source(), opts)?;
            let b = evolve_amplitudes_rotating(Protocol::Tqd, &s, &coils, b0, opts)?;
            let d = max_trajectory_diff(&a, &b);
            Ok((d < 1e-6, format!("max |Δρ| = {d:.2e}")))
        }),
        check("lab-frame oracle matches rotating frame", || {
            let coils = CoilPair::lossless();
            let kappa = 4e4;
            let delta = coils.omega_d0 - coils.omega_s0;
            let t0 = 5e-5;
            let s = make_lz_schedule(kappa, delta, 0.0, t0)?;
            let b0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            let rot = evolve_amplitudes_rotating(Protocol::Adiabatic, &s, &coils, b0, opts)?;
            let lab = evolve_amplitudes_lab(&coils, kappa, b0, 2.0 * t0, opts)?;
            let d = max_trajectory_diff(&rot, &lab);
            Ok((d < 1e-6, format!("max |Δρ| = {d:.2e}")))
        }),
        check("Landau-Zener transition probability", || {
            let kappa0 = 4e4;
            let beta = 8.0 * kappa0 * kappa0 * 0.5;
            let t0 = 20.0 * kappa0 / beta * 4.0;
            let s = make_lz_schedule(kappa0, 0.0, beta, t0)?;
            let tr = evolve_master(
                Protocol::Adiabatic,
                &s,
                &CoilPair::lossless(),
                DensityMatrix2::source(),
                opts,
            )?;
            let p = tr.last().rho.ss.re;
            let want = lz_probability(kappa0, beta)?;
            Ok((
                (p - want).abs() <= 0.02f64.max(0.1 * want),
                format!("P = {p:.4}, formula {want:.4}"),
            ))
        }),
        check("counterdiabatic drive follows the adiabatic state", || {
            let kappa0 = 4e3;
            let beta = 8.0 * kappa0 * kappa0 * 2.0;
            let t0 = 100.0 * kappa0 / beta;
            let s = make_lz_schedule(kappa0, 0.0, beta, t0)?;
            let cd = CdOptions::default();
            let start = s.sample(0.0)?;
            let th = mixing_angle(start.kappa, start.delta)?;
            let phase = counterdiabatic_terms(&s, 0.0, &cd)?.frame_phase;
            let j = Complex64::new(0.0, 1.0);
            let b0 = [
                (th / 2.0).sin() * (j * phase / 2.0).exp(),
                (th / 2.0).cos() * (-j * phase / 2.0).exp(),
            ];
            let o = SolverOptions { cd, ..*opts };
            let tr = evolve_amplitudes_rotating(Protocol::Tqd, &s, &CoilPair::lossless(), b0, &o)?;
            let mut worst: f64 = 0.0;
            for x in &tr.samples {
                let phi = counterdiabatic_terms(&s, x.t, &cd)?.frame_phase;
                let (_, minus) = adiabatic_populations_in_frame(&x.rho, x.kappa, x.delta, phi)?;
                worst = worst.max(1.0 - minus);
            }
            Ok((worst < 5e-3, format!("max branch leakage = {worst:.2e}")))
        }),
        check("energy balance closes on a lossy run", || {
            let s = make_lz_schedule(4e4, 2e5, 3e9, 1e-4)?;
            let coils = CoilPair::with_losses(4e3, 4e3, 1e4);
            let mut worst: f64 = 0.0;
            for p in Protocol::ALL {
                let tr = evolve_master(p, &s, &coils, DensityMatrix2::source(), opts)?;
                worst = worst.max(doublecheck_integrals(&tr, &coils));
            }
            Ok((worst < 1e-5, format!("residual = {worst:.2e}")))
        }),
    ]
}
