//! Master-equation evolution and the two amplitude-equation oracles.
//!
//! The master equation integrated here is
//! `dρ/dt = −j[H, ρ] − (c/2){Γ, ρ}` with `Γ = diag(Γs, Γd + Γw)` and `c` set by
//! the [`LossConvention`]. The rotating-frame oracle integrates
//! `db/dt = −jHb − (c/2)Γb`, and the lab-frame oracle the coupled-mode
//! equations `da/dt = (jω − Γ)a + jκ a_other`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};
use crate::integrator::{integrate, IntegratorConfig, OdeStats};
use crate::model::{dissipation_matrix, CoilPair, Hamiltonian2};
use crate::schedules::{cd_terms_at, CdOptions, DriveSchedule};

/// Which Hamiltonian drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Adiabatic,
    Tqd,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Adiabatic, Protocol::Tqd];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Adiabatic => "adiabatic",
            Protocol::Tqd => "tqd",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "adiabatic" => Ok(Protocol::Adiabatic),
            "tqd" => Ok(Protocol::Tqd),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// Meaning of the coil loss rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConvention {
    /// Rates are amplitude decay rates as in the coupled-mode equations:
    /// an isolated coil's energy decays as `e^{−2Γt}`.
    #[default]
    Amplitude,
    /// Rates are energy decay rates: the anticommutator is `−½{Γ, ρ}` with Γ
    /// taken as given, so energy decays as `e^{−Γt}`.
    Energy,
}

impl LossConvention {
    /// Factor `c` multiplying `Γ` in the energy balance `d(tr ρ)/dt`.
    pub fn energy_factor(self) -> f64 {
        match self {
            LossConvention::Amplitude => 2.0,
            LossConvention::Energy => 1.0,
        }
    }
}

/// Everything besides the physics inputs that an evolution needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverOptions {
    pub integrator: IntegratorConfig,
    pub cd: CdOptions,
    pub losses: LossConvention,
}

/// 2×2 density matrix in the `[b_s, b_d]` basis. Entries are fractions of the
/// initial energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub ss: Complex64,
    pub sd: Complex64,
    pub ds: Complex64,
    pub dd: Complex64,
}

impl DensityMatrix2 {
    /// All energy in the source coil.
    pub fn source() -> Self {
        Self::diagonal(1.0, 0.0)
    }

    pub fn drain() -> Self {
        Self::diagonal(0.0, 1.0)
    }

    pub fn diagonal(ss: f64, dd: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            ss: Complex64::new(ss, 0.0),
            sd: z,
            ds: z,
            dd: Complex64::new(dd, 0.0),
        }
    }

    /// `|b⟩⟨b|`
    pub fn pure(b: [Complex64; 2]) -> Self {
        Self {
            ss: b[0] * b[0].conj(),
            sd: b[0] * b[1].conj(),
            ds: b[1] * b[0].conj(),
            dd: b[1] * b[1].conj(),
        }
    }

    pub fn as_matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.ss, self.sd], [self.ds, self.dd]]
    }

    pub fn trace(&self) -> f64 {
        self.ss.re + self.dd.re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.ss.im.abs() <= tol
            && self.dd.im.abs() <= tol
            && (self.sd - self.ds.conj()).norm() <= tol
    }

    /// `ρ ← (ρ + ρ†)/2`
    pub fn symmetrize(&mut self) {
        let off = 0.5 * (self.sd + self.ds.conj());
        self.sd = off;
        self.ds = off.conj();
        self.ss.im = 0.0;
        self.dd.im = 0.0;
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let half_diff = 0.5 * (self.ss.re - self.dd.re);
        0.5 * self.trace() - (half_diff * half_diff + self.sd.norm_sqr()).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            ss: self.ss * k,
            sd: self.sd * k,
            ds: self.ds * k,
            dd: self.dd * k,
        }
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.ss - other.ss,
            self.sd - other.sd,
            self.ds - other.ds,
            self.dd - other.dd,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let scale = self.trace().abs().max(1e-300);
        if !self.is_hermitian(1e-9 * scale.max(1.0)) {
            return Err(WptError::InvalidState("not Hermitian".into()));
        }
        if self.ss.re < 0.0
            || self.dd.re < 0.0
            || self.ss.re * self.dd.re - self.sd.norm_sqr() < -1e-9
        {
            return Err(WptError::InvalidState("not positive semidefinite".into()));
        }
        if !(self.trace() > 0.0) {
            return Err(WptError::InvalidState("trace must be positive".into()));
        }
        Ok(())
    }

    fn to_state(self) -> [f64; 8] {
        [
            self.ss.re, self.ss.im, self.sd.re, self.sd.im, self.ds.re, self.ds.im, self.dd.re,
            self.dd.im,
        ]
    }

    fn from_state(y: &[f64; 8]) -> Self {
        Self {
            ss: Complex64::new(y[0], y[1]),
            sd: Complex64::new(y[2], y[3]),
            ds: Complex64::new(y[4], y[5]),
            dd: Complex64::new(y[6], y[7]),
        }
    }
}

/// Tag recorded with every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Adiabatic,
    Tqd,
    LabOracle,
}

impl From<Protocol> for TrajectoryKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Adiabatic => TrajectoryKind::Adiabatic,
            Protocol::Tqd => TrajectoryKind::Tqd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub rho: DensityMatrix2,
    pub kappa: f64,
    pub delta: f64,
    /// Counterdiabatic coupling at `t` (reported for both protocols).
    pub kappa_a: f64,
    /// `ρ_ss(t) / tr ρ(0)`
    pub frac_s: f64,
    /// `ρ_dd(t) / tr ρ(0)`
    pub frac_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kind: TrajectoryKind,
    pub schedule: Option<DriveSchedule>,
    pub coils: CoilPair,
    pub options: SolverOptions,
    pub stats: OdeStats,
}

/// Uniformly sampled evolution over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    pub fn window(&self) -> f64 {
        self.last().t - self.first().t
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// Hamiltonian of the selected protocol as `(diag, off)` of the real
/// symmetric form `[[diag, off], [off, −diag]]`, plus `(κ, Δ, κ_a)`.
fn drive_at(
    protocol: Protocol,
    schedule: &DriveSchedule,
    window: f64,
    cd: &CdOptions,
    t: f64,
) -> Result<(f64, f64)> {
    let s = schedule.sample(t)?;
    Ok(match protocol {
        Protocol::Adiabatic => (0.5 * s.delta, -s.kappa),
        Protocol::Tqd => {
            let c = cd_terms_at(&s, window, cd)?;
            (0.5 * c.delta_eff, -c.kappa_eff)
        }
    })
}

fn observables(schedule: &DriveSchedule, cd: &CdOptions, t: f64) -> Result<(f64, f64, f64)> {
    let s = schedule.sample(t)?;
    let kappa_a = cd_terms_at(&s, schedule.window(), cd).map_or(f64::NAN, |c| c.kappa_a);
    Ok((s.kappa, s.delta, kappa_a))
}

fn build_samples(
    times: &[f64],
    rhos: impl Iterator<Item = DensityMatrix2>,
    initial_trace: f64,
    mut obs: impl FnMut(f64) -> Result<(f64, f64, f64)>,
) -> Result<Vec<Sample>> {
    times
        .iter()
        .zip(rhos)
        .map(|(&t, rho)| {
            let (kappa, delta, kappa_a) = obs(t)?;
            Ok(Sample {
                t,
                rho,
                kappa,
                delta,
                kappa_a,
                frac_s: rho.ss.re / initial_trace,
                frac_d: rho.dd.re / initial_trace,
            })
        })
        .collect()
}

fn check_invariants(samples: &[Sample], initial_trace: f64, lossy_ok: bool) -> Result<()> {
    let tol = 1e-6 * initial_trace;
    for s in samples {
        if lossy_ok && s.rho.trace() > initial_trace + tol {
            return Err(WptError::IntegratorAccuracy {
                t: s.t,
                what: format!("trace grew to {} from {}", s.rho.trace(), initial_trace),
            });
        }
        if s.rho.min_eigenvalue() < -tol {
            return Err(WptError::IntegratorAccuracy {
                t: s.t,
                what: format!("negative eigenvalue {}", s.rho.min_eigenvalue()),
            });
        }
    }
    Ok(())
}

/// Integrate the dissipative master equation under the protocol's Hamiltonian.
pub fn evolve_master(
    protocol: Protocol,
    schedule: &DriveSchedule,
    coils: &CoilPair,
    rho0: DensityMatrix2,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    coils.validate()?;
    rho0.validate()?;
    let window = schedule.window();
    let gamma = dissipation_matrix(coils);
    let c = opts.losses.energy_factor();
    // ½c{Γ, ρ}_ij = ½c(Γ_i + Γ_j) ρ_ij
    let g = [0.5 * c * gamma.g11, 0.5 * c * gamma.g22];
    let sol = integrate(
        |t, y: &[f64; 8], dy: &mut [f64; 8]| {
            let (a, b) = drive_at(protocol, schedule, window, &opts.cd, t)?;
            let r = DensityMatrix2::from_state(y);
            let j = Complex64::new(0.0, 1.0);
            // [H, ρ] for H = [[a, b], [b, −a]]
            let comm_ss = b * (r.ds - r.sd);
            let comm_sd = 2.0 * a * r.sd + b * (r.dd - r.ss);
            let comm_ds = -2.0 * a * r.ds + b * (r.ss - r.dd);
            let comm_dd = b * (r.sd - r.ds);
            let d = DensityMatrix2 {
                ss: -j * comm_ss - 2.0 * g[0] * r.ss,
                sd: -j * comm_sd - (g[0] + g[1]) * r.sd,
                ds: -j * comm_ds - (g[0] + g[1]) * r.ds,
                dd: -j * comm_dd - 2.0 * g[1] * r.dd,
            };
            *dy = d.to_state();
            Ok(())
        },
        rho0.to_state(),
        window,
        &opts.integrator,
        |y| {
            let mut r = DensityMatrix2::from_state(y);
            r.symmetrize();
            *y = r.to_state();
        },
    )?;
    let tr0 = rho0.trace();
    let samples = build_samples(
        &sol.times,
        sol.states.iter().map(DensityMatrix2::from_state),
        tr0,
        |t| observables(schedule, &opts.cd, t),
    )?;
    check_invariants(&samples, tr0, true)?;
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            kind: protocol.into(),
            schedule: Some(schedule.clone()),
            coils: *coils,
            options: *opts,
            stats: sol.stats,
        },
    })
}

fn amp_state(b: [Complex64; 2]) -> [f64; 4] {
    [b[0].re, b[0].im, b[1].re, b[1].im]
}

fn amp_from(y: &[f64; 4]) -> [Complex64; 2] {
    [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]
}

/// Non-Hermitian amplitude equation in the rotating frame; the trajectory
/// reports `ρ = bb†` so it compares directly with [`evolve_master`].
pub fn evolve_amplitudes_rotating(
    protocol: Protocol,
    schedule: &DriveSchedule,
    coils: &CoilPair,
    b0: [Complex64; 2],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    coils.validate()?;
    let rho0 = DensityMatrix2::pure(b0);
    if !(rho0.trace() > 0.0) {
        return Err(WptError::InvalidState("zero initial amplitude".into()));
    }
    let window = schedule.window();
    let gamma = dissipation_matrix(coils);
    let c = opts.losses.energy_factor();
    let g = [0.5 * c * gamma.g11, 0.5 * c * gamma.g22];
    let sol = integrate(
        |t, y: &[f64; 4], dy: &mut [f64; 4]| {
            let (a, b) = drive_at(protocol, schedule, window, &opts.cd, t)?;
            let v = amp_from(y);
            let j = Complex64::new(0.0, 1.0);
            let hs = a * v[0] + b * v[1];
            let hd = b * v[0] - a * v[1];
            *dy = amp_state([-j * hs - g[0] * v[0], -j * hd - g[1] * v[1]]);
            Ok(())
        },
        amp_state(b0),
        window,
        &opts.integrator,
        |_| {},
    )?;
    let tr0 = rho0.trace();
    let samples = build_samples(
        &sol.times,
        sol.states.iter().map(|y| DensityMatrix2::pure(amp_from(y))),
        tr0,
        |t| observables(schedule, &opts.cd, t),
    )?;
    check_invariants(&samples, tr0, true)?;
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            kind: protocol.into(),
            schedule: Some(schedule.clone()),
            coils: *coils,
            options: *opts,
            stats: sol.stats,
        },
    })
}

/// Lab-frame coupled-mode equations at constant resonances and coupling:
/// `da_s/dt = (jωs − Γs)a_s + jκa_d`, `da_d/dt = (jωd − Γd − Γw)a_d + jκa_s`.
///
/// Loss rates are used as written here regardless of
/// [`SolverOptions::losses`]. A common phase does not change `aa†`, so the
/// reported `ρ` equals the rotating-frame one with `Δ = ωd − ωs`.
pub fn evolve_amplitudes_lab(
    coils: &CoilPair,
    kappa: f64,
    a0: [Complex64; 2],
    tspan: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    coils.validate_lab()?;
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid("kappa", "must be finite and non-negative"));
    }
    let rho0 = DensityMatrix2::pure(a0);
    if !(rho0.trace() > 0.0) {
        return Err(WptError::InvalidState("zero initial amplitude".into()));
    }
    let j = Complex64::new(0.0, 1.0);
    let ms = j * coils.omega_s0 - coils.gamma_s;
    let md = j * coils.omega_d0 - coils.gamma_d - coils.gamma_w;
    let sol = integrate(
        |_t, y: &[f64; 4], dy: &mut [f64; 4]| {
            let a = amp_from(y);
            *dy = amp_state([ms * a[0] + j * kappa * a[1], md * a[1] + j * kappa * a[0]]);
            Ok(())
        },
        amp_state(a0),
        tspan,
        &opts.integrator,
        |_| {},
    )?;
    let delta = coils.omega_d0 - coils.omega_s0;
    let tr0 = rho0.trace();
    let samples = build_samples(
        &sol.times,
        sol.states.iter().map(|y| DensityMatrix2::pure(amp_from(y))),
        tr0,
        |_| Ok((kappa, delta, 0.0)),
    )?;
    check_invariants(&samples, tr0, true)?;
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            kind: TrajectoryKind::LabOracle,
            schedule: None,
            coils: *coils,
            options: *opts,
            stats: sol.stats,
        },
    })
}

/// The lab-frame generator `[[ωs, κ], [κ, ωd]]` as a Hamiltonian value.
pub fn lab_hamiltonian(coils: &CoilPair, kappa: f64) -> Hamiltonian2 {
    Hamiltonian2 {
        h11: Complex64::new(coils.omega_s0, 0.0),
        h12: Complex64::new(kappa, 0.0),
        h21: Complex64::new(kappa, 0.0),
        h22: Complex64::new(coils.omega_d0, 0.0),
        frame: crate::model::Frame::Lab,
    }
}

/// Largest elementwise `ρ` difference between two trajectories sampled on
/// the same grid.
pub fn max_trajectory_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(
        a.samples.len(),
        b.samples.len(),
        "trajectories sampled differently"
    );
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| x.rho.max_abs_diff(&y.rho))
        .fold(0.0, f64::max)
}
