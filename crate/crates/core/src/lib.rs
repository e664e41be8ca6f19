//! Simulation of inductive wireless power transfer between a source and a
//! drain coil driven through resonance, comparing an adiabatic sweep with a
//! counterdiabatic (transitionless quantum driving) protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod metrics;
pub mod model;
pub mod schedules;
pub mod selftest;

pub use config::{parse_config, ConfigError, RunConfig};
pub use coupling::{
    distance_study, kappa_from_inductance, kappa_of_distance, DistanceForm, DistanceModel,
    DistanceRow,
};
pub use dynamics::{
    evolve_amplitudes_lab, evolve_amplitudes_rotating, evolve_master, DensityMatrix2,
    LossConvention, Protocol, SolverOptions, Trajectory, TrajectoryKind,
};
pub use error::{Result, WptError};
pub use experiments::{
    run_scenario, run_sweep, Fig2Variant, Scenario, ScenarioOutput, SweepResult,
};
pub use integrator::{IntegratorConfig, Method, OdeStats};
pub use metrics::{doublecheck_integrals, efficiency, transfer_fidelity, EfficiencyReport};
pub use model::{CoilPair, Hamiltonian2};
pub use schedules::{
    counterdiabatic_terms, lz_probability, make_lz_schedule, mixing_angle, CDTerms, CdOptions,
    DriveSchedule, LandauZener, PhiDotMode,
};
