//! Scenario runners: single evolutions, the figure reproductions, and
//! parameter sweeps, together with their CSV and JSON output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, SweepOutput, SweepParam, SweepSpec};
use crate::coupling::{distance_study, kappa_of_distance, DistanceRow};
use crate::dynamics::{evolve_master, DensityMatrix2, Protocol, SolverOptions, Trajectory};
use crate::error::{invalid, Result, WptError};
use crate::integrator::OdeStats;
use crate::metrics::{doublecheck_integrals, efficiency, transfer_fidelity, EfficiencyReport};
use crate::model::CoilPair;
use crate::schedules::{make_lz_schedule, DriveSchedule, LandauZener, SampledSchedule};

/// The four source/drain evolution runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Fig2Variant {
    A,
    B,
    C,
    D,
}

impl Fig2Variant {
    pub const ALL: [Fig2Variant; 4] = [
        Fig2Variant::A,
        Fig2Variant::B,
        Fig2Variant::C,
        Fig2Variant::D,
    ];

    pub fn letter(self) -> char {
        match self {
            Fig2Variant::A => 'a',
            Fig2Variant::B => 'b',
            Fig2Variant::C => 'c',
            Fig2Variant::D => 'd',
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Variant a is the adiabatic reference; b–d use the TQD protocol.
    pub fn protocol(self) -> Protocol {
        match self {
            Fig2Variant::A => Protocol::Adiabatic,
            _ => Protocol::Tqd,
        }
    }
}

impl FromStr for Fig2Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a" => Ok(Fig2Variant::A),
            "b" => Ok(Fig2Variant::B),
            "c" => Ok(Fig2Variant::C),
            "d" => Ok(Fig2Variant::D),
            other => Err(format!("unknown variant `{other}`, expected a, b, c or d")),
        }
    }
}

/// Schedule and coils for one evolution variant.
pub fn figure2_setup(variant: Fig2Variant, cfg: &RunConfig) -> Result<(DriveSchedule, CoilPair)> {
    let f = &cfg.figure2;
    let [beta, t0] = f.windows[variant.index()];
    let kappa0 = match variant.protocol() {
        Protocol::Adiabatic => f.kappa0_adiabatic,
        Protocol::Tqd => f.kappa0_tqd,
    };
    let schedule = make_lz_schedule(kappa0, f.delta_offset, beta, t0)?;
    Ok((
        schedule,
        CoilPair::with_losses(f.gamma_sd, f.gamma_sd, f.gamma_w),
    ))
}

#[derive(Debug, Clone)]
pub struct Figure2Run {
    pub variant: Fig2Variant,
    pub protocol: Protocol,
    pub coils: CoilPair,
    pub trajectory: Trajectory,
    pub audit: f64,
}

pub fn run_figure2(variant: Fig2Variant, cfg: &RunConfig) -> Result<Figure2Run> {
    let (schedule, coils) = figure2_setup(variant, cfg)?;
    let protocol = variant.protocol();
    let trajectory = evolve_master(
        protocol,
        &schedule,
        &coils,
        DensityMatrix2::source(),
        &cfg.solver_options(),
    )?;
    let audit = doublecheck_integrals(&trajectory, &coils);
    Ok(Figure2Run {
        variant,
        protocol,
        coils,
        trajectory,
        audit,
    })
}

/// Values along one sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisValues {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointError {
    /// Index along each axis.
    pub index: Vec<usize>,
    pub protocol: Protocol,
    pub message: String,
}

/// Grid results stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: Vec<AxisValues>,
    pub protocols: Vec<Protocol>,
    /// `eta[p][k]` for protocol `protocols[p]` at flat point `k`; NaN where masked.
    pub eta: Vec<Vec<f64>>,
    pub fidelity: Vec<Vec<f64>>,
    pub audit: Vec<Vec<f64>>,
    pub errors: Vec<PointError>,
    pub stats: OdeStats,
    #[serde(skip)]
    pub trajectories: Vec<Vec<Option<Trajectory>>>,
}

impl SweepResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.values.len() + i)
    }

    fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = k % a.values.len();
            k /= a.values.len();
        }
        idx
    }

    fn protocol_slot(&self, protocol: Protocol) -> Option<usize> {
        self.protocols.iter().position(|&p| p == protocol)
    }

    pub fn eta_of(&self, protocol: Protocol) -> Option<&[f64]> {
        self.protocol_slot(protocol).map(|p| self.eta[p].as_slice())
    }

    pub fn fidelity_of(&self, protocol: Protocol) -> Option<&[f64]> {
        self.protocol_slot(protocol)
            .map(|p| self.fidelity[p].as_slice())
    }

    pub fn is_masked(&self, index: &[usize], protocol: Protocol) -> bool {
        self.errors
            .iter()
            .any(|e| e.index == index && e.protocol == protocol)
    }

    /// Largest energy-balance residual over all unmasked runs.
    pub fn max_audit(&self) -> f64 {
        self.audit
            .iter()
            .flatten()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(0.0, f64::max)
    }
}

struct PointRun {
    eta: f64,
    fidelity: f64,
    audit: f64,
    stats: OdeStats,
    trajectory: Option<Trajectory>,
}

fn run_point(
    protocol: Protocol,
    schedule: &DriveSchedule,
    coils: &CoilPair,
    opts: &SolverOptions,
    keep: bool,
) -> Result<PointRun> {
    let tr = evolve_master(protocol, schedule, coils, DensityMatrix2::source(), opts)?;
    let eta = efficiency(&tr, coils)?.eta;
    Ok(PointRun {
        eta,
        fidelity: transfer_fidelity(&tr),
        audit: doublecheck_integrals(&tr, coils),
        stats: tr.meta.stats,
        trajectory: keep.then_some(tr),
    })
}

/// Evaluate every protocol at every grid point. Points run in parallel;
/// failures are recorded per point and protocol and leave NaN behind.
pub fn run_grid<B>(
    axes: Vec<AxisValues>,
    protocols: &[Protocol],
    opts: &SolverOptions,
    keep_trajectories: bool,
    build: B,
) -> Result<SweepResult>
where
    B: Fn(&[f64]) -> Result<(DriveSchedule, CoilPair)> + Sync,
{
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(invalid("axes", "every axis needs at least one value"));
    }
    if protocols.is_empty() {
        return Err(invalid("protocols", "need at least one protocol"));
    }
    let mut result = SweepResult {
        axes,
        protocols: protocols.to_vec(),
        eta: Vec::new(),
        fidelity: Vec::new(),
        audit: Vec::new(),
        errors: Vec::new(),
        stats: OdeStats::default(),
        trajectories: Vec::new(),
    };
    let n = result.len();
    let points: Vec<Vec<usize>> = (0..n).map(|k| result.unflat(k)).collect();
    let runs: Vec<Vec<Result<PointRun>>> = points
        .par_iter()
        .map(|idx| {
            let coords: Vec<f64> = idx
                .iter()
                .zip(&result.axes)
                .map(|(&i, a)| a.values[i])
                .collect();
            match build(&coords) {
                Ok((schedule, coils)) => protocols
                    .iter()
                    .map(|&p| run_point(p, &schedule, &coils, opts, keep_trajectories))
                    .collect(),
                Err(e) => protocols.iter().map(|_| Err(e.clone())).collect(),
            }
        })
        .collect();

    let np = protocols.len();
    result.eta = vec![vec![f64::NAN; n]; np];
    result.fidelity = vec![vec![f64::NAN; n]; np];
    result.audit = vec![vec![f64::NAN; n]; np];
    result.trajectories = vec![vec![None; n]; np];
    for (k, per_protocol) in runs.into_iter().enumerate() {
        for (p, run) in per_protocol.into_iter().enumerate() {
            match run {
                Ok(r) => {
                    result.eta[p][k] = r.eta;
                    result.fidelity[p][k] = r.fidelity;
                    result.audit[p][k] = r.audit;
                    result.stats.merge(&r.stats);
                    result.trajectories[p][k] = r.trajectory;
                }
                Err(e) => result.errors.push(PointError {
                    index: points[k].clone(),
                    protocol: protocols[p],
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(result)
}

fn window_label(t0: f64) -> String {
    let us = ((2.0 * t0 * 1e6) * 1e6).round() / 1e6;
    format!("{us}us")
}

/// Efficiency versus detuning offset and `κ₀/Γ` at half-window `t0`.
pub fn run_figure4(t0: f64, cfg: &RunConfig) -> Result<SweepResult> {
    if !(t0 > 0.0) {
        return Err(invalid("t0", "must be positive"));
    }
    let f = cfg.figure4.clone();
    let axes = vec![
        AxisValues {
            name: "delta".into(),
            unit: "rad/s".into(),
            values: f.delta.values(),
        },
        AxisValues {
            name: "kappa0_over_gamma".into(),
            unit: "-".into(),
            values: f.ratios.clone(),
        },
    ];
    let beta = f.beta_t0 / t0;
    run_grid(axes, &Protocol::ALL, &cfg.solver_options(), false, |x| {
        let gamma = f.kappa0 / x[1];
        let schedule = make_lz_schedule(f.kappa0, x[0], beta, t0)?;
        Ok((schedule, CoilPair::with_losses(gamma, gamma, f.gamma_w)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure5Result {
    pub rows: Vec<DistanceRow>,
}

impl Figure5Result {
    pub fn max_audit(&self) -> f64 {
        self.rows.iter().map(|r| r.audit).fold(0.0, f64::max)
    }
}

/// Efficiency versus coil separation under the configured distance law.
pub fn run_figure5(cfg: &RunConfig) -> Result<Figure5Result> {
    let f = &cfg.figure5;
    let template = LandauZener {
        kappa0: cfg.distance.kappa_ref,
        delta_offset: f.delta_offset,
        beta: f.beta,
        t0: f.t0,
    };
    let coils = CoilPair::with_losses(f.gamma_sd, f.gamma_sd, f.gamma_w);
    let rows = distance_study(
        &cfg.distance,
        &template,
        &coils,
        &f.grid.values(),
        &cfg.solver_options(),
    )?;
    Ok(Figure5Result { rows })
}

/// Efficiency over the `κ₀ × (Γs = Γd)` grid at half-window `t0`.
pub fn run_figure6(t0: f64, cfg: &RunConfig) -> Result<SweepResult> {
    if !(t0 > 0.0) {
        return Err(invalid("t0", "must be positive"));
    }
    let f = cfg.figure6.clone();
    let axes = vec![
        AxisValues {
            name: "kappa0".into(),
            unit: "rad/s".into(),
            values: f.kappa0.values(),
        },
        AxisValues {
            name: "gamma_sd".into(),
            unit: "1/s".into(),
            values: f.gamma_sd.values(),
        },
    ];
    let beta = f.beta_t0 / t0;
    run_grid(axes, &Protocol::ALL, &cfg.solver_options(), false, |x| {
        let schedule = make_lz_schedule(x[0], f.delta_offset, beta, t0)?;
        Ok((schedule, CoilPair::with_losses(x[1], x[1], f.gamma_w)))
    })
}

fn touches_schedule(p: SweepParam) -> bool {
    matches!(
        p,
        SweepParam::Kappa0 | SweepParam::Delta | SweepParam::Beta | SweepParam::T0 | SweepParam::D
    )
}

/// Run a user-defined sweep around the configured schedule and coils.
pub fn run_sweep(spec: &SweepSpec, cfg: &RunConfig) -> Result<SweepResult> {
    spec.validate("sweep").map_err(WptError::from)?;
    let sampled = match &cfg.schedule.samples {
        Some(table) => {
            if let Some(a) = spec.axes.iter().find(|a| touches_schedule(a.param)) {
                return Err(invalid(
                    "sweep.axes",
                    format!(
                        "`{}` cannot be swept with a sampled schedule",
                        a.param.name()
                    ),
                ));
            }
            Some(DriveSchedule::Sampled(SampledSchedule::new(table.clone())?))
        }
        None => None,
    };
    let axes = spec
        .axes
        .iter()
        .map(|a| AxisValues {
            name: a.param.name().into(),
            unit: a.param.unit().into(),
            values: a.grid.values(),
        })
        .collect();
    let params: Vec<SweepParam> = spec.axes.iter().map(|a| a.param).collect();
    let keep = spec.outputs.contains(&SweepOutput::Trajectories);
    run_grid(axes, &spec.protocols, &cfg.solver_options(), keep, |x| {
        let mut lz = cfg.schedule.lz();
        let mut coils = cfg.coils;
        for (&p, &v) in params.iter().zip(x) {
            match p {
                SweepParam::Kappa0 => lz.kappa0 = v,
                SweepParam::Delta => lz.delta_offset = v,
                SweepParam::Beta => lz.beta = v,
                SweepParam::T0 => lz.t0 = v,
                SweepParam::GammaS => coils.gamma_s = v,
                SweepParam::GammaD => coils.gamma_d = v,
                SweepParam::GammaW => coils.gamma_w = v,
                SweepParam::GammaSd => {
                    coils.gamma_s = v;
                    coils.gamma_d = v;
                }
                SweepParam::D => lz.kappa0 = kappa_of_distance(&cfg.distance, v)?,
            }
        }
        let schedule = match &sampled {
            Some(s) => s.clone(),
            None => make_lz_schedule(lz.kappa0, lz.delta_offset, lz.beta, lz.t0)?,
        };
        Ok((schedule, coils))
    })
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

/// Trajectory table with a unit-annotated header.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from(
        "t [s],frac_s [-],frac_d [-],rho_sd_re [-],rho_sd_im [-],kappa [rad/s],delta [rad/s],kappa_a [rad/s]\n",
    );
    let tr0 = traj.first().rho.trace();
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(s.t),
            num(s.frac_s),
            num(s.frac_d),
            num(s.rho.sd.re / tr0),
            num(s.rho.sd.im / tr0),
            num(s.kappa),
            num(s.delta),
            num(s.kappa_a)
        );
    }
    out
}

/// Grid table: one row per point, axis coordinates first, then the requested
/// outputs for each protocol. Masked entries read `nan`.
pub fn sweep_csv(result: &SweepResult, outputs: &[SweepOutput]) -> String {
    let mut header: Vec<String> = result
        .axes
        .iter()
        .map(|a| format!("{} [{}]", a.name, a.unit))
        .collect();
    let mut columns: Vec<&[f64]> = Vec::new();
    for (want, name, data) in [
        (SweepOutput::Eta, "eta", &result.eta),
        (SweepOutput::Fidelity, "fidelity", &result.fidelity),
    ] {
        if outputs.contains(&want) {
            for (p, protocol) in result.protocols.iter().enumerate() {
                header.push(format!("{name}_{} [-]", protocol.name()));
                columns.push(&data[p]);
            }
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..result.len() {
        let idx = result.unflat(k);
        let mut row: Vec<String> = idx
            .iter()
            .zip(&result.axes)
            .map(|(&i, a)| num(a.values[i]))
            .collect();
        row.extend(columns.iter().map(|c| num(c[k])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn distance_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from(
        "d [m],kappa [rad/s],kappa_a_peak [rad/s],kappa_eff_peak [rad/s],eta_adiabatic [-],eta_tqd [-]\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.d),
            num(r.kappa),
            num(r.kappa_a_peak),
            num(r.kappa_eff_peak),
            num(r.eta_adiabatic),
            num(r.eta_tqd)
        );
    }
    out
}

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// Both protocols on the configured schedule and coils.
    Simulate,
    Figure2(Fig2Variant),
    /// All configured windows, or only the given `t₀`.
    Figure4(Option<f64>),
    Figure5,
    Figure6(Option<f64>),
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub stats: OdeStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Files produced by a scenario plus a one-line summary. Nothing touches the
/// filesystem until [`ScenarioOutput::write_to`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub files: Vec<OutputFile>,
    pub summary: String,
    pub warnings: Vec<String>,
    pub max_audit: f64,
}

impl ScenarioOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error, p: &Path| WptError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        for f in &self.files {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents).map_err(|e| io(e, &path))?;
        }
        Ok(())
    }
}

fn sidecar(scenario: &str, cfg: &RunConfig, provenance: &Provenance, results: Value) -> String {
    let doc = json!({
        "scenario": scenario,
        "provenance": provenance,
        "config": cfg,
        "results": results,
    });
    serde_json::to_string_pretty(&doc).expect("sidecar serializes")
}

fn file(name: impl Into<String>, contents: String) -> OutputFile {
    OutputFile {
        name: name.into(),
        contents,
    }
}

fn report_json(r: &EfficiencyReport, fidelity: f64, audit: f64) -> Value {
    json!({
        "eta": r.eta,
        "fidelity": fidelity,
        "integral_source": r.integral_source,
        "integral_drain": r.integral_drain,
        "window": r.window,
        "audit": audit,
    })
}

fn sweep_json(r: &SweepResult) -> Value {
    json!({
        "axes": r.axes,
        "protocols": r.protocols,
        "errors": r.errors,
        "max_audit": r.max_audit(),
    })
}

fn fmt_pair(r: &SweepResult, k: usize) -> String {
    r.protocols
        .iter()
        .enumerate()
        .map(|(p, proto)| format!("{}={:.4}", proto.name(), r.eta[p][k]))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Run a scenario and assemble its output files.
pub fn run_scenario(scenario: &Scenario, cfg: &RunConfig) -> Result<ScenarioOutput> {
    cfg.validate().map_err(WptError::from)?;
    let start = Instant::now();
    let opts = cfg.solver_options();
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let mut stats = OdeStats::default();
    let mut max_audit: f64 = 0.0;
    let (name, summary, results) = match scenario {
        Scenario::Simulate => {
            let schedule = cfg.schedule.build()?;
            warnings.extend(schedule.diagnostics(&opts.cd));
            let mut parts = Vec::new();
            let mut results = serde_json::Map::new();
            for p in Protocol::ALL {
                let tr = evolve_master(p, &schedule, &cfg.coils, DensityMatrix2::source(), &opts)?;
                let fid = transfer_fidelity(&tr);
                let audit = doublecheck_integrals(&tr, &cfg.coils);
                max_audit = max_audit.max(audit);
                stats.merge(&tr.meta.stats);
                let value = match efficiency(&tr, &cfg.coils) {
                    Ok(r) => {
                        parts.push(format!(
                            "{}: eta={:.4} fidelity={:.4}",
                            p.name(),
                            r.eta,
                            fid
                        ));
                        report_json(&r, fid, audit)
                    }
                    Err(e) => {
                        parts.push(format!("{}: fidelity={:.4}", p.name(), fid));
                        json!({ "eta": Value::Null, "eta_error": e.to_string(), "fidelity": fid, "audit": audit })
                    }
                };
                results.insert(p.name().into(), value);
                files.push(file(
                    format!("simulate_{}.csv", p.name()),
                    trajectory_csv(&tr),
                ));
            }
            (
                "simulate".to_string(),
                format!("simulate: {}", parts.join("; ")),
                Value::Object(results),
            )
        }
        Scenario::Figure2(v) => {
            let (schedule, _) = figure2_setup(*v, cfg)?;
            warnings.extend(schedule.diagnostics(&opts.cd));
            let run = run_figure2(*v, cfg)?;
            max_audit = run.audit;
            stats = run.trajectory.meta.stats;
            let last = run.trajectory.last();
            let name = format!("fig2{}", v.letter());
            files.push(file(format!("{name}.csv"), trajectory_csv(&run.trajectory)));
            let summary = format!(
                "{name}: {} final frac_s={:.4} frac_d={:.4} audit={:.2e}",
                run.protocol.name(),
                last.frac_s,
                last.frac_d,
                run.audit
            );
            let results = json!({
                "protocol": run.protocol,
                "final_frac_s": last.frac_s,
                "final_frac_d": last.frac_d,
                "audit": run.audit,
            });
            (name, summary, results)
        }
        Scenario::Figure4(t0) => {
            let t0s = t0
                .map(|t| vec![t])
                .unwrap_or_else(|| cfg.figure4.t0_values.clone());
            let mut results = serde_json::Map::new();
            let mut parts = Vec::new();
            for t in t0s {
                let r = run_figure4(t, cfg)?;
                let label = window_label(t);
                max_audit = max_audit.max(r.max_audit());
                stats.merge(&r.stats);
                files.push(file(
                    format!("fig4_{label}.csv"),
                    sweep_csv(&r, &[SweepOutput::Eta, SweepOutput::Fidelity]),
                ));
                parts.push(format!(
                    "{label}: {} points, {} masked",
                    r.len(),
                    r.errors.len()
                ));
                results.insert(label, sweep_json(&r));
            }
            (
                "fig4".to_string(),
                format!("fig4: {}", parts.join("; ")),
                Value::Object(results),
            )
        }
        Scenario::Figure5 => {
            let r = run_figure5(cfg)?;
            max_audit = r.max_audit();
            files.push(file("fig5.csv", distance_csv(&r.rows)));
            let first = r.rows.first().expect("grid is non-empty");
            let last = r.rows.last().expect("grid is non-empty");
            let summary = format!(
                "fig5: d {}..{} m, adiabatic {:.4}->{:.4}, tqd {:.4}->{:.4}",
                first.d,
                last.d,
                first.eta_adiabatic,
                last.eta_adiabatic,
                first.eta_tqd,
                last.eta_tqd
            );
            (
                "fig5".to_string(),
                summary,
                json!({ "rows": r.rows, "max_audit": max_audit }),
            )
        }
        Scenario::Figure6(t0) => {
            let t0s = t0
                .map(|t| vec![t])
                .unwrap_or_else(|| cfg.figure6.t0_values.clone());
            let mut results = serde_json::Map::new();
            let mut parts = Vec::new();
            for t in t0s {
                let r = run_figure6(t, cfg)?;
                max_audit = max_audit.max(r.max_audit());
                stats.merge(&r.stats);
                let label = format!("t0_{t:e}");
                files.push(file(
                    format!("fig6_{label}.csv"),
                    sweep_csv(&r, &[SweepOutput::Eta, SweepOutput::Fidelity]),
                ));
                let mut tqd: Vec<f64> = r
                    .eta_of(Protocol::Tqd)
                    .unwrap_or(&[])
                    .iter()
                    .copied()
                    .filter(|v| !v.is_nan())
                    .collect();
                tqd.sort_by(f64::total_cmp);
                let median = tqd.get(tqd.len() / 2).copied().unwrap_or(f64::NAN);
                parts.push(format!("{label}: tqd median {median:.4}"));
                results.insert(label, sweep_json(&r));
            }
            (
                "fig6".to_string(),
                format!("fig6: {}", parts.join("; ")),
                Value::Object(results),
            )
        }
        Scenario::Sweep => {
            let r = run_sweep(&cfg.sweep, cfg)?;
            max_audit = r.max_audit();
            stats = r.stats;
            files.push(file("sweep.csv", sweep_csv(&r, &cfg.sweep.outputs)));
            if cfg.sweep.outputs.contains(&SweepOutput::Trajectories) {
                for (p, protocol) in r.protocols.iter().enumerate() {
                    for (k, tr) in r.trajectories[p].iter().enumerate() {
                        if let Some(tr) = tr {
                            files.push(file(
                                format!("sweep_{k:04}_{}.csv", protocol.name()),
                                trajectory_csv(tr),
                            ));
                        }
                    }
                }
            }
            let summary = if r.len() == 1 {
                format!("sweep: 1 point, {}", fmt_pair(&r, 0))
            } else {
                format!("sweep: {} points, {} masked", r.len(), r.errors.len())
            };
            ("sweep".to_string(), summary, sweep_json(&r))
        }
    };
    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        wall_time_s: start.elapsed().as_secs_f64(),
        stats,
    };
    files.push(file(
        format!("{name}.json"),
        sidecar(&name, cfg, &provenance, results),
    ));
    Ok(ScenarioOutput {
        files,
        summary,
        warnings,
        max_audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridAxis, SweepAxis};

    fn quick_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.integrator.sample_count = 200;
        cfg
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("c".parse::<Fig2Variant>().unwrap(), Fig2Variant::C);
        assert!("e".parse::<Fig2Variant>().is_err());
        assert_eq!(Fig2Variant::A.protocol(), Protocol::Adiabatic);
        assert_eq!(Fig2Variant::D.protocol(), Protocol::Tqd);
    }

    #[test]
    fn window_labels() {
        assert_eq!(window_label(1e-4), "200us");
        assert_eq!(window_label(1e-6), "2us");
        assert_eq!(window_label(1e-5), "20us");
    }

    #[test]
    fn flat_indexing_round_trips() {
        let r = run_grid(
            vec![
                AxisValues {
                    name: "x".into(),
                    unit: "-".into(),
                    values: vec![1.0, 2.0, 3.0],
                },
                AxisValues {
                    name: "y".into(),
                    unit: "-".into(),
                    values: vec![0.0, 1.0],
                },
            ],
            &[Protocol::Adiabatic],
            &SolverOptions::default(),
            false,
            |_| Err(WptError::UndefinedEfficiency),
        )
        .unwrap();
        assert_eq!(r.len(), 6);
        for k in 0..6 {
            assert_eq!(r.flat(&r.unflat(k)), k);
        }
        assert_eq!(r.unflat(3), vec![1, 1]);
        assert_eq!(r.errors.len(), 6);
        assert!(r.eta[0].iter().all(|v| v.is_nan()));
    }

    #[test]
    fn singular_point_is_masked_not_fatal() {
        let mut cfg = quick_config();
        cfg.sweep = SweepSpec {
            axes: vec![SweepAxis {
                param: SweepParam::Kappa0,
                grid: GridAxis::linear(0.0, 4e4, 2),
            }],
            protocols: Protocol::ALL.to_vec(),
            outputs: vec![SweepOutput::Eta],
        };
        cfg.coils.gamma_w = 1e4;
        let r = run_sweep(&cfg.sweep, &cfg).unwrap();
        assert!(r.is_masked(&[0], Protocol::Adiabatic));
        assert!(r.is_masked(&[0], Protocol::Tqd));
        assert!(!r.is_masked(&[1], Protocol::Tqd));
        assert!(r.eta_of(Protocol::Tqd).unwrap()[1].is_finite());
        let csv = sweep_csv(&r, &cfg.sweep.outputs);
        assert!(csv.lines().nth(1).unwrap().ends_with("nan,nan"));
        assert!(csv.lines().skip(2).all(|l| !l.contains("nan")));
    }

    #[test]
    fn one_point_sweep_matches_direct_run() {
        let mut cfg = quick_config();
        cfg.coils.gamma_w = 1e4;
        cfg.sweep = SweepSpec {
            axes: vec![SweepAxis {
                param: SweepParam::Beta,
                grid: GridAxis::linear(3e9, 3e9, 1),
            }],
            protocols: vec![Protocol::Tqd],
            outputs: vec![SweepOutput::Eta],
        };
        let r = run_sweep(&cfg.sweep, &cfg).unwrap();
        let s = cfg.schedule.build().unwrap();
        let tr = evolve_master(
            Protocol::Tqd,
            &s,
            &cfg.coils,
            DensityMatrix2::source(),
            &cfg.solver_options(),
        )
        .unwrap();
        assert_eq!(r.eta[0][0], efficiency(&tr, &cfg.coils).unwrap().eta);
    }

    #[test]
    fn sampled_schedule_rejects_schedule_axes() {
        let cfg = crate::config::parse_config_str(
            r#"{"schedule": {"samples": {"t": [0, 1e-4, 2e-4], "delta": [-1e5, 0, 1e5], "kappa": [4e4, 4e4, 4e4]}},
                "sweep": {"axes": [{"param": "kappa0", "min": 1e3, "max": 1e4, "count": 2}]}}"#,
            &[],
        )
        .unwrap();
        assert!(run_sweep(&cfg.sweep, &cfg).is_err());
    }

    #[test]
    fn trajectory_csv_shape() {
        let mut cfg = quick_config();
        cfg.integrator.sample_count = 50;
        let run = run_figure2(Fig2Variant::B, &cfg).unwrap();
        let csv = trajectory_csv(&run.trajectory);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("t [s],frac_s [-]"));
        assert_eq!(lines.count(), 50);
    }

    #[test]
    fn scenario_output_files() {
        let mut cfg = quick_config();
        cfg.fixed_step = true;
        let out = run_scenario(&Scenario::Figure2(Fig2Variant::A), &cfg).unwrap();
        let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["fig2a.csv", "fig2a.json"]);
        let side: Value = serde_json::from_str(&out.files[1].contents).unwrap();
        assert_eq!(side["provenance"]["config_hash"], cfg.hash());
        assert_eq!(side["config"]["fixed_step"], true);
        let again = run_scenario(&Scenario::Figure2(Fig2Variant::A), &cfg).unwrap();
        assert_eq!(again.files[0], out.files[0]);
    }
}
