//! Drive protocols: the Landau-Zener sweep family, user-sampled tables, and
//! the counterdiabatic quantities derived from any schedule.
//!
//! All frequencies are angular rates in rad/s and all times are in seconds.
//! A schedule is defined on the window `[0, T]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};

/// Which family a [`DriveSchedule`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    LandauZener,
    Sampled,
}

/// Linear detuning ramp `Δ(t) = δ + β(t − t₀)` at constant coupling `κ₀`,
/// over the window `T = 2t₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauZener {
    pub kappa0: f64,
    pub delta_offset: f64,
    pub beta: f64,
    pub t0: f64,
}

impl LandauZener {
    pub fn delta(&self, t: f64) -> f64 {
        self.delta_offset + self.beta * (t - self.t0)
    }

    /// Time at which the detuning crosses zero (may lie outside the window).
    pub fn crossing_time(&self) -> Option<f64> {
        (self.beta != 0.0).then(|| self.t0 - self.delta_offset / self.beta)
    }
}

/// Schedule values and time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScheduleSample {
    pub t: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub delta_ddot: f64,
    pub kappa: f64,
    pub kappa_dot: f64,
    pub kappa_ddot: f64,
}

/// A protocol `Δ(t)`, `κ(t)` with derivatives over `[0, T]`.
///
/// Schedules are immutable once built; evaluation takes `&self` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveSchedule {
    LandauZener(LandauZener),
    Sampled(SampledSchedule),
}

/// Build a Landau-Zener schedule, rejecting non-positive `kappa0` or `t0`.
pub fn make_lz_schedule(
    kappa0: f64,
    delta_offset: f64,
    beta: f64,
    t0: f64,
) -> Result<DriveSchedule> {
    if !(kappa0 > 0.0) || !kappa0.is_finite() {
        return Err(invalid("kappa0", format!("must be positive, got {kappa0}")));
    }
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(invalid("t0", format!("must be positive, got {t0}")));
    }
    if !delta_offset.is_finite() {
        return Err(invalid("delta_offset", "must be finite"));
    }
    if !beta.is_finite() {
        return Err(invalid("beta", "must be finite"));
    }
    Ok(DriveSchedule::LandauZener(LandauZener {
        kappa0,
        delta_offset,
        beta,
        t0,
    }))
}

impl DriveSchedule {
    pub fn kind(&self) -> ScheduleKind {
        match self {
            DriveSchedule::LandauZener(_) => ScheduleKind::LandauZener,
            DriveSchedule::Sampled(_) => ScheduleKind::Sampled,
        }
    }

    /// Total window length `T`.
    pub fn window(&self) -> f64 {
        match self {
            DriveSchedule::LandauZener(lz) => 2.0 * lz.t0,
            DriveSchedule::Sampled(s) => s.window(),
        }
    }

    pub fn sample(&self, t: f64) -> Result<ScheduleSample> {
        let window = self.window();
        let slack = 1e-12 * window;
        if !(t >= -slack && t <= window + slack) {
            return Err(WptError::OutOfWindow { t, window });
        }
        let t = t.clamp(0.0, window);
        Ok(match self {
            DriveSchedule::LandauZener(lz) => ScheduleSample {
                t,
                delta: lz.delta(t),
                delta_dot: lz.beta,
                delta_ddot: 0.0,
                kappa: lz.kappa0,
                kappa_dot: 0.0,
                kappa_ddot: 0.0,
            },
            DriveSchedule::Sampled(s) => s.eval(t),
        })
    }

    pub fn delta(&self, t: f64) -> Result<f64> {
        Ok(self.sample(t)?.delta)
    }

    pub fn kappa(&self, t: f64) -> Result<f64> {
        Ok(self.sample(t)?.kappa)
    }

    /// True when `Δ(0)` and `Δ(T)` have opposite signs.
    pub fn crosses_resonance(&self) -> bool {
        match (self.delta(0.0), self.delta(self.window())) {
            (Ok(a), Ok(b)) => a * b < 0.0,
            _ => false,
        }
    }

    /// Human-readable warnings about the schedule (empty when clean).
    pub fn diagnostics(&self, opts: &CdOptions) -> Vec<String> {
        let mut out = Vec::new();
        if !self.crosses_resonance() {
            out.push(format!(
                "detuning does not change sign over the window: Δ(0) = {:e}, Δ(T) = {:e} rad/s",
                self.delta(0.0).unwrap_or(f64::NAN),
                self.delta(self.window()).unwrap_or(f64::NAN)
            ));
        }
        if let Ok(b) = boundary_diagnostic(self, opts) {
            out.push(format!(
                "counterdiabatic boundary ratios κ_a/κ_eff: start {:.3e}, end {:.3e}",
                b.start_ratio, b.end_ratio
            ));
        }
        out
    }
}

/// A schedule interpolated from a `(t, Δ, κ)` table with natural cubic
/// splines, so first and second derivatives are continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledTable", into = "SampledTable")]
pub struct SampledSchedule {
    table: SampledTable,
    delta: CubicSpline,
    kappa: CubicSpline,
}

/// Raw knots of a sampled schedule. Times start at 0 and strictly increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledTable {
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl TryFrom<SampledTable> for SampledSchedule {
    type Error = WptError;

    fn try_from(table: SampledTable) -> Result<Self> {
        SampledSchedule::new(table)
    }
}

impl From<SampledSchedule> for SampledTable {
    fn from(s: SampledSchedule) -> Self {
        s.table
    }
}

impl SampledSchedule {
    pub fn new(table: SampledTable) -> Result<Self> {
        let n = table.t.len();
        if n < 2 {
            return Err(invalid("samples", "need at least two knots"));
        }
        if table.delta.len() != n || table.kappa.len() != n {
            return Err(invalid(
                "samples",
                "t, delta and kappa must have equal length",
            ));
        }
        if table.t[0] != 0.0 {
            return Err(invalid("samples", "first knot must be at t = 0"));
        }
        if table.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("samples", "knot times must strictly increase"));
        }
        if table.kappa.iter().any(|&k| !(k >= 0.0)) {
            return Err(invalid("samples", "coupling must be non-negative"));
        }
        if table.delta.iter().chain(&table.t).any(|v| !v.is_finite()) {
            return Err(invalid("samples", "non-finite entry"));
        }
        let delta = CubicSpline::natural(&table.t, &table.delta);
        let kappa = CubicSpline::natural(&table.t, &table.kappa);
        Ok(Self {
            table,
            delta,
            kappa,
        })
    }

    pub fn table(&self) -> &SampledTable {
        &self.table
    }

    pub fn window(&self) -> f64 {
        *self.table.t.last().expect("validated non-empty")
    }

    fn eval(&self, t: f64) -> ScheduleSample {
        let (delta, delta_dot, delta_ddot) = self.delta.eval(t);
        let (kappa, kappa_dot, kappa_ddot) = self.kappa.eval(t);
        ScheduleSample {
            t,
            delta,
            delta_dot,
            delta_ddot,
            kappa,
            kappa_dot,
            kappa_ddot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    fn natural(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior knots.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope =
            (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let curvature = a * m0 + b * m1;
        (value, slope, curvature)
    }
}

/// Mixing angle `Θ = atan2(2κ, Δ)`, in `[0, π]` for `κ ≥ 0`.
pub fn mixing_angle(kappa: f64, delta: f64) -> Result<f64> {
    if kappa == 0.0 && delta == 0.0 {
        return Err(WptError::UndefinedAngle);
    }
    Ok((2.0 * kappa).atan2(delta))
}

/// How the phase-rotation rate `φ̇` of the counterdiabatic frame is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiDotMode {
    /// `φ̇ = d/dt atan2(Θ̇/2, κ)`: the rate that makes the augmented coupling
    /// real. Reduces to `2ΔΔ̇²/((Δ²+4κ²)² + Δ̇²)` for a linear sweep.
    #[default]
    Exact,
    /// `φ̇ = 2ΔΔ̇²/(Δ² + 4κ² + Δ̇²)` evaluated as written, units and all.
    Verbatim,
    /// `φ̇ = 0`.
    Off,
}

impl std::str::FromStr for PhiDotMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "verbatim" => Ok(Self::Verbatim),
            "off" => Ok(Self::Off),
            other => Err(format!(
                "unknown phi-dot mode `{other}` (expected exact, verbatim or off)"
            )),
        }
    }
}

/// Options for the counterdiabatic augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CdOptions {
    pub phi_dot_mode: PhiDotMode,
    /// Length of the sine² on/off ramp applied to `κ_a` at both ends of the
    /// window, as a fraction of `T`. `None` leaves `κ_a` unwindowed.
    pub kappa_a_ramp: Option<f64>,
}

/// Counterdiabatic quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CDTerms {
    /// `|Θ̇|/2`, times the ramp factor when enabled.
    pub kappa_a: f64,
    pub phi_dot: f64,
    /// `√(κ² + κ_a²)`
    pub kappa_eff: f64,
    /// `Δ − φ̇`
    pub delta_eff: f64,
    /// `φ = atan2(Θ̇/2, κ)`: phase between diabatic amplitudes and the frame
    /// in which the augmented coupling is real.
    pub frame_phase: f64,
}

fn ramp_factor(t: f64, window: f64, fraction: Option<f64>) -> (f64, f64) {
    let Some(fraction) = fraction.filter(|f| *f > 0.0) else {
        return (1.0, 0.0);
    };
    let tau = (fraction * window).min(0.5 * window);
    let a = PI / (2.0 * tau);
    if t < tau {
        ((a * t).sin().powi(2), a * (2.0 * a * t).sin())
    } else if t > window - tau {
        let s = window - t;
        ((a * s).sin().powi(2), -a * (2.0 * a * s).sin())
    } else {
        (1.0, 0.0)
    }
}

/// Signed `Θ̇/2 = (κ̇Δ − κΔ̇)/(Δ² + 4κ²)` and its time derivative.
fn half_theta_rate(s: &ScheduleSample) -> Result<(f64, f64)> {
    let denom = s.delta * s.delta + 4.0 * s.kappa * s.kappa;
    if denom == 0.0 {
        return Err(WptError::SingularSchedule { t: s.t });
    }
    let num = s.kappa_dot * s.delta - s.kappa * s.delta_dot;
    let num_dot = s.kappa_ddot * s.delta - s.kappa * s.delta_ddot;
    let denom_dot = 2.0 * s.delta * s.delta_dot + 8.0 * s.kappa * s.kappa_dot;
    Ok((
        num / denom,
        (num_dot * denom - num * denom_dot) / (denom * denom),
    ))
}

/// Counterdiabatic coupling, phase rate, effective coupling and detuning.
pub fn counterdiabatic_terms(
    schedule: &DriveSchedule,
    t: f64,
    opts: &CdOptions,
) -> Result<CDTerms> {
    let s = schedule.sample(t)?;
    cd_terms_at(&s, schedule.window(), opts)
}

pub(crate) fn cd_terms_at(s: &ScheduleSample, window: f64, opts: &CdOptions) -> Result<CDTerms> {
    let (rate, rate_dot) = half_theta_rate(s)?;
    let (r, r_dot) = ramp_factor(s.t, window, opts.kappa_a_ramp);
    let q = r * rate;
    let q_dot = r_dot * rate + r * rate_dot;
    let kappa_a = q.abs();
    let phi_dot = match opts.phi_dot_mode {
        PhiDotMode::Exact => {
            let norm = s.kappa * s.kappa + q * q;
            if norm == 0.0 {
                0.0
            } else {
                (s.kappa * q_dot - q * s.kappa_dot) / norm
            }
        }
        PhiDotMode::Verbatim => {
            let dd2 = s.delta_dot * s.delta_dot;
            2.0 * s.delta * dd2 / (s.delta * s.delta + 4.0 * s.kappa * s.kappa + dd2)
        }
        PhiDotMode::Off => 0.0,
    };
    Ok(CDTerms {
        kappa_a,
        phi_dot,
        kappa_eff: s.kappa.hypot(kappa_a),
        delta_eff: s.delta - phi_dot,
        frame_phase: q.atan2(s.kappa),
    })
}

/// Ratio `κ_a/√(4κ² + Δ²)`; values ≪ 1 mean the sweep is adiabatic at `t`.
pub fn adiabaticity_margin(schedule: &DriveSchedule, t: f64) -> Result<f64> {
    let s = schedule.sample(t)?;
    let (rate, _) = half_theta_rate(&s)?;
    Ok(rate.abs() / (4.0 * s.kappa * s.kappa + s.delta * s.delta).sqrt())
}

/// Landau-Zener diabatic transition probability `exp(−2πκ₀²/|β|)`.
pub fn lz_probability(kappa0: f64, beta: f64) -> Result<f64> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(invalid("beta", "must be non-zero and finite"));
    }
    Ok((-2.0 * PI * kappa0 * kappa0 / beta.abs()).exp())
}

/// How far the counterdiabatic coupling is from vanishing at the window edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDiagnostic {
    pub start_ratio: f64,
    pub end_ratio: f64,
}

pub fn boundary_diagnostic(
    schedule: &DriveSchedule,
    opts: &CdOptions,
) -> Result<BoundaryDiagnostic> {
    let ratio = |t: f64| -> Result<f64> {
        let cd = counterdiabatic_terms(schedule, t, opts)?;
        Ok(if cd.kappa_eff == 0.0 {
            0.0
        } else {
            cd.kappa_a / cd.kappa_eff
        })
    };
    Ok(BoundaryDiagnostic {
        start_ratio: ratio(0.0)?,
        end_ratio: ratio(schedule.window())?,
    })
}
