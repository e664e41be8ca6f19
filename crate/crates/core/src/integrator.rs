//! Explicit Runge-Kutta integrators over fixed-size real state vectors.
//!
//! Output is always sampled on a uniform grid of `sample_count` points
//! spanning `[0, T]`; the adaptive method fills the grid from its dense
//! output so sample resolution is independent of step control.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dormand-Prince 5(4) with error control and 4th-order dense output.
    #[default]
    AdaptiveRk45,
    /// Classical RK4 with a fixed step; deterministic baseline.
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step as a fraction of the window; also the fixed RK4 step.
    pub max_step: f64,
    pub sample_count: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk45,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1e-3,
            sample_count: 2000,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed_step() -> Self {
        Self {
            method: Method::FixedRk4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be positive"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be positive"));
        }
        if !(self.max_step > 0.0 && self.max_step <= 1.0) {
            return Err(invalid("max_step", "must lie in (0, 1]"));
        }
        if self.sample_count < 2 {
            return Err(invalid("sample_count", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl OdeStats {
    pub fn merge(&mut self, other: &OdeStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
    }
}

pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: OdeStats,
}

const MAX_STEPS: usize = 50_000_000;

/// Integrate `dy/dt = f(t, y)` over `[0, window]`.
///
/// `post` runs on the state after every accepted step and on every emitted
/// sample (used to re-impose structural constraints such as Hermiticity).
pub fn integrate<const N: usize, F, P>(
    mut f: F,
    y0: [f64; N],
    window: f64,
    cfg: &IntegratorConfig,
    mut post: P,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]) -> Result<()>,
    P: FnMut(&mut [f64; N]),
{
    cfg.validate()?;
    if !(window > 0.0) || !window.is_finite() {
        return Err(invalid("window", "must be positive and finite"));
    }
    let last = cfg.sample_count - 1;
    // the final sample is pinned so rounding never leaves it past the window
    let times: Vec<f64> = (0..cfg.sample_count)
        .map(|k| {
            if k == last {
                window
            } else {
                window * k as f64 / last as f64
            }
        })
        .collect();
    match cfg.method {
        Method::AdaptiveRk45 => dopri5(&mut f, y0, window, cfg, &mut post, times),
        Method::FixedRk4 => rk4(&mut f, y0, window, cfg, &mut post, times),
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn rk4<const N: usize, F, P>(
    f: &mut F,
    y0: [f64; N],
    window: f64,
    cfg: &IntegratorConfig,
    post: &mut P,
    times: Vec<f64>,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]) -> Result<()>,
    P: FnMut(&mut [f64; N]),
{
    let intervals = times.len() - 1;
    let substeps = (1.0 / (intervals as f64 * cfg.max_step)).ceil().max(1.0) as usize;
    let total = intervals * substeps;
    let h = window / total as f64;
    let mut y = y0;
    post(&mut y);
    let mut states = Vec::with_capacity(times.len());
    states.push(y);
    let mut stats = OdeStats::default();
    let (mut k1, mut k2, mut k3, mut k4) = ([0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    for step in 0..total {
        let t = window * step as f64 / total as f64;
        f(t, &y, &mut k1)?;
        f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]), &mut k2)?;
        f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]), &mut k3)?;
        f(t + h, &axpy(&y, h, &[(1.0, &k3)]), &mut k4)?;
        y = axpy(
            &y,
            h / 6.0,
            &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
        );
        post(&mut y);
        stats.steps += 1;
        stats.evaluations += 4;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(WptError::IntegratorAccuracy {
                t: t + h,
                what: "non-finite state".into(),
            });
        }
        if (step + 1) % substeps == 0 {
            states.push(y);
        }
    }
    Ok(Solution {
        times,
        states,
        stats,
    })
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn dopri5<const N: usize, F, P>(
    f: &mut F,
    y0: [f64; N],
    window: f64,
    cfg: &IntegratorConfig,
    post: &mut P,
    times: Vec<f64>,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]) -> Result<()>,
    P: FnMut(&mut [f64; N]),
{
    let h_max = cfg.max_step * window;
    let h_min = 1e-14 * window;
    let mut stats = OdeStats::default();
    let mut y = y0;
    post(&mut y);
    let mut states = Vec::with_capacity(times.len());
    states.push(y);
    let mut next_sample = 1;

    let mut k1 = [0.0; N];
    f(0.0, &y, &mut k1)?;
    stats.evaluations += 1;

    let scale = |a: &[f64; N], b: &[f64; N], i: usize| {
        cfg.abs_tol + cfg.rel_tol * a[i].abs().max(b[i].abs())
    };
    let mut h = {
        let d0 = (y.iter().map(|v| v * v).sum::<f64>() / N as f64).sqrt();
        let d1 = (k1.iter().map(|v| v * v).sum::<f64>() / N as f64).sqrt();
        let guess = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * window
        } else {
            0.01 * d0 / d1
        };
        guess.min(h_max)
    };

    let mut t = 0.0;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    while next_sample < times.len() {
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err(WptError::Stiffness { t, h });
        }
        let last = t + h >= window;
        if last {
            h = window - t;
        }
        f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2)?;
        f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3)?;
        f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut k4,
        )?;
        f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        )?;
        f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            &mut k6,
        )?;
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        f(t + h, &y_new, &mut k7)?;
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let r = e / scale(&y, &y_new, i);
            err += r * r;
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(WptError::IntegratorAccuracy {
                t,
                what: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            let t_new = if last { window } else { t + h };
            // dense output coefficients
            let mut r2 = [0.0; N];
            let mut r3 = [0.0; N];
            let mut r4 = [0.0; N];
            let mut r5 = [0.0; N];
            for i in 0..N {
                r2[i] = y_new[i] - y[i];
                r3[i] = h * k1[i] - r2[i];
                r4[i] = r2[i] - h * k7[i] - r3[i];
                r5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_sample < times.len() && (times[next_sample] <= t_new || last) {
                let theta = ((times[next_sample] - t) / h).clamp(0.0, 1.0);
                let mut s = [0.0; N];
                for i in 0..N {
                    s[i] = y[i]
                        + theta
                            * (r2[i]
                                + (1.0 - theta)
                                    * (r3[i] + theta * (r4[i] + (1.0 - theta) * r5[i])));
                }
                if next_sample == times.len() - 1 && last {
                    s = y_new;
                }
                post(&mut s);
                states.push(s);
                next_sample += 1;
            }
            y = y_new;
            post(&mut y);
            t = t_new;
            // FSAL, unless post() moved the state
            if y == y_new {
                k1 = k7;
            } else {
                f(t, &y, &mut k1)?;
                stats.evaluations += 1;
            }
            stats.steps += 1;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(h_max);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_min {
                return Err(WptError::Stiffness { t, h });
            }
        }
    }
    Ok(Solution {
        times,
        states,
        stats,
    })
}
