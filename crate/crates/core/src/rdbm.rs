//! Reflected drifted Brownian motion `X^μ` on `[0, ∞)` with generator
//! `u'' + μu'`, its local time at 0, elastic killing and hitting times.
//!
//! The increment over a step `h` is `μh + √(2h)·ξ`. Reflection uses the
//! Skorokhod map on each step: the regulator increment is
//! `max(0, −(X_k + min over the step of the free increment))`, where the
//! minimum is drawn exactly from the Brownian bridge between the step's
//! endpoints. The plain projection `max(0, −(X_k + ΔX))` is kept as an
//! alternative; it underestimates local time by `O(√h)`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::harness::{self, MeanEstimate};
use crate::rng::{path_rng, SimRng};
use crate::subordinators::{sample_h, sample_h_killed, TemperedSymbol};

/// How the discrete scheme enforces reflection at 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    /// Skorokhod map applied to an exactly sampled bridge minimum.
    #[default]
    BridgeMinimum,
    /// `Δγ = max(0, −(X_k + ΔX))`.
    Projection,
}

/// Time step and bias-control switches shared by every path simulator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub dt: f64,
    #[serde(default)]
    pub reflection: Reflection,
    /// Brownian-bridge crossing test for absorbing levels.
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
}

fn default_true() -> bool {
    true
}

impl Discretization {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            reflection: Reflection::BridgeMinimum,
            bridge_correction: true,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return domain(format!("time step must be positive, got {}", self.dt));
        }
        Ok(())
    }
}

/// Parameters of a single reflected path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdbmParams {
    pub mu: f64,
    /// Elastic coefficient; the path dies when `γ` passes an `Exp(c)` level.
    pub c: f64,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default)]
    pub reflection: Reflection,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
}

impl RdbmParams {
    pub fn new(mu: f64, c: f64, dt: f64, t_max: f64) -> Self {
        Self {
            mu,
            c,
            dt,
            t_max,
            reflection: Reflection::BridgeMinimum,
            bridge_correction: true,
        }
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            dt: self.dt,
            reflection: self.reflection,
            bridge_correction: self.bridge_correction,
        }
    }

    fn check(&self) -> Result<()> {
        self.discretization().check()?;
        if !(self.t_max > 0.0) || self.dt > self.t_max {
            return domain(format!("need 0 < dt ≤ t_max, got dt={}, t_max={}", self.dt, self.t_max));
        }
        if !(self.c >= 0.0) {
            return domain(format!("elastic coefficient must be nonnegative, got {}", self.c));
        }
        if !self.mu.is_finite() {
            return domain("drift must be finite");
        }
        Ok(())
    }
}

/// Why a recorded path ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopCause {
    HitLevel,
    ElasticKill,
    Horizon,
    Absorbed,
}

/// Per-point flag bits of a [`PathSample`].
pub mod flags {
    pub const HIT_LEVEL: u8 = 1;
    pub const KILLED: u8 = 2;
    pub const HORIZON: u8 = 4;
    pub const HOLDING: u8 = 8;
    pub const JUMP: u8 = 16;
    pub const ZERO_HIT: u8 = 32;
    pub const ABSORBED: u8 = 64;
}

/// A discretised trajectory with its local time at 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub local_time: Vec<f64>,
    pub flags: Vec<u8>,
    pub killed_at: Option<f64>,
    pub stopped_at: Option<f64>,
    pub stop_cause: Option<StopCause>,
}

impl PathSample {
    pub(crate) fn push(&mut self, t: f64, x: f64, gamma: f64, flag: u8) {
        self.times.push(t);
        self.values.push(x);
        self.local_time.push(gamma);
        self.flags.push(flag);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `(1/ε)·|{s ≤ t_end : X_s < ε}|`, a diagnostic estimate of `γ` at the
    /// end of the path. Holding intervals are excluded.
    pub fn occupation_local_time(&self, eps: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.times.len() {
            if self.flags[k] & flags::HOLDING != 0 && self.flags[k - 1] & flags::HOLDING != 0 {
                continue;
            }
            let h = self.times[k] - self.times[k - 1];
            let below = (self.values[k - 1] < eps) as u8 as f64 + (self.values[k] < eps) as u8 as f64;
            acc += 0.5 * h * below;
        }
        acc / eps
    }
}

/// Mutable state of a walker: time, position, local time at 0.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Walker {
    pub t: f64,
    pub x: f64,
    pub gamma: f64,
}

/// Stopping rules for [`Stepper::run`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Barriers {
    pub level: Option<f64>,
    /// Stop at the first visit of 0 instead of reflecting.
    pub absorb_at_zero: bool,
    /// Local-time level at which the elastic clock fires.
    pub kill_gamma: f64,
    /// Local-time level of the next boundary mark.
    pub mark_gamma: f64,
    pub t_end: f64,
}

impl Barriers {
    pub fn horizon(t_end: f64) -> Self {
        Self {
            level: None,
            absorb_at_zero: false,
            kill_gamma: f64::INFINITY,
            mark_gamma: f64::INFINITY,
            t_end,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Halt {
    Level,
    Zero,
    Kill,
    Mark,
    Horizon,
}

/// `exp(−a·b/h)` below this is treated as zero; no uniform is drawn.
const NEGLIGIBLE_EXPONENT: f64 = 40.0;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Stepper {
    pub mu: f64,
    pub disc: Discretization,
}

impl Stepper {
    pub fn new(mu: f64, disc: Discretization) -> Self {
        Self { mu, disc }
    }

    /// Advances `w` until a barrier fires. `observe` sees every grid point
    /// after it is reached, except the final one, which the caller records.
    pub fn run<R: Rng + ?Sized, F: FnMut(&Walker)>(
        &self,
        w: &mut Walker,
        b: &Barriers,
        rng: &mut R,
        mut observe: F,
    ) -> Halt {
        let dt = self.disc.dt;
        let full_sd = (2.0 * dt).sqrt();
        if let Some(level) = b.level {
            if w.x >= level {
                return Halt::Level;
            }
        }
        loop {
            let remaining = b.t_end - w.t;
            if remaining <= 1e-12 * dt {
                return Halt::Horizon;
            }
            let (h, sd) = if remaining < dt {
                (remaining, (2.0 * remaining).sqrt())
            } else {
                (dt, full_sd)
            };
            let z: f64 = rng.sample(StandardNormal);
            let dw = self.mu * h + sd * z;
            let x0 = w.x;
            let y = x0 + dw;

            if b.absorb_at_zero {
                if y <= 0.0 {
                    w.t += h * x0 / (x0 - y);
                    w.x = 0.0;
                    return Halt::Zero;
                }
                if self.disc.bridge_correction && x0 * y < NEGLIGIBLE_EXPONENT * h {
                    let u: f64 = rng.random();
                    if u < (-x0 * y / h).exp() {
                        w.t += 0.5 * h;
                        w.x = 0.0;
                        return Halt::Zero;
                    }
                }
                w.x = y;
            } else {
                let dg = match self.disc.reflection {
                    Reflection::Projection => (-y).max(0.0),
                    Reflection::BridgeMinimum => {
                        if y > 0.0 && x0 * y >= NEGLIGIBLE_EXPONENT * h {
                            0.0
                        } else {
                            let u = 1.0 - rng.random::<f64>();
                            let m = 0.5 * (dw - (dw * dw - 4.0 * h * u.ln()).sqrt());
                            (-(x0 + m)).max(0.0)
                        }
                    }
                };
                w.x = y + dg;
                w.gamma += dg;
            }
            let t0 = w.t;
            w.t += h;

            if w.gamma > b.kill_gamma {
                return Halt::Kill;
            }
            if let Some(level) = b.level {
                if w.x >= level {
                    let frac = ((level - x0) / (w.x - x0)).clamp(0.0, 1.0);
                    w.t = t0 + frac * h;
                    w.x = level;
                    return Halt::Level;
                }
                if self.disc.bridge_correction {
                    let gap = (level - x0) * (level - w.x);
                    if gap < NEGLIGIBLE_EXPONENT * h {
                        let u: f64 = rng.random();
                        if u < (-gap / h).exp() {
                            w.t = t0 + 0.5 * h;
                            w.x = level;
                            return Halt::Level;
                        }
                    }
                }
            }
            if w.gamma > b.mark_gamma {
                return Halt::Mark;
            }
            observe(w);
        }
    }
}

/// End state of a path without its trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOutcome {
    pub end_time: f64,
    pub end_value: f64,
    pub local_time: f64,
    pub cause: StopCause,
}

fn run_rdbm<R: Rng + ?Sized, F: FnMut(&Walker)>(
    params: &RdbmParams,
    x0: f64,
    stop_level: Option<f64>,
    rng: &mut R,
    observe: F,
) -> Result<(Walker, StopCause)> {
    params.check()?;
    if !(x0 >= 0.0) {
        return domain(format!("starting point must be nonnegative, got {x0}"));
    }
    if let Some(l) = stop_level {
        if !(l > 0.0) {
            return domain(format!("stop level must be positive, got {l}"));
        }
    }
    let kill_gamma = if params.c > 0.0 {
        rng.sample::<f64, _>(Exp1) / params.c
    } else {
        f64::INFINITY
    };
    let barriers = Barriers {
        level: stop_level,
        kill_gamma,
        ..Barriers::horizon(params.t_max)
    };
    let mut w = Walker {
        t: 0.0,
        x: x0,
        gamma: 0.0,
    };
    let halt = Stepper::new(params.mu, params.discretization()).run(&mut w, &barriers, rng, observe);
    let cause = match halt {
        Halt::Level => StopCause::HitLevel,
        Halt::Kill => StopCause::ElasticKill,
        _ => StopCause::Horizon,
    };
    Ok((w, cause))
}

/// Simulates one reflected path from `x0`, recording every grid point.
///
/// The path stops at the first passage of `stop_level`, at the elastic
/// kill, or at `t_max`.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &RdbmParams,
    x0: f64,
    stop_level: Option<f64>,
    rng: &mut R,
) -> Result<PathSample> {
    let mut path = PathSample::default();
    path.push(0.0, x0, 0.0, 0);
    let (w, cause) = run_rdbm(params, x0, stop_level, rng, |w| path.push(w.t, w.x, w.gamma, 0))?;
    let flag = match cause {
        StopCause::HitLevel => {
            path.stopped_at = Some(w.t);
            flags::HIT_LEVEL
        }
        StopCause::ElasticKill => {
            path.killed_at = Some(w.t);
            flags::KILLED
        }
        _ => flags::HORIZON,
    };
    path.stop_cause = Some(cause);
    if path.times.last() == Some(&w.t) && path.len() > 1 {
        *path.flags.last_mut().expect("non-empty") |= flag;
    } else {
        path.push(w.t, w.x, w.gamma, flag);
    }
    Ok(path)
}

/// Same draws as [`simulate_path`], keeping only the end state.
pub fn simulate_outcome<R: Rng + ?Sized>(
    params: &RdbmParams,
    x0: f64,
    stop_level: Option<f64>,
    rng: &mut R,
) -> Result<PathOutcome> {
    let (w, cause) = run_rdbm(params, x0, stop_level, rng, |_| {})?;
    Ok(PathOutcome {
        end_time: w.t,
        end_value: w.x,
        local_time: w.gamma,
        cause,
    })
}

/// First passage of 0 along a discretised path started at `x0 > 0`, with the
/// bridge crossing test. Returns `+∞` if the path reaches `escape_level`
/// first or survives to `t_max`.
pub fn pathwise_tau0<R: Rng + ?Sized>(
    x0: f64,
    mu: f64,
    disc: Discretization,
    t_max: f64,
    escape_level: Option<f64>,
    rng: &mut R,
) -> Result<f64> {
    disc.check()?;
    if !(x0 > 0.0) {
        return domain(format!("zero hitting time needs x > 0, got {x0}"));
    }
    let barriers = Barriers {
        level: escape_level,
        absorb_at_zero: true,
        ..Barriers::horizon(t_max)
    };
    let mut w = Walker {
        t: 0.0,
        x: x0,
        gamma: 0.0,
    };
    match Stepper::new(mu, disc).run(&mut w, &barriers, rng, |_| {}) {
        Halt::Zero => Ok(w.t),
        _ => Ok(f64::INFINITY),
    }
}

/// Exact draw of `τ_0` from `x`: `H_x` for `μ ≤ 0`, `H†_x` for `μ > 0`,
/// both with tempering `|μ|`.
pub fn sample_tau0_exact<R: Rng + ?Sized>(x: f64, mu: f64, rng: &mut R) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("zero hitting time needs x > 0, got {x}"));
    }
    let sym = TemperedSymbol::new(mu.abs())?;
    if mu <= 0.0 {
        sample_h(&sym, x, rng)
    } else {
        sample_h_killed(&sym, x, rng)
    }
}

/// `∫_0^{τ_ℓ} exp(−λt − κγ_t) dt` along one path (trapezoidal rule).
#[allow(clippy::too_many_arguments)]
pub fn weighted_occupation<R: Rng + ?Sized>(
    x: f64,
    ell: f64,
    mu: f64,
    kappa: f64,
    lambda: f64,
    disc: Discretization,
    t_max: f64,
    rng: &mut R,
) -> Result<f64> {
    disc.check()?;
    let barriers = Barriers {
        level: Some(ell),
        ..Barriers::horizon(t_max)
    };
    let weight = |t: f64, g: f64| (-lambda * t - kappa * g).exp();
    let mut w = Walker { t: 0.0, x, gamma: 0.0 };
    let mut prev = (0.0, weight(0.0, 0.0));
    let mut acc = 0.0;
    Stepper::new(mu, disc).run(&mut w, &barriers, rng, |w| {
        let cur = weight(w.t, w.gamma);
        acc += 0.5 * (w.t - prev.0) * (prev.1 + cur);
        prev = (w.t, cur);
    });
    let cur = weight(w.t, w.gamma);
    acc += 0.5 * (w.t - prev.0) * (prev.1 + cur);
    Ok(acc)
}

/// Monte Carlo estimate of `E_x[∫_0^{τ_ℓ} e^{−λt − (c+μ/2)γ_t} dt]`.
///
/// The elastic clock is disabled; the local-time weight is carried
/// explicitly. Paths are generated in parallel from streams
/// `(seed, domain, i)`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_functional_mc(
    x: f64,
    ell: f64,
    mu: f64,
    c: f64,
    lambda: f64,
    n_paths: usize,
    disc: Discretization,
    seed: u64,
    domain_id: u32,
) -> Result<MeanEstimate> {
    if !(x >= 0.0 && x < ell) {
        return domain(format!("need 0 ≤ x < ℓ, got x={x}, ℓ={ell}"));
    }
    if !(lambda >= 0.0) {
        return domain(format!("λ must be nonnegative, got {lambda}"));
    }
    let kappa = c + 0.5 * mu;
    let t_max = 1e6;
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng: SimRng = path_rng(seed, domain_id, i);
            weighted_occupation(x, ell, mu, kappa, lambda, disc, t_max, &mut rng)
        })
        .collect::<Result<_>>()?;
    harness::mean_of(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;

    #[test]
    fn rejects_negative_start() {
        let p = RdbmParams::new(0.0, 0.0, 1e-3, 1.0);
        let mut rng = path_rng(1, 0, 0);
        assert!(simulate_path(&p, -0.1, None, &mut rng).is_err());
        assert!(sample_tau0_exact(0.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn path_invariants_hold() {
        let p = RdbmParams::new(-0.5, 0.0, 1e-3, 3.0);
        for i in 0..50 {
            let mut rng = path_rng(2, 0, i);
            let path = simulate_path(&p, 0.2, None, &mut rng).unwrap();
            assert!(path.values.iter().all(|&x| x >= 0.0));
            for k in 1..path.len() {
                let dg = path.local_time[k] - path.local_time[k - 1];
                assert!(dg >= 0.0);
                if dg > 0.0 {
                    // the regulator only moves on steps that can touch 0
                    assert!(path.values[k] < 0.5 || path.values[k - 1] < 0.5);
                }
            }
            assert_eq!(path.stop_cause, Some(StopCause::Horizon));
            assert!((path.end_time() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_local_time_only_moves_at_reflection() {
        let p = RdbmParams {
            reflection: Reflection::Projection,
            ..RdbmParams::new(0.0, 0.0, 1e-3, 1.0)
        };
        let mut rng = path_rng(2, 1, 0);
        let path = simulate_path(&p, 0.0, None, &mut rng).unwrap();
        for k in 1..path.len() {
            if path.values[k] > 0.0 {
                assert_eq!(path.local_time[k], path.local_time[k - 1]);
            }
        }
    }

    #[test]
    fn level_stop_lies_in_horizon() {
        let p = RdbmParams::new(1.0, 0.0, 1e-3, 50.0);
        let mut rng = path_rng(3, 0, 0);
        let path = simulate_path(&p, 0.0, Some(1.0), &mut rng).unwrap();
        let t = path.stopped_at.unwrap();
        assert!(t > 0.0 && t <= 50.0);
        assert_eq!(*path.values.last().unwrap(), 1.0);
    }

    #[test]
    fn starting_above_level_stops_immediately() {
        let p = RdbmParams::new(1.0, 0.0, 1e-3, 5.0);
        let mut rng = path_rng(3, 0, 1);
        let out = simulate_outcome(&p, 2.0, Some(1.0), &mut rng).unwrap();
        assert_eq!(out.cause, StopCause::HitLevel);
        assert_eq!(out.end_time, 0.0);
    }

    #[test]
    fn huge_elastic_coefficient_kills_at_first_reflection() {
        let p = RdbmParams::new(0.0, 1e12, 1e-3, 5.0);
        let mut killed = 0;
        for i in 0..200 {
            let mut rng = path_rng(4, 0, i);
            let path = simulate_path(&p, 0.0, None, &mut rng).unwrap();
            if path.stop_cause == Some(StopCause::ElasticKill) {
                killed += 1;
                // dies on the first step with positive regulator increment
                let first_dg = path.local_time.iter().position(|&g| g > 0.0);
                assert_eq!(first_dg, Some(path.len() - 1));
            }
        }
        assert_eq!(killed, 200);
    }

    #[test]
    fn occupation_diagnostic_tracks_regulator() {
        let p = RdbmParams::new(0.0, 0.0, 1e-5, 1.0);
        let mut rng = path_rng(5, 0, 0);
        let path = simulate_path(&p, 0.0, None, &mut rng).unwrap();
        let gamma = *path.local_time.last().unwrap();
        let occ = path.occupation_local_time(0.02);
        assert!((occ - gamma).abs() < 0.25 * gamma.max(0.1), "{occ} vs {gamma}");
    }

    #[test]
    fn exact_tau0_vanishes_with_start() {
        let mut rng = path_rng(6, 0, 0);
        for _ in 0..100 {
            assert!(sample_tau0_exact(1e-8, -1.0, &mut rng).unwrap() < 1e-4);
        }
    }

    #[test]
    fn resolvent_rejects_start_at_level() {
        let r = resolvent_functional_mc(1.0, 1.0, 1.0, 0.0, 0.0, 10, Discretization::new(1e-3), 1, 0);
        assert!(r.is_err());
    }

    #[test]
    fn resolvent_near_level_is_small() {
        let est = resolvent_functional_mc(0.999, 1.0, 1.0, 0.0, 0.0, 2000, Discretization::new(1e-5), 1, 0).unwrap();
        assert!(est.mean < 2e-3, "{}", est.mean);
    }

    #[test]
    fn deterministic_given_stream() {
        let p = RdbmParams::new(0.3, 0.5, 1e-3, 1.0);
        let a = simulate_path(&p, 0.1, Some(2.0), &mut path_rng(9, 1, 3)).unwrap();
        let b = simulate_path(&p, 0.1, Some(2.0), &mut path_rng(9, 1, 3)).unwrap();
        assert_eq!(a, b);
        let o = simulate_outcome(&p, 0.1, Some(2.0), &mut path_rng(9, 1, 3)).unwrap();
        assert_eq!(o.end_time, a.end_time());
    }
}
