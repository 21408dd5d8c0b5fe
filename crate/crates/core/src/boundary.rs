//! Boundary-decorated processes.
//!
//! The edge process is the drifted reflected motion killed at `ℓ` whose
//! boundary visits carry holding intervals: boundary marks arrive at unit
//! rate in local time and each one freezes the path at 0 for a time
//! `H^Φ ∘ T`, `T ~ Exp(mean η_ε)`. Summed over marks this reproduces the
//! time change `V_t = t + H^Φ(η_ε γ_t)` in mean and gives i.i.d. holdings.
//!
//! The vertex process descends with drift `−m` to 0, jumps to an
//! exponential level, holds there and descends again, until a jump lands
//! below `h*`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rdbm::{flags, Barriers, Discretization, Halt, PathSample, Stepper, StopCause, Walker};
use crate::subordinators::{sample_boundary_jump, sample_h, sample_holding, HoldingSymbol, JumpKernel, TemperedSymbol};

/// A recorded path with the per-row level reached by a boundary jump
/// (`NaN` on rows without a jump).
#[derive(Clone, Debug, Default)]
pub struct BoundaryPath {
    pub path: PathSample,
    pub level_after_jump: Vec<f64>,
}

impl BoundaryPath {
    fn push(&mut self, t: f64, x: f64, gamma: f64, flag: u8) {
        self.path.push(t, x, gamma, flag);
        self.level_after_jump.push(f64::NAN);
    }

    fn push_jump(&mut self, t: f64, level: f64, gamma: f64, flag: u8) {
        self.path.push(t, level, gamma, flag | flags::JUMP);
        self.level_after_jump.push(level);
    }

    pub fn holding_flag(&self, row: usize) -> bool {
        self.path.flags[row] & flags::HOLDING != 0
    }

    pub fn jump_flag(&self, row: usize) -> bool {
        self.path.flags[row] & flags::JUMP != 0
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Sticky edge process on `[0, ℓ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeProcessParams {
    /// Drift (propagation velocity).
    pub v: f64,
    pub ell: f64,
    /// Stickiness `η_ε`; 0 gives instantaneous reflection.
    pub eta_eps: f64,
    pub phi: HoldingSymbol,
    #[serde(default)]
    pub c: f64,
}

impl EdgeProcessParams {
    /// Region-derived parameters: drift `v`, `η_ε = m/σ`, `Φ` tempered by `m`.
    pub fn from_region(m: f64, v: f64, sigma: f64, c: f64, ell: f64) -> Result<Self> {
        if !(m > 0.0) || !(sigma > 0.0) {
            return domain(format!("region needs m > 0 and σ > 0, got m={m}, σ={sigma}"));
        }
        let p = Self {
            v,
            ell,
            eta_eps: m / sigma,
            phi: HoldingSymbol::Tempered(TemperedSymbol::new(m)?),
            c,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return domain(format!("edge length must be positive, got {}", self.ell));
        }
        if !(self.eta_eps >= 0.0 && self.eta_eps.is_finite()) {
            return domain(format!("stickiness must be nonnegative, got {}", self.eta_eps));
        }
        if !(self.c >= 0.0) {
            return domain(format!("elastic coefficient must be nonnegative, got {}", self.c));
        }
        if !self.v.is_finite() {
            return domain("drift must be finite");
        }
        Ok(())
    }
}

/// Bookkeeping of one edge run. `end_time = diffusive_time + holding_time`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeStats {
    pub end_time: f64,
    pub diffusive_time: f64,
    pub holding_time: f64,
    /// Completed holding intervals, in order.
    pub holdings: Vec<f64>,
    /// Number of boundary visits that triggered a holding interval.
    pub visits: usize,
    pub local_time: f64,
    pub end_value: f64,
    pub cause: StopCause,
}

/// Full edge run: trajectory plus bookkeeping.
#[derive(Clone, Debug)]
pub struct EdgeRun {
    pub path: BoundaryPath,
    pub stats: EdgeStats,
}

fn run_edge<R: Rng + ?Sized>(
    p: &EdgeProcessParams,
    x0: f64,
    t_max: f64,
    disc: Discretization,
    rng: &mut R,
    mut rec: Option<&mut BoundaryPath>,
) -> Result<EdgeStats> {
    p.check()?;
    disc.check()?;
    if !(x0 >= 0.0 && x0 < p.ell) {
        return domain(format!("start must lie in [0, ℓ), got x0={x0}, ℓ={}", p.ell));
    }
    if !(t_max >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t_max}"));
    }
    let kill_gamma = if p.c > 0.0 {
        rng.sample::<f64, _>(Exp1) / p.c
    } else {
        f64::INFINITY
    };
    // η_ε = 0 draws no marks, so the run coincides with the plain reflected path
    let sticky = p.eta_eps > 0.0;
    let mut mark = if sticky {
        rng.sample::<f64, _>(Exp1)
    } else {
        f64::INFINITY
    };
    let stepper = Stepper::new(p.v, disc);
    let mut w = Walker {
        t: 0.0,
        x: x0,
        gamma: 0.0,
    };
    if let Some(r) = rec.as_deref_mut() {
        r.push(0.0, x0, 0.0, 0);
    }
    let mut holding_time = 0.0;
    let mut holdings = Vec::new();
    let mut visits = 0;
    let cause = loop {
        let barriers = Barriers {
            level: Some(p.ell),
            absorb_at_zero: false,
            kill_gamma,
            mark_gamma: mark,
            t_end: t_max,
        };
        let halt = stepper.run(&mut w, &barriers, rng, |w| {
            if let Some(r) = rec.as_deref_mut() {
                r.push(w.t, w.x, w.gamma, 0);
            }
        });
        match halt {
            Halt::Mark => {
                let hold = sample_holding(&p.phi, p.eta_eps, rng)?;
                visits += 1;
                let end = (w.t + hold).min(t_max);
                if let Some(r) = rec.as_deref_mut() {
                    r.push(w.t, 0.0, w.gamma, flags::HOLDING);
                    r.push(end, 0.0, w.gamma, flags::HOLDING);
                }
                holding_time += end - w.t;
                w.t = end;
                if end >= t_max {
                    break StopCause::Horizon;
                }
                holdings.push(hold);
                mark += rng.sample::<f64, _>(Exp1);
            }
            Halt::Level => break StopCause::HitLevel,
            Halt::Kill => break StopCause::ElasticKill,
            Halt::Horizon | Halt::Zero => break StopCause::Horizon,
        }
    };
    if let Some(r) = rec {
        let flag = match cause {
            StopCause::HitLevel => {
                r.path.stopped_at = Some(w.t);
                flags::HIT_LEVEL
            }
            StopCause::ElasticKill => {
                r.path.killed_at = Some(w.t);
                flags::KILLED
            }
            _ => flags::HORIZON,
        };
        r.path.stop_cause = Some(cause);
        r.push(w.t, w.x, w.gamma, flag);
    }
    Ok(EdgeStats {
        end_time: w.t,
        diffusive_time: w.t - holding_time,
        holding_time,
        holdings,
        visits,
        local_time: w.gamma,
        end_value: w.x,
        cause,
    })
}

/// Simulates the sticky edge process from `x0 ∈ [0, ℓ)` until it reaches
/// `ℓ`, is killed, or hits `t_max`.
pub fn simulate_edge<R: Rng + ?Sized>(
    params: &EdgeProcessParams,
    x0: f64,
    t_max: f64,
    disc: Discretization,
    rng: &mut R,
) -> Result<EdgeRun> {
    let mut path = BoundaryPath::default();
    let stats = run_edge(params, x0, t_max, disc, rng, Some(&mut path))?;
    Ok(EdgeRun { path, stats })
}

/// Same draws as [`simulate_edge`] without recording the trajectory.
pub fn edge_outcome<R: Rng + ?Sized>(
    params: &EdgeProcessParams,
    x0: f64,
    t_max: f64,
    disc: Discretization,
    rng: &mut R,
) -> Result<EdgeStats> {
    run_edge(params, x0, t_max, disc, rng, None)
}

/// How the descent to 0 is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccumulationMode {
    /// Exact inverse Gaussian hitting time.
    #[default]
    Fast,
    /// Discretised path with bridge-corrected zero detection.
    Path,
}

/// Jump-and-hold vertex process with drift `−m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexProcessParams {
    pub m: f64,
    pub eta_nu: f64,
    pub psi: HoldingSymbol,
    pub jump: JumpKernel,
    #[serde(default)]
    pub h_star: f64,
}

impl VertexProcessParams {
    pub fn check(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return domain(format!("vertex drift magnitude must be positive, got {}", self.m));
        }
        if !(self.eta_nu >= 0.0 && self.eta_nu.is_finite()) {
            return domain(format!("post-jump stickiness must be nonnegative, got {}", self.eta_nu));
        }
        if !(self.h_star >= 0.0) {
            return domain(format!("absorption threshold must be nonnegative, got {}", self.h_star));
        }
        JumpKernel::new(self.jump.eta_eps)?;
        Ok(())
    }
}

/// One descent of the vertex process and what happened at its end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Excursion {
    pub start_time: f64,
    pub start_level: f64,
    /// Time to reach 0 from `start_level`; `None` if the horizon came first.
    pub accumulation: Option<f64>,
    /// Level drawn at the hit of 0.
    pub jump_level: Option<f64>,
    /// Holding at the post-jump level (`None` when absorbed or cut off).
    pub holding: Option<f64>,
    pub absorbed: bool,
}

#[derive(Clone, Debug)]
pub struct VertexRun {
    pub path: Option<BoundaryPath>,
    pub excursions: Vec<Excursion>,
    pub absorbed_at: Option<f64>,
    pub end_time: f64,
}

/// Simulates the vertex process from `h0 > 0` up to absorption or `t_max`.
///
/// The path is recorded only in [`AccumulationMode::Path`]. Its `gamma`
/// column counts boundary hits.
pub fn simulate_vertex<R: Rng + ?Sized>(
    params: &VertexProcessParams,
    h0: f64,
    t_max: f64,
    mode: AccumulationMode,
    disc: Discretization,
    rng: &mut R,
) -> Result<VertexRun> {
    params.check()?;
    if !(h0 > 0.0 && h0.is_finite()) {
        return domain(format!("starting level must be positive, got {h0}"));
    }
    if !(t_max >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t_max}"));
    }
    let sym = TemperedSymbol::new(params.m)?;
    let stepper = Stepper::new(-params.m, disc);
    let mut path = match mode {
        AccumulationMode::Path => {
            disc.check()?;
            let mut p = BoundaryPath::default();
            p.push(0.0, h0, 0.0, 0);
            Some(p)
        }
        AccumulationMode::Fast => None,
    };
    let mut excursions = Vec::new();
    let mut t = 0.0;
    let mut level = h0;
    let mut hits = 0.0;
    let mut absorbed_at = None;
    loop {
        let mut exc = Excursion {
            start_time: t,
            start_level: level,
            accumulation: None,
            jump_level: None,
            holding: None,
            absorbed: false,
        };
        let hit = match (&mut path, mode) {
            (Some(p), AccumulationMode::Path) => {
                let mut w = Walker {
                    t,
                    x: level,
                    gamma: hits,
                };
                let b = Barriers {
                    absorb_at_zero: true,
                    ..Barriers::horizon(t_max)
                };
                let halt = stepper.run(&mut w, &b, rng, |w| p.push(w.t, w.x, w.gamma, 0));
                if halt == Halt::Zero {
                    Some(w.t)
                } else {
                    None
                }
            }
            _ => {
                let tau = sample_h(&sym, level, rng)?;
                (t + tau <= t_max).then_some(t + tau)
            }
        };
        let Some(hit_time) = hit else {
            excursions.push(exc);
            t = t_max;
            if let Some(p) = path.as_mut() {
                let x = p.path.values.last().copied().unwrap_or(level);
                p.push(t_max, x, hits, flags::HORIZON);
                p.path.stop_cause = Some(StopCause::Horizon);
            }
            break;
        };
        exc.accumulation = Some(hit_time - t);
        t = hit_time;
        hits += 1.0;
        let j = sample_boundary_jump(&params.jump, rng);
        exc.jump_level = Some(j);
        if let Some(p) = path.as_mut() {
            p.push(t, 0.0, hits, flags::ZERO_HIT);
        }
        if j < params.h_star {
            exc.absorbed = true;
            excursions.push(exc);
            absorbed_at = Some(t);
            if let Some(p) = path.as_mut() {
                p.push_jump(t, j, hits, flags::ABSORBED);
                p.path.stop_cause = Some(StopCause::Absorbed);
                p.path.stopped_at = Some(t);
            }
            break;
        }
        let hold = sample_holding(&params.psi, params.eta_nu, rng)?;
        let end = (t + hold).min(t_max);
        if let Some(p) = path.as_mut() {
            p.push_jump(t, j, hits, flags::HOLDING);
            p.push(end, j, hits, flags::HOLDING);
        }
        if end >= t_max {
            excursions.push(exc);
            t = t_max;
            if let Some(p) = path.as_mut() {
                *p.path.flags.last_mut().expect("non-empty") |= flags::HORIZON;
                p.path.stop_cause = Some(StopCause::Horizon);
            }
            break;
        }
        exc.holding = Some(hold);
        excursions.push(exc);
        t = end;
        level = j;
    }
    Ok(VertexRun {
        path,
        excursions,
        absorbed_at,
        end_time: t,
    })
}

/// Pointwise `h·exp(−k·x)`; times, local time and flags are kept.
pub fn scale_transform(path: &PathSample, h: f64, k: f64) -> PathSample {
    let mut out = path.clone();
    for v in out.values.iter_mut() {
        *v = h * (-k * *v).exp();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdbm::{simulate_outcome, RdbmParams};
    use crate::rng::path_rng;

    fn edge(v: f64, eta: f64) -> EdgeProcessParams {
        EdgeProcessParams {
            v,
            ell: 1.0,
            eta_eps: eta,
            phi: HoldingSymbol::Identity,
            c: 0.0,
        }
    }

    #[test]
    fn zero_stickiness_reproduces_reflected_path() {
        let disc = Discretization::new(1e-3);
        for i in 0..20 {
            let a = edge_outcome(&edge(1.0, 0.0), 0.2, 50.0, disc, &mut path_rng(3, 0, i)).unwrap();
            let b = simulate_outcome(
                &RdbmParams::new(1.0, 0.0, 1e-3, 50.0),
                0.2,
                Some(1.0),
                &mut path_rng(3, 0, i),
            )
            .unwrap();
            assert_eq!(a.end_time, b.end_time);
            assert_eq!(a.visits, 0);
        }
    }

    #[test]
    fn bookkeeping_adds_up() {
        let disc = Discretization::new(1e-3);
        for i in 0..50 {
            let run = simulate_edge(&edge(0.5, 0.8), 0.0, 20.0, disc, &mut path_rng(4, 0, i)).unwrap();
            let s = &run.stats;
            assert!((s.end_time - s.diffusive_time - s.holding_time).abs() < 1e-12);
            assert!(s.end_time >= s.diffusive_time);
            assert_eq!(run.path.path.end_time(), s.end_time);
            let again = edge_outcome(&edge(0.5, 0.8), 0.0, 20.0, disc, &mut path_rng(4, 0, i)).unwrap();
            assert_eq!(&again, s);
            let holds = run.path.path.flags.iter().filter(|f| **f & flags::HOLDING != 0).count();
            assert!(holds >= 2 * s.holdings.len());
        }
    }

    #[test]
    fn edge_rejects_bad_start() {
        let disc = Discretization::new(1e-3);
        assert!(edge_outcome(&edge(1.0, 0.5), 1.0, 1.0, disc, &mut path_rng(0, 0, 0)).is_err());
        assert!(edge_outcome(&edge(1.0, 0.5), -0.1, 1.0, disc, &mut path_rng(0, 0, 0)).is_err());
    }

    fn vertex(h_star: f64) -> VertexProcessParams {
        VertexProcessParams {
            m: 1.0,
            eta_nu: 0.5,
            psi: HoldingSymbol::Identity,
            jump: JumpKernel::new(1.0).unwrap(),
            h_star,
        }
    }

    #[test]
    fn vertex_levels_stay_positive() {
        let disc = Discretization::new(1e-3);
        for i in 0..20 {
            let run = simulate_vertex(
                &vertex(0.3),
                1.0,
                30.0,
                AccumulationMode::Path,
                disc,
                &mut path_rng(5, 0, i),
            )
            .unwrap();
            let p = run.path.unwrap();
            for (k, lvl) in p.level_after_jump.iter().enumerate() {
                if p.jump_flag(k) && !run.absorbed_at.is_some_and(|a| a == p.path.times[k]) {
                    assert!(*lvl > 0.0);
                }
            }
            for e in &run.excursions[..run.excursions.len() - 1] {
                assert!(e.holding.is_some());
            }
        }
    }

    #[test]
    fn zero_threshold_never_absorbs() {
        let disc = Discretization::new(1e-3);
        for i in 0..200 {
            let run = simulate_vertex(
                &vertex(0.0),
                0.5,
                20.0,
                AccumulationMode::Fast,
                disc,
                &mut path_rng(6, 0, i),
            )
            .unwrap();
            assert!(run.absorbed_at.is_none());
        }
    }

    #[test]
    fn vertex_rejects_bad_start() {
        let disc = Discretization::new(1e-3);
        assert!(simulate_vertex(
            &vertex(0.0),
            0.0,
            1.0,
            AccumulationMode::Fast,
            disc,
            &mut path_rng(0, 0, 0)
        )
        .is_err());
    }

    #[test]
    fn scale_transform_examples() {
        let mut p = PathSample::default();
        p.push(0.0, 0.0, 0.0, 0);
        p.push(0.1, 2.0, 0.0, 0);
        let flat = scale_transform(&p, 3.0, 0.0);
        assert_eq!(flat.values, vec![3.0, 3.0]);
        let s = scale_transform(&p, 2.0, 1.0);
        assert_eq!(s.values[0], 2.0);
        assert!(s.values[1] < s.values[0]);
        assert_eq!(s.times, p.times);
    }
}
