//! Oracle suites. Each check simulates with streams of its own domain id,
//! compares against a closed form or an independent exact sampler, and
//! yields an [`OracleReport`].

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analytics;
use crate::boundary::{edge_outcome, simulate_vertex, AccumulationMode, EdgeProcessParams, VertexProcessParams};
use crate::error::{Error, Result};
use crate::graph::{build_k_ary_network, chain, simulate_q, GraphPosition, QOptions, Region};
use crate::harness::{ks_one_sample, ks_two_sample, mean_of, proportion_under, try_draw, MeanEstimate, OracleReport};
use crate::quake::{empirical_gr_curve, region_passage_times, simulate_quake, InitialLevel, QuakeOptions};
use crate::rdbm::{
    pathwise_tau0, resolvent_functional_mc, sample_tau0_exact, simulate_outcome, Discretization, RdbmParams,
    Reflection, StopCause,
};
use crate::subordinators::{
    sample_h, sample_h_killed, sample_holding, sample_local_time_law, HoldingSymbol, JumpKernel, TemperedSymbol,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Subordinators,
    Rdbm,
    Boundary,
    Graph,
    Quake,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["subordinators", "rdbm", "boundary", "graph", "quake", "all"];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Subordinators => "subordinators",
            Suite::Rdbm => "rdbm",
            Suite::Boundary => "boundary",
            Suite::Graph => "graph",
            Suite::Quake => "quake",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "subordinators" => Suite::Subordinators,
            "rdbm" => Suite::Rdbm,
            "boundary" => Suite::Boundary,
            "graph" => Suite::Graph,
            "quake" => Suite::Quake,
            "all" => Suite::All,
            other => return Err(Error::Config(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub z_threshold: f64,
    pub ks_alpha: f64,
    /// Simulate with the drift sign flipped while keeping the oracles.
    pub negative_control: bool,
    /// Upper bound on every check's sample count.
    pub max_paths: Option<usize>,
    pub fine_dt: f64,
    pub coarse_dt: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 20240611,
            z_threshold: 3.0,
            ks_alpha: 0.01,
            negative_control: false,
            max_paths: None,
            fine_dt: 1e-4,
            coarse_dt: 1e-3,
        }
    }
}

/// One row of the Gutenberg–Richter series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrRow {
    pub n: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub power_law: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Validation {
    pub reports: Vec<OracleReport>,
    pub gr_curve: Vec<GrRow>,
}

impl Validation {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(OracleReport::passed)
    }
}

// stream domains, one per check
mod dom {
    pub const LAPLACE: u32 = 1;
    pub const KILLED: u32 = 2;
    pub const HOLD_ID: u32 = 3;
    pub const EXIT_FINE: u32 = 10;
    pub const EXIT_BIAS: u32 = 11;
    pub const TAU0_PATH: u32 = 12;
    pub const TAU0_EXACT: u32 = 13;
    pub const KILLED_PATH: u32 = 14;
    pub const LT_PATH: u32 = 15;
    pub const LT_ORACLE: u32 = 16;
    pub const RESOLVENT: u32 = 17;
    pub const KERNEL: u32 = 18;
    pub const EDGE_FLAT: u32 = 20;
    pub const EDGE_RDBM: u32 = 21;
    pub const EDGE_MEAN: u32 = 22;
    pub const STICKY: u32 = 23;
    pub const EDGE_HOLD_ID: u32 = 24;
    pub const EDGE_HOLD_PHI: u32 = 25;
    pub const HOLD_PHI_ORACLE: u32 = 26;
    pub const VERTEX_PATH: u32 = 27;
    pub const VERTEX_EXACT: u32 = 28;
    pub const VERTEX_ABSORB: u32 = 29;
    pub const Q_STAR: u32 = 30;
    pub const Q_EDGE: u32 = 31;
    pub const GR: u32 = 40;
    pub const QUAKE_3: u32 = 41;
    pub const GR_3: u32 = 42;
}

struct Ctx {
    cfg: ValidationConfig,
}

impl Ctx {
    fn n(&self, nominal: usize) -> usize {
        self.cfg.max_paths.map_or(nominal, |m| m.min(nominal)).max(20)
    }

    fn drift(&self, mu: f64) -> f64 {
        if self.cfg.negative_control {
            -mu
        } else {
            mu
        }
    }

    fn z(&self, name: &str, oracle: f64, est: &MeanEstimate) -> OracleReport {
        OracleReport::z_test(name, oracle, est, self.cfg.z_threshold).with("seed", self.cfg.seed)
    }

    fn ks(&self, name: &str, samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<OracleReport> {
        let r = ks_one_sample(samples, cdf)?;
        Ok(OracleReport::ks(name, &r, samples.len(), self.cfg.ks_alpha).with("seed", self.cfg.seed))
    }

    fn ks2(&self, name: &str, a: &[f64], b: &[f64]) -> Result<OracleReport> {
        let r = ks_two_sample(a, b)?;
        Ok(OracleReport::ks(name, &r, a.len().min(b.len()), self.cfg.ks_alpha)
            .with("seed", self.cfg.seed)
            .with("n_other", a.len().max(b.len())))
    }
}

/// Runs `suite` and returns every report in a fixed order.
pub fn run_suite(suite: Suite, cfg: &ValidationConfig) -> Result<Validation> {
    let ctx = Ctx { cfg: *cfg };
    let mut out = Validation::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Subordinators {
        out.reports.extend(subordinators(&ctx)?);
    }
    if all || suite == Suite::Rdbm {
        out.reports.extend(rdbm(&ctx)?);
    }
    if all || suite == Suite::Boundary {
        out.reports.extend(boundary(&ctx)?);
    }
    if all || suite == Suite::Graph {
        out.reports.extend(graph(&ctx)?);
    }
    if all || suite == Suite::Quake {
        let (reports, rows) = quake(&ctx)?;
        out.reports.extend(reports);
        out.gr_curve = rows;
    }
    Ok(out)
}

fn subordinators(ctx: &Ctx) -> Result<Vec<OracleReport>> {
    let seed = ctx.cfg.seed;
    let mut out = Vec::new();
    let sym = TemperedSymbol::new(2.0)?;
    let hs = try_draw(ctx.n(1_000_000), seed, dom::LAPLACE, |r| sample_h(&sym, 1.0, r))?;
    for lambda in [0.5, 1.0, 2.0, 4.0] {
        let xs: Vec<f64> = hs.iter().map(|h| (-lambda * h).exp()).collect();
        out.push(
            ctx.z(
                &format!("subordinators.laplace_transform[lambda={lambda}]"),
                analytics::laplace_h(lambda, 1.0, 2.0)?,
                &mean_of(&xs)?,
            )
            .with("ell", 1.0)
            .with("mu", 2.0),
        );
    }
    out.push(ctx.z("subordinators.inverse_gaussian_mean", 0.5, &mean_of(&hs)?));

    let sym = TemperedSymbol::new(1.0)?;
    let killed = try_draw(ctx.n(200_000), seed, dom::KILLED, |r| sample_h_killed(&sym, 1.0, r))?;
    let finite = killed.iter().filter(|x| x.is_finite()).count();
    out.push(ctx.z(
        "subordinators.killed_finite_probability",
        (-1.0f64).exp(),
        &proportion_under(finite, killed.len(), (-1.0f64).exp()),
    ));
    let truncated: Vec<f64> = killed.iter().map(|&x| if x.is_finite() { x } else { 0.0 }).collect();
    out.push(
        ctx.z(
            "subordinators.killed_truncated_mean",
            analytics::truncated_mean_tau0_pos(1.0, 1.0)?,
            &mean_of(&truncated)?,
        )
        .with("reading", "E[H_x; x < T]"),
    );
    let conditional = mean_of(&killed)?;
    out.push(
        ctx.z(
            "subordinators.killed_conditional_mean",
            analytics::conditional_mean_tau0_pos(1.0, 1.0)?,
            &conditional,
        )
        .with("finite_fraction", conditional.finite_fraction),
    );

    let eta = 0.5;
    let holds = try_draw(ctx.n(100_000), seed, dom::HOLD_ID, |r| {
        sample_holding(&HoldingSymbol::Identity, eta, r)
    })?;
    out.push(ctx.ks("subordinators.holding_identity_ks", &holds, |t| 1.0 - (-t / eta).exp())?);
    Ok(out)
}

fn rdbm(ctx: &Ctx) -> Result<Vec<OracleReport>> {
    let seed = ctx.cfg.seed;
    let mut out = Vec::new();
    let fine = ctx.cfg.fine_dt;
    let coarse = ctx.cfg.coarse_dt;

    // mean first passage of ℓ = 1 from 0 with μ = 1
    let mu = ctx.drift(1.0);
    let oracle = analytics::mean_tau_ell(0.0, 1.0, 1.0)?;
    let exit_times = |dt: f64, reflection: Reflection, n: usize, dom: u32| -> Result<Vec<f64>> {
        let p = RdbmParams {
            reflection,
            ..RdbmParams::new(mu, 0.0, dt, 1e4)
        };
        try_draw(n, seed, dom, |r| {
            simulate_outcome(&p, 0.0, Some(1.0), r).map(|o| o.end_time)
        })
    };
    let n = ctx.n(100_000);
    let est = mean_of(&exit_times(fine, Reflection::BridgeMinimum, n, dom::EXIT_FINE)?)?;
    out.push(
        ctx.z("rdbm.mean_exit_time", oracle, &est)
            .with("dt", fine)
            .with("reflection", "bridge_minimum"),
    );
    let coarse_est = mean_of(&exit_times(coarse, Reflection::Projection, n, dom::EXIT_BIAS)?)?;
    let fine_est = mean_of(&exit_times(fine, Reflection::Projection, n, dom::EXIT_BIAS)?)?;
    out.push(
        OracleReport::at_most(
            "rdbm.mean_exit_time.bias_shrinks",
            (coarse_est.mean - oracle).abs(),
            (fine_est.mean - oracle).abs(),
            fine_est.std_error,
        )
        .with("reflection", "projection")
        .with("dt", [coarse, fine])
        .with("estimates", [coarse_est.mean, fine_est.mean]),
    );

    // zero hitting time from 1 with μ = −1
    let mu = ctx.drift(-1.0);
    let t_cap = 50.0;
    let disc = Discretization::new(fine);
    let n = ctx.n(10_000);
    let path = try_draw(n, seed, dom::TAU0_PATH, |r| {
        pathwise_tau0(1.0, mu, disc, t_cap, Some(15.0), r)
    })?;
    let exact = try_draw(n, seed, dom::TAU0_EXACT, |r| sample_tau0_exact(1.0, -1.0, r))?;
    out.push(ctx.ks2("rdbm.hitting_time_ks", &path, &exact)?.with("dt", fine));
    let capped: Vec<f64> = path.iter().map(|t| t.min(t_cap)).collect();
    out.push(
        ctx.z(
            "rdbm.hitting_time_mean",
            analytics::mean_tau0(1.0, -1.0)?,
            &mean_of(&capped)?,
        )
        .with("dt", fine),
    );

    // P(τ_0 < ∞) from 1 with μ = 1; a path reaching level 12 returns to 0
    // with probability e^{-12}, far below the standard error
    let mu = ctx.drift(1.0);
    let n = ctx.n(100_000);
    let disc = Discretization::new(1e-2);
    let hits = try_draw(n, seed, dom::KILLED_PATH, |r| {
        pathwise_tau0(1.0, mu, disc, 1e4, Some(12.0), r)
    })?;
    let k = hits.iter().filter(|t| t.is_finite()).count();
    let p0 = (-1.0f64).exp();
    out.push(
        ctx.z("rdbm.killed_hit_probability", p0, &proportion_under(k, n, p0))
            .with("dt", 1e-2)
            .with("escape_level", 12.0),
    );

    // local time at t = 1 with μ = −1
    let mu = ctx.drift(-1.0);
    let n = ctx.n(10_000);
    let p = RdbmParams::new(mu, 0.0, coarse, 1.0);
    let gam = try_draw(n, seed, dom::LT_PATH, |r| {
        simulate_outcome(&p, 0.0, None, r).map(|o| o.local_time)
    })?;
    let ds = 1e-3;
    let lt = try_draw(n, seed, dom::LT_ORACLE, |r| sample_local_time_law(-1.0, 1.0, ds, r))?;
    out.push(
        ctx.ks2("rdbm.local_time_law_ks", &gam, &lt)?
            .with("dt", coarse)
            .with("grid", ds),
    );

    // weighted resolvent at λ = 1, c = 1, μ = 1, ℓ = 1, x = 0
    let mu = ctx.drift(1.0);
    let n = ctx.n(40_000);
    let est = resolvent_functional_mc(
        0.0,
        1.0,
        mu,
        1.0,
        1.0,
        n,
        Discretization::new(fine),
        seed,
        dom::RESOLVENT,
    )?;
    let closed = analytics::resolvent_closed_form(1.0, 0.0, 1.0, 1.0, 1.0)?;
    let exact = analytics::resolvent_exact(1.0, 0.0, 1.0, 1.0, 1.5)?;
    out.push(
        ctx.z("rdbm.resolvent_closed_form", closed, &est)
            .with("dt", fine)
            .with("weight", "c + mu/2"),
    );
    out.push(
        ctx.z("rdbm.resolvent_boundary_value_problem", exact, &est)
            .with("dt", fine),
    );
    let mut worst: f64 = 0.0;
    for &m in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        for &ell in &[0.5, 1.0, 3.0] {
            for frac in [0.0, 0.3, 0.7] {
                let x = frac * ell;
                let a = analytics::resolvent_closed_form(0.0, x, ell, m, 0.0)?;
                let b = analytics::mean_tau_ell(x, ell, m)?;
                worst = worst.max(((a - b) / b).abs());
            }
        }
    }
    out.push(
        OracleReport::tolerance("rdbm.resolvent_zero_limit", 0.0, worst, 1e-8).with("measure", "max relative error"),
    );

    // elastic transition kernel at t = 0.5 from 0.3, μ = 0.7, c = 0.4
    let (t, x0, mu_k, c) = (0.5, 0.3, 0.7, 0.4);
    let n = ctx.n(12_500);
    let p = RdbmParams::new(ctx.drift(mu_k), c, coarse, t);
    let ends = try_draw(n, seed, dom::KERNEL, |r| simulate_outcome(&p, x0, None, r))?;
    let alive: Vec<f64> = ends
        .iter()
        .filter(|o| o.cause == StopCause::Horizon)
        .map(|o| o.end_value)
        .collect();
    let survival = analytics::survival_probability(t, x0, mu_k, c)?;
    out.push(
        ctx.z(
            "rdbm.elastic_survival",
            survival,
            &proportion_under(alive.len(), n, survival),
        )
        .with("dt", coarse),
    );
    out.push(
        ctx.ks("rdbm.transition_density_ks", &alive, |y| {
            analytics::transition_mass_below(t, x0, y, mu_k, c).unwrap_or(f64::NAN) / survival
        })?
        .with("dt", coarse),
    );
    Ok(out)
}

fn boundary(ctx: &Ctx) -> Result<Vec<OracleReport>> {
    let seed = ctx.cfg.seed;
    let coarse = ctx.cfg.coarse_dt;
    let disc = Discretization::new(coarse);
    let mut out = Vec::new();
    let t_max = 1e4;

    let flat = EdgeProcessParams {
        v: 1.0,
        ell: 1.0,
        eta_eps: 0.0,
        phi: HoldingSymbol::Identity,
        c: 0.0,
    };
    let n = ctx.n(10_000);
    let a = try_draw(n, seed, dom::EDGE_FLAT, |r| {
        edge_outcome(&flat, 0.0, t_max, disc, r).map(|s| s.end_time)
    })?;
    let p = RdbmParams::new(1.0, 0.0, coarse, t_max);
    let b = try_draw(n, seed, dom::EDGE_RDBM, |r| {
        simulate_outcome(&p, 0.0, Some(1.0), r).map(|o| o.end_time)
    })?;
    out.push(ctx.ks2("boundary.edge_without_stickiness_ks", &a, &b)?);

    let phi = TemperedSymbol::new(1.0)?;
    let n = ctx.n(20_000);
    for (k, eta) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let params = EdgeProcessParams {
            v: 1.0,
            ell: 1.0,
            eta_eps: eta,
            phi: HoldingSymbol::Tempered(phi),
            c: 0.0,
        };
        let times = try_draw(n, seed, dom::EDGE_MEAN + 100 * k as u32, |r| {
            edge_outcome(&params, 0.0, t_max, disc, r).map(|s| s.end_time)
        })?;
        let general = analytics::mean_exit_sticky_general(0.0, 1.0, 1.0, eta, phi.derivative_at_zero())?;
        out.push(
            ctx.z(
                &format!("boundary.edge_mean_exit[eta={eta}]"),
                general,
                &mean_of(&times)?,
            )
            .with("stated_formula", analytics::mean_exit_sticky(0.0, 1.0, 1.0, eta)?)
            .with("dt", coarse),
        );
    }

    // extra time at 0 before exit, δ = 1 and δ = 0
    let n = ctx.n(40_000);
    for delta in [1u8, 0] {
        let eta = analytics::sticky_parameter(0.5, 1.0, delta);
        let params = EdgeProcessParams {
            v: 1.0,
            ell: 1.0,
            eta_eps: eta,
            phi: HoldingSymbol::Identity,
            c: 0.0,
        };
        let extra = try_draw(n, seed, dom::STICKY + 100 * delta as u32, |r| {
            edge_outcome(&params, 0.0, t_max, disc, r).map(|s| s.holding_time)
        })?;
        let oracle = analytics::mean_sticky_extra(0.0, 1.0, 1.0, 0.5, delta)?;
        out.push(
            ctx.z(
                &format!("boundary.sticky_extra_time[delta={delta}]"),
                oracle,
                &mean_of(&extra)?,
            )
            .with("dt", coarse),
        );
    }

    // holding intervals pooled over edge runs
    let n = ctx.n(12_000);
    let eta = 0.5;
    let id_edge = EdgeProcessParams {
        v: 0.2,
        ell: 1.0,
        eta_eps: eta,
        phi: HoldingSymbol::Identity,
        c: 0.0,
    };
    let runs = try_draw(n, seed, dom::EDGE_HOLD_ID, |r| {
        edge_outcome(&id_edge, 0.0, t_max, disc, r)
    })?;
    let holds: Vec<f64> = runs.into_iter().flat_map(|s| s.holdings).collect();
    out.push(ctx.ks("boundary.holding_identity_ks", &holds, |t| 1.0 - (-t / eta).exp())?);
    let (m, sigma) = (1.0, 2.0);
    let phi_edge = EdgeProcessParams::from_region(m, 0.2, sigma, 0.0, 1.0)?;
    let runs = try_draw(n, seed, dom::EDGE_HOLD_PHI, |r| {
        edge_outcome(&phi_edge, 0.0, t_max, disc, r)
    })?;
    let holds: Vec<f64> = runs.into_iter().flat_map(|s| s.holdings).collect();
    let reference = try_draw(holds.len(), seed, dom::HOLD_PHI_ORACLE, |r| {
        sample_holding(&phi_edge.phi, phi_edge.eta_eps, r)
    })?;
    out.push(ctx.ks2("boundary.holding_tempered_ks", &holds, &reference)?);
    out.push(ctx.z("boundary.holding_mean", 1.0 / sigma, &mean_of(&holds)?));

    // vertex process
    let vp = VertexProcessParams {
        m: 1.0,
        eta_nu: 0.5,
        psi: HoldingSymbol::Identity,
        jump: JumpKernel::new(1.0)?,
        h_star: 0.5,
    };
    let n = ctx.n(10_000);
    let acc = try_draw(n, seed, dom::VERTEX_PATH, |r| {
        let run = simulate_vertex(&vp, 1.0, t_max, AccumulationMode::Path, disc, r)?;
        Ok(run.excursions[0].accumulation.unwrap_or(f64::INFINITY))
    })?;
    let sym = TemperedSymbol::new(1.0)?;
    let exact = try_draw(n, seed, dom::VERTEX_EXACT, |r| sample_h(&sym, 1.0, r))?;
    out.push(
        ctx.ks2("boundary.vertex_accumulation_ks", &acc, &exact)?
            .with("dt", coarse),
    );

    let n = ctx.n(100_000);
    let counts = try_draw(n, seed, dom::VERTEX_ABSORB, |r| {
        simulate_vertex(&vp, 1.0, 1e9, AccumulationMode::Fast, disc, r).map(|run| run.excursions.len())
    })?;
    let q = (-vp.h_star / vp.jump.eta_eps).exp();
    let first_absorbed = counts.iter().filter(|&&k| k == 1).count();
    out.push(ctx.z(
        "boundary.vertex_absorption_probability",
        1.0 - q,
        &proportion_under(first_absorbed, n, 1.0 - q),
    ));
    for k in [2usize, 3] {
        let exists = counts.iter().filter(|&&c| c >= k).count();
        let p0 = q.powi(k as i32 - 1);
        out.push(ctx.z(
            &format!("boundary.vertex_excursion_survival[k={k}]"),
            p0,
            &proportion_under(exists, n, p0),
        ));
    }
    Ok(out)
}

fn graph(ctx: &Ctx) -> Result<Vec<OracleReport>> {
    let seed = ctx.cfg.seed;
    let coarse = ctx.cfg.coarse_dt;
    let disc = Discretization::new(coarse);
    let mut out = Vec::new();
    let region = Region::new(0, 1.0, 1.0, 2.0, 0.0);
    let net = build_k_ary_network(3, 1, region, 1.0)?;
    let opts = QOptions {
        stop_at_first_switch: true,
        ..QOptions::default()
    };
    let n = ctx.n(10_000);
    let runs = try_draw(n, seed, dom::Q_STAR, |r| {
        simulate_q(&net, GraphPosition::vertex(0), 1e4, &opts, disc, r)
    })?;
    let exits: Vec<f64> = runs.iter().map(|q| q.first_switch().unwrap_or(f64::INFINITY)).collect();
    let edge = EdgeProcessParams::from_region(region.m, region.v, region.sigma, region.c, 1.0)?;
    let direct = try_draw(n, seed, dom::Q_EDGE, |r| {
        edge_outcome(&edge, 0.0, 1e4, disc, r).map(|s| s.end_time)
    })?;
    out.push(ctx.ks2("graph.star_exit_time_ks", &exits, &direct)?.with("edges", 3));
    let oracle = analytics::mean_exit_sticky_general(0.0, 1.0, region.v, region.eta_eps(), 1.0 / region.m)?;
    out.push(ctx.z("graph.star_mean_exit", oracle, &mean_of(&exits)?));

    let picks: Vec<usize> = runs.iter().flat_map(|q| q.selections.iter().map(|s| s.1)).collect();
    for e in 0..3 {
        let k = picks.iter().filter(|&&p| p == e).count();
        out.push(ctx.z(
            &format!("graph.edge_frequency[edge={e}]"),
            1.0 / 3.0,
            &proportion_under(k, picks.len(), 1.0 / 3.0),
        ));
    }
    let holds: Vec<f64> = runs.iter().flat_map(|q| q.holdings.iter().map(|h| h.1)).collect();
    out.push(ctx.ks("graph.center_holding_ks", &holds, |z| {
        analytics::tau_e_cdf(z, region.m, region.sigma).unwrap_or(f64::NAN)
    })?);
    Ok(out)
}

fn quake(ctx: &Ctx) -> Result<(Vec<OracleReport>, Vec<GrRow>)> {
    let seed = ctx.cfg.seed;
    let disc = Discretization::new(ctx.cfg.coarse_dt);
    let mut out = Vec::new();
    let h_star = 10f64.ln();

    // two regions, σ = m², one event per region
    let regions = [Region::new(0, 1.0, 1.0, 1.0, 0.0), Region::new(1, 2.0, 1.0, 4.0, 0.0)];
    let net = chain(&regions, 1.0)?;
    let opts = QuakeOptions {
        one_visit_per_region: true,
        h_star,
        disc,
        ..QuakeOptions::default()
    };
    let n = ctx.n(10_000);
    let cats = try_draw(n, seed, dom::GR, |r| {
        simulate_quake(&net, InitialLevel::Random, 1e6, &opts, r)
    })?;
    let curve = empirical_gr_curve(&cats)?;
    let pairs: Vec<(f64, f64)> = regions.iter().map(|r| (r.m, r.sigma)).collect();
    let mags: Vec<f64> = regions.iter().map(|r| r.m).collect();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..=regions.len() {
        let analytic = analytics::gr_survival(k, &pairs, h_star)?;
        let power_law = analytics::gr_power_law(k, &mags)?;
        worst = worst.max(((analytic - power_law) / power_law).abs());
        let reached = cats.iter().filter(|c| c.event_count() >= k).count();
        let est = proportion_under(reached, n, analytic);
        let emp = curve.get(k).map_or(0.0, |p| p.empirical);
        rows.push(GrRow {
            n: k,
            empirical: emp,
            std_error: est.std_error,
            analytic,
            power_law,
        });
        if k > 0 {
            out.push(
                ctx.z(&format!("quake.gr_survival[n={k}]"), analytic, &est)
                    .with("h_star", h_star),
            );
        }
    }
    out.push(
        OracleReport::tolerance("quake.gr_power_law_identity", 0.0, worst, 1e-12).with("measure", "max relative error"),
    );

    // three-region chain with returns, no absorption
    let regions3 = [
        Region::new(0, 1.0, 1.0, 2.0, 0.0),
        Region::new(1, 0.8, 0.7, 1.0, 0.0),
        Region::new(2, 0.6, 1.3, 1.5, 0.0),
    ];
    let net3 = chain(&regions3, 1.0)?;
    // a fixed event budget keeps the samples free of horizon selection
    let budget = 200;
    let opts3 = QuakeOptions {
        disc,
        max_events: Some(budget),
        ..QuakeOptions::default()
    };
    let n = ctx.n(2_000);
    let cats3 = try_draw(n, seed, dom::QUAKE_3, |r| {
        simulate_quake(&net3, InitialLevel::Random, 1e9, &opts3, r)
    })?;
    for reg in &regions3 {
        // accumulations among the first half of each catalog
        let taus: Vec<f64> = cats3
            .iter()
            .flat_map(|c| c.events.iter().take(budget / 2))
            .filter(|e| e.region == reg.id)
            .map(|e| e.tau_e)
            .collect();
        out.push(ctx.z(
            &format!("quake.mean_accumulation[region={}]", reg.id),
            1.0 / reg.sigma,
            &mean_of(&taus)?,
        ));
        let (m, s) = (reg.m, reg.sigma);
        out.push(
            ctx.ks(&format!("quake.accumulation_ks[region={}]", reg.id), &taus, |z| {
                analytics::tau_e_cdf(z, m, s).unwrap_or(f64::NAN)
            })?,
        );
        // first passage through the region in each catalog
        let passages: Vec<f64> = cats3
            .iter()
            .filter_map(|c| region_passage_times(c, reg.id).first().copied())
            .collect();
        let oracle = analytics::mean_exit_sticky_general(0.0, 1.0, reg.v, reg.eta_eps(), 1.0 / reg.m)?;
        out.push(ctx.z(
            &format!("quake.mean_passage[region={}]", reg.id),
            oracle,
            &mean_of(&passages)?,
        ));
    }

    // event counts on the three-region chain, one event per region
    let opts3 = QuakeOptions {
        one_visit_per_region: true,
        h_star: 0.2,
        disc,
        ..QuakeOptions::default()
    };
    let n = ctx.n(20_000);
    let cats = try_draw(n, seed, dom::GR_3, |r| {
        simulate_quake(&net3, InitialLevel::Random, 1e6, &opts3, r)
    })?;
    let pairs: Vec<(f64, f64)> = regions3.iter().map(|r| (r.m, r.sigma)).collect();
    for k in 1..=3 {
        let p0 = analytics::gr_survival(k, &pairs, 0.2)?;
        let reached = cats.iter().filter(|c| c.event_count() >= k).count();
        out.push(ctx.z(
            &format!("quake.event_count_three_regions[n={k}]"),
            p0,
            &proportion_under(reached, n, p0),
        ));
    }
    Ok((out, rows))
}
