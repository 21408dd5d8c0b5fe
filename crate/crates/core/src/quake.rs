//! Event-level earthquake sequences on a network of regions.
//!
//! Each event in region `r` releases a level `h ~ Exp(mean m_r/σ_r)`. A level
//! below `h*` ends the sequence. Otherwise the energy accumulates for
//! `τ^E = H^{Φ_r}(h)` and a wave then propagates along a chosen edge with
//! drift `v_r` until it reaches the next region, falls back to the center
//! (a new event in the same region), is killed, or the horizon passes.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::boundary::AccumulationMode;
use crate::error::{domain, Result};
use crate::graph::{select_edge_excluding, Network};
use crate::harness::proportion;
use crate::rdbm::{pathwise_tau0, Barriers, Discretization, Halt, Stepper, Walker};
use crate::subordinators::{sample_h, sample_holding_with_level, HoldingSymbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    SwitchRegion,
    /// The wave fell back to the center; the next event is in the same region.
    Returned,
    Absorbed,
    ElasticKill,
    Horizon,
    /// No admissible edge was left to propagate along.
    DeadEnd,
}

impl Terminal {
    pub fn code(&self) -> &'static str {
        match self {
            Terminal::SwitchRegion => "SWITCH_REGION",
            Terminal::Returned => "RETURNED",
            Terminal::Absorbed => "ABSORBED",
            Terminal::ElasticKill => "ELASTIC_KILL",
            Terminal::Horizon => "HORIZON",
            Terminal::DeadEnd => "DEAD_END",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub i: usize,
    pub region: usize,
    pub tau_e: f64,
    pub jump_level: f64,
    pub tau_w: f64,
    pub cumulative_t: f64,
    pub terminal: Terminal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub events: Vec<EventRecord>,
    pub h_star: f64,
    pub seed: u64,
    pub config_digest: String,
}

impl Catalog {
    /// Number of seismic events; an absorption record is not an event.
    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|e| e.terminal != Terminal::Absorbed).count()
    }
}

/// Level released by the first event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLevel {
    /// Drawn like every other level.
    #[default]
    Random,
    Fixed(f64),
}

impl InitialLevel {
    /// The fixed level, or an `Exp(mean)` draw.
    pub fn draw<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match self {
            InitialLevel::Fixed(h) => *h,
            InitialLevel::Random => mean * rng.sample::<f64, _>(Exp1),
        }
    }
}

/// Wave velocity as a function of the released level: `v_eff = v_r·f(h)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VelocityLaw {
    #[default]
    Constant,
    /// `f(h) = h^exponent`.
    Power { exponent: f64 },
}

impl VelocityLaw {
    pub fn apply(&self, v: f64, level: f64) -> f64 {
        match self {
            VelocityLaw::Constant => v,
            VelocityLaw::Power { exponent } => v * level.powf(*exponent),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuakeOptions {
    /// At most one event per region; falls back to the center are absorbed
    /// into the wave as sticky holdings.
    pub one_visit_per_region: bool,
    pub accumulation: AccumulationMode,
    pub velocity: VelocityLaw,
    pub allow_backtrack: bool,
    pub h_star: f64,
    pub disc: Discretization,
    /// Stop after this many records regardless of the horizon.
    pub max_events: Option<usize>,
}

impl Default for QuakeOptions {
    fn default() -> Self {
        Self {
            one_visit_per_region: false,
            accumulation: AccumulationMode::Fast,
            velocity: VelocityLaw::Constant,
            allow_backtrack: true,
            h_star: 0.0,
            disc: Discretization::new(1e-3),
            max_events: None,
        }
    }
}

/// Simulates one catalog starting in the root region.
pub fn simulate_quake<R: Rng + ?Sized>(
    net: &Network,
    h0: InitialLevel,
    t_max: f64,
    opts: &QuakeOptions,
    rng: &mut R,
) -> Result<Catalog> {
    opts.disc.check()?;
    if !(t_max >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t_max}"));
    }
    if !(opts.h_star >= 0.0) {
        return domain(format!("h* must be nonnegative, got {}", opts.h_star));
    }
    if let InitialLevel::Fixed(h) = h0 {
        if !(h > 0.0) {
            return domain(format!("initial level must be positive, got {h}"));
        }
    }
    let mut cat = Catalog {
        h_star: opts.h_star,
        ..Catalog::default()
    };
    if t_max == 0.0 {
        return Ok(cat);
    }
    let mut star_id = net.root;
    let mut arrival: Option<usize> = None;
    let mut visited = BTreeSet::from([star_id]);
    let mut first = match h0 {
        InitialLevel::Fixed(h) => Some(h),
        InitialLevel::Random => None,
    };
    let mut t = 0.0;
    let mut gamma = 0.0;
    let mut clock = rng.sample::<f64, _>(Exp1);
    loop {
        if opts.max_events.is_some_and(|k| cat.events.len() >= k) {
            break;
        }
        let star = net
            .star(star_id)
            .ok_or_else(|| crate::Error::Domain(format!("star {star_id} missing")))?;
        let region = star.region;
        let sym = region.symbol()?;
        let level = match first.take() {
            Some(h) => h,
            None => region.eta_eps() * rng.sample::<f64, _>(Exp1),
        };
        let mut rec = EventRecord {
            i: cat.events.len() + 1,
            region: region.id,
            tau_e: 0.0,
            jump_level: level,
            tau_w: 0.0,
            cumulative_t: t,
            terminal: Terminal::Absorbed,
        };
        if level < opts.h_star {
            cat.events.push(rec);
            break;
        }
        let tau_e = match opts.accumulation {
            AccumulationMode::Fast => sample_h(&sym, level, rng)?,
            AccumulationMode::Path => pathwise_tau0(level, -region.m, opts.disc, t_max - t, None, rng)?,
        };
        if t + tau_e >= t_max {
            rec.tau_e = t_max - t;
            rec.cumulative_t = t_max;
            rec.terminal = Terminal::Horizon;
            cat.events.push(rec);
            break;
        }
        rec.tau_e = tau_e;
        t += tau_e;

        let wave = propagate(
            net,
            star_id,
            arrival,
            &visited,
            opts,
            opts.velocity.apply(region.v, level),
            t,
            t_max,
            &mut gamma,
            &mut clock,
            rng,
        )?;
        rec.tau_w = wave.end - t;
        t = wave.end;
        rec.cumulative_t = t;
        rec.terminal = wave.terminal;
        cat.events.push(rec);
        match wave.terminal {
            Terminal::SwitchRegion => {
                let (edge, next) = wave.switch.expect("switch target");
                star_id = next;
                arrival = Some(edge);
                visited.insert(next);
            }
            Terminal::Returned => {}
            _ => break,
        }
    }
    Ok(cat)
}

struct Wave {
    end: f64,
    terminal: Terminal,
    switch: Option<(usize, usize)>,
}

#[allow(clippy::too_many_arguments)]
fn propagate<R: Rng + ?Sized>(
    net: &Network,
    star_id: usize,
    arrival: Option<usize>,
    visited: &BTreeSet<usize>,
    opts: &QuakeOptions,
    v: f64,
    t0: f64,
    t_max: f64,
    gamma: &mut f64,
    clock: &mut f64,
    rng: &mut R,
) -> Result<Wave> {
    let star = net.star(star_id).expect("validated network");
    let region = star.region;
    let choose = |rng: &mut R| -> Result<Option<usize>> {
        if opts.one_visit_per_region {
            // only edges into unvisited regions
            let mut open = star.clone();
            for e in open.edges.iter_mut() {
                let n = net.neighbor(star_id, e.id);
                if n.is_none_or(|n| visited.contains(&n)) || (!opts.allow_backtrack && Some(e.id) == arrival) {
                    e.rate = 0.0;
                }
            }
            select_edge_excluding(&open, None, rng)
        } else {
            select_edge_excluding(star, if opts.allow_backtrack { None } else { arrival }, rng)
        }
    };
    let dead = |t| Wave {
        end: t,
        terminal: Terminal::DeadEnd,
        switch: None,
    };
    let Some(mut edge) = choose(rng)? else {
        return Ok(dead(t0));
    };
    let stepper = Stepper::new(v, opts.disc);
    let mut w = Walker {
        t: t0,
        x: 0.0,
        gamma: *gamma,
    };
    let holding = HoldingSymbol::Tempered(region.symbol()?);
    loop {
        let length = star.edge(edge).expect("validated network").length;
        let gamma_in = w.gamma;
        let kill_gamma = if region.c > 0.0 {
            gamma_in + *clock / region.c
        } else {
            f64::INFINITY
        };
        let b = Barriers {
            level: Some(length),
            absorb_at_zero: false,
            kill_gamma,
            mark_gamma: w.gamma + rng.sample::<f64, _>(Exp1),
            t_end: t_max,
        };
        let halt = stepper.run(&mut w, &b, rng, |_| {});
        if region.c > 0.0 {
            *clock -= region.c * (w.gamma - gamma_in);
        }
        *gamma = w.gamma;
        let terminal = match halt {
            Halt::Level => {
                let n = net.neighbor(star_id, edge).expect("validated network");
                return Ok(Wave {
                    end: w.t,
                    terminal: Terminal::SwitchRegion,
                    switch: Some((edge, n)),
                });
            }
            Halt::Mark if opts.one_visit_per_region => {
                let (_, hold) = sample_holding_with_level(&holding, region.eta_eps(), rng)?;
                w.t = (w.t + hold).min(t_max);
                if w.t >= t_max {
                    Terminal::Horizon
                } else {
                    match choose(rng)? {
                        Some(e) => {
                            edge = e;
                            continue;
                        }
                        None => Terminal::DeadEnd,
                    }
                }
            }
            Halt::Mark => Terminal::Returned,
            Halt::Kill => Terminal::ElasticKill,
            Halt::Horizon | Halt::Zero => Terminal::Horizon,
        };
        return Ok(Wave {
            end: w.t,
            terminal,
            switch: None,
        });
    }
}

/// One point of the empirical Gutenberg–Richter curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrPoint {
    pub n: usize,
    pub empirical: f64,
    pub std_error: f64,
}

/// Fraction of catalogs with at least `n` events, for `n = 0..=max`.
pub fn empirical_gr_curve(catalogs: &[Catalog]) -> Result<Vec<GrPoint>> {
    if catalogs.is_empty() {
        return domain("no catalogs");
    }
    let counts: Vec<usize> = catalogs.iter().map(Catalog::event_count).collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    Ok((0..=max)
        .map(|n| {
            let k = counts.iter().filter(|&&c| c >= n).count();
            let est = proportion(k, counts.len());
            GrPoint {
                n,
                empirical: est.mean,
                std_error: est.std_error,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegionSummary {
    pub count: usize,
    pub mean_tau_e: f64,
    pub mean_tau_w: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CatalogSummary {
    pub events: usize,
    pub regions: BTreeMap<usize, RegionSummary>,
    pub terminals: BTreeMap<String, usize>,
    pub lifetime: f64,
}

pub fn catalog_summary(catalog: &Catalog) -> CatalogSummary {
    let mut out = CatalogSummary::default();
    let mut sums: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
    for e in &catalog.events {
        *out.terminals.entry(e.terminal.code().to_string()).or_default() += 1;
        if e.terminal == Terminal::Absorbed {
            continue;
        }
        out.events += 1;
        let s = sums.entry(e.region).or_default();
        s.0 += 1;
        s.1 += e.tau_e;
        s.2 += e.tau_w;
    }
    for (r, (n, te, tw)) in sums {
        out.regions.insert(
            r,
            RegionSummary {
                count: n,
                mean_tau_e: te / n as f64,
                mean_tau_w: tw / n as f64,
            },
        );
    }
    out.lifetime = catalog.events.last().map_or(0.0, |e| e.cumulative_t);
    out
}

/// Time from a wave's first departure from a region's center until it
/// reaches the next region: the propagation times of the region's events
/// plus the accumulations that follow a fall-back. One entry per completed
/// passage, in catalog order.
pub fn region_passage_times(catalog: &Catalog, region: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_returned = false;
    for e in &catalog.events {
        if e.region != region || e.terminal == Terminal::Absorbed {
            open = None;
            prev_returned = false;
            continue;
        }
        let acc = open.get_or_insert(0.0);
        if prev_returned {
            *acc += e.tau_e;
        }
        *acc += e.tau_w;
        match e.terminal {
            Terminal::SwitchRegion => {
                out.push(*acc);
                open = None;
                prev_returned = false;
            }
            Terminal::Returned => prev_returned = true,
            _ => {
                open = None;
                prev_returned = false;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_k_ary_network, chain, Region};
    use crate::rng::path_rng;

    #[test]
    fn cumulative_times_are_sums() {
        let net = build_k_ary_network(5, 1, Region::new(0, 1.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let opts = QuakeOptions {
            h_star: 0.05,
            ..QuakeOptions::default()
        };
        for i in 0..50 {
            let cat = simulate_quake(&net, InitialLevel::Random, 50.0, &opts, &mut path_rng(1, 0, i)).unwrap();
            let mut t = 0.0;
            for e in &cat.events {
                t += e.tau_e + e.tau_w;
                assert!((t - e.cumulative_t).abs() < 1e-9);
                assert!(e.region <= 5);
            }
            let absorbed = cat.events.iter().filter(|e| e.terminal == Terminal::Absorbed).count();
            assert!(absorbed <= 1);
            if absorbed == 1 {
                let last = cat.events.last().unwrap();
                assert_eq!(last.terminal, Terminal::Absorbed);
                assert!(last.jump_level < 0.05);
            }
        }
    }

    #[test]
    fn no_absorption_or_kill_without_threshold() {
        let net = build_k_ary_network(2, 2, Region::new(0, 1.0, 1.0, 2.0, 0.0), 1.0).unwrap();
        let opts = QuakeOptions::default();
        for i in 0..30 {
            let cat = simulate_quake(&net, InitialLevel::Random, 20.0, &opts, &mut path_rng(2, 0, i)).unwrap();
            assert_eq!(cat.events.last().unwrap().terminal, Terminal::Horizon);
        }
    }

    #[test]
    fn zero_horizon_is_empty() {
        let net = build_k_ary_network(2, 1, Region::new(0, 1.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let cat = simulate_quake(
            &net,
            InitialLevel::Random,
            0.0,
            &QuakeOptions::default(),
            &mut path_rng(0, 0, 0),
        )
        .unwrap();
        assert!(cat.events.is_empty());
        let s = catalog_summary(&cat);
        assert_eq!(s.events, 0);
        assert_eq!(s.lifetime, 0.0);
    }

    #[test]
    fn one_visit_chain_ends_in_dead_end() {
        let regions = [Region::new(0, 1.0, 1.0, 1.0, 0.0), Region::new(1, 2.0, 1.0, 4.0, 0.0)];
        let net = chain(&regions, 1.0).unwrap();
        let opts = QuakeOptions {
            one_visit_per_region: true,
            ..QuakeOptions::default()
        };
        let cat = simulate_quake(&net, InitialLevel::Fixed(1.0), 1e6, &opts, &mut path_rng(3, 0, 0)).unwrap();
        let regions: Vec<usize> = cat.events.iter().map(|e| e.region).collect();
        assert_eq!(regions, vec![0, 1]);
        assert_eq!(cat.events[1].terminal, Terminal::DeadEnd);
    }

    #[test]
    fn summary_of_single_switch() {
        let cat = Catalog {
            events: vec![EventRecord {
                i: 1,
                region: 0,
                tau_e: 0.4,
                jump_level: 1.0,
                tau_w: 0.7,
                cumulative_t: 1.1,
                terminal: Terminal::SwitchRegion,
            }],
            ..Catalog::default()
        };
        let s = catalog_summary(&cat);
        assert_eq!(s.lifetime, 0.4 + 0.7);
        assert_eq!(s.regions[&0].count, 1);
        assert_eq!(region_passage_times(&cat, 0), vec![0.7]);
    }

    #[test]
    fn gr_curve_starts_at_one() {
        assert!(empirical_gr_curve(&[]).is_err());
        let c = empirical_gr_curve(&[Catalog::default()]).unwrap();
        assert_eq!(c[0].empirical, 1.0);
    }
}
