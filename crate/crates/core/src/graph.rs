//! Star graphs glued into tree networks, and the graph process `Q`.
//!
//! Every vertex of a network is the center of a star. An edge joins two
//! centers and appears in both stars' edge lists; `adjacency` maps
//! `(star, edge)` to the center at the other end. A leaf is a star whose
//! only edge leads back to its parent.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rdbm::{Barriers, Discretization, Halt, Stepper, Walker};
use crate::subordinators::{sample_holding_with_level, HoldingSymbol, TemperedSymbol};

/// Physical parameters of one seismic region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    #[serde(default)]
    pub id: usize,
    /// Magnitude `m_r`.
    pub m: f64,
    /// Propagation velocity `v_r`.
    pub v: f64,
    /// Delay parameter `σ_r`.
    pub sigma: f64,
    /// Elastic (cessation) coefficient.
    #[serde(default)]
    pub c: f64,
}

impl Region {
    pub fn new(id: usize, m: f64, v: f64, sigma: f64, c: f64) -> Self {
        Self { id, m, v, sigma, c }
    }

    /// `η_ε = m/σ`.
    pub fn eta_eps(&self) -> f64 {
        self.m / self.sigma
    }

    /// `Φ_r` with `θ_r = (m_r/2)²`.
    pub fn symbol(&self) -> Result<TemperedSymbol> {
        TemperedSymbol::new(self.m)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Config(format!(
                "region {}: magnitude must be positive, got {}",
                self.id, self.m
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "region {}: sigma must be positive, got {}",
                self.id, self.sigma
            )));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::Config(format!(
                "region {}: velocity must be nonnegative, got {}",
                self.id, self.v
            )));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!(
                "region {}: c must be nonnegative, got {}",
                self.id, self.c
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: usize,
    pub length: f64,
    /// Selection probability `ρ_ε` at this star's center.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarGraph {
    pub id: usize,
    pub edges: Vec<EdgeSpec>,
    pub region: Region,
}

impl StarGraph {
    /// Star with uniform rates `1/|E|`.
    pub fn uniform(id: usize, edges: &[(usize, f64)], region: Region) -> Self {
        let rate = 1.0 / edges.len().max(1) as f64;
        Self {
            id,
            edges: edges
                .iter()
                .map(|&(id, length)| EdgeSpec { id, length, rate })
                .collect(),
            region,
        }
    }

    pub fn edge(&self, edge_id: usize) -> Option<&EdgeSpec> {
        self.edges.iter().find(|e| e.id == edge_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub star: usize,
    pub edge: usize,
    pub neighbor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub stars: Vec<StarGraph>,
    pub adjacency: Vec<Link>,
    pub root: usize,
}

impl Network {
    pub fn star(&self, id: usize) -> Option<&StarGraph> {
        self.stars.iter().find(|s| s.id == id)
    }

    fn star_index(&self) -> BTreeMap<usize, usize> {
        self.stars.iter().enumerate().map(|(i, s)| (s.id, i)).collect()
    }

    pub fn neighbor(&self, star: usize, edge: usize) -> Option<usize> {
        self.adjacency
            .iter()
            .find(|l| l.star == star && l.edge == edge)
            .map(|l| l.neighbor)
    }

    pub fn vertex_count(&self) -> usize {
        self.stars.len()
    }

    /// Stars that are the root or have more than one edge.
    pub fn hub_count(&self) -> usize {
        self.stars
            .iter()
            .filter(|s| s.id == self.root || s.edges.len() > 1)
            .count()
    }

    /// Checks structure and parameters; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let cfg = |m: String| Err(Error::Config(m));
        let index = self.star_index();
        if index.len() != self.stars.len() {
            return cfg("duplicate star ids".into());
        }
        let Some(&root_idx) = index.get(&self.root) else {
            return cfg(format!("root {} is not a star", self.root));
        };
        let mut warnings = Vec::new();
        for s in &self.stars {
            s.region.check()?;
            if s.edges.is_empty() {
                return cfg(format!("star {} has no edges", s.id));
            }
            let mut seen = BTreeSet::new();
            let mut total = 0.0;
            for e in &s.edges {
                if !seen.insert(e.id) {
                    return cfg(format!("star {} lists edge {} twice", s.id, e.id));
                }
                if !(e.length > 0.0 && e.length.is_finite()) {
                    return cfg(format!("edge {} of star {} has length {}", e.id, s.id, e.length));
                }
                if !(0.0..=1.0).contains(&e.rate) {
                    return cfg(format!("edge {} of star {} has rate {}", e.id, s.id, e.rate));
                }
                total += e.rate;
                let Some(n) = self.neighbor(s.id, e.id) else {
                    return cfg(format!("edge {} of star {} has no adjacency entry", e.id, s.id));
                };
                let Some(other) = self.star(n) else {
                    return cfg(format!("edge {} of star {} points to missing star {n}", e.id, s.id));
                };
                match other.edge(e.id) {
                    Some(back) if back.length == e.length && self.neighbor(n, e.id) == Some(s.id) => {}
                    _ => {
                        return cfg(format!(
                            "edge {} is not shared consistently by stars {} and {n}",
                            e.id, s.id
                        ))
                    }
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return cfg(format!("rates of star {} sum to {total}", s.id));
            }
        }
        for l in &self.adjacency {
            if self.star(l.star).and_then(|s| s.edge(l.edge)).is_none() {
                return cfg(format!("adjacency entry {:?} names an unknown edge", l));
            }
        }
        // connectivity from the root
        let mut reached = BTreeSet::from([self.root]);
        let mut queue = VecDeque::from([self.root]);
        while let Some(s) = queue.pop_front() {
            for l in self.adjacency.iter().filter(|l| l.star == s) {
                if reached.insert(l.neighbor) {
                    queue.push_back(l.neighbor);
                }
            }
        }
        if reached.len() != self.stars.len() {
            return cfg(format!(
                "{} stars are unreachable from the root",
                self.stars.len() - reached.len()
            ));
        }
        let m_root = self.stars[root_idx].region.m;
        for s in &self.stars {
            if s.region.m > m_root {
                warnings.push(format!(
                    "star {}: magnitude {} exceeds the root magnitude {m_root}",
                    s.id, s.region.m
                ));
            }
        }
        Ok(warnings)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

/// Tree of stars: the root has `k` edges, each non-leaf child `k` more.
/// Regions are `template` with their `id` set to the star id.
pub fn build_k_ary_network(k: usize, depth: usize, template: Region, length: f64) -> Result<Network> {
    if k == 0 || depth == 0 {
        return domain(format!("need k ≥ 1 and depth ≥ 1, got k={k}, depth={depth}"));
    }
    let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut adjacency = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_edge = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for &parent in &frontier {
            for _ in 0..k {
                let child = edges.len();
                edges.push(Vec::new());
                edges[parent].push((next_edge, length));
                edges[child].push((next_edge, length));
                adjacency.push(Link {
                    star: parent,
                    edge: next_edge,
                    neighbor: child,
                });
                adjacency.push(Link {
                    star: child,
                    edge: next_edge,
                    neighbor: parent,
                });
                next_edge += 1;
                next.push(child);
            }
        }
        frontier = next;
    }
    let stars = edges
        .iter()
        .enumerate()
        .map(|(id, es)| StarGraph::uniform(id, es, Region { id, ..template }))
        .collect();
    let net = Network {
        stars,
        adjacency,
        root: 0,
    };
    net.validate()?;
    Ok(net)
}

/// Path of stars `0 - 1 - … - n−1` with the given regions, in order.
pub fn chain(regions: &[Region], length: f64) -> Result<Network> {
    if regions.len() < 2 {
        return domain("a chain needs at least two regions");
    }
    let n = regions.len();
    let mut adjacency = Vec::new();
    let mut stars = Vec::new();
    for (i, r) in regions.iter().enumerate() {
        let mut es = Vec::new();
        if i > 0 {
            es.push((i - 1, length));
            adjacency.push(Link {
                star: i,
                edge: i - 1,
                neighbor: i - 1,
            });
        }
        if i + 1 < n {
            es.push((i, length));
            adjacency.push(Link {
                star: i,
                edge: i,
                neighbor: i + 1,
            });
        }
        stars.push(StarGraph::uniform(i, &es, Region { id: i, ..*r }));
    }
    let net = Network {
        stars,
        adjacency,
        root: 0,
    };
    net.validate()?;
    Ok(net)
}

/// Categorical draw over the star's edges with probabilities `ρ`.
pub fn select_edge<R: Rng + ?Sized>(star: &StarGraph, rng: &mut R) -> Result<usize> {
    select_edge_excluding(star, None, rng)?
        .ok_or_else(|| Error::Domain(format!("star {} has no selectable edge", star.id)))
}

/// Draw with one edge removed and the rates renormalised. `None` if no
/// edge with positive rate remains.
pub fn select_edge_excluding<R: Rng + ?Sized>(
    star: &StarGraph,
    exclude: Option<usize>,
    rng: &mut R,
) -> Result<Option<usize>> {
    if star.edges.is_empty() {
        return domain(format!("star {} has no edges", star.id));
    }
    let allowed = |e: &&EdgeSpec| Some(e.id) != exclude && e.rate > 0.0;
    let total: f64 = star.edges.iter().filter(allowed).map(|e| e.rate).sum();
    if total <= 0.0 {
        return Ok(None);
    }
    let candidates: Vec<&EdgeSpec> = star.edges.iter().filter(allowed).collect();
    if candidates.len() == 1 {
        return Ok(Some(candidates[0].id));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for e in &candidates {
        acc += e.rate;
        if u < acc {
            return Ok(Some(e.id));
        }
    }
    Ok(candidates.last().map(|e| e.id))
}

/// A point of the network: a star center (`edge = None`, `radial = 0`) or
/// a point at distance `radial` from the center along `edge`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPosition {
    pub star: usize,
    pub edge: Option<usize>,
    pub radial: f64,
}

impl GraphPosition {
    pub fn vertex(star: usize) -> Self {
        Self {
            star,
            edge: None,
            radial: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VisitEvent {
    Start,
    EdgeSelect,
    HoldStart,
    HoldEnd,
    Switch,
    Absorbed,
    Killed,
    Horizon,
    DeadEnd,
}

impl VisitEvent {
    pub fn code(&self) -> &'static str {
        match self {
            VisitEvent::Start => "START",
            VisitEvent::EdgeSelect => "EDGE_SELECT",
            VisitEvent::HoldStart => "HOLD_START",
            VisitEvent::HoldEnd => "HOLD_END",
            VisitEvent::Switch => "SWITCH",
            VisitEvent::Absorbed => "ABSORBED",
            VisitEvent::Killed => "KILLED",
            VisitEvent::Horizon => "HORIZON",
            VisitEvent::DeadEnd => "DEAD_END",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Visit {
    pub t: f64,
    pub position: GraphPosition,
    pub event: VisitEvent,
    /// Holding duration on `HoldEnd`, jump level on `Absorbed`.
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QOptions {
    /// Stop when the process first reaches an external vertex.
    #[serde(default)]
    pub stop_at_first_switch: bool,
    /// Allow the edge through which a star was entered to be chosen again.
    #[serde(default = "yes")]
    pub allow_backtrack: bool,
    /// Record every `record_stride`-th grid point; 0 records none.
    #[serde(default)]
    pub record_stride: usize,
    #[serde(default)]
    pub h_star: f64,
}

fn yes() -> bool {
    true
}

impl Default for QOptions {
    fn default() -> Self {
        Self {
            stop_at_first_switch: false,
            allow_backtrack: true,
            record_stride: 0,
            h_star: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct QTrajectory {
    pub points: Vec<(f64, GraphPosition)>,
    pub visits: Vec<Visit>,
    pub end_time: f64,
    pub end: Option<VisitEvent>,
    /// Holding intervals at centers, with the star they occurred at.
    pub holdings: Vec<(usize, f64)>,
    /// Edges chosen, with the star they were chosen at.
    pub selections: Vec<(usize, usize)>,
}

impl QTrajectory {
    fn log(&mut self, t: f64, position: GraphPosition, event: VisitEvent, value: f64) {
        self.visits.push(Visit {
            t,
            position,
            event,
            value,
        });
    }

    /// Time of the first `Switch`, if any.
    pub fn first_switch(&self) -> Option<f64> {
        self.visits.iter().find(|v| v.event == VisitEvent::Switch).map(|v| v.t)
    }
}

/// Simulates `Q` from `start` up to absorption, elastic kill or `t_max`.
///
/// On an edge of star `s` the radial part is the sticky edge process of
/// `s`'s region. Each boundary mark runs the vertex program at the center:
/// a holding `H^{Φ_r}(h)` with `h ~ Exp(mean m_r/σ_r)`, absorption if
/// `h < h*`, then a fresh edge choice. Reaching the far end of an edge
/// moves the process to the neighbouring center.
pub fn simulate_q<R: Rng + ?Sized>(
    net: &Network,
    start: GraphPosition,
    t_max: f64,
    opts: &QOptions,
    disc: Discretization,
    rng: &mut R,
) -> Result<QTrajectory> {
    disc.check()?;
    if !(t_max >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t_max}"));
    }
    let Some(first) = net.star(start.star) else {
        return domain(format!("start star {} does not exist", start.star));
    };
    match start.edge {
        None if start.radial != 0.0 => return domain("a vertex position has radial 0"),
        Some(e) => match first.edge(e) {
            Some(spec) if start.radial >= 0.0 && start.radial < spec.length => {}
            _ => return domain(format!("invalid start {:?}", start)),
        },
        None => {}
    }
    let mut traj = QTrajectory::default();
    let mut clock = rng.sample::<f64, _>(Exp1); // elastic hazard budget
    let mut star_id = start.star;
    let mut arrival: Option<usize> = None;
    let mut w = Walker {
        t: 0.0,
        x: start.radial,
        gamma: 0.0,
    };
    let mut edge = start.edge;
    traj.log(0.0, start, VisitEvent::Start, 0.0);
    let stride = opts.record_stride;
    let mut counter = 0usize;
    'outer: loop {
        let star = net.star(star_id).expect("validated network");
        let region = star.region;
        let phi = HoldingSymbol::Tempered(region.symbol()?);
        let e_id = match edge {
            Some(e) => e,
            None => match select_edge_excluding(star, if opts.allow_backtrack { None } else { arrival }, rng)? {
                Some(e) => {
                    traj.selections.push((star_id, e));
                    traj.log(w.t, GraphPosition::vertex(star_id), VisitEvent::EdgeSelect, e as f64);
                    e
                }
                None => {
                    traj.end = Some(VisitEvent::DeadEnd);
                    traj.log(w.t, GraphPosition::vertex(star_id), VisitEvent::DeadEnd, 0.0);
                    break;
                }
            },
        };
        let length = star.edge(e_id).expect("validated network").length;
        let stepper = Stepper::new(region.v, disc);
        // elastic clock in local-time units for this region
        let gamma_in = w.gamma;
        let kill_gamma = if region.c > 0.0 {
            gamma_in + clock / region.c
        } else {
            f64::INFINITY
        };
        let mut mark = w.gamma + rng.sample::<f64, _>(Exp1);
        loop {
            let b = Barriers {
                level: Some(length),
                absorb_at_zero: false,
                kill_gamma,
                mark_gamma: mark,
                t_end: t_max,
            };
            let halt = stepper.run(&mut w, &b, rng, |w| {
                if stride > 0 {
                    counter += 1;
                    if counter.is_multiple_of(stride) {
                        traj.points.push((
                            w.t,
                            GraphPosition {
                                star: star_id,
                                edge: Some(e_id),
                                radial: w.x,
                            },
                        ));
                    }
                }
            });
            let here = GraphPosition {
                star: star_id,
                edge: Some(e_id),
                radial: w.x,
            };
            match halt {
                Halt::Mark => {
                    let at = GraphPosition::vertex(star_id);
                    let (level, hold) = sample_holding_with_level(&phi, region.eta_eps(), rng)?;
                    if level < opts.h_star {
                        traj.log(w.t, at, VisitEvent::Absorbed, level);
                        traj.end = Some(VisitEvent::Absorbed);
                        break 'outer;
                    }
                    traj.log(w.t, at, VisitEvent::HoldStart, level);
                    let end = (w.t + hold).min(t_max);
                    if stride > 0 {
                        traj.points.push((w.t, at));
                        traj.points.push((end, at));
                    }
                    w.t = end;
                    if end >= t_max {
                        traj.log(w.t, at, VisitEvent::Horizon, 0.0);
                        traj.end = Some(VisitEvent::Horizon);
                        break 'outer;
                    }
                    traj.holdings.push((star_id, hold));
                    traj.log(w.t, at, VisitEvent::HoldEnd, hold);
                    // the radial part restarts on a freshly chosen edge
                    mark = w.gamma + rng.sample::<f64, _>(Exp1);
                    let next = select_edge_excluding(star, if opts.allow_backtrack { None } else { arrival }, rng)?;
                    match next {
                        Some(e) if e == e_id => {
                            traj.selections.push((star_id, e));
                            traj.log(w.t, at, VisitEvent::EdgeSelect, e as f64);
                        }
                        Some(e) => {
                            traj.selections.push((star_id, e));
                            traj.log(w.t, at, VisitEvent::EdgeSelect, e as f64);
                            if region.c > 0.0 {
                                clock -= region.c * (w.gamma - gamma_in);
                            }
                            edge = Some(e);
                            continue 'outer;
                        }
                        None => {
                            traj.log(w.t, at, VisitEvent::DeadEnd, 0.0);
                            traj.end = Some(VisitEvent::DeadEnd);
                            break 'outer;
                        }
                    }
                }
                Halt::Level => {
                    let n = net.neighbor(star_id, e_id).expect("validated network");
                    traj.log(w.t, GraphPosition::vertex(n), VisitEvent::Switch, e_id as f64);
                    if stride > 0 {
                        traj.points.push((w.t, GraphPosition::vertex(n)));
                    }
                    if region.c > 0.0 {
                        clock -= region.c * (w.gamma - gamma_in);
                    }
                    if opts.stop_at_first_switch {
                        traj.end = Some(VisitEvent::Switch);
                        break 'outer;
                    }
                    star_id = n;
                    arrival = Some(e_id);
                    edge = None;
                    w.x = 0.0;
                    continue 'outer;
                }
                Halt::Kill => {
                    traj.log(w.t, here, VisitEvent::Killed, 0.0);
                    traj.end = Some(VisitEvent::Killed);
                    break 'outer;
                }
                Halt::Horizon | Halt::Zero => {
                    traj.log(w.t, here, VisitEvent::Horizon, 0.0);
                    traj.end = Some(VisitEvent::Horizon);
                    break 'outer;
                }
            }
        }
    }
    traj.end_time = w.t;
    Ok(traj)
}
