//! Run configuration: a TOML document validated before any simulation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{AccumulationMode, EdgeProcessParams, VertexProcessParams};
use crate::error::{Error, Result};
use crate::graph::{build_k_ary_network, chain, Network, QOptions, Region};
use crate::quake::{InitialLevel, QuakeOptions, VelocityLaw};
use crate::rdbm::{Discretization, RdbmParams, Reflection};
use crate::subordinators::{HoldingSymbol, JumpKernel, TemperedSymbol};
use crate::validate::ValidationConfig;

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_count")]
    pub n_paths: usize,
    #[serde(default = "d_count")]
    pub n_catalogs: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub output: OutputConfig,
}

fn d_seed() -> u64 {
    20240611
}
fn d_count() -> usize {
    1000
}
fn d_dt() -> f64 {
    1e-3
}
fn d_t_max() -> f64 {
    10.0
}
fn d_one() -> f64 {
    1.0
}
fn d_half() -> f64 {
    0.5
}
fn d_true() -> bool {
    true
}
fn d_stride() -> usize {
    1
}

/// Holding-law choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolChoice {
    Identity,
    /// Tempered by the region magnitude.
    Tempered,
}

impl SymbolChoice {
    fn symbol(&self, m: f64) -> Result<HoldingSymbol> {
        Ok(match self {
            SymbolChoice::Identity => HoldingSymbol::Identity,
            SymbolChoice::Tempered => HoldingSymbol::Tempered(TemperedSymbol::new(m)?),
        })
    }
}

/// Network topology shorthand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// One hub with `edges` leaves.
    Star {
        edges: usize,
    },
    KAry {
        k: usize,
        depth: usize,
    },
    /// Regions joined in listed order.
    Chain,
    /// JSON network document, relative to the config file.
    Explicit {
        path: PathBuf,
    },
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec::Star { edges: 5 }
    }
}

/// `"random"` or a positive number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum H0Spec {
    Value(f64),
    Word(String),
}

impl Default for H0Spec {
    fn default() -> Self {
        H0Spec::Word("random".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverride {
    pub star: usize,
    pub rates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "d_regions")]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default = "d_one")]
    pub ell: f64,
    #[serde(default)]
    pub h_star: f64,
    /// Overrides every region's elastic coefficient when set.
    #[serde(default)]
    pub c: Option<f64>,
    /// Drift of the plain reflected process.
    #[serde(default = "d_one")]
    pub mu: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub stop_level: Option<f64>,
    #[serde(default)]
    pub h0: H0Spec,
    #[serde(default = "d_tempered")]
    pub phi: SymbolChoice,
    #[serde(default = "d_identity")]
    pub psi: SymbolChoice,
    #[serde(default = "d_half")]
    pub eta_nu: f64,
    #[serde(default = "d_true")]
    pub allow_backtrack: bool,
    #[serde(default)]
    pub one_visit_per_region: bool,
    #[serde(default)]
    pub accumulation: AccumulationMode,
    #[serde(default)]
    pub velocity: VelocityLaw,
    #[serde(default)]
    pub rates: Vec<RateOverride>,
    #[serde(default = "d_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub max_events: Option<usize>,
    #[serde(default)]
    pub reflection: Reflection,
    #[serde(default = "d_true")]
    pub bridge_correction: bool,
}

fn d_regions() -> Vec<Region> {
    vec![Region::new(0, 1.0, 1.0, 1.0, 0.0)]
}
fn d_tempered() -> SymbolChoice {
    SymbolChoice::Tempered
}
fn d_identity() -> SymbolChoice {
    SymbolChoice::Identity
}

impl Default for ModelConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "d_z")]
    pub z_threshold: f64,
    #[serde(default = "d_alpha")]
    pub ks_alpha: f64,
    #[serde(default)]
    pub negative_control: bool,
    #[serde(default)]
    pub max_paths: Option<usize>,
    #[serde(default = "d_fine")]
    pub fine_dt: f64,
    #[serde(default = "d_dt")]
    pub coarse_dt: f64,
}

fn d_z() -> f64 {
    3.0
}
fn d_alpha() -> f64 {
    0.01
}
fn d_fine() -> f64 {
    1e-4
}

impl Default for ValidationSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
}

fn d_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: d_dir() }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

/// Every key with a one-line description, for `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIG KEYS (TOML; unknown keys are rejected)
  seed = 20240611              base seed of all random streams
  n_paths = 1000               paths for rdbm/edge/vertex/graph
  n_catalogs = 1000            catalogs for quake and gr-curve
  dt = 1e-3                    time step
  t_max = 10.0                 horizon (0 gives empty outputs)
  [model]
  regions = [{m, v, sigma, c}] magnitude, velocity, delay, elastic coefficient
  network = {kind = \"star\", edges = 5} | {kind = \"k_ary\", k, depth}
          | {kind = \"chain\"} | {kind = \"explicit\", path = \"net.json\"}
  ell = 1.0                    edge length
  h_star = 0.0                 absorption threshold
  c                            optional elastic coefficient for all regions
  mu = 1.0                     drift of the plain reflected process
  x0 = 0.0                     start of rdbm and edge paths
  stop_level                   optional absorbing level for rdbm paths
  h0 = \"random\" | number       first released level (quake, vertex)
  phi = \"tempered\" | \"identity\"  edge holding law
  psi = \"identity\" | \"tempered\"  vertex post-jump holding law
  eta_nu = 0.5                 vertex post-jump stickiness
  allow_backtrack = true       allow re-choosing the arrival edge
  one_visit_per_region = false one quake event per region
  accumulation = \"fast\" | \"path\"  exact or pathwise descent to 0
  velocity = {kind = \"constant\"} | {kind = \"power\", exponent}
  rates = [{star, rates = [..]}]  edge selection probabilities
  record_stride = 1            keep every k-th grid point of graph paths
  max_events                   optional cap on records per catalog
  reflection = \"bridge_minimum\" | \"projection\"
  bridge_correction = true     Brownian-bridge crossing tests
  [validation]
  z_threshold = 3.0, ks_alpha = 0.01, negative_control = false,
  max_paths (cap per check), fine_dt = 1e-4, coarse_dt = 1e-3
  [output]
  dir = \"out\"
";

impl RunConfig {
    /// Parses and validates; relative network paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(b), NetworkSpec::Explicit { path }) = (base, &mut cfg.model.network) {
            if path.is_relative() {
                *path = b.join(&*path);
            }
        }
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent())
    }

    /// Assigns region ids by position and applies the global `c`.
    pub fn normalize(&mut self) {
        for (i, r) in self.model.regions.iter_mut().enumerate() {
            r.id = i;
            if let Some(c) = self.model.c {
                r.c = c;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg_err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return cfg_err(format!("t_max must be nonnegative, got {}", self.t_max));
        }
        let m = &self.model;
        if m.regions.is_empty() {
            return cfg_err("at least one region is required");
        }
        for r in &m.regions {
            r.check()?;
        }
        if !(m.ell > 0.0 && m.ell.is_finite()) {
            return cfg_err(format!("ell must be positive, got {}", m.ell));
        }
        if !(m.h_star >= 0.0) {
            return cfg_err(format!("h_star must be nonnegative, got {}", m.h_star));
        }
        if !(m.eta_nu >= 0.0) {
            return cfg_err(format!("eta_nu must be nonnegative, got {}", m.eta_nu));
        }
        if !(m.x0 >= 0.0) {
            return cfg_err(format!("x0 must be nonnegative, got {}", m.x0));
        }
        if let Some(c) = m.c {
            if !(c >= 0.0) {
                return cfg_err(format!("c must be nonnegative, got {c}"));
            }
        }
        self.initial_level()?;
        let v = &self.validation;
        if !(v.z_threshold > 0.0) || !(v.ks_alpha > 0.0 && v.ks_alpha < 1.0) {
            return cfg_err("validation thresholds out of range");
        }
        if !(v.fine_dt > 0.0) || !(v.coarse_dt > 0.0) {
            return cfg_err("validation steps must be positive");
        }
        if self.n_paths == 0 || self.n_catalogs == 0 {
            return cfg_err("n_paths and n_catalogs must be positive");
        }
        self.network()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. The output directory does not
    /// affect results and is left out.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn initial_level(&self) -> Result<InitialLevel> {
        match &self.model.h0 {
            H0Spec::Value(h) if *h > 0.0 => Ok(InitialLevel::Fixed(*h)),
            H0Spec::Value(h) => cfg_err(format!("h0 must be positive, got {h}")),
            H0Spec::Word(w) if w == "random" => Ok(InitialLevel::Random),
            H0Spec::Word(w) => cfg_err(format!("h0 must be \"random\" or a number, got {w:?}")),
        }
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            dt: self.dt,
            reflection: self.model.reflection,
            bridge_correction: self.model.bridge_correction,
        }
    }

    pub fn rdbm_params(&self) -> RdbmParams {
        RdbmParams {
            reflection: self.model.reflection,
            bridge_correction: self.model.bridge_correction,
            ..RdbmParams::new(self.model.mu, self.model.c.unwrap_or(0.0), self.dt, self.t_max)
        }
    }

    /// Edge process of the first region.
    pub fn edge_params(&self) -> Result<EdgeProcessParams> {
        let r = self.model.regions[0];
        let mut p = EdgeProcessParams::from_region(r.m, r.v, r.sigma, r.c, self.model.ell)?;
        p.phi = self.model.phi.symbol(r.m)?;
        Ok(p)
    }

    /// Vertex process of the first region; jumps have mean `m/σ`.
    pub fn vertex_params(&self) -> Result<VertexProcessParams> {
        let r = self.model.regions[0];
        Ok(VertexProcessParams {
            m: r.m,
            eta_nu: self.model.eta_nu,
            psi: self.model.psi.symbol(r.m)?,
            jump: JumpKernel::new(r.eta_eps())?,
            h_star: self.model.h_star,
        })
    }

    pub fn network(&self) -> Result<Network> {
        let m = &self.model;
        let template = m.regions[0];
        let assign = |mut net: Network| -> Result<Network> {
            if m.regions.len() == net.stars.len() {
                for (s, r) in net.stars.iter_mut().zip(&m.regions) {
                    s.region = Region { id: s.id, ..*r };
                }
            } else if m.regions.len() != 1 {
                return cfg_err(format!(
                    "{} regions given for {} stars; give one region or one per star",
                    m.regions.len(),
                    net.stars.len()
                ));
            }
            Ok(net)
        };
        let mut net = match &m.network {
            NetworkSpec::Star { edges } => {
                if *edges == 0 {
                    return cfg_err("a star needs at least one edge");
                }
                assign(build_k_ary_network(*edges, 1, template, m.ell)?)?
            }
            NetworkSpec::KAry { k, depth } => {
                if *k == 0 || *depth == 0 {
                    return cfg_err("k_ary needs k ≥ 1 and depth ≥ 1");
                }
                assign(build_k_ary_network(*k, *depth, template, m.ell)?)?
            }
            NetworkSpec::Chain => chain(&m.regions, m.ell).map_err(|e| Error::Config(e.to_string()))?,
            NetworkSpec::Explicit { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read network {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("network {}: {e}", path.display())))?
            }
        };
        for o in &m.rates {
            let Some(star) = net.stars.iter_mut().find(|s| s.id == o.star) else {
                return cfg_err(format!("rate override for unknown star {}", o.star));
            };
            if o.rates.len() != star.edges.len() {
                return cfg_err(format!(
                    "star {} has {} edges, {} rates given",
                    o.star,
                    star.edges.len(),
                    o.rates.len()
                ));
            }
            for (e, r) in star.edges.iter_mut().zip(&o.rates) {
                e.rate = *r;
            }
        }
        if let Some(c) = m.c {
            for s in net.stars.iter_mut() {
                s.region.c = c;
            }
        }
        net.validate()?;
        Ok(net)
    }

    pub fn q_options(&self) -> QOptions {
        QOptions {
            stop_at_first_switch: false,
            allow_backtrack: self.model.allow_backtrack,
            record_stride: self.model.record_stride,
            h_star: self.model.h_star,
        }
    }

    pub fn quake_options(&self) -> QuakeOptions {
        QuakeOptions {
            one_visit_per_region: self.model.one_visit_per_region,
            accumulation: self.model.accumulation,
            velocity: self.model.velocity,
            allow_backtrack: self.model.allow_backtrack,
            h_star: self.model.h_star,
            disc: self.discretization(),
            max_events: self.model.max_events,
        }
    }

    pub fn validation_config(&self) -> ValidationConfig {
        let v = &self.validation;
        ValidationConfig {
            seed: self.seed,
            z_threshold: v.z_threshold,
            ks_alpha: v.ks_alpha,
            negative_control: v.negative_control,
            max_paths: v.max_paths,
            fine_dt: v.fine_dt,
            coarse_dt: v.coarse_dt,
        }
    }
}
