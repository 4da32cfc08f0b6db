//! Problem data for one optimal control run and its JSON file format.
//!
//! ```json
//! {
//!   "alpha": 0.6, "T": 2.0, "nu": 2.0, "K": 1.0, "n": 2048,
//!   "leader": {"x0": 0.0},
//!   "agents": [{"x0": -1.0}, {"x0": 1.0}],
//!   "weights": [[0, 1], [1, 0]],
//!   "couplings": [1, 0],
//!   "sweep": {"relaxation": 0.5, "max_iterations": 500,
//!             "tolerance": 1e-6, "min_relaxation": 1e-3}
//! }
//! ```
//!
//! `x0` is a number for scalar opinions or an array of length `d`. `n` and
//! every `sweep` entry are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ConvolutionWeights, FractionalOrder, Scheme, UniformGrid};
use crate::model::{CostParams, Network};
use crate::sweep::SweepConfig;

/// Grid resolution used when a scenario does not set `n`.
pub const DEFAULT_INTERVALS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    network: Network,
    alpha: FractionalOrder,
    grid: UniformGrid,
    cost: CostParams,
    bound: f64,
    leader_x0: Vec<f64>,
    agents_x0: Vec<Vec<f64>>,
    sweep: SweepConfig,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        network: Network,
        alpha: f64,
        horizon: f64,
        intervals: usize,
        nu: f64,
        bound: f64,
        leader_x0: Vec<f64>,
        agents_x0: Vec<Vec<f64>>,
        sweep: SweepConfig,
    ) -> Result<Self> {
        let alpha = FractionalOrder::for_control(alpha)?;
        let grid = UniformGrid::new(horizon, intervals)?;
        let cost = CostParams::new(nu)?;
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::field(
                "K",
                format!("control bound must be positive, got {bound}"),
            ));
        }
        let d = network.dim();
        if leader_x0.len() != d {
            return Err(Error::field(
                "leader.x0",
                format!("expected dimension {d}, got {}", leader_x0.len()),
            ));
        }
        if agents_x0.len() != network.agents() {
            return Err(Error::field(
                "agents",
                format!(
                    "expected {} agents to match couplings, got {}",
                    network.agents(),
                    agents_x0.len()
                ),
            ));
        }
        for (i, x) in agents_x0.iter().enumerate() {
            if x.len() != d {
                return Err(Error::field(
                    format!("agents[{i}].x0"),
                    format!("expected dimension {d}, got {}", x.len()),
                ));
            }
            if let Some(v) = x.iter().find(|v| !v.is_finite()) {
                return Err(Error::field(
                    format!("agents[{i}].x0"),
                    format!("not finite: {v}"),
                ));
            }
        }
        if let Some(v) = leader_x0.iter().find(|v| !v.is_finite()) {
            return Err(Error::field("leader.x0", format!("not finite: {v}")));
        }
        Ok(Self {
            network,
            alpha,
            grid,
            cost,
            bound,
            leader_x0,
            agents_x0,
            sweep,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn cost(&self) -> CostParams {
        self.cost
    }

    pub fn nu(&self) -> f64 {
        self.cost.nu()
    }

    /// Control bound `K`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn leader_x0(&self) -> &[f64] {
        &self.leader_x0
    }

    pub fn agents_x0(&self) -> &[Vec<f64>] {
        &self.agents_x0
    }

    pub fn sweep(&self) -> &SweepConfig {
        &self.sweep
    }

    /// `(x_00, x_10, ..., x_N0)` flattened.
    pub fn stacked_x0(&self) -> Vec<f64> {
        let mut v = self.leader_x0.clone();
        for x in &self.agents_x0 {
            v.extend_from_slice(x);
        }
        v
    }

    /// Trapezoid product-integration weights of order α on the scenario grid.
    pub fn weights(&self) -> Result<ConvolutionWeights> {
        ConvolutionWeights::new(self.alpha.value(), self.grid, Scheme::Trapezoid)
    }

    pub fn with_intervals(&self, intervals: usize) -> Result<Self> {
        let mut s = self.clone();
        s.grid = UniformGrid::new(self.grid.horizon(), intervals)?;
        Ok(s)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut s = self.clone();
        s.alpha = FractionalOrder::for_control(alpha)?;
        Ok(s)
    }

    pub fn with_initial(&self, leader: Vec<f64>, agents: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            self.network.clone(),
            self.alpha.value(),
            self.grid.horizon(),
            self.grid.intervals(),
            self.nu(),
            self.bound,
            leader,
            agents,
            self.sweep,
        )
    }

    pub fn with_sweep(&self, sweep: SweepConfig) -> Self {
        let mut s = self.clone();
        s.sweep = sweep;
        s
    }

    /// Serializes back into the file format.
    pub fn to_json(&self) -> String {
        let as_x0 = |v: &[f64]| {
            if v.len() == 1 {
                InitialValue::Scalar(v[0])
            } else {
                InitialValue::Vector(v.to_vec())
            }
        };
        let raw = RawScenario {
            alpha: Some(self.alpha.value()),
            horizon: Some(self.grid.horizon()),
            nu: Some(self.nu()),
            bound: Some(self.bound),
            n: Some(self.grid.intervals()),
            leader: Some(RawAgent {
                x0: Some(as_x0(&self.leader_x0)),
            }),
            agents: Some(
                self.agents_x0
                    .iter()
                    .map(|x| RawAgent { x0: Some(as_x0(x)) })
                    .collect(),
            ),
            weights: Some(self.network.weights().to_vec()),
            couplings: Some(self.network.couplings().to_vec()),
            sweep: Some(RawSweep {
                relaxation: Some(self.sweep.relaxation),
                max_iterations: Some(self.sweep.max_iterations),
                tolerance: Some(self.sweep.tolerance),
                min_relaxation: Some(self.sweep.min_relaxation),
            }),
        };
        serde_json::to_string_pretty(&raw).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl InitialValue {
    fn into_vec(self) -> Vec<f64> {
        match self {
            InitialValue::Scalar(v) => vec![v],
            InitialValue::Vector(v) => v,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    x0: Option<InitialValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    relaxation: Option<f64>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    min_relaxation: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    alpha: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    nu: Option<f64>,
    #[serde(rename = "K")]
    bound: Option<f64>,
    n: Option<usize>,
    leader: Option<RawAgent>,
    agents: Option<Vec<RawAgent>>,
    weights: Option<Vec<Vec<f64>>>,
    couplings: Option<Vec<f64>>,
    sweep: Option<RawSweep>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| Error::field(field, "missing required field"))
}

/// Parses and validates scenario JSON text.
pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let raw: RawScenario =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("scenario JSON: {e}")))?;

    let alpha = required(raw.alpha, "alpha")?;
    let horizon = required(raw.horizon, "T")?;
    let nu = required(raw.nu, "nu")?;
    let bound = required(raw.bound, "K")?;
    let leader = required(required(raw.leader, "leader")?.x0, "leader.x0")?.into_vec();
    let agents = required(raw.agents, "agents")?
        .into_iter()
        .enumerate()
        .map(|(i, a)| required(a.x0, &format!("agents[{i}].x0")).map(InitialValue::into_vec))
        .collect::<Result<Vec<_>>>()?;
    let weights = required(raw.weights, "weights")?;
    let couplings = required(raw.couplings, "couplings")?;

    let mut sweep = SweepConfig::default();
    if let Some(s) = raw.sweep {
        if let Some(v) = s.relaxation {
            sweep.relaxation = v;
        }
        if let Some(v) = s.max_iterations {
            sweep.max_iterations = v;
        }
        if let Some(v) = s.tolerance {
            sweep.tolerance = v;
        }
        if let Some(v) = s.min_relaxation {
            sweep.min_relaxation = v;
        }
    }
    let sweep = sweep.validated()?;

    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::OptimalityRange { alpha });
    }
    if leader.is_empty() {
        return Err(Error::field("leader.x0", "needs at least one component"));
    }
    if agents.is_empty() {
        return Err(Error::field("agents", "need at least one agent"));
    }
    if weights.len() != agents.len() {
        return Err(Error::field(
            "weights",
            format!(
                "expected {} rows (one per agent), got {}",
                agents.len(),
                weights.len()
            ),
        ));
    }
    if couplings.len() != agents.len() {
        return Err(Error::field(
            "couplings",
            format!(
                "expected {} entries (one per agent), got {}",
                agents.len(),
                couplings.len()
            ),
        ));
    }
    let network = Network::new(leader.len(), weights, couplings)?;
    Scenario::new(
        network,
        alpha,
        horizon,
        raw.n.unwrap_or(DEFAULT_INTERVALS),
        nu,
        bound,
        leader,
        agents,
        sweep,
    )
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    scenario_from_json(&text).map_err(|e| match e {
        Error::Invalid(message) => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Two leader-coupled pairs `{x1, x2}` and `{x3, x4}`; the pairs only talk
/// through the leader. Control bound 1.
pub const EXAMPLE1_JSON: &str = include_str!("../scenarios/example1.json");

/// A coupled pair `{x1, x2}` plus `x3` which only follows the leader.
/// Control bound 10.
pub const EXAMPLE2_JSON: &str = include_str!("../scenarios/example2.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundled {
    Example1,
    Example2,
}

impl Bundled {
    pub fn name(self) -> &'static str {
        match self {
            Bundled::Example1 => "example1",
            Bundled::Example2 => "example2",
        }
    }

    pub fn json(self) -> &'static str {
        match self {
            Bundled::Example1 => EXAMPLE1_JSON,
            Bundled::Example2 => EXAMPLE2_JSON,
        }
    }

    pub fn scenario(self) -> Scenario {
        scenario_from_json(self.json()).expect("bundled scenario is valid")
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Bundled::Example1),
            "example2" => Some(Bundled::Example2),
            _ => None,
        }
    }
}
