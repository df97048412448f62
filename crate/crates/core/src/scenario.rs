//! JSON scenario files: graph, routing, flow families, inflows, initial
//! state and simulation defaults, with named numeric parameters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::flow::{FlowFamily, FlowField};
use crate::inflow::{InflowSignal, InflowVector};
use crate::model::FlowNetwork;
use crate::multicommodity::{CommoditySpec, McState, MultiCommodityNetwork};
use crate::network::{FlowGraph, RoutingMatrix};
use crate::simulator::{DivergenceThresholds, Mode, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED: &[(&str, &str)] = &[
    ("example1", include_str!("../scenarios/example1.json")),
    ("local-node", include_str!("../scenarios/local-node.json")),
    ("junction", include_str!("../scenarios/junction.json")),
    ("timevarying", include_str!("../scenarios/timevarying.json")),
    ("multicommodity", include_str!("../scenarios/multicommodity.json")),
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{origin}: cannot read file: {source}")]
    Io {
        origin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: parse error: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}:{line}:{column}: schema violation: {message}")]
    Schema {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {message}")]
    Semantic { origin: String, message: String },
    #[error("unknown scenario `{0}` (see list-scenarios)")]
    UnknownScenario(String),
    #[error("bad parameter: {0}")]
    Parameter(String),
}

/// A number or a reference to a declared parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Param { param: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowSpec {
    SaturatingExp { capacity: Value },
    Linear { rate: Value },
    NodeProportional { kappa: Value },
    PhaseProportional { phase: u32, kappa: Value },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Constant {
        value: Value,
    },
    /// `amplitude * (sin(frequency * t + phase) + 1)`.
    Sinusoid {
        amplitude: Value,
        frequency: Value,
        phase: Value,
    },
    PiecewiseConstant {
        breakpoints: Vec<Value>,
        values: Vec<Value>,
    },
    ZeroAfter {
        cutoff: Value,
        inner: Box<SignalSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub flow: FlowSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingEntry {
    pub from: String,
    pub to: String,
    pub fraction: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityFile {
    pub name: String,
    pub routing: Vec<RoutingEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inflow: BTreeMap<String, SignalSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initial_state: BTreeMap<String, Value>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    100.0
}

fn default_record_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceThresholds>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            horizon: default_horizon(),
            mode: Mode::default(),
            record_every: default_record_every(),
            divergence: None,
        }
    }
}

/// On-disk form of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<Vec<RoutingEntry>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inflow: BTreeMap<String, SignalSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initial_state: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commodities: Vec<CommodityFile>,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
            let (line, column, message) = (e.line(), e.column(), e.to_string());
            let origin = origin.to_string();
            if e.is_data() {
                ScenarioError::Schema {
                    origin,
                    line,
                    column,
                    message,
                }
            } else {
                ScenarioError::Parse {
                    origin,
                    line,
                    column,
                    message,
                }
            }
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Schema {
                origin: origin.to_string(),
                line: 1,
                column: 1,
                message: format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    file.schema_version
                ),
            });
        }
        Ok(file)
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn is_multicommodity(&self) -> bool {
        !self.commodities.is_empty()
    }

    /// Replaces declared parameter values; undeclared names are rejected.
    pub fn with_parameters(&self, overrides: &[(String, f64)]) -> Result<Self, ScenarioError> {
        let mut out = self.clone();
        for (name, value) in overrides {
            match out.parameters.get_mut(name) {
                Some(slot) => *slot = *value,
                None => {
                    let declared: Vec<&str> = self.parameters.keys().map(String::as_str).collect();
                    return Err(ScenarioError::Parameter(format!(
                        "`{name}` is not a parameter of scenario `{}` (declared: {})",
                        self.name,
                        if declared.is_empty() {
                            "none".to_string()
                        } else {
                            declared.join(", ")
                        }
                    )));
                }
            }
        }
        Ok(out)
    }
}

/// Built network plus everything needed to certify or simulate it.
#[derive(Clone, Debug)]
pub enum ScenarioModel {
    Single {
        network: FlowNetwork,
        inflow: InflowVector,
        initial: Vec<f64>,
    },
    Multi {
        network: MultiCommodityNetwork,
        initial: McState,
    },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub source: ScenarioFile,
    pub origin: String,
    pub link_ids: Vec<String>,
    pub model: ScenarioModel,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.source.name
    }

    pub fn from_file(source: ScenarioFile, origin: &str) -> Result<Self, ScenarioError> {
        let semantic = |message: String| ScenarioError::Semantic {
            origin: origin.to_string(),
            message,
        };
        build(&source).map_err(semantic).map(|(link_ids, model, sim)| Scenario {
            source,
            origin: origin.to_string(),
            link_ids,
            model,
            sim,
        })
    }
}

struct Ctx<'a> {
    params: &'a BTreeMap<String, f64>,
    links: HashMap<&'a str, usize>,
}

impl Ctx<'_> {
    fn value(&self, v: &Value, what: &str) -> Result<f64, String> {
        match v {
            Value::Number(x) => Ok(*x),
            Value::Param { param } => self
                .params
                .get(param)
                .copied()
                .ok_or_else(|| format!("{what}: undeclared parameter `{param}`")),
        }
    }

    fn link(&self, id: &str, what: &str) -> Result<usize, String> {
        self.links
            .get(id)
            .copied()
            .ok_or_else(|| format!("{what}: unknown link `{id}`"))
    }

    fn signal(&self, s: &SignalSpec, what: &str) -> Result<InflowSignal, String> {
        Ok(match s {
            SignalSpec::Constant { value } => InflowSignal::Constant {
                value: self.value(value, what)?,
            },
            SignalSpec::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => InflowSignal::Sinusoid {
                amplitude: self.value(amplitude, what)?,
                frequency: self.value(frequency, what)?,
                phase: self.value(phase, what)?,
            },
            SignalSpec::PiecewiseConstant { breakpoints, values } => {
                InflowSignal::PiecewiseConstant {
                    breakpoints: breakpoints
                        .iter()
                        .map(|v| self.value(v, what))
                        .collect::<Result<_, _>>()?,
                    values: values
                        .iter()
                        .map(|v| self.value(v, what))
                        .collect::<Result<_, _>>()?,
                }
            }
            SignalSpec::ZeroAfter { cutoff, inner } => InflowSignal::ZeroAfter {
                cutoff: self.value(cutoff, what)?,
                inner: Box::new(self.signal(inner, what)?),
            },
        })
    }

    fn routing(&self, entries: &[RoutingEntry], what: &str) -> Result<RoutingMatrix, String> {
        let mut r = RoutingMatrix::zeros(self.links.len());
        let mut seen = BTreeSet::new();
        for e in entries {
            let ctx = format!("{what} entry {} -> {}", e.from, e.to);
            let from = self.link(&e.from, &ctx)?;
            let to = self.link(&e.to, &ctx)?;
            if !seen.insert((from, to)) {
                return Err(format!("{ctx}: duplicate entry"));
            }
            r.set(from, to, self.value(&e.fraction, &ctx)?);
        }
        Ok(r)
    }

    fn inflow(&self, map: &BTreeMap<String, SignalSpec>, what: &str) -> Result<InflowVector, String> {
        let mut signals = vec![InflowSignal::zero(); self.links.len()];
        for (id, spec) in map {
            let ctx = format!("{what} for link `{id}`");
            signals[self.link(id, &ctx)?] = self.signal(spec, &ctx)?;
        }
        InflowVector::new(signals).map_err(|e| format!("{what}: {e}"))
    }

    fn state(&self, map: &BTreeMap<String, Value>, what: &str) -> Result<Vec<f64>, String> {
        let mut x = vec![0.0; self.links.len()];
        for (id, v) in map {
            let ctx = format!("{what} for link `{id}`");
            let value = self.value(v, &ctx)?;
            if !(value >= 0.0) || !value.is_finite() {
                return Err(format!("{ctx}: must be a finite value >= 0"));
            }
            x[self.link(id, &ctx)?] = value;
        }
        Ok(x)
    }
}

type Built = (Vec<String>, ScenarioModel, SimConfig);

fn build(file: &ScenarioFile) -> Result<Built, String> {
    let mut node_index = HashMap::new();
    for (i, n) in file.nodes.iter().enumerate() {
        if node_index.insert(n.as_str(), i).is_some() {
            return Err(format!("duplicate node `{n}`"));
        }
    }
    let mut ctx = Ctx {
        params: &file.parameters,
        links: HashMap::new(),
    };
    let mut pairs = Vec::with_capacity(file.links.len());
    for (i, l) in file.links.iter().enumerate() {
        if ctx.links.insert(l.id.as_str(), i).is_some() {
            return Err(format!("duplicate link `{}`", l.id));
        }
        let node = |name: &str, end: &str| {
            node_index
                .get(name)
                .copied()
                .ok_or_else(|| format!("link `{}`: unknown {end} node `{name}`", l.id))
        };
        pairs.push((node(&l.tail, "tail")?, node(&l.head, "head")?));
    }
    let graph = FlowGraph::new(file.nodes.len(), &pairs).map_err(|e| e.to_string())?;
    let families = file
        .links
        .iter()
        .map(|l| {
            let what = format!("flow of link `{}`", l.id);
            Ok(match &l.flow {
                FlowSpec::SaturatingExp { capacity } => FlowFamily::SaturatingExp {
                    capacity: ctx.value(capacity, &what)?,
                },
                FlowSpec::Linear { rate } => FlowFamily::Linear {
                    rate: ctx.value(rate, &what)?,
                },
                FlowSpec::NodeProportional { kappa } => FlowFamily::NodeProportional {
                    kappa: ctx.value(kappa, &what)?,
                },
                FlowSpec::PhaseProportional { phase, kappa } => FlowFamily::PhaseProportional {
                    phase: *phase,
                    kappa: ctx.value(kappa, &what)?,
                },
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let field = FlowField::new(&graph, families).map_err(|e| e.to_string())?;

    let sim = &file.simulation;
    let mut cfg = SimConfig::new(sim.dt, sim.horizon)
        .map_err(|e| e.to_string())?
        .with_mode(sim.mode)
        .with_record_every(sim.record_every);
    if let Some(d) = sim.divergence {
        cfg.divergence = d;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let model = if file.is_multicommodity() {
        if file.routing.is_some() || !file.inflow.is_empty() || !file.initial_state.is_empty() {
            return Err(
                "multi-commodity scenarios take routing, inflow and initial_state per commodity"
                    .into(),
            );
        }
        let mut specs = Vec::new();
        let mut initial = Vec::new();
        for c in &file.commodities {
            let what = format!("commodity `{}`", c.name);
            specs.push(CommoditySpec {
                name: c.name.clone(),
                routing: ctx.routing(&c.routing, &format!("{what} routing"))?,
                inflow: ctx.inflow(&c.inflow, &format!("{what} inflow"))?,
            });
            initial.push(ctx.state(&c.initial_state, &format!("{what} initial state"))?);
        }
        ScenarioModel::Multi {
            network: MultiCommodityNetwork::new(graph, field, specs).map_err(|e| e.to_string())?,
            initial: McState::new(initial).map_err(|e| e.to_string())?,
        }
    } else {
        let routing = ctx.routing(file.routing.as_deref().unwrap_or(&[]), "routing")?;
        let inflow = ctx.inflow(&file.inflow, "inflow")?;
        let initial = ctx.state(&file.initial_state, "initial state")?;
        ScenarioModel::Single {
            network: FlowNetwork::new(graph, routing, field).map_err(|e| e.to_string())?,
            inflow,
            initial,
        }
    };
    ctx.links.clear();
    let ids = file.links.iter().map(|l| l.id.clone()).collect();
    Ok((ids, model, cfg))
}

/// Reads, parses and builds a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    load_scenario_with(path, &[])
}

pub fn load_scenario_with(
    path: &Path,
    overrides: &[(String, f64)],
) -> Result<Scenario, ScenarioError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        origin: origin.clone(),
        source,
    })?;
    let file = ScenarioFile::parse(&text, &origin)?.with_parameters(overrides)?;
    Scenario::from_file(file, &origin)
}

pub fn save_scenario(file: &ScenarioFile, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, file.to_json()).map_err(|source| ScenarioError::Io {
        origin: path.display().to_string(),
        source,
    })
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled_file(name: &str) -> Result<ScenarioFile, ScenarioError> {
    let text = bundled_text(name).ok_or_else(|| ScenarioError::UnknownScenario(name.into()))?;
    ScenarioFile::parse(text, &format!("bundled:{name}"))
}

pub fn load_bundled(name: &str, overrides: &[(String, f64)]) -> Result<Scenario, ScenarioError> {
    let file = bundled_file(name)?.with_parameters(overrides)?;
    Scenario::from_file(file, &format!("bundled:{name}"))
}

/// Loads a path if it exists, otherwise a bundled scenario of that name.
pub fn resolve_scenario(
    spec: &str,
    overrides: &[(String, f64)],
) -> Result<Scenario, ScenarioError> {
    let path = Path::new(spec);
    if path.exists() {
        load_scenario_with(path, overrides)
    } else if bundled_text(spec).is_some() {
        load_bundled(spec, overrides)
    } else {
        Err(ScenarioError::UnknownScenario(spec.into()))
    }
}

/// Parses a parameter value: a number, or `pi` / `-pi`.
pub fn parse_param_value(s: &str) -> Result<f64, ScenarioError> {
    let t = s.trim();
    let v = match t.to_ascii_lowercase().as_str() {
        "pi" => std::f64::consts::PI,
        "-pi" => -std::f64::consts::PI,
        _ => t
            .parse::<f64>()
            .map_err(|_| ScenarioError::Parameter(format!("`{s}` is not a number")))?,
    };
    if !v.is_finite() {
        return Err(ScenarioError::Parameter(format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Parses `NAME=VALUE`.
pub fn parse_param_assignment(s: &str) -> Result<(String, f64), ScenarioError> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| ScenarioError::Parameter(format!("expected NAME=VALUE, got `{s}`")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(ScenarioError::Parameter(format!("empty name in `{s}`")));
    }
    Ok((name.to_string(), parse_param_value(value)?))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Param { param } => write!(f, "${param}"),
        }
    }
}
