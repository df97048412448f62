//! Outflow function families, capacities and the limit-inferior of the total
//! outflow that bounds every sufficient stability condition.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::FlowGraph;

/// Flow values at or below this are treated as zero by the work-conservation check.
pub const POSITIVITY_TOLERANCE: f64 = 1e-12;

/// Ray lengths used to cross-check the analytic liminf numerically.
pub const PROBE_RADII: [f64; 2] = [1e3, 1e6];

type CustomFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied outflow function of the full state vector. It can be
/// simulated but is never certified.
#[derive(Clone)]
pub struct CustomFlow {
    pub name: String,
    pub capacity: Option<f64>,
    func: Arc<CustomFn>,
}

impl CustomFlow {
    pub fn new(
        name: impl Into<String>,
        capacity: Option<f64>,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            capacity,
            func: Arc::new(func),
        }
    }
}

impl fmt::Debug for CustomFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFlow")
            .field("name", &self.name)
            .field("capacity", &self.capacity)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum FlowFamily {
    /// `c (1 - exp(-x_i))`.
    SaturatingExp { capacity: f64 },
    /// `r x_i`.
    Linear { rate: f64 },
    /// `x_i / (sum_{j in E_v} x_j + kappa)` where `v` is the head of link `i`.
    NodeProportional { kappa: f64 },
    /// `(sum_{j in phase(i)} x_j) / (sum_{j in E_v} x_j + kappa)`. Positive on
    /// empty links whose phase holds mass, so only usable with inclusion dynamics.
    PhaseProportional { phase: u32, kappa: f64 },
    Custom(CustomFlow),
}

impl FlowFamily {
    pub fn label(&self) -> &str {
        match self {
            FlowFamily::SaturatingExp { .. } => "saturating_exp",
            FlowFamily::Linear { .. } => "linear",
            FlowFamily::NodeProportional { .. } => "node_proportional",
            FlowFamily::PhaseProportional { .. } => "phase_proportional",
            FlowFamily::Custom(c) => &c.name,
        }
    }

    fn kappa(&self) -> Option<f64> {
        match self {
            FlowFamily::NodeProportional { kappa } | FlowFamily::PhaseProportional { kappa, .. } => {
                Some(*kappa)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Capacity {
    Finite(f64),
    Unbounded,
}

impl Capacity {
    pub fn value(self) -> Option<f64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

/// Per-link outflow function assignment over a graph.
#[derive(Clone, Debug)]
pub struct FlowField {
    families: Vec<FlowFamily>,
    /// Links entering the head of each link (including itself).
    node_members: Vec<Arc<[usize]>>,
    /// Links sharing the phase of each phase-proportional link (including itself).
    phase_members: Vec<Arc<[usize]>>,
}

impl FlowField {
    pub fn new(graph: &FlowGraph, families: Vec<FlowFamily>) -> Result<Self> {
        let n = graph.link_count();
        if families.len() != n {
            return Err(Error::DimensionMismatch {
                what: "flow families vs link count",
                expected: n,
                actual: families.len(),
            });
        }
        for (i, family) in families.iter().enumerate() {
            let ok = match family {
                FlowFamily::SaturatingExp { capacity } => capacity.is_finite() && *capacity > 0.0,
                FlowFamily::Linear { rate } => rate.is_finite() && *rate > 0.0,
                FlowFamily::NodeProportional { kappa }
                | FlowFamily::PhaseProportional { kappa, .. } => kappa.is_finite() && *kappa > 0.0,
                FlowFamily::Custom(c) => c.capacity.map_or(true, |c| c.is_finite() && c > 0.0),
            };
            if !ok {
                return Err(Error::InvalidFlowField(format!(
                    "link {i}: {} parameter must be finite and positive",
                    family.label()
                )));
            }
        }

        let mut node_members: Vec<Arc<[usize]>> = Vec::with_capacity(n);
        let mut phase_members: Vec<Arc<[usize]>> = Vec::with_capacity(n);
        for (i, family) in families.iter().enumerate() {
            let head = graph.links()[i].head;
            let members: Vec<usize> = graph.incoming(head).iter().map(|l| l.0).collect();
            if let Some(kappa) = family.kappa() {
                // Node-local families are assigned per node, not per link.
                for &j in &members {
                    let same = match (family, &families[j]) {
                        (FlowFamily::NodeProportional { .. }, FlowFamily::NodeProportional { .. })
                        | (
                            FlowFamily::PhaseProportional { .. },
                            FlowFamily::PhaseProportional { .. },
                        ) => families[j].kappa() == Some(kappa),
                        _ => false,
                    };
                    if !same {
                        return Err(Error::InvalidFlowField(format!(
                            "links {i} and {j} enter node {} but do not share the same {} family and kappa",
                            head.0,
                            family.label()
                        )));
                    }
                }
            }
            let phase: Vec<usize> = match family {
                FlowFamily::PhaseProportional { phase, .. } => members
                    .iter()
                    .copied()
                    .filter(|&j| {
                        matches!(families[j], FlowFamily::PhaseProportional { phase: p, .. } if p == *phase)
                    })
                    .collect(),
                _ => vec![i],
            };
            node_members.push(members.into());
            phase_members.push(phase.into());
        }
        Ok(Self {
            families,
            node_members,
            phase_members,
        })
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn families(&self) -> &[FlowFamily] {
        &self.families
    }

    /// True when some family can be positive on an empty link.
    pub fn is_inclusion_only(&self) -> bool {
        self.families
            .iter()
            .any(|f| matches!(f, FlowFamily::PhaseProportional { .. }))
    }

    pub fn has_custom(&self) -> bool {
        self.families
            .iter()
            .any(|f| matches!(f, FlowFamily::Custom(_)))
    }

    /// Evaluates `f(x)` into `out` without validating `x`. Negative entries of
    /// `x` are read as zero.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, family) in self.families.iter().enumerate() {
            let xi = x[i].max(0.0);
            out[i] = match family {
                FlowFamily::SaturatingExp { capacity } => capacity * -(-xi).exp_m1(),
                FlowFamily::Linear { rate } => rate * xi,
                FlowFamily::NodeProportional { kappa } => {
                    let total: f64 = self.node_members[i].iter().map(|&j| x[j].max(0.0)).sum();
                    xi / (total + kappa)
                }
                FlowFamily::PhaseProportional { kappa, .. } => {
                    let total: f64 = self.node_members[i].iter().map(|&j| x[j].max(0.0)).sum();
                    let phase: f64 = self.phase_members[i].iter().map(|&j| x[j].max(0.0)).sum();
                    phase / (total + kappa)
                }
                FlowFamily::Custom(c) => {
                    let v = (c.func)(x);
                    if v.is_finite() {
                        v.max(0.0)
                    } else {
                        v
                    }
                }
            };
        }
    }

    /// Evaluates `f(x)` for a nonnegative state.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_state(x, self.len())?;
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "flow of link {i} ({}) is not finite",
                self.families[i].label()
            )));
        }
        Ok(out)
    }

    /// Supremum of each outflow function over the nonnegative orthant.
    pub fn capacities(&self) -> Vec<Capacity> {
        self.families
            .iter()
            .map(|f| match f {
                FlowFamily::SaturatingExp { capacity } => Capacity::Finite(*capacity),
                FlowFamily::Linear { .. } => Capacity::Unbounded,
                FlowFamily::NodeProportional { .. } | FlowFamily::PhaseProportional { .. } => {
                    Capacity::Finite(1.0)
                }
                FlowFamily::Custom(c) => c.capacity.map_or(Capacity::Unbounded, Capacity::Finite),
            })
            .collect()
    }

    /// Finite capacity vector, if every link is bounded.
    pub fn finite_capacities(&self) -> Option<Vec<f64>> {
        self.capacities().into_iter().map(Capacity::value).collect()
    }

    pub fn is_bounded(&self) -> bool {
        self.finite_capacities().is_some()
    }

    /// `lim_{s -> inf} f_i(s e_k)`, the limit of link `i`'s outflow along the
    /// ray that sends link `k` to infinity and keeps everything else at zero.
    fn ray_limit(&self, i: usize, k: usize) -> Option<f64> {
        match &self.families[i] {
            FlowFamily::SaturatingExp { capacity } => Some(if i == k { *capacity } else { 0.0 }),
            FlowFamily::Linear { .. } => Some(if i == k { f64::INFINITY } else { 0.0 }),
            FlowFamily::NodeProportional { .. } => Some(if i == k { 1.0 } else { 0.0 }),
            FlowFamily::PhaseProportional { .. } => {
                Some(if self.phase_members[i].contains(&k) { 1.0 } else { 0.0 })
            }
            FlowFamily::Custom(_) => None,
        }
    }
}

pub fn eval_flow(field: &FlowField, x: &[f64]) -> Result<Vec<f64>> {
    field.eval(x)
}

pub fn capacities(field: &FlowField) -> Vec<Capacity> {
    field.capacities()
}

pub(crate) fn check_state(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "state vector",
            expected: n,
            actual: x.len(),
        });
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, &v)| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "state entry {i} is {v}, must be finite and >= 0"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `f_i(x) > 0` although `x_i = 0`.
    PositiveWithoutMass,
    /// `f_i(x) = 0` although `x_i > 0`.
    ZeroWithMass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkConservationViolation {
    pub sample: usize,
    pub link: usize,
    pub state: f64,
    pub flow: f64,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Assumption2Report {
    pub samples_checked: usize,
    pub violations: Vec<WorkConservationViolation>,
    pub inclusion_only: bool,
}

impl Assumption2Report {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `f_i(x) > 0 <=> x_i > 0` on each sample state.
pub fn check_assumption2(field: &FlowField, samples: &[Vec<f64>]) -> Result<Assumption2Report> {
    let mut report = Assumption2Report {
        samples_checked: samples.len(),
        inclusion_only: field.is_inclusion_only(),
        ..Default::default()
    };
    for (s, x) in samples.iter().enumerate() {
        let f = field.eval(x)?;
        for (link, (&xi, &fi)) in x.iter().zip(&f).enumerate() {
            let kind = if xi == 0.0 && fi > POSITIVITY_TOLERANCE {
                ViolationKind::PositiveWithoutMass
            } else if xi > 0.0 && fi <= 0.0 {
                ViolationKind::ZeroWithMass
            } else {
                continue;
            };
            report.violations.push(WorkConservationViolation {
                sample: s,
                link,
                state: xi,
                flow: fi,
                kind,
            });
        }
    }
    Ok(report)
}

/// Deterministic probe states: the origin, every unit vector, the all-ones
/// vector and every "all but one" vector.
pub fn standard_samples(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n], vec![1.0; n]];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        out.push(e);
        let mut others = vec![1.0; n];
        others[k] = 0.0;
        out.push(others);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiminfMode {
    /// `liminf sum_i f_i(x)`.
    Smooth,
    /// `liminf sum_i 1(x_i > 0) f_i(x)`.
    InclusionIndicator,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Liminf {
    Finite { value: f64 },
    Infinite,
    Unknown { reason: String },
}

impl Liminf {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Liminf::Finite { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Liminf::Unknown { .. })
    }

    /// Strict comparison `lhs < self`.
    pub fn exceeds(&self, lhs: f64) -> bool {
        match self {
            Liminf::Finite { value } => lhs < *value,
            Liminf::Infinite => lhs.is_finite(),
            Liminf::Unknown { .. } => false,
        }
    }
}

impl fmt::Display for Liminf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Liminf::Finite { value } => write!(f, "{value}"),
            Liminf::Infinite => write!(f, "+inf"),
            Liminf::Unknown { reason } => write!(f, "unknown ({reason})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiminfProvenance {
    pub method: &'static str,
    pub mode: LiminfMode,
    pub normalized: bool,
    /// Ray (link index) attaining the minimum.
    pub binding_ray: Option<usize>,
    /// Minimum over rays of the probed total at each of [`PROBE_RADII`].
    pub probes: Vec<f64>,
    pub probe_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiminfResult {
    pub value: Liminf,
    pub provenance: LiminfProvenance,
}

/// `liminf_{|x| -> inf}` of the total outflow, taken as the minimum over
/// single-coordinate rays. Along ray `k` only link `k` holds mass; for the
/// built-in families every other coordinate at zero contributes its ray limit
/// (zero for work-conserving families), and spreading mass over several
/// coordinates only adds nonnegative terms.
pub fn liminf_total_flow(field: &FlowField, mode: LiminfMode) -> LiminfResult {
    liminf_weighted(field, mode, None)
}

/// Same as [`liminf_total_flow`] for the capacity-normalized flows `f_i / c_i`.
pub fn liminf_normalized_flow(field: &FlowField, mode: LiminfMode) -> LiminfResult {
    match field.finite_capacities() {
        Some(c) => liminf_weighted(field, mode, Some(&c)),
        None => LiminfResult {
            value: Liminf::Unknown {
                reason: "normalized flows need every capacity to be finite".into(),
            },
            provenance: empty_provenance(mode, true),
        },
    }
}

fn empty_provenance(mode: LiminfMode, normalized: bool) -> LiminfProvenance {
    LiminfProvenance {
        method: "analytic single-ray",
        mode,
        normalized,
        binding_ray: None,
        probes: Vec::new(),
        probe_consistent: false,
    }
}

fn liminf_weighted(field: &FlowField, mode: LiminfMode, caps: Option<&[f64]>) -> LiminfResult {
    let normalized = caps.is_some();
    if let Some(FlowFamily::Custom(c)) = field
        .families
        .iter()
        .find(|f| matches!(f, FlowFamily::Custom(_)))
    {
        return LiminfResult {
            value: Liminf::Unknown {
                reason: format!("custom flow family '{}' has no analytic liminf", c.name),
            },
            provenance: empty_provenance(mode, normalized),
        };
    }
    let n = field.len();
    let weight = |i: usize| caps.map_or(1.0, |c| 1.0 / c[i]);
    let counts = |i: usize, k: usize| match mode {
        LiminfMode::Smooth => true,
        LiminfMode::InclusionIndicator => i == k,
    };

    let mut best = f64::INFINITY;
    let mut binding = None;
    for k in 0..n {
        let total: f64 = (0..n)
            .filter(|&i| counts(i, k))
            .map(|i| weight(i) * field.ray_limit(i, k).expect("custom handled above"))
            .sum();
        if total < best {
            best = total;
            binding = Some(k);
        }
    }

    let mut x = vec![0.0; n];
    let mut f = vec![0.0; n];
    let probes: Vec<f64> = PROBE_RADII
        .iter()
        .map(|&radius| {
            (0..n)
                .map(|k| {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    x[k] = radius;
                    field.eval_into(&x, &mut f);
                    (0..n)
                        .filter(|&i| counts(i, k))
                        .map(|i| weight(i) * f[i])
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let (near, far) = (probes[0], probes[1]);
    let value = if best.is_infinite() {
        Liminf::Infinite
    } else {
        Liminf::Finite { value: best }
    };
    let probe_consistent = if best.is_infinite() {
        far > 10.0 * near.max(0.0) && far.is_finite()
    } else {
        (far - best).abs() <= 1e-4 * best.max(1.0) && far >= near - 1e-12
    };
    LiminfResult {
        value,
        provenance: LiminfProvenance {
            method: "analytic single-ray",
            mode,
            normalized,
            binding_ray: binding,
            probes,
            probe_consistent,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_node(n: usize) -> FlowGraph {
        let links: Vec<(usize, usize)> = (0..n).map(|i| (i + 1, 0)).collect();
        FlowGraph::new(n + 1, &links).unwrap()
    }

    fn junction(kappa: f64) -> FlowField {
        let g = single_node(4);
        let fam = |phase| FlowFamily::PhaseProportional { phase, kappa };
        FlowField::new(&g, vec![fam(0), fam(1), fam(0), fam(1)]).unwrap()
    }

    #[test]
    fn saturating_exp_is_zero_at_zero() {
        let g = FlowGraph::new(2, &[(0, 1)]).unwrap();
        let field = FlowField::new(&g, vec![FlowFamily::SaturatingExp { capacity: 1.0 }]).unwrap();
        assert_eq!(field.eval(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn node_proportional_splits_evenly() {
        let g = single_node(4);
        let field =
            FlowField::new(&g, vec![FlowFamily::NodeProportional { kappa: 1.0 }; 4]).unwrap();
        for fi in field.eval(&[1.0; 4]).unwrap() {
            assert!((fi - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_proportional_serves_empty_phase_partner() {
        let kappa = 0.1;
        let f = junction(kappa).eval(&[0.0, 0.0, 2.0, 0.0]).unwrap();
        let expected = 2.0 / (2.0 + kappa);
        assert!((f[0] - expected).abs() < 1e-15);
        assert!((f[2] - expected).abs() < 1e-15);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[3], 0.0);
    }

    #[test]
    fn mixed_families_at_one_node_are_rejected() {
        let g = single_node(2);
        let err = FlowField::new(
            &g,
            vec![
                FlowFamily::NodeProportional { kappa: 1.0 },
                FlowFamily::SaturatingExp { capacity: 1.0 },
            ],
        );
        assert!(matches!(err, Err(Error::InvalidFlowField(_))));
        let err = FlowField::new(
            &g,
            vec![
                FlowFamily::NodeProportional { kappa: 1.0 },
                FlowFamily::NodeProportional { kappa: 2.0 },
            ],
        );
        assert!(err.is_err());
    }

    #[test]
    fn negative_state_is_domain_error() {
        let g = single_node(1);
        let field = FlowField::new(&g, vec![FlowFamily::Linear { rate: 1.0 }]).unwrap();
        assert!(matches!(field.eval(&[-1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn assumption2_reports() {
        let g = single_node(3);
        let sat = FlowField::new(&g, vec![FlowFamily::SaturatingExp { capacity: 2.0 }; 3]).unwrap();
        assert!(check_assumption2(&sat, &standard_samples(3)).unwrap().passes());

        let lin = FlowField::new(&g, vec![FlowFamily::Linear { rate: 3.0 }; 3]).unwrap();
        assert!(check_assumption2(&lin, &[vec![0.0; 3]]).unwrap().passes());

        let report = check_assumption2(&junction(0.1), &[vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        assert!(report.inclusion_only);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].link, 0);
        assert_eq!(report.violations[0].kind, ViolationKind::PositiveWithoutMass);
    }

    #[test]
    fn liminf_example1_is_min_capacity() {
        let g = FlowGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let field = FlowField::new(
            &g,
            vec![
                FlowFamily::SaturatingExp { capacity: 1.0 },
                FlowFamily::SaturatingExp { capacity: 100.0 },
            ],
        )
        .unwrap();
        let r = liminf_total_flow(&field, LiminfMode::Smooth);
        assert_eq!(r.value, Liminf::Finite { value: 1.0 });
        assert_eq!(r.provenance.binding_ray, Some(0));
        assert!(r.provenance.probe_consistent);
        let normalized = liminf_normalized_flow(&field, LiminfMode::Smooth);
        assert_eq!(normalized.value, Liminf::Finite { value: 1.0 });
    }

    #[test]
    fn liminf_junction_smooth_and_indicator() {
        let field = junction(0.1);
        let smooth = liminf_total_flow(&field, LiminfMode::Smooth);
        assert_eq!(smooth.value, Liminf::Finite { value: 2.0 });
        assert!(smooth.provenance.probe_consistent);
        let indicator = liminf_total_flow(&field, LiminfMode::InclusionIndicator);
        assert_eq!(indicator.value, Liminf::Finite { value: 1.0 });
    }

    #[test]
    fn liminf_linear_is_infinite() {
        let g = single_node(3);
        let field = FlowField::new(&g, vec![FlowFamily::Linear { rate: 0.5 }; 3]).unwrap();
        let r = liminf_total_flow(&field, LiminfMode::Smooth);
        assert_eq!(r.value, Liminf::Infinite);
        assert!(r.provenance.probe_consistent);
        assert!(!liminf_normalized_flow(&field, LiminfMode::Smooth).value.is_known());
    }

    #[test]
    fn liminf_custom_is_unknown() {
        let g = single_node(1);
        let field = FlowField::new(
            &g,
            vec![FlowFamily::Custom(CustomFlow::new("tanh", Some(1.0), |x| x[0].tanh()))],
        )
        .unwrap();
        assert!(!liminf_total_flow(&field, LiminfMode::Smooth).value.is_known());
        assert_eq!(field.eval(&[0.5]).unwrap(), vec![0.5f64.tanh()]);
    }

    #[test]
    fn capacity_values() {
        let g = single_node(3);
        let field = FlowField::new(
            &g,
            vec![FlowFamily::NodeProportional { kappa: 1.0 }; 3],
        )
        .unwrap();
        assert_eq!(field.capacities(), vec![Capacity::Finite(1.0); 3]);
        let g2 = FlowGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mixed = FlowField::new(
            &g2,
            vec![
                FlowFamily::SaturatingExp { capacity: 6.0 },
                FlowFamily::Linear { rate: 1.0 },
            ],
        )
        .unwrap();
        assert_eq!(
            mixed.capacities(),
            vec![Capacity::Finite(6.0), Capacity::Unbounded]
        );
        assert!(!mixed.is_bounded());
    }
}
